//! Exhaustive search for a flawless assignment.

use crate::csp::{Assignment, Instance, Value};
use crate::lll::LllError;

/// Largest state space [`brute_force_solve`] will enumerate.
pub const MAX_STATES: u128 = 1 << 25;

/// The first flawless assignment in lexicographic order (variable 0 most
/// significant), or `None` if every state violates some constraint.
pub fn brute_force_solve(inst: &Instance) -> Result<Option<Assignment>, LllError> {
    let size = inst.domains().iter().fold(1u128, |acc, &d| acc.saturating_mul(d as u128));
    if size > MAX_STATES {
        let size = usize::try_from(size).unwrap_or(usize::MAX);
        return Err(LllError::TooLarge { what: "state space", size, limit: MAX_STATES as usize });
    }
    if size == 0 {
        return Ok(None);
    }
    let n = inst.num_vars();
    let mut values: Vec<Value> = vec![0; n];
    let mut scratch = Vec::new();
    loop {
        let flawless = inst.constraints().iter().all(|c| {
            scratch.clear();
            scratch.extend(c.scope().iter().map(|&x| values[x]));
            !c.violated_by(&scratch)
        });
        if flawless {
            return Ok(Some(Assignment::from_values(values)));
        }
        // odometer step, last variable fastest
        let mut x = n;
        loop {
            if x == 0 {
                return Ok(None);
            }
            x -= 1;
            values[x] += 1;
            if (values[x] as usize) < inst.domain_size(x) {
                break;
            }
            values[x] = 0;
        }
    }
}
