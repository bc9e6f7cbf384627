//! k-SAT with the biased measure that favors each variable's rarer sign.
//!
//! Clauses are built in lopsided mode: two clauses depend on each other only
//! when some variable occurs in them with opposite signs. Under plain
//! shared-variable dependency the weights below do not satisfy the general
//! condition at the degrees of interest.

use crate::apps::AppError;
use crate::csp::{Constraint, DependencyMode, Instance, ProductMeasure};
use crate::lll::Psi;

/// `(variable, positive)`.
pub type Literal = (usize, bool);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    n: usize,
    clauses: Vec<Vec<Literal>>,
}

impl CnfFormula {
    pub fn new(n: usize, clauses: Vec<Vec<Literal>>) -> Result<Self, AppError> {
        for (c, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(AppError::EmptyClause(c));
            }
            let mut vars: Vec<usize> = clause.iter().map(|l| l.0).collect();
            if let Some(&var) = vars.iter().find(|&&v| v >= n) {
                return Err(AppError::VarOutOfRange { var, n });
            }
            vars.sort_unstable();
            if vars.windows(2).any(|w| w[0] == w[1]) {
                return Err(AppError::RepeatedVariable(c));
            }
        }
        Ok(CnfFormula { n, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<Literal>] {
        &self.clauses
    }

    /// Maximum clause width.
    pub fn k(&self) -> usize {
        self.clauses.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `d_i`, occurrences per variable.
    pub fn occurrences(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for l in self.clauses.iter().flatten() {
            d[l.0] += 1;
        }
        d
    }

    /// Negative occurrences per variable, `(1 - θ_i) d_i`.
    pub fn negative_occurrences(&self) -> Vec<usize> {
        let mut neg = vec![0; self.n];
        for l in self.clauses.iter().flatten() {
            if !l.1 {
                neg[l.0] += 1;
            }
        }
        neg
    }

    /// `θ_i`, the positive fraction of each variable's occurrences (`None` if unused).
    pub fn positive_fractions(&self) -> Vec<Option<f64>> {
        let d = self.occurrences();
        let neg = self.negative_occurrences();
        d.iter().zip(&neg).map(|(&d, &n)| (d > 0).then(|| (d - n) as f64 / d as f64)).collect()
    }

    /// `d = max_i d_i`.
    pub fn d(&self) -> usize {
        self.occurrences().into_iter().max().unwrap_or(0)
    }

    /// One clause constraint per clause, lopsided dependency.
    pub fn to_instance(&self) -> Result<Instance, AppError> {
        let constraints = self.clauses.iter().map(|c| Constraint::clause(c)).collect();
        Ok(Instance::new(vec![2; self.n], constraints)?.with_dependency_mode(DependencyMode::Lopsided))
    }

    /// Whether `values` (0 = false, 1 = true) satisfies every clause.
    pub fn satisfied_by(&self, values: &[u32]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&(x, pos)| (values[x] == 1) == pos))
    }
}

/// Sets `x_i` true with probability `1/2 + (2(1-θ_i)d_i - d)/(2dk)`.
pub fn gst_measure(cnf: &CnfFormula) -> Result<ProductMeasure, AppError> {
    let (k, d) = (cnf.k(), cnf.d());
    if k == 0 || d == 0 {
        return Err(AppError::Degenerate(format!("k = {k}, d = {d}")));
    }
    let neg = cnf.negative_occurrences();
    let p: Vec<f64> = neg.iter().map(|&n| 0.5 + (2.0 * n as f64 - d as f64) / (2.0 * d as f64 * k as f64)).collect();
    if let Some((var, &p)) = p.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(AppError::BadProbability { var, p });
    }
    Ok(ProductMeasure::bernoulli(&p)?)
}

/// `ψ = e / (2^k - e)` for every clause.
pub fn sat_psi(k: usize) -> Result<f64, AppError> {
    let two_k = 2f64.powi(k as i32);
    if k <= 1 || two_k <= std::f64::consts::E {
        return Err(AppError::KTooSmall(k));
    }
    Ok(std::f64::consts::E / (two_k - std::f64::consts::E))
}

pub fn sat_psi_vector(cnf: &CnfFormula) -> Result<Psi, AppError> {
    Ok(Psi::constant(cnf.num_clauses(), sat_psi(cnf.k())?)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SatTheoremCheck {
    pub holds: bool,
    /// `[d(k+1)]^{1+η}`.
    pub lhs: f64,
    /// `2^{k+1}/e`.
    pub rhs: f64,
    /// `1 - (kd)^{-η}`, the slack promised by the polynomial form.
    pub implied_epsilon: f64,
}

/// `[d(k+1)]^{1+η} ≤ 2^{k+1}/e`.
pub fn check_sat_theorem(k: usize, d: usize, eta: f64) -> SatTheoremCheck {
    let lhs = ((d * (k + 1)) as f64).powf(1.0 + eta);
    let rhs = 2f64.powi(k as i32 + 1) / std::f64::consts::E;
    let implied_epsilon = 1.0 - ((k * d) as f64).powf(-eta);
    SatTheoremCheck { holds: lhs <= rhs, lhs, rhs, implied_epsilon }
}

/// `d(k+1) ≤ (1-ε) 2^{k+1}/e`.
pub fn check_sat_slack(k: usize, d: usize, epsilon: f64) -> bool {
    (d * (k + 1)) as f64 <= (1.0 - epsilon) * 2f64.powi(k as i32 + 1) / std::f64::consts::E
}

/// The largest `ε` with `d(k+1)e ≤ (1-ε)2^{k+1}`.
pub fn sat_slack_bound(k: usize, d: usize) -> f64 {
    1.0 - (d * (k + 1)) as f64 * std::f64::consts::E / 2f64.powi(k as i32 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::gen::gen_ksat;
    use crate::lll::check_general_lll;

    #[test]
    fn formula_validation() {
        assert!(CnfFormula::new(2, vec![vec![(0, true), (1, false)]]).is_ok());
        assert_eq!(CnfFormula::new(2, vec![vec![(0, true), (0, false)]]), Err(AppError::RepeatedVariable(0)));
        assert_eq!(CnfFormula::new(2, vec![vec![(2, true)]]), Err(AppError::VarOutOfRange { var: 2, n: 2 }));
        assert_eq!(CnfFormula::new(2, vec![vec![]]), Err(AppError::EmptyClause(0)));
    }

    #[test]
    fn gst_probabilities() {
        // x0: one positive, one negative (θ = 1/2, d_0 = d = 2); x1: two positive; x2 unused
        let cnf = CnfFormula::new(3, vec![vec![(0, true), (1, true)], vec![(0, false), (1, true)]]).unwrap();
        let mu = gst_measure(&cnf).unwrap();
        let k = 2.0;
        assert_eq!(mu.probability(0, 1), 0.5);
        assert!((mu.probability(1, 1) - (0.5 - 1.0 / (2.0 * k))).abs() < 1e-15);
        assert!((mu.probability(2, 1) - (0.5 - 1.0 / (2.0 * k))).abs() < 1e-15);
    }

    #[test]
    fn psi_values() {
        assert!((sat_psi(8).unwrap() - 0.010732).abs() < 1e-6);
        assert!((sat_psi(2).unwrap() - 2.1208).abs() < 1e-4);
        assert!(sat_psi(1).is_err());
        let ps: Vec<f64> = (2..12).map(|k| sat_psi(k).unwrap()).collect();
        assert!(ps.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn theorem_checks() {
        let c = check_sat_theorem(8, 20, 0.0);
        assert!(c.holds);
        assert!((c.rhs - 188.35).abs() < 0.01);
        assert_eq!(c.lhs, 180.0);
        assert_eq!(c.implied_epsilon, 0.0);
        assert!(!check_sat_theorem(8, 21, 0.0).holds);
        assert!(!check_sat_theorem(8, 20, 0.1).holds);
        assert_eq!(check_sat_theorem(8, 20, 0.0).holds, check_sat_slack(8, 20, 0.0));
        assert!((sat_slack_bound(8, 20) - (1.0 - 180.0 * std::f64::consts::E / 512.0)).abs() < 1e-15);
    }

    #[test]
    fn regular_formulas_meet_the_lopsided_condition() {
        for seed in 0..3 {
            let cnf = gen_ksat(400, 8, 20, seed).unwrap();
            let c = check_sat_theorem(cnf.k(), cnf.d(), 0.0);
            assert!(c.holds);
            let inst = cnf.to_instance().unwrap();
            let report = check_general_lll(&inst, &gst_measure(&cnf).unwrap(), &sat_psi_vector(&cnf).unwrap()).unwrap();
            assert!(report.epsilon >= sat_slack_bound(8, 20), "{} < {}", report.epsilon, sat_slack_bound(8, 20));
            // the worst case for exact k-CNF is (1 + 1/k)^k / e
            assert!(report.epsilon >= 1.0 - 1.125f64.powi(8) / std::f64::consts::E - 1e-12);
        }
    }
}
