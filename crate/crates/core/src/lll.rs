//! Local-lemma condition checkers and the scalar parameters derived from them.
//!
//! All logarithms are natural. Every formula here is either a ratio of
//! logarithms (so the base cancels) or uses `ln` consistently.

use thiserror::Error;

use crate::csp::{CspError, Instance, ProductMeasure};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LllError {
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error("psi has {got} entries, instance has {expected} constraints")]
    PsiLength { expected: usize, got: usize },
    #[error("psi[{0}] = {1} is not a positive finite number")]
    BadPsi(usize, f64),
    #[error("x[{0}] = {1} is outside (0, 1)")]
    XOutOfRange(usize, f64),
    #[error("{what}: size {size} exceeds the exact-enumeration limit {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },
    #[error("epsilon = {0} is outside (0, 1)")]
    EpsilonOutOfRange(f64),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("undefined: {0}")]
    Undefined(String),
}

/// Positive weights `ψ_i`, one per constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct Psi(Vec<f64>);

impl Psi {
    pub fn new(values: Vec<f64>) -> Result<Self, LllError> {
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(LllError::BadPsi(i, v));
        }
        Ok(Psi(values))
    }

    pub fn constant(m: usize, value: f64) -> Result<Self, LllError> {
        Self::new(vec![value; m])
    }

    /// `ψ_i = x_i / (1 - x_i)`.
    pub fn from_x(x: &[f64]) -> Result<Self, LllError> {
        if let Some((i, &v)) = x.iter().enumerate().find(|(_, v)| !(**v > 0.0 && **v < 1.0)) {
            return Err(LllError::XOutOfRange(i, v));
        }
        Self::new(x.iter().map(|v| v / (1.0 - v)).collect())
    }

    /// `x_i = ψ_i / (1 + ψ_i)`.
    pub fn to_x(&self) -> Vec<f64> {
        self.0.iter().map(|p| p / (1.0 + p)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    fn check_len(&self, inst: &Instance) -> Result<(), LllError> {
        if self.0.len() != inst.num_constraints() {
            return Err(LllError::PsiLength { expected: inst.num_constraints(), got: self.0.len() });
        }
        Ok(())
    }
}

/// Per-constraint left-hand sides of the general condition and the slack
/// `ε = 1 - max_i L_i` (negative when the condition fails).
#[derive(Clone, Debug, PartialEq)]
pub struct LllReport {
    pub lhs: Vec<f64>,
    pub epsilon: f64,
}

impl LllReport {
    fn from_lhs(lhs: Vec<f64>) -> Self {
        let max = lhs.iter().copied().fold(0.0, f64::max);
        LllReport { lhs, epsilon: 1.0 - max }
    }

    pub fn holds(&self) -> bool {
        self.epsilon >= 0.0
    }

    pub fn passes(&self, i: usize) -> bool {
        self.lhs[i] <= 1.0
    }
}

/// `L_i = (μ(A_i)/ψ_i) Σ_{S ⊆ D(i)∪{i}} Π_{j∈S} ψ_j`, evaluated through
/// `Σ_{S⊆T} Π_{j∈S} ψ_j = Π_{j∈T} (1+ψ_j)`.
pub fn check_general_lll(inst: &Instance, measure: &ProductMeasure, psi: &Psi) -> Result<LllReport, LllError> {
    let probs = inst.event_probabilities(measure)?;
    check_general_lll_with_probabilities(inst, &probs, psi)
}

/// As [`check_general_lll`] with the event probabilities supplied directly.
pub fn check_general_lll_with_probabilities(inst: &Instance, probs: &[f64], psi: &Psi) -> Result<LllReport, LllError> {
    psi.check_len(inst)?;
    let mut lhs = Vec::with_capacity(inst.num_constraints());
    for i in 0..inst.num_constraints() {
        let mu = probs[i];
        if mu == 0.0 {
            lhs.push(0.0);
            continue;
        }
        let neighbors = inst.dependency_neighbors(i)?;
        let closed = std::iter::once(i).chain(neighbors.iter().copied());
        let direct = mu / psi.get(i) * closed.clone().map(|j| 1.0 + psi.get(j)).product::<f64>();
        if direct.is_finite() {
            lhs.push(direct);
        } else {
            let log = mu.ln() - psi.get(i).ln() + closed.map(|j| psi.get(j).ln_1p()).sum::<f64>();
            lhs.push(log.exp());
        }
    }
    Ok(LllReport::from_lhs(lhs))
}

/// The classical form `μ(A_i) ≤ x_i Π_{j∈D(i)} (1 - x_j)`, per constraint.
pub fn check_general_lll_x_form(inst: &Instance, measure: &ProductMeasure, x: &[f64]) -> Result<Vec<bool>, LllError> {
    if x.len() != inst.num_constraints() {
        return Err(LllError::PsiLength { expected: inst.num_constraints(), got: x.len() });
    }
    if let Some((i, &v)) = x.iter().enumerate().find(|(_, v)| !(**v > 0.0 && **v < 1.0)) {
        return Err(LllError::XOutOfRange(i, v));
    }
    let probs = inst.event_probabilities(measure)?;
    (0..inst.num_constraints())
        .map(|i| {
            let rhs = x[i] * inst.dependency_neighbors(i)?.iter().map(|&j| 1.0 - x[j]).product::<f64>();
            Ok(probs[i] <= rhs)
        })
        .collect()
}

/// Neighborhoods larger than this are not enumerated by the cluster-expansion check.
pub const MAX_CLUSTER_NEIGHBORS: usize = 25;
/// Largest instance for which Shearer's polynomials are computed.
pub const MAX_SHEARER_CONSTRAINTS: usize = 20;

/// Cluster-expansion left-hand sides. `None` marks constraints whose
/// neighborhood exceeded [`MAX_CLUSTER_NEIGHBORS`].
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterReport {
    pub lhs: Vec<Option<f64>>,
}

impl ClusterReport {
    /// `1 - max_i L_i`, or `None` if some constraint was not computed.
    pub fn epsilon(&self) -> Option<f64> {
        let mut max: f64 = 0.0;
        for l in &self.lhs {
            max = max.max((*l)?);
        }
        Some(1.0 - max)
    }

    pub fn holds(&self) -> Option<bool> {
        self.epsilon().map(|e| e >= 0.0)
    }
}

/// `(μ(A_i)/ψ_i) Σ_{S ∈ Ind(D(i)∪{i})} Π_{j∈S} ψ_j` by exact enumeration.
pub fn check_cluster_expansion(inst: &Instance, measure: &ProductMeasure, psi: &Psi) -> Result<ClusterReport, LllError> {
    psi.check_len(inst)?;
    let probs = inst.event_probabilities(measure)?;
    let mut lhs = Vec::with_capacity(inst.num_constraints());
    for i in 0..inst.num_constraints() {
        let neighbors = inst.dependency_neighbors(i)?;
        if neighbors.len() > MAX_CLUSTER_NEIGHBORS {
            lhs.push(None);
            continue;
        }
        let local: Vec<usize> = std::iter::once(i).chain(neighbors).collect();
        let weights: Vec<f64> = local.iter().map(|&j| psi.get(j)).collect();
        let adjacency: Vec<u64> = local
            .iter()
            .map(|&a| {
                local
                    .iter()
                    .enumerate()
                    .filter(|&(_, &b)| a != b && inst.adjacent_or_equal(a, b))
                    .fold(0u64, |mask, (pos, _)| mask | (1 << pos))
            })
            .collect();
        let full = (1u64 << local.len()) - 1;
        let poly = independence_polynomial(full, &adjacency, &weights);
        lhs.push(Some(probs[i] / psi.get(i) * poly));
    }
    Ok(ClusterReport { lhs })
}

/// `Σ_{I ⊆ mask independent} Π_{v∈I} w_v`.
fn independence_polynomial(mask: u64, adjacency: &[u64], weights: &[f64]) -> f64 {
    if mask == 0 {
        return 1.0;
    }
    if (0..adjacency.len()).all(|v| mask & (1 << v) == 0 || adjacency[v] & mask == 0) {
        return (0..weights.len()).filter(|v| mask & (1 << v) != 0).map(|v| 1.0 + weights[v]).product();
    }
    let v = mask.trailing_zeros() as usize;
    let without = mask & !(1 << v);
    independence_polynomial(without, adjacency, weights)
        + weights[v] * independence_polynomial(without & !adjacency[v], adjacency, weights)
}

/// Shearer's polynomials `q_S`, indexed by the bitmask of `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShearerReport {
    pub satisfied: bool,
    pub q: Vec<f64>,
}

impl ShearerReport {
    pub fn q_empty(&self) -> f64 {
        self.q[0]
    }
}

pub fn check_shearer(inst: &Instance, measure: &ProductMeasure) -> Result<ShearerReport, LllError> {
    let probs = inst.event_probabilities(measure)?;
    check_shearer_with_probabilities(inst, &probs)
}

/// `q_S = Σ_{I ∈ Ind([m]), S ⊆ I} (-1)^{|I|-|S|} μ_I` for all `S ⊆ [m]`.
pub fn check_shearer_with_probabilities(inst: &Instance, probs: &[f64]) -> Result<ShearerReport, LllError> {
    let m = inst.num_constraints();
    if m > MAX_SHEARER_CONSTRAINTS {
        return Err(LllError::TooLarge { what: "Shearer enumeration", size: m, limit: MAX_SHEARER_CONSTRAINTS });
    }
    let adjacency: Vec<u32> = (0..m)
        .map(|i| inst.dependency_neighbors(i).map(|ns| ns.iter().fold(0u32, |acc, &j| acc | (1 << j))))
        .collect::<Result<_, _>>()?;
    let size = 1usize << m;
    // g(I) = (-1)^{|I|} μ_I on independent sets, 0 elsewhere
    let mut g = vec![0.0; size];
    let mut independent = vec![false; size];
    g[0] = 1.0;
    independent[0] = true;
    for set in 1..size {
        let v = set.trailing_zeros() as usize;
        let rest = set & (set - 1);
        if independent[rest] && adjacency[v] as usize & rest == 0 {
            independent[set] = true;
            g[set] = -g[rest] * probs[v];
        }
    }
    // superset sums
    for v in 0..m {
        for set in 0..size {
            if set & (1 << v) == 0 {
                g[set] += g[set | (1 << v)];
            }
        }
    }
    let q: Vec<f64> = g.iter().enumerate().map(|(set, &val)| if set.count_ones() % 2 == 0 { val } else { -val }).collect();
    let satisfied = q[0] > 0.0 && q.iter().all(|&v| v >= 0.0);
    Ok(ShearerReport { satisfied, q })
}

/// Scalars that govern radii and budgets.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub epsilon: f64,
    /// `ln(1/(1-ε)) / ln(kd)`.
    pub zeta: f64,
    /// `max_x Σ_{c_j ∋ x} ψ_j`.
    pub eta: f64,
    /// `max_i ln(1 + ψ_i)`.
    pub xi: f64,
    /// `max(0, ln(max ψ) / ln n)`.
    pub lambda: f64,
    pub k: usize,
    pub d: usize,
    pub n: usize,
    pub m: usize,
    /// The constant hidden in the per-query running-time bound; see [`Params::DEFAULT_POLYLOG_PER_KD`].
    pub polylog_c: f64,
}

impl Params {
    /// `C = 4·kd` by default: one BFS edge touch plus stack bookkeeping per resample.
    pub const DEFAULT_POLYLOG_PER_KD: f64 = 4.0;

    pub fn kd(&self) -> f64 {
        (self.k * self.d) as f64
    }

    /// `ln(1/(1-ε))`.
    pub fn log_inv_one_minus_eps(&self) -> f64 {
        -(-self.epsilon).ln_1p()
    }

    pub fn with_polylog_c(mut self, c: f64) -> Self {
        self.polylog_c = c;
        self
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), LllError> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(LllError::EpsilonOutOfRange(epsilon))
    }
}

pub fn derive_params(inst: &Instance, psi: &Psi, epsilon: f64) -> Result<Params, LllError> {
    check_epsilon(epsilon)?;
    psi.check_len(inst)?;
    let (k, d, n, m) = (inst.k(), inst.d(), inst.num_vars(), inst.num_constraints());
    let kd = (k * d) as f64;
    if kd < 2.0 {
        return Err(LllError::Undefined(format!("zeta needs kd >= 2, got kd = {kd}")));
    }
    let log_slack = -(-epsilon).ln_1p();
    let eta = (0..n).map(|x| inst.constraints_of(x).map(|j| psi.get(j)).sum::<f64>()).fold(0.0, f64::max);
    let xi = psi.as_slice().iter().map(|p| p.ln_1p()).fold(0.0, f64::max);
    let max_psi = psi.max();
    let lambda = if max_psi <= 1.0 {
        0.0
    } else if n < 2 {
        return Err(LllError::Undefined("lambda needs n >= 2 when max psi > 1".into()));
    } else {
        max_psi.ln() / (n as f64).ln()
    };
    Ok(Params {
        epsilon,
        zeta: log_slack / kd.ln(),
        eta,
        xi,
        lambda,
        k,
        d,
        n,
        m,
        polylog_c: Params::DEFAULT_POLYLOG_PER_KD * kd,
    })
}

/// Smallest radius meeting `r ≥ ln(qη/(δ - q/n²)) / ln(1/(1-ε))`, clamped at 0.
pub fn radius_for(q: usize, delta: f64, epsilon: f64, eta: f64, n: usize) -> Result<u32, LllError> {
    check_epsilon(epsilon)?;
    let budget = residual_error(q, delta, n)?;
    let ratio = q as f64 * eta / budget;
    if ratio <= 1.0 {
        return Ok(0);
    }
    let r = (ratio.ln() / -(-epsilon).ln_1p()).ceil();
    if r > u32::MAX as f64 {
        return Err(LllError::Infeasible(format!("radius {r} does not fit")));
    }
    Ok(r as u32)
}

/// `δ - q/n²`, which must be positive.
fn residual_error(q: usize, delta: f64, n: usize) -> Result<f64, LllError> {
    let n = n as f64;
    let budget = delta - q as f64 / (n * n);
    if !(budget > 0.0) {
        return Err(LllError::Infeasible(format!("delta = {delta} must exceed q/n^2 = {}", q as f64 / (n * n))));
    }
    Ok(budget)
}

/// The admissible radii for a per-query budget `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleInterval {
    /// Real lower endpoint (error requirement).
    pub lower: f64,
    /// Real upper endpoint (time budget), `None` when `t` cannot pay for `s`.
    pub upper: Option<f64>,
    /// `s = 2 ln n / ln(1/(1-ε))`.
    pub s: f64,
    /// Integer radii in the interval, if any.
    pub radii: Option<(u32, u32)>,
    /// `βζ > α + γ + λ` with `q = n^α`, `t = n^β`, `δ = n^{-γ}`.
    pub asymptotic_condition: bool,
}

impl FeasibleInterval {
    pub fn is_empty(&self) -> bool {
        self.radii.is_none()
    }
}

pub fn feasible_interval(q: usize, t: f64, delta: f64, params: &Params) -> Result<FeasibleInterval, LllError> {
    check_epsilon(params.epsilon)?;
    let budget = residual_error(q, delta, params.n)?;
    let log_slack = params.log_inv_one_minus_eps();
    let lower = (q as f64 * params.eta / budget).ln() / log_slack;
    let ln_n = (params.n as f64).ln();
    let s = 2.0 * ln_n / log_slack;
    let arg = (t - s) / (params.xi * params.polylog_c) * log_slack;
    let upper = if t > s && arg > 0.0 { Some(arg.ln() / params.kd().ln()) } else { None };
    let radii = upper.and_then(|hi| {
        let lo = lower.max(0.0).ceil();
        let hi = hi.floor();
        (hi >= 0.0 && lo <= hi).then_some((lo as u32, hi as u32))
    });
    let alpha = (q as f64).ln() / ln_n;
    let beta = t.ln() / ln_n;
    let gamma = -delta.ln() / ln_n;
    Ok(FeasibleInterval {
        lower,
        upper,
        s,
        radii,
        asymptotic_condition: asymptotic_condition(alpha, beta, gamma, params.zeta, params.lambda),
    })
}

/// `βζ > α + γ + λ`.
pub fn asymptotic_condition(alpha: f64, beta: f64, gamma: f64, zeta: f64, lambda: f64) -> bool {
    beta * zeta > alpha + gamma + lambda
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::csp::{Constraint, DependencyMode, Value};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(mu: f64) -> (Instance, ProductMeasure) {
        let inst = Instance::new(vec![2], vec![Constraint::forbidden(vec![0], [vec![1]])]).unwrap();
        let measure = ProductMeasure::bernoulli(&[mu]).unwrap();
        (inst, measure)
    }

    #[test]
    fn single_event_general_condition() {
        let (inst, mu) = single(0.25);
        let r = check_general_lll(&inst, &mu, &Psi::constant(1, 1.0).unwrap()).unwrap();
        assert!((r.lhs[0] - 0.5).abs() < 1e-12);
        assert!((r.epsilon - 0.5).abs() < 1e-12);
    }

    #[test]
    fn impossible_events_give_full_slack() {
        let (inst, mu) = single(0.0);
        let r = check_general_lll(&inst, &mu, &Psi::constant(1, 3.0).unwrap()).unwrap();
        assert_eq!((r.lhs[0], r.epsilon), (0.0, 1.0));
    }

    #[test]
    fn x_form_single_event_and_boundary() {
        let (inst, mu) = single(0.25);
        let x = Psi::constant(1, 1.0).unwrap().to_x();
        assert_eq!(x, vec![0.5]);
        assert_eq!(check_general_lll_x_form(&inst, &mu, &x).unwrap(), vec![true]);
        let (inst, mu) = single(0.5);
        assert_eq!(check_general_lll_x_form(&inst, &mu, &[0.5]).unwrap(), vec![true]);
        assert_eq!(check_general_lll_x_form(&inst, &mu, &[0.4999]).unwrap(), vec![false]);
        assert!(matches!(check_general_lll_x_form(&inst, &mu, &[1.0]), Err(LllError::XOutOfRange(0, _))));
    }

    #[test]
    fn psi_validation() {
        assert!(Psi::new(vec![1.0, 0.0]).is_err());
        assert!(Psi::new(vec![f64::INFINITY]).is_err());
        let (inst, mu) = single(0.1);
        assert!(matches!(check_general_lll(&inst, &mu, &Psi::constant(2, 1.0).unwrap()), Err(LllError::PsiLength { .. })));
    }

    #[test]
    fn overflowing_products_fall_back_to_logs() {
        // 600 constraints on one shared variable with huge psi
        let m = 600;
        let constraints = (0..m).map(|i| Constraint::forbidden(vec![0, i + 1], [vec![1, 1]])).collect();
        let inst = Instance::new(vec![2; m + 1], constraints).unwrap();
        let mu = ProductMeasure::uniform(inst.domains());
        let psi = Psi::constant(m, 1e3).unwrap();
        let r = check_general_lll(&inst, &mu, &psi).unwrap();
        assert!(r.lhs[0].is_infinite() || r.lhs[0] > 1e100);
        assert!(!r.holds());
    }

    #[test]
    fn cluster_matches_general_without_neighbors() {
        let (inst, mu) = single(0.3);
        let psi = Psi::constant(1, 0.7).unwrap();
        let g = check_general_lll(&inst, &mu, &psi).unwrap();
        let c = check_cluster_expansion(&inst, &mu, &psi).unwrap();
        assert!((c.lhs[0].unwrap() - g.lhs[0]).abs() < 1e-15);
    }

    #[test]
    fn cluster_excludes_adjacent_neighbor_pairs() {
        // i = 0 on {0,1}; neighbors 1 on {0,2} and 2 on {1,2} are adjacent to each other
        let inst = Instance::new(
            vec![2; 3],
            vec![
                Constraint::forbidden(vec![0, 1], [vec![0, 0]]),
                Constraint::forbidden(vec![0, 2], [vec![0, 0]]),
                Constraint::forbidden(vec![1, 2], [vec![0, 0]]),
            ],
        )
        .unwrap();
        let mu = ProductMeasure::uniform(inst.domains());
        let psi = Psi::constant(3, 0.5).unwrap();
        let g = check_general_lll(&inst, &mu, &psi).unwrap();
        let c = check_cluster_expansion(&inst, &mu, &psi).unwrap();
        // general: 0.25/0.5 * 1.5^3; cluster: 0.25/0.5 * (1 + 3*0.5)
        assert!((g.lhs[0] - 0.5 * 3.375).abs() < 1e-12);
        assert!((c.lhs[0].unwrap() - 0.5 * 2.5).abs() < 1e-12);
        assert!(c.epsilon().unwrap() > g.epsilon);
    }

    #[test]
    fn cluster_refuses_large_neighborhoods() {
        let m = MAX_CLUSTER_NEIGHBORS + 2;
        let constraints = (0..m).map(|i| Constraint::forbidden(vec![0, i + 1], [vec![1, 1]])).collect();
        let inst = Instance::new(vec![2; m + 1], constraints).unwrap();
        let mu = ProductMeasure::uniform(inst.domains());
        let c = check_cluster_expansion(&inst, &mu, &Psi::constant(m, 0.01).unwrap()).unwrap();
        assert!(c.lhs.iter().all(Option::is_none));
        assert_eq!(c.epsilon(), None);
    }

    #[test]
    fn shearer_single_event() {
        let (inst, mu) = single(0.3);
        let s = check_shearer(&inst, &mu).unwrap();
        assert!((s.q[0] - 0.7).abs() < 1e-15);
        assert!((s.q[1] - 0.3).abs() < 1e-15);
        assert!(s.satisfied);
        let (inst, mu) = single(1.0);
        let s = check_shearer(&inst, &mu).unwrap();
        assert_eq!(s.q_empty(), 0.0);
        assert!(!s.satisfied);
    }

    #[test]
    fn shearer_two_adjacent_events() {
        // edge: Ind = {∅,{0},{1}}; q_∅ = 1 - p0 - p1, q_{0,1} = 0
        let inst = Instance::new(
            vec![2; 2],
            vec![Constraint::forbidden(vec![0, 1], [vec![0, 0]]), Constraint::forbidden(vec![1], [vec![1]])],
        )
        .unwrap();
        let s = check_shearer_with_probabilities(&inst, &[0.2, 0.3]).unwrap();
        assert!((s.q[0] - 0.5).abs() < 1e-15);
        assert_eq!(s.q[3], 0.0);
        assert!((s.q[1] - 0.2).abs() < 1e-15);
        assert!(!check_shearer_with_probabilities(&inst, &[0.6, 0.5]).unwrap().satisfied);
    }

    #[test]
    fn shearer_refuses_large_instances() {
        let m = MAX_SHEARER_CONSTRAINTS + 1;
        let constraints = (0..m).map(|i| Constraint::forbidden(vec![i], [vec![1]])).collect();
        let inst = Instance::new(vec![2; m], constraints).unwrap();
        assert!(matches!(check_shearer(&inst, &ProductMeasure::uniform(inst.domains())), Err(LllError::TooLarge { .. })));
    }

    #[test]
    fn param_examples() {
        // k = 2, d = 2: chain of two clauses sharing x1
        let inst = Instance::new(vec![2; 3], vec![Constraint::clause(&[(0, true), (1, true)]), Constraint::clause(&[(1, true), (2, true)])]).unwrap();
        let p = derive_params(&inst, &Psi::constant(2, 1.0).unwrap(), 0.5).unwrap();
        assert!((p.zeta - 0.5).abs() < 1e-15);
        assert!((p.xi - 2f64.ln()).abs() < 1e-15);
        assert_eq!(p.lambda, 0.0);
        assert_eq!(p.eta, 2.0);
        assert_eq!(p.polylog_c, 16.0);
        let lone = Instance::new(vec![2], vec![Constraint::clause(&[(0, true)])]).unwrap();
        assert!(matches!(derive_params(&lone, &Psi::constant(1, 1.0).unwrap(), 0.5), Err(LllError::Undefined(_))));
        assert!(matches!(derive_params(&inst, &Psi::constant(2, 1.0).unwrap(), 0.0), Err(LllError::EpsilonOutOfRange(_))));
    }

    #[test]
    fn lambda_from_max_psi() {
        let inst = Instance::new(vec![2; 100], (0..50).map(|i| Constraint::clause(&[(2 * i, true), (2 * i + 1, true)])).collect()).unwrap();
        let p = derive_params(&inst, &Psi::constant(50, 10.0).unwrap(), 0.1).unwrap();
        assert!((p.lambda - 0.5).abs() < 1e-12);
    }

    #[test]
    fn radius_examples() {
        assert_eq!(radius_for(1, 0.01, 0.5, 1.0, 100).unwrap(), 7);
        assert_eq!(radius_for(1, 0.9, 0.5, 0.5, 100).unwrap(), 0);
        assert!(matches!(radius_for(1, 1e-4, 0.5, 1.0, 100), Err(LllError::Infeasible(_))));
        assert!(matches!(radius_for(1, 0.01, 0.0, 1.0, 100), Err(LllError::EpsilonOutOfRange(_))));
    }

    fn params(eps: f64, kd: (usize, usize), n: usize, eta: f64, xi: f64) -> Params {
        let log_slack = -(-eps).ln_1p();
        let kdf = (kd.0 * kd.1) as f64;
        Params {
            epsilon: eps,
            zeta: log_slack / kdf.ln(),
            eta,
            xi,
            lambda: 0.0,
            k: kd.0,
            d: kd.1,
            n,
            m: n,
            polylog_c: 4.0 * kdf,
        }
    }

    #[test]
    fn interval_is_nonempty_in_the_asymptotic_regime() {
        // kd = 4, ε = 3/4 gives ζ = 1; α = γ = 0.1, β = 0.5
        let n = 1e12 as usize;
        let p = params(0.75, (2, 2), n, 1.0, 2f64.ln());
        let nf = n as f64;
        let q = nf.powf(0.1) as usize;
        let t = nf.powf(0.5);
        let delta = nf.powf(-0.1);
        let iv = feasible_interval(q, t, delta, &p).unwrap();
        assert!(iv.asymptotic_condition);
        let (lo, hi) = iv.radii.unwrap();
        assert!(lo <= hi);
        assert!(iv.lower <= lo as f64 && hi as f64 <= iv.upper.unwrap());
    }

    #[test]
    fn interval_lower_endpoint_and_empty_cases() {
        let p = params(0.5, (2, 2), 100, 1.0, 2f64.ln());
        let iv = feasible_interval(1, 1e9, 0.01, &p).unwrap();
        assert_eq!(iv.radii.unwrap().0, 7);
        // r_hi = ln(((t - s)/(ξC)) ln 2)/ln 4 with s = 2 ln 100 / ln 2
        let s = 2.0 * 100f64.ln() / 2f64.ln();
        let expected_hi = ((1e9 - s) / (2f64.ln() * 16.0) * 2f64.ln()).ln() / 4f64.ln();
        assert!((iv.upper.unwrap() - expected_hi).abs() < 1e-12);
        assert_eq!(iv.radii.unwrap().1, expected_hi.floor() as u32);
        let tight = feasible_interval(1, s * 0.5, 0.01, &p).unwrap();
        assert!(tight.upper.is_none() && tight.is_empty());
        let short = feasible_interval(1, s + 100.0, 0.01, &p).unwrap();
        assert!(short.is_empty());
    }

    /// Σ_{S ⊆ T} Π_{j∈S} ψ_j by explicit enumeration.
    fn subset_sum(weights: &[f64]) -> f64 {
        (0u32..1 << weights.len())
            .map(|s| (0..weights.len()).filter(|&j| s & (1 << j) != 0).map(|j| weights[j]).product::<f64>())
            .sum()
    }

    proptest! {
        #[test]
        fn closed_form_subset_sum(weights in proptest::collection::vec(0.001f64..5.0, 0..=15)) {
            let closed: f64 = weights.iter().map(|w| 1.0 + w).product();
            let brute = subset_sum(&weights);
            prop_assert!((closed - brute).abs() <= 1e-10 * brute);
        }

        #[test]
        fn x_form_agrees_with_psi_form(seed in any::<u64>()) {
            let (inst, mu) = random_tiny(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let psi = Psi::new((0..inst.num_constraints()).map(|_| rng.gen_range(0.01..3.0)).collect()).unwrap();
            let g = check_general_lll(&inst, &mu, &psi).unwrap();
            let x = check_general_lll_x_form(&inst, &mu, &psi.to_x()).unwrap();
            for i in 0..inst.num_constraints() {
                prop_assert_eq!(g.passes(i), x[i]);
            }
        }

        #[test]
        fn cluster_dominated_by_general_and_implies_shearer(seed in any::<u64>()) {
            let (inst, mu) = random_tiny(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc1);
            let psi = Psi::new((0..inst.num_constraints()).map(|_| rng.gen_range(0.01..1.0)).collect()).unwrap();
            let g = check_general_lll(&inst, &mu, &psi).unwrap();
            let c = check_cluster_expansion(&inst, &mu, &psi).unwrap();
            for i in 0..inst.num_constraints() {
                prop_assert!(c.lhs[i].unwrap() <= g.lhs[i] * (1.0 + 1e-12));
            }
            if c.holds().unwrap() {
                prop_assert!(check_shearer(&inst, &mu).unwrap().satisfied);
            }
        }
    }

    /// Up to 6 constraints over up to 8 boolean variables.
    pub(crate) fn random_tiny(seed: u64) -> (Instance, ProductMeasure) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=6);
        let constraints = (0..m)
            .map(|_| {
                let width = rng.gen_range(1..=n.min(4));
                let mut vars: Vec<usize> = (0..n).collect();
                for i in 0..width {
                    let j = rng.gen_range(i..n);
                    vars.swap(i, j);
                }
                vars.truncate(width);
                let tuples: Vec<Vec<Value>> = (0..rng.gen_range(1..=2)).map(|_| (0..width).map(|_| rng.gen_range(0..2)).collect()).collect();
                Constraint::forbidden(vars, tuples)
            })
            .collect();
        let mode = if rng.gen_bool(0.5) { DependencyMode::Lopsided } else { DependencyMode::SharedVariable };
        let inst = Instance::new(vec![2; n], constraints).unwrap().with_dependency_mode(mode);
        let mu = ProductMeasure::bernoulli(&(0..n).map(|_| rng.gen_range(0.05..0.95)).collect::<Vec<_>>()).unwrap();
        (inst, mu)
    }
}
