//! 2-coloring hypergraphs whose edges have mixed sizes.

use crate::apps::AppError;
use crate::csp::{Constraint, Instance, ProductMeasure};
use crate::lll::Psi;

/// Edges must have at least this many vertices.
pub const MIN_EDGE_SIZE: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    /// Edges are stored sorted; repeated vertices inside an edge are merged.
    pub fn new(n: usize, edges: Vec<Vec<usize>>) -> Result<Self, AppError> {
        let mut out = Vec::with_capacity(edges.len());
        for (i, mut e) in edges.into_iter().enumerate() {
            if let Some(&vertex) = e.iter().find(|&&v| v >= n) {
                return Err(AppError::VertexOutOfRange { vertex, n });
            }
            e.sort_unstable();
            e.dedup();
            if e.len() < MIN_EDGE_SIZE {
                return Err(AppError::EdgeTooSmall { edge: i, size: e.len(), min: MIN_EDGE_SIZE });
            }
            out.push(e);
        }
        Ok(Hypergraph { n, edges: out })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    /// `Δ_i` for every size `i`: the largest number of size-`i` edges at one vertex.
    pub fn degree_profile(&self) -> Vec<usize> {
        let max_size = self.edges.iter().map(Vec::len).max().unwrap_or(0);
        let mut counts = vec![vec![0usize; max_size + 1]; self.n];
        for e in &self.edges {
            for &v in e {
                counts[v][e.len()] += 1;
            }
        }
        (0..=max_size).map(|i| counts.iter().map(|c| c[i]).max().unwrap_or(0)).collect()
    }

    /// `Σ_i Δ_i 2^{-i/2}`.
    pub fn weighted_degree(&self) -> f64 {
        self.degree_profile().iter().enumerate().map(|(i, &d)| d as f64 * 2f64.powf(-(i as f64) / 2.0)).sum()
    }
}

/// `x_e = 2^{-(|e|-1)/2}`.
pub fn edge_x(size: usize) -> f64 {
    0.5f64.powf((size as f64 - 1.0) / 2.0)
}

/// `ψ_e = 2 x_e / (1 - x_e)`.
pub fn edge_psi(size: usize) -> f64 {
    let x = edge_x(size);
    2.0 * x / (1.0 - x)
}

#[derive(Clone, Debug)]
pub struct HypergraphSetup {
    pub instance: Instance,
    pub measure: ProductMeasure,
    pub psi: Psi,
    /// `Σ_i Δ_i 2^{-i/2}`.
    pub weighted_degree: f64,
    /// `1 - 6√2 Σ_i Δ_i 2^{-i/2}`; the degree condition holds with this slack when positive.
    pub epsilon: f64,
}

impl HypergraphSetup {
    pub fn condition_holds(&self) -> bool {
        self.epsilon >= 0.0
    }
}

/// Uniform 2-colorings; one constraint per edge forbidding both
/// monochromatic tuples.
pub fn hypergraph_instance(h: &Hypergraph) -> Result<HypergraphSetup, AppError> {
    let constraints = h
        .edges
        .iter()
        .map(|e| Constraint::forbidden(e.clone(), [vec![0; e.len()], vec![1; e.len()]]))
        .collect();
    let instance = Instance::new(vec![2; h.n], constraints)?;
    let measure = ProductMeasure::uniform(instance.domains());
    let psi = Psi::new(h.edges.iter().map(|e| edge_psi(e.len())).collect())?;
    let weighted_degree = h.weighted_degree();
    let epsilon = 1.0 - 6.0 * std::f64::consts::SQRT_2 * weighted_degree;
    Ok(HypergraphSetup { instance, measure, psi, weighted_degree, epsilon })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_edges() {
        assert_eq!(edge_x(3), 0.5);
        assert_eq!(edge_psi(3), 2.0);
        let h = Hypergraph::new(3, vec![vec![0, 1, 2]]).unwrap();
        let s = hypergraph_instance(&h).unwrap();
        assert_eq!(s.instance.event_probability(&s.measure, 0).unwrap(), 0.25);
        // Δ_3 = 1: 2^{-1.5} ≈ 0.3536 > 1/(6√2) ≈ 0.1179
        assert!((s.weighted_degree - 2f64.powf(-1.5)).abs() < 1e-15);
        assert!(!s.condition_holds());
        assert!((s.epsilon - (1.0 - 6.0 * 2f64.sqrt() * 2f64.powf(-1.5))).abs() < 1e-12);
    }

    #[test]
    fn event_mass_is_two_to_one_minus_size() {
        let h = Hypergraph::new(9, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7, 8], vec![0, 4, 8]]).unwrap();
        let s = hypergraph_instance(&h).unwrap();
        for (i, e) in h.edges().iter().enumerate() {
            assert_eq!(s.instance.event_probability(&s.measure, i).unwrap(), 0.5f64.powi(e.len() as i32 - 1));
        }
    }

    #[test]
    fn profile_and_condition_on_large_edges() {
        // 20-vertex edges sharing nothing: Σ = 2^{-10}, well under the threshold
        let edges: Vec<Vec<usize>> = (0..3).map(|i| (20 * i..20 * i + 20).collect()).collect();
        let h = Hypergraph::new(60, edges).unwrap();
        let profile = h.degree_profile();
        assert_eq!(profile[20], 1);
        assert_eq!(profile.iter().sum::<usize>(), 1);
        let s = hypergraph_instance(&h).unwrap();
        assert!(s.condition_holds());
        assert!((s.epsilon - (1.0 - 6.0 * 2f64.sqrt() * 2f64.powi(-10))).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(matches!(Hypergraph::new(3, vec![vec![0, 1]]), Err(AppError::EdgeTooSmall { .. })));
        assert!(matches!(Hypergraph::new(3, vec![vec![0, 1, 1]]), Err(AppError::EdgeTooSmall { .. })));
        assert!(matches!(Hypergraph::new(3, vec![vec![0, 1, 3]]), Err(AppError::VertexOutOfRange { .. })));
    }
}
