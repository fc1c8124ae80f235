//! Spectral and degree metrics sampled along a run.
//!
//! The central quantity is the algebraic connectivity `alpha`, the second
//! smallest eigenvalue of the graph Laplacian `L = D - A`. It is zero
//! exactly on disconnected graphs and grows with how well-knit the graph
//! is; `m`-regular graphs beating `m - 2*sqrt(m - 1)` pass the Ramanujan
//! expander bound.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::graph::{AverageDegree, LabeledGraph};

/// Dense Laplacian; row/column order follows node ids.
pub type LaplacianMatrix = DMatrix<f64>;

/// Default absolute tolerance for spectral quantities.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("algebraic connectivity needs n >= 2, got {n}")]
    GraphTooSmall { n: usize },
    #[error("tolerance must be positive, got {tol}")]
    BadTolerance { tol: f64 },
    #[error("expander threshold needs m >= 3, got {m}")]
    DegreeTooSmall { m: usize },
}

/// One row of a trace: degree statistics always, `alpha` only when sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsSample {
    pub step: u64,
    /// Degree range `f(G)`; zero exactly at absorption.
    pub degree_range: usize,
    pub average_degree: AverageDegree,
    pub edges: usize,
    pub flag_sum: usize,
    pub alpha: Option<f64>,
}

pub fn laplacian(g: &LabeledGraph) -> LaplacianMatrix {
    let n = g.node_count();
    let mut l = DMatrix::zeros(n, n);
    for i in g.nodes() {
        l[(i.index(), i.index())] = g.degree(i) as f64;
        for &j in g.neighbors(i) {
            l[(i.index(), j.index())] = -1.0;
        }
    }
    l
}

/// Second smallest Laplacian eigenvalue via a dense symmetric eigensolve.
///
/// The solver converges to machine precision, far below any sensible `tol`;
/// the parameter exists so callers state the accuracy they rely on and get
/// an error for nonsensical values. Tiny negative results are clamped to
/// zero, the Laplacian being positive semidefinite.
pub fn algebraic_connectivity(g: &LabeledGraph, tol: f64) -> Result<f64, MetricsError> {
    let n = g.node_count();
    if n < 2 {
        return Err(MetricsError::GraphTooSmall { n });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(MetricsError::BadTolerance { tol });
    }
    let eig = SymmetricEigen::new(laplacian(g));
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
    Ok(values[1].max(0.0))
}

/// Ramanujan bound `m - 2*sqrt(m - 1)` for m-regular graphs.
pub fn expander_threshold(m: usize) -> Result<f64, MetricsError> {
    if m < 3 {
        return Err(MetricsError::DegreeTooSmall { m });
    }
    Ok(m as f64 - 2.0 * ((m - 1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LabeledGraph;
    use crate::topology;

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let g = topology::barbell();
        let l = laplacian(&g);
        for i in 0..10 {
            let row_sum: f64 = (0..10).map(|j| l[(i, j)]).sum();
            assert_eq!(row_sum, 0.0);
            assert_eq!(l[(i, i)], 3.0);
        }
        assert_eq!(l[(4, 9)], -1.0);
        assert_eq!(l[(9, 4)], -1.0);
        assert_eq!(l[(0, 9)], 0.0);
    }

    #[test]
    fn closed_form_spectra() {
        // Path P4: alpha = 2 - sqrt(2).
        let p4 = topology::path(4);
        let a = algebraic_connectivity(&p4, DEFAULT_TOL).unwrap();
        assert!((a - 0.5857864376269049).abs() < 1e-8, "alpha(P4) = {a}");

        // Cycle C5: alpha = 2(1 - cos(2 pi / 5)).
        let c5 = topology::cycle(5);
        let a = algebraic_connectivity(&c5, DEFAULT_TOL).unwrap();
        assert!((a - 1.381966011250105).abs() < 1e-8, "alpha(C5) = {a}");

        // Complete K5: alpha = n = 5.
        let mut k5 = LabeledGraph::new(5);
        for i in 0..5u32 {
            for j in (i + 1)..5 {
                k5.add_edge(crate::graph::NodeId(i), crate::graph::NodeId(j))
                    .unwrap();
            }
        }
        let a = algebraic_connectivity(&k5, DEFAULT_TOL).unwrap();
        assert!((a - 5.0).abs() < 1e-8, "alpha(K5) = {a}");

        // K_{3,3}: alpha equals the part size 3.
        let k33 = topology::complete_bipartite_3_3();
        let a = algebraic_connectivity(&k33, DEFAULT_TOL).unwrap();
        assert!((a - 3.0).abs() < 1e-8, "alpha(K33) = {a}");

        // Prism C3 x K2: alpha = 2.
        let a = algebraic_connectivity(&topology::prism(), DEFAULT_TOL).unwrap();
        assert!((a - 2.0).abs() < 1e-8, "alpha(prism) = {a}");
    }

    #[test]
    fn disconnected_graph_has_zero_alpha() {
        let g = LabeledGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let a = algebraic_connectivity(&g, DEFAULT_TOL).unwrap();
        assert!(a.abs() < 1e-9, "alpha = {a}");
    }

    #[test]
    fn small_and_bad_inputs_error() {
        let g = LabeledGraph::new(1);
        assert!(matches!(
            algebraic_connectivity(&g, DEFAULT_TOL),
            Err(MetricsError::GraphTooSmall { n: 1 })
        ));
        let g = topology::path(3);
        assert!(algebraic_connectivity(&g, 0.0).is_err());
        assert!(algebraic_connectivity(&g, -1.0).is_err());
    }

    #[test]
    fn expander_threshold_values() {
        assert!(expander_threshold(2).is_err());
        let t3 = expander_threshold(3).unwrap();
        assert!(
            (t3 - 0.1715728752538097).abs() < 1e-12,
            "3 - 2 sqrt 2 = {t3}"
        );
        let t4 = expander_threshold(4).unwrap();
        assert!(
            (t4 - 0.5358983848622456).abs() < 1e-12,
            "4 - 2 sqrt 3 = {t4}"
        );
        // The prism clears its bound comfortably; the barbell's bridge
        // drags alpha far down relative to it.
        let prism = algebraic_connectivity(&topology::prism(), DEFAULT_TOL).unwrap();
        assert!(prism >= t3);
        let barbell = algebraic_connectivity(&topology::barbell(), DEFAULT_TOL).unwrap();
        assert!(barbell < 0.3, "barbell alpha = {barbell}");
        assert!(barbell < prism / 4.0);
    }

    #[test]
    fn alpha_monotone_under_edge_addition() {
        // Adding an edge never decreases alpha (Laplacians order by PSD).
        let mut g = topology::cycle(6);
        let mut prev = algebraic_connectivity(&g, DEFAULT_TOL).unwrap();
        for (i, j) in [(0u32, 3u32), (1, 4), (2, 5)] {
            g.add_edge(crate::graph::NodeId(i), crate::graph::NodeId(j))
                .unwrap();
            let next = algebraic_connectivity(&g, DEFAULT_TOL).unwrap();
            assert!(next >= prev - 1e-9, "{next} < {prev}");
            prev = next;
        }
    }
}
