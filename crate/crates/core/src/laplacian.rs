//! Laplacians over the sample set.
//!
//! * normalized hypergraph Laplacian `L = I - Dv^{-1/2} H W De^{-1} Hᵀ Dv^{-1/2}`
//! * unnormalized same-class graph Laplacian `L = D - A`
//! * nonnegative combinations `L_W = L_H + Σ γ_i L_i`
//!
//! Zero-degree convention: a vertex with d(v) = 0 gets an all-zero row and
//! column (no identity entry), and a hyperedge with δ(e) = 0 or w(e) = 0 is
//! dropped. Under this convention `Tr(Fᵀ L F)` equals the pairwise relation
//! loss computed by [`relation_loss_direct`] for every `F`.

use crate::error::check_dim;
use crate::hypergraph::{
    build_class_hypergraph, check_bandwidth, distinct_classes, edge_degrees, heat_kernel_weights, vertex_degrees,
    HyperedgeWeights, IncidenceMatrix,
};
use crate::linalg::{mirror_lower, sq_distance};
use crate::predictor::FeatureMatrix;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    HypergraphNormalized,
    GraphUnnormalized,
    Combined,
}

/// Symmetric positive semi-definite n×n matrix indexed by samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    matrix: Matrix,
    kind: LaplacianKind,
}

impl Laplacian {
    /// Wrap a caller-built matrix. It must be square and symmetric to 1e-10
    /// relative tolerance; it is then made exactly symmetric.
    pub fn from_matrix(mut matrix: Matrix) -> Result<Self> {
        check_dim("laplacian: square", matrix.nrows(), matrix.ncols())?;
        if matrix.nrows() == 0 {
            return Err(Error::EmptyMatrix);
        }
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if !(asym <= 1e-10 * scale) {
            return Err(Error::InvalidParameter {
                name: "laplacian asymmetry",
                value: asym,
            });
        }
        mirror_lower(&mut matrix);
        Ok(Self {
            matrix,
            kind: LaplacianKind::Combined,
        })
    }

    /// The Laplacian of the empty graph on `n` vertices.
    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: Matrix::zeros(n, n),
            kind: LaplacianKind::GraphUnnormalized,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// `Tr(Fᵀ L F)` for an n×k matrix `F`.
    pub fn quadratic_form(&self, f: &Matrix) -> Result<f64> {
        check_dim("laplacian quadratic form", self.size(), f.nrows())?;
        Ok((&self.matrix * f).component_mul(f).sum())
    }
}

fn inverse_sqrt_or_zero(v: f64) -> f64 {
    if v > 0.0 {
        1.0 / v.sqrt()
    } else {
        0.0
    }
}

/// Per-edge factor `w(e)/δ(e)`, zero for empty or weightless edges.
fn edge_factors(h: &IncidenceMatrix, w: &HyperedgeWeights) -> Vec<f64> {
    edge_degrees(h)
        .into_iter()
        .zip(w.values())
        .map(|(delta, &we)| if delta == 0 || we == 0.0 { 0.0 } else { we / delta as f64 })
        .collect()
}

/// Normalized hypergraph Laplacian.
pub fn hypergraph_laplacian(h: &IncidenceMatrix, w: &HyperedgeWeights) -> Result<Laplacian> {
    check_dim("hypergraph_laplacian: hyperedges", h.n_edges(), w.len())?;
    if let Some((index, &value)) = w.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeWeight { index, value });
    }
    let dv = vertex_degrees(h, w)?;
    let factors = edge_factors(h, w);
    let (n, m) = (h.n_vertices(), h.n_edges());

    // Θ = G Gᵀ with G = Dv^{-1/2} H (W De^{-1})^{1/2}
    let mut g = Matrix::zeros(n, m);
    for e in 0..m {
        let root = factors[e].sqrt();
        if root == 0.0 {
            continue;
        }
        for v in 0..n {
            if h.contains(v, e) {
                g[(v, e)] = root * inverse_sqrt_or_zero(dv[v]);
            }
        }
    }
    let mut l = &g * g.transpose();
    l.neg_mut();
    for (v, &deg) in dv.iter().enumerate() {
        if deg > 0.0 {
            l[(v, v)] += 1.0;
        }
    }
    mirror_lower(&mut l);
    Ok(Laplacian {
        matrix: l,
        kind: LaplacianKind::HypergraphNormalized,
    })
}

const EDGE_WEIGHT_GRID: f64 = 4294967296.0; // 2^32

/// Unnormalized Laplacian `D - A` of the supervised pairwise graph that links
/// every pair of same-class samples with heat-kernel weight
/// `exp(-‖x_i - x_j‖² / mu)`.
///
/// Edge weights are rounded to multiples of 2^-32, which makes every row sum
/// of the result exactly zero in floating point (n ≤ 2^20).
pub fn pairwise_class_graph_laplacian(x: &FeatureMatrix, class_labels: &[usize], mu: f64) -> Result<Laplacian> {
    let n = x.n_samples();
    check_dim("pairwise_class_graph_laplacian: labels", n, class_labels.len())?;
    check_bandwidth(mu)?;
    let mut l = Matrix::zeros(n, n);
    for class in distinct_classes(class_labels) {
        let members: Vec<usize> = (0..n).filter(|&i| class_labels[i] == class).collect();
        for (pos, &i) in members.iter().enumerate() {
            for &j in &members[pos + 1..] {
                let d2 = sq_distance(x.sample(i), x.sample(j));
                let a = ((-d2 / mu).exp() * EDGE_WEIGHT_GRID).round() / EDGE_WEIGHT_GRID;
                l[(i, j)] = -a;
                l[(j, i)] = -a;
            }
        }
    }
    for i in 0..n {
        let degree: f64 = l.column(i).iter().map(|v| -v).sum();
        l[(i, i)] = degree;
    }
    Ok(Laplacian {
        matrix: l,
        kind: LaplacianKind::GraphUnnormalized,
    })
}

/// Normalized Laplacian of the class hypergraph (one hyperedge per class,
/// heat-kernel weighted).
pub fn class_hypergraph_laplacian(class_labels: &[usize], x: &FeatureMatrix, mu: f64) -> Result<Laplacian> {
    let h = build_class_hypergraph(class_labels)?;
    let w = heat_kernel_weights(x, &h, mu)?;
    hypergraph_laplacian(&h, &w)
}

/// `base + Σ γ_i L_i`. Terms with γ = 0 are skipped, so they leave `base`
/// bitwise unchanged.
pub fn combine(base: &Laplacian, extras: &[(&Laplacian, f64)]) -> Result<Laplacian> {
    for (extra, gamma) in extras {
        check_dim("combine: laplacian size", base.size(), extra.size())?;
        if !(*gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::NegativeGamma(*gamma));
        }
    }
    let mut matrix = base.matrix.clone();
    for (extra, gamma) in extras {
        if *gamma != 0.0 {
            matrix.zip_apply(&extra.matrix, |a, b| *a += gamma * b);
        }
    }
    Ok(Laplacian {
        matrix,
        kind: LaplacianKind::Combined,
    })
}

/// The attribute-relation loss evaluated pair by pair:
/// `½ Σ_e Σ_{(u,v) ∈ e} w(e)/δ(e) ‖F_u/√d(u) − F_v/√d(v)‖²`.
pub fn relation_loss_direct(f: &Matrix, h: &IncidenceMatrix, w: &HyperedgeWeights) -> Result<f64> {
    check_dim("relation_loss_direct: rows", h.n_vertices(), f.nrows())?;
    check_dim("relation_loss_direct: hyperedges", h.n_edges(), w.len())?;
    let dv = vertex_degrees(h, w)?;
    let factors = edge_factors(h, w);
    let mut total = 0.0;
    for (e, &factor) in factors.iter().enumerate() {
        if factor == 0.0 {
            continue;
        }
        let members = h.members(e);
        for &u in &members {
            for &v in &members {
                let (su, sv) = (inverse_sqrt_or_zero(dv[u]), inverse_sqrt_or_zero(dv[v]));
                let dist: f64 = (0..f.ncols())
                    .map(|k| {
                        let t = f[(u, k)] * su - f[(v, k)] * sv;
                        t * t
                    })
                    .sum();
                total += factor * dist;
            }
        }
    }
    Ok(0.5 * total)
}
