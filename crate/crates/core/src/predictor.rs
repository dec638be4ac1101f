//! Linear hypergraph-regularized attribute predictors.
//!
//! The projection `B` (d×m) minimizes
//!
//! ```text
//! Tr(Bᵀ X L Xᵀ B) + λ‖Xᵀ B − Y‖² + η‖B‖²
//! ```
//!
//! whose stationarity condition gives the closed form
//! `B = (X L Xᵀ + λ X Xᵀ + η I)⁻¹ λ X Y`. Column j of `B` is the classifier
//! of attribute j, and the m right-hand sides share one Cholesky factor.

use crate::error::check_dim;
use crate::hypergraph::{build_attribute_hypergraph, heat_kernel_weights, IncidenceMatrix};
use crate::laplacian::{combine, hypergraph_laplacian, Laplacian};
use crate::linalg::{all_finite, mirror_lower, sign_matrix, spd_solve};
use crate::{Error, Matrix, Result};

/// d×n matrix whose columns are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Matrix);

impl FeatureMatrix {
    pub fn new(x: Matrix) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        if !all_finite(&x) {
            return Err(Error::NonFinite("feature matrix"));
        }
        Ok(Self(x))
    }

    /// Build from an n×d matrix with one sample per row (the on-disk layout).
    pub fn from_sample_rows(rows: &Matrix) -> Result<Self> {
        Self::new(rows.transpose())
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.0.ncols()
    }

    /// Feature vector of sample `i`.
    pub fn sample(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.0.as_slice()[i * d..(i + 1) * d]
    }

    pub fn select_samples(&self, indices: &[usize]) -> Result<Self> {
        Self::new(self.0.select_columns(indices))
    }
}

/// Attribute labels mapped from {0, 1} to {−1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedLabels(Matrix);

impl ShiftedLabels {
    pub fn new(y: Matrix) -> Result<Self> {
        if y.nrows() == 0 || y.ncols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        for c in 0..y.ncols() {
            for r in 0..y.nrows() {
                let value = y[(r, c)];
                if value != 1.0 && value != -1.0 {
                    return Err(Error::NonBinaryEntry { row: r, col: c, value });
                }
            }
        }
        Ok(Self(y))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n_samples(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_attributes(&self) -> usize {
        self.0.ncols()
    }
}

/// `Y = 2H − 1`.
pub fn shift_labels(h: &IncidenceMatrix) -> ShiftedLabels {
    ShiftedLabels(h.matrix().map(|v| 2.0 * v - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub lambda: f64,
    pub eta: f64,
    pub gammas: Vec<f64>,
}

/// Trained linear predictor: `B` is d×m.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    pub b: Matrix,
    pub hyper: Hyperparams,
}

/// Raw confidences `S` (k×m) and their signs `P` (sign(0) = +1).
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeScores {
    pub scores: Matrix,
    pub signs: Matrix,
}

impl AttributeScores {
    pub fn from_scores(scores: Matrix) -> Self {
        let signs = sign_matrix(&scores);
        Self { scores, signs }
    }
}

pub(crate) fn check_regularizers(lambda: f64, eta: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter { name: "lambda", value: lambda });
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter { name: "eta", value: eta });
    }
    Ok(())
}

/// `X (L + λI) Xᵀ + ηI`, exactly symmetric.
fn system_matrix(x: &Matrix, l: &Matrix, lambda: f64, eta: f64) -> Matrix {
    let mut xl = x * l;
    xl.zip_apply(x, |a, b| *a += lambda * b);
    let mut a = xl * x.transpose();
    mirror_lower(&mut a);
    for i in 0..a.nrows() {
        a[(i, i)] += eta;
    }
    a
}

/// Closed-form minimizer for a generic "design" matrix `x` (features for
/// the linear model, the Gram matrix for the kernel model).
pub(crate) fn solve_regularized(x: &Matrix, y: &Matrix, l: &Matrix, lambda: f64, eta: f64) -> Result<Matrix> {
    check_regularizers(lambda, eta)?;
    let a = system_matrix(x, l, lambda, eta);
    let rhs = (x * y) * lambda;
    spd_solve(a, &rhs)
}

fn check_training_dims(x: &FeatureMatrix, y: &ShiftedLabels, l: &Laplacian) -> Result<()> {
    check_dim("train: label rows", x.n_samples(), y.n_samples())?;
    check_dim("train: laplacian size", x.n_samples(), l.size())
}

/// Train a HAP predictor against an arbitrary sample Laplacian.
pub fn train(x: &FeatureMatrix, y: &ShiftedLabels, l: &Laplacian, lambda: f64, eta: f64) -> Result<ProjectionMatrix> {
    check_training_dims(x, y, l)?;
    let b = solve_regularized(x.matrix(), y.matrix(), l.matrix(), lambda, eta)?;
    Ok(ProjectionMatrix {
        b,
        hyper: Hyperparams {
            lambda,
            eta,
            gammas: Vec::new(),
        },
    })
}

/// The attribute hypergraph Laplacian for labels `h_attr` with bandwidth `mu`.
pub fn attribute_laplacian(x: &FeatureMatrix, h_attr: &IncidenceMatrix, mu: f64) -> Result<Laplacian> {
    let w = heat_kernel_weights(x, h_attr, mu)?;
    hypergraph_laplacian(h_attr, &w)
}

/// HAP with additional side-information Laplacians (`L_W = L_H + Σ γ_i L_i`).
/// With no side terms, or all γ = 0, this is plain HAP.
pub fn train_cshap(
    x: &FeatureMatrix,
    h_attr: &IncidenceMatrix,
    side: &[(&Laplacian, f64)],
    lambda: f64,
    eta: f64,
    mu: f64,
) -> Result<ProjectionMatrix> {
    let h_attr = build_attribute_hypergraph(h_attr.matrix())?;
    let l_h = attribute_laplacian(x, &h_attr, mu)?;
    let l_w = combine(&l_h, side)?;
    let mut model = train(x, &shift_labels(&h_attr), &l_w, lambda, eta)?;
    model.hyper.gammas = side.iter().map(|(_, g)| *g).collect();
    Ok(model)
}

/// The three terms of the training objective at a given `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub relation: f64,
    pub fit: f64,
    pub ridge: f64,
}

impl Objective {
    pub fn total(&self) -> f64 {
        self.relation + self.fit + self.ridge
    }
}

pub(crate) fn objective_for_design(
    b: &Matrix,
    x: &Matrix,
    y: &Matrix,
    l: &Laplacian,
    lambda: f64,
    eta: f64,
) -> Result<Objective> {
    check_dim("objective: B rows", x.nrows(), b.nrows())?;
    check_dim("objective: label rows", x.ncols(), y.nrows())?;
    check_dim("objective: B columns", y.ncols(), b.ncols())?;
    let f = x.transpose() * b;
    Ok(Objective {
        relation: l.quadratic_form(&f)?,
        fit: lambda * (&f - y).norm_squared(),
        ridge: eta * b.norm_squared(),
    })
}

/// `Tr(Bᵀ X L Xᵀ B) + λ‖XᵀB − Y‖² + η‖B‖²`, term by term.
pub fn objective_value(
    b: &Matrix,
    x: &FeatureMatrix,
    y: &ShiftedLabels,
    l: &Laplacian,
    lambda: f64,
    eta: f64,
) -> Result<Objective> {
    objective_for_design(b, x.matrix(), y.matrix(), l, lambda, eta)
}

pub(crate) fn residual_for_design(b: &Matrix, x: &Matrix, y: &Matrix, l: &Matrix, lambda: f64, eta: f64) -> f64 {
    let rhs = (x * y) * lambda;
    let lhs = system_matrix(x, l, lambda, eta) * b;
    (lhs - &rhs).norm() / (1.0 + rhs.norm())
}

/// Relative stationarity residual
/// `‖(X L Xᵀ + λXXᵀ + ηI) B − λXY‖_F / (1 + ‖λXY‖_F)`.
pub fn stationarity_residual(
    b: &Matrix,
    x: &FeatureMatrix,
    y: &ShiftedLabels,
    l: &Laplacian,
    lambda: f64,
    eta: f64,
) -> Result<f64> {
    check_dim("residual: B rows", x.dim(), b.nrows())?;
    check_dim("residual: label rows", x.n_samples(), y.n_samples())?;
    check_dim("residual: laplacian size", x.n_samples(), l.size())?;
    Ok(residual_for_design(b, x.matrix(), y.matrix(), l.matrix(), lambda, eta))
}

/// `S = Zᵀ B`, `P = sign(S)`.
pub fn predict(model: &ProjectionMatrix, z: &FeatureMatrix) -> Result<AttributeScores> {
    check_dim("predict: feature dimension", model.b.nrows(), z.dim())?;
    // (Bᵀ Z)ᵀ keeps the large operand on the fast blocked-multiply path
    let scores = (model.b.transpose() * z.matrix()).transpose();
    if !all_finite(&scores) {
        return Err(Error::NonFinite("attribute scores"));
    }
    Ok(AttributeScores::from_scores(scores))
}
