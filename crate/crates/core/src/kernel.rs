//! Kernelized predictors.
//!
//! Replacing `Xᵀ B` by `K B` (K the n×n Gram matrix) turns the objective into
//!
//! ```text
//! Tr(Bᵀ K L K B) + λ‖K B − Y‖² + η‖B‖²
//! ```
//!
//! with stationarity condition `(K L K + λ K² + η I) B = λ K Y`. This is the
//! linear system with the Gram matrix in place of the feature matrix, so both
//! models share one solver.

use std::fmt;
use std::str::FromStr;

use crate::error::check_dim;
use crate::laplacian::Laplacian;
use crate::linalg::{cross_sq_distances, mirror_lower, pairwise_sq_distances};
use crate::predictor::{
    objective_for_design, residual_for_design, solve_regularized, AttributeScores, FeatureMatrix, Hyperparams,
    Objective, ShiftedLabels,
};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// `exp(−‖a − b‖² / s)`
    Gaussian,
    /// `1 / (1 + ‖a − b‖² / s)`
    Cauchy,
    /// `aᵀ b`
    Linear,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Cauchy => "cauchy",
            KernelFamily::Linear => "linear",
        })
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "cauchy" => Ok(KernelFamily::Cauchy),
            "linear" => Ok(KernelFamily::Linear),
            other => Err(Error::Config(format!("unknown kernel family '{other}'"))),
        }
    }
}

/// Kernel family plus its scale `s` (σ², the divisor of the squared
/// distance). The scale is ignored by the linear kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub scale: f64,
}

impl KernelSpec {
    pub fn gaussian(scale: f64) -> Self {
        Self {
            family: KernelFamily::Gaussian,
            scale,
        }
    }

    pub fn cauchy(scale: f64) -> Self {
        Self {
            family: KernelFamily::Cauchy,
            scale,
        }
    }

    pub fn linear() -> Self {
        Self {
            family: KernelFamily::Linear,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            KernelFamily::Linear => Ok(()),
            _ if self.scale > 0.0 && self.scale.is_finite() => Ok(()),
            _ => Err(Error::NonPositiveScale(self.scale)),
        }
    }

    fn at_sq_distance(&self, d2: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-d2 / self.scale).exp(),
            KernelFamily::Cauchy => 1.0 / (1.0 + d2 / self.scale),
            KernelFamily::Linear => unreachable!("linear kernel is evaluated from inner products"),
        }
    }

    /// n×k matrix of kernel values between the columns of `a` and of `b`.
    fn cross(&self, a: &Matrix, b: &Matrix) -> Matrix {
        match self.family {
            KernelFamily::Linear => a.transpose() * b,
            _ => cross_sq_distances(a, b).map(|d2| self.at_sq_distance(d2)),
        }
    }
}

/// Training Gram matrix together with the features it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    k: Matrix,
    spec: KernelSpec,
    train: FeatureMatrix,
}

impl GramMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.k
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn training_features(&self) -> &FeatureMatrix {
        &self.train
    }

    pub fn size(&self) -> usize {
        self.k.nrows()
    }
}

pub fn gram(x: &FeatureMatrix, spec: KernelSpec) -> Result<GramMatrix> {
    spec.validate()?;
    let mut k = match spec.family {
        KernelFamily::Linear => x.matrix().transpose() * x.matrix(),
        _ => pairwise_sq_distances(x.matrix()).map(|d2| spec.at_sq_distance(d2)),
    };
    mirror_lower(&mut k);
    Ok(GramMatrix {
        k,
        spec,
        train: x.clone(),
    })
}

/// Trained kernel predictor. `b` is n×m; the training features are kept so
/// that prediction is self-contained.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelProjection {
    pub b: Matrix,
    pub hyper: Hyperparams,
    pub spec: KernelSpec,
    pub train_features: FeatureMatrix,
}

/// `B = (K L K + λK² + ηI)⁻¹ λ K Y`.
pub fn train_kernel(
    k: &GramMatrix,
    y: &ShiftedLabels,
    l: &Laplacian,
    lambda: f64,
    eta: f64,
) -> Result<KernelProjection> {
    check_dim("train_kernel: label rows", k.size(), y.n_samples())?;
    check_dim("train_kernel: laplacian size", k.size(), l.size())?;
    let b = solve_regularized(&k.k, y.matrix(), l.matrix(), lambda, eta)?;
    Ok(KernelProjection {
        b,
        hyper: Hyperparams {
            lambda,
            eta,
            gammas: Vec::new(),
        },
        spec: k.spec,
        train_features: k.train.clone(),
    })
}

/// `Tr(Bᵀ K L K B) + λ‖K B − Y‖² + η‖B‖²`, term by term.
pub fn kernel_objective(
    b: &Matrix,
    k: &GramMatrix,
    y: &ShiftedLabels,
    l: &Laplacian,
    lambda: f64,
    eta: f64,
) -> Result<Objective> {
    objective_for_design(b, &k.k, y.matrix(), l, lambda, eta)
}

/// `‖(K L K + λK² + ηI) B − λKY‖_F / (1 + ‖λKY‖_F)`.
pub fn kernel_stationarity_residual(
    b: &Matrix,
    k: &GramMatrix,
    y: &ShiftedLabels,
    l: &Laplacian,
    lambda: f64,
    eta: f64,
) -> Result<f64> {
    check_dim("kernel residual: B rows", k.size(), b.nrows())?;
    check_dim("kernel residual: label rows", k.size(), y.n_samples())?;
    check_dim("kernel residual: laplacian size", k.size(), l.size())?;
    Ok(residual_for_design(b, &k.k, y.matrix(), l.matrix(), lambda, eta))
}

/// Scores `𝐤(z)ᵀ B` for every test column `z`, with `𝐤(z)_i = k(z, x_i)`.
pub fn predict_kernel(model: &KernelProjection, z: &FeatureMatrix) -> Result<AttributeScores> {
    check_dim("predict_kernel: feature dimension", model.train_features.dim(), z.dim())?;
    let kz = model.spec.cross(z.matrix(), model.train_features.matrix());
    Ok(AttributeScores::from_scores(kz * &model.b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigenvalues;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn features(rows: usize, cols: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureMatrix::new(Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))).unwrap()
    }

    fn labels(n: usize, m: usize, seed: u64) -> ShiftedLabels {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ShiftedLabels::new(Matrix::from_fn(n, m, |_, _| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })).unwrap()
    }

    #[test]
    fn gram_examples() {
        let same = FeatureMatrix::new(Matrix::from_element(3, 4, 0.7)).unwrap();
        assert_eq!(gram(&same, KernelSpec::gaussian(0.3)).unwrap().matrix(), &Matrix::from_element(4, 4, 1.0));

        // ‖x1 − x2‖² = 2 = s
        let pair = FeatureMatrix::new(Matrix::from_column_slice(2, 2, &[0.0, 0.0, 1.0, 1.0])).unwrap();
        let k = gram(&pair, KernelSpec::cauchy(2.0)).unwrap();
        assert_eq!(k.matrix()[(0, 1)], 0.5);
        assert_eq!(k.matrix()[(0, 0)], 1.0);

        let ortho = FeatureMatrix::new(Matrix::identity(3, 3)).unwrap();
        assert_eq!(gram(&ortho, KernelSpec::linear()).unwrap().matrix(), &Matrix::identity(3, 3));
    }

    #[test]
    fn gram_rejects_bad_scale() {
        let x = features(2, 3, 0);
        assert!(matches!(gram(&x, KernelSpec::gaussian(0.0)), Err(Error::NonPositiveScale(_))));
        assert!(matches!(gram(&x, KernelSpec::cauchy(-2.0)), Err(Error::NonPositiveScale(_))));
        assert!(gram(&x, KernelSpec { family: KernelFamily::Linear, scale: -1.0 }).is_ok());
    }

    #[test]
    fn linear_gram_diagonal_is_squared_norm() {
        let x = features(4, 6, 5);
        let k = gram(&x, KernelSpec::linear()).unwrap();
        for i in 0..6 {
            let norm2: f64 = x.sample(i).iter().map(|v| v * v).sum();
            assert!((k.matrix()[(i, i)] - norm2).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_gram_shrinks_labels() {
        let x = FeatureMatrix::new(Matrix::identity(5, 5) * 100.0).unwrap();
        let k = gram(&x, KernelSpec::gaussian(1.0)).unwrap();
        assert_eq!(k.matrix(), &Matrix::identity(5, 5));
        let y = labels(5, 3, 1);
        let model = train_kernel(&k, &y, &Laplacian::zeros(5), 2.0, 0.5).unwrap();
        assert!((&model.b - y.matrix() * (2.0 / 2.5)).amax() < 1e-14);
    }

    #[test]
    fn fitted_values_approach_labels_as_eta_vanishes() {
        let x = features(3, 7, 2);
        let k = gram(&x, KernelSpec::gaussian(0.5)).unwrap();
        let y = labels(7, 2, 3);
        let mut previous = f64::INFINITY;
        for eta in [1e-2, 1e-4, 1e-6, 1e-8] {
            let model = train_kernel(&k, &y, &Laplacian::zeros(7), 1.0, eta).unwrap();
            let gap = (k.matrix() * &model.b - y.matrix()).amax();
            assert!(gap < previous);
            previous = gap;
        }
        assert!(previous < 1e-3);
    }

    #[test]
    fn training_point_reproduces_fitted_row() {
        let x = features(3, 9, 4);
        for spec in [KernelSpec::gaussian(0.8), KernelSpec::cauchy(0.8), KernelSpec::linear()] {
            let k = gram(&x, spec).unwrap();
            let y = labels(9, 2, 5);
            let model = train_kernel(&k, &y, &Laplacian::zeros(9), 1.0, 0.1).unwrap();
            let fitted = k.matrix() * &model.b;
            let out = predict_kernel(&model, &x.select_samples(&[4]).unwrap()).unwrap();
            assert!((out.scores.row(0) - fitted.row(4)).amax() <= 1e-10);
        }
    }

    #[test]
    fn far_test_point_scores_vanish() {
        let x = FeatureMatrix::new(Matrix::zeros(2, 4)).unwrap();
        let k = gram(&x, KernelSpec::gaussian(1.0)).unwrap();
        let model = KernelProjection {
            b: Matrix::from_element(4, 3, 1.0),
            hyper: Hyperparams {
                lambda: 1.0,
                eta: 1.0,
                gammas: vec![],
            },
            spec: k.spec(),
            train_features: x,
        };
        // distance² = 50 s
        let z = FeatureMatrix::new(Matrix::from_column_slice(2, 1, &[5.0, 5.0])).unwrap();
        let out = predict_kernel(&model, &z).unwrap();
        assert!(out.scores.amax() <= 1e-12);
        assert_eq!(out.signs, Matrix::from_element(1, 3, 1.0));
    }

    #[test]
    fn predict_kernel_checks_dimension() {
        let x = features(3, 4, 6);
        let k = gram(&x, KernelSpec::linear()).unwrap();
        let model = train_kernel(&k, &labels(4, 1, 7), &Laplacian::zeros(4), 1.0, 1.0).unwrap();
        assert!(predict_kernel(&model, &features(2, 1, 8)).is_err());
    }

    #[test]
    fn two_clusters_are_fitted_exactly_in_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Matrix::from_fn(2, 12, |i, j| if j < 6 { 3.0 } else { -3.0 } * (i as f64 + 1.0) + rng.gen_range(-0.3..0.3));
        let x = FeatureMatrix::new(x).unwrap();
        let y = ShiftedLabels::new(Matrix::from_fn(12, 2, |j, a| {
            let pos = (j < 6) == (a == 0);
            if pos { 1.0 } else { -1.0 }
        }))
        .unwrap();
        let k = gram(&x, KernelSpec::gaussian(2.0)).unwrap();
        let model = train_kernel(&k, &y, &Laplacian::zeros(12), 10.0, 1e-3).unwrap();
        let out = predict_kernel(&model, &x).unwrap();
        assert_eq!(&out.signs, y.matrix());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn gram_is_psd(seed in any::<u64>(), d in 1usize..5, n in 1usize..15, scale in 0.1f64..4.0) {
            let x = features(d, n, seed);
            for spec in [KernelSpec::gaussian(scale), KernelSpec::cauchy(scale), KernelSpec::linear()] {
                let k = gram(&x, spec).unwrap();
                prop_assert_eq!(k.matrix(), &k.matrix().transpose());
                prop_assert!(symmetric_eigenvalues(k.matrix())[0] >= -1e-8);
            }
        }

        #[test]
        fn kernel_stationarity(seed in any::<u64>(), n in 2usize..12, m in 1usize..4) {
            let x = features(3, n, seed);
            let k = gram(&x, KernelSpec::gaussian(1.0)).unwrap();
            let y = labels(n, m, seed ^ 1);
            let l = crate::laplacian::pairwise_class_graph_laplacian(&x, &vec![0; n], 1.0).unwrap();
            let model = train_kernel(&k, &y, &l, 1.0, 0.1).unwrap();
            prop_assert!(kernel_stationarity_residual(&model.b, &k, &y, &l, 1.0, 0.1).unwrap() <= 1e-8);
        }
    }
}
