//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls the library's Laplacian or solver
//! code: graph terms are evaluated edge by edge, and minimizers come from
//! conjugate gradients on the objective's gradient.
#![allow(dead_code)]

use hap_core::hypergraph::IncidenceMatrix;
use hap_core::kernel::{gram, train_kernel, KernelSpec};
use hap_core::laplacian::{class_hypergraph_laplacian, combine, pairwise_class_graph_laplacian, Laplacian};
use hap_core::predictor::{attribute_laplacian, shift_labels, train_cshap, FeatureMatrix};
use hap_core::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn binary(rows: usize, cols: usize, p: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_bool(p) as u8 as f64)
}

pub fn sq_dist(x: &Matrix, i: usize, j: usize) -> f64 {
    (x.column(i) - x.column(j)).norm_squared()
}

/// Mean heat-kernel affinity over ordered pairs of distinct members of
/// each hyperedge; 0 for hyperedges with fewer than two members.
pub fn edge_weights(x: &Matrix, h: &Matrix, mu: f64) -> Vec<f64> {
    (0..h.ncols())
        .map(|e| {
            let members: Vec<usize> = (0..h.nrows()).filter(|&v| h[(v, e)] == 1.0).collect();
            let k = members.len();
            if k < 2 {
                return 0.0;
            }
            let mut sum = 0.0;
            for &a in &members {
                for &b in &members {
                    if a != b {
                        sum += (-sq_dist(x, a, b) / mu).exp();
                    }
                }
            }
            sum / (k * (k - 1)) as f64
        })
        .collect()
}

fn degrees(h: &Matrix, w: &[f64]) -> Vec<f64> {
    (0..h.nrows())
        .map(|v| (0..h.ncols()).map(|e| w[e] * h[(v, e)]).sum())
        .collect()
}

/// `½ Σ_e Σ_{u,v ∈ e} w(e)/δ(e) ‖f_u/√d(u) − f_v/√d(v)‖²`, with vertices of
/// zero degree contributing nothing.
pub fn hypergraph_loss(f: &Matrix, h: &Matrix, w: &[f64]) -> f64 {
    let d = degrees(h, w);
    let mut total = 0.0;
    for e in 0..h.ncols() {
        let members: Vec<usize> = (0..h.nrows()).filter(|&v| h[(v, e)] == 1.0).collect();
        if w[e] == 0.0 {
            continue;
        }
        let c = w[e] / members.len() as f64;
        for &u in &members {
            for &v in &members {
                let diff = f.row(u) / d[u].sqrt() - f.row(v) / d[v].sqrt();
                total += 0.5 * c * diff.norm_squared();
            }
        }
    }
    total
}

/// Half the gradient of [`hypergraph_loss`] with respect to `f`.
pub fn hypergraph_apply(f: &Matrix, h: &Matrix, w: &[f64]) -> Matrix {
    let d = degrees(h, w);
    let mut out = Matrix::zeros(f.nrows(), f.ncols());
    for e in 0..h.ncols() {
        if w[e] == 0.0 {
            continue;
        }
        let members: Vec<usize> = (0..h.nrows()).filter(|&v| h[(v, e)] == 1.0).collect();
        let c = w[e] / members.len() as f64;
        for &u in &members {
            for &v in &members {
                let diff = f.row(u) / d[u].sqrt() - f.row(v) / d[v].sqrt();
                let mut row = out.row_mut(u);
                row += diff * (c / d[u].sqrt());
            }
        }
    }
    out
}

/// Heat-kernel affinities between same-class samples.
pub fn class_affinity(x: &Matrix, labels: &[usize], mu: f64) -> Matrix {
    let n = labels.len();
    Matrix::from_fn(n, n, |i, j| {
        if i != j && labels[i] == labels[j] {
            (-sq_dist(x, i, j) / mu).exp()
        } else {
            0.0
        }
    })
}

/// `½ Σ_ij a_ij ‖f_i − f_j‖²`.
pub fn graph_loss(f: &Matrix, a: &Matrix) -> f64 {
    let mut total = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            total += 0.5 * a[(i, j)] * (f.row(i) - f.row(j)).norm_squared();
        }
    }
    total
}

pub fn graph_apply(f: &Matrix, a: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(f.nrows(), f.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)] != 0.0 {
                let mut row = out.row_mut(i);
                row += (f.row(i) - f.row(j)) * a[(i, j)];
            }
        }
    }
    out
}

pub fn class_incidence(labels: &[usize]) -> Matrix {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    Matrix::from_fn(labels.len(), classes.len(), |i, e| (labels[i] == classes[e]) as u8 as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Side {
    None,
    ClassHypergraph,
    ClassGraph,
}

/// A random training problem. `x` is d×n, `h` n×m binary.
#[derive(Debug, Clone)]
pub struct Instance {
    pub x: Matrix,
    pub h: Matrix,
    pub labels: Vec<usize>,
    pub mu: f64,
    pub lambda: f64,
    pub eta: f64,
    pub gamma: f64,
    pub side: Side,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng, max_d: usize, max_n: usize, max_m: usize) -> Self {
        let d = rng.gen_range(2..=max_d);
        let n = rng.gen_range(4..=max_n);
        let m = rng.gen_range(1..=max_m);
        let side = match rng.gen_range(0..3) {
            0 => Side::None,
            1 => Side::ClassHypergraph,
            _ => Side::ClassGraph,
        };
        Self {
            x: uniform(d, n, rng),
            h: binary(n, m, 0.5, rng),
            labels: (0..n).map(|_| rng.gen_range(0..3)).collect(),
            mu: rng.gen_range(0.3..3.0),
            lambda: rng.gen_range(0.1..2.0),
            eta: rng.gen_range(0.05..1.0),
            gamma: if side == Side::None { 0.0 } else { rng.gen_range(0.0..2.0) },
            side,
        }
    }

    pub fn y(&self) -> Matrix {
        self.h.map(|v| 2.0 * v - 1.0)
    }

    /// The combined relation operator `F ↦ L_W F`, built from edges.
    pub fn relation_apply(&self, f: &Matrix) -> Matrix {
        let w = edge_weights(&self.x, &self.h, self.mu);
        let mut out = hypergraph_apply(f, &self.h, &w);
        match self.side {
            Side::None => {}
            Side::ClassHypergraph => {
                let hc = class_incidence(&self.labels);
                let wc = edge_weights(&self.x, &hc, self.mu);
                out += hypergraph_apply(f, &hc, &wc) * self.gamma;
            }
            Side::ClassGraph => {
                out += graph_apply(f, &class_affinity(&self.x, &self.labels, self.mu)) * self.gamma;
            }
        }
        out
    }

    pub fn relation_loss(&self, f: &Matrix) -> f64 {
        let w = edge_weights(&self.x, &self.h, self.mu);
        let base = hypergraph_loss(f, &self.h, &w);
        base + match self.side {
            Side::None => 0.0,
            Side::ClassHypergraph => {
                let hc = class_incidence(&self.labels);
                self.gamma * hypergraph_loss(f, &hc, &edge_weights(&self.x, &hc, self.mu))
            }
            Side::ClassGraph => self.gamma * graph_loss(f, &class_affinity(&self.x, &self.labels, self.mu)),
        }
    }

    /// Objective with design matrix `g` (the features, or a Gram matrix):
    /// relation(gᵀB) + λ‖gᵀB − Y‖² + η‖B‖².
    pub fn objective(&self, g: &Matrix, b: &Matrix) -> f64 {
        let f = g.transpose() * b;
        self.relation_loss(&f) + self.lambda * (&f - self.y()).norm_squared() + self.eta * b.norm_squared()
    }

    /// Minimizer of [`Instance::objective`] by conjugate gradients, one
    /// column at a time.
    pub fn minimize(&self, g: &Matrix) -> Matrix {
        let y = self.y();
        let apply = |v: &Matrix| -> Matrix {
            let f = g.transpose() * v;
            g * (self.relation_apply(&f) + &f * self.lambda) + v * self.eta
        };
        let rhs = g * &y * self.lambda;
        conjugate_gradient(apply, &rhs)
    }
}

impl Instance {
    fn side_laplacian(&self, x: &FeatureMatrix) -> Option<Laplacian> {
        match self.side {
            Side::None => None,
            Side::ClassHypergraph => Some(class_hypergraph_laplacian(&self.labels, x, self.mu).unwrap()),
            Side::ClassGraph => Some(pairwise_class_graph_laplacian(x, &self.labels, self.mu).unwrap()),
        }
    }

    /// B from the library's closed-form linear trainer.
    pub fn library_linear(&self) -> Matrix {
        let x = FeatureMatrix::new(self.x.clone()).unwrap();
        let h = IncidenceMatrix::new(self.h.clone()).unwrap();
        let side = self.side_laplacian(&x);
        let extras: Vec<(&Laplacian, f64)> = side.iter().map(|l| (l, self.gamma)).collect();
        train_cshap(&x, &h, &extras, self.lambda, self.eta, self.mu).unwrap().b
    }

    /// B from the library's closed-form kernel trainer (Gaussian kernel).
    pub fn library_kernel(&self, scale: f64) -> Matrix {
        let x = FeatureMatrix::new(self.x.clone()).unwrap();
        let h = IncidenceMatrix::new(self.h.clone()).unwrap();
        let side = self.side_laplacian(&x);
        let extras: Vec<(&Laplacian, f64)> = side.iter().map(|l| (l, self.gamma)).collect();
        let l = combine(&attribute_laplacian(&x, &h, self.mu).unwrap(), &extras).unwrap();
        let k = gram(&x, KernelSpec::gaussian(scale)).unwrap();
        train_kernel(&k, &shift_labels(&h), &l, self.lambda, self.eta).unwrap().b
    }
}

/// Solve `A x = b` column by column for a symmetric positive definite
/// operator `A`, to a relative residual of 1e-14.
pub fn conjugate_gradient(apply: impl Fn(&Matrix) -> Matrix, rhs: &Matrix) -> Matrix {
    let (rows, cols) = rhs.shape();
    let mut solution = Matrix::zeros(rows, cols);
    for c in 0..cols {
        let b = Matrix::from_column_slice(rows, 1, rhs.column(c).as_slice());
        let tol = 1e-14 * b.norm().max(1e-300);
        let mut x = Matrix::zeros(rows, 1);
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr = r.norm_squared();
        for _ in 0..20 * rows + 100 {
            if rr.sqrt() <= tol {
                break;
            }
            let ap = apply(&p);
            let alpha = rr / p.dot(&ap);
            x += &p * alpha;
            r -= &ap * alpha;
            let new_rr = r.norm_squared();
            p = &r + &p * (new_rr / rr);
            rr = new_rr;
        }
        let r_exact = &b - apply(&x);
        assert!(
            r_exact.norm() <= 1e-10 * (1.0 + b.norm()),
            "conjugate gradients did not converge: {}",
            r_exact.norm()
        );
        solution.set_column(c, &x.column(0));
    }
    solution
}

pub fn gaussian_gram(x: &Matrix, scale: f64) -> Matrix {
    let n = x.ncols();
    Matrix::from_fn(n, n, |i, j| (-sq_dist(x, i, j) / scale).exp())
}

/// Largest entrywise absolute difference.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Pairwise-comparison AUC: P(score_pos > score_neg) + ½ P(equal).
pub fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}
