//! Hypergraph-regularized attribute predictors.
//!
//! Samples are vertices of an attribute hypergraph whose incidence matrix is
//! the binary sample-by-attribute label matrix. Linear (and kernelized)
//! attribute classifiers are fitted in closed form by penalizing the
//! normalized hypergraph cut of their outputs, optionally together with
//! class-structure Laplacians. Predicted attribute confidences feed
//! zero-shot and N-shot classifiers.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`hypergraph`] | incidence matrices, degrees, heat-kernel hyperedge weights |
//! | [`laplacian`] | normalized hypergraph Laplacian, class graph Laplacian, combinations |
//! | [`predictor`] | linear training / prediction and the objective |
//! | [`kernel`] | Gram matrices, kernel training / prediction |
//! | [`zeroshot`] | sigmoid normalization, templates, DAP scoring, N-shot splits |
//! | [`evaluation`] | ROC AUC, class-averaged and absolute accuracy |
//! | [`dataio`] | matrix / model files, dataset bundles, synthetic data |
//! | [`cli`] | the `hap` command-line front end |

pub mod cli;
pub mod dataio;
pub mod error;
pub mod evaluation;
pub mod hypergraph;
pub mod kernel;
pub mod laplacian;
pub mod linalg;
pub mod predictor;
pub mod zeroshot;

pub use error::{Error, ErrorKind, Result};

/// Dense real matrix used throughout the crate (column-major).
pub type Matrix = nalgebra::DMatrix<f64>;
