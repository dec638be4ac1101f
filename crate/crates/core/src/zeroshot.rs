//! From attribute confidences to class decisions.
//!
//! Raw scores are squashed to (0, 1) with a scaled logistic, then matched
//! either against per-class attribute templates (nearest template in squared
//! Euclidean distance) or scored DAP-style against binary class signatures.
//! All ties go to the lowest class index.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::check_dim;
use crate::{Error, Matrix, Result};

/// Logistic-normalized confidences `R = 1 / (1 + exp(−S/ρ))`, k×m.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedConfidences {
    pub values: Matrix,
    pub rho: f64,
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_normalize(scores: &Matrix, rho: f64) -> Result<NormalizedConfidences> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::NonPositiveRho(rho));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("attribute scores"));
    }
    Ok(NormalizedConfidences {
        values: scores.map(|s| logistic(s / rho)),
        rho,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateSource {
    PerSampleMean,
    ClassSignature,
}

/// One attribute template per class (c×m, entries in [0, 1]).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTemplateSet {
    pub templates: Matrix,
    pub class_ids: Vec<usize>,
    pub source: TemplateSource,
}

impl ClassTemplateSet {
    /// Use class-attribute signatures (row j for `class_ids[j]`) as templates.
    pub fn from_signatures(signatures: &Matrix, class_ids: Vec<usize>) -> Result<Self> {
        check_dim("templates: signature rows", class_ids.len(), signatures.nrows())?;
        if class_ids.is_empty() {
            return Err(Error::EmptyInput("class templates"));
        }
        if let Some(&value) = signatures.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter {
                name: "template entry",
                value,
            });
        }
        Ok(Self {
            templates: signatures.clone(),
            class_ids,
            source: TemplateSource::ClassSignature,
        })
    }
}

/// Template of each class in `classes` = mean of the rows of `rows` whose
/// label is that class.
pub fn build_templates_from_samples(rows: &Matrix, class_labels: &[usize], classes: &[usize]) -> Result<ClassTemplateSet> {
    check_dim("templates: labels", rows.nrows(), class_labels.len())?;
    if classes.is_empty() {
        return Err(Error::EmptyInput("class templates"));
    }
    let mut templates = Matrix::zeros(classes.len(), rows.ncols());
    for (c, &class) in classes.iter().enumerate() {
        let members: Vec<usize> = (0..class_labels.len()).filter(|&i| class_labels[i] == class).collect();
        if members.is_empty() {
            return Err(Error::EmptyClass(class));
        }
        let mut sum = nalgebra::RowDVector::zeros(rows.ncols());
        for &i in &members {
            sum += rows.row(i);
        }
        templates.set_row(c, &(sum / members.len() as f64));
    }
    Ok(ClassTemplateSet {
        templates,
        class_ids: classes.to_vec(),
        source: TemplateSource::PerSampleMean,
    })
}

/// Per-sample class decisions with the score row they were taken from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecision {
    pub predicted: Vec<usize>,
    /// k×c: squared distances (template) or log posteriors (DAP).
    pub scores: Matrix,
    pub class_ids: Vec<usize>,
}

fn decide(scores: Matrix, class_ids: &[usize], better: impl Fn(f64, f64) -> bool) -> ClassDecision {
    let predicted = (0..scores.nrows())
        .map(|i| {
            let mut best = 0;
            for c in 1..scores.ncols() {
                if better(scores[(i, c)], scores[(i, best)]) {
                    best = c;
                }
            }
            class_ids[best]
        })
        .collect();
    ClassDecision {
        predicted,
        scores,
        class_ids: class_ids.to_vec(),
    }
}

/// Nearest template in squared Euclidean distance.
pub fn template_classify(r: &Matrix, templates: &ClassTemplateSet) -> Result<ClassDecision> {
    check_dim("template_classify: attributes", templates.templates.ncols(), r.ncols())?;
    if templates.class_ids.is_empty() {
        return Err(Error::EmptyInput("class templates"));
    }
    let c = templates.templates.nrows();
    let scores = Matrix::from_fn(r.nrows(), c, |i, j| (r.row(i) - templates.templates.row(j)).norm_squared());
    Ok(decide(scores, &templates.class_ids, |a, b| a < b))
}

/// DAP attribute priors: per-attribute mean over the training-class
/// signatures, clamped to [0.05, 0.95].
pub fn dap_priors(train_signatures: &Matrix) -> Vec<f64> {
    (0..train_signatures.ncols())
        .map(|j| train_signatures.column(j).mean().clamp(0.05, 0.95))
        .collect()
}

/// DAP posterior with a uniform class prior, in log space:
/// `Σ_j ln q_j − ln p_j` with `q_j = R_j` / `1 − R_j` and `p_j = prior_j` /
/// `1 − prior_j` depending on the class signature bit.
pub fn dap_classify(r: &Matrix, signatures: &Matrix, class_ids: &[usize], priors: &[f64]) -> Result<ClassDecision> {
    check_dim("dap_classify: attributes", signatures.ncols(), r.ncols())?;
    check_dim("dap_classify: priors", signatures.ncols(), priors.len())?;
    check_dim("dap_classify: class ids", signatures.nrows(), class_ids.len())?;
    if class_ids.is_empty() {
        return Err(Error::EmptyInput("class signatures"));
    }
    for (index, &value) in priors.iter().enumerate() {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::PriorOutOfRange { index, value });
        }
    }
    if let Some((idx, &value)) = signatures.iter().enumerate().find(|(_, v)| **v != 0.0 && **v != 1.0) {
        return Err(Error::NonBinaryEntry {
            row: idx % signatures.nrows(),
            col: idx / signatures.nrows(),
            value,
        });
    }
    let scores = Matrix::from_fn(r.nrows(), signatures.nrows(), |i, c| {
        (0..r.ncols())
            .map(|j| {
                if signatures[(c, j)] == 1.0 {
                    r[(i, j)].ln() - priors[j].ln()
                } else {
                    (1.0 - r[(i, j)]).ln() - (1.0 - priors[j]).ln()
                }
            })
            .sum()
    });
    Ok(decide(scores, class_ids, |a, b| a > b))
}

/// Sample indices on each side of a train/test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Move `n_shot` seeded-random samples of every test class from the test
/// side to the training side. `n_shot = 0` returns the split unchanged.
pub fn nshot_augment(
    split: &Split,
    class_labels: &[usize],
    test_classes: &[usize],
    n_shot: usize,
    seed: u64,
) -> Result<Split> {
    if n_shot == 0 {
        return Ok(split.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut moved = Vec::new();
    for &class in test_classes {
        let mut candidates: Vec<usize> = split.test.iter().copied().filter(|&i| class_labels[i] == class).collect();
        if candidates.len() <= n_shot {
            return Err(Error::InsufficientSamples {
                class,
                available: candidates.len(),
                requested: n_shot,
            });
        }
        candidates.shuffle(&mut rng);
        let mut chosen = candidates[..n_shot].to_vec();
        chosen.sort_unstable();
        moved.extend(chosen);
    }
    let mut train = split.train.clone();
    train.extend(&moved);
    let test = split.test.iter().copied().filter(|i| !moved.contains(i)).collect();
    Ok(Split { train, test })
}

/// Keep a seeded random fraction (at least one) of `indices`, preserving
/// their order. `fraction >= 1` keeps everything.
pub fn subsample(indices: &[usize], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0) || !fraction.is_finite() {
        return Err(Error::InvalidParameter {
            name: "subsample fraction",
            value: fraction,
        });
    }
    if fraction >= 1.0 || indices.is_empty() {
        return Ok(indices.to_vec());
    }
    let keep = ((indices.len() as f64 * fraction).round() as usize).max(1);
    let mut positions: Vec<usize> = (0..indices.len()).collect();
    positions.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    positions.truncate(keep);
    positions.sort_unstable();
    Ok(positions.into_iter().map(|p| indices[p]).collect())
}
