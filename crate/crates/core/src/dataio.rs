//! Files: matrices (csv / binary), trained models, dataset bundles, and the
//! seeded synthetic dataset generator.
//!
//! Binary matrix layout (all little-endian):
//!
//! ```text
//! "HAPM" | u32 version = 1 | u64 rows | u64 cols | rows·cols f64, row-major
//! ```
//!
//! Model files start with a plain-text `key=value` header terminated by a
//! line `end`, followed by one or two binary matrices (B, then the training
//! features for kernel models).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hypergraph::IncidenceMatrix;
use crate::kernel::{predict_kernel, KernelFamily, KernelProjection, KernelSpec};
use crate::predictor::{predict, AttributeScores, FeatureMatrix, Hyperparams, ProjectionMatrix};
use crate::{Error, Matrix, Result};

pub const MATRIX_MAGIC: &[u8; 4] = b"HAPM";
pub const MATRIX_VERSION: u32 = 1;
pub const MODEL_MAGIC: &str = "HAPMODEL";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Binary,
}

/// Comma-separated rows of decimal floats. Lines starting with `#` and
/// blank lines are skipped.
pub fn parse_csv(text: &str) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            column: 1,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::RaggedRow {
                    line,
                    expected: w,
                    found: record.len(),
                })
            }
            _ => {}
        }
        for (col, field) in record.iter().enumerate() {
            values.push(field.parse::<f64>().map_err(|e| Error::Parse {
                line,
                column: col + 1,
                message: format!("'{field}': {e}"),
            })?);
        }
        rows += 1;
    }
    let Some(width) = width else {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "no data rows".into(),
        });
    };
    Ok(Matrix::from_row_iterator(rows, width, values))
}

/// Rows of comma-separated values. Floats use the shortest representation
/// that parses back to the same bits.
pub fn format_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            write!(out, "{}", m[(r, c)]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn encode_matrix(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * m.len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
    out
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, len: usize) -> Result<&'a [u8]> {
    let end = pos
        .checked_add(len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::CorruptFile(format!("truncated at byte {}", bytes.len())))?;
    let out = &bytes[*pos..end];
    *pos = end;
    Ok(out)
}

/// Decode one binary matrix starting at `*pos`, advancing it.
pub fn decode_matrix(bytes: &[u8], pos: &mut usize) -> Result<Matrix> {
    if take(bytes, pos, 4)? != MATRIX_MAGIC {
        return Err(Error::MagicMismatch);
    }
    let version = u32::from_le_bytes(take(bytes, pos, 4)?.try_into().unwrap());
    if version != MATRIX_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: MATRIX_VERSION,
        });
    }
    let rows = u64::from_le_bytes(take(bytes, pos, 8)?.try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(take(bytes, pos, 8)?.try_into().unwrap()) as usize;
    let len = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::CorruptFile("matrix size overflows".into()))?;
    let data = take(bytes, pos, len)?;
    Ok(Matrix::from_row_iterator(
        rows,
        cols,
        data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())),
    ))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<Matrix> {
    let bytes = read_bytes(path)?;
    match format {
        MatrixFormat::Binary => {
            let mut pos = 0;
            let m = decode_matrix(&bytes, &mut pos)?;
            if pos != bytes.len() {
                return Err(Error::CorruptFile(format!("{} trailing bytes", bytes.len() - pos)));
            }
            Ok(m)
        }
        MatrixFormat::Csv => {
            let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
                line: 1,
                column: 1,
                message: e.to_string(),
            })?;
            parse_csv(&text)
        }
    }
}

/// Binary if the file starts with the matrix magic, csv otherwise.
pub fn load_matrix_auto(path: &Path) -> Result<Matrix> {
    let bytes = read_bytes(path)?;
    let format = if bytes.starts_with(MATRIX_MAGIC) {
        MatrixFormat::Binary
    } else {
        MatrixFormat::Csv
    };
    load_matrix(path, format)
}

pub fn save_matrix(path: &Path, m: &Matrix, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Csv => write_bytes(path, format_csv(m).as_bytes()),
        MatrixFormat::Binary => write_bytes(path, &encode_matrix(m)),
    }
}

/// A trained predictor as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelArtifact {
    Linear(ProjectionMatrix),
    Kernel(KernelProjection),
}

impl ModelArtifact {
    pub fn coefficients(&self) -> &Matrix {
        match self {
            ModelArtifact::Linear(m) => &m.b,
            ModelArtifact::Kernel(m) => &m.b,
        }
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        match self {
            ModelArtifact::Linear(m) => &m.hyper,
            ModelArtifact::Kernel(m) => &m.hyper,
        }
    }

    pub fn predict(&self, z: &FeatureMatrix) -> Result<AttributeScores> {
        match self {
            ModelArtifact::Linear(m) => predict(m, z),
            ModelArtifact::Kernel(m) => predict_kernel(m, z),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let hyper = self.hyperparams();
        let mut header = String::new();
        writeln!(header, "{MODEL_MAGIC}").unwrap();
        writeln!(header, "version={MODEL_VERSION}").unwrap();
        let kind = match self {
            ModelArtifact::Linear(_) => "linear",
            ModelArtifact::Kernel(_) => "kernel",
        };
        writeln!(header, "kind={kind}").unwrap();
        writeln!(header, "lambda={}", hyper.lambda).unwrap();
        writeln!(header, "eta={}", hyper.eta).unwrap();
        let gammas: Vec<String> = hyper.gammas.iter().map(|g| g.to_string()).collect();
        writeln!(header, "gammas={}", gammas.join(",")).unwrap();
        if let ModelArtifact::Kernel(k) = self {
            writeln!(header, "kernel={}", k.spec.family).unwrap();
            writeln!(header, "kernel_scale={}", k.spec.scale).unwrap();
        }
        writeln!(header, "end").unwrap();
        let mut out = header.into_bytes();
        out.extend(encode_matrix(self.coefficients()));
        if let ModelArtifact::Kernel(k) = self {
            out.extend(encode_matrix(k.train_features.matrix()));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |msg: &str| Error::CorruptFile(msg.to_string());
        let mut pos = 0;
        let mut fields = std::collections::BTreeMap::new();
        let mut first = true;
        loop {
            let rest = &bytes[pos..];
            let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| corrupt("unterminated header"))?;
            let line = std::str::from_utf8(&rest[..nl]).map_err(|_| corrupt("header is not utf-8"))?;
            pos += nl + 1;
            if first {
                if line != MODEL_MAGIC {
                    return Err(Error::MagicMismatch);
                }
                first = false;
                continue;
            }
            if line == "end" {
                break;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| corrupt("header line without '='"))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| Error::CorruptFile(format!("missing header key '{k}'")));
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|_| Error::CorruptFile(format!("bad number for '{k}'")))
        };
        let version: u32 = get("version")?.parse().map_err(|_| corrupt("bad version"))?;
        if version != MODEL_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let gammas = get("gammas")?;
        let gammas = if gammas.is_empty() {
            Vec::new()
        } else {
            gammas
                .split(',')
                .map(|g| g.parse::<f64>().map_err(|_| corrupt("bad gamma")))
                .collect::<Result<_>>()?
        };
        let hyper = Hyperparams {
            lambda: num("lambda")?,
            eta: num("eta")?,
            gammas,
        };
        let b = decode_matrix(bytes, &mut pos)?;
        let artifact = match get("kind")?.as_str() {
            "linear" => ModelArtifact::Linear(ProjectionMatrix { b, hyper }),
            "kernel" => {
                let family: KernelFamily = get("kernel")?.parse().map_err(|_| corrupt("bad kernel family"))?;
                let spec = KernelSpec {
                    family,
                    scale: num("kernel_scale")?,
                };
                let train = decode_matrix(bytes, &mut pos)?;
                let train_features = FeatureMatrix::new(train).map_err(|_| corrupt("bad training features"))?;
                if train_features.n_samples() != b.nrows() {
                    return Err(corrupt("coefficient rows do not match training samples"));
                }
                ModelArtifact::Kernel(KernelProjection {
                    b,
                    hyper,
                    spec,
                    train_features,
                })
            }
            _ => return Err(corrupt("unknown model kind")),
        };
        if pos != bytes.len() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(artifact)
    }
}

pub fn save_model(path: &Path, model: &ModelArtifact) -> Result<()> {
    write_bytes(path, &model.to_bytes())
}

pub fn load_model(path: &Path) -> Result<ModelArtifact> {
    ModelArtifact::from_bytes(&read_bytes(path)?)
}

/// Features plus whatever annotations are available. Per-sample attribute
/// labels and per-class signatures are both optional; with only signatures
/// and class labels, per-sample labels are derived by expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub features: FeatureMatrix,
    pub attribute_labels: Option<IncidenceMatrix>,
    pub class_labels: Option<Vec<usize>>,
    /// c×m binary; row j is the signature of class id j.
    pub class_signatures: Option<Matrix>,
    pub attribute_names: Option<Vec<String>>,
    pub class_names: Option<Vec<String>>,
    /// Suggested unseen classes for zero-shot experiments.
    pub test_classes: Option<Vec<usize>>,
}

const FEATURES_FILE: &str = "features.csv";
const ATTRIBUTES_FILE: &str = "attributes.csv";
const CLASSES_FILE: &str = "classes.csv";
const SIGNATURES_FILE: &str = "signatures.csv";
const ATTRIBUTE_NAMES_FILE: &str = "attribute_names.txt";
const CLASS_NAMES_FILE: &str = "class_names.txt";
const TEST_CLASSES_FILE: &str = "test_classes.csv";

fn to_ids(m: &Matrix, what: &'static str) -> Result<Vec<usize>> {
    m.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::Parse {
                    line: i + 1,
                    column: 1,
                    message: format!("{what}: '{v}' is not a nonnegative integer id"),
                })
            }
        })
        .collect()
}

fn ids_to_matrix(ids: &[usize]) -> Matrix {
    Matrix::from_iterator(ids.len(), 1, ids.iter().map(|&i| i as f64))
}

pub fn load_class_ids(path: &Path) -> Result<Vec<usize>> {
    to_ids(&load_matrix_auto(path)?, "class id")
}

pub fn save_class_ids(path: &Path, ids: &[usize]) -> Result<()> {
    save_matrix(path, &ids_to_matrix(ids), MatrixFormat::Csv)
}

impl DatasetBundle {
    pub fn n_samples(&self) -> usize {
        self.features.n_samples()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_samples();
        if let Some(h) = &self.attribute_labels {
            crate::error::check_dim("bundle: attribute label rows", n, h.n_vertices())?;
        }
        if let Some(labels) = &self.class_labels {
            crate::error::check_dim("bundle: class labels", n, labels.len())?;
        }
        if let Some(sig) = &self.class_signatures {
            IncidenceMatrix::new(sig.clone())?;
            if let Some(h) = &self.attribute_labels {
                crate::error::check_dim("bundle: signature attributes", h.n_edges(), sig.ncols())?;
            }
            if let Some(labels) = &self.class_labels {
                if let Some(&bad) = labels.iter().find(|&&c| c >= sig.nrows()) {
                    return Err(Error::DimensionMismatch {
                        context: "bundle: class id beyond signature rows",
                        expected: sig.nrows(),
                        found: bad,
                    });
                }
            }
        }
        if let (Some(names), Some(m)) = (&self.attribute_names, self.n_attributes()) {
            crate::error::check_dim("bundle: attribute names", m, names.len())?;
        }
        Ok(())
    }

    pub fn n_attributes(&self) -> Option<usize> {
        self.attribute_labels
            .as_ref()
            .map(|h| h.n_edges())
            .or_else(|| self.class_signatures.as_ref().map(|s| s.ncols()))
    }

    /// Per-sample attribute labels, expanding class signatures when only
    /// those are present.
    pub fn per_sample_attributes(&self) -> Result<IncidenceMatrix> {
        if let Some(h) = &self.attribute_labels {
            return Ok(h.clone());
        }
        match (&self.class_signatures, &self.class_labels) {
            (Some(sig), Some(labels)) => IncidenceMatrix::new(sig.select_rows(labels)),
            _ => Err(Error::Config(
                "need per-sample attribute labels, or class signatures with class labels".into(),
            )),
        }
    }

    pub fn require_class_labels(&self) -> Result<&[usize]> {
        self.class_labels
            .as_deref()
            .ok_or_else(|| Error::Config("class labels (classes.csv) are required".into()))
    }

    /// Restrict to the given samples. Class-level data is kept as is.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self {
            features: self.features.select_samples(indices)?,
            attribute_labels: self
                .attribute_labels
                .as_ref()
                .map(|h| h.select_vertices(indices))
                .transpose()?,
            class_labels: self
                .class_labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            class_signatures: self.class_signatures.clone(),
            attribute_names: self.attribute_names.clone(),
            class_names: self.class_names.clone(),
            test_classes: self.test_classes.clone(),
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let optional = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        let features = FeatureMatrix::from_sample_rows(&load_matrix_auto(&dir.join(FEATURES_FILE))?)?;
        let attribute_labels = optional(ATTRIBUTES_FILE)
            .map(|p| load_matrix_auto(&p).and_then(IncidenceMatrix::new))
            .transpose()?;
        let class_labels = optional(CLASSES_FILE).map(|p| load_class_ids(&p)).transpose()?;
        let class_signatures = optional(SIGNATURES_FILE).map(|p| load_matrix_auto(&p)).transpose()?;
        let read_names = |p: std::path::PathBuf| -> Result<Vec<String>> {
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            Ok(text.lines().map(str::to_string).collect())
        };
        let attribute_names = optional(ATTRIBUTE_NAMES_FILE).map(read_names).transpose()?;
        let class_names = optional(CLASS_NAMES_FILE).map(read_names).transpose()?;
        let test_classes = optional(TEST_CLASSES_FILE).map(|p| load_class_ids(&p)).transpose()?;
        let bundle = Self {
            features,
            attribute_labels,
            class_labels,
            class_signatures,
            attribute_names,
            class_names,
            test_classes,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_matrix(&dir.join(FEATURES_FILE), &self.features.matrix().transpose(), MatrixFormat::Csv)?;
        if let Some(h) = &self.attribute_labels {
            save_matrix(&dir.join(ATTRIBUTES_FILE), h.matrix(), MatrixFormat::Csv)?;
        }
        if let Some(labels) = &self.class_labels {
            save_class_ids(&dir.join(CLASSES_FILE), labels)?;
        }
        if let Some(sig) = &self.class_signatures {
            save_matrix(&dir.join(SIGNATURES_FILE), sig, MatrixFormat::Csv)?;
        }
        let write_names = |name: &str, names: &[String]| {
            let p = dir.join(name);
            let mut text = names.join("\n");
            text.push('\n');
            fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        if let Some(names) = &self.attribute_names {
            write_names(ATTRIBUTE_NAMES_FILE, names)?;
        }
        if let Some(names) = &self.class_names {
            write_names(CLASS_NAMES_FILE, names)?;
        }
        if let Some(ids) = &self.test_classes {
            save_class_ids(&dir.join(TEST_CLASSES_FILE), ids)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub n_classes: usize,
    pub samples_per_class: usize,
    pub dim: usize,
    pub n_attributes: usize,
    pub separation: f64,
    /// How many of the last classes to mark as unseen test classes.
    pub unseen: usize,
}

const MAX_SIGNATURE_DRAWS: usize = 100_000;

/// Seeded Gaussian-cluster dataset with attribute structure.
///
/// Each class gets a distinct random binary signature `s_c`. Attribute `j`
/// owns a random direction `a_j` (entries N(0, 1/d)); the class center is
/// `separation · Σ_j a_j (2 s_cj − 1) / √m`, so centers scale linearly with
/// `separation` and attributes are linearly decodable from features. Each
/// sample is its class center plus unit Gaussian noise and carries its
/// class signature as attribute labels.
pub fn synth_generate(params: &SynthParams) -> Result<DatasetBundle> {
    let SynthParams {
        seed,
        n_classes,
        samples_per_class,
        dim,
        n_attributes: m,
        separation,
        unseen,
    } = *params;
    if n_classes == 0 || samples_per_class == 0 || dim == 0 || m == 0 {
        return Err(Error::InvalidCounts("all counts must be at least 1".into()));
    }
    if m < usize::BITS as usize && n_classes > (1usize << m) {
        return Err(Error::InvalidCounts(format!(
            "{n_classes} classes cannot have distinct signatures over {m} attributes"
        )));
    }
    if unseen > n_classes {
        return Err(Error::InvalidCounts("more unseen classes than classes".into()));
    }
    if !(separation >= 0.0) || !separation.is_finite() {
        return Err(Error::InvalidParameter {
            name: "separation",
            value: separation,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut signatures: Vec<Vec<bool>> = Vec::with_capacity(n_classes);
    let mut draws = 0;
    while signatures.len() < n_classes {
        draws += 1;
        if draws > MAX_SIGNATURE_DRAWS {
            return Err(Error::InvalidCounts("could not draw distinct signatures".into()));
        }
        let candidate: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.5)).collect();
        if !signatures.contains(&candidate) {
            signatures.push(candidate);
        }
    }
    let sig = Matrix::from_fn(n_classes, m, |c, j| signatures[c][j] as u8 as f64);

    let directions = Matrix::from_fn(dim, m, |_, _| rng.sample::<f64, _>(StandardNormal) / (dim as f64).sqrt());
    let signed = sig.map(|v| 2.0 * v - 1.0);
    let centers = (&directions * signed.transpose()) * (separation / (m as f64).sqrt());

    let n = n_classes * samples_per_class;
    let mut x = Matrix::zeros(dim, n);
    let mut class_labels = Vec::with_capacity(n);
    for c in 0..n_classes {
        for s in 0..samples_per_class {
            let i = c * samples_per_class + s;
            for r in 0..dim {
                x[(r, i)] = centers[(r, c)] + rng.sample::<f64, _>(StandardNormal);
            }
            class_labels.push(c);
        }
    }
    let attribute_labels = IncidenceMatrix::new(sig.select_rows(&class_labels))?;
    let bundle = DatasetBundle {
        features: FeatureMatrix::new(x)?,
        attribute_labels: Some(attribute_labels),
        class_labels: Some(class_labels),
        class_signatures: Some(sig),
        attribute_names: Some((0..m).map(|j| format!("attr{j}")).collect()),
        class_names: Some((0..n_classes).map(|c| format!("class{c}")).collect()),
        test_classes: (unseen > 0).then(|| (n_classes - unseen..n_classes).collect()),
    };
    bundle.validate()?;
    Ok(bundle)
}
