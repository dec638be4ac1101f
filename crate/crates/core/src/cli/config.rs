//! Run configuration: command-line flags layered over an optional
//! `key = value` file. Flags win.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};

use crate::kernel::{KernelFamily, KernelSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Hap,
    CshapH,
    CshapG,
    Khap,
    KcshapH,
    KcshapG,
}

impl Mode {
    pub fn is_kernel(self) -> bool {
        matches!(self, Mode::Khap | Mode::KcshapH | Mode::KcshapG)
    }

    pub fn side_information(self) -> Option<SideInfo> {
        match self {
            Mode::CshapH | Mode::KcshapH => Some(SideInfo::ClassHypergraph),
            Mode::CshapG | Mode::KcshapG => Some(SideInfo::ClassGraph),
            Mode::Hap | Mode::Khap => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Hap => "hap",
            Mode::CshapH => "cshap_h",
            Mode::CshapG => "cshap_g",
            Mode::Khap => "khap",
            Mode::KcshapH => "kcshap_h",
            Mode::KcshapG => "kcshap_g",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideInfo {
    ClassHypergraph,
    ClassGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Classifier {
    Template,
    Dap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DapPrior {
    /// Mean over training-class signatures, clamped to [0.05, 0.95].
    Empirical,
    /// 0.5 for every attribute.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Cauchy,
    Linear,
}

impl From<KernelArg> for KernelFamily {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Gaussian => KernelFamily::Gaussian,
            KernelArg::Cauchy => KernelFamily::Cauchy,
            KernelArg::Linear => KernelFamily::Linear,
        }
    }
}

/// Flags shared by the training and experiment commands.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// `key = value` file; keys are flag names without the leading dashes
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset bundle directory
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Heat-kernel bandwidth (default: mean squared pairwise distance)
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Kernel scale (default: mean squared pairwise distance)
    #[arg(long, allow_hyphen_values = true)]
    pub kernel_scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub classifier: Option<Classifier>,
    #[arg(long)]
    pub n_shot: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub subsample_frac: Option<f64>,
    #[arg(long, value_enum)]
    pub dap_prior: Option<DapPrior>,
    /// Comma-separated training class ids (default: all non-test classes)
    #[arg(long, value_delimiter = ',')]
    pub train_classes: Option<Vec<usize>>,
    /// Comma-separated unseen class ids (default: the bundle's test_classes.csv)
    #[arg(long, value_delimiter = ',')]
    pub test_classes: Option<Vec<usize>>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mode: Mode,
    /// `None` means "derive from the training features".
    pub mu: Option<f64>,
    pub lambda: f64,
    pub eta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub kernel: KernelFamily,
    pub kernel_scale: Option<f64>,
    pub seed: u64,
    pub classifier: Classifier,
    pub n_shot: usize,
    pub subsample_frac: f64,
    pub dap_prior: DapPrior,
    pub train_classes: Option<Vec<usize>>,
    pub test_classes: Option<Vec<usize>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            out: None,
            mode: Mode::Hap,
            mu: None,
            lambda: 1.0,
            eta: 0.1,
            gamma: 0.1,
            rho: 0.1,
            kernel: KernelFamily::Gaussian,
            kernel_scale: None,
            seed: 0,
            classifier: Classifier::Template,
            n_shot: 0,
            subsample_frac: 1.0,
            dap_prior: DapPrior::Empirical,
            train_classes: None,
            test_classes: None,
        }
    }
}

/// Parse a `key = value` file. Blank lines and lines starting with `#` are
/// skipped; dashes in keys are read as underscores.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected 'key = value'", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("config line {}: duplicate key '{key}'", i + 1)));
        }
    }
    Ok(map)
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("config key '{key}': cannot parse '{raw}'")))
}

fn parse_enum<T: ValueEnum>(key: &str, raw: &str) -> Result<T> {
    T::from_str(raw, true).map_err(|_| Error::Config(format!("config key '{key}': unknown value '{raw}'")))
}

fn parse_ids(key: &str, raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_value(key, s.trim()))
        .collect()
}

struct Layer {
    file: BTreeMap<String, String>,
}

impl Layer {
    fn get<T>(&mut self, key: &str, flag: Option<T>, parse: impl Fn(&str, &str) -> Result<T>) -> Result<Option<T>> {
        let from_file = self.file.remove(key);
        match flag {
            Some(v) => Ok(Some(v)),
            None => from_file.map(|raw| parse(key, &raw)).transpose(),
        }
    }
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        Self::resolve_with(args, file)
    }

    pub fn resolve_with(args: &CommonArgs, file: BTreeMap<String, String>) -> Result<Self> {
        let mut layer = Layer { file };
        let d = RunConfig::default();
        let path = |_: &str, raw: &str| Ok(PathBuf::from(raw));
        let cfg = RunConfig {
            data: layer.get("data", args.data.clone(), path)?,
            out: layer.get("out", args.out.clone(), path)?,
            mode: layer.get("mode", args.mode, parse_enum)?.unwrap_or(d.mode),
            mu: layer.get("mu", args.mu, parse_value)?,
            lambda: layer.get("lambda", args.lambda, parse_value)?.unwrap_or(d.lambda),
            eta: layer.get("eta", args.eta, parse_value)?.unwrap_or(d.eta),
            gamma: layer.get("gamma", args.gamma, parse_value)?.unwrap_or(d.gamma),
            rho: layer.get("rho", args.rho, parse_value)?.unwrap_or(d.rho),
            kernel: layer
                .get("kernel", args.kernel, parse_enum)?
                .map(KernelFamily::from)
                .unwrap_or(d.kernel),
            kernel_scale: layer.get("kernel_scale", args.kernel_scale, parse_value)?,
            seed: layer.get("seed", args.seed, parse_value)?.unwrap_or(d.seed),
            classifier: layer.get("classifier", args.classifier, parse_enum)?.unwrap_or(d.classifier),
            n_shot: layer.get("n_shot", args.n_shot, parse_value)?.unwrap_or(d.n_shot),
            subsample_frac: layer
                .get("subsample_frac", args.subsample_frac, parse_value)?
                .unwrap_or(d.subsample_frac),
            dap_prior: layer.get("dap_prior", args.dap_prior, parse_enum)?.unwrap_or(d.dap_prior),
            train_classes: layer.get("train_classes", args.train_classes.clone(), parse_ids)?,
            test_classes: layer.get("test_classes", args.test_classes.clone(), parse_ids)?,
        };
        if let Some(key) = layer.file.keys().next() {
            return Err(Error::Config(format!("unknown config key '{key}'")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, value })
            }
        };
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::NonPositiveBandwidth(mu));
            }
        }
        positive("lambda", self.lambda)?;
        positive("eta", self.eta)?;
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::NegativeGamma(self.gamma));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::NonPositiveRho(self.rho));
        }
        if let Some(scale) = self.kernel_scale {
            KernelSpec {
                family: self.kernel,
                scale,
            }
            .validate()?;
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::NonPositiveScale(scale));
            }
        }
        if !(self.subsample_frac > 0.0 && self.subsample_frac <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "subsample_frac",
                value: self.subsample_frac,
            });
        }
        Ok(())
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("an output directory (--out) is required".into()))
    }

    pub fn data_dir(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| Error::Config("a dataset directory (--data) is required".into()))
    }
}
