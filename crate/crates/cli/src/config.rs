//! Run configuration: a flat key-value file plus command-line overrides
//! (flags win). The resolved configuration is hashed into every output file
//! so runs are traceable.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hpiconv_core::QuarterDate;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const OUT_DIR_ENV: &str = "HPICONV_OUT_DIR";

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub date_column: String,
    pub national: Option<String>,
    pub regions: Vec<String>,
    pub train_end: Option<QuarterDate>,
    pub sample_end: Option<QuarterDate>,
    pub horizons: Vec<usize>,
    pub max_ar: usize,
    pub max_ma: usize,
    pub confidence: Vec<f64>,
    pub seed: u64,
    pub reps: u32,
    pub critval_n: Vec<usize>,
    pub mtar_lags: usize,
    pub out: PathBuf,
    pub formats: BTreeSet<String>,
    pub critvals_file: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let out = std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out"));
        Self {
            data: None,
            date_column: "date".into(),
            national: None,
            regions: Vec::new(),
            train_end: None,
            sample_end: None,
            horizons: vec![1, 4, 8],
            max_ar: 4,
            max_ma: 4,
            confidence: vec![0.90, 0.95],
            seed: 42,
            reps: 50_000,
            critval_n: vec![100, 200],
            mtar_lags: 4,
            out,
            formats: ["csv", "json", "svg"].iter().map(|s| s.to_string()).collect(),
            critvals_file: None,
            scenario: None,
        }
    }
}

fn parse_list<T: std::str::FromStr>(raw: &str, key: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| anyhow::anyhow!("config key {key}: cannot parse {s:?}: {e}"))
        })
        .collect()
}

impl RunConfig {
    /// Parse a flat `key = value` file; `#` starts a comment.
    pub fn load_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {} is not `key = value`: {line:?}", lineno + 1);
            };
            cfg.set(key.trim(), value.trim())
                .with_context(|| format!("config line {}", lineno + 1))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data" => self.data = Some(PathBuf::from(value)),
            "date_column" => self.date_column = value.to_string(),
            "national" => self.national = Some(value.to_string()),
            "regions" => self.regions = parse_list(value, key)?,
            "train_end" => self.train_end = Some(value.parse::<QuarterDate>()?),
            "sample_end" => self.sample_end = Some(value.parse::<QuarterDate>()?),
            "horizons" => self.horizons = parse_list(value, key)?,
            "max_ar" => self.max_ar = value.parse()?,
            "max_ma" => self.max_ma = value.parse()?,
            "confidence" => self.confidence = parse_list(value, key)?,
            "seed" => self.seed = value.parse()?,
            "reps" => self.reps = value.parse()?,
            "critval_n" => self.critval_n = parse_list(value, key)?,
            "mtar_lags" => self.mtar_lags = value.parse()?,
            "out" => self.out = PathBuf::from(value),
            "formats" => {
                self.formats = parse_list::<String>(value, key)?.into_iter().collect()
            }
            "critvals_file" => self.critvals_file = Some(PathBuf::from(value)),
            "scenario" => self.scenario = Some(PathBuf::from(value)),
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            bail!("horizons must be positive");
        }
        if self.reps < 1_000 {
            bail!("reps must be at least 1000, got {}", self.reps);
        }
        for c in &self.confidence {
            if !(*c > 0.0 && *c < 1.0) {
                bail!("confidence levels must lie in (0, 1), got {c}");
            }
        }
        for f in &self.formats {
            if !matches!(f.as_str(), "csv" | "json" | "svg") {
                bail!("unknown format {f:?} (expected csv, json, svg)");
            }
        }
        if self.critval_n.is_empty() {
            bail!("critval_n must list at least one sample size");
        }
        Ok(())
    }

    pub fn wants(&self, format: &str) -> bool {
        self.formats.contains(format)
    }

    /// First 16 hex digits of the SHA-256 over the semantic parameters.
    /// File locations (data, out, critvals_file, scenario) are excluded so
    /// the hash identifies the run settings, not where files happen to live.
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Semantic<'a> {
            date_column: &'a str,
            national: &'a Option<String>,
            regions: &'a [String],
            train_end: &'a Option<QuarterDate>,
            sample_end: &'a Option<QuarterDate>,
            horizons: &'a [usize],
            max_ar: usize,
            max_ma: usize,
            confidence: &'a [f64],
            seed: u64,
            reps: u32,
            critval_n: &'a [usize],
            mtar_lags: usize,
            formats: &'a BTreeSet<String>,
        }
        let view = Semantic {
            date_column: &self.date_column,
            national: &self.national,
            regions: &self.regions,
            train_end: &self.train_end,
            sample_end: &self.sample_end,
            horizons: &self.horizons,
            max_ar: self.max_ar,
            max_ma: self.max_ma,
            confidence: &self.confidence,
            seed: self.seed,
            reps: self.reps,
            critval_n: &self.critval_n,
            mtar_lags: self.mtar_lags,
            formats: &self.formats,
        };
        let json = serde_json::to_string(&view).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn require_data(&self) -> Result<&PathBuf> {
        self.data
            .as_ref()
            .context("no data file given (use --data or the `data` config key)")
    }

    pub fn require_national(&self) -> Result<&String> {
        self.national
            .as_ref()
            .context("no national column given (use --national)")
    }

    pub fn require_regions(&self) -> Result<&[String]> {
        if self.regions.is_empty() {
            bail!("no regional columns given (use --regions)");
        }
        Ok(&self.regions)
    }

    pub fn require_train_end(&self) -> Result<QuarterDate> {
        self.train_end
            .context("no training cutoff given (use --train-end)")
    }

    /// Confidence level used for encompassing verdicts: the highest
    /// configured level (0.95 under the default configuration).
    pub fn verdict_confidence(&self) -> f64 {
        self.confidence
            .iter()
            .copied()
            .fold(f64::NAN, f64::max)
            .min(0.999)
    }
}
