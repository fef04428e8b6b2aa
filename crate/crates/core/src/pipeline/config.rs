//! Run configuration: a `key = value` text file with `#` comments, overridable
//! key by key from the command line. A `preset` key is applied before every
//! other key regardless of where it appears.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::{FeatureOptions, IntensitySource};
use crate::gravity::GravityParams;
use crate::raster::{AggregateOptions, BBox, CellReduction};
use crate::regress::{BayesParams, ForestParams, HarnessOptions, ModelSpec};
use crate::survey::TargetTransform;
use crate::walk::WalkParams;

/// Approximate extent of Tanzania.
pub const TANZANIA_BBOX: BBox = BBox { min_lon: 29.3, min_lat: -11.8, max_lon: 40.5, max_lat: -0.95 };

/// Approximate extent of Malawi.
pub const MALAWI_BBOX: BBox = BBox { min_lon: 32.6, min_lat: -17.2, max_lon: 36.0, max_lat: -9.3 };

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub label: String,
    pub rasters: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub rasters: Vec<PathBuf>,
    pub points: Option<PathBuf>,
    pub survey: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub label: String,

    pub bbox: BBox,
    pub grid_rows: Option<usize>,
    pub grid_cols: Option<usize>,
    pub aggregate: AggregateOptions,

    pub gravity: GravityParams,
    pub walk: WalkParams,
    pub features: FeatureOptions,
    pub write_walks: bool,

    pub bin_precision: f64,
    pub radius: f64,
    pub target: TargetTransform,

    pub models: Vec<String>,
    pub knn_k: usize,
    pub forest: ForestParams,
    pub bayes: BayesParams,
    pub n_splits: usize,
    pub train_frac: f64,
    pub standardize: bool,

    pub resolution: f64,
    pub overlap_threshold: f64,
    pub snapshots: Vec<Snapshot>,

    /// Master seed; every random stream in the run derives from it.
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            rasters: Vec::new(),
            points: None,
            survey: None,
            output_dir: PathBuf::from("out"),
            label: "main".to_string(),
            bbox: TANZANIA_BBOX,
            grid_rows: Some(50),
            grid_cols: Some(51),
            aggregate: AggregateOptions::default(),
            gravity: GravityParams::default(),
            walk: WalkParams::default(),
            features: FeatureOptions::default(),
            write_walks: false,
            bin_precision: 0.001,
            radius: 0.25,
            target: TargetTransform::Raw,
            models: ["lr", "brr", "knn", "rf"].iter().map(|s| s.to_string()).collect(),
            knn_k: 5,
            forest: ForestParams::default(),
            bayes: BayesParams::default(),
            n_splits: 100,
            train_frac: 0.5,
            standardize: false,
            resolution: 1.0,
            overlap_threshold: 0.3,
            snapshots: Vec::new(),
            seed: None,
        }
    }
}

/// Where a setting came from; relative paths resolve against `base`.
#[derive(Debug, Clone)]
pub struct Setting {
    pub key: String,
    pub value: String,
    pub base: PathBuf,
    pub origin: String,
}

fn parse_num<T: std::str::FromStr>(s: &Setting) -> Result<T> {
    s.value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::validation(format!("{}: `{}` has invalid value `{}`", s.origin, s.key, s.value)))
}

fn parse_bool(s: &Setting) -> Result<bool> {
    match s.value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::validation(format!("{}: `{}` expects a boolean, got `{}`", s.origin, s.key, s.value))),
    }
}

fn resolve(s: &Setting, raw: &str) -> PathBuf {
    let p = PathBuf::from(raw.trim());
    if p.is_absolute() {
        p
    } else {
        s.base.join(p)
    }
}

fn path_list(s: &Setting) -> Vec<PathBuf> {
    s.value.split(',').map(str::trim).filter(|t| !t.is_empty()).map(|t| resolve(s, t)).collect()
}

impl PipelineConfig {
    /// Reads `key = value` lines from a config file.
    pub fn read_settings(path: impl AsRef<Path>) -> Result<Vec<Setting>> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, format!("expected `key = value`, got `{line}`")))?;
            out.push(Setting {
                key: key.trim().to_string(),
                value: value.trim().to_string(),
                base: base.clone(),
                origin: format!("{}:{}", path.display(), i + 1),
            });
        }
        Ok(out)
    }

    /// Parses a `key=value` override given on the command line.
    pub fn override_setting(arg: &str) -> Result<Setting> {
        let (key, value) = arg
            .split_once('=')
            .ok_or_else(|| Error::validation(format!("override `{arg}` must look like key=value")))?;
        Ok(Setting {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            base: PathBuf::new(),
            origin: "command line".to_string(),
        })
    }

    /// Defaults, then any preset, then the remaining settings in order.
    pub fn from_settings(settings: &[Setting]) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        if let Some(p) = settings.iter().rev().find(|s| s.key == "preset") {
            cfg.apply_preset(&p.value)?;
        }
        for s in settings.iter().filter(|s| s.key != "preset") {
            cfg.apply(s)?;
        }
        Ok(cfg)
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        match name.trim() {
            "tanzania" => {
                self.bbox = TANZANIA_BBOX;
                self.grid_rows = Some(50);
                self.grid_cols = Some(51);
                self.gravity.tau = 5.0;
                self.gravity.k_rewire = 3;
            }
            "malawi" => {
                self.bbox = MALAWI_BBOX;
                self.grid_rows = None;
                self.grid_cols = None;
                self.gravity.tau = 2.0;
                self.gravity.k_rewire = 1;
            }
            other => return Err(Error::validation(format!("unknown preset `{other}` (expected tanzania or malawi)"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, s: &Setting) -> Result<()> {
        let key = s.key.as_str();
        if let Some(label) = key.strip_prefix("snapshot.") {
            if label.is_empty() {
                return Err(Error::validation(format!("{}: snapshot key needs a label", s.origin)));
            }
            let rasters = path_list(s);
            match self.snapshots.iter_mut().find(|x| x.label == label) {
                Some(x) => x.rasters = rasters,
                None => self.snapshots.push(Snapshot { label: label.to_string(), rasters }),
            }
            self.snapshots.sort_by(|a, b| a.label.cmp(&b.label));
            return Ok(());
        }
        match key {
            "preset" => self.apply_preset(&s.value)?,
            "rasters" => self.rasters = path_list(s),
            "points" => self.points = Some(resolve(s, &s.value)),
            "survey" => self.survey = Some(resolve(s, &s.value)),
            "output_dir" => self.output_dir = resolve(s, &s.value),
            "label" => self.label = s.value.clone(),
            "bbox" => {
                let v: Vec<f64> = s
                    .value
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::validation(format!("{}: bbox must be four numbers", s.origin)))?;
                if v.len() != 4 {
                    return Err(Error::validation(format!(
                        "{}: bbox must be min_lon,min_lat,max_lon,max_lat",
                        s.origin
                    )));
                }
                self.bbox = BBox::new(v[0], v[1], v[2], v[3])?;
            }
            "grid_rows" => self.grid_rows = Some(parse_num(s)?),
            "grid_cols" => self.grid_cols = Some(parse_num(s)?),
            "aggregation" => {
                self.aggregate.reduction = match s.value.as_str() {
                    "sum" => CellReduction::Sum,
                    "mean" => CellReduction::Mean,
                    _ => return Err(Error::validation(format!("{}: aggregation is sum or mean", s.origin))),
                }
            }
            "log_base" => {
                self.aggregate.log_base = match s.value.as_str() {
                    "e" => std::f64::consts::E,
                    _ => parse_num(s)?,
                }
            }
            "exponent" => self.gravity.exponent = parse_num(s)?,
            "tau" => self.gravity.tau = parse_num(s)?,
            "k_rewire" => self.gravity.k_rewire = parse_num(s)?,
            "p" => self.walk.return_p = parse_num(s)?,
            "q" => self.walk.in_out_q = parse_num(s)?,
            "walk_length" => self.walk.walk_length = parse_num(s)?,
            "walks_per_node" => self.walk.walks_per_node = parse_num(s)?,
            "write_walks" => self.write_walks = parse_bool(s)?,
            "intensity" => {
                self.features.source = match s.value.as_str() {
                    "log" => IntensitySource::Log,
                    "raw" => IntensitySource::Raw,
                    _ => return Err(Error::validation(format!("{}: intensity is log or raw", s.origin))),
                }
            }
            "include_origin" => self.features.include_origin = parse_bool(s)?,
            "bin_precision" => self.bin_precision = parse_num(s)?,
            "radius" => self.radius = parse_num(s)?,
            "target" => {
                self.target = match s.value.as_str() {
                    "raw" => TargetTransform::Raw,
                    "log" => TargetTransform::Log,
                    _ => return Err(Error::validation(format!("{}: target is raw or log", s.origin))),
                }
            }
            "models" => {
                self.models = s.value.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
            }
            "knn_k" => self.knn_k = parse_num(s)?,
            "rf_trees" => self.forest.n_trees = parse_num(s)?,
            "rf_max_depth" => self.forest.max_depth = parse_num(s)?,
            "rf_min_leaf" => self.forest.min_leaf = parse_num(s)?,
            "rf_mtry" => self.forest.m_try = Some(parse_num(s)?),
            "brr_max_iter" => self.bayes.max_iter = parse_num(s)?,
            "brr_tol" => self.bayes.tol = parse_num(s)?,
            "n_splits" => self.n_splits = parse_num(s)?,
            "train_frac" => self.train_frac = parse_num(s)?,
            "standardize" => self.standardize = parse_bool(s)?,
            "resolution" => self.resolution = parse_num(s)?,
            "overlap_threshold" => self.overlap_threshold = parse_num(s)?,
            "seed" => self.seed = Some(parse_num(s)?),
            other => return Err(Error::validation(format!("{}: unknown key `{other}`", s.origin))),
        }
        Ok(())
    }

    pub fn grid_shape(&self) -> Result<(usize, usize)> {
        match (self.grid_rows, self.grid_cols) {
            (Some(r), Some(c)) if r >= 1 && c >= 1 => Ok((r, c)),
            (Some(_), Some(_)) => Err(Error::validation("grid_rows and grid_cols must be >= 1")),
            _ => Err(Error::validation("grid_rows and grid_cols must be set (the malawi preset has no default)")),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::validation("`seed` must be set explicitly"))
    }

    pub fn walk_params(&self) -> Result<WalkParams> {
        Ok(WalkParams { seed: self.seed()?, ..self.walk })
    }

    pub fn harness_options(&self) -> Result<HarnessOptions> {
        Ok(HarnessOptions {
            n_splits: self.n_splits,
            train_frac: self.train_frac,
            seed: self.seed()?,
            standardize: self.standardize,
        })
    }

    pub fn model_specs(&self) -> Result<Vec<ModelSpec>> {
        self.models
            .iter()
            .map(|name| {
                Ok(match ModelSpec::from_name(name)? {
                    ModelSpec::Knn { .. } => ModelSpec::Knn { k: self.knn_k },
                    ModelSpec::RandomForest(_) => ModelSpec::RandomForest(self.forest.clone()),
                    ModelSpec::BayesianRidge(_) => ModelSpec::BayesianRidge(self.bayes.clone()),
                    other => other,
                })
            })
            .collect()
    }

    /// Checks every invariant that can be checked without touching the filesystem.
    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        let (rows, cols) = self.grid_shape()?;
        self.bbox.validate()?;
        if !(self.aggregate.log_base > 1.0) {
            return Err(Error::validation("log_base must exceed 1"));
        }
        self.gravity.validate(rows * cols)?;
        self.walk.validate()?;
        if self.rasters.is_empty() && self.points.is_none() {
            return Err(Error::validation("either `rasters` or `points` must be given"));
        }
        if !self.rasters.is_empty() && self.points.is_some() {
            return Err(Error::validation("`rasters` and `points` are mutually exclusive"));
        }
        if !(self.bin_precision > 0.0) {
            return Err(Error::validation("bin_precision must be > 0"));
        }
        if !(self.radius > 0.0) {
            return Err(Error::validation("radius must be > 0"));
        }
        let specs = self.model_specs()?;
        if specs.iter().any(|s| matches!(s, ModelSpec::Knn { k: 0 })) {
            return Err(Error::validation("knn_k must be >= 1"));
        }
        if self.forest.n_trees < 1 || self.forest.min_leaf < 1 {
            return Err(Error::validation("rf_trees and rf_min_leaf must be >= 1"));
        }
        if self.bayes.max_iter < 1 || !(self.bayes.tol > 0.0) {
            return Err(Error::validation("brr_max_iter must be >= 1 and brr_tol > 0"));
        }
        if self.n_splits < 1 || !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::validation("n_splits must be >= 1 and train_frac in (0, 1)"));
        }
        if !(self.resolution > 0.0) {
            return Err(Error::validation("resolution must be > 0"));
        }
        if !(self.overlap_threshold > 0.0 && self.overlap_threshold <= 1.0) {
            return Err(Error::validation("overlap_threshold must lie in (0, 1]"));
        }
        if self.snapshots.iter().any(|s| s.rasters.is_empty()) {
            return Err(Error::validation("every snapshot needs at least one raster"));
        }
        Ok(())
    }
}
