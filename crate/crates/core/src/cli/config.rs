//! Flat `key = value` experiment configuration.
//!
//! Every key has a default; a config file or `--set` override may only
//! name known keys. The resolved document is echoed as `# key = value`
//! comment lines at the top of every output file.

use std::fmt::Write as _;
use std::path::Path;

use crate::bench::{KernelSetting, Scenario, TrainSource, TrimPolicy};
use crate::datagen::{ContaminationSpec, Family, NonUniformSpec, TrueCurve};
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::preprocess::DbscanConfig;
use crate::types::ModelConfig;

/// Keys in echo order.
pub const KEYS: &[&str] = &[
    "curve.coeffs",
    "curve.x_min",
    "curve.x_max",
    "curve.noise_sigma",
    "n_train",
    "n_test",
    "contamination.family",
    "contamination.epsilon",
    "contamination.offset_x_ratio",
    "contamination.offset_y_ratio",
    "contamination.spread",
    "nonuniform.case",
    "nonuniform.region_lo",
    "nonuniform.region_hi",
    "nonuniform.dense_fraction",
    "nonuniform.gap_center",
    "nonuniform.gap_fraction",
    "model.degree",
    "model.batch_size",
    "model.learning_rate",
    "model.max_iter",
    "model.convergence_tol",
    "model.trim_fraction",
    "model.huber_delta",
    "model.loss",
    "model.scale_x",
    "kernel.enabled",
    "kernel.width_fraction",
    "kernel.stride_fraction",
    "kernel.threshold_fraction",
    "kernel.strict_mode",
    "dbscan.enabled",
    "dbscan.radius",
    "dbscan.min_samples",
    "dbscan.min_clusters_to_act",
    "trials",
    "master_seed",
];

/// Non-uniform sampling settings kept even when the scenario is contaminated.
#[derive(Debug, Clone, PartialEq)]
pub struct NonUniformDefaults {
    pub region_lo: f64,
    pub region_hi: f64,
    pub dense_fraction: f64,
    pub gap_center: f64,
    pub gap_fraction: f64,
}

impl Default for NonUniformDefaults {
    fn default() -> Self {
        Self {
            region_lo: -0.5,
            region_hi: 0.0,
            dense_fraction: 0.6,
            gap_center: 0.5,
            gap_fraction: 0.1,
        }
    }
}

impl NonUniformDefaults {
    pub fn dense(&self) -> NonUniformSpec {
        NonUniformSpec::DenseRegion {
            region_lo: self.region_lo,
            region_hi: self.region_hi,
            dense_fraction: self.dense_fraction,
        }
    }

    pub fn incomplete(&self, curve: &TrueCurve) -> NonUniformSpec {
        NonUniformSpec::gap(curve, self.gap_center, self.gap_fraction)
    }
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Contamination settings; used by the scenario unless it is non-uniform.
    pub contamination: ContaminationSpec,
    pub nonuniform: NonUniformDefaults,
    pub kernel: KernelSetting,
    pub dbscan: DbscanConfig,
    pub trials: usize,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            contamination: ContaminationSpec::default(),
            nonuniform: NonUniformDefaults::default(),
            kernel: KernelSetting::default(),
            dbscan: DbscanConfig::default(),
            trials: 50,
            master_seed: 0,
        }
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parse a config document on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Apply every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        self.apply_pairs(pairs)
    }

    /// Apply a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("--set expects key=value, got `{assignment}`")))?;
        self.apply_pairs(vec![(k.trim().to_string(), v.trim().to_string())])
    }

    fn apply_pairs(&mut self, pairs: Vec<(String, String)>) -> Result<()> {
        let mut map = self.to_pairs();
        for (k, v) in pairs {
            match map.iter_mut().find(|(key, _)| *key == k) {
                Some(slot) => slot.1 = v,
                None => return Err(Error::InvalidConfig(format!("unknown config key `{k}`"))),
            }
        }
        *self = Self::from_pairs(&map)?;
        Ok(())
    }

    /// The resolved configuration as `(key, value)` in [`KEYS`] order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let s = &self.scenario;
        let m = &s.model;
        let c = &self.contamination;
        let nu = &self.nonuniform;
        let case = match &s.train {
            TrainSource::Contaminated(_) => "none",
            TrainSource::NonUniform(spec) => spec.name(),
        };
        let trim = match s.trim {
            TrimPolicy::MatchEpsilon => "auto".to_string(),
            TrimPolicy::Fixed(f) => f.to_string(),
        };
        let values = [
            join(&s.curve.coeffs),
            s.curve.x_min.to_string(),
            s.curve.x_max.to_string(),
            s.curve.noise_sigma.to_string(),
            s.n_train.to_string(),
            s.n_test.to_string(),
            c.family.name().to_string(),
            c.epsilon.to_string(),
            c.offset_x_ratio.to_string(),
            c.offset_y_ratio.to_string(),
            c.spread.to_string(),
            case.to_string(),
            nu.region_lo.to_string(),
            nu.region_hi.to_string(),
            nu.dense_fraction.to_string(),
            nu.gap_center.to_string(),
            nu.gap_fraction.to_string(),
            m.model_degree.to_string(),
            m.batch_size.to_string(),
            m.learning_rate.to_string(),
            m.max_iter.to_string(),
            m.convergence_tol.to_string(),
            trim,
            m.huber_delta.to_string(),
            m.loss_kind.name().to_string(),
            m.scale_x.to_string(),
            s.kernel.is_some().to_string(),
            self.kernel.width_fraction.to_string(),
            self.kernel.stride_fraction.to_string(),
            self.kernel.threshold_fraction.to_string(),
            self.kernel.strict_mode.to_string(),
            s.dbscan.is_some().to_string(),
            self.dbscan.radius.to_string(),
            self.dbscan.min_samples.to_string(),
            self.dbscan.min_clusters_to_act.to_string(),
            self.trials.to_string(),
            self.master_seed.to_string(),
        ];
        KEYS.iter()
            .zip(values)
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let get = |key: &str| -> &str {
            &pairs.iter().find(|(k, _)| k == key).expect("every key present").1
        };
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse::<T>()
                .map_err(|e| Error::InvalidConfig(format!("{key} = `{v}`: {e}")))
        }
        fn text<T: std::str::FromStr<Err = String>>(key: &str, v: &str) -> Result<T> {
            v.parse::<T>().map_err(|e| Error::InvalidConfig(format!("{key}: {e}")))
        }
        let f = |key: &str| num::<f64>(key, get(key));
        let u = |key: &str| num::<usize>(key, get(key));
        let b = |key: &str| num::<bool>(key, get(key));

        let coeffs = get("curve.coeffs")
            .split(',')
            .map(|v| num::<f64>("curve.coeffs", v.trim()))
            .collect::<Result<Vec<_>>>()?;
        let curve = TrueCurve {
            coeffs,
            x_min: f("curve.x_min")?,
            x_max: f("curve.x_max")?,
            noise_sigma: f("curve.noise_sigma")?,
        };
        let contamination = ContaminationSpec {
            family: text::<Family>("contamination.family", get("contamination.family"))?,
            epsilon: f("contamination.epsilon")?,
            offset_x_ratio: f("contamination.offset_x_ratio")?,
            offset_y_ratio: f("contamination.offset_y_ratio")?,
            spread: f("contamination.spread")?,
        };
        let nonuniform = NonUniformDefaults {
            region_lo: f("nonuniform.region_lo")?,
            region_hi: f("nonuniform.region_hi")?,
            dense_fraction: f("nonuniform.dense_fraction")?,
            gap_center: f("nonuniform.gap_center")?,
            gap_fraction: f("nonuniform.gap_fraction")?,
        };
        let train = match get("nonuniform.case") {
            "none" => TrainSource::Contaminated(contamination.clone()),
            "dense" => TrainSource::NonUniform(nonuniform.dense()),
            "incomplete" => TrainSource::NonUniform(nonuniform.incomplete(&curve)),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "nonuniform.case: unknown case `{other}` (expected none|dense|incomplete)"
                )))
            }
        };
        let trim = match get("model.trim_fraction") {
            "auto" => TrimPolicy::MatchEpsilon,
            v => TrimPolicy::Fixed(num::<f64>("model.trim_fraction", v)?),
        };
        let model = ModelConfig {
            model_degree: u("model.degree")?,
            batch_size: u("model.batch_size")?,
            learning_rate: f("model.learning_rate")?,
            max_iter: u("model.max_iter")?,
            convergence_tol: f("model.convergence_tol")?,
            trim_fraction: 0.0,
            huber_delta: f("model.huber_delta")?,
            loss_kind: text::<LossKind>("model.loss", get("model.loss"))?,
            scale_x: b("model.scale_x")?,
            seed: 0,
        };
        let kernel = KernelSetting {
            width_fraction: f("kernel.width_fraction")?,
            stride_fraction: f("kernel.stride_fraction")?,
            threshold_fraction: f("kernel.threshold_fraction")?,
            strict_mode: b("kernel.strict_mode")?,
        };
        let dbscan = DbscanConfig {
            radius: f("dbscan.radius")?,
            min_samples: u("dbscan.min_samples")?,
            min_clusters_to_act: u("dbscan.min_clusters_to_act")?,
        };
        let scenario = Scenario {
            curve,
            n_train: u("n_train")?,
            n_test: u("n_test")?,
            train,
            model,
            trim,
            kernel: b("kernel.enabled")?.then(|| kernel.clone()),
            dbscan: b("dbscan.enabled")?.then(|| dbscan.clone()),
        };
        scenario.validate()?;
        Ok(Self {
            scenario,
            contamination,
            nonuniform,
            kernel,
            dbscan,
            trials: u("trials")?,
            master_seed: num::<u64>("master_seed", get("master_seed"))?,
        })
    }

    /// `# key = value` lines for output headers.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_pairs() {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out
    }

    /// The same document without comment markers, loadable with `--config`.
    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// A copy whose scenario uses the given training source.
    pub fn with_train(&self, train: TrainSource) -> Self {
        let mut out = self.clone();
        if let TrainSource::Contaminated(spec) = &train {
            out.contamination = spec.clone();
        }
        out.scenario.train = train;
        out
    }
}
