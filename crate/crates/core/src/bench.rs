//! Naive-vs-trimmed comparisons on synthetic scenarios.
//!
//! A trial is a pure function of `(Scenario, seed)`. Repeated runs use
//! `seed = master_seed + trial` and aggregate with sorted summation, so
//! results do not depend on the order in which trials finish.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::datagen::{contaminate, gen_nonuniform, gen_test, gen_true, ContaminationSpec, Contaminated, NonUniformSpec, TrueCurve};
use crate::error::{Error, Result};
use crate::optimizer::{fit, fit_pair, FitResult};
use crate::preprocess::{dbscan_trim, kernel_preprocess, DbscanConfig, KernelConfig};
use crate::types::{predict, Dataset, ModelConfig, ScaleParams, WeightVector};

/// Plain mean squared error on the (unscaled) test set.
pub fn mse(w: &WeightVector, scale: &ScaleParams, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset("mse needs test samples"));
    }
    let errors: Vec<f64> = test
        .iter()
        .map(|s| {
            let r = predict(w, scale.forward(s.x)) - s.y;
            r * r
        })
        .collect();
    Ok(sorted_sum(errors) / test.len() as f64)
}

fn sorted_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Where the training data come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainSource {
    Contaminated(ContaminationSpec),
    NonUniform(NonUniformSpec),
}

/// How the trimmed arm picks its trim fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrimPolicy {
    /// Trim the scenario's contamination rate (0 for non-uniform data).
    MatchEpsilon,
    Fixed(f64),
}

/// Kernel preprocessor settings relative to each training set's range.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSetting {
    /// Kernel width as a fraction of the axis range.
    pub width_fraction: f64,
    /// Stride as a fraction of the kernel width.
    pub stride_fraction: f64,
    pub threshold_fraction: f64,
    pub strict_mode: bool,
}

impl Default for KernelSetting {
    fn default() -> Self {
        Self {
            width_fraction: 0.1,
            stride_fraction: 0.5,
            threshold_fraction: 0.1,
            strict_mode: false,
        }
    }
}

impl KernelSetting {
    pub fn resolve(&self, data: &Dataset) -> KernelConfig {
        let span = |b: Option<(f64, f64)>| match b {
            Some((lo, hi)) if hi > lo => hi - lo,
            _ => 1.0,
        };
        let wx = span(data.x_bounds()) * self.width_fraction;
        let wy = span(data.y_bounds()) * self.width_fraction;
        KernelConfig {
            kernel_width_x: wx,
            kernel_width_y: wy,
            stride_x: wx * self.stride_fraction,
            stride_y: wy * self.stride_fraction,
            threshold_fraction: self.threshold_fraction,
            strict_mode: self.strict_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub curve: TrueCurve,
    pub n_train: usize,
    pub n_test: usize,
    pub train: TrainSource,
    pub model: ModelConfig,
    pub trim: TrimPolicy,
    pub kernel: Option<KernelSetting>,
    pub dbscan: Option<DbscanConfig>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            curve: TrueCurve::default(),
            n_train: 200,
            n_test: 500,
            train: TrainSource::Contaminated(ContaminationSpec::default()),
            model: ModelConfig::default(),
            trim: TrimPolicy::MatchEpsilon,
            kernel: None,
            dbscan: None,
        }
    }
}

impl Scenario {
    pub fn contaminated(spec: ContaminationSpec) -> Self {
        Self {
            train: TrainSource::Contaminated(spec),
            ..Default::default()
        }
    }

    pub fn nonuniform(spec: NonUniformSpec) -> Self {
        Self {
            train: TrainSource::NonUniform(spec),
            ..Default::default()
        }
    }

    /// Trim fraction the trimmed arm will use.
    pub fn trim_fraction(&self) -> f64 {
        match (self.trim, &self.train) {
            (TrimPolicy::Fixed(f), _) => f,
            (TrimPolicy::MatchEpsilon, TrainSource::Contaminated(spec)) => spec.epsilon,
            (TrimPolicy::MatchEpsilon, TrainSource::NonUniform(_)) => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.curve.validate()?;
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig("n_train and n_test must be positive".into()));
        }
        match &self.train {
            TrainSource::Contaminated(spec) => spec.validate()?,
            TrainSource::NonUniform(spec) => spec.validate(&self.curve)?,
        }
        if let Some(d) = &self.dbscan {
            d.validate()?;
        }
        ModelConfig {
            trim_fraction: self.trim_fraction(),
            ..self.model.clone()
        }
        .validate()
    }

    /// Generate the training set and the clean test set for `seed`.
    pub fn generate(&self, seed: u64) -> Result<(Contaminated, Dataset)> {
        let mut train_rng = stream(seed, 1);
        let train = match &self.train {
            TrainSource::Contaminated(spec) => {
                let clean = gen_true(self.n_train, &self.curve, &mut train_rng);
                contaminate(&clean, spec, &self.curve, &mut train_rng)?
            }
            TrainSource::NonUniform(spec) => Contaminated::clean(gen_nonuniform(
                self.n_train,
                &self.curve,
                spec,
                &mut train_rng,
            )?),
        };
        let test = gen_test(self.n_test, &self.curve, &mut stream(seed, 2));
        Ok((train, test))
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Outcome of one fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmResult {
    pub mse: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub type ArmOutcome = std::result::Result<ArmResult, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub naive: ArmOutcome,
    pub trimmed: ArmOutcome,
    pub trimmed_kernel: Option<ArmOutcome>,
    pub trimmed_dbscan: Option<ArmOutcome>,
}

impl TrialResult {
    pub fn mse_naive(&self) -> Option<f64> {
        self.naive.as_ref().ok().map(|a| a.mse)
    }

    pub fn mse_trimmed(&self) -> Option<f64> {
        self.trimmed.as_ref().ok().map(|a| a.mse)
    }

    pub fn mse_trimmed_kernel(&self) -> Option<f64> {
        self.trimmed_kernel.as_ref()?.as_ref().ok().map(|a| a.mse)
    }

    pub fn mse_trimmed_dbscan(&self) -> Option<f64> {
        self.trimmed_dbscan.as_ref()?.as_ref().ok().map(|a| a.mse)
    }
}

fn evaluate(fit: Result<FitResult>, test: &Dataset) -> ArmOutcome {
    let fit = fit.map_err(|e| e.to_string())?;
    let mse = mse(&fit.weights, &fit.scale, test).map_err(|e| e.to_string())?;
    if !mse.is_finite() {
        return Err(format!("non-finite test MSE {mse}"));
    }
    Ok(ArmResult {
        mse,
        converged: fit.trace.converged,
        iterations: fit.trace.iterations_run,
    })
}

/// Trimmed arm on a preprocessed training set. The batch shrinks to fit
/// when preprocessing leaves fewer samples than `batch_size`.
fn preprocessed_arm(data: Result<Dataset>, config: &ModelConfig, test: &Dataset) -> ArmOutcome {
    let data = data.map_err(|e| e.to_string())?;
    if data.is_empty() {
        return Err("preprocessing removed every sample".into());
    }
    let config = ModelConfig {
        batch_size: config.batch_size.min(data.len()),
        ..config.clone()
    };
    evaluate(fit(&data, &config), test)
}

/// One naive-vs-trimmed comparison. Fit failures are recorded per arm.
pub fn run_trial(scenario: &Scenario, seed: u64) -> Result<TrialResult> {
    scenario.validate()?;
    let (train, test) = scenario.generate(seed)?;
    let config = ModelConfig {
        trim_fraction: scenario.trim_fraction(),
        seed,
        ..scenario.model.clone()
    };
    let pair = fit_pair(&train.data, &config);
    let trimmed_kernel = scenario.kernel.as_ref().map(|k| {
        let data = kernel_preprocess(&train.data, &k.resolve(&train.data));
        preprocessed_arm(data, &config, &test)
    });
    let trimmed_dbscan = scenario
        .dbscan
        .as_ref()
        .map(|d| preprocessed_arm(dbscan_trim(&train.data, d), &config, &test));
    Ok(TrialResult {
        seed,
        naive: evaluate(pair.naive, &test),
        trimmed: evaluate(pair.trimmed, &test),
        trimmed_kernel,
        trimmed_dbscan,
    })
}

/// Summary of one MSE column over repeated trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub errors: usize,
}

impl ColumnStats {
    pub fn from_outcomes<I: IntoIterator<Item = Option<f64>>>(values: I) -> Self {
        let mut ok = Vec::new();
        let mut errors = 0;
        for v in values {
            match v {
                Some(v) => ok.push(v),
                None => errors += 1,
            }
        }
        ok.sort_by(f64::total_cmp);
        let count = ok.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
                count,
                errors,
            };
        }
        let mean = ok.iter().sum::<f64>() / count as f64;
        let mut sq: Vec<f64> = ok.iter().map(|v| (v - mean) * (v - mean)).collect();
        sq.sort_by(f64::total_cmp);
        let std = if count > 1 {
            (sq.iter().sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std,
            min: ok[0],
            max: ok[count - 1],
            count,
            errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedResult {
    pub naive: ColumnStats,
    pub trimmed: ColumnStats,
    pub trimmed_kernel: Option<ColumnStats>,
    pub trimmed_dbscan: Option<ColumnStats>,
    pub trials: Vec<TrialResult>,
}

impl RepeatedResult {
    pub fn from_trials(trials: Vec<TrialResult>) -> Result<Self> {
        let naive = ColumnStats::from_outcomes(trials.iter().map(TrialResult::mse_naive));
        let trimmed = ColumnStats::from_outcomes(trials.iter().map(TrialResult::mse_trimmed));
        if naive.count == 0 && trimmed.count == 0 {
            return Err(Error::AllTrialsFailed(trials.len()));
        }
        let optional = |get: fn(&TrialResult) -> Option<f64>, present: bool| {
            present.then(|| ColumnStats::from_outcomes(trials.iter().map(get)))
        };
        let has_kernel = trials.iter().any(|t| t.trimmed_kernel.is_some());
        let has_dbscan = trials.iter().any(|t| t.trimmed_dbscan.is_some());
        Ok(Self {
            trimmed_kernel: optional(TrialResult::mse_trimmed_kernel, has_kernel),
            trimmed_dbscan: optional(TrialResult::mse_trimmed_dbscan, has_dbscan),
            naive,
            trimmed,
            trials,
        })
    }

    /// `mean mse_trimmed / mean mse_naive`.
    pub fn ratio(&self) -> f64 {
        self.trimmed.mean / self.naive.mean
    }

    /// Trials in which both the naive and the trimmed arm succeeded.
    pub fn paired_count(&self) -> usize {
        self.trials
            .iter()
            .filter(|t| t.naive.is_ok() && t.trimmed.is_ok())
            .count()
    }
}

/// Trial scheduling. `threads == 0` runs trials sequentially on the caller.
#[derive(Debug, Clone, Copy, Default)]
pub struct Runner {
    pub threads: usize,
}

impl Runner {
    pub fn sequential() -> Self {
        Self { threads: 0 }
    }

    pub fn with_threads(threads: usize) -> Self {
        Self { threads }
    }

    fn map_seeds(&self, scenario: &Scenario, seeds: Vec<u64>) -> Result<Vec<TrialResult>> {
        if self.threads == 0 {
            return seeds.into_iter().map(|s| run_trial(scenario, s)).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| seeds.into_par_iter().map(|s| run_trial(scenario, s)).collect())
    }

    pub fn run_repeated(&self, scenario: &Scenario, trials: usize, master_seed: u64) -> Result<RepeatedResult> {
        if trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()));
        }
        scenario.validate()?;
        let seeds = (0..trials as u64).map(|i| master_seed.wrapping_add(i)).collect();
        RepeatedResult::from_trials(self.map_seeds(scenario, seeds)?)
    }

    pub fn sweep(
        &self,
        template: &Scenario,
        param: SweepParam,
        grid: &[f64],
        trials: usize,
        master_seed: u64,
    ) -> Result<SweepTable> {
        if grid.is_empty() {
            return Err(Error::InvalidConfig("sweep grid is empty".into()));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig("sweep grid must be strictly ascending".into()));
        }
        let mut rows = Vec::with_capacity(grid.len());
        for &value in grid {
            let scenario = param.apply(template, value)?;
            let result = match self.run_repeated(&scenario, trials, master_seed) {
                Ok(r) => r,
                Err(Error::AllTrialsFailed(_)) => {
                    let nan = ColumnStats::from_outcomes(std::iter::repeat_n(None, trials));
                    rows.push(SweepRow {
                        param_value: value,
                        trim_fraction: scenario.trim_fraction(),
                        naive: nan.clone(),
                        trimmed: nan,
                        trials: 0,
                        errors: trials,
                    });
                    continue;
                }
                Err(e) => return Err(e),
            };
            let paired = result.paired_count();
            rows.push(SweepRow {
                param_value: value,
                trim_fraction: scenario.trim_fraction(),
                naive: result.naive,
                trimmed: result.trimmed,
                trials: paired,
                errors: trials - paired,
            });
        }
        Ok(SweepTable { param, rows })
    }
}

/// Sequential [`Runner::run_repeated`].
pub fn run_repeated(scenario: &Scenario, trials: usize, master_seed: u64) -> Result<RepeatedResult> {
    Runner::sequential().run_repeated(scenario, trials, master_seed)
}

/// Sequential [`Runner::sweep`].
pub fn sweep(
    template: &Scenario,
    param: SweepParam,
    grid: &[f64],
    trials: usize,
    master_seed: u64,
) -> Result<SweepTable> {
    Runner::sequential().sweep(template, param, grid, trials, master_seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Epsilon,
    DistanceX,
    DistanceY,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Epsilon => "epsilon",
            SweepParam::DistanceX => "distance-x",
            SweepParam::DistanceY => "distance-y",
        }
    }

    /// `template` with the swept parameter set to `value`.
    pub fn apply(self, template: &Scenario, value: f64) -> Result<Scenario> {
        let TrainSource::Contaminated(spec) = &template.train else {
            return Err(Error::InvalidConfig(format!(
                "a {} sweep needs a contaminated scenario",
                self.name()
            )));
        };
        let mut spec = spec.clone();
        match self {
            SweepParam::Epsilon => spec.epsilon = value,
            SweepParam::DistanceX => spec.offset_x_ratio = value,
            SweepParam::DistanceY => spec.offset_y_ratio = value,
        }
        spec.validate()?;
        Ok(Scenario {
            train: TrainSource::Contaminated(spec),
            ..template.clone()
        })
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "epsilon" => Ok(SweepParam::Epsilon),
            "distance-x" => Ok(SweepParam::DistanceX),
            "distance-y" => Ok(SweepParam::DistanceY),
            other => Err(format!(
                "unknown sweep parameter `{other}` (expected epsilon|distance-x|distance-y)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param_value: f64,
    /// Trim fraction the trimmed arm used for this row.
    pub trim_fraction: f64,
    pub naive: ColumnStats,
    pub trimmed: ColumnStats,
    /// Trials in which both arms succeeded.
    pub trials: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.param_value).collect()
    }

    pub fn naive_means(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.naive.mean).collect()
    }

    pub fn trimmed_means(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.trimmed.mean).collect()
    }
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    pearson(&ranks(a), &ranks(b))
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
