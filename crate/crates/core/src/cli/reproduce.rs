//! The full benchmark bundle: every shipped scenario plus the three sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::config::ExperimentConfig;
use super::csvio::{self, SummaryRow};
use crate::bench::{RepeatedResult, Runner, Scenario, SweepParam, SweepTable, TrainSource};
use crate::datagen::{ContaminationSpec, Family};
use crate::error::Result;

/// Contamination rate of the contaminated experiments.
pub const EPSILON: f64 = 0.49;

pub fn epsilon_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 * 0.05).collect()
}

pub fn distance_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 * 0.1).collect()
}

pub fn default_grid(param: SweepParam) -> Vec<f64> {
    match param {
        SweepParam::Epsilon => epsilon_grid(),
        SweepParam::DistanceX | SweepParam::DistanceY => distance_grid(),
    }
}

/// The named experiments, in run order.
pub fn experiments(base: &ExperimentConfig) -> Vec<(&'static str, ExperimentConfig)> {
    let contaminated = |family: Family, epsilon: f64| {
        base.with_train(TrainSource::Contaminated(ContaminationSpec {
            family,
            epsilon,
            ..base.contamination.clone()
        }))
    };
    let mut noiseless = contaminated(Family::NoContamination, 0.0);
    noiseless.scenario.curve.noise_sigma = 0.0;
    let mut edge = contaminated(Family::EdgeCorner, EPSILON);
    edge.scenario.kernel = Some(base.kernel.clone());
    edge.scenario.dbscan = Some(base.dbscan.clone());
    let curve = &base.scenario.curve;

    let mut out = vec![
        ("no_contamination_noisy", contaminated(Family::NoContamination, 0.0)),
        ("no_contamination_noiseless", noiseless),
        ("random", contaminated(Family::Random, EPSILON)),
        ("parallel_line", contaminated(Family::ParallelLine, EPSILON)),
        ("edge_corner", edge),
        ("begin", contaminated(Family::Begin, EPSILON)),
        ("middle", contaminated(Family::Middle, EPSILON)),
        ("end", contaminated(Family::End, EPSILON)),
        ("nonuniform_dense", base.with_train(TrainSource::NonUniform(base.nonuniform.dense()))),
        (
            "nonuniform_incomplete",
            base.with_train(TrainSource::NonUniform(base.nonuniform.incomplete(curve))),
        ),
    ];
    for (name, cfg) in &mut out {
        if *name != "edge_corner" {
            cfg.scenario.kernel = None;
            cfg.scenario.dbscan = None;
        }
    }
    out
}

/// Template every sweep starts from: EdgeCorner at the default rate.
pub fn sweep_template(base: &ExperimentConfig) -> ExperimentConfig {
    let mut cfg = base.with_train(TrainSource::Contaminated(ContaminationSpec {
        family: Family::EdgeCorner,
        epsilon: EPSILON,
        ..base.contamination.clone()
    }));
    cfg.scenario.kernel = None;
    cfg.scenario.dbscan = None;
    cfg
}

pub fn sweep_header(cfg: &ExperimentConfig, param: SweepParam, grid: &[f64]) -> String {
    let mut out = cfg.echo();
    let grid: Vec<String> = grid.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "# sweep.param = {}", param.name());
    let _ = writeln!(out, "# sweep.grid = {}", grid.join(","));
    out
}

pub fn run_sweep(runner: &Runner, cfg: &ExperimentConfig, param: SweepParam, grid: &[f64]) -> Result<SweepTable> {
    runner.sweep(&cfg.scenario, param, grid, cfg.trials, cfg.master_seed)
}

/// Everything `reproduce` computes, before anything touches the disk.
#[derive(Debug)]
pub struct Bundle {
    pub experiments: Vec<(String, std::result::Result<RepeatedResult, String>)>,
    pub sweeps: Vec<(SweepParam, std::result::Result<SweepTable, String>)>,
    /// File name → contents.
    pub files: BTreeMap<String, String>,
}

impl Bundle {
    pub fn experiment(&self, name: &str) -> Option<&RepeatedResult> {
        self.experiments.iter().find(|(n, _)| n == name)?.1.as_ref().ok()
    }

    pub fn sweep(&self, param: SweepParam) -> Option<&SweepTable> {
        self.sweeps.iter().find(|(p, _)| *p == param)?.1.as_ref().ok()
    }

    /// Names of experiments (and sweeps) that produced no result at all.
    pub fn failures(&self) -> Vec<String> {
        let exps = self.experiments.iter().filter(|(_, r)| r.is_err()).map(|(n, _)| n.clone());
        let sweeps = self
            .sweeps
            .iter()
            .filter(|(_, r)| r.is_err())
            .map(|(p, _)| format!("sweep_{}", p.name()));
        exps.chain(sweeps).collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, contents) in &self.files {
            csvio::write_file(&dir.join(name), contents)?;
        }
        Ok(())
    }
}

fn file_stem(param: SweepParam) -> String {
    format!("sweep_{}", param.name().replace('-', "_"))
}

pub fn reproduce(base: &ExperimentConfig, runner: &Runner) -> Bundle {
    let mut files = BTreeMap::new();
    let mut summary: Vec<SummaryRow> = Vec::new();
    let mut results = Vec::new();

    for (name, cfg) in experiments(base) {
        let outcome = runner.run_repeated(&cfg.scenario, cfg.trials, cfg.master_seed);
        let header = cfg.echo();
        match &outcome {
            Ok(r) => {
                files.insert(format!("{name}.csv"), csvio::trials_csv(&header, &r.trials));
                summary.extend(csvio::summary_rows(name, r));
            }
            Err(e) => {
                let header = format!("{header}# error = {e}\n");
                files.insert(format!("{name}.csv"), csvio::trials_csv(&header, &[]));
                summary.push((name.to_string(), None, None));
            }
        }
        results.push((name.to_string(), outcome.map_err(|e| e.to_string())));
    }

    let template = sweep_template(base);
    let mut sweeps = Vec::new();
    for param in [SweepParam::Epsilon, SweepParam::DistanceX, SweepParam::DistanceY] {
        let grid = default_grid(param);
        let outcome = run_sweep(runner, &template, param, &grid);
        let mut header = sweep_header(&template, param, &grid);
        let table = match &outcome {
            Ok(t) => t.clone(),
            Err(e) => {
                let _ = writeln!(header, "# error = {e}");
                SweepTable { param, rows: Vec::new() }
            }
        };
        files.insert(format!("{}.csv", file_stem(param)), csvio::sweep_csv(&header, &table));
        sweeps.push((param, outcome.map_err(|e| e.to_string())));
    }

    let mut header = base.echo();
    let _ = writeln!(header, "# contaminated experiments use epsilon = {EPSILON}");
    files.insert("summary.csv".into(), csvio::summary_csv(&header, &summary));

    Bundle {
        experiments: results,
        sweeps,
        files,
    }
}

/// Scenario of a named experiment (for callers that want to rerun one).
pub fn scenario(base: &ExperimentConfig, name: &str) -> Option<Scenario> {
    experiments(base)
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| c.scenario)
}
