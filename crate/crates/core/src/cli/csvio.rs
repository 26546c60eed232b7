//! CSV and text serialization for datasets, fits and benchmark results.
//!
//! Reals are written with 17 significant digits, which round-trips every
//! `f64` exactly. Files open with `#` comment lines; readers skip them.

use std::path::Path;

use crate::bench::{RepeatedResult, SweepTable, TrialResult};
use crate::datagen::Contaminated;
use crate::error::{Error, Result};
use crate::optimizer::FitResult;
use crate::types::{Dataset, Sample, ScaleParams, WeightVector};

pub const DATASET_HEADER: [&str; 3] = ["x", "y", "is_contaminated"];
pub const TRACE_HEADER: [&str; 2] = ["iteration", "mean_batch_loss"];
pub const SWEEP_HEADER: [&str; 7] = [
    "param_value",
    "mse_naive_mean",
    "mse_naive_std",
    "mse_trimmed_mean",
    "mse_trimmed_std",
    "trials",
    "errors",
];
pub const SUMMARY_HEADER: [&str; 4] = ["experiment", "mse_naive_mean", "mse_trimmed_mean", "ratio"];
pub const TRIALS_HEADER: [&str; 6] = [
    "trial",
    "seed",
    "mse_naive",
    "mse_trimmed",
    "mse_trimmed_kernel",
    "mse_trimmed_dbscan",
];

pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

/// A CSV document under construction: comment header then records.
pub struct CsvDoc {
    comments: String,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvDoc {
    pub fn new(comments: &str, header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Self {
            comments: comments.to_string(),
            writer,
        }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("writing to memory");
    }

    pub fn finish(self) -> String {
        let body = self.writer.into_inner().expect("flushing to memory");
        let mut out = self.comments;
        out.push_str(&String::from_utf8(body).expect("utf-8 csv"));
        out
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn dataset_csv(comments: &str, data: &Contaminated) -> String {
    let mut doc = CsvDoc::new(comments, &DATASET_HEADER);
    for (s, c) in data.data.iter().zip(&data.is_contaminated) {
        doc.row([fmt_real(s.x), fmt_real(s.y), u8::from(*c).to_string()]);
    }
    doc.finish()
}

/// Parse a dataset CSV. The `is_contaminated` column is optional.
pub fn parse_dataset(text: &str, origin: &str) -> Result<Contaminated> {
    let bad = |msg: String| Error::Parse {
        path: origin.to_string(),
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(xi), Some(yi)) = (col("x"), col("y")) else {
        return Err(bad("expected `x` and `y` columns".into()));
    };
    let ci = col("is_contaminated");
    let mut samples = Vec::new();
    let mut flags = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}: {e}", row + 1)))
        };
        let s = Sample::new(field(xi)?, field(yi)?);
        if !s.is_finite() {
            return Err(bad(format!("row {}: non-finite value", row + 1)));
        }
        samples.push(s);
        flags.push(match ci.and_then(|i| record.get(i)) {
            Some("1") | Some("true") => true,
            Some("0") | Some("false") | Some("") | None => false,
            Some(other) => return Err(bad(format!("row {}: bad is_contaminated `{other}`", row + 1))),
        });
    }
    Ok(Contaminated {
        data: Dataset::new(samples),
        is_contaminated: flags,
    })
}

pub fn read_dataset(path: &Path) -> Result<Contaminated> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, &path.display().to_string())
}

/// Weights file: comments (including the x scaling), then one coefficient
/// per line in ascending degree order.
pub fn weights_text(comments: &str, fit: &FitResult) -> String {
    let mut out = comments.to_string();
    out.push_str(&format!("# scale.center = {}\n", fmt_real(fit.scale.center)));
    out.push_str(&format!("# scale.half_width = {}\n", fmt_real(fit.scale.half_width)));
    for c in &fit.weights.coeffs {
        out.push_str(&fmt_real(*c));
        out.push('\n');
    }
    out
}

/// Inverse of [`weights_text`].
pub fn parse_weights(text: &str, origin: &str) -> Result<(WeightVector, ScaleParams)> {
    let bad = |msg: String| Error::Parse {
        path: origin.to_string(),
        msg,
    };
    let mut scale = ScaleParams::IDENTITY;
    let mut coeffs = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                let slot = match k.trim() {
                    "scale.center" => &mut scale.center,
                    "scale.half_width" => &mut scale.half_width,
                    _ => continue,
                };
                *slot = v.trim().parse().map_err(|e| bad(format!("{}: {e}", k.trim())))?;
            }
            continue;
        }
        coeffs.push(line.parse::<f64>().map_err(|e| bad(format!("coefficient `{line}`: {e}")))?);
    }
    if coeffs.is_empty() {
        return Err(bad("no coefficients".into()));
    }
    Ok((WeightVector::new(coeffs), scale))
}

pub fn trace_csv(comments: &str, fit: &FitResult) -> String {
    let mut doc = CsvDoc::new(comments, &TRACE_HEADER);
    for (i, l) in fit.trace.iteration_losses.iter().enumerate() {
        doc.row([i.to_string(), fmt_real(*l)]);
    }
    doc.finish()
}

pub fn sweep_csv(comments: &str, table: &SweepTable) -> String {
    let mut doc = CsvDoc::new(comments, &SWEEP_HEADER);
    for r in &table.rows {
        doc.row([
            fmt_real(r.param_value),
            fmt_real(r.naive.mean),
            fmt_real(r.naive.std),
            fmt_real(r.trimmed.mean),
            fmt_real(r.trimmed.std),
            r.trials.to_string(),
            r.errors.to_string(),
        ]);
    }
    doc.finish()
}

pub fn trials_csv(comments: &str, trials: &[TrialResult]) -> String {
    let mut doc = CsvDoc::new(comments, &TRIALS_HEADER);
    for (i, t) in trials.iter().enumerate() {
        doc.row([
            i.to_string(),
            t.seed.to_string(),
            fmt_opt(t.mse_naive()),
            fmt_opt(t.mse_trimmed()),
            fmt_opt(t.mse_trimmed_kernel()),
            fmt_opt(t.mse_trimmed_dbscan()),
        ]);
    }
    doc.finish()
}

/// One summary row: `(experiment, naive mean, trimmed mean)`.
pub type SummaryRow = (String, Option<f64>, Option<f64>);

pub fn summary_rows(name: &str, result: &RepeatedResult) -> Vec<SummaryRow> {
    let finite = |v: f64| v.is_finite().then_some(v);
    let mut rows = vec![(name.to_string(), finite(result.naive.mean), finite(result.trimmed.mean))];
    if let Some(k) = &result.trimmed_kernel {
        rows.push((format!("{name}+kernel"), finite(result.naive.mean), finite(k.mean)));
    }
    if let Some(d) = &result.trimmed_dbscan {
        rows.push((format!("{name}+dbscan"), finite(result.naive.mean), finite(d.mean)));
    }
    rows
}

pub fn summary_csv(comments: &str, rows: &[SummaryRow]) -> String {
    let mut doc = CsvDoc::new(comments, &SUMMARY_HEADER);
    for (name, naive, trimmed) in rows {
        let ratio = match (naive, trimmed) {
            (Some(n), Some(t)) => Some(t / n),
            _ => None,
        };
        doc.row([name.clone(), fmt_opt(*naive), fmt_opt(*trimmed), fmt_opt(ratio)]);
    }
    doc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dataset_header_is_exact() {
        let d = Contaminated::clean(Dataset::from_xy(&[1.0], &[2.0]));
        let text = dataset_csv("# a = b\n", &d);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# a = b"));
        assert_eq!(lines.next(), Some("x,y,is_contaminated"));
        assert_eq!(lines.next(), Some("1.0000000000000000e0,2.0000000000000000e0,0"));
    }

    #[test]
    fn weights_round_trip() {
        let fit = FitResult {
            weights: WeightVector::new(vec![0.1, -2.5, 1e-300]),
            trace: crate::optimizer::TrainTrace {
                iteration_losses: vec![1.0, 0.5],
                iterations_run: 2,
                converged: false,
            },
            scale: ScaleParams::from_range(-3.0, 7.0),
        };
        let (w, s) = parse_weights(&weights_text("# x = 1\n", &fit), "mem").unwrap();
        assert_eq!(w, fit.weights);
        assert_eq!(s, fit.scale);
        let trace = trace_csv("", &fit);
        assert_eq!(trace.lines().next(), Some("iteration,mean_batch_loss"));
        assert_eq!(trace.lines().count(), 3);
    }

    #[test]
    fn malformed_dataset_is_reported() {
        assert!(parse_dataset("a,b\n1,2\n", "mem").is_err());
        assert!(parse_dataset("x,y\n1,oops\n", "mem").is_err());
        let ok = parse_dataset("# c\nx,y\n1,2\n", "mem").unwrap();
        assert_eq!(ok.data.samples, vec![Sample::new(1.0, 2.0)]);
    }

    proptest! {
        #[test]
        fn dataset_round_trips(points in proptest::collection::vec((-1e6f64..1e6, -1e300f64..1e300, any::<bool>()), 0..30)) {
            let data = Contaminated {
                data: points.iter().map(|&(x, y, _)| Sample::new(x, y)).collect(),
                is_contaminated: points.iter().map(|p| p.2).collect(),
            };
            let back = parse_dataset(&dataset_csv("# seed = 1\n", &data), "mem").unwrap();
            prop_assert_eq!(back, data);
        }
    }
}
