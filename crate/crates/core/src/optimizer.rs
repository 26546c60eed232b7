//! Mini-batch gradient descent, with and without per-batch trimming.
//!
//! Each iteration draws a fresh batch without replacement, ranks the batch
//! by per-sample loss, drops the `floor(trim_fraction * batch_size)` worst
//! samples and steps along the mean gradient of the survivors. With
//! `trim_fraction = 0` the trimming step is a no-op and the procedure is
//! plain MBGD.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::loss::{batch_gradient, batch_losses, mean, LossKind};
use crate::types::{scale_x, Dataset, ModelConfig, Sample, ScaleParams, WeightVector};

/// Per-iteration training record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Mean loss over the kept (post-trim) batch, evaluated before the update.
    pub iteration_losses: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub weights: WeightVector,
    pub trace: TrainTrace,
    pub scale: ScaleParams,
}

/// What a single iteration saw and did. Handed to observers of [`fit_observed`].
#[derive(Debug)]
pub struct IterationRecord<'a> {
    pub iteration: usize,
    pub weights_before: &'a WeightVector,
    /// Dataset indices of the batch, in draw order.
    pub batch: &'a [usize],
    pub losses: &'a [f64],
    /// Positions into `batch` that survived trimming, ascending.
    pub kept: &'a [usize],
    pub gradient: &'a [f64],
}

/// The generator every fit draws its batches from.
pub fn batch_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `batch_size` distinct indices from `0..n`, uniformly without replacement.
pub fn select_batch<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, batch_size: usize) -> Result<Vec<usize>> {
    if batch_size == 0 || batch_size > n {
        return Err(Error::BatchTooLarge { batch_size, n });
    }
    Ok(rand::seq::index::sample(rng, n, batch_size).into_vec())
}

/// Positions kept after dropping the `trim_count` largest losses.
///
/// Among equal losses the lower position is dropped first. The result is
/// ascending.
pub fn trim_indices(losses: &[f64], trim_count: usize) -> Result<Vec<usize>> {
    if trim_count >= losses.len() {
        return Err(Error::TrimTooLarge {
            trim_count,
            len: losses.len(),
        });
    }
    if trim_count == 0 {
        return Ok((0..losses.len()).collect());
    }
    let mut order: Vec<usize> = (0..losses.len()).collect();
    // largest loss first, lower position first on ties
    order.sort_by(|&a, &b| losses[b].total_cmp(&losses[a]).then(a.cmp(&b)));
    let mut kept = order.split_off(trim_count);
    kept.sort_unstable();
    Ok(kept)
}

/// Fit a polynomial by (trimmed) mini-batch gradient descent.
pub fn fit(data: &Dataset, config: &ModelConfig) -> Result<FitResult> {
    fit_observed(data, config, |_| {})
}

/// [`fit`], calling `observer` once per iteration before the update is applied.
pub fn fit_observed<F>(data: &Dataset, config: &ModelConfig, mut observer: F) -> Result<FitResult>
where
    F: FnMut(&IterationRecord<'_>),
{
    config.validate()?;
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyDataset("fit needs training samples"));
    }
    if config.batch_size > n {
        return Err(Error::BatchTooLarge {
            batch_size: config.batch_size,
            n,
        });
    }
    data.check_finite()?;

    let (train, scale) = if config.scale_x {
        scale_x(data)?
    } else {
        (data.clone(), ScaleParams::IDENTITY)
    };

    let trim_count = config.trim_count();
    let epoch_len = n.div_ceil(config.batch_size);
    let mut rng = batch_rng(config.seed);
    let mut w = WeightVector::zeros(config.model_degree);
    let mut iteration_losses = Vec::new();
    let mut previous_epoch: Option<f64> = None;
    let mut converged = false;
    let mut batch_samples: Vec<Sample> = Vec::with_capacity(config.batch_size);
    let mut kept_samples: Vec<Sample> = Vec::with_capacity(config.batch_size);
    let mut kept_losses: Vec<f64> = Vec::with_capacity(config.batch_size);

    for iteration in 0..config.max_iter {
        let batch = select_batch(&mut rng, n, config.batch_size)?;
        batch_samples.clear();
        batch_samples.extend(batch.iter().map(|&i| train.samples[i]));

        let losses = batch_losses(&w, &batch_samples, config.loss_kind, config.huber_delta);
        if losses.iter().any(|l| !l.is_finite()) {
            return Err(Error::Divergence {
                iteration,
                what: "loss",
            });
        }
        let kept = trim_indices(&losses, trim_count)?;
        kept_samples.clear();
        kept_losses.clear();
        for &k in &kept {
            kept_samples.push(batch_samples[k]);
            kept_losses.push(losses[k]);
        }

        let gradient = batch_gradient(&w, &kept_samples, config.loss_kind, config.huber_delta);
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence {
                iteration,
                what: "gradient",
            });
        }
        observer(&IterationRecord {
            iteration,
            weights_before: &w,
            batch: &batch,
            losses: &losses,
            kept: &kept,
            gradient: &gradient,
        });

        for (c, g) in w.coeffs.iter_mut().zip(&gradient) {
            *c -= config.learning_rate * g;
        }
        if !w.is_finite() {
            return Err(Error::Divergence {
                iteration,
                what: "weights",
            });
        }
        iteration_losses.push(mean(&kept_losses));

        if iteration_losses.len() % epoch_len == 0 {
            let epoch = mean(&iteration_losses[iteration_losses.len() - epoch_len..]);
            if let Some(prev) = previous_epoch {
                if (epoch - prev).abs() < config.convergence_tol {
                    converged = true;
                    break;
                }
            }
            previous_epoch = Some(epoch);
        }
    }

    Ok(FitResult {
        weights: w,
        trace: TrainTrace {
            iterations_run: iteration_losses.len(),
            iteration_losses,
            converged,
        },
        scale,
    })
}

/// The naive-baseline counterpart of `config`: no trimming, squared loss.
pub fn naive_config(config: &ModelConfig) -> ModelConfig {
    ModelConfig {
        trim_fraction: 0.0,
        loss_kind: LossKind::Squared,
        ..config.clone()
    }
}

/// Naive MBGD and the configured trimmed fit on the same data and seed.
#[derive(Debug)]
pub struct FitPair {
    pub naive: Result<FitResult>,
    pub trimmed: Result<FitResult>,
}

pub fn fit_pair(data: &Dataset, config: &ModelConfig) -> FitPair {
    FitPair {
        naive: fit(data, &naive_config(config)),
        trimmed: fit(data, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn select_batch_examples() {
        let mut rng = batch_rng(7);
        let mut all = select_batch(&mut rng, 5, 5).unwrap();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);

        let one = select_batch(&mut rng, 100, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0] < 100);

        let a = select_batch(&mut batch_rng(11), 50, 10).unwrap();
        let b = select_batch(&mut batch_rng(11), 50, 10).unwrap();
        assert_eq!(a, b);

        assert!(matches!(
            select_batch(&mut rng, 3, 4),
            Err(Error::BatchTooLarge { batch_size: 4, n: 3 })
        ));
    }

    #[test]
    fn trim_examples() {
        assert_eq!(trim_indices(&[5.0, 1.0, 3.0, 2.0], 1).unwrap(), vec![1, 2, 3]);
        assert_eq!(trim_indices(&[2.0, 2.0, 1.0], 1).unwrap(), vec![1, 2]);
        assert_eq!(trim_indices(&[7.0, 8.0], 0).unwrap(), vec![0, 1]);
        assert!(trim_indices(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn fit_rejects_oversized_batch_and_degenerate_x() {
        let d = Dataset::from_xy(&[0.0, 1.0], &[0.0, 1.0]);
        let c = ModelConfig::default();
        assert!(matches!(fit(&d, &c), Err(Error::BatchTooLarge { .. })));
        let d = Dataset::from_xy(&[1.0; 40], &[0.0; 40]);
        assert!(matches!(fit(&d, &c), Err(Error::DegenerateRange(..))));
    }

    #[test]
    fn fit_reports_divergence() {
        let xs: Vec<f64> = (0..64).map(|i| -1.0 + 2.0 * i as f64 / 63.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x).collect();
        let c = ModelConfig {
            model_degree: 3,
            learning_rate: 50.0,
            loss_kind: LossKind::Squared,
            ..Default::default()
        };
        let err = fit(&Dataset::from_xy(&xs, &ys), &c).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn trace_is_consistent() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - x).collect();
        let c = ModelConfig {
            model_degree: 1,
            batch_size: 10,
            max_iter: 3000,
            learning_rate: 0.2,
            convergence_tol: 1e-6,
            ..Default::default()
        };
        let r = fit(&Dataset::from_xy(&xs, &ys), &c).unwrap();
        assert_eq!(r.trace.iterations_run, r.trace.iteration_losses.len());
        assert!(r.trace.iterations_run <= c.max_iter);
        assert!(r.trace.converged);
        assert_eq!(r.trace.iterations_run % 5, 0);
    }

    proptest! {
        #[test]
        fn trimming_is_monotone(losses in proptest::collection::vec(0.0f64..10.0, 1..40), frac in 0.0f64..1.0) {
            let trim = ((losses.len() as f64) * frac) as usize;
            prop_assume!(trim < losses.len());
            let kept = trim_indices(&losses, trim).unwrap();
            prop_assert_eq!(kept.len(), losses.len() - trim);
            prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
            let max_kept = kept.iter().map(|&k| losses[k]).fold(f64::MIN, f64::max);
            for i in (0..losses.len()).filter(|i| !kept.contains(i)) {
                prop_assert!(losses[i] >= max_kept);
                // tie rule: a kept sample equal to a trimmed one sits above it
                for &k in &kept {
                    if losses[k] == losses[i] {
                        prop_assert!(k > i);
                    }
                }
            }
        }
    }
}
