//! Training losses and their batch gradients.
//!
//! Residuals are always `prediction - target`. The squared loss carries the
//! same `1/2` factor as the quadratic branch of the Huber loss, so the two
//! agree exactly for `|a| <= delta`.

use crate::types::{predict, Sample, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Squared,
    Huber,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::Huber => "huber",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "squared" => Ok(LossKind::Squared),
            "huber" => Ok(LossKind::Huber),
            other => Err(format!("unknown loss kind `{other}` (expected squared|huber)")),
        }
    }
}

/// Prediction minus target.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Residual(pub f64);

impl Residual {
    pub fn of(w: &WeightVector, s: &Sample) -> Self {
        Residual(predict(w, s.x) - s.y)
    }
}

pub fn squared_loss(a: f64) -> f64 {
    0.5 * a * a
}

pub fn huber_loss(a: f64, delta: f64) -> f64 {
    let abs = a.abs();
    if abs <= delta {
        0.5 * a * a
    } else {
        delta * (abs - 0.5 * delta)
    }
}

pub fn loss(a: f64, kind: LossKind, delta: f64) -> f64 {
    match kind {
        LossKind::Squared => squared_loss(a),
        LossKind::Huber => huber_loss(a, delta),
    }
}

/// d(loss)/da. For Huber this is the residual clipped to `[-delta, delta]`.
pub fn loss_derivative(a: f64, kind: LossKind, delta: f64) -> f64 {
    match kind {
        LossKind::Squared => a,
        LossKind::Huber => {
            if a.abs() <= delta {
                a
            } else {
                delta * a.signum()
            }
        }
    }
}

pub fn batch_losses(w: &WeightVector, samples: &[Sample], kind: LossKind, delta: f64) -> Vec<f64> {
    samples
        .iter()
        .map(|s| loss(Residual::of(w, s).0, kind, delta))
        .collect()
}

/// Mean over `samples` of `loss_derivative(r_i) * featurize(x_i)`.
///
/// Accumulation order is sample order, then ascending power; callers that
/// replay a fit rely on that order for bit-exact agreement.
pub fn batch_gradient(
    w: &WeightVector,
    samples: &[Sample],
    kind: LossKind,
    delta: f64,
) -> Vec<f64> {
    let mut grad = vec![0.0; w.coeffs.len()];
    for s in samples {
        let psi = loss_derivative(Residual::of(w, s).0, kind, delta);
        let mut p = 1.0;
        for (k, g) in grad.iter_mut().enumerate() {
            if k > 0 {
                p *= s.x;
            }
            *g += psi * p;
        }
    }
    let n = samples.len() as f64;
    for g in &mut grad {
        *g /= n;
    }
    grad
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn squared_examples() {
        assert_eq!(squared_loss(0.0), 0.0);
        assert_eq!(squared_loss(2.0), 2.0);
        assert_eq!(squared_loss(-3.0), 4.5);
    }

    #[test]
    fn huber_examples() {
        assert_eq!(huber_loss(0.5, 1.0), 0.125);
        assert_eq!(huber_loss(2.0, 1.0), 1.5);
        assert_eq!(huber_loss(-3.0, 2.0), 4.0);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(loss_derivative(0.5, LossKind::Huber, 1.0), 0.5);
        assert_eq!(loss_derivative(5.0, LossKind::Huber, 1.0), 1.0);
        assert_eq!(loss_derivative(-5.0, LossKind::Huber, 1.0), -1.0);
        assert_eq!(loss_derivative(-5.0, LossKind::Squared, 1.0), -5.0);
    }

    #[test]
    fn batch_loss_examples() {
        let w0 = WeightVector::zeros(0);
        assert_eq!(
            batch_losses(&w0, &[Sample::new(1.0, 0.0)], LossKind::Squared, 1.0),
            vec![0.0]
        );
        assert_eq!(
            batch_losses(&w0, &[Sample::new(1.0, 2.0)], LossKind::Squared, 1.0),
            vec![2.0]
        );
        let w = WeightVector::new(vec![1.0, 1.0]);
        assert_eq!(
            batch_losses(&w, &[Sample::new(1.0, 0.0)], LossKind::Huber, 1.0),
            vec![1.5]
        );
    }

    #[test]
    fn batch_gradient_examples() {
        let w = WeightVector::zeros(1);
        assert_eq!(
            batch_gradient(&w, &[Sample::new(1.0, 1.0)], LossKind::Squared, 1.0),
            vec![-1.0, -1.0]
        );
        assert_eq!(
            batch_gradient(&WeightVector::zeros(0), &[Sample::new(123.0, 5.0)], LossKind::Huber, 1.0),
            vec![-1.0]
        );
        assert_eq!(
            batch_gradient(
                &w,
                &[Sample::new(1.0, 1.0), Sample::new(-1.0, -1.0)],
                LossKind::Squared,
                1.0
            ),
            vec![0.0, -1.0]
        );
    }

    #[test]
    fn loss_kind_parses() {
        assert_eq!("Huber".parse::<LossKind>().unwrap(), LossKind::Huber);
        assert!("l1".parse::<LossKind>().is_err());
    }

    proptest! {
        #[test]
        fn huber_matches_squared_inside_delta(delta in 0.01f64..10.0, t in -1.0f64..=1.0) {
            let a = t * delta;
            prop_assert_eq!(huber_loss(a, delta), squared_loss(a));
        }

        #[test]
        fn parity_and_bound(a in -100.0f64..100.0, delta in 0.01f64..10.0) {
            prop_assert_eq!(huber_loss(a, delta), huber_loss(-a, delta));
            for kind in [LossKind::Squared, LossKind::Huber] {
                prop_assert_eq!(loss_derivative(-a, kind, delta), -loss_derivative(a, kind, delta));
            }
            prop_assert!(loss_derivative(a, LossKind::Huber, delta).abs() <= delta);
        }

        #[test]
        fn huber_is_continuous_at_the_kink(delta in 0.01f64..10.0) {
            let below = huber_loss(delta * (1.0 - 1e-12), delta);
            let above = huber_loss(delta * (1.0 + 1e-12), delta);
            prop_assert!((below - above).abs() <= 1e-9 * delta * delta);
        }
    }
}
