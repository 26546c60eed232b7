//! Samples, datasets, model weights and the polynomial feature map.
//!
//! Every fit and evaluation path works on x values that have been mapped
//! affinely onto `[-1, 1]` (see [`scale_x`]). The monomial basis is used
//! unchanged; the scaling is what keeps `x^9` bounded.

use crate::error::{Error, Result};
use crate::loss::LossKind;

/// One observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
}

impl Sample {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// An ordered collection of samples. Positions are the sample identity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Self {
        Self { samples }
    }

    pub fn from_xy(xs: &[f64], ys: &[f64]) -> Self {
        assert_eq!(xs.len(), ys.len(), "x and y lengths differ");
        Self::new(xs.iter().zip(ys).map(|(&x, &y)| Sample::new(x, y)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    /// `(min, max)` of the x values, `None` when empty.
    pub fn x_bounds(&self) -> Option<(f64, f64)> {
        bounds(self.samples.iter().map(|s| s.x))
    }

    /// `(min, max)` of the y values, `None` when empty.
    pub fn y_bounds(&self) -> Option<(f64, f64)> {
        bounds(self.samples.iter().map(|s| s.y))
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        match self.samples.iter().position(|s| !s.is_finite()) {
            Some(i) => Err(Error::InvalidConfig(format!(
                "sample {i} has a non-finite coordinate"
            ))),
            None => Ok(()),
        }
    }
}

impl FromIterator<Sample> for Dataset {
    fn from_iter<I: IntoIterator<Item = Sample>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

pub(crate) fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Polynomial coefficients; `coeffs[k]` multiplies `x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub coeffs: Vec<f64>,
}

impl WeightVector {
    pub fn zeros(degree: usize) -> Self {
        Self {
            coeffs: vec![0.0; degree + 1],
        }
    }

    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "weight vector needs at least one coefficient");
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

/// `[1, x, x^2, ..., x^degree]`, each entry built by repeated multiplication.
pub fn featurize(x: f64, degree: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + 1);
    let mut p = 1.0;
    out.push(p);
    for _ in 0..degree {
        p *= x;
        out.push(p);
    }
    out
}

/// Dot product of `w` with `featurize(x, w.degree())`, accumulated in
/// ascending power order without allocating the feature vector.
pub fn predict(w: &WeightVector, x: f64) -> f64 {
    let mut p = 1.0;
    let mut acc = 0.0;
    for (k, c) in w.coeffs.iter().enumerate() {
        if k > 0 {
            p *= x;
        }
        acc += c * p;
    }
    acc
}

/// Affine map taking the training x range onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    pub center: f64,
    pub half_width: f64,
}

impl ScaleParams {
    pub const IDENTITY: ScaleParams = ScaleParams {
        center: 0.0,
        half_width: 1.0,
    };

    pub fn from_range(lo: f64, hi: f64) -> Self {
        Self {
            center: 0.5 * (lo + hi),
            half_width: 0.5 * (hi - lo),
        }
    }

    pub fn forward(&self, x: f64) -> f64 {
        (x - self.center) / self.half_width
    }

    pub fn inverse(&self, scaled: f64) -> f64 {
        scaled * self.half_width + self.center
    }

    pub fn apply(&self, data: &Dataset) -> Dataset {
        data.iter()
            .map(|s| Sample::new(self.forward(s.x), s.y))
            .collect()
    }
}

/// Scale x onto `[-1, 1]` and return the map so test data can reuse it.
pub fn scale_x(data: &Dataset) -> Result<(Dataset, ScaleParams)> {
    let (lo, hi) = data
        .x_bounds()
        .ok_or(Error::EmptyDataset("scale_x needs at least one sample"))?;
    if !(hi > lo) {
        return Err(Error::DegenerateRange(data.len(), lo));
    }
    let params = ScaleParams::from_range(lo, hi);
    Ok((params.apply(data), params))
}

/// Optimizer hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub model_degree: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_iter: usize,
    /// Stop once consecutive epoch-mean losses differ by less than this.
    /// Zero runs every fit to `max_iter`.
    pub convergence_tol: f64,
    /// Share of each batch dropped before the gradient step.
    pub trim_fraction: f64,
    pub huber_delta: f64,
    pub loss_kind: LossKind,
    /// Map training x onto `[-1, 1]` before featurization.
    pub scale_x: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            model_degree: 5,
            batch_size: 32,
            learning_rate: 0.05,
            max_iter: 20_000,
            convergence_tol: 0.0,
            trim_fraction: 0.0,
            huber_delta: 0.2,
            loss_kind: LossKind::Huber,
            scale_x: true,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// `floor(trim_fraction * batch_size)`. The tiny bias absorbs products
    /// such as `0.29 * 100 = 28.999999999999996`.
    pub fn trim_count(&self) -> usize {
        (self.trim_fraction * self.batch_size as f64 + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if !(self.convergence_tol >= 0.0) {
            return bad(format!(
                "convergence_tol must be non-negative, got {}",
                self.convergence_tol
            ));
        }
        if !(0.0..1.0).contains(&self.trim_fraction) {
            return bad(format!("trim_fraction must lie in [0, 1), got {}", self.trim_fraction));
        }
        if !(self.huber_delta > 0.0 && self.huber_delta.is_finite()) {
            return bad(format!("huber_delta must be positive, got {}", self.huber_delta));
        }
        if self.trim_count() >= self.batch_size {
            return Err(Error::TrimTooLarge {
                trim_count: self.trim_count(),
                len: self.batch_size,
            });
        }
        Ok(())
    }
}
