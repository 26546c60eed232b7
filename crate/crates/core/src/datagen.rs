//! Synthetic ground truth and the contamination families.
//!
//! Clean data come from a fixed polynomial plus Gaussian noise. A
//! contaminated training set replaces exactly `round(epsilon * n)` clean
//! samples with draws from an adversarial distribution; which samples are
//! replaced and what replaces them depends on the family.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::types::{Dataset, Sample};

/// The true curve `P_theta` and its sampling domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueCurve {
    /// Ascending-power coefficients.
    pub coeffs: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub noise_sigma: f64,
}

impl Default for TrueCurve {
    fn default() -> Self {
        Self {
            coeffs: vec![0.0, 2.0, 0.0, -3.0, 0.0, 1.5, 0.0, -0.5, 0.0, 0.2],
            x_min: -1.0,
            x_max: 1.0,
            noise_sigma: 0.1,
        }
    }
}

impl TrueCurve {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.is_empty() {
            return Err(Error::InvalidConfig("true curve needs coefficients".into()));
        }
        if !(self.x_max > self.x_min) {
            return Err(Error::InvalidConfig(format!(
                "x_max ({}) must exceed x_min ({})",
                self.x_max, self.x_min
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    fn uniform_x<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(self.x_min..=self.x_max)
    }

    fn noise(&self) -> Option<Normal<f64>> {
        (self.noise_sigma > 0.0).then(|| Normal::new(0.0, self.noise_sigma).expect("sigma validated"))
    }

    fn observe<R: Rng + ?Sized>(&self, x: f64, noise: Option<&Normal<f64>>, rng: &mut R) -> Sample {
        let eps = noise.map_or(0.0, |n| n.sample(rng));
        Sample::new(x, self.eval(x) + eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    NoContamination,
    /// Uniform over the x domain and the clean y range.
    Random,
    /// The true curve shifted vertically.
    ParallelLine,
    /// A Gaussian blob at the right-bottom corner.
    EdgeCorner,
    /// The lowest-x block displaced vertically.
    Begin,
    /// The central block in x-order displaced vertically.
    Middle,
    /// The highest-x block displaced vertically.
    End,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::NoContamination,
        Family::Random,
        Family::ParallelLine,
        Family::EdgeCorner,
        Family::Begin,
        Family::Middle,
        Family::End,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::NoContamination => "none",
            Family::Random => "random",
            Family::ParallelLine => "parallel-line",
            Family::EdgeCorner => "edge-corner",
            Family::Begin => "begin",
            Family::Middle => "middle",
            Family::End => "end",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Family::ALL.iter().map(|f| f.name()).collect();
                format!("unknown contamination family `{s}` (expected one of {})", names.join("|"))
            })
    }
}

/// Parameterizes the adversarial distribution `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminationSpec {
    pub family: Family,
    pub epsilon: f64,
    /// Horizontal displacement as a fraction of the x-domain length.
    pub offset_x_ratio: f64,
    /// Vertical displacement as a fraction of the clean y range.
    pub offset_y_ratio: f64,
    /// Blob standard deviation (EdgeCorner), in axis-length units.
    pub spread: f64,
}

impl Default for ContaminationSpec {
    fn default() -> Self {
        Self {
            family: Family::NoContamination,
            epsilon: 0.0,
            offset_x_ratio: 0.0,
            offset_y_ratio: 3.0,
            spread: 0.05,
        }
    }
}

impl ContaminationSpec {
    pub fn new(family: Family, epsilon: f64) -> Self {
        Self {
            family,
            epsilon,
            ..Default::default()
        }
    }

    /// Contaminated-sample count for a set of `n`.
    pub fn count(&self, n: usize) -> usize {
        match self.family {
            Family::NoContamination => 0,
            _ => (self.epsilon * n as f64).round() as usize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in [0, 0.5), got {}",
                self.epsilon
            )));
        }
        if !(self.offset_x_ratio.is_finite() && self.offset_y_ratio.is_finite()) {
            return Err(Error::InvalidConfig("contamination offsets must be finite".into()));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "spread must be non-negative, got {}",
                self.spread
            )));
        }
        Ok(())
    }
}

/// A training set with its contamination mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Contaminated {
    pub data: Dataset,
    pub is_contaminated: Vec<bool>,
}

impl Contaminated {
    pub fn clean(data: Dataset) -> Self {
        let n = data.len();
        Self {
            data,
            is_contaminated: vec![false; n],
        }
    }

    pub fn contaminated_indices(&self) -> Vec<usize> {
        self.is_contaminated
            .iter()
            .enumerate()
            .filter(|(_, c)| **c)
            .map(|(i, _)| i)
            .collect()
    }
}

/// `n` samples with x uniform on the domain and noisy y.
pub fn gen_true<R: Rng + ?Sized>(n: usize, curve: &TrueCurve, rng: &mut R) -> Dataset {
    let noise = curve.noise();
    (0..n)
        .map(|_| {
            let x = curve.uniform_x(rng);
            curve.observe(x, noise.as_ref(), rng)
        })
        .collect()
}

/// Noise-free held-out samples.
pub fn gen_test<R: Rng + ?Sized>(n: usize, curve: &TrueCurve, rng: &mut R) -> Dataset {
    (0..n)
        .map(|_| {
            let x = curve.uniform_x(rng);
            Sample::new(x, curve.eval(x))
        })
        .collect()
}

/// Indices of `clean` sorted by x, ties by index.
fn x_order(clean: &Dataset) -> Vec<usize> {
    let mut order: Vec<usize> = (0..clean.len()).collect();
    order.sort_by(|&a, &b| clean.samples[a].x.total_cmp(&clean.samples[b].x).then(a.cmp(&b)));
    order
}

/// Replace `round(epsilon * n)` samples of `clean` with adversarial ones.
pub fn contaminate<R: Rng + ?Sized>(
    clean: &Dataset,
    spec: &ContaminationSpec,
    curve: &TrueCurve,
    rng: &mut R,
) -> Result<Contaminated> {
    spec.validate()?;
    let n = clean.len();
    if n == 0 {
        return Err(Error::EmptyDataset("contaminate needs clean samples"));
    }
    let m = spec.count(n);
    if m >= n {
        return Err(Error::ContaminationTooLarge { m, n });
    }
    let mut out = Contaminated::clean(clean.clone());
    if m == 0 {
        return Ok(out);
    }

    let (y_lo, y_hi) = clean.y_bounds().expect("non-empty");
    let y_range = y_hi - y_lo;
    let shift = spec.offset_y_ratio * y_range;

    let chosen: Vec<usize> = match spec.family {
        Family::Begin | Family::Middle | Family::End => {
            let order = x_order(clean);
            let start = match spec.family {
                Family::Begin => 0,
                Family::Middle => (n - m) / 2,
                _ => n - m,
            };
            order[start..start + m].to_vec()
        }
        _ => {
            let mut idx = sample_indices(rng, n, m).into_vec();
            idx.sort_unstable();
            idx
        }
    };

    let blob = match spec.family {
        Family::EdgeCorner => {
            let cx = curve.x_max + spec.offset_x_ratio * curve.length();
            let cy = y_lo - spec.offset_y_ratio * y_range;
            let sx = spec.spread * curve.length();
            let sy = spec.spread * y_range;
            Some((
                Normal::new(cx, sx).map_err(|e| Error::InvalidConfig(e.to_string()))?,
                Normal::new(cy, sy).map_err(|e| Error::InvalidConfig(e.to_string()))?,
            ))
        }
        _ => None,
    };

    for &i in &chosen {
        let original = clean.samples[i];
        let replacement = match spec.family {
            Family::NoContamination => unreachable!("count is zero"),
            Family::Random => {
                let x = curve.uniform_x(rng);
                let y = if y_range > 0.0 {
                    rng.random_range(y_lo..=y_hi)
                } else {
                    y_lo
                };
                Sample::new(x, y)
            }
            Family::ParallelLine => Sample::new(original.x, curve.eval(original.x) + shift),
            Family::EdgeCorner => {
                let (bx, by) = blob.as_ref().expect("blob built for edge-corner");
                Sample::new(bx.sample(rng), by.sample(rng))
            }
            Family::Begin | Family::Middle | Family::End => {
                Sample::new(original.x, original.y + shift)
            }
        };
        out.data.samples[i] = replacement;
        out.is_contaminated[i] = true;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum NonUniformSpec {
    /// `dense_fraction` of the samples come from `[region_lo, region_hi]`,
    /// the rest from the whole domain.
    DenseRegion {
        region_lo: f64,
        region_hi: f64,
        dense_fraction: f64,
    },
    /// No samples inside `[region_lo, region_hi]`.
    IncompleteRegion { region_lo: f64, region_hi: f64 },
}

impl NonUniformSpec {
    /// A gap centred at `center` whose width is `gap_fraction` of the domain,
    /// so the expected number of missing samples is `gap_fraction * n`.
    pub fn gap(curve: &TrueCurve, center: f64, gap_fraction: f64) -> Self {
        let half = 0.5 * gap_fraction * curve.length();
        NonUniformSpec::IncompleteRegion {
            region_lo: center - half,
            region_hi: center + half,
        }
    }

    pub fn region(&self) -> (f64, f64) {
        match *self {
            NonUniformSpec::DenseRegion {
                region_lo, region_hi, ..
            }
            | NonUniformSpec::IncompleteRegion { region_lo, region_hi } => (region_lo, region_hi),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NonUniformSpec::DenseRegion { .. } => "dense",
            NonUniformSpec::IncompleteRegion { .. } => "incomplete",
        }
    }

    pub fn validate(&self, curve: &TrueCurve) -> Result<()> {
        let (lo, hi) = self.region();
        if !(curve.x_min <= lo && lo < hi && hi <= curve.x_max) {
            return Err(Error::InvalidConfig(format!(
                "non-uniform region [{lo}, {hi}] must be a proper sub-interval of [{}, {}]",
                curve.x_min, curve.x_max
            )));
        }
        match self {
            NonUniformSpec::DenseRegion { dense_fraction, .. } if !(0.0..=1.0).contains(dense_fraction) => {
                Err(Error::InvalidConfig(format!(
                    "dense_fraction must lie in [0, 1], got {dense_fraction}"
                )))
            }
            NonUniformSpec::IncompleteRegion { .. } if hi - lo >= curve.length() => Err(
                Error::InvalidConfig("the excluded region covers the whole domain".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Clean samples whose x density is deliberately uneven.
pub fn gen_nonuniform<R: Rng + ?Sized>(
    n: usize,
    curve: &TrueCurve,
    spec: &NonUniformSpec,
    rng: &mut R,
) -> Result<Dataset> {
    spec.validate(curve)?;
    let noise = curve.noise();
    let (lo, hi) = spec.region();
    let data = match *spec {
        NonUniformSpec::DenseRegion { dense_fraction, .. } => {
            let dense = (dense_fraction * n as f64).ceil() as usize;
            (0..n)
                .map(|i| {
                    let x = if i < dense {
                        rng.random_range(lo..=hi)
                    } else {
                        curve.uniform_x(rng)
                    };
                    curve.observe(x, noise.as_ref(), rng)
                })
                .collect()
        }
        NonUniformSpec::IncompleteRegion { .. } => {
            let gap = hi - lo;
            (0..n)
                .map(|_| {
                    // sample the domain with the gap removed, then reopen it
                    let mut x = rng.random_range(curve.x_min..curve.x_max - gap);
                    if x >= lo {
                        x += gap;
                        if x <= hi {
                            x = hi.next_up();
                        }
                    }
                    curve.observe(x, noise.as_ref(), rng)
                })
                .collect()
        }
    };
    Ok(data)
}
