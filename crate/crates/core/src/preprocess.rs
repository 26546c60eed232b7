//! Training-set preprocessors that target dense adversarial subsets.
//!
//! * [`kernel_preprocess`] slides a rectangular window over the (x, y)
//!   bounding box and collapses every over-populated window into the mean
//!   of its members.
//! * [`dbscan_trim`] clusters the samples with DBSCAN and removes the
//!   densest cluster, provided there are at least two clusters to choose
//!   from.
//!
//! Both work in units where x and y each span `[0, 1]` over the dataset
//! (DBSCAN) or in raw units relative to the data range (kernel widths).

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::types::{Dataset, Sample};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub kernel_width_x: f64,
    pub kernel_width_y: f64,
    pub stride_x: f64,
    pub stride_y: f64,
    /// A kernel is combined when it holds more than this share of all samples.
    pub threshold_fraction: f64,
    /// Return only the combined samples, dropping everything else.
    pub strict_mode: bool,
}

impl KernelConfig {
    /// Widths at a tenth of each axis range, strides at half a width.
    pub fn for_dataset(data: &Dataset) -> Self {
        let span = |b: Option<(f64, f64)>| match b {
            Some((lo, hi)) if hi > lo => hi - lo,
            _ => 1.0,
        };
        let wx = span(data.x_bounds()) / 10.0;
        let wy = span(data.y_bounds()) / 10.0;
        Self {
            kernel_width_x: wx,
            kernel_width_y: wy,
            stride_x: wx / 2.0,
            stride_y: wy / 2.0,
            threshold_fraction: 0.1,
            strict_mode: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kernel_width_x", self.kernel_width_x),
            ("kernel_width_y", self.kernel_width_y),
            ("stride_x", self.stride_x),
            ("stride_y", self.stride_y),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.stride_x > self.kernel_width_x || self.stride_y > self.kernel_width_y {
            return Err(Error::InvalidConfig(
                "kernel strides must not exceed kernel widths".into(),
            ));
        }
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold_fraction must lie in (0, 1], got {}",
                self.threshold_fraction
            )));
        }
        Ok(())
    }
}

/// One axis of the kernel grid: windows `[origin + i*stride, origin + i*stride + width]`.
#[derive(Debug, Clone, Copy)]
struct Axis {
    origin: f64,
    width: f64,
    stride: f64,
    count: usize,
}

impl Axis {
    fn new(lo: f64, hi: f64, width: f64, stride: f64) -> Self {
        let uncovered = (hi - lo) - width;
        let mut count = if uncovered > 0.0 {
            (uncovered / stride).ceil() as usize + 1
        } else {
            1
        };
        // the last window must reach `hi`
        while lo + (count - 1) as f64 * stride + width < hi {
            count += 1;
        }
        Self {
            origin: lo,
            width,
            stride,
            count,
        }
    }

    fn start(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.stride
    }

    fn contains(&self, i: usize, v: f64) -> bool {
        let a = self.start(i);
        a <= v && v <= a + self.width
    }

    /// Lowest and highest window indices containing `v`, if any.
    fn index_range(&self, v: f64) -> Option<(usize, usize)> {
        let last = self.count as isize - 1;
        let clamp = |i: isize| i.clamp(0, last) as usize;
        // closed-form bounds are only trusted to within one window either way
        let lo = clamp(((v - self.origin - self.width) / self.stride).ceil() as isize - 1);
        let hi = clamp(((v - self.origin) / self.stride).floor() as isize + 1);
        let mut hits = (lo..=hi).filter(|&i| self.contains(i, v));
        let first = hits.next()?;
        Some((first, hits.next_back().unwrap_or(first)))
    }
}

/// Inclusive window index ranges along x and y.
type WindowSpan = ((usize, usize), (usize, usize));

/// Collapse over-populated kernel windows into their mean sample.
///
/// Windows are visited x-major (increasing x index, then increasing y
/// index). A sample joins the first above-threshold window that contains
/// it, so overlapping windows never share a sample. Output order is
/// pass-through samples in input order, then combined samples in visit
/// order; strict mode omits the pass-throughs.
pub fn kernel_preprocess(data: &Dataset, cfg: &KernelConfig) -> Result<Dataset> {
    cfg.validate()?;
    let (Some((x_lo, x_hi)), Some((y_lo, y_hi))) = (data.x_bounds(), data.y_bounds()) else {
        return Ok(Dataset::default());
    };
    let ax = Axis::new(x_lo, x_hi, cfg.kernel_width_x, cfg.stride_x);
    let ay = Axis::new(y_lo, y_hi, cfg.kernel_width_y, cfg.stride_y);

    // per-sample window index ranges, then window populations
    let ranges: Vec<Option<WindowSpan>> = data
        .iter()
        .map(|s| Some((ax.index_range(s.x)?, ay.index_range(s.y)?)))
        .collect();
    let mut population = vec![0usize; ax.count * ay.count];
    for ((xl, xh), (yl, yh)) in ranges.iter().flatten() {
        for i in *xl..=*xh {
            for j in *yl..=*yh {
                population[i * ay.count + j] += 1;
            }
        }
    }

    let threshold = cfg.threshold_fraction * data.len() as f64;
    let mut assigned: Vec<Option<usize>> = vec![None; data.len()];
    for (s, range) in ranges.iter().enumerate() {
        let Some(((xl, xh), (yl, yh))) = *range else {
            continue;
        };
        'search: for i in xl..=xh {
            for j in yl..=yh {
                let k = i * ay.count + j;
                if population[k] as f64 > threshold {
                    assigned[s] = Some(k);
                    break 'search;
                }
            }
        }
    }

    let mut sums: Vec<(f64, f64, usize)> = vec![(0.0, 0.0, 0); population.len()];
    let mut out = Vec::new();
    for (s, a) in data.iter().zip(&assigned) {
        match a {
            Some(k) => {
                let e = &mut sums[*k];
                e.0 += s.x;
                e.1 += s.y;
                e.2 += 1;
            }
            None if !cfg.strict_mode => out.push(*s),
            None => {}
        }
    }
    out.extend(
        sums.iter()
            .filter(|e| e.2 > 0)
            .map(|&(sx, sy, c)| Sample::new(sx / c as f64, sy / c as f64)),
    );
    Ok(Dataset::new(out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbscanConfig {
    /// Neighborhood radius in normalized units.
    pub radius: f64,
    pub min_samples: usize,
    /// Do nothing unless at least this many clusters are found.
    pub min_clusters_to_act: usize,
}

impl Default for DbscanConfig {
    fn default() -> Self {
        Self {
            radius: 0.05,
            min_samples: 8,
            min_clusters_to_act: 2,
        }
    }
}

impl DbscanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dbscan radius must be positive, got {}",
                self.radius
            )));
        }
        if self.min_samples < 2 {
            return Err(Error::InvalidConfig(format!(
                "dbscan min_samples must be at least 2, got {}",
                self.min_samples
            )));
        }
        Ok(())
    }
}

/// Coordinates with x and y each min-max scaled to `[0, 1]`; a constant
/// axis maps to 0.
pub fn normalized_points(data: &Dataset) -> Vec<(f64, f64)> {
    let norm = |b: Option<(f64, f64)>| match b {
        Some((lo, hi)) if hi > lo => (lo, hi - lo),
        Some((lo, _)) => (lo, f64::INFINITY),
        None => (0.0, 1.0),
    };
    let (x0, xs) = norm(data.x_bounds());
    let (y0, ys) = norm(data.y_bounds());
    data.iter()
        .map(|s| ((s.x - x0) / xs, (s.y - y0) / ys))
        .collect()
}

fn neighbors(points: &[(f64, f64)], index: usize, radius: f64) -> Vec<usize> {
    let (px, py) = points[index];
    points
        .iter()
        .enumerate()
        .filter(|(_, &(qx, qy))| (px - qx).hypot(py - qy) <= radius)
        .map(|(j, _)| j)
        .collect()
}

/// All indices within `radius` of sample `index` (itself included),
/// measured in normalized coordinates.
pub fn region_query(data: &Dataset, index: usize, radius: f64) -> Result<Vec<usize>> {
    if index >= data.len() {
        return Err(Error::IndexOutOfRange {
            index,
            len: data.len(),
        });
    }
    Ok(neighbors(&normalized_points(data), index, radius))
}

/// Result of a DBSCAN pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster id per sample (`None` for noise). Ids follow discovery order.
    pub labels: Vec<Option<usize>>,
    /// `|N(i)|` per sample.
    pub neighbor_counts: Vec<usize>,
    pub is_core: Vec<bool>,
    pub n_clusters: usize,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(cluster))
            .map(|(i, _)| i)
            .collect()
    }

    /// Mean neighbor count over the core points of `cluster`.
    pub fn density(&self, cluster: usize) -> f64 {
        let (sum, count) = self
            .labels
            .iter()
            .zip(&self.neighbor_counts)
            .zip(&self.is_core)
            .filter(|((l, _), core)| **l == Some(cluster) && **core)
            .fold((0usize, 0usize), |(s, c), ((_, n), _)| (s + n, c + 1));
        sum as f64 / count as f64
    }

    /// The cluster with the highest density; ties go to the larger cluster,
    /// then to the one whose smallest member index is lower.
    pub fn densest(&self) -> Option<usize> {
        (0..self.n_clusters).max_by(|&a, &b| {
            let (ma, mb) = (self.members(a), self.members(b));
            self.density(a)
                .total_cmp(&self.density(b))
                .then(ma.len().cmp(&mb.len()))
                .then(mb[0].cmp(&ma[0]))
        })
    }
}

/// Textbook DBSCAN on normalized coordinates. Core points have at least
/// `min_samples` neighbors (themselves included); a border point joins the
/// first cluster that reaches it.
pub fn dbscan(data: &Dataset, radius: f64, min_samples: usize) -> Clustering {
    let points = normalized_points(data);
    let n = points.len();
    let hoods: Vec<Vec<usize>> = (0..n).map(|i| neighbors(&points, i, radius)).collect();
    let is_core: Vec<bool> = hoods.iter().map(|h| h.len() >= min_samples).collect();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut n_clusters = 0;

    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        if !is_core[start] {
            continue;
        }
        let id = n_clusters;
        n_clusters += 1;
        labels[start] = Some(id);
        let mut queue: VecDeque<usize> = hoods[start].iter().copied().collect();
        while let Some(j) = queue.pop_front() {
            if labels[j].is_none() {
                labels[j] = Some(id);
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            if is_core[j] {
                queue.extend(hoods[j].iter().copied().filter(|&k| !visited[k] || labels[k].is_none()));
            }
        }
    }

    Clustering {
        labels,
        neighbor_counts: hoods.iter().map(Vec::len).collect(),
        is_core,
        n_clusters,
    }
}

/// Remove the densest DBSCAN cluster, or return the data unchanged when
/// fewer than `min_clusters_to_act` clusters exist.
pub fn dbscan_trim(data: &Dataset, cfg: &DbscanConfig) -> Result<Dataset> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset("dbscan_trim needs samples"));
    }
    let clustering = dbscan(data, cfg.radius, cfg.min_samples);
    Ok(match clustering.densest() {
        Some(target) if clustering.n_clusters >= cfg.min_clusters_to_act.max(1) => data
            .iter()
            .zip(&clustering.labels)
            .filter(|(_, l)| **l != Some(target))
            .map(|(s, _)| *s)
            .collect(),
        _ => data.clone(),
    })
}
