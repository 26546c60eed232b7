//! Independent reference implementations used as test oracles. None of
//! these call into the code paths they check.
#![allow(dead_code)]

use mbgdt::{Dataset, Sample};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Least-squares polynomial coefficients via the normal equations,
/// solved by Gaussian elimination with partial pivoting.
pub fn least_squares(data: &Dataset, degree: usize) -> Vec<f64> {
    let m = degree + 1;
    let mut a = vec![vec![0.0; m + 1]; m];
    for s in data.iter() {
        let phi: Vec<f64> = (0..m).map(|k| s.x.powi(k as i32)).collect();
        for r in 0..m {
            for c in 0..m {
                a[r][c] += phi[r] * phi[c];
            }
            a[r][m] += phi[r] * s.y;
        }
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in 0..m {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=m {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..m).map(|i| a[i][m] / a[i][i]).collect()
}

pub fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().enumerate().map(|(k, c)| c * x.powi(k as i32)).sum()
}

/// Positions kept after repeatedly deleting the current maximum loss,
/// lowest position first among equals.
pub fn ref_trim(losses: &[f64], trim_count: usize) -> Vec<usize> {
    let mut alive: Vec<usize> = (0..losses.len()).collect();
    for _ in 0..trim_count {
        let mut worst = 0;
        for (p, &i) in alive.iter().enumerate() {
            if losses[i] > losses[alive[worst]] {
                worst = p;
            }
        }
        alive.remove(worst);
    }
    alive
}

fn unit_coords(data: &Dataset) -> Vec<(f64, f64)> {
    let xs: Vec<f64> = data.iter().map(|s| s.x).collect();
    let ys: Vec<f64> = data.iter().map(|s| s.y).collect();
    let scale = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        v.iter()
            .map(|&t| if hi > lo { (t - lo) / (hi - lo) } else { 0.0 })
            .collect::<Vec<_>>()
    };
    scale(&xs).into_iter().zip(scale(&ys)).collect()
}

/// Brute-force DBSCAN: core points are those with at least `min_samples`
/// points within `radius`; clusters are connected components of the
/// core-adjacency graph numbered by their smallest core index; a border
/// point belongs to the adjacent component with the smallest number.
pub struct RefClusters {
    pub labels: Vec<Option<usize>>,
    pub counts: Vec<usize>,
    pub core: Vec<bool>,
    pub n_clusters: usize,
}

pub fn ref_dbscan(data: &Dataset, radius: f64, min_samples: usize) -> RefClusters {
    let p = unit_coords(data);
    let n = p.len();
    let near = |i: usize, j: usize| {
        let (dx, dy) = (p[i].0 - p[j].0, p[i].1 - p[j].1);
        (dx * dx + dy * dy).sqrt() <= radius
    };
    let counts: Vec<usize> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count()).collect();
    let core: Vec<bool> = counts.iter().map(|&c| c >= min_samples).collect();

    // union-find over core points
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in 0..i {
            if core[i] && core[j] && near(i, j) {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    // number components by smallest core index
    let mut id_of_root = vec![None; n];
    let mut n_clusters = 0;
    let mut labels = vec![None; n];
    for i in 0..n {
        if core[i] {
            let r = root(&mut parent, i);
            if id_of_root[r].is_none() {
                id_of_root[r] = Some(n_clusters);
                n_clusters += 1;
            }
            labels[i] = id_of_root[r];
        }
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = (0..n)
                .filter(|&j| core[j] && near(i, j))
                .filter_map(|j| labels[j])
                .min();
        }
    }
    RefClusters {
        labels,
        counts,
        core,
        n_clusters,
    }
}

/// Indices removed by the densest-cluster rule, or empty if fewer than
/// `min_clusters` clusters exist.
pub fn ref_removed(c: &RefClusters, min_clusters: usize) -> Vec<usize> {
    if c.n_clusters == 0 || c.n_clusters < min_clusters {
        return Vec::new();
    }
    let score = |k: usize| {
        let core: Vec<usize> = (0..c.labels.len())
            .filter(|&i| c.labels[i] == Some(k) && c.core[i])
            .collect();
        core.iter().map(|&i| c.counts[i] as f64).sum::<f64>() / core.len() as f64
    };
    let members = |k: usize| (0..c.labels.len()).filter(|&i| c.labels[i] == Some(k)).collect::<Vec<_>>();
    let mut best = 0;
    for k in 1..c.n_clusters {
        let (sk, sb) = (score(k), score(best));
        let (mk, mb) = (members(k), members(best));
        let better = sk > sb || (sk == sb && (mk.len() > mb.len() || (mk.len() == mb.len() && mk[0] < mb[0])));
        if better {
            best = k;
        }
    }
    members(best)
}

/// Window start positions along one axis: from `lo` in steps of `stride`
/// until a window reaches `hi`.
fn window_starts(lo: f64, hi: f64, width: f64, stride: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let a = lo + i as f64 * stride;
        out.push(a);
        if a + width >= hi {
            return out;
        }
        i += 1;
    }
}

/// Brute-force kernel combiner: enumerate every window, count its
/// population over all samples, then hand each sample to the first
/// above-threshold window (x-major order) that contains it.
pub fn ref_kernel(data: &Dataset, wx: f64, wy: f64, sx: f64, sy: f64, threshold: f64, strict: bool) -> Vec<Sample> {
    if data.is_empty() {
        return Vec::new();
    }
    let (x0, x1) = data.x_bounds().unwrap();
    let (y0, y1) = data.y_bounds().unwrap();
    let mut windows = Vec::new();
    for a in window_starts(x0, x1, wx, sx) {
        for b in window_starts(y0, y1, wy, sy) {
            windows.push((a, b));
        }
    }
    let inside = |s: &Sample, &(a, b): &(f64, f64)| a <= s.x && s.x <= a + wx && b <= s.y && s.y <= b + wy;
    let limit = threshold * data.len() as f64;
    let hot: Vec<bool> = windows
        .iter()
        .map(|w| data.iter().filter(|s| inside(s, w)).count() as f64 > limit)
        .collect();
    let owner: Vec<Option<usize>> = data
        .iter()
        .map(|s| (0..windows.len()).find(|&k| hot[k] && inside(s, &windows[k])))
        .collect();
    let mut out: Vec<Sample> = if strict {
        Vec::new()
    } else {
        data.iter().zip(&owner).filter(|(_, o)| o.is_none()).map(|(s, _)| *s).collect()
    };
    for k in 0..windows.len() {
        let members: Vec<&Sample> = data.iter().zip(&owner).filter(|(_, o)| **o == Some(k)).map(|(s, _)| s).collect();
        if !members.is_empty() {
            let c = members.len() as f64;
            out.push(Sample::new(
                members.iter().map(|s| s.x).sum::<f64>() / c,
                members.iter().map(|s| s.y).sum::<f64>() / c,
            ));
        }
    }
    out
}

/// A random dataset mixing uniform scatter with one or two tight blobs.
pub fn mixed_dataset<R: Rng>(rng: &mut R, n: usize) -> Dataset {
    let blobs: Vec<(f64, f64, f64)> = (0..rng.random_range(1..=2))
        .map(|_| (rng.random_range(0.0..10.0), rng.random_range(-5.0..5.0), rng.random_range(0.05..0.6)))
        .collect();
    let blob_share = rng.random_range(0.0..0.7);
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < blob_share {
                let (cx, cy, r) = blobs[rng.random_range(0..blobs.len())];
                Sample::new(cx + rng.random_range(-r..r), cy + rng.random_range(-r..r))
            } else {
                Sample::new(rng.random_range(0.0..10.0), rng.random_range(-5.0..5.0))
            }
        })
        .collect()
}
