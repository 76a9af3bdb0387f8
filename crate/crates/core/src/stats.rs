//! Empirical-distribution helpers: Kolmogorov-Smirnov distances and histograms.

use std::fmt::Write as _;

/// Sup-distance between the empirical CDF of `samples` and `cdf`.
///
/// `samples` is sorted in place.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut worst = 0.0f64;
    let mut i = 0;
    while i < samples.len() {
        let x = samples[i];
        let mut j = i;
        while j < samples.len() && samples[j] == x {
            j += 1;
        }
        let f = cdf(x);
        worst = worst.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    worst
}

/// KS distance for samples living on a lattice of spacing `step`: the
/// continuous CDF is read half a step above each atom (continuity correction).
pub fn ks_distance_lattice<F: Fn(f64) -> f64>(samples: &mut [f64], step: f64, cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut worst = 0.0f64;
    let mut i = 0;
    while i < samples.len() {
        let x = samples[i];
        let mut j = i;
        while j < samples.len() && samples[j] == x {
            j += 1;
        }
        worst = worst
            .max((cdf(x + 0.5 * step) - j as f64 / n).abs())
            .max((cdf(x - 0.5 * step) - i as f64 / n).abs());
        i = j;
    }
    worst
}

/// KS distance against a law with atoms: `cdf` is right-continuous and
/// `left_cdf(x)` is its limit from below.
pub fn ks_distance_mixed<F, L>(samples: &mut [f64], cdf: F, left_cdf: L) -> f64
where
    F: Fn(f64) -> f64,
    L: Fn(f64) -> f64,
{
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut worst = 0.0f64;
    let mut i = 0;
    while i < samples.len() {
        let x = samples[i];
        let mut j = i;
        while j < samples.len() && samples[j] == x {
            j += 1;
        }
        worst = worst
            .max((cdf(x) - j as f64 / n).abs())
            .max((left_cdf(x) - i as f64 / n).abs());
        i = j;
    }
    worst
}

/// Two-sample KS distance. Both slices are sorted in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut worst = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    worst
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// `bins` equal-width bins spanning the sample range. Degenerate samples
    /// (all values equal) get a single bin of width one around the value.
    pub fn from_samples(samples: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if samples.is_empty() || lo == hi {
            let centre = if samples.is_empty() { 0.0 } else { lo };
            return Self {
                edges: vec![centre - 0.5, centre + 0.5],
                counts: vec![samples.len() as u64],
            };
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|k| lo + width * k as f64).collect();
        let mut counts = vec![0u64; bins];
        for &x in samples {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self { edges, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    format!("{x:.16e}")
}

/// Histogram CSV with header `epoch,bin_low,bin_high,count,trials,seed`.
pub fn histograms_to_csv<'a, I>(rows: I, trials: u64, seed: u64) -> String
where
    I: IntoIterator<Item = (u64, &'a Histogram)>,
{
    let mut out = String::from("epoch,bin_low,bin_high,count,trials,seed\n");
    for (epoch, h) in rows {
        for (k, count) in h.counts.iter().enumerate() {
            let _ = writeln!(
                out,
                "{epoch},{},{},{count},{trials},{seed}",
                fmt_f64(h.edges[k]),
                fmt_f64(h.edges[k + 1])
            );
        }
    }
    out
}
