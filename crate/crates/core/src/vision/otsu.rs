use num_bigint::BigUint;

use super::image::GrayImage;
use crate::scalar::Real;

/// Otsu statistics for every candidate threshold; class 0 is `pixel <= t`.
#[derive(Clone, Debug)]
pub struct HistogramStats<T> {
    pub omega0: Vec<T>,
    pub omega1: Vec<T>,
    pub mu0: Vec<T>,
    pub mu1: Vec<T>,
    pub between_var: Vec<T>,
}

impl<T: Real> HistogramStats<T> {
    /// Statistics at all 256 thresholds. Means of empty classes are 0.
    pub fn compute(img: &GrayImage) -> Self {
        let hist = histogram(img);
        let total = img.pixels().len() as f64;
        let sum_all: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();
        let mut stats = HistogramStats {
            omega0: Vec::with_capacity(256),
            omega1: Vec::with_capacity(256),
            mu0: Vec::with_capacity(256),
            mu1: Vec::with_capacity(256),
            between_var: Vec::with_capacity(256),
        };
        let (mut n0, mut s0) = (0u64, 0f64);
        for (t, &count) in hist.iter().enumerate() {
            n0 += count;
            s0 += t as f64 * count as f64;
            let n1 = total - n0 as f64;
            let w0 = n0 as f64 / total;
            let w1 = n1 / total;
            let m0 = if n0 > 0 { s0 / n0 as f64 } else { 0.0 };
            let m1 = if n1 > 0.0 { (sum_all - s0) / n1 } else { 0.0 };
            stats.omega0.push(T::of(w0));
            stats.omega1.push(T::of(w1));
            stats.mu0.push(T::of(m0));
            stats.mu1.push(T::of(m1));
            stats.between_var.push(T::of(w0 * w1 * (m0 - m1) * (m0 - m1)));
        }
        stats
    }
}

fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    hist
}

/// Between-class variance at one threshold as the exact fraction
/// `(s0*n1 - s1*n0)^2 / (n0*n1)`; the common `1/N^2` factor is dropped.
#[derive(Clone, Copy)]
struct Score {
    diff: u128,
    den: u128,
}

impl Score {
    /// `self > other` evaluated without rounding.
    fn beats(&self, other: &Score) -> bool {
        let wide = || {
            let a = BigUint::from(self.diff).pow(2) * other.den;
            let b = BigUint::from(other.diff).pow(2) * self.den;
            a > b
        };
        let lhs = self
            .diff
            .checked_mul(self.diff)
            .and_then(|d| d.checked_mul(other.den));
        let rhs = other
            .diff
            .checked_mul(other.diff)
            .and_then(|d| d.checked_mul(self.den));
        match (lhs, rhs) {
            (Some(a), Some(b)) => a > b,
            _ => wide(),
        }
    }
}

/// Threshold maximizing between-class variance; ties go to the lowest `t`.
/// A constant image returns its own value.
pub fn otsu_threshold(img: &GrayImage) -> u8 {
    let hist = histogram(img);
    let total = img.pixels().len() as u128;
    let sum_all: u128 = hist.iter().enumerate().map(|(v, &c)| v as u128 * c as u128).sum();

    let mut best: Option<(u8, Score)> = None;
    let (mut n0, mut s0) = (0u128, 0u128);
    for (t, &count) in hist.iter().enumerate() {
        n0 += count as u128;
        s0 += t as u128 * count as u128;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = sum_all - s0;
        let score = Score {
            diff: (s0 * n1).abs_diff(s1 * n0),
            den: n0 * n1,
        };
        match &best {
            Some((_, b)) if !score.beats(b) => {}
            _ => best = Some((t as u8, score)),
        }
    }
    match best {
        Some((t, score)) if score.diff > 0 => t,
        // every split is empty or degenerate: only possible for constant images
        _ => img.pixels()[0],
    }
}

/// Foreground (`> t`) becomes 255, the rest 0.
pub fn binarize(img: &GrayImage, t: u8) -> GrayImage {
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| if p > t { 255 } else { 0 })
        .collect();
    GrayImage::new(img.width(), img.height(), pixels).expect("same dimensions")
}

/// Otsu threshold followed by binarization.
pub fn silhouette(img: &GrayImage) -> GrayImage {
    binarize(img, otsu_threshold(img))
}
