use rand_distr::{Distribution, Normal};

use super::image::{round_half_up, GrayImage};
use crate::error::{Error, Result};
use crate::rng;

pub const BRIGHTNESS_RANGE: (f64, f64) = (0.8, 1.2);

/// Brightness factor and noise standard deviation for one augmented copy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentParams {
    pub alpha: f64,
    pub sigma: f64,
}

impl AugmentParams {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = BRIGHTNESS_RANGE;
        if !(lo..=hi).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!(
                "brightness factor {} outside [{lo}, {hi}]",
                self.alpha
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise sigma {} must be >= 0", self.sigma)));
        }
        Ok(())
    }
}

/// Mirror around the vertical axis: `out(x, y) = in(w - 1 - x, y)`.
pub fn flip_h(img: &GrayImage) -> GrayImage {
    let w = img.width();
    GrayImage::from_fn(w, img.height(), |x, y| img.get(w - 1 - x, y))
}

pub fn adjust_brightness(img: &GrayImage, alpha: f64) -> Result<GrayImage> {
    AugmentParams { alpha, sigma: 0.0 }.validate()?;
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| round_half_up(alpha * f64::from(p)))
        .collect();
    GrayImage::new(img.width(), img.height(), pixels)
}

pub fn add_gaussian_noise(img: &GrayImage, sigma: f64, seed: u64) -> Result<GrayImage> {
    AugmentParams { alpha: 1.0, sigma }.validate()?;
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = rng::stream(seed, "noise", 0);
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| round_half_up(f64::from(p) + normal.sample(&mut rng)))
        .collect();
    GrayImage::new(img.width(), img.height(), pixels)
}

/// Optional flip, then brightness, then noise.
pub fn augment(img: &GrayImage, params: AugmentParams, flip: bool, seed: u64) -> Result<GrayImage> {
    params.validate()?;
    let base = if flip { flip_h(img) } else { img.clone() };
    let bright = adjust_brightness(&base, params.alpha)?;
    add_gaussian_noise(&bright, params.sigma, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flip_examples() {
        let img = GrayImage::new(3, 1, vec![1, 2, 3]).unwrap();
        assert_eq!(flip_h(&img).pixels(), &[3, 2, 1]);
        let thin = GrayImage::new(1, 4, vec![9, 8, 7, 6]).unwrap();
        assert_eq!(flip_h(&thin), thin);
    }

    #[test]
    fn brightness_examples() {
        let img = GrayImage::new(3, 1, vec![100, 250, 0]).unwrap();
        assert_eq!(adjust_brightness(&img, 1.0).unwrap(), img);
        assert_eq!(adjust_brightness(&img, 1.2).unwrap().pixels()[1], 255);
        assert_eq!(adjust_brightness(&img, 0.8).unwrap().pixels()[0], 80);
        assert!(adjust_brightness(&img, 1.3).is_err());
        assert!(adjust_brightness(&img, 0.79).is_err());
    }

    #[test]
    fn zero_noise_identity_and_determinism() {
        let img = GrayImage::from_fn(16, 16, |x, y| (x * 16 + y) as u8);
        assert_eq!(add_gaussian_noise(&img, 0.0, 3).unwrap(), img);
        let a = add_gaussian_noise(&img, 5.0, 3).unwrap();
        let b = add_gaussian_noise(&img, 5.0, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, add_gaussian_noise(&img, 5.0, 4).unwrap());
        assert!(add_gaussian_noise(&img, -1.0, 3).is_err());
    }

    #[test]
    fn noise_mean_absolute_deviation() {
        // E|N(0, s^2)| = s * sqrt(2 / pi); rounding to integers adds a little
        // spread, which stays well inside 5% for s = 10.
        let sigma = 10.0;
        let img = GrayImage::filled(256, 256, 128);
        let out = add_gaussian_noise(&img, sigma, 11).unwrap();
        let mad = out
            .pixels()
            .iter()
            .map(|&p| (f64::from(p) - 128.0).abs())
            .sum::<f64>()
            / out.pixels().len() as f64;
        let expected = sigma * (2.0 / std::f64::consts::PI).sqrt();
        assert!((mad - expected).abs() / expected < 0.05, "mad {mad} vs {expected}");
    }

    proptest! {
        #[test]
        fn augmentations_preserve_shape(
            w in 1usize..12, h in 1usize..12, seed in any::<u64>(),
            alpha in 0.8f64..=1.2, sigma in 0.0f64..20.0,
        ) {
            let img = GrayImage::from_fn(w, h, |x, y| ((x * 37 + y * 101 + seed as usize) % 256) as u8);
            let f = flip_h(&img);
            prop_assert_eq!(flip_h(&f), img.clone());
            let mut a = img.pixels().to_vec();
            let mut b = f.pixels().to_vec();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
            prop_assert_eq!(augment(&img, AugmentParams { alpha, sigma }, true, seed).unwrap().dims(), (w, h));
        }
    }
}
