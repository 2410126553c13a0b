//! 8-bit grayscale images: silhouette extraction, augmentation, resizing.

mod augment;
mod image;
mod otsu;
pub mod pnm;

pub use augment::{add_gaussian_noise, adjust_brightness, augment, flip_h, AugmentParams};
pub use image::{resize, round_half_up, GrayImage};
pub use otsu::{binarize, otsu_threshold, silhouette, HistogramStats};
