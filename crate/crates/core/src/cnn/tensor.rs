use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vision::GrayImage;

/// Height x width x channels, stored channel-last.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T> {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub values: Vec<T>,
}

impl<T: Real> Tensor3<T> {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Tensor3 {
            height,
            width,
            channels,
            values: vec![T::zero(); height * width * channels],
        }
    }

    pub fn from_vec(height: usize, width: usize, channels: usize, values: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Structure("tensor extents must be >= 1".into()));
        }
        if values.len() != height * width * channels {
            return Err(Error::Structure(format!(
                "{height}x{width}x{channels} tensor needs {} values, got {}",
                height * width * channels,
                values.len()
            )));
        }
        Ok(Tensor3 {
            height,
            width,
            channels,
            values,
        })
    }

    /// One channel, intensities scaled into `[0, 1]`.
    pub fn from_image(img: &GrayImage) -> Self {
        let scale = T::of(1.0 / 255.0);
        Tensor3 {
            height: img.height(),
            width: img.width(),
            channels: 1,
            values: img.pixels().iter().map(|&p| T::of(f64::from(p)) * scale).collect(),
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.height, self.width, self.channels]
    }

    #[inline]
    pub fn offset(&self, y: usize, x: usize) -> usize {
        (y * self.width + x) * self.channels
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
