use std::f64::consts::PI;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;
use crate::vision::GrayImage;

#[derive(Clone, Debug, PartialEq)]
pub struct SilhouetteDatasetSpec {
    /// Number of classes including the trailing all-background BLANK class.
    pub num_classes: usize,
    pub per_class: usize,
    pub side: usize,
    pub seed: u64,
}

impl Default for SilhouetteDatasetSpec {
    fn default() -> Self {
        SilhouetteDatasetSpec {
            num_classes: 27,
            per_class: 100,
            side: 32,
            seed: 0,
        }
    }
}

impl SilhouetteDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidArgument("num_classes must be >= 2".into()));
        }
        if self.per_class < 1 {
            return Err(Error::InvalidArgument("per_class must be >= 1".into()));
        }
        if self.side < 8 {
            return Err(Error::InvalidArgument("side must be >= 8".into()));
        }
        Ok(())
    }

    pub fn blank_class(&self) -> usize {
        self.num_classes - 1
    }
}

/// Per-sample pose perturbation; all zero renders the canonical shape.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ShapeJitter {
    pub rotation: f64,
    /// Multiplicative size change minus one.
    pub scale: f64,
    /// Offsets as a fraction of the image side.
    pub dx: f64,
    pub dy: f64,
}

struct ClassShape {
    outline: Vec<(f64, f64)>,
    hole: f64,
    bar: Option<f64>,
    radius: f64,
}

impl ClassShape {
    fn for_class(class: usize) -> Self {
        let vertices = 3 + class % 5;
        let variant = (class / 5) % 6;
        let base_rot = class as f64 * 0.37;
        let (inner, hole, bar, radius) = match variant {
            0 => (1.0, 0.0, None, 0.36),
            1 => (0.5, 0.0, None, 0.40),
            2 => (1.0, 0.45, None, 0.38),
            3 => (1.0, 0.0, Some(base_rot + 0.9), 0.26),
            4 => (0.5, 0.0, Some(base_rot + 0.4), 0.30),
            _ => (1.0, 0.4, Some(base_rot + 1.7), 0.30),
        };
        let points = if inner < 1.0 { 2 * vertices } else { vertices };
        let outline = (0..points)
            .map(|i| {
                let a = base_rot + 2.0 * PI * i as f64 / points as f64;
                let r = if i % 2 == 1 && inner < 1.0 { inner } else { 1.0 };
                (r * a.cos(), r * a.sin())
            })
            .collect();
        ClassShape {
            outline,
            hole,
            bar,
            radius,
        }
    }

    /// `(u, v)` is in shape units: the outline has circumradius 1.
    fn contains(&self, u: f64, v: f64) -> bool {
        if self.hole > 0.0 && u * u + v * v < self.hole * self.hole {
            return false;
        }
        if let Some(angle) = self.bar {
            // rectangle from the centre out to 1.6 along `angle`
            let along = u * angle.cos() + v * angle.sin();
            let across = -u * angle.sin() + v * angle.cos();
            if (0.0..=1.6).contains(&along) && across.abs() <= 0.22 {
                return true;
            }
        }
        point_in_polygon(&self.outline, u, v)
    }
}

fn point_in_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// White-on-black rendering of the procedural pattern for `class`.
pub fn render_class_shape(class: usize, side: usize, jitter: ShapeJitter) -> GrayImage {
    let shape = ClassShape::for_class(class);
    let s = side as f64;
    let r = shape.radius * s * (1.0 + jitter.scale);
    let cx = s / 2.0 + jitter.dx * s;
    let cy = s / 2.0 + jitter.dy * s;
    let (sin, cos) = (-jitter.rotation).sin_cos();
    GrayImage::from_fn(side, side, |x, y| {
        let px = (x as f64 + 0.5 - cx) / r;
        let py = (y as f64 + 0.5 - cy) / r;
        let u = px * cos - py * sin;
        let v = px * sin + py * cos;
        if shape.contains(u, v) {
            255
        } else {
            0
        }
    })
}

/// Ordered class by class; the last class is BLANK (all zero).
pub fn synth_silhouettes(spec: &SilhouetteDatasetSpec) -> Result<Vec<(GrayImage, usize)>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.num_classes * spec.per_class);
    for class in 0..spec.num_classes {
        for i in 0..spec.per_class {
            let img = if class == spec.blank_class() {
                GrayImage::filled(spec.side, spec.side, 0)
            } else {
                let index = (class * spec.per_class + i) as u64;
                let mut rng = rng::stream(spec.seed, "silhouette", index);
                let jitter = ShapeJitter {
                    rotation: rng.random_range(-0.15..0.15),
                    scale: rng.random_range(-0.1..0.1),
                    dx: rng.random_range(-0.05..0.05),
                    dy: rng.random_range(-0.05..0.05),
                };
                render_class_shape(class, spec.side, jitter)
            };
            out.push((img, class));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_and_foreground_bounds() {
        let spec = SilhouetteDatasetSpec {
            per_class: 20,
            ..Default::default()
        };
        let data = synth_silhouettes(&spec).unwrap();
        assert_eq!(data.len(), 27 * 20);
        for (img, class) in &data {
            assert_eq!(img.dims(), (32, 32));
            let fg = img.foreground_fraction();
            if *class == spec.blank_class() {
                assert!(img.pixels().iter().all(|&p| p == 0));
            } else {
                assert!((0.01..=0.60).contains(&fg), "class {class}: {fg}");
                assert!(img.pixels().iter().all(|&p| p == 0 || p == 255));
            }
        }
    }

    #[test]
    fn classes_are_distinct() {
        let canon: Vec<_> = (0..26)
            .map(|c| render_class_shape(c, 32, ShapeJitter::default()))
            .collect();
        for i in 0..26 {
            for j in i + 1..26 {
                let diff = canon[i]
                    .pixels()
                    .iter()
                    .zip(canon[j].pixels())
                    .filter(|(a, b)| a != b)
                    .count();
                assert!(diff > 20, "classes {i} and {j} differ in only {diff} pixels");
            }
        }
    }

    #[test]
    fn deterministic() {
        let spec = SilhouetteDatasetSpec {
            num_classes: 4,
            per_class: 3,
            side: 16,
            seed: 9,
        };
        assert_eq!(synth_silhouettes(&spec).unwrap(), synth_silhouettes(&spec).unwrap());
        assert!(synth_silhouettes(&SilhouetteDatasetSpec { side: 7, ..spec }).is_err());
    }
}
