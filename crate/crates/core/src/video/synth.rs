//! Context extraction and frame fusion.

use super::flow::FlowField;
use crate::error::{Error, Result};
use crate::vision::{round_half_up, GrayImage};

/// Warped contexts further apart than this mark a likely occlusion.
pub const OCCLUSION_THRESHOLD: f32 = 32.0;

/// Local 3x3 mean maps of both endpoints (edge clamped).
#[derive(Clone, Debug, PartialEq)]
pub struct ContextFeatures {
    pub width: usize,
    pub height: usize,
    pub c0: Vec<f32>,
    pub c1: Vec<f32>,
}

fn mean3x3(img: &GrayImage) -> Vec<f32> {
    let (w, h) = img.dims();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0u32;
            for dy in -1i32..=1 {
                for dx in -1i32..=1 {
                    let sx = (x as i32 + dx).clamp(0, w as i32 - 1) as usize;
                    let sy = (y as i32 + dy).clamp(0, h as i32 - 1) as usize;
                    sum += u32::from(img.get(sx, sy));
                }
            }
            out.push(sum as f32 / 9.0);
        }
    }
    out
}

pub fn extract_context(i0: &GrayImage, i1: &GrayImage) -> Result<ContextFeatures> {
    if i0.dims() != i1.dims() {
        return Err(Error::InvalidArgument("context needs equal frame sizes".into()));
    }
    Ok(ContextFeatures {
        width: i0.width(),
        height: i0.height(),
        c0: mean3x3(i0),
        c1: mean3x3(i1),
    })
}

fn sample_map(map: &[f32], w: usize, h: usize, x: f32, y: f32) -> f32 {
    let x = x.clamp(0.0, (w - 1) as f32);
    let y = y.clamp(0.0, (h - 1) as f32);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f32, y - y0 as f32);
    let p = |x: usize, y: usize| map[y * w + x];
    let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
    let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Backward-warp both endpoints to time `t` and blend them.
///
/// Each output pixel mixes `I0` sampled at `p + F_t->0(p)` and `I1` sampled
/// at `p + F_t->1(p)` (bilinear, edge clamped) with weights `1 - t` and
/// `t`. Where the two warped contexts differ by more than
/// [`OCCLUSION_THRESHOLD`], the warp that travelled further is likely
/// occluded and its weight is halved before renormalising.
pub fn synthesize_frame(
    i0: &GrayImage,
    i1: &GrayImage,
    flow: &FlowField,
    context: &ContextFeatures,
    t: f32,
) -> Result<GrayImage> {
    let (w, h) = i0.dims();
    if i1.dims() != (w, h)
        || (flow.width, flow.height) != (w, h)
        || (context.width, context.height) != (w, h)
    {
        return Err(Error::InvalidArgument("frames, flow and context must share dimensions".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("time {t} outside [0, 1]")));
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let [ax, ay] = flow.to_0[i];
            let [bx, by] = flow.to_1[i];
            let (px, py) = (x as f32, y as f32);
            let v0 = i0.sample_bilinear(f64::from(px + ax), f64::from(py + ay));
            let v1 = i1.sample_bilinear(f64::from(px + bx), f64::from(py + by));
            let mut w0 = 1.0 - f64::from(t);
            let mut w1 = f64::from(t);
            let c0 = sample_map(&context.c0, w, h, px + ax, py + ay);
            let c1 = sample_map(&context.c1, w, h, px + bx, py + by);
            if (c0 - c1).abs() > OCCLUSION_THRESHOLD {
                let m0 = ax * ax + ay * ay;
                let m1 = bx * bx + by * by;
                if m0 > m1 {
                    w0 *= 0.5;
                } else if m1 > m0 {
                    w1 *= 0.5;
                }
            }
            out.push(round_half_up((w0 * v0 + w1 * v1) / (w0 + w1)));
        }
    }
    GrayImage::new(w, h, out)
}

/// `(1 - t) I0 + t I1`, rounded half up.
pub fn crossfade(i0: &GrayImage, i1: &GrayImage, t: f32) -> Result<GrayImage> {
    if i0.dims() != i1.dims() {
        return Err(Error::InvalidArgument("crossfade needs equal frame sizes".into()));
    }
    let t = f64::from(t);
    let pixels = i0
        .pixels()
        .iter()
        .zip(i1.pixels())
        .map(|(&a, &b)| round_half_up((1.0 - t) * f64::from(a) + t * f64::from(b)))
        .collect();
    GrayImage::new(i0.width(), i0.height(), pixels)
}
