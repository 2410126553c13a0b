//! Block-matching motion estimation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::vision::GrayImage;

pub const BLOCK_SIZE: usize = 8;
pub const SEARCH_RADIUS: i32 = 8;

/// One displacement per block: a block of `I0` at `(x, y)` best matches the
/// block of `I1` at `(x + dx, y + dy)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockFlow {
    pub cols: usize,
    pub rows: usize,
    pub vectors: Vec<(i32, i32)>,
}

impl BlockFlow {
    pub fn at(&self, col: usize, row: usize) -> (i32, i32) {
        self.vectors[row * self.cols + col]
    }
}

/// Per-pixel displacements from the intermediate frame at time `t` back to
/// each endpoint: `F_t->0 = -t F` and `F_t->1 = (1 - t) F`, where `F` is
/// the forward flow from `I0` to `I1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub t: f32,
    pub to_0: Vec<[f32; 2]>,
    pub to_1: Vec<[f32; 2]>,
}

impl FlowField {
    pub fn zero(width: usize, height: usize, t: f32) -> Self {
        FlowField {
            width,
            height,
            t,
            to_0: vec![[0.0; 2]; width * height],
            to_1: vec![[0.0; 2]; width * height],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.to_0.iter().chain(&self.to_1).all(|v| *v == [0.0, 0.0])
    }
}

/// Sum of absolute differences of the `(x0, y0, w, h)` block against `i1`
/// displaced by `(dx, dy)`.
fn sad(i0: &GrayImage, i1: &GrayImage, (x0, y0, w, h): (usize, usize, usize, usize), (dx, dy): (i32, i32)) -> u32 {
    let mut total = 0u32;
    for y in y0..y0 + h {
        let y1 = (y as i32 + dy) as usize;
        for x in x0..x0 + w {
            let x1 = (x as i32 + dx) as usize;
            total += u32::from(i0.get(x, y).abs_diff(i1.get(x1, y1)));
        }
    }
    total
}

/// Exhaustive SAD block matching. Candidates whose displaced block leaves
/// the image are skipped. Ties go to the smallest `|dx| + |dy|` (so zero
/// motion wins any tie it takes part in), then to the first in row-major
/// scan order.
pub fn estimate_block_flow(i0: &GrayImage, i1: &GrayImage) -> Result<BlockFlow> {
    if i0.dims() != i1.dims() {
        return Err(Error::InvalidArgument(format!(
            "flow needs equal sizes, got {:?} and {:?}",
            i0.dims(),
            i1.dims()
        )));
    }
    let (width, height) = i0.dims();
    let cols = width.div_ceil(BLOCK_SIZE);
    let rows = height.div_ceil(BLOCK_SIZE);
    let vectors = (0..rows * cols)
        .into_par_iter()
        .map(|b| {
            let x0 = (b % cols) * BLOCK_SIZE;
            let y0 = (b / cols) * BLOCK_SIZE;
            let w = BLOCK_SIZE.min(width - x0);
            let h = BLOCK_SIZE.min(height - y0);
            let mut best = (sad(i0, i1, (x0, y0, w, h), (0, 0)), 0, (0, 0));
            for dy in -SEARCH_RADIUS..=SEARCH_RADIUS {
                for dx in -SEARCH_RADIUS..=SEARCH_RADIUS {
                    let inside = x0 as i32 + dx >= 0
                        && y0 as i32 + dy >= 0
                        && (x0 + w) as i32 + dx <= width as i32
                        && (y0 + h) as i32 + dy <= height as i32;
                    if !inside || (dx, dy) == (0, 0) {
                        continue;
                    }
                    let cost = sad(i0, i1, (x0, y0, w, h), (dx, dy));
                    let key = (cost, dx.abs() + dy.abs());
                    if key < (best.0, best.1) {
                        best = (cost, key.1, (dx, dy));
                    }
                }
            }
            best.2
        })
        .collect();
    Ok(BlockFlow { cols, rows, vectors })
}

/// Block flow spread to pixels and scaled to time `t` in `(0, 1)`.
pub fn estimate_flow(i0: &GrayImage, i1: &GrayImage, t: f32) -> Result<FlowField> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!("flow time {t} must lie in (0, 1)")));
    }
    let blocks = estimate_block_flow(i0, i1)?;
    let (width, height) = i0.dims();
    let mut field = FlowField::zero(width, height, t);
    for y in 0..height {
        for x in 0..width {
            let (dx, dy) = blocks.at(x / BLOCK_SIZE, y / BLOCK_SIZE);
            let f = [dx as f32, dy as f32];
            field.to_0[y * width + x] = [-t * f[0], -t * f[1]];
            field.to_1[y * width + x] = [(1.0 - t) * f[0], (1.0 - t) * f[1]];
        }
    }
    Ok(field)
}

#[cfg(test)]
pub(crate) mod tests {
    use rand::Rng as _;

    use super::*;
    use crate::rng;

    pub(crate) fn noise(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut r = rng::stream(seed, "flow-noise", 0);
        GrayImage::from_fn(w, h, |_, _| r.random())
    }

    pub(crate) fn shifted(img: &GrayImage, dx: i32, dy: i32) -> GrayImage {
        let (w, h) = img.dims();
        GrayImage::from_fn(w, h, |x, y| {
            let sx = (x as i32 - dx).clamp(0, w as i32 - 1) as usize;
            let sy = (y as i32 - dy).clamp(0, h as i32 - 1) as usize;
            img.get(sx, sy)
        })
    }

    #[test]
    fn identical_and_flat_frames_have_zero_flow() {
        let a = noise(64, 48, 1);
        assert!(estimate_flow(&a, &a, 0.5).unwrap().is_zero());
        let flat = GrayImage::filled(40, 40, 90);
        assert!(estimate_flow(&flat, &flat, 0.3).unwrap().is_zero());
        let other = GrayImage::filled(40, 40, 10);
        assert!(estimate_flow(&flat, &other, 0.3).unwrap().is_zero());
    }

    #[test]
    fn recovers_global_shift() {
        for (dx, dy) in [(2, 0), (-3, 1), (0, -5), (8, 8)] {
            let a = noise(96, 96, 3);
            let b = shifted(&a, dx, dy);
            let flow = estimate_block_flow(&a, &b).unwrap();
            let mut interior = 0;
            let mut hits = 0;
            for row in 1..flow.rows - 1 {
                for col in 1..flow.cols - 1 {
                    interior += 1;
                    hits += usize::from(flow.at(col, row) == (dx, dy));
                }
            }
            assert!(hits as f64 >= 0.9 * interior as f64, "{dx},{dy}: {hits}/{interior}");
        }
    }

    #[test]
    fn time_scaling() {
        let a = noise(32, 32, 4);
        let b = shifted(&a, 2, 0);
        let f = estimate_flow(&a, &b, 0.25).unwrap();
        let i = 12 * 32 + 12;
        assert_eq!(f.to_0[i], [-0.5, 0.0]);
        assert_eq!(f.to_1[i], [1.5, 0.0]);
        assert!(estimate_flow(&a, &b, 0.0).is_err());
        assert!(estimate_flow(&a, &b, 1.0).is_err());
        assert!(estimate_flow(&a, &GrayImage::filled(8, 8, 0), 0.5).is_err());
    }

    #[test]
    fn partial_blocks_at_the_border() {
        let a = noise(21, 13, 5);
        let f = estimate_block_flow(&a, &a).unwrap();
        assert_eq!((f.cols, f.rows), (3, 2));
        assert!(f.vectors.iter().all(|v| *v == (0, 0)));
    }
}
