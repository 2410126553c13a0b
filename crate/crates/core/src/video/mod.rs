//! Rendering text as gesture frames: 1 FPS keyframes, 24 FPS by
//! duplication, 60 FPS by time resampling with interpolated in-between
//! frames.

mod flow;
mod sequence_io;
mod synth;

pub use flow::{estimate_block_flow, estimate_flow, BlockFlow, FlowField, BLOCK_SIZE, SEARCH_RADIUS};
pub use sequence_io::{
    frame_file_name, read_manifest, read_sequence, sha256_hex, write_sequence, FrameEntry, Manifest,
    MANIFEST_FILE, MANIFEST_SCHEMA_VERSION,
};
pub use synth::{crossfade, extract_context, synthesize_frame, ContextFeatures, OCCLUSION_THRESHOLD};

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::datagen::{render_class_shape, ShapeJitter};
use crate::error::{Error, Result};
use crate::vision::{pnm, resize, GrayImage};

pub const ATLAS_SIDE: usize = 128;
pub const DUPLICATION_FPS: u32 = 24;
pub const OUTPUT_FPS: u32 = 60;

/// Letter images A-Z (index 0-25) plus an all-black frame for SPACE.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GestureAtlas {
    letters: Vec<GrayImage>,
    blank: GrayImage,
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("pgm" | "ppm" | "pnm")
    )
}

impl GestureAtlas {
    /// Exactly 26 images of 128x128, A first.
    pub fn new(letters: Vec<GrayImage>) -> Result<Self> {
        if letters.len() != 26 {
            return Err(Error::InvalidArgument(format!("atlas needs 26 letters, got {}", letters.len())));
        }
        if let Some(i) = letters.iter().position(|l| l.dims() != (ATLAS_SIDE, ATLAS_SIDE)) {
            return Err(Error::InvalidArgument(format!(
                "atlas frame {} is {:?}, expected {ATLAS_SIDE}x{ATLAS_SIDE}",
                (b'A' + i as u8) as char,
                letters[i].dims()
            )));
        }
        Ok(GestureAtlas {
            letters,
            blank: GrayImage::filled(ATLAS_SIDE, ATLAS_SIDE, 0),
        })
    }

    /// Procedural stand-in: the silhouette pattern of each letter's class.
    pub fn synthetic() -> Self {
        let letters = (0..26)
            .map(|c| render_class_shape(c, ATLAS_SIDE, ShapeJitter::default()))
            .collect();
        GestureAtlas::new(letters).expect("synthetic atlas is well formed")
    }

    /// Reads `dir/<LETTER>/`, taking the first image file by name in each
    /// letter directory and resizing it to 128x128.
    pub fn load(dir: &Path) -> Result<Self> {
        let mut letters = Vec::with_capacity(26);
        for c in b'A'..=b'Z' {
            let sub = dir.join((c as char).to_string());
            let mut files: Vec<_> = fs::read_dir(&sub)
                .map_err(|e| Error::io(&sub, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && is_image(p))
                .collect();
            files.sort();
            let first = files
                .first()
                .ok_or_else(|| Error::format(&sub, "no PGM/PPM image for this letter"))?;
            letters.push(resize(&pnm::read_pgm(first)?, ATLAS_SIDE, ATLAS_SIDE)?);
        }
        GestureAtlas::new(letters)
    }

    /// Writes the layout [`GestureAtlas::load`] reads.
    pub fn save(&self, dir: &Path) -> Result<()> {
        for (i, img) in self.letters.iter().enumerate() {
            let sub = dir.join(((b'A' + i as u8) as char).to_string());
            fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            pnm::write_pgm(&sub.join("0000.pgm"), img)?;
        }
        Ok(())
    }

    pub fn letter(&self, index: usize) -> &GrayImage {
        &self.letters[index]
    }

    pub fn blank(&self) -> &GrayImage {
        &self.blank
    }

    pub fn frame_for(&self, c: char) -> Result<&GrayImage> {
        match c {
            'A'..='Z' => Ok(&self.letters[(c as u8 - b'A') as usize]),
            ' ' => Ok(&self.blank),
            other => Err(Error::UnsupportedChar(other)),
        }
    }
}

/// Frames at a fixed rate; `keyframes` is the number of source characters,
/// each held for one second.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameSequence {
    pub frames: Vec<GrayImage>,
    pub fps: u32,
    pub keyframes: usize,
}

impl FrameSequence {
    pub fn new(frames: Vec<GrayImage>, fps: u32, keyframes: usize) -> Result<Self> {
        if ![1, DUPLICATION_FPS, OUTPUT_FPS].contains(&fps) {
            return Err(Error::InvalidArgument(format!("fps {fps} must be 1, 24 or 60")));
        }
        if keyframes == 0 {
            return Err(Error::Empty("frame sequence"));
        }
        if frames.len() != fps as usize * keyframes {
            return Err(Error::InvalidArgument(format!(
                "{} frames for {keyframes} keyframes at {fps} FPS",
                frames.len()
            )));
        }
        let dims = frames[0].dims();
        if frames.iter().any(|f| f.dims() != dims) {
            return Err(Error::InvalidArgument("frames differ in size".into()));
        }
        Ok(FrameSequence { frames, fps, keyframes })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }
}

/// One atlas frame per character at 1 FPS; SPACE maps to the blank frame.
pub fn text_to_keyframes(text: &str, atlas: &GestureAtlas) -> Result<FrameSequence> {
    if text.is_empty() {
        return Err(Error::Empty("text to render"));
    }
    let frames = text
        .chars()
        .map(|c| atlas.frame_for(c).cloned())
        .collect::<Result<Vec<_>>>()?;
    let n = frames.len();
    FrameSequence::new(frames, 1, n)
}

/// 24 copies of every keyframe: output frame `i` is source `i / 24`.
pub fn duplicate_frames(seq: &FrameSequence) -> Result<FrameSequence> {
    if seq.fps != 1 {
        return Err(Error::InvalidArgument(format!("duplication expects 1 FPS input, got {}", seq.fps)));
    }
    let per = DUPLICATION_FPS as usize;
    let frames = (0..seq.len() * per).map(|i| seq.frames[i / per].clone()).collect();
    FrameSequence::new(frames, DUPLICATION_FPS, seq.keyframes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpolationMethod {
    Crossfade,
    Flow,
}

impl fmt::Display for InterpolationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InterpolationMethod::Crossfade => "crossfade",
            InterpolationMethod::Flow => "flow",
        })
    }
}

impl FromStr for InterpolationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crossfade" => Ok(InterpolationMethod::Crossfade),
            "flow" => Ok(InterpolationMethod::Flow),
            other => Err(Error::InvalidArgument(format!(
                "interpolation method {other:?} is not crossfade or flow"
            ))),
        }
    }
}

/// Source position of 60 FPS output frame `j` in a 24 FPS sequence: the
/// earlier source index and the fraction towards the next, in fifths.
/// Output time `j / 60` is source time `24 j / 60 = 2 j / 5`.
pub fn source_position(j: usize) -> (usize, u32) {
    ((2 * j) / 5, ((2 * j) % 5) as u32)
}

/// Between two frames at time `t`.
pub fn interpolate_pair(i0: &GrayImage, i1: &GrayImage, t: f32, method: InterpolationMethod) -> Result<GrayImage> {
    match method {
        InterpolationMethod::Crossfade => crossfade(i0, i1, t),
        InterpolationMethod::Flow => {
            let flow = estimate_flow(i0, i1, t)?;
            let context = extract_context(i0, i1)?;
            synthesize_frame(i0, i1, &flow, &context, t)
        }
    }
}

/// Resample 24 FPS to 60 FPS. Output frames whose time coincides with a
/// source frame (every fifth) copy it; the rest are interpolated between
/// the bracketing source frames, the last one clamped. Frames are computed
/// in parallel and collected in order.
pub fn interpolate_sequence(seq: &FrameSequence, method: InterpolationMethod) -> Result<FrameSequence> {
    if seq.fps != DUPLICATION_FPS {
        return Err(Error::InvalidArgument(format!("interpolation expects 24 FPS input, got {}", seq.fps)));
    }
    let last = seq.len() - 1;
    let count = OUTPUT_FPS as usize * seq.keyframes;
    let frames = (0..count)
        .into_par_iter()
        .map(|j| {
            let (i, fifths) = source_position(j);
            let a = &seq.frames[i.min(last)];
            let b = &seq.frames[(i + 1).min(last)];
            if fifths == 0 || a == b {
                // identical endpoints interpolate to themselves
                return Ok(a.clone());
            }
            interpolate_pair(a, b, fifths as f32 / 5.0, method)
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, OUTPUT_FPS, seq.keyframes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyframes_follow_the_text() {
        let atlas = GestureAtlas::synthetic();
        let s = text_to_keyframes("AB", &atlas).unwrap();
        assert_eq!(s.frames, vec![atlas.letter(0).clone(), atlas.letter(1).clone()]);
        assert_eq!((s.fps, s.keyframes), (1, 2));
        let s = text_to_keyframes("A A", &atlas).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.frames[1].pixels().iter().all(|&p| p == 0));
        match text_to_keyframes("A1", &atlas) {
            Err(Error::UnsupportedChar('1')) => {}
            other => panic!("{other:?}"),
        }
        assert!(text_to_keyframes("a", &atlas).is_err());
        assert!(text_to_keyframes("", &atlas).is_err());
    }

    #[test]
    fn atlas_letters_are_distinct_and_sized() {
        let atlas = GestureAtlas::synthetic();
        for i in 0..26 {
            assert_eq!(atlas.letter(i).dims(), (128, 128));
            for j in 0..i {
                assert_ne!(atlas.letter(i), atlas.letter(j));
            }
        }
        assert!(GestureAtlas::new(vec![GrayImage::filled(128, 128, 0); 25]).is_err());
        assert!(GestureAtlas::new(vec![GrayImage::filled(64, 64, 0); 26]).is_err());
    }

    #[test]
    fn atlas_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let atlas = GestureAtlas::synthetic();
        atlas.save(dir.path()).unwrap();
        assert_eq!(GestureAtlas::load(dir.path()).unwrap(), atlas);
        // other sizes are resized on load
        pnm::write_pgm(&dir.path().join("B").join("0000.pgm"), &GrayImage::filled(64, 32, 7)).unwrap();
        let loaded = GestureAtlas::load(dir.path()).unwrap();
        assert_eq!(loaded.letter(1), &GrayImage::filled(128, 128, 7));
        fs::remove_file(dir.path().join("C").join("0000.pgm")).unwrap();
        assert!(GestureAtlas::load(dir.path()).is_err());
    }

    #[test]
    fn duplication_contract() {
        let atlas = GestureAtlas::synthetic();
        let key = text_to_keyframes("AB", &atlas).unwrap();
        let dup = duplicate_frames(&key).unwrap();
        assert_eq!(dup.len(), 48);
        assert_eq!(dup.frames[30], key.frames[1]);
        assert_eq!(dup.frames[0], key.frames[0]);
        for (i, f) in dup.frames.iter().enumerate() {
            assert_eq!(f, &key.frames[i / 24]);
        }
        assert!(duplicate_frames(&dup).is_err());
    }

    #[test]
    fn alignment_arithmetic() {
        assert_eq!(source_position(0), (0, 0));
        assert_eq!(source_position(5), (2, 0));
        assert_eq!(source_position(1), (0, 2));
        assert_eq!(source_position(3), (1, 1));
        for j in 0..600 {
            let (i, f) = source_position(j);
            assert_eq!(f == 0, (24 * j) % 60 == 0);
            assert_eq!(i * 60 + f as usize * 12, 24 * j);
        }
    }

    #[test]
    fn interpolation_contract() {
        let atlas = GestureAtlas::synthetic();
        let dup = duplicate_frames(&text_to_keyframes("HI", &atlas).unwrap()).unwrap();
        for method in [InterpolationMethod::Crossfade, InterpolationMethod::Flow] {
            let out = interpolate_sequence(&dup, method).unwrap();
            assert_eq!(out.len(), 120);
            assert_eq!(out.fps, 60);
            for j in (0..120).step_by(5) {
                assert_eq!(out.frames[j], dup.frames[j * 2 / 5]);
            }
            // the boundary between H and I at source 23 -> 24
            let (lo, hi) = (&dup.frames[23], &dup.frames[24]);
            let mid = &out.frames[59];
            if method == InterpolationMethod::Crossfade {
                for k in 0..mid.pixels().len() {
                    let (a, b) = (lo.pixels()[k], hi.pixels()[k]);
                    assert!(a.min(b) <= mid.pixels()[k] && mid.pixels()[k] <= a.max(b));
                }
            }
        }
        assert!(interpolate_sequence(&text_to_keyframes("HI", &atlas).unwrap(), InterpolationMethod::Flow).is_err());
    }

    #[test]
    fn identical_input_gives_identical_output() {
        let frame = GestureAtlas::synthetic().letter(4).clone();
        let seq = FrameSequence::new(vec![frame.clone(); 48], 24, 2).unwrap();
        for method in [InterpolationMethod::Crossfade, InterpolationMethod::Flow] {
            let out = interpolate_sequence(&seq, method).unwrap();
            assert!(out.frames.iter().all(|f| *f == frame));
        }
    }

    #[test]
    fn method_names() {
        assert_eq!("flow".parse::<InterpolationMethod>().unwrap(), InterpolationMethod::Flow);
        assert_eq!(InterpolationMethod::Crossfade.to_string(), "crossfade");
        assert!("blur".parse::<InterpolationMethod>().is_err());
    }
}
