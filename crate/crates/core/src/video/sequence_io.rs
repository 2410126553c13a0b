//! Frame sequences on disk: `frame_000000.pgm`, `frame_000001.pgm`, ... (binary
//! P5) plus `manifest.json`:
//!
//! ```json
//! {"schema_version": 1, "fps": 60, "keyframes": 2, "frame_count": 120,
//!  "width": 128, "height": 128,
//!  "frames": [{"file": "frame_000000.pgm", "sha256": "<hex>"}, ...]}
//! ```
//!
//! Checksums cover the PGM file bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::FrameSequence;
use crate::error::{Error, Result};
use crate::vision::{pnm, GrayImage};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub fps: u32,
    pub keyframes: usize,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub frames: Vec<FrameEntry>,
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.pgm")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write every frame and the manifest into `dir` (created if needed).
/// Returns the manifest path.
pub fn write_sequence(seq: &FrameSequence, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut frames = Vec::with_capacity(seq.frames.len());
    for (i, frame) in seq.frames.iter().enumerate() {
        let name = frame_file_name(i);
        let bytes = pnm::encode_pgm(frame);
        let path = dir.join(&name);
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        frames.push(FrameEntry {
            file: name,
            sha256: sha256_hex(&bytes),
        });
    }
    let (width, height) = seq.dims();
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        fps: seq.fps,
        keyframes: seq.keyframes,
        frame_count: seq.frames.len(),
        width,
        height,
        frames,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(Error::format(
            &path,
            format!("unsupported manifest schema {}", manifest.schema_version),
        ));
    }
    if manifest.frame_count != manifest.frames.len() {
        return Err(Error::format(
            &path,
            format!("frame_count {} but {} entries", manifest.frame_count, manifest.frames.len()),
        ));
    }
    Ok(manifest)
}

/// Inverse of [`write_sequence`]; every frame is checked against its
/// manifest checksum and size.
pub fn read_sequence(dir: &Path) -> Result<FrameSequence> {
    let manifest = read_manifest(dir)?;
    let mut frames: Vec<GrayImage> = Vec::with_capacity(manifest.frames.len());
    for entry in &manifest.frames {
        if entry.file.contains(['/', '\\']) || entry.file.starts_with('.') {
            return Err(Error::format(dir.join(MANIFEST_FILE), format!("bad frame name {:?}", entry.file)));
        }
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let actual = sha256_hex(&bytes);
        if actual != entry.sha256 {
            return Err(Error::Checksum {
                path,
                expected: entry.sha256.clone(),
                actual,
            });
        }
        let img = pnm::decode(&bytes).map_err(|m| Error::format(&path, m))?;
        if img.dims() != (manifest.width, manifest.height) {
            return Err(Error::format(&path, format!("frame is {:?}, manifest says {}x{}", img.dims(), manifest.width, manifest.height)));
        }
        frames.push(img);
    }
    FrameSequence::new(frames, manifest.fps, manifest.keyframes)
}
