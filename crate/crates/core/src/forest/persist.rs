//! Forest model file, little endian:
//!
//! ```text
//! magic "SBRF" | version u16 | scalar width u8
//! n_estimators u32 | max_depth u32 (0xFFFF_FFFF = none) | min_samples_split u32
//! min_samples_leaf u32 | bootstrap u8 | max_features u32 (0 = sqrt)
//! n_features u32 | n_classes u16 | label code u8 * n_classes
//! n_trees u32, then per tree: n_nodes u32, then per node
//!   tag 0 (split): feature u32 | threshold f64 bits | left u32 | right u32
//!   tag 1 (leaf):  count u32 * n_classes
//! ```

use std::io::{Cursor, Read};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{ForestHyperparams, ForestModel, Node, Tree};
use crate::error::{Error, Result};
use crate::labels::{Label, LabelSpace};
use crate::scalar::Real;

pub const FOREST_FORMAT_VERSION: u16 = 1;
const MAGIC: &[u8; 4] = b"SBRF";
const NO_DEPTH: u32 = u32::MAX;

fn u32_of(v: usize) -> u32 {
    u32::try_from(v).expect("model dimension exceeds u32")
}

pub fn encode_forest<T: Real>(model: &ForestModel<T>) -> Vec<u8> {
    let mut w = Vec::new();
    let p = &model.params;
    w.extend_from_slice(MAGIC);
    w.write_u16::<LE>(FOREST_FORMAT_VERSION).unwrap();
    w.write_u8(T::WIDTH).unwrap();
    w.write_u32::<LE>(u32_of(p.n_estimators)).unwrap();
    w.write_u32::<LE>(p.max_depth.map_or(NO_DEPTH, u32_of)).unwrap();
    w.write_u32::<LE>(u32_of(p.min_samples_split)).unwrap();
    w.write_u32::<LE>(u32_of(p.min_samples_leaf)).unwrap();
    w.write_u8(u8::from(p.bootstrap)).unwrap();
    w.write_u32::<LE>(p.max_features.map_or(0, u32_of)).unwrap();
    w.write_u32::<LE>(u32_of(model.n_features)).unwrap();
    w.write_u16::<LE>(model.classes.len() as u16).unwrap();
    for l in model.classes.labels() {
        w.write_u8(l.code()).unwrap();
    }
    w.write_u32::<LE>(u32_of(model.trees.len())).unwrap();
    for tree in &model.trees {
        w.write_u32::<LE>(u32_of(tree.nodes().len())).unwrap();
        for node in tree.nodes() {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    w.write_u8(0).unwrap();
                    w.write_u32::<LE>(u32_of(*feature)).unwrap();
                    w.write_u64::<LE>(threshold.f64().to_bits()).unwrap();
                    w.write_u32::<LE>(u32_of(*left)).unwrap();
                    w.write_u32::<LE>(u32_of(*right)).unwrap();
                }
                Node::Leaf { counts } => {
                    w.write_u8(1).unwrap();
                    for &c in counts {
                        w.write_u32::<LE>(c).unwrap();
                    }
                }
            }
        }
    }
    w
}

fn bad(msg: impl Into<String>) -> String {
    msg.into()
}

pub fn decode_forest<T: Real>(bytes: &[u8]) -> Result<ForestModel<T>, String> {
    let mut r = Cursor::new(bytes);
    let io = |e: std::io::Error| format!("truncated forest file: {e}");
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(bad("not a forest model file"));
    }
    let version = r.read_u16::<LE>().map_err(io)?;
    if version != FOREST_FORMAT_VERSION {
        return Err(format!("unsupported forest format version {version}"));
    }
    let width = r.read_u8().map_err(io)?;
    if width != T::WIDTH {
        return Err(format!("model stores {width}-byte scalars, reader expects {}", T::WIDTH));
    }
    let n_estimators = r.read_u32::<LE>().map_err(io)? as usize;
    let depth = r.read_u32::<LE>().map_err(io)?;
    let min_samples_split = r.read_u32::<LE>().map_err(io)? as usize;
    let min_samples_leaf = r.read_u32::<LE>().map_err(io)? as usize;
    let bootstrap = r.read_u8().map_err(io)? != 0;
    let max_features = r.read_u32::<LE>().map_err(io)? as usize;
    let params = ForestHyperparams {
        n_estimators,
        max_depth: (depth != NO_DEPTH).then_some(depth as usize),
        min_samples_split,
        min_samples_leaf,
        bootstrap,
        max_features: (max_features != 0).then_some(max_features),
    };
    params.validate().map_err(|e| e.to_string())?;
    let n_features = r.read_u32::<LE>().map_err(io)? as usize;
    let n_classes = r.read_u16::<LE>().map_err(io)? as usize;
    let labels = (0..n_classes)
        .map(|_| {
            let code = r.read_u8().map_err(io)?;
            Label::from_code(code).ok_or_else(|| format!("unknown label code {code}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let classes = LabelSpace::new(labels).map_err(|e| e.to_string())?;
    let n_trees = r.read_u32::<LE>().map_err(io)? as usize;
    if n_trees != n_estimators {
        return Err(format!("{n_trees} trees stored for n_estimators = {n_estimators}"));
    }
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n_nodes = r.read_u32::<LE>().map_err(io)? as usize;
        let mut nodes = Vec::with_capacity(n_nodes.min(1 << 20));
        for _ in 0..n_nodes {
            let node = match r.read_u8().map_err(io)? {
                0 => {
                    let feature = r.read_u32::<LE>().map_err(io)? as usize;
                    let threshold = T::from_bits64(r.read_u64::<LE>().map_err(io)?);
                    let left = r.read_u32::<LE>().map_err(io)? as usize;
                    let right = r.read_u32::<LE>().map_err(io)? as usize;
                    if feature >= n_features || left >= n_nodes || right >= n_nodes {
                        return Err(bad("split node index out of range"));
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    }
                }
                1 => Node::Leaf {
                    counts: (0..n_classes)
                        .map(|_| r.read_u32::<LE>().map_err(io))
                        .collect::<Result<_, _>>()?,
                },
                tag => return Err(format!("unknown node tag {tag}")),
            };
            nodes.push(node);
        }
        if nodes.is_empty() {
            return Err(bad("empty tree"));
        }
        trees.push(Tree::from_nodes(nodes));
    }
    if (r.position() as usize) != bytes.len() {
        return Err(bad("trailing bytes after forest"));
    }
    Ok(ForestModel {
        trees,
        params,
        classes,
        n_features,
    })
}

impl<T: Real> ForestModel<T> {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, encode_forest(self)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        decode_forest(&bytes).map_err(|m| Error::format(path, m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    fn model<T: Real>() -> ForestModel<T> {
        let x: Vec<_> = (0..40)
            .map(|i| {
                let v = i as f64 / 7.0;
                FeatureVector::from_raw(vec![T::of(v.sin()), T::of(v.cos()), T::of(v)])
            })
            .collect();
        let y: Vec<usize> = (0..40).map(|i| (i / 7) % 3).collect();
        let classes = LabelSpace::new(vec![Label::Letter(2), Label::Space, Label::Blank]).unwrap();
        let p = ForestHyperparams {
            n_estimators: 7,
            max_depth: None,
            ..Default::default()
        };
        ForestModel::train(&x, &y, &classes, &p, 42).unwrap()
    }

    #[test]
    fn bit_exact_round_trip() {
        let m64 = model::<f64>();
        let bytes = encode_forest(&m64);
        assert_eq!(decode_forest::<f64>(&bytes).unwrap(), m64);
        assert_eq!(encode_forest(&decode_forest::<f64>(&bytes).unwrap()), bytes);
        let m32 = model::<f32>();
        assert_eq!(decode_forest::<f32>(&encode_forest(&m32)).unwrap(), m32);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode_forest(&model::<f64>());
        assert!(decode_forest::<f32>(&bytes).is_err());
        assert!(decode_forest::<f64>(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_forest::<f64>(&extra).is_err());
        let mut wrong = bytes;
        wrong[0] = b'X';
        assert!(decode_forest::<f64>(&wrong).is_err());
    }
}
