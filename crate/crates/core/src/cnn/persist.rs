//! CNN model file, little endian:
//!
//! ```text
//! magic "SBCN" | version u16 | scalar width u8
//! input h u32 | w u32 | c u32
//! n_classes u16 | label code u8 * n_classes
//! n_layers u32, then per layer
//!   tag 0 conv:    filters u32 | kernel u32 | padding u8 (0 valid, 1 same)
//!   tag 1 maxpool: size u32 | stride u32 | ceil u8
//!   tag 2 dense:   units u32
//!   tag 3 dropout: rate f64 bits
//! n_params u64, then every parameter at the scalar width, in
//! `param_slices` order
//! ```

use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{Architecture, CnnModel, LayerSpec, Padding};
use crate::error::{Error, Result};
use crate::labels::{Label, LabelSpace};
use crate::scalar::Real;

pub const CNN_FORMAT_VERSION: u16 = 1;
const MAGIC: &[u8; 4] = b"SBCN";

fn u32_of(v: usize) -> u32 {
    u32::try_from(v).expect("model dimension exceeds u32")
}

pub fn encode_cnn<T: Real>(model: &CnnModel<T>) -> Vec<u8> {
    let mut w = Vec::new();
    let arch = model.architecture();
    w.extend_from_slice(MAGIC);
    w.write_u16::<LE>(CNN_FORMAT_VERSION).unwrap();
    w.write_u8(T::WIDTH).unwrap();
    for d in arch.input {
        w.write_u32::<LE>(u32_of(d)).unwrap();
    }
    w.write_u16::<LE>(model.classes().len() as u16).unwrap();
    for l in model.classes().labels() {
        w.write_u8(l.code()).unwrap();
    }
    w.write_u32::<LE>(u32_of(arch.layers.len())).unwrap();
    for spec in &arch.layers {
        match *spec {
            LayerSpec::Conv { filters, kernel, padding } => {
                w.write_u8(0).unwrap();
                w.write_u32::<LE>(u32_of(filters)).unwrap();
                w.write_u32::<LE>(u32_of(kernel)).unwrap();
                w.write_u8(u8::from(padding == Padding::Same)).unwrap();
            }
            LayerSpec::MaxPool { size, stride, ceil } => {
                w.write_u8(1).unwrap();
                w.write_u32::<LE>(u32_of(size)).unwrap();
                w.write_u32::<LE>(u32_of(stride)).unwrap();
                w.write_u8(u8::from(ceil)).unwrap();
            }
            LayerSpec::Dense { units } => {
                w.write_u8(2).unwrap();
                w.write_u32::<LE>(u32_of(units)).unwrap();
            }
            LayerSpec::Dropout { rate } => {
                w.write_u8(3).unwrap();
                w.write_u64::<LE>(rate.to_bits()).unwrap();
            }
        }
    }
    w.write_u64::<LE>(model.param_count() as u64).unwrap();
    for slice in model.param_slices() {
        for &v in slice {
            if T::WIDTH == 4 {
                w.write_u32::<LE>((v.f64() as f32).to_bits()).unwrap();
            } else {
                w.write_u64::<LE>(v.f64().to_bits()).unwrap();
            }
        }
    }
    w
}

pub fn decode_cnn<T: Real>(bytes: &[u8]) -> Result<CnnModel<T>, String> {
    let mut r = Cursor::new(bytes);
    let io = |e: std::io::Error| format!("truncated cnn file: {e}");
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err("not a cnn model file".into());
    }
    let version = r.read_u16::<LE>().map_err(io)?;
    if version != CNN_FORMAT_VERSION {
        return Err(format!("unsupported cnn format version {version}"));
    }
    let width = r.read_u8().map_err(io)?;
    if width != T::WIDTH {
        return Err(format!("model stores {width}-byte scalars, reader expects {}", T::WIDTH));
    }
    let mut input = [0usize; 3];
    for d in &mut input {
        *d = r.read_u32::<LE>().map_err(io)? as usize;
    }
    let n_classes = r.read_u16::<LE>().map_err(io)? as usize;
    let labels = (0..n_classes)
        .map(|_| {
            let code = r.read_u8().map_err(io)?;
            Label::from_code(code).ok_or_else(|| format!("unknown label code {code}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let classes = LabelSpace::new(labels).map_err(|e| e.to_string())?;
    let n_layers = r.read_u32::<LE>().map_err(io)? as usize;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        let spec = match r.read_u8().map_err(io)? {
            0 => LayerSpec::Conv {
                filters: r.read_u32::<LE>().map_err(io)? as usize,
                kernel: r.read_u32::<LE>().map_err(io)? as usize,
                padding: match r.read_u8().map_err(io)? {
                    0 => Padding::Valid,
                    1 => Padding::Same,
                    p => return Err(format!("unknown padding {p}")),
                },
            },
            1 => LayerSpec::MaxPool {
                size: r.read_u32::<LE>().map_err(io)? as usize,
                stride: r.read_u32::<LE>().map_err(io)? as usize,
                ceil: r.read_u8().map_err(io)? != 0,
            },
            2 => LayerSpec::Dense {
                units: r.read_u32::<LE>().map_err(io)? as usize,
            },
            3 => LayerSpec::Dropout {
                rate: f64::from_bits(r.read_u64::<LE>().map_err(io)?),
            },
            tag => return Err(format!("unknown layer tag {tag}")),
        };
        layers.push(spec);
    }
    let arch = Architecture { input, layers };
    let mut model = CnnModel::<T>::with_architecture(arch, &classes, 0).map_err(|e| e.to_string())?;
    let n_params = r.read_u64::<LE>().map_err(io)?;
    if n_params != model.param_count() as u64 {
        return Err(format!(
            "{n_params} parameters stored, architecture needs {}",
            model.param_count()
        ));
    }
    for slice in model.param_slices_mut() {
        for v in slice.iter_mut() {
            *v = if T::WIDTH == 4 {
                T::of(f32::from_bits(r.read_u32::<LE>().map_err(io)?) as f64)
            } else {
                T::from_bits64(r.read_u64::<LE>().map_err(io)?)
            };
        }
    }
    if (r.position() as usize) != bytes.len() {
        return Err("trailing bytes after cnn".into());
    }
    Ok(model)
}

impl<T: Real> CnnModel<T> {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, encode_cnn(self)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        decode_cnn(&bytes).map_err(|m| Error::format(path, m))
    }
}
