//! Binary model container:
//!
//! ```text
//! "SACT" | version u32 | layer count u32 | input rank u32 | input dims u32...
//! per layer: tag u32, then
//!   0 Affine      inputs u32, outputs u32
//!   1 Conv2d      in u32, out u32, kernel u32, stride u32, padding u32
//!   2 Activation  kind u32, beta f64, negative_slope f64
//!   3 Flatten
//!   4 MaxPool     size u32
//! parameters: every tensor in layer order as f32
//! ```
//!
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use super::{Layer, Model, Scalar, Tensor};
use crate::activations::{ActivationKind, ActivationSpec};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SACT";
const VERSION: u32 = 1;

pub fn to_bytes<T: Scalar>(model: &Model<T>) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    let u32s = |out: &mut Vec<u8>, vals: &[usize]| {
        for &v in vals {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
    };
    u32s(&mut out, &[VERSION as usize, model.layers().len(), model.input_shape().len()]);
    u32s(&mut out, model.input_shape());
    for layer in model.layers() {
        match *layer {
            Layer::Affine { inputs, outputs } => u32s(&mut out, &[0, inputs, outputs]),
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => u32s(&mut out, &[1, in_channels, out_channels, kernel, stride, padding]),
            Layer::Activation(spec) => {
                u32s(&mut out, &[2, spec.kind.tag() as usize]);
                out.extend_from_slice(&spec.beta.to_le_bytes());
                out.extend_from_slice(&spec.negative_slope.to_le_bytes());
            }
            Layer::Flatten => u32s(&mut out, &[3]),
            Layer::MaxPool { size } => u32s(&mut out, &[4, size]),
        }
    }
    for t in model.params().iter().flatten() {
        for v in t.data() {
            out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    out
}

pub fn from_bytes<T: Scalar>(bytes: &[u8]) -> Result<Model<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("missing SACT magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let count = r.u32()?;
    let rank = r.u32()?;
    let input_shape = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let layer = match r.u32()? {
            0 => Layer::Affine {
                inputs: r.u32()?,
                outputs: r.u32()?,
            },
            1 => Layer::Conv2d {
                in_channels: r.u32()?,
                out_channels: r.u32()?,
                kernel: r.u32()?,
                stride: r.u32()?,
                padding: r.u32()?,
            },
            2 => {
                let tag = r.u32()?;
                let kind = ActivationKind::from_tag(tag as u32)
                    .ok_or_else(|| Error::Checkpoint(format!("unknown activation tag {tag}")))?;
                let beta = r.f64()?;
                let slope = r.f64()?;
                Layer::Activation(ActivationSpec {
                    kind,
                    beta,
                    negative_slope: slope,
                })
            }
            3 => Layer::Flatten,
            4 => Layer::MaxPool { size: r.u32()? },
            tag => return Err(Error::Checkpoint(format!("unknown layer tag {tag}"))),
        };
        layers.push(layer);
    }
    let mut params = Vec::with_capacity(count);
    for layer in &layers {
        let mut group = Vec::new();
        for shape in layer.param_shapes() {
            let n = shape.iter().product::<usize>();
            let raw = r.take(4 * n)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| T::of(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64))
                .collect();
            group.push(Tensor::new(shape, data)?);
        }
        params.push(group);
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Model::from_parts(input_shape, layers, params)
}

pub fn save<T: Scalar>(model: &Model<T>, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model))?;
    Ok(())
}

pub fn load<T: Scalar>(path: &Path) -> Result<Model<T>> {
    from_bytes(&fs::read(path)?)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact_for_f32() {
        let spec = ActivationSpec::new(ActivationKind::Prelu).with_negative_slope(0.3).unwrap();
        let model = Model::<f32>::smoke_cnn(1, 8, 8, 3, spec, 11).unwrap();
        let bytes = to_bytes(&model);
        assert_eq!(&bytes[..4], b"SACT");
        let back: Model<f32> = from_bytes(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn swish_beta_survives() {
        let spec = ActivationSpec::new(ActivationKind::Swish).with_beta(1.702).unwrap();
        let model = Model::<f32>::mlp(vec![3], &[4], 2, spec, 0).unwrap();
        let back: Model<f32> = from_bytes(&to_bytes(&model)).unwrap();
        assert_eq!(back.layers(), model.layers());
    }

    #[test]
    fn corrupt_inputs() {
        let model = Model::<f32>::logistic(vec![2], 2, 0).unwrap();
        let bytes = to_bytes(&model);
        assert!(from_bytes::<f32>(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(from_bytes::<f32>(&extra).is_err());
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(matches!(from_bytes::<f32>(&bad), Err(Error::Checkpoint(_))));
    }
}
