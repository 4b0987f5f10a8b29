//! `FKM1` model files.
//!
//! ```text
//! "FKM1"                 magic
//! u32                    format version (1)
//! u32                    field count, then per field:
//!   u32 len, key bytes, u32 len, value bytes   (UTF-8, sorted by key)
//! per layer, in order (convolutions then dense):
//!   u64 n, n × f64 weights;  u64 m, m × f64 biases
//! u64 k, k × f64         per-epoch training loss
//! ```
//!
//! All integers and floats are little-endian. Network fields use the
//! reserved keys `input_shape`, `conv`, `dense` and `activation`; every other
//! key is model metadata.

use std::collections::BTreeMap;

use super::network::{ConvSpec, Model, NetworkSpec};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FKM1";
pub const VERSION: u32 = 1;

const RESERVED: [&str; 4] = ["input_shape", "conv", "dense", "activation"];

fn spec_fields(spec: &NetworkSpec) -> BTreeMap<String, String> {
    let (c, h, w) = spec.input_shape;
    let conv = spec
        .conv_layers
        .iter()
        .map(|l| format!("{}x{}:{}", l.kernel_h, l.kernel_w, l.filters))
        .collect::<Vec<_>>()
        .join(",");
    let dense = spec.dense_layers.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
    BTreeMap::from([
        ("activation".to_string(), "relu".to_string()),
        ("conv".to_string(), conv),
        ("dense".to_string(), dense),
        ("input_shape".to_string(), format!("{c},{h},{w}")),
    ])
}

pub fn to_bytes(model: &Model) -> Vec<u8> {
    let mut fields = model.metadata.clone();
    fields.retain(|k, _| !RESERVED.contains(&k.as_str()));
    fields.extend(spec_fields(&model.spec));
    let mut out = Vec::with_capacity(16 + 8 * model.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(fields.len() as u32).to_le_bytes());
    for (k, v) in &fields {
        for s in [k, v] {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
    }
    let mut model = model.clone();
    for buf in model.parameter_buffers_mut() {
        put_array(&mut out, buf);
    }
    put_array(&mut out, &model.loss_history);
    out
}

fn put_array(out: &mut Vec<u8>, values: &[f64]) {
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Model(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Model("field is not UTF-8".into()))
    }

    fn array(&mut self, expected: usize) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        if n != expected {
            return Err(Error::Model(format!("array of {n} values where the network needs {expected}")));
        }
        self.floats(n)
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Model("array length overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Model(format!("bad {what} entry '{t}'"))))
        .collect()
}

fn parse_spec(fields: &BTreeMap<String, String>) -> Result<NetworkSpec> {
    let get = |k: &str| fields.get(k).ok_or_else(|| Error::Model(format!("missing field '{k}'")));
    if get("activation")? != "relu" {
        return Err(Error::Model(format!("unsupported activation '{}'", get("activation")?)));
    }
    let shape = parse_list(get("input_shape")?, "input_shape")?;
    let [c, h, w] = shape[..] else {
        return Err(Error::Model("input_shape needs three dimensions".into()));
    };
    let conv_field = get("conv")?;
    let conv_layers = if conv_field.is_empty() {
        Vec::new()
    } else {
        conv_field
            .split(',')
            .map(|t| {
                let bad = || Error::Model(format!("bad conv entry '{t}'"));
                let (k, f) = t.split_once(':').ok_or_else(bad)?;
                let (kh, kw) = k.split_once('x').ok_or_else(bad)?;
                Ok(ConvSpec::new(kh.parse().map_err(|_| bad())?, kw.parse().map_err(|_| bad())?, f.parse().map_err(|_| bad())?))
            })
            .collect::<Result<_>>()?
    };
    let spec = NetworkSpec { input_shape: (c, h, w), conv_layers, dense_layers: parse_list(get("dense")?, "dense")? };
    spec.validate().map_err(|e| Error::Model(e.to_string()))?;
    Ok(spec)
}

pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Model("not an FKM1 model file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Model(format!("unsupported model format version {version}")));
    }
    let n_fields = r.u32()?;
    let mut fields = BTreeMap::new();
    for _ in 0..n_fields {
        let k = r.string()?;
        let v = r.string()?;
        fields.insert(k, v);
    }
    let spec = parse_spec(&fields)?;
    let mut model = Model::init(spec, 0)?;
    for buf in model.parameter_buffers_mut() {
        *buf = r.array(buf.len())?;
    }
    let n_loss = r.u64()? as usize;
    model.loss_history = r.floats(n_loss)?;
    if r.pos != bytes.len() {
        return Err(Error::Model(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    fields.retain(|k, _| !RESERVED.contains(&k.as_str()));
    model.metadata = fields;
    Ok(model)
}
