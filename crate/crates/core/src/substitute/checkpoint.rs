//! Little-endian binary checkpoint:
//!
//! ```text
//! magic "WMSC" | u32 version (1)
//! u32 layer-size count L+1 | u32 sizes[L+1]
//! u32 split | u32 downsample | u32 dct_k
//! f64 feature mean[d] | f64 feature std[d]
//! for each layer: f64 weights[out * in] (row-major) | f64 bias[out]
//! f64 validation accuracy | u32 epochs | f64 epoch losses[epochs]
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::features::FeatureSpec;
use super::mlp::{Layer, Mlp};
use super::train::{SubstituteClassifier, TrainLog};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"WMSC";
const VERSION: u32 = 1;

pub fn write_checkpoint(clf: &SubstituteClassifier, out: &mut impl Write) -> std::io::Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut buf, VERSION);
    let sizes = clf.net.sizes();
    put_u32(&mut buf, sizes.len() as u32);
    for s in sizes {
        put_u32(&mut buf, s as u32);
    }
    put_u32(&mut buf, clf.split as u32);
    put_u32(&mut buf, clf.spec.downsample as u32);
    put_u32(&mut buf, clf.spec.dct_k as u32);
    put_f64s(&mut buf, &clf.spec.mean);
    put_f64s(&mut buf, &clf.spec.std);
    for l in &clf.net.layers {
        put_f64s(&mut buf, &l.weights);
        put_f64s(&mut buf, &l.bias);
    }
    put_f64s(&mut buf, &[clf.log.val_accuracy]);
    put_u32(&mut buf, clf.log.epoch_losses.len() as u32);
    put_f64s(&mut buf, &clf.log.epoch_losses);
    out.write_all(&buf)
}

pub fn read_checkpoint(input: &mut impl Read) -> Result<SubstituteClassifier> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n = r.u32()? as usize;
    if !(2..=64).contains(&n) {
        return Err(Error::Checkpoint(format!("implausible layer count {n}")));
    }
    let sizes: Vec<usize> = (0..n).map(|_| r.u32().map(|v| v as usize)).collect::<Result<_>>()?;
    let split = r.u32()? as usize;
    let downsample = r.u32()? as usize;
    let dct_k = r.u32()? as usize;
    let mut spec = FeatureSpec::new(downsample, dct_k);
    let d = spec.dim();
    spec.mean = r.f64s(d)?;
    spec.std = r.f64s(d)?;
    let mut layers = Vec::new();
    for w in sizes.windows(2) {
        let weights = r.f64s(w[0] * w[1])?;
        let bias = r.f64s(w[1])?;
        layers.push(Layer {
            inputs: w[0],
            outputs: w[1],
            weights,
            bias,
        });
    }
    let val_accuracy = r.f64s(1)?[0];
    let epochs = r.u32()? as usize;
    let epoch_losses = r.f64s(epochs)?;
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    let mut clf = SubstituteClassifier::new(spec, Mlp { layers }, split)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    clf.log = TrainLog {
        epoch_losses,
        val_accuracy,
    };
    Ok(clf)
}

pub fn save_checkpoint(clf: &SubstituteClassifier, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(clf, &mut f).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<SubstituteClassifier> {
    let path = path.as_ref();
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&mut f)
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(buf: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("unexpected end of data".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}
