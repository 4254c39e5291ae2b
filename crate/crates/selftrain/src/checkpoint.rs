//! Binary checkpoint format shared by classifier models and pretrained
//! embedding initializers.
//!
//! Layout: an 8-byte magic, a version tag, a kind tag (classifier or
//! embedding init), the vocabulary hash, kind-specific shape and provenance
//! fields, then all parameters as little-endian 64-bit floats. Readers
//! reject unknown versions, wrong kinds, vocabulary mismatches, truncated
//! files and trailing bytes.

use std::path::Path;

use crate::corpus::Vocab;
use crate::error::{Error, Result};
use crate::hash::stable_hash64;
use crate::model::{ClassifierModel, InitProvenance};
use crate::pretrain::PretrainedInit;

const MAGIC: &[u8; 8] = b"STCHKPT\0";
const VERSION: u32 = 1;

pub const KIND_CLASSIFIER: u32 = 1;
pub const KIND_EMBEDDING_INIT: u32 = 2;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(kind: u32, vocab_hash: u64) -> Self {
        let mut w = Self { buf: Vec::new() };
        w.buf.extend_from_slice(MAGIC);
        w.u32(VERSION);
        w.u32(kind);
        w.u64(vocab_hash);
        w
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::CorruptFile("unexpected end of file".into()));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n * 8)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::CorruptFile(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn open(bytes: &[u8], expected_kind: u32) -> Result<(Reader<'_>, u64)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::CorruptFile("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let kind = r.u32()?;
    if kind != expected_kind {
        return Err(Error::CorruptFile(format!(
            "checkpoint kind {kind} where kind {expected_kind} was expected"
        )));
    }
    let vocab_hash = r.u64()?;
    Ok((r, vocab_hash))
}

fn write_provenance(w: &mut Writer, p: &InitProvenance) {
    match p {
        InitProvenance::Random => w.u32(0),
        InitProvenance::Pretrained { corpora } => {
            w.u32(1);
            w.u32(corpora.len() as u32);
            for &h in corpora {
                w.u64(h);
            }
        }
        InitProvenance::Teacher => w.u32(2),
    }
}

fn read_provenance(r: &mut Reader<'_>) -> Result<InitProvenance> {
    match r.u32()? {
        0 => Ok(InitProvenance::Random),
        1 => {
            let n = r.u32()? as usize;
            let mut corpora = Vec::with_capacity(n);
            for _ in 0..n {
                corpora.push(r.u64()?);
            }
            Ok(InitProvenance::Pretrained { corpora })
        }
        2 => Ok(InitProvenance::Teacher),
        tag => Err(Error::CorruptFile(format!("unknown provenance tag {tag}"))),
    }
}

pub fn model_to_bytes(model: &ClassifierModel) -> Vec<u8> {
    let mut w = Writer::new(KIND_CLASSIFIER, model.vocab_hash());
    w.u32(model.vocab_size() as u32);
    w.u32(model.embedding_dim() as u32);
    w.u32(model.hidden_dim() as u32);
    w.u32(model.num_classes() as u32);
    write_provenance(&mut w, model.provenance());
    w.f64s(model.params());
    w.buf
}

/// Decodes a classifier checkpoint, verifying the vocabulary hash when an
/// expected one is supplied.
pub fn model_from_bytes(bytes: &[u8], expected_vocab_hash: Option<u64>) -> Result<ClassifierModel> {
    let (mut r, vocab_hash) = open(bytes, KIND_CLASSIFIER)?;
    if let Some(expected) = expected_vocab_hash {
        if vocab_hash != expected {
            return Err(Error::VocabHashMismatch {
                found: vocab_hash,
                expected,
            });
        }
    }
    let vocab_size = r.u32()? as usize;
    let d = r.u32()? as usize;
    let h = r.u32()? as usize;
    let c = r.u32()? as usize;
    let provenance = read_provenance(&mut r)?;
    let n_params = vocab_size
        .checked_mul(d)
        .and_then(|e| e.checked_add(d * h + h + h * c + c))
        .ok_or_else(|| Error::CorruptFile("shape overflow".into()))?;
    let params = r.f64s(n_params)?;
    r.finish()?;
    ClassifierModel::from_raw(vocab_hash, vocab_size, d, h, c, params, provenance)
}

pub fn init_to_bytes(init: &PretrainedInit) -> Vec<u8> {
    let mut w = Writer::new(KIND_EMBEDDING_INIT, init.vocab_hash());
    w.u32(init.vocab_size() as u32);
    w.u32(init.embedding_dim() as u32);
    w.u32(init.provenance().len() as u32);
    for &h in init.provenance() {
        w.u64(h);
    }
    w.f64(init.final_loss());
    w.f64s(init.embeddings());
    w.buf
}

pub fn init_from_bytes(bytes: &[u8], expected_vocab_hash: Option<u64>) -> Result<PretrainedInit> {
    let (mut r, vocab_hash) = open(bytes, KIND_EMBEDDING_INIT)?;
    if let Some(expected) = expected_vocab_hash {
        if vocab_hash != expected {
            return Err(Error::VocabHashMismatch {
                found: vocab_hash,
                expected,
            });
        }
    }
    let vocab_size = r.u32()? as usize;
    let d = r.u32()? as usize;
    let n = r.u32()? as usize;
    let mut provenance = Vec::with_capacity(n);
    for _ in 0..n {
        provenance.push(r.u64()?);
    }
    let final_loss = r.f64()?;
    let embeddings = r.f64s(
        vocab_size
            .checked_mul(d)
            .ok_or_else(|| Error::CorruptFile("shape overflow".into()))?,
    )?;
    r.finish()?;
    PretrainedInit::from_raw(vocab_hash, vocab_size, d, embeddings, provenance, final_loss)
}

impl ClassifierModel {
    /// Writes the checkpoint; `load` reproduces predictions bitwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, model_to_bytes(self))?;
        Ok(())
    }

    /// Loads a checkpoint, rejecting files written under a different
    /// vocabulary.
    pub fn load(path: &Path, vocab: &Vocab) -> Result<Self> {
        model_from_bytes(&std::fs::read(path)?, Some(vocab.content_hash()))
    }

    /// Stable hash of the serialized checkpoint; used as the model's
    /// provenance identity.
    pub fn content_hash(&self) -> u64 {
        stable_hash64(&model_to_bytes(self))
    }
}

impl PretrainedInit {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, init_to_bytes(self))?;
        Ok(())
    }

    pub fn load(path: &Path, vocab: &Vocab) -> Result<Self> {
        init_from_bytes(&std::fs::read(path)?, Some(vocab.content_hash()))
    }

    pub fn content_hash(&self) -> u64 {
        stable_hash64(&init_to_bytes(self))
    }
}
