//! Binary model files and atomic file writes.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "CSEER"  u32 version  u8 kind  u8 threshold  u8 scheme
//! u64 n  u64 m  u64 k  u64 hidden  u64 side
//! n × (str department, u32 number, str id, str subject)
//! k × str major
//! parameter blocks in serialization order, f64 row-major
//! ```
//!
//! Strings are a `u32` byte length followed by UTF-8.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use tempfile::NamedTempFile;

use crate::domain::{Course, GradeScheme, Vocabulary};
use crate::encode::{ModelKind, Threshold};
use crate::error::{Error, Result};
use crate::net::{Model, ModelDims};

pub const MAGIC: &[u8; 5] = b"CSEER";
pub const FORMAT_VERSION: u32 = 1;

/// Any single dimension above this is rejected as overflow.
const MAX_DIM: u64 = 1 << 24;

/// Writes through a temporary file in the destination directory, then renames it into place.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut NamedTempFile>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(&mut tmp);
        write(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn threshold_code(t: Threshold) -> u8 {
    match t {
        Threshold::A => 0,
        Threshold::B => 1,
    }
}

fn scheme_code(s: GradeScheme) -> u8 {
    match s {
        GradeScheme::Binary => 0,
        GradeScheme::Letters => 1,
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

/// Serializes a model with its vocabulary.
pub fn encode_model(model: &Model, vocab: &Vocabulary) -> Result<Vec<u8>> {
    if vocab.n() != model.dims.n || vocab.k() != model.dims.k || vocab.m() != model.dims.m {
        return Err(Error::DimensionMismatch {
            what: "vocabulary",
            expected: model.dims.n,
            actual: vocab.n(),
        });
    }
    let mut out = Vec::with_capacity(64 + 8 * model.params.num_values());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(model.kind.code());
    out.push(threshold_code(model.threshold));
    out.push(scheme_code(model.scheme));
    let d = &model.dims;
    for v in [d.n, d.m, d.k, d.hidden, d.side] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for c in vocab.courses() {
        put_str(&mut out, &c.department);
        out.extend_from_slice(&c.number.to_le_bytes());
        put_str(&mut out, &c.id);
        put_str(&mut out, &c.subject);
    }
    for m in vocab.majors() {
        put_str(&mut out, m);
    }
    for block in model.params.blocks() {
        for v in block.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Truncated);
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| Error::CorruptModel("string is not UTF-8".into()))
    }
}

fn dim(value: u64, name: &str) -> Result<usize> {
    if value > MAX_DIM {
        return Err(Error::DimOverflow(format!("{name} = {value}")));
    }
    Ok(value as usize)
}

/// Parses a model file image.
pub fn decode_model(bytes: &[u8]) -> Result<(Model, Vocabulary)> {
    if bytes.len() < MAGIC.len() {
        return Err(Error::Truncated);
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut cur = Cursor { bytes: &bytes[MAGIC.len()..] };
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let kind = ModelKind::from_code(cur.u8()?).ok_or_else(|| Error::CorruptModel("unknown model kind".into()))?;
    let threshold = match cur.u8()? {
        0 => Threshold::A,
        1 => Threshold::B,
        t => return Err(Error::CorruptModel(format!("unknown threshold code {t}"))),
    };
    let scheme = match cur.u8()? {
        0 => GradeScheme::Binary,
        1 => GradeScheme::Letters,
        s => return Err(Error::CorruptModel(format!("unknown grade scheme code {s}"))),
    };
    let dims = ModelDims {
        n: dim(cur.u64()?, "n")?,
        m: dim(cur.u64()?, "m")?,
        k: dim(cur.u64()?, "k")?,
        hidden: dim(cur.u64()?, "hidden")?,
        side: dim(cur.u64()?, "side")?,
    };
    let expected_values = parameter_count(kind, &dims)?;

    let mut courses = Vec::with_capacity(dims.n.min(cur.bytes.len()));
    for _ in 0..dims.n {
        let department = cur.string()?;
        let number = cur.u32()?;
        let id = cur.string()?;
        let subject = cur.string()?;
        courses.push(Course {
            id,
            department,
            number,
            subject,
        });
    }
    let mut majors = Vec::with_capacity(dims.k.min(cur.bytes.len()));
    for _ in 0..dims.k {
        majors.push(cur.string()?);
    }
    let vocab = Vocabulary::new(courses.clone(), majors, scheme)?;
    if vocab.courses() != courses.as_slice() || vocab.k() != dims.k || vocab.m() != dims.m {
        return Err(Error::CorruptModel("vocabulary tables disagree with dimensions".into()));
    }

    let byte_len = expected_values
        .checked_mul(8)
        .ok_or_else(|| Error::DimOverflow("parameter byte count".into()))?;
    let data = cur.take(byte_len)?;
    if !cur.bytes.is_empty() {
        return Err(Error::CorruptModel(format!("{} trailing bytes", cur.bytes.len())));
    }
    let mut model = Model::zeroed(kind, dims, threshold, scheme);
    let mut chunks = data.chunks_exact(8);
    model.params.for_each_mut(|_, values| {
        for v in values.iter_mut() {
            *v = f64::from_le_bytes(chunks.next().expect("length checked").try_into().expect("8 bytes"));
        }
    });
    Ok((model, vocab))
}

/// Number of parameters implied by `dims`, with overflow checks.
fn parameter_count(kind: ModelKind, dims: &ModelDims) -> Result<usize> {
    let overflow = || Error::DimOverflow(format!("{dims:?}"));
    let mul = |a: usize, b: usize| a.checked_mul(b).ok_or_else(overflow);
    let add = |a: usize, b: usize| a.checked_add(b).ok_or_else(overflow);
    let input = add(mul(add(dims.m, 2)?, dims.n)?, match kind {
        ModelKind::Model1 => 0,
        ModelKind::Model2 => dims.n,
        ModelKind::Model3 => dims.k,
    })?;
    let d = dims.hidden;
    let gate = add(mul(d, add(input, d)?)?, d)?;
    let out_dim = mul(add(dims.m, 2)?, dims.n)?;
    let out_in = if kind == ModelKind::Model3 { add(d, dims.side)? } else { d };
    let mut total = add(mul(4, gate)?, mul(out_dim, add(out_in, 1)?)?)?;
    if kind == ModelKind::Model3 {
        total = add(total, mul(dims.side, add(dims.n, 1)?)?)?;
    }
    if total > (MAX_DIM as usize) * 64 {
        return Err(overflow());
    }
    Ok(total)
}

pub fn save_model(model: &Model, vocab: &Vocabulary, path: &Path) -> Result<()> {
    let bytes = encode_model(model, vocab)?;
    write_atomic(path, |w| w.write_all(&bytes).map_err(|e| Error::io(path, e)))
}

pub fn load_model(path: &Path) -> Result<(Model, Vocabulary)> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::ModelDims;

    fn sample(kind: ModelKind) -> (Model, Vocabulary) {
        let vocab = Vocabulary::new(
            [Course::new("Math", 1), Course::new("Math", 110), Course::new("Law", 178)],
            ["Law".to_string(), "Math".to_string()],
            GradeScheme::Binary,
        )
        .unwrap();
        let model = Model::init(kind, ModelDims::for_vocab(&vocab, 5), Threshold::A, GradeScheme::Binary, 9).unwrap();
        (model, vocab)
    }

    #[test]
    fn round_trip_all_kinds() {
        for kind in [ModelKind::Model1, ModelKind::Model2, ModelKind::Model3] {
            let (model, vocab) = sample(kind);
            let bytes = encode_model(&model, &vocab).unwrap();
            let (m2, v2) = decode_model(&bytes).unwrap();
            assert_eq!(m2, model);
            assert_eq!(v2, vocab);
            assert_eq!(encode_model(&m2, &v2).unwrap(), bytes);
            assert_eq!(parameter_count(kind, &model.dims).unwrap(), model.params.num_values());
        }
    }

    #[test]
    fn distinct_errors() {
        let (model, vocab) = sample(ModelKind::Model2);
        let bytes = encode_model(&model, &vocab).unwrap();

        let mut bad = bytes.clone();
        bad[..5].copy_from_slice(b"XXXXX");
        assert!(matches!(decode_model(&bad), Err(Error::BadMagic)));

        let mut bad = bytes.clone();
        bad[5..9].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(decode_model(&bad), Err(Error::VersionMismatch { found: 7, .. })));

        assert!(matches!(decode_model(&bytes[..bytes.len() - 3]), Err(Error::Truncated)));

        let mut bad = bytes.clone();
        bad[12..20].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(decode_model(&bad), Err(Error::DimOverflow(_))));
    }

    #[test]
    fn save_and_load_file() {
        let (model, vocab) = sample(ModelKind::Model3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        save_model(&model, &vocab, &path).unwrap();
        let (m2, v2) = load_model(&path).unwrap();
        assert_eq!((m2, v2), (model, vocab));
    }
}
