//! Binary embedding file.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "DESM" | version u32 | dim u32 | vocab_size u64
//! vocab_size × (term_len u32 | term UTF-8 bytes | count u64)
//! in_matrix  vocab_size × dim f32, row-major
//! out_matrix vocab_size × dim f32, row-major
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{DualEmbedding, EmbeddingError, Vocab};

pub const MAGIC: &[u8; 4] = b"DESM";
pub const FORMAT_VERSION: u32 = 1;

/// Guard against absurd headers before allocating.
const MAX_TERM_BYTES: u32 = 1 << 20;

impl DualEmbedding {
    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        w.write_u32::<LittleEndian>(self.dim as u32)?;
        w.write_u64::<LittleEndian>(self.vocab.len() as u64)?;
        for (term, count) in self.vocab.iter() {
            w.write_u32::<LittleEndian>(term.len() as u32)?;
            w.write_all(term.as_bytes())?;
            w.write_u64::<LittleEndian>(count)?;
        }
        for &v in self.in_matrix.iter().chain(&self.out_matrix) {
            w.write_f32::<LittleEndian>(v)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, EmbeddingError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(EmbeddingError::UnrecognizedFormat);
        }
        let version = r.read_u32::<LittleEndian>().map_err(truncated)?;
        if version != FORMAT_VERSION {
            return Err(EmbeddingError::UnsupportedVersion(version));
        }
        let dim = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let vocab_size = r.read_u64::<LittleEndian>().map_err(truncated)?;
        if dim == 0 {
            return Err(EmbeddingError::ShapeMismatch(
                "dimension is zero".to_owned(),
            ));
        }
        let n_values = usize::try_from(vocab_size)
            .ok()
            .and_then(|n| n.checked_mul(dim))
            .ok_or_else(|| EmbeddingError::ShapeMismatch(format!("{vocab_size} × {dim} overflows")))?;

        let mut entries = Vec::new();
        for _ in 0..vocab_size {
            let len = r.read_u32::<LittleEndian>().map_err(truncated)?;
            if len > MAX_TERM_BYTES {
                return Err(EmbeddingError::ShapeMismatch(format!(
                    "term length {len} exceeds limit"
                )));
            }
            let mut bytes = vec![0u8; len as usize];
            r.read_exact(&mut bytes).map_err(truncated)?;
            let term = String::from_utf8(bytes)
                .map_err(|_| EmbeddingError::ShapeMismatch("term is not UTF-8".to_owned()))?;
            let count = r.read_u64::<LittleEndian>().map_err(truncated)?;
            entries.push((term, count));
        }
        let vocab = Vocab::from_entries(entries)?;
        let in_matrix = read_matrix(r, n_values)?;
        let out_matrix = read_matrix(r, n_values)?;
        let mut probe = [0u8; 1];
        match r.read(&mut probe) {
            Ok(0) => {}
            Ok(_) => {
                return Err(EmbeddingError::ShapeMismatch(
                    "trailing bytes after out_matrix".to_owned(),
                ))
            }
            Err(e) => return Err(EmbeddingError::Io(e)),
        }
        Ok(Self {
            dim,
            vocab,
            in_matrix,
            out_matrix,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbeddingError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }
}

fn read_matrix<R: Read>(r: &mut R, n_values: usize) -> Result<Vec<f32>, EmbeddingError> {
    // Read in chunks so a lying header fails with Truncated, not an OOM.
    const CHUNK: usize = 1 << 16;
    let mut out = Vec::with_capacity(n_values.min(CHUNK));
    let mut buf = vec![0f32; CHUNK];
    let mut remaining = n_values;
    while remaining > 0 {
        let n = remaining.min(CHUNK);
        r.read_f32_into::<LittleEndian>(&mut buf[..n]).map_err(truncated)?;
        out.extend_from_slice(&buf[..n]);
        remaining -= n;
    }
    Ok(out)
}

fn truncated(e: io::Error) -> EmbeddingError {
    if e.kind() == ErrorKind::UnexpectedEof {
        EmbeddingError::Truncated
    } else {
        EmbeddingError::Io(e)
    }
}
