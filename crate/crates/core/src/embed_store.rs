//! The `EMB1` embedding container and alignment of embeddings with corpus
//! ids.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   "EMB1"            4 bytes
//! dim     u32               4 bytes
//! count   u64               8 bytes
//! count × record:
//!   id_len  u16
//!   id      id_len bytes of UTF-8
//!   vector  dim × f32 (IEEE-754, little-endian)
//! ```

use std::collections::HashMap;
use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EMB1";
pub const HEADER_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            ids: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn from_entries<I, S, V>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, V)>,
        S: Into<String>,
        V: AsRef<[f32]>,
    {
        let mut table = EmbeddingTable::new(dim);
        for (id, v) in entries {
            table.push(id.into(), v.as_ref())?;
        }
        Ok(table)
    }

    pub fn push(&mut self, id: String, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::RaggedVector {
                id,
                expected: self.dim,
                found: vector.len(),
            });
        }
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateEmbedding(id));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Ids in stored order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.index.get(id).map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .enumerate()
            .map(move |(i, id)| (id.as_str(), &self.data[i * self.dim..(i + 1) * self.dim]))
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        write_embeddings(w, self.dim, self.iter())
    }
}

/// Dense feature rows for a list of comment ids.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Array2<f32>,
    pub row_ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.rows.mapv(f64::from)
    }
}

pub fn write_embeddings<W, I, S, V>(mut w: W, dim: usize, entries: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (S, V)>,
    I::IntoIter: ExactSizeIterator,
    S: AsRef<str>,
    V: AsRef<[f32]>,
{
    let dim32 = u32::try_from(dim).map_err(|_| Error::InvalidArgument(format!("dimension {dim} exceeds u32")))?;
    let entries = entries.into_iter();
    w.write_all(MAGIC)?;
    w.write_all(&dim32.to_le_bytes())?;
    w.write_all(&(entries.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(dim * 4);
    for (id, v) in entries {
        let id = id.as_ref();
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::RaggedVector {
                id: id.to_string(),
                expected: dim,
                found: v.len(),
            });
        }
        let id_len = u16::try_from(id.len()).map_err(|_| Error::IdTooLong(id.len()))?;
        w.write_all(&id_len.to_le_bytes())?;
        w.write_all(id.as_bytes())?;
        buf.clear();
        for x in v {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

/// Byte reader that knows its offset, for error reporting.
struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn read_exact(&mut self, buf: &mut [u8], context: &'static str) -> Result<()> {
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return Err(Error::Truncated {
                        offset: self.offset + filled as u64,
                        context,
                    })
                }
                Ok(n) => filled += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn at_eof(&mut self) -> Result<bool> {
        let mut probe = [0u8; 1];
        loop {
            match self.inner.read(&mut probe) {
                Ok(0) => return Ok(true),
                Ok(_) => return Ok(false),
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
}

pub fn read_embeddings<R: Read>(reader: R) -> Result<EmbeddingTable> {
    let mut cur = Cursor {
        inner: reader,
        offset: 0,
    };
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let mut b4 = [0u8; 4];
    cur.read_exact(&mut b4, "dimension")?;
    let dim = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    cur.read_exact(&mut b8, "entry count")?;
    let count = u64::from_le_bytes(b8);

    let mut table = EmbeddingTable::new(dim);
    let mut raw = vec![0u8; dim * 4];
    let mut vector = vec![0f32; dim];
    for _ in 0..count {
        let mut b2 = [0u8; 2];
        cur.read_exact(&mut b2, "id length")?;
        let mut id = vec![0u8; u16::from_le_bytes(b2) as usize];
        cur.read_exact(&mut id, "id bytes")?;
        let id = String::from_utf8(id).map_err(|e| Error::InvalidArgument(format!("id is not UTF-8: {e}")))?;
        cur.read_exact(&mut raw, "vector")?;
        for (x, chunk) in vector.iter_mut().zip(raw.chunks_exact(4)) {
            *x = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        }
        table.push(id, &vector)?;
    }
    if !cur.at_eof()? {
        return Err(Error::CountMismatch {
            declared: count,
            found: count + 1,
        });
    }
    Ok(table)
}

/// Rows of `t` in the order of `ids`. Every missing id is reported at once.
pub fn align<S: AsRef<str>>(t: &EmbeddingTable, ids: &[S]) -> Result<FeatureMatrix> {
    let missing: Vec<String> = ids
        .iter()
        .filter(|id| t.get(id.as_ref()).is_none())
        .map(|id| id.as_ref().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingIds(missing));
    }
    let mut rows = Array2::<f32>::zeros((ids.len(), t.dim()));
    for (mut row, id) in rows.rows_mut().into_iter().zip(ids) {
        let v = t.get(id.as_ref()).expect("checked above");
        row.iter_mut().zip(v).for_each(|(dst, src)| *dst = *src);
    }
    Ok(FeatureMatrix {
        rows,
        row_ids: ids.iter().map(|id| id.as_ref().to_string()).collect(),
    })
}
