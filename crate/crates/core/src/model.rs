//! Trained embedding models and their on-disk formats.
//!
//! Two formats are supported:
//!
//! * **text**, word2vec compatible: a `<vocab_size> <dim>` header, then one
//!   `<token> <v1> ... <vdim>` line per token. Floats are written in their
//!   shortest round-trip form, so text files also reload bit-exactly.
//! * **binary**: `KGVECBIN`, a little-endian `u32` version, a `u32`-length
//!   JSON metadata block, `u64` rows, `u32` dim, then per row a `u32`-length
//!   UTF-8 token followed by `dim` little-endian `f32`s.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::ModelError;
use crate::train::TrainingMetadata;

pub const BINARY_MAGIC: &[u8; 8] = b"KGVECBIN";
pub const BINARY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Text,
    Binary,
}

impl ModelFormat {
    /// `.bin` selects the binary format; everything else is text.
    pub fn from_path(path: &Path) -> ModelFormat {
        match path.extension() {
            Some(ext) if ext.eq_ignore_ascii_case("bin") => ModelFormat::Binary,
            _ => ModelFormat::Text,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    vectors: Vec<f32>,
    metadata: Option<TrainingMetadata>,
}

impl EmbeddingModel {
    /// Fails on duplicate tokens or a vector buffer of the wrong size.
    pub fn new(
        tokens: Vec<String>,
        dim: usize,
        vectors: Vec<f32>,
        metadata: Option<TrainingMetadata>,
    ) -> Result<Self, ModelError> {
        if vectors.len() != tokens.len() * dim {
            return Err(ModelError::Format {
                line: 0,
                message: format!("{} floats for {} tokens of dim {dim}", vectors.len(), tokens.len()),
            });
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(ModelError::Format { line: i + 2, message: format!("duplicate token '{t}'") });
            }
        }
        Ok(EmbeddingModel { tokens, index, dim, vectors, metadata })
    }

    /// Builds a model from `(token, vector)` pairs; handy for fixtures.
    pub fn from_rows<S: Into<String>>(rows: impl IntoIterator<Item = (S, Vec<f32>)>) -> Result<Self, ModelError> {
        let mut tokens = Vec::new();
        let mut vectors = Vec::new();
        let mut dim = None;
        for (line, (t, v)) in rows.into_iter().enumerate() {
            let d = *dim.get_or_insert(v.len());
            if v.len() != d {
                return Err(ModelError::Format { line: line + 2, message: format!("expected {d} values, found {}", v.len()) });
            }
            tokens.push(t.into());
            vectors.extend(v);
        }
        EmbeddingModel::new(tokens, dim.unwrap_or(0), vectors, None)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, token: &str) -> Option<&[f32]> {
        self.index_of(token).map(|i| self.row(i))
    }

    pub fn raw_vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn metadata(&self) -> Option<&TrainingMetadata> {
        self.metadata.as_ref()
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (i, token) in self.tokens.iter().enumerate() {
            out.write_all(token.as_bytes())?;
            for x in self.row(i) {
                write!(out, " {x}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let meta = serde_json::to_vec(&self.metadata).map_err(std::io::Error::other)?;
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&BINARY_VERSION.to_le_bytes())?;
        out.write_all(&(meta.len() as u32).to_le_bytes())?;
        out.write_all(&meta)?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        for (i, token) in self.tokens.iter().enumerate() {
            out.write_all(&(token.len() as u32).to_le_bytes())?;
            out.write_all(token.as_bytes())?;
            for x in self.row(i) {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        out.flush()
    }

    pub fn save(&self, path: &Path, format: ModelFormat) -> std::io::Result<()> {
        let out = BufWriter::new(File::create(path)?);
        match format {
            ModelFormat::Text => self.write_text(out),
            ModelFormat::Binary => self.write_binary(out),
        }
    }

    /// Loads either format, detected from the leading magic bytes.
    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let mut reader = BufReader::new(File::open(path)?);
        let head = reader.fill_buf()?;
        if head.starts_with(BINARY_MAGIC) {
            Self::read_binary(reader)
        } else {
            Self::read_text(reader)
        }
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self, ModelError> {
        let mut lines = reader.lines();
        let err = |line: usize, message: String| ModelError::Format { line, message };
        let header = lines.next().ok_or_else(|| err(1, "missing header".into()))??;
        let mut fields = header.split_whitespace().map(str::parse::<usize>);
        let (rows, dim) = match (fields.next(), fields.next(), fields.next()) {
            (Some(Ok(r)), Some(Ok(d)), None) => (r, d),
            _ => return Err(err(1, format!("expected '<vocab_size> <dim>', found '{header}'"))),
        };
        let mut tokens = Vec::with_capacity(rows);
        let mut index = HashMap::with_capacity(rows);
        let mut vectors = Vec::with_capacity(rows * dim);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if tokens.len() == rows {
                return Err(err(line_no, format!("more rows than the {rows} declared")));
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().unwrap_or_default().to_owned();
            let before = vectors.len();
            for p in parts {
                let x: f32 = p.parse().map_err(|_| err(line_no, format!("invalid float '{p}'")))?;
                vectors.push(x);
            }
            let found = vectors.len() - before;
            if found != dim {
                return Err(err(line_no, format!("expected {dim} values, found {found}")));
            }
            if index.insert(token.clone(), tokens.len()).is_some() {
                return Err(err(line_no, format!("duplicate token '{token}'")));
            }
            tokens.push(token);
        }
        if tokens.len() != rows {
            return Err(err(0, format!("header declares {rows} rows, found {}", tokens.len())));
        }
        Ok(EmbeddingModel { tokens, index, dim, vectors, metadata: None })
    }

    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self, ModelError> {
        let bad = |m: &str| ModelError::Binary(m.to_owned());
        let mut magic = [0u8; 8];
        reader.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(bad("bad magic"));
        }
        let version = read_u32(&mut reader)?;
        if version != BINARY_VERSION {
            return Err(ModelError::Binary(format!("unsupported version {version}")));
        }
        let meta_len = read_u32(&mut reader)? as usize;
        let mut meta = vec![0u8; meta_len];
        reader.read_exact(&mut meta)?;
        let metadata: Option<TrainingMetadata> =
            serde_json::from_slice(&meta).map_err(|e| ModelError::Binary(format!("metadata: {e}")))?;
        let mut buf8 = [0u8; 8];
        reader.read_exact(&mut buf8)?;
        let rows = usize::try_from(u64::from_le_bytes(buf8)).map_err(|_| bad("row count overflow"))?;
        let dim = read_u32(&mut reader)? as usize;
        let mut tokens = Vec::with_capacity(rows.min(1 << 24));
        let mut vectors = Vec::with_capacity(rows.saturating_mul(dim).min(1 << 28));
        let mut row_bytes = vec![0u8; dim * 4];
        for _ in 0..rows {
            let len = read_u32(&mut reader)? as usize;
            let mut token = vec![0u8; len];
            reader.read_exact(&mut token)?;
            tokens.push(String::from_utf8(token).map_err(|_| bad("token is not UTF-8"))?);
            reader.read_exact(&mut row_bytes)?;
            vectors.extend(row_bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])));
        }
        EmbeddingModel::new(tokens, dim, vectors, metadata)
    }
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
