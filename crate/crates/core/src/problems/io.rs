//! Binary dataset container and CSV matrix export.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes   "RVRDATA\0"
//! version    u32       currently 1
//! kind       u32       1 = PCA, 2 = LRMC, 3 = SPD
//! ndesc      u32       number of descriptor fields
//! desc       u64 × ndesc
//! nmat       u32       number of matrices
//! per matrix: rows u64, cols u64, then rows·cols f64 in row-major order
//! ```
//!
//! Descriptor fields and matrices per kind:
//!
//! | kind | descriptor             | matrices                                               |
//! |------|------------------------|--------------------------------------------------------|
//! | PCA  | `n, d, r`              | samples `n × d`                                        |
//! | LRMC | `d, n, r, has_truth`   | train `k × 3`, test `k' × 3` as (row, col, value); then `U`, `s` (`1 × r`), `V` if `has_truth` |
//! | SPD  | `n, d`                 | `X_1, …, X_n`, each `d × d`                            |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{Entry, GroundTruth, LrmcDataset, PcaDataset, SpdDataset};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"RVRDATA\0";
pub const VERSION: u32 = 1;

const KIND_PCA: u32 = 1;
const KIND_LRMC: u32 = 2;
const KIND_SPD: u32 = 3;

/// Largest integer exactly representable as an `f64` entry index.
const MAX_EXACT_INDEX: usize = 1 << 53;

/// Any dataset the container can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Pca(PcaDataset),
    Lrmc(LrmcDataset),
    Spd(SpdDataset),
}

impl Dataset {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Dataset::Pca(_) => "pca",
            Dataset::Lrmc(_) => "lrmc",
            Dataset::Spd(_) => "spd",
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let (kind, desc, mats) = self.encode()?;
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&kind.to_le_bytes())?;
        w.write_all(&(desc.len() as u32).to_le_bytes())?;
        for v in desc {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(mats.len() as u32).to_le_bytes())?;
        for m in &mats {
            write_matrix(w, m)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(truncated)?;
        if magic != MAGIC {
            return Err(Error::Format("not a dataset container (bad magic bytes)".into()));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported container version {version}")));
        }
        let kind = read_u32(r)?;
        let ndesc = read_u32(r)? as usize;
        let desc = (0..ndesc).map(|_| read_u64(r).and_then(to_usize)).collect::<Result<Vec<_>>>()?;
        let nmat = read_u32(r)? as usize;
        let mut mats = Vec::with_capacity(nmat.min(1 << 16));
        for _ in 0..nmat {
            mats.push(read_matrix(r)?);
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing bytes after last matrix".into()));
        }
        decode(kind, &desc, mats)
    }

    fn encode(&self) -> Result<(u32, Vec<u64>, Vec<DMatrix<f64>>)> {
        Ok(match self {
            Dataset::Pca(p) => (KIND_PCA, vec![p.n() as u64, p.d() as u64, p.r as u64], vec![p.samples.clone()]),
            Dataset::Lrmc(l) => {
                if l.d.max(l.n) > MAX_EXACT_INDEX {
                    return Err(Error::Format("matrix too large for f64 entry indices".into()));
                }
                let mut mats = vec![entries_to_matrix(&l.train), entries_to_matrix(&l.test)];
                if let Some(gt) = &l.ground_truth {
                    mats.push(gt.u.clone());
                    mats.push(DMatrix::from_row_slice(1, gt.singular_values.len(), &gt.singular_values));
                    mats.push(gt.v.clone());
                }
                let desc = vec![l.d as u64, l.n as u64, l.r as u64, l.ground_truth.is_some() as u64];
                (KIND_LRMC, desc, mats)
            }
            Dataset::Spd(s) => (KIND_SPD, vec![s.n() as u64, s.d as u64], s.matrices.clone()),
        })
    }
}

fn decode(kind: u32, desc: &[usize], mut mats: Vec<DMatrix<f64>>) -> Result<Dataset> {
    let expect_desc = |len: usize| {
        if desc.len() == len {
            Ok(())
        } else {
            Err(Error::Format(format!("descriptor has {} fields, expected {len}", desc.len())))
        }
    };
    let expect_shape = |m: &DMatrix<f64>, shape: (usize, usize), what: &str| {
        if m.shape() == shape {
            Ok(())
        } else {
            Err(Error::Format(format!("{what} has shape {:?}, expected {shape:?}", m.shape())))
        }
    };
    match kind {
        KIND_PCA => {
            expect_desc(3)?;
            let (n, d, r) = (desc[0], desc[1], desc[2]);
            if mats.len() != 1 {
                return Err(Error::Format(format!("PCA container holds {} matrices, expected 1", mats.len())));
            }
            expect_shape(&mats[0], (n, d), "samples")?;
            Ok(Dataset::Pca(PcaDataset::new(mats.pop().expect("length checked"), r)?))
        }
        KIND_LRMC => {
            expect_desc(4)?;
            let (d, n, r, has_truth) = (desc[0], desc[1], desc[2], desc[3]);
            let want = if has_truth == 1 { 5 } else { 2 };
            if has_truth > 1 || mats.len() != want {
                return Err(Error::Format(format!("LRMC container holds {} matrices, expected {want}", mats.len())));
            }
            let ground_truth = if has_truth == 1 {
                let v = mats.pop().expect("length checked");
                let s = mats.pop().expect("length checked");
                let u = mats.pop().expect("length checked");
                expect_shape(&u, (d, r), "ground-truth U")?;
                expect_shape(&s, (1, r), "ground-truth singular values")?;
                expect_shape(&v, (n, r), "ground-truth V")?;
                Some(GroundTruth { u, singular_values: s.iter().copied().collect(), v })
            } else {
                None
            };
            let test = matrix_to_entries(&mats[1], "test")?;
            let train = matrix_to_entries(&mats[0], "train")?;
            let data = LrmcDataset { d, n, r, train, test, ground_truth };
            data.validate()?;
            Ok(Dataset::Lrmc(data))
        }
        KIND_SPD => {
            expect_desc(2)?;
            let (n, d) = (desc[0], desc[1]);
            if mats.len() != n {
                return Err(Error::Format(format!("SPD container holds {} matrices, expected {n}", mats.len())));
            }
            for m in &mats {
                expect_shape(m, (d, d), "SPD sample")?;
            }
            Ok(Dataset::Spd(SpdDataset::new(mats)?))
        }
        other => Err(Error::Format(format!("unknown dataset kind {other}"))),
    }
}

fn entries_to_matrix(entries: &[Entry]) -> DMatrix<f64> {
    DMatrix::from_fn(entries.len(), 3, |i, j| match j {
        0 => entries[i].row as f64,
        1 => entries[i].col as f64,
        _ => entries[i].value,
    })
}

fn matrix_to_entries(m: &DMatrix<f64>, what: &str) -> Result<Vec<Entry>> {
    if m.ncols() != 3 {
        return Err(Error::Format(format!("{what} entries need 3 columns, found {}", m.ncols())));
    }
    let index = |v: f64| {
        if v >= 0.0 && v.fract() == 0.0 && v < MAX_EXACT_INDEX as f64 {
            Ok(v as usize)
        } else {
            Err(Error::Format(format!("{what} entry index {v} is not a non-negative integer")))
        }
    };
    (0..m.nrows())
        .map(|i| Ok(Entry { row: index(m[(i, 0)])?, col: index(m[(i, 1)])?, value: m[(i, 2)] }))
        .collect()
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("container is truncated".into())
    } else {
        Error::Io(e)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn to_usize(v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Format(format!("value {v} does not fit in usize")))
}

fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> Result<()> {
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(m.len() * 8);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_matrix<R: Read>(r: &mut R) -> Result<DMatrix<f64>> {
    let rows = to_usize(read_u64(r)?)?;
    let cols = to_usize(read_u64(r)?)?;
    let len = rows
        .checked_mul(cols)
        .and_then(|l| l.checked_mul(8))
        .ok_or_else(|| Error::Format(format!("matrix shape {rows} x {cols} overflows")))?;
    let mut bytes = Vec::new();
    r.take(len as u64).read_to_end(&mut bytes)?;
    if bytes.len() != len {
        return Err(Error::Format("container is truncated".into()));
    }
    let vals: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    Ok(DMatrix::from_row_slice(rows, cols, &vals))
}

/// Write `m` as comma-separated rows. Values use the shortest decimal form
/// that parses back to the same `f64`.
pub fn write_matrix_csv<W: Write>(w: &mut W, m: &DMatrix<f64>) -> Result<()> {
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&m[(i, j)].to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Parse a headerless comma-separated numeric matrix.
pub fn read_matrix_csv<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let mut text = String::new();
    BufReader::new(r).read_to_string(&mut text)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Format(format!(
                    "line {} has {} fields, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}
