//! Matrix files and result formats.
//!
//! Two matrix formats are supported:
//!
//! * MatrixMarket dense (`%%MatrixMarket matrix array real general`): a size
//!   line `rows cols` followed by the entries in column-major order.
//! * RawF64: two little-endian `u64` (rows, cols) followed by the entries as
//!   little-endian `f64` in row-major order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{ExtrapolatedPoint, QuantileEstimate, Replicates};
use crate::error::{Error, Result};
use crate::evaluation::{ErrorCurves, FamilyTriple};
use crate::matrix::DenseMatrix;

const MM_BANNER: &str = "%%MatrixMarket";
const RAW_HEADER_BYTES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    MatrixMarketDense,
    RawF64,
}

impl MatrixFormat {
    /// MatrixMarket if the data starts with its banner, RawF64 otherwise.
    pub fn detect(prefix: &[u8]) -> Self {
        if prefix.starts_with(MM_BANNER.as_bytes()) {
            MatrixFormat::MatrixMarketDense
        } else {
            MatrixFormat::RawF64
        }
    }
}

/// Reads a matrix file, detecting the format when `format` is `None`.
pub fn read_matrix(path: impl AsRef<Path>, format: Option<MatrixFormat>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let format = match format {
        Some(f) => f,
        None => MatrixFormat::detect(reader.fill_buf().map_err(|e| Error::io(path, e))?),
    };
    match format {
        MatrixFormat::MatrixMarketDense => read_matrix_market(reader),
        MatrixFormat::RawF64 => read_raw_f64(reader),
    }
    .map_err(|e| attach_path(e, path))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix, format: MatrixFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        MatrixFormat::MatrixMarketDense => write_matrix_market(&mut w, m),
        MatrixFormat::RawF64 => write_raw_f64(&mut w, m),
    }
    .and_then(|()| w.flush().map_err(|e| Error::io(path, e)))
    .map_err(|e| attach_path(e, path))
}

fn attach_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { path: p, source } if p.as_os_str().is_empty() => Error::io(path, source),
        other => other,
    }
}

fn stream_err(e: std::io::Error) -> Error {
    Error::io("", e)
}

pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<DenseMatrix> {
    let mut lines = reader.lines();
    let banner = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))?
        .map_err(stream_err)?;
    let fields: Vec<String> = banner
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if fields.len() != 5 || fields[0] != MM_BANNER.to_ascii_lowercase() {
        return Err(Error::Format(format!(
            "bad MatrixMarket banner: {banner:?}"
        )));
    }
    if fields[1..] != ["matrix", "array", "real", "general"] {
        return Err(Error::Format(format!(
            "only dense real general matrices are supported, got {:?}",
            fields[1..].join(" ")
        )));
    }

    let mut tokens = Vec::new();
    for line in lines {
        let line = line.map_err(stream_err)?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    let mut it = tokens.into_iter();
    let mut size = || -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::Format("missing size line".into()))?
            .parse()
            .map_err(|e| Error::Format(format!("bad size: {e}")))
    };
    let (rows, cols) = (size()?, size()?);
    let values: Vec<f64> = it
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("bad entry {s:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("matrix size overflows".into()))?;
    if values.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} entries, found {}",
            values.len()
        )));
    }
    let mut data = vec![0.0; expected];
    for (idx, v) in values.into_iter().enumerate() {
        let (i, j) = (idx % rows, idx / rows);
        data[i * cols + j] = v;
    }
    DenseMatrix::from_vec(rows, cols, data)
}

/// Writes every entry in shortest round-trip form, so reading back is exact.
pub fn write_matrix_market<W: Write>(w: &mut W, m: &DenseMatrix) -> Result<()> {
    let (rows, cols) = m.shape();
    let mut body = format!("{MM_BANNER} matrix array real general\n{rows} {cols}\n");
    for j in 0..cols {
        for i in 0..rows {
            body.push_str(&format!("{:e}\n", m.get(i, j)));
        }
    }
    w.write_all(body.as_bytes()).map_err(stream_err)
}

pub fn read_raw_f64<R: Read>(mut reader: R) -> Result<DenseMatrix> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(stream_err)?;
    if bytes.len() < RAW_HEADER_BYTES {
        return Err(Error::Truncated {
            expected: RAW_HEADER_BYTES,
            found: bytes.len(),
        });
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    let (rows, cols) = (word(0), word(1));
    let payload = usize::try_from(rows)
        .ok()
        .zip(usize::try_from(cols).ok())
        .and_then(|(r, c)| r.checked_mul(c))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format(format!("implausible shape {rows}x{cols}")))?;
    let body = &bytes[RAW_HEADER_BYTES..];
    if body.len() < payload {
        return Err(Error::Truncated {
            expected: payload,
            found: body.len(),
        });
    }
    if body.len() > payload {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            body.len() - payload
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseMatrix::from_vec(rows as usize, cols as usize, data)
}

pub fn write_raw_f64<W: Write>(w: &mut W, m: &DenseMatrix) -> Result<()> {
    let mut bytes = Vec::with_capacity(RAW_HEADER_BYTES + 8 * m.as_slice().len());
    bytes.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for x in m.as_slice() {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&bytes).map_err(stream_err)
}

/// JSON form of a bootstrap estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub q_u: f64,
    pub q_sigma: f64,
    pub q_v: f64,
    pub alpha: f64,
    #[serde(rename = "B")]
    pub replicate_count: usize,
    pub t0: usize,
    pub k: usize,
    pub index_set: Vec<usize>,
    pub rank_deficient_replicates: usize,
    /// One entry per replicate, in replicate order.
    pub replicates: Vec<FamilyTriple>,
    pub extrapolated: Vec<ExtrapolatedPoint>,
}

impl EstimateReport {
    pub fn new(est: &QuantileEstimate, k: usize, extrapolated: Vec<ExtrapolatedPoint>) -> Self {
        let r = &est.replicates;
        EstimateReport {
            q_u: est.q_u,
            q_sigma: est.q_sigma,
            q_v: est.q_v,
            alpha: est.alpha,
            replicate_count: est.b(),
            t0: est.t0,
            k,
            index_set: est.index_set.clone(),
            rank_deficient_replicates: est.rank_deficient_replicates,
            replicates: (0..est.b())
                .map(|b| FamilyTriple {
                    u: r.u[b],
                    sigma: r.sigma[b],
                    v: r.v[b],
                })
                .collect(),
            extrapolated,
        }
    }

    /// The estimate the report describes.
    pub fn to_estimate(&self) -> QuantileEstimate {
        QuantileEstimate {
            q_u: self.q_u,
            q_sigma: self.q_sigma,
            q_v: self.q_v,
            t0: self.t0,
            alpha: self.alpha,
            index_set: self.index_set.clone(),
            replicates: Replicates {
                u: self.replicates.iter().map(|r| r.u).collect(),
                sigma: self.replicates.iter().map(|r| r.sigma).collect(),
                v: self.replicates.iter().map(|r| r.v).collect(),
            },
            rank_deficient_replicates: self.rank_deficient_replicates,
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => stream_err(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Writes `t,family,true_q,est_mean,est_std,ext_mean,ext_std,coverage`, one
/// row per grid point and family. Quantities that were not computed at a
/// grid point are left empty.
pub fn write_curves_csv<W: Write>(w: W, curves: &ErrorCurves) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "t", "family", "true_q", "est_mean", "est_std", "ext_mean", "ext_std", "coverage",
    ])
    .map_err(csv_err)?;
    for p in &curves.points {
        for (f, family) in FamilyTriple::FAMILIES.iter().enumerate() {
            let pick = |x: Option<FamilyTriple>| x.map(|x| x.to_array()[f]);
            out.write_record([
                p.t.to_string(),
                family.to_string(),
                p.true_quantile.to_array()[f].to_string(),
                opt(pick(p.estimate_mean)),
                opt(pick(p.estimate_std)),
                p.extrapolated_mean.to_array()[f].to_string(),
                p.extrapolated_std.to_array()[f].to_string(),
                opt(pick(p.coverage)),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush().map_err(stream_err)
}

/// Per-trial audit dump: realized errors and, where computed, the trial's
/// own estimates.
pub fn write_trials_csv<W: Write>(w: W, curves: &ErrorCurves) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "t",
        "trial",
        "err_u",
        "err_sigma",
        "err_v",
        "q_u",
        "q_sigma",
        "q_v",
        "rank_deficient_replicates",
    ])
    .map_err(csv_err)?;
    for r in &curves.trials {
        let e = r.error.to_array();
        let q = r.estimate.map(FamilyTriple::to_array);
        let qf = |f: usize| opt(q.map(|q| q[f]));
        out.write_record([
            r.t.to_string(),
            r.trial.to_string(),
            e[0].to_string(),
            e[1].to_string(),
            e[2].to_string(),
            qf(0),
            qf(1),
            qf(2),
            r.rank_deficient_replicates.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(stream_err)
}
