//! Beam selection harness: DFT codebooks, per-beam achievable rates and the
//! feature/label records used to train beam predictors.
//!
//! The rate of beam `f` on channel `H` is
//! `(1/|𝒦|) Σ_k log2(1 + snr·|fᵀ h_k|²)` with the plain transpose product.
//! Conjugate beamforming (`fᴴ h_k`) is available behind
//! [`BeamEvalConfig::conjugate`], off by default.
//!
//! Features are the first antenna's sequence over 𝒦 at every active BS;
//! labels are every beam's rate at every active BS.
//!
//! Binary feature/label files share one layout (little-endian):
//!
//! ```text
//!  0  magic "DMFT" (features) or "DMLB" (labels)
//!  4  version      u32 = 1
//!  8  user_count   u64
//! 16  bs_count     u32
//! 20  width        u32 (|𝒦| for features, P for labels)
//! 24  per record: user_index u64, then bs_count × width values,
//!     complex as (re f64, im f64) for features, f64 rates for labels
//! ```
//!
//! The accompanying `manifest.txt` uses the dataset manifest format with
//! bs_id 0, meaning the file covers every active BS.

use std::f64::consts::{LN_2, TAU};
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::bytes::{put_f64, put_u32, put_u64, ByteReader};
use crate::channel::ChannelMatrix;
use crate::dataset::{Dataset, Manifest, ManifestEntry, ShardReader, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fsutil::{create_dir, write_bytes_atomic, AtomicFile};
use crate::genparams::subcarrier_set;

pub const FEATURES_MAGIC: [u8; 4] = *b"DMFT";
pub const LABELS_MAGIC: [u8; 4] = *b"DMLB";
pub const ML_VERSION: u32 = 1;
pub const ML_HEADER_LEN: usize = 24;
pub const DEFAULT_SNR: f64 = 1.0;

/// Unit-norm beamforming vectors `f_1, ..., f_P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub vectors: Vec<Vec<Complex64>>,
    pub oversampling: u32,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Length M of every vector, 0 for an empty codebook.
    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

fn axis_beams(m: usize, os: u32) -> Vec<Vec<Complex64>> {
    if m <= 1 {
        return vec![vec![Complex64::new(1.0, 0.0)]];
    }
    let n = m * os as usize;
    let scale = 1.0 / (m as f64).sqrt();
    (0..n)
        .map(|b| {
            (0..m)
                .map(|e| Complex64::from_polar(scale, -TAU * (e * b) as f64 / n as f64))
                .collect()
        })
        .collect()
}

/// Kronecker product of per-axis oversampled DFT beams. Axes with a single
/// element contribute one trivial factor. Beam `p` (1-based) has
/// `p - 1 = n_z·N_y·N_x + n_y·N_x + n_x`, matching the array element order.
pub fn dft_codebook(dims: (usize, usize, usize), oversampling: u32) -> Codebook {
    let os = oversampling.max(1);
    let bx = axis_beams(dims.0, os);
    let by = axis_beams(dims.1, os);
    let bz = axis_beams(dims.2, os);
    let mut vectors = Vec::with_capacity(bx.len() * by.len() * bz.len());
    for fz in &bz {
        for fy in &by {
            for fx in &bx {
                let mut v = Vec::with_capacity(fx.len() * fy.len() * fz.len());
                for z in fz {
                    for y in fy {
                        let zy = z * y;
                        v.extend(fx.iter().map(|x| zy * x));
                    }
                }
                vectors.push(v);
            }
        }
    }
    Codebook {
        vectors,
        oversampling: os,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamEvalConfig {
    /// Dimensionless linear SNR.
    pub snr: f64,
    pub codebook: Codebook,
    /// Use `fᴴ h` instead of `fᵀ h`.
    pub conjugate: bool,
}

impl BeamEvalConfig {
    pub fn new(snr: f64, codebook: Codebook) -> Result<Self> {
        let cfg = BeamEvalConfig {
            snr,
            codebook,
            conjugate: false,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.snr.is_finite() && self.snr > 0.0) {
            return Err(Error::config(
                "snr",
                format!("must be positive and finite, got {}", self.snr),
            ));
        }
        if self.codebook.is_empty() {
            return Err(Error::Validation("codebook has no beams".into()));
        }
        Ok(())
    }
}

fn check_dims(h: &ChannelMatrix, f: &[Complex64]) -> Result<()> {
    if f.len() != h.rows() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            actual: f.len(),
        });
    }
    if h.cols() == 0 {
        return Err(Error::Domain("channel has no subcarriers".into()));
    }
    Ok(())
}

fn rate_unchecked(h: &ChannelMatrix, f: &[Complex64], snr: f64, conjugate: bool) -> f64 {
    let mut total = 0.0;
    for j in 0..h.cols() {
        let col = h.column(j);
        let g: Complex64 = if conjugate {
            f.iter().zip(col).map(|(a, b)| a.conj() * b).sum()
        } else {
            f.iter().zip(col).map(|(a, b)| a * b).sum()
        };
        // ln_1p keeps full relative precision when snr·|g|² is tiny.
        total += (snr * g.norm_sqr()).ln_1p() / LN_2;
    }
    total / h.cols() as f64
}

/// Average rate of beam `f` over the channel's subcarriers (bits/s/Hz).
pub fn achievable_rate(h: &ChannelMatrix, f: &[Complex64], snr: f64) -> Result<f64> {
    achievable_rate_with(h, f, snr, false)
}

pub fn achievable_rate_with(h: &ChannelMatrix, f: &[Complex64], snr: f64, conjugate: bool) -> Result<f64> {
    check_dims(h, f)?;
    Ok(rate_unchecked(h, f, snr, conjugate))
}

/// Rate of every codebook beam, in beam order.
pub fn beam_rates(h: &ChannelMatrix, cfg: &BeamEvalConfig) -> Result<Vec<f64>> {
    cfg.check()?;
    check_dims(h, &cfg.codebook.vectors[0])?;
    Ok(cfg
        .codebook
        .vectors
        .iter()
        .map(|f| rate_unchecked(h, f, cfg.snr, cfg.conjugate))
        .collect())
}

/// Rates within this relative distance of the maximum count as ties, so
/// that rounding noise never overrides the smallest-index rule.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// 1-based index of the largest rate; ties go to the smallest index.
pub fn argmax_rate(rates: &[f64]) -> Option<(usize, f64)> {
    let max = rates
        .iter()
        .copied()
        .filter(|r| !r.is_nan())
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))?;
    let floor = max - TIE_TOLERANCE * max.abs();
    rates.iter().position(|&r| r >= floor).map(|i| (i + 1, rates[i]))
}

/// Best beam `(p*, rate*)`, with `p*` 1-based; ties (see [`TIE_TOLERANCE`])
/// go to the smallest `p`.
pub fn best_beam(h: &ChannelMatrix, cfg: &BeamEvalConfig) -> Result<(usize, f64)> {
    let rates = beam_rates(h, cfg)?;
    Ok(argmax_rate(&rates).expect("codebook checked nonempty"))
}

/// First-antenna sequence over the selected subcarriers.
pub fn omni_feature(h: &ChannelMatrix) -> Vec<Complex64> {
    h.row(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlRecord {
    pub user_index: u64,
    /// Per active BS, the omni feature (length |𝒦|).
    pub features: Vec<Vec<Complex64>>,
    /// Per active BS, every beam's rate (length P).
    pub labels: Vec<Vec<f64>>,
}

impl MlRecord {
    /// Builds the record for one user from its channels at every active BS.
    pub fn from_channels(user_index: u64, channels: &[&ChannelMatrix], cfg: &BeamEvalConfig) -> Result<Self> {
        let mut features = Vec::with_capacity(channels.len());
        let mut labels = Vec::with_capacity(channels.len());
        for h in channels {
            features.push(omni_feature(h));
            labels.push(beam_rates(h, cfg)?);
        }
        Ok(MlRecord {
            user_index,
            features,
            labels,
        })
    }

    /// Best beam at the `n`-th active BS (0-based).
    pub fn best_beam(&self, n: usize) -> Option<(usize, f64)> {
        argmax_rate(self.labels.get(n)?)
    }
}

pub fn build_ml_dataset<E: Executor>(ds: &Dataset, cfg: &BeamEvalConfig, exec: &E) -> Result<Vec<MlRecord>> {
    cfg.check()?;
    if ds.shards.is_empty() {
        return Err(Error::Validation("dataset has no active BS".into()));
    }
    exec.map(ds.user_count(), |u| {
        let chans: Vec<&ChannelMatrix> = ds.shards.iter().map(|s| &s.entries[u].channel).collect();
        MlRecord::from_channels(ds.shards[0].entries[u].global_index, &chans, cfg)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlFormat {
    Csv,
    Binary,
}

pub const FEATURES_CSV: &str = "features.csv";
pub const LABELS_CSV: &str = "labels.csv";
pub const FEATURES_BIN: &str = "features.dmft";
pub const LABELS_BIN: &str = "labels.dmlb";

/// Incremental writer for a features file, a labels file and their manifest.
pub struct MlWriter {
    dir: std::path::PathBuf,
    format: MlFormat,
    subcarriers: Vec<u32>,
    bs_count: usize,
    beams: usize,
    expected: u64,
    written: u64,
    span: Option<(u64, u64)>,
    features: AtomicFile,
    labels: AtomicFile,
}

impl MlWriter {
    /// `subcarriers` labels the feature columns; `users` is the exact record
    /// count that will be pushed.
    pub fn create(
        dir: &Path,
        format: MlFormat,
        subcarriers: Vec<u32>,
        bs_count: usize,
        beams: usize,
        users: u64,
    ) -> Result<Self> {
        create_dir(dir)?;
        let (fname, lname) = match format {
            MlFormat::Csv => (FEATURES_CSV, LABELS_CSV),
            MlFormat::Binary => (FEATURES_BIN, LABELS_BIN),
        };
        let mut features = AtomicFile::create(&dir.join(fname))?;
        let mut labels = AtomicFile::create(&dir.join(lname))?;
        match format {
            MlFormat::Csv => {
                features
                    .write_all(b"user_index,bs_ordinal,k,re,im\n")
                    .map_err(|e| features.io_error(e))?;
                labels
                    .write_all(b"user_index,bs_ordinal,beam_index,rate_bps_hz\n")
                    .map_err(|e| labels.io_error(e))?;
            }
            MlFormat::Binary => {
                for (f, magic, width) in [
                    (&mut features, FEATURES_MAGIC, subcarriers.len()),
                    (&mut labels, LABELS_MAGIC, beams),
                ] {
                    let mut h = Vec::with_capacity(ML_HEADER_LEN);
                    h.extend_from_slice(&magic);
                    put_u32(&mut h, ML_VERSION);
                    put_u64(&mut h, users);
                    put_u32(&mut h, bs_count as u32);
                    put_u32(&mut h, width as u32);
                    f.write_all(&h).map_err(|e| f.io_error(e))?;
                }
            }
        }
        Ok(MlWriter {
            dir: dir.to_path_buf(),
            format,
            subcarriers,
            bs_count,
            beams,
            expected: users,
            written: 0,
            span: None,
            features,
            labels,
        })
    }

    pub fn push(&mut self, r: &MlRecord) -> Result<()> {
        if r.features.len() != self.bs_count
            || r.labels.len() != self.bs_count
            || r.features.iter().any(|f| f.len() != self.subcarriers.len())
            || r.labels.iter().any(|l| l.len() != self.beams)
        {
            return Err(Error::Validation(format!(
                "record for user {} has the wrong shape",
                r.user_index
            )));
        }
        if self.span.is_some_and(|(_, last)| r.user_index <= last) {
            return Err(Error::Validation(format!(
                "record for user {} is out of order",
                r.user_index
            )));
        }
        let mut fbuf = Vec::new();
        let mut lbuf = Vec::new();
        match self.format {
            MlFormat::Csv => {
                use std::fmt::Write as _;
                let mut fs_ = String::new();
                let mut ls = String::new();
                for (n, (feat, lab)) in r.features.iter().zip(&r.labels).enumerate() {
                    for (k, c) in self.subcarriers.iter().zip(feat) {
                        let _ = writeln!(fs_, "{},{},{k},{},{}", r.user_index, n + 1, c.re, c.im);
                    }
                    for (p, rate) in lab.iter().enumerate() {
                        let _ = writeln!(ls, "{},{},{},{rate}", r.user_index, n + 1, p + 1);
                    }
                }
                fbuf = fs_.into_bytes();
                lbuf = ls.into_bytes();
            }
            MlFormat::Binary => {
                put_u64(&mut fbuf, r.user_index);
                put_u64(&mut lbuf, r.user_index);
                for (feat, lab) in r.features.iter().zip(&r.labels) {
                    for c in feat {
                        put_f64(&mut fbuf, c.re);
                        put_f64(&mut fbuf, c.im);
                    }
                    for &v in lab {
                        put_f64(&mut lbuf, v);
                    }
                }
            }
        }
        self.features.write_all(&fbuf).map_err(|e| self.features.io_error(e))?;
        self.labels.write_all(&lbuf).map_err(|e| self.labels.io_error(e))?;
        self.span = Some((self.span.map_or(r.user_index, |s| s.0), r.user_index));
        self.written += 1;
        Ok(())
    }

    /// Commits both files and writes the manifest.
    pub fn finish(self) -> Result<Manifest> {
        if self.written != self.expected {
            return Err(Error::Validation(format!(
                "declared {} records, wrote {}",
                self.expected, self.written
            )));
        }
        let mut manifest = Manifest::default();
        for f in [self.features, self.labels] {
            let w = f.commit()?;
            manifest.entries.push(ManifestEntry {
                file: w
                    .path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                bs_id: 0,
                user_span: self.span,
                bytes: w.bytes,
                hash: w.hash,
            });
        }
        write_bytes_atomic(&self.dir.join(MANIFEST_FILE), manifest.to_text().as_bytes())?;
        Ok(manifest)
    }
}

/// Writes in-memory records; `subcarriers` labels the feature columns.
pub fn export_ml(records: &[MlRecord], subcarriers: &[u32], dir: &Path, format: MlFormat) -> Result<Manifest> {
    let bs_count = records.first().map_or(0, |r| r.features.len());
    let beams = records.first().and_then(|r| r.labels.first()).map_or(0, Vec::len);
    let mut w = MlWriter::create(dir, format, subcarriers.to_vec(), bs_count, beams, records.len() as u64)?;
    for r in records {
        w.push(r)?;
    }
    w.finish()
}

/// Computes records straight from a binary dataset export, reading every
/// shard in lockstep `chunk` users at a time.
pub fn stream_ml_export<E: Executor>(
    dataset_dir: &Path,
    cfg: &BeamEvalConfig,
    out_dir: &Path,
    format: MlFormat,
    exec: &E,
    chunk: usize,
) -> Result<Manifest> {
    cfg.check()?;
    let mpath = dataset_dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(format!("reading {}", mpath.display()), e))?;
    let manifest = Manifest::parse(&text)?;
    if manifest.entries.is_empty() {
        return Err(Error::Validation("dataset has no active BS".into()));
    }
    let mut readers = Vec::new();
    for me in &manifest.entries {
        let path = dataset_dir.join(&me.file);
        let f = fs::File::open(&path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        readers.push(ShardReader::new(std::io::BufReader::new(f))?);
    }
    let h0 = readers[0].header().clone();
    for r in &readers[1..] {
        let h = r.header();
        if h.params != h0.params || h.user_count != h0.user_count || h.scenario_name != h0.scenario_name {
            return Err(Error::Consistency(format!(
                "shard for BS {} does not match BS {}",
                h.bs_id, h0.bs_id
            )));
        }
    }
    if cfg.codebook.dim() != h0.params.num_antennas() {
        return Err(Error::DimensionMismatch {
            expected: h0.params.num_antennas(),
            actual: cfg.codebook.dim(),
        });
    }
    let mut writer = MlWriter::create(
        out_dir,
        format,
        subcarrier_set(&h0.params)?,
        readers.len(),
        cfg.codebook.len(),
        h0.user_count,
    )?;
    let chunk = chunk.max(1) as u64;
    let mut done = 0u64;
    while done < h0.user_count {
        let n = chunk.min(h0.user_count - done) as usize;
        let mut block: Vec<Vec<ChannelMatrix>> = vec![Vec::with_capacity(readers.len()); n];
        for r in readers.iter_mut() {
            for slot in block.iter_mut() {
                let e = r.next_entry()?.ok_or_else(|| Error::Corrupt {
                    offset: 0,
                    message: "shard ended early".into(),
                })?;
                slot.push(e.channel);
            }
        }
        for (i, chans) in block.iter().enumerate() {
            if chans.iter().any(|c| c.user_index != chans[0].user_index) {
                return Err(Error::Consistency(format!(
                    "shards disagree on user ordinal {}",
                    done + i as u64 + 1
                )));
            }
        }
        let records = exec.map(n, |i| {
            let refs: Vec<&ChannelMatrix> = block[i].iter().collect();
            MlRecord::from_channels(refs[0].user_index, &refs, cfg)
        });
        for r in records {
            writer.push(&r?)?;
        }
        done += n as u64;
    }
    for r in readers.iter_mut() {
        if r.next_entry()?.is_some() {
            return Err(Error::Corrupt {
                offset: 0,
                message: "shard has more entries than declared".into(),
            });
        }
    }
    writer.finish()
}

/// Parsed binary feature or label file.
#[derive(Debug, Clone, PartialEq)]
pub struct MlTable {
    pub magic: [u8; 4],
    pub bs_count: usize,
    pub width: usize,
    pub user_indices: Vec<u64>,
    /// Row-major `user × bs × width × (1 or 2)` f64 values.
    pub values: Vec<f64>,
}

pub fn decode_ml_table(bytes: &[u8]) -> Result<MlTable> {
    let mut r = ByteReader::new(bytes);
    let magic = r.array::<4>("magic")?;
    let per = match magic {
        FEATURES_MAGIC => 2,
        LABELS_MAGIC => 1,
        _ => return Err(Error::Format("not a feature or label file (bad magic)".into())),
    };
    let version = r.u32("version")?;
    if version != ML_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: ML_VERSION,
        });
    }
    let users = r.u64("user_count")?;
    let bs_count = r.u32("bs_count")? as usize;
    let width = r.u32("width")? as usize;
    let rec = (bs_count as u64)
        .checked_mul(width as u64)
        .and_then(|v| v.checked_mul(8 * per))
        .and_then(|v| v.checked_add(8));
    if rec.and_then(|v| v.checked_mul(users)) != Some(r.remaining() as u64) {
        return Err(Error::Corrupt {
            offset: r.offset() as u64,
            message: format!("{} bytes do not hold {users} records", r.remaining()),
        });
    }
    let mut user_indices = Vec::with_capacity(users as usize);
    let mut values = Vec::with_capacity(r.remaining() / 8);
    for _ in 0..users {
        user_indices.push(r.u64("user index")?);
        for _ in 0..bs_count * width * per as usize {
            values.push(r.f64("value")?);
        }
    }
    r.finish()?;
    Ok(MlTable {
        magic,
        bs_count,
        width,
        user_indices,
        values,
    })
}
