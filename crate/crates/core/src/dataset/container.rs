//! On-disk dataset: one binary shard per active BS plus a text manifest.
//!
//! Shard layout (little-endian):
//!
//! ```text
//!  0  magic "DMDS"
//!  4  version          u32 = 1
//!  8  bs_id            u32
//! 12  ordinal b̄        u32 (1-based position in active_BS)
//! 16  user_count       u64
//! 24  scenario name    32 bytes, UTF-8, zero padded
//! 56  echo_len         u32 = 56 + 4n
//! 60  parameter echo:
//!       n u32, active_BS n × u32, active_user_first u32, active_user_last u32,
//!       num_ant_x u32, num_ant_y u32, num_ant_z u32, ant_spacing f64,
//!       bandwidth f64 (GHz), num_OFDM u32, OFDM_sampling_factor u32,
//!       OFDM_limit u32, num_paths u32
//! entries, user_count times:
//!       global_index u64, location 3 × f64 (m),
//!       channel M·|𝒦| × (re f64, im f64), column-major
//! ```
//!
//! A shard therefore occupies `60 + 56 + 4n + users · (32 + 16·M·|𝒦|)` bytes.
//!
//! The manifest (`manifest.txt`) has one line per shard:
//! `file bs_id first_user last_user bytes hash`, where the user span is
//! `- -` for an empty shard and `hash` is the 64-bit content hash of the
//! file (see [`crate::hash`]). Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use num_complex::Complex64;

use super::{active_users, build_entry, select_sources, BsShard, Dataset, DatasetEntry};
use crate::bytes::{put_f64, put_name, put_u32, put_u64, read_name, ByteReader};
use crate::channel::{ChannelBuilder, ChannelMatrix};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fsutil::{create_dir, write_atomic};
use crate::genparams::{subcarrier_set, ParamSet};
use crate::geom::Vec3;
use crate::hash::{hash_hex, parse_hash_hex, ContentHasher};
use crate::rayio::RayFile;
use crate::scene::Scene;

pub const SHARD_MAGIC: [u8; 4] = *b"DMDS";
pub const SHARD_VERSION: u32 = 1;
/// Fixed part of the shard header, before the parameter echo.
pub const SHARD_HEADER_LEN: usize = 60;
pub const MANIFEST_FILE: &str = "manifest.txt";
/// CSV export is refused above this many complex values in total.
pub const CSV_MAX_VALUES: u64 = 4_000_000;

const ECHO_FIXED_LEN: usize = 56;
/// Largest parameter echo a reader will buffer.
const MAX_ECHO_LEN: u32 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Binary,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShardHeader {
    pub version: u32,
    pub bs_id: u32,
    pub ordinal: u32,
    pub user_count: u64,
    pub scenario_name: String,
    pub params: ParamSet,
}

impl ShardHeader {
    /// (M, |𝒦|) of every channel in the shard.
    pub fn dims(&self) -> (usize, usize) {
        (self.params.num_antennas(), self.params.ofdm_limit as usize)
    }

    pub fn entry_len(&self) -> usize {
        let (m, nk) = self.dims();
        entry_len(m, nk)
    }
}

/// Bytes per user entry.
pub fn entry_len(m: usize, nk: usize) -> usize {
    32 + 16 * m * nk
}

fn echo_len(params: &ParamSet) -> usize {
    ECHO_FIXED_LEN + 4 * params.active_bs.len()
}

/// Exact shard size for `users` entries.
pub fn shard_len(params: &ParamSet, users: u64) -> u64 {
    let m = params.num_antennas();
    let nk = params.ofdm_limit as usize;
    (SHARD_HEADER_LEN + echo_len(params)) as u64 + users * entry_len(m, nk) as u64
}

pub fn shard_file_name(bs_id: u32) -> String {
    format!("bs{bs_id}.dmds")
}

fn csv_file_name(bs_id: u32) -> String {
    format!("bs{bs_id}.csv")
}

pub(crate) fn encode_header(h: &ShardHeader) -> Result<Vec<u8>> {
    let p = &h.params;
    let mut out = Vec::with_capacity(SHARD_HEADER_LEN + echo_len(p));
    out.extend_from_slice(&SHARD_MAGIC);
    put_u32(&mut out, h.version);
    put_u32(&mut out, h.bs_id);
    put_u32(&mut out, h.ordinal);
    put_u64(&mut out, h.user_count);
    put_name(&mut out, &h.scenario_name)?;
    put_u32(&mut out, echo_len(p) as u32);
    put_u32(&mut out, p.active_bs.len() as u32);
    for &id in &p.active_bs {
        put_u32(&mut out, id);
    }
    for v in [
        p.active_user_first,
        p.active_user_last,
        p.num_ant_x,
        p.num_ant_y,
        p.num_ant_z,
    ] {
        put_u32(&mut out, v);
    }
    put_f64(&mut out, p.ant_spacing);
    put_f64(&mut out, p.bandwidth);
    for v in [p.num_ofdm, p.ofdm_sampling_factor, p.ofdm_limit, p.num_paths] {
        put_u32(&mut out, v);
    }
    Ok(out)
}

pub(crate) fn encode_entry_into(e: &DatasetEntry, out: &mut Vec<u8>) {
    put_u64(out, e.global_index);
    for v in e.location.to_array() {
        put_f64(out, v);
    }
    for c in e.channel.as_slice() {
        put_f64(out, c.re);
        put_f64(out, c.im);
    }
}

pub fn encode_shard(header: &ShardHeader, entries: &[DatasetEntry]) -> Result<Vec<u8>> {
    if header.user_count != entries.len() as u64 {
        return Err(Error::Validation(format!(
            "shard header declares {} users, {} given",
            header.user_count,
            entries.len()
        )));
    }
    let dims = header.dims();
    let mut out = encode_header(header)?;
    out.reserve(entries.len() * header.entry_len());
    for (i, e) in entries.iter().enumerate() {
        if (e.channel.rows(), e.channel.cols()) != dims {
            return Err(Error::DimensionMismatch {
                expected: dims.0 * dims.1,
                actual: e.channel.rows() * e.channel.cols(),
            });
        }
        if i > 0 && e.global_index <= entries[i - 1].global_index {
            return Err(Error::Validation(format!(
                "shard entries must have increasing user indices (entry {i})"
            )));
        }
        encode_entry_into(e, &mut out);
    }
    Ok(out)
}

fn parse_header(r: &mut ByteReader<'_>) -> Result<ShardHeader> {
    if r.array::<4>("magic")? != SHARD_MAGIC {
        return Err(Error::Format("not a dataset shard (bad magic)".into()));
    }
    let version = r.u32("version")?;
    if version != SHARD_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: SHARD_VERSION,
        });
    }
    let bs_id = r.u32("bs_id")?;
    let ordinal = r.u32("ordinal")?;
    let user_count = r.u64("user_count")?;
    let scenario_name = read_name(r)?;
    let declared = r.u32("echo length")?;
    let echo_at = r.offset();
    let n = r.u32("active BS count")?;
    let expected = u64::from(n) * 4 + ECHO_FIXED_LEN as u64;
    if u64::from(declared) != expected {
        return Err(Error::Format(format!(
            "parameter echo length {declared} does not match {n} active BSs (expected {expected})"
        )));
    }
    let mut e = ByteReader::new(r.take(declared as usize - 4, "parameter echo")?);
    let mut active_bs = Vec::new();
    for _ in 0..n {
        active_bs.push(e.u32("active_BS")?);
    }
    let params = ParamSet {
        active_bs,
        active_user_first: e.u32("active_user_first")?,
        active_user_last: e.u32("active_user_last")?,
        num_ant_x: e.u32("num_ant_x")?,
        num_ant_y: e.u32("num_ant_y")?,
        num_ant_z: e.u32("num_ant_z")?,
        ant_spacing: e.f64("ant_spacing")?,
        bandwidth: e.f64("bandwidth")?,
        num_ofdm: e.u32("num_OFDM")?,
        ofdm_sampling_factor: e.u32("OFDM_sampling_factor")?,
        ofdm_limit: e.u32("OFDM_limit")?,
        num_paths: e.u32("num_paths")?,
    };
    let bad_echo = |m: String| Error::Format(format!("parameter echo at byte {echo_at}: {m}"));
    params.check().map_err(|err| bad_echo(err.to_string()))?;
    subcarrier_set(&params).map_err(|err| bad_echo(err.to_string()))?;
    let bytes = [params.num_ant_y, params.num_ant_z, params.ofdm_limit, 16]
        .into_iter()
        .try_fold(u64::from(params.num_ant_x), |acc, v| acc.checked_mul(u64::from(v)));
    if bytes.is_none_or(|v| v > u64::from(u32::MAX)) {
        return Err(bad_echo("channel matrix size is unreasonably large".into()));
    }
    if ordinal == 0 || params.active_bs.get(ordinal as usize - 1) != Some(&bs_id) {
        return Err(Error::Format(format!(
            "BS {bs_id} is not entry {ordinal} of the echoed active_BS list"
        )));
    }
    Ok(ShardHeader {
        version,
        bs_id,
        ordinal,
        user_count,
        scenario_name,
        params,
    })
}

fn decode_entry(r: &mut ByteReader<'_>, h: &ShardHeader, record: usize) -> Result<DatasetEntry> {
    let (m, nk) = h.dims();
    let global_index = r.u64("user index")?;
    let location = Vec3::new(r.f64("location")?, r.f64("location")?, r.f64("location")?);
    let mut data = Vec::with_capacity(m * nk);
    for _ in 0..m * nk {
        data.push(Complex64::new(r.f64("channel")?, r.f64("channel")?));
    }
    let channel = ChannelMatrix::from_column_major(h.bs_id, global_index, m, nk, data)?;
    if !location.is_finite() {
        return Err(Error::Semantic {
            record,
            message: "location is not finite".into(),
        });
    }
    if !channel.is_finite() {
        return Err(Error::Semantic {
            record,
            message: "channel has non-finite entries".into(),
        });
    }
    Ok(DatasetEntry {
        global_index,
        location,
        channel,
    })
}

fn check_order(prev: Option<u64>, cur: u64, record: usize) -> Result<()> {
    match prev {
        Some(p) if cur <= p => Err(Error::Semantic {
            record,
            message: format!("user index {cur} does not increase (previous {p})"),
        }),
        _ => Ok(()),
    }
}

/// Decodes a whole shard held in memory.
pub fn decode_shard(bytes: &[u8]) -> Result<(ShardHeader, BsShard)> {
    let mut r = ByteReader::new(bytes);
    let h = parse_header(&mut r)?;
    let need = (h.entry_len() as u64).checked_mul(h.user_count);
    if need != Some(r.remaining() as u64) {
        return Err(Error::Corrupt {
            offset: r.offset() as u64,
            message: format!(
                "{} users of {} bytes need {} bytes, {} present",
                h.user_count,
                h.entry_len(),
                need.map_or("overflowing".into(), |v| v.to_string()),
                r.remaining()
            ),
        });
    }
    let mut entries = Vec::with_capacity(h.user_count as usize);
    for i in 0..h.user_count as usize {
        let e = decode_entry(&mut r, &h, i)?;
        check_order(entries.last().map(|p: &DatasetEntry| p.global_index), e.global_index, i)?;
        entries.push(e);
    }
    r.finish()?;
    let shard = BsShard {
        bs_id: h.bs_id,
        entries,
    };
    Ok((h, shard))
}

/// Streams entries out of a shard without holding the whole file.
pub struct ShardReader<R: Read> {
    source: R,
    header: ShardHeader,
    offset: u64,
    read: u64,
    prev: Option<u64>,
    buf: Vec<u8>,
}

impl<R: Read> ShardReader<R> {
    pub fn new(mut source: R) -> Result<Self> {
        let mut head = vec![0u8; SHARD_HEADER_LEN];
        read_exact(&mut source, &mut head, 0, "shard header")?;
        let declared = u32::from_le_bytes(head[56..60].try_into().expect("4 bytes"));
        if declared > MAX_ECHO_LEN {
            return Err(Error::Format(format!("parameter echo length {declared} is too large")));
        }
        let start = head.len();
        head.resize(start + declared as usize, 0);
        read_exact(&mut source, &mut head[start..], start as u64, "parameter echo")?;
        let mut r = ByteReader::new(&head);
        let header = parse_header(&mut r)?;
        r.finish()?;
        let buf = vec![0u8; header.entry_len()];
        Ok(ShardReader {
            source,
            offset: head.len() as u64,
            header,
            read: 0,
            prev: None,
            buf,
        })
    }

    pub fn header(&self) -> &ShardHeader {
        &self.header
    }

    /// Next entry, or `None` after the last one (trailing bytes are an error).
    pub fn next_entry(&mut self) -> Result<Option<DatasetEntry>> {
        if self.read == self.header.user_count {
            let mut probe = [0u8; 1];
            let n = self
                .source
                .read(&mut probe)
                .map_err(|e| Error::io("reading shard", e))?;
            if n != 0 {
                return Err(Error::Corrupt {
                    offset: self.offset,
                    message: "trailing bytes after the last entry".into(),
                });
            }
            return Ok(None);
        }
        read_exact(&mut self.source, &mut self.buf, self.offset, "shard entry")?;
        let record = self.read as usize;
        let e = decode_entry(&mut ByteReader::new(&self.buf), &self.header, record)?;
        check_order(self.prev, e.global_index, record)?;
        self.prev = Some(e.global_index);
        self.offset += self.buf.len() as u64;
        self.read += 1;
        Ok(Some(e))
    }
}

fn read_exact<R: Read>(src: &mut R, buf: &mut [u8], offset: u64, what: &str) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match src.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(Error::Corrupt {
                    offset: offset + filled as u64,
                    message: format!("truncated {what}"),
                })
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(Error::io(format!("reading {what}"), e)),
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub file: String,
    pub bs_id: u32,
    /// First and last global user index, `None` for an empty shard.
    pub user_span: Option<(u64, u64)>,
    pub bytes: u64,
    pub hash: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = String::from("# file bs_id first_user last_user bytes hash\n");
        for e in &self.entries {
            let (a, b) = e.user_span.map_or(("-".to_string(), "-".to_string()), |(a, b)| {
                (a.to_string(), b.to_string())
            });
            let _ = writeln!(s, "{} {} {a} {b} {} {}", e.file, e.bs_id, e.bytes, hash_hex(e.hash));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: &str| Error::Parse {
                line: i + 1,
                message: format!("manifest: {m}"),
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(bad("expected 6 fields"));
            }
            let num = |s: &str| s.parse::<u64>().map_err(|_| bad("bad number"));
            let user_span = match (f[2], f[3]) {
                ("-", "-") => None,
                (a, b) => Some((num(a)?, num(b)?)),
            };
            entries.push(ManifestEntry {
                file: f[0].to_string(),
                bs_id: f[1].parse().map_err(|_| bad("bad bs_id"))?,
                user_span,
                bytes: num(f[4])?,
                hash: parse_hash_hex(f[5]).ok_or_else(|| bad("bad hash"))?,
            });
        }
        Ok(Manifest { entries })
    }
}

fn span(entries: &[DatasetEntry]) -> Option<(u64, u64)> {
    Some((entries.first()?.global_index, entries.last()?.global_index))
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let text = manifest.to_text();
    crate::fsutil::write_bytes_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(())
}

fn header_for(ds_params: &ParamSet, name: &str, bs_id: u32, ordinal: usize, users: u64) -> ShardHeader {
    ShardHeader {
        version: SHARD_VERSION,
        bs_id,
        ordinal: ordinal as u32,
        user_count: users,
        scenario_name: name.to_string(),
        params: ds_params.clone(),
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(format!("writing {}", path.display()), e)
}

fn write_csv_shard(path: &Path, shard: &BsShard, subcarriers: &[u32]) -> Result<ManifestEntry> {
    let written = write_atomic(path, |w| {
        let err = io_err(path);
        writeln!(w, "user_index,x_m,y_m,z_m,antenna,subcarrier,re,im").map_err(&err)?;
        for e in &shard.entries {
            let l = e.location;
            for (j, k) in subcarriers.iter().enumerate() {
                for (m, c) in e.channel.column(j).iter().enumerate() {
                    writeln!(
                        w,
                        "{},{},{},{},{},{k},{},{}",
                        e.global_index,
                        l.x,
                        l.y,
                        l.z,
                        m + 1,
                        c.re,
                        c.im
                    )
                    .map_err(&err)?;
                }
            }
        }
        Ok(())
    })?;
    Ok(ManifestEntry {
        file: file_name(path),
        bs_id: shard.bs_id,
        user_span: span(&shard.entries),
        bytes: written.bytes,
        hash: written.hash,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Writes `ds` into `dir` (created if needed) and returns the manifest,
/// which is also written as `manifest.txt`.
pub fn export_dataset(ds: &Dataset, dir: &Path, format: ExportFormat) -> Result<Manifest> {
    ds.check()?;
    create_dir(dir)?;
    let mut manifest = Manifest::default();
    match format {
        ExportFormat::Binary => {
            for (b, shard) in ds.shards.iter().enumerate() {
                let h = header_for(
                    &ds.params,
                    &ds.scenario_name,
                    shard.bs_id,
                    b + 1,
                    shard.entries.len() as u64,
                );
                let bytes = encode_shard(&h, &shard.entries)?;
                let path = dir.join(shard_file_name(shard.bs_id));
                let w = crate::fsutil::write_bytes_atomic(&path, &bytes)?;
                manifest.entries.push(ManifestEntry {
                    file: file_name(&path),
                    bs_id: shard.bs_id,
                    user_span: span(&shard.entries),
                    bytes: w.bytes,
                    hash: w.hash,
                });
            }
        }
        ExportFormat::Csv => {
            let values = (ds.bs_count() * ds.user_count()) as u64
                * ds.params.num_antennas() as u64
                * u64::from(ds.params.ofdm_limit);
            if values > CSV_MAX_VALUES {
                return Err(Error::Validation(format!(
                    "CSV export of {values} complex values exceeds the cap of {CSV_MAX_VALUES}; use the binary format"
                )));
            }
            let subcarriers = subcarrier_set(&ds.params)?;
            for shard in &ds.shards {
                let path = dir.join(csv_file_name(shard.bs_id));
                manifest.entries.push(write_csv_shard(&path, shard, &subcarriers)?);
            }
        }
    }
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

/// Builds and writes binary shards without holding a full shard in memory:
/// users are processed `chunk` at a time through `exec` and appended to the
/// shard being written.
pub fn stream_export<E: Executor>(
    rayfiles: &[RayFile],
    params: &ParamSet,
    scene: &Scene,
    dir: &Path,
    exec: &E,
    chunk: usize,
) -> Result<Manifest> {
    let builder = ChannelBuilder::new(params)?;
    let sources = select_sources(rayfiles, params, scene)?;
    let users = active_users(params, scene)?;
    let chunk = chunk.max(1);
    create_dir(dir)?;
    let mut manifest = Manifest::default();
    for (b, rf) in sources.iter().enumerate() {
        let bs_id = rf.header.bs_id;
        let path = dir.join(shard_file_name(bs_id));
        let header = header_for(params, &scene.name, bs_id, b + 1, users.len() as u64);
        let written = write_atomic(&path, |w| {
            let err = io_err(&path);
            w.write_all(&encode_header(&header)?).map_err(&err)?;
            for part in users.chunks(chunk) {
                let encoded = exec.map(part.len(), |i| {
                    let e = build_entry(rf, &builder, part[i].0, part[i].1)?;
                    let mut out = Vec::with_capacity(header.entry_len());
                    encode_entry_into(&e, &mut out);
                    Ok(out)
                });
                for bytes in encoded {
                    w.write_all(&bytes?).map_err(&err)?;
                }
            }
            Ok(())
        })?;
        manifest.entries.push(ManifestEntry {
            file: file_name(&path),
            bs_id,
            user_span: users.first().map(|f| (f.0, users.last().expect("nonempty").0)),
            bytes: written.bytes,
            hash: written.hash,
        });
    }
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

/// Reads a binary export back, checking sizes and hashes against the
/// manifest.
pub fn import_dataset(dir: &Path) -> Result<Dataset> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(format!("reading {}", mpath.display()), e))?;
    let manifest = Manifest::parse(&text)?;
    let mut shards = Vec::new();
    let mut meta: Option<(ParamSet, String)> = None;
    for (b, me) in manifest.entries.iter().enumerate() {
        if !me.file.ends_with(".dmds") {
            return Err(Error::Format(format!(
                "{} is not a binary shard; only binary exports can be imported",
                me.file
            )));
        }
        let path = dir.join(&me.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut h = ContentHasher::new();
        h.update(&bytes);
        if bytes.len() as u64 != me.bytes || h.finish() != me.hash {
            return Err(Error::Consistency(format!(
                "{} does not match its manifest size/hash",
                me.file
            )));
        }
        let (header, shard) = decode_shard(&bytes)?;
        if header.bs_id != me.bs_id || header.ordinal as usize != b + 1 || span(&shard.entries) != me.user_span {
            return Err(Error::Consistency(format!(
                "{} disagrees with its manifest line",
                me.file
            )));
        }
        match &meta {
            None => meta = Some((header.params.clone(), header.scenario_name.clone())),
            Some((p, n)) if *p != header.params || *n != header.scenario_name => {
                return Err(Error::Consistency(format!(
                    "{} was built with different parameters",
                    me.file
                )))
            }
            Some(_) => {}
        }
        shards.push(shard);
    }
    let (params, scenario_name) = meta.ok_or_else(|| Error::Format("manifest lists no shards".into()))?;
    let ds = Dataset {
        params,
        scenario_name,
        shards,
    };
    ds.check()?;
    Ok(ds)
}
