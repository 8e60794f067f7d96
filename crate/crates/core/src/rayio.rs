//! Ray files: the per-BS interchange format between the tracer and the
//! channel builder.
//!
//! Layout (little-endian):
//!
//! ```text
//! header (64 bytes)
//!   0  magic "DMRF"
//!   4  version        u32 = 1
//!   8  bs_id          u32
//!  12  carrier_freq   f64 (Hz)
//!  20  user_count     u64
//!  28  scenario name  32 bytes, UTF-8, zero padded
//!  60  reserved       4 zero bytes
//! per user (34 bytes + 58 per path)
//!      global_index   u64
//!      position       3 × f64 (m)
//!      n_paths        u16
//!      per path: aod_az, aod_el, aoa_az, aoa_el (f64 degrees),
//!                power f64 (W), phase f64 (rad), delay f64 (s),
//!                n_reflections u16
//! ```

use std::f64::consts::TAU;
use std::io::{Read, Write};

use crate::bytes::{put_f64, put_name, put_u16, put_u32, put_u64, read_name, ByteReader};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::tracer::{PathList, PathRecord, MAX_RECORDED_PATHS};
use crate::validate::Violation;

pub const RAYFILE_MAGIC: [u8; 4] = *b"DMRF";
pub const RAYFILE_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;
pub const USER_HEADER_LEN: usize = 34;
pub const PATH_LEN: usize = 58;

/// Header fields supplied by the writer.
#[derive(Debug, Clone, PartialEq)]
pub struct RayFileMeta {
    pub bs_id: u32,
    pub carrier_freq: f64,
    pub scenario_name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayFileHeader {
    pub version: u32,
    pub bs_id: u32,
    pub carrier_freq: f64,
    pub user_count: u64,
    pub scenario_name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayFile {
    pub header: RayFileHeader,
    pub records: Vec<PathList>,
}

impl RayFile {
    /// Assembles an in-memory ray file, checking what the encoder checks.
    pub fn new(meta: &RayFileMeta, records: Vec<PathList>) -> Result<RayFile> {
        check_lists(&records, meta)?;
        Ok(RayFile {
            header: RayFileHeader {
                version: RAYFILE_VERSION,
                bs_id: meta.bs_id,
                carrier_freq: meta.carrier_freq,
                user_count: records.len() as u64,
                scenario_name: meta.scenario_name.clone(),
            },
            records,
        })
    }

    pub fn meta(&self) -> RayFileMeta {
        RayFileMeta {
            bs_id: self.header.bs_id,
            carrier_freq: self.header.carrier_freq,
            scenario_name: self.header.scenario_name.clone(),
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        encode_rayfile(&self.records, &self.meta())
    }

    /// Binary search by global user index.
    pub fn record(&self, user_index: u64) -> Option<&PathList> {
        self.records
            .binary_search_by_key(&user_index, |r| r.user_index)
            .ok()
            .map(|i| &self.records[i])
    }
}

/// Size in bytes of a ray file with the given path counts per user.
pub fn encoded_len(path_counts: impl IntoIterator<Item = usize>) -> usize {
    HEADER_LEN
        + path_counts
            .into_iter()
            .map(|n| USER_HEADER_LEN + n * PATH_LEN)
            .sum::<usize>()
}

fn check_lists(path_lists: &[PathList], meta: &RayFileMeta) -> Result<()> {
    for w in path_lists.windows(2) {
        if w[0].user_index >= w[1].user_index {
            return Err(Error::Validation(format!(
                "path lists must be sorted by user index (found {} before {})",
                w[0].user_index, w[1].user_index
            )));
        }
    }
    if let Some(pl) = path_lists.iter().find(|p| p.bs_id != meta.bs_id) {
        return Err(Error::Validation(format!(
            "path list for user {} belongs to BS {}, file is for BS {}",
            pl.user_index, pl.bs_id, meta.bs_id
        )));
    }
    Ok(())
}

pub fn encode_rayfile(path_lists: &[PathList], meta: &RayFileMeta) -> Result<Vec<u8>> {
    check_lists(path_lists, meta)?;
    let mut out = Vec::with_capacity(encoded_len(path_lists.iter().map(|p| p.paths.len())));
    out.extend_from_slice(&RAYFILE_MAGIC);
    put_u32(&mut out, RAYFILE_VERSION);
    put_u32(&mut out, meta.bs_id);
    put_f64(&mut out, meta.carrier_freq);
    put_u64(&mut out, path_lists.len() as u64);
    put_name(&mut out, &meta.scenario_name)?;
    put_u32(&mut out, 0);
    debug_assert_eq!(out.len(), HEADER_LEN);
    for pl in path_lists {
        let n = u16::try_from(pl.paths.len())
            .map_err(|_| Error::Validation(format!("user {} has too many paths", pl.user_index)))?;
        put_u64(&mut out, pl.user_index);
        for c in pl.user_position.to_array() {
            put_f64(&mut out, c);
        }
        put_u16(&mut out, n);
        for p in &pl.paths {
            for v in [p.aod_az, p.aod_el, p.aoa_az, p.aoa_el, p.power, p.phase, p.delay] {
                put_f64(&mut out, v);
            }
            put_u16(&mut out, p.n_reflections);
        }
    }
    Ok(out)
}

/// Writes a ray file and returns the number of bytes written.
pub fn write_rayfile<W: Write>(path_lists: &[PathList], meta: &RayFileMeta, mut sink: W) -> Result<u64> {
    let bytes = encode_rayfile(path_lists, meta)?;
    sink.write_all(&bytes)
        .and_then(|_| sink.flush())
        .map_err(|e| Error::io(format!("writing ray file for BS {}", meta.bs_id), e))?;
    Ok(bytes.len() as u64)
}

/// Reads and fully validates a ray file.
pub fn read_rayfile<R: Read>(mut source: R) -> Result<RayFile> {
    let mut buf = Vec::new();
    source
        .read_to_end(&mut buf)
        .map_err(|e| Error::io("reading ray file", e))?;
    decode_rayfile(&buf)
}

pub fn decode_rayfile(bytes: &[u8]) -> Result<RayFile> {
    let rf = decode_rayfile_unchecked(bytes)?;
    if let Some(v) = validate_rayfile(&rf).into_iter().next() {
        return Err(match v.record {
            Some(record) => Error::Semantic {
                record,
                message: v.to_string(),
            },
            None => Error::Format(v.to_string()),
        });
    }
    Ok(rf)
}

/// Decodes the structure only; semantic invariants are left to
/// [`validate_rayfile`].
pub fn decode_rayfile_unchecked(bytes: &[u8]) -> Result<RayFile> {
    let mut r = ByteReader::new(bytes);
    let magic = r.array::<4>("magic")?;
    if magic != RAYFILE_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:02x?}, expected \"DMRF\"")));
    }
    let version = r.u32("version")?;
    if version != RAYFILE_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: RAYFILE_VERSION,
        });
    }
    let bs_id = r.u32("bs_id")?;
    let carrier_freq = r.f64("carrier_freq")?;
    let user_count = r.u64("user_count")?;
    let scenario_name = read_name(&mut r)?;
    if r.u32("reserved")? != 0 {
        return Err(Error::Format("reserved header bytes must be zero".into()));
    }
    let cap = (user_count as usize).min(r.remaining() / USER_HEADER_LEN);
    let mut records = Vec::with_capacity(cap);
    for _ in 0..user_count {
        let user_index = r.u64("user index")?;
        let user_position = Vec3::new(
            r.f64("user position")?,
            r.f64("user position")?,
            r.f64("user position")?,
        );
        let n = usize::from(r.u16("path count")?);
        if r.remaining() < n * PATH_LEN {
            return Err(Error::Corrupt {
                offset: r.offset() as u64,
                message: format!(
                    "truncated paths of user {user_index}: need {} bytes, {} left",
                    n * PATH_LEN,
                    r.remaining()
                ),
            });
        }
        let mut paths = Vec::with_capacity(n);
        for _ in 0..n {
            paths.push(PathRecord {
                aod_az: r.f64("path")?,
                aod_el: r.f64("path")?,
                aoa_az: r.f64("path")?,
                aoa_el: r.f64("path")?,
                power: r.f64("path")?,
                phase: r.f64("path")?,
                delay: r.f64("path")?,
                n_reflections: r.u16("path")?,
            });
        }
        records.push(PathList {
            bs_id,
            user_index,
            user_position,
            paths,
        });
    }
    r.finish()?;
    Ok(RayFile {
        header: RayFileHeader {
            version,
            bs_id,
            carrier_freq,
            user_count,
            scenario_name,
        },
        records,
    })
}

/// Lists every broken invariant. Empty means the file is valid.
pub fn validate_rayfile(rf: &RayFile) -> Vec<Violation> {
    let mut out = Vec::new();
    let h = &rf.header;
    if h.version != RAYFILE_VERSION {
        out.push(Violation::new("version", format!("version == {RAYFILE_VERSION}")));
    }
    if !(h.carrier_freq > 0.0 && h.carrier_freq.is_finite()) {
        out.push(Violation::new("carrier_freq", "carrier_freq > 0"));
    }
    if h.user_count != rf.records.len() as u64 {
        out.push(Violation::new("user_count", "user_count == number of records"));
    }
    for (i, rec) in rf.records.iter().enumerate() {
        if i > 0 && rf.records[i - 1].user_index >= rec.user_index {
            out.push(Violation::new("global_index", "records sorted by user index").at_record(i));
        }
        if rec.bs_id != h.bs_id {
            out.push(Violation::new("bs_id", "record bs_id == header bs_id").at_record(i));
        }
        if !rec.user_position.is_finite() {
            out.push(Violation::new("position", "finite position").at_record(i));
        }
        if rec.paths.len() > MAX_RECORDED_PATHS {
            out.push(Violation::new("n_paths", format!("at most {MAX_RECORDED_PATHS} paths")).at_record(i));
        }
        for (j, p) in rec.paths.iter().enumerate() {
            let mut bad = |field: &str, rule: &str| {
                out.push(Violation::new(field, rule).at_record(i).at_path(j));
            };
            if !(p.power > 0.0 && p.power.is_finite()) {
                bad("power", "power > 0");
            }
            if !(p.delay > 0.0 && p.delay.is_finite()) {
                bad("delay", "delay > 0");
            }
            if !(-180.0..180.0).contains(&p.aod_az) {
                bad("aod_az", "aod_az in [-180, 180)");
            }
            if !(-180.0..=180.0).contains(&p.aoa_az) {
                bad("aoa_az", "aoa_az in [-180, 180]");
            }
            if !(0.0..=180.0).contains(&p.aod_el) {
                bad("aod_el", "aod_el in [0, 180]");
            }
            if !(0.0..=180.0).contains(&p.aoa_el) {
                bad("aoa_el", "aoa_el in [0, 180]");
            }
            if !(0.0..TAU).contains(&p.phase) {
                bad("phase", "phase in [0, 2π)");
            }
            if j > 0 && rec.paths[j - 1].power < p.power {
                bad("power", "paths sorted by power descending");
            }
        }
    }
    out
}

/// Human-readable CSV dump for small debugging runs.
pub fn write_rayfile_csv<W: Write>(rf: &RayFile, mut sink: W) -> Result<()> {
    let mut s =
        String::from("bs_id,user_index,x,y,z,path,aod_az,aod_el,aoa_az,aoa_el,power,phase,delay,n_reflections\n");
    for rec in &rf.records {
        let p = rec.user_position;
        for (j, r) in rec.paths.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{:e},{:e},{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
                rec.bs_id,
                rec.user_index,
                p.x,
                p.y,
                p.z,
                j + 1,
                r.aod_az,
                r.aod_el,
                r.aoa_az,
                r.aoa_el,
                r.power,
                r.phase,
                r.delay,
                r.n_reflections
            ));
        }
    }
    sink.write_all(s.as_bytes())
        .map_err(|e| Error::io("writing ray CSV", e))
}
