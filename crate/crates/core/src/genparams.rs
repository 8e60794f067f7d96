//! Dataset parameter set: which BSs and users are active, the BS array
//! geometry, OFDM sampling and how many paths to keep.
//!
//! Keys follow the reference generator's names and are matched
//! case-insensitively:
//!
//! | key | default |
//! |---|---|
//! | `active_BS` | `3,4,5,6` |
//! | `active_user_first` / `active_user_last` | `1000` / `1300` |
//! | `num_ant_x`, `num_ant_y`, `num_ant_z` | `1`, `32`, `8` |
//! | `ant_spacing` (wavelengths) | `0.5` |
//! | `bandwidth` (GHz) | `0.5` |
//! | `num_OFDM` | `1024` |
//! | `OFDM_sampling_factor` | `1` |
//! | `OFDM_limit` | `64` |
//! | `num_paths` | `5` |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::{self, Entry};
use crate::tracer::MAX_RECORDED_PATHS;

/// Every accepted key, in canonical spelling.
/// Upper bound on M; keeps every size computation far from overflow.
pub const MAX_ARRAY_ELEMENTS: u64 = 1 << 24;

pub const PARAM_KEYS: [&str; 12] = [
    "active_BS",
    "active_user_first",
    "active_user_last",
    "num_ant_x",
    "num_ant_y",
    "num_ant_z",
    "ant_spacing",
    "bandwidth",
    "num_OFDM",
    "OFDM_sampling_factor",
    "OFDM_limit",
    "num_paths",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub active_bs: Vec<u32>,
    pub active_user_first: u32,
    pub active_user_last: u32,
    pub num_ant_x: u32,
    pub num_ant_y: u32,
    pub num_ant_z: u32,
    /// Element spacing in wavelengths.
    pub ant_spacing: f64,
    /// System bandwidth in GHz.
    pub bandwidth: f64,
    pub num_ofdm: u32,
    pub ofdm_sampling_factor: u32,
    pub ofdm_limit: u32,
    pub num_paths: u32,
}

impl Default for ParamSet {
    fn default() -> Self {
        ParamSet {
            active_bs: vec![3, 4, 5, 6],
            active_user_first: 1000,
            active_user_last: 1300,
            num_ant_x: 1,
            num_ant_y: 32,
            num_ant_z: 8,
            ant_spacing: 0.5,
            bandwidth: 0.5,
            num_ofdm: 1024,
            ofdm_sampling_factor: 1,
            ofdm_limit: 64,
            num_paths: 5,
        }
    }
}

/// Parses a `key=value` document; missing keys keep their defaults.
pub fn parse_params(text: &str) -> Result<ParamSet> {
    ParamSet::from_entries(&kv::parse_document(text)?)
}

impl ParamSet {
    pub fn from_entries(entries: &[Entry]) -> Result<ParamSet> {
        let mut p = ParamSet::default();
        for e in entries {
            p.apply(e)?;
        }
        p.check()?;
        Ok(p)
    }

    /// Applies one entry without re-validating the whole set.
    pub fn apply(&mut self, e: &Entry) -> Result<()> {
        let key = canonical_key(&e.key).ok_or_else(|| Error::UnknownKey {
            key: e.key.clone(),
            line: e.line,
        })?;
        match key {
            "active_BS" => self.active_bs = e.parse_list()?,
            "active_user_first" => self.active_user_first = e.parse()?,
            "active_user_last" => self.active_user_last = e.parse()?,
            "num_ant_x" => self.num_ant_x = e.parse()?,
            "num_ant_y" => self.num_ant_y = e.parse()?,
            "num_ant_z" => self.num_ant_z = e.parse()?,
            "ant_spacing" => self.ant_spacing = e.parse()?,
            "bandwidth" => self.bandwidth = e.parse()?,
            "num_OFDM" => self.num_ofdm = e.parse()?,
            "OFDM_sampling_factor" => self.ofdm_sampling_factor = e.parse()?,
            "OFDM_limit" => self.ofdm_limit = e.parse()?,
            "num_paths" => self.num_paths = e.parse()?,
            _ => unreachable!("canonical_key returned an unhandled key"),
        }
        Ok(())
    }

    pub fn check(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Err(Error::config(field, msg));
        if self.active_bs.is_empty() {
            return fail("active_BS", "at least one active BS is required".into());
        }
        let mut seen = self.active_bs.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return fail("active_BS", "BS ids must be distinct".into());
        }
        if seen[0] == 0 {
            return fail("active_BS", "BS ids start at 1".into());
        }
        if self.active_user_first == 0 {
            return fail("active_user_first", "row labels start at 1".into());
        }
        if self.active_user_first > self.active_user_last {
            return fail(
                "active_user_first",
                format!(
                    "first row {} is after last row {}",
                    self.active_user_first, self.active_user_last
                ),
            );
        }
        for (name, v) in [
            ("num_ant_x", self.num_ant_x),
            ("num_ant_y", self.num_ant_y),
            ("num_ant_z", self.num_ant_z),
            ("num_OFDM", self.num_ofdm),
            ("OFDM_sampling_factor", self.ofdm_sampling_factor),
            ("OFDM_limit", self.ofdm_limit),
        ] {
            if v == 0 {
                return fail(name, "must be at least 1".into());
            }
        }
        let elements = u64::from(self.num_ant_x) * u64::from(self.num_ant_y);
        if elements.saturating_mul(u64::from(self.num_ant_z)) > MAX_ARRAY_ELEMENTS {
            return fail(
                "num_ant_x",
                format!("array has more than {MAX_ARRAY_ELEMENTS} elements"),
            );
        }
        if !(self.ant_spacing > 0.0 && self.ant_spacing.is_finite()) {
            return fail("ant_spacing", format!("must be positive, got {}", self.ant_spacing));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return fail("bandwidth", format!("must be positive, got {}", self.bandwidth));
        }
        if self.num_paths == 0 || self.num_paths as usize > MAX_RECORDED_PATHS {
            return fail(
                "num_paths",
                format!("must be in 1..={MAX_RECORDED_PATHS}, got {}", self.num_paths),
            );
        }
        Ok(())
    }

    /// (M_x, M_y, M_z).
    pub fn array_dims(&self) -> (usize, usize, usize) {
        (
            self.num_ant_x as usize,
            self.num_ant_y as usize,
            self.num_ant_z as usize,
        )
    }

    /// Total BS antennas M.
    pub fn num_antennas(&self) -> usize {
        let (x, y, z) = self.array_dims();
        x * y * z
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth * 1e9
    }

    /// Renders the set as a `key=value` document that parses back to it.
    pub fn to_document(&self) -> String {
        let bs: Vec<String> = self.active_bs.iter().map(u32::to_string).collect();
        format!(
            "active_BS={}\nactive_user_first={}\nactive_user_last={}\nnum_ant_x={}\nnum_ant_y={}\nnum_ant_z={}\nant_spacing={:?}\nbandwidth={:?}\nnum_OFDM={}\nOFDM_sampling_factor={}\nOFDM_limit={}\nnum_paths={}\n",
            bs.join(","),
            self.active_user_first,
            self.active_user_last,
            self.num_ant_x,
            self.num_ant_y,
            self.num_ant_z,
            self.ant_spacing,
            self.bandwidth,
            self.num_ofdm,
            self.ofdm_sampling_factor,
            self.ofdm_limit,
            self.num_paths
        )
    }
}

/// Maps any capitalisation of a known key onto its canonical spelling.
pub fn canonical_key(key: &str) -> Option<&'static str> {
    PARAM_KEYS.iter().copied().find(|k| k.eq_ignore_ascii_case(key))
}

/// 1-based subcarrier indices {1, 1+f, 1+2f, ...} with `OFDM_limit` entries.
pub fn subcarrier_set(p: &ParamSet) -> Result<Vec<u32>> {
    let f = u64::from(p.ofdm_sampling_factor.max(1));
    let limit = u64::from(p.ofdm_limit);
    let last = 1 + (limit.saturating_sub(1)) * f;
    if limit == 0 || last > u64::from(p.num_ofdm) {
        return Err(Error::Validation(format!(
            "OFDM_limit={} with OFDM_sampling_factor={} needs subcarrier {last}, but num_OFDM={}",
            p.ofdm_limit, p.ofdm_sampling_factor, p.num_ofdm
        )));
    }
    Ok((0..limit).map(|i| (1 + i * f) as u32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_reference_defaults() {
        let p = parse_params("").unwrap();
        assert_eq!(p, ParamSet::default());
        assert_eq!(p.array_dims(), (1, 32, 8));
        assert_eq!(p.num_antennas(), 256);
        assert_eq!((p.bandwidth, p.num_ofdm, p.num_paths), (0.5, 1024, 5));
        assert_eq!(p.active_bs, vec![3, 4, 5, 6]);
        assert_eq!((p.active_user_first, p.active_user_last), (1000, 1300));
    }

    #[test]
    fn mixed_case_keys() {
        let p = parse_params("active_BS=[3,4,5,6]\nactive_user_first=1000\nactive_user_last=1500\n").unwrap();
        assert_eq!(p.active_bs, vec![3, 4, 5, 6]);
        assert_eq!(p.active_user_last, 1500);
        let q = parse_params("ofdm_limit = 16\nNUM_OFDM=32").unwrap();
        assert_eq!((q.ofdm_limit, q.num_ofdm), (16, 32));
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_params("num_paths=0"), Err(Error::Config { field, .. }) if field == "num_paths"));
        assert!(matches!(parse_params("num_paths=26"), Err(Error::Config { .. })));
        assert!(matches!(parse_params("\nfoo=1"), Err(Error::UnknownKey { key, line: 2 }) if key == "foo"));
        assert!(matches!(
            parse_params("num_ant_y=lots"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_params("active_user_first=10\nactive_user_last=9").is_err());
        assert!(parse_params("ant_spacing=0").is_err());
        assert!(parse_params("bandwidth=-1").is_err());
        assert!(parse_params("active_BS=3,3").is_err());
        assert!(parse_params("num_ant_x=4096\nnum_ant_y=4096\nnum_ant_z=4096").is_err());
        assert!(parse_params("num_ant_x=4096\nnum_ant_y=4096\nnum_ant_z=1").is_ok());
    }

    #[test]
    fn document_round_trip() {
        let p = parse_params("active_BS=1,7\nant_spacing=0.3\nbandwidth=0.1\n").unwrap();
        assert_eq!(parse_params(&p.to_document()).unwrap(), p);
    }

    fn set(k: u32, f: u32, limit: u32) -> Result<Vec<u32>> {
        let p = ParamSet {
            num_ofdm: k,
            ofdm_sampling_factor: f,
            ofdm_limit: limit,
            ..ParamSet::default()
        };
        subcarrier_set(&p)
    }

    #[test]
    fn subcarrier_examples() {
        assert_eq!(set(1024, 1, 64).unwrap(), (1..=64).collect::<Vec<_>>());
        let s = set(1024, 4, 64).unwrap();
        assert_eq!(s.len(), 64);
        assert_eq!(&s[..3], &[1, 5, 9]);
        assert_eq!(*s.last().unwrap(), 253);
        assert_eq!(set(8, 1, 8).unwrap(), (1..=8).collect::<Vec<_>>());
        let err = set(100, 4, 64).unwrap_err();
        assert!(err.to_string().contains("num_OFDM=100"), "{err}");
    }
}
