use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kv::{self, Entry};

/// Overrides for one user grid. `None` origin coordinates are derived from
/// the street layout (grid centred across its street).
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub origin_x: Option<f64>,
    pub origin_y: Option<f64>,
    pub origin_z: Option<f64>,
    pub rows: u32,
    pub users_per_row: u32,
    pub spacing_m: f64,
}

/// Per-BS coordinate overrides.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BsOverride {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub z: Option<f64>,
}

/// Inputs to [`build_o1_scene`](super::build_o1_scene). `Default` reproduces
/// the reference street-canyon layout.
///
/// Recognised keys:
///
/// | key | meaning |
/// |---|---|
/// | `scenario_name` | name stamped into every artifact |
/// | `carrier_freq_hz` | carrier frequency |
/// | `ground_z_m` | ground plane height |
/// | `user_height_m` | user antenna height above ground |
/// | `bs_height_m` | BS height above ground (all BSs) |
/// | `buildings` | `o1` (default layout) or `none` |
/// | `material.<id>.loss_db` | reflection loss per bounce |
/// | `bs.<n>.x`, `bs.<n>.y`, `bs.<n>.z` | BS `n` coordinates |
/// | `grid<g>.origin_x_m` / `origin_y_m` / `origin_z_m` | grid origin |
/// | `grid<g>.rows`, `grid<g>.users_per_row`, `grid<g>.spacing_m` | grid shape |
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub scenario_name: String,
    pub carrier_freq_hz: f64,
    pub ground_z_m: f64,
    pub user_height_m: f64,
    pub bs_height_m: f64,
    pub with_buildings: bool,
    pub material_loss_db: BTreeMap<String, f64>,
    pub bs: [BsOverride; 18],
    pub grids: [GridConfig; 3],
}

impl Default for SceneConfig {
    fn default() -> Self {
        let grid = |rows, users_per_row, spacing_m| GridConfig {
            origin_x: None,
            origin_y: None,
            origin_z: None,
            rows,
            users_per_row,
            spacing_m,
        };
        let mut material_loss_db = BTreeMap::new();
        material_loss_db.insert(super::o1::GROUND_MATERIAL.to_string(), 6.0);
        material_loss_db.insert(super::o1::WALL_MATERIAL.to_string(), 6.0);
        SceneConfig {
            scenario_name: "O1".into(),
            carrier_freq_hz: 60e9,
            ground_z_m: 0.0,
            user_height_m: 2.0,
            bs_height_m: 6.0,
            with_buildings: true,
            material_loss_db,
            bs: [BsOverride::default(); 18],
            grids: [grid(2751, 181, 0.2), grid(1101, 181, 0.2), grid(1351, 361, 0.1)],
        }
    }
}

impl SceneConfig {
    pub fn parse(text: &str) -> Result<SceneConfig> {
        let mut cfg = SceneConfig::default();
        for e in kv::parse_document(text)? {
            cfg.apply(&e)?;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, e: &Entry) -> Result<()> {
        let key = e.key.as_str();
        match key {
            "scenario_name" => self.scenario_name = e.value.clone(),
            "carrier_freq_hz" => self.carrier_freq_hz = e.parse()?,
            "ground_z_m" => self.ground_z_m = e.parse()?,
            "user_height_m" => self.user_height_m = e.parse()?,
            "bs_height_m" => self.bs_height_m = e.parse()?,
            "buildings" => {
                self.with_buildings = match e.value.as_str() {
                    "o1" => true,
                    "none" => false,
                    other => {
                        return Err(Error::Parse {
                            line: e.line,
                            message: format!("`buildings` expects `o1` or `none`, found `{other}`"),
                        })
                    }
                }
            }
            _ => return self.apply_indexed(e),
        }
        Ok(())
    }

    fn apply_indexed(&mut self, e: &Entry) -> Result<()> {
        let unknown = || Error::UnknownKey {
            key: e.key.clone(),
            line: e.line,
        };
        let parts: Vec<&str> = e.key.split('.').collect();
        match parts.as_slice() {
            ["material", id, "loss_db"] if !id.is_empty() => {
                self.material_loss_db.insert(id.to_string(), e.parse()?);
            }
            ["bs", n, coord] => {
                let n: usize = n.parse().map_err(|_| unknown())?;
                let slot = self.bs.get_mut(n.wrapping_sub(1)).ok_or_else(unknown)?;
                match *coord {
                    "x" => slot.x = Some(e.parse()?),
                    "y" => slot.y = Some(e.parse()?),
                    "z" => slot.z = Some(e.parse()?),
                    _ => return Err(unknown()),
                }
            }
            [grid, field] if grid.starts_with("grid") => {
                let g: usize = grid["grid".len()..].parse().map_err(|_| unknown())?;
                let slot = self.grids.get_mut(g.wrapping_sub(1)).ok_or_else(unknown)?;
                match *field {
                    "origin_x_m" => slot.origin_x = Some(e.parse()?),
                    "origin_y_m" => slot.origin_y = Some(e.parse()?),
                    "origin_z_m" => slot.origin_z = Some(e.parse()?),
                    "rows" => slot.rows = e.parse()?,
                    "users_per_row" => slot.users_per_row = e.parse()?,
                    "spacing_m" => slot.spacing_m = e.parse()?,
                    _ => return Err(unknown()),
                }
            }
            _ => return Err(unknown()),
        }
        Ok(())
    }

    /// Rejects values that cannot produce a valid scene, naming the field.
    pub fn check(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive, got {v}")))
            }
        };
        positive("carrier_freq_hz", self.carrier_freq_hz)?;
        positive("user_height_m", self.user_height_m)?;
        positive("bs_height_m", self.bs_height_m)?;
        if !self.ground_z_m.is_finite() {
            return Err(Error::config("ground_z_m", "must be finite"));
        }
        if self.scenario_name.len() > 32 {
            return Err(Error::config("scenario_name", "at most 32 bytes"));
        }
        for (id, loss) in &self.material_loss_db {
            if !(loss.is_finite() && *loss >= 0.0) {
                return Err(Error::config(
                    format!("material.{id}.loss_db"),
                    format!("must be >= 0, got {loss}"),
                ));
            }
        }
        for (i, g) in self.grids.iter().enumerate() {
            let name = |f: &str| format!("grid{}.{f}", i + 1);
            positive(&name("spacing_m"), g.spacing_m)?;
            if g.rows == 0 {
                return Err(Error::config(name("rows"), "must be at least 1"));
            }
            if g.users_per_row == 0 {
                return Err(Error::config(name("users_per_row"), "must be at least 1"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply() {
        let cfg =
            SceneConfig::parse("carrier_freq_hz = 28e9\nbs.3.x = 12.5\ngrid2.rows = 4\nmaterial.drywall.loss_db=3\n")
                .unwrap();
        assert_eq!(cfg.carrier_freq_hz, 28e9);
        assert_eq!(cfg.bs[2].x, Some(12.5));
        assert_eq!(cfg.grids[1].rows, 4);
        assert_eq!(cfg.material_loss_db["drywall"], 3.0);
    }

    #[test]
    fn invalid_values_name_the_field() {
        let err = SceneConfig::parse("grid1.rows = 0").unwrap_err();
        assert!(
            matches!(&err, Error::Config { field, .. } if field == "grid1.rows"),
            "{err}"
        );
        let err = SceneConfig::parse("grid3.spacing_m = -0.1").unwrap_err();
        assert!(
            matches!(&err, Error::Config { field, .. } if field == "grid3.spacing_m"),
            "{err}"
        );
        let err = SceneConfig::parse("carrier_freq_hz = -1").unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "carrier_freq_hz"));
    }

    #[test]
    fn unknown_keys_rejected() {
        for bad in ["bs.19.x = 1", "grid4.rows = 1", "colour = red", "bs.1.w = 2"] {
            let err = SceneConfig::parse(bad).unwrap_err();
            assert!(matches!(err, Error::UnknownKey { line: 1, .. }), "{bad}: {err}");
        }
    }
}
