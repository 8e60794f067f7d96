//! Scenario geometry: buildings, base stations and user grids.
//!
//! A [`Scene`] is immutable once built. Users are addressed either by a dense
//! 1-based global index or by (row label, column), with row labels running
//! contiguously across all grids in declaration order.

mod config;
mod o1;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use config::{GridConfig, SceneConfig};
pub use o1::build_o1_scene;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::validate::Violation;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const SCENE_FORMAT_TAG: &str = "mmchan-scene/1";

/// Solid axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub min_corner: Vec3,
    pub max_corner: Vec3,
    pub material_id: String,
}

impl Building {
    pub fn new(min_corner: Vec3, max_corner: Vec3, material_id: impl Into<String>) -> Self {
        Building {
            min_corner,
            max_corner,
            material_id: material_id.into(),
        }
    }

    /// Strict interior containment.
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|a| p[a] > self.min_corner[a] && p[a] < self.max_corner[a])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: u32,
    pub position: Vec3,
    /// Dipole axis. Only recorded; the tracer treats antennas as isotropic.
    pub antenna_axis: Vec3,
}

/// Uniform rectangular grid of single-antenna users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserGrid {
    pub origin: Vec3,
    pub row_axis: Vec3,
    pub col_axis: Vec3,
    pub n_rows: u32,
    pub users_per_row: u32,
    pub spacing: f64,
    pub first_row_label: u32,
}

impl UserGrid {
    pub fn user_count(&self) -> u64 {
        u64::from(self.n_rows) * u64::from(self.users_per_row)
    }

    pub fn last_row_label(&self) -> u32 {
        self.first_row_label + self.n_rows - 1
    }

    pub fn contains_row(&self, label: u32) -> bool {
        label >= self.first_row_label && label <= self.last_row_label()
    }

    /// Position of the user at 1-based (row within grid, column).
    pub fn position(&self, row: u32, col: u32) -> Vec3 {
        let r = f64::from(row - 1) * self.spacing;
        let c = f64::from(col - 1) * self.spacing;
        self.origin + self.row_axis * r + self.col_axis * c
    }
}

/// A user's identity and position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserEntry {
    pub global_index: u64,
    pub row_label: u32,
    pub col_index: u32,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    pub buildings: Vec<Building>,
    pub base_stations: Vec<BaseStation>,
    pub grids: Vec<UserGrid>,
    pub carrier_freq: f64,
    pub ground_z: f64,
    pub ground_material: String,
    /// Reflection loss in dB applied per bounce, keyed by material id.
    pub material_losses: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    format: String,
    scene: Scene,
}

impl Scene {
    /// Validates and returns the scene, or a validation error listing every
    /// violation.
    pub fn checked(self) -> Result<Scene> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::Validation(
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
            ))
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.carrier_freq > 0.0 && self.carrier_freq.is_finite()) {
            out.push(Violation::new("carrier_freq", "carrier_freq > 0"));
        }
        if !self.ground_z.is_finite() {
            out.push(Violation::new("ground_z", "finite"));
        }
        if !self.material_losses.contains_key(&self.ground_material) {
            out.push(Violation::new("ground_material", "material has a loss entry"));
        }
        for (id, loss) in &self.material_losses {
            if !(loss.is_finite() && *loss >= 0.0) {
                out.push(Violation::new(format!("material.{id}.loss_db"), "loss_db >= 0"));
            }
        }
        for (i, b) in self.buildings.iter().enumerate() {
            if !(0..3).all(|a| b.min_corner[a] < b.max_corner[a]) {
                out.push(Violation::new("building", "min_corner < max_corner").at_record(i));
            }
            if !self.material_losses.contains_key(&b.material_id) {
                out.push(Violation::new("building.material_id", "material has a loss entry").at_record(i));
            }
        }
        for (i, bs) in self.base_stations.iter().enumerate() {
            if bs.id as usize != i + 1 {
                out.push(Violation::new("bs.id", "ids unique and contiguous from 1").at_record(i));
            }
            if !bs.position.is_finite() || bs.position.z <= self.ground_z {
                out.push(Violation::new("bs.position", "height > 0").at_record(i));
            }
            if self.buildings.iter().any(|b| b.contains(bs.position)) {
                out.push(Violation::new("bs.position", "no BS inside a building").at_record(i));
            }
        }
        let mut next_label = 1;
        for (i, g) in self.grids.iter().enumerate() {
            if !(g.spacing > 0.0 && g.spacing.is_finite()) {
                out.push(Violation::new("grid.spacing", "spacing > 0").at_record(i));
            }
            if g.n_rows == 0 || g.users_per_row == 0 {
                out.push(Violation::new("grid.n_rows", "non-empty grid").at_record(i));
            }
            if (g.row_axis.norm() - 1.0).abs() > 1e-9 || (g.col_axis.norm() - 1.0).abs() > 1e-9 {
                out.push(Violation::new("grid.axes", "unit axes").at_record(i));
            }
            if g.row_axis.dot(g.col_axis).abs() > 1e-9 {
                out.push(Violation::new("grid.axes", "row_axis ⟂ col_axis").at_record(i));
            }
            if g.first_row_label != next_label {
                out.push(Violation::new("grid.first_row_label", "row labels globally contiguous").at_record(i));
            }
            next_label = g.first_row_label.saturating_add(g.n_rows);
        }
        out
    }

    pub fn user_count(&self) -> u64 {
        self.grids.iter().map(UserGrid::user_count).sum()
    }

    pub fn row_count(&self) -> u32 {
        self.grids.iter().map(|g| g.n_rows).sum()
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn base_station(&self, id: u32) -> Result<&BaseStation> {
        self.base_stations
            .iter()
            .find(|b| b.id == id)
            .ok_or(Error::UnknownBaseStation(id))
    }

    pub fn material_loss_db(&self, material_id: &str) -> f64 {
        self.material_losses.get(material_id).copied().unwrap_or(0.0)
    }

    /// Every user, grids in declaration order, rows then columns ascending.
    pub fn enumerate_users(&self) -> Users<'_> {
        Users {
            scene: self,
            grid: 0,
            row: 1,
            col: 1,
            next_index: 1,
        }
    }

    /// Global index of the first user in each grid.
    fn grid_offsets(&self) -> impl Iterator<Item = (u64, &UserGrid)> {
        self.grids.iter().scan(0u64, |acc, g| {
            let start = *acc;
            *acc += g.user_count();
            Some((start, g))
        })
    }

    /// Looks up one user by 1-based global index.
    pub fn user(&self, global_index: u64) -> Result<UserEntry> {
        if global_index >= 1 {
            for (start, g) in self.grid_offsets() {
                if global_index <= start {
                    break;
                }
                let local = global_index - 1 - start;
                if local < g.user_count() {
                    let upr = u64::from(g.users_per_row);
                    let row = (local / upr) as u32 + 1;
                    let col = (local % upr) as u32 + 1;
                    return Ok(UserEntry {
                        global_index,
                        row_label: g.first_row_label + row - 1,
                        col_index: col,
                        position: g.position(row, col),
                    });
                }
            }
        }
        Err(Error::Bounds {
            what: "user index",
            value: global_index.to_string(),
            valid: format!("1..={}", self.user_count()),
        })
    }

    /// Global indices of every user whose row label lies in
    /// `first_row..=last_row`, in enumeration order.
    pub fn users_in_row_range(&self, first_row: u32, last_row: u32) -> Result<Vec<u64>> {
        let rows = self.row_count();
        let check = |label: u32| {
            if label >= 1 && label <= rows {
                Ok(())
            } else {
                Err(Error::Bounds {
                    what: "row label",
                    value: format!("R{label}"),
                    valid: format!("R1..=R{rows}"),
                })
            }
        };
        check(first_row)?;
        check(last_row)?;
        if first_row > last_row {
            return Err(Error::Bounds {
                what: "row range",
                value: format!("R{first_row}..R{last_row}"),
                valid: "first_row <= last_row".into(),
            });
        }
        let mut out = Vec::new();
        for (start, g) in self.grid_offsets() {
            let lo = first_row.max(g.first_row_label);
            let hi = last_row.min(g.last_row_label());
            if lo > hi {
                continue;
            }
            let upr = u64::from(g.users_per_row);
            let from = start + u64::from(lo - g.first_row_label) * upr + 1;
            let to = start + u64::from(hi - g.first_row_label + 1) * upr;
            out.extend(from..=to);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SceneFile {
            format: SCENE_FORMAT_TAG.into(),
            scene: self.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))
    }

    /// Parses a scene file without validating it.
    pub fn from_json_unchecked(text: &str) -> Result<Scene> {
        let file: SceneFile = serde_json::from_str(text).map_err(|e| Error::Format(format!("scene file: {e}")))?;
        if file.format != SCENE_FORMAT_TAG {
            return Err(Error::Format(format!(
                "scene file tag `{}`, expected `{SCENE_FORMAT_TAG}`",
                file.format
            )));
        }
        Ok(file.scene)
    }

    pub fn from_json(text: &str) -> Result<Scene> {
        Scene::from_json_unchecked(text)?.checked()
    }
}

/// Iterator returned by [`Scene::enumerate_users`].
pub struct Users<'a> {
    scene: &'a Scene,
    grid: usize,
    row: u32,
    col: u32,
    next_index: u64,
}

impl Iterator for Users<'_> {
    type Item = UserEntry;

    fn next(&mut self) -> Option<UserEntry> {
        loop {
            let g = self.scene.grids.get(self.grid)?;
            if self.row > g.n_rows || g.users_per_row == 0 {
                self.grid += 1;
                self.row = 1;
                self.col = 1;
                continue;
            }
            let entry = UserEntry {
                global_index: self.next_index,
                row_label: g.first_row_label + self.row - 1,
                col_index: self.col,
                position: g.position(self.row, self.col),
            };
            self.next_index += 1;
            self.col += 1;
            if self.col > g.users_per_row {
                self.col = 1;
                self.row += 1;
            }
            return Some(entry);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_user_scene() -> Scene {
        let mut losses = BTreeMap::new();
        losses.insert("ground".to_string(), 6.0);
        Scene {
            name: "tiny".into(),
            buildings: vec![],
            base_stations: vec![BaseStation {
                id: 1,
                position: Vec3::new(0.0, 0.0, 6.0),
                antenna_axis: Vec3::Z,
            }],
            grids: vec![UserGrid {
                origin: Vec3::new(5.0, 5.0, 2.0),
                row_axis: Vec3::X,
                col_axis: Vec3::Y,
                n_rows: 1,
                users_per_row: 1,
                spacing: 1.0,
                first_row_label: 1,
            }],
            carrier_freq: 60e9,
            ground_z: 0.0,
            ground_material: "ground".into(),
            material_losses: losses,
        }
    }

    #[test]
    fn one_user_grid() {
        let s = single_user_scene().checked().unwrap();
        let users: Vec<_> = s.enumerate_users().collect();
        assert_eq!(users.len(), 1);
        assert_eq!(users[0].global_index, 1);
        assert_eq!(users[0].position, Vec3::new(5.0, 5.0, 2.0));
        assert_eq!(s.users_in_row_range(1, 1).unwrap(), vec![1]);
    }

    #[test]
    fn row_range_errors() {
        let s = single_user_scene();
        let err = s.users_in_row_range(1, 2).unwrap_err();
        assert!(err.to_string().contains("R1..=R1"), "{err}");
        assert!(s.users_in_row_range(0, 1).is_err());
    }

    #[test]
    fn bs_inside_building_is_flagged() {
        let mut s = single_user_scene();
        s.buildings.push(Building::new(
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, 1.0, 10.0),
            "ground",
        ));
        let v = s.validate();
        assert!(v.iter().any(|x| x.rule.contains("inside a building")), "{v:?}");
    }

    #[test]
    fn json_round_trip() {
        let s = single_user_scene();
        let back = Scene::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, back);
        assert!(Scene::from_json("{\"format\":\"x\",\"scene\":null}").is_err());
    }

    #[test]
    fn unknown_bs() {
        assert!(matches!(
            single_user_scene().base_station(7),
            Err(Error::UnknownBaseStation(7))
        ));
    }
}
