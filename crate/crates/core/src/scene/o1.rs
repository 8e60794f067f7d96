//! Reference two-street outdoor layout.
//!
//! Frame: x along the main street, y along the second street, z up.
//!
//! * Main street: x ∈ [0, 600], y ∈ [-20, 20].
//! * Second street: x ∈ [180, 220], y ∈ [-250, 190] (440 m), crossing the
//!   main street.
//! * Main-street buildings: 30 m (along x) × 60 m bases flush with the street
//!   edges, 10 m alleys between them. Second-street buildings: 60 × 60 m,
//!   lining both sides of the second street, 10 m apart.
//! * BS1..BS12 sit 1 m inside the main street edges: odd ids on the south
//!   side, even ids on the north side, 100 m apart. BS13..BS18 sit 1 m
//!   inside the second street edges, 150 m apart.
//! * Grid 1 starts 15 m from the east end (x = 585) and runs west for 550 m.
//!   Grid 2 runs south from y = -25, grid 3 runs north from y = 25. All grids
//!   are centred across their street.

use std::collections::BTreeMap;

use super::config::{GridConfig, SceneConfig};
use super::{BaseStation, Building, Scene, UserGrid};
use crate::error::Result;
use crate::geom::Vec3;

pub(crate) const GROUND_MATERIAL: &str = "dry_earth";
pub(crate) const WALL_MATERIAL: &str = "drywall";

const MAIN_STREET_HALF_WIDTH: f64 = 20.0;
const SECOND_STREET_CENTER_X: f64 = 200.0;
const SECOND_STREET_HALF_WIDTH: f64 = 20.0;

/// (x, y) of BS1..BS18.
const BS_XY: [(f64, f64); 18] = [
    (560.0, -19.0),
    (560.0, 19.0),
    (460.0, -19.0),
    (460.0, 19.0),
    (360.0, -19.0),
    (360.0, 19.0),
    (240.0, -19.0),
    (240.0, 19.0),
    (140.0, -19.0),
    (140.0, 19.0),
    (40.0, -19.0),
    (40.0, 19.0),
    (181.0, 175.0),
    (219.0, 175.0),
    (181.0, 25.0),
    (219.0, 25.0),
    (181.0, -125.0),
    (219.0, -125.0),
];

const MAIN_HEIGHTS: [f64; 9] = [18.0, 24.0, 30.0, 15.0, 21.0, 36.0, 27.0, 12.0, 33.0];
const SECOND_HEIGHTS: [f64; 5] = [40.0, 25.0, 32.0, 20.0, 28.0];

fn o1_buildings(ground: f64) -> Vec<Building> {
    let mut out = Vec::new();
    let hw = MAIN_STREET_HALF_WIDTH;
    // Main street: x-starts of 30 m wide buildings on each side.
    let main_x: Vec<f64> = [5.0, 45.0, 85.0]
        .into_iter()
        .chain((0..8).map(|k| 285.0 + 40.0 * f64::from(k)))
        .collect();
    let mut h = MAIN_HEIGHTS.iter().cycle();
    for &x0 in &main_x {
        for (y0, y1) in [(-hw - 60.0, -hw), (hw, hw + 60.0)] {
            out.push(Building::new(
                Vec3::new(x0, y0, ground),
                Vec3::new(x0 + 30.0, y1, ground + h.next().unwrap()),
                WALL_MATERIAL,
            ));
        }
    }
    // Second street: 60 × 60 m bases on both sides.
    let sx = SECOND_STREET_CENTER_X;
    let sw = SECOND_STREET_HALF_WIDTH;
    let y_starts = [20.0, 90.0, -80.0, -150.0, -220.0];
    let mut h = SECOND_HEIGHTS.iter().cycle();
    for y0 in y_starts {
        for (x0, x1) in [(sx - sw - 60.0, sx - sw), (sx + sw, sx + sw + 60.0)] {
            out.push(Building::new(
                Vec3::new(x0, y0, ground),
                Vec3::new(x1, y0 + 60.0, ground + h.next().unwrap()),
                WALL_MATERIAL,
            ));
        }
    }
    out
}

/// Builds the reference scene with the given overrides applied.
pub fn build_o1_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.check()?;
    let ground = cfg.ground_z_m;
    let user_z = ground + cfg.user_height_m;

    let base_stations = BS_XY
        .iter()
        .zip(cfg.bs.iter())
        .enumerate()
        .map(|(i, (&(x, y), o))| BaseStation {
            id: i as u32 + 1,
            position: Vec3::new(
                o.x.unwrap_or(x),
                o.y.unwrap_or(y),
                o.z.unwrap_or(ground + cfg.bs_height_m),
            ),
            antenna_axis: Vec3::Z,
        })
        .collect();

    // (row-start coordinate, row axis, col axis, col centre line)
    let layouts = [
        (Vec3::new(585.0, 0.0, 0.0), -Vec3::X, Vec3::Y, 0.0),
        (
            Vec3::new(SECOND_STREET_CENTER_X, -25.0, 0.0),
            -Vec3::Y,
            Vec3::X,
            SECOND_STREET_CENTER_X,
        ),
        (
            Vec3::new(SECOND_STREET_CENTER_X, 25.0, 0.0),
            Vec3::Y,
            Vec3::X,
            SECOND_STREET_CENTER_X,
        ),
    ];
    let mut grids = Vec::with_capacity(3);
    let mut next_label = 1;
    for (g, (start, row_axis, col_axis, centre)) in cfg.grids.iter().zip(layouts) {
        let half_width = f64::from(g.users_per_row - 1) * g.spacing_m / 2.0;
        let mut origin = start;
        let col = if col_axis.x != 0.0 { 0 } else { 1 };
        origin[col] = centre - half_width;
        origin.z = user_z;
        grids.push(UserGrid {
            origin: apply_origin(origin, g),
            row_axis,
            col_axis,
            n_rows: g.rows,
            users_per_row: g.users_per_row,
            spacing: g.spacing_m,
            first_row_label: next_label,
        });
        next_label += g.rows;
    }

    let mut material_losses = BTreeMap::new();
    for (k, v) in &cfg.material_loss_db {
        material_losses.insert(k.clone(), *v);
    }

    Scene {
        name: cfg.scenario_name.clone(),
        buildings: if cfg.with_buildings {
            o1_buildings(ground)
        } else {
            Vec::new()
        },
        base_stations,
        grids,
        carrier_freq: cfg.carrier_freq_hz,
        ground_z: ground,
        ground_material: GROUND_MATERIAL.into(),
        material_losses,
    }
    .checked()
}

fn apply_origin(mut origin: Vec3, g: &GridConfig) -> Vec3 {
    if let Some(x) = g.origin_x {
        origin.x = x;
    }
    if let Some(y) = g.origin_y {
        origin.y = y;
    }
    if let Some(z) = g.origin_z {
        origin.z = z;
    }
    origin
}
