//! Fixtures shared by the benchmarks. Everything is deterministic so runs
//! are comparable across machines.

use mmchan_core::scene::UserEntry;
use mmchan_core::{build_o1_scene, ParamSet, PathList, PathRecord, Scene, SceneConfig, Vec3};

/// Reference parameters: 1x32x8 array, 64 subcarriers, 5 paths.
pub fn reference_params() -> ParamSet {
    ParamSet::default()
}

pub fn o1_scene() -> Scene {
    build_o1_scene(&SceneConfig::default()).expect("O1 preset builds")
}

/// A user in the first active row of the reference range.
pub fn street_user(scene: &Scene) -> UserEntry {
    let idx = scene.users_in_row_range(1000, 1000).expect("row 1000 exists")[90];
    scene.user(idx).expect("user exists")
}

/// Five fixed paths with descending power, spread in angle and delay.
pub fn five_paths() -> PathList {
    let paths = (0..5)
        .map(|i| {
            let f = i as f64;
            PathRecord {
                aod_az: -150.0 + 67.0 * f,
                aod_el: 85.0 + 2.5 * f,
                aoa_az: 170.0 - 71.0 * f,
                aoa_el: 95.0 - 2.0 * f,
                power: 1e-8 * 0.5f64.powi(i),
                phase: 0.9 * f + 0.3,
                delay: 4e-7 + 1.3e-7 * f,
                n_reflections: i as u16,
            }
        })
        .collect();
    PathList {
        bs_id: 3,
        user_index: 1,
        user_position: Vec3::new(10.0, 5.0, 2.0),
        paths,
    }
}
