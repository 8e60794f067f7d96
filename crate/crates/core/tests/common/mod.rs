#![allow(dead_code)]

use std::f64::consts::TAU;

use mmchan_core::channel::ChannelMatrix;
use mmchan_core::dataset::{BsShard, Dataset, DatasetEntry};
use mmchan_core::rayio::{RayFile, RayFileMeta};
use mmchan_core::scene::GridConfig;
use mmchan_core::{build_o1_scene, ParamSet, PathList, PathRecord, Scene, SceneConfig, Sequential, Tracer, Vec3};
use num_complex::Complex64;
use rand::Rng;

/// O1 geometry with a handful of users per grid.
pub fn small_scene() -> Scene {
    let mut cfg = SceneConfig::default();
    for (g, rows) in cfg.grids.iter_mut().zip([3, 2, 2]) {
        *g = GridConfig {
            rows,
            users_per_row: 5,
            ..*g
        };
    }
    build_o1_scene(&cfg).unwrap()
}

pub fn trace_rayfile(scene: &Scene, bs_id: u32, users: &[u64], max_reflections: usize) -> RayFile {
    let tracer = Tracer::new(scene, bs_id, max_reflections, 25).unwrap();
    let lists = tracer.trace_users(scene, users, &Sequential).unwrap();
    RayFile::new(
        &RayFileMeta {
            bs_id,
            carrier_freq: scene.carrier_freq,
            scenario_name: scene.name.clone(),
        },
        lists,
    )
    .unwrap()
}

/// Ray files for every active BS of `params`, covering its active rows.
pub fn traced_sources(scene: &Scene, params: &ParamSet, max_reflections: usize) -> Vec<RayFile> {
    let users = scene
        .users_in_row_range(params.active_user_first, params.active_user_last)
        .unwrap();
    params
        .active_bs
        .iter()
        .map(|&b| trace_rayfile(scene, b, &users, max_reflections))
        .collect()
}

pub fn random_path(rng: &mut impl Rng, power: f64) -> PathRecord {
    PathRecord {
        aod_az: rng.random_range(-180.0..180.0),
        aod_el: rng.random_range(0.0..=180.0),
        aoa_az: rng.random_range(-180.0..=180.0),
        aoa_el: rng.random_range(0.0..=180.0),
        power,
        phase: rng.random_range(0.0..TAU),
        delay: rng.random_range(1e-9..5e-6),
        n_reflections: rng.random_range(0..5),
    }
}

/// A valid path list: powers strictly descending.
pub fn random_path_list(rng: &mut impl Rng, bs_id: u32, user_index: u64, max_paths: usize) -> PathList {
    let n = rng.random_range(0..=max_paths);
    let mut power = rng.random_range(1e-8..1e-5);
    let paths = (0..n)
        .map(|_| {
            power *= rng.random_range(0.05..0.99);
            random_path(rng, power)
        })
        .collect();
    PathList {
        bs_id,
        user_index,
        user_position: Vec3::new(
            rng.random_range(-1e3..1e3),
            rng.random_range(-1e3..1e3),
            rng.random_range(0.0..30.0),
        ),
        paths,
    }
}

pub fn random_rayfile(rng: &mut impl Rng, max_users: usize) -> RayFile {
    let bs_id = rng.random_range(1..=18);
    let n = rng.random_range(0..=max_users);
    let mut idx = 0u64;
    let lists = (0..n)
        .map(|_| {
            idx += rng.random_range(1..1000);
            random_path_list(rng, bs_id, idx, 25)
        })
        .collect();
    let name: String = (0..rng.random_range(0..=32))
        .map(|_| rng.random_range(b'a'..=b'z') as char)
        .collect();
    RayFile::new(
        &RayFileMeta {
            bs_id,
            carrier_freq: rng.random_range(1e9..1e11),
            scenario_name: name,
        },
        lists,
    )
    .unwrap()
}

pub fn random_matrix(rng: &mut impl Rng, bs_id: u32, user: u64, m: usize, nk: usize) -> ChannelMatrix {
    let data = (0..m * nk)
        .map(|_| Complex64::new(rng.random_range(-1e-4..1e-4), rng.random_range(-1e-4..1e-4)))
        .collect();
    ChannelMatrix::from_column_major(bs_id, user, m, nk, data).unwrap()
}

/// Random dataset with small dimensions and random complex entries.
pub fn random_dataset(rng: &mut impl Rng) -> Dataset {
    let n_bs = rng.random_range(1..=3);
    let mut ids: Vec<u32> = (1..=18).collect();
    for i in 0..n_bs {
        let j = rng.random_range(i..ids.len());
        ids.swap(i, j);
    }
    ids.truncate(n_bs);
    let params = ParamSet {
        active_bs: ids.clone(),
        active_user_first: rng.random_range(1..100),
        active_user_last: rng.random_range(100..200),
        num_ant_x: rng.random_range(1..=2),
        num_ant_y: rng.random_range(1..=3),
        num_ant_z: rng.random_range(1..=2),
        ant_spacing: rng.random_range(0.1..1.0),
        bandwidth: rng.random_range(0.01..2.0),
        num_ofdm: 64,
        ofdm_sampling_factor: rng.random_range(1..=4),
        ofdm_limit: rng.random_range(1..=8),
        num_paths: rng.random_range(1..=25),
    };
    let (m, nk) = (params.num_antennas(), params.ofdm_limit as usize);
    let n_users = rng.random_range(0..=6);
    let mut users = Vec::new();
    let mut idx = 0u64;
    for _ in 0..n_users {
        idx += rng.random_range(1..50);
        users.push((
            idx,
            Vec3::new(rng.random_range(-600.0..600.0), rng.random_range(-300.0..300.0), 2.0),
        ));
    }
    let shards = ids
        .iter()
        .map(|&b| BsShard {
            bs_id: b,
            entries: users
                .iter()
                .map(|&(u, loc)| DatasetEntry {
                    global_index: u,
                    location: loc,
                    channel: random_matrix(rng, b, u, m, nk),
                })
                .collect(),
        })
        .collect();
    Dataset {
        params,
        scenario_name: "synthetic".into(),
        shards,
    }
}

/// Applies one random structural mutation to `bytes`.
pub fn mutate(rng: &mut impl Rng, bytes: &mut Vec<u8>) {
    let len = bytes.len();
    match rng.random_range(0..6) {
        0 if len > 0 => {
            let i = rng.random_range(0..len);
            bytes[i] ^= 1 << rng.random_range(0..8);
        }
        1 if len > 0 => {
            for _ in 0..rng.random_range(1..8) {
                let i = rng.random_range(0..len);
                bytes[i] = rng.random();
            }
        }
        2 => bytes.truncate(rng.random_range(0..=len)),
        3 => {
            let extra = rng.random_range(1..64);
            bytes.extend((0..extra).map(|_| rng.random::<u8>()));
        }
        4 if len >= 8 => {
            // Overwrite an aligned word with an extreme value, hitting counts and lengths.
            let i = rng.random_range(0..len / 4) * 4;
            let v: u32 = [0, 1, u32::MAX, u32::MAX / 2, rng.random()][rng.random_range(0..5)];
            let end = (i + 4).min(len);
            bytes[i..end].copy_from_slice(&v.to_le_bytes()[..end - i]);
        }
        _ if len > 0 => {
            let i = rng.random_range(0..len);
            bytes.remove(i);
        }
        _ => bytes.push(0),
    }
}
