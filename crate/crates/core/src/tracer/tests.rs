use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::scene::{BaseStation, Building, SceneConfig};

const C: f64 = SPEED_OF_LIGHT;

fn bare_scene(tx: Vec3, buildings: Vec<Building>) -> Scene {
    let mut losses = BTreeMap::new();
    losses.insert("ground".to_string(), 6.0);
    losses.insert("wall".to_string(), 6.0);
    Scene {
        name: "test".into(),
        buildings,
        base_stations: vec![BaseStation {
            id: 1,
            position: tx,
            antenna_axis: Vec3::Z,
        }],
        grids: vec![],
        carrier_freq: 60e9,
        ground_z: 0.0,
        ground_material: "ground".into(),
        material_losses: losses,
    }
}

fn wall_facing_plus_x(a: f64) -> Building {
    Building::new(Vec3::new(a - 50.0, -1e4, 0.0), Vec3::new(a, 1e4, 1e4), "wall")
}

fn wall_facing_minus_x(b: f64) -> Building {
    Building::new(Vec3::new(b, -1e4, 0.0), Vec3::new(b + 50.0, 1e4, 1e4), "wall")
}

/// Independent oracle: path lengths of every wall/ground bounce sequence via
/// recursive point mirroring. For walls at x = a (and optionally x = b), any
/// alternating wall sequence plus at most one ground bounce is realisable,
/// and the ground bounce position does not change the length.
fn mirrored_lengths(tx: Vec3, rx: Vec3, a: f64, b: Option<f64>, max_refl: usize) -> Vec<f64> {
    let mut images = vec![(tx.x, 0usize)];
    let starts: Vec<f64> = match b {
        Some(b) => vec![a, b],
        None => vec![a],
    };
    for &first in &starts {
        let mut x = tx.x;
        let mut wall = first;
        for n in 1..=max_refl {
            if b.is_none() && n > 1 {
                break;
            }
            x = 2.0 * wall - x;
            images.push((x, n));
            if let Some(b) = b {
                wall = if wall == a { b } else { a };
            }
        }
    }
    let mut out = Vec::new();
    for (x, n) in images {
        for ground in [false, true] {
            if n + usize::from(ground) > max_refl {
                continue;
            }
            let z = if ground { -tx.z } else { tx.z };
            out.push(Vec3::new(x, tx.y, z).distance(rx));
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn traced_lengths(paths: &[TracedPath]) -> Vec<f64> {
    let mut v: Vec<f64> = paths.iter().map(|p| p.record.delay * C).collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn free_space_los_and_ground_bounce() {
    let tx = Vec3::new(0.0, 0.0, 10.0);
    let rx = Vec3::new(10.0, 0.0, 10.0);
    let s = bare_scene(tx, vec![]);
    let list = trace_paths(&s, 1, rx, 4, 25).unwrap();
    assert_eq!(list.paths.len(), 2);
    let los = list.paths[0];
    assert_eq!(los.n_reflections, 0);
    assert!((los.delay - 10.0 / C).abs() < 1e-20);
    assert!((los.delay * 1e9 - 33.356).abs() < 1e-3);
    assert_eq!(
        (los.aod_az, los.aod_el, los.aoa_az, los.aoa_el),
        (0.0, 90.0, 180.0, 90.0)
    );
    let ground = list.paths[1];
    assert_eq!(ground.n_reflections, 1);
    let expected = (10f64.powi(2) + 20f64.powi(2)).sqrt();
    assert!((ground.delay * C - expected).abs() < 1e-12 * expected);
}

#[test]
fn occluded_without_bounces_is_empty() {
    let tx = Vec3::new(0.0, 0.0, 5.0);
    let rx = Vec3::new(20.0, 0.0, 5.0);
    let block = Building::new(Vec3::new(8.0, -5.0, 0.0), Vec3::new(12.0, 5.0, 30.0), "wall");
    let s = bare_scene(tx, vec![block]);
    assert!(trace_paths(&s, 1, rx, 0, 25).unwrap().paths.is_empty());
    // With bounces the ground cannot help either (building stands on it),
    // but the side faces can.
    let with = trace_paths(&s, 1, rx, 2, 25).unwrap();
    assert!(with.paths.iter().all(|p| p.n_reflections > 0));
}

#[test]
fn unknown_bs_is_a_lookup_error() {
    let s = bare_scene(Vec3::new(0.0, 0.0, 5.0), vec![]);
    assert!(matches!(
        trace_paths(&s, 9, Vec3::new(1.0, 0.0, 1.0), 1, 25),
        Err(Error::UnknownBaseStation(9))
    ));
}

#[test]
fn single_wall_matches_image_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let a = rng.random_range(-5.0..5.0);
        let tx = Vec3::new(
            a + rng.random_range(1.0..30.0),
            rng.random_range(-20.0..20.0),
            rng.random_range(1.0..20.0),
        );
        let rx = Vec3::new(
            a + rng.random_range(1.0..30.0),
            rng.random_range(-20.0..20.0),
            rng.random_range(1.0..20.0),
        );
        let s = bare_scene(tx, vec![wall_facing_plus_x(a)]);
        let t = Tracer::new(&s, 1, 2, usize::MAX).unwrap();
        let paths = t.trace_detailed(rx);
        let got = traced_lengths(&paths);
        let want = mirrored_lengths(tx, rx, a, None, 2);
        assert_eq!(got.len(), want.len(), "tx={tx:?} rx={rx:?}");
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12 * w, "{g} vs {w}");
        }
        let wall_only = paths
            .iter()
            .find(|p| p.record.n_reflections == 1 && p.bounce_points[0].z > 0.0)
            .unwrap();
        let img = mirror_point(tx, AxisPlane::new(0, a));
        assert!((wall_only.length - img.distance(rx)).abs() <= 1e-12 * wall_only.length);
    }
}

#[test]
fn two_walls_match_recursive_mirroring() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let a = rng.random_range(-10.0..0.0);
        let b = rng.random_range(20.0..40.0);
        let tx = Vec3::new(
            rng.random_range(a + 0.5..b - 0.5),
            rng.random_range(-30.0..30.0),
            rng.random_range(1.0..15.0),
        );
        let rx = Vec3::new(
            rng.random_range(a + 0.5..b - 0.5),
            rng.random_range(-30.0..30.0),
            rng.random_range(1.0..15.0),
        );
        let max_refl = rng.random_range(0..=4);
        let s = bare_scene(tx, vec![wall_facing_plus_x(a), wall_facing_minus_x(b)]);
        let t = Tracer::new(&s, 1, max_refl, usize::MAX).unwrap();
        let got = traced_lengths(&t.trace_detailed(rx));
        let want = mirrored_lengths(tx, rx, a, Some(b), max_refl);
        assert_eq!(got.len(), want.len(), "max_refl={max_refl}");
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12 * w, "{g} vs {w}");
        }
    }
}

fn o1_scene() -> Scene {
    crate::scene::build_o1_scene(&SceneConfig::default()).unwrap()
}

fn assert_record_invariants(paths: &[TracedPath], tx: Vec3, rx: Vec3) {
    let direct = tx.distance(rx) / C;
    for w in paths.windows(2) {
        assert!(w[0].record.power >= w[1].record.power);
    }
    for p in paths {
        let r = p.record;
        assert!(r.power > 0.0 && r.delay > 0.0);
        assert!(r.delay >= direct * (1.0 - 1e-15));
        assert!((-180.0..180.0).contains(&r.aod_az), "{r:?}");
        assert!(r.aoa_az > -180.0 && r.aoa_az <= 180.0);
        assert!((0.0..=180.0).contains(&r.aod_el) && (0.0..=180.0).contains(&r.aoa_el));
        assert!((0.0..std::f64::consts::TAU).contains(&r.phase));
        // Delay equals the unfolded polyline length.
        let mut len = 0.0;
        let mut prev = tx;
        for &q in p.bounce_points.iter().chain([rx].iter()) {
            len += prev.distance(q);
            prev = q;
        }
        assert!((r.delay - len / C).abs() <= 1e-12 * r.delay);
        assert_eq!(usize::from(r.n_reflections), p.bounce_points.len());
    }
}

#[test]
fn o1_street_paths_are_well_formed() {
    let s = o1_scene();
    let t = Tracer::new(&s, 3, 4, MAX_RECORDED_PATHS).unwrap();
    let tx = s.base_station(3).unwrap().position;
    for idx in [1u64, 180_000, 181_000, 181_090] {
        let u = s.user(idx).unwrap();
        let paths = t.trace_detailed(u.position);
        assert!(!paths.is_empty(), "user {idx}");
        assert!(paths.len() <= MAX_RECORDED_PATHS);
        assert_record_invariants(&paths, tx, u.position);
    }
}

#[test]
fn reciprocity_in_the_street_canyon() {
    let mut s = o1_scene();
    let bs3 = s.base_station(3).unwrap().position;
    let user = s.user(181_000).unwrap().position;
    s.base_stations.push(BaseStation {
        id: 19,
        position: user,
        antenna_axis: Vec3::Z,
    });
    let fwd = Tracer::new(&s, 3, 3, usize::MAX).unwrap().trace_detailed(user);
    let back = Tracer::new(&s, 19, 3, usize::MAX).unwrap().trace_detailed(bs3);
    assert_eq!(fwd.len(), back.len());
    assert!(!fwd.is_empty());
    let wrap = |d: f64| (d + 180.0).rem_euclid(360.0) - 180.0;
    for f in &fwd {
        let m = back
            .iter()
            .find(|b| {
                (b.record.delay - f.record.delay).abs() <= 1e-9 * f.record.delay
                    && wrap(b.record.aod_az - f.record.aoa_az).abs() < 1e-9
                    && (b.record.aod_el - f.record.aoa_el).abs() < 1e-9
            })
            .expect("reverse path");
        assert!(wrap(m.record.aoa_az - f.record.aod_az).abs() < 1e-9);
        assert!((m.record.aoa_el - f.record.aod_el).abs() < 1e-9);
        assert!((m.record.power - f.record.power).abs() <= 1e-9 * f.record.power);
    }
}

#[test]
fn building_order_does_not_matter() {
    let s = o1_scene();
    let mut shuffled = s.clone();
    shuffled.buildings.shuffle(&mut ChaCha8Rng::seed_from_u64(5));
    let rx = s.user(181_500).unwrap().position;
    let a = trace_paths(&s, 4, rx, 3, 25).unwrap();
    let b = trace_paths(&shuffled, 4, rx, 3, 25).unwrap();
    assert_eq!(a, b);
}

#[test]
fn more_bounces_never_remove_paths() {
    let s = o1_scene();
    let rx = s.user(181_200).unwrap().position;
    let mut prev: Vec<TracedPath> = Vec::new();
    for k in 0..=3 {
        let cur = Tracer::new(&s, 5, k, usize::MAX).unwrap().trace_detailed(rx);
        for p in &prev {
            assert!(cur.iter().any(|q| same_geometry(p, q)), "lost a path at order {k}");
        }
        assert!(cur.len() >= prev.len());
        prev = cur;
    }
}
