use std::f64::consts::PI;

use mmchan_core::channel::{array_response, channel_matrix, channel_vector};
use mmchan_core::genparams::{subcarrier_set, ParamSet};
use mmchan_core::{PathList, PathRecord, Vec3};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

fn record(power: f64, phase: f64, delay: f64, az: f64, el: f64) -> PathRecord {
    PathRecord {
        aod_az: az,
        aod_el: el,
        aoa_az: 0.0,
        aoa_el: 90.0,
        power,
        phase,
        delay,
        n_reflections: 0,
    }
}

fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Formula-level re-evaluation: every element phase and every subcarrier term
/// computed from scratch in real arithmetic.
fn direct_channel(paths: &[PathRecord], p: &ParamSet, k: u32) -> Vec<Complex64> {
    let (mx, my, mz) = (p.num_ant_x as usize, p.num_ant_y as usize, p.num_ant_z as usize);
    let b = p.bandwidth * 1e9;
    let kk = p.num_ofdm as f64;
    let mut h = vec![Complex64::new(0.0, 0.0); mx * my * mz];
    for q in paths.iter().take(p.num_paths as usize) {
        let az = q.aod_az * PI / 180.0;
        let el = q.aod_el * PI / 180.0;
        let amp = (q.power / kk).sqrt();
        let theta = q.phase + 2.0 * PI * (k as f64 - 1.0) / kk * q.delay * b;
        for iz in 0..mz {
            for iy in 0..my {
                for ix in 0..mx {
                    let psi = 2.0
                        * PI
                        * p.ant_spacing
                        * (ix as f64 * el.sin() * az.cos() + iy as f64 * el.sin() * az.sin() + iz as f64 * el.cos());
                    let arg = theta + psi;
                    h[iz * my * mx + iy * mx + ix] += Complex64::new(amp * arg.cos(), amp * arg.sin());
                }
            }
        }
    }
    h
}

#[test]
fn reference_defaults_five_paths_match_direct_summation() {
    let p = ParamSet::default();
    let paths = vec![
        record(3.1e-9, 0.7, 4.1e-7, 12.0, 93.0),
        record(1.2e-9, 5.9, 5.6e-7, -47.5, 96.2),
        record(8.0e-10, 2.2, 6.3e-7, 170.0, 88.0),
        record(2.5e-10, 3.3, 9.9e-7, 101.3, 97.7),
        record(9.0e-11, 1.0, 1.3e-6, -160.0, 85.5),
    ];
    let list = PathList {
        bs_id: 3,
        user_index: 1,
        user_position: Vec3::ZERO,
        paths: paths.clone(),
    };
    let h = channel_matrix(&list, &p).unwrap();
    assert_eq!((h.rows(), h.cols()), (256, 64));
    let mut want = Vec::new();
    for k in subcarrier_set(&p).unwrap() {
        want.extend(direct_channel(&paths, &p, k));
    }
    let err = rel_err(h.as_slice(), &want);
    assert!(err <= 1e-12, "relative Frobenius error {err}");
}

#[test]
fn integer_tap_channels_match_fft() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut planner = FftPlanner::new();
    for &kk in &[8u32, 64, 256] {
        let p = ParamSet {
            num_ant_x: 1,
            num_ant_y: 1,
            num_ant_z: 1,
            num_ofdm: kk,
            ofdm_limit: kk,
            ofdm_sampling_factor: 1,
            num_paths: 25,
            ..ParamSet::default()
        };
        let b = p.bandwidth_hz();
        let fft = planner.plan_fft_inverse(kk as usize);
        for _ in 0..20 {
            let n = rng.random_range(1..=6);
            let paths: Vec<_> = (0..n)
                .map(|_| {
                    let tap: u32 = rng.random_range(0..kk);
                    record(
                        rng.random_range(1e-12..1e-8),
                        rng.random_range(0.0..2.0 * PI),
                        f64::from(tap) / b,
                        0.0,
                        90.0,
                    )
                })
                .collect();
            let mut taps = vec![Complex64::new(0.0, 0.0); kk as usize];
            for q in &paths {
                taps[(q.delay * b).round() as usize] +=
                    Complex64::from_polar((q.power / f64::from(kk)).sqrt(), q.phase);
            }
            fft.process(&mut taps);
            let got: Vec<_> = (1..=kk).map(|k| channel_vector(&paths, k, &p)[0]).collect();
            let err = rel_err(&got, &taps);
            assert!(err <= 1e-10, "K={kk}: {err}");
        }
    }
}

fn arb_path() -> impl Strategy<Value = PathRecord> {
    (
        1e-12..1e-6f64,
        0.0..2.0 * PI,
        1e-8..2e-6f64,
        -180.0..180.0f64,
        0.0..180.0f64,
    )
        .prop_map(|(pw, ph, d, az, el)| record(pw, ph, d, az, el))
}

fn small_params() -> impl Strategy<Value = ParamSet> {
    (1..=3u32, 1..=4u32, 1..=3u32, 0.1..1.0f64).prop_map(|(x, y, z, s)| ParamSet {
        num_ant_x: x,
        num_ant_y: y,
        num_ant_z: z,
        ant_spacing: s,
        num_ofdm: 64,
        ofdm_limit: 16,
        ofdm_sampling_factor: 4,
        num_paths: 25,
        ..ParamSet::default()
    })
}

proptest! {
    #[test]
    fn linear_in_paths(p in small_params(), a in prop::collection::vec(arb_path(), 0..5),
                       b in prop::collection::vec(arb_path(), 0..5), k in 1..=64u32) {
        let mut both = a.clone();
        both.extend(b.iter().cloned());
        let ha = channel_vector(&a, k, &p);
        let hb = channel_vector(&b, k, &p);
        let sum: Vec<_> = ha.iter().zip(&hb).map(|(x, y)| x + y).collect();
        let hab = channel_vector(&both, k, &p);
        let scale = ha.iter().chain(&hb).map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for (x, y) in hab.iter().zip(&sum) {
            prop_assert!((x - y).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn power_scaling(p in small_params(), paths in prop::collection::vec(arb_path(), 1..5),
                     c in 0.01..100.0f64, k in 1..=64u32) {
        let scaled: Vec<_> = paths.iter().map(|q| PathRecord { power: q.power * c * c, ..*q }).collect();
        let h = channel_vector(&paths, k, &p);
        let hs = channel_vector(&scaled, k, &p);
        let want: Vec<_> = h.iter().map(|x| x * c).collect();
        prop_assert!(rel_err(&hs, &want) <= 1e-12);
    }

    #[test]
    fn unit_modulus_response(az in -PI..PI, el in 0.0..PI, x in 1..=4usize, y in 1..=4usize, z in 1..=4usize, d in 0.1..1.0f64) {
        let a = array_response(az, el, (x, y, z), d);
        prop_assert_eq!(a.len(), x * y * z);
        for e in a.as_slice() {
            prop_assert!((e.norm() - 1.0).abs() <= 1e-12);
        }
    }
}
