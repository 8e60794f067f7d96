use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mmchan_bench::{five_paths, o1_scene, reference_params, street_user};
use mmchan_core::beams::{best_beam, dft_codebook, BeamEvalConfig, DEFAULT_SNR};
use mmchan_core::channel::{array_response, ChannelBuilder};
use mmchan_core::tracer::{Tracer, DEFAULT_MAX_REFLECTIONS, MAX_RECORDED_PATHS};

fn steering(c: &mut Criterion) {
    c.bench_function("array_response 1x32x8", |b| {
        b.iter(|| array_response(black_box(0.7), black_box(1.4), (1, 32, 8), 0.5))
    });
}

fn channel(c: &mut Criterion) {
    let builder = ChannelBuilder::new(&reference_params()).unwrap();
    let paths = five_paths();
    c.bench_function("channel_matrix 256x64 L=5", |b| {
        b.iter(|| builder.build(black_box(&paths)))
    });
}

fn tracing(c: &mut Criterion) {
    let scene = o1_scene();
    let user = street_user(&scene);
    let tracer = Tracer::new(&scene, 3, DEFAULT_MAX_REFLECTIONS, MAX_RECORDED_PATHS).unwrap();
    c.bench_function("trace one O1 user, 4 bounces", |b| {
        b.iter(|| tracer.trace_user(black_box(&user)))
    });
    c.bench_function("image tree for BS 3", |b| {
        b.iter(|| Tracer::new(&scene, 3, DEFAULT_MAX_REFLECTIONS, MAX_RECORDED_PATHS).unwrap())
    });
}

fn beams(c: &mut Criterion) {
    let params = reference_params();
    let h = ChannelBuilder::new(&params).unwrap().build(&five_paths());
    let cfg = BeamEvalConfig::new(DEFAULT_SNR, dft_codebook(params.array_dims(), 1)).unwrap();
    c.bench_function("best_beam 256 beams x 64 subcarriers", |b| {
        b.iter(|| best_beam(black_box(&h), &cfg).unwrap())
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(20);
    targets = steering, channel, tracing, beams
}
criterion_main!(kernels);
