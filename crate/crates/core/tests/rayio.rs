mod common;

use common::{mutate, random_path_list, random_rayfile};
use mmchan_core::rayio::{
    decode_rayfile, encoded_len, read_rayfile, validate_rayfile, write_rayfile, RayFile, RayFileMeta,
};
use mmchan_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bits(rf: &RayFile) -> Vec<Vec<u64>> {
    rf.records
        .iter()
        .map(|pl| {
            let mut v = vec![pl.user_index];
            v.extend(pl.user_position.to_array().map(f64::to_bits));
            for p in &pl.paths {
                v.extend([p.aod_az, p.aod_el, p.aoa_az, p.aoa_el, p.power, p.phase, p.delay].map(f64::to_bits));
                v.push(u64::from(p.n_reflections));
            }
            v
        })
        .collect()
}

#[test]
fn thousand_random_files_round_trip_bit_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let rf = random_rayfile(&mut rng, 12);
        let bytes = rf.encode().unwrap();
        assert_eq!(bytes.len(), encoded_len(rf.records.iter().map(|r| r.paths.len())));
        let back = decode_rayfile(&bytes).unwrap();
        assert_eq!(back.header, rf.header);
        assert_eq!(bits(&back), bits(&rf));
        assert_eq!(back.encode().unwrap(), bytes);
    }
}

#[test]
fn streaming_io_matches_in_memory_encoding() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rf = random_rayfile(&mut rng, 30);
    let mut sink = Vec::new();
    let n = write_rayfile(&rf.records, &rf.meta(), &mut sink).unwrap();
    assert_eq!(n as usize, sink.len());
    assert_eq!(sink, rf.encode().unwrap());
    assert_eq!(read_rayfile(sink.as_slice()).unwrap(), rf);
}

#[test]
fn mutated_files_fail_with_classified_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut outcomes = [0usize; 2];
    for case in 0..10_000 {
        let rf = random_rayfile(&mut rng, 4);
        let mut bytes = rf.encode().unwrap();
        for _ in 0..rng.random_range(1..=3) {
            mutate(&mut rng, &mut bytes);
        }
        match decode_rayfile(&bytes) {
            Ok(back) => {
                assert!(validate_rayfile(&back).is_empty(), "case {case}");
                outcomes[0] += 1;
            }
            Err(e) => {
                assert!(e.is_decode_error(), "case {case}: unclassified error {e}");
                outcomes[1] += 1;
            }
        }
    }
    // Most mutations must be caught.
    assert!(outcomes[1] > outcomes[0], "{outcomes:?}");
}

#[test]
fn semantic_defects_name_the_record() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut lists: Vec<_> = (1..=3).map(|u| random_path_list(&mut rng, 2, u, 3)).collect();
    lists[1].paths = vec![common::random_path(&mut rng, 1e-6)];
    lists[1].paths[0].phase = 7.0;
    let meta = RayFileMeta {
        bs_id: 2,
        carrier_freq: 6e10,
        scenario_name: "O1".into(),
    };
    let bytes = mmchan_core::rayio::encode_rayfile(&lists, &meta).unwrap();
    assert!(matches!(decode_rayfile(&bytes), Err(Error::Semantic { record: 1, .. })));
}

proptest! {
    #[test]
    fn encoding_round_trips(seed in any::<u64>(), max_users in 0..20usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rf = random_rayfile(&mut rng, max_users);
        let bytes = rf.encode().unwrap();
        let back = decode_rayfile(&bytes).unwrap();
        prop_assert_eq!(bits(&back), bits(&rf));
        prop_assert_eq!(back.header, rf.header);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..512)) {
        if let Err(e) = decode_rayfile(&bytes) {
            prop_assert!(e.is_decode_error());
        }
    }
}
