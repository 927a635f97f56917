mod common;

use mns_core::code::{fixed_partition, Level};
use mns_core::image::Plane;
use mns_core::{
    decode, encode_quadtree, load_pgm, psnr, read_stream, save_pgm, stream_bit_len, write_stream, DecodeConfig,
    EncoderConfig, Mode, StreamError,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_codes_survive_the_stream(seed in any::<u64>(), mns in any::<bool>(), t2 in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mode = if mns { Mode::Mns } else { Mode::NoSearch };
        let code = common::random_code(&mut rng, mode, t2);
        let bytes = write_stream(&code).unwrap();
        prop_assert_eq!(bytes.len() as u64, stream_bit_len(&code).unwrap().div_ceil(8));
        prop_assert_eq!(read_stream(&bytes).unwrap(), code);
    }

    #[test]
    fn every_strict_prefix_is_rejected(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let code = common::random_code(&mut rng, Mode::Mns, true);
        let bytes = write_stream(&code).unwrap();
        let cut = (seed as usize) % bytes.len();
        prop_assert!(read_stream(&bytes[..cut]).is_err());
    }
}

#[test]
fn appended_byte_is_trailing_data() {
    let code = encode_quadtree(&common::load("camera64.pgm"), &EncoderConfig::default());
    let mut bytes = write_stream(&code).unwrap();
    bytes.push(0);
    assert!(matches!(read_stream(&bytes), Err(StreamError::TrailingData(_))));
}

#[test]
fn corpus_round_trips_through_files_and_streams() {
    for (name, img) in common::corpus() {
        let pgm = save_pgm(&img);
        assert_eq!(load_pgm(&pgm).unwrap(), img, "{name}");

        for mode in [Mode::NoSearch, Mode::Mns] {
            let code = encode_quadtree(&img, &EncoderConfig::with_mode(mode));
            let back = read_stream(&write_stream(&code).unwrap()).unwrap();
            let direct = decode(&code, &DecodeConfig::default());
            let via_stream = decode(&back, &DecodeConfig::default());
            assert_eq!(direct, via_stream, "{name} {mode}");
            assert_eq!((direct.width(), direct.height()), (img.width(), img.height()));
            let db = psnr(&img, &direct).unwrap();
            assert!(db > 24.0, "{name} {mode}: {db:.2} dB");
        }
    }
}

#[test]
fn tighter_thresholds_improve_quality_on_camera() {
    let img = common::load("camera256.pgm");
    let quality = |e: f64| {
        let cfg = EncoderConfig {
            thresholds: [e; 3],
            ..EncoderConfig::default()
        };
        psnr(&img, &decode(&encode_quadtree(&img, &cfg), &DecodeConfig::default())).unwrap()
    };
    assert!(quality(4.0) > quality(12.0));
}

#[test]
fn coins_fixture_needs_padding_on_both_axes() {
    let img = common::load("coins_100x90.pgm");
    assert_eq!((img.width(), img.height()), (100, 90));
    assert_eq!(fixed_partition(112, 96, Level::ONE).len(), 42);
    assert_eq!(img.at(0, 0), f64::from(img.get(0, 0)));
}
