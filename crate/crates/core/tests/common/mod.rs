#![allow(dead_code)]

use std::path::PathBuf;

use mns_core::code::padded_dims;
use mns_core::image::load_pgm;
use mns_core::transform::ContrastCode;
use mns_core::{BlockRect, GrayImage, LeafRecord, Level, Mode, Payload, QuadtreeCode, SubBlockCode};
use rand::Rng;

pub const CORPUS: [&str; 4] = ["camera256.pgm", "camera64.pgm", "moon128.pgm", "coins_100x90.pgm"];

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn load(name: &str) -> GrayImage {
    let bytes = std::fs::read(data_path(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"));
    load_pgm(&bytes).unwrap_or_else(|e| panic!("parsing {name}: {e}"))
}

pub fn corpus() -> Vec<(&'static str, GrayImage)> {
    CORPUS.iter().map(|&name| (name, load(name))).collect()
}

fn random_payload<R: Rng>(rng: &mut R, level: Level, mode: Mode) -> Payload {
    if mode == Mode::Mns && !level.is_last() && rng.gen_bool(0.5) {
        let max = level.max_delta();
        Payload::Phase2(SubBlockCode {
            mean: rng.gen(),
            deltas: [(); 3].map(|_| rng.gen_range(-max..=max)),
            selections: [(); 4].map(|_| rng.gen()),
        })
    } else {
        Payload::Phase1 {
            o: rng.gen(),
            s: ContrastCode::new(rng.gen_range(0..8)).unwrap(),
        }
    }
}

fn grow<R: Rng>(rng: &mut R, rect: BlockRect, level: Level, mode: Mode, split: f64, out: &mut Vec<LeafRecord>) {
    match level.child() {
        Some(child) if rng.gen_bool(split) => {
            for q in rect.quadrants() {
                grow(rng, q, child, mode, split, out);
            }
        }
        _ => out.push(LeafRecord {
            rect,
            level,
            payload: random_payload(rng, level, mode),
        }),
    }
}

/// A structurally valid random code for `ns` or `mns` streams.
pub fn random_code<R: Rng>(rng: &mut R, mode: Mode, technique2: bool) -> QuadtreeCode {
    let orig_w = rng.gen_range(1..=70);
    let orig_h = rng.gen_range(1..=70);
    let (padded_w, padded_h) = padded_dims(orig_w, orig_h);
    let split = rng.gen_range(0.0..0.9);
    let mut leaves = Vec::new();
    for root in mns_core::code::root_rects(padded_w, padded_h) {
        grow(rng, root, Level::ONE, mode, split, &mut leaves);
    }
    QuadtreeCode {
        leaves,
        padded_w,
        padded_h,
        orig_w,
        orig_h,
        mode,
        technique2,
    }
}

/// A bare list of `n` level-4 records, enough for level-id accounting.
pub fn level4_only(n: usize, technique2: bool) -> QuadtreeCode {
    let leaves = (0..n)
        .map(|i| LeafRecord {
            rect: BlockRect::new(2 * (i % 256), 2 * (i / 256), 2),
            level: Level::FOUR,
            payload: Payload::Phase1 {
                o: 0,
                s: ContrastCode::new(4).unwrap(),
            },
        })
        .collect();
    QuadtreeCode {
        leaves,
        padded_w: 512,
        padded_h: 2 * n.div_ceil(256),
        orig_w: 512,
        orig_h: 2 * n.div_ceil(256),
        mode: Mode::NoSearch,
        technique2,
    }
}
