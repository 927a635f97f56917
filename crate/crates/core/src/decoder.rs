//! Iterative fixed-point decoding.
//!
//! Each step rebuilds every leaf from the previous raster only (double
//! buffered), so the result does not depend on leaf order.

use rayon::prelude::*;

use crate::code::{LeafRecord, Payload, QuadtreeCode};
use crate::image::{co_domain_block, downsample_unchecked, GrayImage, Raster};
use crate::transform::apply_map;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecodeConfig {
    pub max_iters: usize,
    /// Stop once no pixel moves by this much or more between steps.
    pub stop_delta: f64,
    /// Value of the flat starting raster.
    pub initial: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            max_iters: 10,
            stop_delta: 0.5,
            initial: 128.0,
        }
    }
}

/// Per-step record of a decode run.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeTrace {
    /// Largest per-pixel change made by each step, in order.
    pub max_deltas: Vec<f64>,
    /// Final real-valued raster at padded size.
    pub raster: Raster,
}

const GEOMETRY: &str = "code dimensions admit every co-centered domain";

fn reconstruct(leaf: &LeafRecord, current: &Raster) -> Vec<f64> {
    match leaf.payload {
        Payload::Phase1 { o, s } => {
            let domain = co_domain_block(current, leaf.rect).expect(GEOMETRY);
            apply_map(&domain, s.value(), f64::from(o))
        }
        Payload::Baseline { domain, o, s } => {
            let domain = downsample_unchecked(current, domain);
            apply_map(&domain, s.value(), f64::from(o))
        }
        Payload::Phase2(sub) => {
            let contrasts = sub
                .contrasts(leaf.level)
                .expect("sub-block records only occur at levels 1-3");
            let means = sub.quadrant_means();
            let size = leaf.rect.size;
            let half = size / 2;
            let mut out = vec![0.0; size * size];
            for (k, quadrant) in leaf.rect.quadrants().into_iter().enumerate() {
                let domain = co_domain_block(current, quadrant).expect(GEOMETRY);
                let block = apply_map(&domain, contrasts[k], f64::from(means[k]));
                let (ox, oy) = ((k % 2) * half, (k / 2) * half);
                for (row, chunk) in block.chunks_exact(half).enumerate() {
                    let start = (oy + row) * size + ox;
                    out[start..start + half].copy_from_slice(chunk);
                }
            }
            out
        }
    }
}

/// One application of the coded transform to `current`, which must have
/// the code's padded dimensions.
pub fn decode_step(code: &QuadtreeCode, current: &Raster) -> Raster {
    decode_step_leaves(&code.leaves, current)
}

pub(crate) fn decode_step_leaves(leaves: &[LeafRecord], current: &Raster) -> Raster {
    let blocks: Vec<Vec<f64>> = leaves.par_iter().map(|leaf| reconstruct(leaf, current)).collect();
    let mut next = Raster::filled(current.width(), current.height(), 0.0);
    for (leaf, block) in leaves.iter().zip(&blocks) {
        next.put_block(leaf.rect, block);
    }
    next
}

/// Runs the decoder and keeps the per-step changes.
pub fn decode_traced(code: &QuadtreeCode, cfg: &DecodeConfig) -> DecodeTrace {
    assert!(cfg.max_iters >= 1, "at least one decode iteration is required");
    let mut current = Raster::filled(code.padded_w, code.padded_h, cfg.initial);
    let mut max_deltas = Vec::with_capacity(cfg.max_iters);
    for _ in 0..cfg.max_iters {
        let next = decode_step(code, &current);
        let delta = next.max_abs_diff(&current);
        current = next;
        max_deltas.push(delta);
        if delta < cfg.stop_delta {
            break;
        }
    }
    DecodeTrace {
        max_deltas,
        raster: current,
    }
}

/// Decodes to an 8-bit image cropped to the original dimensions.
pub fn decode(code: &QuadtreeCode, cfg: &DecodeConfig) -> GrayImage {
    decode_traced(code, cfg).raster.to_gray().crop(code.orig_w, code.orig_h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{encode_quadtree, EncoderConfig};
    use crate::image::extract_unchecked;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn smooth_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b): (f64, f64) = (rng.gen_range(0.05..0.2), rng.gen_range(0.05..0.2));
        GrayImage::from_fn(w, h, |x, y| {
            let v = 128.0 + 60.0 * (a * x as f64).sin() * (b * y as f64).cos() + rng.gen_range(-6.0..6.0);
            v.clamp(0.0, 255.0) as u8
        })
    }

    #[test]
    fn constant_code_decodes_exactly() {
        let img = GrayImage::filled(40, 40, 42);
        let code = encode_quadtree(&img, &EncoderConfig::default());
        let trace = decode_traced(&code, &DecodeConfig::default());
        assert_eq!(trace.raster.to_gray().crop(40, 40), img);
        // the first step lands on the fixed point, the second confirms it
        assert_eq!(trace.max_deltas, vec![86.0, 0.0]);
        assert_eq!(decode(&code, &DecodeConfig::default()), img);
    }

    #[test]
    fn flat_start_makes_first_step_initial_independent() {
        let img = smooth_image(48, 48, 3);
        let code = encode_quadtree(&img, &EncoderConfig::default());
        let a = decode_step(&code, &Raster::filled(48, 48, 0.0));
        let b = decode_step(&code, &Raster::filled(48, 48, 255.0));
        assert_eq!(a, b);
    }

    #[test]
    fn step_is_order_independent() {
        let img = smooth_image(64, 48, 4);
        let code = encode_quadtree(&img, &EncoderConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let start = GrayImage::from_fn(64, 64, |_, _| rng.gen()).to_raster();
        let forward = decode_step(&code, &start);
        let mut reversed = code.leaves.clone();
        reversed.reverse();
        assert_eq!(decode_step_leaves(&reversed, &start), forward);
    }

    #[test]
    fn output_is_cropped_and_deterministic() {
        let img = smooth_image(37, 21, 5);
        let code = encode_quadtree(&img, &EncoderConfig::default());
        let cfg = DecodeConfig::default();
        let out = decode(&code, &cfg);
        assert_eq!((out.width(), out.height()), (37, 21));
        assert_eq!(out, decode(&code, &cfg));
    }

    #[test]
    fn accepted_leaves_meet_their_threshold() {
        let img = smooth_image(64, 64, 6);
        let original = img.to_raster();
        for mode in [crate::code::Mode::NoSearch, crate::code::Mode::Mns] {
            let cfg = EncoderConfig::with_mode(mode);
            let code = encode_quadtree(&img, &cfg);
            // reconstruct every leaf from the encode-time image itself
            let rebuilt = decode_step(&code, &original);
            for leaf in code.leaves.iter().filter(|l| !l.level.is_last()) {
                let target = extract_unchecked(&original, leaf.rect);
                let got = extract_unchecked(&rebuilt, leaf.rect);
                let sq: f64 = target.iter().zip(&got).map(|(a, b)| (a - b) * (a - b)).sum();
                let rms = (sq / target.len() as f64).sqrt();
                let bound = cfg.threshold(leaf.level);
                assert!(rms <= bound + 1e-9, "{mode} leaf {:?}: {rms} > {bound}", leaf.rect);
            }
        }
    }

    #[test]
    fn empty_trace_is_impossible() {
        let img = GrayImage::filled(32, 32, 1);
        let code = encode_quadtree(&img, &EncoderConfig::default());
        let trace = decode_traced(
            &code,
            &DecodeConfig {
                max_iters: 1,
                ..DecodeConfig::default()
            },
        );
        assert_eq!(trace.max_deltas.len(), 1);
    }
}
