//! Quadtree encoders.
//!
//! Every node first tries a plain no-search fit against its co-centered
//! domain. In `Mns` mode a node that fails is retried with sub-block coding
//! (per-quadrant means plus a one-bit contrast choice) before it is split.

mod search;

pub use search::{encode_full_search, encode_local_search, local_candidates, BlockMatch, SearchEncoding};

use rayon::prelude::*;

use crate::code::{padded_dims, root_rects, LeafRecord, Level, Mode, Payload, QuadtreeCode, SubBlockCode};
use crate::error::GeometryError;
use crate::image::{co_domain_block, extract_unchecked, mean_unchecked, pad_to, BlockRect, GrayImage, Plane, Raster};
use crate::transform::{fit_quantized, rms_error};

/// Which sub-block mean spread admits a block to sub-block coding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MeanGate {
    /// Every quadrant mean within `mean_tol` of the block mean.
    #[default]
    Within,
    /// At least one quadrant mean further than `mean_tol` from the block mean.
    Beyond,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderConfig {
    /// RMS tolerances for levels 1, 2 and 3. Level 4 always accepts.
    pub thresholds: [f64; 3],
    pub mean_tol: f64,
    pub mode: Mode,
    pub technique2: bool,
    /// Domain lattice stride for the exhaustive baseline.
    pub full_search_step: usize,
    pub mean_gate: MeanGate,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            thresholds: [8.0; 3],
            mean_tol: 16.0,
            mode: Mode::Mns,
            technique2: true,
            full_search_step: 1,
            mean_gate: MeanGate::Within,
        }
    }
}

impl EncoderConfig {
    pub fn with_mode(mode: Mode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn threshold(&self, level: Level) -> f64 {
        self.thresholds.get(level.index()).copied().unwrap_or(f64::INFINITY)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rejection {
    /// Fit residual above the level's tolerance.
    Error { rms: f64 },
    /// Quadrant means fail the applicability gate.
    MeanGate { max_diff: f64 },
    /// A mean offset does not fit the level's field width.
    DeltaRange,
    /// A reconstructed quadrant mean falls outside [0, 255].
    MeanRange,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Attempt {
    Accepted { leaf: LeafRecord, rms: f64 },
    Rejected(Rejection),
}

impl Attempt {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Attempt::Accepted { .. })
    }
}

fn check_level(range: BlockRect, level: Level) {
    assert_eq!(
        range.size,
        level.block_size(),
        "range size does not match level {level}"
    );
}

/// Fits the range against its co-centered downsampled domain with a 3-bit
/// contrast and 8-bit mean. Accepts when the quantized residual is within
/// the level's tolerance, and always at level 4.
pub fn try_phase1<P: Plane>(
    plane: &P,
    range: BlockRect,
    level: Level,
    config: &EncoderConfig,
) -> Result<Attempt, GeometryError> {
    check_level(range, level);
    let domain = co_domain_block(plane, range)?;
    let block = extract_unchecked(plane, range);
    let (s, o, rms) = fit_quantized(&block, &domain);
    if level.is_last() || rms <= config.threshold(level) {
        Ok(Attempt::Accepted {
            leaf: LeafRecord {
                rect: range,
                level,
                payload: Payload::Phase1 { o, s },
            },
            rms,
        })
    } else {
        Ok(Attempt::Rejected(Rejection::Error { rms }))
    }
}

/// Rounds the block mean to 8 bits and the first three quadrant offsets
/// `round(O_k - O_i)` to the level's signed field width. Fails if an offset
/// does not fit or an implied quadrant mean leaves [0, 255].
pub fn quantize_sub_means(block_mean: f64, sub_means: [f64; 4], level: Level) -> Result<SubBlockCode, Rejection> {
    let mut deltas = [0i16; 3];
    for (delta, sub) in deltas.iter_mut().zip(&sub_means) {
        let d = (sub - block_mean).round();
        if d.abs() > f64::from(level.max_delta()) {
            return Err(Rejection::DeltaRange);
        }
        *delta = d as i16;
    }
    let code = SubBlockCode {
        mean: crate::image::quantize_sample(block_mean),
        deltas,
        selections: [false; 4],
    };
    if code.quadrant_means().iter().any(|m| !(0..=255).contains(m)) {
        return Err(Rejection::MeanRange);
    }
    Ok(code)
}

/// Sub-block coding: stores the block mean plus three quantized quadrant
/// mean offsets, and picks for each quadrant one of the level's two contrast
/// values against the quadrant's own co-centered domain.
pub fn try_phase2<P: Plane>(
    plane: &P,
    range: BlockRect,
    level: Level,
    config: &EncoderConfig,
) -> Result<Attempt, GeometryError> {
    check_level(range, level);
    let set = level
        .contrast_set()
        .unwrap_or_else(|| panic!("no sub-block coding at level {level}"));
    let quadrants = range.quadrants();
    // geometry first so contract violations surface regardless of content
    let domains = quadrants
        .iter()
        .map(|&q| co_domain_block(plane, q))
        .collect::<Result<Vec<_>, _>>()?;

    let block_mean = mean_unchecked(plane, range);
    let sub_means = quadrants.map(|q| mean_unchecked(plane, q));
    let max_diff = sub_means.iter().map(|m| (m - block_mean).abs()).fold(0.0, f64::max);
    let gate_open = match config.mean_gate {
        MeanGate::Within => max_diff <= config.mean_tol,
        MeanGate::Beyond => max_diff > config.mean_tol,
    };
    if !gate_open {
        return Ok(Attempt::Rejected(Rejection::MeanGate { max_diff }));
    }

    let mut code = match quantize_sub_means(block_mean, sub_means, level) {
        Ok(code) => code,
        Err(rejection) => return Ok(Attempt::Rejected(rejection)),
    };
    let means = code.quadrant_means();

    let tolerance = config.threshold(level);
    let mut worst = 0.0f64;
    for (k, (quadrant, domain)) in quadrants.iter().zip(&domains).enumerate() {
        let block = extract_unchecked(plane, *quadrant);
        let o = f64::from(means[k]);
        let low = rms_error(&block, domain, set[0], o);
        let high = rms_error(&block, domain, set[1], o);
        let (pick, rms) = if high < low { (true, high) } else { (false, low) };
        code.selections[k] = pick;
        worst = worst.max(rms);
    }
    if worst <= tolerance {
        Ok(Attempt::Accepted {
            leaf: LeafRecord {
                rect: range,
                level,
                payload: Payload::Phase2(code),
            },
            rms: worst,
        })
    } else {
        Ok(Attempt::Rejected(Rejection::Error { rms: worst }))
    }
}

/// Pads the image to codec dimensions and converts it to real samples.
pub(crate) fn prepare(image: &GrayImage) -> Raster {
    let (w, h) = padded_dims(image.width(), image.height());
    pad_to(image, w, h).to_raster()
}

/// Quadtree encoding in `NoSearch` or `Mns` mode.
///
/// Roots are encoded in parallel; the leaf order is always the sequential
/// depth-first order.
pub fn encode_quadtree(image: &GrayImage, config: &EncoderConfig) -> QuadtreeCode {
    assert!(
        matches!(config.mode, Mode::NoSearch | Mode::Mns),
        "quadtree encoding needs ns or mns mode, got {}",
        config.mode
    );
    let raster = prepare(image);
    let roots: Vec<BlockRect> = root_rects(raster.width(), raster.height()).collect();
    let leaves = roots
        .par_iter()
        .map(|&root| {
            let mut out = Vec::new();
            encode_node(&raster, root, Level::ONE, config, &mut out);
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    QuadtreeCode {
        leaves,
        padded_w: raster.width(),
        padded_h: raster.height(),
        orig_w: image.width(),
        orig_h: image.height(),
        mode: config.mode,
        technique2: config.technique2,
    }
}

fn encode_node(raster: &Raster, rect: BlockRect, level: Level, config: &EncoderConfig, out: &mut Vec<LeafRecord>) {
    const GEOMETRY: &str = "codec raster admits every co-centered domain";
    if let Attempt::Accepted { leaf, .. } = try_phase1(raster, rect, level, config).expect(GEOMETRY) {
        out.push(leaf);
        return;
    }
    if config.mode == Mode::Mns {
        if let Attempt::Accepted { leaf, .. } = try_phase2(raster, rect, level, config).expect(GEOMETRY) {
            out.push(leaf);
            return;
        }
    }
    // level 4 always accepts in phase 1
    let child = level.child().expect("level 4 never splits");
    for quadrant in rect.quadrants() {
        encode_node(raster, quadrant, child, config, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::ContrastCode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.gen())
    }

    /// Best residual over all 8 contrast codes and all 256 luminance bytes.
    fn quantized_grid_min(block: &[f64], domain: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for code in ContrastCode::all() {
            for o in 0..=255u8 {
                best = best.min(rms_error(block, domain, code.value(), f64::from(o)));
            }
        }
        best
    }

    #[test]
    fn phase1_constant_block() {
        let img = GrayImage::filled(64, 64, 77).to_raster();
        let cfg = EncoderConfig::default();
        let attempt = try_phase1(&img, BlockRect::new(16, 32, 16), Level::ONE, &cfg).unwrap();
        let Attempt::Accepted { leaf, rms } = attempt else {
            panic!("constant block rejected");
        };
        assert_eq!(rms, 0.0);
        assert_eq!(
            leaf.payload,
            Payload::Phase1 {
                o: 77,
                s: crate::transform::quantize_contrast(0.0)
            }
        );
    }

    #[test]
    fn phase1_level4_always_accepts() {
        let img = noise(32, 32, 5).to_raster();
        let cfg = EncoderConfig {
            thresholds: [1e-9; 3],
            ..EncoderConfig::default()
        };
        for y in (0..32).step_by(2) {
            for x in (0..32).step_by(2) {
                let a = try_phase1(&img, BlockRect::new(x, y, 2), Level::FOUR, &cfg).unwrap();
                assert!(a.is_accepted());
            }
        }
    }

    #[test]
    fn phase1_checkerboard_rejected_by_grid_oracle() {
        let img = GrayImage::from_fn(64, 64, |x, y| if (x + y) % 2 == 0 { 0 } else { 255 }).to_raster();
        let range = BlockRect::new(16, 16, 16);
        let domain = co_domain_block(&img, range).unwrap();
        let block = extract_unchecked(&img, range);
        // every 2x2 average of a checkerboard is flat, so no map reaches the range
        let oracle = quantized_grid_min(&block, &domain);
        assert!(oracle > 1.0, "oracle {oracle}");
        let cfg = EncoderConfig {
            thresholds: [1.0; 3],
            ..EncoderConfig::default()
        };
        let attempt = try_phase1(&img, range, Level::ONE, &cfg).unwrap();
        let Attempt::Rejected(Rejection::Error { rms }) = attempt else {
            panic!("checkerboard accepted");
        };
        assert!((rms - oracle).abs() < 1e-9);
    }

    #[test]
    #[should_panic(expected = "does not match level")]
    fn phase1_level_contract() {
        let img = GrayImage::filled(32, 32, 0).to_raster();
        let _ = try_phase1(&img, BlockRect::new(0, 0, 8), Level::ONE, &EncoderConfig::default());
    }

    #[test]
    fn phase2_constant_block() {
        let img = GrayImage::filled(64, 64, 50).to_raster();
        let cfg = EncoderConfig::default();
        let Attempt::Accepted { leaf, rms } = try_phase2(&img, BlockRect::new(16, 16, 16), Level::ONE, &cfg).unwrap()
        else {
            panic!("constant block rejected");
        };
        assert_eq!(rms, 0.0);
        assert_eq!(
            leaf.payload,
            Payload::Phase2(SubBlockCode {
                mean: 50,
                deltas: [0; 3],
                selections: [false; 4]
            })
        );
    }

    #[test]
    fn phase2_mean_gate() {
        let cfg = EncoderConfig {
            mean_tol: 4.0,
            ..EncoderConfig::default()
        };
        // TL quadrant sits 3·T_mean above the block mean
        let img = GrayImage::from_fn(64, 64, |x, y| {
            let (lx, ly) = (x % 16, y % 16);
            if lx < 8 && ly < 8 {
                136
            } else {
                120
            }
        })
        .to_raster();
        let attempt = try_phase2(&img, BlockRect::new(16, 16, 16), Level::ONE, &cfg).unwrap();
        assert_eq!(attempt, Attempt::Rejected(Rejection::MeanGate { max_diff: 12.0 }));

        let inverted = EncoderConfig {
            mean_gate: MeanGate::Beyond,
            ..cfg
        };
        let attempt = try_phase2(&img, BlockRect::new(16, 16, 16), Level::ONE, &inverted).unwrap();
        assert!(!matches!(attempt, Attempt::Rejected(Rejection::MeanGate { .. })));
    }

    #[test]
    fn phase2_quadrant_means_example() {
        // quadrant means 100 / 104 / 96 / 100 in TL, TR, BL, BR order
        let img = GrayImage::from_fn(64, 64, |x, y| match ((x % 16) < 8, (y % 16) < 8) {
            (true, true) => 100,
            (false, true) => 104,
            (true, false) => 96,
            (false, false) => 100,
        })
        .to_raster();
        let range = BlockRect::new(16, 16, 16);
        let cfg = EncoderConfig::default();
        let attempt = try_phase2(&img, range, Level::ONE, &cfg).unwrap();
        let Attempt::Accepted { leaf, rms } = attempt else {
            panic!("rejected: {attempt:?}");
        };
        let Payload::Phase2(code) = leaf.payload else {
            unreachable!()
        };
        assert_eq!(code.mean, 100);
        assert_eq!(code.deltas, [0, 4, -4]);
        assert_eq!(code.quadrant_means()[3], 100);

        // independent check: each quadrant's best of the two set values
        let set = Level::ONE.contrast_set().unwrap();
        let mut worst = 0.0f64;
        for (k, q) in range.quadrants().iter().enumerate() {
            let block = extract_unchecked(&img, *q);
            let domain = co_domain_block(&img, *q).unwrap();
            let o = f64::from(code.quadrant_means()[k]);
            let best = set
                .iter()
                .map(|&s| rms_error(&block, &domain, s, o))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        assert!((rms - worst).abs() < 1e-12);
        assert!(rms <= 8.0);
    }

    #[test]
    fn phase2_rejects_wide_deltas() {
        // level-1 offsets are limited to 15
        let img = GrayImage::from_fn(64, 64, |x, _| if (x % 16) < 8 { 84 } else { 116 }).to_raster();
        let cfg = EncoderConfig {
            mean_tol: 40.0,
            ..EncoderConfig::default()
        };
        let attempt = try_phase2(&img, BlockRect::new(16, 16, 16), Level::ONE, &cfg).unwrap();
        assert_eq!(attempt, Attempt::Rejected(Rejection::DeltaRange));
        let attempt = try_phase2(&img, BlockRect::new(16, 16, 8), Level::new(2).unwrap(), &cfg).unwrap();
        assert_ne!(attempt, Attempt::Rejected(Rejection::DeltaRange));
    }

    #[test]
    fn constant_image_one_leaf_per_root() {
        let img = GrayImage::filled(512, 512, 9);
        let code = encode_quadtree(&img, &EncoderConfig::default());
        assert_eq!(code.leaves.len(), 1024);
        assert!(code
            .leaves
            .iter()
            .all(|l| l.level == Level::ONE && matches!(l.payload, Payload::Phase1 { .. })));
    }

    #[test]
    fn infinite_thresholds_accept_roots() {
        let img = noise(48, 40, 1);
        let cfg = EncoderConfig {
            thresholds: [f64::INFINITY; 3],
            ..EncoderConfig::default()
        };
        let code = encode_quadtree(&img, &cfg);
        assert_eq!((code.padded_w, code.padded_h), (48, 48));
        assert_eq!(code.leaves.len(), 9);
        assert!(code.leaves.iter().all(|l| l.level == Level::ONE));
    }

    #[test]
    fn noise_splits_to_level4() {
        let img = noise(64, 64, 42);
        let raster = img.to_raster();
        let cfg = EncoderConfig {
            thresholds: [0.5; 3],
            mode: Mode::NoSearch,
            ..EncoderConfig::default()
        };
        // the fit oracle: no block above level 4 comes within 0.5 rms
        for level in 1..=3u8 {
            let level = Level::new(level).unwrap();
            for rect in crate::code::fixed_partition(64, 64, level) {
                let block = extract_unchecked(&raster, rect);
                let domain = co_domain_block(&raster, rect).unwrap();
                assert!(quantized_grid_min(&block, &domain) > 0.5);
            }
        }
        let code = encode_quadtree(&img, &cfg);
        assert_eq!(code.leaves.len(), 64 * 64 / 4);
        assert!(code.leaves.iter().all(|l| l.level == Level::FOUR));
    }

    #[test]
    fn tiling_and_threshold_guarantee() {
        let img = noise(40, 24, 3);
        for mode in [Mode::NoSearch, Mode::Mns] {
            let cfg = EncoderConfig {
                thresholds: [30.0, 40.0, 50.0],
                mean_tol: 30.0,
                ..EncoderConfig::with_mode(mode)
            };
            let code = encode_quadtree(&img, &cfg);
            code.validate_tiling().unwrap();
            let area: usize = code.leaves.iter().map(|l| l.rect.area()).sum();
            assert_eq!(area, code.padded_w * code.padded_h);
            assert_eq!(code.leaf_counts()[3] % 4, 0);
        }
    }

    #[test]
    fn encoding_is_deterministic() {
        let img = noise(96, 80, 11);
        let cfg = EncoderConfig {
            thresholds: [20.0; 3],
            ..EncoderConfig::default()
        };
        assert_eq!(encode_quadtree(&img, &cfg), encode_quadtree(&img, &cfg));
    }
}
