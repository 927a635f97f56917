//! Search baselines on a fixed partition: exhaustive search over a domain
//! lattice, and a local search over the 81 translations of the co-centered
//! domain.

use rayon::prelude::*;

use super::{prepare, EncoderConfig};
use crate::code::{fixed_partition, LeafRecord, Level, Mode, Payload, QuadtreeCode};
use crate::error::GeometryError;
use crate::image::{co_domain_rect, downsample_unchecked, extract_unchecked, BlockRect, GrayImage, Raster};
use crate::transform::fit_quantized;

/// Best domain found for one range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockMatch {
    pub range: BlockRect,
    pub domain: BlockRect,
    pub rms: f64,
}

impl BlockMatch {
    /// Domain center minus range center, in pixels.
    pub fn center_offset(&self) -> (i64, i64) {
        let center = |origin: usize, size: usize| 2 * origin as i64 + size as i64;
        (
            (center(self.domain.x, self.domain.size) - center(self.range.x, self.range.size)) / 2,
            (center(self.domain.y, self.domain.size) - center(self.range.y, self.range.size)) / 2,
        )
    }
}

/// A baseline code together with the per-range match that produced each leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchEncoding {
    pub code: QuadtreeCode,
    /// Aligned with `code.leaves`.
    pub matches: Vec<BlockMatch>,
}

impl SearchEncoding {
    pub fn offsets(&self) -> Vec<(i64, i64)> {
        self.matches.iter().map(BlockMatch::center_offset).collect()
    }
}

struct Candidate {
    rect: BlockRect,
    block: Vec<f64>,
}

fn best_match(raster: &Raster, range: BlockRect, candidates: &[Candidate]) -> (LeafRecord, BlockMatch) {
    let block = extract_unchecked(raster, range);
    let mut best: Option<(f64, usize, crate::transform::ContrastCode, u8)> = None;
    for (i, cand) in candidates.iter().enumerate() {
        let (s, o, rms) = fit_quantized(&block, &cand.block);
        // strict: the earliest candidate wins ties
        if best.is_none_or(|(b, ..)| rms < b) {
            best = Some((rms, i, s, o));
        }
    }
    let (rms, i, s, o) = best.expect("candidate pool is never empty");
    let domain = candidates[i].rect;
    let level = Level::from_block_size(range.size).expect("validated range size");
    (
        LeafRecord {
            rect: range,
            level,
            payload: Payload::Baseline { domain, o, s },
        },
        BlockMatch { range, domain, rms },
    )
}

fn assemble(
    image: &GrayImage,
    raster: &Raster,
    mode: Mode,
    config: &EncoderConfig,
    found: Vec<(LeafRecord, BlockMatch)>,
) -> SearchEncoding {
    let (leaves, matches) = found.into_iter().unzip();
    SearchEncoding {
        code: QuadtreeCode {
            leaves,
            padded_w: raster.width(),
            padded_h: raster.height(),
            orig_w: image.width(),
            orig_h: image.height(),
            mode,
            technique2: config.technique2,
        },
        matches,
    }
}

/// Exhaustive search: every `2B x 2B` domain on a lattice of stride
/// `config.full_search_step` is fitted against every `B x B` range. Ties go
/// to the domain with the smallest `(y, x)` origin.
pub fn encode_full_search(
    image: &GrayImage,
    range_size: usize,
    config: &EncoderConfig,
) -> Result<SearchEncoding, GeometryError> {
    let level = Level::from_block_size(range_size).ok_or(GeometryError::UnsupportedRangeSize(range_size))?;
    let raster = prepare(image);
    let (w, h) = (raster.width(), raster.height());
    let domain_size = 2 * range_size;
    if domain_size > w || domain_size > h {
        return Err(GeometryError::ImageTooSmall {
            size: domain_size,
            width: w,
            height: h,
        });
    }
    let step = config.full_search_step.max(1);
    let pool: Vec<Candidate> = (0..=h - domain_size)
        .step_by(step)
        .flat_map(|y| {
            (0..=w - domain_size)
                .step_by(step)
                .map(move |x| BlockRect::new(x, y, domain_size))
        })
        .map(|rect| Candidate {
            rect,
            block: downsample_unchecked(&raster, rect),
        })
        .collect();
    let found = fixed_partition(w, h, level)
        .into_par_iter()
        .map(|range| best_match(&raster, range, &pool))
        .collect();
    Ok(assemble(image, &raster, Mode::FullSearch, config, found))
}

/// The 81 local candidates for an 8x8 range: the co-centered 16x16 domain
/// shifted by `(dx, dy)` in `-4..=4`, each clamped inside the image, in
/// `dy`-major order. Clamped duplicates are kept.
pub fn local_candidates(range: BlockRect, width: usize, height: usize) -> Result<Vec<BlockRect>, GeometryError> {
    let size = 2 * range.size;
    if size > width || size > height {
        return Err(GeometryError::ImageTooSmall { size, width, height });
    }
    let half = range.size as i64 / 2;
    let place = |origin: usize, shift: i64, extent: usize| {
        (origin as i64 - half + shift).clamp(0, (extent - size) as i64) as usize
    };
    let mut out = Vec::with_capacity(81);
    for dy in -4..=4 {
        for dx in -4..=4 {
            out.push(BlockRect::new(
                place(range.x, dx, width),
                place(range.y, dy, height),
                size,
            ));
        }
    }
    Ok(out)
}

/// Local search over 8x8 ranges with 81 candidate domains each.
pub fn encode_local_search(image: &GrayImage, config: &EncoderConfig) -> Result<SearchEncoding, GeometryError> {
    if image.width() < 16 || image.height() < 16 {
        return Err(GeometryError::ImageTooSmall {
            size: 16,
            width: image.width(),
            height: image.height(),
        });
    }
    let raster = prepare(image);
    let (w, h) = (raster.width(), raster.height());
    let level = Level::from_block_size(8).expect("8 is a level size");
    // sanity check the geometry once; every range shares it
    co_domain_rect(BlockRect::new(0, 0, 8), w, h)?;
    let found = fixed_partition(w, h, level)
        .into_par_iter()
        .map(|range| {
            let candidates: Vec<Candidate> = local_candidates(range, w, h)
                .expect("checked above")
                .into_iter()
                .map(|rect| Candidate {
                    rect,
                    block: downsample_unchecked(&raster, rect),
                })
                .collect();
            best_match(&raster, range, &candidates)
        })
        .collect();
    Ok(assemble(image, &raster, Mode::LocalSearch, config, found))
}
