//! Mean-removed affine block map `r = s·(d − mean(d)) + o`.
//!
//! With the domain mean removed, the least-squares luminance is exactly the
//! range mean, so it always fits in one byte and block means survive the
//! mapping unchanged. Contrast is clamped to [-1, 1] and coded on a uniform
//! 3-bit grid whose reconstruction levels are the bin centers.

use std::fmt;

/// Contrast and luminance of one block map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineParams {
    pub s: f64,
    pub o: f64,
}

/// 3-bit contrast index. Reconstruction levels are −0.875, −0.625, …, 0.875.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContrastCode(u8);

impl ContrastCode {
    pub const BITS: u32 = 3;

    pub fn new(code: u8) -> Option<Self> {
        (code < 8).then_some(Self(code))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        -0.875 + 0.25 * f64::from(self.0)
    }

    pub fn all() -> impl Iterator<Item = ContrastCode> {
        (0..8).map(ContrastCode)
    }
}

impl fmt::Display for ContrastCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[inline]
fn mean(block: &[f64]) -> f64 {
    block.iter().sum::<f64>() / block.len() as f64
}

/// Least-squares `(s, o)` for mapping `domain` onto `range`. The returned
/// contrast is not clamped; a flat domain yields `s = 0`.
///
/// Panics if the blocks differ in length or are empty.
pub fn fit_affine(range: &[f64], domain: &[f64]) -> AffineParams {
    assert_eq!(range.len(), domain.len(), "block size mismatch");
    assert!(!range.is_empty(), "empty block");
    let r_mean = mean(range);
    let d_mean = mean(domain);
    let mut cross = 0.0;
    let mut energy = 0.0;
    for (&r, &d) in range.iter().zip(domain) {
        let dc = d - d_mean;
        cross += dc * (r - r_mean);
        energy += dc * dc;
    }
    let s = if energy > 0.0 { cross / energy } else { 0.0 };
    AffineParams { s, o: r_mean }
}

/// Clamps into [-1, 1] and returns the index of the quarter-wide bin holding
/// `s`. Bins are half-open with the boundary going to the upper bin; 1.0
/// falls in the last bin.
pub fn quantize_contrast(s: f64) -> ContrastCode {
    let s = if s.is_nan() { 0.0 } else { s.clamp(-1.0, 1.0) };
    let bin = ((s + 1.0) * 4.0).floor() as u8;
    ContrastCode(bin.min(7))
}

pub fn dequantize_contrast(code: ContrastCode) -> f64 {
    code.value()
}

/// Applies the map to `domain` and clamps each output sample into [0, 255].
pub fn apply_map(domain: &[f64], s: f64, o: f64) -> Vec<f64> {
    let d_mean = mean(domain);
    domain
        .iter()
        .map(|&d| (s * (d - d_mean) + o).clamp(0.0, 255.0))
        .collect()
}

/// Root-mean-square residual of the unclamped map against `range`.
///
/// Panics if the blocks differ in length.
pub fn rms_error(range: &[f64], domain: &[f64], s: f64, o: f64) -> f64 {
    assert_eq!(range.len(), domain.len(), "block size mismatch");
    let d_mean = mean(domain);
    let sum: f64 = range
        .iter()
        .zip(domain)
        .map(|(&r, &d)| {
            let e = r - (s * (d - d_mean) + o);
            e * e
        })
        .sum();
    (sum / range.len() as f64).sqrt()
}

/// Least-squares fit snapped to the stored precision: 3-bit contrast and an
/// 8-bit luminance. Returns the codes and the residual they produce.
pub fn fit_quantized(range: &[f64], domain: &[f64]) -> (ContrastCode, u8, f64) {
    let fit = fit_affine(range, domain);
    let code = quantize_contrast(fit.s);
    let o = crate::image::quantize_sample(fit.o);
    let rms = rms_error(range, domain, code.value(), f64::from(o));
    (code, o, rms)
}
