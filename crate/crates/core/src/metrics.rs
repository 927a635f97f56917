//! Fidelity metrics and domain-offset histograms.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::error::Error;
use crate::image::GrayImage;

/// Peak value for 8-bit samples.
pub const PEAK: f64 = 255.0;

fn check_dims(a: &GrayImage, b: &GrayImage) -> Result<(), Error> {
    if (a.width(), a.height()) == (b.width(), b.height()) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            a_w: a.width(),
            a_h: a.height(),
            b_w: b.width(),
            b_h: b.height(),
        })
    }
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64, Error> {
    check_dims(a, b)?;
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum();
    Ok(sum / a.pixels().len() as f64)
}

/// PSNR in dB; identical images give `f64::INFINITY`.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64, Error> {
    mse(a, b).map(psnr_from_mse)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

/// Formats a PSNR value, printing the infinity sentinel as `inf`.
pub fn format_psnr(db: f64) -> String {
    if db.is_infinite() {
        "inf".to_owned()
    } else {
        format!("{db:.4}")
    }
}

/// Counts of domain-minus-range center offsets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OffsetHistogram {
    pub joint: BTreeMap<(i64, i64), u64>,
    pub x: BTreeMap<i64, u64>,
    pub y: BTreeMap<i64, u64>,
    pub total: u64,
}

impl OffsetHistogram {
    pub fn from_samples(samples: &[(i64, i64)]) -> Self {
        let mut h = Self::default();
        for &(dx, dy) in samples {
            *h.joint.entry((dx, dy)).or_default() += 1;
            *h.x.entry(dx).or_default() += 1;
            *h.y.entry(dy).or_default() += 1;
            h.total += 1;
        }
        h
    }

    /// Most frequent x offset; ties go to the smallest magnitude, then the
    /// smaller value.
    pub fn mode_x(&self) -> Option<i64> {
        marginal_mode(&self.x)
    }

    pub fn mode_y(&self) -> Option<i64> {
        marginal_mode(&self.y)
    }

    /// `axis,offset,count` rows, x marginal first.
    pub fn write_marginal_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "axis,offset,count")?;
        for (axis, table) in [("x", &self.x), ("y", &self.y)] {
            for (offset, count) in table {
                writeln!(w, "{axis},{offset},{count}")?;
            }
        }
        Ok(())
    }

    /// `dx,dy,count` rows in row-major offset order.
    pub fn write_joint_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "dx,dy,count")?;
        let mut rows: Vec<_> = self.joint.iter().collect();
        rows.sort_by_key(|(&(dx, dy), _)| (dy, dx));
        for ((dx, dy), count) in rows {
            writeln!(w, "{dx},{dy},{count}")?;
        }
        Ok(())
    }
}

fn marginal_mode(table: &BTreeMap<i64, u64>) -> Option<i64> {
    table
        .iter()
        .max_by(|(a_off, a), (b_off, b)| {
            a.cmp(b)
                .then_with(|| b_off.abs().cmp(&a_off.abs()))
                .then_with(|| b_off.cmp(a_off))
        })
        .map(|(&offset, _)| offset)
}
