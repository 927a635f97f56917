//! Rate-distortion sweeps: encode, serialize and decode one image over a
//! grid of modes, thresholds and level-id sharing settings.

use std::io::{self, Write};
use std::time::Instant;

use crate::bitstream::write_stream;
use crate::code::Mode;
use crate::decoder::{decode, DecodeConfig};
use crate::encoder::{encode_quadtree, EncoderConfig, MeanGate};
use crate::error::{Error, StreamError};
use crate::image::GrayImage;
use crate::metrics::{format_psnr, psnr};

pub const RD_CSV_HEADER: &str =
    "mode,E1,E2,E3,t2,bits,bpp,psnr,encode_s,leaves_l1,leaves_l2,leaves_l3,leaves_l4,phase2";

/// One encoded configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RdPoint {
    pub mode: Mode,
    pub thresholds: [f64; 3],
    pub technique2: bool,
    /// Size of the serialized stream in bits, header and padding included.
    pub bits: u64,
    pub bpp: f64,
    pub psnr: f64,
    /// Wall-clock seconds spent in the quadtree encoder alone.
    pub encode_time: f64,
    pub leaf_counts: [usize; 4],
    pub phase2_count: usize,
}

impl RdPoint {
    pub fn leaves(&self) -> usize {
        self.leaf_counts.iter().sum()
    }

    pub fn csv_row(&self) -> String {
        let [e1, e2, e3] = self.thresholds;
        let [l1, l2, l3, l4] = self.leaf_counts;
        format!(
            "{},{e1},{e2},{e3},{},{},{:.6},{},{:.6},{l1},{l2},{l3},{l4},{}",
            self.mode,
            if self.technique2 { "on" } else { "off" },
            self.bits,
            self.bpp,
            format_psnr(self.psnr),
            self.encode_time,
            self.phase2_count,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub modes: Vec<Mode>,
    pub thresholds: Vec<[f64; 3]>,
    pub technique2: Vec<bool>,
    pub mean_tol: f64,
    pub mean_gate: MeanGate,
    pub decode: DecodeConfig,
}

impl SweepGrid {
    /// Equal thresholds on all three levels for each entry of `grid`.
    pub fn uniform(modes: Vec<Mode>, grid: &[f64]) -> Self {
        let base = EncoderConfig::default();
        Self {
            modes,
            thresholds: grid.iter().map(|&e| [e; 3]).collect(),
            technique2: vec![true],
            mean_tol: base.mean_tol,
            mean_gate: base.mean_gate,
            decode: DecodeConfig::default(),
        }
    }
}

fn label(mode: Mode, thresholds: [f64; 3], technique2: bool) -> String {
    format!("mode={mode} E={thresholds:?} t2={technique2}")
}

/// Rows come out mode-major, then thresholds, then the sharing flag, in
/// the order given by the grid.
pub fn rd_sweep(image: &GrayImage, grid: &SweepGrid) -> Result<Vec<RdPoint>, Error> {
    let mut points = Vec::new();
    for &mode in &grid.modes {
        for &thresholds in &grid.thresholds {
            for &technique2 in &grid.technique2 {
                let point = sweep_point(image, grid, mode, thresholds, technique2).map_err(|e| Error::Sweep {
                    label: label(mode, thresholds, technique2),
                    source: Box::new(e),
                })?;
                points.push(point);
            }
        }
    }
    Ok(points)
}

fn sweep_point(
    image: &GrayImage,
    grid: &SweepGrid,
    mode: Mode,
    thresholds: [f64; 3],
    technique2: bool,
) -> Result<RdPoint, Error> {
    if !matches!(mode, Mode::NoSearch | Mode::Mns) {
        return Err(StreamError::UnsupportedMode(mode.name()).into());
    }
    let config = EncoderConfig {
        thresholds,
        mean_tol: grid.mean_tol,
        mode,
        technique2,
        mean_gate: grid.mean_gate,
        ..EncoderConfig::default()
    };
    let started = Instant::now();
    let code = encode_quadtree(image, &config);
    let encode_time = started.elapsed().as_secs_f64();
    let bytes = write_stream(&code)?;
    let decoded = decode(&code, &grid.decode);
    let bits = bytes.len() as u64 * 8;
    Ok(RdPoint {
        mode,
        thresholds,
        technique2,
        bits,
        bpp: bits as f64 / (image.width() * image.height()) as f64,
        psnr: psnr(image, &decoded)?,
        encode_time,
        leaf_counts: code.leaf_counts(),
        phase2_count: code.phase2_count(),
    })
}

pub fn write_rd_csv<W: Write>(points: &[RdPoint], mut w: W) -> io::Result<()> {
    writeln!(w, "{RD_CSV_HEADER}")?;
    for p in points {
        writeln!(w, "{}", p.csv_row())?;
    }
    Ok(())
}
