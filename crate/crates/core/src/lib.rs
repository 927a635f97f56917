//! Quadtree fractal image compression with fixed, co-centered domains.
//!
//! The crate covers the whole pipeline for 8-bit grayscale images:
//!
//! * [`image`]: PGM I/O, padding and block statistics.
//! * [`transform`]: the mean-removed affine block map and its 3-bit contrast code.
//! * [`encoder`]: no-search and modified no-search quadtree encoders, plus
//!   full-search and local-search baselines.
//! * [`bitstream`]: the bit-exact `.mns` container.
//! * [`decoder`]: iterative fixed-point reconstruction.
//! * [`metrics`] and [`sweep`]: PSNR, offset histograms and rate-distortion sweeps.
//!
//! ```
//! use mns_core::{decode, encode_quadtree, psnr, read_stream, write_stream};
//! use mns_core::{DecodeConfig, EncoderConfig, GrayImage};
//!
//! let img = GrayImage::from_fn(48, 48, |x, y| (x * 3 + y * 2) as u8);
//! let code = encode_quadtree(&img, &EncoderConfig::default());
//! let bytes = write_stream(&code).unwrap();
//! let decoded = decode(&read_stream(&bytes).unwrap(), &DecodeConfig::default());
//! assert!(psnr(&img, &decoded).unwrap() > 30.0);
//! ```

pub mod bitstream;
pub mod code;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod image;
pub mod metrics;
pub mod sweep;
pub mod transform;

pub use bitstream::{level_id_bit_count, read_stream, stream_bit_len, write_stream};
pub use code::{LeafRecord, Level, Mode, Payload, QuadtreeCode, SubBlockCode, CONTRAST_SETS};
pub use decoder::{decode, decode_step, decode_traced, DecodeConfig, DecodeTrace};
pub use encoder::{
    encode_full_search, encode_local_search, encode_quadtree, quantize_sub_means, try_phase1, try_phase2, Attempt,
    EncoderConfig, MeanGate, Rejection, SearchEncoding,
};
pub use error::{Error, GeometryError, PgmError, StreamError};
pub use image::{load_pgm, save_pgm, BlockRect, GrayImage, Raster};
pub use metrics::{mse, psnr, OffsetHistogram};
pub use sweep::{rd_sweep, write_rd_csv, RdPoint, SweepGrid};
pub use transform::{AffineParams, ContrastCode};
