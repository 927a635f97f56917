//! Grayscale rasters, binary PGM I/O and the block-level pixel algebra the
//! codec is built on.
//!
//! Two raster types exist: [`GrayImage`] holds 8-bit samples and is what
//! goes in and out of the codec, while [`Raster`] holds real-valued samples
//! and is what the decoder iterates on. Block operations are generic over
//! [`Plane`] so the encoder and decoder share one implementation.

use crate::error::{GeometryError, PgmError};

/// Read access to a rectangular grid of intensities.
pub trait Plane {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn at(&self, x: usize, y: usize) -> f64;
}

/// 8-bit single-channel image, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, GeometryError> {
        if pixels.len() != width * height {
            return Err(GeometryError::BufferSize {
                width,
                height,
                expected: width * height,
                found: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    /// Top-left `width` x `height` window of this image.
    pub fn crop(&self, width: usize, height: usize) -> GrayImage {
        assert!(width <= self.width && height <= self.height, "crop larger than image");
        GrayImage::from_fn(width, height, |x, y| self.get(x, y))
    }

    pub fn to_raster(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.pixels.iter().map(|&p| f64::from(p)).collect(),
        }
    }
}

impl Plane for GrayImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    #[inline]
    fn at(&self, x: usize, y: usize) -> f64 {
        f64::from(self.pixels[y * self.width + x])
    }
}

/// Real-valued raster used during decoding.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Copies a square row-major block into `rect`.
    pub fn put_block(&mut self, rect: BlockRect, block: &[f64]) {
        debug_assert_eq!(block.len(), rect.size * rect.size);
        for (row, chunk) in block.chunks_exact(rect.size).enumerate() {
            let start = (rect.y + row) * self.width + rect.x;
            self.data[start..start + rect.size].copy_from_slice(chunk);
        }
    }

    /// Largest absolute per-pixel difference.
    pub fn max_abs_diff(&self, other: &Raster) -> f64 {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "raster size mismatch"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Rounds to 8 bits (half away from zero) after clamping into [0, 255].
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.data.iter().map(|&v| quantize_sample(v)).collect(),
        }
    }
}

impl Plane for Raster {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    #[inline]
    fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Clamps into [0, 255] and rounds half away from zero.
#[inline]
pub fn quantize_sample(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// Square pixel region: top-left corner plus side length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockRect {
    pub x: usize,
    pub y: usize,
    pub size: usize,
}

impl BlockRect {
    pub const fn new(x: usize, y: usize, size: usize) -> Self {
        Self { x, y, size }
    }

    pub fn area(&self) -> usize {
        self.size * self.size
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x + self.size <= width && self.y + self.size <= height
    }

    /// The four half-size children in TL, TR, BL, BR order.
    pub fn quadrants(&self) -> [BlockRect; 4] {
        let h = self.size / 2;
        [
            BlockRect::new(self.x, self.y, h),
            BlockRect::new(self.x + h, self.y, h),
            BlockRect::new(self.x, self.y + h, h),
            BlockRect::new(self.x + h, self.y + h, h),
        ]
    }

    fn check(&self, width: usize, height: usize) -> Result<(), GeometryError> {
        if self.fits(width, height) {
            Ok(())
        } else {
            Err(GeometryError::OutOfBounds {
                x: self.x,
                y: self.y,
                size: self.size,
                width,
                height,
            })
        }
    }
}

/// Parses a binary (P5) PGM with maxval 255.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(PgmError::BadMagic);
    }
    let mut pos = 2;
    let width = header_field(bytes, &mut pos, "width")?;
    let height = header_field(bytes, &mut pos, "height")?;
    let maxval = header_field(bytes, &mut pos, "maxval")?;
    // exactly one whitespace byte separates the header from the payload
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(PgmError::BadField("maxval")),
    }
    if maxval != 255 {
        return Err(PgmError::UnsupportedMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(PgmError::EmptyImage);
    }
    let expected = width as usize * height as usize;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    Ok(GrayImage {
        width: width as usize,
        height: height as usize,
        pixels: payload[..expected].to_vec(),
    })
}

fn header_field(bytes: &[u8], pos: &mut usize, name: &'static str) -> Result<u32, PgmError> {
    // skip whitespace and comments
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            }
            _ => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(PgmError::BadField(name));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or(PgmError::BadField(name))
}

pub fn save_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5 {} {} 255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

/// Grows the image to the next multiples of `m` by replicating edge pixels.
pub fn pad_to_multiple(image: &GrayImage, m: usize) -> GrayImage {
    assert!(m >= 1, "padding multiple must be positive");
    let w = image.width.div_ceil(m) * m;
    let h = image.height.div_ceil(m) * m;
    pad_to(image, w, h)
}

/// Edge-replicating pad to explicit dimensions, which must not shrink the image.
pub fn pad_to(image: &GrayImage, width: usize, height: usize) -> GrayImage {
    assert!(width >= image.width && height >= image.height);
    if width == image.width && height == image.height {
        return image.clone();
    }
    GrayImage::from_fn(width, height, |x, y| {
        image.get(x.min(image.width - 1), y.min(image.height - 1))
    })
}

/// Mean of the pixels inside `rect`.
pub fn block_mean<P: Plane>(plane: &P, rect: BlockRect) -> Result<f64, GeometryError> {
    rect.check(plane.width(), plane.height())?;
    Ok(mean_unchecked(plane, rect))
}

pub(crate) fn mean_unchecked<P: Plane>(plane: &P, rect: BlockRect) -> f64 {
    let mut sum = 0.0;
    for y in rect.y..rect.y + rect.size {
        for x in rect.x..rect.x + rect.size {
            sum += plane.at(x, y);
        }
    }
    sum / rect.area() as f64
}

/// Copies the pixels of `rect` into a row-major block.
pub fn extract_block<P: Plane>(plane: &P, rect: BlockRect) -> Result<Vec<f64>, GeometryError> {
    rect.check(plane.width(), plane.height())?;
    Ok(extract_unchecked(plane, rect))
}

pub(crate) fn extract_unchecked<P: Plane>(plane: &P, rect: BlockRect) -> Vec<f64> {
    let mut out = Vec::with_capacity(rect.area());
    for y in rect.y..rect.y + rect.size {
        for x in rect.x..rect.x + rect.size {
            out.push(plane.at(x, y));
        }
    }
    out
}

/// Shrinks a 2B x 2B region to B x B by averaging each 2x2 pixel group.
///
/// Panics if `rect.size` is odd.
pub fn downsample_mean2<P: Plane>(plane: &P, rect: BlockRect) -> Result<Vec<f64>, GeometryError> {
    assert!(
        rect.size.is_multiple_of(2),
        "downsample needs an even block size, got {}",
        rect.size
    );
    rect.check(plane.width(), plane.height())?;
    Ok(downsample_unchecked(plane, rect))
}

pub(crate) fn downsample_unchecked<P: Plane>(plane: &P, rect: BlockRect) -> Vec<f64> {
    let half = rect.size / 2;
    let mut out = Vec::with_capacity(half * half);
    for i in 0..half {
        let y = rect.y + 2 * i;
        for j in 0..half {
            let x = rect.x + 2 * j;
            let sum = plane.at(x, y) + plane.at(x + 1, y) + plane.at(x, y + 1) + plane.at(x + 1, y + 1);
            out.push(sum / 4.0);
        }
    }
    out
}

/// The 2·size domain sharing the range's center, shifted per axis by the
/// least amount that keeps it inside the image.
pub fn co_domain_rect(range: BlockRect, img_w: usize, img_h: usize) -> Result<BlockRect, GeometryError> {
    let size = 2 * range.size;
    if size > img_w || size > img_h {
        return Err(GeometryError::ImageTooSmall {
            size,
            width: img_w,
            height: img_h,
        });
    }
    let half = range.size / 2;
    let place = |start: usize, extent: usize| start.saturating_sub(half).min(extent - size);
    Ok(BlockRect::new(place(range.x, img_w), place(range.y, img_h), size))
}

/// Downsampled co-centered domain for `range`, ready to be mapped onto it.
pub fn co_domain_block<P: Plane>(plane: &P, range: BlockRect) -> Result<Vec<f64>, GeometryError> {
    let domain = co_domain_rect(range, plane.width(), plane.height())?;
    Ok(downsample_unchecked(plane, domain))
}
