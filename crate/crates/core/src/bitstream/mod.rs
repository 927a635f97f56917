//! The `.mns` container.
//!
//! ```text
//! header   "MNS1" | flags:u8 | orig_w:u16 | orig_h:u16 | padded_w:u16 | padded_h:u16   (big-endian)
//!          flags bit 0: 0 = no-search, 1 = mns;  bit 1: level-id sharing
//! leaves   depth-first, MSB-first bit packing
//!          [level id: 2 bits = level - 1]     omitted for the 2nd..4th leaf of a
//!                                             level-4 quartet when sharing is on
//!          [phase: 1 bit, 0 = plain fit]      levels 1..3 in mns mode only
//!          plain fit:  mean:8 | contrast:3
//!          sub-block:  mean:8 | 3 x (sign:1 | magnitude:w-1) | selections:4
//!                      w = 5 at level 1, 6 at levels 2 and 3
//! trailer  zero bits up to the next byte boundary
//! ```

mod bitio;

pub use bitio::{BitReader, BitWriter};

use crate::code::{padded_dims, root_rects, LeafRecord, Level, Mode, Payload, QuadtreeCode, SubBlockCode};
use crate::error::StreamError;
use crate::image::BlockRect;
use crate::transform::ContrastCode;

pub const MAGIC: &[u8; 4] = b"MNS1";
pub const HEADER_BYTES: usize = 13;

const FLAG_MNS: u8 = 0b01;
const FLAG_TECHNIQUE2: u8 = 0b10;

const LEVEL_ID_BITS: u32 = 2;
const MEAN_BITS: u32 = 8;
const SELECTION_BITS: u32 = 4;

fn stream_mode(mode: Mode) -> Result<bool, StreamError> {
    match mode {
        Mode::NoSearch => Ok(false),
        Mode::Mns => Ok(true),
        other => Err(StreamError::UnsupportedMode(other.name())),
    }
}

/// Bits one leaf occupies in the stream. `shared_id` marks a level-4 leaf
/// whose level id is implied by its quartet's first leaf.
pub fn leaf_bits(leaf: &LeafRecord, mns: bool, shared_id: bool) -> u32 {
    let id = if shared_id { 0 } else { LEVEL_ID_BITS };
    let phase = u32::from(mns && !leaf.level.is_last());
    let payload = match leaf.payload {
        Payload::Phase1 { .. } | Payload::Baseline { .. } => MEAN_BITS + ContrastCode::BITS,
        Payload::Phase2(_) => MEAN_BITS + 3 * leaf.level.delta_bits() + SELECTION_BITS,
    };
    id + phase + payload
}

/// Level-identification cost of a code: two bits per leaf, or with sharing
/// two bits per non-level-4 leaf plus two per level-4 quartet.
pub fn level_id_bit_count(code: &QuadtreeCode, technique2: bool) -> u64 {
    let leaves = code.leaves.len() as u64;
    if !technique2 {
        return 2 * leaves;
    }
    let level4 = code.leaf_counts()[3] as u64;
    2 * (leaves - level4 + level4 / 4)
}

/// Exact stream length in bits before the final byte padding.
pub fn stream_bit_len(code: &QuadtreeCode) -> Result<u64, StreamError> {
    let mns = stream_mode(code.mode)?;
    let mut bits = HEADER_BYTES as u64 * 8;
    let mut level4_seen = 0u64;
    for leaf in &code.leaves {
        let shared = code.technique2 && leaf.level.is_last() && !level4_seen.is_multiple_of(4);
        if leaf.level.is_last() {
            level4_seen += 1;
        }
        bits += u64::from(leaf_bits(leaf, mns, shared));
    }
    Ok(bits)
}

fn invalid(leaf: &LeafRecord, reason: &'static str) -> StreamError {
    StreamError::InvalidRecord {
        x: leaf.rect.x,
        y: leaf.rect.y,
        reason,
    }
}

fn dim(v: usize) -> Result<u16, StreamError> {
    u16::try_from(v).map_err(|_| StreamError::DimensionOverflow(v))
}

/// Serializes a no-search or mns code.
pub fn write_stream(code: &QuadtreeCode) -> Result<Vec<u8>, StreamError> {
    let mns = stream_mode(code.mode)?;
    code.validate_tiling()?;
    let mut w = BitWriter::new();
    w.write_bytes(MAGIC);
    let mut flags = 0;
    if mns {
        flags |= FLAG_MNS;
    }
    if code.technique2 {
        flags |= FLAG_TECHNIQUE2;
    }
    w.write_bits(u32::from(flags), 8);
    for v in [code.orig_w, code.orig_h, code.padded_w, code.padded_h] {
        w.write_bits(u32::from(dim(v)?), 16);
    }

    let mut level4_seen = 0u64;
    for leaf in &code.leaves {
        let last = leaf.level.is_last();
        let shared = code.technique2 && last && !level4_seen.is_multiple_of(4);
        if last {
            level4_seen += 1;
        }
        if !shared {
            w.write_bits(u32::from(leaf.level.get() - 1), LEVEL_ID_BITS);
        }
        let phase_bit = mns && !last;
        match leaf.payload {
            Payload::Phase1 { o, s } => {
                if phase_bit {
                    w.write_bit(false);
                }
                w.write_bits(u32::from(o), MEAN_BITS);
                w.write_bits(u32::from(s.get()), ContrastCode::BITS);
            }
            Payload::Phase2(sub) => {
                if !phase_bit {
                    return Err(invalid(leaf, "sub-block record outside mns levels 1-3"));
                }
                w.write_bit(true);
                w.write_bits(u32::from(sub.mean), MEAN_BITS);
                let width = leaf.level.delta_bits();
                for d in sub.deltas {
                    if d.abs() > leaf.level.max_delta() {
                        return Err(invalid(leaf, "mean offset exceeds its field width"));
                    }
                    w.write_bit(d < 0);
                    w.write_bits(u32::from(d.unsigned_abs()), width - 1);
                }
                for sel in sub.selections {
                    w.write_bit(sel);
                }
            }
            Payload::Baseline { .. } => return Err(invalid(leaf, "explicit-domain record in a quadtree stream")),
        }
    }
    debug_assert_eq!(Some(w.bit_len()), stream_bit_len(code).ok());
    Ok(w.finish())
}

struct LeafReader<'a> {
    r: BitReader<'a>,
    mns: bool,
    technique2: bool,
    leaves: Vec<LeafRecord>,
    /// A level id read ahead of the node that owns it.
    pending: Option<Level>,
}

impl LeafReader<'_> {
    fn next_level(&mut self) -> Result<Level, StreamError> {
        if let Some(level) = self.pending {
            return Ok(level);
        }
        let id = self.r.read_bits(LEVEL_ID_BITS)? as u8;
        let level = Level::new(id + 1).expect("2-bit id is always a level");
        self.pending = Some(level);
        Ok(level)
    }

    fn node(&mut self, rect: BlockRect, level: Level, implied: bool) -> Result<(), StreamError> {
        if !implied {
            let found = self.next_level()?;
            if found < level {
                return Err(StreamError::DepthMismatch {
                    x: rect.x,
                    y: rect.y,
                    found: found.get(),
                    parent: level.get(),
                });
            }
            if found > level {
                let child = level.child().expect("found > level implies level < 4");
                for (i, q) in rect.quadrants().into_iter().enumerate() {
                    let implied = self.technique2 && child.is_last() && i > 0;
                    self.node(q, child, implied)?;
                }
                return Ok(());
            }
            self.pending = None;
        }
        let payload = self.payload(level)?;
        self.leaves.push(LeafRecord { rect, level, payload });
        Ok(())
    }

    fn payload(&mut self, level: Level) -> Result<Payload, StreamError> {
        let sub_block = self.mns && !level.is_last() && self.r.read_bit()?;
        let mean = self.r.read_u8()?;
        if !sub_block {
            let s = ContrastCode::new(self.r.read_bits(ContrastCode::BITS)? as u8).expect("3-bit code");
            return Ok(Payload::Phase1 { o: mean, s });
        }
        let width = level.delta_bits();
        let mut deltas = [0i16; 3];
        for d in &mut deltas {
            let negative = self.r.read_bit()?;
            let magnitude = self.r.read_bits(width - 1)? as i16;
            if negative && magnitude == 0 {
                return Err(StreamError::NegativeZeroDelta);
            }
            *d = if negative { -magnitude } else { magnitude };
        }
        let mut selections = [false; 4];
        for sel in &mut selections {
            *sel = self.r.read_bit()?;
        }
        Ok(Payload::Phase2(SubBlockCode {
            mean,
            deltas,
            selections,
        }))
    }
}

/// Parses a stream produced by [`write_stream`].
pub fn read_stream(bytes: &[u8]) -> Result<QuadtreeCode, StreamError> {
    if bytes.len() < MAGIC.len() {
        return Err(if MAGIC.starts_with(bytes) {
            StreamError::Truncated
        } else {
            StreamError::BadMagic
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(StreamError::BadMagic);
    }
    let mut r = BitReader::new(bytes);
    r.read_bits(32)?;
    let flags = r.read_u8()?;
    if flags & !(FLAG_MNS | FLAG_TECHNIQUE2) != 0 {
        return Err(StreamError::BadFlags(flags));
    }
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = usize::from(r.read_u16()?);
    }
    let [orig_w, orig_h, padded_w, padded_h] = dims;
    if orig_w == 0 || orig_h == 0 || padded_dims(orig_w, orig_h) != (padded_w, padded_h) {
        return Err(StreamError::BadDimensions {
            orig_w,
            orig_h,
            padded_w,
            padded_h,
        });
    }
    let mns = flags & FLAG_MNS != 0;
    let technique2 = flags & FLAG_TECHNIQUE2 != 0;

    let mut reader = LeafReader {
        r,
        mns,
        technique2,
        leaves: Vec::new(),
        pending: None,
    };
    for root in root_rects(padded_w, padded_h) {
        reader.node(root, Level::ONE, false)?;
    }
    let LeafReader { mut r, leaves, .. } = reader;

    let remaining = r.total_bits() - r.position();
    if remaining >= 8 {
        return Err(StreamError::TrailingData((remaining / 8) as usize));
    }
    if r.read_bits(remaining as u32)? != 0 {
        return Err(StreamError::NonZeroPadding);
    }
    Ok(QuadtreeCode {
        leaves,
        padded_w,
        padded_h,
        orig_w,
        orig_h,
        mode: if mns { Mode::Mns } else { Mode::NoSearch },
        technique2,
    })
}
