//! In-memory representation of an encoded image: one record per quadtree
//! leaf, in depth-first order.

use std::fmt;

use crate::error::StreamError;
use crate::image::BlockRect;
use crate::transform::ContrastCode;

/// Side of the quadtree roots. Levels 1..=4 use 16, 8, 4 and 2 pixel blocks.
pub const ROOT_SIZE: usize = 16;

/// Two-value contrast sets used by sub-block coding at levels 1, 2 and 3.
pub const CONTRAST_SETS: [[f64; 2]; 3] = [[0.2, 0.5], [0.4, 0.65], [0.5, 0.9]];

/// Quadtree depth, 1 (16x16 blocks) through 4 (2x2 blocks).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Level(u8);

impl Level {
    pub const ONE: Level = Level(1);
    pub const FOUR: Level = Level(4);

    pub fn new(level: u8) -> Option<Self> {
        (1..=4).contains(&level).then_some(Self(level))
    }

    pub fn from_block_size(size: usize) -> Option<Self> {
        match size {
            16 => Some(Level(1)),
            8 => Some(Level(2)),
            4 => Some(Level(3)),
            2 => Some(Level(4)),
            _ => None,
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn block_size(self) -> usize {
        ROOT_SIZE >> (self.0 - 1)
    }

    pub fn is_last(self) -> bool {
        self.0 == 4
    }

    pub fn child(self) -> Option<Level> {
        Level::new(self.0 + 1)
    }

    /// Total width of the three stored sub-block mean offsets' fields,
    /// sign bit included: 5 bits at level 1, 6 at levels 2 and 3.
    pub fn delta_bits(self) -> u32 {
        if self.0 == 1 {
            5
        } else {
            6
        }
    }

    pub fn max_delta(self) -> i16 {
        (1 << (self.delta_bits() - 1)) - 1
    }

    /// The sub-block contrast pair, absent at level 4.
    pub fn contrast_set(self) -> Option<[f64; 2]> {
        CONTRAST_SETS.get(self.index()).copied()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    NoSearch,
    Mns,
    LocalSearch,
    FullSearch,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::NoSearch => "ns",
            Mode::Mns => "mns",
            Mode::LocalSearch => "local",
            Mode::FullSearch => "full",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ns" | "no_search" | "nosearch" => Ok(Mode::NoSearch),
            "mns" => Ok(Mode::Mns),
            "local" | "local_search" => Ok(Mode::LocalSearch),
            "full" | "full_search" => Ok(Mode::FullSearch),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// Sub-block coded payload: the block mean, three sub-block mean offsets
/// and one contrast selection bit per quadrant (TL, TR, BL, BR).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SubBlockCode {
    pub mean: u8,
    pub deltas: [i16; 3],
    /// `false` picks the first value of the level's contrast set.
    pub selections: [bool; 4],
}

impl SubBlockCode {
    /// Quadrant means implied by the stored fields. The fourth follows from
    /// the four quadrant means averaging to the block mean.
    pub fn quadrant_means(&self) -> [i32; 4] {
        let m = i32::from(self.mean);
        let [d1, d2, d3] = self.deltas.map(i32::from);
        [m + d1, m + d2, m + d3, m - d1 - d2 - d3]
    }

    pub fn contrasts(&self, level: Level) -> Option<[f64; 4]> {
        let set = level.contrast_set()?;
        Some(self.selections.map(|b| set[usize::from(b)]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Payload {
    /// Co-centered domain with a 3-bit contrast and the block mean.
    Phase1 {
        o: u8,
        s: ContrastCode,
    },
    Phase2(SubBlockCode),
    /// Explicit domain, produced by the search baselines.
    Baseline {
        domain: BlockRect,
        o: u8,
        s: ContrastCode,
    },
}

impl Payload {
    pub fn is_phase2(&self) -> bool {
        matches!(self, Payload::Phase2(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LeafRecord {
    pub rect: BlockRect,
    pub level: Level,
    pub payload: Payload,
}

/// A complete encoding of one image.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadtreeCode {
    pub leaves: Vec<LeafRecord>,
    pub padded_w: usize,
    pub padded_h: usize,
    pub orig_w: usize,
    pub orig_h: usize,
    pub mode: Mode,
    pub technique2: bool,
}

impl QuadtreeCode {
    /// Leaves per level, index 0 is level 1.
    pub fn leaf_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for leaf in &self.leaves {
            counts[leaf.level.index()] += 1;
        }
        counts
    }

    pub fn phase2_count(&self) -> usize {
        self.leaves.iter().filter(|l| l.payload.is_phase2()).count()
    }

    /// Checks the padded size and that the leaves tile it in depth-first order.
    pub fn validate_tiling(&self) -> Result<(), StreamError> {
        if self.orig_w == 0
            || self.orig_h == 0
            || padded_dims(self.orig_w, self.orig_h) != (self.padded_w, self.padded_h)
        {
            return Err(StreamError::BadDimensions {
                orig_w: self.orig_w,
                orig_h: self.orig_h,
                padded_w: self.padded_w,
                padded_h: self.padded_h,
            });
        }
        let mut next = 0;
        for root in root_rects(self.padded_w, self.padded_h) {
            self.check_node(root, Level::ONE, &mut next)?;
        }
        if next != self.leaves.len() {
            return Err(StreamError::InvalidRecord {
                x: self.leaves[next].rect.x,
                y: self.leaves[next].rect.y,
                reason: "leaf lies outside the padded raster",
            });
        }
        Ok(())
    }

    fn check_node(&self, rect: BlockRect, level: Level, next: &mut usize) -> Result<(), StreamError> {
        let Some(leaf) = self.leaves.get(*next) else {
            return Err(StreamError::InvalidRecord {
                x: rect.x,
                y: rect.y,
                reason: "raster not fully covered",
            });
        };
        if leaf.level == level {
            if leaf.rect != rect {
                return Err(StreamError::InvalidRecord {
                    x: leaf.rect.x,
                    y: leaf.rect.y,
                    reason: "leaf out of depth-first order",
                });
            }
            *next += 1;
            return Ok(());
        }
        match level.child() {
            Some(child) if leaf.level > level => {
                for quadrant in rect.quadrants() {
                    self.check_node(quadrant, child, next)?;
                }
                Ok(())
            }
            _ => Err(StreamError::DepthMismatch {
                x: rect.x,
                y: rect.y,
                found: leaf.level.get(),
                parent: level.get(),
            }),
        }
    }
}

/// Root blocks of a padded raster in raster order.
pub fn root_rects(padded_w: usize, padded_h: usize) -> impl Iterator<Item = BlockRect> {
    (0..padded_h / ROOT_SIZE).flat_map(move |by| {
        (0..padded_w / ROOT_SIZE).map(move |bx| BlockRect::new(bx * ROOT_SIZE, by * ROOT_SIZE, ROOT_SIZE))
    })
}

/// Every block of `level` in depth-first order (roots in raster order,
/// children TL, TR, BL, BR).
pub fn fixed_partition(padded_w: usize, padded_h: usize, level: Level) -> Vec<BlockRect> {
    fn descend(rect: BlockRect, target: usize, out: &mut Vec<BlockRect>) {
        if rect.size == target {
            out.push(rect);
        } else {
            for q in rect.quadrants() {
                descend(q, target, out);
            }
        }
    }
    let mut out = Vec::new();
    for root in root_rects(padded_w, padded_h) {
        descend(root, level.block_size(), &mut out);
    }
    out
}

/// Codec raster size for an image: dimensions rounded up to a multiple of
/// the root size, and at least two roots wide and tall so every level-1
/// block has a co-centered domain.
pub fn padded_dims(width: usize, height: usize) -> (usize, usize) {
    let up = |v: usize| (v.div_ceil(ROOT_SIZE) * ROOT_SIZE).max(2 * ROOT_SIZE);
    (up(width), up(height))
}
