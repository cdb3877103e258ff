//! Flattening extended elementary rules into `(2R+1)`-cell lookup tables.
//!
//! Window bit order: the most significant of the `2R+1` bits is the leftmost
//! cell, so the radius-1 table is the Wolfram truth table itself.
//!
//! Table file layout (all integers little-endian):
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `RENW`                  |
//! | 4      | 2    | version (1)                   |
//! | 6      | 2    | radius R                      |
//! | 8      | 4    | base Wolfram number           |
//! | 12     | 4    | reserved (0)                  |
//! | 16     | n    | table bits, bit `w` of byte `w / 8` at position `w % 8` |
//! | 16 + n | 16   | fingerprint (u128)            |

use rayon::prelude::*;
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_128;

use crate::engine::{step_eca_extended, Automaton, EngineError, Perception};
use crate::grid::{get_bit, word_mask, Boundary, Grid1D};
use crate::rule::EcaRule;

/// Largest radius the compiler accepts (`2^25` bits, 4 MiB).
pub const MAX_COMPILED_RADIUS: u32 = 12;

pub const TABLE_MAGIC: &[u8; 4] = b"RENW";
pub const TABLE_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error(
        "radius {radius} exceeds the compiled-table cap of {max}; step with the layered engine instead"
    )]
    Capacity { radius: u32, max: u32 },
    #[error("radius must be at least 1")]
    ZeroRadius,
    #[error("cannot widen a radius-{from} table to radius {to}")]
    Narrowing { from: u32, to: u32 },
    #[error("malformed table file: {0}")]
    Format(String),
}

/// Explicit lookup table of an extended elementary rule.
#[derive(Clone, PartialEq, Eq)]
pub struct WideRuleTable {
    radius: u32,
    base: EcaRule,
    bits: Vec<u64>,
}

impl std::fmt::Debug for WideRuleTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "WideRuleTable({}R{}, {} entries)",
            self.base,
            self.radius,
            self.len()
        )
    }
}

fn entries_for(radius: u32) -> usize {
    1usize << (2 * radius + 1)
}

fn check_radius(radius: u32) -> Result<(), CompileError> {
    match radius {
        0 => Err(CompileError::ZeroRadius),
        r if r > MAX_COMPILED_RADIUS => Err(CompileError::Capacity {
            radius: r,
            max: MAX_COMPILED_RADIUS,
        }),
        _ => Ok(()),
    }
}

fn build_bits(entries: usize, entry: impl Fn(usize) -> bool + Sync) -> Vec<u64> {
    let words = entries.div_ceil(64);
    let fill = |q: usize| {
        let mut w = 0u64;
        for b in 0..64.min(entries - q * 64) {
            w |= (entry(q * 64 + b) as u64) << b;
        }
        w
    };
    if words >= 1024 {
        (0..words).into_par_iter().map(fill).collect()
    } else {
        (0..words).map(fill).collect()
    }
}

impl WideRuleTable {
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn base(&self) -> EcaRule {
        self.base
    }

    /// Number of windows, `2^(2R+1)`.
    pub fn len(&self) -> usize {
        entries_for(self.radius)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Output for a window, leftmost cell in the most significant bit.
    #[inline]
    pub fn get(&self, window: usize) -> bool {
        get_bit(&self.bits, window)
    }

    /// Re-expresses the table at a larger radius by ignoring the extra
    /// border cells.
    pub fn widen(&self, radius: u32) -> Result<WideRuleTable, CompileError> {
        check_radius(radius)?;
        if radius < self.radius {
            return Err(CompileError::Narrowing {
                from: self.radius,
                to: radius,
            });
        }
        let drop = (radius - self.radius) as usize;
        let mask = self.len() - 1;
        let bits = build_bits(entries_for(radius), |w| self.get((w >> drop) & mask));
        Ok(WideRuleTable {
            radius,
            base: self.base,
            bits,
        })
    }

    /// Whether two tables define the same map once the smaller is widened to
    /// the larger radius.
    pub fn semantically_equal(&self, other: &WideRuleTable) -> bool {
        let (small, large) = if self.radius <= other.radius {
            (self, other)
        } else {
            (other, self)
        };
        match small.widen(large.radius) {
            Ok(w) => w.bits == large.bits,
            Err(_) => false,
        }
    }

    fn packed_bytes(&self) -> Vec<u8> {
        let n = self.len().div_ceil(8);
        self.bits
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(n)
            .collect()
    }

    /// Serializes to the `RENW` file layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.len() / 8);
        out.extend_from_slice(TABLE_MAGIC);
        out.extend_from_slice(&TABLE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.radius as u16).to_le_bytes());
        out.extend_from_slice(&(self.base.wolfram_number() as u32).to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&self.packed_bytes());
        out.extend_from_slice(&table_fingerprint(self).to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<WideRuleTable, CompileError> {
        let fmt = |m: &str| CompileError::Format(m.to_string());
        if bytes.len() < 32 {
            return Err(fmt("file shorter than header and digest"));
        }
        if &bytes[0..4] != TABLE_MAGIC {
            return Err(fmt("bad magic"));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u16_at(4);
        if version != TABLE_VERSION {
            return Err(CompileError::Format(format!(
                "unsupported version {version}"
            )));
        }
        let radius = u16_at(6) as u32;
        check_radius(radius)?;
        let base = u32_at(8);
        if base > 255 {
            return Err(CompileError::Format(format!(
                "base rule {base} out of range"
            )));
        }
        let n = entries_for(radius).div_ceil(8);
        if bytes.len() != 16 + n + 16 {
            return Err(CompileError::Format(format!(
                "expected {} bytes for radius {radius}, found {}",
                32 + n,
                bytes.len()
            )));
        }
        let payload = &bytes[16..16 + n];
        let mut bits = vec![0u64; entries_for(radius).div_ceil(64)];
        for (i, &b) in payload.iter().enumerate() {
            bits[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        let table = WideRuleTable {
            radius,
            base: EcaRule::new(base as u8),
            bits,
        };
        let stored = u128::from_le_bytes(bytes[16 + n..].try_into().unwrap());
        if stored != table_fingerprint(&table) {
            return Err(fmt("fingerprint mismatch"));
        }
        Ok(table)
    }
}

/// Compiles `rule` at radius `radius` into an explicit table.
///
/// The level-`m` table follows from the level-`m-1` table: the two
/// neighbor estimates of a `(2m+1)`-cell window are the level-`m-1` outputs
/// on its left and right `(2m-1)`-cell sub-windows.
pub fn compile_extended_eca(rule: EcaRule, radius: u32) -> Result<WideRuleTable, CompileError> {
    check_radius(radius)?;
    let mut table = WideRuleTable {
        radius: 1,
        base: rule,
        bits: vec![rule.wolfram_number() as u64],
    };
    for m in 2..=radius {
        let prev = &table;
        let inner = (1usize << (2 * m - 1)) - 1;
        let bits = build_bits(entries_for(m), |w| {
            let left = prev.get(w >> 2);
            let right = prev.get(w & inner);
            let center = (w >> m) & 1 == 1;
            rule.apply(left, center, right)
        });
        table = WideRuleTable {
            radius: m,
            base: rule,
            bits,
        };
    }
    Ok(table)
}

/// 128-bit digest over the radius (u16 LE) followed by the packed table.
pub fn table_fingerprint(table: &WideRuleTable) -> u128 {
    let mut bytes = (table.radius as u16).to_le_bytes().to_vec();
    bytes.extend_from_slice(&table.packed_bytes());
    xxh3_128(&bytes)
}

const APPLY_TILE_WORDS: usize = 256;

/// Largest multi-cell lookup a [`TableStepper`] builds, in one-byte entries.
/// Wider tables are read bit by bit.
const STEPPER_MAX_ENTRIES: usize = 1 << 20;
const STEPPER_MAX_CELLS: usize = 8;

/// A table re-indexed for stepping. Keys hold input cells in natural order
/// (LSB = leftmost), so windows can be cut straight out of the packed grid.
/// Narrow tables are widened to answer `k` adjacent cells per lookup.
#[derive(Debug, Clone)]
pub struct TableStepper {
    table: WideRuleTable,
    cells_per_lookup: usize,
    lut: Lut,
}

#[derive(Debug, Clone)]
enum Lut {
    /// Bit `j` of entry `key` is the output of cell `j`.
    Cells(Box<[u8]>),
    /// One bit per window.
    Bits(Vec<u64>),
}

fn reverse_bits(x: usize, n: usize) -> usize {
    x.reverse_bits() >> (usize::BITS as usize - n)
}

impl TableStepper {
    pub fn new(table: &WideRuleTable) -> Self {
        let span = 2 * table.radius as usize + 1;
        let mask = (1usize << span) - 1;
        let natural = |key: usize| table.get(reverse_bits(key & mask, span));
        let mut k = 1;
        while k < STEPPER_MAX_CELLS && 1usize << (span + k) <= STEPPER_MAX_ENTRIES {
            k += 1;
        }
        let (lut, k) = if 1usize << span > STEPPER_MAX_ENTRIES {
            (Lut::Bits(build_bits(1 << span, natural)), 1)
        } else {
            let entry =
                |key: usize| (0..k).fold(0u8, |acc, j| acc | (natural(key >> j) as u8) << j);
            let n = 1usize << (span + k - 1);
            let cells: Vec<u8> = if n >= 1 << 16 {
                (0..n).into_par_iter().map(entry).collect()
            } else {
                (0..n).map(entry).collect()
            };
            (Lut::Cells(cells.into_boxed_slice()), k)
        };
        TableStepper {
            table: table.clone(),
            cells_per_lookup: k,
            lut,
        }
    }

    pub fn table(&self) -> &WideRuleTable {
        &self.table
    }

    /// Next state of `grid`.
    ///
    /// A table describes an unbounded line, so under [`Boundary::FixedZero`]
    /// (where estimates outside the lattice are dead) the `R` cells at each
    /// end are recomputed with the layered engine.
    pub fn step(&self, grid: &Grid1D) -> Grid1D {
        let table = &self.table;
        let width = grid.width();
        let r = table.radius as usize;
        let layered = |g: &Grid1D| {
            step_eca_extended(g, table.base, &Perception::Uniform(table.radius))
                .expect("compiled radius is within the engine limit")
        };
        if grid.boundary() == Boundary::FixedZero && width <= 4 * r {
            return layered(grid);
        }
        let span = 2 * r + 1;
        let k = self.cells_per_lookup;
        let key_bits = span + k - 1;
        let key_mask = (1u64 << key_bits) - 1;

        // cells -R..width+R, with out-of-range cells resolved by the
        // boundary, then zero padding so whole words can be read past the end
        let n_words = grid.words().len();
        let mut ext = vec![0u64; (n_words * 64 + 2 * r + k).div_ceil(64) + 2];
        let mut put = |dst: usize, src: isize| {
            if grid.get_wrapped(src) {
                ext[dst / 64] |= 1 << (dst % 64);
            }
        };
        for j in 0..r {
            put(j, j as isize - r as isize);
            put(r + width + j, (width + j) as isize);
        }
        for (i, &w) in grid.words().iter().enumerate() {
            let pos = r + i * 64;
            let (q, s) = (pos / 64, pos % 64);
            ext[q] |= w << s;
            if s != 0 {
                ext[q + 1] |= w >> (64 - s);
            }
        }
        // the window of cell i starts at ext bit i, so word wi only needs
        // ext words wi and wi + 1
        let cells_word: fn(u128, u64, &[u8]) -> u64 = match k {
            1 => cells_word::<1>,
            2 => cells_word::<2>,
            3 => cells_word::<3>,
            4 => cells_word::<4>,
            5 => cells_word::<5>,
            6 => cells_word::<6>,
            7 => cells_word::<7>,
            _ => cells_word::<8>,
        };
        let word_at = |wi: usize| -> u64 {
            let pair = ext[wi] as u128 | (ext[wi + 1] as u128) << 64;
            let mut word = 0u64;
            match &self.lut {
                Lut::Cells(cells) => word = cells_word(pair, key_mask, cells),
                Lut::Bits(bits) => {
                    for b in 0..64 {
                        let key = ((pair >> b) as u64 & key_mask) as usize;
                        word |= ((bits[key / 64] >> (key % 64)) & 1) << b;
                    }
                }
            }
            word & word_mask(wi, width)
        };
        let out: Vec<u64> = if n_words >= 4 * APPLY_TILE_WORDS {
            (0..n_words)
                .into_par_iter()
                .with_min_len(APPLY_TILE_WORDS)
                .map(word_at)
                .collect()
        } else {
            (0..n_words).map(word_at).collect()
        };
        let mut next = Grid1D::from_words(width, grid.boundary(), out);
        if grid.boundary() == Boundary::FixedZero {
            // a cell < R from an edge only sees the first 2R cells; a 3R-cell
            // slice keeps the cut's influence out of its cone
            let slice = 3 * r;
            let head: Vec<bool> = (0..slice).map(|k| grid.get(k)).collect();
            let tail: Vec<bool> = (width - slice..width).map(|k| grid.get(k)).collect();
            let head = layered(&Grid1D::from_cells(&head, Boundary::FixedZero));
            let tail = layered(&Grid1D::from_cells(&tail, Boundary::FixedZero));
            for j in 0..r {
                next.set(j, head.get(j));
                next.set(width - 1 - j, tail.get(slice - 1 - j));
            }
        }
        next
    }
}

impl Automaton for TableStepper {
    type State = Grid1D;

    fn step(&self, state: &Grid1D) -> Result<Grid1D, EngineError> {
        Ok(TableStepper::step(self, state))
    }

    fn max_radius(&self) -> u32 {
        self.table.radius
    }

    fn label(&self) -> String {
        format!("{}R{} (table)", self.table.base, self.table.radius)
    }
}

/// 64 output cells from `K`-cell lookups; `pair` holds the input bits
/// starting at the word's first window.
#[inline(always)]
fn cells_word<const K: usize>(pair: u128, key_mask: u64, cells: &[u8]) -> u64 {
    let mut word = 0u64;
    let mut b = 0;
    while b < 64 {
        let key = ((pair >> b) as u64 & key_mask) as usize;
        word |= (cells[key] as u64) << b;
        b += K;
    }
    word
}

/// Steps a grid through the table once. Build a [`TableStepper`] to reuse
/// the expanded lookup across many steps.
pub fn apply_table(table: &WideRuleTable, grid: &Grid1D) -> Grid1D {
    TableStepper::new(table).step(grid)
}

/// A grid holding one window, leftmost cell first.
pub fn window_grid(window: usize, radius: u32) -> Grid1D {
    let span = 2 * radius as usize + 1;
    let cells: Vec<bool> = (0..span)
        .map(|j| window >> (span - 1 - j) & 1 == 1)
        .collect();
    Grid1D::from_cells(&cells, Boundary::FixedZero)
}
