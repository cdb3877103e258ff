//! Bit-packed lattices and per-cell radius fields.
//!
//! Cells are stored LSB-first: cell `k` of a row lives in bit `k % 64` of
//! word `k / 64`. Padding bits past the row width are always zero.

use std::fmt;
use std::sync::Arc;

use xxhash_rust::xxh3::xxh3_128;

/// How neighbor indices outside the lattice are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    /// Torus.
    #[default]
    Periodic,
    /// Cells outside the lattice are permanently dead.
    FixedZero,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::FixedZero => "fixed-zero",
        })
    }
}

#[inline]
pub(crate) fn words_for(width: usize) -> usize {
    width.div_ceil(64)
}

/// Mask of valid bits in word `i` of a row of `width` cells.
#[inline]
pub(crate) fn word_mask(i: usize, width: usize) -> u64 {
    let start = i * 64;
    let valid = width.saturating_sub(start).min(64);
    if valid == 64 {
        !0
    } else {
        (1u64 << valid) - 1
    }
}

#[inline]
pub(crate) fn get_bit(words: &[u64], k: usize) -> bool {
    words[k / 64] >> (k % 64) & 1 == 1
}

#[inline]
pub(crate) fn set_bit(words: &mut [u64], k: usize, value: bool) {
    let bit = 1u64 << (k % 64);
    if value {
        words[k / 64] |= bit;
    } else {
        words[k / 64] &= !bit;
    }
}

/// Word `i` of the row whose bit `k` is cell `k - 1`.
#[inline(always)]
pub(crate) fn west_word(row: &[u64], i: usize, width: usize, periodic: bool) -> u64 {
    let carry = if i > 0 {
        row[i - 1] >> 63
    } else if periodic {
        get_bit(row, width - 1) as u64
    } else {
        0
    };
    ((row[i] << 1) | carry) & word_mask(i, width)
}

/// Word `i` of the row whose bit `k` is cell `k + 1`.
#[inline(always)]
pub(crate) fn east_word(row: &[u64], i: usize, width: usize, periodic: bool) -> u64 {
    let mut w = row[i] >> 1;
    if i + 1 < row.len() {
        w |= row[i + 1] << 63;
    } else if periodic {
        w |= (row[0] & 1) << ((width - 1) % 64);
    }
    w
}

/// Common read-only view used by the analysis and rendering code.
pub trait Lattice {
    fn cell_count(&self) -> usize;
    fn population(&self) -> usize;
    /// Number of cells whose state differs. Both lattices must share
    /// dimensions.
    fn hamming(&self, other: &Self) -> usize;
    /// 128-bit content digest over dimensions and cell states.
    fn digest(&self) -> u128;
}

fn digest_words(dims: [u64; 2], words: &[u64]) -> u128 {
    let mut bytes = Vec::with_capacity(16 + words.len() * 8);
    bytes.extend_from_slice(&dims[0].to_le_bytes());
    bytes.extend_from_slice(&dims[1].to_le_bytes());
    for w in words {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    xxh3_128(&bytes)
}

/// A one-dimensional binary lattice.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Grid1D {
    width: usize,
    boundary: Boundary,
    words: Vec<u64>,
}

impl Grid1D {
    /// All-dead lattice.
    ///
    /// # Panics
    /// If `width == 0`.
    pub fn new(width: usize, boundary: Boundary) -> Self {
        assert!(width >= 1, "grid width must be at least 1");
        Grid1D {
            width,
            boundary,
            words: vec![0; words_for(width)],
        }
    }

    pub fn from_cells(cells: &[bool], boundary: Boundary) -> Self {
        let mut g = Grid1D::new(cells.len(), boundary);
        for (k, &c) in cells.iter().enumerate() {
            g.set(k, c);
        }
        g
    }

    /// Parses a string of `0`/`1` (or `.`/`o`) characters.
    pub fn from_str_cells(s: &str, boundary: Boundary) -> Self {
        let cells: Vec<bool> = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| matches!(c, '1' | 'o' | 'O' | '*'))
            .collect();
        Grid1D::from_cells(&cells, boundary)
    }

    /// One live cell at index `width / 2`.
    pub fn single_seed(width: usize, boundary: Boundary) -> Self {
        let mut g = Grid1D::new(width, boundary);
        g.set(width / 2, true);
        g
    }

    pub(crate) fn from_words(width: usize, boundary: Boundary, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), words_for(width));
        Grid1D {
            width,
            boundary,
            words,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, k: usize) -> bool {
        get_bit(&self.words, k)
    }

    pub fn set(&mut self, k: usize, value: bool) {
        assert!(k < self.width, "cell {k} outside width {}", self.width);
        set_bit(&mut self.words, k, value)
    }

    /// Reads cell `k`, resolving out-of-range indices by the boundary policy.
    pub fn get_wrapped(&self, k: isize) -> bool {
        let w = self.width as isize;
        match self.boundary {
            Boundary::Periodic => self.get(k.rem_euclid(w) as usize),
            Boundary::FixedZero => (0..w).contains(&k) && self.get(k as usize),
        }
    }

    pub fn cells(&self) -> Vec<bool> {
        (0..self.width).map(|k| self.get(k)).collect()
    }
}

impl Lattice for Grid1D {
    fn cell_count(&self) -> usize {
        self.width
    }

    fn population(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn hamming(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    fn digest(&self) -> u128 {
        digest_words([self.width as u64, 1], &self.words)
    }
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.width)
            .map(|k| if self.get(k) { '1' } else { '0' })
            .collect();
        write!(f, "Grid1D({}, {s})", self.boundary)
    }
}

/// Per-cell perception radius for heterogeneous lattices.
#[derive(Clone, PartialEq, Eq)]
pub struct RadiusField {
    width: usize,
    height: usize,
    radii: Vec<u8>,
    max: u32,
    // level_masks[m - 1] marks cells with radius m, packed like a grid
    level_masks: Vec<Vec<u64>>,
}

impl RadiusField {
    /// Row-major radii; every entry must be in `1..=255`.
    pub fn from_radii(width: usize, height: usize, radii: Vec<u32>) -> Option<Self> {
        if width == 0 || height == 0 || radii.len() != width * height {
            return None;
        }
        if radii.iter().any(|&r| r == 0 || r > u8::MAX as u32) {
            return None;
        }
        let radii: Vec<u8> = radii.into_iter().map(|r| r as u8).collect();
        let max = radii.iter().copied().max().unwrap_or(1) as u32;
        let stride = words_for(width);
        let mut level_masks = vec![vec![0u64; stride * height]; max as usize];
        for row in 0..height {
            for col in 0..width {
                let r = radii[row * width + col] as usize;
                set_bit(
                    &mut level_masks[r - 1][row * stride..(row + 1) * stride],
                    col,
                    true,
                );
            }
        }
        Some(RadiusField {
            width,
            height,
            radii,
            max,
            level_masks,
        })
    }

    pub fn uniform(width: usize, height: usize, radius: u32) -> Option<Self> {
        RadiusField::from_radii(width, height, vec![radius; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.radii[row * self.width + col] as u32
    }

    pub fn max_radius(&self) -> u32 {
        self.max
    }

    pub fn min_radius(&self) -> u32 {
        self.radii.iter().copied().min().unwrap_or(1) as u32
    }

    /// Packed mask of cells whose radius equals `level`; empty slice when no
    /// cell has that radius.
    pub(crate) fn level_mask(&self, level: u32) -> Option<&[u64]> {
        self.level_masks.get(level as usize - 1).map(Vec::as_slice)
    }
}

impl fmt::Debug for RadiusField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadiusField")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("min", &self.min_radius())
            .field("max", &self.max)
            .finish()
    }
}

/// A two-dimensional binary lattice, optionally carrying a radius field.
#[derive(Clone)]
pub struct Grid2D {
    width: usize,
    height: usize,
    stride: usize,
    boundary: Boundary,
    words: Vec<u64>,
    radius_field: Option<Arc<RadiusField>>,
}

impl Grid2D {
    /// # Panics
    /// If either dimension is zero.
    pub fn new(width: usize, height: usize, boundary: Boundary) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "grid dimensions must be at least 1x1"
        );
        let stride = words_for(width);
        Grid2D {
            width,
            height,
            stride,
            boundary,
            words: vec![0; stride * height],
            radius_field: None,
        }
    }

    /// Rows of `.`/`o` (or `0`/`1`) characters; rows shorter than the widest
    /// are padded with dead cells.
    pub fn from_rows(rows: &[&str], boundary: Boundary) -> Self {
        let width = rows
            .iter()
            .map(|r| r.chars().count())
            .max()
            .unwrap_or(1)
            .max(1);
        let mut g = Grid2D::new(width, rows.len().max(1), boundary);
        for (y, row) in rows.iter().enumerate() {
            for (x, ch) in row.chars().enumerate() {
                g.set(y, x, matches!(ch, 'o' | 'O' | '1' | '*' | '#'));
            }
        }
        g
    }

    pub(crate) fn from_parts(template: &Grid2D, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), template.words.len());
        Grid2D {
            words,
            ..template.clone_shape()
        }
    }

    fn clone_shape(&self) -> Grid2D {
        Grid2D {
            width: self.width,
            height: self.height,
            stride: self.stride,
            boundary: self.boundary,
            words: Vec::new(),
            radius_field: self.radius_field.clone(),
        }
    }

    /// Attaches a radius field. Returns `None` on a dimension mismatch.
    pub fn with_radius_field(mut self, field: Arc<RadiusField>) -> Option<Self> {
        if field.width() != self.width || field.height() != self.height {
            return None;
        }
        self.radius_field = Some(field);
        Some(self)
    }

    pub fn without_radius_field(mut self) -> Self {
        self.radius_field = None;
        self
    }

    pub fn radius_field(&self) -> Option<&Arc<RadiusField>> {
        self.radius_field.as_ref()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub(crate) fn stride(&self) -> usize {
        self.stride
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.words[row * self.stride..(row + 1) * self.stride]
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        get_bit(self.row_words(row), col)
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        assert!(
            row < self.height && col < self.width,
            "cell ({row},{col}) outside grid"
        );
        let s = self.stride;
        set_bit(&mut self.words[row * s..(row + 1) * s], col, value)
    }

    /// Reads a cell, resolving out-of-range coordinates by the boundary
    /// policy.
    pub fn get_wrapped(&self, row: isize, col: isize) -> bool {
        let (h, w) = (self.height as isize, self.width as isize);
        match self.boundary {
            Boundary::Periodic => self.get(row.rem_euclid(h) as usize, col.rem_euclid(w) as usize),
            Boundary::FixedZero => {
                (0..h).contains(&row)
                    && (0..w).contains(&col)
                    && self.get(row as usize, col as usize)
            }
        }
    }

    /// Live cells as `(row, col)`, row-major.
    pub fn live_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for row in 0..self.height {
            for (i, &w) in self.row_words(row).iter().enumerate() {
                let mut bits = w;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    out.push((row, i * 64 + b));
                    bits &= bits - 1;
                }
            }
        }
        out
    }
}

impl PartialEq for Grid2D {
    /// Compares dimensions, boundary and cells; the radius field is not part
    /// of the cell state.
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.boundary == other.boundary
            && self.words == other.words
    }
}

impl Eq for Grid2D {}

impl Lattice for Grid2D {
    fn cell_count(&self) -> usize {
        self.width * self.height
    }

    fn population(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn hamming(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    fn digest(&self) -> u128 {
        digest_words([self.width as u64, self.height as u64], &self.words)
    }
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "Grid2D {}x{} ({})",
            self.width, self.height, self.boundary
        )?;
        for row in 0..self.height {
            let s: String = (0..self.width)
                .map(|c| if self.get(row, c) { 'o' } else { '.' })
                .collect();
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}
