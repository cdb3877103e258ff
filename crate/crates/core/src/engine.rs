//! Recursive estimation of neighbors, evaluated layer by layer.
//!
//! A cell with perception radius `R` estimates the next states of its
//! neighbors by applying the base rule recursively with radius `R - 1`,
//! `R - 2`, ... down to `0`, where an estimate is just the current state.
//! Every estimate at level `m` uses the *actual* current state as the
//! center argument and level `m - 1` estimates as the neighbors, so all
//! cells share the same estimation layers:
//!
//! ```text
//! e_0(k) = x(k)
//! e_m(k) = f(e_{m-1}(k-1), x(k), e_{m-1}(k+1))          (1-D)
//! e_m(c) = f(x(c), sum of e_{m-1} over the Moore ring)    (2-D)
//! ```
//!
//! A homogeneous step returns `e_R`; a heterogeneous step reads `e_{R(c)}(c)`
//! at each cell. Under [`Boundary::FixedZero`] every estimate outside the
//! lattice is dead.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{
    east_word, get_bit, west_word, word_mask, words_for, Boundary, Grid1D, Grid2D, Lattice,
    RadiusField,
};
use crate::rule::{BaseRule, EcaRule, ExtendedRule, LifeRule};

/// Largest perception radius accepted by the one-dimensional engine.
pub const MAX_RADIUS_1D: u32 = 64;
/// Largest perception radius accepted by the two-dimensional engine.
pub const MAX_RADIUS_2D: u32 = 32;

// Below this many words a layer is computed on the calling thread.
const PARALLEL_MIN_WORDS: usize = 4096;
const TILE_WORDS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("unsupported rule {0}")]
    UnsupportedRule(String),
    #[error("radius {radius} outside 1..={max}")]
    RadiusOutOfRange { radius: u32, max: u32 },
    #[error("{0}")]
    InvalidArgument(String),
}

fn mismatch(what: &'static str, expected: impl ToString, found: impl ToString) -> EngineError {
    EngineError::DimensionMismatch {
        what,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

fn check_radius(radius: u32, max: u32) -> Result<(), EngineError> {
    if (1..=max).contains(&radius) {
        Ok(())
    } else {
        Err(EngineError::RadiusOutOfRange { radius, max })
    }
}

/// How far each cell perceives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Perception {
    Uniform(u32),
    Field(Arc<RadiusField>),
}

impl Perception {
    pub fn max_radius(&self) -> u32 {
        match self {
            Perception::Uniform(r) => *r,
            Perception::Field(f) => f.max_radius(),
        }
    }
}

/// One level of estimated next states, `e_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimationLayer {
    level: u32,
    width: usize,
    height: usize,
    words: Vec<u64>,
}

impl EstimationLayer {
    /// Level 0: the current state itself.
    pub fn from_grid_1d(grid: &Grid1D) -> Self {
        EstimationLayer {
            level: 0,
            width: grid.width(),
            height: 1,
            words: grid.words().to_vec(),
        }
    }

    /// Level 0 of a 2-D lattice.
    pub fn from_grid_2d(grid: &Grid2D) -> Self {
        EstimationLayer {
            level: 0,
            width: grid.width(),
            height: grid.height(),
            words: grid.words().to_vec(),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn get(&self, k: usize) -> bool {
        get_bit(&self.words, k)
    }

    pub fn get_2d(&self, row: usize, col: usize) -> bool {
        let stride = words_for(self.width);
        get_bit(&self.words[row * stride..(row + 1) * stride], col)
    }

    pub fn to_grid_1d(&self, boundary: Boundary) -> Grid1D {
        Grid1D::from_words(self.width, boundary, self.words.clone())
    }
}

// ---------------------------------------------------------------------------
// 1-D kernels

fn layer_1d_tile(
    prev: &[u64],
    x: &[u64],
    width: usize,
    periodic: bool,
    rule: EcaRule,
    first: usize,
    out: &mut [u64],
) {
    for (j, o) in out.iter_mut().enumerate() {
        let i = first + j;
        let l = west_word(prev, i, width, periodic);
        let r = east_word(prev, i, width, periodic);
        *o = rule.apply_words(l, x[i], r) & word_mask(i, width);
    }
}

fn layer_1d_into(
    prev: &[u64],
    x: &[u64],
    width: usize,
    periodic: bool,
    rule: EcaRule,
    out: &mut [u64],
) {
    if out.len() < PARALLEL_MIN_WORDS {
        layer_1d_tile(prev, x, width, periodic, rule, 0, out);
    } else {
        out.par_chunks_mut(TILE_WORDS)
            .enumerate()
            .for_each(|(t, chunk)| {
                layer_1d_tile(prev, x, width, periodic, rule, t * TILE_WORDS, chunk)
            });
    }
}

/// Computes `e_m` from `e_{m-1}` for a one-dimensional lattice.
pub fn estimate_layer_1d(
    prev: &EstimationLayer,
    current: &Grid1D,
    rule: EcaRule,
) -> Result<EstimationLayer, EngineError> {
    if prev.height != 1 || prev.width != current.width() {
        return Err(mismatch("layer width", current.width(), prev.width));
    }
    let mut words = vec![0; prev.words.len()];
    layer_1d_into(
        &prev.words,
        current.words(),
        current.width(),
        current.boundary() == Boundary::Periodic,
        rule,
        &mut words,
    );
    Ok(EstimationLayer {
        level: prev.level + 1,
        width: prev.width,
        height: 1,
        words,
    })
}

/// Runs layers `1..=max_level`, handing each to `sink`.
fn for_each_layer_1d(
    grid: &Grid1D,
    rule: EcaRule,
    max_level: u32,
    mut sink: impl FnMut(u32, &[u64]),
) {
    let periodic = grid.boundary() == Boundary::Periodic;
    let mut prev = grid.words().to_vec();
    let mut next = vec![0u64; prev.len()];
    for level in 1..=max_level {
        layer_1d_into(&prev, grid.words(), grid.width(), periodic, rule, &mut next);
        sink(level, &next);
        std::mem::swap(&mut prev, &mut next);
    }
}

/// One step of an extended elementary rule, homogeneous or heterogeneous.
pub fn step_eca_extended(
    grid: &Grid1D,
    rule: EcaRule,
    perception: &Perception,
) -> Result<Grid1D, EngineError> {
    match perception {
        Perception::Uniform(radius) => {
            check_radius(*radius, MAX_RADIUS_1D)?;
            let mut out = Vec::new();
            for_each_layer_1d(grid, rule, *radius, |level, layer| {
                if level == *radius {
                    out = layer.to_vec();
                }
            });
            Ok(Grid1D::from_words(grid.width(), grid.boundary(), out))
        }
        Perception::Field(field) => {
            if field.height() != 1 || field.width() != grid.width() {
                return Err(mismatch(
                    "radius field",
                    format!("{}x1", grid.width()),
                    format!("{}x{}", field.width(), field.height()),
                ));
            }
            check_radius(field.max_radius(), MAX_RADIUS_1D)?;
            let mut out = vec![0u64; grid.words().len()];
            for_each_layer_1d(grid, rule, field.max_radius(), |level, layer| {
                if let Some(mask) = field.level_mask(level) {
                    for ((o, l), m) in out.iter_mut().zip(layer).zip(mask) {
                        *o |= l & m;
                    }
                }
            });
            Ok(Grid1D::from_words(grid.width(), grid.boundary(), out))
        }
    }
}

/// Literal per-cell recursion `phi_R(i) = f(phi_{R-1}(i-1), x(i), phi_{R-1}(i+1))`
/// with `phi_0 = x`. Exponential in `radius`; used to cross-check the layered
/// evaluation.
pub fn cone_estimate_1d(grid: &Grid1D, rule: EcaRule, site: usize, radius: u32) -> bool {
    fn phi(grid: &Grid1D, rule: EcaRule, level: u32, k: isize) -> bool {
        let w = grid.width() as isize;
        if grid.boundary() == Boundary::FixedZero && !(0..w).contains(&k) {
            return false;
        }
        if level == 0 {
            return grid.get_wrapped(k);
        }
        rule.apply(
            phi(grid, rule, level - 1, k - 1),
            grid.get_wrapped(k),
            phi(grid, rule, level - 1, k + 1),
        )
    }
    phi(grid, rule, radius, site as isize)
}

/// `x'(i) = f(f(x(i-2), x(i-1), x(i)), x(i), f(x(i), x(i+1), x(i+2)))`, the
/// radius-2 rule written out directly.
pub fn step_eca_r2_closed_form(grid: &Grid1D, rule: EcaRule) -> Grid1D {
    let w = grid.width() as isize;
    let x = |k: isize| grid.get_wrapped(k);
    let inner = |k: isize| {
        if grid.boundary() == Boundary::FixedZero && !(0..w).contains(&k) {
            false
        } else {
            rule.apply(x(k - 1), x(k), x(k + 1))
        }
    };
    let mut out = Grid1D::new(grid.width(), grid.boundary());
    for i in 0..w {
        out.set(i as usize, rule.apply(inner(i - 1), x(i), inner(i + 1)));
    }
    out
}

// ---------------------------------------------------------------------------
// 2-D kernels

#[inline(always)]
fn full_add(a: u64, b: u64, c: u64) -> (u64, u64) {
    let t = a ^ b;
    (t ^ c, (a & b) | (c & t))
}

/// Bit-sliced neighbor count selection for an outer-totalistic rule.
#[derive(Clone, Copy)]
struct LifeKernel {
    birth: u16,
    survival: u16,
}

impl LifeKernel {
    #[inline(always)]
    fn apply(&self, center: u64, ring: [u64; 8]) -> u64 {
        let [uw, u, ue, w, e, dw, d, de] = ring;
        let (s_a, c_a) = full_add(uw, u, ue);
        let (s_b, c_b) = full_add(dw, d, de);
        let (s_c, c_c) = (w ^ e, w & e);
        let (b0, c_d) = full_add(s_a, s_b, s_c);
        let (t_s, t_c) = full_add(c_a, c_b, c_c);
        let (b1, c_e) = (t_s ^ c_d, t_s & c_d);
        let (b2, b3) = (t_c ^ c_e, t_c & c_e);
        let mut born = 0u64;
        let mut keep = 0u64;
        for n in 0..=8u16 {
            let sel = |bit: u64, k: u16| if n >> k & 1 == 1 { bit } else { !bit };
            let eq = sel(b0, 0) & sel(b1, 1) & sel(b2, 2) & sel(b3, 3);
            if self.birth >> n & 1 == 1 {
                born |= eq;
            }
            if self.survival >> n & 1 == 1 {
                keep |= eq;
            }
        }
        (center & keep) | (!center & born)
    }
}

struct Shape2D {
    width: usize,
    height: usize,
    stride: usize,
    periodic: bool,
}

impl Shape2D {
    fn row<'a>(&self, words: &'a [u64], r: isize, zero: &'a [u64]) -> &'a [u64] {
        let h = self.height as isize;
        let r = if (0..h).contains(&r) {
            r
        } else if self.periodic {
            r.rem_euclid(h)
        } else {
            return zero;
        };
        let r = r as usize;
        &words[r * self.stride..(r + 1) * self.stride]
    }
}

fn layer_2d_rows(
    shape: &Shape2D,
    prev: &[u64],
    x: &[u64],
    kernel: LifeKernel,
    first_row: usize,
    out: &mut [u64],
) {
    let zero = vec![0u64; shape.stride];
    let (w, s, p) = (shape.width, shape.stride, shape.periodic);
    for (j, out_row) in out.chunks_mut(s).enumerate() {
        let r = (first_row + j) as isize;
        let up = shape.row(prev, r - 1, &zero);
        let mid = shape.row(prev, r, &zero);
        let down = shape.row(prev, r + 1, &zero);
        let xr = &x[(r as usize) * s..(r as usize + 1) * s];
        for (i, o) in out_row.iter_mut().enumerate() {
            let ring = [
                west_word(up, i, w, p),
                up[i],
                east_word(up, i, w, p),
                west_word(mid, i, w, p),
                east_word(mid, i, w, p),
                west_word(down, i, w, p),
                down[i],
                east_word(down, i, w, p),
            ];
            *o = kernel.apply(xr[i], ring) & word_mask(i, w);
        }
    }
}

fn layer_2d_into(shape: &Shape2D, prev: &[u64], x: &[u64], kernel: LifeKernel, out: &mut [u64]) {
    if out.len() < PARALLEL_MIN_WORDS {
        layer_2d_rows(shape, prev, x, kernel, 0, out);
    } else {
        let rows_per_tile = (TILE_WORDS / shape.stride).max(1);
        out.par_chunks_mut(rows_per_tile * shape.stride)
            .enumerate()
            .for_each(|(t, chunk)| layer_2d_rows(shape, prev, x, kernel, t * rows_per_tile, chunk));
    }
}

fn shape_of(grid: &Grid2D) -> Shape2D {
    Shape2D {
        width: grid.width(),
        height: grid.height(),
        stride: grid.stride(),
        periodic: grid.boundary() == Boundary::Periodic,
    }
}

fn check_life_rule(rule: &LifeRule) -> Result<(), EngineError> {
    if rule.has_b0() {
        Err(EngineError::UnsupportedRule(format!(
            "{rule}: rules with birth on 0 neighbors are not supported"
        )))
    } else {
        Ok(())
    }
}

fn kernel_for(rule: &LifeRule) -> LifeKernel {
    LifeKernel {
        birth: rule.birth_mask(),
        survival: rule.survival_mask(),
    }
}

/// Computes `e_m` from `e_{m-1}` for a two-dimensional lattice.
pub fn estimate_layer_2d(
    prev: &EstimationLayer,
    current: &Grid2D,
    rule: &LifeRule,
) -> Result<EstimationLayer, EngineError> {
    if prev.width != current.width() || prev.height != current.height() {
        return Err(mismatch(
            "layer dimensions",
            format!("{}x{}", current.width(), current.height()),
            format!("{}x{}", prev.width, prev.height),
        ));
    }
    check_life_rule(rule)?;
    let mut words = vec![0; prev.words.len()];
    layer_2d_into(
        &shape_of(current),
        &prev.words,
        current.words(),
        kernel_for(rule),
        &mut words,
    );
    Ok(EstimationLayer {
        level: prev.level + 1,
        width: prev.width,
        height: prev.height,
        words,
    })
}

/// One step of an extended Life-like rule. If the grid carries a radius
/// field it determines each cell's radius and `radius` is ignored.
pub fn step_life_extended(
    grid: &Grid2D,
    rule: &LifeRule,
    radius: u32,
) -> Result<Grid2D, EngineError> {
    let perception = match grid.radius_field() {
        Some(field) => Perception::Field(field.clone()),
        None => Perception::Uniform(radius),
    };
    step_life_with(grid, rule, &perception)
}

/// One step of an extended Life-like rule with explicit perception.
pub fn step_life_with(
    grid: &Grid2D,
    rule: &LifeRule,
    perception: &Perception,
) -> Result<Grid2D, EngineError> {
    check_life_rule(rule)?;
    if let Perception::Field(field) = perception {
        if field.width() != grid.width() || field.height() != grid.height() {
            return Err(mismatch(
                "radius field",
                format!("{}x{}", grid.width(), grid.height()),
                format!("{}x{}", field.width(), field.height()),
            ));
        }
    }
    let max_level = perception.max_radius();
    check_radius(max_level, MAX_RADIUS_2D)?;

    let shape = shape_of(grid);
    let kernel = kernel_for(rule);
    let x = grid.words();
    let mut prev = x.to_vec();
    let mut next = vec![0u64; x.len()];
    let mut out = vec![0u64; x.len()];
    for level in 1..=max_level {
        layer_2d_into(&shape, &prev, x, kernel, &mut next);
        match perception {
            Perception::Uniform(_) => {
                if level == max_level {
                    out.copy_from_slice(&next);
                }
            }
            Perception::Field(field) => {
                if let Some(mask) = field.level_mask(level) {
                    for ((o, l), m) in out.iter_mut().zip(&next).zip(mask) {
                        *o |= l & m;
                    }
                }
            }
        }
        std::mem::swap(&mut prev, &mut next);
    }
    Ok(Grid2D::from_parts(grid, out))
}

// ---------------------------------------------------------------------------
// Automata

/// A deterministic update rule over some lattice state.
pub trait Automaton: Sync {
    type State: Lattice + Clone + PartialEq + Send + Sync;

    fn step(&self, state: &Self::State) -> Result<Self::State, EngineError>;

    /// Largest perception radius, i.e. how far information travels per step.
    fn max_radius(&self) -> u32;

    fn label(&self) -> String;
}

/// An extended elementary rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcaAutomaton {
    rule: EcaRule,
    perception: Perception,
}

impl EcaAutomaton {
    pub fn new(rule: EcaRule, perception: Perception) -> Result<Self, EngineError> {
        match &perception {
            Perception::Uniform(r) => check_radius(*r, MAX_RADIUS_1D)?,
            Perception::Field(f) => {
                if f.height() != 1 {
                    return Err(mismatch("radius field height", 1, f.height()));
                }
                check_radius(f.max_radius(), MAX_RADIUS_1D)?
            }
        }
        Ok(EcaAutomaton { rule, perception })
    }

    pub fn homogeneous(rule: EcaRule, radius: u32) -> Result<Self, EngineError> {
        EcaAutomaton::new(rule, Perception::Uniform(radius))
    }

    pub fn rule(&self) -> EcaRule {
        self.rule
    }
}

impl Automaton for EcaAutomaton {
    type State = Grid1D;

    fn step(&self, state: &Grid1D) -> Result<Grid1D, EngineError> {
        step_eca_extended(state, self.rule, &self.perception)
    }

    fn max_radius(&self) -> u32 {
        self.perception.max_radius()
    }

    fn label(&self) -> String {
        match &self.perception {
            Perception::Uniform(r) => format!("{}R{r}", self.rule),
            Perception::Field(f) => {
                format!("{}R{}..{}", self.rule, f.min_radius(), f.max_radius())
            }
        }
    }
}

/// An extended Life-like rule. Grids that carry a radius field step
/// heterogeneously; all others use the automaton's radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LifeAutomaton {
    rule: LifeRule,
    radius: u32,
}

impl LifeAutomaton {
    pub fn new(rule: LifeRule, radius: u32) -> Result<Self, EngineError> {
        check_life_rule(&rule)?;
        check_radius(radius, MAX_RADIUS_2D)?;
        Ok(LifeAutomaton { rule, radius })
    }

    pub fn rule(&self) -> LifeRule {
        self.rule
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }
}

impl Automaton for LifeAutomaton {
    type State = Grid2D;

    fn step(&self, state: &Grid2D) -> Result<Grid2D, EngineError> {
        step_life_extended(state, &self.rule, self.radius)
    }

    fn max_radius(&self) -> u32 {
        self.radius
    }

    fn label(&self) -> String {
        format!("{}R{}", self.rule, self.radius)
    }
}

/// Splits an extended rule into the matching automaton.
pub enum AnyAutomaton {
    Eca(EcaAutomaton),
    Life(LifeAutomaton),
}

impl TryFrom<&ExtendedRule> for AnyAutomaton {
    type Error = EngineError;

    fn try_from(rule: &ExtendedRule) -> Result<Self, Self::Error> {
        Ok(match rule.base {
            BaseRule::Eca(r) => AnyAutomaton::Eca(EcaAutomaton::homogeneous(r, rule.radius())?),
            BaseRule::Life(r) => AnyAutomaton::Life(LifeAutomaton::new(r, rule.radius())?),
        })
    }
}
