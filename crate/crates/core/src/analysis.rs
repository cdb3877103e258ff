//! Trajectory instrumentation: recurrence detection, activity series,
//! isolated-pattern classification and the batch experiments built on them.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{Automaton, EcaAutomaton, EngineError, LifeAutomaton, Perception};
use crate::grid::{Boundary, Grid1D, Lattice};
use crate::rle::Pattern;
use crate::rule::{BaseRule, RuleError, SequenceCode};
use crate::soup::{derive_seed, random_soup_1d, random_soup_2d};

/// Header of the transient-experiment CSV.
pub const TRANSIENT_CSV_HEADER: &str = "rule,R,width,height,density,seed,transient,period,timeout";

/// A run counts as "random" when every step in the final quarter of the
/// budget changes more than this fraction of cells.
pub const ACTIVITY_THRESHOLD: f64 = 0.01;
pub const ACTIVITY_TAIL_FRACTION: f64 = 0.25;

/// Live count above this multiple of the initial count means "growing".
pub const GROWTH_FACTOR: usize = 4;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("pad {pad} too small: need at least {required} (radius x max period)")]
    InsufficientPad { pad: usize, required: usize },
    #[error("live cells reached the boundary halo at step {step}; increase the pad")]
    HaloReached { step: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

/// Outcome of following an orbit until some state repeats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecurrenceResult {
    /// `state(transient + period) == state(transient)`, both minimal.
    Cycle { transient: u64, period: u64 },
    /// No repeat among states `0..=steps`.
    Timeout { steps: u64 },
}

impl RecurrenceResult {
    pub fn is_timeout(&self) -> bool {
        matches!(self, RecurrenceResult::Timeout { .. })
    }

    pub fn transient(&self) -> Option<u64> {
        match self {
            RecurrenceResult::Cycle { transient, .. } => Some(*transient),
            RecurrenceResult::Timeout { .. } => None,
        }
    }

    pub fn period(&self) -> Option<u64> {
        match self {
            RecurrenceResult::Cycle { period, .. } => Some(*period),
            RecurrenceResult::Timeout { .. } => None,
        }
    }
}

/// Follows the orbit of `initial` for at most `max_steps` steps, digesting
/// every state. A digest hit is confirmed by comparing the stored state.
/// If more than `max_states_remembered` states would be kept, detection
/// restarts with [`find_cycle_brent`], which stores none.
pub fn run_until_rest<A: Automaton>(
    automaton: &A,
    initial: &A::State,
    max_steps: u64,
    max_states_remembered: usize,
) -> Result<RecurrenceResult, EngineError> {
    let mut seen: HashMap<u128, Vec<usize>> = HashMap::new();
    let mut history: Vec<A::State> = Vec::new();
    let mut state = initial.clone();
    for t in 0..=max_steps {
        let digest = state.digest();
        if let Some(times) = seen.get(&digest) {
            if let Some(&t0) = times.iter().find(|&&t0| history[t0] == state) {
                return Ok(RecurrenceResult::Cycle {
                    transient: t0 as u64,
                    period: t - t0 as u64,
                });
            }
        }
        if history.len() >= max_states_remembered {
            return find_cycle_brent(automaton, initial, max_steps);
        }
        if t == max_steps {
            break;
        }
        let next = automaton.step(&state)?;
        seen.entry(digest).or_default().push(history.len());
        history.push(std::mem::replace(&mut state, next));
    }
    Ok(RecurrenceResult::Timeout { steps: max_steps })
}

/// Brent's cycle detection on the deterministic orbit; constant memory,
/// same result as [`run_until_rest`].
pub fn find_cycle_brent<A: Automaton>(
    automaton: &A,
    initial: &A::State,
    max_steps: u64,
) -> Result<RecurrenceResult, EngineError> {
    let timeout = Ok(RecurrenceResult::Timeout { steps: max_steps });
    // any orbit with transient + period <= max_steps is caught before the
    // hare passes this position
    let cap = max_steps.saturating_mul(3).saturating_add(3);
    let mut power = 1u64;
    let mut period = 1u64;
    let mut tortoise = initial.clone();
    let mut hare = automaton.step(initial)?;
    let mut hare_pos = 1u64;
    while tortoise != hare {
        if power == period {
            tortoise = hare.clone();
            power *= 2;
            period = 0;
        }
        hare = automaton.step(&hare)?;
        period += 1;
        hare_pos += 1;
        if hare_pos > cap {
            return timeout;
        }
    }
    if period > max_steps {
        return timeout;
    }
    let mut tortoise = initial.clone();
    let mut hare = initial.clone();
    for _ in 0..period {
        hare = automaton.step(&hare)?;
    }
    let mut transient = 0u64;
    while tortoise != hare {
        if transient + period >= max_steps {
            return timeout;
        }
        tortoise = automaton.step(&tortoise)?;
        hare = automaton.step(&hare)?;
        transient += 1;
    }
    Ok(RecurrenceResult::Cycle { transient, period })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityRecord {
    pub step: u64,
    /// Live fraction of the state after `step` steps.
    pub live_density: f64,
    /// Fraction of cells that changed during the step.
    pub change_rate: f64,
}

pub fn activity_series<A: Automaton>(
    automaton: &A,
    initial: &A::State,
    steps: u64,
) -> Result<Vec<ActivityRecord>, EngineError> {
    let mut records = Vec::with_capacity(steps as usize);
    let mut state = initial.clone();
    let n = state.cell_count() as f64;
    for step in 1..=steps {
        let next = automaton.step(&state)?;
        records.push(ActivityRecord {
            step,
            live_density: next.population() as f64 / n,
            change_rate: next.hamming(&state) as f64 / n,
        });
        state = next;
    }
    Ok(records)
}

/// True when every record in the final `tail_fraction` of the series has
/// `change_rate > threshold`.
pub fn sustains_activity(records: &[ActivityRecord], threshold: f64, tail_fraction: f64) -> bool {
    if records.is_empty() {
        return false;
    }
    let tail = ((records.len() as f64 * tail_fraction).ceil() as usize).clamp(1, records.len());
    records[records.len() - tail..]
        .iter()
        .all(|r| r.change_rate > threshold)
}

/// What an isolated pattern does under a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternClass {
    StillLife,
    Oscillator {
        period: usize,
    },
    /// `dx` is the column shift (positive right), `dy` the row shift
    /// (positive down) per period.
    Spaceship {
        period: usize,
        dx: i64,
        dy: i64,
    },
    Growing,
    Unresolved,
}

impl fmt::Display for PatternClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternClass::StillLife => f.write_str("still_life"),
            PatternClass::Oscillator { period } => write!(f, "oscillator period={period}"),
            PatternClass::Spaceship { period, dx, dy } => {
                write!(f, "spaceship period={period} dx={dx} dy={dy}")
            }
            PatternClass::Growing => f.write_str("growing"),
            PatternClass::Unresolved => f.write_str("unresolved"),
        }
    }
}

/// Smallest pad that keeps the dependence cone inside the probe grid.
pub fn minimum_pad(radius: u32, max_period: usize) -> usize {
    radius as usize * max_period
}

fn translation(a: &[(usize, usize)], b: &[(usize, usize)]) -> Option<(i64, i64)> {
    if a.len() != b.len() {
        return None;
    }
    let (Some(&(ar, ac)), Some(&(br, bc))) = (a.first(), b.first()) else {
        return Some((0, 0));
    };
    let (dy, dx) = (br as i64 - ar as i64, bc as i64 - ac as i64);
    a.iter()
        .zip(b)
        .all(|(&(r0, c0), &(r1, c1))| r1 as i64 - r0 as i64 == dy && c1 as i64 - c0 as i64 == dx)
        .then_some((dx, dy))
}

/// Classifies a finite pattern by probing it on a zero-padded grid for up to
/// `max_period` steps. `pad` defaults to `R * max_period` plus the pattern's
/// larger extent.
pub fn classify_pattern(
    pattern: &Pattern,
    automaton: &LifeAutomaton,
    max_period: usize,
    pad: Option<usize>,
) -> Result<PatternClass, AnalysisError> {
    if max_period == 0 {
        return Err(AnalysisError::InvalidArgument(
            "max period must be at least 1".into(),
        ));
    }
    let radius = automaton.radius() as usize;
    let required = minimum_pad(automaton.radius(), max_period);
    let pad = pad.unwrap_or(required + pattern.width().max(pattern.height()));
    if pad < required {
        return Err(AnalysisError::InsufficientPad { pad, required });
    }
    let initial = pattern.to_grid(pad, Boundary::FixedZero);
    let (h, w) = (initial.height(), initial.width());
    let start = initial.live_cells();
    let mut state = initial;
    let mut peak = start.len();
    for t in 1..=max_period {
        // estimates outside the grid are dead, which is only exact while
        // live cells stay at least R away from the edge
        if state
            .live_cells()
            .iter()
            .any(|&(r, c)| r < radius || c < radius || r + radius >= h || c + radius >= w)
        {
            return Err(AnalysisError::HaloReached { step: t - 1 });
        }
        state = automaton.step(&state)?;
        let cells = state.live_cells();
        peak = peak.max(cells.len());
        match translation(&start, &cells) {
            Some((0, 0)) if t == 1 => return Ok(PatternClass::StillLife),
            Some((0, 0)) => return Ok(PatternClass::Oscillator { period: t }),
            Some((dx, dy)) => return Ok(PatternClass::Spaceship { period: t, dx, dy }),
            None => {}
        }
    }
    if peak > GROWTH_FACTOR * start.len() {
        Ok(PatternClass::Growing)
    } else {
        Ok(PatternClass::Unresolved)
    }
}

// ---------------------------------------------------------------------------
// Batch experiments

#[derive(Debug, Clone, PartialEq)]
pub struct TransientConfig {
    pub sequence: SequenceCode,
    pub radii: Vec<u32>,
    pub width: usize,
    /// Must be 1 for elementary sequences.
    pub height: usize,
    pub density: f64,
    pub n_seeds: usize,
    pub max_steps: u64,
    pub base_seed: u64,
    pub max_states_remembered: usize,
}

impl TransientConfig {
    /// 64x64 torus, density 0.5, 20 000-step budget.
    pub fn new(sequence: SequenceCode, radii: Vec<u32>) -> Self {
        TransientConfig {
            sequence,
            radii,
            width: 64,
            height: 64,
            density: 0.5,
            n_seeds: 50,
            max_steps: 20_000,
            base_seed: 0,
            max_states_remembered: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientRecord {
    pub rule: String,
    pub radius: u32,
    pub width: usize,
    pub height: usize,
    pub density: f64,
    pub seed: u64,
    pub result: RecurrenceResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientSummary {
    pub radius: u32,
    pub runs: usize,
    pub timeouts: usize,
    /// Over runs that reached a cycle.
    pub mean_transient: Option<f64>,
    pub median_transient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientReport {
    pub records: Vec<TransientRecord>,
    pub summaries: Vec<TransientSummary>,
}

impl TransientReport {
    pub fn summary(&self, radius: u32) -> Option<&TransientSummary> {
        self.summaries.iter().find(|s| s.radius == radius)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(TRANSIENT_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let (transient, period, timeout) = match r.result {
                RecurrenceResult::Cycle { transient, period } => {
                    (transient.to_string(), period.to_string(), 0)
                }
                RecurrenceResult::Timeout { .. } => (String::new(), String::new(), 1),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.rule, r.radius, r.width, r.height, r.density, r.seed, transient, period, timeout
            );
        }
        out
    }
}

fn median(sorted: &[u64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2] as f64),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0),
    }
}

fn summarize(radius: u32, records: &[TransientRecord]) -> TransientSummary {
    let mut transients: Vec<u64> = records
        .iter()
        .filter_map(|r| r.result.transient())
        .collect();
    transients.sort_unstable();
    let mean = (!transients.is_empty())
        .then(|| transients.iter().sum::<u64>() as f64 / transients.len() as f64);
    TransientSummary {
        radius,
        runs: records.len(),
        timeouts: records.iter().filter(|r| r.result.is_timeout()).count(),
        mean_transient: mean,
        median_transient: median(&transients),
    }
}

/// Seed of soup `index` for radius `radius`.
pub fn experiment_seed(base_seed: u64, radius: u32, index: usize) -> u64 {
    derive_seed(base_seed, &[radius as u64, index as u64])
}

/// Runs [`run_until_rest`] on `n_seeds` independent soups per radius.
/// Seeds run in parallel; records are ordered by (radius, seed index).
pub fn transient_experiment(config: &TransientConfig) -> Result<TransientReport, AnalysisError> {
    if config.n_seeds == 0 {
        return Err(AnalysisError::InvalidArgument(
            "n_seeds must be at least 1".into(),
        ));
    }
    let rule_code = config.sequence.base.to_string();
    let jobs: Vec<(u32, usize)> = config
        .radii
        .iter()
        .flat_map(|&r| (0..config.n_seeds).map(move |i| (r, i)))
        .collect();
    let run = |&(radius, index): &(u32, usize)| -> Result<TransientRecord, AnalysisError> {
        let seed = experiment_seed(config.base_seed, radius, index);
        let result = match config.sequence.base {
            BaseRule::Life(rule) => {
                let automaton = LifeAutomaton::new(rule, radius)?;
                let soup = random_soup_2d(
                    config.width,
                    config.height,
                    config.density,
                    seed,
                    Boundary::Periodic,
                )?;
                run_until_rest(
                    &automaton,
                    &soup,
                    config.max_steps,
                    config.max_states_remembered,
                )?
            }
            BaseRule::Eca(rule) => {
                if config.height != 1 {
                    return Err(AnalysisError::InvalidArgument(
                        "elementary sequences run on 1-D lattices (height 1)".into(),
                    ));
                }
                let automaton = EcaAutomaton::new(rule, Perception::Uniform(radius))?;
                let soup = random_soup_1d(config.width, config.density, seed, Boundary::Periodic)?;
                run_until_rest(
                    &automaton,
                    &soup,
                    config.max_steps,
                    config.max_states_remembered,
                )?
            }
        };
        Ok(TransientRecord {
            rule: rule_code.clone(),
            radius,
            width: config.width,
            height: config.height,
            density: config.density,
            seed,
            result,
        })
    };
    let records = jobs.par_iter().map(run).collect::<Result<Vec<_>, _>>()?;
    let summaries = config
        .radii
        .iter()
        .map(|&r| {
            let group: Vec<TransientRecord> = records
                .iter()
                .filter(|rec| rec.radius == r)
                .cloned()
                .collect();
            summarize(r, &group)
        })
        .collect();
    Ok(TransientReport { records, summaries })
}

/// Per-radius outcome of a single-seed elementary run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityEntry {
    pub radius: u32,
    pub outcome: RecurrenceResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityReport {
    pub entries: Vec<ParityEntry>,
}

impl ParityReport {
    /// Radii with a detected cycle, and radii without.
    pub fn groups(&self) -> (Vec<u32>, Vec<u32>) {
        let (cyc, none): (Vec<_>, Vec<_>) =
            self.entries.iter().partition(|e| !e.outcome.is_timeout());
        (
            cyc.iter().map(|e| e.radius).collect(),
            none.iter().map(|e| e.radius).collect(),
        )
    }

    /// If both groups are nonempty and split exactly by parity, returns the
    /// parity whose radii cycle.
    pub fn cycling_parity(&self) -> Option<Parity> {
        let (cyc, none) = self.groups();
        if cyc.is_empty() || none.is_empty() {
            return None;
        }
        let parity = |r: &u32| {
            if r % 2 == 1 {
                Parity::Odd
            } else {
                Parity::Even
            }
        };
        let p = parity(&cyc[0]);
        (cyc.iter().all(|r| parity(r) == p) && none.iter().all(|r| parity(r) != p)).then_some(p)
    }
}

impl fmt::Display for ParityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            match e.outcome {
                RecurrenceResult::Cycle { transient, period } => writeln!(
                    f,
                    "R={} periodic period={period} transient={transient}",
                    e.radius
                )?,
                RecurrenceResult::Timeout { steps } => {
                    writeln!(f, "R={} no cycle within {steps} steps", e.radius)?
                }
            }
        }
        Ok(())
    }
}

/// Runs each radius from a single live cell on a `width`-cell torus and
/// records whether a cycle appears within `steps` steps.
pub fn parity_report(
    sequence: &SequenceCode,
    radii: &[u32],
    width: usize,
    steps: u64,
) -> Result<ParityReport, AnalysisError> {
    let BaseRule::Eca(rule) = sequence.base else {
        return Err(AnalysisError::InvalidArgument(
            "parity reports need an elementary sequence".into(),
        ));
    };
    let seed = Grid1D::single_seed(width, Boundary::Periodic);
    let entries = radii
        .par_iter()
        .map(|&radius| {
            let automaton = EcaAutomaton::homogeneous(rule, radius)?;
            Ok(ParityEntry {
                radius,
                outcome: run_until_rest(&automaton, &seed, steps, usize::MAX)?,
            })
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    Ok(ParityReport { entries })
}

/// Advances `steps` steps and returns the final state.
pub fn evolve<A: Automaton>(
    automaton: &A,
    initial: &A::State,
    steps: u64,
) -> Result<A::State, EngineError> {
    let mut state = initial.clone();
    for _ in 0..steps {
        state = automaton.step(&state)?;
    }
    Ok(state)
}
