//! Rule representation: elementary (Wolfram-numbered) rules, Life-like
//! birth/survival rules, extended rules carrying a perception radius, and
//! sequence codes such as `[#110]` or `[B3S23]`.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use thiserror::Error;

/// Default upper radius when a sequence code is expanded.
pub const DEFAULT_SEQUENCE_MAX_RADIUS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("malformed rule code {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("rule code {input:?} out of range: {reason}")]
    Range { input: String, reason: String },
}

fn parse_err(input: &str, reason: impl Into<String>) -> RuleError {
    RuleError::Parse {
        input: input.to_string(),
        reason: reason.into(),
    }
}

fn range_err(input: &str, reason: impl Into<String>) -> RuleError {
    RuleError::Range {
        input: input.to_string(),
        reason: reason.into(),
    }
}

/// An elementary cellular automaton rule.
///
/// Bit `k` of the Wolfram number is the output for the neighborhood
/// `(left, center, right)` with `k = 4*left + 2*center + right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EcaRule(u8);

/// Symmetry operations on elementary rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EcaTransform {
    Mirror,
    Complement,
    MirrorComplement,
}

impl EcaRule {
    pub const fn new(wolfram_number: u8) -> Self {
        EcaRule(wolfram_number)
    }

    pub const fn wolfram_number(self) -> u8 {
        self.0
    }

    /// Truth table indexed by `4*left + 2*center + right`.
    pub fn table(self) -> [bool; 8] {
        std::array::from_fn(|k| (self.0 >> k) & 1 == 1)
    }

    pub fn from_table(table: [bool; 8]) -> Self {
        let n = table
            .iter()
            .enumerate()
            .fold(0u8, |acc, (k, &bit)| acc | ((bit as u8) << k));
        EcaRule(n)
    }

    #[inline]
    pub fn apply(self, left: bool, center: bool, right: bool) -> bool {
        let k = ((left as u8) << 2) | ((center as u8) << 1) | right as u8;
        (self.0 >> k) & 1 == 1
    }

    /// Applies the rule to 64 independent neighborhoods at once, one per bit
    /// lane.
    #[inline(always)]
    pub fn apply_words(self, left: u64, center: u64, right: u64) -> u64 {
        let mut out = 0u64;
        for k in 0..8u8 {
            let on = 0u64.wrapping_sub(((self.0 >> k) & 1) as u64);
            let l = if k & 4 != 0 { left } else { !left };
            let c = if k & 2 != 0 { center } else { !center };
            let r = if k & 1 != 0 { right } else { !right };
            out |= on & l & c & r;
        }
        out
    }

    /// `f(0,0,0) = 0`.
    pub fn is_quiescent(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn transform(self, op: EcaTransform) -> Self {
        match op {
            EcaTransform::Mirror => self.mirror(),
            EcaTransform::Complement => self.complement(),
            EcaTransform::MirrorComplement => self.mirror().complement(),
        }
    }

    fn mirror(self) -> Self {
        let t = self.table();
        EcaRule::from_table(std::array::from_fn(|k| {
            let (l, c, r) = (k >> 2 & 1, k >> 1 & 1, k & 1);
            t[(r << 2) | (c << 1) | l]
        }))
    }

    fn complement(self) -> Self {
        let t = self.table();
        EcaRule::from_table(std::array::from_fn(|k| !t[7 - k]))
    }
}

impl fmt::Display for EcaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl FromStr for EcaRule {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_eca_code(s)
    }
}

/// Parses `#N` or `N` with `0 <= N <= 255`.
pub fn parse_eca_code(text: &str) -> Result<EcaRule, RuleError> {
    let body = text.trim();
    let body = body.strip_prefix('#').unwrap_or(body);
    if let Some(neg) = body.strip_prefix('-') {
        if !neg.is_empty() && neg.bytes().all(|b| b.is_ascii_digit()) {
            return Err(range_err(text, "Wolfram numbers are non-negative"));
        }
    }
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return Err(parse_err(text, "expected `#N` or `N` with decimal N"));
    }
    match body.parse::<u64>() {
        Ok(n) if n <= 255 => Ok(EcaRule(n as u8)),
        _ => Err(range_err(text, "Wolfram numbers lie in 0..=255")),
    }
}

/// One orbit of the 256 elementary rules under mirror and complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcaClass {
    /// Smallest Wolfram number in the class.
    pub representative: EcaRule,
    /// All members, ascending.
    pub members: Vec<EcaRule>,
}

/// Partitions the 256 elementary rules into symmetry classes, ordered by
/// representative.
pub fn eca_equivalence_classes() -> Vec<EcaClass> {
    let mut seen = [false; 256];
    let mut classes = Vec::new();
    for n in 0..=255u8 {
        if seen[n as usize] {
            continue;
        }
        let rule = EcaRule(n);
        let mut members = vec![
            rule,
            rule.transform(EcaTransform::Mirror),
            rule.transform(EcaTransform::Complement),
            rule.transform(EcaTransform::MirrorComplement),
        ];
        members.sort();
        members.dedup();
        for m in &members {
            seen[m.0 as usize] = true;
        }
        classes.push(EcaClass {
            representative: members[0],
            members,
        });
    }
    classes
}

/// Outer-totalistic Moore-neighborhood rule in B/S notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LifeRule {
    birth: u16,
    survival: u16,
}

impl LifeRule {
    /// Builds a rule from neighbor-count sets. Counts above 8 are rejected.
    pub fn new(birth: &[u8], survival: &[u8]) -> Option<Self> {
        let mask = |counts: &[u8]| {
            counts
                .iter()
                .try_fold(0u16, |acc, &n| (n <= 8).then_some(acc | 1 << n))
        };
        Some(LifeRule {
            birth: mask(birth)?,
            survival: mask(survival)?,
        })
    }

    pub const fn conway() -> Self {
        LifeRule {
            birth: 1 << 3,
            survival: (1 << 2) | (1 << 3),
        }
    }

    pub fn birth(&self) -> Vec<u8> {
        (0..=8).filter(|&n| self.birth >> n & 1 == 1).collect()
    }

    pub fn survival(&self) -> Vec<u8> {
        (0..=8).filter(|&n| self.survival >> n & 1 == 1).collect()
    }

    /// Bit `n` set iff `n` is a birth count.
    pub fn birth_mask(&self) -> u16 {
        self.birth
    }

    /// Bit `n` set iff `n` is a survival count.
    pub fn survival_mask(&self) -> u16 {
        self.survival
    }

    pub fn has_b0(&self) -> bool {
        self.birth & 1 == 1
    }

    /// # Panics
    /// If `live_neighbors > 8`.
    #[inline]
    pub fn apply(&self, center: bool, live_neighbors: u32) -> bool {
        assert!(
            live_neighbors <= 8,
            "a Moore neighborhood has at most 8 live neighbors, got {live_neighbors}"
        );
        let set = if center { self.survival } else { self.birth };
        set >> live_neighbors & 1 == 1
    }

    /// Slash-separated Golly form, e.g. `B3/S23`.
    pub fn golly(&self) -> String {
        format!("B{}/S{}", digits(self.birth), digits(self.survival))
    }
}

fn digits(mask: u16) -> String {
    (0..=8)
        .filter(|n| mask >> n & 1 == 1)
        .map(|n| char::from(b'0' + n as u8))
        .collect()
}

impl fmt::Display for LifeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B{}S{}", digits(self.birth), digits(self.survival))
    }
}

impl FromStr for LifeRule {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_life_code(s)
    }
}

/// Parses `B<digits>S<digits>` or `B<digits>/S<digits>`, case-insensitively.
pub fn parse_life_code(text: &str) -> Result<LifeRule, RuleError> {
    let upper = text.trim().to_ascii_uppercase();
    let rest = upper
        .strip_prefix('B')
        .ok_or_else(|| parse_err(text, "expected leading `B`"))?;
    let s_pos = rest
        .find('S')
        .ok_or_else(|| parse_err(text, "missing `S` section"))?;
    let birth_part = &rest[..s_pos];
    let birth_part = birth_part.strip_suffix('/').unwrap_or(birth_part);
    let survival_part = &rest[s_pos + 1..];
    let counts = |part: &str| -> Result<u16, RuleError> {
        part.chars().try_fold(0u16, |acc, ch| match ch {
            '0'..='8' => Ok(acc | 1 << (ch as u8 - b'0')),
            '9' => Err(parse_err(
                text,
                "neighbor count 9 exceeds the Moore neighborhood",
            )),
            other => Err(parse_err(text, format!("unexpected character {other:?}"))),
        })
    };
    Ok(LifeRule {
        birth: counts(birth_part)?,
        survival: counts(survival_part)?,
    })
}

pub fn life_apply(rule: &LifeRule, center: bool, live_neighbors: u32) -> bool {
    rule.apply(center, live_neighbors)
}

pub fn eca_apply(rule: EcaRule, left: bool, center: bool, right: bool) -> bool {
    rule.apply(left, center, right)
}

pub fn transform_eca(rule: EcaRule, op: EcaTransform) -> EcaRule {
    rule.transform(op)
}

/// The base rule of an extended rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseRule {
    Eca(EcaRule),
    Life(LifeRule),
}

impl fmt::Display for BaseRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseRule::Eca(r) => r.fmt(f),
            BaseRule::Life(r) => r.fmt(f),
        }
    }
}

fn parse_base_code(text: &str, original: &str) -> Result<BaseRule, RuleError> {
    let t = text.trim();
    if t.starts_with('B') || t.starts_with('b') {
        parse_life_code(t).map(BaseRule::Life)
    } else {
        parse_eca_code(t).map(BaseRule::Eca).map_err(|e| match e {
            RuleError::Parse { reason, .. } => parse_err(original, reason),
            RuleError::Range { reason, .. } => range_err(original, reason),
        })
    }
}

/// A base rule together with a perception radius `R >= 1`. `R = 1` is the
/// base rule itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExtendedRule {
    pub base: BaseRule,
    radius: u32,
}

impl ExtendedRule {
    pub fn new(base: BaseRule, radius: u32) -> Result<Self, RuleError> {
        if radius == 0 {
            return Err(range_err(&format!("{base}R0"), "radius must be at least 1"));
        }
        Ok(ExtendedRule { base, radius })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }
}

impl fmt::Display for ExtendedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}R{}", self.base, self.radius)
    }
}

impl FromStr for ExtendedRule {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_extended_code(s)
    }
}

/// Parses `#110`, `#110R2`, `B3S23R6`, `b3/s23r2` and the like.
pub fn parse_extended_code(text: &str) -> Result<ExtendedRule, RuleError> {
    let upper = text.trim().to_ascii_uppercase();
    let (base_text, radius) = match upper.split_once('R') {
        None => (upper.as_str(), 1),
        Some((base, r)) => {
            if r.is_empty() || !r.bytes().all(|b| b.is_ascii_digit()) {
                return Err(parse_err(
                    text,
                    "radius suffix must be `R` followed by digits",
                ));
            }
            let radius = r
                .parse::<u32>()
                .map_err(|_| range_err(text, "radius too large"))?;
            if radius == 0 {
                return Err(range_err(text, "radius must be at least 1"));
            }
            (base, radius)
        }
    };
    let base = parse_base_code(base_text, text)?;
    Ok(ExtendedRule { base, radius })
}

/// A family of extended rules sharing one base rule, e.g. `[B3S23]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceCode {
    pub base: BaseRule,
    radii: RangeInclusive<u32>,
}

impl SequenceCode {
    pub fn new(base: BaseRule) -> Self {
        SequenceCode {
            base,
            radii: 1..=DEFAULT_SEQUENCE_MAX_RADIUS,
        }
    }

    pub fn with_range(mut self, radii: RangeInclusive<u32>) -> Result<Self, RuleError> {
        if *radii.start() == 0 || radii.is_empty() {
            return Err(range_err(
                &self.to_string(),
                format!("radius range {radii:?} must be nonempty and start at 1 or more"),
            ));
        }
        self.radii = radii;
        Ok(self)
    }

    pub fn radii(&self) -> RangeInclusive<u32> {
        self.radii.clone()
    }

    pub fn member(&self, radius: u32) -> Result<ExtendedRule, RuleError> {
        ExtendedRule::new(self.base, radius)
    }

    pub fn expand(&self) -> Vec<ExtendedRule> {
        self.radii
            .clone()
            .map(|radius| ExtendedRule {
                base: self.base,
                radius,
            })
            .collect()
    }
}

impl fmt::Display for SequenceCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.base)
    }
}

impl FromStr for SequenceCode {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_sequence_code(s)
    }
}

/// Parses a bracketed sequence code such as `[#134]` or `[B23S234]`.
pub fn parse_sequence_code(text: &str) -> Result<SequenceCode, RuleError> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| parse_err(text, "sequence codes are enclosed in `[...]`"))?;
    Ok(SequenceCode::new(parse_base_code(inner, text)?))
}
