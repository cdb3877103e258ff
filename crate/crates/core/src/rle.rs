//! Golly run-length-encoded patterns.
//!
//! Accepted grammar: any number of `#` comment lines, an optional header
//! `x = W, y = H[, rule = CODE]`, then a body of optional run counts
//! followed by `b` (dead), `o` (live) or `$` (end of row), closed by `!`.
//! Whitespace inside the body is ignored, as is anything after `!`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::{Boundary, Grid2D};
use crate::rule::{parse_extended_code, BaseRule, ExtendedRule};

const LINE_WIDTH: usize = 70;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("RLE line {line}, column {column}: {message}")]
pub struct RleError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// A finite set of live cells inside a bounding box.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    width: usize,
    height: usize,
    cells: Vec<(usize, usize)>,
}

impl Pattern {
    /// Cells are `(row, col)`; returns `None` if any lies outside the box.
    pub fn new(width: usize, height: usize, mut cells: Vec<(usize, usize)>) -> Option<Self> {
        if cells.iter().any(|&(r, c)| r >= height || c >= width) {
            return None;
        }
        cells.sort_unstable();
        cells.dedup();
        Some(Pattern {
            width,
            height,
            cells,
        })
    }

    pub fn from_grid(grid: &Grid2D) -> Self {
        Pattern {
            width: grid.width(),
            height: grid.height(),
            cells: grid.live_cells(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Live cells, sorted row-major.
    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    /// Places the pattern at `(pad, pad)` in a grid with `pad` dead cells on
    /// every side.
    pub fn to_grid(&self, pad: usize, boundary: Boundary) -> Grid2D {
        let mut g = Grid2D::new(
            (self.width + 2 * pad).max(1),
            (self.height + 2 * pad).max(1),
            boundary,
        );
        for &(r, c) in &self.cells {
            g.set(r + pad, c + pad, true);
        }
        g
    }
}

/// Parses an RLE document into a pattern and the rule named in its header.
pub fn parse_rle(text: &str) -> Result<(Pattern, Option<ExtendedRule>), RleError> {
    let err = |line: usize, column: usize, message: String| RleError {
        line,
        column,
        message,
    };
    let mut declared: Option<(usize, usize)> = None;
    let mut rule = None;
    let mut header_done = false;

    let (mut row, mut col) = (0usize, 0usize);
    let mut count: Option<usize> = None;
    let mut cells = Vec::new();
    let mut finished = false;
    let mut last_pos = (1, 1);

    'lines: for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        let trimmed = line.trim();
        if !header_done {
            if trimmed.starts_with('#') || trimmed.is_empty() {
                continue;
            }
            header_done = true;
            if trimmed.starts_with('x') || trimmed.starts_with('X') {
                let (dims, r) = parse_header(trimmed).map_err(|m| err(line_no, 1, m))?;
                declared = Some(dims);
                rule = r;
                continue;
            }
        }
        for (ci, ch) in line.chars().enumerate() {
            let column = ci + 1;
            last_pos = (line_no, column + 1);
            if let Some(d) = ch.to_digit(10) {
                count = Some(
                    count
                        .unwrap_or(0)
                        .checked_mul(10)
                        .and_then(|v| v.checked_add(d as usize))
                        .ok_or_else(|| err(line_no, column, "run count overflow".into()))?,
                );
                continue;
            }
            if ch.is_whitespace() {
                continue;
            }
            let n = count.take().unwrap_or(1);
            match ch {
                'b' | '.' => col += n,
                'o' => {
                    if let Some((w, h)) = declared {
                        if col + n > w || row >= h {
                            return Err(err(
                                line_no,
                                column,
                                format!(
                                    "live run ends at ({row}, {}) outside declared {w}x{h}",
                                    col + n - 1
                                ),
                            ));
                        }
                    }
                    cells.extend((col..col + n).map(|c| (row, c)));
                    col += n;
                }
                '$' => {
                    row += n;
                    col = 0;
                }
                '!' => {
                    finished = true;
                    break 'lines;
                }
                other => {
                    return Err(err(line_no, column, format!("unknown symbol {other:?}")));
                }
            }
        }
    }
    if !finished {
        return Err(err(
            last_pos.0,
            last_pos.1,
            "missing terminating `!`".into(),
        ));
    }
    let (width, height) = declared.unwrap_or_else(|| {
        let w = cells.iter().map(|&(_, c)| c + 1).max().unwrap_or(0);
        let h = cells.iter().map(|&(r, _)| r + 1).max().unwrap_or(0);
        (w, h)
    });
    let pattern = Pattern::new(width, height, cells).expect("cells checked against bounds");
    Ok((pattern, rule))
}

fn parse_header(line: &str) -> Result<((usize, usize), Option<ExtendedRule>), String> {
    let mut width = None;
    let mut height = None;
    let mut rule = None;
    for field in line.split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("header field {:?} lacks `=`", field.trim()))?;
        let (key, value) = (key.trim(), value.trim());
        let dim = || {
            value
                .parse::<usize>()
                .map_err(|_| format!("bad dimension {value:?}"))
        };
        match key {
            "x" | "X" => width = Some(dim()?),
            "y" | "Y" => height = Some(dim()?),
            "rule" => rule = Some(parse_extended_code(value).map_err(|e| e.to_string())?),
            _ => {}
        }
    }
    match (width, height) {
        (Some(w), Some(h)) => Ok(((w, h), rule)),
        _ => Err("header must give both x and y".into()),
    }
}

/// Rule text as written in RLE headers: slashed Life codes, `R` suffix only
/// when the radius exceeds 1.
pub fn rle_rule_text(rule: &ExtendedRule) -> String {
    let base = match rule.base {
        BaseRule::Life(r) => r.golly(),
        BaseRule::Eca(r) => r.to_string(),
    };
    if rule.radius() > 1 {
        format!("{base}R{}", rule.radius())
    } else {
        base
    }
}

/// Canonical emission: maximal runs, no trailing dead cells, consecutive
/// row ends merged, lines wrapped at 70 columns.
pub fn emit_rle(pattern: &Pattern, rule: Option<&ExtendedRule>) -> String {
    let mut out = format!("x = {}, y = {}", pattern.width, pattern.height);
    if let Some(rule) = rule {
        let _ = write!(out, ", rule = {}", rle_rule_text(rule));
    }
    out.push('\n');

    let token = |n: usize, sym: char| {
        if n == 1 {
            sym.to_string()
        } else {
            format!("{n}{sym}")
        }
    };
    let mut tokens = Vec::new();
    let mut prev_row = 0usize;
    let mut i = 0;
    let cells = &pattern.cells;
    while i < cells.len() {
        let row = cells[i].0;
        let ends = row - prev_row;
        if ends > 0 {
            tokens.push(token(ends, '$'));
        }
        prev_row = row;
        let mut col = 0;
        while i < cells.len() && cells[i].0 == row {
            let start = cells[i].1;
            let mut end = start + 1;
            i += 1;
            while i < cells.len() && cells[i].0 == row && cells[i].1 == end {
                end += 1;
                i += 1;
            }
            if start > col {
                tokens.push(token(start - col, 'b'));
            }
            tokens.push(token(end - start, 'o'));
            col = end;
        }
    }
    tokens.push("!".to_string());

    let mut line_len = 0;
    for t in tokens {
        if line_len > 0 && line_len + t.len() > LINE_WIDTH {
            out.push('\n');
            line_len = 0;
        }
        line_len += t.len();
        out.push_str(&t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::LifeRule;

    fn conway() -> ExtendedRule {
        ExtendedRule::new(BaseRule::Life(LifeRule::conway()), 1).unwrap()
    }

    #[test]
    fn parse_glider() {
        let (p, rule) = parse_rle("x = 3, y = 3, rule = B3/S23\nbo$2bo$3o!").unwrap();
        assert_eq!(p.cells(), &[(0, 1), (1, 2), (2, 0), (2, 1), (2, 2)]);
        assert_eq!((p.width(), p.height()), (3, 3));
        assert_eq!(rule, Some(conway()));
    }

    #[test]
    fn parse_block_without_rule() {
        let (p, rule) = parse_rle("x = 2, y = 2\n2o$2o!").unwrap();
        assert_eq!(p.cells(), &[(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(rule, None);
    }

    #[test]
    fn parse_comments_whitespace_and_multi_row_ends() {
        let text = "#N thing\n#C a comment\nx = 4, y = 5, rule = B3S23R2\n o2b\no 3$\n4o!trailing";
        let (p, rule) = parse_rle(text).unwrap();
        assert_eq!(p.cells(), &[(0, 0), (0, 3), (3, 0), (3, 1), (3, 2), (3, 3)]);
        assert_eq!(rule.unwrap().radius(), 2);
    }

    #[test]
    fn parse_without_header() {
        let (p, _) = parse_rle("bo$2bo$3o!").unwrap();
        assert_eq!((p.width(), p.height()), (3, 3));
    }

    #[test]
    fn parse_errors() {
        let e = parse_rle("3o").unwrap_err();
        assert!(e.message.contains("missing"));
        let e = parse_rle("x = 2, y = 2\n3o!").unwrap_err();
        assert_eq!((e.line, e.column), (2, 2));
        let e = parse_rle("x = 2, y = 2\nbz!").unwrap_err();
        assert_eq!((e.line, e.column), (2, 2));
        assert!(parse_rle("x = 2, y = 2\n$$o!").is_err());
        assert!(parse_rle("x = 2\no!").is_err());
        assert!(parse_rle("x = 2, y = 2, rule = B9S\no!").is_err());
    }

    #[test]
    fn emit_block() {
        let (p, _) = parse_rle("x = 2, y = 2\n2o$2o!").unwrap();
        assert_eq!(
            emit_rle(&p, Some(&conway())),
            "x = 2, y = 2, rule = B3/S23\n2o$2o!"
        );
    }

    #[test]
    fn emit_empty() {
        let p = Pattern::new(0, 0, vec![]).unwrap();
        let text = emit_rle(&p, Some(&conway()));
        assert_eq!(text, "x = 0, y = 0, rule = B3/S23\n!");
        assert_eq!(parse_rle(&text).unwrap().0, p);
    }

    #[test]
    fn emit_merges_row_ends_and_wraps() {
        let p = Pattern::new(3, 4, vec![(0, 0), (3, 2)]).unwrap();
        assert_eq!(emit_rle(&p, None), "x = 3, y = 4\no3$2bo!");
        let wide: Vec<(usize, usize)> = (0..200).step_by(2).map(|c| (0, c)).collect();
        let p = Pattern::new(200, 1, wide).unwrap();
        let text = emit_rle(&p, None);
        assert!(text.lines().all(|l| l.len() <= LINE_WIDTH));
        assert_eq!(parse_rle(&text).unwrap().0, p);
    }

    #[test]
    fn extended_rule_in_header() {
        let r = ExtendedRule::new(BaseRule::Life(LifeRule::conway()), 3).unwrap();
        let p = Pattern::new(1, 1, vec![(0, 0)]).unwrap();
        let text = emit_rle(&p, Some(&r));
        assert!(text.starts_with("x = 1, y = 1, rule = B3/S23R3\n"));
        assert_eq!(parse_rle(&text).unwrap(), (p, Some(r)));
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip(w in 1usize..90, h in 1usize..12, raw in proptest::collection::vec((0usize..12, 0usize..90), 0..120)) {
            let cells: Vec<_> = raw.into_iter().filter(|&(r, c)| r < h && c < w).collect();
            let p = Pattern::new(w, h, cells).unwrap();
            let text = emit_rle(&p, Some(&conway()));
            prop_assert_eq!(parse_rle(&text).unwrap(), (p, Some(conway())));
        }
    }
}
