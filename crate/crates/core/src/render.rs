//! Netpbm rendering of lattices, space-time diagrams and radius fields.
//!
//! * PBM: `P1` (plain) or `P4` (raw), `1` = live = black, rows top to
//!   bottom. `P4` rows are packed MSB-first and padded to whole bytes.
//! * PPM: `P6`, maxval 255. Live cells take `palette[R - 1]` for their
//!   radius `R`; dead cells are black.

use thiserror::Error;

use crate::engine::{Automaton, EngineError};
use crate::grid::{Grid1D, Grid2D, RadiusField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("palette has {colors} colors but the field's largest radius is {max_radius}")]
    PaletteTooSmall { colors: usize, max_radius: u32 },
    #[error("radius field is {field_w}x{field_h} but the grid is {grid_w}x{grid_h}")]
    DimensionMismatch {
        grid_w: usize,
        grid_h: usize,
        field_w: usize,
        field_h: usize,
    },
    #[error("malformed PBM: {0}")]
    Decode(String),
}

/// Anything that can be drawn as a binary image.
pub trait BitImage {
    fn image_width(&self) -> usize;
    fn image_height(&self) -> usize;
    fn pixel(&self, row: usize, col: usize) -> bool;
}

impl BitImage for Grid2D {
    fn image_width(&self) -> usize {
        self.width()
    }

    fn image_height(&self) -> usize {
        self.height()
    }

    fn pixel(&self, row: usize, col: usize) -> bool {
        self.get(row, col)
    }
}

impl BitImage for Grid1D {
    fn image_width(&self) -> usize {
        self.width()
    }

    fn image_height(&self) -> usize {
        1
    }

    fn pixel(&self, _row: usize, col: usize) -> bool {
        self.get(col)
    }
}

/// History of a 1-D run; row `t` is the state at time `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceTime {
    rows: Vec<Grid1D>,
}

impl SpaceTime {
    /// Records `initial` and the next `steps` states.
    pub fn record<A: Automaton<State = Grid1D>>(
        automaton: &A,
        initial: &Grid1D,
        steps: usize,
    ) -> Result<SpaceTime, EngineError> {
        let mut rows = Vec::with_capacity(steps + 1);
        rows.push(initial.clone());
        for _ in 0..steps {
            let next = automaton.step(rows.last().unwrap())?;
            rows.push(next);
        }
        Ok(SpaceTime { rows })
    }

    pub fn rows(&self) -> &[Grid1D] {
        &self.rows
    }
}

impl BitImage for SpaceTime {
    fn image_width(&self) -> usize {
        self.rows.first().map_or(0, Grid1D::width)
    }

    fn image_height(&self) -> usize {
        self.rows.len()
    }

    fn pixel(&self, row: usize, col: usize) -> bool {
        self.rows[row].get(col)
    }
}

/// A decoded bitmap, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BitImage for Bitmap {
    fn image_width(&self) -> usize {
        self.width
    }

    fn image_height(&self) -> usize {
        self.height
    }

    fn pixel(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PbmFormat {
    Plain,
    #[default]
    Raw,
}

pub fn render_pbm(image: &impl BitImage, format: PbmFormat) -> Vec<u8> {
    let (w, h) = (image.image_width(), image.image_height());
    match format {
        PbmFormat::Plain => {
            let mut out = format!("P1\n{w} {h}\n");
            for row in 0..h {
                let line: Vec<&str> = (0..w)
                    .map(|c| if image.pixel(row, c) { "1" } else { "0" })
                    .collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            out.into_bytes()
        }
        PbmFormat::Raw => {
            let mut out = format!("P4\n{w} {h}\n").into_bytes();
            let row_bytes = w.div_ceil(8);
            for row in 0..h {
                let mut bytes = vec![0u8; row_bytes];
                for c in 0..w {
                    if image.pixel(row, c) {
                        bytes[c / 8] |= 0x80 >> (c % 8);
                    }
                }
                out.extend_from_slice(&bytes);
            }
            out
        }
    }
}

/// Decodes `P1` or `P4` data (no comment lines).
pub fn decode_pbm(data: &[u8]) -> Result<Bitmap, RenderError> {
    let bad = |m: &str| RenderError::Decode(m.to_string());
    let mut pos = 0;
    let mut token = || -> Result<String, RenderError> {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("unexpected end of header"));
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };
    let magic = token()?;
    let width: usize = token()?.parse().map_err(|_| bad("bad width"))?;
    let height: usize = token()?.parse().map_err(|_| bad("bad height"))?;
    let mut bits = Vec::with_capacity(width * height);
    match magic.as_str() {
        "P1" => {
            let body = &data[pos..];
            bits.extend(
                body.iter()
                    .filter(|b| matches!(b, b'0' | b'1'))
                    .map(|&b| b == b'1'),
            );
            if bits.len() != width * height {
                return Err(bad("pixel count does not match dimensions"));
            }
        }
        "P4" => {
            let body = &data[pos + 1..];
            let row_bytes = width.div_ceil(8);
            if body.len() != row_bytes * height {
                return Err(bad("raster size does not match dimensions"));
            }
            for row in body.chunks(row_bytes.max(1)).take(height) {
                bits.extend((0..width).map(|c| row[c / 8] & (0x80 >> (c % 8)) != 0));
            }
        }
        _ => return Err(bad("expected P1 or P4")),
    }
    Ok(Bitmap {
        width,
        height,
        bits,
    })
}

/// Eight well-separated colors for radii 1..=8.
pub fn default_palette() -> Vec<[u8; 3]> {
    vec![
        [0x2e, 0xcc, 0x40], // 1 green
        [0xff, 0x41, 0x36], // 2 red
        [0x00, 0x74, 0xd9], // 3 blue
        [0xff, 0xdc, 0x00], // 4 yellow
        [0xb1, 0x0d, 0xc9], // 5 purple
        [0xff, 0x85, 0x1b], // 6 orange
        [0x7f, 0xdb, 0xff], // 7 aqua
        [0xf0, 0x12, 0xbe], // 8 fuchsia
    ]
}

pub fn render_ppm_radius(
    grid: &Grid2D,
    field: &RadiusField,
    palette: &[[u8; 3]],
) -> Result<Vec<u8>, RenderError> {
    if field.width() != grid.width() || field.height() != grid.height() {
        return Err(RenderError::DimensionMismatch {
            grid_w: grid.width(),
            grid_h: grid.height(),
            field_w: field.width(),
            field_h: field.height(),
        });
    }
    if palette.len() < field.max_radius() as usize {
        return Err(RenderError::PaletteTooSmall {
            colors: palette.len(),
            max_radius: field.max_radius(),
        });
    }
    let (w, h) = (grid.width(), grid.height());
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * 3);
    for row in 0..h {
        for col in 0..w {
            let rgb = if grid.get(row, col) {
                palette[field.get(row, col) as usize - 1]
            } else {
                [0, 0, 0]
            };
            out.extend_from_slice(&rgb);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EcaAutomaton;
    use crate::grid::Boundary;
    use crate::rule::EcaRule;
    use crate::soup::{build_gradient_radius_field, random_soup_2d};

    #[test]
    fn plain_pbm_of_full_square() {
        let g = Grid2D::from_rows(&["oo", "oo"], Boundary::Periodic);
        assert_eq!(render_pbm(&g, PbmFormat::Plain), b"P1\n2 2\n1 1\n1 1\n");
    }

    #[test]
    fn raw_pbm_layout() {
        let g = Grid2D::from_rows(&["o........o", ".........."], Boundary::Periodic);
        let bytes = render_pbm(&g, PbmFormat::Raw);
        assert_eq!(&bytes[..8], b"P4\n10 2\n");
        assert_eq!(&bytes[8..], &[0x80, 0x40, 0x00, 0x00]);
    }

    #[test]
    fn plain_and_raw_decode_identically() {
        let g = random_soup_2d(37, 11, 0.5, 5, Boundary::Periodic).unwrap();
        let p1 = decode_pbm(&render_pbm(&g, PbmFormat::Plain)).unwrap();
        let p4 = decode_pbm(&render_pbm(&g, PbmFormat::Raw)).unwrap();
        assert_eq!(p1, p4);
        assert_eq!((p1.width, p1.height), (37, 11));
        for r in 0..11 {
            for c in 0..37 {
                assert_eq!(p1.pixel(r, c), g.get(r, c));
            }
        }
    }

    #[test]
    fn space_time_dimensions() {
        let a = EcaAutomaton::homogeneous(EcaRule::new(110), 2).unwrap();
        let st = SpaceTime::record(&a, &Grid1D::single_seed(40, Boundary::Periodic), 25).unwrap();
        let img = decode_pbm(&render_pbm(&st, PbmFormat::Raw)).unwrap();
        assert_eq!((img.width, img.height), (40, 26));
        assert!(img.pixel(0, 20));
        assert!(img.bits.iter().filter(|&&b| b).count() > 1);
    }

    #[test]
    fn ppm_homogeneous_and_dead() {
        let g = random_soup_2d(8, 6, 0.5, 1, Boundary::Periodic).unwrap();
        let field = RadiusField::uniform(8, 6, 2).unwrap();
        let ppm = render_ppm_radius(&g, &field, &default_palette()).unwrap();
        let header = b"P6\n8 6\n255\n";
        assert_eq!(&ppm[..header.len()], header);
        let mut colors: Vec<[u8; 3]> = ppm[header.len()..]
            .chunks(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        colors.sort();
        colors.dedup();
        assert_eq!(colors.len(), 2);

        let dead = Grid2D::new(8, 6, Boundary::Periodic);
        let ppm = render_ppm_radius(&dead, &field, &default_palette()).unwrap();
        assert!(ppm[header.len()..].iter().all(|&b| b == 0));
    }

    #[test]
    fn ppm_gradient_columns() {
        let (w, h) = (60, 200);
        let g = random_soup_2d(w, h, 1.0, 1, Boundary::Periodic).unwrap();
        let field = build_gradient_radius_field(w, h, 1, 2, 3).unwrap();
        let pal = default_palette();
        let ppm = render_ppm_radius(&g, &field, &pal).unwrap();
        let header_len = format!("P6\n{w} {h}\n255\n").len();
        let px = |r: usize, c: usize| {
            let o = header_len + 3 * (r * w + c);
            [ppm[o], ppm[o + 1], ppm[o + 2]]
        };
        let share = |c: usize| (0..h).filter(|&r| px(r, c) == pal[1]).count() as f64 / h as f64;
        assert_eq!(share(0), 0.0);
        assert_eq!(share(w - 1), 1.0);
        let left: f64 = (0..10).map(share).sum::<f64>() / 10.0;
        let right: f64 = (w - 10..w).map(share).sum::<f64>() / 10.0;
        assert!(left < 0.2 && right > 0.8, "left {left} right {right}");
    }

    #[test]
    fn ppm_errors() {
        let g = Grid2D::new(4, 4, Boundary::Periodic);
        let field = RadiusField::uniform(4, 4, 3).unwrap();
        assert!(matches!(
            render_ppm_radius(&g, &field, &default_palette()[..2]),
            Err(RenderError::PaletteTooSmall { .. })
        ));
        let other = RadiusField::uniform(5, 4, 1).unwrap();
        assert!(render_ppm_radius(&g, &other, &default_palette()).is_err());
    }
}
