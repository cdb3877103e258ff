//! Reproducible initial conditions: random soups, single seeds and
//! radius-gradient fields.
//!
//! Every stream is a xoshiro256** generator whose state is filled from a
//! splitmix64 sequence started at the 64-bit seed. A cell is live when
//! `(next_u64 >> 11) / 2^53 < density`, drawn row-major, one draw per cell.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::engine::EngineError;
use crate::grid::{Boundary, Grid1D, Grid2D, RadiusField};

/// The splitmix64 output function applied to `x` (one generator step from
/// state `x`).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed: `h = base`, then for each part
/// `h = splitmix64(h ^ splitmix64(part))`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(base, |h, &p| splitmix64(h ^ splitmix64(p)))
}

/// Uniform draws in `[0, 1)` with 53 bits of resolution.
pub struct UnitStream(Xoshiro256StarStar);

impl UnitStream {
    pub fn new(seed: u64) -> Self {
        UnitStream(Xoshiro256StarStar::seed_from_u64(seed))
    }

    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
}

fn check_density(density: f64) -> Result<(), EngineError> {
    if (0.0..=1.0).contains(&density) {
        Ok(())
    } else {
        Err(EngineError::InvalidArgument(format!(
            "density {density} outside [0, 1]"
        )))
    }
}

pub fn random_soup_1d(
    width: usize,
    density: f64,
    seed: u64,
    boundary: Boundary,
) -> Result<Grid1D, EngineError> {
    check_density(density)?;
    let mut stream = UnitStream::new(seed);
    let mut g = Grid1D::new(width, boundary);
    for k in 0..width {
        if stream.next_unit() < density {
            g.set(k, true);
        }
    }
    Ok(g)
}

pub fn random_soup_2d(
    width: usize,
    height: usize,
    density: f64,
    seed: u64,
    boundary: Boundary,
) -> Result<Grid2D, EngineError> {
    check_density(density)?;
    let mut stream = UnitStream::new(seed);
    let mut g = Grid2D::new(width, height, boundary);
    for row in 0..height {
        for col in 0..width {
            if stream.next_unit() < density {
                g.set(row, col, true);
            }
        }
    }
    Ok(g)
}

/// Linear mixing field: the cell in column `c` takes `right_radius` with
/// probability `c / (width - 1)` and `left_radius` otherwise.
pub fn build_gradient_radius_field(
    width: usize,
    height: usize,
    left_radius: u32,
    right_radius: u32,
    seed: u64,
) -> Result<RadiusField, EngineError> {
    if width < 2 || height < 1 {
        return Err(EngineError::InvalidArgument(format!(
            "gradient field needs width >= 2 and height >= 1, got {width}x{height}"
        )));
    }
    if left_radius == 0 || right_radius == 0 {
        return Err(EngineError::InvalidArgument(
            "radii must be at least 1".to_string(),
        ));
    }
    let mut stream = UnitStream::new(seed);
    let span = (width - 1) as f64;
    let mut radii = Vec::with_capacity(width * height);
    for _ in 0..height {
        for col in 0..width {
            let p = col as f64 / span;
            radii.push(if stream.next_unit() < p {
                right_radius
            } else {
                left_radius
            });
        }
    }
    RadiusField::from_radii(width, height, radii).ok_or_else(|| {
        EngineError::InvalidArgument("radius exceeds field storage (255)".to_string())
    })
}
