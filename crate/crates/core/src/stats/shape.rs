use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Point;

use super::gamma::{gamma_estimate, ratio_f64, GammaConfig, GammaEstimate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeConfig {
    pub gamma: GammaConfig,
    /// Directions are the integer `u` with `u·1 = resolution`...
    pub resolution: i64,
    /// ...and every coordinate at least `-extent`.
    pub extent: i64,
}

impl ShapeConfig {
    pub fn new(gamma: GammaConfig) -> Self {
        ShapeConfig { gamma, resolution: 4, extent: 2 }
    }
}

/// All integer `u` with `u·1 = resolution` and `u_i >= -extent`, in
/// lexicographic order.
pub fn direction_grid(d: usize, resolution: i64, extent: i64) -> Result<Vec<Point>> {
    if resolution <= 0 || extent < 0 {
        return Err(Error::Invalid(format!("resolution {resolution} must be positive and extent {extent} non-negative")));
    }
    let total = resolution + d as i64 * extent;
    let mut out = Vec::new();
    let mut cur = vec![0i64; d];
    fn fill(i: usize, left: i64, extent: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if i + 1 == cur.len() {
            cur[i] = left - extent;
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur[i] = a - extent;
            fill(i + 1, left - a, extent, cur, out);
        }
    }
    let mut raw = Vec::new();
    fill(0, total, extent, &mut cur, &mut raw);
    for c in raw {
        out.push(Point::new(c)?);
    }
    Ok(out)
}

/// A point of the estimated shape, on the simplex `x·1 = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiPoint {
    /// Exact coordinates as `"num/den"`.
    pub exact: Vec<String>,
    pub coords: Vec<f64>,
    #[serde(skip)]
    pub ratios: Vec<Ratio<i128>>,
}

impl ChiPoint {
    /// `(u + g 1) / (u·1 + d g)`, or `None` when the denominator is not positive.
    pub fn from_offset(u: &Point, g: Ratio<i128>) -> Option<Self> {
        let d = u.dim() as i128;
        let scale = Ratio::from_integer(u.diag()) + g * d;
        if scale <= Ratio::from_integer(0) {
            return None;
        }
        let ratios: Vec<Ratio<i128>> = u.iter().map(|&c| (Ratio::from_integer(c as i128) + g) / scale).collect();
        Some(ChiPoint {
            exact: ratios.iter().map(Ratio::to_string).collect(),
            coords: ratios.iter().map(ratio_f64).collect(),
            ratios,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeDirection {
    pub u: Point,
    pub gamma: GammaEstimate,
    pub point: Option<ChiPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSample {
    pub resolution: i64,
    pub extent: i64,
    pub directions: Vec<ShapeDirection>,
    pub warnings: Vec<String>,
}

impl ShapeSample {
    pub fn points(&self) -> impl Iterator<Item = &ChiPoint> {
        self.directions.iter().filter_map(|s| s.point.as_ref())
    }

    /// Directions whose estimate was flagged.
    pub fn unreliable_fraction(&self) -> f64 {
        let bad = self.directions.iter().filter(|s| s.gamma.unreliable).count();
        bad as f64 / self.directions.len().max(1) as f64
    }
}

/// Estimates `gamma` on the direction grid and moves each direction along the
/// diagonal onto the boundary of `C = {gamma <= 0}` using
/// `gamma(u + r 1) = gamma(u) - r`, then projects onto `x·1 = 1`.
pub fn shape_sample(cfg: &ShapeConfig) -> Result<ShapeSample> {
    let grid = direction_grid(cfg.gamma.d, cfg.resolution, cfg.extent)?;
    let mut directions = Vec::with_capacity(grid.len());
    let mut warnings = Vec::new();
    for u in grid {
        let gamma = gamma_estimate(&cfg.gamma, &u)?;
        let point = match (&gamma.gamma_ratio, gamma.unreliable) {
            (Some(g), false) => {
                let p = ChiPoint::from_offset(&u, *g);
                if p.is_none() {
                    warnings.push(format!("direction {u}: boundary offset {g} leaves the simplex"));
                }
                p
            }
            _ => {
                warnings.push(format!("direction {u}: unreliable estimate excluded"));
                None
            }
        };
        directions.push(ShapeDirection { u, gamma, point });
    }
    Ok(ShapeSample { resolution: cfg.resolution, extent: cfg.extent, directions, warnings })
}
