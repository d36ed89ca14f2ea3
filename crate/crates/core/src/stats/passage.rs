use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::lattice::{sigma, transverse, Point, SlabSpec};
use crate::reach::{backward_cluster, forward_cluster, ClusterResult, Level, Window, DEFAULT_MAX_SITES};

/// Which passage functional to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// `inf { k : k1 + nu reachable }`
    #[serde(rename = "beta")]
    Beta,
    /// Same, with paths confined to the slab `Lambda(0, n)`.
    #[serde(rename = "B")]
    B,
    /// Paths confined to `Lambda(-inf, n)`.
    #[serde(rename = "beta0")]
    Beta0,
    /// Paths confined to `Lambda(-inf, floor(nc) + n)`.
    #[serde(rename = "beta1")]
    Beta1,
    /// `sup { k : k1 + nu reaches the origin }`
    #[serde(rename = "betahat")]
    BetaHat,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Beta => "beta",
            Variant::B => "B",
            Variant::Beta0 => "beta0",
            Variant::Beta1 => "beta1",
            Variant::BetaHat => "betahat",
        }
    }

    fn uses_slab(self) -> bool {
        matches!(self, Variant::B | Variant::Beta0 | Variant::Beta1)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "beta" => Variant::Beta,
            "B" => Variant::B,
            "beta0" => Variant::Beta0,
            "beta1" => Variant::Beta1,
            "betahat" => Variant::BetaHat,
            _ => return Err(Error::Invalid(format!("unknown passage variant {s:?}"))),
        })
    }
}

/// How far the exploration window reaches past the target line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Margins {
    /// Padding on every side of the bounding box. Defaults to
    /// `16 + (max_i nu_i - min_i nu_i) / 8`.
    pub pad: Option<i64>,
    /// The factor `c` of the extended slab. Defaults to `3 max(1, 1/sigma)`.
    pub slab_factor: Option<f64>,
    pub max_sites: usize,
}

impl Default for Margins {
    fn default() -> Self {
        Margins { pad: None, slab_factor: None, max_sites: DEFAULT_MAX_SITES }
    }
}

impl Margins {
    /// Depends on `nu` only through its spread, so it is unchanged by
    /// diagonal shifts and by trading `n` against a scaling of `u`.
    fn pad(&self, nu: &Point) -> i64 {
        let spread = nu.iter().max().unwrap_or(&0) - nu.iter().min().unwrap_or(&0);
        self.pad.unwrap_or(16 + spread / 8)
    }

    /// `floor(n c)`
    fn extension(&self, u: &Point, n: i64) -> Result<i64> {
        match self.slab_factor {
            Some(c) if c.is_finite() && c >= 0.0 => Ok((n as f64 * c).floor() as i64),
            Some(c) => Err(Error::Invalid(format!("slab factor {c}"))),
            None => {
                let s = sigma(u, &transverse(u)?)?;
                let c = Ratio::from_integer(3) * std::cmp::max(Ratio::from_integer(1), s.recip());
                Ok((c * n as i128).floor().to_integer() as i64)
            }
        }
    }
}

/// One evaluated passage functional.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassageValue {
    pub variant: Variant,
    pub n: u64,
    pub u: Point,
    pub value: Level,
    /// The value might change if the window were enlarged.
    pub censored: bool,
}

impl PassageValue {
    /// The value when finite and uncensored.
    pub fn usable(&self) -> Option<i64> {
        if self.censored {
            None
        } else {
            self.value.finite()
        }
    }
}

/// The target line `k 1 + nu` for `k` in `[k_lo, k_hi]`, and a window holding
/// it together with the origin.
struct Line {
    nu: Point,
    k_lo: i64,
    k_hi: i64,
    window: Window,
}

impl Line {
    fn point(&self, k: i64) -> Vec<i64> {
        self.nu.iter().map(|c| c + k).collect()
    }
}

fn line_for(u: &Point, n: i64, backward: bool, extra: Option<&Point>, pad: i64, max_sites: usize) -> Result<Line> {
    let nu = u.scale(n)?;
    let d = u.dim() as i128;
    let s = nu.diag();
    // the cluster hugs the half-space through the origin; k1 + nu crosses it
    // near -s/d, and all coordinates of k1 + nu have the right sign beyond
    // -min (forward) or -max (backward)
    let (k_lo, k_hi) = if backward {
        (-nu.iter().max().copied().unwrap_or(0) - pad, (-s).div_euclid(d) as i64 + i64::from((-s).rem_euclid(d) != 0) + pad)
    } else {
        ((-s).div_euclid(d) as i64 - pad, -nu.iter().min().copied().unwrap_or(0) + pad)
    };
    let k_hi = k_hi.max(k_lo);
    let mut corners = vec![Point::origin(u.dim()), nu.shift_diag(k_lo)?, nu.shift_diag(k_hi)?];
    corners.extend(extra.cloned());
    let window = Window::bounding(&corners, pad, max_sites)?;
    Ok(Line { nu, k_lo, k_hi, window })
}

/// Smallest `k` on the line inside the cluster, and whether it sits on the
/// first scanned point.
fn scan_min(c: &ClusterResult, line: &Line) -> (Level, bool) {
    match (line.k_lo..=line.k_hi).find(|&k| c.contains(&line.point(k))) {
        Some(k) => (Level::Finite(k), k == line.k_lo),
        None => (Level::PosInf, false),
    }
}

/// Mirror image of [`scan_min`] for backward clusters.
fn scan_max(c: &ClusterResult, line: &Line) -> (Level, bool) {
    match (line.k_lo..=line.k_hi).rev().find(|&k| c.contains(&line.point(k))) {
        Some(k) => (Level::Finite(k), k == line.k_hi),
        None => (Level::NegInf, false),
    }
}

/// Windows only ever gain members when they grow, so a value is trusted when
/// doubling the padding leaves it unchanged. The reported value comes from the
/// larger window.
fn settle(inner: (Level, bool), outer: (Level, bool)) -> (Level, bool) {
    (outer.0, outer.1 || inner.0 != outer.0)
}

fn check_args<E: Environment + ?Sized>(env: &E, u: &Point, n: u64) -> Result<i64> {
    if env.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: env.dim(), got: u.dim() });
    }
    if n == 0 || n > i64::MAX as u64 {
        return Err(Error::Invalid(format!("scale n = {n} must be positive")));
    }
    Ok(n as i64)
}

fn slab_for(variant: Variant, u: &Point, n: i64, margins: &Margins) -> Result<Option<SlabSpec>> {
    Ok(match variant {
        Variant::B => Some(SlabSpec::between(u, 0, n)?),
        Variant::Beta0 => Some(SlabSpec::below(u, n)?),
        Variant::Beta1 => Some(SlabSpec::below(u, margins.extension(u, n)? + n)?),
        Variant::Beta | Variant::BetaHat => None,
    })
}

fn evaluate<E: Environment + ?Sized>(env: &E, u: &Point, n: i64, variant: Variant, pad: i64, margins: &Margins) -> Result<(Level, bool)> {
    let origin = Point::origin(u.dim());
    if variant == Variant::BetaHat {
        let line = line_for(u, n, true, None, pad, margins.max_sites)?;
        return Ok(scan_max(&backward_cluster(env, &origin, &line.window)?, &line));
    }
    let extra = match variant {
        Variant::Beta1 => Some(u.scale(margins.extension(u, n)? + n)?),
        _ => None,
    };
    let mut line = line_for(u, n, false, extra.as_ref(), pad, margins.max_sites)?;
    if let Some(s) = slab_for(variant, u, n, margins)? {
        line.window = line.window.with_slab(s)?;
    }
    Ok(scan_min(&forward_cluster(env, &origin, &line.window)?, &line))
}

/// Evaluates one passage functional from the origin on one environment.
///
/// For a diagonal `u = j 1` the line-free variants use `beta_n(j 1) =
/// beta_n(o) - n j`; slab variants need a transverse direction and fail.
pub fn passage<E: Environment + ?Sized>(env: &E, u: &Point, n: u64, variant: Variant, margins: &Margins) -> Result<PassageValue> {
    let ni = check_args(env, u, n)?;
    let d = u.dim();
    if variant.uses_slab() && u.is_diagonal() {
        return Err(Error::NoTransverseDirection(u.to_vec()));
    }
    if u.is_diagonal() && u[0] != 0 {
        let j = u[0];
        let base = passage(env, &Point::origin(d), n, variant, margins)?;
        let shift = ni.checked_mul(j).ok_or(Error::CoordinateRange(ni as i128 * j as i128))?;
        let value = match base.value {
            Level::Finite(k) => Level::Finite(k.checked_sub(shift).ok_or(Error::CoordinateRange(k as i128 - shift as i128))?),
            other => other,
        };
        return Ok(PassageValue { u: u.clone(), value, ..base });
    }
    let pad = margins.pad(&u.scale(ni)?);
    let inner = evaluate(env, u, ni, variant, pad, margins)?;
    let outer = evaluate(env, u, ni, variant, 2 * pad, margins)?;
    let (value, censored) = settle(inner, outer);
    Ok(PassageValue { variant, n, u: u.clone(), value, censored })
}

/// `beta, beta1, beta0, B` evaluated in one common window, so that the
/// nesting of their slabs makes them ordered exactly.
pub fn passage_chain<E: Environment + ?Sized>(env: &E, u: &Point, n: u64, margins: &Margins) -> Result<[PassageValue; 4]> {
    let ni = check_args(env, u, n)?;
    transverse(u)?;
    let extra = u.scale(margins.extension(u, ni)? + ni)?;
    let pad = margins.pad(&u.scale(ni)?);
    let inner = line_for(u, ni, false, Some(&extra), pad, margins.max_sites)?;
    let outer = line_for(u, ni, false, Some(&extra), 2 * pad, margins.max_sites)?;
    let origin = Point::origin(u.dim());
    let eval = |variant: Variant| -> Result<PassageValue> {
        let slab = slab_for(variant, u, ni, margins)?;
        let run = |line: &Line| -> Result<(Level, bool)> {
            let mut window = line.window.clone();
            if let Some(s) = slab.clone() {
                window = window.with_slab(s)?;
            }
            Ok(scan_min(&forward_cluster(env, &origin, &window)?, line))
        };
        let (value, censored) = settle(run(&inner)?, run(&outer)?);
        Ok(PassageValue { variant, n, u: u.clone(), value, censored })
    };
    Ok([eval(Variant::Beta)?, eval(Variant::Beta1)?, eval(Variant::Beta0)?, eval(Variant::B)?])
}
