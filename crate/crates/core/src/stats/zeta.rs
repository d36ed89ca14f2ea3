use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::prob::Prob;
use crate::reach::{forward_cluster, Level, Window};

use super::gamma::{gamma_estimate, GammaConfig, GammaEstimate, LadderRecord, Z95};
use super::greedy::min_valid_k;
use super::passage::{Margins, PassageValue, Variant};

/// `L_{nv} = min { k : nv + k e1 reachable }` for `v` with `v_1 = 0`, as a
/// passage value (the variant field is [`Variant::Beta`]). Censoring follows
/// the passage rule: the padding is doubled and the value must not move.
pub fn left_boundary_at<E: Environment + ?Sized>(env: &E, v: &Point, n: u64, margins: &Margins) -> Result<PassageValue> {
    let d = env.dim();
    if v.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: v.dim() });
    }
    if v[0] != 0 {
        return Err(Error::Invalid(format!("{v} must have first coordinate 0")));
    }
    let ni = i64::try_from(n).ok().filter(|&n| n > 0).ok_or_else(|| Error::Invalid(format!("scale {n}")))?;
    let nv = v.scale(ni)?;
    let spread = nv.iter().max().unwrap() - nv.iter().min().unwrap();
    let pad = margins.pad.unwrap_or(16 + spread / 8);
    let inner = scan_e1(env, &nv, pad, margins.max_sites)?;
    let outer = scan_e1(env, &nv, 2 * pad, margins.max_sites)?;
    let censored = outer.1 || inner.0 != outer.0;
    Ok(PassageValue { variant: Variant::Beta, n, u: v.clone(), value: outer.0, censored })
}

fn scan_e1<E: Environment + ?Sized>(env: &E, nv: &Point, pad: i64, max_sites: usize) -> Result<(Level, bool)> {
    let d = env.dim();
    // below the half-space through o nothing is reached; above, the greedy
    // walk bounds how far along e1 one must go to undo the negative parts
    let k_lo = -(nv.diag() as i64) - pad;
    let negative: i64 = nv.iter().map(|&c| (-c).max(0)).sum();
    let k_greedy = min_valid_k(env_p(env), d).unwrap_or(1) as i64;
    let k_hi = (k_greedy * negative + pad).max(k_lo);
    let at = |k: i64| {
        let mut x = nv.to_vec();
        x[0] = k;
        x
    };
    let corners = [Point::origin(d), Point::new(at(k_lo))?, Point::new(at(k_hi))?];
    let window = Window::bounding(&corners, pad, max_sites)?;
    let c = forward_cluster(env, &Point::origin(d), &window)?;
    Ok(match (k_lo..=k_hi).find(|&k| c.contains(&at(k))) {
        Some(k) => (Level::Finite(k), k == k_lo),
        None => (Level::PosInf, false),
    })
}

// tables carry no p and get the all-Minus bound
fn env_p<E: Environment + ?Sized>(env: &E) -> Prob {
    env.plus_probability().unwrap_or(Prob::ZERO)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaEstimate {
    pub v: Point,
    /// `L_{nv} / n` per ladder value.
    pub direct_records: Vec<LadderRecord>,
    /// `mean(L_{nv}) / n` at the largest ladder value with data.
    pub direct: Option<f64>,
    pub direct_half_width: f64,
    /// Zero of `t -> gamma(v + t e1)`.
    pub root: Option<f64>,
    pub root_half_width: f64,
    /// Evaluations `(j, gamma_hat(q v + j e1))` used by the root search.
    pub evaluations: Vec<(i64, f64)>,
    pub q: u64,
}

impl ZetaEstimate {
    /// `|direct - root|` and the combined 95% half width.
    pub fn discrepancy(&self) -> Option<(f64, f64)> {
        let (a, b) = (self.direct?, self.root?);
        Some(((a - b).abs(), self.direct_half_width.hypot(self.root_half_width)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaConfig {
    pub gamma: GammaConfig,
    /// Resolution of the root search: `gamma` is evaluated at `q v + j e1`.
    pub q: u64,
    /// Cap on bracket widenings.
    pub max_widen: u32,
}

impl ZetaConfig {
    pub fn new(gamma: GammaConfig) -> Self {
        ZetaConfig { gamma, q: 4, max_widen: 12 }
    }
}

/// Estimates `zeta(v)` twice: directly from `L_{nv}/n`, and as the zero of the
/// decreasing map `t -> gamma(v + t e1)` found by integer bisection on
/// `j -> gamma(q v + j e1)` followed by linear interpolation.
pub fn zeta_estimate(cfg: &ZetaConfig, v: &Point) -> Result<ZetaEstimate> {
    let g = &cfg.gamma;
    g.validate()?;
    if cfg.q == 0 {
        return Err(Error::Invalid("q must be positive".into()));
    }
    let mut direct_records = Vec::new();
    for &n in &g.n_ladder {
        let values: Vec<PassageValue> = (0..g.trials)
            .into_par_iter()
            .map(|i| left_boundary_at(&g.env(i), v, n, &g.margins))
            .collect::<Result<_>>()?;
        direct_records.push(LadderRecord::from_values(n, &values));
    }
    let best = direct_records.iter().rev().find(|r| r.used >= 2);
    let direct = best.map(|r| r.scaled_mean);
    let direct_half_width = best.map_or(f64::NAN, |r| Z95 * r.scaled_se);

    let (root, root_half_width, evaluations) = root_search(cfg, v)?;
    Ok(ZetaEstimate { v: v.clone(), direct_records, direct, direct_half_width, root, root_half_width, evaluations, q: cfg.q })
}

type RootResult = (Option<f64>, f64, Vec<(i64, f64)>);

fn root_search(cfg: &ZetaConfig, v: &Point) -> Result<RootResult> {
    let q = cfg.q as i64;
    let qv = v.scale(q)?;
    // the root search runs at scale q, so shrink the ladder to keep n q u fixed
    let mut gcfg = cfg.gamma.clone();
    gcfg.n_ladder = shrink_ladder(&cfg.gamma.n_ladder, cfg.q);
    let mut cache: BTreeMap<i64, GammaEstimate> = BTreeMap::new();
    let mut eval = |j: i64| -> Result<f64> {
        if let Some(e) = cache.get(&j) {
            return e.gamma_hat.ok_or_else(|| Error::Inconclusive(format!("no estimate at j = {j}")));
        }
        let mut u = qv.to_vec();
        u[0] += j;
        let e = gamma_estimate(&gcfg, &Point::new(u)?)?;
        let value = e.gamma_hat;
        cache.insert(j, e);
        value.ok_or_else(|| Error::Inconclusive(format!("no estimate at j = {j}")))
    };
    // gamma(u) >= -u·1/d > 0 once (v + t e1)·1 < 0
    let mut lo = q * (-(v.diag() as i64) - 1);
    let mut step = q;
    let mut widen = 0;
    while eval(lo)? <= 0.0 {
        lo -= step;
        step *= 2;
        widen += 1;
        if widen > cfg.max_widen {
            return Err(Error::Inconclusive("no positive bracket end".into()));
        }
    }
    let mut hi = lo + q;
    step = q;
    widen = 0;
    while eval(hi)? > 0.0 {
        // |gamma(u) - gamma(w)| <= |u - w|_1 keeps the search finite
        lo = hi;
        step *= 2;
        hi += step;
        widen += 1;
        if widen > cfg.max_widen {
            return Err(Error::Inconclusive("no non-positive bracket end".into()));
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eval(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (g_lo, g_hi) = (eval(lo)?, eval(hi)?);
    let drop = g_lo - g_hi;
    let t = (lo as f64 + g_lo / drop) / q as f64;
    let hw = cache[&lo].half_width.max(cache[&hi].half_width) / q as f64 / drop;
    let evaluations = cache.iter().filter_map(|(&j, e)| e.gamma_hat.map(|g| (j, g))).collect();
    Ok((Some(t), hw, evaluations))
}

fn shrink_ladder(ladder: &[u64], q: u64) -> Vec<u64> {
    let mut out: Vec<u64> = ladder.iter().map(|&n| n.div_ceil(q).max(1)).collect();
    out.dedup();
    out
}
