use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::env::{EnvironmentSpec, Model};
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::prob::Prob;
use crate::reach::{forward_cluster, ClusterResult, Window};
use crate::stats::ShapeSample;

use super::VerificationReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionConfig {
    pub model: Model,
    pub p: Prob,
    pub n: i64,
    pub epsilon: f64,
    /// Radius of the sup-norm ball the inclusions are tested in.
    pub r: f64,
    /// Depth of the fine-structure test: points with `gamma <= -delta` must be
    /// reached exactly.
    pub delta: f64,
    pub seed: u64,
}

impl InclusionConfig {
    pub fn new(model: Model, p: Prob, seed: u64) -> Self {
        InclusionConfig { model, p, n: 400, epsilon: 0.15, r: 1.0, delta: 0.25, seed }
    }
}

/// A cone in the plane spanned by two rays, given by their points `(a, 1 - a)`
/// and `(1 - b, b)` on the line `x·1 = 1`. The positive quadrant is `a = b = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarCone {
    pub a: f64,
    pub b: f64,
}

const TOL: f64 = 1e-9;

impl PlanarCone {
    fn rays(&self) -> ([f64; 2], [f64; 2]) {
        ([self.a, 1.0 - self.a], [1.0 - self.b, self.b])
    }

    pub fn contains(&self, z: [f64; 2]) -> bool {
        let (ra, rb) = self.rays();
        let scale = z[0].abs().max(z[1].abs()).max(1.0);
        ra[0] * z[1] - ra[1] * z[0] >= -TOL * scale && z[0] * rb[1] - z[1] * rb[0] >= -TOL * scale
    }

    /// Sup-norm distance from `z` to the cone.
    pub fn distance(&self, z: [f64; 2]) -> f64 {
        if self.contains(z) {
            return 0.0;
        }
        let (ra, rb) = self.rays();
        ray_distance(z, ra).min(ray_distance(z, rb))
    }
}

/// `min_{t >= 0} |z - t r|_inf`, attained at `t = 0` or at a kink.
fn ray_distance(z: [f64; 2], r: [f64; 2]) -> f64 {
    let f = |t: f64| (z[0] - t * r[0]).abs().max((z[1] - t * r[1]).abs());
    let mut ts = vec![0.0];
    for (num, den) in [(z[0], r[0]), (z[1], r[1]), (z[0] - z[1], r[0] - r[1]), (z[0] + z[1], r[0] + r[1])] {
        if den.abs() > TOL {
            ts.push(num / den);
        }
    }
    ts.into_iter().filter(|&t| t >= 0.0).map(f).fold(f64::INFINITY, f64::min)
}

/// Outer and inner estimates of the cone from a planar shape sample. Each
/// direction `u` is moved to the boundary point `u + g 1`; using `g -+` the
/// half width of its confidence interval gives a boundary point that is
/// certainly outside (resp. inside) the true cone at that confidence.
fn planar_bounds(shape: &ShapeSample) -> Result<(PlanarCone, PlanarCone)> {
    let mut outer = [f64::NEG_INFINITY; 2];
    let mut inner = [f64::INFINITY; 2];
    for s in &shape.directions {
        let (Some(g), false) = (s.gamma.gamma_hat, s.gamma.unreliable) else { continue };
        let u = [s.u[0] as f64, s.u[1] as f64];
        let side = match u[0].partial_cmp(&u[1]) {
            Some(std::cmp::Ordering::Greater) => 0,
            Some(std::cmp::Ordering::Less) => 1,
            _ => continue,
        };
        let hw = if s.gamma.half_width.is_finite() { s.gamma.half_width } else { 0.0 };
        // coordinate of the boundary point on x·1 = 1 along this side's axis
        let chi = |g: f64| {
            let w = [u[0] + g, u[1] + g];
            let sum = w[0] + w[1];
            (sum > TOL).then(|| w[side] / sum)
        };
        if let (Some(lo), Some(hi)) = (chi(g - hw), chi(g + hw)) {
            outer[side] = outer[side].max(lo.max(hi));
            inner[side] = inner[side].min(lo.min(hi));
        }
    }
    if outer.iter().chain(&inner).any(|v| !v.is_finite()) {
        return Err(Error::Inconclusive("the direction grid does not reach both sides of the diagonal".into()));
    }
    // the positive quadrant is always inside the cone
    Ok((PlanarCone { a: outer[0].max(1.0), b: outer[1].max(1.0) }, PlanarCone { a: inner[0].max(1.0), b: inner[1].max(1.0) }))
}

/// Chebyshev distance from every window site to the nearest cluster member,
/// by breadth-first search over the `3^d - 1` king moves.
fn distance_to_members(c: &ClusterResult) -> Vec<u32> {
    let w = c.window();
    let d = w.dim();
    let mut dist = vec![u32::MAX; w.volume()];
    let mut queue = VecDeque::new();
    for i in c.members().ones() {
        dist[i] = 0;
        queue.push_back(i);
    }
    let moves: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut m| {
            (0..d)
                .map(|_| {
                    let s = (m % 3) as i64 - 1;
                    m /= 3;
                    s
                })
                .collect()
        })
        .filter(|v: &Vec<i64>| v.iter().any(|&s| s != 0))
        .collect();
    let mut x = vec![0; d];
    let mut y = vec![0; d];
    while let Some(i) = queue.pop_front() {
        w.decode(i, &mut x);
        for mv in &moves {
            for k in 0..d {
                y[k] = x[k] + mv[k];
            }
            if let Some(j) = w.index(&y) {
                if dist[j] == u32::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
    }
    dist
}

enum Cone {
    Orthant,
    Planar { outer: PlanarCone, inner: PlanarCone },
}

impl Cone {
    fn outer_distance(&self, z: &[i64]) -> f64 {
        match self {
            Cone::Orthant => z.iter().map(|&c| (-c).max(0)).max().unwrap_or(0) as f64,
            Cone::Planar { outer, .. } => outer.distance([z[0] as f64, z[1] as f64]),
        }
    }

    fn inner_contains(&self, z: &[f64]) -> bool {
        match self {
            Cone::Orthant => z.iter().all(|&c| c >= 0.0),
            Cone::Planar { inner, .. } => inner.contains([z[0], z[1]]),
        }
    }
}

/// Tests, on one environment at scale `n` (all in lattice units `x = n z`):
///
/// * every cluster member with `|x|_inf <= r n` lies within `epsilon n` of the
///   outer cone estimate;
/// * every lattice point with `|x|_inf <= r n` in the inner cone estimate lies
///   within `epsilon n` of a cluster member;
/// * every lattice point with `|x|_inf <= r n` and `x - delta n 1` in the
///   inner cone estimate is a cluster member. This holds for the half-orthant
///   model only: an orthant site whose `-e_i` neighbours are all Minus and
///   `+e_i` neighbours all Plus is never entered, so for the orthant model
///   such points are counted but not failed.
///
/// The cone is the positive orthant at `p = 1`; otherwise it is read off the
/// shape sample, which is only possible in the plane.
pub fn check_inclusions(cfg: &InclusionConfig, shape: &ShapeSample) -> Result<VerificationReport> {
    let d = shape.directions.first().map(|s| s.u.dim()).ok_or_else(|| Error::Inconclusive("empty shape sample".into()))?;
    if cfg.n <= 0 || !(cfg.epsilon > 0.0) || !(cfg.r > 0.0) || !(cfg.delta >= 0.0) {
        return Err(Error::Invalid("inclusions need n > 0, epsilon > 0, r > 0, delta >= 0".into()));
    }
    let cone = if cfg.p.is_one() {
        Cone::Orthant
    } else if d == 2 {
        let (outer, inner) = planar_bounds(shape)?;
        let spread = (outer.a - inner.a).abs().max((outer.b - inner.b).abs()) * cfg.r;
        if spread > cfg.epsilon {
            return Err(Error::Inconclusive(format!("cone estimate uncertainty {spread:.4} exceeds epsilon {}", cfg.epsilon)));
        }
        Cone::Planar { outer, inner }
    } else {
        return Err(Error::Inconclusive(format!("no cone estimate for p < 1 in d = {d}")));
    };

    let n = cfg.n as f64;
    let reach = (cfg.r * n).floor() as i64;
    let slack = (cfg.epsilon * n).ceil() as i64;
    let window = Window::cube(d, reach + slack + (cfg.n / 4).max(8))?;
    let env = EnvironmentSpec::new(cfg.model, cfg.p, cfg.seed, d)?;
    let c = forward_cluster(&env, &Point::origin(d), &window)?;
    let dist = distance_to_members(&c);

    let mut report = VerificationReport::new("inclusions");
    let (mut outside, mut uncovered, mut holes) = (0u64, 0u64, 0u64);
    let limit = cfg.epsilon * n + TOL;
    let mut x = vec![0; d];
    let mut shifted = vec![0.0; d];
    for i in 0..window.volume() {
        window.decode(i, &mut x);
        if x.iter().any(|c| c.abs() > reach) {
            continue;
        }
        report.cases += 1;
        let member = dist[i] == 0;
        if member && cone.outer_distance(&x) > limit {
            outside += 1;
        }
        let xf: Vec<f64> = x.iter().map(|&c| c as f64).collect();
        if cone.inner_contains(&xf) && dist[i] as f64 > limit {
            uncovered += 1;
        }
        for (s, &c) in shifted.iter_mut().zip(&xf) {
            *s = c - cfg.delta * n;
        }
        if !member && cone.inner_contains(&shifted) {
            holes += 1;
        }
    }
    let inputs = format!("{} p={} n={} epsilon={} r={} delta={}", cfg.model, cfg.p, cfg.n, cfg.epsilon, cfg.r, cfg.delta);
    let deep_asserted = cfg.model == Model::HalfOrthant;
    for (name, count, asserted) in [
        ("cluster inside cone + O_eps", outside, true),
        ("cone inside cluster + O_eps", uncovered, true),
        ("deep cone points reached", holes, deep_asserted),
    ] {
        report.metric(&name.replace(' ', "_"), count as f64);
        if asserted && count > 0 {
            report.fail(Some(cfg.seed), format!("{inputs}: {name}"), 0, count);
        }
    }
    if let Cone::Planar { outer, inner } = cone {
        report.metric("outer_a", outer.a);
        report.metric("outer_b", outer.b);
        report.metric("inner_a", inner.a);
        report.metric("inner_b", inner.b);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{shape_sample, GammaConfig, ShapeConfig};

    #[test]
    fn ray_distance_oracle() {
        // the quadrant: distance is the largest negative coordinate
        let q = PlanarCone { a: 1.0, b: 1.0 };
        for z in [[-3.0, 5.0], [2.0, -1.5], [-2.0, -4.0], [1.0, 1.0]] {
            let want = z.iter().map(|c: &f64| (-c).max(0.0)).fold(0.0, f64::max);
            assert!((q.distance(z) - want).abs() < 1e-12, "{z:?}");
        }
        // brute force over a fine grid of t for a tilted ray
        let wide = PlanarCone { a: 1.2, b: 1.1 };
        for z in [[3.0, -2.0], [-2.0, 3.0], [-1.0, -1.0]] {
            let (ra, rb) = wide.rays();
            let brute = (0..200_000)
                .map(|k| k as f64 * 1e-4)
                .flat_map(|t| [ra, rb].map(|r| (z[0] - t * r[0]).abs().max((z[1] - t * r[1]).abs())))
                .fold(f64::INFINITY, f64::min);
            assert!((wide.distance(z) - brute).abs() < 1e-3, "{z:?}");
        }
    }

    #[test]
    fn all_plus_inclusions_are_exact() {
        for d in [2usize, 3] {
            let shape = shape_sample(&ShapeConfig::new(GammaConfig::new(Model::Orthant, Prob::ONE, d))).unwrap();
            let n = if d == 2 { 40 } else { 8 };
            let cfg = InclusionConfig { n, ..InclusionConfig::new(Model::HalfOrthant, Prob::ONE, 1) };
            let r = check_inclusions(&cfg, &shape).unwrap();
            assert!(r.pass, "d={d} {:?}", r.failures);
        }
    }

    #[test]
    fn higher_dimensions_below_one_are_inconclusive() {
        let g = GammaConfig { n_ladder: vec![4], trials: 2, ..GammaConfig::new(Model::Orthant, "0.9".parse().unwrap(), 3) };
        let shape = shape_sample(&ShapeConfig { resolution: 1, extent: 0, gamma: g }).unwrap();
        let e = check_inclusions(&InclusionConfig::new(Model::Orthant, "0.9".parse().unwrap(), 0), &shape).unwrap_err();
        assert!(matches!(e, Error::Inconclusive(_)));
    }
}
