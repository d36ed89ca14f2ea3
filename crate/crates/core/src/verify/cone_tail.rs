use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{trial_seed, EnvironmentSpec, Model};
use crate::error::{Error, Result};
use crate::lattice::{thresholds, ConeSpec, Point};
use crate::prob::Prob;
use crate::reach::{forward_cluster_with, ClusterOptions, Window};

use super::VerificationReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeTailConfig {
    pub model: Model,
    pub p: Prob,
    pub d: usize,
    pub eta_num: u64,
    pub eta_den: u64,
    pub m_grid: Vec<i64>,
    pub trials: u64,
    pub seed_base: u64,
    /// Clusters are explored in the cube of this radius.
    pub radius: i64,
}

impl ConeTailConfig {
    pub fn new(model: Model, p: Prob, d: usize) -> Self {
        ConeTailConfig { model, p, d, eta_num: 0, eta_den: 1, m_grid: (0..=8).collect(), trials: 2000, seed_base: 0, radius: 30 }
    }
}

/// Maximum-likelihood slope `b` of the log-linear model `count(m) ~
/// Poisson(trials e^(a + b m))`, which unlike a least-squares fit of `ln f`
/// needs no correction for zero counts. When only one `m` has a positive count
/// the likelihood has no maximum; the slope is then `-inf` if that `m` is the
/// first grid value, `+inf` if it is the last and NaN otherwise.
pub fn poisson_slope(ms: &[i64], counts: &[u64], trials: u64) -> f64 {
    let positive: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] > 0).collect();
    match positive.as_slice() {
        [] => return 0.0,
        [i] if *i == 0 => return f64::NEG_INFINITY,
        [i] if *i + 1 == counts.len() => return f64::INFINITY,
        [_] => return f64::NAN,
        _ => {}
    }
    let mean = ms.iter().sum::<i64>() as f64 / ms.len() as f64;
    let xs: Vec<f64> = ms.iter().map(|&m| m as f64 - mean).collect();
    let cs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let n = trials as f64;
    let loglik = |a: f64, b: f64| -> f64 { xs.iter().zip(&cs).map(|(x, c)| c * (a + b * x) - n * (a + b * x).exp()).sum() };
    let (mut a, mut b) = ((cs.iter().sum::<f64>() / (n * cs.len() as f64)).ln(), 0.0);
    for _ in 0..200 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (x, c) in xs.iter().zip(&cs) {
            let mu = n * (a + b * x).exp();
            ga += c - mu;
            gb += x * (c - mu);
            haa += mu;
            hab += mu * x;
            hbb += mu * x * x;
        }
        let det = haa * hbb - hab * hab;
        let (da, db) = ((hbb * ga - hab * gb) / det, (haa * gb - hab * ga) / det);
        let base = loglik(a, b);
        let mut step = 1.0;
        while step > 1e-12 && loglik(a + step * da, b + step * db) < base {
            step /= 2.0;
        }
        a += step * da;
        b += step * db;
        if (step * da).abs().max((step * db).abs()) < 1e-12 {
            break;
        }
    }
    b
}

fn above_p0(p: Prob, d: usize, eta_num: u64, eta_den: u64) -> Result<bool> {
    let t = thresholds(d, eta_num, eta_den)?;
    Ok(match t.p0.exact {
        Some(p0) => BigRational::new(BigInt::from(p.num()), BigInt::from(p.den())) > p0,
        None => p.to_f64() > t.p0.approx,
    })
}

/// Frequency over independent environments of the origin's cluster reaching
/// outside `K_eta - m 1`, for each `m` in the grid. The events are nested, so
/// the frequencies must be non-increasing; the fitted log-frequency slope must
/// be negative unless no trial ever left the cone.
pub fn check_cone_tail(cfg: &ConeTailConfig) -> Result<VerificationReport> {
    if !above_p0(cfg.p, cfg.d, cfg.eta_num, cfg.eta_den)? {
        return Err(Error::Invalid(format!("p = {} does not exceed p0 for eta = {}/{} in d = {}", cfg.p, cfg.eta_num, cfg.eta_den, cfg.d)));
    }
    if cfg.m_grid.len() < 2 || cfg.m_grid.windows(2).any(|w| w[0] >= w[1]) || cfg.trials == 0 {
        return Err(Error::Invalid("cone tail needs an increasing m grid of length >= 2 and trials > 0".into()));
    }
    let window = Window::cube(cfg.d, cfg.radius)?;
    let origin = Point::origin(cfg.d);
    let cones: Vec<ConeSpec> = cfg.m_grid.iter().map(|&m| ConeSpec::new(cfg.eta_num, cfg.eta_den, m)).collect::<Result<_>>()?;
    let hits: Vec<Vec<bool>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let env = EnvironmentSpec::new(cfg.model, cfg.p, trial_seed(cfg.seed_base, i), cfg.d)?;
            cones
                .iter()
                .map(|&cone| Ok(forward_cluster_with(&env, &origin, &window, &ClusterOptions { cone: Some(cone) })?.leaves_cone()))
                .collect()
        })
        .collect::<Result<_>>()?;
    let counts: Vec<u64> = (0..cones.len()).map(|j| hits.iter().filter(|h| h[j]).count() as u64).collect();

    let mut report = VerificationReport::new("cone_tail");
    report.cases = cfg.trials;
    for (m, c) in cfg.m_grid.iter().zip(&counts) {
        report.metric(&format!("f_m{m:02}"), *c as f64 / cfg.trials as f64);
    }
    let inputs = format!("{} p={} d={} eta={}/{}", cfg.model, cfg.p, cfg.d, cfg.eta_num, cfg.eta_den);
    for (w, m) in counts.windows(2).zip(cfg.m_grid.windows(2)) {
        if w[1] > w[0] {
            report.fail(None, format!("{inputs} m={}..{}", m[0], m[1]), format!("count <= {}", w[0]), w[1]);
        }
    }
    if counts.iter().all(|&c| c == 0) {
        report.note("no trial left the cone at any m; the trend check is vacuous");
        return Ok(report);
    }
    let slope = poisson_slope(&cfg.m_grid, &counts, cfg.trials);
    report.metric("slope", slope);
    if !(slope < 0.0) {
        report.fail(None, inputs, "negative log-frequency slope", slope);
    }
    Ok(report)
}
