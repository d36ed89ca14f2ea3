//! The four commands. Each computes everything first and writes outputs only
//! once the computation has succeeded.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use orthant::reach::{boundary_function, Level};
use orthant::stats::{gamma_estimate, shape_sample, write_summary_csv, GammaConfig, GammaEstimate, ShapeConfig, ShapeSample};
use orthant::verify::{
    check_cone_tail, check_inclusions, coupling_suite, mutual_growth, oracle_sweep, theorem_l_suite, ConeTailConfig, InclusionConfig,
    VerificationReport,
};
use orthant::{Error, Point, Prob, Window};
use rayon::prelude::*;

use crate::config::{RunConfig, Suite};
use crate::svg;

/// What a command wants the process to exit with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Soft,
}

fn emit(path: Option<&Path>, data: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, data).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(data)?;
            Ok(())
        }
    }
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn estimate_gamma(cfg: &RunConfig) -> Result<Status> {
    let estimates: Vec<GammaEstimate> = cfg.directions.iter().map(|u| gamma_estimate(&cfg.gamma, u)).collect::<Result<_, _>>()?;
    let mut csv = Vec::new();
    if cfg.csv.is_some() {
        write_summary_csv(&estimates, &mut csv)?;
    }
    emit(cfg.out.as_deref(), &jsonl(&estimates)?)?;
    if let Some(path) = &cfg.csv {
        emit(Some(path), &csv)?;
    }
    for e in &estimates {
        eprintln!("{e}");
    }
    Ok(breach(estimates.iter().filter(|e| e.unreliable).count(), estimates.len(), cfg.unreliable_cap))
}

fn breach(bad: usize, total: usize, cap: f64) -> Status {
    if bad as f64 > cap * total as f64 {
        eprintln!("{bad} of {total} estimates unreliable (cap {cap})");
        Status::Soft
    } else {
        Status::Ok
    }
}

fn shape_csv(shape: &ShapeSample, d: usize) -> String {
    let mut s = String::from("u");
    for i in 1..=d {
        s.push_str(&format!(",chi{i}"));
    }
    for i in 1..=d {
        s.push_str(&format!(",chi{i}_exact"));
    }
    s.push_str(",gamma_hat,half_width,unreliable\n");
    for dir in &shape.directions {
        let u: Vec<String> = dir.u.iter().map(i64::to_string).collect();
        s.push_str(&u.join(" "));
        match &dir.point {
            Some(p) => {
                for c in &p.coords {
                    s.push_str(&format!(",{c}"));
                }
                for e in &p.exact {
                    s.push_str(&format!(",{e}"));
                }
            }
            None => s.push_str(&",".repeat(2 * d)),
        }
        let g = dir.gamma.gamma_hat.map(|g| g.to_string()).unwrap_or_default();
        s.push_str(&format!(",{g},{},{}\n", dir.gamma.half_width, dir.gamma.unreliable));
    }
    s
}

pub fn shape(cfg: &RunConfig) -> Result<Status> {
    let sc = ShapeConfig { gamma: cfg.gamma.clone(), resolution: cfg.resolution, extent: cfg.extent };
    let sample = shape_sample(&sc)?;
    let d = cfg.gamma.d;
    let csv = shape_csv(&sample, d);
    let picture = cfg.svg.as_ref().map(|_| svg::render(&sample, d, &format!("shape of the limit cone, {} p = {}", cfg.gamma.model, cfg.gamma.p)));
    emit(cfg.csv.as_deref().or(cfg.out.as_deref()), csv.as_bytes())?;
    if let (Some(path), Some(picture)) = (&cfg.svg, picture) {
        emit(Some(path), picture.as_bytes())?;
    }
    for w in &sample.warnings {
        eprintln!("{w}");
    }
    let bad = sample.directions.iter().filter(|s| s.gamma.unreliable).count();
    Ok(breach(bad, sample.directions.len(), cfg.unreliable_cap))
}

fn seeds(cfg: &RunConfig, default: u64) -> Vec<u64> {
    (0..cfg.seeds.unwrap_or(default)).map(|i| cfg.gamma.seed_base + i).collect()
}

fn run_suite(cfg: &RunConfig, suite: Suite) -> Result<VerificationReport, Error> {
    let d = cfg.gamma.d;
    let p_or = |default: &str| cfg.p_given.unwrap_or_else(|| default.parse().expect("default probability"));
    match suite {
        Suite::Oracle => {
            let (lo, hi) = if d == 2 { (vec![-1, -1], vec![1, 1]) } else { (vec![0; d], vec![1; d]) };
            oracle_sweep(&lo, &hi)
        }
        Suite::TheoremL => {
            let w = Window::cube(d, cfg.radius.unwrap_or(40))?;
            theorem_l_suite(&seeds(cfg, 20), p_or("0.8"), &w, cfg.margin.unwrap_or(15), cfg.control)
        }
        Suite::Coupling => {
            let grid: Vec<Prob> = if cfg.p_grid.is_empty() { ["0.5", "0.7", "0.9"].iter().map(|p| p.parse().unwrap()).collect() } else { cfg.p_grid.clone() };
            coupling_suite(&seeds(cfg, 10), &grid, &Window::cube(d, cfg.radius.unwrap_or(20))?)
        }
        Suite::ConeTail => {
            let tail = ConeTailConfig {
                m_grid: (0..=cfg.m_max).collect(),
                trials: cfg.trials_given.unwrap_or(2000),
                seed_base: cfg.gamma.seed_base,
                radius: cfg.radius.unwrap_or(30),
                ..ConeTailConfig::new(cfg.gamma.model, p_or("0.95"), d)
            };
            check_cone_tail(&tail)
        }
        Suite::Inclusions => {
            let p = p_or("0.95");
            let gamma = GammaConfig { p, ..cfg.gamma.clone() };
            let shape = shape_sample(&ShapeConfig { gamma, resolution: cfg.resolution, extent: cfg.extent })?;
            let inc = InclusionConfig { n: cfg.n, epsilon: cfg.epsilon, r: cfg.r, delta: cfg.delta, ..InclusionConfig::new(cfg.gamma.model, p, cfg.gamma.seed_base) };
            check_inclusions(&inc, &shape)
        }
        Suite::MutualGrowth => {
            let env = GammaConfig { p: p_or("0.95"), ..cfg.gamma.clone() }.env(0);
            let mut r = VerificationReport::new("mutual_growth");
            for (radius, size) in mutual_growth(&env, &[4, 8, 16, 32])? {
                r.cases += 1;
                r.metric(&format!("size_r{radius:02}"), size as f64);
            }
            r.note("exploratory: sizes of the mutual cluster of the origin, nothing is asserted");
            Ok(r)
        }
    }
}

pub fn verify(cfg: &RunConfig) -> Result<Status> {
    let mut reports = Vec::new();
    let mut hard_ok = true;
    for &suite in &cfg.suites {
        let report = match run_suite(cfg, suite) {
            Ok(r) => r,
            Err(Error::Inconclusive(msg)) => {
                let mut r = VerificationReport::new(format!("{suite:?}"));
                r.fail(None, "inconclusive", "a decision", msg);
                r
            }
            Err(e) => return Err(e.into()),
        };
        let class = if suite.is_hard() { "hard" } else { "soft" };
        eprintln!("{} [{class}]", report.summary());
        for (k, v) in &report.metrics {
            eprintln!("    {k} = {v}");
        }
        for n in &report.notes {
            eprintln!("    note: {n}");
        }
        hard_ok &= report.pass || !suite.is_hard();
        reports.push(report);
    }
    emit(cfg.out.as_deref(), &jsonl(&reports)?)?;
    Ok(if hard_ok { Status::Ok } else { Status::Soft })
}

#[derive(Debug, PartialEq)]
struct ScanRow {
    p: Prob,
    gamma: GammaEstimate,
    l_mean: Option<f64>,
    l_censor_rate: f64,
    l_infinite_rate: f64,
}

pub const SCAN_HEADER: &str = "p,gamma_e1,gamma_e1_half_width,gamma_censor_rate,l_mean,l_censor_rate,l_infinite_rate";

fn scan_row(cfg: &RunConfig, p: Prob) -> Result<ScanRow, Error> {
    let gcfg = GammaConfig { p, ..cfg.gamma.clone() };
    let d = gcfg.d;
    let gamma = gamma_estimate(&gcfg, &Point::unit(d, 0))?;
    let radius = cfg.radius.unwrap_or(30);
    let margin = cfg.margin.unwrap_or(radius / 3);
    let window = Window::cube(d, radius)?;
    let base: Vec<Vec<i64>> = {
        let mut out = Vec::new();
        orthant::env::for_each_in_box(&vec![-cfg.base; d - 1], &vec![cfg.base; d - 1], |b| out.push(b.to_vec()));
        out
    };
    let per_trial: Vec<(i64, u64, u64, u64)> = (0..gcfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut l = boundary_function(&gcfg.env(i), &Point::origin(d), &window)?;
            l.censor_interior(margin);
            let (mut sum, mut used, mut censored, mut infinite) = (0i64, 0u64, 0u64, 0u64);
            for b in &base {
                match (l.is_censored(b), l.value(b)) {
                    (Some(true), _) => censored += 1,
                    (_, Some(Level::Finite(k))) => {
                        sum += k;
                        used += 1;
                    }
                    _ => infinite += 1,
                }
            }
            Ok((sum, used, censored, infinite))
        })
        .collect::<Result<_, Error>>()?;
    let total = (gcfg.trials as usize * base.len()) as f64;
    let (sum, used, censored, infinite) = per_trial.iter().fold((0i64, 0u64, 0u64, 0u64), |a, t| (a.0 + t.0, a.1 + t.1, a.2 + t.2, a.3 + t.3));
    Ok(ScanRow {
        p,
        gamma,
        l_mean: (used > 0).then(|| sum as f64 / used as f64),
        l_censor_rate: censored as f64 / total,
        l_infinite_rate: infinite as f64 / total,
    })
}

pub fn scan(cfg: &RunConfig) -> Result<Status> {
    let rows: Vec<ScanRow> = cfg.p_grid.iter().map(|&p| scan_row(cfg, p)).collect::<Result<_, _>>()?;
    let mut s = String::from("# exploratory diagnostics against p; no critical probability is estimated\n");
    s.push_str(SCAN_HEADER);
    s.push('\n');
    for r in &rows {
        let g = r.gamma.gamma_hat.map(|g| g.to_string()).unwrap_or_default();
        let l = r.l_mean.map(|l| l.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{g},{},{},{l},{},{}\n", r.p, r.gamma.half_width, r.gamma.censor_rate, r.l_censor_rate, r.l_infinite_rate));
    }
    emit(cfg.out.as_deref(), s.as_bytes())?;
    Ok(Status::Ok)
}
