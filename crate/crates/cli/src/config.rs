//! Run configuration: a flat TOML file, overridden key by key by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use orthant::stats::{GammaConfig, Margins, Method};
use orthant::{Model, Point, Prob};
use serde::Deserialize;

/// Every key may appear in the config file or as a `--flag`; flags win.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// `orthant` or `half-orthant`
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Probability of a Plus site, as a decimal or `num/den`.
    #[arg(long, global = true)]
    pub p: Option<String>,
    #[arg(long, global = true)]
    pub seed_base: Option<u64>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_ladder: Option<Vec<u64>>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Window padding around the target line (default grows with n).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub pad: Option<i64>,
    #[arg(long, global = true)]
    pub slab_factor: Option<f64>,
    #[arg(long, global = true)]
    pub max_sites: Option<usize>,
    #[arg(long, global = true)]
    pub censor_cap: Option<f64>,
    /// `inf_mean_B` or `large_n_beta`
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// A direction such as `2,-1`; repeat for several.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub u: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub resolution: Option<i64>,
    #[arg(long, global = true)]
    pub extent: Option<i64>,
    /// Axis relabelling, a permutation of `0..d`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub axes: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Main output (JSON lines, or CSV for `scan`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Largest tolerated fraction of unreliable estimates.
    #[arg(long, global = true)]
    pub unreliable_cap: Option<f64>,
    /// Verification suite to run; repeat for several.
    #[arg(long = "suite", global = true)]
    pub suites: Option<Vec<String>>,
    /// Number of seeds for the seeded suites, counted from `seed_base`.
    #[arg(long, global = true)]
    pub seeds: Option<u64>,
    /// Half side of the cube window used by the suites and by `scan`.
    #[arg(long, global = true)]
    pub radius: Option<i64>,
    #[arg(long, global = true)]
    pub margin: Option<i64>,
    /// Run negative controls alongside the suites.
    #[arg(long, global = true)]
    pub control: Option<bool>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub p_grid: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub m_max: Option<i64>,
    #[arg(long, global = true)]
    pub n: Option<i64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub r: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Half side of the base set `scan` averages the left boundary over.
    #[arg(long, global = true)]
    pub base: Option<i64>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),* $(,)?) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// `top` wins wherever it sets a key.
    pub fn overlay(self, top: Settings) -> Settings {
        overlay!(
            self, top, model, d, p, seed_base, n_ladder, trials, pad, slab_factor, max_sites, censor_cap, method, u, resolution, extent, axes,
            threads, out, csv, svg, unreliable_cap, suites, seeds, radius, margin, control, p_grid, m_max, n, epsilon, r, delta, base,
        )
    }
}

pub fn parse_prob(s: &str) -> Result<Prob> {
    s.parse().with_context(|| format!("bad probability {s:?}"))
}

pub fn parse_point(s: &str) -> Result<Point> {
    let coords = s
        .split(',')
        .map(|c| c.trim().parse::<i64>().with_context(|| format!("bad coordinate {c:?} in {s:?}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(Point::new(coords)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Oracle,
    TheoremL,
    Coupling,
    ConeTail,
    Inclusions,
    MutualGrowth,
}

impl Suite {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim().replace('-', "_").as_str() {
            "oracle" => Suite::Oracle,
            "theorem_l" | "theorem_L" => Suite::TheoremL,
            "coupling" => Suite::Coupling,
            "cone_tail" => Suite::ConeTail,
            "inclusions" => Suite::Inclusions,
            "mutual_growth" => Suite::MutualGrowth,
            other => bail!("unknown suite {other:?}"),
        })
    }

    /// Exact-identity suites; their failure fails the run.
    pub fn is_hard(self) -> bool {
        matches!(self, Suite::Oracle | Suite::TheoremL | Suite::Coupling)
    }
}

/// Validated settings for one command.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub gamma: GammaConfig,
    pub directions: Vec<Point>,
    pub resolution: i64,
    pub extent: i64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub unreliable_cap: f64,
    /// `p` as given, for suites whose default differs from `gamma.p`.
    pub p_given: Option<Prob>,
    pub suites: Vec<Suite>,
    pub seeds: Option<u64>,
    pub radius: Option<i64>,
    pub margin: Option<i64>,
    pub control: bool,
    pub p_grid: Vec<Prob>,
    pub m_max: i64,
    pub trials_given: Option<u64>,
    pub n: i64,
    pub epsilon: f64,
    pub r: f64,
    pub delta: f64,
    pub base: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    EstimateGamma,
    Shape,
    Verify,
    Scan,
}

impl RunConfig {
    pub fn resolve(command: Command, s: Settings) -> Result<Self> {
        let model: Model = s.model.as_deref().unwrap_or("half-orthant").parse()?;
        let d = s.d.unwrap_or(2);
        let p_given = s.p.as_deref().map(parse_prob).transpose()?;
        let mut gamma = GammaConfig::new(model, p_given.unwrap_or(parse_prob("0.95")?), d);
        gamma.seed_base = s.seed_base.unwrap_or(0);
        if let Some(l) = s.n_ladder {
            gamma.n_ladder = l;
        }
        if let Some(t) = s.trials {
            gamma.trials = t;
        }
        gamma.margins = Margins { pad: s.pad, slab_factor: s.slab_factor, max_sites: s.max_sites.unwrap_or(Margins::default().max_sites) };
        if let Some(c) = s.censor_cap {
            gamma.censor_cap = c;
        }
        if let Some(m) = &s.method {
            gamma.method = m.parse::<Method>()?;
        }
        gamma.axes = s.axes;
        gamma.validate()?;
        if let Some(pad) = s.pad {
            ensure!(pad >= 0, "pad must be non-negative");
        }

        let directions = s.u.unwrap_or_default().iter().map(|u| parse_point(u)).collect::<Result<Vec<_>>>()?;
        for u in &directions {
            ensure!(u.dim() == d, "direction {u} does not have dimension {d}");
        }
        let default_cap = if command == Command::Shape { 0.2 } else { 0.0 };
        let cfg = RunConfig {
            gamma,
            directions,
            resolution: s.resolution.unwrap_or(4),
            extent: s.extent.unwrap_or(2),
            threads: s.threads,
            out: s.out,
            csv: s.csv,
            svg: s.svg,
            unreliable_cap: s.unreliable_cap.unwrap_or(default_cap),
            p_given,
            suites: s.suites.unwrap_or_default().iter().map(|x| Suite::parse(x)).collect::<Result<_>>()?,
            seeds: s.seeds,
            radius: s.radius,
            margin: s.margin,
            control: s.control.unwrap_or(true),
            p_grid: s.p_grid.unwrap_or_default().iter().map(|p| parse_prob(p)).collect::<Result<_>>()?,
            m_max: s.m_max.unwrap_or(8),
            trials_given: s.trials,
            n: s.n.unwrap_or(400),
            epsilon: s.epsilon.unwrap_or(0.15),
            r: s.r.unwrap_or(1.0),
            delta: s.delta.unwrap_or(0.25),
            base: s.base.unwrap_or(5),
        };
        cfg.check(command)?;
        Ok(cfg)
    }

    fn check(&self, command: Command) -> Result<()> {
        ensure!(self.threads != Some(0), "threads must be positive");
        ensure!((0.0..=1.0).contains(&self.unreliable_cap), "unreliable_cap must lie in [0, 1]");
        match command {
            Command::EstimateGamma => ensure!(!self.directions.is_empty(), "estimate-gamma needs at least one direction u"),
            Command::Shape => {
                ensure!(self.resolution > 0 && self.extent >= 0, "resolution must be positive and extent non-negative");
                if self.svg.is_some() {
                    ensure!((2..=3).contains(&self.gamma.d), "SVG output needs d = 2 or 3");
                }
            }
            Command::Verify => {
                ensure!(!self.suites.is_empty(), "no verification suite selected");
                ensure!(self.m_max >= 1, "m_max must be at least 1");
                ensure!(self.n > 0 && self.epsilon > 0.0 && self.r > 0.0 && self.delta >= 0.0, "inclusion parameters out of range");
                if let Some(r) = self.radius {
                    ensure!(r > 0, "radius must be positive");
                }
                if let Some(m) = self.margin {
                    ensure!(m >= 0, "margin must be non-negative");
                }
            }
            Command::Scan => {
                ensure!(!self.p_grid.is_empty(), "scan needs a p grid");
                ensure!(self.base >= 0, "base must be non-negative");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_the_file() {
        let file: Settings = toml::from_str("p = \"0.9\"\ntrials = 10\nu = [\"1,0\"]").unwrap();
        let flags = Settings { trials: Some(20), ..Settings::default() };
        let s = file.overlay(flags);
        assert_eq!(s.trials, Some(20));
        assert_eq!(s.p.as_deref(), Some("0.9"));
        let cfg = RunConfig::resolve(Command::EstimateGamma, s).unwrap();
        assert_eq!(cfg.gamma.trials, 20);
        assert_eq!(cfg.directions, vec![Point::new(vec![1, 0]).unwrap()]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Settings>("colour = 3").is_err());
    }

    #[test]
    fn validation() {
        let bad_dim = Settings { u: Some(vec!["1,2,3".into()]), ..Settings::default() };
        assert!(RunConfig::resolve(Command::EstimateGamma, bad_dim).is_err());
        assert!(RunConfig::resolve(Command::Verify, Settings::default()).is_err());
        assert!(RunConfig::resolve(Command::Scan, Settings::default()).is_err());
        let svg4 = Settings { d: Some(4), svg: Some("x.svg".into()), ..Settings::default() };
        assert!(RunConfig::resolve(Command::Shape, svg4).is_err());
        assert_eq!(parse_point(" 2, -1").unwrap(), Point::new(vec![2, -1]).unwrap());
    }
}
