use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{trial_seed, EnvironmentSpec, Model};
use crate::error::{Error, Result};
use crate::lattice::{check_dim, Point};
use crate::prob::Prob;

use super::passage::{passage, Margins, PassageValue, Variant};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Minimum over the ladder of `mean(B_n) / n`.
    #[serde(rename = "inf_mean_B")]
    InfMeanB,
    /// `mean(beta_n) / n` at the largest ladder value.
    LargeNBeta,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf_mean_B" | "inf_mean_b" => Ok(Method::InfMeanB),
            "large_n_beta" => Ok(Method::LargeNBeta),
            _ => Err(Error::Invalid(format!("unknown method {s:?}"))),
        }
    }
}

/// Why an estimate needed no sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    /// `gamma(r 1) = -r`
    Diagonal,
    /// At `p = 1` the cluster is the positive orthant: `gamma(u) = -min_i u_i`.
    AllPlus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaConfig {
    pub model: Model,
    pub p: Prob,
    pub d: usize,
    pub n_ladder: Vec<u64>,
    pub trials: u64,
    pub seed_base: u64,
    #[serde(default)]
    pub margins: Margins,
    /// Largest tolerated fraction of censored trials.
    pub censor_cap: f64,
    pub method: Method,
    /// Axis relabelling passed to every environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<usize>>,
}

impl GammaConfig {
    pub fn new(model: Model, p: Prob, d: usize) -> Self {
        GammaConfig {
            model,
            p,
            d,
            n_ladder: vec![25, 50, 100, 200],
            trials: 200,
            seed_base: 0,
            margins: Margins::default(),
            censor_cap: 0.01,
            method: Method::InfMeanB,
            axes: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.d)?;
        if self.n_ladder.is_empty() || self.n_ladder[0] == 0 || self.n_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(format!("n ladder {:?} must be positive and increasing", self.n_ladder)));
        }
        if self.trials < 2 {
            return Err(Error::Invalid("at least two trials are needed".into()));
        }
        if !(0.0..=1.0).contains(&self.censor_cap) {
            return Err(Error::Invalid(format!("censor cap {} outside [0, 1]", self.censor_cap)));
        }
        if let Some(axes) = &self.axes {
            EnvironmentSpec { axes: None, ..self.env(0) }.with_axes(axes.clone())?;
        }
        Ok(())
    }

    /// Environment of trial `i`. The same seeds are reused for every `n` and
    /// every `u`.
    pub fn env(&self, trial: u64) -> EnvironmentSpec {
        EnvironmentSpec { model: self.model, p: self.p, seed: trial_seed(self.seed_base, trial), d: self.d, axes: self.axes.clone() }
    }
}

/// Sample summary of one passage functional at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRecord {
    pub n: u64,
    pub trials: u64,
    /// Trials with a finite, uncensored value.
    pub used: u64,
    pub censored: u64,
    /// Uncensored infinite values.
    pub infinite: u64,
    /// Exact sum of the used values.
    pub sum: i128,
    pub mean: f64,
    /// Bessel-corrected standard deviation.
    pub sd: f64,
    /// `mean / n`
    pub scaled_mean: f64,
    /// `sd / (n sqrt(used))`
    pub scaled_se: f64,
}

impl LadderRecord {
    pub fn from_values(n: u64, values: &[PassageValue]) -> Self {
        let used: Vec<i64> = values.iter().filter_map(PassageValue::usable).collect();
        let censored = values.iter().filter(|v| v.censored).count() as u64;
        let infinite = values.iter().filter(|v| !v.censored && !v.value.is_finite()).count() as u64;
        let sum: i128 = used.iter().map(|&v| v as i128).sum();
        let k = used.len() as f64;
        let mean = if used.is_empty() { f64::NAN } else { sum as f64 / k };
        let sd = if used.len() < 2 {
            f64::NAN
        } else {
            (used.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        };
        LadderRecord {
            n,
            trials: values.len() as u64,
            used: used.len() as u64,
            censored,
            infinite,
            sum,
            mean,
            sd,
            scaled_mean: if used.is_empty() { f64::NAN } else { ratio_f64(&Ratio::new(sum, k as i128 * n as i128)) },
            scaled_se: sd / (n as f64 * k.sqrt()),
        }
    }

    /// `mean / n` as an exact fraction.
    pub fn scaled_mean_exact(&self) -> Option<Ratio<i128>> {
        (self.used > 0).then(|| Ratio::new(self.sum, self.used as i128 * self.n as i128))
    }
}

/// Monte Carlo estimate of `gamma(u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub u: Point,
    pub model: Model,
    pub p: Prob,
    pub method: Method,
    pub variant: Variant,
    pub records: Vec<LadderRecord>,
    pub gamma_hat: Option<f64>,
    /// `gamma_hat` as an exact fraction, `"num/den"`.
    pub gamma_exact: Option<String>,
    #[serde(skip)]
    pub gamma_ratio: Option<Ratio<i128>>,
    /// Ladder value the estimate was read from.
    pub argmin_n: Option<u64>,
    pub se: f64,
    /// 95% normal-approximation half width.
    pub half_width: f64,
    pub trials_consumed: u64,
    pub censored: u64,
    pub censor_rate: f64,
    pub unreliable: bool,
    pub closed_form: Option<ClosedForm>,
}

impl GammaEstimate {
    fn closed(u: &Point, cfg: &GammaConfig, value: Ratio<i128>, form: ClosedForm) -> Self {
        GammaEstimate {
            u: u.clone(),
            model: cfg.model,
            p: cfg.p,
            method: cfg.method,
            variant: variant_for(cfg.method),
            records: Vec::new(),
            gamma_hat: Some(ratio_f64(&value)),
            gamma_exact: Some(value.to_string()),
            gamma_ratio: Some(value),
            argmin_n: None,
            se: 0.0,
            half_width: 0.0,
            trials_consumed: 0,
            censored: 0,
            censor_rate: 0.0,
            unreliable: false,
            closed_form: Some(form),
        }
    }

    /// The point estimate, if there is one and it is not flagged.
    pub fn reliable_value(&self) -> Option<f64> {
        if self.unreliable {
            None
        } else {
            self.gamma_hat
        }
    }
}

impl fmt::Display for GammaEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.gamma_hat {
            Some(g) => write!(f, "gamma{} = {g:.5} +- {:.5}", self.u, self.half_width)?,
            None => write!(f, "gamma{} = n/a", self.u)?,
        }
        if self.unreliable {
            write!(f, " (unreliable)")?;
        }
        Ok(())
    }
}

pub(crate) fn ratio_f64(r: &Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn variant_for(method: Method) -> Variant {
    match method {
        Method::InfMeanB => Variant::B,
        Method::LargeNBeta => Variant::Beta,
    }
}

/// Samples `variant` at scale `n` over trials `0..cfg.trials`, in trial order.
pub fn sample_passages(cfg: &GammaConfig, u: &Point, n: u64, variant: Variant) -> Result<Vec<PassageValue>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| passage(&cfg.env(i), u, n, variant, &cfg.margins))
        .collect()
}

/// Estimates `gamma(u)`.
///
/// Diagonal `u` and `p = 1` are answered in closed form without sampling.
/// Otherwise each ladder value is sampled over the same trial seeds; censored
/// and infinite values are excluded from the means and counted, and the
/// estimate is flagged unreliable when the censored fraction exceeds the cap.
pub fn gamma_estimate(cfg: &GammaConfig, u: &Point) -> Result<GammaEstimate> {
    cfg.validate()?;
    if u.dim() != cfg.d {
        return Err(Error::DimensionMismatch { expected: cfg.d, got: u.dim() });
    }
    if u.is_diagonal() {
        return Ok(GammaEstimate::closed(u, cfg, Ratio::from_integer(-(u[0] as i128)), ClosedForm::Diagonal));
    }
    if cfg.p.is_one() {
        let min = *u.iter().min().expect("d >= 2") as i128;
        return Ok(GammaEstimate::closed(u, cfg, Ratio::from_integer(-min), ClosedForm::AllPlus));
    }
    let variant = variant_for(cfg.method);
    let mut records = Vec::with_capacity(cfg.n_ladder.len());
    for &n in &cfg.n_ladder {
        let values = sample_passages(cfg, u, n, variant)?;
        records.push(LadderRecord::from_values(n, &values));
    }
    let pick = match cfg.method {
        Method::InfMeanB => records
            .iter()
            .filter(|r| r.used >= 2)
            .min_by(|a, b| a.scaled_mean_exact().cmp(&b.scaled_mean_exact())),
        Method::LargeNBeta => records.last().filter(|r| r.used >= 2),
    };
    let censored: u64 = records.iter().map(|r| r.censored).sum();
    let consumed: u64 = records.iter().map(|r| r.trials).sum();
    let censor_rate = censored as f64 / consumed as f64;
    let ratio = pick.and_then(LadderRecord::scaled_mean_exact);
    let se = pick.map_or(f64::NAN, |r| r.scaled_se);
    Ok(GammaEstimate {
        u: u.clone(),
        model: cfg.model,
        p: cfg.p,
        method: cfg.method,
        variant,
        gamma_hat: ratio.as_ref().map(ratio_f64),
        gamma_exact: ratio.as_ref().map(Ratio::to_string),
        gamma_ratio: ratio,
        argmin_n: pick.map(|r| r.n),
        se,
        half_width: Z95 * se,
        trials_consumed: consumed,
        censored,
        censor_rate,
        unreliable: pick.is_none() || censor_rate > cfg.censor_cap,
        closed_form: None,
        records,
    })
}
