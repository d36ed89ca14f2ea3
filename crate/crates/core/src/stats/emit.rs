use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::env::Model;
use crate::error::Result;
use crate::lattice::Point;
use crate::prob::Prob;

use super::gamma::GammaEstimate;
use super::passage::Variant;

/// One `(u, n)` cell of an estimate, flattened for JSON-lines output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub u: Point,
    pub model: Model,
    pub p: Prob,
    pub variant: Variant,
    pub n: u64,
    pub trials: u64,
    pub used: u64,
    pub censored: u64,
    pub infinite: u64,
    pub mean: f64,
    pub sd: f64,
    pub scaled_mean: f64,
    pub scaled_se: f64,
}

pub fn cell_records(e: &GammaEstimate) -> Vec<CellRecord> {
    e.records
        .iter()
        .map(|r| CellRecord {
            u: e.u.clone(),
            model: e.model,
            p: e.p,
            variant: e.variant,
            n: r.n,
            trials: r.trials,
            used: r.used,
            censored: r.censored,
            infinite: r.infinite,
            mean: r.mean,
            sd: r.sd,
            scaled_mean: r.scaled_mean,
            scaled_se: r.scaled_se,
        })
        .collect()
}

pub fn write_cells_jsonl<W: Write>(estimates: &[GammaEstimate], mut out: W) -> Result<()> {
    for e in estimates {
        for c in cell_records(e) {
            serde_json::to_writer(&mut out, &c).map_err(std::io::Error::from)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub const SUMMARY_HEADER: &str =
    "u,model,p,method,gamma_hat,gamma_exact,half_width,se,argmin_n,trials,censored,censor_rate,unreliable,closed_form";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per estimate; `u` is written space-separated.
pub fn write_summary_csv<W: Write>(estimates: &[GammaEstimate], mut out: W) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for e in estimates {
        let u: Vec<String> = e.u.iter().map(i64::to_string).collect();
        let method = serde_json::to_value(e.method).map_err(std::io::Error::from)?;
        let form = e.closed_form.map(|f| serde_json::to_value(f).map(|v| v.as_str().unwrap_or_default().to_string()));
        let form = form.transpose().map_err(std::io::Error::from)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            u.join(" "),
            e.model,
            e.p,
            method.as_str().unwrap_or_default(),
            opt(e.gamma_hat),
            opt(e.gamma_exact.clone()),
            e.half_width,
            e.se,
            opt(e.argmin_n),
            e.trials_consumed,
            e.censored,
            e.censor_rate,
            e.unreliable,
            form.unwrap_or_default(),
        )?;
    }
    Ok(())
}
