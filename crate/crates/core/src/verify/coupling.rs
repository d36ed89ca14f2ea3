use rayon::prelude::*;

use crate::env::{EnvironmentSpec, Model};
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::prob::Prob;
use crate::reach::{forward_cluster, mutual_cluster, Window};

use super::VerificationReport;

/// On one seed, checks that the half-orthant cluster of the origin shrinks as
/// `p` grows (raising `p` only removes arrows under the coupling), and counts
/// how often the orthant cluster fails to, which it is allowed to.
pub fn check_coupling_monotonicity(seed: u64, p_grid: &[Prob], window: &Window) -> Result<VerificationReport> {
    if p_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Invalid(format!("p grid must be non-decreasing: {p_grid:?}")));
    }
    let d = window.dim();
    let origin = Point::origin(d);
    let clusters = |model: Model| -> Result<Vec<_>> {
        p_grid
            .iter()
            .map(|&p| forward_cluster(&EnvironmentSpec::new(model, p, seed, d)?, &origin, window))
            .collect()
    };
    let half = clusters(Model::HalfOrthant)?;
    let orth = clusters(Model::Orthant)?;
    let mut report = VerificationReport::new("coupling");
    let (mut orth_pairs, mut orth_sites) = (0u64, 0u64);
    for i in 0..p_grid.len() {
        for j in i + 1..p_grid.len() {
            let (p1, p2) = (p_grid[i], p_grid[j]);
            report.cases += 1;
            let extra = half[j].members().difference(half[i].members()).count();
            if extra > 0 {
                report.fail(Some(seed), format!("half-orthant p1={p1} p2={p2}"), "C*(p2) inside C*(p1)", format!("{extra} sites of C*(p2) outside C*(p1)"));
            }
            if p1 == p2 && half[i].members() != half[j].members() {
                report.fail(Some(seed), format!("half-orthant p={p1}"), "equal clusters", "different clusters");
            }
            let orth_extra = orth[j].members().difference(orth[i].members()).count() as u64;
            orth_pairs += u64::from(orth_extra > 0);
            orth_sites += orth_extra;
        }
    }
    report.metric("orthant_violating_pairs", orth_pairs as f64);
    report.metric("orthant_violating_sites", orth_sites as f64);
    Ok(report)
}

/// [`check_coupling_monotonicity`] over several seeds.
pub fn coupling_suite(seeds: &[u64], p_grid: &[Prob], window: &Window) -> Result<VerificationReport> {
    let parts: Vec<VerificationReport> = seeds
        .par_iter()
        .map(|&s| check_coupling_monotonicity(s, p_grid, window))
        .collect::<Result<_>>()?;
    Ok(VerificationReport::merge("coupling", parts))
}

/// Size of the mutual cluster of the origin in cubes of growing radius.
/// Exploratory: whether it stays bounded is not known in general.
pub fn mutual_growth(env: &EnvironmentSpec, radii: &[i64]) -> Result<Vec<(i64, usize)>> {
    let origin = Point::origin(env.d);
    radii
        .iter()
        .map(|&r| Ok((r, mutual_cluster(env, &origin, &Window::cube(env.d, r)?)?.len())))
        .collect()
}
