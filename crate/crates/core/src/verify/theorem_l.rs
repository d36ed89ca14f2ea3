use rayon::prelude::*;

use crate::env::{EnvironmentSpec, Model};
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::prob::Prob;
use crate::reach::{forward_cluster, BoundaryFunction, Window};

use super::VerificationReport;

/// Mixed into the seed of the half-orthant environment for the decoupled
/// negative control.
pub const DECOUPLE: u64 = 0x5DEE_CE66_D1CE_F00D;

/// Compares the left boundary of the orthant cluster of the origin with that
/// of the half-orthant cluster on the same uniforms, at every base point that
/// is uncensored in both and at least `margin` inside the window. Also checks
/// that the half-orthant cluster coincides with the orthant cluster closed
/// under `+e1` on those base points.
///
/// With `control`, the same comparison is run against a half-orthant
/// environment on an unrelated seed; it must produce mismatches, otherwise
/// the test has no power and the report fails.
pub fn check_theorem_l(seed: u64, p: Prob, window: &Window, margin: i64, control: bool) -> Result<VerificationReport> {
    let d = window.dim();
    let origin = Point::origin(d);
    let orth = EnvironmentSpec::new(Model::Orthant, p, seed, d)?;
    let half = orth.with_model(Model::HalfOrthant);
    let lo_c = forward_cluster(&orth, &origin, window)?;
    let hi_c = forward_cluster(&half, &origin, window)?;
    let mut l = BoundaryFunction::from_cluster(&lo_c);
    let mut l_star = BoundaryFunction::from_cluster(&hi_c);
    l.censor_interior(margin);
    l_star.censor_interior(margin);

    let mut report = VerificationReport::new("theorem_l");
    let (lo1, hi1) = (window.lo()[0] + margin, window.hi()[0] - margin);
    let mut compared = 0u64;
    let mut skipped = 0u64;
    let mut y = vec![0; d];
    for ((b, a, ca), (_, s, cs)) in l.iter().zip(l_star.iter()) {
        if ca || cs {
            skipped += 1;
            continue;
        }
        compared += 1;
        if a != s {
            report.fail(Some(seed), format!("p={p} base={b:?}"), format!("L*={s}"), format!("L={a}"));
        }
        y[1..].copy_from_slice(&b);
        for k in lo1..=hi1 {
            y[0] = k;
            let closed = a.finite().is_some_and(|a| k >= a);
            if closed != hi_c.contains(&y) {
                report.fail(Some(seed), format!("p={p} point={y:?}"), format!("half-orthant member={}", hi_c.contains(&y)), format!("orthant +e1 closure={closed}"));
            }
        }
    }
    if compared == 0 {
        return Err(Error::Inconclusive(format!("seed {seed}: every interior base point is censored")));
    }
    report.cases = compared;
    report.metric("compared", compared as f64);
    report.metric("censored", skipped as f64);

    if control {
        if p == Prob::ONE {
            report.note(format!("seed {seed}: decoupled control skipped at p = 1, where both clusters are the positive orthant"));
        } else {
            let other = half.with_seed(seed ^ DECOUPLE);
            let mut l_other = BoundaryFunction::from_cluster(&forward_cluster(&other, &origin, window)?);
            l_other.censor_interior(margin);
            let (mut seen, mut mismatched) = (0u64, 0u64);
            for ((_, a, ca), (_, s, cs)) in l.iter().zip(l_other.iter()) {
                if !ca && !cs {
                    seen += 1;
                    mismatched += u64::from(a != s);
                }
            }
            report.metric("control_compared", seen as f64);
            report.metric("control_mismatches", mismatched as f64);
            if seen > 0 && mismatched == 0 {
                report.fail(Some(seed), "decoupled control", "mismatches", "none");
            }
        }
    }
    Ok(report)
}

/// [`check_theorem_l`] over several seeds. Seeds whose interior is entirely
/// censored are noted; the suite is inconclusive only if all of them are.
pub fn theorem_l_suite(seeds: &[u64], p: Prob, window: &Window, margin: i64, control: bool) -> Result<VerificationReport> {
    let parts: Vec<Result<VerificationReport>> = seeds.par_iter().map(|&s| check_theorem_l(s, p, window, margin, control)).collect();
    let mut reports = Vec::new();
    let mut notes = Vec::new();
    for part in parts {
        match part {
            Ok(r) => reports.push(r),
            Err(Error::Inconclusive(msg)) => notes.push(msg),
            Err(e) => return Err(e),
        }
    }
    if reports.is_empty() && !seeds.is_empty() {
        return Err(Error::Inconclusive(format!("all {} seeds censored", seeds.len())));
    }
    let mut out = VerificationReport::merge("theorem_l", reports);
    out.notes.extend(notes);
    Ok(out)
}
