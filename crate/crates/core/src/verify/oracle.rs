use std::collections::BTreeSet;

use crate::env::{for_each_in_box, EnvTable, Environment, Model, SiteKind};
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::reach::{backward_cluster, forward_cluster, mutual_cluster, ClusterResult, Window};

use super::VerificationReport;

fn in_box(x: &[i64], lo: &[i64], hi: &[i64]) -> bool {
    x.iter().zip(lo.iter().zip(hi)).all(|(c, (a, b))| a <= c && c <= b)
}

/// Sites reachable from `source` inside `[lo, hi]`, by repeating one-step
/// arrow expansion of the whole set until nothing changes. Meant for boxes of
/// at most `5^d` sites.
pub fn oracle_cluster(table: &EnvTable, source: &[i64], lo: &[i64], hi: &[i64]) -> BTreeSet<Vec<i64>> {
    let d = table.dim();
    let mut set = BTreeSet::new();
    if !in_box(source, lo, hi) {
        return set;
    }
    set.insert(source.to_vec());
    let mut rounds = 0usize;
    loop {
        let mut next = set.clone();
        for x in &set {
            for (axis, positive) in table.arrows(x).iter() {
                let mut y = x.clone();
                y[axis] += if positive { 1 } else { -1 };
                if in_box(&y, lo, hi) {
                    next.insert(y);
                }
            }
        }
        rounds += 1;
        if next.len() == set.len() {
            break;
        }
        set = next;
    }
    debug_assert!(rounds <= set.len() + 1 && d > 0);
    set
}

/// Sites of `[lo, hi]` whose oracle cluster contains `target`.
pub fn oracle_backward(table: &EnvTable, target: &[i64], lo: &[i64], hi: &[i64]) -> BTreeSet<Vec<i64>> {
    let mut out = BTreeSet::new();
    for_each_in_box(lo, hi, |y| {
        if oracle_cluster(table, y, lo, hi).contains(target) {
            out.insert(y.to_vec());
        }
    });
    out
}

fn members(c: &ClusterResult) -> BTreeSet<Vec<i64>> {
    c.points().map(Point::into_vec).collect()
}

/// Runs the forward, backward and mutual clusters of the origin against the
/// oracle on every assignment of kinds to `[lo, hi]`, for both models.
pub fn oracle_sweep(lo: &[i64], hi: &[i64]) -> Result<VerificationReport> {
    let w = Window::new(Point::new(lo.to_vec())?, Point::new(hi.to_vec())?)?;
    let volume = w.volume();
    if volume > 16 {
        return Err(Error::Invalid(format!("exhaustive sweep over {volume} sites is too large")));
    }
    let origin = Point::origin(w.dim());
    if !w.contains(origin.coords()) {
        return Err(Error::OutsideWindow(origin.into_vec()));
    }
    let mut report = VerificationReport::new("oracle");
    for model in [Model::Orthant, Model::HalfOrthant] {
        for mask in 0u32..1 << volume {
            let kinds = (0..volume).map(|i| if mask >> i & 1 == 1 { SiteKind::Plus } else { SiteKind::Minus }).collect();
            let table = EnvTable::new(model, lo.to_vec(), hi.to_vec(), kinds)?;
            let inputs = format!("{model} mask={mask:0volume$b}");
            let fwd = oracle_cluster(&table, origin.coords(), lo, hi);
            let bwd = oracle_backward(&table, origin.coords(), lo, hi);
            let mutual: BTreeSet<_> = fwd.intersection(&bwd).cloned().collect();
            let got = [
                members(&forward_cluster(&table, &origin, &w)?),
                members(&backward_cluster(&table, &origin, &w)?),
                members(&mutual_cluster(&table, &origin, &w)?),
            ];
            for ((name, want), got) in ["forward", "backward", "mutual"].iter().zip([fwd, bwd, mutual]).zip(got) {
                if want != got {
                    report.fail(None, format!("{inputs} {name}"), format!("{want:?}"), format!("{got:?}"));
                }
            }
            report.cases += 1;
        }
    }
    report.metric("environments_per_model", (1u64 << volume) as f64);
    Ok(report)
}
