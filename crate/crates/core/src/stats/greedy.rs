use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, SiteKind};
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::prob::Prob;

use super::gamma::GammaConfig;

/// Smallest `k >= 1` with `(1 - p)(k + d - 2) > d - 1`, or `None` at `p = 1`.
pub fn min_valid_k(p: Prob, d: usize) -> Option<u64> {
    let q = (p.den() - p.num()) as u128;
    if q == 0 {
        return None;
    }
    let den = p.den() as u128;
    let d = d as u128;
    // q (k + d - 2) > (d - 1) den  <=>  k > (d - 1) den / q - (d - 2)
    let need = (d - 1) * den / q + 1;
    Some(need.saturating_sub(d - 2).max(1) as u64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyOutcome {
    pub success: bool,
    pub steps: u64,
    pub end: Point,
}

/// Walks `n(k + d - 2)` steps from the origin: `+e1` at Plus sites, `-e2` at
/// the first `n` Minus sites, `-e3` at the next `n`, and so on through `-ed`,
/// then `+e1` at Minus sites too. A step the site does not allow ends the walk.
/// Success means the walk stands on `n(k e1 - 1)`, which is then in the
/// forward cluster of the origin.
pub fn greedy_e1_path<E: Environment + ?Sized>(env: &E, k: u64, n: u64) -> Result<GreedyOutcome> {
    let d = env.dim();
    if k == 0 || n == 0 {
        return Err(Error::Invalid("greedy path needs k, n > 0".into()));
    }
    let budget = n
        .checked_mul(k + d as u64 - 2)
        .ok_or_else(|| Error::Invalid(format!("greedy path of scale {n} x {k} is too long")))?;
    let mut x = vec![0i64; d];
    let mut minus_steps = 0u64;
    let quota = n * (d as u64 - 1);
    let mut steps = 0;
    while steps < budget {
        let (axis, positive) = match env.kind(&x) {
            SiteKind::Plus => (0, true),
            SiteKind::Minus if minus_steps < quota => {
                minus_steps += 1;
                (1 + ((minus_steps - 1) / n) as usize, false)
            }
            SiteKind::Minus => (0, true),
        };
        if !env.arrows(&x).contains(axis, positive) {
            break;
        }
        x[axis] += if positive { 1 } else { -1 };
        steps += 1;
    }
    let mut target = vec![-(n as i64); d];
    target[0] = n as i64 * (k as i64 - 1);
    let success = x == target;
    Ok(GreedyOutcome { success, steps, end: Point::new(x)? })
}

/// Fraction of trials (over `cfg`'s seeds) in which the greedy walk succeeds.
pub fn greedy_success_rate(cfg: &GammaConfig, k: u64, n: u64) -> Result<f64> {
    cfg.validate()?;
    let hits: Vec<bool> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| greedy_e1_path(&cfg.env(i), k, n).map(|o| o.success))
        .collect::<Result<_>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / cfg.trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvironmentSpec, Model};
    use crate::reach::{forward_cluster, Window};

    #[test]
    fn minimal_k() {
        assert_eq!(min_valid_k("0.95".parse().unwrap(), 2), Some(21));
        assert_eq!(min_valid_k("0.5".parse().unwrap(), 2), Some(3));
        assert_eq!(min_valid_k("1".parse().unwrap(), 2), None);
        // oracle: smallest k with the exact rational inequality
        for (num, den) in [(19u64, 20u64), (9, 10), (2, 3), (0, 1), (99, 100)] {
            let p = Prob::new(num, den).unwrap();
            for d in 2..6u64 {
                let ok = |k: u64| (den - num) as u128 * (k + d - 2) as u128 > ((d - 1) * den) as u128;
                let want = (1..).find(|&k| ok(k)).unwrap();
                assert_eq!(min_valid_k(p, d as usize), Some(want), "p={p} d={d}");
            }
        }
    }

    #[test]
    fn all_minus_half_orthant_succeeds() {
        let env = EnvironmentSpec::new(Model::HalfOrthant, Prob::ZERO, 0, 2).unwrap();
        let out = greedy_e1_path(&env, 21, 10).unwrap();
        assert!(out.success);
        assert_eq!(out.end.coords(), &[200, -10]);
        let env3 = EnvironmentSpec::new(Model::HalfOrthant, Prob::ZERO, 0, 3).unwrap();
        assert!(greedy_e1_path(&env3, 3, 4).unwrap().success);
    }

    #[test]
    fn success_puts_target_in_cluster() {
        let mut wins = 0;
        for seed in 0..40 {
            for model in [Model::Orthant, Model::HalfOrthant] {
                let env = EnvironmentSpec::new(model, "0.8".parse().unwrap(), seed, 2).unwrap();
                let out = greedy_e1_path(&env, 5, 4).unwrap();
                if out.success {
                    wins += 1;
                    let w = Window::new(Point::new(vec![-1, -6]).unwrap(), Point::new(vec![18, 1]).unwrap()).unwrap();
                    let c = forward_cluster(&env, &Point::origin(2), &w).unwrap();
                    assert!(c.contains(&out.end), "seed {seed}");
                }
            }
        }
        assert!(wins > 0);
    }
}
