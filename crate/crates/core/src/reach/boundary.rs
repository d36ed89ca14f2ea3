use crate::env::Environment;
use crate::error::Result;
use crate::lattice::Point;

use super::{forward_cluster, ClusterResult, Level, Window};

/// Left boundary of a cluster: for every base point `b` (coordinates
/// `2..d`), the smallest `k` with `(k, b)` in the cluster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryFunction {
    window: Window,
    values: Vec<Level>,
    censored: Vec<bool>,
}

/// Computes the forward cluster of `source` and reads off its left boundary.
pub fn boundary_function<E: Environment + ?Sized>(env: &E, source: &Point, w: &Window) -> Result<BoundaryFunction> {
    Ok(BoundaryFunction::from_cluster(&forward_cluster(env, source, w)?))
}

impl BoundaryFunction {
    /// A base point is censored when its value sits on the window floor, or
    /// when some escaped arrow lands at or below the diagonal level of the
    /// value (a path leaving the window there could come back lower).
    pub fn from_cluster(c: &ClusterResult) -> Self {
        let w = c.window().clone().without_slab();
        let lo1 = w.lo()[0];
        let hi1 = w.hi()[0];
        let stride = w.stride(0);
        let mut values = vec![Level::PosInf; stride];
        for idx in c.members().ones() {
            let b = idx % stride;
            if values[b] == Level::PosInf {
                values[b] = Level::Finite(lo1 + (idx / stride) as i64);
            }
        }
        let mut x = vec![0; w.dim()];
        let censored = values
            .iter()
            .enumerate()
            .map(|(b, v)| {
                w.decode(b, &mut x);
                let rest: i64 = x[1..].iter().sum();
                let top = match *v {
                    Level::Finite(k) if k == lo1 => return true,
                    Level::Finite(k) => k + rest,
                    _ => hi1 + rest,
                };
                c.min_escape_diag().is_some_and(|m| m < top)
            })
            .collect();
        BoundaryFunction { window: w, values, censored }
    }

    /// Additionally censors base points within `margin` of the base faces and
    /// finite values within `margin` of the bottom or top of the window.
    pub fn censor_interior(&mut self, margin: i64) {
        let w = &self.window;
        let (lo, hi) = (w.lo().coords(), w.hi().coords());
        let mut x = vec![0; w.dim()];
        for (b, flag) in self.censored.iter_mut().enumerate() {
            w.decode(b, &mut x);
            let near_face = (1..x.len()).any(|i| x[i] < lo[i] + margin || x[i] > hi[i] - margin);
            let near_floor = match self.values[b] {
                Level::Finite(k) => k < lo[0] + margin || k > hi[0] - margin,
                _ => false,
            };
            *flag |= near_face || near_floor;
        }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// Number of base points.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn base_index(&self, b: &[i64]) -> Option<usize> {
        let mut x = Vec::with_capacity(b.len() + 1);
        x.push(self.window.lo()[0]);
        x.extend_from_slice(b);
        if x.len() != self.window.dim() {
            return None;
        }
        self.window.index(&x)
    }

    pub fn value(&self, b: &[i64]) -> Option<Level> {
        self.base_index(b).map(|i| self.values[i])
    }

    pub fn is_censored(&self, b: &[i64]) -> Option<bool> {
        self.base_index(b).map(|i| self.censored[i])
    }

    pub fn censored_count(&self) -> usize {
        self.censored.iter().filter(|&&c| c).count()
    }

    /// Whether `y` lies on or above the boundary.
    pub fn above(&self, y: &[i64]) -> bool {
        match self.value(&y[1..]) {
            Some(Level::Finite(k)) => y[0] >= k,
            _ => false,
        }
    }

    /// `(base, value, censored)` in row-major order of the base.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, Level, bool)> + '_ {
        let mut x = vec![0; self.window.dim()];
        (0..self.values.len()).map(move |b| {
            self.window.decode(b, &mut x);
            (x[1..].to_vec(), self.values[b], self.censored[b])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvironmentSpec, Model};

    #[test]
    fn all_plus_gives_the_orthant_boundary() {
        for d in [2, 3] {
            let env = EnvironmentSpec::new(Model::HalfOrthant, "1".parse().unwrap(), 4, d).unwrap();
            let w = Window::cube(d, 5).unwrap();
            let f = boundary_function(&env, &Point::origin(d), &w).unwrap();
            assert_eq!(f.len(), 11usize.pow(d as u32 - 1));
            for (b, v, _) in f.iter() {
                let expect = if b.iter().all(|&c| c >= 0) { Level::Finite(0) } else { Level::PosInf };
                assert_eq!(v, expect, "{b:?}");
            }
        }
    }

    #[test]
    fn half_orthant_boundary_is_non_increasing() {
        for seed in 0..20 {
            let env = EnvironmentSpec::new(Model::HalfOrthant, "0.8".parse().unwrap(), seed, 2).unwrap();
            let w = Window::cube(2, 20).unwrap();
            let f = boundary_function(&env, &Point::origin(2), &w).unwrap();
            for b in -20..20 {
                let (l0, c0) = (f.value(&[b]).unwrap(), f.is_censored(&[b]).unwrap());
                let (l1, c1) = (f.value(&[b + 1]).unwrap(), f.is_censored(&[b + 1]).unwrap());
                if !c0 && !c1 {
                    assert!(l1 <= l0, "seed {seed} b {b}: {l1} > {l0}");
                }
            }
        }
    }

    #[test]
    fn floor_values_are_censored() {
        let env = EnvironmentSpec::new(Model::HalfOrthant, "0".parse().unwrap(), 1, 2).unwrap();
        let w = Window::cube(2, 3).unwrap();
        let mut f = boundary_function(&env, &Point::origin(2), &w).unwrap();
        assert_eq!(f.censored_count(), f.len());
        let env = EnvironmentSpec::new(Model::HalfOrthant, "1".parse().unwrap(), 1, 2).unwrap();
        let w = Window::cube(2, 6).unwrap();
        f = boundary_function(&env, &Point::origin(2), &w).unwrap();
        assert_eq!(f.is_censored(&[2]), Some(false));
        f.censor_interior(5);
        assert_eq!(f.is_censored(&[2]), Some(true));
        assert_eq!(f.is_censored(&[5]), Some(true));
        assert!(f.above(&[3, 1]) && !f.above(&[-1, 1]));
    }
}
