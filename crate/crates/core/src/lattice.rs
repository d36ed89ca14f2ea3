//! Integer lattice geometry: points, norms, slabs, cones and the closed-form
//! probability thresholds.
//!
//! Every membership predicate here is decided with exact integer arithmetic.
//! Coordinates are bounded by [`MAX_COORD`] and dimensions by [`MAX_DIM`], which
//! keeps every dot product that appears below inside `i128`; inputs outside
//! those bounds are rejected instead of wrapping.

use std::fmt;
use std::ops::Deref;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 64;

/// Largest supported coordinate magnitude (2^40).
pub const MAX_COORD: i64 = 1 << 40;

/// A lattice point (or displacement) in Z^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<i64>);

impl Point {
    /// Builds a point, rejecting unsupported dimensions and coordinates.
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        check_dim(coords.len())?;
        for &c in &coords {
            check_coord(c as i128)?;
        }
        Ok(Point(coords))
    }

    pub fn origin(d: usize) -> Self {
        Point(vec![0; d])
    }

    /// The diagonal vector with every coordinate equal to one.
    pub fn ones(d: usize) -> Self {
        Point(vec![1; d])
    }

    pub fn unit(d: usize, axis: usize) -> Self {
        let mut c = vec![0; d];
        c[axis] = 1;
        Point(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<i64> {
        self.0
    }

    /// `x · 1`
    pub fn diag(&self) -> i128 {
        self.0.iter().map(|&c| c as i128).sum()
    }

    pub fn l1(&self) -> i128 {
        self.0.iter().map(|&c| (c as i128).abs()).sum()
    }

    pub fn linf(&self) -> i128 {
        self.0.iter().map(|&c| (c as i128).abs()).max().unwrap_or(0)
    }

    /// `x + k 1`, checked against the coordinate bound.
    pub fn shift_diag(&self, k: i64) -> Result<Point> {
        self.map_checked(|c| c as i128 + k as i128)
    }

    /// `s x`, checked.
    pub fn scale(&self, s: i64) -> Result<Point> {
        self.map_checked(|c| c as i128 * s as i128)
    }

    pub fn add(&self, other: &Point) -> Result<Point> {
        debug_assert_eq!(self.dim(), other.dim());
        let mut out = Vec::with_capacity(self.dim());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(check_coord(*a as i128 + *b as i128)?);
        }
        Ok(Point(out))
    }

    pub fn sub(&self, other: &Point) -> Result<Point> {
        debug_assert_eq!(self.dim(), other.dim());
        let mut out = Vec::with_capacity(self.dim());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(check_coord(*a as i128 - *b as i128)?);
        }
        Ok(Point(out))
    }

    /// True iff the point is `j 1` for some integer `j`.
    pub fn is_diagonal(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    /// `max_i (x_i)^-`, the negative part of the smallest coordinate.
    pub fn max_negative_part(&self) -> i64 {
        self.0.iter().map(|&c| (-c).max(0)).max().unwrap_or(0)
    }

    /// Coordinates permuted so that `out[i] = self[perm[i]]`.
    pub fn permuted(&self, perm: &[usize]) -> Point {
        Point(perm.iter().map(|&i| self.0[i]).collect())
    }

    fn map_checked(&self, f: impl Fn(i64) -> i128) -> Result<Point> {
        self.0
            .iter()
            .map(|&c| check_coord(f(c)))
            .collect::<Result<Vec<_>>>()
            .map(Point)
    }
}

impl Deref for Point {
    type Target = [i64];

    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl std::str::FromStr for Point {
    type Err = Error;

    /// Parses `"1,-2,0"` (whitespace tolerated).
    fn from_str(s: &str) -> Result<Self> {
        let coords = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::Format(format!("bad coordinate {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Point::new(coords)
    }
}

pub fn check_dim(d: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::Dimension(d))
    }
}

pub fn check_coord(c: i128) -> Result<i64> {
    if c.abs() <= MAX_COORD as i128 {
        Ok(c as i64)
    } else {
        Err(Error::CoordinateRange(c))
    }
}

/// Exact dot product. Bounded inputs cannot overflow `i128`; anything else
/// is reported rather than wrapped.
pub fn dot(a: &[i64], b: &[i64]) -> i128 {
    checked_dot(a, b).expect("dot product overflowed i128")
}

pub fn checked_dot(a: &[i64], b: &[i64]) -> Option<i128> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).try_fold(0i128, |acc, (&x, &y)| {
        acc.checked_add((x as i128).checked_mul(y as i128)?)
    })
}

/// The integer slab normal `v' = d u - (u·1) 1`, i.e. `d` times the projection
/// of `u` onto the hyperplane orthogonal to the diagonal.
pub fn transverse(u: &Point) -> Result<Point> {
    let d = u.dim() as i128;
    let s = u.diag();
    let coords = u
        .iter()
        .map(|&c| check_coord(d * c as i128 - s))
        .collect::<Result<Vec<_>>>()
        .map_err(|_| Error::CoordinateRange(s))?;
    if coords.iter().all(|&c| c == 0) {
        return Err(Error::NoTransverseDirection(u.to_vec()));
    }
    Ok(Point(coords))
}

/// `sigma(u, v) = u·v / (|u|_1 |v|_inf)` as a reduced fraction.
pub fn sigma(u: &Point, vprime: &Point) -> Result<Ratio<i128>> {
    if u.dim() != vprime.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: vprime.dim() });
    }
    if vprime.iter().all(|&c| c == 0) {
        return Err(Error::NoTransverseDirection(u.to_vec()));
    }
    let uv = dot(u, vprime);
    if uv <= 0 || vprime.diag() != 0 {
        return Err(Error::Invalid(format!(
            "slab normal {vprime} must satisfy u·v > 0 and v·1 = 0 for u = {u}"
        )));
    }
    Ok(Ratio::new(uv, u.l1() * vprime.linf()))
}

/// The slab `{ z : lo <= z·v' < hi }` with `v'` the transverse normal of `u`.
/// `None` bounds are the infinite sentinels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlabSpec {
    u: Point,
    vprime: Point,
    lo: Option<i128>,
    hi: Option<i128>,
}

impl SlabSpec {
    /// `Lambda_{u,v}(m, n)`.
    pub fn between(u: &Point, m: i64, n: i64) -> Result<Self> {
        Self::build(u, Some(m), Some(n))
    }

    /// `Lambda_{u,v}(-inf, n)`.
    pub fn below(u: &Point, n: i64) -> Result<Self> {
        Self::build(u, None, Some(n))
    }

    /// `Lambda_{u,v}(m, inf)`.
    pub fn above(u: &Point, m: i64) -> Result<Self> {
        Self::build(u, Some(m), None)
    }

    /// The whole lattice, expressed as a slab with both sentinels.
    pub fn everything(u: &Point) -> Result<Self> {
        Self::build(u, None, None)
    }

    fn build(u: &Point, m: Option<i64>, n: Option<i64>) -> Result<Self> {
        let vprime = transverse(u)?;
        let unit = dot(u, &vprime);
        debug_assert!(unit > 0);
        let lo = m.map(|m| unit.checked_mul(m as i128)).map(|v| v.ok_or(Error::CoordinateRange(unit)));
        let hi = n.map(|n| unit.checked_mul(n as i128)).map(|v| v.ok_or(Error::CoordinateRange(unit)));
        Ok(SlabSpec { u: u.clone(), vprime, lo: lo.transpose()?, hi: hi.transpose()? })
    }

    pub fn u(&self) -> &Point {
        &self.u
    }

    pub fn vprime(&self) -> &Point {
        &self.vprime
    }

    /// `u · v'`, the width of one unit of `n`.
    pub fn unit(&self) -> i128 {
        dot(&self.u, &self.vprime)
    }

    pub fn lo_num(&self) -> Option<i128> {
        self.lo
    }

    pub fn hi_num(&self) -> Option<i128> {
        self.hi
    }

    pub fn value(&self, z: &[i64]) -> i128 {
        dot(z, &self.vprime)
    }

    pub fn contains_value(&self, zv: i128) -> bool {
        self.lo.is_none_or(|lo| lo <= zv) && self.hi.is_none_or(|hi| zv < hi)
    }

    pub fn contains(&self, z: &[i64]) -> bool {
        self.contains_value(self.value(z))
    }
}

/// `K_eta - m 1` with `K_eta = { x : x·1 >= eta |x|_1 }`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub eta_num: u64,
    pub eta_den: u64,
    pub shift_m: i64,
}

impl ConeSpec {
    pub fn new(eta_num: u64, eta_den: u64, shift_m: i64) -> Result<Self> {
        if eta_den == 0 || eta_num > eta_den {
            return Err(Error::Eta { num: eta_num, den: eta_den });
        }
        Ok(ConeSpec { eta_num, eta_den, shift_m })
    }

    /// The half-space `{ x : x·1 >= -m d }`.
    pub fn half_space(shift_m: i64) -> Self {
        ConeSpec { eta_num: 0, eta_den: 1, shift_m }
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        let m = self.shift_m as i128;
        let (sum, l1) = x.iter().fold((0i128, 0i128), |(s, n), &c| {
            let y = c as i128 + m;
            (s + y, n + y.abs())
        });
        self.eta_den as i128 * sum >= self.eta_num as i128 * l1
    }
}

/// A threshold probability that is exact when the defining power is integral.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdValue {
    pub exact: Option<BigRational>,
    pub approx: f64,
}

impl ThresholdValue {
    fn exact(r: BigRational) -> Self {
        let approx = ratio_to_f64(&r);
        ThresholdValue { exact: Some(r), approx }
    }
}

/// Sufficient-condition thresholds. `theta = 2d - 1` bounds the growth of
/// self-avoiding walks (every step after the first has at most 2d - 1 choices),
/// which is conservative.
#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds {
    pub d: usize,
    pub theta: u64,
    /// `1 - theta^{-2/(1-eta)}`
    pub p0: ThresholdValue,
    /// `1 - theta^{-2(2+d)}`, the boundary of `theta^{2+d} (1-p)^{1/2} < 1`.
    pub p1: BigRational,
}

pub fn thresholds(d: usize, eta_num: u64, eta_den: u64) -> Result<Thresholds> {
    check_dim(d)?;
    if eta_den == 0 || eta_num >= eta_den {
        return Err(Error::Eta { num: eta_num, den: eta_den });
    }
    let theta = 2 * d as u64 - 1;
    let one = BigRational::one();
    let one_minus_inv_pow = |e: u32| -> BigRational {
        one.clone() - BigRational::new(BigInt::one(), BigInt::from(theta).pow(e))
    };

    // exponent 2 / (1 - eta) = 2 den / (den - num)
    let (num, den) = (2 * eta_den as u128, (eta_den - eta_num) as u128);
    let p0 = if num % den == 0 {
        ThresholdValue::exact(one_minus_inv_pow((num / den) as u32))
    } else {
        let e = num as f64 / den as f64;
        ThresholdValue { exact: None, approx: 1.0 - (theta as f64).powf(-e) }
    };
    let p1 = one_minus_inv_pow(2 * (2 + d as u32));
    Ok(Thresholds { d, theta, p0, p1 })
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    r.to_f64().unwrap_or(f64::NAN)
}
