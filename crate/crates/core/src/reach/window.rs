use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_dim, Point, SlabSpec, MAX_COORD};

/// Default ceiling on window volume (sites), 2^28.
pub const DEFAULT_MAX_SITES: usize = 1 << 28;

/// A finite axis-aligned box `[lo, hi]` (inclusive), optionally restricted to
/// a slab. Sites are indexed in mixed radix, last coordinate fastest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    lo: Point,
    hi: Point,
    slab: Option<SlabSpec>,
    #[serde(skip)]
    strides: Vec<usize>,
    #[serde(skip)]
    volume: usize,
}

impl Window {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        Self::with_budget(lo, hi, DEFAULT_MAX_SITES)
    }

    pub fn with_budget(lo: Point, hi: Point, max_sites: usize) -> Result<Self> {
        check_dim(lo.dim())?;
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch { expected: lo.dim(), got: hi.dim() });
        }
        if lo.iter().zip(hi.iter()).any(|(a, b)| a > b) {
            return Err(Error::Window(format!("lo {lo} exceeds hi {hi}")));
        }
        // keep one unit of headroom so neighbour coordinates stay representable
        if lo.iter().chain(hi.iter()).any(|c| c.abs() >= MAX_COORD) {
            return Err(Error::Window("window touches the coordinate bound".into()));
        }
        let volume: u128 = lo.iter().zip(hi.iter()).map(|(a, b)| (b - a + 1) as u128).product();
        if volume > max_sites as u128 {
            return Err(Error::WindowTooLarge { volume, budget: max_sites });
        }
        let d = lo.dim();
        let mut strides = vec![1usize; d];
        for i in (0..d - 1).rev() {
            strides[i] = strides[i + 1] * (hi[i + 1] - lo[i + 1] + 1) as usize;
        }
        Ok(Window { lo, hi, slab: None, strides, volume: volume as usize })
    }

    /// `[-r, r]^d`
    pub fn cube(d: usize, r: i64) -> Result<Self> {
        Self::new(Point::new(vec![-r; d])?, Point::new(vec![r; d])?)
    }

    /// Smallest box containing all `points`, padded by `pad` on every side.
    pub fn bounding(points: &[Point], pad: i64, max_sites: usize) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::Window("no points".into()))?;
        let d = first.dim();
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for p in points {
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let lo = Point::new(lo)?.shift_diag(-pad)?;
        let hi = Point::new(hi)?.shift_diag(pad)?;
        Self::with_budget(lo, hi, max_sites)
    }

    pub fn with_slab(mut self, slab: SlabSpec) -> Result<Self> {
        if slab.u().dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: slab.u().dim() });
        }
        self.slab = Some(slab);
        Ok(self)
    }

    pub fn without_slab(mut self) -> Self {
        self.slab = None;
        self
    }

    pub fn slab(&self) -> Option<&SlabSpec> {
        self.slab.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> &Point {
        &self.lo
    }

    pub fn hi(&self) -> &Point {
        &self.hi
    }

    pub fn volume(&self) -> usize {
        self.volume
    }

    pub fn side(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis] + 1) as usize
    }

    pub(crate) fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.iter().zip(self.lo.iter().zip(self.hi.iter())).all(|(c, (a, b))| a <= c && c <= b)
    }

    /// Whether `x` is in the box and in the slab (if any).
    pub fn expands(&self, x: &[i64]) -> bool {
        self.contains(x) && self.slab.as_ref().is_none_or(|s| s.contains(x))
    }

    pub fn index(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        Some(x.iter().zip(self.lo.iter()).zip(&self.strides).map(|((c, l), s)| (c - l) as usize * s).sum())
    }

    pub fn decode(&self, mut idx: usize, out: &mut [i64]) {
        for i in 0..self.dim() {
            out[i] = self.lo[i] + (idx / self.strides[i]) as i64;
            idx %= self.strides[i];
        }
    }

    pub fn point(&self, idx: usize) -> Point {
        let mut c = vec![0; self.dim()];
        self.decode(idx, &mut c);
        Point::new(c).expect("window coordinates are bounded")
    }

    /// Same box with strides rebuilt (after deserialisation).
    pub fn rebuilt(&self) -> Result<Self> {
        let mut w = Window::with_budget(self.lo.clone(), self.hi.clone(), usize::MAX)?;
        w.slab = self.slab.clone();
        Ok(w)
    }
}
