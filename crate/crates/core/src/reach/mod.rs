//! Reachability inside a finite window: forward, backward, mutual and
//! slab-restricted clusters, plus the left-boundary view of a cluster.

mod boundary;
mod export;
mod window;

use std::collections::VecDeque;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use boundary::{boundary_function, BoundaryFunction};
pub use export::{read_cluster_rle, RleCluster};
pub use window::{Window, DEFAULT_MAX_SITES};

use crate::env::{Arrows, Environment, Model, SiteKind};
use crate::error::{Error, Result};
use crate::lattice::{ConeSpec, Point, SlabSpec};

/// An extended integer: a finite level or one of the two infinities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    NegInf,
    Finite(i64),
    PosInf,
}

impl Level {
    pub fn finite(self) -> Option<i64> {
        match self {
            Level::Finite(k) => Some(k),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Level::Finite(_))
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::NegInf => f.write_str("-INF"),
            Level::Finite(k) => write!(f, "{k}"),
            Level::PosInf => f.write_str("INF"),
        }
    }
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Level::Finite(k) => s.serialize_i64(*k),
            other => s.collect_str(other),
        }
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(k) => Ok(Level::Finite(k)),
            Raw::Text(t) if t == "INF" => Ok(Level::PosInf),
            Raw::Text(t) if t == "-INF" => Ok(Level::NegInf),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad level {t:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Backward,
    Mutual,
}

/// Extra bookkeeping during exploration.
#[derive(Clone, Debug, Default)]
pub struct ClusterOptions {
    /// Count reached sites falling outside this shifted cone.
    pub cone: Option<ConeSpec>,
}

/// Sites reached from (or reaching) a source inside a window, with
/// diagnostics about arrows that cross the window boundary.
#[derive(Clone, Debug)]
pub struct ClusterResult {
    window: Window,
    source: Point,
    direction: Direction,
    members: FixedBitSet,
    size: usize,
    /// `escapes[2i]` counts crossings of the low face of axis `i`,
    /// `escapes[2i + 1]` of the high face.
    escapes: Vec<u64>,
    min_escape_diag: Option<i64>,
    max_escape_diag: Option<i64>,
    min_reached_diag: i64,
    max_reached_diag: i64,
    escaped_below_cone: u64,
    members_outside_cone: u64,
}

impl ClusterResult {
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn source(&self) -> &Point {
        &self.source
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn members(&self) -> &FixedBitSet {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.size
    }

    /// Never true: the source is always a member.
    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.window.index(x).is_some_and(|i| self.members.contains(i))
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.members.ones().map(|i| self.window.point(i))
    }

    pub fn escapes(&self) -> &[u64] {
        &self.escapes
    }

    pub fn escaped_through(&self, axis: usize, positive: bool) -> u64 {
        self.escapes[2 * axis + positive as usize]
    }

    pub fn escape_count(&self) -> u64 {
        self.escapes.iter().sum()
    }

    /// Smallest `x·1` over escaped arrow endpoints (heads going forward,
    /// tails going backward).
    pub fn min_escape_diag(&self) -> Option<i64> {
        self.min_escape_diag
    }

    pub fn max_escape_diag(&self) -> Option<i64> {
        self.max_escape_diag
    }

    /// Smallest `x·1` over members and escaped endpoints.
    pub fn min_reached_diag(&self) -> i64 {
        self.min_reached_diag
    }

    pub fn max_reached_diag(&self) -> i64 {
        self.max_reached_diag
    }

    /// Escaped endpoints outside the configured cone.
    pub fn escaped_below_cone(&self) -> u64 {
        self.escaped_below_cone
    }

    /// Members outside the configured cone.
    pub fn members_outside_cone(&self) -> u64 {
        self.members_outside_cone
    }

    /// Whether anything reached lies outside the configured cone.
    pub fn leaves_cone(&self) -> bool {
        self.escaped_below_cone + self.members_outside_cone > 0
    }
}

struct Tally {
    escapes: Vec<u64>,
    min_escape: Option<i64>,
    max_escape: Option<i64>,
    min_reached: i64,
    max_reached: i64,
    cone: Option<ConeSpec>,
    escaped_below_cone: u64,
    members_outside_cone: u64,
}

impl Tally {
    fn new(d: usize, opts: &ClusterOptions) -> Self {
        Tally {
            escapes: vec![0; 2 * d],
            min_escape: None,
            max_escape: None,
            min_reached: i64::MAX,
            max_reached: i64::MIN,
            cone: opts.cone.clone(),
            escaped_below_cone: 0,
            members_outside_cone: 0,
        }
    }

    #[inline]
    fn member(&mut self, x: &[i64], diag: i64) {
        self.min_reached = self.min_reached.min(diag);
        self.max_reached = self.max_reached.max(diag);
        if self.cone.as_ref().is_some_and(|c| !c.contains(x)) {
            self.members_outside_cone += 1;
        }
    }

    #[inline]
    fn escape(&mut self, face: usize, x: &[i64], diag: i64) {
        self.escapes[face] += 1;
        self.min_escape = Some(self.min_escape.map_or(diag, |m| m.min(diag)));
        self.max_escape = Some(self.max_escape.map_or(diag, |m| m.max(diag)));
        self.min_reached = self.min_reached.min(diag);
        self.max_reached = self.max_reached.max(diag);
        if self.cone.as_ref().is_some_and(|c| !c.contains(x)) {
            self.escaped_below_cone += 1;
        }
    }

    fn finish(self, window: &Window, source: &Point, direction: Direction, members: FixedBitSet) -> ClusterResult {
        ClusterResult {
            window: window.clone(),
            source: source.clone(),
            direction,
            size: members.count_ones(..),
            members,
            escapes: self.escapes,
            min_escape_diag: self.min_escape,
            max_escape_diag: self.max_escape,
            min_reached_diag: self.min_reached,
            max_reached_diag: self.max_reached,
            escaped_below_cone: self.escaped_below_cone,
            members_outside_cone: self.members_outside_cone,
        }
    }
}

fn check_env<E: Environment + ?Sized>(env: &E, w: &Window) -> Result<()> {
    if env.dim() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), got: env.dim() });
    }
    Ok(())
}

fn source_index(w: &Window, source: &Point) -> Result<usize> {
    if source.dim() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), got: source.dim() });
    }
    w.index(source).ok_or_else(|| Error::OutsideWindow(source.to_vec()))
}

fn diag(x: &[i64]) -> i64 {
    x.iter().sum()
}

/// The forward cluster of `source`: everything reachable by arrows whose
/// tail lies in the window (and in its slab, if any).
pub fn forward_cluster<E: Environment + ?Sized>(env: &E, source: &Point, w: &Window) -> Result<ClusterResult> {
    forward_cluster_with(env, source, w, &ClusterOptions::default())
}

pub fn forward_cluster_with<E: Environment + ?Sized>(
    env: &E,
    source: &Point,
    w: &Window,
    opts: &ClusterOptions,
) -> Result<ClusterResult> {
    check_env(env, w)?;
    let src = source_index(w, source)?;
    if w.slab().is_some_and(|s| !s.contains(source)) {
        return Err(Error::OutsideSlab(source.to_vec()));
    }
    let d = w.dim();
    let (lo, hi) = (w.lo().coords(), w.hi().coords());
    let mut tally = Tally::new(d, opts);
    let mut members = FixedBitSet::with_capacity(w.volume());
    members.insert(src);
    tally.member(source, diag(source));
    let mut queue = VecDeque::from([src]);
    let mut x = vec![0i64; d];
    while let Some(idx) = queue.pop_front() {
        w.decode(idx, &mut x);
        // heads outside the slab are members but never expand
        if w.slab().is_some_and(|s| !s.contains(&x)) {
            continue;
        }
        let base = diag(&x);
        for (axis, pos) in env.arrows(&x).iter() {
            let step = if pos { 1 } else { -1 };
            x[axis] += step;
            if lo[axis] <= x[axis] && x[axis] <= hi[axis] {
                let next = if pos { idx + w.stride(axis) } else { idx - w.stride(axis) };
                if !members.put(next) {
                    tally.member(&x, base + step);
                    queue.push_back(next);
                }
            } else {
                tally.escape(2 * axis + pos as usize, &x, base + step);
            }
            x[axis] -= step;
        }
    }
    Ok(tally.finish(w, source, Direction::Forward, members))
}

/// The forward cluster restricted to arrows starting in `slab`.
pub fn slab_cluster<E: Environment + ?Sized>(env: &E, source: &Point, slab: &SlabSpec, w: &Window) -> Result<ClusterResult> {
    let w = w.clone().with_slab(slab.clone())?;
    forward_cluster(env, source, &w)
}

/// The backward cluster of `target`: every window site with an arrow path
/// to `target` whose tails stay in the window (and slab).
pub fn backward_cluster<E: Environment + ?Sized>(env: &E, target: &Point, w: &Window) -> Result<ClusterResult> {
    backward_cluster_with(env, target, w, &ClusterOptions::default())
}

pub fn backward_cluster_with<E: Environment + ?Sized>(
    env: &E,
    target: &Point,
    w: &Window,
    opts: &ClusterOptions,
) -> Result<ClusterResult> {
    check_env(env, w)?;
    let tgt = source_index(w, target)?;
    let d = w.dim();
    let model = env.model();
    let (lo, hi) = (w.lo().coords(), w.hi().coords());
    let mut tally = Tally::new(d, opts);
    let mut members = FixedBitSet::with_capacity(w.volume());
    members.insert(tgt);
    tally.member(target, diag(target));
    // 0 = not looked up yet, otherwise 1 + kind
    let mut kinds = vec![0u8; w.volume()];
    let mut queue = VecDeque::from([tgt]);
    let mut x = vec![0i64; d];
    while let Some(idx) = queue.pop_front() {
        w.decode(idx, &mut x);
        let base = diag(&x);
        for axis in 0..d {
            for pos in [true, false] {
                // tail y = z - step, with the arrow y -> z pointing along +-e_axis
                let step = if pos { 1 } else { -1 };
                x[axis] -= step;
                let inside = lo[axis] <= x[axis] && x[axis] <= hi[axis];
                let prev = if inside { Some(if pos { idx - w.stride(axis) } else { idx + w.stride(axis) }) } else { None };
                let allowed = w.slab().is_none_or(|s| s.contains(&x))
                    && points_along(env, model, d, &x, prev, &mut kinds, axis, pos);
                if allowed {
                    match prev {
                        Some(p) => {
                            if !members.put(p) {
                                tally.member(&x, base - step);
                                queue.push_back(p);
                            }
                        }
                        None => {
                            let face = 2 * axis + (x[axis] > hi[axis]) as usize;
                            tally.escape(face, &x, base - step);
                        }
                    }
                }
                x[axis] += step;
            }
        }
    }
    Ok(tally.finish(w, target, Direction::Backward, members))
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn points_along<E: Environment + ?Sized>(
    env: &E,
    model: Model,
    d: usize,
    y: &[i64],
    idx: Option<usize>,
    kinds: &mut [u8],
    axis: usize,
    pos: bool,
) -> bool {
    // every half-orthant site carries all positive arrows
    if pos && model == Model::HalfOrthant {
        return true;
    }
    let kind = match idx {
        Some(i) => {
            if kinds[i] == 0 {
                kinds[i] = 1 + (env.kind(y) == SiteKind::Minus) as u8;
            }
            if kinds[i] == 1 {
                SiteKind::Plus
            } else {
                SiteKind::Minus
            }
        }
        None => env.kind(y),
    };
    Arrows::for_site(model, kind, d).contains(axis, pos)
}

/// Sites both reachable from `x` and reaching `x` inside the window.
pub fn mutual_cluster<E: Environment + ?Sized>(env: &E, x: &Point, w: &Window) -> Result<ClusterResult> {
    let fwd = forward_cluster(env, x, w)?;
    let bwd = backward_cluster(env, x, w)?;
    let mut members = fwd.members.clone();
    members.intersect_with(&bwd.members);
    let mut min_reached = i64::MAX;
    let mut max_reached = i64::MIN;
    for i in members.ones() {
        let s = diag(&w.point(i));
        min_reached = min_reached.min(s);
        max_reached = max_reached.max(s);
    }
    let opt_min = |a: Option<i64>, b: Option<i64>| a.into_iter().chain(b).min();
    let opt_max = |a: Option<i64>, b: Option<i64>| a.into_iter().chain(b).max();
    Ok(ClusterResult {
        window: w.clone(),
        source: x.clone(),
        direction: Direction::Mutual,
        size: members.count_ones(..),
        members,
        escapes: fwd.escapes.iter().zip(&bwd.escapes).map(|(a, b)| a + b).collect(),
        min_escape_diag: opt_min(fwd.min_escape_diag, bwd.min_escape_diag),
        max_escape_diag: opt_max(fwd.max_escape_diag, bwd.max_escape_diag),
        min_reached_diag: min_reached,
        max_reached_diag: max_reached,
        escaped_below_cone: 0,
        members_outside_cone: 0,
    })
}
