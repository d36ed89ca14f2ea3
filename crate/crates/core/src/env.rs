//! The coupled random environment.
//!
//! Every site `x` carries a uniform `U_x` derived by a counter-based hash of
//! `(seed, x)`. A site is `Plus` iff `U_x <= p`, in both models, so one seed
//! realises the orthant and half-orthant environments for every `p` on one
//! probability space.

use std::io::{self, BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_dim, Point};
use crate::prob::Prob;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Orthant,
    HalfOrthant,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Orthant => "orthant",
            Model::HalfOrthant => "half-orthant",
        })
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "orthant" => Ok(Model::Orthant),
            "half-orthant" | "halforthant" => Ok(Model::HalfOrthant),
            other => Err(Error::Invalid(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SiteKind {
    Plus,
    Minus,
}

/// Set of unit steps leaving a site. Bit `2i` is `+e_i`, bit `2i+1` is `-e_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Arrows(u128);

impl Arrows {
    pub fn positive(d: usize) -> Self {
        Arrows((0..d).fold(0, |m, i| m | 1 << (2 * i)))
    }

    pub fn negative(d: usize) -> Self {
        Arrows(Self::positive(d).0 << 1)
    }

    pub fn all(d: usize) -> Self {
        Arrows(Self::positive(d).0 | Self::negative(d).0)
    }

    pub fn for_site(model: Model, kind: SiteKind, d: usize) -> Self {
        match (model, kind) {
            (_, SiteKind::Plus) => Self::positive(d),
            (Model::Orthant, SiteKind::Minus) => Self::negative(d),
            (Model::HalfOrthant, SiteKind::Minus) => Self::all(d),
        }
    }

    pub fn contains(&self, axis: usize, positive: bool) -> bool {
        self.0 >> (2 * axis + usize::from(!positive)) & 1 == 1
    }

    pub fn is_subset(&self, other: &Arrows) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Steps as `(axis, positive)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let b = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some((b / 2, b % 2 == 0))
        })
    }

    /// Steps as displacement vectors.
    pub fn vectors(&self, d: usize) -> Vec<Point> {
        self.iter()
            .map(|(axis, pos)| {
                let mut c = vec![0; d];
                c[axis] = if pos { 1 } else { -1 };
                Point::new(c).expect("unit vector")
            })
            .collect()
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `U_x` as a 64-bit fraction: the uniform is `uniform_at(seed, x) / 2^64`.
#[inline]
pub fn uniform_at(seed: u64, x: &[i64]) -> u64 {
    let mut h = mix64(seed ^ 0x6A09_E667_F3BC_C909);
    for &c in x {
        h = mix64(h.wrapping_add(GOLDEN) ^ c as u64);
    }
    h
}

pub fn uniform_f64(seed: u64, x: &[i64]) -> f64 {
    (uniform_at(seed, x) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seed of trial `index` in a family keyed by `base`.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index.wrapping_add(GOLDEN)))
}

/// Anything that assigns a site kind to every lattice point.
pub trait Environment: Sync {
    fn dim(&self) -> usize;

    fn model(&self) -> Model;

    fn kind(&self, x: &[i64]) -> SiteKind;

    fn arrows(&self, x: &[i64]) -> Arrows {
        Arrows::for_site(self.model(), self.kind(x), self.dim())
    }

    /// The Plus probability, when the environment is a sample of one.
    fn plus_probability(&self) -> Option<Prob> {
        None
    }
}

/// The hashed, infinite environment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub model: Model,
    pub p: Prob,
    pub seed: u64,
    pub d: usize,
    /// Optional relabelling of axes: the site `y` reads the uniform of
    /// `x` with `x[axes[i]] = y[i]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<usize>>,
}

impl EnvironmentSpec {
    pub fn new(model: Model, p: Prob, seed: u64, d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(EnvironmentSpec { model, p, seed, d, axes: None })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EnvironmentSpec { seed, ..self.clone() }
    }

    pub fn with_model(&self, model: Model) -> Self {
        EnvironmentSpec { model, ..self.clone() }
    }

    pub fn with_p(&self, p: Prob) -> Self {
        EnvironmentSpec { p, ..self.clone() }
    }

    pub fn with_axes(&self, axes: Vec<usize>) -> Result<Self> {
        let mut seen = axes.clone();
        seen.sort_unstable();
        if axes.len() != self.d || seen.iter().enumerate().any(|(i, &a)| i != a) {
            return Err(Error::Invalid(format!("{axes:?} is not a permutation of 0..{}", self.d)));
        }
        Ok(EnvironmentSpec { axes: Some(axes), ..self.clone() })
    }

    pub fn uniform(&self, x: &[i64]) -> u64 {
        match &self.axes {
            None => uniform_at(self.seed, x),
            Some(axes) => {
                let mut buf = [0i64; crate::lattice::MAX_DIM];
                for (i, &a) in axes.iter().enumerate() {
                    buf[a] = x[i];
                }
                uniform_at(self.seed, &buf[..self.d])
            }
        }
    }
}

impl Environment for EnvironmentSpec {
    fn dim(&self) -> usize {
        self.d
    }

    fn model(&self) -> Model {
        self.model
    }

    fn plus_probability(&self) -> Option<Prob> {
        Some(self.p)
    }

    #[inline]
    fn kind(&self, x: &[i64]) -> SiteKind {
        if self.p.admits(self.uniform(x)) {
            SiteKind::Plus
        } else {
            SiteKind::Minus
        }
    }
}

/// An explicit environment on a box, with a fixed kind outside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvTable {
    model: Model,
    lo: Vec<i64>,
    hi: Vec<i64>,
    kinds: Vec<SiteKind>,
    outside: SiteKind,
}

impl EnvTable {
    /// `kinds` is row-major over `[lo, hi]` (last coordinate fastest).
    pub fn new(model: Model, lo: Vec<i64>, hi: Vec<i64>, kinds: Vec<SiteKind>) -> Result<Self> {
        check_dim(lo.len())?;
        if hi.len() != lo.len() || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Window(format!("bad table box {lo:?}..{hi:?}")));
        }
        let volume: usize = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).product();
        if kinds.len() != volume {
            return Err(Error::Format(format!("expected {volume} cells, got {}", kinds.len())));
        }
        Ok(EnvTable { model, lo, hi, kinds, outside: SiteKind::Plus })
    }

    /// Tabulates another environment over a box.
    pub fn capture<E: Environment>(env: &E, lo: &[i64], hi: &[i64]) -> Result<Self> {
        let mut kinds = Vec::new();
        for_each_in_box(lo, hi, |x| kinds.push(env.kind(x)));
        EnvTable::new(env.model(), lo.to_vec(), hi.to_vec(), kinds)
    }

    pub fn with_outside(mut self, kind: SiteKind) -> Self {
        self.outside = kind;
        self
    }

    pub fn with_model(mut self, model: Model) -> Self {
        self.model = model;
        self
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn kinds(&self) -> &[SiteKind] {
        &self.kinds
    }

    fn index(&self, x: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for i in 0..self.lo.len() {
            if x[i] < self.lo[i] || x[i] > self.hi[i] {
                return None;
            }
            idx = idx * (self.hi[i] - self.lo[i] + 1) as usize + (x[i] - self.lo[i]) as usize;
        }
        Some(idx)
    }
}

impl Environment for EnvTable {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn model(&self) -> Model {
        self.model
    }

    fn kind(&self, x: &[i64]) -> SiteKind {
        self.index(x).map_or(self.outside, |i| self.kinds[i])
    }
}

/// Visits every point of `[lo, hi]` in row-major order.
pub fn for_each_in_box(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    let mut x = lo.to_vec();
    loop {
        f(&x);
        let mut i = x.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if x[i] < hi[i] {
                x[i] += 1;
                break;
            }
            x[i] = lo[i];
        }
    }
}

/// Header of an exported environment slice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceHeader {
    pub d: usize,
    pub seed: u64,
    pub p: Prob,
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

const SLICE_MAGIC: &[u8; 4] = b"OENV";
const SLICE_VERSION: u8 = 1;

fn slice_header(env: &EnvironmentSpec, lo: &[i64], hi: &[i64]) -> Result<SliceHeader> {
    if lo.len() != env.d || hi.len() != env.d || lo.iter().zip(hi).any(|(a, b)| a > b) {
        return Err(Error::Window(format!("bad slice box {lo:?}..{hi:?}")));
    }
    Ok(SliceHeader { d: env.d, seed: env.seed, p: env.p, lo: lo.to_vec(), hi: hi.to_vec() })
}

fn join(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
}

/// CSV grid export. Line 1 names the header fields, line 2 holds them
/// (`lo`/`hi` space separated). Each following record is one grid row: the
/// leading `d - 1` coordinates, then one `1` (Plus) or `0` (Minus) per cell
/// along the last axis.
pub fn write_slice_csv<W: Write>(env: &EnvironmentSpec, lo: &[i64], hi: &[i64], mut w: W) -> Result<()> {
    let h = slice_header(env, lo, hi)?;
    writeln!(w, "d,seed,p_num,p_den,lo,hi")?;
    writeln!(w, "{},{},{},{},{},{}", h.d, h.seed, h.p.num(), h.p.den(), join(lo), join(hi))?;
    let d = h.d;
    let mut x = lo.to_vec();
    for_each_in_box(&lo[..d - 1], &hi[..d - 1], |lead| {
        x[..d - 1].copy_from_slice(lead);
        let mut line = join(lead).replace(' ', ",");
        for last in lo[d - 1]..=hi[d - 1] {
            x[d - 1] = last;
            line.push_str(if env.kind(&x) == SiteKind::Plus { ",1" } else { ",0" });
        }
        let _ = writeln!(w, "{line}");
    });
    w.flush()?;
    Ok(())
}

fn parse_list(s: &str) -> Result<Vec<i64>> {
    s.split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Format(format!("bad coordinate {t:?}"))))
        .collect()
}

pub fn read_slice_csv<R: BufRead>(model: Model, r: R) -> Result<(SliceHeader, EnvTable)> {
    let bad = |m: &str| Error::Format(m.to_string());
    let mut lines = r.lines();
    let names = lines.next().ok_or_else(|| bad("missing header"))??;
    if names.trim() != "d,seed,p_num,p_den,lo,hi" {
        return Err(bad("unexpected header fields"));
    }
    let values = lines.next().ok_or_else(|| bad("missing header values"))??;
    let f: Vec<&str> = values.trim().split(',').collect();
    if f.len() != 6 {
        return Err(bad("header must have 6 fields"));
    }
    let num = |s: &str| s.parse::<u64>().map_err(|_| bad("bad header number"));
    let d = num(f[0])? as usize;
    let header = SliceHeader {
        d,
        seed: num(f[1])?,
        p: Prob::new(num(f[2])?, num(f[3])?)?,
        lo: parse_list(f[4])?,
        hi: parse_list(f[5])?,
    };
    if header.lo.len() != d || header.hi.len() != d {
        return Err(bad("box dimension mismatch"));
    }
    let row_len = (header.hi[d - 1] - header.lo[d - 1] + 1) as usize;
    let mut kinds = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.trim().split(',').collect();
        if cells.len() != d - 1 + row_len {
            return Err(bad("row has the wrong number of cells"));
        }
        for c in &cells[d - 1..] {
            kinds.push(match *c {
                "1" => SiteKind::Plus,
                "0" => SiteKind::Minus,
                _ => return Err(bad("cell must be 0 or 1")),
            });
        }
    }
    let table = EnvTable::new(model, header.lo.clone(), header.hi.clone(), kinds)?;
    Ok((header, table))
}

/// Binary export: `b"OENV"`, version byte, `d` byte, then little-endian
/// `seed: u64`, `p_num: u64`, `p_den: u64`, `lo: [i64; d]`, `hi: [i64; d]`,
/// then one bit per cell in row-major order (LSB first, 1 = Plus).
pub fn write_slice_binary<W: Write>(env: &EnvironmentSpec, lo: &[i64], hi: &[i64], mut w: W) -> Result<()> {
    let h = slice_header(env, lo, hi)?;
    w.write_all(SLICE_MAGIC)?;
    w.write_all(&[SLICE_VERSION, h.d as u8])?;
    for v in [h.seed, h.p.num(), h.p.den()] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in lo.iter().chain(hi) {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut bytes = Vec::new();
    let mut n = 0usize;
    for_each_in_box(lo, hi, |x| {
        if n % 8 == 0 {
            bytes.push(0u8);
        }
        if env.kind(x) == SiteKind::Plus {
            *bytes.last_mut().unwrap() |= 1 << (n % 8);
        }
        n += 1;
    });
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn read_slice_binary<R: Read>(model: Model, mut r: R) -> Result<(SliceHeader, EnvTable)> {
    let mut head = [0u8; 6];
    r.read_exact(&mut head)?;
    if &head[..4] != SLICE_MAGIC || head[4] != SLICE_VERSION {
        return Err(Error::Format("not an environment slice".into()));
    }
    let d = head[5] as usize;
    check_dim(d)?;
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> io::Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let seed = u64::from_le_bytes(next(&mut r)?);
    let p_num = u64::from_le_bytes(next(&mut r)?);
    let p_den = u64::from_le_bytes(next(&mut r)?);
    let mut bounds = Vec::with_capacity(2 * d);
    for _ in 0..2 * d {
        bounds.push(i64::from_le_bytes(next(&mut r)?));
    }
    let (lo, hi) = (bounds[..d].to_vec(), bounds[d..].to_vec());
    if lo.iter().zip(&hi).any(|(a, b)| a > b) {
        return Err(Error::Format("bad box".into()));
    }
    let volume: usize = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).product();
    let mut bytes = vec![0u8; volume.div_ceil(8)];
    r.read_exact(&mut bytes)?;
    let kinds = (0..volume)
        .map(|i| if bytes[i / 8] >> (i % 8) & 1 == 1 { SiteKind::Plus } else { SiteKind::Minus })
        .collect();
    let header = SliceHeader { d, seed, p: Prob::new(p_num, p_den)?, lo: lo.clone(), hi: hi.clone() };
    Ok((header, EnvTable::new(model, lo, hi, kinds)?))
}
