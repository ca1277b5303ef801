//! Truncated partial transforms of a pair `(X, Y)` at concrete matrix points.
//!
//! Every series is summed to total degree `N` in its `B`-arguments (the
//! number of `L_b X` and `R_d Y` factors), at points of norm at most `ρ`.
//! Each value carries an estimated tail from its last retained terms.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bnc::Side;
use crate::cumulants::{Decorated, Engine, FockEngine};
use crate::error::{Error, Result};
use crate::matrix::BMatrix;
use crate::models::{FockModel, OpElement, ShiftedPair, TwoFacedFamily};

pub mod inverse;
pub mod partial;
pub mod pinched;
pub mod verify;

pub use inverse::{Inverse, SRoute};

pub const DEFAULT_ORDER: usize = 6;
pub const DEFAULT_RHO: f64 = 0.08;
/// Means used by the `S`/`T` evaluators must be inverted with at most this condition.
pub const MEAN_COND_CAP: f64 = 1e4;

/// Truncation contract `(N, ρ)` plus the shared cumulant engine.
#[derive(Clone)]
pub struct SeriesContext {
    engine: Arc<FockEngine>,
    unit: OpElement,
    pub order: usize,
    pub rho: f64,
}

impl SeriesContext {
    pub fn new(model: FockModel, order: usize, rho: f64) -> Self {
        SeriesContext::from_engine(Arc::new(Engine::new(model)), order, rho)
    }

    pub fn from_engine(engine: Arc<FockEngine>, order: usize, rho: f64) -> Self {
        let unit = OpElement::identity(engine.d());
        SeriesContext { engine, unit, order, rho }
    }

    /// Same engine and caches, different truncation order.
    pub fn with_order(&self, order: usize) -> Self {
        SeriesContext { order, ..self.clone() }
    }

    pub fn engine(&self) -> &FockEngine {
        &self.engine
    }

    pub fn d(&self) -> usize {
        self.engine.d()
    }

    /// `‖p‖ ≤ ρ` in operator norm.
    pub fn check_point(&self, p: &BMatrix) -> Result<()> {
        if p.d() != self.d() {
            return Err(Error::Dimension(format!("point is {}x{}, model is over M_{}", p.d(), p.d(), self.d())));
        }
        let norm = p.norm_op();
        if norm > self.rho * (1.0 + 1e-12) {
            return Err(Error::NormTooLarge { norm, rho: self.rho });
        }
        Ok(())
    }

    /// `E(Z)` inverted under the condition cap of the `S`/`T` evaluators.
    pub fn mean_inverse(&self, side: Side, z: &OpElement) -> Result<BMatrix> {
        self.engine.e_full(&[side], &[Decorated::plain(z.clone())])?.inverse_capped(MEAN_COND_CAP)
    }
}

/// A left element `X` and a right element `Y`.
#[derive(Clone, Debug)]
pub struct Pair {
    pub x: OpElement,
    pub y: OpElement,
}

impl Pair {
    pub fn new(x: OpElement, y: OpElement) -> Self {
        Pair { x, y }
    }

    pub fn from_family(f: &TwoFacedFamily, x: &str, y: &str) -> Result<Self> {
        let get = |side, name: &str| {
            f.get(side, name).cloned().ok_or_else(|| Error::InvalidWord(format!("no {} element named {name}", side_name(side))))
        };
        Ok(Pair { x: get(Side::Left, x)?, y: get(Side::Right, y)? })
    }

    /// `(X_1 + X_2, Y_1 + Y_2)`.
    pub fn sum(&self, other: &Pair) -> Pair {
        Pair { x: self.x.add(&other.x), y: self.y.add(&other.y) }
    }

    /// `(X_1 + X_2, Y_1 Y_2)`.
    pub fn sum_product(&self, other: &Pair) -> Pair {
        Pair { x: self.x.add(&other.x), y: self.y.mul(&other.y) }
    }

    /// `(X_1 X_2, Y_1 Y_2)`.
    pub fn product(&self, other: &Pair) -> Pair {
        Pair { x: self.x.mul(&other.x), y: self.y.mul(&other.y) }
    }
}

impl From<&ShiftedPair> for Pair {
    fn from(p: &ShiftedPair) -> Self {
        Pair { x: p.x.clone(), y: p.y.clone() }
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Left => "left",
        Side::Right => "right",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesKind {
    G,
    R,
    M,
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwoFaceKind {
    M,
    C,
    K,
}

/// A truncated sum with its estimated tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: BMatrix,
    pub order: usize,
    pub tail: f64,
}

/// Ratio of successive terms used when the observed ratio is smaller or undefined.
fn ratio_floor(rho: f64) -> f64 {
    rho.clamp(1e-6, 0.9)
}

/// Tail of a graded sum from its last two terms: `max(t_N, q t_{N-1}) · q/(1-q)`.
pub fn tail_estimate(last: f64, prev: f64, rho: f64) -> f64 {
    let mut q = ratio_floor(rho);
    if prev > 0.0 && last / prev > q {
        q = (last / prev).min(0.9);
    }
    last.max(q * prev) * q / (1.0 - q)
}

impl SeriesValue {
    fn from_terms(d: usize, terms: &[BMatrix], order: usize, rho: f64) -> Self {
        let mut value = BMatrix::zeros(d);
        for t in terms {
            value += t;
        }
        let norms: Vec<f64> = terms.iter().map(|t| t.norm_max()).collect();
        let last = norms.last().copied().unwrap_or(0.0);
        let prev = if norms.len() >= 2 { norms[norms.len() - 2] } else { 0.0 };
        SeriesValue { value, order, tail: tail_estimate(last, prev, rho) }
    }
}

/// Prefix overrides for the `≺`-first left entry and the `≺`-last (first right) entry
/// of every term of `K`. Setting one to `p` computes the series after peeling the
/// guaranteed outer factor, e.g. `b⁻¹ K(b, c, d)` is `K` with the first left prefix `1`.
#[derive(Clone, Debug, Default)]
pub struct Peel {
    pub first_left_pre: Option<BMatrix>,
    pub first_right_pre: Option<BMatrix>,
}

impl Peel {
    pub fn none() -> Self {
        Peel::default()
    }

    pub fn left(p: BMatrix) -> Self {
        Peel { first_left_pre: Some(p), first_right_pre: None }
    }

    pub fn right(p: BMatrix) -> Self {
        Peel { first_left_pre: None, first_right_pre: Some(p) }
    }

    pub fn both(l: BMatrix, r: BMatrix) -> Self {
        Peel { first_left_pre: Some(l), first_right_pre: Some(r) }
    }
}

pub(crate) fn deco(op: &OpElement, pre: Option<&BMatrix>, suf: Option<&BMatrix>) -> Decorated<OpElement> {
    Decorated::new(op.clone(), pre.cloned(), suf.cloned())
}

pub(crate) fn chi(n: usize, m: usize) -> Vec<Side> {
    let mut t = vec![Side::Left; n];
    t.extend(std::iter::repeat(Side::Right).take(m));
    t
}

impl SeriesContext {
    fn e(&self, tags: &[Side], entries: &[Decorated<OpElement>]) -> Result<BMatrix> {
        self.engine.e_full(tags, entries)
    }

    fn k(&self, tags: &[Side], entries: &[Decorated<OpElement>]) -> Result<BMatrix> {
        self.engine.kappa_full(tags, entries)
    }

    /// `(L_b Z)^n` as entries (`R_d Z` on the right), with an optional suffix on the last one.
    fn run(z: &OpElement, p: &BMatrix, n: usize, last_suf: Option<&BMatrix>) -> Vec<Decorated<OpElement>> {
        (0..n).map(|k| deco(z, Some(p), if k + 1 == n { last_suf } else { None })).collect()
    }

    /// One-face series of `X` at `b` (`side = Left`) or `Y` at `d` (`side = Right`).
    pub fn one_face(&self, kind: SeriesKind, side: Side, z: &OpElement, p: &BMatrix) -> Result<SeriesValue> {
        let d = self.d();
        let n_max = self.order;
        let tags = |n: usize| vec![side; n];
        let mut terms = Vec::with_capacity(n_max + 1);
        match kind {
            SeriesKind::M => {
                terms.push(BMatrix::identity(d));
                for n in 1..=n_max {
                    terms.push(self.e(&tags(n), &Self::run(z, p, n, None))?);
                }
            }
            SeriesKind::G => {
                terms.push(p.clone());
                for n in 1..=n_max {
                    terms.push(self.e(&tags(n), &Self::run(z, p, n, Some(p)))?);
                }
            }
            SeriesKind::C => {
                terms.push(BMatrix::identity(d));
                for n in 1..=n_max {
                    terms.push(self.k(&tags(n), &Self::run(z, p, n, None))?);
                }
            }
            SeriesKind::R => {
                for n in 1..=n_max {
                    let mut entries = vec![Decorated::plain(z.clone())];
                    entries.extend(Self::run(z, p, n - 1, None));
                    terms.push(self.k(&tags(n), &entries)?);
                }
            }
        }
        Ok(SeriesValue::from_terms(d, &terms, n_max, self.rho))
    }

    pub fn left(&self, kind: SeriesKind, x: &OpElement, b: &BMatrix) -> Result<SeriesValue> {
        self.one_face(kind, Side::Left, x, b)
    }

    pub fn right(&self, kind: SeriesKind, y: &OpElement, d: &BMatrix) -> Result<SeriesValue> {
        self.one_face(kind, Side::Right, y, d)
    }

    /// `Σ_{n+m≤N} E((L_bX)^n (R_dY)^m T_c)` with `T_c = R_c` or `L_c`.
    pub fn m_xy_with(&self, pair: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix, terminal: Side) -> Result<SeriesValue> {
        let mut terms = vec![BMatrix::zeros(self.d()); self.order + 1];
        for total in 0..=self.order {
            for n in 0..=total {
                let m = total - n;
                let mut tags = chi(n, m);
                let mut entries = Self::run(&pair.x, b, n, None);
                entries.extend(Self::run(&pair.y, d, m, None));
                tags.push(terminal);
                entries.push(deco(&self.unit, Some(c), None));
                terms[total] += &self.e(&tags, &entries)?;
            }
        }
        Ok(SeriesValue::from_terms(self.d(), &terms, self.order, self.rho))
    }

    /// The `n + m` block of `K`, `C`: `(L_bX)^n, (R_dY)^{m-1}, R_dYR_c`, with prefix overrides.
    fn mixed_entries(&self, pair: &Pair, n: usize, m: usize, b: &BMatrix, c: &BMatrix, d: &BMatrix, peel: &Peel) -> Vec<Decorated<OpElement>> {
        let mut entries = Self::run(&pair.x, b, n, None);
        entries.extend(Self::run(&pair.y, d, m, Some(c)));
        if n >= 1 {
            if let Some(p) = &peel.first_left_pre {
                entries[0].pre = Some(p.clone());
            }
        }
        if m >= 1 {
            if let Some(p) = &peel.first_right_pre {
                entries[n].pre = Some(p.clone());
            }
        }
        entries
    }

    /// `K_{X,Y}(b,c,d) = Σ_{n,m≥1} κ_{χ_{n,m}}(L_bX, …, R_dY, …, R_dYR_c)`.
    pub fn k_xy(&self, pair: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix, peel: &Peel) -> Result<SeriesValue> {
        let mut terms = vec![BMatrix::zeros(self.d()); self.order + 1];
        for total in 2..=self.order {
            for n in 1..total {
                let m = total - n;
                terms[total] += &self.k(&chi(n, m), &self.mixed_entries(pair, n, m, b, c, d, peel))?;
            }
        }
        Ok(SeriesValue::from_terms(self.d(), &terms, self.order, self.rho))
    }

    /// `C_{X,Y}(b,c,d)`: `c`, the left group ending in `L_bXL_c`, and the groups with a right entry.
    pub fn c_xy(&self, pair: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix) -> Result<SeriesValue> {
        let mut terms = vec![BMatrix::zeros(self.d()); self.order + 1];
        terms[0] = c.clone();
        for total in 1..=self.order {
            let mut left = Self::run(&pair.x, b, total, None);
            left[total - 1].suf = Some(c.clone());
            terms[total] += &self.k(&chi(total, 0), &left)?;
            for m in 1..=total {
                let n = total - m;
                terms[total] += &self.k(&chi(n, m), &self.mixed_entries(pair, n, m, b, c, d, &Peel::none()))?;
            }
        }
        Ok(SeriesValue::from_terms(self.d(), &terms, self.order, self.rho))
    }

    pub fn two_face(&self, kind: TwoFaceKind, pair: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix) -> Result<SeriesValue> {
        match kind {
            TwoFaceKind::M => self.m_xy_with(pair, b, c, d, Side::Right),
            TwoFaceKind::C => self.c_xy(pair, b, c, d),
            TwoFaceKind::K => self.k_xy(pair, b, c, d, &Peel::none()),
        }
    }
}

/// `left_series(kind, ctx, b)` with the norm contract enforced.
pub fn left_series(kind: SeriesKind, ctx: &SeriesContext, x: &OpElement, b: &BMatrix) -> Result<SeriesValue> {
    ctx.check_point(b)?;
    ctx.left(kind, x, b)
}

pub fn right_series(kind: SeriesKind, ctx: &SeriesContext, y: &OpElement, d: &BMatrix) -> Result<SeriesValue> {
    ctx.check_point(d)?;
    ctx.right(kind, y, d)
}

pub fn two_face_series(
    kind: TwoFaceKind,
    ctx: &SeriesContext,
    pair: &Pair,
    b: &BMatrix,
    c: &BMatrix,
    d: &BMatrix,
) -> Result<SeriesValue> {
    ctx.check_point(b)?;
    ctx.check_point(d)?;
    ctx.two_face(kind, pair, b, c, d)
}
