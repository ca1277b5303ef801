//! Bi-multiplicative evaluation of `E^B_π` and `κ^B_π`.
//!
//! The reducer works for any model that can evaluate a full moment of a
//! decorated tuple. It repeatedly extracts a `≺_χ`-interval block, factors it
//! out when it sits at either end of the remaining order, and otherwise
//! splices its value onto a `≺_χ`-neighbour as an `L_b` or `R_b` decoration.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::bnc::{enumerate_bnc_bounded, BncPartition, ChiShape, HatEmbedding, Side, DEFAULT_ENUM_BOUND};
use crate::error::{Error, Result};
use crate::matrix::{diag_part, BMatrix};
use crate::mobius::mobius;
use crate::models::{FockModel, OpElement};

/// An entry `L_pre Z L_suf` (left) or `R_pre Z R_suf` (right); `None` is the identity.
#[derive(Clone, Debug)]
pub struct Decorated<T> {
    pub op: T,
    pub pre: Option<BMatrix>,
    pub suf: Option<BMatrix>,
}

impl<T> Decorated<T> {
    pub fn plain(op: T) -> Self {
        Decorated { op, pre: None, suf: None }
    }

    pub fn new(op: T, pre: Option<BMatrix>, suf: Option<BMatrix>) -> Self {
        Decorated { op, pre, suf }
    }

    pub fn with_pre(mut self, b: BMatrix) -> Self {
        self.pre = Some(b);
        self
    }

    pub fn with_suf(mut self, b: BMatrix) -> Self {
        self.suf = Some(b);
        self
    }

    /// `Z_p L_β` (left) or `R_β Z_p` (right).
    fn splice_after(&mut self, side: Side, beta: &BMatrix) {
        match side {
            Side::Left => self.suf = Some(right_mul(&self.suf, beta)),
            Side::Right => self.pre = Some(right_mul(&self.pre, beta)),
        }
    }

    /// `L_β Z_q` (left) or `Z_q R_β` (right).
    fn splice_before(&mut self, side: Side, beta: &BMatrix) {
        match side {
            Side::Left => self.pre = Some(left_mul(beta, &self.pre)),
            Side::Right => self.suf = Some(left_mul(beta, &self.suf)),
        }
    }
}

fn right_mul(a: &Option<BMatrix>, b: &BMatrix) -> BMatrix {
    match a {
        Some(a) => a * b,
        None => b.clone(),
    }
}

fn left_mul(b: &BMatrix, a: &Option<BMatrix>) -> BMatrix {
    match a {
        Some(a) => b * a,
        None => b.clone(),
    }
}

/// A `χ`-indexed tuple of decorated operators.
#[derive(Clone, Debug)]
pub struct DecoratedTuple<T> {
    pub shape: ChiShape,
    pub entries: Vec<Decorated<T>>,
}

impl<T: Clone> DecoratedTuple<T> {
    pub fn new(shape: ChiShape, entries: Vec<Decorated<T>>) -> Result<Self> {
        if shape.len() != entries.len() {
            return Err(Error::ShapeMismatch(format!("{} entries for a shape of length {}", entries.len(), shape.len())));
        }
        Ok(DecoratedTuple { shape, entries })
    }

    pub fn plain(shape: ChiShape, ops: Vec<T>) -> Result<Self> {
        DecoratedTuple::new(shape, ops.into_iter().map(Decorated::plain).collect())
    }
}

/// Anything that can evaluate `E(D(Z_1) ⋯ D(Z_n))` for decorated entries.
pub trait MomentModel: Sync {
    type Op: Clone + Send + Sync + std::fmt::Debug;
    fn d(&self) -> usize;
    /// Identity key of an operator for caching.
    fn op_key(&self, op: &Self::Op) -> u64;
    fn moment(&self, tags: &[Side], entries: &[Decorated<Self::Op>]) -> Result<BMatrix>;
}

impl MomentModel for FockModel {
    type Op = OpElement;

    fn d(&self) -> usize {
        self.d
    }

    fn op_key(&self, op: &OpElement) -> u64 {
        op.id()
    }

    fn moment(&self, tags: &[Side], entries: &[Decorated<OpElement>]) -> Result<BMatrix> {
        let mut owned: Vec<OpElement> = Vec::new();
        let mut layout: Vec<(Option<usize>, usize, Option<usize>)> = Vec::new();
        for (k, e) in entries.iter().enumerate() {
            let pre = e.pre.as_ref().map(|b| {
                owned.push(OpElement::b_op(tags[k], b));
                owned.len() - 1
            });
            let suf = e.suf.as_ref().map(|b| {
                owned.push(OpElement::b_op(tags[k], b));
                owned.len() - 1
            });
            layout.push((pre, k, suf));
        }
        let mut seq: Vec<&OpElement> = Vec::with_capacity(3 * entries.len());
        for (pre, k, suf) in layout {
            if let Some(i) = pre {
                seq.push(&owned[i]);
            }
            seq.push(&entries[k].op);
            if let Some(i) = suf {
                seq.push(&owned[i]);
            }
        }
        FockModel::moment(self, &seq)
    }
}

/// Which algebra the moments take values in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Valued {
    /// `E` itself.
    B,
    /// `F ∘ E` with `F` the diagonal conditional expectation.
    D,
    /// `F ∘ E` with `F(b) = tr(b)/d · I`.
    Scalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pick {
    SmallestMin,
    LargestMin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Splice onto the `≺_χ`-predecessor.
    P,
    /// Splice onto the `≺_χ`-successor.
    Q,
}

/// An interval-extraction order for the reducer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub pick: Pick,
    pub route: Route,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { pick: Pick::SmallestMin, route: Route::P }
    }
}

impl Schedule {
    pub const ALL: [Schedule; 4] = [
        Schedule { pick: Pick::SmallestMin, route: Route::P },
        Schedule { pick: Pick::SmallestMin, route: Route::Q },
        Schedule { pick: Pick::LargestMin, route: Route::P },
        Schedule { pick: Pick::LargestMin, route: Route::Q },
    ];
}

type Lattice = Arc<Vec<(BncPartition, i128)>>;

/// Caches grow without bound otherwise; cleared wholesale past this size.
const CACHE_LIMIT: usize = 2_000_000;

/// Evaluator of moment and cumulant functions over a model, with caches.
pub struct Engine<M: MomentModel> {
    model: M,
    valued: Valued,
    bound: usize,
    e_cache: Mutex<FxHashMap<Vec<u64>, BMatrix>>,
    k_cache: Mutex<FxHashMap<Vec<u64>, BMatrix>>,
    lattices: Mutex<FxHashMap<Vec<Side>, Lattice>>,
}

impl<M: MomentModel> Engine<M> {
    pub fn new(model: M) -> Self {
        Engine::with_mode(model, Valued::B)
    }

    pub fn with_mode(model: M, valued: Valued) -> Self {
        Engine {
            model,
            valued,
            bound: DEFAULT_ENUM_BOUND,
            e_cache: Mutex::new(FxHashMap::default()),
            k_cache: Mutex::new(FxHashMap::default()),
            lattices: Mutex::new(FxHashMap::default()),
        }
    }

    pub fn with_bound(mut self, bound: usize) -> Self {
        self.bound = bound;
        self
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn valued(&self) -> Valued {
        self.valued
    }

    pub fn d(&self) -> usize {
        self.model.d()
    }

    pub fn clear_caches(&self) {
        self.e_cache.lock().unwrap().clear();
        self.k_cache.lock().unwrap().clear();
    }

    fn key(&self, kind: u64, tags: &[Side], entries: &[Decorated<M::Op>]) -> Vec<u64> {
        let mut k = Vec::with_capacity(2 + entries.len() * 4);
        k.push(kind);
        k.push(tags.iter().enumerate().fold(0u64, |acc, (i, t)| acc | (u64::from(*t == Side::Right) << i)));
        k.push(tags.len() as u64);
        for e in entries {
            k.push(self.model.op_key(&e.op));
            for dec in [&e.pre, &e.suf] {
                match dec {
                    None => k.push(0),
                    Some(b) => {
                        k.push(1);
                        k.extend(b.bit_pattern());
                    }
                }
            }
        }
        k
    }

    fn cached(
        &self,
        cache: &Mutex<FxHashMap<Vec<u64>, BMatrix>>,
        key: Vec<u64>,
        f: impl FnOnce() -> Result<BMatrix>,
    ) -> Result<BMatrix> {
        if let Some(v) = cache.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let v = f()?;
        let mut c = cache.lock().unwrap();
        if c.len() > CACHE_LIMIT {
            c.clear();
        }
        c.insert(key, v.clone());
        Ok(v)
    }

    /// `BNC(χ)` with `μ(σ, 1_χ)` for every member.
    fn lattice(&self, tags: &[Side]) -> Result<Lattice> {
        if let Some(l) = self.lattices.lock().unwrap().get(tags) {
            return Ok(l.clone());
        }
        let shape = ChiShape::new(tags.to_vec());
        let one = BncPartition::one(&shape);
        let mut v = Vec::new();
        for p in enumerate_bnc_bounded(&shape, self.bound)? {
            let m = mobius(&p, &one)?;
            v.push((p, m));
        }
        let l = Arc::new(v);
        self.lattices.lock().unwrap().insert(tags.to_vec(), l.clone());
        Ok(l)
    }

    /// `E^B_{1_χ}`: the full moment (composed with `F` in D-valued mode).
    pub fn e_full(&self, tags: &[Side], entries: &[Decorated<M::Op>]) -> Result<BMatrix> {
        if tags.len() != entries.len() {
            return Err(Error::ShapeMismatch(format!("{} entries, {} tags", entries.len(), tags.len())));
        }
        let key = self.key(0, tags, entries);
        self.cached(&self.e_cache, key, || {
            let m = self.model.moment(tags, entries)?;
            Ok(match self.valued {
                Valued::B => m,
                Valued::D => diag_part(&m),
                Valued::Scalar => BMatrix::scalar(m.d(), m.trace() / m.d() as f64),
            })
        })
    }

    /// `κ^B_{1_χ}` as the Möbius sum over `BNC(χ)`.
    pub fn kappa_full(&self, tags: &[Side], entries: &[Decorated<M::Op>]) -> Result<BMatrix> {
        if tags.len() != entries.len() {
            return Err(Error::ShapeMismatch(format!("{} entries, {} tags", entries.len(), tags.len())));
        }
        if tags.len() > self.bound {
            return Err(Error::BoundExceeded { n: tags.len(), bound: self.bound });
        }
        let key = self.key(1, tags, entries);
        self.cached(&self.k_cache, key, || {
            let lat = self.lattice(tags)?;
            let terms: Vec<Result<BMatrix>> = lat
                .par_iter()
                .map(|(sigma, mu)| {
                    let e = self.reduce(sigma, entries, Schedule::default(), &|t, e| self.e_full(t, e))?;
                    Ok(e.scale_re(*mu as f64))
                })
                .collect();
            let mut acc = BMatrix::zeros(self.d());
            for t in terms {
                acc += &t?;
            }
            Ok(acc)
        })
    }

    /// `E^B_π` by bi-multiplicative reduction.
    pub fn e_pi(&self, pi: &BncPartition, entries: &[Decorated<M::Op>]) -> Result<BMatrix> {
        self.e_pi_with(pi, entries, Schedule::default())
    }

    pub fn e_pi_with(&self, pi: &BncPartition, entries: &[Decorated<M::Op>], s: Schedule) -> Result<BMatrix> {
        self.reduce(pi, entries, s, &|t, e| self.e_full(t, e))
    }

    /// `κ^B_π` by bi-multiplicative reduction with full-cumulant leaves.
    pub fn kappa_pi(&self, pi: &BncPartition, entries: &[Decorated<M::Op>]) -> Result<BMatrix> {
        self.kappa_pi_with(pi, entries, Schedule::default())
    }

    pub fn kappa_pi_with(&self, pi: &BncPartition, entries: &[Decorated<M::Op>], s: Schedule) -> Result<BMatrix> {
        self.reduce(pi, entries, s, &|t, e| self.kappa_full(t, e))
    }

    /// `κ^B_π = Σ_{σ≤π} E^B_σ μ(σ, π)` computed literally.
    pub fn kappa_pi_mobius(&self, pi: &BncPartition, entries: &[Decorated<M::Op>]) -> Result<BMatrix> {
        let mut acc = BMatrix::zeros(self.d());
        for sigma in enumerate_bnc_bounded(pi.shape(), self.bound)? {
            let mu = mobius(&sigma, pi)?;
            if mu != 0 {
                acc += &self.e_pi(&sigma, entries)?.scale_re(mu as f64);
            }
        }
        Ok(acc)
    }

    /// `E^B_σ = Σ_{π≤σ} κ^B_π`.
    pub fn moments_from_cumulants(&self, sigma: &BncPartition, entries: &[Decorated<M::Op>]) -> Result<BMatrix> {
        let mut acc = BMatrix::zeros(self.d());
        for pi in enumerate_bnc_bounded(sigma.shape(), self.bound)? {
            if pi.refines(sigma)? {
                acc += &self.kappa_pi(&pi, entries)?;
            }
        }
        Ok(acc)
    }

    /// Reduce `Φ_π` to leaves `Φ_{1}` of single blocks.
    pub fn reduce(
        &self,
        pi: &BncPartition,
        entries: &[Decorated<M::Op>],
        schedule: Schedule,
        leaf: &(dyn Fn(&[Side], &[Decorated<M::Op>]) -> Result<BMatrix> + Sync),
    ) -> Result<BMatrix> {
        reduce(pi, entries, schedule, leaf)
    }
}

/// Reduce `Φ_π` to leaves `Φ_{1}` of single blocks, for any bi-multiplicative
/// family whose values on single blocks `leaf` supplies.
pub fn reduce<T: Clone>(
    pi: &BncPartition,
    entries: &[Decorated<T>],
    schedule: Schedule,
    leaf: &(dyn Fn(&[Side], &[Decorated<T>]) -> Result<BMatrix> + Sync),
) -> Result<BMatrix> {
    let shape = pi.shape();
    if entries.len() != shape.len() {
        return Err(Error::ShapeMismatch(format!("{} entries for shape {}", entries.len(), shape)));
    }
    let mut entries: Vec<Decorated<T>> = entries.to_vec();
    let mut blocks: Vec<Vec<usize>> = pi
        .blocks()
        .iter()
        .map(|b| {
            let mut v = b.clone();
            v.sort_unstable();
            v
        })
        .collect();
    let sub = |block: &[usize], entries: &[Decorated<T>]| -> Result<BMatrix> {
        let tags: Vec<Side> = block.iter().map(|&k| shape.tag(k)).collect();
        let es: Vec<Decorated<T>> = block.iter().map(|&k| entries[k].clone()).collect();
        leaf(&tags, &es)
    };
    let mut front: Vec<BMatrix> = Vec::new();
    let mut back: Vec<BMatrix> = Vec::new();
    let core = loop {
        if blocks.len() == 1 {
            break sub(&blocks[0], &entries)?;
        }
        let mut active: Vec<usize> = blocks.iter().flatten().copied().collect();
        active.sort_by_key(|&k| shape.rank(k));
        let mut pos = vec![usize::MAX; shape.len()];
        for (i, &k) in active.iter().enumerate() {
            pos[k] = i;
        }
        let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
        for (bi, b) in blocks.iter().enumerate() {
            let lo = b.iter().map(|&k| pos[k]).min().unwrap();
            let hi = b.iter().map(|&k| pos[k]).max().unwrap();
            if hi - lo + 1 == b.len() {
                candidates.push((lo, hi, bi));
            }
        }
        let &(lo, hi, bi) = match schedule.pick {
            Pick::SmallestMin => candidates.iter().min_by_key(|c| c.0),
            Pick::LargestMin => candidates.iter().max_by_key(|c| c.0),
        }
        .expect("a non-crossing partition always has an interval block");
        let block = blocks.remove(bi);
        let beta = sub(&block, &entries)?;
        if lo == 0 {
            front.push(beta);
        } else if hi == active.len() - 1 {
            back.push(beta);
        } else {
            match schedule.route {
                Route::P => {
                    let p = active[lo - 1];
                    entries[p].splice_after(shape.tag(p), &beta);
                }
                Route::Q => {
                    let q = active[hi + 1];
                    entries[q].splice_before(shape.tag(q), &beta);
                }
            }
        }
    };
    let mut out = core;
    for f in front.iter().rev() {
        out = f * &out;
    }
    for b in back.iter().rev() {
        out = &out * b;
    }
    Ok(out)
}

/// The Fock-model engine.
pub type FockEngine = Engine<FockModel>;
pub type OpTuple = DecoratedTuple<OpElement>;

/// `E(Π D(Z_k))`.
pub fn eval_moment_full(engine: &FockEngine, t: &OpTuple) -> Result<BMatrix> {
    engine.e_full(t.shape.tags(), &t.entries)
}

pub fn eval_moment_pi(engine: &FockEngine, pi: &BncPartition, t: &OpTuple) -> Result<BMatrix> {
    check_shape(pi, t)?;
    engine.e_pi(pi, &t.entries)
}

pub fn eval_cumulant_pi(engine: &FockEngine, pi: &BncPartition, t: &OpTuple) -> Result<BMatrix> {
    check_shape(pi, t)?;
    engine.kappa_pi_mobius(pi, &t.entries)
}

pub fn moments_from_cumulants(engine: &FockEngine, sigma: &BncPartition, t: &OpTuple) -> Result<BMatrix> {
    check_shape(sigma, t)?;
    engine.moments_from_cumulants(sigma, &t.entries)
}

fn check_shape<T>(pi: &BncPartition, t: &DecoratedTuple<T>) -> Result<()> {
    if pi.shape() != &t.shape {
        return Err(Error::ShapeMismatch(format!("partition on {} vs tuple on {}", pi.shape(), t.shape)));
    }
    Ok(())
}

/// The decorated entry as a single operator.
pub fn realize(side: Side, e: &Decorated<OpElement>) -> OpElement {
    let mut x = e.op.clone();
    if let Some(b) = &e.pre {
        x = OpElement::b_op(side, b).mul(&x);
    }
    if let Some(b) = &e.suf {
        x = x.mul(&OpElement::b_op(side, b));
    }
    x
}

/// Both sides of the cumulants-of-products identity.
#[derive(Clone, Debug)]
pub struct ProductsCheck {
    pub lhs: BMatrix,
    pub rhs: BMatrix,
    pub residual: f64,
    pub terms: usize,
}

/// `κ_χ(Z_1⋯Z_{k(1)}, …)` against `Σ_{σ ∨ 0̂_χ = 1_χ̂} κ_σ(Z_1, …, Z_n)`.
pub fn cumulant_of_products(engine: &FockEngine, emb: &HatEmbedding, inner: &OpTuple) -> Result<ProductsCheck> {
    if emb.inner() != &inner.shape {
        return Err(Error::ShapeMismatch(format!("embedding inner shape {} vs tuple {}", emb.inner(), inner.shape)));
    }
    let outer = emb.outer();
    let grouped: Vec<Decorated<OpElement>> = (0..outer.len())
        .map(|p| {
            let ops: Vec<OpElement> = emb.group(p).map(|q| realize(inner.shape.tag(q), &inner.entries[q])).collect();
            let refs: Vec<&OpElement> = ops.iter().collect();
            Decorated::plain(OpElement::product(&refs))
        })
        .collect();
    let lhs = engine.kappa_full(outer.tags(), &grouped)?;
    let zero_hat = emb.zero_hat();
    let one = BncPartition::one(emb.inner());
    let mut rhs = BMatrix::zeros(engine.d());
    let mut terms = 0;
    for sigma in enumerate_bnc_bounded(emb.inner(), engine.bound)? {
        if sigma.join(&zero_hat)? == one {
            rhs += &engine.kappa_pi(&sigma, &inner.entries)?;
            terms += 1;
        }
    }
    let residual = lhs.dist(&rhs);
    Ok(ProductsCheck { lhs, rhs, residual, terms })
}

/// Index sets of a family: which letters of `ω` are left and which right.
pub trait WordFamily {
    type Op: Clone;
    fn side_of(&self, letter: &str) -> Option<Side>;
    fn op_of(&self, letter: &str) -> Option<Self::Op>;
}

/// Slot indices `(prefix, suffix)` of the `b`'s in `κ^B_{Z,ω}(b_1, …, b_{n-1})`.
///
/// All-left and all-right words put `b_k` in front of entry `k+1`. Mixed
/// words leave the first entry of the minority side (`k_0`) undecorated and
/// attach `b_{n-1}` as a suffix on the last entry.
pub fn omega_layout(tags: &[Side]) -> Vec<(Option<usize>, Option<usize>)> {
    let n = tags.len();
    let mut out = vec![(None, None); n];
    if n == 0 {
        return out;
    }
    let mixed = tags.iter().any(|&t| t != tags[0]);
    if !mixed {
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            slot.0 = Some(k - 1);
        }
        return out;
    }
    let k0 = (1..n).find(|&k| tags[k] != tags[0]).expect("mixed word");
    let mut next = 0;
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        if k == k0 {
            continue;
        }
        slot.0 = Some(next);
        next += 1;
    }
    out[n - 1].1 = Some(n - 2);
    out
}

/// A decorated tuple read along `≺_χ` in the free picture, where an entry
/// becomes `a Z a'` (`a = pre, a' = suf` on the left, swapped on the right).
#[derive(Clone, Debug)]
pub struct FreeForm<P> {
    /// `a` of the `≺_χ`-first entry.
    pub head: Option<P>,
    /// `(a'_p, a_{p+1})` between consecutive entries in `≺_χ` order.
    pub gaps: Vec<(Option<P>, Option<P>)>,
    /// `a'` of the `≺_χ`-last entry.
    pub tail: Option<P>,
}

pub fn free_form<P: Clone>(tags: &[Side], decorations: &[(Option<P>, Option<P>)]) -> FreeForm<P> {
    let shape = ChiShape::new(tags.to_vec());
    let outer: Vec<(Option<P>, Option<P>)> = shape
        .schi()
        .iter()
        .map(|&k| {
            let (pre, suf) = decorations[k].clone();
            match tags[k] {
                Side::Left => (pre, suf),
                Side::Right => (suf, pre),
            }
        })
        .collect();
    let n = outer.len();
    if n == 0 {
        return FreeForm { head: None, gaps: Vec::new(), tail: None };
    }
    let gaps = (0..n - 1).map(|p| (outer[p].1.clone(), outer[p + 1].0.clone())).collect();
    FreeForm { head: outer[0].0.clone(), gaps, tail: outer[n - 1].1.clone() }
}

/// For each slot of `κ^B_{Z,ω}`, the `≺_χ`-gap it occupies.
///
/// Every gap carries exactly one slot and neither end carries any, which is
/// what makes `κ_{Z,ω}` a complete description of a family.
pub fn omega_slot_gaps(tags: &[Side]) -> Vec<usize> {
    let n = tags.len();
    if n < 2 {
        return Vec::new();
    }
    let ff = free_form(tags, &omega_layout(tags));
    debug_assert!(ff.head.is_none() && ff.tail.is_none());
    let mut out = vec![usize::MAX; n - 1];
    for (g, (a, b)) in ff.gaps.iter().enumerate() {
        debug_assert!(a.is_some() != b.is_some());
        let slot = a.or(*b).expect("every gap holds one slot");
        out[slot] = g;
    }
    out
}

/// The decorated tuple behind `κ^B_{Z,ω}(b_1, …, b_{n-1})`, laid out by [`omega_layout`].
pub fn omega_tuple<F: WordFamily>(family: &F, omega: &[&str], bs: &[BMatrix]) -> Result<DecoratedTuple<F::Op>> {
    let n = omega.len();
    if n == 0 {
        return Err(Error::InvalidWord("empty word".into()));
    }
    if bs.len() != n - 1 {
        return Err(Error::InvalidWord(format!("a word of length {n} needs {} B-arguments, got {}", n - 1, bs.len())));
    }
    let mut tags = Vec::with_capacity(n);
    let mut ops = Vec::with_capacity(n);
    for w in omega {
        let side = family.side_of(w).ok_or_else(|| Error::InvalidWord(format!("unknown letter {w:?}")))?;
        tags.push(side);
        ops.push(family.op_of(w).ok_or_else(|| Error::InvalidWord(format!("unknown letter {w:?}")))?);
    }
    let entries = ops
        .into_iter()
        .zip(omega_layout(&tags))
        .map(|(op, (pre, suf))| Decorated::new(op, pre.map(|i| bs[i].clone()), suf.map(|i| bs[i].clone())))
        .collect();
    DecoratedTuple::new(ChiShape::new(tags), entries)
}

/// `κ^B_{Z,ω}(b_1, …, b_{n-1})`.
pub fn kappa_z_omega<M: MomentModel, F: WordFamily<Op = M::Op>>(
    engine: &Engine<M>,
    family: &F,
    omega: &[&str],
    bs: &[BMatrix],
) -> Result<BMatrix> {
    let t = omega_tuple(family, omega, bs)?;
    engine.kappa_full(t.shape.tags(), &t.entries)
}

/// `μ^B_{Z,ω}(b_1, …, b_{n-1})`.
pub fn mu_z_omega<M: MomentModel, F: WordFamily<Op = M::Op>>(
    engine: &Engine<M>,
    family: &F,
    omega: &[&str],
    bs: &[BMatrix],
) -> Result<BMatrix> {
    let t = omega_tuple(family, omega, bs)?;
    engine.e_full(t.shape.tags(), &t.entries)
}

impl WordFamily for crate::models::TwoFacedFamily {
    type Op = OpElement;

    fn side_of(&self, letter: &str) -> Option<Side> {
        if self.get(Side::Left, letter).is_some() {
            Some(Side::Left)
        } else if self.get(Side::Right, letter).is_some() {
            Some(Side::Right)
        } else {
            None
        }
    }

    fn op_of(&self, letter: &str) -> Option<OpElement> {
        self.get(Side::Left, letter).or_else(|| self.get(Side::Right, letter)).cloned()
    }
}

/// Outcome of an interchange or tail-swap check.
#[derive(Clone, Debug)]
pub struct SwapCheck {
    /// Worst violation of the moment-level hypothesis over the probes.
    pub hypothesis_residual: f64,
    pub residual: f64,
    pub hypothesis_ok: bool,
}

/// `κ_χ(…, X, Y, …)` versus `κ_{χ'}(…, Y, X, …)` with `X` at `k_0` (left) and `Y` at `k_0+1` (right).
///
/// The hypothesis `E(Z X Y Z') = E(Z Y X Z')` is probed over all pairs drawn from `probes`.
pub fn verify_interchange(
    engine: &FockEngine,
    tuple: &OpTuple,
    k0: usize,
    probes: &[OpElement],
    tol: f64,
) -> Result<SwapCheck> {
    let shape = &tuple.shape;
    if k0 + 1 >= shape.len() || shape.tag(k0) != Side::Left || shape.tag(k0 + 1) != Side::Right {
        return Err(Error::ShapeMismatch(format!("positions {} and {} must be left then right", k0 + 1, k0 + 2)));
    }
    let x = realize(Side::Left, &tuple.entries[k0]);
    let y = realize(Side::Right, &tuple.entries[k0 + 1]);
    let model = engine.model();
    let mut hyp: f64 = 0.0;
    for z in probes {
        for z2 in probes {
            let a = model.moment(&[z, &x, &y, z2])?;
            let b = model.moment(&[z, &y, &x, z2])?;
            hyp = hyp.max(a.dist(&b));
        }
    }
    let lhs = engine.kappa_full(shape.tags(), &tuple.entries)?;
    let mut tags = shape.tags().to_vec();
    tags.swap(k0, k0 + 1);
    let mut entries = tuple.entries.clone();
    entries.swap(k0, k0 + 1);
    let rhs = engine.kappa_full(&tags, &entries)?;
    Ok(SwapCheck { hypothesis_residual: hyp, residual: lhs.dist(&rhs), hypothesis_ok: hyp <= tol })
}

/// `κ_χ(Z_1, …, Z_{n-1}, X)` versus `κ_{χ'}(Z_1, …, Z_{n-1}, Y)` where the last node turns right.
pub fn verify_tail_swap(
    engine: &FockEngine,
    tuple: &OpTuple,
    y: &OpElement,
    probes: &[OpElement],
    tol: f64,
) -> Result<SwapCheck> {
    let shape = &tuple.shape;
    let n = shape.len();
    if shape.tag(n - 1) != Side::Left {
        return Err(Error::ShapeMismatch("the last node must be a left node".into()));
    }
    let x = realize(Side::Left, &tuple.entries[n - 1]);
    let model = engine.model();
    let mut hyp: f64 = 0.0;
    for z in probes {
        let a = model.moment(&[z, &x])?;
        let b = model.moment(&[z, y])?;
        hyp = hyp.max(a.dist(&b));
    }
    let lhs = engine.kappa_full(shape.tags(), &tuple.entries)?;
    let mut tags = shape.tags().to_vec();
    tags[n - 1] = Side::Right;
    let mut entries = tuple.entries.clone();
    entries[n - 1] = Decorated::plain(y.clone());
    let rhs = engine.kappa_full(&tags, &entries)?;
    Ok(SwapCheck { hypothesis_residual: hyp, residual: lhs.dist(&rhs), hypothesis_ok: hyp <= tol })
}
