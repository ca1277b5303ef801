//! Concrete `M_d(ℂ)`-valued bi-free probability spaces.
//!
//! The operator algebra is `L(M_d(A))` with `A` the operators on the full Fock
//! space. An element is a linear combination of words in four primitives:
//! `L(Z)`, `R(Z)` for `Z ∈ M_d(A)`, and `L_b`, `R_b` for `b ∈ M_d(ℂ)`.
//! Expectations are computed by acting on `I_d` and tracking the vectors
//! `T_{ij}Ω`, which is all `E_d(T) = φ_d(T(I_d))` needs.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bnc::Side;
use crate::error::{Error, Result};
use crate::fock::{axpy, vacuum, FockOp, FockVec, DEFAULT_DEPTH, MAX_DEPTH};
use crate::matrix::{BMatrix, C64};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// A `d×d` matrix of Fock operators, an element of `M_d(A)`.
#[derive(Debug)]
pub struct MatOp {
    d: usize,
    entries: Vec<FockOp>,
    id: u64,
    letters: usize,
}

impl MatOp {
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> FockOp) -> Arc<Self> {
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                entries.push(f(i, j));
            }
        }
        let letters = entries.iter().map(|e| e.max_letters()).max().unwrap_or(0);
        Arc::new(MatOp { d, entries, id: fresh_id(), letters })
    }

    /// `diag(a_1, …, a_d)`.
    pub fn diag(ops: &[FockOp]) -> Arc<Self> {
        MatOp::from_fn(ops.len(), |i, j| if i == j { ops[i].clone() } else { FockOp::zero() })
    }

    /// `b ⊗ 1`.
    pub fn scalar_matrix(b: &BMatrix) -> Arc<Self> {
        MatOp::from_fn(b.d(), |i, j| FockOp::scalar(b.get(i, j)))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn get(&self, i: usize, j: usize) -> &FockOp {
        &self.entries[i * self.d + j]
    }

    pub fn max_letters(&self) -> usize {
        self.letters
    }
}

#[derive(Clone, Debug)]
pub enum Prim {
    L(Arc<MatOp>),
    R(Arc<MatOp>),
    Lb(BMatrix),
    Rb(BMatrix),
}

impl Prim {
    fn letters(&self) -> usize {
        match self {
            Prim::L(z) | Prim::R(z) => z.max_letters(),
            _ => 0,
        }
    }

    fn key(&self) -> Vec<u64> {
        match self {
            Prim::L(z) => vec![1, z.id],
            Prim::R(z) => vec![2, z.id],
            Prim::Lb(b) => std::iter::once(3).chain(b.bit_pattern()).collect(),
            Prim::Rb(b) => std::iter::once(4).chain(b.bit_pattern()).collect(),
        }
    }
}

/// An element of `L(M_d(A))`: `Σ c · p_1 p_2 ⋯ p_k` with `p_k` acting first.
#[derive(Clone, Debug)]
pub struct OpElement {
    d: usize,
    terms: Arc<Vec<(C64, Vec<Prim>)>>,
    id: u64,
    letters: usize,
}

impl OpElement {
    fn from_terms(d: usize, terms: Vec<(C64, Vec<Prim>)>) -> Self {
        let letters = terms.iter().map(|(_, w)| w.iter().map(Prim::letters).sum::<usize>()).max().unwrap_or(0);
        OpElement { d, terms: Arc::new(terms), id: fresh_id(), letters }
    }

    fn prim(d: usize, p: Prim) -> Self {
        OpElement::from_terms(d, vec![(C64::new(1.0, 0.0), vec![p])])
    }

    pub fn identity(d: usize) -> Self {
        OpElement::from_terms(d, vec![(C64::new(1.0, 0.0), Vec::new())])
    }

    pub fn zero(d: usize) -> Self {
        OpElement::from_terms(d, Vec::new())
    }

    pub fn lb(b: &BMatrix) -> Self {
        OpElement::prim(b.d(), Prim::Lb(b.clone()))
    }

    pub fn rb(b: &BMatrix) -> Self {
        OpElement::prim(b.d(), Prim::Rb(b.clone()))
    }

    /// `L_b` or `R_b` according to `side`.
    pub fn b_op(side: Side, b: &BMatrix) -> Self {
        match side {
            Side::Left => OpElement::lb(b),
            Side::Right => OpElement::rb(b),
        }
    }

    /// `L([Z_{ij}])`.
    pub fn left(z: &Arc<MatOp>) -> Self {
        OpElement::prim(z.d(), Prim::L(z.clone()))
    }

    /// `R([Z_{ij}])`.
    pub fn right(z: &Arc<MatOp>) -> Self {
        OpElement::prim(z.d(), Prim::R(z.clone()))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn terms(&self) -> &[(C64, Vec<Prim>)] {
        &self.terms
    }

    /// Largest number of Fock letters in one term.
    pub fn max_letters(&self) -> usize {
        self.letters
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = self.terms.as_ref().clone();
        t.extend(other.terms.iter().cloned());
        OpElement::from_terms(self.d, t)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: C64) -> Self {
        OpElement::from_terms(self.d, self.terms.iter().map(|(c, w)| (c * z, w.clone())).collect())
    }

    /// Operator product `self · other` (other acts first).
    pub fn mul(&self, other: &Self) -> Self {
        let mut t = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, wa) in self.terms.iter() {
            for (b, wb) in other.terms.iter() {
                let mut w = wa.clone();
                w.extend(wb.iter().cloned());
                t.push((a * b, w));
            }
        }
        OpElement::from_terms(self.d, t)
    }

    pub fn product(ops: &[&OpElement]) -> Self {
        let d = ops.first().map_or(1, |o| o.d);
        ops.iter().fold(OpElement::identity(d), |acc, o| acc.mul(o))
    }

    /// Structural membership in the left algebra: no `R(·)` or `R_b` primitives.
    pub fn is_left_type(&self) -> bool {
        self.terms.iter().all(|(_, w)| w.iter().all(|p| matches!(p, Prim::L(_) | Prim::Lb(_))))
    }

    pub fn is_right_type(&self) -> bool {
        self.terms.iter().all(|(_, w)| w.iter().all(|p| matches!(p, Prim::R(_) | Prim::Rb(_))))
    }

    /// Content key (ignores the id), used to compare two elements structurally.
    pub fn structure_key(&self) -> Vec<u64> {
        let mut k = vec![self.d as u64];
        for (c, w) in self.terms.iter() {
            k.push(c.re.to_bits());
            k.push(c.im.to_bits());
            k.push(w.len() as u64);
            for p in w {
                k.extend(p.key());
            }
        }
        k
    }
}

/// Add `L_b` (or `R_b`) to an element.
pub fn shift(x: &OpElement, b: &BMatrix, side: Side) -> OpElement {
    x.add(&OpElement::b_op(side, b))
}

/// `d×d` array of Fock vectors `T_{ij}Ω`.
#[derive(Clone, Debug)]
pub struct State {
    d: usize,
    v: Vec<FockVec>,
}

impl State {
    pub fn identity(d: usize) -> Self {
        let mut v = vec![FockVec::default(); d * d];
        for i in 0..d {
            v[i * d + i] = vacuum();
        }
        State { d, v }
    }

    fn zero(d: usize) -> Self {
        State { d, v: vec![FockVec::default(); d * d] }
    }

    /// Vacuum coefficients `[⟨Ω, T_{ij}Ω⟩]`.
    pub fn vacuum_part(&self) -> BMatrix {
        BMatrix::from_fn(self.d, |i, j| self.v[i * self.d + j].get(&0).copied().unwrap_or(C64::new(0.0, 0.0)))
    }

    fn accumulate(&mut self, z: C64, other: &State) {
        for (a, b) in self.v.iter_mut().zip(&other.v) {
            axpy(a, z, b);
        }
    }
}

/// Expectation context `E_d(Z) = φ_d(Z(I_d))` on the full Fock space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockModel {
    pub d: usize,
    pub depth: usize,
}

impl FockModel {
    pub fn new(d: usize, depth: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Dimension("d must be positive".into()));
        }
        if depth > MAX_DEPTH {
            return Err(Error::Config(format!("depth must be at most {MAX_DEPTH}")));
        }
        Ok(FockModel { d, depth })
    }

    pub fn with_default_depth(d: usize) -> Self {
        FockModel { d, depth: DEFAULT_DEPTH }
    }

    fn apply_prim(&self, p: &Prim, s: &State, budget: usize) -> State {
        let d = self.d;
        let mut out = State::zero(d);
        match p {
            Prim::L(z) => {
                for i in 0..d {
                    for j in 0..d {
                        let slot = &mut out.v[i * d + j];
                        for k in 0..d {
                            let src = &s.v[k * d + j];
                            if src.is_empty() {
                                continue;
                            }
                            axpy(slot, C64::new(1.0, 0.0), &z.get(i, k).apply(src, self.depth, budget));
                        }
                    }
                }
            }
            Prim::R(z) => {
                for i in 0..d {
                    for j in 0..d {
                        let slot = &mut out.v[i * d + j];
                        for k in 0..d {
                            let src = &s.v[i * d + k];
                            if src.is_empty() {
                                continue;
                            }
                            axpy(slot, C64::new(1.0, 0.0), &z.get(k, j).apply(src, self.depth, budget));
                        }
                    }
                }
            }
            Prim::Lb(b) => {
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            axpy(&mut out.v[i * d + j], b.get(i, k), &s.v[k * d + j]);
                        }
                    }
                }
            }
            Prim::Rb(b) => {
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            axpy(&mut out.v[i * d + j], b.get(k, j), &s.v[i * d + k]);
                        }
                    }
                }
            }
        }
        out
    }

    /// Apply `x` to `s`; `budget` is the number of letters still to act afterwards.
    pub fn apply(&self, x: &OpElement, s: &State, budget: usize) -> State {
        let mut out = State::zero(self.d);
        for (c, word) in x.terms.iter() {
            let mut cur = s.clone();
            let mut inner: usize = word.iter().map(Prim::letters).sum();
            for p in word.iter().rev() {
                inner -= p.letters();
                cur = self.apply_prim(p, &cur, budget + inner);
            }
            out.accumulate(*c, &cur);
        }
        out
    }

    /// `E_d(x_1 x_2 ⋯ x_n)`.
    pub fn moment(&self, ops: &[&OpElement]) -> Result<BMatrix> {
        for o in ops {
            if o.d != self.d {
                return Err(Error::Dimension(format!("operator over M_{} used in an M_{} model", o.d, self.d)));
            }
        }
        let mut budget: usize = ops.iter().map(|o| o.max_letters()).sum();
        // a word never grows past half the letters, so this keeps the truncation exact
        if budget > 2 * self.depth {
            return Err(Error::OrderTooHigh { letters: budget, depth: self.depth });
        }
        let mut s = State::identity(self.d);
        for o in ops.iter().rev() {
            budget -= o.max_letters();
            s = self.apply(o, &s, budget);
        }
        Ok(s.vacuum_part())
    }

    pub fn expectation(&self, x: &OpElement) -> Result<BMatrix> {
        self.moment(&[x])
    }
}

/// A pair of faces: named left and right elements over one model.
#[derive(Clone, Debug)]
pub struct TwoFacedFamily {
    pub model: FockModel,
    pub left: Vec<(String, OpElement)>,
    pub right: Vec<(String, OpElement)>,
}

impl TwoFacedFamily {
    /// Builds the family after structural and expectation-compatibility probes.
    pub fn new<R: Rng + ?Sized>(
        model: FockModel,
        left: Vec<(String, OpElement)>,
        right: Vec<(String, OpElement)>,
        rng: &mut R,
    ) -> Result<Self> {
        let fam = TwoFacedFamily { model, left, right };
        for (name, x) in &fam.left {
            if !x.is_left_type() {
                return Err(Error::Config(format!("left element {name} contains right multipliers")));
            }
        }
        for (name, y) in &fam.right {
            if !y.is_right_type() {
                return Err(Error::Config(format!("right element {name} contains left multipliers")));
            }
        }
        let r = fam.probe_compatibility(rng)?;
        if r > 1e-12 {
            return Err(Error::HypothesisViolated { residual: r });
        }
        Ok(fam)
    }

    pub fn d(&self) -> usize {
        self.model.d
    }

    /// Worst residual of `E(L_{b1}R_{b2}Z) = b1 E(Z) b2` and `E(Z L_b) = E(Z R_b)` on random probes.
    pub fn probe_compatibility<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let d = self.d();
        let mut worst: f64 = 0.0;
        for (_, z) in self.left.iter().chain(self.right.iter()) {
            let b1 = BMatrix::random(rng, d, 0.5);
            let b2 = BMatrix::random(rng, d, 0.5);
            let ez = self.model.expectation(z)?;
            let lhs = self.model.moment(&[&OpElement::lb(&b1), &OpElement::rb(&b2), z])?;
            worst = worst.max(lhs.dist(&(&(&b1 * &ez) * &b2)));
            let a = self.model.moment(&[z, &OpElement::lb(&b1)])?;
            let b = self.model.moment(&[z, &OpElement::rb(&b1)])?;
            worst = worst.max(a.dist(&b));
        }
        Ok(worst)
    }

    pub fn get(&self, side: Side, name: &str) -> Option<&OpElement> {
        let list = match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        };
        list.iter().find(|(n, _)| n == name).map(|(_, x)| x)
    }
}

/// Generator bookkeeping for building models with disjoint Fock generators.
#[derive(Clone, Debug, Default)]
pub struct GeneratorPool {
    next: usize,
}

impl GeneratorPool {
    pub fn new() -> Self {
        GeneratorPool { next: 0 }
    }

    pub fn take(&mut self) -> Result<usize> {
        let g = self.next;
        if g >= crate::fock::MAX_GENERATORS {
            return Err(Error::Config("ran out of Fock generators".into()));
        }
        self.next += 1;
        Ok(g)
    }

    pub fn used(&self) -> usize {
        self.next
    }
}

/// Lift scalar left/right Fock operators to `d×d` matrices placed by `placement`.
///
/// `placement(i, j)` names which scalar operator sits at entry `(i, j)`, if any.
pub fn lift_matrix(ops: &[FockOp], d: usize, placement: impl Fn(usize, usize) -> Option<usize>) -> Result<Arc<MatOp>> {
    let mut err = None;
    let m = MatOp::from_fn(d, |i, j| match placement(i, j) {
        Some(k) if k < ops.len() => ops[k].clone(),
        Some(k) => {
            err = Some(Error::Dimension(format!("placement refers to operator {k} of {}", ops.len())));
            FockOp::zero()
        }
        None => FockOp::zero(),
    });
    match err {
        Some(e) => Err(e),
        None => Ok(m),
    }
}

/// `(L(diag(a_1..a_d)), R(diag(b_1..b_d)))` from scalar pairs `(a_k, b_k)`.
pub fn diagonal_pair(pairs: &[(FockOp, FockOp)]) -> (OpElement, OpElement) {
    let left: Vec<FockOp> = pairs.iter().map(|p| p.0.clone()).collect();
    let right: Vec<FockOp> = pairs.iter().map(|p| p.1.clone()).collect();
    (OpElement::left(&MatOp::diag(&left)), OpElement::right(&MatOp::diag(&right)))
}

/// The creation-operator family on `d×d` matrices.
///
/// For each `k` in `0..families` and each `(i, j)` a generator `h_{k;i,j}`
/// is taken; the left family is `{L([l(h_{k;i,j})]), L([l*(h_{k;j,i})])}` and
/// the right family `{R([r(h_{k;i,j})]), R([r*(h_{k;j,i})])}`.
pub struct CreationExample {
    pub left: Vec<(String, OpElement)>,
    pub right: Vec<(String, OpElement)>,
    /// Scalar entries `(left matrix, right matrix)` per generator name.
    pub entries: Vec<(String, Arc<MatOp>, Arc<MatOp>)>,
}

pub fn creation_example(d: usize, families: usize, pool: &mut GeneratorPool) -> Result<CreationExample> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut entries = Vec::new();
    for k in 0..families {
        let mut h = vec![0usize; d * d];
        for slot in h.iter_mut() {
            *slot = pool.take()?;
        }
        let g = |i: usize, j: usize| h[i * d + j];
        let lc = MatOp::from_fn(d, |i, j| FockOp::l(g(i, j)));
        let la = MatOp::from_fn(d, |i, j| FockOp::ls(g(j, i)));
        let rc = MatOp::from_fn(d, |i, j| FockOp::r(g(i, j)));
        let ra = MatOp::from_fn(d, |i, j| FockOp::rs(g(j, i)));
        left.push((format!("lc{k}"), OpElement::left(&lc)));
        left.push((format!("la{k}"), OpElement::left(&la)));
        right.push((format!("rc{k}"), OpElement::right(&rc)));
        right.push((format!("ra{k}"), OpElement::right(&ra)));
        entries.push((format!("c{k}"), lc, rc));
        entries.push((format!("a{k}"), la, ra));
    }
    Ok(CreationExample { left, right, entries })
}

/// The creation family with an extra generator `g` coupled into entry `(0, 1)`
/// of the first creation and annihilation matrices on both sides.
///
/// `κ(l*(g), l(g)) = 1` then links two `(0, 1)` entries, whose index chain
/// cannot close, so the pair is no longer `R`-cyclic.
pub fn perturbed_creation_example(d: usize, families: usize, pool: &mut GeneratorPool) -> Result<CreationExample> {
    if d < 2 {
        return Err(Error::Dimension("the perturbation needs d ≥ 2".into()));
    }
    let base = creation_example(d, families, pool)?;
    let g = pool.take()?;
    let bump = |m: &MatOp, extra: FockOp| MatOp::from_fn(d, |i, j| {
        let z = m.get(i, j).clone();
        if (i, j) == (0, 1) { z.add(&extra) } else { z }
    });
    let mut entries = base.entries;
    let (_, lc, rc) = entries[0].clone();
    let (_, la, ra) = entries[1].clone();
    entries[0] = ("c0".into(), bump(&lc, FockOp::l(g)), bump(&rc, FockOp::r(g)));
    entries[1] = ("a0".into(), bump(&la, FockOp::ls(g)), bump(&ra, FockOp::rs(g)));
    let mut left = base.left;
    let mut right = base.right;
    left[0].1 = OpElement::left(&entries[0].1);
    left[1].1 = OpElement::left(&entries[1].1);
    right[0].1 = OpElement::right(&entries[0].2);
    right[1].1 = OpElement::right(&entries[1].2);
    Ok(CreationExample { left, right, entries })
}

/// A semicircular-type `d×d` matrix `S` with independent generators per entry
/// pair: `S_{ij} = l(h_{ij}) + l*(h_{ji})` (left) or the `r` analogue (right).
pub fn semicircular_matrix(d: usize, side: Side, pool: &mut GeneratorPool) -> Result<Arc<MatOp>> {
    let mut h = vec![0usize; d * d];
    for slot in h.iter_mut() {
        *slot = pool.take()?;
    }
    Ok(MatOp::from_fn(d, |i, j| match side {
        Side::Left => FockOp::l(h[i * d + j]).add(&FockOp::ls(h[j * d + i])),
        Side::Right => FockOp::r(h[i * d + j]).add(&FockOp::rs(h[j * d + i])),
    }))
}

/// A bi-free pair `(X, Y)` with invertible means: `X = L_c + α L(S)`,
/// `Y = R_{c'} + α R(S')`, where `S` and `S'` share generators so the pair is
/// genuinely coupled, and `c, c' = I + 0.1·(random Hermitian)`.
#[derive(Clone, Debug)]
pub struct ShiftedPair {
    pub x: OpElement,
    pub y: OpElement,
    pub mean_x: BMatrix,
    pub mean_y: BMatrix,
}

pub fn shifted_pair<R: Rng + ?Sized>(d: usize, alpha: f64, pool: &mut GeneratorPool, rng: &mut R) -> Result<ShiftedPair> {
    let mut h = vec![0usize; d * d];
    for slot in h.iter_mut() {
        *slot = pool.take()?;
    }
    let s_l = MatOp::from_fn(d, |i, j| FockOp::l(h[i * d + j]).add(&FockOp::ls(h[j * d + i])));
    let s_r = MatOp::from_fn(d, |i, j| FockOp::r(h[i * d + j]).add(&FockOp::rs(h[j * d + i])));
    let c = &BMatrix::identity(d) + &BMatrix::random_hermitian(rng, d, 0.1);
    let c2 = &BMatrix::identity(d) + &BMatrix::random_hermitian(rng, d, 0.1);
    let a = C64::new(alpha, 0.0);
    let x = OpElement::lb(&c).add(&OpElement::left(&s_l).scale(a));
    let y = OpElement::rb(&c2).add(&OpElement::right(&s_r).scale(a));
    Ok(ShiftedPair { x, y, mean_x: c, mean_y: c2 })
}
