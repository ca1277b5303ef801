//! Full Fock space over `ℂ^k` with left/right creation and annihilation.
//!
//! Basis words are packed into a `u64`, five bits per letter, first letter in
//! the lowest bits; letter value `g + 1` encodes generator `h_g`, so at most
//! 31 generators and 12 letters fit.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{A0Matrix, C64};

pub const MAX_GENERATORS: usize = 31;
pub const MAX_DEPTH: usize = 12;
pub const DEFAULT_DEPTH: usize = 8;
/// Dense conversions refuse spaces larger than this.
pub const DEFAULT_DENSE_CAP: usize = 400;

const BITS: u32 = 5;
const MASK: u64 = 31;

pub type FockVec = FxHashMap<u64, C64>;

/// Number of letters in a packed word.
pub fn word_len(w: u64) -> usize {
    ((64 - w.leading_zeros() + BITS - 1) / BITS) as usize
}

pub fn vacuum() -> FockVec {
    let mut v = FockVec::default();
    v.insert(0, C64::new(1.0, 0.0));
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    /// `l(h_g)`
    L(u8),
    /// `l*(h_g)`
    Ls(u8),
    /// `r(h_g)`
    R(u8),
    /// `r*(h_g)`
    Rs(u8),
}

impl Letter {
    pub fn generator(self) -> usize {
        match self {
            Letter::L(g) | Letter::Ls(g) | Letter::R(g) | Letter::Rs(g) => g as usize,
        }
    }

    pub fn adjoint(self) -> Letter {
        match self {
            Letter::L(g) => Letter::Ls(g),
            Letter::Ls(g) => Letter::L(g),
            Letter::R(g) => Letter::Rs(g),
            Letter::Rs(g) => Letter::R(g),
        }
    }

    pub fn is_left(self) -> bool {
        matches!(self, Letter::L(_) | Letter::Ls(_))
    }

    /// Image of a basis word, `None` for zero. Creation past `depth` gives zero.
    pub fn apply(self, w: u64, depth: usize) -> Option<u64> {
        let len = word_len(w);
        match self {
            Letter::L(g) => (len < depth).then(|| (w << BITS) | (g as u64 + 1)),
            Letter::R(g) => (len < depth).then(|| w | ((g as u64 + 1) << (BITS as usize * len))),
            Letter::Ls(g) => (len > 0 && w & MASK == g as u64 + 1).then(|| w >> BITS),
            Letter::Rs(g) => {
                if len == 0 {
                    return None;
                }
                let shift = BITS as usize * (len - 1);
                (w >> shift == g as u64 + 1).then(|| w & ((1u64 << shift) - 1))
            }
        }
    }
}

/// A linear combination of products of letters; `letters[0]` acts last.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct FockOp {
    pub terms: Vec<(C64, Vec<Letter>)>,
}

impl FockOp {
    pub fn zero() -> Self {
        FockOp { terms: Vec::new() }
    }

    pub fn identity() -> Self {
        FockOp::scalar(C64::new(1.0, 0.0))
    }

    pub fn scalar(z: C64) -> Self {
        FockOp { terms: vec![(z, Vec::new())] }
    }

    pub fn letter(l: Letter) -> Self {
        FockOp { terms: vec![(C64::new(1.0, 0.0), vec![l])] }
    }

    pub fn l(g: usize) -> Self {
        FockOp::letter(Letter::L(g as u8))
    }

    pub fn ls(g: usize) -> Self {
        FockOp::letter(Letter::Ls(g as u8))
    }

    pub fn r(g: usize) -> Self {
        FockOp::letter(Letter::R(g as u8))
    }

    pub fn rs(g: usize) -> Self {
        FockOp::letter(Letter::Rs(g as u8))
    }

    /// `l(h_g) + l*(h_g)`.
    pub fn semicircular_left(g: usize) -> Self {
        FockOp::l(g).add(&FockOp::ls(g))
    }

    /// `r(h_g) + r*(h_g)`.
    pub fn semicircular_right(g: usize) -> Self {
        FockOp::r(g).add(&FockOp::rs(g))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(c, _)| *c == C64::new(0.0, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = self.terms.clone();
        t.extend(other.terms.iter().cloned());
        FockOp { terms: t }.simplified()
    }

    pub fn scale(&self, z: C64) -> Self {
        FockOp { terms: self.terms.iter().map(|(c, w)| (c * z, w.clone())).collect() }.simplified()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut t = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, wa) in &self.terms {
            for (b, wb) in &other.terms {
                let mut w = wa.clone();
                w.extend(wb.iter().copied());
                t.push((a * b, w));
            }
        }
        FockOp { terms: t }.simplified()
    }

    pub fn adjoint(&self) -> Self {
        FockOp { terms: self.terms.iter().map(|(c, w)| (c.conj(), w.iter().rev().map(|l| l.adjoint()).collect())).collect() }
    }

    /// Merge equal words, drop zero coefficients, sort for a canonical form.
    fn simplified(self) -> Self {
        let mut m: BTreeMap<Vec<Letter>, C64> = BTreeMap::new();
        for (c, w) in self.terms {
            *m.entry(w).or_insert(C64::new(0.0, 0.0)) += c;
        }
        FockOp { terms: m.into_iter().filter(|(_, c)| *c != C64::new(0.0, 0.0)).map(|(w, c)| (c, w)).collect() }
    }

    pub fn max_letters(&self) -> usize {
        self.terms.iter().map(|(_, w)| w.len()).max().unwrap_or(0)
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.terms.iter().flat_map(|(_, w)| w.iter().map(|l| l.generator())).max()
    }

    pub fn only_left(&self) -> bool {
        self.terms.iter().all(|(_, w)| w.iter().all(|l| l.is_left()))
    }

    pub fn only_right(&self) -> bool {
        self.terms.iter().all(|(_, w)| w.iter().all(|l| !l.is_left()))
    }

    /// Apply to `v`, keeping only words of length at most `budget` afterwards.
    ///
    /// A word longer than the number of annihilators still to come can never
    /// return to the vacuum, so pruning by the remaining letter budget is exact
    /// for vacuum expectations.
    pub fn apply(&self, v: &FockVec, depth: usize, budget: usize) -> FockVec {
        let mut out = FockVec::default();
        for (c, word) in &self.terms {
            for (&w0, &a) in v {
                let mut w = Some(w0);
                for (i, l) in word.iter().enumerate().rev() {
                    w = w.and_then(|x| l.apply(x, depth));
                    // letters still to act inside this term
                    match w {
                        Some(x) if word_len(x) > budget + i => {
                            w = None;
                        }
                        _ => {}
                    }
                }
                if let Some(x) = w {
                    *out.entry(x).or_insert(C64::new(0.0, 0.0)) += c * a;
                }
            }
        }
        out.retain(|_, z| *z != C64::new(0.0, 0.0));
        out
    }
}

/// Add `z·src` into `dst`.
pub fn axpy(dst: &mut FockVec, z: C64, src: &FockVec) {
    if z == C64::new(0.0, 0.0) {
        return;
    }
    for (&w, &a) in src {
        *dst.entry(w).or_insert(C64::new(0.0, 0.0)) += z * a;
    }
}

/// A truncated Fock space `⊕_{j ≤ depth} (ℂ^k)^{⊗j}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    pub k: usize,
    pub depth: usize,
}

impl FockSpace {
    pub fn new(k: usize, depth: usize) -> Result<Self> {
        if k == 0 || k > MAX_GENERATORS {
            return Err(Error::Config(format!("number of generators must be in 1..={MAX_GENERATORS}, got {k}")));
        }
        if depth > MAX_DEPTH {
            return Err(Error::Config(format!("depth must be at most {MAX_DEPTH}, got {depth}")));
        }
        Ok(FockSpace { k, depth })
    }

    /// `Σ_{j ≤ depth} k^j`.
    pub fn dim(&self) -> usize {
        let mut total = 0usize;
        let mut p = 1usize;
        for _ in 0..=self.depth {
            total = total.saturating_add(p);
            p = p.saturating_mul(self.k);
        }
        total
    }

    /// Basis words in order of length, then lexicographically; the vacuum comes first.
    pub fn basis(&self) -> Vec<u64> {
        let mut out = vec![0u64];
        let mut layer = vec![0u64];
        for _ in 0..self.depth {
            let mut next = Vec::new();
            for &w in &layer {
                for g in 0..self.k {
                    next.push(Letter::R(g as u8).apply(w, MAX_DEPTH).unwrap());
                }
            }
            out.extend(next.iter().copied());
            layer = next;
        }
        out
    }

    /// Dense matrix of `op` on this truncation; refused above `cap`.
    pub fn to_dense(&self, op: &FockOp, cap: usize) -> Result<A0Matrix> {
        let n = self.dim();
        if n > cap {
            return Err(Error::CapExceeded { dim: n, cap });
        }
        let basis = self.basis();
        let index: FxHashMap<u64, usize> = basis.iter().enumerate().map(|(i, &w)| (w, i)).collect();
        let mut m = A0Matrix::zeros(n);
        for (col, &w) in basis.iter().enumerate() {
            let mut v = FockVec::default();
            v.insert(w, C64::new(1.0, 0.0));
            let img = op.apply(&v, self.depth, usize::MAX / 2);
            for (x, z) in img {
                m.0[(index[&x], col)] += z;
            }
        }
        Ok(m)
    }

    /// `⟨Ω, op Ω⟩` on this truncation.
    pub fn vacuum_expectation(&self, op: &FockOp) -> C64 {
        op.apply(&vacuum(), self.depth, 0).get(&0).copied().unwrap_or(C64::new(0.0, 0.0))
    }
}
