//! Pinched series `ψ` and the partial cumulant sums over the `BNC_T` / `BNC_S` classes.
//!
//! All class sums are truncated like `K`: the term on `(n, m)` has degree
//! `n + m` and is kept when `n + m ≤ N`.

use std::sync::{Arc, Mutex, OnceLock};

use rustc_hash::FxHashMap;

use super::{deco, SeriesContext, SeriesValue};
use crate::bnc::{enumerate_bnc_prime, enumerate_bnc_s, enumerate_bnc_t, BncPartition, SClass, Side, TClass};
use crate::cumulants::Decorated;
use crate::error::Result;
use crate::matrix::BMatrix;
use crate::models::OpElement;

type ClassKey = (u8, usize, usize, u8);

fn class_cache() -> &'static Mutex<FxHashMap<ClassKey, Arc<Vec<BncPartition>>>> {
    static CACHE: OnceLock<Mutex<FxHashMap<ClassKey, Arc<Vec<BncPartition>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(FxHashMap::default()))
}

fn cached_class(key: ClassKey, make: impl FnOnce() -> Result<Vec<BncPartition>>) -> Result<Arc<Vec<BncPartition>>> {
    if let Some(v) = class_cache().lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let v = Arc::new(make()?);
    class_cache().lock().unwrap().insert(key, v.clone());
    Ok(v)
}

pub fn t_class(n: usize, m: usize, class: TClass) -> Result<Arc<Vec<BncPartition>>> {
    cached_class((0, n, m, class as u8), || enumerate_bnc_t(n, m, class))
}

pub fn s_class(n: usize, m: usize, class: SClass) -> Result<Arc<Vec<BncPartition>>> {
    cached_class((1, n, m, class as u8), || enumerate_bnc_s(n, m, class))
}

pub fn prime_class(side: Side, n: usize) -> Arc<Vec<BncPartition>> {
    let s = match side {
        Side::Left => 0,
        Side::Right => 1,
    };
    cached_class((2, n, 0, s), || Ok(enumerate_bnc_prime(side, n))).expect("infallible")
}

/// One operand of a pinched series or class tuple: an element with an optional
/// `B`-prefix (`L_b X`) and `B`-suffix (`X L_b`).
#[derive(Clone, Debug)]
pub struct Slot<'a> {
    pub op: &'a OpElement,
    pub pre: Option<&'a BMatrix>,
    pub suf: Option<&'a BMatrix>,
}

impl<'a> Slot<'a> {
    pub fn plain(op: &'a OpElement) -> Self {
        Slot { op, pre: None, suf: None }
    }

    pub fn pre(op: &'a OpElement, p: &'a BMatrix) -> Self {
        Slot { op, pre: Some(p), suf: None }
    }

    pub fn suf(op: &'a OpElement, p: &'a BMatrix) -> Self {
        Slot { op, pre: None, suf: Some(p) }
    }

    fn entry(&self) -> Decorated<OpElement> {
        deco(self.op, self.pre, self.suf)
    }
}

impl SeriesContext {
    fn class_sum(&self, parts: &[BncPartition], entries: &[Decorated<OpElement>]) -> Result<BMatrix> {
        let mut acc = BMatrix::zeros(self.d());
        for pi in parts {
            acc += &self.engine().kappa_pi(pi, entries)?;
        }
        Ok(acc)
    }

    /// `ψ(Z_1, Z_2) = Σ_n Σ_{π ∈ BNC'(n)} κ_π(1, Z_1, Z_2, Z_1, …, Z_2, Z_1)` on one side.
    pub fn psi(&self, side: Side, z1: &Slot, z2: &Slot) -> Result<SeriesValue> {
        let unit = Decorated::plain(self.unit.clone());
        let mut terms = Vec::with_capacity(self.order);
        let mut entries = vec![unit];
        for n in 1..=self.order {
            if n > 1 {
                entries.push(z2.entry());
            }
            entries.push(z1.entry());
            terms.push(self.class_sum(&prime_class(side, n), &entries)?);
        }
        Ok(SeriesValue::from_terms(self.d(), &terms, self.order, self.rho))
    }

    pub fn psi_left(&self, z1: &Slot, z2: &Slot) -> Result<SeriesValue> {
        self.psi(Side::Left, z1, z2)
    }

    pub fn psi_right(&self, z1: &Slot, z2: &Slot) -> Result<SeriesValue> {
        self.psi(Side::Right, z1, z2)
    }

    /// Right run `R_dY_1, Y_2, …` (`lead = R_dY_1`, `follow = Y_2`) of `len` entries,
    /// the last one carrying the suffix `c`.
    fn alternating(lead: &Slot, follow: &Slot, len: usize, c: &BMatrix) -> Vec<Decorated<OpElement>> {
        let mut out: Vec<Decorated<OpElement>> =
            (0..len).map(|k| if k % 2 == 0 { lead.entry() } else { follow.entry() }).collect();
        if let Some(last) = out.last_mut() {
            last.suf = Some(c.clone());
        }
        out
    }

    /// `Σ_{n,m} Σ_{π ∈ BNC_T(n,m)_class} κ_π` over the tuple
    /// `(L_bX, …, L_bX, R_dY_1, Y_2, …, R_dY_1, Y_2R_c)`
    /// (class `o'`: `(L_bX, …, Y_2, R_dY_1, …, R_dY_1, Y_2R_c)`).
    pub fn t_class_sum(
        &self,
        class: TClass,
        x: &OpElement,
        y1: &OpElement,
        y2: &OpElement,
        b: &BMatrix,
        c: &BMatrix,
        d: &BMatrix,
    ) -> Result<SeriesValue> {
        let mut terms = vec![BMatrix::zeros(self.d()); self.order + 1];
        let (ry1, py2) = (Slot::pre(y1, d), Slot::plain(y2));
        for total in 1..=self.order {
            for n in 1..=total {
                let m = total - n;
                let mut entries: Vec<Decorated<OpElement>> = (0..n).map(|_| deco(x, Some(b), None)).collect();
                match class {
                    TClass::OPrime => entries.extend(Self::alternating(&py2, &ry1, 2 * m + 1, c)),
                    _ if m >= 1 => entries.extend(Self::alternating(&ry1, &py2, 2 * m, c)),
                    _ => continue,
                }
                terms[total] += &self.class_sum(&t_class(n, m, class)?, &entries)?;
            }
        }
        Ok(SeriesValue::from_terms(self.d(), &terms, self.order, self.rho))
    }

    /// `Σ_{n,m} Σ_{π ∈ BNC_S(n,m)_class} κ_π`: classes `e`, `o` on
    /// `(L_bX_1, X_2, …, L_bX_1, X_2, R_dY_1, Y_2, …, R_dY_1, Y_2R_c)` with `n, m ≥ 1`,
    /// the `o,·` classes on `(X_2, L_bX_1, …, X_2, Y_2, R_dY_1, …, Y_2R_c)` with `n, m ≥ 0`.
    pub fn s_class_sum(&self, class: SClass, pair1: &super::Pair, pair2: &super::Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix) -> Result<SeriesValue> {
        let mut terms = vec![BMatrix::zeros(self.d()); self.order + 1];
        let (lx1, px2) = (Slot::pre(&pair1.x, b), Slot::plain(&pair2.x));
        let (ry1, py2) = (Slot::pre(&pair1.y, d), Slot::plain(&pair2.y));
        let prime = !matches!(class, SClass::E | SClass::O);
        for total in 0..=self.order {
            for n in 0..=total {
                let m = total - n;
                let entries = if prime {
                    let mut e: Vec<Decorated<OpElement>> =
                        (0..2 * n + 1).map(|k| if k % 2 == 0 { px2.entry() } else { lx1.entry() }).collect();
                    e.extend(Self::alternating(&py2, &ry1, 2 * m + 1, c));
                    e
                } else {
                    if n == 0 || m == 0 {
                        continue;
                    }
                    let mut e: Vec<Decorated<OpElement>> =
                        (0..2 * n).map(|k| if k % 2 == 0 { lx1.entry() } else { px2.entry() }).collect();
                    e.extend(Self::alternating(&ry1, &py2, 2 * m, c));
                    e
                };
                terms[total] += &self.class_sum(&s_class(n, m, class)?, &entries)?;
            }
        }
        Ok(SeriesValue::from_terms(self.d(), &terms, self.order, self.rho))
    }
}
