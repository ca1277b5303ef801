//! Families defined by their cumulants.
//!
//! A [`CumulantSpec`] lists left and right symbols and a callback giving
//! `κ^B_{Z,ω}(b_1, …, b_{n-1})` for every word `ω`. The moment of a decorated
//! tuple is the sum over `BNC(χ)` of the bi-multiplicative extension of the
//! callback, reduced with one fixed schedule.

use std::fmt;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::bnc::{enumerate_bnc, BncPartition, ChiShape, Side};
use crate::cumulants::{free_form, omega_slot_gaps, reduce, Decorated, MomentModel, Schedule};
use crate::error::{Error, Result};
use crate::matrix::{BMatrix, C64};

/// `Θ_ω(b_1, …, b_{n-1})`, with `ω` given as symbol indices in entry order.
pub type ThetaFn = dyn Fn(&[usize], &[BMatrix]) -> BMatrix + Send + Sync;

#[derive(Clone)]
pub struct CumulantSpec {
    pub d: usize,
    pub left: Vec<String>,
    pub right: Vec<String>,
    /// Words longer than this have zero cumulant.
    pub max_order: usize,
    pub theta: Arc<ThetaFn>,
}

impl fmt::Debug for CumulantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CumulantSpec")
            .field("d", &self.d)
            .field("left", &self.left)
            .field("right", &self.right)
            .field("max_order", &self.max_order)
            .finish_non_exhaustive()
    }
}

impl CumulantSpec {
    pub fn num_symbols(&self) -> usize {
        self.left.len() + self.right.len()
    }

    /// Symbols `0..left.len()` are left, the rest right.
    pub fn side(&self, sym: usize) -> Side {
        if sym < self.left.len() {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn name(&self, sym: usize) -> &str {
        if sym < self.left.len() {
            &self.left[sym]
        } else {
            &self.right[sym - self.left.len()]
        }
    }

    pub fn symbol(&self, name: &str) -> Option<usize> {
        self.left
            .iter()
            .position(|n| n == name)
            .or_else(|| self.right.iter().position(|n| n == name).map(|j| j + self.left.len()))
    }

    /// Worst relative additivity/homogeneity defect of `Θ` in any slot over random probes.
    pub fn multilinearity_defect(&self, probes: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.num_symbols();
        let mut worst: f64 = 0.0;
        if k == 0 {
            return 0.0;
        }
        for n in 2..=self.max_order {
            for _ in 0..probes {
                let word: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
                let bs: Vec<BMatrix> = (0..n - 1).map(|_| BMatrix::random(&mut rng, self.d, 0.5)).collect();
                let slot = rng.gen_range(0..n - 1);
                let other = BMatrix::random(&mut rng, self.d, 0.5);
                let lambda = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let base = (self.theta)(&word, &bs);
                let mut bs2 = bs.clone();
                bs2[slot] = other;
                let second = (self.theta)(&word, &bs2);
                let mut mixed = bs.clone();
                mixed[slot] = &bs[slot] + &bs2[slot].scale(lambda);
                let lhs = (self.theta)(&word, &mixed);
                let rhs = &base + &second.scale(lambda);
                let scale = 1.0 + base.norm_max() + second.norm_max();
                worst = worst.max(lhs.dist(&rhs) / scale);
            }
        }
        worst
    }
}

/// The moment functional generated by a [`CumulantSpec`].
pub struct SpecifiedModel {
    spec: CumulantSpec,
    lattices: Mutex<FxHashMap<Vec<Side>, Arc<Vec<BncPartition>>>>,
}

/// Relative multilinearity defect above which a spec is refused.
pub const MULTILINEAR_TOL: f64 = 1e-9;

impl SpecifiedModel {
    pub fn new(spec: CumulantSpec) -> Result<Self> {
        let defect = spec.multilinearity_defect(4, 0x5eed);
        if defect > MULTILINEAR_TOL {
            return Err(Error::NonMultilinearSpec(defect));
        }
        Ok(SpecifiedModel { spec, lattices: Mutex::new(FxHashMap::default()) })
    }

    pub fn spec(&self) -> &CumulantSpec {
        &self.spec
    }

    fn lattice(&self, tags: &[Side]) -> Result<Arc<Vec<BncPartition>>> {
        if let Some(l) = self.lattices.lock().unwrap().get(tags) {
            return Ok(l.clone());
        }
        let l = Arc::new(enumerate_bnc(&ChiShape::new(tags.to_vec()))?);
        self.lattices.lock().unwrap().insert(tags.to_vec(), l.clone());
        Ok(l)
    }

    /// `κ_{1_χ}` of a decorated tuple: pull the end decorations out along `≺_χ`
    /// and feed each gap to the slot that `κ_{Z,ω}` places there.
    pub fn cumulant(&self, tags: &[Side], entries: &[Decorated<usize>]) -> Result<BMatrix> {
        let n = entries.len();
        let d = self.spec.d;
        if n == 0 || n > self.spec.max_order {
            return Ok(BMatrix::zeros(d));
        }
        self.check_sides(tags, entries)?;
        let decs: Vec<(Option<BMatrix>, Option<BMatrix>)> =
            entries.iter().map(|e| (e.pre.clone(), e.suf.clone())).collect();
        let ff = free_form(tags, &decs);
        let gaps: Vec<BMatrix> = ff
            .gaps
            .iter()
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => a * b,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => BMatrix::identity(d),
            })
            .collect();
        let bs: Vec<BMatrix> = omega_slot_gaps(tags).iter().map(|&g| gaps[g].clone()).collect();
        let word: Vec<usize> = entries.iter().map(|e| e.op).collect();
        let mut v = (self.spec.theta)(&word, &bs);
        if let Some(h) = &ff.head {
            v = h * &v;
        }
        if let Some(t) = &ff.tail {
            v = &v * t;
        }
        Ok(v)
    }

    fn check_sides(&self, tags: &[Side], entries: &[Decorated<usize>]) -> Result<()> {
        for (k, e) in entries.iter().enumerate() {
            if e.op >= self.spec.num_symbols() {
                return Err(Error::InvalidWord(format!("symbol {} out of range", e.op)));
            }
            if self.spec.side(e.op) != tags[k] {
                return Err(Error::ShapeMismatch(format!(
                    "symbol {} is a {} symbol at a {} node",
                    self.spec.name(e.op),
                    self.spec.side(e.op).letter(),
                    tags[k].letter()
                )));
            }
        }
        Ok(())
    }
}

impl MomentModel for SpecifiedModel {
    type Op = usize;

    fn d(&self) -> usize {
        self.spec.d
    }

    fn op_key(&self, op: &usize) -> u64 {
        *op as u64
    }

    fn moment(&self, tags: &[Side], entries: &[Decorated<usize>]) -> Result<BMatrix> {
        if entries.is_empty() {
            return Ok(BMatrix::identity(self.spec.d));
        }
        self.check_sides(tags, entries)?;
        let leaf = |t: &[Side], e: &[Decorated<usize>]| self.cumulant(t, e);
        let mut acc = BMatrix::zeros(self.spec.d);
        for pi in self.lattice(tags)?.iter() {
            // blocks past the order cap vanish, and so does the whole term
            if pi.blocks().iter().any(|b| b.len() > self.spec.max_order) {
                continue;
            }
            acc += &reduce(pi, entries, Schedule::default(), &leaf)?;
        }
        Ok(acc)
    }
}

/// Bi-free central limit values: every second-order `κ_{Z,ω}(b) = Tr(b)·I`, nothing else.
///
/// This is the distribution of `X = L(S)`, `Y = R(S')` with `S_{ij} = l(h_{ij}) + l*(h_{ji})`
/// and `S'` its right analogue on the same generators.
pub fn central_limit_spec(d: usize) -> CumulantSpec {
    CumulantSpec {
        d,
        left: vec!["x".into()],
        right: vec!["y".into()],
        max_order: 2,
        theta: Arc::new(move |word: &[usize], bs: &[BMatrix]| {
            if word.len() == 2 {
                BMatrix::scalar(d, bs[0].trace())
            } else {
                BMatrix::zeros(d)
            }
        }),
    }
}

/// Two pairs `(x0, y0)`, `(x1, y1)` whose mixed cumulants all vanish.
///
/// Within pair `k` the first cumulants are `means[k]` and the second-order
/// ones are `s_k Tr(b) I + t_k F(b)` with `F` the diagonal part.
pub fn mixed_zero_spec(d: usize, means: [BMatrix; 2], s: [f64; 2], t: [f64; 2]) -> CumulantSpec {
    // symbol order: x0 x1 | y0 y1
    let family = |sym: usize| sym % 2;
    CumulantSpec {
        d,
        left: vec!["x0".into(), "x1".into()],
        right: vec!["y0".into(), "y1".into()],
        max_order: 2,
        theta: Arc::new(move |word: &[usize], bs: &[BMatrix]| {
            let k = family(word[0]);
            if word.iter().any(|&w| family(w) != k) {
                return BMatrix::zeros(d);
            }
            match word.len() {
                1 => means[k].clone(),
                2 => &BMatrix::scalar(d, bs[0].trace() * s[k]) + &crate::matrix::diag_part(&bs[0]).scale_re(t[k]),
                _ => BMatrix::zeros(d),
            }
        }),
    }
}

/// A scalar `R`-diagonal pair: symbols `X, X*` (left) and `Y, Y*` (right).
///
/// The cumulant of a word is `alpha[n/2 - 1]` when its letters read along
/// `≺_χ` alternate between starred and unstarred, and zero otherwise.
pub fn r_diagonal_spec(alpha: Vec<f64>) -> CumulantSpec {
    let max_order = 2 * alpha.len();
    CumulantSpec {
        d: 1,
        left: vec!["X".into(), "X*".into()],
        right: vec!["Y".into(), "Y*".into()],
        max_order,
        theta: Arc::new(move |word: &[usize], bs: &[BMatrix]| {
            let n = word.len();
            if n % 2 == 1 || n > max_order {
                return BMatrix::zeros(1);
            }
            let tags: Vec<Side> = word.iter().map(|&w| if w < 2 { Side::Left } else { Side::Right }).collect();
            let shape = ChiShape::new(tags);
            let starred = |w: usize| w % 2 == 1;
            let seq: Vec<bool> = shape.schi().iter().map(|&k| starred(word[k])).collect();
            if seq.windows(2).any(|p| p[0] == p[1]) {
                return BMatrix::zeros(1);
            }
            let prod = bs.iter().fold(C64::new(1.0, 0.0), |acc, b| acc * b.get(0, 0));
            BMatrix::scalar(1, prod * alpha[n / 2 - 1])
        }),
    }
}
