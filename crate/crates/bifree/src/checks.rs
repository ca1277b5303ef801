//! Decision procedures for bi-freeness with amalgamation, bi-freeness over a
//! subalgebra `D`, and `R`-cyclicity of pairs of matrices.
//!
//! Every check draws its random `B`-arguments from a per-cell seed, so a
//! report depends only on the inputs and the seed, never on thread timing.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::bnc::{enumerate_bnc, BncPartition, ChiShape, Side};
use crate::mobius::mobius;
use crate::cumulants::{omega_layout, Decorated, Engine, MomentModel, Valued};
use crate::error::{Error, Result};
use crate::fock::FockOp;
use crate::matrix::{diag_part, BMatrix, C64};
use crate::models::{MatOp, OpElement, TwoFacedFamily};

/// A named two-faced family of operators of some model.
#[derive(Clone, Debug)]
pub struct Faces<T> {
    pub name: String,
    pub left: Vec<(String, T)>,
    pub right: Vec<(String, T)>,
}

impl Faces<OpElement> {
    pub fn from_family(name: &str, f: &TwoFacedFamily) -> Self {
        Faces { name: name.into(), left: f.left.clone(), right: f.right.clone() }
    }
}

impl<T: Clone> Faces<T> {
    fn side(&self, side: Side) -> &[(String, T)] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// All symbols, left first, with their sides.
    fn symbols(&self) -> Vec<(Side, String, T)> {
        self.left
            .iter()
            .map(|(n, x)| (Side::Left, n.clone(), x.clone()))
            .chain(self.right.iter().map(|(n, x)| (Side::Right, n.clone(), x.clone())))
            .collect()
    }
}

/// Random `B`-arguments: entries uniform in the complex unit square, scaled by 0.5.
pub const PROBE_SCALE: f64 = 0.5;
/// Generator choices per `(χ, ε)` cell beyond which choices are sampled.
pub const MAX_CHOICES: usize = 16;

fn cell_rng(seed: u64, cell: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (cell as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn all_tags(n: usize) -> Vec<Vec<Side>> {
    (0..1usize << n)
        .map(|mask| (0..n).map(|k| if mask >> k & 1 == 1 { Side::Right } else { Side::Left }).collect())
        .collect()
}

/// Maps `{0..n} → {0..k}` in lexicographic order.
fn all_maps(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * k);
        for v in &out {
            for c in 0..k {
                let mut w = v.clone();
                w.push(c);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

fn shape_word(tags: &[Side]) -> String {
    tags.iter().map(|t| t.letter()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CellResult {
    pub shape: String,
    /// `ε(k)` as family indices.
    pub families: Vec<usize>,
    /// Worst residual over generator choices and draws.
    pub residual: f64,
    /// Generator names at the worst choice.
    pub witness: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BiFreenessReport {
    pub max_order: usize,
    pub tolerance: f64,
    pub draws: usize,
    pub cells: Vec<CellResult>,
    pub worst_residual: f64,
    pub pass: bool,
    /// Failing cells, worst first.
    pub witnesses: Vec<CellResult>,
}

/// Mixed cumulants `κ^B_χ` over all `χ`, non-constant `ε` and generator choices.
///
/// Each choice is evaluated plainly and with `draws` random decorations
/// `L_{b_1} Z L_{b_2}` (resp. `R_{b_1} Z R_{b_2}`).
pub fn check_bifree<M: MomentModel>(
    engine: &Engine<M>,
    families: &[Faces<M::Op>],
    max_order: usize,
    draws: usize,
    tol: f64,
    seed: u64,
) -> Result<BiFreenessReport> {
    let k = families.len();
    let d = engine.d();
    let mut cells: Vec<(Vec<Side>, Vec<usize>)> = Vec::new();
    for n in 2..=max_order {
        for tags in all_tags(n) {
            for eps in all_maps(n, k) {
                if eps.iter().all(|&e| e == eps[0]) {
                    continue;
                }
                if (0..n).any(|p| families[eps[p]].side(tags[p]).is_empty()) {
                    continue;
                }
                cells.push((tags.clone(), eps));
            }
        }
    }
    let results: Vec<Result<CellResult>> = cells
        .par_iter()
        .enumerate()
        .map(|(ci, (tags, eps))| {
            let mut rng = cell_rng(seed, ci);
            let n = tags.len();
            let sizes: Vec<usize> = (0..n).map(|p| families[eps[p]].side(tags[p]).len()).collect();
            let total: usize = sizes.iter().product();
            let choices: Vec<Vec<usize>> = if total <= MAX_CHOICES {
                let mut all = vec![Vec::new()];
                for &s in &sizes {
                    all = all.into_iter().flat_map(|v| (0..s).map(move |c| [v.clone(), vec![c]].concat())).collect();
                }
                all
            } else {
                use rand::Rng;
                (0..MAX_CHOICES).map(|_| sizes.iter().map(|&s| rng.gen_range(0..s)).collect()).collect()
            };
            let mut worst = 0.0f64;
            let mut witness = Vec::new();
            for choice in choices {
                let gens: Vec<&(String, M::Op)> = (0..n).map(|p| &families[eps[p]].side(tags[p])[choice[p]]).collect();
                for draw in 0..=draws {
                    let entries: Vec<Decorated<M::Op>> = gens
                        .iter()
                        .map(|(_, op)| {
                            if draw == 0 {
                                Decorated::plain(op.clone())
                            } else {
                                Decorated::new(
                                    op.clone(),
                                    Some(BMatrix::random(&mut rng, d, PROBE_SCALE)),
                                    Some(BMatrix::random(&mut rng, d, PROBE_SCALE)),
                                )
                            }
                        })
                        .collect();
                    let r = engine.kappa_full(tags, &entries)?.norm_max();
                    if r > worst || witness.is_empty() {
                        worst = worst.max(r);
                        witness = gens.iter().map(|(name, _)| name.clone()).collect();
                    }
                }
            }
            Ok(CellResult { shape: shape_word(tags), families: eps.clone(), residual: worst, witness })
        })
        .collect();
    let cells: Vec<CellResult> = results.into_iter().collect::<Result<_>>()?;
    let worst_residual = cells.iter().map(|c| c.residual).fold(0.0, f64::max);
    let mut witnesses: Vec<CellResult> = cells.iter().filter(|c| !(c.residual <= tol)).cloned().collect();
    witnesses.sort_by(|a, b| b.residual.total_cmp(&a.residual));
    Ok(BiFreenessReport {
        max_order,
        tolerance: tol,
        draws,
        pass: witnesses.is_empty(),
        cells,
        worst_residual,
        witnesses,
    })
}

/// A conditional expectation `F : M_d(ℂ) → D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CondExp {
    /// Onto the diagonal matrices.
    Diagonal,
    /// Onto `ℂI` by the normalized trace.
    Scalar,
    /// Onto `ℂI` by the `(1,1)` entry; a conditional expectation that is not faithful.
    Corner,
}

impl CondExp {
    pub fn apply(&self, b: &BMatrix) -> BMatrix {
        match self {
            CondExp::Diagonal => diag_part(b),
            CondExp::Scalar => BMatrix::scalar(b.d(), b.trace() / b.d() as f64),
            CondExp::Corner => BMatrix::scalar(b.d(), b.get(0, 0)),
        }
    }

    fn valued(&self) -> Option<Valued> {
        match self {
            CondExp::Diagonal => Some(Valued::D),
            CondExp::Scalar => Some(Valued::Scalar),
            CondExp::Corner => None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CondExpProbe {
    pub unital: f64,
    pub idempotent: f64,
    pub bimodule: f64,
    /// Smallest singular value of `b_1 ↦ (F(E_{ij} b_1))_{ij}`; zero means not faithful.
    pub faithfulness_margin: f64,
}

/// Probe the conditional-expectation axioms and the faithfulness condition.
///
/// Faithfulness is decided exactly: `F(b_2 b_1) = 0` for all `b_2` forces
/// `b_1 = 0` iff the linear map `b_1 ↦ (F(E_{ij} b_1))_{ij}` is injective.
pub fn probe_cond_exp(f: CondExp, d: usize, seed: u64) -> Result<CondExpProbe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = BMatrix::identity(d);
    let unital = f.apply(&one).dist(&one);
    let mut idempotent: f64 = 0.0;
    let mut bimodule: f64 = 0.0;
    for _ in 0..4 {
        let b = BMatrix::random(&mut rng, d, 1.0);
        let fb = f.apply(&b);
        idempotent = idempotent.max(f.apply(&fb).dist(&fb));
        let d1 = f.apply(&BMatrix::random(&mut rng, d, 1.0));
        let d2 = f.apply(&BMatrix::random(&mut rng, d, 1.0));
        bimodule = bimodule.max(f.apply(&(&(&d1 * &b) * &d2)).dist(&(&(&d1 * &fb) * &d2)));
    }
    let dd = d * d;
    let mut m = DMatrix::<C64>::zeros(dd * dd, dd);
    for col in 0..dd {
        let b1 = BMatrix::unit(d, col / d, col % d);
        for u in 0..dd {
            let img = f.apply(&(&BMatrix::unit(d, u / d, u % d) * &b1));
            for (v, z) in img.inner().iter().enumerate() {
                m[(u * dd + v, col)] = *z;
            }
        }
    }
    let sv = m.svd(false, false).singular_values;
    let faithfulness_margin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let probe = CondExpProbe { unital, idempotent, bimodule, faithfulness_margin };
    let tol = 1e-12;
    if unital > tol || idempotent > tol || bimodule > tol {
        return Err(Error::NotConditionalExpectation(format!("{f:?} fails the bimodule axioms: {probe:?}")));
    }
    if faithfulness_margin < 1e-10 {
        return Err(Error::NotConditionalExpectation(format!("{f:?} is not faithful: {probe:?}")));
    }
    Ok(probe)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OmegaResult {
    pub omega: Vec<String>,
    /// `‖κ^B_{Z,ω}(b…) − F(κ^B_{Z,ω}(F(b)…))‖`.
    pub condition1: f64,
    /// `‖κ^B_{Z,ω}(b…) − κ^D_{Z,ω}(F(b)…)‖`.
    pub condition0: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OverDReport {
    pub cond_exp: CondExp,
    pub probe: CondExpProbe,
    pub max_order: usize,
    pub tolerance: f64,
    pub words: usize,
    pub worst_condition1: f64,
    pub worst_condition0: f64,
    pub pass: bool,
    /// Words failing either condition, worst first (at most 20).
    pub witnesses: Vec<OmegaResult>,
}

/// The two equivalent cumulant conditions for bi-freeness from `(B, B^op)` over `D`.
///
/// Each word is probed with the all-ones matrix in every slot and then with
/// `draws` random argument lists.
pub fn check_bifree_over_d<M: MomentModel + Clone>(
    model: &M,
    z: &Faces<M::Op>,
    f: CondExp,
    max_order: usize,
    draws: usize,
    tol: f64,
    seed: u64,
) -> Result<OverDReport> {
    let d = model.d();
    let probe = probe_cond_exp(f, d, seed)?;
    let valued = f.valued().expect("faithful conditional expectations have a valued engine");
    let eng_b = Engine::new(model.clone());
    let eng_d = Engine::with_mode(model.clone(), valued);
    let symbols = z.symbols();
    let mut words: Vec<Vec<usize>> = Vec::new();
    for n in 1..=max_order {
        words.extend(all_maps(n, symbols.len()));
    }
    let ones = BMatrix::from_fn(d, |_, _| C64::new(1.0, 0.0));
    let results: Vec<Result<OmegaResult>> = words
        .par_iter()
        .enumerate()
        .map(|(wi, word)| {
            let mut rng = cell_rng(seed, wi);
            let n = word.len();
            let tags: Vec<Side> = word.iter().map(|&s| symbols[s].0).collect();
            let layout = omega_layout(&tags);
            let build = |bs: &[BMatrix]| -> Vec<Decorated<M::Op>> {
                word.iter()
                    .zip(&layout)
                    .map(|(&s, (pre, suf))| {
                        Decorated::new(symbols[s].2.clone(), pre.map(|i| bs[i].clone()), suf.map(|i| bs[i].clone()))
                    })
                    .collect()
            };
            let (mut c1, mut c0) = (0.0f64, 0.0f64);
            for draw in 0..=draws {
                let bs: Vec<BMatrix> = (0..n.saturating_sub(1))
                    .map(|_| if draw == 0 { ones.clone() } else { BMatrix::random(&mut rng, d, PROBE_SCALE) })
                    .collect();
                let fbs: Vec<BMatrix> = bs.iter().map(|b| f.apply(b)).collect();
                let k = eng_b.kappa_full(&tags, &build(&bs))?;
                let kf = eng_b.kappa_full(&tags, &build(&fbs))?;
                let kd = eng_d.kappa_full(&tags, &build(&fbs))?;
                c1 = c1.max(k.dist(&f.apply(&kf)));
                c0 = c0.max(k.dist(&kd));
            }
            Ok(OmegaResult {
                omega: word.iter().map(|&s| symbols[s].1.clone()).collect(),
                condition1: c1,
                condition0: c0,
            })
        })
        .collect();
    let results: Vec<OmegaResult> = results.into_iter().collect::<Result<_>>()?;
    let worst_condition1 = results.iter().map(|r| r.condition1).fold(0.0, f64::max);
    let worst_condition0 = results.iter().map(|r| r.condition0).fold(0.0, f64::max);
    let mut witnesses: Vec<OmegaResult> =
        results.into_iter().filter(|r| !(r.condition1 <= tol && r.condition0 <= tol)).collect();
    witnesses.sort_by(|a, b| b.condition1.max(b.condition0).total_cmp(&a.condition1.max(a.condition0)));
    witnesses.truncate(20);
    Ok(OverDReport {
        cond_exp: f,
        probe,
        max_order,
        tolerance: tol,
        words: words.len(),
        worst_condition1,
        worst_condition0,
        pass: witnesses.is_empty(),
        witnesses,
    })
}

/// A pair of families of `d×d` matrices whose entries live in a scalar model.
/// Entries are row-major; `None` is the zero operator.
#[derive(Clone, Debug)]
pub struct MatrixFaces<T> {
    pub d: usize,
    pub left: Vec<(String, Vec<Option<T>>)>,
    pub right: Vec<(String, Vec<Option<T>>)>,
}

impl MatrixFaces<OpElement> {
    /// Scalar entries of Fock matrices, as `1×1` operators.
    pub fn from_fock(d: usize, left: &[(String, &MatOp)], right: &[(String, &MatOp)]) -> Self {
        let lift = |m: &MatOp, side: Side| -> Vec<Option<OpElement>> {
            (0..d * d)
                .map(|u| {
                    let z: &FockOp = m.get(u / d, u % d);
                    if z.is_zero() {
                        None
                    } else {
                        let one = MatOp::from_fn(1, |_, _| z.clone());
                        Some(match side {
                            Side::Left => OpElement::left(&one),
                            Side::Right => OpElement::right(&one),
                        })
                    }
                })
                .collect()
        };
        MatrixFaces {
            d,
            left: left.iter().map(|(n, m)| (n.clone(), lift(m, Side::Left))).collect(),
            right: right.iter().map(|(n, m)| (n.clone(), lift(m, Side::Right))).collect(),
        }
    }
}

impl<T: Clone> MatrixFaces<T> {
    fn symbols(&self) -> Vec<(Side, &str, &[Option<T>])> {
        self.left
            .iter()
            .map(|(n, v)| (Side::Left, n.as_str(), v.as_slice()))
            .chain(self.right.iter().map(|(n, v)| (Side::Right, n.as_str(), v.as_slice())))
            .collect()
    }
}

/// Whether `j_{s(1)} = i_{s(2)}, …, j_{s(n)} = i_{s(1)}` along `s_χ`.
pub fn chain_closes(shape: &ChiShape, i: &[usize], j: &[usize]) -> bool {
    let s = shape.schi();
    let n = s.len();
    (0..n).all(|p| j[s[p]] == i[s[(p + 1) % n]])
}

/// Whether the chain holds up to, but not necessarily including, the closing link.
pub fn chain_open(shape: &ChiShape, i: &[usize], j: &[usize]) -> bool {
    let s = shape.schi();
    (0..s.len().saturating_sub(1)).all(|p| j[s[p]] == i[s[p + 1]])
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RCyclicWitness {
    pub omega: Vec<String>,
    pub i: Vec<usize>,
    pub j: Vec<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RCyclicReport {
    pub d: usize,
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub max_order: usize,
    pub tolerance: f64,
    /// Number of broken-chain cumulants evaluated.
    pub checked: usize,
    pub worst: f64,
    pub witness: Option<RCyclicWitness>,
    pub pass: bool,
}

fn index_tuples(n: usize, d: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    all_maps(2 * n, d).into_iter().map(|v| (v[..n].to_vec(), v[n..].to_vec())).collect()
}

/// Scalar cumulants `κ^ℂ_χ` for one shape, memoizing block moments.
///
/// In the scalar case `φ_σ` is the product over blocks of the moment of the
/// block's entries in index order, so each block moment is computed once per
/// choice of the entries it touches.
pub struct ScalarKappa {
    tags: Vec<Side>,
    /// `(block masks, μ(σ, 1_χ))`
    lattice: Vec<(Vec<u32>, f64)>,
    memo: FxHashMap<(u32, Vec<usize>), C64>,
}

impl ScalarKappa {
    pub fn new(tags: &[Side]) -> Result<Self> {
        let shape = ChiShape::new(tags.to_vec());
        let one = BncPartition::one(&shape);
        let mut lattice = Vec::new();
        for p in enumerate_bnc(&shape)? {
            let mu = mobius(&p, &one)?;
            if mu != 0 {
                let masks = p.blocks().iter().map(|b| b.iter().fold(0u32, |m, &k| m | 1 << k)).collect();
                lattice.push((masks, mu as f64));
            }
        }
        Ok(ScalarKappa { tags: tags.to_vec(), lattice, memo: FxHashMap::default() })
    }

    /// `κ^ℂ_χ(ops)`; `code[k]` identifies `ops[k]` for memoization.
    pub fn kappa<M: MomentModel>(&mut self, model: &M, ops: &[M::Op], code: &[usize]) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for li in 0..self.lattice.len() {
            let mut term = C64::new(self.lattice[li].1, 0.0);
            for bi in 0..self.lattice[li].0.len() {
                let mask = self.lattice[li].0[bi];
                let pos: Vec<usize> = (0..ops.len()).filter(|&k| mask >> k & 1 == 1).collect();
                let key = (mask, pos.iter().map(|&k| code[k]).collect::<Vec<_>>());
                let v = match self.memo.get(&key) {
                    Some(v) => *v,
                    None => {
                        let t: Vec<Side> = pos.iter().map(|&k| self.tags[k]).collect();
                        let e: Vec<Decorated<M::Op>> = pos.iter().map(|&k| Decorated::plain(ops[k].clone())).collect();
                        let v = model.moment(&t, &e)?.get(0, 0);
                        self.memo.insert(key, v);
                        v
                    }
                };
                term *= v;
                if term == C64::new(0.0, 0.0) {
                    break;
                }
            }
            acc += term;
        }
        Ok(acc)
    }
}

/// Worst scalar cumulant of entries whose index chain does not close.
///
/// `engine` must be a scalar (`d = 1`) engine over the entries' model.
pub fn check_r_cyclic<M: MomentModel>(
    engine: &Engine<M>,
    pair: &MatrixFaces<M::Op>,
    max_order: usize,
    tol: f64,
) -> Result<RCyclicReport> {
    if engine.d() != 1 {
        return Err(Error::Dimension(format!("entry cumulants need a scalar engine, got d = {}", engine.d())));
    }
    let d = pair.d;
    let symbols = pair.symbols();
    let mut words: Vec<Vec<usize>> = Vec::new();
    for n in 1..=max_order {
        words.extend(all_maps(n, symbols.len()));
    }
    let model = engine.model();
    let per_word: Vec<Result<(usize, Option<RCyclicWitness>)>> = words
        .par_iter()
        .map(|word| {
            let n = word.len();
            let tags: Vec<Side> = word.iter().map(|&s| symbols[s].0).collect();
            let shape = ChiShape::new(tags.clone());
            let mut sk = ScalarKappa::new(&tags)?;
            let mut checked = 0;
            let mut best: Option<RCyclicWitness> = None;
            for (i, j) in index_tuples(n, d) {
                if chain_closes(&shape, &i, &j) {
                    continue;
                }
                let entries: Option<Vec<M::Op>> = (0..n).map(|k| symbols[word[k]].2[i[k] * d + j[k]].clone()).collect();
                let Some(entries) = entries else { continue };
                checked += 1;
                let code: Vec<usize> = (0..n).map(|k| i[k] * d + j[k]).collect();
                let v = sk.kappa(model, &entries, &code)?.norm();
                if best.as_ref().map_or(true, |b| v > b.value) {
                    best = Some(RCyclicWitness {
                        omega: word.iter().map(|&s| symbols[s].1.to_string()).collect(),
                        i: i.clone(),
                        j: j.clone(),
                        value: v,
                    });
                }
            }
            Ok((checked, best))
        })
        .collect();
    let mut checked = 0;
    let mut witness: Option<RCyclicWitness> = None;
    for r in per_word {
        let (c, w) = r?;
        checked += c;
        if let Some(w) = w {
            if witness.as_ref().map_or(true, |b| w.value > b.value) {
                witness = Some(w);
            }
        }
    }
    let worst = witness.as_ref().map_or(0.0, |w| w.value);
    Ok(RCyclicReport {
        d,
        left: pair.left.iter().map(|(n, _)| n.clone()).collect(),
        right: pair.right.iter().map(|(n, _)| n.clone()).collect(),
        max_order,
        tolerance: tol,
        checked,
        worst,
        pass: worst <= tol,
        witness,
    })
}

/// `E_χ((i_1…i_n),(j_1…j_n)) = E_{i_{s(1)} j_{s(1)}} ⋯ E_{i_{s(n)} j_{s(n)}}`.
pub fn e_chi(shape: &ChiShape, d: usize, i: &[usize], j: &[usize]) -> BMatrix {
    shape.schi().iter().fold(BMatrix::identity(d), |acc, &k| &acc * &BMatrix::unit(d, i[k], j[k]))
}

#[derive(Clone, Debug)]
pub struct ExpandCheck {
    pub matrix_level: BMatrix,
    pub entrywise: BMatrix,
    pub residual: f64,
}

/// `κ^{M_d}_χ(Z_1, …, Z_n)` against `Σ κ^ℂ_χ(Z_{1;i_1 j_1}, …) E_χ(i, j)`.
///
/// `word` indexes the symbols of `pair` (left first); `matrix_ops` holds the
/// matrix-level operators `L([Z])`/`R([Z])` in the same order.
pub fn matrix_cumulant_expand<M: MomentModel, N: MomentModel>(
    engine_d: &Engine<M>,
    engine_1: &Engine<N>,
    matrix_ops: &[M::Op],
    pair: &MatrixFaces<N::Op>,
    word: &[usize],
) -> Result<ExpandCheck> {
    let d = pair.d;
    let symbols = pair.symbols();
    let n = word.len();
    let tags: Vec<Side> = word.iter().map(|&s| symbols[s].0).collect();
    let shape = ChiShape::new(tags.clone());
    let entries: Vec<Decorated<M::Op>> = word.iter().map(|&s| Decorated::plain(matrix_ops[s].clone())).collect();
    let matrix_level = engine_d.kappa_full(&tags, &entries)?;
    let mut entrywise = BMatrix::zeros(d);
    for (i, j) in index_tuples(n, d) {
        let es: Option<Vec<Decorated<N::Op>>> =
            (0..n).map(|k| symbols[word[k]].2[i[k] * d + j[k]].clone().map(Decorated::plain)).collect();
        let Some(es) = es else { continue };
        let unit = e_chi(&shape, d, &i, &j);
        if unit.norm_max() == 0.0 {
            continue;
        }
        let k = engine_1.kappa_full(&tags, &es)?.get(0, 0);
        entrywise += &unit.scale(k);
    }
    let residual = matrix_level.dist(&entrywise);
    Ok(ExpandCheck { matrix_level, entrywise, residual })
}

/// `κ^{D_d}_χ` of diagonally decorated matrices against the closed-chain formula.
///
/// Left entries are `L_{Λ_k} Z L_{Γ_k}`, right entries `R_{Γ_k} Z R_{Λ_k}`;
/// `engine_d` must be a diagonal-valued engine over the matrix model.
/// Returns `(formula check, worst hypothesis violation)`.
#[allow(clippy::too_many_arguments)]
pub fn diagonal_cumulant_formula<M: MomentModel, N: MomentModel>(
    engine_d: &Engine<M>,
    engine_1: &Engine<N>,
    matrix_ops: &[M::Op],
    pair: &MatrixFaces<N::Op>,
    word: &[usize],
    lambdas: &[Vec<C64>],
    gammas: &[Vec<C64>],
) -> Result<(ExpandCheck, f64)> {
    if engine_d.valued() != Valued::D {
        return Err(Error::Config("the diagonal formula needs a diagonal-valued engine".into()));
    }
    let d = pair.d;
    let symbols = pair.symbols();
    let n = word.len();
    let tags: Vec<Side> = word.iter().map(|&s| symbols[s].0).collect();
    let shape = ChiShape::new(tags.clone());
    let entries: Vec<Decorated<M::Op>> = word
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let lam = BMatrix::from_diag(&lambdas[k]);
            let gam = BMatrix::from_diag(&gammas[k]);
            match tags[k] {
                Side::Left => Decorated::new(matrix_ops[s].clone(), Some(lam), Some(gam)),
                Side::Right => Decorated::new(matrix_ops[s].clone(), Some(gam), Some(lam)),
            }
        })
        .collect();
    let matrix_level = engine_d.kappa_full(&tags, &entries)?;
    let mut formula = BMatrix::zeros(d);
    let mut hypothesis: f64 = 0.0;
    let first = shape.schi()[0];
    for (i, j) in index_tuples(n, d) {
        if !chain_open(&shape, &i, &j) {
            continue;
        }
        let es: Option<Vec<Decorated<N::Op>>> =
            (0..n).map(|k| symbols[word[k]].2[i[k] * d + j[k]].clone().map(Decorated::plain)).collect();
        let Some(es) = es else { continue };
        let k = engine_1.kappa_full(&tags, &es)?.get(0, 0);
        if !chain_closes(&shape, &i, &j) {
            hypothesis = hypothesis.max(k.norm());
            continue;
        }
        let coeff = (0..n).fold(C64::new(1.0, 0.0), |acc, q| acc * lambdas[q][i[q]] * gammas[q][j[q]]);
        let a = i[first];
        formula += &BMatrix::unit(d, a, a).scale(coeff * k);
    }
    let residual = matrix_level.dist(&formula);
    Ok((ExpandCheck { matrix_level, entrywise: formula, residual }, hypothesis))
}
