//! The check suite: every acceptance check with pinned seeds, run concurrently
//! and assembled into one deterministic report.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use bifree::bnc::{enumerate_bnc, enumerate_bnc_prime, BncPartition, ChiShape, HatEmbedding, Side};
use bifree::checks::{
    check_bifree, check_bifree_over_d, check_r_cyclic, diagonal_cumulant_formula, matrix_cumulant_expand, CondExp,
    MatrixFaces,
};
use bifree::cumulants::{
    cumulant_of_products, eval_moment_pi, moments_from_cumulants, Decorated, DecoratedTuple, Engine, FockEngine,
    OpTuple, Valued,
};
use bifree::descriptor::{random_element, ModelSpec};
use bifree::matrix::{BMatrix, C64};
use bifree::mobius::mobius;
use bifree::models::{creation_example, FockModel, GeneratorPool, OpElement};
use bifree::transforms::verify::PointCheck;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ControlRun, ExperimentConfig, Sweep};
use crate::oracles::{all_shapes, bnc_brute, catalan_recurrence, normalize, refines, Lattice};
use crate::verify::{run_verify, VerifyReport};
use crate::CliError;

/// A suite check: what it verifies and how it is judged.
#[derive(Clone, Copy, Debug)]
pub struct CheckSpec {
    pub name: &'static str,
    pub criterion: u32,
    pub anchor: &'static str,
    pub formula: &'static str,
    pub contract: &'static str,
}

const TAU: &str = "each identity is evaluated at every order from 3 to N; τ = 10·max(δ_N, q·δ_{N−1})·q/(1−q) + 1e-12 \
with δ_k the max-entry movement of both sides from order k−1 to k and q = min(max(δ_N/δ_{N−1}, ρ), 0.9); pass iff residual ≤ τ";

pub const CHECKS: &[CheckSpec] = &[
    CheckSpec {
        name: "mobius",
        criterion: 1,
        anchor: "Defn bi-non-crossing; Defn Möbius",
        formula: "|BNC(χ)| = Catalan(n) and BNC(χ) equals the brute-force filter; Σ_{π≤τ≤σ} μ(τ,σ) = [π = σ]; μ(π,σ) from the Kreweras fast path equals the recursive μ",
        contract: "exact integers: counts for every shape with n ≤ 8, Möbius for every interval with n ≤ 6",
    },
    CheckSpec {
        name: "kreweras",
        criterion: 2,
        anchor: "Kreweras complement; BNC′(n)",
        formula: "BNC′(n) = {π ∈ BNC(χ_{2n}) : {1} ∈ π, every block inside one parity class, π ∨ σ_n = 1}",
        contract: "exact set equality against the brute-force filter for n ≤ 4, both sides",
    },
    CheckSpec {
        name: "round-trip",
        criterion: 3,
        anchor: "Defn κ; Eq. mobius",
        formula: "E_σ(Z_1, …, Z_n) = Σ_{π ≤ σ} κ_π(Z_1, …, Z_n) for every σ ∈ BNC(χ)",
        contract: "max-entry residual ≤ 1e-10 on random decorated Fock tuples, every shape with n ≤ 6",
    },
    CheckSpec {
        name: "vanishing",
        criterion: 4,
        anchor: "Prop vanishing",
        formula: "κ_χ(Z_1, …, Z_n) = 0 when some entry is L_b or R_b and n ≥ 2",
        contract: "max-entry norm ≤ 1e-10, every shape with n ≤ 5, 3 random draws each",
    },
    CheckSpec {
        name: "products",
        criterion: 5,
        anchor: "Thm products",
        formula: "κ_χ(Z_1⋯Z_{k(1)}, …, Z_{k(m−1)+1}⋯Z_n) = Σ_{σ ∨ 0̂_χ = 1_χ̂} κ_σ(Z_1, …, Z_n)",
        contract: "max-entry residual ≤ 1e-9 for every cut pattern with inner n ≤ 6",
    },
    CheckSpec {
        name: "bifree",
        criterion: 6,
        anchor: "Thm bifree-classifying-theorem",
        formula: "pairs are bi-free iff every mixed cumulant κ_χ(Z_{ε(1)}, …) with non-constant ε vanishes",
        contract: "scalar Fock pairs on disjoint generators: worst mixed cumulant ≤ 1e-9 up to order 5",
    },
    CheckSpec {
        name: "bifree-matrix",
        criterion: 6,
        anchor: "Thm bi-free-with-amalgamation-over-matrix-algebra",
        formula: "matrix lifts of bi-free pairs are bi-free over M_d: mixed M_d-valued cumulants vanish",
        contract: "M_2 lifts: worst mixed cumulant ≤ 1e-8 up to order 4",
    },
    CheckSpec {
        name: "bifree-control",
        criterion: 6,
        anchor: "Thm bifree-classifying-theorem (negative control)",
        formula: "pairs sharing a Fock generator have a non-vanishing mixed cumulant",
        contract: "worst mixed cumulant ≥ 0.5; the check passes when the bi-freeness test fails",
    },
    CheckSpec {
        name: "rcyclic",
        criterion: 7,
        anchor: "Defn R-cyclic; Thm bi-free-over-D",
        formula: "κ_χ(Z_{1;i_1 j_1}, …, Z_{n;i_n j_n}) = 0 unless j_{s(1)} = i_{s(2)}, …, j_{s(n)} = i_{s(1)}",
        contract: "creation example (d = 2, 8 generators, depth 6): worst broken-chain cumulant ≤ 1e-9 up to order 4",
    },
    CheckSpec {
        name: "over-d",
        criterion: 7,
        anchor: "Thm bi-free-over-D",
        formula: "κ^B_{Z,ω}(b…) = F(κ^B_{Z,ω}(F(b)…)) and κ^B_{Z,ω}(b…) = κ^D_{Z,ω}(F(b)…) for F the diagonal expectation",
        contract: "creation example: both conditions ≤ 1e-8 up to order 3",
    },
    CheckSpec {
        name: "rcyclic-control",
        criterion: 7,
        anchor: "Defn R-cyclic; Thm bi-free-over-D (negative control)",
        formula: "the E_{1,2}-coupled creation example is neither R-cyclic nor bi-free over D",
        contract: "worst broken-chain cumulant ≥ 0.1 and both over-D conditions ≥ 0.1",
    },
    CheckSpec {
        name: "matrix-cumulants",
        criterion: 8,
        anchor: "Cor. cumulant-for-R-cyclic; Lemma cumulant-for-R-cyclic-diagonal",
        formula: "κ^{M_d}_χ(Z_1, …) = Σ_{i,j} κ_χ(Z_{1;i_1 j_1}, …) E_χ(i, j), and the closed-chain formula over D_d",
        contract: "matrix-level against entrywise ≤ 1e-9 for every word with n ≤ 4, d = 2",
    },
    CheckSpec {
        name: "relations",
        criterion: 9,
        anchor: "Remark left-formula (and its right analogue)",
        formula: "G^ℓ = M^ℓ b, C^ℓ = 1 + b R^ℓ, M^ℓ(b) = C^ℓ(M^ℓ(b) b); on the right G^r = d M^r, C^r = 1 + R^r d, M^r(d) = C^r(d M^r(d))",
        contract: TAU,
    },
    CheckSpec {
        name: "r-transform",
        criterion: 10,
        anchor: "Thm R-transform",
        formula: "M^ℓ(b) M_{X,Y}(b,c,d) + M_{X,Y}(b,c,d) M^r(d) = M^ℓ(b) c M^r(d) + C_{X,Y}(M^ℓ(b) b, M_{X,Y}(b,c,d), d M^r(d)); terminal L_c and R_c agree; C − c is additive over bi-free pairs; d = 0 recovers M^ℓ = C^ℓ(M^ℓ b)",
        contract: TAU,
    },
    CheckSpec {
        name: "degenerations",
        criterion: 10,
        anchor: "Thm R-transform (degenerate arguments)",
        formula: "M(b,c,0) = M^ℓ(b) c, M(0,c,d) = c M^r(d), C(b,c,0) = C^ℓ(b) c, C(0,c,d) = c C^r(d)",
        contract: TAU,
    },
    CheckSpec {
        name: "inversion",
        criterion: 11,
        anchor: "Lemma divide",
        formula: "Φ(Φ⁻¹(v)) = v on both sides and θ·φ(bθ) = 1",
        contract: "round trips ≤ τ; fixed-point residual θ·φ(bθ) − 1 ≤ 1e-10",
    },
    CheckSpec {
        name: "s-routes",
        criterion: 11,
        anchor: "Defn op-free-S",
        formula: "S^ℓ_X(b) = b⁻¹Φ⁻¹(b) = θ(b) = (1 + b)b⁻¹Ψ⁻¹(b), mirrored on the right",
        contract: TAU,
    },
    CheckSpec {
        name: "s-lemmata",
        criterion: 11,
        anchor: "Lemma S-lem-1..4; Eqs. move-around, pinched-to-inverse, inverse-times-pinched",
        formula: "the pinched series ψ_ℓ(X_2, L_b X_1), ψ_ℓ(L_b X_1, X_2) and their right analogues in closed form through S^ℓ_{X_2}, S^r_{Y_2} and Φ⁻¹ of the products",
        contract: TAU,
    },
    CheckSpec {
        name: "free-s",
        criterion: 11,
        anchor: "Thm free-S",
        formula: "S^ℓ_{X_1X_2}(b) = S_2 S^ℓ_{X_1}(S_2⁻¹ b S_2) with S_2 = S^ℓ_{X_2}(b); S^r_{Y_1Y_2}(d) = S^r_{Y_1}(S_2 d S_2⁻¹) S_2 with S_2 = S^r_{Y_2}(d)",
        contract: TAU,
    },
    CheckSpec {
        name: "t-property",
        criterion: 12,
        anchor: "Thm T-property; Defn T-Transform",
        formula: "T_{X_1+X_2,Y_1Y_2}(b,c,d) = T_{X_1,Y_1}(b, T_{X_2,Y_2}(b,c,d) S_2⁻¹, S_2 d S_2⁻¹) S_2 with S_2 = S^r_{Y_2}(d); the peeled and literal T agree",
        contract: TAU,
    },
    CheckSpec {
        name: "t-cases",
        criterion: 12,
        anchor: "Lemma T-case-1..3",
        formula: "the BNC_T class sums of K_{X_1+X_2,Y_1Y_2} split into the three cases and sum back to K",
        contract: TAU,
    },
    CheckSpec {
        name: "s-property",
        criterion: 13,
        anchor: "Thm S-property; Defn S-Transform",
        formula: "S_{X_1X_2,Y_1Y_2}(b,c,d) = S_ℓ S_{X_1,Y_1}(S_ℓ⁻¹ b S_ℓ, S_ℓ⁻¹ S_{X_2,Y_2}(b,c,d) S_r⁻¹, S_r d S_r⁻¹) S_r with S_ℓ = S^ℓ_{X_2}(b), S_r = S^r_{Y_2}(d); the peeled and literal S agree",
        contract: TAU,
    },
    CheckSpec {
        name: "s-cases",
        criterion: 13,
        anchor: "Lemma S-case-1..6",
        formula: "the BNC_S class sums of K_{X_1X_2,Y_1Y_2} split into the six cases and sum back to K",
        contract: TAU,
    },
    CheckSpec {
        name: "convergence",
        criterion: 14,
        anchor: "Thm R-transform, T-property, S-property, free-S (truncation)",
        formula: "the residual of every order-swept identity of the R-, S- and T-checks does not grow from N = 3 to 5",
        contract: "residuals at or below 1e-14 count as 0; growth over consecutive orders must be exactly 0",
    },
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.name).collect()
}

pub fn spec(name: &str) -> Result<&'static CheckSpec, CliError> {
    CHECKS
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| CliError::UnknownCheck { name: name.to_string(), valid: check_names().join(", ") })
}

/// Human-readable description of a check.
pub fn explain(name: &str) -> Result<String, CliError> {
    let c = spec(name)?;
    Ok(format!(
        "{name}  (acceptance criterion {})\n  anchor:    {}\n  verifies:  {}\n  tolerance: {}\n",
        c.criterion, c.anchor, c.formula, c.contract
    ))
}

/// One measured quantity of a check. `at_least` items are negative controls:
/// they pass when the residual reaches the bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub label: String,
    pub residual: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub at_least: bool,
    pub pass: bool,
}

impl Item {
    pub fn at_most(label: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Item { label: label.into(), residual, tolerance, at_least: false, pass: residual <= tolerance }
    }

    pub fn at_least(label: impl Into<String>, residual: f64, bound: f64) -> Self {
        Item { label: label.into(), residual, tolerance: bound, at_least: true, pass: residual >= bound }
    }

    /// How far the item is from failing; above 1 means failed.
    fn badness(&self) -> f64 {
        if self.residual.is_nan() {
            return f64::INFINITY;
        }
        let (num, den) = if self.at_least { (self.tolerance, self.residual) } else { (self.residual, self.tolerance) };
        if den > 0.0 {
            num / den
        } else if num > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub criterion: u32,
    pub anchor: String,
    /// Residual and tolerance of the item closest to failing.
    pub residual: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub at_least: bool,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub items: Vec<Item>,
    /// Seconds; kept out of the JSON report so that reruns are byte-identical.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: ExperimentConfig,
    pub checks: Vec<CheckResult>,
    pub passed: usize,
    pub total: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub name: String,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn timings(&self) -> Vec<Timing> {
        self.checks.iter().map(|c| Timing { name: c.name.clone(), seconds: c.wall_time }).collect()
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            crate::EXIT_PASS
        } else {
            crate::EXIT_FAIL
        }
    }
}

type Memo = Mutex<HashMap<&'static str, Arc<OnceLock<Result<VerifyReport, String>>>>>;

/// Shared state of one suite run: transform runs are computed once and reused
/// by the convergence check.
pub struct Runner<'a> {
    config: &'a ExperimentConfig,
    memo: Memo,
}

impl<'a> Runner<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Self {
        Runner { config, memo: Mutex::new(HashMap::new()) }
    }

    fn sweep_for(&self, name: &str) -> Sweep {
        let t = &self.config.transforms;
        match name {
            "relations" => t.relations,
            "r-transform" | "degenerations" => t.r_transform,
            "inversion" | "s-routes" | "s-lemmata" | "free-s" => t.s_transform,
            "t-property" | "t-cases" => t.t_transform,
            _ => t.s_partial,
        }
    }

    fn transform(&self, name: &'static str) -> Result<VerifyReport, String> {
        let cell = self.memo.lock().unwrap().entry(name).or_default().clone();
        cell.get_or_init(|| {
            run_verify(name, &self.config.transforms.model, self.sweep_for(name), self.config.seed).map_err(|e| e.to_string())
        })
        .clone()
    }

    pub fn run_check(&self, spec: &CheckSpec) -> CheckResult {
        let start = Instant::now();
        let outcome = self.items(spec.name);
        let wall_time = start.elapsed().as_secs_f64();
        let (items, error) = match outcome {
            Ok(items) => (items, None),
            Err(e) => (Vec::new(), Some(e)),
        };
        let worst = items.iter().max_by(|a, b| a.badness().total_cmp(&b.badness()));
        let (residual, tolerance, at_least) = worst.map_or((f64::NAN, f64::NAN, false), |w| (w.residual, w.tolerance, w.at_least));
        let pass = error.is_none() && !items.is_empty() && items.iter().all(|i| i.pass);
        CheckResult {
            name: spec.name.to_string(),
            criterion: spec.criterion,
            anchor: spec.anchor.to_string(),
            residual,
            tolerance,
            at_least,
            pass,
            error,
            items,
            wall_time,
        }
    }

    fn items(&self, name: &str) -> Result<Vec<Item>, String> {
        let c = self.config;
        let lib = |e: bifree::Error| e.to_string();
        match name {
            "mobius" => lattice_items(c).map_err(lib),
            "kreweras" => kreweras_items(c.lattice.kreweras_max),
            "round-trip" => round_trip_items(c).map_err(lib),
            "vanishing" => vanishing_items(c).map_err(lib),
            "products" => products_items(c).map_err(lib),
            "bifree" => bifree_items(&c.bifree.scalar.model, c.bifree.scalar.order, c.bifree.scalar.draws, c.bifree.scalar.tol, c.seed)
                .map_err(lib),
            "bifree-matrix" => {
                let r = &c.bifree.matrix;
                bifree_items(&r.model, r.order, r.draws, r.tol, c.seed).map_err(lib)
            }
            "bifree-control" => bifree_control_items(&c.bifree.control, c.seed).map_err(lib),
            "rcyclic" => rcyclic_items(c).map_err(lib),
            "over-d" => over_d_items(c).map_err(lib),
            "rcyclic-control" => rcyclic_control_items(c).map_err(lib),
            "matrix-cumulants" => matrix_cumulant_items(c).map_err(lib),
            "convergence" => self.convergence_items(),
            other => {
                let name = bifree::transforms::verify::CHECK_NAMES
                    .iter()
                    .copied()
                    .find(|n| *n == other)
                    .ok_or_else(|| format!("no runner for check {other:?}"))?;
                let rep = self.transform(name)?;
                Ok(rep.results.iter().map(|r| Item::at_most(format!("p{}/{}", r.point, r.check.name), r.check.residual, r.check.tail_tol)).collect())
            }
        }
    }

    fn convergence_items(&self) -> Result<Vec<Item>, String> {
        let orders = &self.config.transforms.convergence_orders;
        let mut items = Vec::new();
        for name in
            ["r-transform", "degenerations", "inversion", "s-routes", "s-lemmata", "free-s", "t-property", "t-cases", "s-property", "s-cases"]
        {
            let rep = self.transform(name)?;
            for r in &rep.results {
                if let Some(growth) = order_growth(&r.check, orders) {
                    items.push(Item::at_most(format!("{name}/p{}/{}", r.point, r.check.name), growth, 0.0));
                }
            }
        }
        Ok(items)
    }
}

/// Largest increase of the residual between consecutive `orders`, with rounding-level
/// residuals counted as zero; `None` when the identity was not swept over all of them.
pub fn order_growth(check: &PointCheck, orders: &[usize]) -> Option<f64> {
    use bifree::transforms::verify::ROUNDING_FLOOR;
    let r: Vec<f64> = orders
        .iter()
        .map(|o| check.by_order.iter().find(|x| x.order == *o).map(|x| if x.residual <= ROUNDING_FLOOR { 0.0 } else { x.residual }))
        .collect::<Option<_>>()?;
    Some(r.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max))
}

/// Runs the selected checks on a pool of `jobs` workers.
pub fn run_suite(config: &ExperimentConfig, jobs: usize) -> Result<SuiteReport, CliError> {
    config.validate()?;
    let selected: Vec<&CheckSpec> = if config.checks.is_empty() {
        CHECKS.iter().collect()
    } else {
        CHECKS.iter().filter(|c| config.checks.iter().any(|n| n == c.name)).collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let runner = Runner::new(config);
    let checks: Vec<CheckResult> = pool.install(|| selected.par_iter().map(|s| runner.run_check(s)).collect());
    let passed = checks.iter().filter(|c| c.pass).count();
    let total = checks.len();
    Ok(SuiteReport { config: config.clone(), checks, passed, total, pass: passed == total })
}

fn shape_of(tags: &[Side]) -> ChiShape {
    ChiShape::new(tags.to_vec())
}

fn lattice_items(c: &ExperimentConfig) -> bifree::Result<Vec<Item>> {
    let mut items = Vec::new();
    for n in 1..=c.lattice.catalan_max {
        let (mut count_bad, mut set_bad) = (0usize, 0usize);
        for tags in all_shapes(n) {
            let ours = enumerate_bnc(&shape_of(&tags))?;
            if ours.len() as u64 != catalan_recurrence(n) {
                count_bad += 1;
            }
            let mut a: Vec<_> = ours.iter().map(|p| normalize(p.blocks().to_vec())).collect();
            let mut b = bnc_brute(&tags);
            a.sort();
            b.sort();
            if a != b {
                set_bad += 1;
            }
        }
        items.push(Item::at_most(format!("catalan n={n}"), count_bad as f64, 0.0));
        items.push(Item::at_most(format!("brute-force n={n}"), set_bad as f64, 0.0));
    }
    for n in 1..=c.lattice.mobius_max {
        let (mut fast_bad, mut sum_bad) = (0usize, 0usize);
        for tags in all_shapes(n) {
            let shape = shape_of(&tags);
            let lat = Lattice::new(&tags);
            let parts: Vec<BncPartition> =
                lat.parts.iter().map(|b| BncPartition::new(shape.clone(), b.clone())).collect::<bifree::Result<_>>()?;
            let m = parts.len();
            let mut fast = vec![vec![0i128; m]; m];
            for i in 0..m {
                for j in 0..m {
                    fast[i][j] = mobius(&parts[i], &parts[j])?;
                    let expect = if lat.leq[i][j] { lat.mu[i][j] } else { 0 };
                    if fast[i][j] != expect {
                        fast_bad += 1;
                    }
                }
            }
            for i in 0..m {
                for j in 0..m {
                    if !lat.leq[i][j] {
                        continue;
                    }
                    let s: i128 = (0..m).filter(|&t| lat.leq[i][t] && lat.leq[t][j]).map(|t| fast[t][j]).sum();
                    if s != i128::from(i == j) {
                        sum_bad += 1;
                    }
                }
            }
        }
        items.push(Item::at_most(format!("fast path n={n}"), fast_bad as f64, 0.0));
        items.push(Item::at_most(format!("recursion sums n={n}"), sum_bad as f64, 0.0));
    }
    Ok(items)
}

fn kreweras_items(max: usize) -> Result<Vec<Item>, String> {
    let mut items = Vec::new();
    for side in [Side::Left, Side::Right] {
        for n in 1..=max {
            let tags = vec![side; 2 * n];
            let all = bnc_brute(&tags);
            let sigma: Vec<Vec<usize>> = (0..n).map(|k| vec![2 * k, 2 * k + 1]).collect();
            // π ∨ σ = 1 iff no BNC partition other than 1 lies above both
            let joins_to_one = |p: &[Vec<usize>]| !all.iter().any(|u| u.len() > 1 && refines(p, u) && refines(&sigma, u));
            let mut brute: Vec<_> = all
                .iter()
                .filter(|p| p.iter().any(|b| b == &vec![0]))
                .filter(|p| p.iter().all(|b| b.iter().all(|&k| k % 2 == b[0] % 2)))
                .filter(|p| joins_to_one(p))
                .cloned()
                .collect();
            let mut ours: Vec<_> = enumerate_bnc_prime(side, n).iter().map(|p| normalize(p.blocks().to_vec())).collect();
            brute.sort();
            ours.sort();
            let missing = brute.iter().filter(|p| ours.binary_search(p).is_err()).count();
            let extra = ours.iter().filter(|p| brute.binary_search(p).is_err()).count();
            items.push(Item::at_most(format!("{} n={n}", side.letter()), (missing + extra) as f64, 0.0));
        }
    }
    Ok(items)
}

fn random_b(rng: &mut ChaCha8Rng, d: usize) -> BMatrix {
    BMatrix::random(rng, d, 0.5)
}

/// Entries mix creation and annihilation on generators 0 and 1; each gets a
/// random prefix and suffix with probability 1/2.
fn random_tuple(rng: &mut ChaCha8Rng, tags: &[Side], d: usize) -> bifree::Result<OpTuple> {
    let entries = tags
        .iter()
        .map(|&side| {
            let mut e = Decorated::plain(random_element(rng, d, side, &[0, 1]));
            if rng.gen_bool(0.5) {
                e.pre = Some(random_b(rng, d));
            }
            if rng.gen_bool(0.5) {
                e.suf = Some(random_b(rng, d));
            }
            e
        })
        .collect();
    DecoratedTuple::new(shape_of(tags), entries)
}

fn fock_engine(c: &ExperimentConfig) -> bifree::Result<FockEngine> {
    Ok(Engine::new(FockModel::new(c.cumulants.d, c.cumulants.depth)?))
}

fn round_trip_items(c: &ExperimentConfig) -> bifree::Result<Vec<Item>> {
    let eng = fock_engine(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut items = Vec::new();
    for n in 1..=c.cumulants.round_trip_max {
        let mut worst: f64 = 0.0;
        for tags in all_shapes(n) {
            let t = random_tuple(&mut rng, &tags, c.cumulants.d)?;
            for sigma in enumerate_bnc(&t.shape)? {
                let e = eval_moment_pi(&eng, &sigma, &t)?;
                let back = moments_from_cumulants(&eng, &sigma, &t)?;
                worst = worst.max(e.dist(&back));
            }
        }
        items.push(Item::at_most(format!("n={n}"), worst, c.cumulants.round_trip_tol));
        eng.clear_caches();
    }
    Ok(items)
}

fn vanishing_items(c: &ExperimentConfig) -> bifree::Result<Vec<Item>> {
    let eng = fock_engine(c)?;
    let d = c.cumulants.d;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut items = Vec::new();
    for n in 2..=c.cumulants.vanishing_max {
        let mut worst: f64 = 0.0;
        for tags in all_shapes(n) {
            for _ in 0..c.cumulants.vanishing_draws {
                let mut t = random_tuple(&mut rng, &tags, d)?;
                let q = rng.gen_range(0..n);
                t.entries[q] = Decorated::plain(OpElement::b_op(tags[q], &random_b(&mut rng, d)));
                worst = worst.max(eng.kappa_full(&tags, &t.entries)?.norm_max());
            }
        }
        items.push(Item::at_most(format!("n={n}"), worst, c.cumulants.vanishing_tol));
    }
    Ok(items)
}

/// Compositions of `n` as cut vectors `(0, k(1), …, n)`.
fn compositions(n: usize) -> Vec<Vec<usize>> {
    (0..1usize << (n - 1))
        .map(|mask| {
            let mut cuts = vec![0];
            cuts.extend((1..n).filter(|k| mask >> (k - 1) & 1 == 1));
            cuts.push(n);
            cuts
        })
        .collect()
}

fn products_items(c: &ExperimentConfig) -> bifree::Result<Vec<Item>> {
    let eng = fock_engine(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut items = Vec::new();
    for n in 1..=c.cumulants.products_max {
        let mut worst: f64 = 0.0;
        let mut patterns = 0;
        for cuts in compositions(n) {
            for outer in all_shapes(cuts.len() - 1) {
                let emb = HatEmbedding::new(shape_of(&outer), cuts.clone())?;
                let t = random_tuple(&mut rng, emb.inner().tags(), c.cumulants.d)?;
                worst = worst.max(cumulant_of_products(&eng, &emb, &t)?.residual);
                patterns += 1;
            }
        }
        items.push(Item::at_most(format!("inner n={n} ({patterns} patterns)"), worst, c.cumulants.products_tol));
        eng.clear_caches();
    }
    Ok(items)
}

fn bifree_items(model: &ModelSpec, order: usize, draws: usize, tol: f64, seed: u64) -> bifree::Result<Vec<Item>> {
    let built = model.build()?;
    let engine = Engine::new(built.model);
    let rep = check_bifree(&engine, &built.families, order, draws, tol, seed)?;
    Ok(vec![Item::at_most(format!("worst mixed cumulant, order ≤ {order}"), rep.worst_residual, tol)])
}

fn bifree_control_items(run: &ControlRun, seed: u64) -> bifree::Result<Vec<Item>> {
    let built = run.model.build()?;
    let engine = Engine::new(built.model);
    let rep = check_bifree(&engine, &built.families, run.order, run.draws, run.tol, seed)?;
    Ok(vec![Item::at_least(format!("worst mixed cumulant, order ≤ {}", run.order), rep.worst_residual, run.min_residual)])
}

fn matrices(model: &ModelSpec) -> bifree::Result<(bifree::descriptor::BuiltModel, MatrixFaces<OpElement>)> {
    let built = model.build()?;
    let m = built
        .matrices
        .clone()
        .ok_or_else(|| bifree::Error::Config("the model is not a pure matrix lift; entries are unavailable".into()))?;
    Ok((built, m))
}

fn rcyclic_items(c: &ExperimentConfig) -> bifree::Result<Vec<Item>> {
    let r = &c.rcyclic;
    let (built, m) = matrices(&r.model)?;
    let scalar = Engine::new(FockModel::new(1, built.model.depth)?);
    let rep = check_r_cyclic(&scalar, &m, r.order, r.tol)?;
    Ok(vec![Item::at_most(format!("broken-chain cumulants ({}), order ≤ {}", rep.checked, r.order), rep.worst, r.tol)])
}

fn over_d_items(c: &ExperimentConfig) -> bifree::Result<Vec<Item>> {
    let r = &c.rcyclic;
    let built = r.model.build()?;
    let faces = built.families.first().ok_or_else(|| bifree::Error::Config("model has no family".into()))?;
    let rep = check_bifree_over_d(&built.model, faces, CondExp::Diagonal, r.over_d_order, r.draws, r.over_d_tol, c.seed)?;
    Ok(vec![
        Item::at_most("condition F(κ^B) = κ^B", rep.worst_condition1, r.over_d_tol),
        Item::at_most("condition κ^D = κ^B", rep.worst_condition0, r.over_d_tol),
    ])
}

fn rcyclic_control_items(c: &ExperimentConfig) -> bifree::Result<Vec<Item>> {
    let r = &c.rcyclic.control;
    let (built, m) = matrices(&r.model)?;
    let scalar = Engine::new(FockModel::new(1, built.model.depth)?);
    let rc = check_r_cyclic(&scalar, &m, r.order, r.tol)?;
    let faces = built.families.first().ok_or_else(|| bifree::Error::Config("model has no family".into()))?;
    let od = check_bifree_over_d(&built.model, faces, CondExp::Diagonal, r.order, r.draws, r.tol, c.seed)?;
    Ok(vec![
        Item::at_least("broken-chain cumulant", rc.worst, r.min_residual),
        Item::at_least("condition F(κ^B) = κ^B", od.worst_condition1, r.min_residual),
        Item::at_least("condition κ^D = κ^B", od.worst_condition0, r.min_residual),
    ])
}

/// Every word of length ≤ `max` over the creation example with one family.
fn matrix_cumulant_items(c: &ExperimentConfig) -> bifree::Result<Vec<Item>> {
    let d = c.cumulants.d;
    let tol = c.cumulants.matrix_tol;
    let mut pool = GeneratorPool::new();
    let ex = creation_example(d, 1, &mut pool)?;
    let left: Vec<(String, &bifree::models::MatOp)> = ex.entries.iter().map(|(n, l, _)| (format!("l{n}"), l.as_ref())).collect();
    let right: Vec<(String, &bifree::models::MatOp)> = ex.entries.iter().map(|(n, _, r)| (format!("r{n}"), r.as_ref())).collect();
    let mf = MatrixFaces::from_fock(d, &left, &right);
    let ops: Vec<OpElement> = ex
        .entries
        .iter()
        .map(|(_, l, _)| OpElement::left(l))
        .chain(ex.entries.iter().map(|(_, _, r)| OpElement::right(r)))
        .collect();
    let eng_m = Engine::new(FockModel::new(d, c.cumulants.depth)?);
    let eng_d = Engine::with_mode(FockModel::new(d, c.cumulants.depth)?, Valued::D);
    let eng_1 = Engine::new(FockModel::new(1, c.cumulants.depth)?);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let rnd = |rng: &mut ChaCha8Rng| -> Vec<C64> { (0..d).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect() };
    let mut items = Vec::new();
    for n in 1..=c.cumulants.matrix_max {
        let (mut expand, mut diag, mut hyp) = (0.0f64, 0.0f64, 0.0f64);
        let mut words: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..n {
            words = words.into_iter().flat_map(|w| (0..ops.len()).map(move |s| [w.clone(), vec![s]].concat())).collect();
        }
        for word in &words {
            expand = expand.max(matrix_cumulant_expand(&eng_m, &eng_1, &ops, &mf, word)?.residual);
            let lam: Vec<Vec<C64>> = (0..n).map(|_| rnd(&mut rng)).collect();
            let gam: Vec<Vec<C64>> = (0..n).map(|_| rnd(&mut rng)).collect();
            let (check, h) = diagonal_cumulant_formula(&eng_d, &eng_1, &ops, &mf, word, &lam, &gam)?;
            diag = diag.max(check.residual);
            hyp = hyp.max(h);
        }
        items.push(Item::at_most(format!("M_d expansion n={n} ({} words)", words.len()), expand, tol));
        items.push(Item::at_most(format!("D_d formula n={n}"), diag, tol));
        items.push(Item::at_most(format!("R-cyclic hypothesis n={n}"), hyp, tol));
    }
    Ok(items)
}
