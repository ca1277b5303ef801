//! JSON model descriptors.
//!
//! A descriptor names a Fock model and the two-faced families living on it,
//! down to generators, shifts, placements and seeds, so that any report that
//! embeds one can be replayed bit for bit.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bnc::Side;
use crate::checks::{Faces, MatrixFaces};
use crate::error::{Error, Result};
use crate::fock::FockOp;
use crate::matrix::{BMatrix, C64};
use crate::models::{
    creation_example, perturbed_creation_example, shifted_pair, FockModel, GeneratorPool, MatOp, OpElement,
    TwoFacedFamily,
};
use crate::transforms::verify::Pairs;
use crate::transforms::Pair;

fn default_depth() -> usize {
    8
}

fn default_pairs() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `pairs` shifted semicircular pairs `(L_c + αL(S), R_c' + αR(S))` over `M_d`.
    /// With `shared` every pair reuses the first pair's generators.
    ShiftedPairs {
        d: usize,
        alpha: f64,
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default = "default_depth")]
        depth: usize,
        seed: u64,
        #[serde(default)]
        shared: bool,
    },
    /// Scalar families `{x, x', y}` with random creation/annihilation mixtures on
    /// two generators per family (all families on generators 0, 1 when `shared`).
    ScalarPairs {
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default = "default_depth")]
        depth: usize,
        seed: u64,
        #[serde(default)]
        shared: bool,
    },
    /// The creation/annihilation matrices on `families · d²` generators, optionally
    /// with the `(0, 1)` coupling that breaks `R`-cyclicity.
    CreationExample {
        d: usize,
        families: usize,
        #[serde(default = "default_depth")]
        depth: usize,
        #[serde(default)]
        perturbed: bool,
    },
    /// Explicit elements.
    Elements {
        d: usize,
        #[serde(default = "default_depth")]
        depth: usize,
        families: Vec<FamilySpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    #[serde(default)]
    pub left: Vec<ElementSpec>,
    #[serde(default)]
    pub right: Vec<ElementSpec>,
}

/// `L_shift + L([Z])` on the left (`R` on the right) with `Z_ij = Σ coef · word`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub name: String,
    #[serde(default)]
    pub shift: Option<BMatrix>,
    #[serde(default)]
    pub entries: Vec<EntrySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub i: usize,
    pub j: usize,
    pub terms: Vec<TermSpec>,
}

/// `coef` times a product of letters `l<g>`, `ls<g>`, `r<g>`, `rs<g>` (`ls` is `l*`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coef: [f64; 2],
    #[serde(default)]
    pub word: String,
}

/// A built model: the Fock model, its families and, when every element is a pure
/// matrix lift, the scalar entries of the matrices.
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub model: FockModel,
    pub families: Vec<Faces<OpElement>>,
    pub matrices: Option<MatrixFaces<OpElement>>,
}

pub fn parse_word(word: &str) -> Result<FockOp> {
    let mut op = FockOp::identity();
    for tok in word.split_whitespace() {
        let (head, gen) = tok.split_at(tok.find(|c: char| c.is_ascii_digit()).unwrap_or(tok.len()));
        let g: usize = gen.parse().map_err(|_| Error::Config(format!("bad Fock letter {tok:?}")))?;
        if g >= crate::fock::MAX_GENERATORS {
            return Err(Error::Config(format!("generator {g} out of range")));
        }
        let letter = match head {
            "l" => FockOp::l(g),
            "ls" => FockOp::ls(g),
            "r" => FockOp::r(g),
            "rs" => FockOp::rs(g),
            _ => return Err(Error::Config(format!("bad Fock letter {tok:?} (use l, ls, r, rs)"))),
        };
        op = op.mul(&letter);
    }
    Ok(op)
}

fn lift(side: Side, z: &Arc<MatOp>) -> OpElement {
    match side {
        Side::Left => OpElement::left(z),
        Side::Right => OpElement::right(z),
    }
}

fn rc<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// A random `d×d` matrix whose entries are `0.3·c + Σ_g (a_g l(g) + a'_g l*(g))`
/// (the `r` letters on the right) with uniform complex coefficients.
pub fn random_matop<R: Rng + ?Sized>(rng: &mut R, d: usize, side: Side, gens: &[usize]) -> Arc<MatOp> {
    let mut entries = Vec::with_capacity(d * d);
    for _ in 0..d * d {
        let mut op = FockOp::scalar(rc(rng).scale(0.3));
        for &g in gens {
            let (a, b) = match side {
                Side::Left => (FockOp::l(g), FockOp::ls(g)),
                Side::Right => (FockOp::r(g), FockOp::rs(g)),
            };
            op = op.add(&a.scale(rc(rng))).add(&b.scale(rc(rng)));
        }
        entries.push(op);
    }
    MatOp::from_fn(d, |i, j| entries[i * d + j].clone())
}

/// [`random_matop`] lifted to `L([Z])` or `R([Z])`.
pub fn random_element<R: Rng + ?Sized>(rng: &mut R, d: usize, side: Side, gens: &[usize]) -> OpElement {
    lift(side, &random_matop(rng, d, side, gens))
}

impl ModelSpec {
    pub fn d(&self) -> usize {
        match self {
            ModelSpec::ShiftedPairs { d, .. } | ModelSpec::CreationExample { d, .. } | ModelSpec::Elements { d, .. } => *d,
            ModelSpec::ScalarPairs { .. } => 1,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("model descriptor: {e}")))
    }

    pub fn build(&self) -> Result<BuiltModel> {
        match self {
            ModelSpec::ShiftedPairs { d, alpha, pairs, depth, seed, shared } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut pool = GeneratorPool::new();
                let mut families = Vec::new();
                for k in 0..*pairs {
                    if *shared {
                        pool = GeneratorPool::new();
                    }
                    let p = shifted_pair(*d, *alpha, &mut pool, &mut rng)?;
                    families.push(Faces { name: format!("p{k}"), left: vec![(format!("x{k}"), p.x)], right: vec![(format!("y{k}"), p.y)] });
                }
                Ok(BuiltModel { model: FockModel::new(*d, *depth)?, families, matrices: None })
            }
            ModelSpec::ScalarPairs { pairs, depth, seed, shared } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut families = Vec::new();
                let mut entries = (Vec::new(), Vec::new());
                for k in 0..*pairs {
                    let gens = if *shared { [0, 1] } else { [2 * k, 2 * k + 1] };
                    let xs = [random_matop(&mut rng, 1, Side::Left, &gens), random_matop(&mut rng, 1, Side::Left, &gens)];
                    let y = random_matop(&mut rng, 1, Side::Right, &gens);
                    let names = [format!("x{k}"), format!("x{k}'"), format!("y{k}")];
                    families.push(Faces {
                        name: format!("p{k}"),
                        left: vec![(names[0].clone(), lift(Side::Left, &xs[0])), (names[1].clone(), lift(Side::Left, &xs[1]))],
                        right: vec![(names[2].clone(), lift(Side::Right, &y))],
                    });
                    entries.0.push((names[0].clone(), xs[0].clone()));
                    entries.0.push((names[1].clone(), xs[1].clone()));
                    entries.1.push((names[2].clone(), y));
                }
                let matrices = matrix_faces(1, &entries.0, &entries.1);
                Ok(BuiltModel { model: FockModel::new(1, *depth)?, families, matrices: Some(matrices) })
            }
            ModelSpec::CreationExample { d, families, depth, perturbed } => {
                let mut pool = GeneratorPool::new();
                let ex = if *perturbed {
                    perturbed_creation_example(*d, *families, &mut pool)?
                } else {
                    creation_example(*d, *families, &mut pool)?
                };
                let left: Vec<(String, Arc<MatOp>)> = ex.entries.iter().map(|(n, l, _)| (format!("l{n}"), l.clone())).collect();
                let right: Vec<(String, Arc<MatOp>)> = ex.entries.iter().map(|(n, _, r)| (format!("r{n}"), r.clone())).collect();
                let faces = Faces { name: "creation".into(), left: ex.left, right: ex.right };
                Ok(BuiltModel { model: FockModel::new(*d, *depth)?, families: vec![faces], matrices: Some(matrix_faces(*d, &left, &right)) })
            }
            ModelSpec::Elements { d, depth, families } => build_elements(*d, *depth, families),
        }
    }
}

fn matrix_faces(d: usize, left: &[(String, Arc<MatOp>)], right: &[(String, Arc<MatOp>)]) -> MatrixFaces<OpElement> {
    let l: Vec<(String, &MatOp)> = left.iter().map(|(n, m)| (n.clone(), m.as_ref())).collect();
    let r: Vec<(String, &MatOp)> = right.iter().map(|(n, m)| (n.clone(), m.as_ref())).collect();
    MatrixFaces::from_fock(d, &l, &r)
}

fn build_elements(d: usize, depth: usize, specs: &[FamilySpec]) -> Result<BuiltModel> {
    let mut families = Vec::new();
    let mut mats: (Vec<(String, Arc<MatOp>)>, Vec<(String, Arc<MatOp>)>) = (Vec::new(), Vec::new());
    let mut pure = true;
    let mut seen = std::collections::BTreeSet::new();
    for f in specs {
        let mut faces = Faces { name: f.name.clone(), left: Vec::new(), right: Vec::new() };
        for (side, list) in [(Side::Left, &f.left), (Side::Right, &f.right)] {
            for e in list {
                if !seen.insert(e.name.clone()) {
                    return Err(Error::Config(format!("element name {:?} is used twice", e.name)));
                }
                let mut cells = vec![FockOp::zero(); d * d];
                for entry in &e.entries {
                    if entry.i >= d || entry.j >= d {
                        return Err(Error::Dimension(format!("entry ({}, {}) outside M_{d}", entry.i, entry.j)));
                    }
                    for t in &entry.terms {
                        let w = parse_word(&t.word)?.scale(C64::new(t.coef[0], t.coef[1]));
                        cells[entry.i * d + entry.j] = cells[entry.i * d + entry.j].add(&w);
                    }
                }
                let z = MatOp::from_fn(d, |i, j| cells[i * d + j].clone());
                let mut op = lift(side, &z);
                if let Some(b) = &e.shift {
                    if b.d() != d {
                        return Err(Error::Dimension(format!("shift of {} is {}x{}", e.name, b.d(), b.d())));
                    }
                    op = OpElement::b_op(side, b).add(&op);
                    pure = false;
                }
                let ok = match side {
                    Side::Left => op.is_left_type(),
                    Side::Right => op.is_right_type(),
                };
                if !ok {
                    return Err(Error::Config(format!("element {} mixes left and right letters", e.name)));
                }
                match side {
                    Side::Left => {
                        mats.0.push((e.name.clone(), z));
                        faces.left.push((e.name.clone(), op));
                    }
                    Side::Right => {
                        mats.1.push((e.name.clone(), z));
                        faces.right.push((e.name.clone(), op));
                    }
                }
            }
        }
        families.push(faces);
    }
    let matrices = pure.then(|| matrix_faces(d, &mats.0, &mats.1));
    Ok(BuiltModel { model: FockModel::new(d, depth)?, families, matrices })
}

impl BuiltModel {
    pub fn d(&self) -> usize {
        self.model.d
    }

    /// All families merged into one, for word-level queries.
    pub fn merged<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TwoFacedFamily> {
        let left = self.families.iter().flat_map(|f| f.left.iter().cloned()).collect();
        let right = self.families.iter().flat_map(|f| f.right.iter().cloned()).collect();
        TwoFacedFamily::new(self.model.clone(), left, right, rng)
    }

    /// The first two families as pairs `(X_1, Y_1)`, `(X_2, Y_2)`, each taking the
    /// first left and first right element of its family.
    pub fn pairs(&self) -> Result<Pairs> {
        if self.families.len() < 2 {
            return Err(Error::Config(format!("transform checks need two families, the model has {}", self.families.len())));
        }
        let pair = |f: &Faces<OpElement>| -> Result<Pair> {
            match (f.left.first(), f.right.first()) {
                (Some((_, x)), Some((_, y))) => Ok(Pair::new(x.clone(), y.clone())),
                _ => Err(Error::Config(format!("family {} needs a left and a right element", f.name))),
            }
        };
        Ok(Pairs::new(pair(&self.families[0])?, pair(&self.families[1])?))
    }
}
