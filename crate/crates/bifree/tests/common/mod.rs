//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use bifree::bnc::{ChiShape, Side};

/// All set partitions of `0..n` via restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    fn rec(k: usize, n: usize, maxb: usize, rgs: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        if k == n {
            let nb = rgs.iter().copied().max().map_or(0, |m| m + 1);
            let mut blocks = vec![Vec::new(); nb];
            for (i, &b) in rgs.iter().enumerate() {
                blocks[b].push(i);
            }
            out.push(blocks);
            return;
        }
        for b in 0..=maxb {
            rgs[k] = b;
            rec(k + 1, n, if b == maxb { maxb + 1 } else { maxb }, rgs, out);
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    rec(0, n, 0, &mut rgs, &mut out);
    out
}

/// Crossing test straight from the definition: a ≺ b ≺ c ≺ d with a,c in one
/// block and b,d in another.
pub fn crosses_under(key: &dyn Fn(usize) -> usize, blocks: &[Vec<usize>]) -> bool {
    for (i, a) in blocks.iter().enumerate() {
        for (j, b) in blocks.iter().enumerate() {
            if i == j {
                continue;
            }
            for &u1 in a {
                for &u2 in a {
                    for &v1 in b {
                        for &v2 in b {
                            if key(u1) < key(v1) && key(v1) < key(u2) && key(u2) < key(v2) {
                                return true;
                            }
                        }
                    }
                }
            }
        }
    }
    false
}

/// Order key of position `k` for shape `tags`: lefts by index, then rights reversed.
pub fn chi_key(tags: &[Side]) -> impl Fn(usize) -> usize + '_ {
    move |k| match tags[k] {
        Side::Left => k,
        Side::Right => 2 * tags.len() - k,
    }
}

pub fn bnc_brute(shape: &ChiShape) -> Vec<Vec<Vec<usize>>> {
    let tags = shape.tags().to_vec();
    let key = chi_key(&tags);
    set_partitions(shape.len()).into_iter().filter(|p| !crosses_under(&key, p)).collect()
}

pub fn all_shapes(n: usize) -> Vec<ChiShape> {
    (0..1u32 << n)
        .map(|mask| {
            ChiShape::new((0..n).map(|k| if mask >> k & 1 == 1 { Side::Right } else { Side::Left }).collect())
        })
        .collect()
}

/// Canonical form for comparing partitions as sets.
pub fn normalize(mut p: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for b in p.iter_mut() {
        b.sort_unstable();
    }
    p.sort();
    p
}

pub fn coarser_or_equal(fine: &[Vec<usize>], coarse: &[Vec<usize>]) -> bool {
    fine.iter().all(|b| coarse.iter().any(|c| b.iter().all(|x| c.contains(x))))
}

pub fn catalan_oracle(n: u64) -> u64 {
    // C(2n, n)/(n+1) by exact products
    let mut c: u128 = 1;
    for k in 0..n as u128 {
        c = c * (2 * n as u128 - k) / (k + 1);
    }
    (c / (n as u128 + 1)) as u64
}

use bifree::fock::FockOp;
use bifree::matrix::{BMatrix, C64};
use bifree::models::{MatOp, OpElement};
use rand::Rng;

fn rc<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Random `d×d` matrix whose entries mix creation/annihilation on `gens`.
pub fn random_matop<R: Rng + ?Sized>(rng: &mut R, d: usize, side: Side, gens: &[usize]) -> std::sync::Arc<MatOp> {
    let mut entries = Vec::new();
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

pub fn random_op<R: Rng + ?Sized>(rng: &mut R, d: usize, side: Side, gens: &[usize]) -> OpElement {
    let z = random_matop(rng, d, side, gens);
    match side {
        Side::Left => OpElement::left(&z),
        Side::Right => OpElement::right(&z),
    }
}

pub fn random_b<R: Rng + ?Sized>(rng: &mut R, d: usize) -> BMatrix {
    BMatrix::random(rng, d, 0.5)
}
