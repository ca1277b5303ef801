mod common;

use bifree::bnc::*;
use bifree::mobius::*;
use common::all_shapes;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Refinement matrix and the recursive Möbius oracle on an enumerated lattice.
struct Lattice {
    parts: Vec<BncPartition>,
    leq: Vec<Vec<bool>>,
    mu: Vec<Vec<i128>>,
}

impl Lattice {
    fn new(shape: &ChiShape) -> Self {
        let mut parts = enumerate_bnc(shape).unwrap();
        // linear extension: finer partitions first
        parts.sort_by_key(|p| std::cmp::Reverse(p.num_blocks()));
        let n = parts.len();
        let leq: Vec<Vec<bool>> =
            (0..n).map(|i| (0..n).map(|j| parts[i].refines(&parts[j]).unwrap()).collect()).collect();
        let mut mu = vec![vec![0i128; n]; n];
        for i in 0..n {
            mu[i][i] = 1;
            for j in i + 1..n {
                if !leq[i][j] {
                    continue;
                }
                let s: i128 = (i..j).filter(|&t| leq[i][t] && leq[t][j]).map(|t| mu[i][t]).sum();
                mu[i][j] = -s;
            }
        }
        Lattice { parts, leq, mu }
    }
}

#[test]
fn fast_path_matches_recursion_exhaustively() {
    for n in 1..=6 {
        for s in all_shapes(n) {
            let lat = Lattice::new(&s);
            for (i, p) in lat.parts.iter().enumerate() {
                for (j, q) in lat.parts.iter().enumerate() {
                    let expect = if lat.leq[i][j] { lat.mu[i][j] } else { 0 };
                    assert_eq!(mobius(p, q).unwrap(), expect, "shape {s} pi {p} sigma {q}");
                }
            }
        }
    }
}

#[test]
fn recursion_sums_vanish() {
    for n in 1..=6 {
        for s in all_shapes(n) {
            let lat = Lattice::new(&s);
            let m = lat.parts.len();
            for i in 0..m {
                for j in 0..m {
                    if !lat.leq[i][j] {
                        continue;
                    }
                    let col: i128 = (0..m).filter(|&t| lat.leq[i][t] && lat.leq[t][j]).map(|t| mobius(&lat.parts[t], &lat.parts[j]).unwrap()).sum();
                    assert_eq!(col, i128::from(i == j));
                }
            }
        }
    }
}

#[test]
fn small_values() {
    let s = ChiShape::parse("lr").unwrap();
    let p = BncPartition::zero(&s);
    assert_eq!(mobius(&p, &p).unwrap(), 1);
    assert_eq!(mobius(&p, &BncPartition::one(&s)).unwrap(), -1);
    let s4 = ChiShape::parse("lrrl").unwrap();
    assert_eq!(mobius(&BncPartition::zero(&s4), &BncPartition::one(&s4)).unwrap(), -5);
    // not comparable
    assert_eq!(mobius(&BncPartition::one(&s4), &BncPartition::zero(&s4)).unwrap(), 0);
}

#[test]
fn zero_to_one_is_signed_catalan() {
    for n in 1..=12 {
        let s = ChiShape::uniform(Side::Right, n);
        let v = mobius(&BncPartition::zero(&s), &BncPartition::one(&s)).unwrap();
        let c = common::catalan_oracle(n as u64 - 1) as i128;
        assert_eq!(v, if n % 2 == 0 { -c } else { c });
    }
}

#[test]
fn column_sum_check() {
    let s = ChiShape::parse("llrl").unwrap();
    assert!(mobius_column_sum_check(&BncPartition::zero(&s)).unwrap());
    assert!(mobius_column_sum_check(&BncPartition::one(&s)).unwrap());
    for n in 1..=6 {
        let s = ChiShape::two_sided(n / 2, n - n / 2);
        for sigma in enumerate_bnc(&s).unwrap() {
            assert!(mobius_column_sum_check(&sigma).unwrap());
        }
    }
    let big = ChiShape::uniform(Side::Left, 9);
    assert!(mobius_column_sum_check(&BncPartition::one(&big)).is_err());
}

#[test]
fn mobius_inversion_recovers_random_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=6 {
        let s = ChiShape::two_sided(n - n / 3, n / 3);
        let lat = Lattice::new(&s);
        let m = lat.parts.len();
        let f: Vec<i128> = (0..m).map(|_| rng.gen_range(-50..50)).collect();
        let g: Vec<i128> = (0..m).map(|j| (0..m).filter(|&i| lat.leq[i][j]).map(|i| f[i]).sum()).collect();
        for j in 0..m {
            let back: i128 =
                (0..m).filter(|&i| lat.leq[i][j]).map(|i| g[i] * mobius(&lat.parts[i], &lat.parts[j]).unwrap()).sum();
            assert_eq!(back, f[j]);
        }
    }
}
