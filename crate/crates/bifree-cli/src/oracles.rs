//! Brute-force references for the lattice checks. Nothing here calls the
//! library's enumerators or Möbius fast path.

use bifree::bnc::Side;

/// All set partitions of `0..n`, blocks sorted, in restricted-growth order.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(k: usize, n: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if k == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(k);
            rec(k + 1, n, cur, out);
            cur[b].pop();
        }
        cur.push(vec![k]);
        rec(k + 1, n, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    rec(0, n, &mut Vec::new(), &mut out);
    out
}

/// Position of each node when lefts are read top to bottom and then rights bottom to top.
pub fn chi_positions(tags: &[Side]) -> Vec<usize> {
    let mut pos = vec![0; tags.len()];
    let mut next = 0;
    for (k, t) in tags.iter().enumerate() {
        if *t == Side::Left {
            pos[k] = next;
            next += 1;
        }
    }
    for (k, t) in tags.iter().enumerate().rev() {
        if *t == Side::Right {
            pos[k] = next;
            next += 1;
        }
    }
    pos
}

/// Whether two blocks interleave as `a < b < a' < b'` under `pos`.
pub fn crossing(pos: &[usize], blocks: &[Vec<usize>]) -> bool {
    for (i, a) in blocks.iter().enumerate() {
        for b in &blocks[i + 1..] {
            for &a1 in a {
                for &a2 in a {
                    for &b1 in b {
                        for &b2 in b {
                            let (a1, a2, b1, b2) = (pos[a1], pos[a2], pos[b1], pos[b2]);
                            if (a1 < b1 && b1 < a2 && a2 < b2) || (b1 < a1 && a1 < b2 && b2 < a2) {
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

pub fn normalize(mut p: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for b in p.iter_mut() {
        b.sort_unstable();
    }
    p.sort();
    p
}

/// Bi-non-crossing partitions of a shape, by filtering all set partitions.
pub fn bnc_brute(tags: &[Side]) -> Vec<Vec<Vec<usize>>> {
    let pos = chi_positions(tags);
    set_partitions(tags.len()).into_iter().filter(|p| !crossing(&pos, p)).map(normalize).collect()
}

/// Every block of `fine` lies inside a block of `coarse`.
pub fn refines(fine: &[Vec<usize>], coarse: &[Vec<usize>]) -> bool {
    fine.iter().all(|b| coarse.iter().any(|c| b.iter().all(|x| c.contains(x))))
}

/// Catalan numbers from the recurrence `C_{n+1} = Σ C_i C_{n-i}`.
pub fn catalan_recurrence(n: usize) -> u64 {
    let mut c = vec![1u64];
    for m in 1..=n {
        c.push((0..m).map(|i| c[i] * c[m - 1 - i]).sum());
    }
    c[n]
}

/// A finite poset with its Möbius function from the defining recursion
/// `μ(π, π) = 1`, `μ(π, σ) = −Σ_{π ≤ τ < σ} μ(π, τ)`.
pub struct Lattice {
    pub parts: Vec<Vec<Vec<usize>>>,
    pub leq: Vec<Vec<bool>>,
    pub mu: Vec<Vec<i128>>,
}

impl Lattice {
    pub fn new(tags: &[Side]) -> Self {
        let mut parts = bnc_brute(tags);
        // finer partitions first, so the recursion only looks backwards
        parts.sort_by_key(|p| std::cmp::Reverse(p.len()));
        let n = parts.len();
        let leq: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| refines(&parts[i], &parts[j])).collect()).collect();
        let mut mu = vec![vec![0i128; n]; n];
        for i in 0..n {
            mu[i][i] = 1;
            for j in i + 1..n {
                if leq[i][j] {
                    mu[i][j] = -(i..j).filter(|&t| leq[i][t] && leq[t][j]).map(|t| mu[i][t]).sum::<i128>();
                }
            }
        }
        Lattice { parts, leq, mu }
    }
}

/// Every shape of length `n`, as tag vectors, in binary order (`l` = 0).
pub fn all_shapes(n: usize) -> Vec<Vec<Side>> {
    (0..1usize << n)
        .map(|mask| (0..n).map(|k| if mask >> (n - 1 - k) & 1 == 1 { Side::Right } else { Side::Left }).collect())
        .collect()
}
