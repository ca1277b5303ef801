//! Bi-non-crossing partitions.
//!
//! Positions are 0-based inside the library and 1-based in every printed
//! or parsed form. A shape `χ` tags each position as left or right; the
//! permutation `s_χ` lists left positions ascending and then right positions
//! descending, and `≺_χ` is the order it induces.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest partition size the enumerators accept unless told otherwise.
pub const DEFAULT_ENUM_BOUND: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "l")]
    Left,
    #[serde(rename = "r")]
    Right,
}

impl Side {
    pub fn letter(self) -> char {
        match self {
            Side::Left => 'l',
            Side::Right => 'r',
        }
    }

    pub fn parse(c: char) -> Option<Side> {
        match c {
            'l' | 'L' | 'ℓ' => Some(Side::Left),
            'r' | 'R' => Some(Side::Right),
            _ => None,
        }
    }
}

/// A map `{1..n} → {ℓ, r}` together with its derived order.
#[derive(Clone, Debug)]
pub struct ChiShape {
    tags: Vec<Side>,
    order: Vec<usize>,
    rank: Vec<usize>,
    split: Option<(usize, usize)>,
}

impl PartialEq for ChiShape {
    fn eq(&self, other: &Self) -> bool {
        self.tags == other.tags
    }
}

impl Eq for ChiShape {}

impl Hash for ChiShape {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.tags.hash(state);
    }
}

impl ChiShape {
    pub fn new(tags: Vec<Side>) -> Self {
        let mut order: Vec<usize> = (0..tags.len()).filter(|&k| tags[k] == Side::Left).collect();
        order.extend((0..tags.len()).rev().filter(|&k| tags[k] == Side::Right));
        let mut rank = vec![0; tags.len()];
        for (t, &k) in order.iter().enumerate() {
            rank[k] = t;
        }
        ChiShape { tags, order, rank, split: None }
    }

    /// Parse a word such as `"llrlr"`.
    pub fn parse(word: &str) -> Result<Self> {
        let tags: Option<Vec<Side>> = word.trim().chars().map(Side::parse).collect();
        match tags {
            Some(t) if !t.is_empty() => Ok(ChiShape::new(t)),
            _ => Err(Error::BadShape(word.to_string())),
        }
    }

    /// `χ_{n,m} = ℓ^n r^m`, labelled `1_ℓ..n_ℓ, 1_r..m_r`.
    pub fn two_sided(n: usize, m: usize) -> Self {
        let mut tags = vec![Side::Left; n];
        tags.extend(std::iter::repeat(Side::Right).take(m));
        let mut s = ChiShape::new(tags);
        s.split = Some((n, m));
        s
    }

    pub fn uniform(side: Side, n: usize) -> Self {
        ChiShape::new(vec![side; n])
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[Side] {
        &self.tags
    }

    pub fn tag(&self, k: usize) -> Side {
        self.tags[k]
    }

    /// `s_χ` as 0-based positions: `schi()[t]` is the position of rank `t`.
    pub fn schi(&self) -> &[usize] {
        &self.order
    }

    /// Rank of position `k` in `≺_χ`.
    pub fn rank(&self, k: usize) -> usize {
        self.rank[k]
    }

    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.rank[a] < self.rank[b]
    }

    pub fn split(&self) -> Option<(usize, usize)> {
        self.split
    }

    /// The shape seen by the positions `pos` (ascending).
    pub fn restrict(&self, pos: &[usize]) -> ChiShape {
        ChiShape::new(pos.iter().map(|&k| self.tags[k]).collect())
    }

    pub fn label(&self, k: usize) -> String {
        match self.split {
            Some((n, _)) if k < n => format!("{}_l", k + 1),
            Some((n, _)) => format!("{}_r", k - n + 1),
            None => format!("{}", k + 1),
        }
    }

    /// Parse a 1-based label, either plain (`"4"`) or two-sided (`"2_r"`).
    pub fn parse_label(&self, s: &str) -> Result<usize> {
        let bad = || Error::MalformedPartition(format!("bad position label {s:?}"));
        let (num, side) = match s.split_once('_') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let v: usize = num.trim().parse().map_err(|_| bad())?;
        if v == 0 {
            return Err(bad());
        }
        let k = match (side, self.split) {
            (None, _) => v - 1,
            (Some(t), Some((n, _))) => match Side::parse(t.chars().next().ok_or_else(bad)?) {
                Some(Side::Left) => v - 1,
                Some(Side::Right) => n + v - 1,
                None => return Err(bad()),
            },
            (Some(t), None) => {
                // two-sided labels on a shape of the form ℓ^n r^m
                let n = self.tags.iter().take_while(|&&s| s == Side::Left).count();
                match Side::parse(t.chars().next().ok_or_else(bad)?) {
                    Some(Side::Left) => v - 1,
                    Some(Side::Right) => n + v - 1,
                    None => return Err(bad()),
                }
            }
        };
        if k >= self.len() {
            return Err(bad());
        }
        Ok(k)
    }
}

impl fmt::Display for ChiShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tags {
            write!(f, "{}", t.letter())?;
        }
        Ok(())
    }
}

/// `s_χ` as a 1-based permutation, e.g. `(1,2,3,6,5,4)`.
pub fn schi_permutation(shape: &ChiShape) -> Vec<usize> {
    shape.schi().iter().map(|k| k + 1).collect()
}

/// True if the sequence of block ids (listed in the order under test) is non-crossing.
pub fn is_noncrossing_sequence(ids: &[usize]) -> bool {
    let mut last: HashMap<usize, usize> = HashMap::new();
    for (t, &b) in ids.iter().enumerate() {
        last.insert(b, t);
    }
    let mut seen: HashMap<usize, bool> = HashMap::new();
    let mut stack: Vec<usize> = Vec::new();
    for (t, &b) in ids.iter().enumerate() {
        if seen.contains_key(&b) {
            if stack.last() != Some(&b) {
                return false;
            }
        } else {
            seen.insert(b, true);
            stack.push(b);
        }
        if last[&b] == t {
            stack.pop();
        }
    }
    true
}

fn check_partition(n: usize, blocks: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut owner = vec![usize::MAX; n];
    for (i, b) in blocks.iter().enumerate() {
        if b.is_empty() {
            return Err(Error::MalformedPartition("empty block".into()));
        }
        for &k in b {
            if k >= n {
                return Err(Error::MalformedPartition(format!("element {} out of range 1..{}", k + 1, n)));
            }
            if owner[k] != usize::MAX {
                return Err(Error::MalformedPartition(format!("element {} appears twice", k + 1)));
            }
            owner[k] = i;
        }
    }
    if let Some(k) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::MalformedPartition(format!("element {} is missing", k + 1)));
    }
    Ok(owner)
}

fn bnc_owner(shape: &ChiShape, owner: &[usize]) -> bool {
    let ids: Vec<usize> = shape.schi().iter().map(|&k| owner[k]).collect();
    is_noncrossing_sequence(&ids)
}

/// Is the set partition `blocks` (0-based) bi-non-crossing for `shape`?
pub fn is_bnc(shape: &ChiShape, blocks: &[Vec<usize>]) -> Result<bool> {
    let owner = check_partition(shape.len(), blocks)?;
    Ok(bnc_owner(shape, &owner))
}

fn canonical(shape: &ChiShape, mut blocks: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for b in blocks.iter_mut() {
        b.sort_by_key(|&k| shape.rank(k));
    }
    blocks.sort_by_key(|b| shape.rank(b[0]));
    blocks
}

/// A bi-non-crossing partition, stored canonically: blocks sorted by `≺_χ`
/// internally and ordered by their `≺_χ`-minimum.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BncPartition {
    shape: ChiShape,
    blocks: Vec<Vec<usize>>,
}

impl BncPartition {
    pub fn new(shape: ChiShape, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if !is_bnc(&shape, &blocks)? {
            return Err(Error::MalformedPartition("partition is not bi-non-crossing".into()));
        }
        let blocks = canonical(&shape, blocks);
        Ok(BncPartition { shape, blocks })
    }

    fn trusted(shape: ChiShape, blocks: Vec<Vec<usize>>) -> Self {
        let blocks = canonical(&shape, blocks);
        BncPartition { shape, blocks }
    }

    /// Build from 1-based blocks.
    pub fn from_one_based(shape: ChiShape, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut b0 = Vec::with_capacity(blocks.len());
        for b in blocks {
            let mut v = Vec::with_capacity(b.len());
            for &k in b {
                if k == 0 {
                    return Err(Error::MalformedPartition("positions are 1-based".into()));
                }
                v.push(k - 1);
            }
            b0.push(v);
        }
        BncPartition::new(shape, b0)
    }

    /// Parse `"{1,4},{2,5},{3,6}"` or `"1 4|2 5|3 6"`, with plain or two-sided labels.
    pub fn parse(shape: ChiShape, text: &str) -> Result<Self> {
        let cleaned = text.replace("},{", "|").replace(['{', '}'], "");
        let mut blocks = Vec::new();
        for chunk in cleaned.split('|') {
            let mut b = Vec::new();
            for tok in chunk.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
                b.push(shape.parse_label(tok)?);
            }
            if !b.is_empty() {
                blocks.push(b);
            }
        }
        BncPartition::new(shape, blocks)
    }

    pub fn zero(shape: &ChiShape) -> Self {
        BncPartition::trusted(shape.clone(), (0..shape.len()).map(|k| vec![k]).collect())
    }

    pub fn one(shape: &ChiShape) -> Self {
        BncPartition::trusted(shape.clone(), vec![(0..shape.len()).collect()])
    }

    pub fn shape(&self) -> &ChiShape {
        &self.shape
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Block index of every position.
    pub fn owners(&self) -> Vec<usize> {
        let mut o = vec![0; self.len()];
        for (i, b) in self.blocks.iter().enumerate() {
            for &k in b {
                o[k] = i;
            }
        }
        o
    }

    pub fn same_block(&self, a: usize, b: usize) -> bool {
        self.blocks.iter().any(|blk| blk.contains(&a) && blk.contains(&b))
    }

    pub fn block_containing(&self, k: usize) -> &[usize] {
        self.blocks.iter().find(|b| b.contains(&k)).expect("every position lies in a block")
    }

    pub fn is_one(&self) -> bool {
        self.blocks.len() == 1
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!("{} vs {}", self.shape, other.shape)));
        }
        Ok(())
    }

    /// `self ≤ other` in refinement order.
    pub fn refines(&self, other: &Self) -> Result<bool> {
        self.same_shape(other)?;
        let o = other.owners();
        Ok(self.blocks.iter().all(|b| b.iter().all(|&k| o[k] == o[b[0]])))
    }

    /// Least upper bound in `BNC(χ)`.
    pub fn join(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let n = self.len();
        let mut uf = UnionFind::new(n);
        for b in self.blocks.iter().chain(other.blocks.iter()) {
            for w in b.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        loop {
            let blocks = uf.blocks();
            match first_crossing(&self.shape, &blocks) {
                None => return Ok(BncPartition::trusted(self.shape.clone(), blocks)),
                Some((a, b)) => uf.union(a, b),
            }
        }
    }

    /// Greatest lower bound: the common refinement.
    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let o = other.owners();
        let mut blocks = Vec::new();
        for b in &self.blocks {
            let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
            for &k in b {
                match groups.iter_mut().find(|(g, _)| *g == o[k]) {
                    Some((_, v)) => v.push(k),
                    None => groups.push((o[k], vec![k])),
                }
            }
            blocks.extend(groups.into_iter().map(|(_, v)| v));
        }
        Ok(BncPartition::trusted(self.shape.clone(), blocks))
    }

    /// The non-crossing partition `s_χ⁻¹·π` on `0..n` (standard order).
    pub fn pull_back(&self) -> Vec<Vec<usize>> {
        let mut blocks: Vec<Vec<usize>> =
            self.blocks.iter().map(|b| b.iter().map(|&k| self.shape.rank(k)).collect()).collect();
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        blocks
    }

    /// `s_χ·ρ` for a non-crossing `ρ` on `0..n`.
    pub fn push_forward(shape: &ChiShape, nc: &[Vec<usize>]) -> Result<Self> {
        let blocks: Vec<Vec<usize>> = nc.iter().map(|b| b.iter().map(|&t| shape.schi()[t]).collect()).collect();
        BncPartition::new(shape.clone(), blocks)
    }

    /// 1-based blocks in canonical order.
    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(|b| b.iter().map(|k| k + 1).collect()).collect()
    }

    /// Blocks written with the shape's position labels.
    pub fn labelled(&self) -> Vec<Vec<String>> {
        self.blocks.iter().map(|b| b.iter().map(|&k| self.shape.label(k)).collect()).collect()
    }
}

impl fmt::Display for BncPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.labelled().iter().map(|b| format!("{{{}}}", b.join(","))).collect();
        write!(f, "{}", parts.join(","))
    }
}

fn first_crossing(shape: &ChiShape, blocks: &[Vec<usize>]) -> Option<(usize, usize)> {
    // returns representatives of two crossing blocks
    let n = shape.len();
    let mut owner = vec![0; n];
    for (i, b) in blocks.iter().enumerate() {
        for &k in b {
            owner[k] = i;
        }
    }
    let ids: Vec<usize> = shape.schi().iter().map(|&k| owner[k]).collect();
    for a in 0..n {
        for b in a + 1..n {
            if ids[b] == ids[a] {
                continue;
            }
            for c in b + 1..n {
                if ids[c] != ids[a] {
                    continue;
                }
                for d in c + 1..n {
                    if ids[d] == ids[b] {
                        return Some((shape.schi()[a], shape.schi()[b]));
                    }
                }
            }
        }
    }
    None
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    fn blocks(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut map: Vec<Vec<usize>> = vec![Vec::new(); n];
        for k in 0..n {
            let r = self.find(k);
            map[r].push(k);
        }
        map.into_iter().filter(|b| !b.is_empty()).collect()
    }
}

type NcList = Arc<Vec<Vec<Vec<usize>>>>;

fn nc_cache() -> &'static Mutex<HashMap<usize, NcList>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, NcList>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// All non-crossing partitions of `0..n` in standard order, by first-block decomposition.
pub fn nc_partitions(n: usize) -> NcList {
    if let Some(v) = nc_cache().lock().unwrap().get(&n) {
        return v.clone();
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
    } else {
        // block of 0 is {0 = c_0 < c_1 < ... < c_k}; gaps and the tail are independent
        let mut stack: Vec<(Vec<usize>, Vec<Vec<usize>>)> = vec![(vec![0], Vec::new())];
        while let Some((block, inner)) = stack.pop() {
            let last = *block.last().unwrap();
            for tail in nc_partitions(n - last - 1).iter() {
                let mut p = Vec::with_capacity(1 + inner.len() + tail.len());
                p.push(block.clone());
                p.extend(inner.iter().cloned());
                p.extend(tail.iter().map(|b| b.iter().map(|&t| t + last + 1).collect::<Vec<_>>()));
                out.push(p);
            }
            for next in (last + 1..n).rev() {
                for gap in nc_partitions(next - last - 1).iter() {
                    let mut nb = block.clone();
                    nb.push(next);
                    let mut ni = inner.clone();
                    ni.extend(gap.iter().map(|b| b.iter().map(|&t| t + last + 1).collect::<Vec<_>>()));
                    stack.push((nb, ni));
                }
            }
        }
    }
    let arc = Arc::new(out);
    nc_cache().lock().unwrap().insert(n, arc.clone());
    arc
}

pub fn catalan(n: usize) -> u64 {
    let mut c: u64 = 1;
    for k in 0..n as u64 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}

/// `BNC(χ)` by pushing `NC(n)` forward through `s_χ`.
pub fn enumerate_bnc(shape: &ChiShape) -> Result<Vec<BncPartition>> {
    enumerate_bnc_bounded(shape, DEFAULT_ENUM_BOUND)
}

pub fn enumerate_bnc_bounded(shape: &ChiShape, bound: usize) -> Result<Vec<BncPartition>> {
    if shape.len() > bound {
        return Err(Error::BoundExceeded { n: shape.len(), bound });
    }
    let nc = nc_partitions(shape.len());
    Ok(nc
        .iter()
        .map(|p| {
            let blocks = p.iter().map(|b| b.iter().map(|&t| shape.schi()[t]).collect()).collect();
            BncPartition::trusted(shape.clone(), blocks)
        })
        .collect())
}

/// Kreweras complement of a non-crossing partition of `0..n` (standard order).
///
/// Computed as the cycles of `π⁻¹γ` with `γ = (0 1 … n-1)`.
pub fn kreweras(blocks: &[Vec<usize>], n: usize) -> Result<Vec<Vec<usize>>> {
    let owner = check_partition(n, blocks)?;
    if !is_noncrossing_sequence(&owner) {
        return Err(Error::NotNonCrossing);
    }
    // π as a permutation: each block is a cycle in increasing order
    let mut pinv = vec![0; n];
    for b in blocks {
        let mut s = b.clone();
        s.sort_unstable();
        for i in 0..s.len() {
            let next = s[(i + 1) % s.len()];
            pinv[next] = s[i];
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cyc = Vec::new();
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            cyc.push(x);
            x = pinv[(x + 1) % n];
        }
        cyc.sort_unstable();
        out.push(cyc);
    }
    out.sort_by_key(|b| b[0]);
    Ok(out)
}

/// `σ_n = {1,2},{3,4},…,{2n-1,2n}` as 0-based blocks.
pub fn sigma_pairs(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|k| vec![2 * k, 2 * k + 1]).collect()
}

fn join_is_one(shape: &ChiShape, pi: &BncPartition, sigma: &[Vec<usize>]) -> bool {
    let s = BncPartition::trusted(shape.clone(), sigma.to_vec());
    pi.join(&s).map(|j| j.is_one()).unwrap_or(false)
}

/// `BNC'_ℓ(n)` (or `BNC'_r(n)`): partitions of `2n` points with `π ∨ σ_n = 1`,
/// `{1}` a block, and no block mixing odd and even positions.
///
/// Generated as `π' ∪ K(π')` over non-crossing `π'` on the odd positions
/// having `{1}` as a block.
pub fn enumerate_bnc_prime(side: Side, n: usize) -> Vec<BncPartition> {
    assert!(n >= 1, "n must be positive");
    let shape = ChiShape::uniform(side, 2 * n);
    let mut out = Vec::new();
    for rest in nc_partitions(n - 1).iter() {
        let mut odd: Vec<Vec<usize>> = vec![vec![0]];
        odd.extend(rest.iter().map(|b| b.iter().map(|&t| t + 1).collect::<Vec<_>>()));
        let even = kreweras(&odd, n).expect("odd part is non-crossing");
        let mut blocks: Vec<Vec<usize>> = odd.iter().map(|b| b.iter().map(|&i| 2 * i).collect()).collect();
        blocks.extend(even.iter().map(|b| b.iter().map(|&i| 2 * i + 1).collect::<Vec<_>>()));
        out.push(BncPartition::trusted(shape.clone(), blocks));
    }
    out
}

/// `BNC_vs(n, m)`: partitions of `χ_{n,m}` with no block mixing left and right.
pub fn enumerate_bnc_vs(n: usize, m: usize) -> Result<Vec<BncPartition>> {
    let shape = ChiShape::two_sided(n, m);
    Ok(enumerate_bnc(&shape)?
        .into_iter()
        .filter(|p| p.blocks().iter().all(|b| b.iter().all(|&k| shape.tag(k) == shape.tag(b[0]))))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TClass {
    E,
    O,
    OPrime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SClass {
    E,
    O,
    O0,
    OR,
    OL,
    OLR,
}

impl TClass {
    pub fn parse(s: &str) -> Option<TClass> {
        match s {
            "e" | "E" => Some(TClass::E),
            "o" | "O" => Some(TClass::O),
            "o'" | "o′" | "oprime" | "O'" => Some(TClass::OPrime),
            _ => None,
        }
    }
}

impl SClass {
    pub fn parse(s: &str) -> Option<SClass> {
        match s {
            "e" | "E" => Some(SClass::E),
            "o" | "O" => Some(SClass::O),
            "o,0" | "o0" => Some(SClass::O0),
            "o,r" | "or" => Some(SClass::OR),
            "o,l" | "ol" | "o,ℓ" => Some(SClass::OL),
            "o,lr" | "olr" | "o,ℓr" => Some(SClass::OLR),
            _ => None,
        }
    }
}

/// Parity (1-based index within its side) of a position of `χ_{n,m}`.
fn side_index(shape: &ChiShape, k: usize) -> usize {
    let (n, _) = shape.split().expect("two-sided shape");
    if k < n {
        k + 1
    } else {
        k - n + 1
    }
}

/// Shape `χ_{n,2m}` and `σ_{n,m}`: left singletons, right pairs `{2k-1,2k}`.
pub fn sigma_t(n: usize, m: usize) -> (ChiShape, Vec<Vec<usize>>) {
    let shape = ChiShape::two_sided(n, 2 * m);
    let mut s: Vec<Vec<usize>> = (0..n).map(|k| vec![k]).collect();
    s.extend((0..m).map(|k| vec![n + 2 * k, n + 2 * k + 1]));
    (shape, s)
}

/// Shape `χ_{n,2m+1}` and `σ'_{n,m}`: left singletons, `{1_r}`, right pairs `{2k,2k+1}`.
pub fn sigma_t_prime(n: usize, m: usize) -> (ChiShape, Vec<Vec<usize>>) {
    let shape = ChiShape::two_sided(n, 2 * m + 1);
    let mut s: Vec<Vec<usize>> = (0..n).map(|k| vec![k]).collect();
    s.push(vec![n]);
    s.extend((0..m).map(|k| vec![n + 2 * k + 1, n + 2 * k + 2]));
    (shape, s)
}

fn no_right_parity_mix(p: &BncPartition) -> bool {
    let shape = p.shape();
    p.blocks().iter().all(|b| {
        let par: Vec<usize> =
            b.iter().filter(|&&k| shape.tag(k) == Side::Right).map(|&k| side_index(shape, k) % 2).collect();
        par.windows(2).all(|w| w[0] == w[1])
    })
}

fn no_parity_mix(p: &BncPartition) -> bool {
    let shape = p.shape();
    p.blocks().iter().all(|b| {
        let par: Vec<usize> = b.iter().map(|&k| side_index(shape, k) % 2).collect();
        par.windows(2).all(|w| w[0] == w[1])
    })
}

/// `BNC_T(n,m)` classes `e` and `o` on `χ_{n,2m}`, and `BNC_T(n,m)'_o` on `χ_{n,2m+1}`.
pub fn enumerate_bnc_t(n: usize, m: usize, class: TClass) -> Result<Vec<BncPartition>> {
    let (shape, sigma) = match class {
        TClass::OPrime => sigma_t_prime(n, m),
        _ => sigma_t(n, m),
    };
    let all = enumerate_bnc(&shape)?;
    Ok(all
        .into_iter()
        .filter(|p| join_is_one(&shape, p, &sigma) && no_right_parity_mix(p))
        .filter(|p| {
            if n == 0 {
                return class == TClass::OPrime;
            }
            let top = p.block_containing(0);
            let rights: Vec<usize> =
                top.iter().filter(|&&k| shape.tag(k) == Side::Right).map(|&k| side_index(&shape, k)).collect();
            match class {
                TClass::E => rights.iter().any(|j| j % 2 == 0),
                TClass::O => rights.iter().any(|j| j % 2 == 1),
                TClass::OPrime => true,
            }
        })
        .collect())
}

/// Shape `χ_{2n,2m}` and `σ_{n,m}` with pairs on both sides.
pub fn sigma_s(n: usize, m: usize) -> (ChiShape, Vec<Vec<usize>>) {
    let shape = ChiShape::two_sided(2 * n, 2 * m);
    let mut s: Vec<Vec<usize>> = (0..n).map(|k| vec![2 * k, 2 * k + 1]).collect();
    s.extend((0..m).map(|k| vec![2 * n + 2 * k, 2 * n + 2 * k + 1]));
    (shape, s)
}

/// Shape `χ_{2n+1,2m+1}` and `σ'_{n,m}`: `{1_ℓ,1_r}`, left pairs `{2l,2l+1}`, right pairs `{2k,2k+1}`.
pub fn sigma_s_prime(n: usize, m: usize) -> (ChiShape, Vec<Vec<usize>>) {
    let nl = 2 * n + 1;
    let shape = ChiShape::two_sided(nl, 2 * m + 1);
    let mut s: Vec<Vec<usize>> = vec![vec![0, nl]];
    s.extend((0..n).map(|k| vec![2 * k + 1, 2 * k + 2]));
    s.extend((0..m).map(|k| vec![nl + 2 * k + 1, nl + 2 * k + 2]));
    (shape, s)
}

fn has_side(shape: &ChiShape, block: &[usize], side: Side) -> bool {
    block.iter().any(|&k| shape.tag(k) == side)
}

/// `BNC_S(n,m)` classes `e`/`o` on `χ_{2n,2m}`; the `o,·` subclasses on `χ_{2n+1,2m+1}`.
pub fn enumerate_bnc_s(n: usize, m: usize, class: SClass) -> Result<Vec<BncPartition>> {
    let prime = !matches!(class, SClass::E | SClass::O);
    let (shape, sigma) = if prime { sigma_s_prime(n, m) } else { sigma_s(n, m) };
    let all = enumerate_bnc(&shape)?;
    let nl = shape.split().unwrap().0;
    Ok(all
        .into_iter()
        .filter(|p| join_is_one(&shape, p, &sigma) && no_parity_mix(p))
        .filter(|p| match class {
            SClass::E | SClass::O => {
                let top = p
                    .blocks()
                    .iter()
                    .filter(|b| has_side(&shape, b, Side::Left) && has_side(&shape, b, Side::Right))
                    .min_by_key(|b| b.iter().filter(|&&k| k < nl).min().copied());
                match top {
                    None => false,
                    Some(b) => {
                        let even = side_index(&shape, b[0]) % 2 == 0;
                        even == (class == SClass::E)
                    }
                }
            }
            _ => {
                let vl = p.block_containing(0);
                let vr = p.block_containing(nl);
                let l_has_r = has_side(&shape, vl, Side::Right);
                let r_has_l = has_side(&shape, vr, Side::Left);
                let same = vl.contains(&nl);
                match class {
                    SClass::O0 => !l_has_r && !r_has_l,
                    SClass::OR => !l_has_r && r_has_l,
                    SClass::OL => l_has_r && !r_has_l,
                    SClass::OLR => same,
                    _ => unreachable!(),
                }
            }
        })
        .collect())
}

/// Grouping of `n` inner positions into `m` consecutive runs, one per outer position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HatEmbedding {
    outer: ChiShape,
    cuts: Vec<usize>,
    inner: ChiShape,
}

impl HatEmbedding {
    /// `cuts = (k(0)=0, k(1), …, k(m)=n)`, strictly increasing.
    pub fn new(outer: ChiShape, cuts: Vec<usize>) -> Result<Self> {
        if cuts.len() != outer.len() + 1 || cuts.first() != Some(&0) {
            return Err(Error::InconsistentCuts(format!(
                "need {} cuts starting at 0, got {:?}",
                outer.len() + 1,
                cuts
            )));
        }
        if cuts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InconsistentCuts(format!("cuts must increase strictly: {cuts:?}")));
        }
        let mut tags = Vec::new();
        for p in 0..outer.len() {
            for _ in cuts[p]..cuts[p + 1] {
                tags.push(outer.tag(p));
            }
        }
        Ok(HatEmbedding { outer, cuts, inner: ChiShape::new(tags) })
    }

    pub fn outer(&self) -> &ChiShape {
        &self.outer
    }

    pub fn inner(&self) -> &ChiShape {
        &self.inner
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    /// Inner positions that make up outer position `p`.
    pub fn group(&self, p: usize) -> std::ops::Range<usize> {
        self.cuts[p]..self.cuts[p + 1]
    }

    /// `π̂`: each outer node replaced by its run of inner nodes.
    pub fn embed(&self, pi: &BncPartition) -> Result<BncPartition> {
        if pi.shape() != &self.outer {
            return Err(Error::ShapeMismatch(format!("{} vs {}", pi.shape(), self.outer)));
        }
        let blocks = pi.blocks().iter().map(|b| b.iter().flat_map(|&p| self.group(p)).collect()).collect();
        BncPartition::new(self.inner.clone(), blocks)
    }

    /// `0̂_χ`.
    pub fn zero_hat(&self) -> BncPartition {
        self.embed(&BncPartition::zero(&self.outer)).expect("groups are intervals")
    }
}

/// Convenience for [`HatEmbedding::embed`].
pub fn hat_embed(emb: &HatEmbedding, pi: &BncPartition) -> Result<BncPartition> {
    emb.embed(pi)
}
