//! Detectors operating on the pulse/tone correlation matrix.
//!
//! Every receiver maximizes `Σ_u r[u][p(u)]` over some candidate set and
//! breaks exact ties towards the lexicographically smallest permutation
//! (equivalently the lowest rank).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::channel::{block_aggregate, CorrelationMatrix, SquareMatrix};
use crate::error::{Error, Result};
use crate::perm::{Permutation, MAX_M};
use crate::subsets::{SubsetSpec, Variant};

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub perm: Permutation,
    pub score: f64,
}

/// A decision plus the work it took to reach it.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub perm: Permutation,
    pub score: f64,
    /// Assignment problems solved (ranked enumeration) or 1 for a plain Hungarian solve.
    pub subproblems: u32,
    /// Extra candidate scores evaluated after the first assignment.
    pub extra_scores: u32,
    /// Set when Algorithm 1 found no in-subset neighbor and fell back to brute force.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDetection {
    /// Winning permutation of the `M/k` blocks.
    pub blocks: Vec<usize>,
    /// The same decision expanded to `M` tones.
    pub perm: Permutation,
    pub score: f64,
}

pub fn score(r: &CorrelationMatrix, p: &Permutation) -> f64 {
    assert_eq!(r.n(), p.m(), "matrix and permutation sizes differ");
    (0..p.m()).map(|u| r[(u, p.get(u))]).sum()
}

/// Maximum-weight assignment with the lexicographic tie-break.
pub fn hungarian_max(r: &SquareMatrix) -> Result<Assignment> {
    let cols = assign_max(r)?;
    let perm = Permutation::new(&cols)?;
    Ok(Assignment {
        score: score(r, &perm),
        perm,
    })
}

/// Core solver on any `n ≥ 1`; returns the chosen column of each row.
pub(crate) fn assign_max(r: &SquareMatrix) -> Result<Vec<usize>> {
    let n = r.n();
    if n == 0 || n > MAX_M {
        return Err(Error::UnsupportedLength(n));
    }
    if !r.is_finite() {
        return Err(Error::InvalidParameter("non-finite correlation entry".into()));
    }
    let cost = |i: usize, j: usize| -r[(i, j)];
    let (row_of_col, u, v) = shortest_augmenting_path(n, cost);
    let mut cols = vec![0; n];
    for j in 0..n {
        cols[row_of_col[j]] = j;
    }
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| r[(i, j)].abs())
        .fold(1.0, f64::max);
    let eps = 1e-12 * scale * n as f64;
    let mut tight = [[false; MAX_M]; MAX_M];
    let mut n_tight = 0;
    for i in 0..n {
        for j in 0..n {
            if (cost(i, j) - u[i] - v[j]).abs() <= eps {
                tight[i][j] = true;
                n_tight += 1;
            }
        }
    }
    if n_tight > n {
        if let Some(lex) = lex_smallest_perfect_matching(n, &tight) {
            cols = lex;
        }
    }
    Ok(cols)
}

/// Jonker–Volgenant style O(n³) minimization. Returns the row assigned to
/// each column and the row/column dual potentials.
fn shortest_augmenting_path(n: usize, cost: impl Fn(usize, usize) -> f64) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // 1-based arrays, index 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let row_of_col = (1..=n).map(|j| p[j] - 1).collect();
    (row_of_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Greedy row-by-row choice of the smallest column that still admits a
/// perfect matching on the remaining tight edges.
fn lex_smallest_perfect_matching(n: usize, tight: &[[bool; MAX_M]; MAX_M]) -> Option<Vec<usize>> {
    let mut cols = Vec::with_capacity(n);
    let mut used = [false; MAX_M];
    for row in 0..n {
        let pick = (0..n).find(|&c| {
            if used[c] || !tight[row][c] {
                return false;
            }
            used[c] = true;
            let ok = has_perfect_matching(row + 1, n, tight, &used);
            used[c] = false;
            ok
        })?;
        used[pick] = true;
        cols.push(pick);
    }
    Some(cols)
}

fn has_perfect_matching(first_row: usize, n: usize, tight: &[[bool; MAX_M]; MAX_M], used: &[bool; MAX_M]) -> bool {
    fn augment(
        row: usize,
        n: usize,
        tight: &[[bool; MAX_M]; MAX_M],
        blocked: &[bool; MAX_M],
        seen: &mut [bool; MAX_M],
        owner: &mut [Option<usize>; MAX_M],
    ) -> bool {
        for c in 0..n {
            if tight[row][c] && !blocked[c] && !seen[c] {
                seen[c] = true;
                if owner[c].is_none_or(|o| augment(o, n, tight, blocked, seen, owner)) {
                    owner[c] = Some(row);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = [None; MAX_M];
    (first_row..n).all(|row| {
        let mut seen = [false; MAX_M];
        augment(row, n, tight, used, &mut seen, &mut owner)
    })
}

/// Better score wins; equal scores go to the lower rank (lexicographically smaller).
#[inline]
fn better(a_score: f64, a: &Permutation, b_score: f64, b: &Permutation) -> bool {
    a_score > b_score || (a_score == b_score && a < b)
}

/// Exhaustive maximization over the subset members.
pub fn ml_bruteforce(r: &CorrelationMatrix, spec: &SubsetSpec) -> Assignment {
    let mut best: Option<Assignment> = None;
    for p in spec.enumerate() {
        let s = score(r, &p);
        if best.as_ref().is_none_or(|b| better(s, &p, b.score, &b.perm)) {
            best = Some(Assignment { perm: p, score: s });
        }
    }
    best.expect("subsets are non-empty")
}

/// Subproblem of the ranked enumeration: assignments honoring `forced`
/// (row → column) and avoiding every edge in `forbidden`.
#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    cols: Vec<usize>,
    forced: Vec<Option<usize>>,
    forbidden: Vec<u16>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.cols.cmp(&self.cols))
    }
}

fn solve_constrained(
    r: &SquareMatrix,
    forced: &[Option<usize>],
    forbidden: &[u16],
    penalty: f64,
) -> Result<Option<(Vec<usize>, f64)>> {
    let n = r.n();
    let mut col_forced_row = [None; MAX_M];
    for (row, c) in forced.iter().enumerate() {
        if let Some(c) = c {
            col_forced_row[*c] = Some(row);
        }
    }
    let allowed = |i: usize, j: usize| -> bool {
        if forbidden[i] & (1 << j) != 0 {
            return false;
        }
        match (forced[i], col_forced_row[j]) {
            (Some(c), _) => c == j,
            (None, Some(_)) => false,
            (None, None) => true,
        }
    };
    let m = SquareMatrix::from_fn(n, |i, j| if allowed(i, j) { r[(i, j)] } else { r[(i, j)] - penalty });
    let cols = assign_max(&m)?;
    if (0..n).any(|i| !allowed(i, cols[i])) {
        return Ok(None);
    }
    let s = (0..n).map(|i| r[(i, cols[i])]).sum();
    Ok(Some((cols, s)))
}

/// Exact maximum-likelihood decision over `spec` by ranked assignment.
pub fn ml_exact(r: &CorrelationMatrix, spec: &SubsetSpec) -> Result<Permutation> {
    ml_exact_with_budget(r, spec, default_budget(spec)).map(|d| d.perm)
}

pub fn default_budget(spec: &SubsetSpec) -> u64 {
    spec.size().saturating_mul(10)
}

/// Assignments are produced best-first by Murty partitioning; the search
/// stops once no open subproblem can beat the best subset member found.
pub fn ml_exact_with_budget(r: &CorrelationMatrix, spec: &SubsetSpec, budget: u64) -> Result<Detection> {
    let n = r.n();
    if n != spec.m() {
        return Err(Error::LengthMismatch(n, spec.m()));
    }
    let first = hungarian_max(r)?;
    if spec.contains(&first.perm) {
        return Ok(Detection {
            perm: first.perm,
            score: first.score,
            subproblems: 1,
            extra_scores: 0,
            fallback: false,
        });
    }
    let (lo, hi) = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| r[(i, j)])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let penalty = (hi - lo + 1.0) * (n as f64 + 1.0);
    let slack = 1e-9 * (hi.abs().max(lo.abs()).max(1.0)) * n as f64;

    let mut solved: u64 = 1;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: first.score,
        cols: first.perm.to_vec(),
        forced: vec![None; n],
        forbidden: vec![0; n],
    });
    let mut best: Option<Assignment> = None;
    while let Some(node) = heap.pop() {
        if let Some(b) = &best {
            if node.bound < b.score - slack {
                break;
            }
        }
        let perm = Permutation::new(&node.cols)?;
        if spec.contains(&perm) {
            let s = score(r, &perm);
            if best.as_ref().is_none_or(|b| better(s, &perm, b.score, &b.perm)) {
                best = Some(Assignment { perm, score: s });
            }
        }
        // Children: keep the first i free edges of this solution, ban the next.
        let mut forced = node.forced.clone();
        for row in 0..n {
            if node.forced[row].is_some() {
                continue;
            }
            let mut forbidden = node.forbidden.clone();
            forbidden[row] |= 1 << node.cols[row];
            if solved >= budget {
                return Err(Error::BudgetExceeded {
                    what: "ranked assignment subproblems",
                    needed: solved + 1,
                    budget,
                });
            }
            solved += 1;
            if let Some((cols, s)) = solve_constrained(r, &forced, &forbidden, penalty)? {
                heap.push(Node {
                    bound: s,
                    cols,
                    forced: forced.clone(),
                    forbidden,
                });
            }
            forced[row] = Some(node.cols[row]);
        }
    }
    let best = best.ok_or_else(|| Error::NotInSubset("no subset member reachable".into()))?;
    Ok(Detection {
        perm: best.perm,
        score: best.score,
        subproblems: solved as u32,
        extra_scores: 0,
        fallback: false,
    })
}

/// Sub-optimal receiver: Hungarian decision, repaired by searching its
/// distance-≤`d` neighbors inside the subset when it falls outside.
pub fn algorithm1(r: &CorrelationMatrix, spec: &SubsetSpec, d: usize) -> Result<Permutation> {
    algorithm1_detailed(r, spec, d).map(|x| x.perm)
}

pub fn algorithm1_detailed(r: &CorrelationMatrix, spec: &SubsetSpec, d: usize) -> Result<Detection> {
    if !(2..=3).contains(&d) {
        return Err(Error::UnsupportedDistance(d));
    }
    if r.n() != spec.m() {
        return Err(Error::LengthMismatch(r.n(), spec.m()));
    }
    let p0 = hungarian_max(r)?;
    if spec.contains(&p0.perm) {
        return Ok(Detection {
            perm: p0.perm,
            score: p0.score,
            subproblems: 1,
            extra_scores: 0,
            fallback: false,
        });
    }
    let mut best: Option<Assignment> = None;
    let mut scored = 0u32;
    for dist in 2..=d {
        for q in p0.perm.neighbors_at_distance(dist)? {
            if !spec.contains(&q) {
                continue;
            }
            scored += 1;
            let s = score(r, &q);
            if best.as_ref().is_none_or(|b| better(s, &q, b.score, &b.perm)) {
                best = Some(Assignment { perm: q, score: s });
            }
        }
    }
    let (best, fallback) = match best {
        Some(b) => (b, false),
        None => {
            scored += spec.size() as u32;
            (ml_bruteforce(r, spec), true)
        }
    };
    Ok(Detection {
        perm: best.perm,
        score: best.score,
        subproblems: 1,
        extra_scores: scored,
        fallback,
    })
}

/// Exact ML for the block subset: Hungarian on the `M/k` aggregated matrix.
pub fn block_receive(r: &CorrelationMatrix, k: usize) -> Result<BlockDetection> {
    let agg = block_aggregate(r, k)?;
    let blocks = assign_max(&agg)?;
    let score = (0..blocks.len()).map(|u| agg[(u, blocks[u])]).sum();
    let perm = crate::subsets::expand_block_perm(&blocks, k)?;
    Ok(BlockDetection { blocks, perm, score })
}

/// Exact ML decision for any subset, picking the cheapest exact method.
pub fn ml_detect(r: &CorrelationMatrix, spec: &SubsetSpec) -> Result<Detection> {
    match spec.variant() {
        Variant::Universal => {
            let a = hungarian_max(r)?;
            Ok(Detection {
                perm: a.perm,
                score: a.score,
                subproblems: 1,
                extra_scores: 0,
                fallback: false,
            })
        }
        Variant::Block { k } => {
            let b = block_receive(r, *k)?;
            Ok(Detection {
                score: score(r, &b.perm),
                perm: b.perm,
                subproblems: 1,
                extra_scores: 0,
                fallback: false,
            })
        }
        _ => match ml_exact_with_budget(r, spec, default_budget(spec)) {
            Ok(d) => Ok(d),
            Err(Error::BudgetExceeded { needed, .. }) => {
                let a = ml_bruteforce(r, spec);
                Ok(Detection {
                    perm: a.perm,
                    score: a.score,
                    subproblems: needed as u32,
                    extra_scores: spec.size() as u32,
                    fallback: true,
                })
            }
            Err(e) => Err(e),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{synth_correlation_matrix, ChannelRealization};
    use crate::perm::all_permutations;
    use crate::radar::FrequencyMapping;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> SquareMatrix {
        SquareMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn brute_max(r: &SquareMatrix) -> Assignment {
        let mut best: Option<Assignment> = None;
        for p in all_permutations(r.n()).unwrap() {
            let s = score(r, &p);
            if best.as_ref().is_none_or(|b| s > b.score) {
                best = Some(Assignment { perm: p, score: s });
            }
        }
        best.unwrap()
    }

    fn noisy(spec: &SubsetSpec, n0: f64, rng: &mut ChaCha8Rng) -> (Permutation, SquareMatrix) {
        let sym = rng.random_range(0..spec.size());
        let p = spec.encode(sym).unwrap();
        let ch = ChannelRealization::new(vec![Complex64::new(1.0, 0.0)]);
        (p, synth_correlation_matrix(&p, &ch, 1.0, n0, rng))
    }

    #[test]
    fn two_by_two() {
        let id = SquareMatrix::identity(2);
        let a = hungarian_max(&id).unwrap();
        assert_eq!(a.perm.to_vec(), vec![0, 1]);
        assert_eq!(a.score, 2.0);
        let sw = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(hungarian_max(&sw).unwrap().perm.to_vec(), vec![1, 0]);
    }

    #[test]
    fn score_shift_by_row_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = random_matrix(5, &mut rng);
        let mut shifted = r.clone();
        for j in 0..5 {
            shifted[(2, j)] += 0.75;
        }
        for p in all_permutations(5).unwrap().take(50) {
            assert!((score(&shifted, &p) - score(&r, &p) - 0.75).abs() < 1e-12);
        }
        assert_eq!(
            score(&SquareMatrix::identity(4), &Permutation::identity(4).unwrap()),
            4.0
        );
    }

    #[test]
    fn hungarian_matches_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..=7 {
            for _ in 0..1000 {
                let r = random_matrix(n, &mut rng);
                let h = hungarian_max(&r).unwrap();
                let b = brute_max(&r);
                assert!((h.score - b.score).abs() < 1e-12, "n={n}");
                assert!((h.score - score(&r, &h.perm)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ties_go_to_lowest_rank() {
        assert_eq!(hungarian_max(&SquareMatrix::zeros(5)).unwrap().perm.rank(), 0);
        let ones = SquareMatrix::from_fn(4, |_, _| 1.0);
        assert_eq!(hungarian_max(&ones).unwrap().perm.rank(), 0);
        // Integer matrices with many ties: compare to the first optimum in lex order.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..=6 {
            for _ in 0..300 {
                let r = SquareMatrix::from_fn(n, |_, _| rng.random_range(0..3) as f64);
                let h = hungarian_max(&r).unwrap();
                let b = brute_max(&r);
                assert_eq!(h.perm, b.perm, "{:?}", r.to_rows());
            }
        }
    }

    #[test]
    fn bruteforce_universal_agrees_with_hungarian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = SubsetSpec::universal(5).unwrap();
        for _ in 0..1000 {
            let r = random_matrix(5, &mut rng);
            assert_eq!(ml_bruteforce(&r, &spec).perm, hungarian_max(&r).unwrap().perm);
        }
    }

    #[test]
    fn noiseless_decisions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let map = FrequencyMapping::identity(6).unwrap();
        let specs = [
            SubsetSpec::universal(6).unwrap(),
            SubsetSpec::alternating(6).unwrap(),
            SubsetSpec::block(6, 2).unwrap(),
            SubsetSpec::block(6, 3).unwrap(),
            SubsetSpec::radar_ranked(6, &map, 360).unwrap(),
        ];
        for spec in &specs {
            for _ in 0..50 {
                let (p, r) = noisy(spec, 0.0, &mut rng);
                assert_eq!(ml_bruteforce(&r, spec).perm, p);
                let ex = ml_exact_with_budget(&r, spec, default_budget(spec)).unwrap();
                assert_eq!(ex.perm, p);
                assert!(ex.subproblems <= 2 || !matches!(spec.variant(), Variant::Alternating));
                assert_eq!(algorithm1(&r, spec, 2).unwrap(), p);
                assert_eq!(ml_detect(&r, spec).unwrap().perm, p);
                if let Some(k) = spec.block_k() {
                    assert_eq!(block_receive(&r, k).unwrap().perm, p);
                }
            }
        }
    }

    #[test]
    fn alternating_bruteforce_has_positive_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = SubsetSpec::alternating(5).unwrap();
        for _ in 0..200 {
            let r = random_matrix(5, &mut rng);
            assert_eq!(ml_bruteforce(&r, &spec).perm.sign(), 1);
        }
    }

    #[test]
    fn exact_equals_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let map = FrequencyMapping::identity(6).unwrap();
        let specs = [
            SubsetSpec::alternating(6).unwrap(),
            SubsetSpec::radar_ranked(6, &map, 360).unwrap(),
            SubsetSpec::explicit(6, vec![3, 100, 101, 250, 719]).unwrap(),
            SubsetSpec::block(6, 2).unwrap(),
            SubsetSpec::universal(6).unwrap(),
        ];
        for spec in &specs {
            for i in 0..2000 {
                let r = if i % 2 == 0 {
                    random_matrix(6, &mut rng)
                } else {
                    noisy(spec, 0.5, &mut rng).1
                };
                let b = ml_bruteforce(&r, spec);
                let e = ml_exact_with_budget(&r, spec, u64::MAX).unwrap();
                assert_eq!(e.perm, b.perm, "{}", spec.kind_name());
                assert!((e.score - b.score).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_handles_ties() {
        let spec = SubsetSpec::alternating(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let r = SquareMatrix::from_fn(4, |_, _| rng.random_range(0..2) as f64);
            let b = ml_bruteforce(&r, &spec);
            assert_eq!(ml_exact(&r, &spec).unwrap(), b.perm);
        }
    }

    #[test]
    fn exact_universal_single_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spec = SubsetSpec::universal(7).unwrap();
        let r = random_matrix(7, &mut rng);
        assert_eq!(ml_exact_with_budget(&r, &spec, 10).unwrap().subproblems, 1);
    }

    #[test]
    fn exact_budget_is_enforced() {
        let spec = SubsetSpec::explicit(6, vec![719]).unwrap();
        // Identity strongly preferred; the only member is its reversal.
        let r = SquareMatrix::identity(6);
        assert!(matches!(
            ml_exact_with_budget(&r, &spec, 10),
            Err(Error::BudgetExceeded { .. })
        ));
        let d = ml_detect(&r, &spec).unwrap();
        assert!(d.fallback);
        assert_eq!(d.perm.rank(), 719);
    }

    #[test]
    fn algorithm1_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = SubsetSpec::alternating(6).unwrap();
        for _ in 0..2000 {
            let r = random_matrix(6, &mut rng);
            let a = algorithm1_detailed(&r, &spec, 2).unwrap();
            let e = ml_exact_with_budget(&r, &spec, u64::MAX).unwrap();
            assert!(spec.contains(&a.perm));
            assert!(a.score <= e.score + 1e-12);
            let p0 = hungarian_max(&r).unwrap().perm;
            if spec.contains(&p0) {
                assert_eq!(a.extra_scores, 0);
                assert_eq!(a.perm, p0);
            } else {
                assert_eq!(a.extra_scores, 15);
            }
            assert!(!a.fallback);
            let a3 = algorithm1_detailed(&r, &spec, 3).unwrap();
            assert!(a3.score >= a.score);
        }
        assert!(algorithm1(&SquareMatrix::identity(6), &spec, 4).is_err());
    }

    #[test]
    fn algorithm1_falls_back_on_sparse_subsets() {
        let spec = SubsetSpec::explicit(5, vec![119]).unwrap();
        let d = algorithm1_detailed(&SquareMatrix::identity(5), &spec, 2).unwrap();
        assert!(d.fallback);
        assert_eq!(d.perm.rank(), 119);
    }

    #[test]
    fn block_receiver_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for k in [2, 3] {
            let spec = SubsetSpec::block(6, k).unwrap();
            for _ in 0..10_000 {
                let r = random_matrix(6, &mut rng);
                let b = block_receive(&r, k).unwrap();
                let ml = ml_bruteforce(&r, &spec);
                assert_eq!(b.perm, ml.perm);
                assert!((b.score - ml.score).abs() < 1e-12);
            }
        }
        let single = block_receive(&random_matrix(6, &mut rng), 6).unwrap();
        assert_eq!(single.blocks, vec![0]);
        assert_eq!(single.perm, Permutation::identity(6).unwrap());
        assert!(block_receive(&SquareMatrix::identity(6), 4).is_err());
    }

    #[test]
    fn receivers_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = SubsetSpec::alternating(7).unwrap();
        let r = random_matrix(7, &mut rng);
        assert_eq!(ml_exact(&r, &spec).unwrap(), ml_exact(&r, &spec).unwrap());
        assert_eq!(algorithm1(&r, &spec, 2).unwrap(), algorithm1(&r, &spec, 2).unwrap());
    }
}
