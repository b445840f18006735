//! Matroid and multi-knapsack abstractions over facility ground sets, with
//! the separation and surrogate-minimization oracles the rounding and
//! solve-or-cut algorithms rely on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ground sets are small enough at desk scale to enumerate as bitmasks.
pub const EXPLICIT_GROUND_LIMIT: usize = 20;

#[derive(Debug, Error)]
pub enum MatroidError {
    #[error("explicit matroid ground set {0} exceeds limit {EXPLICIT_GROUND_LIMIT}")]
    GroundTooLarge(usize),
    #[error("explicit matroid validation failed: {0}")]
    NotAMatroid(String),
    #[error("knapsack DP table size {0} exceeds cap {1}")]
    TableCapExceeded(u128, u128),
    #[error("{0}")]
    Invalid(String),
}

/// A matroid over facility indices `0..ground`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Matroid {
    /// Independent sets are those of size at most `k`.
    Uniform { ground: usize, k: usize },
    /// At most `caps[b]` elements from each block; unlisted elements are free.
    Partition { ground: usize, blocks: Vec<Vec<usize>>, caps: Vec<usize> },
    /// Full independence bitmap over subsets, built from a basis list.
    ExplicitSmall { ground: usize, independent: Vec<bool> },
}

impl Matroid {
    pub fn ground_size(&self) -> usize {
        match self {
            Matroid::Uniform { ground, .. }
            | Matroid::Partition { ground, .. }
            | Matroid::ExplicitSmall { ground, .. } => *ground,
        }
    }

    /// Builds an explicit matroid from its list of bases, validating the
    /// matroid axioms (equal cardinality and basis exchange).
    pub fn from_bases(ground: usize, bases: &[Vec<usize>]) -> Result<Matroid, MatroidError> {
        if ground > EXPLICIT_GROUND_LIMIT {
            return Err(MatroidError::GroundTooLarge(ground));
        }
        if bases.is_empty() {
            return Err(MatroidError::NotAMatroid("no bases given".into()));
        }
        let mut masks = Vec::with_capacity(bases.len());
        for b in bases {
            let mut mask = 0u32;
            for &e in b {
                if e >= ground {
                    return Err(MatroidError::Invalid(format!("basis element {e} out of range")));
                }
                mask |= 1 << e;
            }
            if (mask.count_ones() as usize) != b.len() {
                return Err(MatroidError::Invalid("duplicate element in basis".into()));
            }
            masks.push(mask);
        }
        masks.sort_unstable();
        masks.dedup();
        let r = masks[0].count_ones();
        if masks.iter().any(|m| m.count_ones() != r) {
            return Err(MatroidError::NotAMatroid("bases differ in cardinality".into()));
        }
        // basis exchange: for all B1, B2 and x in B1 \ B2 there is y in B2 \ B1
        // with B1 - x + y again a basis
        for &b1 in &masks {
            for &b2 in &masks {
                let mut only1 = b1 & !b2;
                while only1 != 0 {
                    let x = only1.trailing_zeros();
                    only1 &= only1 - 1;
                    let mut only2 = b2 & !b1;
                    let mut found = false;
                    while only2 != 0 {
                        let y = only2.trailing_zeros();
                        only2 &= only2 - 1;
                        let cand = (b1 & !(1 << x)) | (1 << y);
                        if masks.binary_search(&cand).is_ok() {
                            found = true;
                            break;
                        }
                    }
                    if !found {
                        return Err(MatroidError::NotAMatroid(format!(
                            "basis exchange fails for element {x}"
                        )));
                    }
                }
            }
        }
        let mut independent = vec![false; 1usize << ground];
        for sub in 0..(1usize << ground) {
            let s = sub as u32;
            if masks.iter().any(|&b| s & b == s) {
                independent[sub] = true;
            }
        }
        Ok(Matroid::ExplicitSmall { ground, independent })
    }

    /// Matroid rank of `subset` (indices into the ground set).
    pub fn rank(&self, subset: &[usize]) -> usize {
        match self {
            Matroid::Uniform { k, .. } => subset.len().min(*k),
            Matroid::Partition { blocks, caps, .. } => {
                let mut in_block = vec![usize::MAX; self.ground_size()];
                for (b, block) in blocks.iter().enumerate() {
                    for &e in block {
                        in_block[e] = b;
                    }
                }
                let mut counts = vec![0usize; blocks.len()];
                let mut free = 0usize;
                for &e in subset {
                    match in_block[e] {
                        usize::MAX => free += 1,
                        b => counts[b] += 1,
                    }
                }
                free + counts.iter().zip(caps).map(|(&c, &cap)| c.min(cap)).sum::<usize>()
            }
            Matroid::ExplicitSmall { independent, .. } => {
                // greedy over the subset is exact for matroids
                let mut cur = 0u32;
                let mut r = 0;
                for &e in subset {
                    let cand = cur | (1 << e);
                    if independent[cand as usize] {
                        cur = cand;
                        r += 1;
                    }
                }
                r
            }
        }
    }

    pub fn is_independent(&self, subset: &[usize]) -> bool {
        match self {
            Matroid::ExplicitSmall { independent, .. } => {
                let mut mask = 0u32;
                for &e in subset {
                    mask |= 1 << e;
                }
                if (mask.count_ones() as usize) != subset.len() {
                    return false;
                }
                independent[mask as usize]
            }
            _ => self.rank(subset) == subset.len(),
        }
    }

    /// Most violated rank constraint `z(U) <= r(U)` at the fractional point
    /// `z`, or `None` when all hold within `tol`.
    pub fn separate_polytope(&self, z: &[f64], tol: f64) -> Option<(Vec<usize>, f64)> {
        assert_eq!(z.len(), self.ground_size());
        match self {
            Matroid::Uniform { k, .. } => {
                let mut idx: Vec<usize> = (0..z.len()).collect();
                idx.sort_by(|&a, &b| z[b].partial_cmp(&z[a]).unwrap().then(a.cmp(&b)));
                most_violated_prefix(&idx, z, *k, tol)
            }
            Matroid::Partition { blocks, caps, .. } => {
                let mut best: Vec<usize> = Vec::new();
                let mut total = 0.0;
                for (block, &cap) in blocks.iter().zip(caps) {
                    let mut idx = block.clone();
                    idx.sort_by(|&a, &b| z[b].partial_cmp(&z[a]).unwrap().then(a.cmp(&b)));
                    if let Some((set, v)) = most_violated_prefix(&idx, z, cap, 0.0) {
                        if v > 0.0 {
                            best.extend(set);
                            total += v;
                        }
                    }
                }
                if total > tol {
                    best.sort_unstable();
                    Some((best, total))
                } else {
                    None
                }
            }
            Matroid::ExplicitSmall { ground, .. } => {
                let mut best: Option<(Vec<usize>, f64)> = None;
                for sub in 1usize..(1 << ground) {
                    let set: Vec<usize> = (0..*ground).filter(|&e| sub & (1 << e) != 0).collect();
                    let mass: f64 = set.iter().map(|&e| z[e]).sum();
                    let v = mass - self.rank(&set) as f64;
                    if v > tol && best.as_ref().map_or(true, |(_, bv)| v > *bv) {
                        best = Some((set, v));
                    }
                }
                best
            }
        }
    }

    /// Materialized rank rows sufficient to describe the matroid polytope
    /// together with the `[0, 1]` variable bounds.
    pub fn rank_rows(&self) -> Result<Vec<(Vec<usize>, usize)>, MatroidError> {
        match self {
            Matroid::Uniform { ground, k } => Ok(vec![((0..*ground).collect(), *k)]),
            Matroid::Partition { blocks, caps, .. } => {
                Ok(blocks.iter().zip(caps).map(|(b, &c)| (b.clone(), c)).collect())
            }
            Matroid::ExplicitSmall { ground, .. } => {
                if *ground > 16 {
                    return Err(MatroidError::GroundTooLarge(*ground));
                }
                let mut rows = Vec::with_capacity((1usize << ground) - 1);
                for sub in 1usize..(1 << ground) {
                    let set: Vec<usize> = (0..*ground).filter(|&e| sub & (1 << e) != 0).collect();
                    let r = self.rank(&set);
                    rows.push((set, r));
                }
                Ok(rows)
            }
        }
    }
}

/// Best violated prefix of `idx` (sorted by decreasing z) against
/// `rank = min(t, cap)`.
fn most_violated_prefix(idx: &[usize], z: &[f64], cap: usize, tol: f64) -> Option<(Vec<usize>, f64)> {
    let mut prefix = 0.0;
    let mut best_t = 0;
    let mut best_v = 0.0;
    for (t, &e) in idx.iter().enumerate() {
        prefix += z[e];
        let v = prefix - ((t + 1).min(cap)) as f64;
        if v > best_v {
            best_v = v;
            best_t = t + 1;
        }
    }
    if best_v > tol {
        let mut set = idx[..best_t].to_vec();
        set.sort_unstable();
        Some((set, best_v))
    } else {
        None
    }
}

/// `L` knapsack constraints with integer weights and budgets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnapsackSystem {
    /// weights[l][i] is the l-th weight of facility i.
    pub weights: Vec<Vec<u64>>,
    pub budgets: Vec<u64>,
}

impl KnapsackSystem {
    pub fn new(weights: Vec<Vec<u64>>, budgets: Vec<u64>) -> Result<Self, MatroidError> {
        if weights.len() != budgets.len() {
            return Err(MatroidError::Invalid("one weight row per budget required".into()));
        }
        Ok(KnapsackSystem { weights, budgets })
    }

    pub fn num_constraints(&self) -> usize {
        self.budgets.len()
    }

    /// Table size: product of (W_l + 1) including the zero-slack state.
    pub fn lambda(&self) -> u128 {
        self.budgets.iter().map(|&w| w as u128 + 1).product()
    }

    pub fn is_feasible(&self, subset: &[usize]) -> bool {
        self.weights
            .iter()
            .zip(&self.budgets)
            .all(|(row, &cap)| subset.iter().map(|&i| row[i]).sum::<u64>() <= cap)
    }
}

/// One disjoint-representative cluster in a Psi-minimization call: the
/// representative's ball and the penalty collected from its assignees.
#[derive(Debug, Clone)]
pub struct PsiCluster {
    pub ball: Vec<usize>,
    pub penalty: f64,
}

/// Psi(S) recomputed from its definition; all minimizers must agree with it.
pub fn psi_value(clusters: &[PsiCluster], weights: &[f64], s: &[usize]) -> f64 {
    let mut total = 0.0;
    for cl in clusters {
        let picked: Vec<usize> = s.iter().copied().filter(|i| cl.ball.contains(i)).collect();
        total += picked.iter().map(|&i| weights[i]).sum::<f64>();
        if picked.is_empty() {
            total += cl.penalty;
        }
    }
    total
}

/// Strategy for the pairwise matroid-intersection solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntersectionMethod {
    /// Exhaustive for small candidate sets, augmenting paths otherwise.
    #[default]
    Auto,
    Exhaustive,
    Augmenting,
}

/// Minimizes Psi(S) over independent sets of `matroid`, assuming the cluster
/// balls are pairwise disjoint. Reduces to a min-weight common independent
/// set of `matroid` and the partition matroid of the balls, with item weight
/// w_i - t_j for i in ball j.
pub fn minimize_psi_matroid(
    matroid: &Matroid,
    clusters: &[PsiCluster],
    weights: &[f64],
    method: IntersectionMethod,
) -> (Vec<usize>, f64) {
    let ground = matroid.ground_size();
    let base: f64 = clusters.iter().map(|c| c.penalty).sum();
    let mut item_weight = vec![f64::INFINITY; ground];
    let mut cluster_of = vec![usize::MAX; ground];
    for (j, cl) in clusters.iter().enumerate() {
        for &i in &cl.ball {
            debug_assert_eq!(cluster_of[i], usize::MAX, "cluster balls must be disjoint");
            cluster_of[i] = j;
            item_weight[i] = weights[i] - cl.penalty;
        }
    }
    // items that cannot decrease Psi are dropped up front
    let candidates: Vec<usize> =
        (0..ground).filter(|&i| cluster_of[i] != usize::MAX && item_weight[i] < 0.0).collect();
    let partition = Matroid::Partition {
        ground,
        blocks: clusters.iter().map(|c| c.ball.clone()).collect(),
        caps: vec![1; clusters.len()],
    };
    let s = min_weight_common_independent_over(matroid, &partition, &item_weight, &candidates, method);
    let total = base + s.iter().map(|&i| item_weight[i]).sum::<f64>();
    (s, total)
}

/// Minimum-weight common independent set of two matroids over the same
/// ground set; the empty set is always feasible, so only negative weights
/// matter.
pub fn min_weight_common_independent(
    ma: &Matroid,
    mb: &Matroid,
    weights: &[f64],
    method: IntersectionMethod,
) -> Vec<usize> {
    let candidates: Vec<usize> = (0..ma.ground_size()).filter(|&i| weights[i] < 0.0).collect();
    min_weight_common_independent_over(ma, mb, weights, &candidates, method)
}

fn min_weight_common_independent_over(
    ma: &Matroid,
    mb: &Matroid,
    weights: &[f64],
    candidates: &[usize],
    method: IntersectionMethod,
) -> Vec<usize> {
    let use_exhaustive = match method {
        IntersectionMethod::Exhaustive => true,
        IntersectionMethod::Augmenting => false,
        IntersectionMethod::Auto => candidates.len() <= EXPLICIT_GROUND_LIMIT,
    };
    if use_exhaustive {
        exhaustive_intersection(ma, mb, weights, candidates)
    } else {
        augmenting_intersection(ma, mb, weights, candidates)
    }
}

fn exhaustive_intersection(
    ma: &Matroid,
    mb: &Matroid,
    weights: &[f64],
    candidates: &[usize],
) -> Vec<usize> {
    assert!(candidates.len() <= EXPLICIT_GROUND_LIMIT, "exhaustive scan over too many items");
    let k = candidates.len();
    let mut best: Vec<usize> = Vec::new();
    let mut best_w = 0.0;
    let mut subset = Vec::with_capacity(k);
    for mask in 0u32..(1u32 << k) {
        subset.clear();
        let mut w = 0.0;
        for (pos, &e) in candidates.iter().enumerate() {
            if mask & (1 << pos) != 0 {
                subset.push(e);
                w += weights[e];
            }
        }
        if w < best_w && ma.is_independent(&subset) && mb.is_independent(&subset) {
            best_w = w;
            best = subset.clone();
        }
    }
    best.sort_unstable();
    best
}

/// Weighted matroid intersection by shortest augmenting paths in the
/// exchange graph. Elements outside `candidates` never enter the solution.
/// Paths are chosen by minimum total node cost, breaking ties by fewest
/// arcs, which keeps every intermediate solution extreme for its size.
fn augmenting_intersection(
    ma: &Matroid,
    mb: &Matroid,
    weights: &[f64],
    candidates: &[usize],
) -> Vec<usize> {
    let mut in_s = vec![false; ma.ground_size()];
    loop {
        let s: Vec<usize> = candidates.iter().copied().filter(|&e| in_s[e]).collect();
        let outside: Vec<usize> = candidates.iter().copied().filter(|&e| !in_s[e]).collect();

        // node costs: adding y pays w_y, dropping x refunds w_x
        let cost = |e: usize| if in_s[e] { -weights[e] } else { weights[e] };

        // arcs of the exchange graph
        let mut arcs: Vec<(usize, usize)> = Vec::new();
        let mut sources: Vec<usize> = Vec::new();
        let mut sinks: Vec<usize> = Vec::new();
        for &y in &outside {
            let mut with_y = s.clone();
            with_y.push(y);
            if ma.is_independent(&with_y) {
                sources.push(y);
            }
            if mb.is_independent(&with_y) {
                sinks.push(y);
            }
            for &x in &s {
                let mut swapped: Vec<usize> = s.iter().copied().filter(|&e| e != x).collect();
                swapped.push(y);
                if ma.is_independent(&swapped) {
                    arcs.push((x, y));
                }
                if mb.is_independent(&swapped) {
                    arcs.push((y, x));
                }
            }
        }

        // Bellman-Ford on (cost, hops), lexicographic
        let n = ma.ground_size();
        let inf = (f64::INFINITY, usize::MAX);
        let mut dist = vec![inf; n];
        let mut pred = vec![usize::MAX; n];
        for &y in &sources {
            let c = (cost(y), 1);
            if c.0 < dist[y].0 {
                dist[y] = c;
            }
        }
        for _ in 0..=candidates.len() {
            let mut changed = false;
            for &(u, v) in &arcs {
                if dist[u].0.is_finite() {
                    let cand = (dist[u].0 + cost(v), dist[u].1 + 1);
                    if cand.0 < dist[v].0 - 1e-12
                        || ((cand.0 - dist[v].0).abs() <= 1e-12 && cand.1 < dist[v].1)
                    {
                        dist[v] = cand;
                        pred[v] = u;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut best: Option<usize> = None;
        for &t in &sinks {
            if dist[t].0.is_finite() && dist[t].0 < -1e-12 {
                let better = match best {
                    None => true,
                    Some(b) => {
                        dist[t].0 < dist[b].0 - 1e-12
                            || ((dist[t].0 - dist[b].0).abs() <= 1e-12 && dist[t].1 < dist[b].1)
                    }
                };
                if better {
                    best = Some(t);
                }
            }
        }
        let Some(mut node) = best else {
            let mut out = s;
            out.sort_unstable();
            return out;
        };
        // flip membership along the path
        loop {
            in_s[node] = !in_s[node];
            if pred[node] == usize::MAX {
                break;
            }
            node = pred[node];
        }
    }
}

/// Minimizes Psi(S) over multi-knapsack-feasible S by dynamic programming
/// over the clusters, with one table cell per residual-budget vector.
pub fn minimize_psi_knapsack(
    ks: &KnapsackSystem,
    clusters: &[PsiCluster],
    weights: &[f64],
    lambda_cap: u128,
) -> Result<(Vec<usize>, f64), MatroidError> {
    let lambda = ks.lambda();
    if lambda > lambda_cap {
        return Err(MatroidError::TableCapExceeded(lambda, lambda_cap));
    }
    let lambda = lambda as usize;
    let nl = ks.num_constraints();
    // strides for encoding a consumption vector as one index
    let mut strides = vec![1usize; nl];
    for l in 1..nl {
        strides[l] = strides[l - 1] * (ks.budgets[l - 1] as usize + 1);
    }
    let encode_add = |state: usize, item: usize| -> Option<usize> {
        let mut s = state;
        for l in 0..nl {
            let used = (state / strides[l]) % (ks.budgets[l] as usize + 1);
            let w = ks.weights[l][item] as usize;
            if used + w > ks.budgets[l] as usize {
                return None;
            }
            s += w * strides[l];
        }
        Some(s)
    };

    const SKIP: u32 = u32::MAX;
    let mut dp = vec![f64::INFINITY; lambda];
    dp[0] = 0.0;
    // choice[j][state]: facility index + 1 chosen for cluster j at state, or SKIP
    let mut choice = vec![vec![SKIP; lambda]; clusters.len()];
    for (j, cl) in clusters.iter().enumerate() {
        let mut next = vec![f64::INFINITY; lambda];
        for state in 0..lambda {
            if !dp[state].is_finite() {
                continue;
            }
            // skip this cluster, pay the penalty
            let skip_val = dp[state] + cl.penalty;
            if skip_val < next[state] {
                next[state] = skip_val;
                choice[j][state] = SKIP;
            }
            // open exactly one facility in the ball
            for &i in &cl.ball {
                if let Some(ns) = encode_add(state, i) {
                    let val = dp[state] + weights[i];
                    if val < next[ns] {
                        next[ns] = val;
                        choice[j][ns] = i as u32 + 1;
                    }
                }
            }
        }
        dp = next;
    }
    let (mut state, _) = dp
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(a.0.cmp(&b.0)))
        .expect("nonempty table");
    let best = dp[state];
    // walk choices backwards to recover the set
    let mut picked = Vec::new();
    for j in (0..clusters.len()).rev() {
        let c = choice[j][state];
        if c != SKIP {
            let i = (c - 1) as usize;
            picked.push(i);
            for l in 0..nl {
                state -= ks.weights[l][i] as usize * strides[l];
            }
        }
    }
    picked.sort_unstable();
    Ok((picked, best))
}
