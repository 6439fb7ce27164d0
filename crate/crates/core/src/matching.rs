//! Rate-increment weights and the D2D-to-CU reuse assignment.
//!
//! The assignment maximizes, in order: the number of served D2D pairs, the
//! total rate increment, and finally prefers the lexicographically smallest
//! vector of matched CU indices (D2D 0 first, "unserved" sorting after every
//! CU). Weights are quantized to integers before solving so the Hungarian
//! solver and the exhaustive oracle agree exactly, including on ties.

use crate::allocation::{PowerLimits, ReuseCandidates};
use crate::channel::GainTable;
use crate::error::{Error, Result};

/// Largest instance [`brute_force_match`] accepts.
pub const BRUTE_FORCE_MAX_D2D: usize = 8;

/// Weight resolution in bps/Hz.
const WEIGHT_QUANTUM: f64 = 1e-12;
/// |delta| bound that keeps quantized sums well below `SERVED_UNIT`.
const MAX_ABS_WEIGHT: f64 = 1e4;
const MAX_D2D: usize = 4096;
const SERVED_UNIT: i128 = 1 << 72;
const FORBIDDEN: i128 = 1 << 100;

/// Rate increments `delta[cu][d2d]` and which pairs may be matched.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n_cu: usize,
    n_d2d: usize,
    delta: Vec<f64>,
    mask: Vec<bool>,
}

impl WeightMatrix {
    pub fn new(n_cu: usize, n_d2d: usize) -> Self {
        WeightMatrix {
            n_cu,
            n_d2d,
            delta: vec![0.0; n_cu * n_d2d],
            mask: vec![false; n_cu * n_d2d],
        }
    }

    /// Rows are CUs, columns D2D pairs; `None` marks an excluded pair.
    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Self {
        let n_cu = rows.len();
        let n_d2d = rows.first().map_or(0, Vec::len);
        let mut w = WeightMatrix::new(n_cu, n_d2d);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n_d2d, "ragged weight rows");
            for (j, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    w.set(i, j, *v);
                }
            }
        }
        w
    }

    pub fn n_cu(&self) -> usize {
        self.n_cu
    }

    pub fn n_d2d(&self) -> usize {
        self.n_d2d
    }

    /// Marks `(cu, d2d)` matchable with increment `delta`.
    pub fn set(&mut self, cu: usize, d2d: usize, delta: f64) {
        assert!(
            delta.is_finite() && delta.abs() <= MAX_ABS_WEIGHT,
            "weight {delta} out of range"
        );
        let k = cu * self.n_d2d + d2d;
        self.delta[k] = delta;
        self.mask[k] = true;
    }

    pub fn exclude(&mut self, cu: usize, d2d: usize) {
        let k = cu * self.n_d2d + d2d;
        self.delta[k] = 0.0;
        self.mask[k] = false;
    }

    pub fn get(&self, cu: usize, d2d: usize) -> Option<f64> {
        let k = cu * self.n_d2d + d2d;
        self.mask[k].then_some(self.delta[k])
    }

    pub fn is_candidate(&self, cu: usize, d2d: usize) -> bool {
        self.mask[cu * self.n_d2d + d2d]
    }

    fn quantized(&self, cu: usize, d2d: usize) -> i128 {
        (self.delta[cu * self.n_d2d + d2d] / WEIGHT_QUANTUM).round() as i128
    }

    /// Copy with every matchable weight negated.
    pub fn sign_flipped(&self) -> Self {
        let mut w = self.clone();
        for (d, &m) in w.delta.iter_mut().zip(&self.mask) {
            if m {
                *d = -*d;
            }
        }
        w
    }
}

/// Partial injective map from D2D pairs to CUs.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub d2d_to_cu: Vec<Option<usize>>,
    pub total_weight_bpshz: f64,
}

impl Assignment {
    fn from_map(weights: &WeightMatrix, d2d_to_cu: Vec<Option<usize>>) -> Self {
        let total_weight_bpshz = d2d_to_cu
            .iter()
            .enumerate()
            .filter_map(|(j, cu)| cu.map(|i| weights.delta[i * weights.n_d2d + j]))
            .sum();
        Assignment {
            d2d_to_cu,
            total_weight_bpshz,
        }
    }

    pub fn served(&self) -> usize {
        self.d2d_to_cu.iter().filter(|c| c.is_some()).count()
    }

    pub fn unserved(&self) -> impl Iterator<Item = usize> + '_ {
        self.d2d_to_cu
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_none())
            .map(|(j, _)| j)
    }

    /// Matched `(cu, d2d)` pairs in D2D order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.d2d_to_cu
            .iter()
            .enumerate()
            .filter_map(|(j, c)| c.map(|i| (i, j)))
    }

    /// Injective and restricted to candidate pairs.
    pub fn is_valid_for(&self, weights: &WeightMatrix) -> bool {
        let mut used = vec![false; weights.n_cu];
        self.d2d_to_cu.len() == weights.n_d2d
            && self.pairs().all(|(i, j)| {
                i < weights.n_cu
                    && weights.is_candidate(i, j)
                    && !std::mem::replace(&mut used[i], true)
            })
    }
}

/// Rate increment of each admissible pair over the CU transmitting alone at
/// full power. With `allow_unprofitable_reuse == false`, pairs whose
/// increment is negative are excluded as well.
pub fn build_weights(
    candidates: &ReuseCandidates,
    gains: &GainTable,
    limits: &PowerLimits,
    allow_unprofitable_reuse: bool,
) -> WeightMatrix {
    let mut w = WeightMatrix::new(gains.n_cu(), candidates.n_d2d());
    for (j, list) in candidates.per_d2d.iter().enumerate() {
        for c in list {
            let delta = c.power.sum_rate_bpshz - limits.solo_cu_rate(gains.g_cu_bs[c.cu]);
            if allow_unprofitable_reuse || delta >= 0.0 {
                w.set(c.cu, j, delta);
            }
        }
    }
    w
}

/// Column layout of the assignment problem: CUs `0..n_cu`, then one private
/// "unserved" column per D2D pair. Rows are the D2D pairs followed by `n_cu`
/// filler rows of cost zero that soak up the unused columns, which makes the
/// problem square.
struct CostMatrix {
    real_rows: usize,
    n: usize,
    cost: Vec<i128>,
}

impl CostMatrix {
    fn new(weights: &WeightMatrix) -> Self {
        let real_rows = weights.n_d2d;
        let n = weights.n_cu + real_rows;
        let mut cost = vec![0; n * n];
        for j in 0..real_rows {
            for c in 0..n {
                cost[j * n + c] = if c == weights.n_cu + j {
                    0
                } else if c < weights.n_cu && weights.is_candidate(c, j) {
                    -(SERVED_UNIT + weights.quantized(c, j))
                } else {
                    FORBIDDEN
                };
            }
        }
        CostMatrix { real_rows, n, cost }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> i128 {
        self.cost[r * self.n + c]
    }
}

struct Solution {
    row_to_col: Vec<usize>,
    row_potential: Vec<i128>,
    col_potential: Vec<i128>,
}

/// Shortest augmenting path Hungarian method on a square matrix, minimizing.
fn solve_assignment(m: &CostMatrix) -> Solution {
    let n = m.n;
    let inf = i128::MAX / 4;
    // 1-based with a virtual column 0, as in the classic formulation.
    let mut u = vec![0i128; n + 1];
    let mut v = vec![0i128; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.fill(inf);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = &m.cost[(i0 - 1) * n..i0 * n];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
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

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    Solution {
        row_to_col,
        row_potential: u[1..].to_vec(),
        col_potential: v[1..].to_vec(),
    }
}

/// Column preference of a D2D row: CUs ascending, then its unserved column.
fn col_rank(n_cu: usize, c: usize) -> usize {
    // unserved columns all sit at n_cu.. and only one is reachable per row
    c.min(n_cu)
}

/// Searches the equality subgraph for an alternating cycle that moves `row`
/// onto column `target` while leaving rows before `row` in place. Returns the
/// columns taken over along the cycle, starting with `target`.
fn alternating_cycle(
    tight: &dyn Fn(usize, usize) -> bool,
    owner: &[usize],
    row_to_col: &[usize],
    row: usize,
    target: usize,
) -> Option<Vec<usize>> {
    let n = owner.len();
    let home = row_to_col[row];
    // parent[c] = column whose owner moved onto c
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    seen[target] = true;
    queue.push_back(target);
    while let Some(c) = queue.pop_front() {
        let r = owner[c];
        if r < row {
            continue;
        }
        for next in 0..n {
            if seen[next] || !tight(r, next) {
                continue;
            }
            parent[next] = c;
            if next == home {
                let mut path = vec![home];
                let mut at = home;
                while at != target {
                    at = parent[at];
                    path.push(at);
                }
                path.reverse();
                return Some(path);
            }
            seen[next] = true;
            queue.push_back(next);
        }
    }
    None
}

/// Maximum-weight reuse assignment via the Hungarian method, `O((N+M)^3)`.
///
/// D2D pairs without any candidate CU, or left over when candidates collide,
/// stay unserved.
pub fn hungarian_match(weights: &WeightMatrix) -> Assignment {
    let rows = weights.n_d2d;
    assert!(
        rows <= MAX_D2D,
        "too many D2D pairs for the matching cost encoding"
    );
    if rows == 0 {
        return Assignment::from_map(weights, Vec::new());
    }
    let matrix = CostMatrix::new(weights);
    let optimum = solve_assignment(&matrix);

    // Optimal assignments are exactly the perfect matchings on edges tight
    // under the optimal duals, and any two differ by alternating cycles. Fix
    // rows in order, each on its best-ranked column that some cycle reaches.
    let tight = |r: usize, c: usize| {
        let x = matrix.at(r, c);
        x != FORBIDDEN && x - optimum.row_potential[r] - optimum.col_potential[c] == 0
    };
    let n_cu = weights.n_cu;
    let mut row_to_col = optimum.row_to_col;
    let mut owner = vec![0usize; matrix.n];
    for (r, &c) in row_to_col.iter().enumerate() {
        owner[c] = r;
    }
    for r in 0..matrix.real_rows {
        let mut probes: Vec<usize> = (0..matrix.n)
            .filter(|&c| tight(r, c) && col_rank(n_cu, c) < col_rank(n_cu, row_to_col[r]))
            .collect();
        probes.sort_by_key(|&c| col_rank(n_cu, c));
        for c in probes {
            if owner[c] < r {
                continue;
            }
            if let Some(cycle) = alternating_cycle(&tight, &owner, &row_to_col, r, c) {
                // r takes cycle[0]; the owner of each column takes the next.
                let movers: Vec<usize> = cycle.iter().map(|&col| owner[col]).collect();
                let mut rows_in_cycle = vec![r];
                rows_in_cycle.extend_from_slice(&movers[..movers.len() - 1]);
                for (&mover, &col) in rows_in_cycle.iter().zip(&cycle) {
                    row_to_col[mover] = col;
                    owner[col] = mover;
                }
                break;
            }
        }
    }

    let map = row_to_col[..rows]
        .iter()
        .map(|&c| (c < n_cu).then_some(c))
        .collect();
    Assignment::from_map(weights, map)
}

/// Exhaustive search over all partial injective assignments. Verification
/// oracle for [`hungarian_match`]; same objective and tie-break.
pub fn brute_force_match(weights: &WeightMatrix) -> Result<Assignment> {
    let m = weights.n_d2d;
    if m > BRUTE_FORCE_MAX_D2D {
        return Err(Error::OracleTooLarge {
            n_d2d: m,
            limit: BRUTE_FORCE_MAX_D2D,
        });
    }

    /// (served, quantized weight) of a complete assignment.
    type Key = (usize, i128);

    struct Search<'a> {
        w: &'a WeightMatrix,
        used: Vec<bool>,
        current: Vec<Option<usize>>,
        best: Option<(Key, Vec<Option<usize>>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, j: usize, served: usize, weight: i128) {
            if j == self.w.n_d2d {
                let key = (served, weight);
                // Options are explored in lexicographic order, so only a
                // strict improvement may replace the incumbent.
                if self.best.as_ref().is_none_or(|(k, _)| key > *k) {
                    self.best = Some((key, self.current.clone()));
                }
                return;
            }
            for i in 0..self.w.n_cu {
                if self.w.is_candidate(i, j) && !self.used[i] {
                    self.used[i] = true;
                    self.current[j] = Some(i);
                    self.visit(j + 1, served + 1, weight + self.w.quantized(i, j));
                    self.used[i] = false;
                }
            }
            self.current[j] = None;
            self.visit(j + 1, served, weight);
        }
    }

    let mut search = Search {
        w: weights,
        used: vec![false; weights.n_cu],
        current: vec![None; m],
        best: None,
    };
    search.visit(0, 0, 0);
    let (_, map) = search.best.expect("the empty assignment is always visited");
    Ok(Assignment::from_map(weights, map))
}
