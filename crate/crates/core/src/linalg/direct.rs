//! Banded LU with partial pivoting on a reverse Cuthill–McKee ordering.

use std::collections::VecDeque;

use super::{LinalgError, SparseMatrix};

/// Reverse Cuthill–McKee permutation of the symmetrised pattern.
/// `perm[new] = old`.
pub fn rcm_ordering(a: &SparseMatrix) -> Vec<usize> {
    let n = a.dim();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in a.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        let l = level[v].expect("queued nodes have a level");
        for &w in &adj[v] {
            if level[w].is_none() {
                level[w] = Some(l + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut current = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let levels = bfs_levels(current, adj);
        let max_level = levels.iter().flatten().copied().max().unwrap_or(0);
        if max_level <= ecc && current != seed {
            break;
        }
        ecc = max_level;
        let candidate = levels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(max_level))
            .map(|(i, _)| i)
            .min_by_key(|&i| (degree[i], i))
            .unwrap_or(current);
        if candidate == current {
            break;
        }
        current = candidate;
    }
    current
}

/// Number of stored entries a banded factorisation of `a` would need.
pub fn banded_storage(a: &SparseMatrix) -> usize {
    let perm = rcm_ordering(a);
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (mut kl, mut ku) = (0usize, 0usize);
    for old_i in 0..a.dim() {
        for (old_j, _) in a.row(old_i) {
            let (i, j) = (inv[old_i], inv[old_j]);
            if j < i {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
    }
    a.dim().saturating_mul(2 * kl + ku + 1)
}

/// LU factors of a permuted banded matrix.
///
/// Each row `i` stores columns `i - kl ..= i + kl + ku`, which holds the
/// fill produced by row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    perm: Vec<usize>,
    rows: Vec<f64>,
    pivots: Vec<usize>,
    multipliers: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &SparseMatrix) -> Result<Self, LinalgError> {
        let n = a.dim();
        let perm = rcm_ordering(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut kl, mut ku) = (0usize, 0usize);
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, _) in a.row(old_i) {
                let j = inv[old_j];
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            perm,
            rows: vec![0.0; n * width],
            pivots: vec![0; n],
            multipliers: vec![0.0; n * kl.max(1)],
        };
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, v) in a.row(old_i) {
                let j = inv[old_j];
                *lu.at_mut(i, j) += v;
            }
        }
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.rows[self.slot(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let s = self.slot(i, j);
        &mut self.rows[s]
    }

    fn eliminate(&mut self) -> Result<(), LinalgError> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let scale = self.rows.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.at(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > scale * f64::EPSILON * 1e-3) || best == 0.0 {
                return Err(LinalgError::Breakdown {
                    method: "direct",
                    reason: format!("zero pivot in column {k}"),
                });
            }
            self.pivots[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.rows.swap(a, b);
                }
            }
            let pivot = self.at(k, k);
            let (w, len) = (self.width, last_col - k);
            let (head, tail) = self.rows.split_at_mut((k + 1) * w);
            let row_k = &head[k * w + kl + 1..k * w + kl + 1 + len];
            for i in k + 1..=last_row {
                let d = i - k;
                // column k sits at offset kl - d in row i
                let row_i = &mut tail[(d - 1) * w..d * w];
                let m = row_i[kl - d] / pivot;
                self.multipliers[k * kl.max(1) + (d - 1)] = m;
                row_i[kl - d] = 0.0;
                if m != 0.0 {
                    for (a, u) in row_i[kl - d + 1..kl - d + 1 + len].iter_mut().zip(row_k) {
                        *a -= m * u;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower and upper bandwidth after reordering.
    pub fn bandwidth(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.n;
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, found: b.len() });
        }
        let (kl, ku) = (self.kl, self.ku);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                y.swap(k, p);
            }
            let yk = y[k];
            if yk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    y[i] -= self.multipliers[k * kl.max(1) + (i - k - 1)] * yk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.at(k, j) * y[j];
            }
            y[k] = s / self.at(k, k);
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }
}
