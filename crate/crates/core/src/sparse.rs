//! Compressed sparse row storage with a fixed sparsity pattern.

use rayon::prelude::*;

/// Rows at or above this count use the parallel product.
const PARALLEL_ROWS: usize = 16_384;

/// Square CSR matrix. Column indices are sorted within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given per-row column sets (duplicates are merged).
    pub fn from_pattern(n: usize, mut pattern: Vec<Vec<usize>>) -> Self {
        assert_eq!(pattern.len(), n, "pattern must have one entry per row");
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for cols in pattern.iter_mut() {
            cols.sort_unstable();
            cols.dedup();
            debug_assert!(cols.iter().all(|&c| c < n));
            col_idx.extend_from_slice(cols);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds a matrix by summing duplicate `(row, col, value)` entries.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut pattern = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            pattern[i].push(j);
        }
        let mut m = Self::from_pattern(n, pattern);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        let end = self.row_ptr[i + 1];
        self.col_idx[start..end]
            .binary_search(&j)
            .ok()
            .map(|k| start + k)
    }

    /// Adds `v` at `(i, j)`.
    ///
    /// Panics if `(i, j)` is outside the pattern; assembly code always
    /// builds the pattern from the same connectivity it accumulates.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Mutable values of row `i` alongside its column indices.
    pub fn row_mut(&mut self, i: usize) -> (&[usize], &mut [f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &mut self.values[r])
    }

    /// `y = A x`. Each row is summed sequentially, so the result does not
    /// depend on the number of threads.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let row_dot = |i: usize| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum::<f64>()
        };
        if self.n >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row_dot(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row_dot(i);
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|` over the stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.mul_vec(x, &mut ax);
        ax.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Iterates over stored entries as `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Lowest column index stored in row `i` (the row's profile start).
    pub fn first_col(&self, i: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.first().copied()
    }

    /// Profile size `sum_i (i - first column of row i)` after the symmetric
    /// reordering `perm[new] = old`.
    pub fn envelope(&self, perm: &[usize]) -> usize {
        let inv = inverse(perm);
        (0..self.n)
            .map(|new| {
                let (cols, _) = self.row(perm[new]);
                let first = cols.iter().map(|&c| inv[c]).min().unwrap_or(new);
                new - first.min(new)
            })
            .sum()
    }

    /// Reverse Cuthill-McKee ordering of the symmetric pattern, as
    /// `perm[new] = old`. Each connected component starts from its
    /// lowest-degree node.
    pub fn reverse_cuthill_mckee(&self) -> Vec<usize> {
        let degree: Vec<usize> = (0..self.n).map(|i| self.row(i).0.len()).collect();
        let mut seeds: Vec<usize> = (0..self.n).collect();
        seeds.sort_by_key(|&i| (degree[i], i));
        let mut visited = vec![false; self.n];
        let mut order = Vec::with_capacity(self.n);
        let mut next = Vec::new();
        for seed in seeds {
            if visited[seed] {
                continue;
            }
            visited[seed] = true;
            let mut head = order.len();
            order.push(seed);
            while head < order.len() {
                let i = order[head];
                head += 1;
                next.clear();
                next.extend(self.row(i).0.iter().copied().filter(|&j| !visited[j]));
                next.sort_by_key(|&j| (degree[j], j));
                for &j in &next {
                    visited[j] = true;
                    order.push(j);
                }
            }
        }
        order.reverse();
        order
    }

    /// `P A P^T` for `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> CsrMatrix {
        let inv = inverse(perm);
        let mut triplets = Vec::with_capacity(self.nnz());
        for (i, j, v) in self.entries() {
            triplets.push((inv[i], inv[j], v));
        }
        CsrMatrix::from_triplets(self.n, &triplets)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.entries() {
            d[i][j] = v;
        }
        d
    }
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}
