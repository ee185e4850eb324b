//! Compressed sparse rows and a banded LU factorization.
//!
//! The LU deliberately does no pivoting: every matrix we factor has the form
//! σI − A with A essentially nonnegative and σ above the rightmost eigenvalue
//! of A, i.e. a (possibly nearly singular) nonsingular M-matrix. Gaussian
//! elimination on an M-matrix keeps all pivots positive and is stable without
//! pivoting; a nonpositive pivot therefore *diagnoses* σ at or below the
//! Perron root, and the caller reacts by raising σ.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Build from per-row (col, value) lists; entries within a row must have
    /// distinct columns. Rows are sorted by column.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Csr {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            out[i] = acc;
        }
    }

    /// out = Aᵀ x.
    pub fn matvec_transpose(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.cols[k]] += self.vals[k] * x[i];
            }
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// ‖A‖∞ (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest |i − j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                bw = bw.max(i.abs_diff(j));
            }
        }
        bw
    }

    /// Maximum symmetry defect and its location.
    pub fn symmetry_defect(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0f64);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let d = (v - self.get(j, i)).abs();
                if d > worst.2 {
                    worst = (i, j, d);
                }
            }
        }
        worst
    }

    /// Connected components of the (symmetrized) sparsity graph.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if i != j && v != 0.0 {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        let mut seen = vec![false; self.n];
        let mut comps = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Principal submatrix on `keep[i] == true` rows/columns.
    pub fn restrict(&self, keep: &[bool]) -> (Csr, Vec<usize>) {
        assert_eq!(keep.len(), self.n);
        let kept: Vec<usize> = (0..self.n).filter(|&i| keep[i]).collect();
        let mut new_index = vec![usize::MAX; self.n];
        for (ni, &oi) in kept.iter().enumerate() {
            new_index[oi] = ni;
        }
        let rows = kept
            .iter()
            .map(|&oi| {
                self.row(oi)
                    .filter(|&(j, _)| keep[j])
                    .map(|(j, v)| (new_index[j], v))
                    .collect()
            })
            .collect();
        (Csr::from_rows(rows), kept)
    }
}

/// Banded LU factors of σI − A, stored as (2·bw + 1) diagonals per row.
pub struct BandedLu {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedLu {
    /// Factor σI − A without pivoting. Fails with `PreconditionFailed` if a
    /// pivot is nonpositive, which signals σ at or below the Perron root.
    pub fn factor_shifted(a: &Csr, sigma: f64) -> Result<BandedLu> {
        let n = a.n;
        let bw = a.bandwidth();
        let width = 2 * bw + 1;
        let mut band = vec![0.0; n * width];
        let idx = |i: usize, j: usize| i * width + (j + bw - i);
        for i in 0..n {
            band[idx(i, i)] = sigma;
            for (j, v) in a.row(i) {
                band[idx(i, j)] -= v;
            }
        }
        for k in 0..n {
            let pivot = band[idx(k, k)];
            if !(pivot > 0.0) {
                return Err(Error::PreconditionFailed(format!(
                    "nonpositive pivot {pivot:.3e} at row {k}: shift {sigma} not above the spectrum"
                )));
            }
            let imax = (k + bw).min(n - 1);
            let jmax = imax;
            for i in (k + 1)..=imax {
                let l = band[idx(i, k)] / pivot;
                band[idx(i, k)] = l;
                if l != 0.0 {
                    for j in (k + 1)..=jmax {
                        let ukj = band[idx(k, j)];
                        if ukj != 0.0 {
                            band[idx(i, j)] -= l * ukj;
                        }
                    }
                }
            }
        }
        Ok(BandedLu { n, bw, band })
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.band[i * (2 * self.bw + 1) + (j + self.bw - i)]
    }

    /// Solve (σI − A) x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let bw = self.bw;
        for i in 1..n {
            let j0 = i.saturating_sub(bw);
            let mut acc = b[i];
            for j in j0..i {
                acc -= self.at(i, j) * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let j1 = (i + bw).min(n - 1);
            let mut acc = b[i];
            for j in (i + 1)..=j1 {
                acc -= self.at(i, j) * b[j];
            }
            b[i] = acc / self.at(i, i);
        }
    }

    /// Solve (σI − A)ᵀ x = b in place (UᵀLᵀ x = b).
    pub fn solve_transpose(&self, b: &mut [f64]) {
        let n = self.n;
        let bw = self.bw;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let mut acc = b[i];
            for j in j0..i {
                acc -= self.at(j, i) * b[j];
            }
            b[i] = acc / self.at(i, i);
        }
        for i in (0..n).rev() {
            let j1 = (i + bw).min(n - 1);
            let mut acc = b[i];
            for j in (i + 1)..=j1 {
                acc -= self.at(j, i) * b[j];
            }
            b[i] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, lo: f64, d: f64, up: f64) -> Csr {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, d)];
                if i > 0 {
                    r.push((i - 1, lo));
                }
                if i + 1 < n {
                    r.push((i + 1, up));
                }
                r
            })
            .collect();
        Csr::from_rows(rows)
    }

    #[test]
    fn matvec_matches_dense() {
        let a = tridiag(5, 1.0, -2.0, 1.5);
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let mut y = [0.0; 5];
        a.matvec(&x, &mut y);
        assert_eq!(y[0], -2.0 * 1.0 + 1.5 * 2.0);
        assert_eq!(y[2], 2.0 + (-2.0) * 3.0 + 1.5 * 4.0);
    }

    #[test]
    fn banded_solve_inverts_shifted_matrix() {
        // A with off-diagonals >= 0, shift above the row sums
        let a = tridiag(40, 3.0, -1.0, 2.0);
        let sigma = 7.0;
        let lu = BandedLu::factor_shifted(&a, sigma).unwrap();
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut x = b.clone();
        lu.solve(&mut x);
        // check (sigma I - A) x = b
        let mut ax = vec![0.0; 40];
        a.matvec(&x, &mut ax);
        for i in 0..40 {
            let lhs = sigma * x[i] - ax[i];
            assert!((lhs - b[i]).abs() < 1e-10, "row {i}: {lhs} vs {}", b[i]);
        }
    }

    #[test]
    fn transpose_solve_matches() {
        let a = tridiag(20, 0.5, -1.0, 2.0);
        let sigma = 5.0;
        let lu = BandedLu::factor_shifted(&a, sigma).unwrap();
        let b: Vec<f64> = (0..20).map(|i| 1.0 + (i as f64).cos()).collect();
        let mut x = b.clone();
        lu.solve_transpose(&mut x);
        let mut atx = vec![0.0; 20];
        a.matvec_transpose(&x, &mut atx);
        for i in 0..20 {
            let lhs = sigma * x[i] - atx[i];
            assert!((lhs - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn shift_below_spectrum_is_detected() {
        // sigma I - A singular or indefinite must produce a pivot failure for
        // this essentially-nonnegative A
        let a = tridiag(10, 1.0, 0.0, 1.0); // Perron root ~ 2 cos(pi/11) < 2
        assert!(BandedLu::factor_shifted(&a, -5.0).is_err());
        assert!(BandedLu::factor_shifted(&a, 2.1).is_ok());
    }

    #[test]
    fn components_split_disconnected_graphs() {
        let mut rows = vec![vec![]; 5];
        rows[0] = vec![(0, 1.0), (1, 1.0)];
        rows[1] = vec![(1, 1.0), (0, 1.0)];
        rows[2] = vec![(2, 1.0)];
        rows[3] = vec![(3, 1.0), (4, 1.0)];
        rows[4] = vec![(4, 1.0), (3, 1.0)];
        let a = Csr::from_rows(rows);
        let comps = a.components();
        assert_eq!(comps, vec![vec![0, 1], vec![2], vec![3, 4]]);
    }

    #[test]
    fn restrict_takes_principal_submatrix() {
        let a = tridiag(5, 1.0, -2.0, 1.0);
        let keep = [true, true, false, true, true];
        let (sub, kept) = a.restrict(&keep);
        assert_eq!(kept, vec![0, 1, 3, 4]);
        assert_eq!(sub.get(0, 1), 1.0);
        assert_eq!(sub.get(1, 2), 0.0); // old 1 -> 3 link crossed the removed node
        assert_eq!(sub.get(2, 3), 1.0);
        assert_eq!(sub.components().len(), 2);
    }
}
