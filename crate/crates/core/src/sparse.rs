//! Complex compressed-sparse-row matrices with a two-pass (symbolic, then
//! numeric) construction.

use std::io::{self, Write};

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square complex CSR matrix. Column indices are sorted and unique per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl ComplexSparseMatrix {
    /// Zero matrix on the pattern generated by node cliques. Every node owns
    /// `block` consecutive dofs (`block * node + k`), and all dofs of the
    /// nodes in one clique couple with each other.
    pub fn from_node_cliques<'a>(
        n_nodes: usize,
        block: usize,
        cliques: impl IntoIterator<Item = &'a [usize]>,
    ) -> Self {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for clique in cliques {
            for &a in clique {
                adj[a].extend_from_slice(clique);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let dim = n_nodes * block;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let nnz: usize = adj.iter().map(|l| l.len() * block * block).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        for list in &adj {
            for _ in 0..block {
                for &m in list {
                    col_idx.extend(block * m..block * (m + 1));
                }
                row_ptr.push(col_idx.len());
            }
        }
        let values = vec![ZERO; col_idx.len()];
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds from triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, Complex64)]) -> Self {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
        for &(i, j, v) in triplets {
            assert!(i < dim && j < dim, "triplet ({i}, {j}) out of range");
            rows[i].push((j, v));
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (j, v) in r {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[Complex64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        let cols = &self.col_idx[start..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|k| start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.position(i, j).map_or(ZERO, |k| self.values[k])
    }

    /// Adds into an existing pattern slot. Panics if `(i, j)` is not in the
    /// pattern, which indicates an assembly bug.
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[k] += v;
    }

    /// Scatters a dense local block `local[a][b]` into rows `dofs[a]`, columns `dofs[b]`.
    pub fn add_block(&mut self, dofs: &[usize], local: &[Vec<Complex64>]) {
        for (a, &i) in dofs.iter().enumerate() {
            for (b, &j) in dofs.iter().enumerate() {
                let v = local[a][b];
                if v != ZERO {
                    self.add(i, j, v);
                }
            }
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum();
        }
    }

    /// `v^* M v`.
    pub fn quadratic_form(&self, v: &[Complex64]) -> Complex64 {
        let mv = self.mul_vec(v);
        v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    /// `w^* M v`.
    pub fn bilinear_form(&self, w: &[Complex64], v: &[Complex64]) -> Complex64 {
        let mv = self.mul_vec(v);
        w.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn transpose(&self) -> Self {
        self.transpose_map(|v| v)
    }

    pub fn adjoint(&self) -> Self {
        self.transpose_map(|v| v.conj())
    }

    fn transpose_map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let mut counts = vec![0usize; self.dim + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for k in 0..self.dim {
            counts[k + 1] += counts[k];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![ZERO; self.nnz()];
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let k = next[j];
                col_idx[k] = i;
                values[k] = f(v);
                next[j] += 1;
            }
        }
        Self {
            dim: self.dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `alpha * self + beta * other` on the union pattern.
    pub fn linear_combination(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.dim {
            let (c, v) = self.row(i);
            trip.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, alpha * x)));
            let (c, v) = other.row(i);
            trip.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, beta * x)));
        }
        Self::from_triplets(self.dim, &trip)
    }

    /// Largest `|M_ij - M_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let t = self.transpose();
        let d = self.linear_combination(Complex64::new(1.0, 0.0), &t, Complex64::new(-1.0, 0.0));
        d.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Matrix Market coordinate dump (complex general, 1-based indices).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(w, "{} {} {}", self.dim, self.dim, self.nnz())?;
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&j, v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.17e} {:.17e}", i + 1, j + 1, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample() -> ComplexSparseMatrix {
        ComplexSparseMatrix::from_triplets(
            3,
            &[
                (0, 0, c(1.0, 1.0)),
                (0, 2, c(2.0, 0.0)),
                (1, 1, c(0.0, 3.0)),
                (2, 0, c(-1.0, 0.5)),
                (2, 2, c(4.0, 0.0)),
                (0, 2, c(0.5, 0.0)),
            ],
        )
    }

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = sample();
        assert_eq!(m.nnz(), 5);
        assert_eq!(m.get(0, 2), c(2.5, 0.0));
        assert_eq!(m.get(1, 0), ZERO);
        for i in 0..3 {
            let (cols, _) = m.row(i);
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn matvec_and_forms() {
        let m = sample();
        let x = [c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)];
        let y = m.mul_vec(&x);
        assert_eq!(y[0], c(6.0, 1.0));
        assert_eq!(y[1], c(-3.0, 0.0));
        assert_eq!(y[2], c(7.0, 0.5));
        let q = m.quadratic_form(&x);
        let direct: Complex64 = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        assert_eq!(q, direct);
    }

    #[test]
    fn adjoint_and_transpose() {
        let m = sample();
        let t = m.transpose();
        let a = m.adjoint();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.get(i, j), m.get(j, i));
                assert_eq!(a.get(i, j), m.get(j, i).conj());
            }
        }
        assert!(m.symmetry_defect() > 0.0);
    }

    #[test]
    fn clique_pattern() {
        let cliques: [&[usize]; 2] = [&[0, 1], &[1, 2]];
        let m = ComplexSparseMatrix::from_node_cliques(3, 2, cliques);
        assert_eq!(m.dim(), 6);
        assert_eq!(m.row(0).0, &[0, 1, 2, 3]);
        assert_eq!(m.row(3).0, &[0, 1, 2, 3, 4, 5]);
        assert_eq!(m.row(5).0, &[2, 3, 4, 5]);
    }

    #[test]
    #[should_panic(expected = "not in the sparsity pattern")]
    fn add_outside_pattern_panics() {
        let cliques: [&[usize]; 2] = [&[0], &[1]];
        let mut m = ComplexSparseMatrix::from_node_cliques(2, 1, cliques);
        m.add(0, 1, c(1.0, 0.0));
    }

    #[test]
    fn matrix_market_header() {
        let mut buf = Vec::new();
        sample().write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate complex general"));
        assert_eq!(lines.next(), Some("3 3 5"));
        assert!(lines.next().unwrap().starts_with("1 1 1.0"));
        assert_eq!(s.lines().count(), 7);
    }
}
