//! Dense linear algebra for chain analysis: solves, the Cesàro limit `P*`,
//! the deviation matrix `H` and transient inverses `(I - Q)^-1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::graph::Digraph;
use crate::mdp::ChainStructure;
use crate::{Error, Result};

/// Relative rank threshold: pivots below `RANK_TOLERANCE * ‖A‖∞` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Residual bound for accepted solves, relative to `max(1, ‖b‖∞)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Row-sum slack accepted for stochastic matrices.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-8;
/// Most negative entry tolerated in a transient inverse.
pub const NEGATIVE_TOLERANCE: f64 = -1e-10;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds from rows; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "vector length");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Rows and columns selected by `idx`, in that order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    /// Errors unless every row is a probability distribution.
    pub fn check_stochastic(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, found: self.cols });
        }
        for i in 0..self.rows {
            let row = self.row(i);
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&x| !x.is_finite() || x < -STOCHASTIC_TOLERANCE)
                || (sum - 1.0).abs() > STOCHASTIC_TOLERANCE
            {
                return Err(Error::NotStochastic { row: i, sum });
            }
        }
        Ok(())
    }

    /// Digraph of strictly positive entries.
    pub fn support_graph(&self) -> Digraph {
        let mut g = Digraph::new(self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self[(i, j)] > 0.0 {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solution of a linear system together with its rank diagnosis.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub rank: usize,
    /// Set when `rank < cols`; `x` is then the minimum-norm solution.
    pub rank_deficient: bool,
}

/// Solves a square system `Ax = b`, returning the minimum-norm solution when
/// `A` is singular but the system is consistent.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<LinearSolution> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
    }
    solve_least_norm(a, b)
}

/// Minimum-norm solution of a consistent, possibly rectangular system.
///
/// Gauss-Jordan elimination with partial pivoting yields a particular solution
/// and a null-space basis; the particular solution is then projected onto the
/// orthogonal complement of the null space. Inconsistent systems fail the
/// residual check.
pub fn solve_least_norm(a: &Matrix, b: &[f64]) -> Result<LinearSolution> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: b.len() });
    }
    if !a.is_finite() || b.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure("non-finite input".into()));
    }
    let threshold = RANK_TOLERANCE * a.norm_inf().max(f64::MIN_POSITIVE);

    let mut r = a.clone();
    let mut rhs = b.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row == m {
            break;
        }
        let (p, best) =
            (row..m).map(|i| (i, r[(i, col)].abs())).fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= threshold {
            for i in row..m {
                r[(i, col)] = 0.0;
            }
            continue;
        }
        if p != row {
            for j in 0..n {
                let t = r[(p, j)];
                r[(p, j)] = r[(row, j)];
                r[(row, j)] = t;
            }
            rhs.swap(p, row);
        }
        let pivot = r[(row, col)];
        for j in col..n {
            r[(row, j)] /= pivot;
        }
        rhs[row] /= pivot;
        for i in 0..m {
            if i == row {
                continue;
            }
            let factor = r[(i, col)];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                r[(i, j)] -= factor * r[(row, j)];
            }
            rhs[i] -= factor * rhs[row];
        }
        pivots.push(col);
        row += 1;
    }

    let rank = pivots.len();
    let mut x = vec![0.0; n];
    for (k, &c) in pivots.iter().enumerate() {
        x[c] = rhs[k];
    }

    if rank < n {
        let mut is_pivot = vec![false; n];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let basis: Vec<Vec<f64>> = free
            .iter()
            .map(|&f| {
                let mut z = vec![0.0; n];
                z[f] = 1.0;
                for (k, &c) in pivots.iter().enumerate() {
                    z[c] = -r[(k, f)];
                }
                z
            })
            .collect();
        // x -= N (NᵀN)^-1 Nᵀ x
        let d = basis.len();
        let mut gram = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                gram[(i, j)] = dot(&basis[i], &basis[j]);
            }
        }
        let proj: Vec<f64> = basis.iter().map(|z| dot(z, &x)).collect();
        let coeffs = Lu::factor(&gram)?.solve(&proj);
        for (z, c) in basis.iter().zip(&coeffs) {
            for (xi, zi) in x.iter_mut().zip(z) {
                *xi -= c * zi;
            }
        }
    }

    let residual = norm_inf(&a.mul_vec(&x).iter().zip(b).map(|(ax, bi)| ax - bi).collect::<Vec<_>>());
    let bound = RESIDUAL_TOLERANCE * norm_inf(b).max(1.0);
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN fails too
    if !(residual <= bound) {
        return Err(Error::NumericalFailure(format!("residual {residual:e} exceeds {bound:e} (rank {rank} of {n})")));
    }
    Ok(LinearSolution { x, rank, rank_deficient: rank < n })
}

/// LU factorization with partial pivoting of a nonsingular square matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
        }
        let n = a.rows();
        let threshold = RANK_TOLERANCE * a.norm_inf().max(f64::MIN_POSITIVE);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, best) =
                (k..n).map(|i| (i, lu[(i, k)].abs())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(best > threshold) {
                return Err(Error::NumericalFailure(format!("singular matrix (pivot {best:e} at column {k})")));
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(p, j)];
                    lu[(p, j)] = lu[(k, j)];
                    lu[(k, j)] = t;
                }
                perm.swap(p, k);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= factor * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }
}

/// Inverse of a nonsingular square matrix.
pub fn invert(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let lu = Lu::factor(a)?;
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[j] = 1.0;
        let col = lu.solve(&e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    if !inv.is_finite() {
        return Err(Error::NumericalFailure("non-finite inverse".into()));
    }
    Ok(inv)
}

/// `(I - Q)^-1` for a substochastic `Q` with spectral radius below one.
pub fn transient_inverse(q: &Matrix) -> Result<Matrix> {
    if !q.is_square() {
        return Err(Error::DimensionMismatch { expected: q.rows(), found: q.cols() });
    }
    let n = q.rows();
    let inv = invert(&Matrix::identity(n).sub(q)).map_err(|e| Error::NotTransient(format!("{e}")))?;
    let min = inv.data.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    if min < NEGATIVE_TOLERANCE * inv.max_abs().max(1.0) {
        return Err(Error::NotTransient(format!("inverse has negative entry {min:e}")));
    }
    Ok(inv)
}

/// Cesàro limit `P* = lim (1/N) Σ P^k`, computed from the class structure:
/// stationary distributions of the recurrent classes weighted by absorption
/// probabilities of the transient states.
pub fn cesaro_limit(p: &Matrix) -> Result<Matrix> {
    p.check_stochastic()?;
    let n = p.rows();
    let chain = ChainStructure::of_graph(&p.support_graph());
    let mut limit = Matrix::zeros(n, n);

    let mut stationary = Vec::with_capacity(chain.recurrent_classes.len());
    for class in &chain.recurrent_classes {
        let pi = stationary_distribution(p, class)?;
        for &i in class {
            for (&j, &w) in class.iter().zip(&pi) {
                limit[(i, j)] = w;
            }
        }
        stationary.push(pi);
    }

    let transient = &chain.transient_states;
    if !transient.is_empty() {
        let q = p.submatrix(transient, transient);
        let fundamental = transient_inverse(&q)?;
        for (class, pi) in chain.recurrent_classes.iter().zip(&stationary) {
            let entry: Vec<f64> = transient.iter().map(|&i| class.iter().map(|&j| p[(i, j)]).sum()).collect();
            let absorb = fundamental.mul_vec(&entry);
            for (&i, &a) in transient.iter().zip(&absorb) {
                for (&j, &w) in class.iter().zip(pi) {
                    limit[(i, j)] = a * w;
                }
            }
        }
    }
    Ok(limit)
}

/// Stationary distribution of `p` restricted to a closed class.
fn stationary_distribution(p: &Matrix, class: &[usize]) -> Result<Vec<f64>> {
    let r = class.len();
    if r == 1 {
        return Ok(vec![1.0]);
    }
    // πᵀ (P_R - I) = 0 and Σπ = 1, as an (r+1) × r system in π.
    let mut a = Matrix::zeros(r + 1, r);
    for (row, &j) in class.iter().enumerate() {
        for (col, &i) in class.iter().enumerate() {
            a[(row, col)] = p[(i, j)] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for col in 0..r {
        a[(r, col)] = 1.0;
    }
    let mut b = vec![0.0; r + 1];
    b[r] = 1.0;
    let sol = solve_least_norm(&a, &b)?;
    if sol.rank_deficient {
        return Err(Error::NumericalFailure("reducible class passed as recurrent".into()));
    }
    Ok(sol.x)
}

/// Deviation matrix `H = (I - P + P*)^-1 - P*`.
pub fn deviation_matrix(p: &Matrix) -> Result<Matrix> {
    let limit = cesaro_limit(p)?;
    deviation_matrix_with(p, &limit)
}

/// Deviation matrix given an already computed Cesàro limit.
pub fn deviation_matrix_with(p: &Matrix, limit: &Matrix) -> Result<Matrix> {
    let n = p.rows();
    let fundamental = invert(&Matrix::identity(n).sub(p).add(limit))?;
    Ok(fundamental.sub(limit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
        a.sub(b).max_abs() <= tol
    }

    #[test]
    fn solve_examples() {
        let s = solve_linear(&Matrix::identity(2), &[3.0, 4.0]).unwrap();
        assert_eq!(s.x, vec![3.0, 4.0]);
        assert!(!s.rank_deficient);

        let a = Matrix::from_rows(&[[1.0, -1.0], [0.0, 1.0]]);
        let s = solve_linear(&a, &[0.0, 1.0]).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-14 && (s.x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_system_gives_minimum_norm() {
        // normal equations AᵀA x = Aᵀb restricted to the row space give (1, 1)
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        let s = solve_linear(&a, &[2.0, 2.0]).unwrap();
        assert!(s.rank_deficient);
        assert_eq!(s.rank, 1);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_system_fails() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(solve_linear(&a, &[1.0, 2.0]), Err(Error::NumericalFailure(_))));
        assert!(matches!(solve_linear(&Matrix::zeros(2, 3), &[0.0, 0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cesaro_examples() {
        let id = Matrix::identity(2);
        assert!(close(&cesaro_limit(&id).unwrap(), &id, 1e-15));

        let swap = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        assert!(close(&cesaro_limit(&swap).unwrap(), &Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]), 1e-14));

        let absorb = Matrix::from_rows(&[[1.0, 0.0], [0.5, 0.5]]);
        assert!(close(&cesaro_limit(&absorb).unwrap(), &Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]), 1e-14));
    }

    #[test]
    fn cesaro_rejects_non_stochastic() {
        let bad = Matrix::from_rows(&[[0.5, 0.4], [0.0, 1.0]]);
        assert!(matches!(cesaro_limit(&bad), Err(Error::NotStochastic { row: 0, .. })));
    }

    #[test]
    fn deviation_examples() {
        let h = deviation_matrix(&Matrix::identity(2)).unwrap();
        assert!(h.max_abs() < 1e-15);

        let swap = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        let h = deviation_matrix(&swap).unwrap();
        assert!(close(&h, &Matrix::from_rows(&[[0.25, -0.25], [-0.25, 0.25]]), 1e-14));
    }

    #[test]
    fn transient_inverse_examples() {
        assert!(close(&transient_inverse(&Matrix::zeros(2, 2)).unwrap(), &Matrix::identity(2), 0.0));
        let q = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        assert!(close(&transient_inverse(&q).unwrap(), &Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]), 1e-15));
        let q = Matrix::from_rows(&[[0.5, 0.0], [0.0, 0.0]]);
        assert!(close(&transient_inverse(&q).unwrap(), &Matrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]]), 1e-15));
        assert!(matches!(transient_inverse(&Matrix::identity(2)), Err(Error::NotTransient(_))));
    }

    #[test]
    fn three_state_absorption() {
        // transient 2 splits into absorbing 0 (0.3) and the 2-cycle {1,3} (0.7)
        let p = Matrix::from_rows(&[
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.3, 0.7, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ]);
        let limit = cesaro_limit(&p).unwrap();
        let expect = Matrix::from_rows(&[
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.5, 0.0, 0.5],
            [0.3, 0.35, 0.0, 0.35],
            [0.0, 0.5, 0.0, 0.5],
        ]);
        assert!(close(&limit, &expect, 1e-14));
    }
}
