//! Compressed sparse row matrices and the linear solvers used by the schemes.
//!
//! Direct solves go through a supernodal sparse LU with partial pivoting, or
//! for symmetric systems a supernodal `L B L^T` factorisation. The symbolic
//! analysis depends only on the sparsity pattern, and the pattern never
//! changes along a run, so both solvers compute it once and reuse it.

use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::Solve;
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, IntranodeLbltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side};

use crate::error::{Error, Result};

/// Sorted, duplicate-free CSR structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrPattern {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
}

impl CsrPattern {
    /// Builds a pattern from per-row column lists; columns are sorted and deduplicated.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        let nrows = rows.len();
        for mut cols in rows {
            cols.sort_unstable();
            cols.dedup();
            debug_assert!(cols.last().is_none_or(|&c| c < ncols));
            col_indices.extend(cols);
            row_offsets.push(col_indices.len());
        }
        CsrPattern {
            nrows,
            ncols,
            row_offsets,
            col_indices,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    /// Position of entry `(i, j)` in the value array.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        self.row(i).binary_search(&j).ok().map(|k| self.row_offsets[i] + k)
    }
}

#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pattern: Arc<CsrPattern>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(pattern: Arc<CsrPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        SparseMatrix { pattern, values }
    }

    pub fn from_parts(pattern: Arc<CsrPattern>, values: Vec<f64>) -> Result<Self> {
        if values.len() != pattern.nnz() {
            return Err(Error::LengthMismatch {
                expected: pattern.nnz(),
                found: values.len(),
            });
        }
        Ok(SparseMatrix { pattern, values })
    }

    /// Sums duplicate entries.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); nrows];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let pattern = Arc::new(CsrPattern::from_rows(ncols, rows));
        let mut m = SparseMatrix::zeros(pattern);
        for &(i, j, v) in triplets {
            let k = m.pattern.position(i, j).unwrap();
            m.values[k] += v;
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        SparseMatrix::from_triplets(n, n, &triplets)
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let triplets: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(j, &v)| (i, j, v)))
            .collect();
        SparseMatrix::from_triplets(rows.len(), ncols, &triplets)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols()]; self.nrows()];
        for i in 0..self.nrows() {
            for (j, v) in self.row(i) {
                d[i][j] = v;
            }
        }
        d
    }

    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    pub fn nrows(&self) -> usize {
        self.pattern.nrows
    }

    pub fn ncols(&self) -> usize {
        self.pattern.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.pattern.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.pattern.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.pattern.row_offsets[i]..self.pattern.row_offsets[i + 1];
        self.pattern.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols());
        assert_eq!(y.len(), self.nrows());
        let offsets = &self.pattern.row_offsets;
        let cols = &self.pattern.col_indices;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in offsets[i]..offsets[i + 1] {
                s += self.values[k] * x[cols[k]];
            }
            *yi = s;
        }
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// Row sums, `A 1`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows())
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.nrows()).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        SparseMatrix {
            pattern: self.pattern.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `sum_k c_k A_k` for matrices sharing one pattern.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> SparseMatrix {
        let (_, first) = terms[0];
        let mut values = vec![0.0; first.nnz()];
        for &(c, m) in terms {
            assert!(m.same_pattern(first), "linear_combination needs a shared pattern");
            for (acc, v) in values.iter_mut().zip(&m.values) {
                *acc += c * v;
            }
        }
        SparseMatrix {
            pattern: first.pattern.clone(),
            values,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.get(i, i)).collect()
    }
}

/// Pattern of the 2x2 block matrix `[[P, P], [P, P]]` for a square pattern `P`.
pub fn block_pattern(p: &CsrPattern) -> CsrPattern {
    let n = p.nrows();
    let rows = (0..2 * n)
        .map(|r| {
            let cols = p.row(r % n);
            cols.iter().copied().chain(cols.iter().map(|&c| c + n)).collect()
        })
        .collect();
    CsrPattern::from_rows(2 * n, rows)
}

/// Assembles `[[a, b], [c, d]]` where all four blocks share one square pattern
/// and `block` was produced by [`block_pattern`] from it.
pub fn block_2x2(block: &Arc<CsrPattern>, a: &SparseMatrix, b: &SparseMatrix, c: &SparseMatrix, d: &SparseMatrix) -> SparseMatrix {
    let n = a.nrows();
    debug_assert!(a.same_pattern(b) && a.same_pattern(c) && a.same_pattern(d));
    debug_assert_eq!(block.nrows(), 2 * n);
    let mut values = Vec::with_capacity(block.nnz());
    let offsets = a.row_offsets();
    for (left, right) in [(a, b), (c, d)] {
        for i in 0..n {
            let range = offsets[i]..offsets[i + 1];
            values.extend_from_slice(&left.values[range.clone()]);
            values.extend_from_slice(&right.values[range]);
        }
    }
    SparseMatrix {
        pattern: block.clone(),
        values,
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolverKind {
    #[default]
    Lu,
    /// Supernodal `L B L^T` with Bunch-Kaufman pivoting inside supernodes;
    /// the matrix must be symmetric.
    SymmetricIndefinite,
    BiCgStab,
}

impl LinearSolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            LinearSolverKind::Lu => "lu",
            LinearSolverKind::SymmetricIndefinite => "ldlt",
            LinearSolverKind::BiCgStab => "bicgstab",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "lu" => Some(LinearSolverKind::Lu),
            "ldlt" | "lblt" => Some(LinearSolverKind::SymmetricIndefinite),
            "bicgstab" => Some(LinearSolverKind::BiCgStab),
            _ => None,
        }
    }
}

/// Relative backward error accepted from a direct solve.
pub const DIRECT_TOL: f64 = 1e-12;

/// Sparse LU with the symbolic factorisation cached per pattern.
#[derive(Default)]
pub struct LuSolver {
    symbolic: Option<(Arc<CsrPattern>, SymbolicLu<usize>)>,
}

pub struct LuFactors<'m> {
    matrix: &'m SparseMatrix,
    lu: Lu<usize, f64>,
}

impl LuSolver {
    pub fn new() -> Self {
        LuSolver::default()
    }

    /// Factorises `a`. The CSR arrays of `a` are read as the CSC arrays of
    /// `a^T`, which is what gets factorised; solves then use the transpose.
    pub fn factor<'m>(&mut self, a: &'m SparseMatrix) -> Result<LuFactors<'m>> {
        if a.nrows() != a.ncols() {
            return Err(Error::LengthMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let n = a.nrows();
        let symbolic_mat = SymbolicSparseColMatRef::new_checked(n, n, a.row_offsets(), None, a.col_indices());
        let cached = match &self.symbolic {
            Some((p, s)) if Arc::ptr_eq(p, a.pattern()) || **p == **a.pattern() => s.clone(),
            _ => {
                let s = SymbolicLu::try_new(symbolic_mat).map_err(|_| Error::SingularMatrix)?;
                self.symbolic = Some((a.pattern().clone(), s.clone()));
                s
            }
        };
        let mat = SparseColMatRef::new(symbolic_mat, a.values());
        let lu = Lu::try_new_with_symbolic(cached, mat).map_err(|_| Error::SingularMatrix)?;
        Ok(LuFactors { matrix: a, lu })
    }
}

impl LuFactors<'_> {
    /// Solves `A x = b` with iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        refined_solve(self.matrix, b, |x| self.solve_in_place(x))
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        let rhs = MatMut::from_column_major_slice_mut(x, n, 1);
        self.lu.solve_transpose_in_place(rhs);
    }
}

/// Symmetric indefinite factorisation with the symbolic part cached per
/// pattern. Only the lower triangle of the matrix is read.
#[derive(Default)]
pub struct SymmetricSolver {
    symbolic: Option<(Arc<CsrPattern>, Arc<SymbolicCholesky<usize>>)>,
}

pub struct SymmetricFactors<'m> {
    matrix: &'m SparseMatrix,
    symbolic: Arc<SymbolicCholesky<usize>>,
    values: Vec<f64>,
    subdiag: Vec<f64>,
    perm_fwd: Vec<usize>,
    perm_inv: Vec<usize>,
}

impl SymmetricSolver {
    pub fn new() -> Self {
        SymmetricSolver::default()
    }

    pub fn factor<'m>(&mut self, a: &'m SparseMatrix) -> Result<SymmetricFactors<'m>> {
        if a.nrows() != a.ncols() {
            return Err(Error::LengthMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let n = a.nrows();
        // CSR of a symmetric matrix is also its CSC
        let structure = SymbolicSparseColMatRef::new_checked(n, n, a.row_offsets(), None, a.col_indices());
        let symbolic = match &self.symbolic {
            Some((p, s)) if Arc::ptr_eq(p, a.pattern()) || **p == **a.pattern() => s.clone(),
            _ => {
                let params = CholeskySymbolicParams {
                    supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
                    ..Default::default()
                };
                let s = factorize_symbolic_cholesky(structure, Side::Lower, SymmetricOrdering::Amd, params)
                    .map_err(|_| Error::SingularMatrix)?;
                let s = Arc::new(s);
                self.symbolic = Some((a.pattern().clone(), s.clone()));
                s
            }
        };
        let mut values = vec![0.0; symbolic.len_val()];
        let mut subdiag = vec![0.0; n];
        let mut perm_fwd = vec![0; n];
        let mut perm_inv = vec![0; n];
        let mut buf = MemBuffer::new(symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(Par::Seq, Default::default()));
        symbolic.factorize_numeric_intranode_lblt(
            &mut values,
            &mut subdiag,
            &mut perm_fwd,
            &mut perm_inv,
            SparseColMatRef::new(structure, a.values()),
            Side::Lower,
            Par::Seq,
            MemStack::new(&mut buf),
            Default::default(),
        );
        Ok(SymmetricFactors {
            matrix: a,
            symbolic,
            values,
            subdiag,
            perm_fwd,
            perm_inv,
        })
    }
}

impl SymmetricFactors<'_> {
    /// Solves `A x = b` with iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        refined_solve(self.matrix, b, |x| self.solve_in_place(x))
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        let perm = PermRef::new_checked(&self.perm_fwd, &self.perm_inv, n);
        let lblt = IntranodeLbltRef::new(&self.symbolic, &self.values, &self.subdiag, perm);
        let mut buf = MemBuffer::new(lblt.solve_in_place_scratch::<f64>(1, Par::Seq));
        lblt.solve_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(x, n, 1), Par::Seq, MemStack::new(&mut buf));
    }
}

/// Direct solve followed by up to three refinement steps. Fails with
/// `SingularMatrix` when the backward error stays large.
fn refined_solve(a: &SparseMatrix, b: &[f64], solve_in_place: impl Fn(&mut [f64])) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(Error::LengthMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let mut x = b.to_vec();
    solve_in_place(&mut x);
    let a_norm = a.norm_inf();
    let b_norm = norm_inf(b);
    for _ in 0..3 {
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularMatrix);
        }
        let r = residual(a, &x, b);
        let scale = a_norm * norm_inf(&x) + b_norm;
        if norm_inf(&r) <= DIRECT_TOL * scale || scale == 0.0 {
            return Ok(x);
        }
        let mut dx = r;
        solve_in_place(&mut dx);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    let r = residual(a, &x, b);
    let scale = a_norm * norm_inf(&x) + b_norm;
    if x.iter().all(|v| v.is_finite()) && norm_inf(&r) <= 1e-8 * scale {
        Ok(x)
    } else {
        Err(Error::SingularMatrix)
    }
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Solves `A x = b` with the chosen method.
pub fn solve_sparse(a: &SparseMatrix, b: &[f64], kind: LinearSolverKind) -> Result<Vec<f64>> {
    match kind {
        LinearSolverKind::Lu => LuSolver::new().factor(a)?.solve(b),
        LinearSolverKind::SymmetricIndefinite => SymmetricSolver::new().factor(a)?.solve(b),
        LinearSolverKind::BiCgStab => bicgstab(a, b, None, DIRECT_TOL, 20 * a.nrows().max(50)),
    }
}

/// Jacobi-preconditioned BiCGStab. Converged when `||b - A x||_2 <= tol ||b||_2`.
pub fn bicgstab(a: &SparseMatrix, b: &[f64], x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.nrows();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(a, d)| a * d).collect() };
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = residual(a, &x, b);
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for it in 0..max_iter {
        let res = norm2(&r);
        if res <= tol * b_norm {
            return Ok(x);
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 || omega == 0.0 {
            return Err(Error::IterativeBreakdown {
                iterations: it,
                residual: res / b_norm,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        a.mul_vec_into(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom.abs() < 1e-300 {
            return Err(Error::IterativeBreakdown {
                iterations: it,
                residual: res / b_norm,
            });
        }
        alpha = rho / denom;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm2(&s) <= tol * b_norm {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok(x);
        }
        let s_hat = precond(&s);
        let t = a.mul_vec(&s_hat);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
    }
    Err(Error::IterativeBreakdown {
        iterations: max_iter,
        residual: norm2(&r) / b_norm,
    })
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite `A`.
pub fn conjugate_gradient(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    pcg(a, b, tol, max_iter, |_| {})
}

/// Compatibility threshold for right-hand sides of the singular stiffness system.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// Solves `A x = b` for a stiffness matrix whose kernel is the constants,
/// returning the solution with `1^T M x = 0`.
pub fn solve_mean_zero_spd(a: &SparseMatrix, b: &[f64], m: &SparseMatrix) -> Result<Vec<f64>> {
    let n = a.nrows();
    let sum: f64 = b.iter().sum();
    let scale: f64 = b.iter().map(|v| v.abs()).sum();
    if sum.abs() > COMPATIBILITY_TOL * scale {
        return Err(Error::IncompatibleRhs { sum });
    }
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let shift = sum / n as f64;
    let b: Vec<f64> = b.iter().map(|v| v - shift).collect();
    let project = |v: &mut [f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|x| *x -= mean);
    };
    let mut x = pcg(a, &b, 1e-13, 10 * n + 100, project)?;
    let lumped = m.row_sums();
    let weighted: f64 = dot(&lumped, &x);
    let area: f64 = lumped.iter().sum();
    let c = weighted / area;
    x.iter_mut().for_each(|v| *v -= c);
    Ok(x)
}

fn pcg(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize, project: impl Fn(&mut [f64])) -> Result<Vec<f64>> {
    let n = a.nrows();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    project(&mut r);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        if norm2(&r) <= tol * b_norm {
            return Ok(x);
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::IterativeBreakdown {
                iterations: 0,
                residual: norm2(&r) / b_norm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        project(&mut r);
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = norm2(&r) / b_norm;
    if residual <= 1e3 * tol {
        return Ok(x);
    }
    Err(Error::IterativeBreakdown {
        iterations: max_iter,
        residual,
    })
}
