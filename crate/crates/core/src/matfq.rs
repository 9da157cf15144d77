//! Dense matrices over a prime field, with exact Gauss–Jordan elimination,
//! structured constructors (Vandermonde, Cauchy) and the combinatorial
//! verifiers for encoding-matrix rank conditions.
//!
//! Pivoting picks the first nonzero entry in a column; arithmetic is exact,
//! so there are no stability concerns.

use itertools::Itertools;
use thiserror::Error;

use crate::ffield::{FieldCtx, FieldElement, FieldError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("duplicate evaluation point {0}")]
    DuplicatePoint(u64),
    #[error("zero is not a valid evaluation point")]
    ZeroPoint,
    #[error("degenerate point sets: {0}")]
    DegeneratePoints(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Row-major matrix over `F_q`. All entries share one field context.
#[derive(Clone, PartialEq, Eq)]
pub struct MatrixFq {
    rows: usize,
    cols: usize,
    ctx: FieldCtx,
    data: Vec<u64>,
}

impl MatrixFq {
    pub fn zeros(ctx: FieldCtx, rows: usize, cols: usize) -> Self {
        MatrixFq {
            rows,
            cols,
            ctx,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(ctx: FieldCtx, n: usize) -> Self {
        let mut m = MatrixFq::zeros(ctx, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % ctx.modulus();
        }
        m
    }

    /// Builds a matrix from integer rows, reducing each entry modulo `q`.
    pub fn from_rows(ctx: FieldCtx, rows: &[&[u64]]) -> Result<Self, MatError> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MatError::DimensionMismatch("ragged rows".into()));
        }
        let q = ctx.modulus();
        Ok(MatrixFq {
            rows: rows.len(),
            cols,
            ctx,
            data: rows.iter().flat_map(|r| r.iter().map(|&v| v % q)).collect(),
        })
    }

    /// Builds from elements; all must belong to `ctx`.
    pub fn from_elems(
        ctx: FieldCtx,
        rows: usize,
        cols: usize,
        elems: &[FieldElement],
    ) -> Result<Self, MatError> {
        if elems.len() != rows * cols {
            return Err(MatError::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                elems.len()
            )));
        }
        let mut data = Vec::with_capacity(elems.len());
        for e in elems {
            if e.ctx() != ctx {
                return Err(FieldError::FieldMismatch {
                    left: ctx.modulus(),
                    right: e.ctx().modulus(),
                }
                .into());
            }
            data.push(e.value());
        }
        Ok(MatrixFq {
            rows,
            cols,
            ctx,
            data,
        })
    }

    pub fn from_row_vec(ctx: FieldCtx, elems: &[FieldElement]) -> Result<Self, MatError> {
        MatrixFq::from_elems(ctx, 1, elems.len(), elems)
    }

    pub fn from_col_vec(ctx: FieldCtx, elems: &[FieldElement]) -> Result<Self, MatError> {
        MatrixFq::from_elems(ctx, elems.len(), 1, elems)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        self.ctx.elem(self.data[i * self.cols + j])
    }

    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) -> Result<(), MatError> {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        if v.ctx() != self.ctx {
            return Err(FieldError::FieldMismatch {
                left: self.ctx.modulus(),
                right: v.ctx().modulus(),
            }
            .into());
        }
        self.data[i * self.cols + j] = v.value();
        Ok(())
    }

    pub fn row(&self, i: usize) -> Vec<FieldElement> {
        assert!(i < self.rows, "row index out of range");
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn col(&self, j: usize) -> Vec<FieldElement> {
        assert!(j < self.cols, "column index out of range");
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    fn check_same_ctx(&self, other: &MatrixFq) -> Result<(), MatError> {
        if self.ctx != other.ctx {
            return Err(FieldError::FieldMismatch {
                left: self.ctx.modulus(),
                right: other.ctx.modulus(),
            }
            .into());
        }
        Ok(())
    }

    pub fn matmul(&self, other: &MatrixFq) -> Result<MatrixFq, MatError> {
        self.check_same_ctx(other)?;
        if self.cols != other.rows {
            return Err(MatError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = MatrixFq::zeros(self.ctx, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u64;
                for t in 0..self.cols {
                    acc = self.ctx.add_raw(
                        acc,
                        self.ctx
                            .mul_raw(self.data[i * self.cols + t], other.data[t * other.cols + j]),
                    );
                }
                out.data[i * other.cols + j] = acc;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &MatrixFq) -> Result<MatrixFq, MatError> {
        self.check_same_ctx(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatError::DimensionMismatch("shape mismatch in add".into()));
        }
        let mut out = self.clone();
        for (a, &b) in out.data.iter_mut().zip(&other.data) {
            *a = self.ctx.add_raw(*a, b);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &MatrixFq) -> Result<MatrixFq, MatError> {
        self.check_same_ctx(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatError::DimensionMismatch("shape mismatch in sub".into()));
        }
        let mut out = self.clone();
        for (a, &b) in out.data.iter_mut().zip(&other.data) {
            *a = self.ctx.sub_raw(*a, b);
        }
        Ok(out)
    }

    pub fn scale(&self, factor: FieldElement) -> Result<MatrixFq, MatError> {
        if factor.ctx() != self.ctx {
            return Err(FieldError::FieldMismatch {
                left: self.ctx.modulus(),
                right: factor.ctx().modulus(),
            }
            .into());
        }
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = self.ctx.mul_raw(*a, factor.value());
        }
        Ok(out)
    }

    pub fn transpose(&self) -> MatrixFq {
        let mut out = MatrixFq::zeros(self.ctx, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Horizontal concatenation `[self | right]`.
    pub fn hstack(&self, right: &MatrixFq) -> Result<MatrixFq, MatError> {
        self.check_same_ctx(right)?;
        if self.rows != right.rows {
            return Err(MatError::DimensionMismatch(
                "row counts differ in hstack".into(),
            ));
        }
        let cols = self.cols + right.cols;
        let mut out = MatrixFq::zeros(self.ctx, self.rows, cols);
        for i in 0..self.rows {
            out.data[i * cols..i * cols + self.cols]
                .copy_from_slice(&self.data[i * self.cols..(i + 1) * self.cols]);
            out.data[i * cols + self.cols..(i + 1) * cols]
                .copy_from_slice(&right.data[i * right.cols..(i + 1) * right.cols]);
        }
        Ok(out)
    }

    /// Vertical concatenation `[self; below]`.
    pub fn vstack(&self, below: &MatrixFq) -> Result<MatrixFq, MatError> {
        self.check_same_ctx(below)?;
        if self.cols != below.cols {
            return Err(MatError::DimensionMismatch(
                "column counts differ in vstack".into(),
            ));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        Ok(MatrixFq {
            rows: self.rows + below.rows,
            cols: self.cols,
            ctx: self.ctx,
            data,
        })
    }

    /// Submatrix on the given row and column indices, preserving their order.
    pub fn submatrix(&self, row_ids: &[usize], col_ids: &[usize]) -> Result<MatrixFq, MatError> {
        for &i in row_ids {
            if i >= self.rows {
                return Err(MatError::IndexOutOfRange(format!(
                    "row {i} of a {}-row matrix",
                    self.rows
                )));
            }
        }
        for &j in col_ids {
            if j >= self.cols {
                return Err(MatError::IndexOutOfRange(format!(
                    "column {j} of a {}-column matrix",
                    self.cols
                )));
            }
        }
        let mut out = MatrixFq::zeros(self.ctx, row_ids.len(), col_ids.len());
        for (oi, &i) in row_ids.iter().enumerate() {
            for (oj, &j) in col_ids.iter().enumerate() {
                out.data[oi * col_ids.len() + oj] = self.data[i * self.cols + j];
            }
        }
        Ok(out)
    }

    pub fn select_rows(&self, row_ids: &[usize]) -> Result<MatrixFq, MatError> {
        self.submatrix(row_ids, &(0..self.cols).collect::<Vec<_>>())
    }

    pub fn select_cols(&self, col_ids: &[usize]) -> Result<MatrixFq, MatError> {
        self.submatrix(&(0..self.rows).collect::<Vec<_>>(), col_ids)
    }

    /// Reduced row echelon form; also returns the pivot column of each
    /// pivot row.
    pub fn rref(&self) -> (MatrixFq, Vec<usize>) {
        let mut m = self.clone();
        let ctx = m.ctx;
        let mut pivots = Vec::new();
        let mut pivot_row = 0usize;
        for col in 0..m.cols {
            if pivot_row == m.rows {
                break;
            }
            let found = (pivot_row..m.rows).find(|&r| m.data[r * m.cols + col] != 0);
            let Some(r) = found else { continue };
            if r != pivot_row {
                for j in 0..m.cols {
                    m.data.swap(r * m.cols + j, pivot_row * m.cols + j);
                }
            }
            let inv = ctx
                .inv_raw(m.data[pivot_row * m.cols + col])
                .expect("pivot is nonzero");
            for j in 0..m.cols {
                m.data[pivot_row * m.cols + j] = ctx.mul_raw(m.data[pivot_row * m.cols + j], inv);
            }
            for r2 in 0..m.rows {
                if r2 == pivot_row {
                    continue;
                }
                let factor = m.data[r2 * m.cols + col];
                if factor == 0 {
                    continue;
                }
                for j in 0..m.cols {
                    let delta = ctx.mul_raw(factor, m.data[pivot_row * m.cols + j]);
                    m.data[r2 * m.cols + j] = ctx.sub_raw(m.data[r2 * m.cols + j], delta);
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        (m, pivots)
    }

    /// Reduced column echelon form: the canonical basis of the column space.
    pub fn rcef(&self) -> MatrixFq {
        self.transpose().rref().0.transpose()
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn invert(&self) -> Result<MatrixFq, MatError> {
        if self.rows != self.cols {
            return Err(MatError::DimensionMismatch(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let aug = self.hstack(&MatrixFq::identity(self.ctx, n))?;
        let (red, pivots) = aug.rref();
        if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return Err(MatError::Singular);
        }
        red.select_cols(&(n..2 * n).collect::<Vec<_>>())
    }

    /// Solves `A x = b` for a column (or multi-column) right-hand side.
    /// Free variables, if any, are set to zero.
    pub fn solve(&self, b: &MatrixFq) -> Result<MatrixFq, MatError> {
        self.check_same_ctx(b)?;
        if b.rows != self.rows {
            return Err(MatError::DimensionMismatch(
                "right-hand side row count differs from matrix".into(),
            ));
        }
        let aug = self.hstack(b)?;
        let (red, pivots) = aug.rref();
        // A pivot beyond A's columns means an equation 0 = nonzero.
        if pivots.iter().any(|&p| p >= self.cols) {
            return Err(MatError::Inconsistent);
        }
        let mut x = MatrixFq::zeros(self.ctx, self.cols, b.cols);
        for (r, &p) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                x.data[p * b.cols + j] = red.data[r * red.cols + self.cols + j];
            }
        }
        Ok(x)
    }

    /// Basis of the right null space, returned as matrix columns.
    pub fn null_space(&self) -> MatrixFq {
        let (red, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = MatrixFq::zeros(self.ctx, self.cols, free.len());
        for (bi, &fc) in free.iter().enumerate() {
            basis.data[fc * free.len() + bi] = 1 % self.ctx.modulus();
            for (r, &p) in pivots.iter().enumerate() {
                let v = red.data[r * red.cols + fc];
                basis.data[p * free.len() + bi] = self.ctx.sub_raw(0, v);
            }
        }
        basis
    }
}

impl std::fmt::Debug for MatrixFq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "MatrixFq {}x{} over F_{}",
            self.rows,
            self.cols,
            self.ctx.modulus()
        )?;
        for i in 0..self.rows {
            writeln!(
                f,
                "  [{}]",
                (0..self.cols)
                    .map(|j| self.data[i * self.cols + j].to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            )?;
        }
        Ok(())
    }
}

/// Vandermonde matrix on distinct nonzero points: row i is
/// `[1, x_i, x_i^2, ..., x_i^{width-1}]`.
pub fn vandermonde(
    ctx: FieldCtx,
    points: &[FieldElement],
    width: usize,
) -> Result<MatrixFq, MatError> {
    let mut seen = std::collections::HashSet::new();
    for p in points {
        if p.ctx() != ctx {
            return Err(FieldError::FieldMismatch {
                left: ctx.modulus(),
                right: p.ctx().modulus(),
            }
            .into());
        }
        if p.is_zero() {
            return Err(MatError::ZeroPoint);
        }
        if !seen.insert(p.value()) {
            return Err(MatError::DuplicatePoint(p.value()));
        }
    }
    let mut m = MatrixFq::zeros(ctx, points.len(), width);
    for (i, p) in points.iter().enumerate() {
        let mut acc = ctx.one();
        for j in 0..width {
            m.data[i * width + j] = acc.value();
            acc = acc * *p;
        }
    }
    Ok(m)
}

/// Cauchy matrix: entry (i, j) is `1 / (x_i - y_j)`. Every square submatrix
/// of the result is invertible.
pub fn cauchy(
    ctx: FieldCtx,
    xs: &[FieldElement],
    ys: &[FieldElement],
) -> Result<MatrixFq, MatError> {
    let mut seen_x = std::collections::HashSet::new();
    for x in xs {
        if !seen_x.insert(x.value()) {
            return Err(MatError::DegeneratePoints(format!(
                "repeated x point {}",
                x.value()
            )));
        }
    }
    let mut seen_y = std::collections::HashSet::new();
    for y in ys {
        if !seen_y.insert(y.value()) {
            return Err(MatError::DegeneratePoints(format!(
                "repeated y point {}",
                y.value()
            )));
        }
        if seen_x.contains(&y.value()) {
            return Err(MatError::DegeneratePoints(format!(
                "point {} appears in both sets",
                y.value()
            )));
        }
    }
    let mut m = MatrixFq::zeros(ctx, xs.len(), ys.len());
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            let e = (*x - *y).inv().expect("x - y is nonzero for disjoint sets");
            m.data[i * ys.len() + j] = e.value();
        }
    }
    Ok(m)
}

/// Outcome of an encoding-matrix verification. `failures` carries a witness
/// for every violated condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsiReport {
    pub ok: bool,
    pub failures: Vec<PsiViolation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PsiViolation {
    /// A row subset that should have full rank but does not (0-based rows).
    RankDeficientRows {
        matrix: &'static str,
        rows: Vec<usize>,
    },
    /// Two equal diagonal entries where all must be distinct (0-based rows).
    DuplicateLambda { first: usize, second: usize },
}

impl PsiReport {
    fn from_failures(failures: Vec<PsiViolation>) -> Self {
        PsiReport {
            ok: failures.is_empty(),
            failures,
        }
    }
}

fn full_rank_row_subsets(m: &MatrixFq, size: usize, name: &'static str) -> Vec<PsiViolation> {
    let mut failures = Vec::new();
    if size == 0 {
        return failures;
    }
    for subset in (0..m.rows()).combinations(size) {
        let sub = m.select_rows(&subset).expect("indices in range");
        if sub.rank() < size.min(m.cols()) || size > m.cols() {
            failures.push(PsiViolation::RankDeficientRows {
                matrix: name,
                rows: subset,
            });
        }
    }
    failures
}

/// Exhaustively checks the rank conditions for a bandwidth-optimal encoding
/// matrix `psi = [phi | delta]`: every `d`-row subset of `psi` must be
/// invertible and every `k`-row subset of the first `k` columns likewise.
pub fn verify_mbr_psi(psi: &MatrixFq, k: usize) -> PsiReport {
    let d = psi.cols();
    let mut failures = full_rank_row_subsets(psi, d, "psi");
    let phi = psi
        .select_cols(&(0..k).collect::<Vec<_>>())
        .expect("k <= d by contract");
    failures.extend(full_rank_row_subsets(&phi, k, "phi"));
    PsiReport::from_failures(failures)
}

/// Exhaustively checks the storage-optimal conditions: every `d`-row subset
/// of `[phi | diag(lambda) * phi]` invertible, every `alpha`-row subset of
/// `phi` invertible, and all `lambda` values distinct.
pub fn verify_msr_psi(phi: &MatrixFq, lambda: &[FieldElement], d: usize) -> PsiReport {
    assert_eq!(
        phi.rows(),
        lambda.len(),
        "one lambda per row of phi required"
    );
    let alpha = phi.cols();
    let mut failures = Vec::new();
    for i in 0..lambda.len() {
        for j in i + 1..lambda.len() {
            if lambda[i] == lambda[j] {
                failures.push(PsiViolation::DuplicateLambda {
                    first: i,
                    second: j,
                });
            }
        }
    }
    let mut scaled = phi.clone();
    #[allow(clippy::needless_range_loop)]
    for i in 0..phi.rows() {
        for j in 0..alpha {
            scaled
                .set(i, j, phi.get(i, j) * lambda[i])
                .expect("same field");
        }
    }
    let psi = phi.hstack(&scaled).expect("same shape");
    failures.extend(full_rank_row_subsets(&psi, d, "psi"));
    failures.extend(full_rank_row_subsets(phi, alpha, "phi"));
    PsiReport::from_failures(failures)
}
