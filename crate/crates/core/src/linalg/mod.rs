//! Dense complex vectors and matrices at radio-array sizes (dims <= 16 in
//! practice), plus the four operations everything else leans on: line
//! projection, unnormalized Gram-Schmidt with dependence dropping, orthogonal
//! projector construction, and Hermitian linear solves.
//!
//! Inner products are Hermitian throughout: `inner(x, y) = x^H y`, conjugation
//! on the left argument. Projectors are built as `P = A (A^H A)^-1 A^H`; a
//! plain-transpose variant exists only to demonstrate that using `A^T` instead
//! of `A^H` yields a non-Hermitian artifact on complex data.

mod solve;

pub use solve::hermitian_solve;
pub(crate) use solve::lu_solve_columns;

use thiserror::Error;

pub type C64 = num_complex::Complex64;

/// Shorthand for complex literals in tests and fixtures.
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("projection axis has zero norm")]
    ZeroVector,
    #[error("basis is empty")]
    EmptyBasis,
    #[error("Gram matrix is singular or numerically rank-deficient")]
    SingularGram,
    #[error("matrix is ill-conditioned (pivot ratio {0:.3e})")]
    IllConditioned(f64),
    #[error("matrix is not Hermitian within tolerance")]
    NotHermitian,
}

/// Numeric thresholds used by the kernel operations. Library defaults are the
/// module constants below; simulation configs may override the dependence
/// threshold.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// A candidate basis vector is dropped when its residual norm after
    /// orthogonalization falls below this fraction of its input norm.
    pub dependence_rel: f64,
    /// Pairwise orthogonality bound for validated bases, relative to the
    /// product of the two norms.
    pub orthogonality_rel: f64,
    /// Solves reporting a pivot-magnitude ratio above this are rejected as
    /// ill-conditioned.
    pub condition_max: f64,
    /// Hermitian symmetry check, relative to the Frobenius norm.
    pub hermitian_rel: f64,
}

pub const DEFAULT_TOLERANCES: Tolerances = Tolerances {
    dependence_rel: 1e-10,
    orthogonality_rel: 1e-9,
    condition_max: 1e12,
    hermitian_rel: 1e-8,
};

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT_TOLERANCES
    }
}

/// Column vector over C64.
#[derive(Debug, Clone, PartialEq)]
pub struct CVec {
    data: Vec<C64>,
}

impl CVec {
    pub fn new(data: Vec<C64>) -> Self {
        CVec { data }
    }

    pub fn zeros(n: usize) -> Self {
        CVec { data: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn from_real(data: &[f64]) -> Self {
        CVec { data: data.iter().map(|&r| C64::new(r, 0.0)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// Hermitian inner product `self^H other`.
    pub fn inner(&self, other: &CVec) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: C64) -> CVec {
        CVec { data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &CVec) -> CVec {
        debug_assert_eq!(self.dim(), other.dim());
        CVec {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CVec) -> CVec {
        debug_assert_eq!(self.dim(), other.dim());
        CVec {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `self -= s * other`, in place.
    pub fn sub_scaled_assign(&mut self, s: C64, other: &CVec) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= s * b;
        }
    }

    pub fn normalized(&self) -> Result<CVec, LinalgError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(LinalgError::ZeroVector);
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }
}

impl std::ops::Index<usize> for CVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for CVec {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.data[i]
    }
}

/// Dense row-major matrix over C64.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        CMat { rows: r, cols: c, data }
    }

    /// Matrix whose j-th column is `cols[j]`.
    pub fn from_cols(cols: &[CVec]) -> Self {
        let c = cols.len();
        let r = if c == 0 { 0 } else { cols[0].dim() };
        let mut m = CMat::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.dim(), r, "ragged columns");
            for i in 0..r {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> CVec {
        CVec::new((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn transpose(&self) -> CMat {
        let mut t = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        let mut t = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].conj();
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &CVec) -> CVec {
        assert_eq!(self.cols, v.dim(), "matrix-vector dimension mismatch");
        let mut out = CVec::zeros(self.rows);
        for i in 0..self.rows {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matrix-matrix dimension mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    /// `self += w * v v^H`.
    pub fn add_scaled_outer(&mut self, v: &CVec, w: f64) {
        assert_eq!(self.rows, v.dim());
        assert_eq!(self.cols, v.dim());
        for i in 0..self.rows {
            for j in 0..self.cols {
                self[(i, j)] += C64::new(w, 0.0) * v[i] * v[j].conj();
            }
        }
    }

    /// `self += s * I`.
    pub fn add_scaled_identity(&mut self, s: f64) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            self[(i, i)] += C64::new(s, 0.0);
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace_real(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)].re).sum()
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.frobenius_norm().max(f64::MIN_POSITIVE);
        let mut dev = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                dev += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        dev.sqrt() <= rel_tol * scale
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Orthogonal (not orthonormal) set of vectors spanning an interference
/// subspace. Constructed by [`gram_schmidt`]; `try_new` validates pairwise
/// orthogonality for externally supplied sets.
#[derive(Debug, Clone)]
pub struct Basis {
    vectors: Vec<CVec>,
    dim: usize,
}

impl Basis {
    pub fn try_new(vectors: Vec<CVec>, tol: &Tolerances) -> Result<Self, LinalgError> {
        if vectors.is_empty() {
            return Err(LinalgError::EmptyBasis);
        }
        let dim = vectors[0].dim();
        for v in &vectors {
            if v.dim() != dim {
                return Err(LinalgError::DimensionMismatch(format!(
                    "basis vectors of dim {} and {}",
                    dim,
                    v.dim()
                )));
            }
            if v.norm() == 0.0 {
                return Err(LinalgError::ZeroVector);
            }
        }
        for i in 0..vectors.len() {
            for j in (i + 1)..vectors.len() {
                let bound = tol.orthogonality_rel * vectors[i].norm() * vectors[j].norm();
                if vectors[i].inner(&vectors[j]).norm() > bound {
                    return Err(LinalgError::DimensionMismatch(format!(
                        "vectors {i} and {j} are not orthogonal within tolerance"
                    )));
                }
            }
        }
        Ok(Basis { vectors, dim })
    }

    fn from_orthogonalized(vectors: Vec<CVec>, dim: usize) -> Self {
        Basis { vectors, dim }
    }

    pub fn vectors(&self) -> &[CVec] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Projection of `y` onto the line spanned by `x`:
/// `((x^H y) / ||x||^2) x`. Errors if `x` has zero norm.
pub fn line_project(y: &CVec, x: &CVec) -> Result<CVec, LinalgError> {
    if y.dim() != x.dim() {
        return Err(LinalgError::DimensionMismatch(format!(
            "line_project dims {} vs {}",
            y.dim(),
            x.dim()
        )));
    }
    let den = x.norm_sq();
    if den == 0.0 {
        return Err(LinalgError::ZeroVector);
    }
    let coeff = x.inner(y) / den;
    Ok(x.scale(coeff))
}

/// Outcome of [`gram_schmidt`]: the surviving orthogonal vectors plus the
/// input indices that were dropped as numerically dependent.
#[derive(Debug, Clone)]
pub struct GramSchmidt {
    pub basis: Basis,
    pub dropped: Vec<usize>,
}

pub fn gram_schmidt(vectors: &[CVec]) -> Result<GramSchmidt, LinalgError> {
    gram_schmidt_with(vectors, &DEFAULT_TOLERANCES)
}

/// Unnormalized Gram-Schmidt: `b_i = v_i - sum_{t<i} line_project(v_i, b_t)`,
/// evaluated as sequential subtraction with one re-orthogonalization sweep,
/// which computes the same quantity with better floating-point behavior.
/// Inputs whose residual norm falls below `dependence_rel` times their
/// original norm are dropped and reported.
pub fn gram_schmidt_with(
    vectors: &[CVec],
    tol: &Tolerances,
) -> Result<GramSchmidt, LinalgError> {
    if vectors.is_empty() {
        return Err(LinalgError::EmptyBasis);
    }
    let dim = vectors[0].dim();
    let mut kept: Vec<CVec> = Vec::with_capacity(vectors.len());
    let mut dropped = Vec::new();
    for (idx, v) in vectors.iter().enumerate() {
        if v.dim() != dim {
            return Err(LinalgError::DimensionMismatch(format!(
                "gram_schmidt dims {} vs {}",
                dim,
                v.dim()
            )));
        }
        let pre_norm = v.norm();
        if pre_norm == 0.0 {
            dropped.push(idx);
            continue;
        }
        let mut w = v.clone();
        for _sweep in 0..2 {
            for b in &kept {
                let coeff = b.inner(&w) / b.norm_sq();
                w.sub_scaled_assign(coeff, b);
            }
        }
        if w.norm() < tol.dependence_rel * pre_norm {
            dropped.push(idx);
        } else {
            kept.push(w);
        }
    }
    if kept.is_empty() {
        return Err(LinalgError::EmptyBasis);
    }
    Ok(GramSchmidt {
        basis: Basis::from_orthogonalized(kept, dim),
        dropped,
    })
}

pub fn build_projector(basis: &Basis) -> Result<CMat, LinalgError> {
    build_projector_with(basis, &DEFAULT_TOLERANCES)
}

/// Orthogonal projector onto the span of the basis columns:
/// `P = A (A^H A)^-1 A^H` with `A` holding the basis vectors as columns.
pub fn build_projector_with(basis: &Basis, tol: &Tolerances) -> Result<CMat, LinalgError> {
    if basis.is_empty() {
        return Err(LinalgError::EmptyBasis);
    }
    let a = CMat::from_cols(basis.vectors());
    projector_from_columns(&a, tol)
}

/// `P = A (A^H A)^-1 A^H` for an arbitrary full-column-rank `A`.
pub fn projector_from_columns(a: &CMat, tol: &Tolerances) -> Result<CMat, LinalgError> {
    let ah = a.hermitian();
    let gram = ah.mul(a);
    let x = lu_solve_columns(&gram, &ah, tol.condition_max).map_err(|e| match e {
        LinalgError::IllConditioned(_) => LinalgError::SingularGram,
        other => other,
    })?;
    Ok(a.mul(&x))
}

/// Same construction with a plain (unconjugated) transpose,
/// `A (A^T A)^-1 A^T`. On complex data this is not a Hermitian projector;
/// it exists so tests can demonstrate the artifact. Not for production use.
pub fn projector_plain_transpose(a: &CMat, tol: &Tolerances) -> Result<CMat, LinalgError> {
    let at = a.transpose();
    let gram = at.mul(a);
    let x = lu_solve_columns(&gram, &at, tol.condition_max).map_err(|e| match e {
        LinalgError::IllConditioned(_) => LinalgError::SingularGram,
        other => other,
    })?;
    Ok(a.mul(&x))
}
