//! Dense complex linear algebra for small matrices (dimension ≤ 64).
//!
//! Row-major storage, double precision, no sparsity. The Hermitian
//! eigensolver is a cyclic Jacobi iteration, which is plenty at these sizes
//! and has no convergence surprises on the well-conditioned operators the
//! rest of the crate produces.

use num_complex::Complex64;

use crate::{tol, Error, Result};

/// Shorthand for a real number promoted to a complex entry.
pub fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// Dense complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CVec {
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = cr(1.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row-major real entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_rows(rows, cols, data.iter().map(|&x| cr(x)).collect())
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

    /// Pauli σ_x.
    pub fn pauli_x() -> Self {
        Self::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    /// Pauli σ_y.
    pub fn pauli_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        Self::from_rows(2, 2, vec![Complex64::ZERO, -i, i, Complex64::ZERO]).unwrap()
    }

    /// Pauli σ_z.
    pub fn pauli_z() -> Self {
        Self::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(cr(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    /// Standard matrix product.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product, `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self[(r1, c1)];
                if a == Complex64::ZERO {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        out[(r1 * other.rows + r2, c1 * other.cols + c2)] = a * other[(r2, c2)];
                    }
                }
            }
        }
        out
    }

    /// Anticommutator {self, other}.
    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        Ok(self.matmul(other)?.add(&other.matmul(self)?))
    }

    /// Commutator [self, other].
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(self.matmul(other)?.sub(&other.matmul(self)?))
    }

    /// Largest entrywise deviation from Hermiticity, max |M - M†|.
    pub fn herm_deviation(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    /// Entrywise maximum modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of the difference.
    pub fn frobenius_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// (M + M†)/2, used before eigensolving to strip accumulated rounding.
    pub fn hermitized(&self) -> Self {
        self.add(&self.adjoint()).scale_re(0.5)
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, v: &CVec) -> Result<CVec> {
        if self.cols != v.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot apply {}x{} matrix to vector of dimension {}",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let mut out = vec![Complex64::ZERO; self.rows];
        for r in 0..self.rows {
            let mut acc = Complex64::ZERO;
            for c in 0..self.cols {
                acc += self[(r, c)] * v[c];
            }
            out[r] = acc;
        }
        Ok(CVec::new(out))
    }

    /// ⟨v|M|v⟩ for a square matrix.
    pub fn expectation(&self, v: &CVec) -> Result<Complex64> {
        let mv = self.apply(v)?;
        Ok(v.inner(&mv))
    }

    /// Real part of ⟨v|M|v⟩; debug-asserts the imaginary part is negligible.
    pub fn expectation_re(&self, v: &CVec) -> Result<f64> {
        let e = self.expectation(v)?;
        debug_assert!(
            e.im.abs() <= 1e-10 * (1.0 + e.re.abs()),
            "expectation has imaginary part {:.3e}",
            e.im
        );
        Ok(e.re)
    }

    /// Partial trace over the second tensor factor of a (dim_a·dim_b)² matrix.
    pub fn partial_trace_b(&self, dim_a: usize, dim_b: usize) -> Result<Self> {
        self.check_bipartite(dim_a, dim_b)?;
        let mut out = Self::zeros(dim_a, dim_a);
        for i in 0..dim_a {
            for j in 0..dim_a {
                let mut acc = Complex64::ZERO;
                for k in 0..dim_b {
                    acc += self[(i * dim_b + k, j * dim_b + k)];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    /// Partial trace over the first tensor factor of a (dim_a·dim_b)² matrix.
    pub fn partial_trace_a(&self, dim_a: usize, dim_b: usize) -> Result<Self> {
        self.check_bipartite(dim_a, dim_b)?;
        let mut out = Self::zeros(dim_b, dim_b);
        for i in 0..dim_b {
            for j in 0..dim_b {
                let mut acc = Complex64::ZERO;
                for k in 0..dim_a {
                    acc += self[(k * dim_b + i, k * dim_b + j)];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    fn check_bipartite(&self, dim_a: usize, dim_b: usize) -> Result<()> {
        if !self.is_square() || self.rows != dim_a * dim_b {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square of dimension {}·{}",
                self.rows, self.cols, dim_a, dim_b
            )));
        }
        Ok(())
    }

    /// Eigendecomposition of a Hermitian matrix, eigenvalues descending,
    /// eigenvectors orthonormal. Rejects input with Hermiticity deviation
    /// above [`tol::HERM_INPUT`]; symmetrizes before iterating.
    pub fn hermitian_eig(&self) -> Result<HermEig> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "eigendecomposition needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let dev = self.herm_deviation();
        if dev > tol::HERM_INPUT {
            return Err(Error::NotHermitian {
                deviation: dev,
                tolerance: tol::HERM_INPUT,
            });
        }
        Ok(jacobi_hermitian(&self.hermitized()))
    }

    /// Matrix sign function of a Hermitian matrix: Σ sgn(λ_k) v_k v_k†,
    /// with sgn(0) := +1 so the see-saw tie-break is deterministic.
    pub fn herm_sign(&self) -> Result<Self> {
        let eig = self.hermitian_eig()?;
        let signs: Vec<f64> = eig
            .values
            .iter()
            .map(|&l| if l < 0.0 { -1.0 } else { 1.0 })
            .collect();
        Ok(eig.recombine(&signs))
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl CVec {
    pub fn new(data: Vec<Complex64>) -> Self {
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![Complex64::ZERO; dim],
        }
    }

    /// Computational basis vector |index⟩.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[index] = cr(1.0);
        v
    }

    pub fn from_real(data: &[f64]) -> Self {
        Self::new(data.iter().map(|&x| cr(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩ with conjugation on `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.data.iter().map(|&x| x * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self::new(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self::new(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        )
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::DegenerateNorm("cannot normalize zero vector".into()));
        }
        Ok(self.scale(cr(1.0 / n)))
    }

    /// Tensor product |self⟩ ⊗ |other⟩.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.data {
            for b in &other.data {
                out.push(a * b);
            }
        }
        Self::new(out)
    }

    /// Outer product |self⟩⟨other|.
    pub fn outer(&self, other: &Self) -> CMat {
        let mut out = CMat::zeros(self.dim(), other.dim());
        for r in 0..self.dim() {
            for c in 0..other.dim() {
                out[(r, c)] = self.data[r] * other.data[c].conj();
            }
        }
        out
    }
}

impl std::ops::Index<usize> for CVec {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.data[i]
    }
}

/// Eigensystem of a Hermitian matrix: `values` descending, the k-th column
/// of `vectors` is the eigenvector of `values[k]`.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermEig {
    /// Eigenvector for `values[k]`.
    pub fn vector(&self, k: usize) -> CVec {
        let n = self.vectors.rows();
        CVec::new((0..n).map(|r| self.vectors[(r, k)]).collect())
    }

    /// Σ f_k v_k v_k† for per-eigenvalue coefficients `f`.
    pub fn recombine(&self, coeffs: &[f64]) -> CMat {
        let n = self.vectors.rows();
        let mut out = CMat::zeros(n, n);
        for (k, &f) in coeffs.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            for r in 0..n {
                let vr = self.vectors[(r, k)];
                for c in 0..n {
                    out[(r, c)] += cr(f) * vr * self.vectors[(c, k)].conj();
                }
            }
        }
        out
    }

    /// V diag(values) V†, the reconstruction of the input matrix.
    pub fn reconstruct(&self) -> CMat {
        self.recombine(&self.values)
    }
}

/// Cyclic Jacobi iteration for a Hermitian matrix. The caller guarantees
/// Hermiticity; diagonals are kept real throughout.
fn jacobi_hermitian(m: &CMat) -> HermEig {
    let n = m.rows();
    let mut a = m.clone();
    let mut v = CMat::identity(n);

    let scale: f64 = a
        .data
        .iter()
        .map(|x| x.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(1e-300);

    const MAX_SWEEPS: usize = 60;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-18 * scale {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary J: J_pp = c, J_pq = s·phase, J_qp = -s·conj(phase), J_qq = c.
                let spq = cr(s) * phase;
                let sqp = cr(s) * phase.conj();
                // Columns: B = A·J.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cr(c) * akp - sqp * akq;
                    a[(k, q)] = spq * akp + cr(c) * akq;
                }
                // Rows: A' = J†·B.
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cr(c) * apk - spq * aqk;
                    a[(q, k)] = sqp * apk + cr(c) * aqk;
                }
                a[(p, p)] = cr(a[(p, p)].re);
                a[(q, q)] = cr(a[(q, q)].re);
                a[(p, q)] = Complex64::ZERO;
                a[(q, p)] = Complex64::ZERO;
                // Eigenvector accumulation: V <- V·J.
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = cr(c) * vkp - sqp * vkq;
                    v[(k, q)] = spq * vkp + cr(c) * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    // Stable sort keeps the Jacobi ordering inside degenerate eigenspaces,
    // which makes tie-breaks deterministic.
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());

    let mut vectors = CMat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(diag[src]);
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    HermEig { values, vectors }
}
