//! Dense complex linear algebra with explicit tolerances.
//!
//! Rank decisions are relative: a singular value counts as zero when it is
//! at most `eps_rank` times the largest singular value of the same matrix.
//! Operator equality is always measured in the max-entry norm.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use num::Zero;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Residual below which a nearly Hermitian input is silently symmetrized.
pub const HERMITIAN_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative cutoff for numerical rank.
    pub eps_rank: f64,
    /// Absolute slack on the smallest eigenvalue in positivity tests.
    pub eps_psd: f64,
    /// Max-entry slack for operator equality.
    pub eps_eq: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            eps_rank: 1e-9,
            eps_psd: 1e-10,
            eps_eq: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(eps_rank: f64, eps_psd: f64, eps_eq: f64) -> Result<Self> {
        let tol = Tolerance {
            eps_rank,
            eps_psd,
            eps_eq,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_rank", self.eps_rank),
            ("eps_psd", self.eps_psd),
            ("eps_eq", self.eps_eq),
        ] {
            if !(v > 0.0 && v < 1e-3) {
                return Err(Error::InvalidTolerance(format!(
                    "{name} = {v} must lie in (0, 1e-3)"
                )));
            }
        }
        Ok(())
    }
}

/// A square matrix known to equal its adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Symmetrizes `m` as `(m + m*)/2`, rejecting inputs whose residual
    /// `‖m − m*‖_max` exceeds [`HERMITIAN_RESIDUAL`] relative to `max(1, ‖m‖_max)`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims(
                "square matrix",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Internal("non-finite matrix entry".into()));
        }
        let adj = m.adjoint();
        let residual = max_abs_diff(&m, &adj);
        if residual > HERMITIAN_RESIDUAL * max_abs(&m).max(1.0) {
            return Err(Error::NonHermitianInput { residual });
        }
        Ok(HermitianMatrix((m + adj).scale(0.5)))
    }

    /// Wraps a matrix that is Hermitian by construction, symmetrizing away
    /// roundoff. Callers guarantee the residual is at roundoff level.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        let adj = m.adjoint();
        HermitianMatrix((m + adj).scale(0.5))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

impl Deref for HermitianMatrix {
    type Target = CMatrix;

    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

impl From<HermitianMatrix> for CMatrix {
    fn from(h: HermitianMatrix) -> CMatrix {
        h.0
    }
}

/// Spectral decomposition `M = U diag(values) U*`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigh {
    /// Rebuilds `U f(diag) U*` for a real function of the eigenvalues.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let s = f(lambda);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn eigh(m: &HermitianMatrix) -> Eigh {
    let n = m.dim();
    if n == 0 {
        return Eigh {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let h = m.as_matrix();
    let se = h.clone().symmetric_eigen();
    let (values, vectors) = if eigen_residual(h, &se.eigenvalues, &se.eigenvectors) {
        (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
    } else {
        jacobi_eigh(h)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Eigh {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: CMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]),
    }
}

/// Acceptance test for a library factorization; LAPACK-free solvers
/// occasionally return a wrong basis for exactly degenerate input.
const FACTOR_CHECK: f64 = 1e-11;

fn eigen_residual(h: &CMatrix, values: &nalgebra::DVector<f64>, vectors: &CMatrix) -> bool {
    let n = h.nrows();
    let scale = h.norm().max(f64::MIN_POSITIVE);
    let lambda = CMatrix::from_diagonal(&values.map(C64::from));
    let recon = (vectors * lambda * vectors.adjoint() - h).norm();
    let unit = (vectors.adjoint() * vectors - CMatrix::identity(n, n)).norm();
    recon.is_finite() && recon <= FACTOR_CHECK * scale * n as f64 && unit <= FACTOR_CHECK * n as f64
}

/// Cyclic Jacobi for Hermitian matrices.
fn jacobi_eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let mut a = (h + h.adjoint()) * C64::from(0.5);
    let mut v = CMatrix::identity(n, n);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off <= (f64::EPSILON * a.norm()).powi(2) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let e = apq / mag;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // columns p, q of J = diag(1, conj(e)) · [[c, s], [-s, c]]
                let jpp = C64::from(c);
                let jpq = C64::from(s);
                let jqp = -e.conj() * s;
                let jqq = e.conj() * c;
                for r in 0..n {
                    let (x, y) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = x * jpp + y * jqp;
                    a[(r, q)] = x * jpq + y * jqq;
                    let (x, y) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = x * jpp + y * jqp;
                    v[(r, q)] = x * jpq + y * jqq;
                }
                for col in 0..n {
                    let (x, y) = (a[(p, col)], a[(q, col)]);
                    a[(p, col)] = jpp.conj() * x + jqp.conj() * y;
                    a[(q, col)] = jpq.conj() * x + jqq.conj() * y;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

pub fn min_eigenvalue(m: &HermitianMatrix) -> f64 {
    eigh(m).values.first().copied().unwrap_or(0.0)
}

pub fn psd_check(m: &HermitianMatrix, tol: &Tolerance) -> bool {
    min_eigenvalue(m) >= -tol.eps_psd
}

/// Moore–Penrose inverse through the eigendecomposition; eigenvalues with
/// `|λ| ≤ eps_rank · max|λ|` are treated as zero.
pub fn pseudo_inverse(m: &HermitianMatrix, tol: &Tolerance) -> HermitianMatrix {
    let e = eigh(m);
    let cutoff = tol.eps_rank * e.max_abs_value();
    HermitianMatrix::from_trusted(e.map_spectrum(|l| {
        if l.abs() > cutoff && l != 0.0 {
            1.0 / l
        } else {
            0.0
        }
    }))
}

/// Square root of the positive part of a Hermitian matrix.
pub fn psd_sqrt(m: &HermitianMatrix) -> HermitianMatrix {
    HermitianMatrix::from_trusted(eigh(m).map_spectrum(|l| l.max(0.0).sqrt()))
}

/// `(M⁺)^{1/2}` for PSD `M`, with the same relative cutoff as [`pseudo_inverse`].
pub fn psd_pinv_sqrt(m: &HermitianMatrix, tol: &Tolerance) -> HermitianMatrix {
    let e = eigh(m);
    let cutoff = tol.eps_rank * e.max_abs_value();
    HermitianMatrix::from_trusted(e.map_spectrum(|l| {
        if l > cutoff && l > 0.0 {
            1.0 / l.sqrt()
        } else {
            0.0
        }
    }))
}

/// Full singular value decomposition with descending singular values.
/// `u` is `m×m`, `v` is `n×n`; `values` has `min(m, n)` entries.
#[derive(Debug, Clone)]
pub struct FullSvd {
    pub u: CMatrix,
    pub values: Vec<f64>,
    pub v: CMatrix,
}

pub fn full_svd(m: &CMatrix) -> FullSvd {
    let (rows, cols) = m.shape();
    let p = rows.min(cols);
    if p == 0 {
        return FullSvd {
            u: CMatrix::identity(rows, rows),
            values: vec![],
            v: CMatrix::identity(cols, cols),
        };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v requested");
    let sigma = CMatrix::from_diagonal(&svd.singular_values.map(C64::from));
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let recon = (&u * sigma * &v_t - m).norm();
    let unit = (u.adjoint() * &u - CMatrix::identity(p, p)).norm()
        + (&v_t * v_t.adjoint() - CMatrix::identity(p, p)).norm();
    if !(recon <= FACTOR_CHECK * scale * p as f64 && unit <= FACTOR_CHECK * p as f64) {
        return jacobi_svd(m);
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_thin = CMatrix::from_fn(rows, p, |r, c| u[(r, order[c])]);
    let v_thin = CMatrix::from_fn(cols, p, |r, c| v_t[(order[c], r)].conj());
    FullSvd {
        u: orthonormal_completion(&u_thin),
        values,
        v: orthonormal_completion(&v_thin),
    }
}

/// One-sided (Hestenes) Jacobi SVD.
fn jacobi_svd(m: &CMatrix) -> FullSvd {
    if m.nrows() < m.ncols() {
        let t = jacobi_svd(&m.adjoint());
        return FullSvd {
            u: t.v,
            values: t.values,
            v: t.u,
        };
    }
    let n = m.ncols();
    let mut a = m.clone();
    let mut v = CMatrix::identity(n, n);
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let mag = gamma.norm();
                if mag <= f64::EPSILON * (alpha * beta).sqrt() || mag == 0.0 {
                    continue;
                }
                rotated = true;
                let e = gamma / mag;
                let zeta = (beta - alpha) / (2.0 * mag);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut a, &mut v] {
                    for r in 0..mat.nrows() {
                        let x = mat[(r, p)];
                        let y = mat[(r, q)] * e.conj();
                        mat[(r, p)] = x * c - y * s;
                        mat[(r, q)] = x * s + y * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let rows = m.nrows();
    let mut u_cols: Vec<CVector> = Vec::new();
    for &j in &order {
        if norms[j] == 0.0 {
            break;
        }
        let mut c = a.column(j) / C64::from(norms[j]);
        for _ in 0..2 {
            for q in &u_cols {
                let proj = q.dotc(&c);
                c -= q * proj;
            }
        }
        let len = c.norm();
        if len < 1e-6 {
            break;
        }
        u_cols.push(c / C64::from(len));
    }
    let u_thin = if u_cols.is_empty() {
        CMatrix::zeros(rows, 0)
    } else {
        CMatrix::from_columns(&u_cols)
    };
    FullSvd {
        u: orthonormal_completion(&u_thin),
        values,
        v: CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]),
    }
}

/// Extends orthonormal columns to a full unitary by Gram–Schmidt against the
/// standard basis.
fn orthonormal_completion(cols: &CMatrix) -> CMatrix {
    let rows = cols.nrows();
    let mut out: Vec<CVector> = (0..cols.ncols())
        .map(|j| cols.column(j).into_owned())
        .collect();
    for i in 0..rows {
        if out.len() == rows {
            break;
        }
        let mut c = basis_vector(rows, i);
        for _ in 0..2 {
            for q in &out {
                let proj = q.dotc(&c);
                c -= q * proj;
            }
        }
        let norm = c.norm();
        if norm > 1e-6 {
            out.push(c / C64::from(norm));
        }
    }
    CMatrix::from_columns(&out)
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return vec![];
    }
    full_svd(m).values
}

fn rank_from_values(values: &[f64], tol: &Tolerance) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    if top <= f64::MIN_POSITIVE {
        return 0;
    }
    values.iter().filter(|&&s| s > tol.eps_rank * top).count()
}

pub fn numerical_rank(m: &CMatrix, tol: &Tolerance) -> usize {
    rank_from_values(&singular_values(m), tol)
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn range_basis(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let svd = full_svd(m);
    let r = rank_from_values(&svd.values, tol);
    svd.u.columns(0, r).into_owned()
}

/// Orthogonal projection onto the column space of `m`.
pub fn range_projection(m: &CMatrix, tol: &Tolerance) -> HermitianMatrix {
    let b = range_basis(m, tol);
    HermitianMatrix::from_trusted(&b * b.adjoint())
}

/// Orthonormal basis (as columns) of the numerical kernel of `m`.
pub fn kernel_basis(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let svd = full_svd(m);
    let r = rank_from_values(&svd.values, tol);
    let n = m.ncols();
    svd.v.columns(r, n - r).into_owned()
}

/// Least-squares solution of `a x = b` through the pseudo-inverse, with the
/// relative singular-value cutoff `eps_rank`.
pub fn lstsq(a: &CMatrix, b: &CVector, tol: &Tolerance) -> CVector {
    let svd = full_svd(a);
    let r = rank_from_values(&svd.values, tol);
    let mut x = CVector::zeros(a.ncols());
    for j in 0..r {
        let coeff = svd.u.column(j).dotc(b) / C64::from(svd.values[j]);
        x += svd.v.column(j) * coeff;
    }
    x
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn approx_eq(a: &CMatrix, b: &CMatrix, tol: &Tolerance) -> bool {
    a.shape() == b.shape() && max_abs_diff(a, b) <= tol.eps_eq
}

pub fn is_projection(p: &CMatrix, tol: &Tolerance) -> bool {
    p.is_square() && approx_eq(&(p * p), p, tol) && approx_eq(&p.adjoint(), p, tol)
}

/// Matrix unit `E_ij` in `M_d`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMatrix {
    let mut e = CMatrix::zeros(d, d);
    e[(i, j)] = C64::new(1.0, 0.0);
    e
}

pub fn basis_vector(d: usize, i: usize) -> CVector {
    let mut e = CVector::zeros(d);
    e[i] = C64::new(1.0, 0.0);
    e
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Rank-one operator `|x⟩⟨y|`.
pub fn ketbra(x: &CVector, y: &CVector) -> CMatrix {
    x * y.adjoint()
}

/// Divides by the phase of the largest entry (first one on ties) so that it
/// becomes real and positive, and scales to unit norm.
pub fn normalize_phase(v: &CVector) -> CVector {
    let norm = v.norm();
    if norm == 0.0 {
        return v.clone();
    }
    let top = v.iter().fold(0.0, |m: f64, z| m.max(z.norm()));
    let pivot = v
        .iter()
        .find(|z| z.norm() >= top * (1.0 - 1e-9))
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = pivot / C64::from(pivot.norm());
    v.map(|z| z / phase / C64::from(norm))
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Builds a complex matrix from real row-major data.
pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    assert_eq!(data.len(), rows * cols);
    CMatrix::from_fn(rows, cols, |i, j| C64::new(data[i * cols + j], 0.0))
}

pub fn pauli_x() -> CMatrix {
    real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn is_zero(m: &CMatrix, scale: f64, tol: &Tolerance) -> bool {
    max_abs(m) <= tol.eps_eq * scale.max(1.0)
}

pub fn zero_c() -> C64 {
    C64::zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn herm(rows: usize, data: &[f64]) -> HermitianMatrix {
        HermitianMatrix::new(real_matrix(rows, rows, data)).unwrap()
    }

    fn svd_residual(m: &CMatrix, f: &FullSvd) -> f64 {
        let (r, c) = m.shape();
        let mut s = CMatrix::zeros(r, c);
        for (i, &v) in f.values.iter().enumerate() {
            s[(i, i)] = C64::from(v);
        }
        (&f.u * s * f.v.adjoint() - m).norm()
            + (f.u.adjoint() * &f.u - CMatrix::identity(r, r)).norm()
            + (f.v.adjoint() * &f.v - CMatrix::identity(c, c)).norm()
    }

    // A rank-one input on which the library SVD returns a wrong basis.
    fn degenerate_rank_one() -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c(0.10233343140368897, -0.25892569213765404),
                c(-0.02372006109824187, -0.2963161719947912),
                c(-0.5080306470399358, -0.2147246684406734),
                c(-0.5879507662285673, 0.03317996578881843),
            ],
        )
    }

    #[test]
    fn svd_degenerate_regression() {
        let m = degenerate_rank_one();
        let f = full_svd(&m);
        assert!(svd_residual(&m, &f) < 1e-13);
        assert!(f.values[1] < 1e-14);
        let p = range_projection(&m, &tol());
        assert!((p.as_matrix() * &m - &m).norm() < 1e-13);
    }

    #[test]
    fn jacobi_fallbacks_agree_with_library() {
        let mut rng = crate::sample::rng(4);
        for t in 0..60 {
            let (r, k, cols) = (1 + t % 4, 1 + t % 3, 1 + (t / 3) % 4);
            let m = crate::sample::gaussian_matrix(&mut rng, r, k)
                * crate::sample::gaussian_matrix(&mut rng, k, cols);
            let f = jacobi_svd(&m);
            assert!(svd_residual(&m, &f) < 1e-12 * (1.0 + m.norm()), "{m}");
            let lib = full_svd(&m);
            for (a, b) in f.values.iter().zip(&lib.values) {
                assert!((a - b).abs() < 1e-12 * (1.0 + m.norm()));
            }
            let h = &m * m.adjoint() - CMatrix::identity(r, r) * C64::from(0.3);
            let (vals, vecs) = jacobi_eigh(&h);
            let lambda = CMatrix::from_diagonal(&CVector::from_iterator(
                r,
                vals.iter().map(|&x| C64::from(x)),
            ));
            assert!((&vecs * lambda * vecs.adjoint() - &h).norm() < 1e-12 * (1.0 + h.norm()));
            let mut sorted = vals.clone();
            sorted.sort_by(f64::total_cmp);
            let lib = eigh(&HermitianMatrix::new(h).unwrap()).values;
            for (a, b) in sorted.iter().zip(&lib) {
                assert!((a - b).abs() < 1e-12 * (1.0 + m.norm_squared()));
            }
        }
    }

    #[test]
    fn eigh_diagonal_is_sorted() {
        let e = eigh(&herm(2, &[2.0, 0.0, 0.0, 1.0]));
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 2.0, epsilon = 1e-14);
        // eigenvector for 1 is ±e2 up to phase
        assert_abs_diff_eq!(e.vectors[(1, 0)].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[(0, 1)].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigh_all_ones() {
        let e = eigh(&herm(2, &[1.0, 1.0, 1.0, 1.0]));
        assert_abs_diff_eq!(e.values[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 2.0, epsilon = 1e-14);
        let v0 = normalize_phase(&e.vectors.column(0).into_owned());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(v0[0].re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(v0[1].re, -s, epsilon = 1e-12);
        let v1 = normalize_phase(&e.vectors.column(1).into_owned());
        assert_abs_diff_eq!(v1[0].re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(v1[1].re, s, epsilon = 1e-12);
    }

    #[test]
    fn eigh_identity() {
        let e = eigh(&HermitianMatrix::identity(3));
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let u = &e.vectors;
        assert!(approx_eq(
            &(u * u.adjoint()),
            &CMatrix::identity(3, 3),
            &tol()
        ));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = real_matrix(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(Error::NonHermitianInput { .. })
        ));
        let mut tiny = CMatrix::identity(2, 2);
        tiny[(0, 1)] = c(1e-14, 0.0);
        let h = HermitianMatrix::new(tiny).unwrap();
        assert_eq!(h[(0, 1)], h[(1, 0)].conj());
    }

    #[test]
    fn psd_examples() {
        assert!(psd_check(&HermitianMatrix::identity(2), &tol()));
        assert!(!psd_check(&herm(2, &[1.0, 2.0, 2.0, 1.0]), &tol()));
        assert_abs_diff_eq!(
            min_eigenvalue(&herm(2, &[1.0, 2.0, 2.0, 1.0])),
            -1.0,
            epsilon = 1e-13
        );
        assert!(psd_check(&HermitianMatrix::zeros(3), &tol()));
    }

    #[test]
    fn pseudo_inverse_examples() {
        let p = pseudo_inverse(&herm(2, &[2.0, 0.0, 0.0, 0.0]), &tol());
        assert!(approx_eq(
            &p,
            &real_matrix(2, 2, &[0.5, 0.0, 0.0, 0.0]),
            &tol()
        ));
        let id = pseudo_inverse(&HermitianMatrix::identity(3), &tol());
        assert!(approx_eq(&id, &CMatrix::identity(3, 3), &tol()));

        // rank one p·vv*: check the four Penrose identities
        let v = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let a = HermitianMatrix::new(ketbra(&v, &v).scale(3.0)).unwrap();
        let ap = pseudo_inverse(&a, &tol());
        let t = tol();
        assert!(approx_eq(&(&*a * &*ap * &*a), &a, &t));
        assert!(approx_eq(&(&*ap * &*a * &*ap), &ap, &t));
        let aap = &*a * &*ap;
        let apa = &*ap * &*a;
        assert!(approx_eq(&aap.adjoint(), &aap, &t));
        assert!(approx_eq(&apa.adjoint(), &apa, &t));
        assert!(approx_eq(&ap, &ketbra(&v, &v).scale(1.0 / 3.0), &t));
    }

    #[test]
    fn range_projection_examples() {
        let col = real_matrix(2, 1, &[1.0, 0.0]);
        let p = range_projection(&col, &tol());
        assert!(approx_eq(
            &p,
            &real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            &tol()
        ));
        let z = range_projection(&CMatrix::zeros(3, 3), &tol());
        assert!(approx_eq(&z, &CMatrix::zeros(3, 3), &tol()));
        // Gram–Schmidt on columns (1,1),(1,1): a single direction (1,1)/√2
        let ones = real_matrix(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let p = range_projection(&ones, &tol());
        assert!(approx_eq(
            &p,
            &real_matrix(2, 2, &[0.5, 0.5, 0.5, 0.5]),
            &tol()
        ));
    }

    #[test]
    fn kernel_basis_examples() {
        let k = kernel_basis(&real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]), &tol());
        assert_eq!(k.ncols(), 1);
        assert_abs_diff_eq!(k[(1, 0)].norm(), 1.0, epsilon = 1e-12);
        let k = kernel_basis(&real_matrix(2, 2, &[2.0, 1.0, 1.0, 3.0]), &tol());
        assert_eq!(k.ncols(), 0);
        let k = kernel_basis(&real_matrix(2, 2, &[1.0, 1.0, 1.0, 1.0]), &tol());
        assert_eq!(k.ncols(), 1);
        let v = normalize_phase(&k.column(0).into_owned());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(v[0].re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1].re, -s, epsilon = 1e-12);
    }

    #[test]
    fn kernel_of_wide_and_tall_matrices() {
        let wide = real_matrix(1, 3, &[1.0, 2.0, 3.0]);
        let k = kernel_basis(&wide, &tol());
        assert_eq!(k.ncols(), 2);
        assert!(max_abs(&(&wide * &k)) < 1e-12);
        let tall = wide.transpose();
        assert_eq!(kernel_basis(&tall, &tol()).ncols(), 0);
        assert_eq!(range_basis(&tall, &tol()).ncols(), 1);
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerance::new(1e-9, 1e-10, 1e-9).is_ok());
        assert!(Tolerance::new(0.0, 1e-10, 1e-9).is_err());
        assert!(Tolerance::new(1e-9, 1e-2, 1e-9).is_err());
    }

    fn arb_complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
        prop::collection::vec(-1.0f64..1.0, rows * cols * 2).prop_map(move |v| {
            CMatrix::from_fn(rows, cols, |i, j| {
                let k = 2 * (i * cols + j);
                c(v[k], v[k + 1])
            })
        })
    }

    fn arb_hermitian() -> impl Strategy<Value = CMatrix> {
        (1usize..=16).prop_flat_map(|n| arb_complex_matrix(n, n).prop_map(|m| &m + m.adjoint()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eigh_reconstructs(m in arb_hermitian()) {
            let h = HermitianMatrix::new(m.clone()).unwrap();
            let e = eigh(&h);
            let rebuilt = e.map_spectrum(|l| l);
            prop_assert!(max_abs_diff(&rebuilt, &m) <= 1e-9);
            let u = &e.vectors;
            prop_assert!(max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(m.nrows(), m.nrows())) <= 1e-9);
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn pinv_matches_inverse_on_well_conditioned(m in (1usize..=6).prop_flat_map(|n| arb_complex_matrix(n, n))) {
            let n = m.nrows();
            // Shift a Gram matrix away from singularity: condition number ≤ 1e6.
            let a = &m * m.adjoint() + CMatrix::identity(n, n).scale(0.1);
            let h = HermitianMatrix::new(a.clone()).unwrap();
            let inv = a.clone().try_inverse().unwrap();
            prop_assert!(max_abs_diff(&pseudo_inverse(&h, &tol()), &inv) <= 1e-8);
        }

        #[test]
        fn range_and_cokernel_are_complementary(
            (rows, cols, rank) in (1usize..=5, 1usize..=5, 0usize..=5),
            seed in any::<u64>(),
        ) {
            use crate::sample;
            let mut rng = sample::rng(seed);
            let r = rank.min(rows).min(cols);
            let m = sample::gaussian_matrix(&mut rng, rows, r) * sample::gaussian_matrix(&mut rng, r, cols);
            let p = range_projection(&m, &tol());
            let k = kernel_basis(&m.adjoint(), &tol());
            let sum = &*p + &k * k.adjoint();
            prop_assert!(max_abs_diff(&sum, &CMatrix::identity(rows, rows)) <= 1e-9);
            prop_assert!(max_abs_diff(&(&*p * &m), &m) <= 1e-9);
            prop_assert_eq!(numerical_rank(&m, &tol()), r);
        }
    }
}
