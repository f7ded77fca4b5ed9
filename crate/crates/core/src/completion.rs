//! Positive completion of partially known block matrices and minimal CP
//! completion of maps known only through `X ↦ φ(X)R`.
//!
//! Block criterion. Split `ℂ^n = ran P ⊕ ran(I−P)` and let `A = PMP`,
//! `C = (I−P)MP` be known. A PSD completion exists iff there is `q` with
//! `C*C ≤ qA`, and in finite dimensions this is equivalent to `A ≥ 0` and
//! `ker A ⊆ ker C`:
//!
//! * if `C*C ≤ qA` and `Ah = 0` then `‖Ch‖² ≤ q⟨Ah, h⟩ = 0`;
//! * if `A ≥ 0` and `C = C·A⁺A`, let `λ` be the smallest nonzero eigenvalue
//!   of `A`; then `C*C = A⁺A·C*C·A⁺A ≤ ‖C‖²·A⁺A ≤ (‖C‖²/λ)·A`.
//!
//! The smallest admissible corner is `D = C A⁺ C*`, the limit of
//! `C(A + t)⁻¹C*` as `t ↓ 0`.

use rand::Rng;

use crate::cpmap::CpMap;
use crate::numerics::{
    self, eigh, kron, matrix_unit, max_abs, max_abs_diff, psd_check, psd_pinv_sqrt, pseudo_inverse,
    range_basis, range_projection, CMatrix, HermitianMatrix, Tolerance, C64, HERMITIAN_RESIDUAL,
};
use crate::sample;
use crate::stinespring::minimal_stinespring;
use crate::{Error, Result};

/// Known blocks of an unknown PSD `M`, stored as `n × n` operators: the
/// splitting projection `P`, `A = PMP` and `C = (I−P)MP`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCompletionProblem {
    p: HermitianMatrix,
    a: CMatrix,
    c: CMatrix,
}

impl BlockCompletionProblem {
    pub fn new(p: HermitianMatrix, a: CMatrix, c: CMatrix, tol: &Tolerance) -> Result<Self> {
        let n = p.dim();
        if a.shape() != (n, n) || c.shape() != (n, n) {
            return Err(Error::dims(
                format!("{n}x{n} blocks"),
                format!("{:?} and {:?}", a.shape(), c.shape()),
            ));
        }
        if !numerics::is_projection(&p, tol) {
            return Err(Error::RNotProjection);
        }
        let q = CMatrix::identity(n, n) - p.as_matrix();
        let scale = max_abs(&a).max(max_abs(&c)).max(1.0);
        let a_off = max_abs(&(&a - p.as_matrix() * &a * p.as_matrix()));
        let c_off = max_abs(&(&c - &q * &c * p.as_matrix()));
        if a_off.max(c_off) > tol.eps_eq * scale {
            return Err(Error::dims(
                "blocks supported on the splitting",
                format!("leakage {:.3e}", a_off.max(c_off)),
            ));
        }
        Ok(BlockCompletionProblem { p, a, c })
    }

    /// `A` of size `r × r` and `C` of size `s × r`, split by `diag(I_r, 0)`.
    pub fn from_blocks(a: &CMatrix, c: &CMatrix) -> Result<Self> {
        let r = a.nrows();
        if !a.is_square() || c.ncols() != r {
            return Err(Error::dims(
                format!("A square, C with {r} columns"),
                format!("A {:?}, C {:?}", a.shape(), c.shape()),
            ));
        }
        let n = r + c.nrows();
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (r, r)).fill_with_identity();
        let mut big_a = CMatrix::zeros(n, n);
        big_a.view_mut((0, 0), (r, r)).copy_from(a);
        let mut big_c = CMatrix::zeros(n, n);
        big_c.view_mut((r, 0), (c.nrows(), r)).copy_from(c);
        Ok(BlockCompletionProblem {
            p: HermitianMatrix::from_trusted(p),
            a: big_a,
            c: big_c,
        })
    }

    pub fn projection(&self) -> &HermitianMatrix {
        &self.p
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn c(&self) -> &CMatrix {
        &self.c
    }

    fn a_hermitian(&self) -> Option<HermitianMatrix> {
        HermitianMatrix::new(self.a.clone()).ok()
    }

    /// `A ≥ 0` and `C (I − A⁺A) = 0`.
    pub fn is_completable(&self, tol: &Tolerance) -> bool {
        let Some(a) = self.a_hermitian() else {
            return false;
        };
        if !psd_check(&a, tol) {
            return false;
        }
        let n = a.dim();
        let a_pinv = pseudo_inverse(&a, tol);
        let leak = &self.c * (CMatrix::identity(n, n) - a_pinv.as_matrix() * a.as_matrix());
        max_abs(&leak) <= tol.eps_eq * max_abs(&self.c).max(1.0)
    }

    /// Smallest `q` with `C*C ≤ qA`, namely `‖C (A⁺)^{1/2}‖²`, when the
    /// problem is completable.
    pub fn domination_constant(&self, tol: &Tolerance) -> Option<f64> {
        if !self.is_completable(tol) {
            return None;
        }
        let a = self.a_hermitian()?;
        let m = &self.c * psd_pinv_sqrt(&a, tol).as_matrix();
        let s = numerics::singular_values(&m);
        Some(s.first().map_or(0.0, |x| x * x))
    }

    /// `D = C A⁺ C*`.
    pub fn minimal_corner(&self, tol: &Tolerance) -> Result<HermitianMatrix> {
        if !self.is_completable(tol) {
            return Err(Error::NotCompletable);
        }
        let a = self.a_hermitian().ok_or(Error::NotCompletable)?;
        let d = &self.c * pseudo_inverse(&a, tol).as_matrix() * self.c.adjoint();
        Ok(HermitianMatrix::from_trusted(
            (&d + d.adjoint()) * C64::from(0.5),
        ))
    }

    /// `C (A + t)⁻¹ C*`, restricted to `ran P` for the inverse.
    pub fn regularized_corner(&self, t: f64) -> HermitianMatrix {
        let n = self.p.dim();
        let shifted = &self.a + self.p.as_matrix() * C64::from(t);
        let q = CMatrix::identity(n, n) - self.p.as_matrix();
        let inv = (shifted + q)
            .try_inverse()
            .expect("A + t is invertible on ran P");
        let d = &self.c * inv * self.c.adjoint();
        HermitianMatrix::from_trusted((&d + d.adjoint()) * C64::from(0.5))
    }

    /// `A + C + C* + D` for a given corner `D`.
    pub fn assemble(&self, d: &CMatrix) -> CMatrix {
        &self.a + &self.c + self.c.adjoint() + d
    }

    pub fn minimal_completion(&self, tol: &Tolerance) -> Result<HermitianMatrix> {
        let d = self.minimal_corner(tol)?;
        Ok(HermitianMatrix::from_trusted(self.assemble(d.as_matrix())))
    }
}

pub fn block_completable(prob: &BlockCompletionProblem, tol: &Tolerance) -> bool {
    prob.is_completable(tol)
}

pub fn minimal_block_completion(
    prob: &BlockCompletionProblem,
    tol: &Tolerance,
) -> Result<HermitianMatrix> {
    prob.minimal_completion(tol)
}

/// A linear map `β` with values in `M_{d_out}·R`, given on matrix units.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCpMap {
    d_in: usize,
    d_out: usize,
    r: CMatrix,
    /// `β(E_ij)` at index `i·d_in + j`.
    blocks: Vec<CMatrix>,
}

/// Outcome of the necessary conditions for CP completability.
#[derive(Debug, Clone, PartialEq)]
pub struct NecessaryConditions {
    /// `X ↦ Rβ(X)` is completely positive.
    pub compressed_is_cp: bool,
    /// Largest `q` needed over the sampled `X ≥ 0`, if none violated the bound.
    pub q: Option<f64>,
    /// A sampled `X ≥ 0` for which no `q` works.
    pub violation: Option<CMatrix>,
    /// `[β(E_ij)]` admits a positive completion.
    pub completable: bool,
}

impl PartialCpMap {
    pub fn new(
        d_in: usize,
        d_out: usize,
        r: CMatrix,
        blocks: Vec<CMatrix>,
        tol: &Tolerance,
    ) -> Result<Self> {
        if r.shape() != (d_out, d_out) {
            return Err(Error::dims(
                format!("R {d_out}x{d_out}"),
                format!("{}x{}", r.nrows(), r.ncols()),
            ));
        }
        if blocks.len() != d_in * d_in || blocks.iter().any(|b| b.shape() != (d_out, d_out)) {
            return Err(Error::dims(
                format!("{} blocks of size {d_out}x{d_out}", d_in * d_in),
                format!("{} blocks", blocks.len()),
            ));
        }
        // β(X) = Y·R for some Y iff β(X) vanishes on ker R = ran(I − R⁺R).
        let r_pinv = pinv_general(&r, tol);
        let off_row_space = CMatrix::identity(d_out, d_out) - &r_pinv * &r;
        for (idx, b) in blocks.iter().enumerate() {
            let leak = max_abs(&(b * &off_row_space));
            if leak > tol.eps_eq * max_abs(b).max(1.0) {
                return Err(Error::MalformedPartialMap(format!(
                    "block ({}, {}) leaves M·R by {leak:.3e}",
                    idx / d_in,
                    idx % d_in
                )));
            }
        }
        Ok(PartialCpMap {
            d_in,
            d_out,
            r,
            blocks,
        })
    }

    /// `β(X) = φ(X)·R`.
    pub fn from_map(phi: &CpMap, r: &CMatrix, tol: &Tolerance) -> Result<Self> {
        let d = phi.d_in();
        let blocks = (0..d * d)
            .map(|idx| phi.unit_image(idx / d, idx % d) * r)
            .collect();
        Self::new(d, phi.d_out(), r.clone(), blocks, tol)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn r(&self) -> &CMatrix {
        &self.r
    }

    pub fn block(&self, i: usize, j: usize) -> &CMatrix {
        &self.blocks[i * self.d_in + j]
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut y = CMatrix::zeros(self.d_out, self.d_out);
        for i in 0..self.d_in {
            for j in 0..self.d_in {
                y += self.block(i, j) * x[(i, j)];
            }
        }
        y
    }

    /// Range projection `P_R = R R⁺`; `φ(X)R` and `φ(X)P_R` determine each other.
    pub fn range_projection(&self, tol: &Tolerance) -> HermitianMatrix {
        range_projection(&self.r, tol)
    }

    /// `[β(E_ij) R⁺] = Choi(φ)(I ⊗ P_R)` for any completion `φ`.
    fn known_columns(&self, tol: &Tolerance) -> CMatrix {
        let n = self.d_in * self.d_out;
        let r_pinv = pinv_general(&self.r, tol);
        let mut m = CMatrix::zeros(n, n);
        for i in 0..self.d_in {
            for j in 0..self.d_in {
                m.view_mut((i * self.d_out, j * self.d_out), (self.d_out, self.d_out))
                    .copy_from(&(self.block(i, j) * &r_pinv));
            }
        }
        m
    }

    /// Block problem for the Choi matrix of a completion, split by `I ⊗ P_R`.
    pub fn block_problem(&self, tol: &Tolerance) -> Result<BlockCompletionProblem> {
        let p_r = self.range_projection(tol);
        let split = kron(&CMatrix::identity(self.d_in, self.d_in), p_r.as_matrix());
        let n = split.nrows();
        let known = self.known_columns(tol);
        let a = &split * &known * &split;
        let c = (CMatrix::identity(n, n) - &split) * &known * &split;
        let p = HermitianMatrix::from_trusted(split);
        // A may fail to be Hermitian for inconsistent β; that is a
        // feasibility question, not a malformed input.
        Ok(BlockCompletionProblem { p, a, c })
    }

    pub fn is_completion(&self, phi: &CpMap, tol: &Tolerance) -> bool {
        if (phi.d_in(), phi.d_out()) != (self.d_in, self.d_out) {
            return false;
        }
        let scale = phi.scale_hint() * max_abs(&self.r).max(1.0);
        (0..self.d_in).all(|i| {
            (0..self.d_in).all(|j| {
                max_abs_diff(&(phi.unit_image(i, j) * &self.r), self.block(i, j))
                    <= tol.eps_eq * scale
            })
        })
    }
}

/// Moore–Penrose inverse of an arbitrary square matrix through its SVD.
fn pinv_general(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let svd = numerics::full_svd(m);
    let top = svd.values.first().copied().unwrap_or(0.0);
    let mut out = CMatrix::zeros(m.ncols(), m.nrows());
    for (j, &s) in svd.values.iter().enumerate() {
        if top > 0.0 && s > tol.eps_rank * top {
            out += svd.v.column(j) * svd.u.column(j).adjoint() / C64::from(s);
        }
    }
    out
}

pub fn cp_completable(beta: &PartialCpMap, tol: &Tolerance) -> Result<bool> {
    Ok(beta.block_problem(tol)?.is_completable(tol))
}

/// Completion whose Choi matrix is the minimal block completion.
pub fn minimal_cp_completion_choi(beta: &PartialCpMap, tol: &Tolerance) -> Result<CpMap> {
    let m = beta.block_problem(tol)?.minimal_completion(tol)?;
    CpMap::from_choi(beta.d_in, beta.d_out, m.into_inner())
}

/// `α(X) = V* Q (X ⊗ I) Q V` with `Q` the projection onto the reducing
/// subspace generated by `V·ran(P_R)` in the minimal dilation of the seed.
pub fn minimal_cp_completion_stinespring(
    beta: &PartialCpMap,
    seed_completion: &CpMap,
    tol: &Tolerance,
) -> Result<CpMap> {
    if !seed_completion.is_cp(tol) || !beta.is_completion(seed_completion, tol) {
        return Err(Error::SeedNotACompletion);
    }
    let (d_in, d_out) = (beta.d_in, beta.d_out);
    if seed_completion.minimal_kraus(tol)?.is_empty() {
        return Ok(CpMap::zero(d_in, d_out));
    }
    let triple = minimal_stinespring(seed_completion, tol)?;
    let known = range_basis(beta.range_projection(tol).as_matrix(), tol);
    if known.ncols() == 0 {
        return Ok(CpMap::zero(d_in, d_out));
    }
    let mut gens = Vec::new();
    for c in 0..known.ncols() {
        let vh = triple.v() * known.column(c);
        for a in 0..d_in {
            for b in 0..d_in {
                gens.push(triple.represent(&matrix_unit(d_in, a, b)) * &vh);
            }
        }
    }
    let q = range_projection(&CMatrix::from_columns(&gens), tol);
    let qv = q.as_matrix() * triple.v();
    CpMap::from_action(d_in, d_out, |i, j| {
        qv.adjoint() * triple.represent(&matrix_unit(d_in, i, j)) * &qv
    })
}

pub fn necessary_conditions_report(
    beta: &PartialCpMap,
    tol: &Tolerance,
    trials: usize,
    seed: u64,
) -> Result<NecessaryConditions> {
    if !numerics::is_projection(&beta.r, tol) {
        return Err(Error::RNotProjection);
    }
    let (d_in, d_out) = (beta.d_in, beta.d_out);
    let r = &beta.r;
    let compressed = CpMap::from_action(d_in, d_out, |i, j| r * beta.block(i, j))?;
    let compressed_is_cp = compressed.is_cp(tol);

    let not_r = CMatrix::identity(d_out, d_out) - r;
    let mut rng = sample::rng(seed);
    let mut q_needed: f64 = 0.0;
    let mut violation = None;
    for trial in 0..trials {
        let rank = 1 + rng.random_range(0..d_in);
        let x = if trial == 0 {
            CMatrix::identity(d_in, d_in)
        } else {
            sample::psd_gram(&mut rng, d_in, rank).into_inner()
        };
        let x_norm = numerics::singular_values(&x)[0];
        let bx = beta.apply(&x);
        let lhs = bx.adjoint() * &not_r * &bx;
        let rhs = (r * &bx) * C64::from(x_norm);
        match required_q(&lhs, &rhs, tol) {
            Some(q) => q_needed = q_needed.max(q),
            None => {
                violation = Some(x);
                break;
            }
        }
    }
    Ok(NecessaryConditions {
        compressed_is_cp,
        q: violation.is_none().then_some(q_needed),
        violation,
        completable: cp_completable(beta, tol)?,
    })
}

/// Smallest `q ≥ 0` with `lhs ≤ q·rhs` for PSD `lhs`, or `None` if `rhs`
/// is not PSD or `lhs` is not supported inside `ran rhs`.
fn required_q(lhs: &CMatrix, rhs: &CMatrix, tol: &Tolerance) -> Option<f64> {
    let scale = max_abs(rhs).max(max_abs(lhs)).max(1.0);
    let rhs = HermitianMatrix::new(rhs.clone()).ok()?;
    if eigh(&rhs).values.first().copied().unwrap_or(0.0) < -tol.eps_psd * scale {
        return None;
    }
    let n = rhs.dim();
    let support = pseudo_inverse(&rhs, tol).as_matrix() * rhs.as_matrix();
    let outside = CMatrix::identity(n, n) - support;
    if max_abs(&(&outside * lhs * &outside)) > tol.eps_eq * scale {
        return None;
    }
    let root = psd_pinv_sqrt(&rhs, tol);
    let m = root.as_matrix() * lhs * root.as_matrix();
    let m = HermitianMatrix::from_trusted((&m + m.adjoint()) * C64::from(0.5));
    Some(eigh(&m).max_abs_value())
}

/// Max-entry asymmetry `‖M − M*‖`, for reporting non-Hermitian known blocks.
pub fn asymmetry(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Whether an asymmetry would be symmetrized silently.
pub fn is_nearly_hermitian(m: &CMatrix) -> bool {
    asymmetry(m) <= HERMITIAN_RESIDUAL * max_abs(m).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{approx_eq, pauli_x, real_matrix};
    use crate::stinespring::dominates;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn special() -> CpMap {
        CpMap::from_kraus(2, 2, vec![CMatrix::identity(2, 2), pauli_x()]).unwrap()
    }

    #[test]
    fn block_completable_examples() {
        let a = real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let ok = BlockCompletionProblem::from_blocks(&a, &real_matrix(1, 2, &[1.0, 0.0])).unwrap();
        assert!(block_completable(&ok, &tol()));
        let bad = BlockCompletionProblem::from_blocks(&a, &real_matrix(1, 2, &[0.0, 1.0])).unwrap();
        assert!(!block_completable(&bad, &tol()));
        assert_eq!(
            minimal_block_completion(&bad, &tol()),
            Err(Error::NotCompletable)
        );
        let mut rng = sample::rng(1);
        let any_c = sample::gaussian_matrix(&mut rng, 2, 2);
        let inv = BlockCompletionProblem::from_blocks(&CMatrix::identity(2, 2), &any_c).unwrap();
        assert!(block_completable(&inv, &tol()));
    }

    #[test]
    fn minimal_block_completion_examples() {
        let a = real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let prob =
            BlockCompletionProblem::from_blocks(&a, &real_matrix(1, 2, &[1.0, 0.0])).unwrap();
        let m = minimal_block_completion(&prob, &tol()).unwrap();
        let expected = real_matrix(3, 3, &[1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        assert!(approx_eq(&m, &expected, &tol()));
        assert_eq!(numerics::numerical_rank(&m, &tol()), 1);
        assert!(psd_check(&m, &tol()));

        let prob = BlockCompletionProblem::from_blocks(
            &CMatrix::identity(2, 2),
            &real_matrix(1, 2, &[1.0, 0.0]),
        )
        .unwrap();
        let d = prob.minimal_corner(&tol()).unwrap();
        assert_abs_diff_eq!(d[(2, 2)].re, 1.0, epsilon = 1e-12);

        let prob = BlockCompletionProblem::from_blocks(
            &real_matrix(1, 1, &[2.0]),
            &real_matrix(1, 1, &[3.0]),
        )
        .unwrap();
        let d = prob.minimal_corner(&tol()).unwrap();
        assert_abs_diff_eq!(d[(1, 1)].re, 4.5, epsilon = 1e-12);
    }

    #[test]
    fn cp_completable_examples() {
        let mut rng = sample::rng(3);
        let phi = sample::cp_map(&mut rng, 2, 3, 2);
        let r = sample::projection(&mut rng, 3, 1);
        let beta = PartialCpMap::from_map(&phi, &r, &tol()).unwrap();
        assert!(cp_completable(&beta, &tol()).unwrap());

        let neg = PartialCpMap::new(
            1,
            1,
            CMatrix::identity(1, 1),
            vec![real_matrix(1, 1, &[-1.0])],
            &tol(),
        )
        .unwrap();
        assert!(!cp_completable(&neg, &tol()).unwrap());

        let e11 = real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let beta = PartialCpMap::from_map(&special(), &e11, &tol()).unwrap();
        assert!(cp_completable(&beta, &tol()).unwrap());
        let a = minimal_cp_completion_choi(&beta, &tol()).unwrap();
        let b = minimal_cp_completion_stinespring(&beta, &special(), &tol()).unwrap();
        assert!(max_abs_diff(a.choi(), b.choi()) < 1e-8);
        assert!(beta.is_completion(&a, &tol()));
        assert!(dominates(&special(), &a, &tol()).unwrap());
    }

    #[test]
    fn malformed_partial_map() {
        let e11 = real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let blocks = vec![CMatrix::identity(2, 2); 4];
        assert!(matches!(
            PartialCpMap::new(2, 2, e11, blocks, &tol()),
            Err(Error::MalformedPartialMap(_))
        ));
    }

    #[test]
    fn malformed_check_uses_row_space_for_non_normal_r() {
        // R = E12 is not normal: M·R consists of matrices supported on the
        // second column.
        let r = real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let phi = special();
        assert!(PartialCpMap::from_map(&phi, &r, &tol()).is_ok());
    }

    #[test]
    fn completion_routes_examples() {
        let id = CpMap::identity(2);
        let beta = PartialCpMap::from_map(&id, &CMatrix::identity(2, 2), &tol()).unwrap();
        let a = minimal_cp_completion_choi(&beta, &tol()).unwrap();
        assert!(max_abs_diff(a.choi(), id.choi()) < 1e-9);
        let b = minimal_cp_completion_stinespring(&beta, &id, &tol()).unwrap();
        assert!(max_abs_diff(b.choi(), id.choi()) < 1e-9);

        let rho =
            HermitianMatrix::new(real_matrix(2, 2, &[1.0 / 3.0, 0.0, 0.0, 2.0 / 3.0])).unwrap();
        let v = numerics::basis_vector(2, 0);
        let eb = CpMap::eb_quasipure(&rho, &v).unwrap();
        let beta =
            PartialCpMap::from_map(&eb, &real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]), &tol()).unwrap();
        let a = minimal_cp_completion_choi(&beta, &tol()).unwrap();
        assert!(max_abs_diff(a.choi(), eb.choi()) < 1e-9);
        let b = minimal_cp_completion_stinespring(&beta, &eb, &tol()).unwrap();
        assert!(max_abs_diff(b.choi(), eb.choi()) < 1e-9);

        let zero =
            PartialCpMap::from_map(&CpMap::zero(2, 2), &CMatrix::identity(2, 2), &tol()).unwrap();
        let a = minimal_cp_completion_choi(&zero, &tol()).unwrap();
        assert!(a.is_zero(&tol()));
        assert_eq!(
            minimal_cp_completion_stinespring(&beta, &special(), &tol()),
            Err(Error::SeedNotACompletion)
        );
    }

    #[test]
    fn necessary_conditions_examples() {
        let mut rng = sample::rng(9);
        let phi = sample::cp_map(&mut rng, 2, 3, 2);
        let r = sample::projection(&mut rng, 3, 2);
        let beta = PartialCpMap::from_map(&phi, &r, &tol()).unwrap();
        let rep = necessary_conditions_report(&beta, &tol(), 30, 1).unwrap();
        assert!(rep.compressed_is_cp);
        assert!(rep.q.is_some());
        assert!(rep.completable);

        let mut blocks = vec![CMatrix::zeros(2, 2); 4];
        blocks[0] = real_matrix(2, 2, &[-1.0, 0.0, 0.0, 0.0]);
        let e11 = real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let beta = PartialCpMap::new(2, 2, e11.clone(), blocks, &tol()).unwrap();
        let rep = necessary_conditions_report(&beta, &tol(), 10, 1).unwrap();
        assert!(!rep.compressed_is_cp);

        let zero = PartialCpMap::new(2, 2, e11, vec![CMatrix::zeros(2, 2); 4], &tol()).unwrap();
        let rep = necessary_conditions_report(&zero, &tol(), 10, 1).unwrap();
        assert!(rep.compressed_is_cp);
        assert_eq!(rep.q, Some(0.0));
        assert!(rep.completable);

        let not_proj = PartialCpMap::new(
            2,
            2,
            real_matrix(2, 2, &[2.0, 0.0, 0.0, 0.0]),
            vec![CMatrix::zeros(2, 2); 4],
            &tol(),
        )
        .unwrap();
        assert_eq!(
            necessary_conditions_report(&not_proj, &tol(), 3, 1),
            Err(Error::RNotProjection)
        );
    }

    #[test]
    fn regularized_corner_approaches_minimal() {
        let prob = BlockCompletionProblem::from_blocks(
            &real_matrix(1, 1, &[2.0]),
            &real_matrix(1, 1, &[3.0]),
        )
        .unwrap();
        let d = prob.minimal_corner(&tol()).unwrap();
        let near = prob.regularized_corner(1e-8);
        assert!(max_abs_diff(&d, &near) < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Kernel criterion against the order inequality, both directions.
        #[test]
        fn kernel_criterion_matches_order_inequality(r in 1usize..=3, s in 1usize..=3, rank in 0usize..=3, leak in any::<bool>(), seed in any::<u64>()) {
            let mut rng = sample::rng(seed);
            let rank = rank.min(r);
            let a = sample::psd_with_rank(&mut rng, r, rank, 0.3, 2.0);
            let range = numerics::range_projection(a.as_matrix(), &tol());
            let base = sample::gaussian_matrix(&mut rng, s, r);
            let c_mat = if leak { base } else { &base * range.as_matrix() };
            let prob = BlockCompletionProblem::from_blocks(&a, &c_mat).unwrap();
            let kernel_ok = block_completable(&prob, &tol());
            let cc = c_mat.adjoint() * &c_mat;
            match prob.domination_constant(&tol()) {
                Some(q) => {
                    prop_assert!(kernel_ok);
                    let gap = HermitianMatrix::new(a.as_matrix() * C64::from(q * (1.0 + 1e-9) + 1e-12) - &cc).unwrap();
                    prop_assert!(numerics::min_eigenvalue(&gap) >= -1e-8);
                }
                None => {
                    prop_assert!(!kernel_ok);
                    // no q works: C*C has mass on ker A
                    for q in [1.0, 1e3, 1e6] {
                        let gap = HermitianMatrix::new(a.as_matrix() * C64::from(q) - &cc).unwrap();
                        prop_assert!(numerics::min_eigenvalue(&gap) < -1e-9);
                    }
                }
            }
        }
    }
}
