//! Equality of CP maps after right multiplication by an operator `R`, and
//! almost-everywhere equality relative to a reference CP map `ξ`, which is
//! `R`-equality for the support projection of `ξ`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::completion::{
    minimal_cp_completion_choi, minimal_cp_completion_stinespring, PartialCpMap,
};
use crate::cpmap::CpMap;
use crate::numerics::{
    self, eigh, kernel_basis, ketbra, max_abs, max_abs_diff, psd_pinv_sqrt, psd_sqrt, range_basis,
    range_projection, CMatrix, CVector, HermitianMatrix, Tolerance, C64,
};
use crate::quasipure::{
    grid_oracle, is_quasipure, is_valid_witness, kernel_enlarging_part, QuasiPurityOptions,
};
use crate::sample;
use crate::stinespring::minimal_stinespring;
use crate::{Error, Result};

/// Hypotheses of the rigidity theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// `φ` is quasi-pure with a proof-grade verdict.
    QuasiPurity,
    /// `φ(I) = ψ(I)`.
    UnitsEqual,
    /// `φ(X)R = ψ(X)R` for all `X`.
    REquivalence,
    /// `φ(X₀)R ≠ 0` for some `X₀`.
    NonvanishingOnR,
    /// `ξ∘φ ≠ 0`.
    ReferenceNonvanishing,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::QuasiPurity => "phi is not certified quasi-pure",
            Hypothesis::UnitsEqual => "phi(I) and psi(I) differ",
            Hypothesis::REquivalence => "phi and psi are not R-equivalent",
            Hypothesis::NonvanishingOnR => "phi(X)R vanishes for every X",
            Hypothesis::ReferenceNonvanishing => "xi composed with phi vanishes",
        })
    }
}

impl Hypothesis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Hypothesis::QuasiPurity => "QuasiPurity",
            Hypothesis::UnitsEqual => "UnitsEqual",
            Hypothesis::REquivalence => "REquivalence",
            Hypothesis::NonvanishingOnR => "NonvanishingOnR",
            Hypothesis::ReferenceNonvanishing => "ReferenceNonvanishing",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquivalenceContext {
    Operator(CMatrix),
    Reference(CpMap),
}

impl EquivalenceContext {
    /// Projection `P` with `φ =_ctx ψ ⟺ φ(X)P = ψ(X)P`.
    pub fn projection(&self, tol: &Tolerance) -> Result<HermitianMatrix> {
        match self {
            EquivalenceContext::Operator(r) => Ok(range_projection(r, tol)),
            EquivalenceContext::Reference(xi) => support_projection(xi, tol),
        }
    }

    fn dim(&self) -> usize {
        match self {
            EquivalenceContext::Operator(r) => r.nrows(),
            EquivalenceContext::Reference(xi) => xi.d_in(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub alpha: CpMap,
    /// `φ − α`.
    pub phi1: CpMap,
    /// Max-entry gap between the Stinespring and Choi constructions of `α`.
    pub route_discrepancy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RigidityVerdict {
    TheoremHolds {
        distance: f64,
    },
    /// `φ ≠ ψ` although all hypotheses were verified; this indicates a
    /// numerical failure, never a mathematical one.
    Counterexample {
        distance: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub psi: CpMap,
    /// `|h0⟩⟨h0| / ⟨h0, h0⟩`.
    pub r: CMatrix,
    pub z: CMatrix,
    /// The dominated part that gets twisted by `Z`.
    pub alpha: CpMap,
    pub distance: f64,
    pub attempts: usize,
}

/// Scan of the CP maps agreeing with `φ` on `R` and at the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcedEqualityReport {
    /// `trace(φ(I) − α_R(I))` for the minimal completion `α_R`.
    pub trace_gap: f64,
    /// Every such map dominates `α_R`, so a zero gap forces equality.
    pub forced_by_minimality: bool,
    /// Dimension of the space of admissible Hermitian perturbations.
    pub free_directions: usize,
    /// Largest `t` found with `Choi(φ) + tH ⪰ 0` over the sampled unit
    /// directions `H`.
    pub max_feasible_step: f64,
}

fn check_dims(phi: &CpMap, psi: &CpMap) -> Result<()> {
    if (phi.d_in(), phi.d_out()) != (psi.d_in(), psi.d_out()) {
        return Err(Error::dims(
            format!("map {}→{}", phi.d_in(), phi.d_out()),
            format!("map {}→{}", psi.d_in(), psi.d_out()),
        ));
    }
    Ok(())
}

/// Range projection of `Σ K_j K_j*` over minimal Kraus factors of `ξ`.
pub fn support_projection(xi: &CpMap, tol: &Tolerance) -> Result<HermitianMatrix> {
    let kraus = xi.minimal_kraus(tol)?;
    if kraus.is_empty() {
        return Err(Error::ZeroMap);
    }
    let d = xi.d_in();
    let mut s = CMatrix::zeros(d, d);
    for k in &kraus {
        s += k * k.adjoint();
    }
    let p = range_projection(&s, tol);
    let gap = max_abs_diff(&xi.apply(&p)?, &xi.apply_identity());
    if gap > tol.eps_eq * xi.scale_hint() {
        return Err(Error::Internal(format!(
            "support projection misses mass {gap:.3e}"
        )));
    }
    Ok(p)
}

fn equal_on(phi: &CpMap, psi: &CpMap, p: &CMatrix, tol: &Tolerance) -> bool {
    let d = phi.d_in();
    let scale = phi.scale_hint().max(psi.scale_hint());
    (0..d).all(|i| {
        (0..d).all(|j| {
            let diff = (phi.unit_image(i, j) - psi.unit_image(i, j)) * p;
            max_abs(&diff) <= tol.eps_eq * scale
        })
    })
}

pub fn r_equivalent(
    phi: &CpMap,
    psi: &CpMap,
    ctx: &EquivalenceContext,
    tol: &Tolerance,
) -> Result<bool> {
    check_dims(phi, psi)?;
    if ctx.dim() != phi.d_out() {
        return Err(Error::dims(
            format!("context on C^{}", phi.d_out()),
            format!("C^{}", ctx.dim()),
        ));
    }
    let p = ctx.projection(tol)?;
    Ok(equal_on(phi, psi, &p, tol))
}

/// `φ = α + φ1` with `α` the minimal CP map `R`-equivalent to `φ`.
pub fn decompose_along(phi: &CpMap, r: &CMatrix, tol: &Tolerance) -> Result<DecompositionResult> {
    if !phi.is_cp(tol) {
        return Err(Error::NotCp);
    }
    let beta = PartialCpMap::from_map(phi, r, tol)?;
    let alpha = minimal_cp_completion_stinespring(&beta, phi, tol)?;
    let via_choi = minimal_cp_completion_choi(&beta, tol)?;
    let route_discrepancy = max_abs_diff(alpha.choi(), via_choi.choi());
    if route_discrepancy > 1e-6 * phi.scale_hint() {
        return Err(Error::Internal(format!(
            "completion routes disagree by {route_discrepancy:.3e}"
        )));
    }
    let phi1 = phi.sub(&alpha)?;
    Ok(DecompositionResult {
        alpha,
        phi1,
        route_discrepancy,
    })
}

/// Proof-grade quasi-purity: the pipeline verdict, or the grid oracle
/// where the pipeline is only randomized and the instance is small.
fn certify_quasipure(phi: &CpMap, tol: &Tolerance) -> Result<bool> {
    let v = is_quasipure(phi, tol, &QuasiPurityOptions::default())?;
    if v.is_proof_grade_quasipure() {
        return Ok(true);
    }
    if v.status == crate::quasipure::Status::Inconclusive {
        if let Ok(g) = grid_oracle(phi, 200, tol) {
            return Ok(g.is_proof_grade_quasipure());
        }
    }
    Ok(false)
}

pub fn rigidity_check(
    phi: &CpMap,
    psi: &CpMap,
    r: &CMatrix,
    tol: &Tolerance,
) -> Result<RigidityVerdict> {
    check_dims(phi, psi)?;
    if r.shape() != (phi.d_out(), phi.d_out()) {
        return Err(Error::dims(
            format!("R {0}x{0}", phi.d_out()),
            format!("{}x{}", r.nrows(), r.ncols()),
        ));
    }
    if !psi.is_cp(tol) {
        return Err(Error::NotCp);
    }
    if !certify_quasipure(phi, tol)? {
        return Err(Error::HypothesisFailed(Hypothesis::QuasiPurity));
    }
    let scale = phi.scale_hint().max(psi.scale_hint());
    if max_abs_diff(&phi.apply_identity(), &psi.apply_identity()) > tol.eps_eq * scale {
        return Err(Error::HypothesisFailed(Hypothesis::UnitsEqual));
    }
    let ctx = EquivalenceContext::Operator(r.clone());
    if !r_equivalent(phi, psi, &ctx, tol)? {
        return Err(Error::HypothesisFailed(Hypothesis::REquivalence));
    }
    let d = phi.d_in();
    let r_scale = max_abs(r).max(f64::MIN_POSITIVE);
    let nonvanishing = (0..d).any(|i| {
        (0..d).any(|j| max_abs(&(phi.unit_image(i, j) * r)) > tol.eps_eq * scale * r_scale)
    });
    if !nonvanishing {
        return Err(Error::HypothesisFailed(Hypothesis::NonvanishingOnR));
    }
    let distance = phi.distance(psi)?;
    Ok(if distance <= tol.eps_eq * scale {
        RigidityVerdict::TheoremHolds { distance }
    } else {
        RigidityVerdict::Counterexample { distance }
    })
}

pub fn ae_equal_rigidity(
    phi: &CpMap,
    psi: &CpMap,
    xi: &CpMap,
    tol: &Tolerance,
) -> Result<RigidityVerdict> {
    check_dims(phi, psi)?;
    if xi.d_in() != phi.d_out() {
        return Err(Error::dims(
            format!("reference map on M_{}", phi.d_out()),
            format!("M_{}", xi.d_in()),
        ));
    }
    if !xi.is_cp(tol) {
        return Err(Error::NotCp);
    }
    let p = support_projection(xi, tol)?;
    let d = phi.d_in();
    let scale = phi.scale_hint() * xi.scale_hint();
    let composite_nonzero = (0..d).any(|i| {
        (0..d).any(|j| {
            xi.apply(&phi.unit_image(i, j))
                .map(|y| max_abs(&y) > tol.eps_eq * scale)
                .unwrap_or(false)
        })
    });
    if !composite_nonzero {
        return Err(Error::HypothesisFailed(Hypothesis::ReferenceNonvanishing));
    }
    rigidity_check(phi, psi, p.as_matrix(), tol)
}

/// Largest deviation `max_ij ‖Z*α(E_ij)Z − α(E_ij)‖`.
fn twist_distance(alpha: &CpMap, z: &CMatrix) -> f64 {
    let d = alpha.d_in();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let a = alpha.unit_image(i, j);
            worst = worst.max(max_abs_diff(&(z.adjoint() * &a * z), &a));
        }
    }
    worst
}

/// Searches `Z = A^{+1/2} U A^{1/2} + K` with `A = α(I)`, `U` unitary on
/// `ran A`, `ran K ⊆ ker A` and `K h0 = 0`. Every such `Z` satisfies
/// `Z h0 = 0` and `Z*AZ = A`; the search looks for one that moves `α`.
pub fn counterexample_construct(
    phi: &CpMap,
    h0: &CVector,
    tol: &Tolerance,
    budget: usize,
    seed: u64,
) -> Result<Option<Counterexample>> {
    if !phi.is_cp(tol) {
        return Err(Error::NotCp);
    }
    if h0.len() != phi.d_out() {
        return Err(Error::dims(
            format!("vector in C^{}", phi.d_out()),
            h0.len(),
        ));
    }
    let triple = minimal_stinespring(phi, tol)?;
    let scale = phi.scale_hint();
    if (phi.apply_identity() * h0).norm() <= tol.eps_eq * scale * h0.norm() {
        return Err(Error::WitnessInvalid(
            "phi(I) annihilates the vector".into(),
        ));
    }
    if !is_valid_witness(triple.kraus(), h0, tol) {
        return Err(Error::WitnessInvalid(
            "Kraus images of the vector are not linearly dependent".into(),
        ));
    }
    let alpha = kernel_enlarging_part(&triple, h0, tol)?;
    let a1 = HermitianMatrix::new(alpha.apply_identity())?;
    if alpha.is_zero(tol) || (a1.as_matrix() * h0).norm() > tol.eps_eq * scale * h0.norm() {
        return Err(Error::WitnessInvalid(
            "dominated part does not vanish on the vector".into(),
        ));
    }

    let d = phi.d_out();
    let sqrt_a = psd_sqrt(&a1);
    let pinv_sqrt_a = psd_pinv_sqrt(&a1, tol);
    let range = range_basis(a1.as_matrix(), tol);
    let p_range = &range * range.adjoint();
    let p_kernel = CMatrix::identity(d, d) - &p_range;
    let r = ketbra(h0, h0) / C64::from(h0.norm_squared());
    let threshold = 1e-4 * scale;

    let mut rng = sample::rng(seed);
    let mut structured: Vec<(CMatrix, CMatrix)> = Vec::new();
    let rank = range.ncols();
    // cyclic shift and a fixed phase pattern on ran A
    if rank >= 2 {
        let shift = CMatrix::from_fn(rank, rank, |i, j| {
            if (j + 1) % rank == i {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        structured.push((shift, CMatrix::zeros(d, d)));
    }
    let phases = CMatrix::from_diagonal(&CVector::from_fn(rank, |i, _| {
        C64::from_polar(1.0, 0.7 * (i + 1) as f64)
    }));
    structured.push((phases, CMatrix::zeros(d, d)));

    let mut attempts = 0;
    let next = |rng: &mut sample::SampleRng, attempts: usize| -> (CMatrix, CMatrix) {
        if attempts < structured.len() {
            return structured[attempts].clone();
        }
        let w = sample::unitary(rng, rank);
        let k = if rng.random_bool(0.5) {
            sample::operator_between(rng, &p_kernel, h0)
        } else {
            CMatrix::zeros(d, d)
        };
        (w, k)
    };
    while attempts < budget {
        let (w, k) = next(&mut rng, attempts);
        attempts += 1;
        let u = &range * w * range.adjoint();
        let z = pinv_sqrt_a.as_matrix() * &u * sqrt_a.as_matrix() + k;
        if twist_distance(&alpha, &z) <= threshold {
            continue;
        }
        let twisted = alpha.conjugate_output(&z)?;
        let psi = twisted.add(&phi.sub(&alpha)?)?;
        let psi = CpMap::from_choi(phi.d_in(), d, psi.choi().clone())?;
        let distance = phi.distance(&psi)?;
        let ok = psi.is_cp(tol)
            && max_abs_diff(&psi.apply_identity(), &phi.apply_identity()) <= tol.eps_eq * scale
            && r_equivalent(phi, &psi, &EquivalenceContext::Operator(r.clone()), tol)?
            && distance > 1e-6;
        if ok {
            return Ok(Some(Counterexample {
                psi,
                r,
                z,
                alpha,
                distance,
                attempts,
            }));
        }
    }
    Ok(None)
}

/// Certifies that every CP `ψ` with `ψ(I) = φ(I)` and `ψ =_R φ` equals `φ`.
///
/// Such a `ψ` dominates the minimal completion `α_R`, and `ψ − α_R` is a CP
/// map with value `φ(I) − α_R(I)` at the identity, so a vanishing trace of
/// that difference forces `ψ = α_R = φ`. Independently, random admissible
/// Choi perturbations `H` (vanishing on `I ⊗ P_R`, with zero partial trace
/// over the input) are probed for the largest feasible step.
pub fn forced_equality_scan(
    phi: &CpMap,
    r: &CMatrix,
    samples: usize,
    seed: u64,
    tol: &Tolerance,
) -> Result<ForcedEqualityReport> {
    let beta = PartialCpMap::from_map(phi, r, tol)?;
    let alpha = minimal_cp_completion_choi(&beta, tol)?;
    let gap = phi.apply_identity() - alpha.apply_identity();
    let trace_gap = gap.trace().re;
    let forced_by_minimality = trace_gap.abs() <= tol.eps_eq * phi.scale_hint();

    let (d_in, d_out) = (phi.d_in(), phi.d_out());
    let n = d_in * d_out;
    let p_r = range_projection(r, tol);
    let split = numerics::kron(&CMatrix::identity(d_in, d_in), p_r.as_matrix());

    // Real coordinates of Hermitian H: for i ≤ j, Re H_ij and (i < j) Im H_ij.
    let mut coords: Vec<(usize, usize, bool)> = Vec::new();
    for i in 0..n {
        for j in i..n {
            coords.push((i, j, false));
            if i < j {
                coords.push((i, j, true));
            }
        }
    }
    let herm_from = |x: &[f64]| -> CMatrix {
        let mut h = CMatrix::zeros(n, n);
        for (t, &(i, j, imag)) in coords.iter().enumerate() {
            let v = if imag {
                C64::new(0.0, x[t])
            } else {
                C64::new(x[t], 0.0)
            };
            h[(i, j)] += v;
            if i != j {
                h[(j, i)] += v.conj();
            }
        }
        h
    };
    // Linear constraints H (I ⊗ P_R) = 0 and Σ_i H_ii = 0, one real column
    // per coordinate.
    let m = coords.len();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(m);
    for t in 0..m {
        let mut e = vec![0.0; m];
        e[t] = 1.0;
        let h = herm_from(&e);
        let on_r = &h * &split;
        let mut trace_part = CMatrix::zeros(d_out, d_out);
        for i in 0..d_in {
            trace_part += h.view((i * d_out, i * d_out), (d_out, d_out));
        }
        columns.push(
            on_r.iter()
                .chain(trace_part.iter())
                .flat_map(|z| [z.re, z.im])
                .collect(),
        );
    }
    let constraints = DMatrix::from_fn(columns[0].len(), m, |i, j| columns[j][i]);
    // The kernel of a real matrix is closed under conjugation, so real and
    // imaginary parts of a complex kernel basis span the real kernel.
    let kernel = kernel_basis(&constraints.map(C64::from), tol);
    let mut null: Vec<DVector<f64>> = Vec::new();
    for col in kernel.column_iter() {
        for mut v in [col.map(|z| z.re), col.map(|z| z.im)] {
            for _ in 0..2 {
                for b in &null {
                    let proj = b.dot(&v);
                    v -= b * proj;
                }
            }
            let norm = v.norm();
            if norm > 1e-6 {
                null.push(v / norm);
            }
        }
    }
    let free_directions = null.len();

    let choi = phi.choi().clone();
    let psd_floor = -1e-12 * phi.scale_hint();
    let feasible = |h: &CMatrix, t: f64| -> bool {
        let m = HermitianMatrix::new(&choi + h * C64::from(t));
        match m {
            Ok(m) => eigh(&m).values[0] >= psd_floor,
            Err(_) => false,
        }
    };
    let mut rng = sample::rng(seed);
    let mut max_step: f64 = 0.0;
    if free_directions > 0 {
        for _ in 0..samples {
            let mut x = vec![0.0; m];
            for b in &null {
                let g: f64 = rng.sample(rand_distr::StandardNormal);
                for (xi, bi) in x.iter_mut().zip(b.iter()) {
                    *xi += g * bi;
                }
            }
            let h = herm_from(&x);
            let h = &h / C64::from(max_abs(&h).max(f64::MIN_POSITIVE));
            if !feasible(&h, 0.0) {
                continue;
            }
            let (mut lo, mut hi) = (0.0, 1.0);
            if feasible(&h, hi) {
                max_step = max_step.max(hi);
                continue;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if feasible(&h, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            max_step = max_step.max(lo);
        }
    }
    Ok(ForcedEqualityReport {
        trace_gap,
        forced_by_minimality,
        free_directions,
        max_feasible_step: max_step,
    })
}
