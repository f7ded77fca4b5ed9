//! Quasi-purity of CP maps between matrix algebras.
//!
//! A CP map with linearly independent Kraus factors `L_1, …, L_k` is
//! quasi-pure iff for every `h` the vectors `L_1 h, …, L_k h` are either all
//! zero or linearly independent. After removing the common kernel of the
//! factors this says that every nontrivial combination `Σ a_j L_j` is
//! injective, which is what the pencil and search routines test.

mod exact;
mod pencil;
mod roots;

use rand::Rng;

use crate::cpmap::CpMap;
use crate::numerics::{
    full_svd, kernel_basis, max_abs, normalize_phase, numerical_rank, range_basis, CMatrix,
    CVector, HermitianMatrix, Tolerance, C64,
};
use crate::sample;
use crate::stinespring::{minimal_stinespring, StinespringTriple};
use crate::{Error, Result};

pub use pencil::{exact_pencil_k2, PencilDecision};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    QuasiPure,
    NotQuasiPure,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Pure,
    ExactPencil,
    NecessaryConditionViolated,
    RandomizedNoCounterexample,
    /// A witness turned up during the randomized search.
    RandomizedSearch,
    GridOracle,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::QuasiPure => "QuasiPure",
            Status::NotQuasiPure => "NotQuasiPure",
            Status::Inconclusive => "Inconclusive",
        }
    }
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Pure => "Pure",
            Method::ExactPencil => "ExactPencil",
            Method::NecessaryConditionViolated => "NecessaryConditionViolated",
            Method::RandomizedNoCounterexample => "RandomizedNoCounterexample",
            Method::RandomizedSearch => "RandomizedSearch",
            Method::GridOracle => "GridOracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiPurityVerdict {
    pub status: Status,
    /// Present exactly when `status` is `NotQuasiPure`.
    pub witness: Option<CVector>,
    pub method: Method,
    pub samples_used: usize,
}

impl QuasiPurityVerdict {
    fn quasi_pure(method: Method, samples_used: usize) -> Self {
        QuasiPurityVerdict {
            status: Status::QuasiPure,
            witness: None,
            method,
            samples_used,
        }
    }

    fn not_quasi_pure(witness: CVector, method: Method, samples_used: usize) -> Self {
        QuasiPurityVerdict {
            status: Status::NotQuasiPure,
            witness: Some(normalize_phase(&witness)),
            method,
            samples_used,
        }
    }

    /// Quasi-purity established by an argument that does not rely on
    /// random sampling.
    pub fn is_proof_grade_quasipure(&self) -> bool {
        self.status == Status::QuasiPure
            && matches!(
                self.method,
                Method::Pure | Method::ExactPencil | Method::GridOracle
            )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiPurityOptions {
    /// Random draws allowed in the search for `k ≥ 3`.
    pub budget: usize,
    pub seed: u64,
    /// Report a randomized absence of counterexamples as `Inconclusive`.
    pub strict: bool,
}

impl Default for QuasiPurityOptions {
    fn default() -> Self {
        QuasiPurityOptions {
            budget: 2000,
            seed: 0,
            strict: true,
        }
    }
}

/// `[L_1 h | … | L_k h]`.
pub fn kraus_images(kraus: &[CMatrix], h: &CVector) -> CMatrix {
    let cols: Vec<CVector> = kraus.iter().map(|l| l * h).collect();
    CMatrix::from_columns(&cols)
}

fn kraus_scale(kraus: &[CMatrix]) -> f64 {
    kraus.iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// `σ_k / σ_1` of `F(h) = [L_j h]`, or `None` when `F(h)` vanishes relative
/// to the size of the factors. Zero when `F(h)` has fewer rows than columns.
pub fn dependency_ratio(kraus: &[CMatrix], h: &CVector) -> Option<f64> {
    let k = kraus.len();
    let f = kraus_images(kraus, h);
    let scale = kraus_scale(kraus) * h.norm();
    if scale == 0.0 || max_abs(&f) <= 1e-10 * scale {
        return None;
    }
    let s = full_svd(&f).values;
    if s.len() < k {
        return Some(0.0);
    }
    Some(s[k - 1] / s[0])
}

/// `0 < rank F(h) < k` at `eps_rank`.
pub fn is_valid_witness(kraus: &[CMatrix], h: &CVector, tol: &Tolerance) -> bool {
    match dependency_ratio(kraus, h) {
        Some(r) => r <= tol.eps_rank && numerical_rank(&kraus_images(kraus, h), tol) > 0,
        None => false,
    }
}

/// Row-reduced basis of the span of the factors: a canonical, basis
/// independent representative of the Kraus span.
fn canonical_span(kraus: &[CMatrix]) -> Vec<CMatrix> {
    let (d_in, d_out) = kraus[0].shape();
    let len = d_in * d_out;
    let mut rows: Vec<Vec<C64>> = kraus
        .iter()
        .map(|l| (0..len).map(|t| l[(t / d_out, t % d_out)]).collect())
        .collect();
    let scale = rows.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let mut pivot_row = 0;
    for col in 0..len {
        if pivot_row == rows.len() {
            break;
        }
        let (best, mag) = (pivot_row..rows.len())
            .map(|r| (r, rows[r][col].norm()))
            .fold(
                (pivot_row, -1.0),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
        if mag <= 1e-10 * scale {
            continue;
        }
        rows.swap(pivot_row, best);
        let inv = C64::new(1.0, 0.0) / rows[pivot_row][col];
        for z in rows[pivot_row].iter_mut() {
            *z *= inv;
        }
        rows[pivot_row][col] = C64::new(1.0, 0.0);
        for r in 0..rows.len() {
            if r == pivot_row {
                continue;
            }
            let f = rows[r][col];
            if f.norm() == 0.0 {
                continue;
            }
            let (src, dst) = if r < pivot_row {
                let (a, b) = rows.split_at_mut(pivot_row);
                (&b[0], &mut a[r])
            } else {
                let (a, b) = rows.split_at_mut(r);
                (&a[pivot_row], &mut b[0])
            };
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d -= f * s;
            }
            dst[col] = C64::new(0.0, 0.0);
        }
        pivot_row += 1;
    }
    rows.iter()
        .map(|r| CMatrix::from_fn(d_in, d_out, |i, p| r[i * d_out + p]))
        .collect()
}

fn stack(mats: &[CMatrix]) -> CMatrix {
    crate::cpmap::stack_rows(mats)
}

/// Vector `h` in the kernel of one factor but not of all of them.
fn kernel_difference(kraus: &[CMatrix], tol: &Tolerance) -> Option<CVector> {
    let common = kernel_basis(&stack(kraus), tol);
    let d_out = kraus[0].ncols();
    let p_common = &common * common.adjoint();
    let complement = CMatrix::identity(d_out, d_out) - p_common;
    for l in kraus {
        let ker = kernel_basis(l, tol);
        if ker.ncols() > common.ncols() {
            let extra = range_basis(&(&complement * ker), tol);
            if extra.ncols() > 0 {
                return Some(extra.column(0).into_owned());
            }
        }
    }
    None
}

pub fn is_quasipure(
    phi: &CpMap,
    tol: &Tolerance,
    opts: &QuasiPurityOptions,
) -> Result<QuasiPurityVerdict> {
    if !phi.is_cp(tol) {
        return Err(Error::NotCp);
    }
    let minimal = phi.minimal_kraus(tol)?;
    if minimal.is_empty() {
        return Err(Error::ZeroMap);
    }
    let k = minimal.len();
    if k == 1 {
        return Ok(QuasiPurityVerdict::quasi_pure(Method::Pure, 0));
    }
    let d_in = phi.d_in();
    if k > d_in {
        // F(h) has d_in rows, so its rank is below k whenever it is nonzero.
        let svd = full_svd(&stack(&minimal));
        return Ok(QuasiPurityVerdict::not_quasi_pure(
            svd.v.column(0).into_owned(),
            Method::NecessaryConditionViolated,
            0,
        ));
    }
    let kraus = canonical_span(&minimal);
    if let Some(h) = kernel_difference(&kraus, tol) {
        return Ok(QuasiPurityVerdict::not_quasi_pure(
            h,
            Method::NecessaryConditionViolated,
            0,
        ));
    }
    let verdict = match reduce_exact(&kraus) {
        Some(reduced) if k == 2 => {
            let d = pencil::decide_exact(&reduced.factors[0], &reduced.factors[1], tol);
            pencil_verdict(d, |h| reduced.lift(h))
        }
        _ => {
            let (basis, factors) = reduce_float(&kraus, tol);
            let lift = |h: &CVector| &basis * h;
            if basis.ncols() == 1 {
                column_independence_verdict(&factors, &basis, tol)
            } else if k == 2 {
                pencil_verdict(pencil::decide_float(&factors[0], &factors[1], tol), lift)
            } else {
                randomized_search(&factors, &basis, tol, opts)
            }
        }
    };
    if let Some(h) = &verdict.witness {
        if !is_valid_witness(&kraus, h, tol) {
            return Err(Error::Internal("witness failed the rank re-check".into()));
        }
    }
    Ok(verdict)
}

fn pencil_verdict(d: PencilDecision, lift: impl Fn(&CVector) -> CVector) -> QuasiPurityVerdict {
    match d.witnesses.first() {
        None => QuasiPurityVerdict::quasi_pure(Method::ExactPencil, 0),
        Some(h) => QuasiPurityVerdict::not_quasi_pure(lift(h), Method::ExactPencil, 0),
    }
}

/// One reduced column: `F(h)` is a multiple of `[L_j b]`, so quasi-purity
/// is linear independence of those columns.
fn column_independence_verdict(
    factors: &[CMatrix],
    basis: &CMatrix,
    tol: &Tolerance,
) -> QuasiPurityVerdict {
    let cols: Vec<CVector> = factors.iter().map(|l| l.column(0).into_owned()).collect();
    let m = CMatrix::from_columns(&cols);
    if numerical_rank(&m, tol) == factors.len() {
        QuasiPurityVerdict::quasi_pure(Method::ExactPencil, 0)
    } else {
        QuasiPurityVerdict::not_quasi_pure(basis.column(0).into_owned(), Method::ExactPencil, 0)
    }
}

/// Factors restricted to an orthonormal basis of the complement of their
/// common kernel.
fn reduce_float(kraus: &[CMatrix], tol: &Tolerance) -> (CMatrix, Vec<CMatrix>) {
    let s = stack(kraus);
    let basis = range_basis(&s.adjoint(), tol);
    let factors = kraus.iter().map(|l| l * &basis).collect();
    (basis, factors)
}

struct ExactReduction {
    factors: Vec<exact::GqMatrix>,
    pivots: Vec<usize>,
    d_out: usize,
}

impl ExactReduction {
    fn lift(&self, h: &CVector) -> CVector {
        let mut out = CVector::zeros(self.d_out);
        for (i, &p) in self.pivots.iter().enumerate() {
            out[p] = h[i];
        }
        out
    }
}

/// When every entry is a Gaussian rational, restricts the factors to the
/// pivot coordinates of their stack, a rational complement of the common
/// kernel.
fn reduce_exact(kraus: &[CMatrix]) -> Option<ExactReduction> {
    let exact: Vec<exact::GqMatrix> = kraus
        .iter()
        .map(exact::GqMatrix::from_float)
        .collect::<Option<_>>()?;
    let mut stacked = exact[0].clone();
    for m in &exact[1..] {
        stacked = exact::GqMatrix::stack(&stacked, m);
    }
    let pivots = stacked.clone().rref();
    let d_out = kraus[0].ncols();
    Some(ExactReduction {
        factors: exact.iter().map(|m| m.select_columns(&pivots)).collect(),
        pivots,
        d_out,
    })
}

fn combine(factors: &[CMatrix], a: &[C64]) -> CMatrix {
    let mut m = CMatrix::zeros(factors[0].nrows(), factors[0].ncols());
    for (l, c) in factors.iter().zip(a) {
        m += l * *c;
    }
    m
}

/// Search for `(a, h)` with `Σ a_j L_j h = 0`, `h ≠ 0`, in the reduced
/// coordinates. Every candidate is checked with the rank criterion.
fn randomized_search(
    factors: &[CMatrix],
    basis: &CMatrix,
    tol: &Tolerance,
    opts: &QuasiPurityOptions,
) -> QuasiPurityVerdict {
    let k = factors.len();
    let n = factors[0].ncols();
    let mut samples = 0usize;
    let check = |h: &CVector, samples: &mut usize| -> Option<QuasiPurityVerdict> {
        *samples += 1;
        if h.norm() == 0.0 {
            return None;
        }
        if dependency_ratio(factors, h).is_some_and(|r| r <= tol.eps_rank) {
            Some(QuasiPurityVerdict::not_quasi_pure(
                basis * h,
                Method::NecessaryConditionViolated,
                *samples,
            ))
        } else {
            None
        }
    };
    let found = |v: QuasiPurityVerdict| QuasiPurityVerdict {
        method: Method::RandomizedSearch,
        ..v
    };

    // Structured candidates.
    let mut structured: Vec<CVector> = Vec::new();
    let e = |i: usize| crate::numerics::basis_vector(n, i);
    for p in 0..n {
        structured.push(e(p));
        for q in (p + 1)..n {
            for w in [
                C64::new(1.0, 0.0),
                C64::new(-1.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, -1.0),
            ] {
                structured.push(e(p) + e(q) * w);
            }
        }
    }
    for l in factors {
        let svd = full_svd(l);
        for j in 0..n {
            structured.push(svd.v.column(j).into_owned());
        }
    }
    for h in &structured {
        if let Some(v) = check(h, &mut samples) {
            return found(v);
        }
    }

    // Pairwise pencils: a dependent pair makes the whole family dependent.
    for i in 0..k {
        for j in (i + 1)..k {
            let d = pencil::decide_float(&factors[i], &factors[j], tol);
            for h in &d.witnesses {
                if let Some(v) = check(h, &mut samples) {
                    return found(v);
                }
            }
        }
    }

    let mut rng = sample::rng(opts.seed);
    let mut draws = 0usize;
    while draws < opts.budget {
        draws += 1;
        let a: Vec<C64> = sample::unit_vector(&mut rng, k).iter().copied().collect();
        let la = combine(factors, &a);
        let ker = kernel_basis(&la, tol);
        for c in 0..ker.ncols() {
            if let Some(v) = check(&ker.column(c).into_owned(), &mut samples) {
                return found(v);
            }
        }
        // Random line z·L(a) + L(b) through the combination space.
        if draws.is_multiple_of(4) {
            let b: Vec<C64> = sample::unit_vector(&mut rng, k).iter().copied().collect();
            let lb = combine(factors, &b);
            let d = pencil::decide_float(&la, &lb, tol);
            for h in &d.witnesses {
                if let Some(v) = check(h, &mut samples) {
                    return found(v);
                }
            }
        }
        // Newton's method on the bilinear system Σ a_j L_j h = 0.
        if draws % 2 == 1 {
            if let Some(h) = bilinear_newton(factors, &mut rng) {
                if let Some(v) = check(&h, &mut samples) {
                    return found(v);
                }
            }
        }
    }
    QuasiPurityVerdict {
        status: if opts.strict {
            Status::Inconclusive
        } else {
            Status::QuasiPure
        },
        witness: None,
        method: Method::RandomizedNoCounterexample,
        samples_used: samples,
    }
}

/// Gauss–Newton on `L(a) h = 0` with normalizations `ā0·a = 1`, `h̄0·h = 1`
/// from a random start. Returns `h` when the residual reaches roundoff.
fn bilinear_newton(factors: &[CMatrix], rng: &mut impl Rng) -> Option<CVector> {
    let tol = Tolerance::default();
    let k = factors.len();
    let (rows, n) = factors[0].shape();
    let mut a = sample::unit_vector(rng, k);
    let mut h = roots::smallest_right_singular(&combine(factors, a.as_slice())).1;
    let (a0, h0) = (a.clone(), h.clone());
    let scale = kraus_scale(factors);
    for _ in 0..80 {
        let la = combine(factors, a.as_slice());
        let mut r = CVector::zeros(rows + 2);
        r.rows_mut(0, rows).copy_from(&(&la * &h));
        r[rows] = a0.dotc(&a) - C64::new(1.0, 0.0);
        r[rows + 1] = h0.dotc(&h) - C64::new(1.0, 0.0);
        let mut jac = CMatrix::zeros(rows + 2, k + n);
        for (j, l) in factors.iter().enumerate() {
            jac.view_mut((0, j), (rows, 1)).copy_from(&(l * &h));
            jac[(rows, j)] = a0[j].conj();
        }
        jac.view_mut((0, k), (rows, n)).copy_from(&la);
        for j in 0..n {
            jac[(rows + 1, k + j)] = h0[j].conj();
        }
        let step = crate::numerics::lstsq(&jac, &(-r), &tol);
        for j in 0..k {
            a[j] += step[j];
        }
        for j in 0..n {
            h[j] += step[k + j];
        }
        if step.norm() < 1e-15 {
            break;
        }
        if !step.iter().all(|z| z.is_finite()) {
            return None;
        }
    }
    let a_norm = a.norm();
    let h_norm = h.norm();
    if a_norm == 0.0 || h_norm == 0.0 {
        return None;
    }
    let residual = (combine(factors, a.as_slice()) * &h).norm()
        / (a_norm * h_norm * scale.max(f64::MIN_POSITIVE));
    (residual < 1e-12).then(|| h / C64::from(h_norm))
}

/// Brute-force scan of unit vectors `h = (cos θ, e^{iφ} sin θ)` for a rank
/// drop of `F(h)`, followed by a local pattern search around the best grid
/// points. Only for `d_out ≤ 2` and Choi rank at most 3.
pub fn grid_oracle(phi: &CpMap, density: usize, tol: &Tolerance) -> Result<QuasiPurityVerdict> {
    if !phi.is_cp(tol) {
        return Err(Error::NotCp);
    }
    let kraus = phi.minimal_kraus(tol)?;
    let k = kraus.len();
    if k == 0 {
        return Err(Error::ZeroMap);
    }
    if phi.d_out() > 2 || k > 3 {
        return Err(Error::TooLarge(format!(
            "d_out = {}, Choi rank = {k}",
            phi.d_out()
        )));
    }
    const DEPENDENT: f64 = 1e-6;
    let eval = |theta: f64, phase: f64| -> (CVector, Option<f64>) {
        let h = if phi.d_out() == 1 {
            CVector::from_element(1, C64::new(1.0, 0.0))
        } else {
            CVector::from_vec(vec![
                C64::new(theta.cos(), 0.0),
                C64::from_polar(theta.sin(), phase),
            ])
        };
        let r = if k == 1 {
            None
        } else {
            dependency_ratio(&kraus, &h)
        };
        (h, r)
    };
    let density = density.max(4);
    let mut points: Vec<(f64, f64, f64)> = Vec::new();
    let mut samples = 0;
    let thetas: Vec<f64> = if phi.d_out() == 1 {
        vec![0.0]
    } else {
        (0..=density)
            .map(|i| i as f64 * std::f64::consts::FRAC_PI_2 / density as f64)
            .collect()
    };
    for &theta in &thetas {
        let phases: Vec<f64> = if phi.d_out() == 1 || theta == 0.0 {
            vec![0.0]
        } else {
            (0..density)
                .map(|j| j as f64 * std::f64::consts::TAU / density as f64)
                .collect()
        };
        for phase in phases {
            samples += 1;
            let (h, r) = eval(theta, phase);
            if let Some(r) = r {
                if r <= DEPENDENT {
                    return Ok(QuasiPurityVerdict::not_quasi_pure(
                        h,
                        Method::GridOracle,
                        samples,
                    ));
                }
                points.push((r, theta, phase));
            }
        }
    }
    if phi.d_out() == 2 && k > 1 {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let step0 = std::f64::consts::FRAC_PI_2 / density as f64;
        for &(r0, t0, p0) in points.iter().take(12) {
            let (mut best, mut t, mut p) = (r0, t0, p0);
            let mut step = step0;
            while step > 1e-13 {
                let mut improved = false;
                for (dt, dp) in [
                    (1.0, 0.0),
                    (-1.0, 0.0),
                    (0.0, 1.0),
                    (0.0, -1.0),
                    (1.0, 1.0),
                    (1.0, -1.0),
                    (-1.0, 1.0),
                    (-1.0, -1.0),
                ] {
                    let (nt, np) = (t + dt * step, p + dp * step * 2.0);
                    samples += 1;
                    if let (_, Some(r)) = eval(nt, np) {
                        if r < best {
                            (best, t, p) = (r, nt, np);
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            if best <= DEPENDENT {
                let (h, _) = eval(t, p);
                return Ok(QuasiPurityVerdict::not_quasi_pure(
                    h,
                    Method::GridOracle,
                    samples,
                ));
            }
        }
    }
    Ok(QuasiPurityVerdict::quasi_pure(Method::GridOracle, samples))
}

/// `α(X) = V*(X ⊗ I)(I − Q)V` where `Q` projects onto the cyclic subspace
/// generated by `V h0`. For a witness `h0` this is a nonzero map dominated
/// by `φ` whose kernel at the identity contains `h0`.
pub fn kernel_enlarging_part(
    triple: &StinespringTriple,
    h0: &CVector,
    tol: &Tolerance,
) -> Result<CpMap> {
    let hs = CMatrix::from_columns(std::slice::from_ref(h0));
    let p = triple.multiplicity_projection(&hs, tol);
    let k = triple.k();
    let complement = HermitianMatrix::new(CMatrix::identity(k, k) - p.as_matrix())?;
    triple.compress(&complement, tol)
}

/// Draws random positive contractions `D`, forms `α = V*(X ⊗ D)V ≤ φ` and
/// checks that every nonzero `α` is again quasi-pure. Draws whose verdict is
/// inconclusive are skipped.
pub fn domination_preserves_quasipurity_check(
    phi: &CpMap,
    trials: usize,
    seed: u64,
    tol: &Tolerance,
) -> Result<bool> {
    let opts = QuasiPurityOptions {
        seed,
        ..QuasiPurityOptions::default()
    };
    let verdict = is_quasipure(phi, tol, &opts)?;
    if !verdict.is_proof_grade_quasipure() {
        return Err(Error::HypothesisFailed(
            crate::equivalence::Hypothesis::QuasiPurity,
        ));
    }
    let triple = minimal_stinespring(phi, tol)?;
    let mut rng = sample::rng(seed);
    for _ in 0..trials {
        let d = sample::positive_contraction(&mut rng, triple.k());
        let alpha = triple.compress(&d, tol)?;
        if alpha.is_zero(tol) || alpha.minimal_kraus(tol)?.is_empty() {
            continue;
        }
        match is_quasipure(&alpha, tol, &opts)?.status {
            Status::NotQuasiPure => return Ok(false),
            Status::QuasiPure | Status::Inconclusive => {}
        }
    }
    Ok(true)
}
