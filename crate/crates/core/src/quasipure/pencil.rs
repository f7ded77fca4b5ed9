//! Injectivity of two-term pencils `a1·L1 + a2·L2`.
//!
//! With `a = (z, 1)` a rank drop happens exactly at the common roots of all
//! maximal minors of `z·L1 + L2`; the remaining direction `a = (1, 0)` is a
//! plain kernel test on `L1`.

use super::exact::{self, GqMatrix};
use super::roots::{
    cluster, polynomial_roots, refine_pencil_point, smallest_right_singular, sort_roots,
};
use crate::numerics::{
    full_svd, kernel_basis, normalize_phase, numerical_rank, CMatrix, CVector, Tolerance, C64,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PencilDecision {
    /// Every nontrivial combination is injective.
    pub injective: bool,
    /// Kernel vectors of singular combinations: `L1` first when it is
    /// singular, then one per root `z` in ascending order.
    pub witnesses: Vec<CVector>,
    /// Decided in exact Gaussian-rational arithmetic.
    pub exact: bool,
}

/// Generic evaluation points for detecting identically singular pencils.
const PROBE_A: C64 = C64::new(0.577_215_664_901_532_9, std::f64::consts::FRAC_1_PI);
const PROBE_B: C64 = C64::new(-0.723_606_797_749_979, 1.101_020_514_433_644);

/// Relative residual under which a refined root counts as a common root.
const ROOT_RESIDUAL: f64 = 1e-10;

/// `σ_2 / σ_1` of `[L1 h | L2 h]`, zero when both images vanish.
fn pair_dependency(l1: &CMatrix, l2: &CMatrix, h: &CVector) -> f64 {
    let f = CMatrix::from_columns(&[l1 * h, l2 * h]);
    let s = full_svd(&f).values;
    match s.as_slice() {
        [top, rest @ ..] if *top > 0.0 => rest.first().copied().unwrap_or(0.0) / top,
        _ => 0.0,
    }
}

pub fn exact_pencil_k2(l1: &CMatrix, l2: &CMatrix, tol: &Tolerance) -> Result<PencilDecision> {
    if l1.shape() != l2.shape() {
        return Err(Error::dims(
            format!("{}x{}", l1.nrows(), l1.ncols()),
            format!("{}x{}", l2.nrows(), l2.ncols()),
        ));
    }
    let n = l1.ncols();
    let mut stacked = CMatrix::zeros(2 * l1.nrows(), n);
    stacked.rows_mut(0, l1.nrows()).copy_from(l1);
    stacked.rows_mut(l1.nrows(), l1.nrows()).copy_from(l2);
    if numerical_rank(&stacked, tol) < n {
        return Err(Error::InputNotReduced);
    }
    match (GqMatrix::from_float(l1), GqMatrix::from_float(l2)) {
        (Some(a), Some(b)) => Ok(decide_exact(&a, &b, tol)),
        _ => Ok(decide_float(l1, l2, tol)),
    }
}

fn finish(mut witnesses: Vec<CVector>, exact: bool) -> PencilDecision {
    witnesses = witnesses.iter().map(normalize_phase).collect();
    PencilDecision {
        injective: witnesses.is_empty(),
        witnesses,
        exact,
    }
}

/// Exact decision for Gaussian-rational input; witnesses for irrational
/// roots are floating point, refined by Newton's method.
pub(crate) fn decide_exact(l1: &GqMatrix, l2: &GqMatrix, tol: &Tolerance) -> PencilDecision {
    let f1 = l1.to_float();
    let f2 = l2.to_float();
    let mut witnesses = Vec::new();
    if let Some(k) = l1.kernel_vector() {
        witnesses.push(exact::vector_to_float(&k));
    }
    let g = exact::minor_gcd(l1, l2);
    if g.is_zero() {
        let one = GqMatrix::pencil_at(l1, &num::One::one(), l2);
        if let Some(k) = one.kernel_vector() {
            witnesses.push(exact::vector_to_float(&k));
        }
        return finish(witnesses, true);
    }
    let mut roots = cluster(&polynomial_roots(&g.to_float()), 1e-8);
    sort_roots(&mut roots);
    for z in roots {
        let p = refine_pencil_point(&f1, &f2, z);
        if pair_dependency(&f1, &f2, &p.h) <= tol.eps_rank {
            witnesses.push(p.h);
        } else {
            // The root exists exactly; fall back to the raw kernel direction.
            let (_, h) = smallest_right_singular(&(&f1 * z + &f2));
            witnesses.push(h);
        }
    }
    finish(witnesses, true)
}

/// Floating-point decision: roots of the best-conditioned maximal minor,
/// each one refined and accepted only if the whole pencil drops rank there.
pub(crate) fn decide_float(l1: &CMatrix, l2: &CMatrix, tol: &Tolerance) -> PencilDecision {
    let n = l1.ncols();
    let rows = l1.nrows();
    let mut witnesses = Vec::new();
    if numerical_rank(l1, tol) < n {
        witnesses.push(kernel_basis(l1, tol).column(0).into_owned());
    }
    let ratio = |z: C64| {
        let s = full_svd(&(l1 * z + l2)).values;
        if rows < n {
            0.0
        } else {
            s[n - 1] / s[0].max(f64::MIN_POSITIVE)
        }
    };
    if ratio(PROBE_A) <= ROOT_RESIDUAL && ratio(PROBE_B) <= ROOT_RESIDUAL {
        let (_, h) = smallest_right_singular(&(l1 * PROBE_A + l2));
        witnesses.push(h);
        return finish(witnesses, false);
    }
    let at_probe = l1 * PROBE_A + l2;
    let best_rows = exact::subsets(rows, n)
        .into_iter()
        .max_by(|a, b| {
            let da = at_probe.select_rows(a.iter()).determinant().norm();
            let db = at_probe.select_rows(b.iter()).determinant().norm();
            da.total_cmp(&db)
        })
        .expect("rows ≥ columns for a reduced pencil");
    let s1 = l1.select_rows(best_rows.iter());
    let s2 = l2.select_rows(best_rows.iter());
    let samples: Vec<C64> = (0..=n)
        .map(|j| {
            let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / (n + 1) as f64);
            (&s1 * w + &s2).determinant()
        })
        .collect();
    let m = (n + 1) as f64;
    let mut coeffs: Vec<C64> = (0..=n)
        .map(|deg| {
            samples
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    p * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (j * deg) as f64 / m)
                })
                .sum::<C64>()
                / C64::from(m)
        })
        .collect();
    let top = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    while coeffs.last().is_some_and(|c| c.norm() <= 1e-12 * top) {
        coeffs.pop();
    }
    let mut found: Vec<(C64, CVector)> = Vec::new();
    for z in cluster(&polynomial_roots(&coeffs), 1e-6) {
        let p = refine_pencil_point(l1, l2, z);
        if p.relative_residual > ROOT_RESIDUAL || pair_dependency(l1, l2, &p.h) > tol.eps_rank {
            continue;
        }
        if found
            .iter()
            .all(|(w, _)| (w - p.z).norm() > 1e-8 * (1.0 + w.norm()))
        {
            found.push((p.z, p.h));
        }
    }
    found.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    witnesses.extend(found.into_iter().map(|(_, h)| h));
    finish(witnesses, false)
}
