//! Polynomial roots and Newton refinement of pencil eigenpairs.

use crate::numerics::{full_svd, lstsq, CMatrix, CVector, Tolerance, C64};

/// All roots of `Σ c_i z^i` (ascending coefficients, nonzero leading term)
/// by Aberth–Ehrlich iteration.
pub fn polynomial_roots(coeffs: &[C64]) -> Vec<C64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|z| z.norm() == 0.0) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return vec![];
    }
    let lead = c[deg];
    let c: Vec<C64> = c.iter().map(|z| z / lead).collect();
    if deg == 1 {
        return vec![-c[0]];
    }
    // Cauchy bound on the root modulus.
    let radius = 1.0 + c[..deg].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let start = radius.min(1e6) * 0.5;
    let mut z: Vec<C64> = (0..deg)
        .map(|j| {
            C64::from_polar(
                start,
                0.4 + 2.0 * std::f64::consts::PI * j as f64 / deg as f64,
            )
        })
        .collect();
    let eval = |x: C64| -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for coef in c.iter().rev() {
            dp = dp * x + p;
            p = p * x + coef;
        }
        (p, dp)
    };
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for i in 0..deg {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d.norm() == 0.0 {
                        C64::new(0.0, 0.0)
                    } else {
                        C64::new(1.0, 0.0) / d
                    }
                })
                .sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Merges roots closer than `gap` (relative to their size) by averaging.
pub fn cluster(roots: &[C64], gap: f64) -> Vec<C64> {
    let mut groups: Vec<Vec<C64>> = Vec::new();
    for &r in roots {
        match groups
            .iter_mut()
            .find(|g| (g[0] - r).norm() <= gap * (1.0 + r.norm()))
        {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    groups
        .into_iter()
        .map(|g| g.iter().sum::<C64>() / C64::from(g.len() as f64))
        .collect()
}

/// Ascending by real part, then imaginary part.
pub fn sort_roots(roots: &mut [C64]) {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Right singular vector for the smallest singular value.
pub fn smallest_right_singular(m: &CMatrix) -> (f64, CVector) {
    let svd = full_svd(m);
    let n = m.ncols();
    let s = if m.nrows() >= n {
        svd.values[n - 1]
    } else {
        0.0
    };
    (s, svd.v.column(n - 1).into_owned())
}

/// Refined eigenpair `(z, h)` with `(z·l1 + l2) h = 0` and `‖h‖ = 1`.
#[derive(Debug, Clone)]
pub struct PencilPoint {
    pub z: C64,
    pub h: CVector,
    /// `σ_min(z·l1 + l2) / σ_max(z·l1 + l2)` after refinement.
    pub relative_residual: f64,
}

/// Gauss–Newton on `(z·l1 + l2) h = 0`, `e* h = 1`, started from `z0` and
/// the smallest right singular vector of `z0·l1 + l2`.
pub fn refine_pencil_point(l1: &CMatrix, l2: &CMatrix, z0: C64) -> PencilPoint {
    let tol = Tolerance::default();
    let (rows, n) = l1.shape();
    let pencil = |z: C64| l1 * z + l2;
    let (_, mut h) = smallest_right_singular(&pencil(z0));
    let anchor = h.clone();
    let mut z = z0;
    for _ in 0..60 {
        let m = pencil(z);
        let mut r = CVector::zeros(rows + 1);
        r.rows_mut(0, rows).copy_from(&(&m * &h));
        r[rows] = anchor.dotc(&h) - C64::new(1.0, 0.0);
        let mut jac = CMatrix::zeros(rows + 1, n + 1);
        jac.view_mut((0, 0), (rows, n)).copy_from(&m);
        jac.view_mut((0, n), (rows, 1)).copy_from(&(l1 * &h));
        for j in 0..n {
            jac[(rows, j)] = anchor[j].conj();
        }
        let step = lstsq(&jac, &(-r), &tol);
        for j in 0..n {
            h[j] += step[j];
        }
        z += step[n];
        if step.norm() <= 1e-15 * (1.0 + z.norm() + h.norm()) {
            break;
        }
    }
    let h = &h / C64::from(h.norm());
    let m = pencil(z);
    let svd = full_svd(&m);
    let top = svd.values.first().copied().unwrap_or(0.0);
    let residual = (&m * &h).norm();
    PencilPoint {
        z,
        h,
        relative_residual: if top > 0.0 { residual / top } else { 0.0 },
    }
}
