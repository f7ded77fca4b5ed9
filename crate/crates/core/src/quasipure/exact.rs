//! Exact arithmetic over the Gaussian rationals `ℚ(i)`: small dense matrices
//! and univariate polynomials.

use num::bigint::BigInt;
use num::complex::Complex;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

use crate::numerics::{CMatrix, CVector, C64};

pub type Gq = Complex<BigRational>;

const MAX_DENOMINATOR: i64 = 4096;
const RATIONAL_TOL: f64 = 1e-11;

fn gq_int(n: i64) -> Gq {
    Gq::new(
        BigRational::from_integer(BigInt::from(n)),
        BigRational::zero(),
    )
}

fn rational_to_f64(q: &BigRational) -> f64 {
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

pub fn to_c64(z: &Gq) -> C64 {
    C64::new(rational_to_f64(&z.re), rational_to_f64(&z.im))
}

/// Best continued-fraction approximation with denominator at most 4096,
/// accepted only if it reproduces `x` to about eleven digits.
pub fn rationalize(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x.abs();
    let sign = if x < 0.0 { -1 } else { 1 };
    if r > 1e9 {
        return None;
    }
    for _ in 0..40 {
        let a = r.floor();
        let ai = a as i64;
        let p2 = ai.checked_mul(p1)?.checked_add(p0)?;
        let q2 = ai.checked_mul(q1)?.checked_add(q0)?;
        if q2 > MAX_DENOMINATOR {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a;
        if (p1 as f64 / q1 as f64 - x.abs()).abs() <= RATIONAL_TOL * x.abs().max(1.0) {
            break;
        }
        if frac < 1e-300 {
            break;
        }
        r = 1.0 / frac;
    }
    if q1 == 0 {
        return None;
    }
    if (p1 as f64 / q1 as f64 - x.abs()).abs() > RATIONAL_TOL * x.abs().max(1.0) {
        return None;
    }
    Some(BigRational::new(BigInt::from(sign * p1), BigInt::from(q1)))
}

pub fn rationalize_complex(z: C64) -> Option<Gq> {
    Some(Gq::new(rationalize(z.re)?, rationalize(z.im)?))
}

/// Dense row-major matrix over `ℚ(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GqMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Gq>,
}

impl GqMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        GqMatrix {
            rows,
            cols,
            data: vec![Gq::zero(); rows * cols],
        }
    }

    pub fn from_float(m: &CMatrix) -> Option<Self> {
        let mut out = GqMatrix::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.data[i * m.ncols() + j] = rationalize_complex(m[(i, j)])?;
            }
        }
        Some(out)
    }

    pub fn to_float(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| to_c64(self.get(i, j)))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Gq {
        &self.data[i * self.cols + j]
    }

    fn get_mut(&mut self, i: usize, j: usize) -> &mut Gq {
        &mut self.data[i * self.cols + j]
    }

    pub fn stack(top: &GqMatrix, bottom: &GqMatrix) -> GqMatrix {
        assert_eq!(top.cols, bottom.cols);
        let mut data = top.data.clone();
        data.extend(bottom.data.iter().cloned());
        GqMatrix {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            data,
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> GqMatrix {
        let mut out = GqMatrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (c, &j) in cols.iter().enumerate() {
                *out.get_mut(i, c) = self.get(i, j).clone();
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> GqMatrix {
        let mut out = GqMatrix::zeros(rows.len(), self.cols);
        for (r, &i) in rows.iter().enumerate() {
            for j in 0..self.cols {
                *out.get_mut(r, j) = self.get(i, j).clone();
            }
        }
        out
    }

    /// `z·self + other`.
    pub fn pencil_at(&self, z: &Gq, other: &GqMatrix) -> GqMatrix {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * z + b)
            .collect();
        GqMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| !self.get(r, col).is_zero()) else {
                continue;
            };
            for j in 0..self.cols {
                self.data.swap(row * self.cols + j, p * self.cols + j);
            }
            let inv = Gq::one() / self.get(row, col).clone();
            for j in 0..self.cols {
                let v = self.get(row, j) * &inv;
                *self.get_mut(row, j) = v;
            }
            for r in 0..self.rows {
                if r == row || self.get(r, col).is_zero() {
                    continue;
                }
                let f = self.get(r, col).clone();
                for j in 0..self.cols {
                    let v = self.get(r, j) - &f * self.get(row, j);
                    *self.get_mut(r, j) = v;
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    /// A nonzero kernel vector, if the kernel is nontrivial.
    pub fn kernel_vector(&self) -> Option<Vec<Gq>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let free = (0..self.cols).find(|c| !pivots.contains(c))?;
        let mut x = vec![Gq::zero(); self.cols];
        x[free] = Gq::one();
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = -m.get(r, free).clone();
        }
        Some(x)
    }

    pub fn det(&self) -> Gq {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Gq::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m.get(r, col).is_zero()) else {
                return Gq::zero();
            };
            if p != col {
                for j in 0..n {
                    m.data.swap(col * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = m.get(col, col).clone();
            det *= &pivot;
            for r in (col + 1)..n {
                if m.get(r, col).is_zero() {
                    continue;
                }
                let f = m.get(r, col) / &pivot;
                for j in col..n {
                    let v = m.get(r, j) - &f * m.get(col, j);
                    *m.get_mut(r, j) = v;
                }
            }
        }
        det
    }
}

pub fn vector_to_float(v: &[Gq]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(to_c64))
}

/// Polynomial over `ℚ(i)` with coefficients in ascending degree, trimmed
/// so that the last coefficient is nonzero (the zero polynomial is empty).
#[derive(Debug, Clone, PartialEq)]
pub struct GqPoly(Vec<Gq>);

impl GqPoly {
    pub fn new(mut coeffs: Vec<Gq>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        GqPoly(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    #[cfg(test)]
    pub fn coeffs(&self) -> &[Gq] {
        &self.0
    }

    pub fn to_float(&self) -> Vec<C64> {
        self.0.iter().map(to_c64).collect()
    }

    fn monic(&self) -> GqPoly {
        match self.0.last() {
            None => self.clone(),
            Some(lead) => {
                let inv = Gq::one() / lead.clone();
                GqPoly(self.0.iter().map(|c| c * &inv).collect())
            }
        }
    }

    pub fn derivative(&self) -> GqPoly {
        GqPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * gq_int(i as i64))
                .collect(),
        )
    }

    pub fn rem(&self, divisor: &GqPoly) -> GqPoly {
        self.div_rem(divisor).1
    }

    pub fn div_rem(&self, divisor: &GqPoly) -> (GqPoly, GqPoly) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let dd = divisor.0.len() - 1;
        let lead_inv = Gq::one() / divisor.0[dd].clone();
        let mut rem = self.0.clone();
        if rem.len() <= dd {
            return (GqPoly(vec![]), GqPoly::new(rem));
        }
        let mut quot = vec![Gq::zero(); rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let f = &rem[i] * &lead_inv;
            if f.is_zero() {
                continue;
            }
            for (j, dc) in divisor.0.iter().enumerate() {
                let idx = i - dd + j;
                rem[idx] = &rem[idx] - &f * dc;
            }
            quot[i - dd] = f;
        }
        rem.truncate(dd);
        (GqPoly::new(quot), GqPoly::new(rem))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &GqPoly) -> GqPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `p / gcd(p, p')`: same roots, all simple.
    pub fn square_free(&self) -> GqPoly {
        if self.degree().unwrap_or(0) == 0 {
            return self.monic();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0.monic()
    }

    /// Interpolating polynomial through `(x_i, y_i)` by Newton divided
    /// differences.
    pub fn interpolate(xs: &[Gq], ys: &[Gq]) -> GqPoly {
        let n = xs.len();
        let mut dd = ys.to_vec();
        for level in 1..n {
            for i in (level..n).rev() {
                dd[i] = (&dd[i] - &dd[i - 1]) / (&xs[i] - &xs[i - level]);
            }
        }
        // Horner-style expansion of the Newton form.
        let mut poly = vec![Gq::zero(); n];
        for i in (0..n).rev() {
            // poly = poly * (z - x_i) + dd[i]
            let mut next = vec![Gq::zero(); n];
            for j in 0..n {
                if poly[j].is_zero() {
                    continue;
                }
                if j + 1 < n {
                    next[j + 1] = &next[j + 1] + &poly[j];
                }
                next[j] = &next[j] - &poly[j] * &xs[i];
            }
            next[0] = &next[0] + &dd[i];
            poly = next;
        }
        GqPoly::new(poly)
    }
}

/// All `m`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(m);
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < m - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    rec(0, n, m, &mut cur, &mut out);
    out
}

/// Monic square-free gcd of all maximal minors of `z·l1 + l2`, where both
/// matrices have `n ≤ rows` columns. Each minor has degree at most `n`, so
/// it is recovered exactly from its values at `z = 0, …, n`.
pub fn minor_gcd(l1: &GqMatrix, l2: &GqMatrix) -> GqPoly {
    let n = l1.cols();
    let points: Vec<Gq> = (0..=n as i64).map(gq_int).collect();
    let evaluated: Vec<GqMatrix> = points.iter().map(|z| l1.pencil_at(z, l2)).collect();
    let mut g = GqPoly(vec![]);
    for rows in subsets(l1.rows(), n) {
        let values: Vec<Gq> = evaluated
            .iter()
            .map(|m| m.select_rows(&rows).det())
            .collect();
        let minor = GqPoly::interpolate(&points, &values);
        g = if g.is_zero() {
            minor.monic()
        } else {
            g.gcd(&minor)
        };
        if g.degree() == Some(0) {
            break;
        }
    }
    if g.is_zero() {
        g
    } else {
        g.square_free()
    }
}
