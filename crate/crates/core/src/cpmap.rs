//! Linear maps `M_{d_in}(ℂ) → M_{d_out}(ℂ)`, Choi's theorem and Kraus forms.
//!
//! Convention: `φ(X) = Σ_j L_j* X L_j` with every `L_j` of shape
//! `d_in × d_out`. The Choi matrix is the block matrix `[φ(E_ij)]`, block
//! `(i, j)` of size `d_out × d_out`, so its entry at row `i·d_out + p` and
//! column `j·d_out + q` is `φ(E_ij)[p, q] = Σ_l conj(L_l[i,p]) L_l[j,q]`.
//! Hence `Choi = Σ_l w_l w_l*` with `w_l[i·d_out + p] = conj(L_l[i, p])`,
//! and the two conversion helpers below are the only places that encode
//! this reshape.

use crate::numerics::{
    self, eigh, full_svd, kron, matrix_unit, max_abs, max_abs_diff, normalize_phase, CMatrix,
    CVector, HermitianMatrix, Tolerance, C64,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CpMap {
    d_in: usize,
    d_out: usize,
    kraus: Option<Vec<CMatrix>>,
    choi: CMatrix,
}

/// Canonical data of a quasi-pure entanglement-breaking map
/// `X ↦ trace(ρX)|v⟩⟨v|`.
#[derive(Debug, Clone, PartialEq)]
pub struct EbForm {
    pub rho: HermitianMatrix,
    pub v: CVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapClass {
    pub is_cp: bool,
    pub is_unital: bool,
    pub is_pure: bool,
    pub choi_rank: usize,
    pub eb_form: Option<EbForm>,
}

impl MapClass {
    pub fn is_eb_quasipure_form(&self) -> bool {
        self.eb_form.is_some()
    }
}

/// Choi index of the pair `(i, p)`, `i < d_in`, `p < d_out`.
#[inline]
pub fn choi_index(i: usize, p: usize, d_out: usize) -> usize {
    i * d_out + p
}

/// Assembles `[φ(E_ij)]` for `φ(X) = Σ L* X L`.
pub fn kraus_to_choi(kraus: &[CMatrix], d_in: usize, d_out: usize) -> CMatrix {
    let n = d_in * d_out;
    let mut choi = CMatrix::zeros(n, n);
    for l in kraus {
        let w = CVector::from_fn(n, |r, _| l[(r / d_out, r % d_out)].conj());
        choi += &w * w.adjoint();
    }
    choi
}

/// Inverse reshape of [`kraus_to_choi`] for a single vector `w`.
fn kraus_from_choi_vector(w: &CVector, d_in: usize, d_out: usize) -> CMatrix {
    CMatrix::from_fn(d_in, d_out, |i, p| w[choi_index(i, p, d_out)].conj())
}

/// Minimal Kraus factors from a PSD Choi matrix: the eigenvectors with
/// eigenvalue above `eps_rank · λ_max`, scaled by `√λ`, in descending order
/// of eigenvalue. They are mutually orthogonal in the trace inner product.
pub fn choi_to_kraus(
    choi: &HermitianMatrix,
    d_in: usize,
    d_out: usize,
    tol: &Tolerance,
) -> Result<Vec<CMatrix>> {
    if choi.dim() != d_in * d_out {
        return Err(Error::dims(
            format!("choi of size {}", d_in * d_out),
            choi.dim(),
        ));
    }
    let e = eigh(choi);
    let min = e.values.first().copied().unwrap_or(0.0);
    if min < -tol.eps_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let top = e.max_abs_value();
    let mut out = Vec::new();
    for idx in (0..e.values.len()).rev() {
        let lambda = e.values[idx];
        if top <= 0.0 || lambda <= tol.eps_rank * top {
            break;
        }
        let w = e.vectors.column(idx).into_owned() * C64::from(lambda.sqrt());
        out.push(kraus_from_choi_vector(&w, d_in, d_out));
    }
    Ok(out)
}

impl CpMap {
    pub fn from_kraus(d_in: usize, d_out: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        for l in &kraus {
            if l.shape() != (d_in, d_out) {
                return Err(Error::dims(
                    format!("Kraus factor {d_in}x{d_out}"),
                    format!("{}x{}", l.nrows(), l.ncols()),
                ));
            }
        }
        let choi = kraus_to_choi(&kraus, d_in, d_out);
        Ok(CpMap {
            d_in,
            d_out,
            kraus: Some(kraus),
            choi,
        })
    }

    /// Any square matrix of size `d_in·d_out` defines a linear map; it need
    /// not be Hermitian or positive.
    pub fn from_choi(d_in: usize, d_out: usize, choi: CMatrix) -> Result<Self> {
        let n = d_in * d_out;
        if choi.shape() != (n, n) {
            return Err(Error::dims(
                format!("choi {n}x{n}"),
                format!("{}x{}", choi.nrows(), choi.ncols()),
            ));
        }
        Ok(CpMap {
            d_in,
            d_out,
            kraus: None,
            choi,
        })
    }

    /// Both representations at once; they must agree within `eps_eq`.
    pub fn from_parts(
        d_in: usize,
        d_out: usize,
        kraus: Option<Vec<CMatrix>>,
        choi: Option<CMatrix>,
        tol: &Tolerance,
    ) -> Result<Self> {
        match (kraus, choi) {
            (None, None) => Err(Error::dims("kraus or choi", "neither")),
            (Some(k), None) => Self::from_kraus(d_in, d_out, k),
            (None, Some(c)) => Self::from_choi(d_in, d_out, c),
            (Some(k), Some(c)) => {
                let map = Self::from_kraus(d_in, d_out, k)?;
                let given = Self::from_choi(d_in, d_out, c)?;
                let gap = max_abs_diff(&map.choi, &given.choi);
                if gap > tol.eps_eq * max_abs(&given.choi).max(1.0) {
                    return Err(Error::dims(
                        "Kraus factors matching the Choi matrix",
                        format!("discrepancy {gap:.3e}"),
                    ));
                }
                Ok(map)
            }
        }
    }

    /// The map determined by its values on matrix units, `E_ij ↦ f(i, j)`.
    pub fn from_action(
        d_in: usize,
        d_out: usize,
        mut f: impl FnMut(usize, usize) -> CMatrix,
    ) -> Result<Self> {
        let n = d_in * d_out;
        let mut choi = CMatrix::zeros(n, n);
        for i in 0..d_in {
            for j in 0..d_in {
                let b = f(i, j);
                if b.shape() != (d_out, d_out) {
                    return Err(Error::dims(
                        format!("image {d_out}x{d_out}"),
                        format!("{}x{}", b.nrows(), b.ncols()),
                    ));
                }
                choi.view_mut((i * d_out, j * d_out), (d_out, d_out))
                    .copy_from(&b);
            }
        }
        Self::from_choi(d_in, d_out, choi)
    }

    pub fn zero(d_in: usize, d_out: usize) -> Self {
        CpMap::from_kraus(d_in, d_out, vec![]).expect("empty kraus list")
    }

    pub fn identity(d: usize) -> Self {
        CpMap::from_kraus(d, d, vec![CMatrix::identity(d, d)]).expect("square")
    }

    /// `X ↦ Xᵀ`, positive but not completely positive for `d ≥ 2`.
    pub fn transpose(d: usize) -> Self {
        CpMap::from_action(d, d, |i, j| matrix_unit(d, j, i)).expect("square")
    }

    /// `X ↦ L* X L`.
    pub fn conjugation(l: CMatrix) -> Self {
        let (d_in, d_out) = l.shape();
        CpMap::from_kraus(d_in, d_out, vec![l]).expect("single factor")
    }

    /// `X ↦ trace(ρX)|v⟩⟨v|` for PSD `ρ` and unit `v`, with Kraus factors
    /// `√p_j |u_j⟩⟨v|` from the spectral decomposition of `ρ`.
    pub fn eb_quasipure(rho: &HermitianMatrix, v: &CVector) -> Result<Self> {
        let tol = Tolerance::default();
        let e = eigh(rho);
        if e.values.first().copied().unwrap_or(0.0) < -tol.eps_psd {
            return Err(Error::NotPsd {
                min_eigenvalue: e.values[0],
            });
        }
        let top = e.max_abs_value();
        let vn = v / C64::from(v.norm());
        let kraus = (0..e.values.len())
            .rev()
            .filter(|&j| e.values[j] > tol.eps_rank * top)
            .map(|j| {
                let u = e.vectors.column(j).into_owned() * C64::from(e.values[j].sqrt());
                numerics::ketbra(&u, &vn)
            })
            .collect();
        CpMap::from_kraus(rho.dim(), v.len(), kraus)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> Option<&[CMatrix]> {
        self.kraus.as_deref()
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub fn choi_hermitian(&self) -> Result<HermitianMatrix> {
        HermitianMatrix::new(self.choi.clone())
    }

    /// `φ(E_ij)`.
    pub fn unit_image(&self, i: usize, j: usize) -> CMatrix {
        let d = self.d_out;
        self.choi.view((i * d, j * d), (d, d)).into_owned()
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != (self.d_in, self.d_in) {
            return Err(Error::dims(
                format!("{}x{}", self.d_in, self.d_in),
                format!("{}x{}", x.nrows(), x.ncols()),
            ));
        }
        if let Some(kraus) = &self.kraus {
            let mut y = CMatrix::zeros(self.d_out, self.d_out);
            for l in kraus {
                y += l.adjoint() * x * l;
            }
            return Ok(y);
        }
        let mut y = CMatrix::zeros(self.d_out, self.d_out);
        for i in 0..self.d_in {
            for j in 0..self.d_in {
                if x[(i, j)] != C64::new(0.0, 0.0) {
                    y += self.unit_image(i, j) * x[(i, j)];
                }
            }
        }
        Ok(y)
    }

    /// `φ(I)`.
    pub fn apply_identity(&self) -> CMatrix {
        let mut y = CMatrix::zeros(self.d_out, self.d_out);
        for i in 0..self.d_in {
            y += self.unit_image(i, i);
        }
        y
    }

    fn check_same_shape(&self, other: &CpMap) -> Result<()> {
        if (self.d_in, self.d_out) != (other.d_in, other.d_out) {
            return Err(Error::dims(
                format!("map {}→{}", self.d_in, self.d_out),
                format!("map {}→{}", other.d_in, other.d_out),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &CpMap) -> Result<CpMap> {
        self.check_same_shape(other)?;
        let kraus = match (&self.kraus, &other.kraus) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        Ok(CpMap {
            d_in: self.d_in,
            d_out: self.d_out,
            kraus,
            choi: &self.choi + &other.choi,
        })
    }

    /// `φ − ψ`; generally not CP.
    pub fn sub(&self, other: &CpMap) -> Result<CpMap> {
        self.check_same_shape(other)?;
        CpMap::from_choi(self.d_in, self.d_out, &self.choi - &other.choi)
    }

    pub fn scale(&self, t: f64) -> CpMap {
        let kraus = if t >= 0.0 {
            self.kraus.as_ref().map(|ks| {
                ks.iter()
                    .map(|l| l * C64::from(t.sqrt()))
                    .collect::<Vec<_>>()
            })
        } else {
            None
        };
        CpMap {
            d_in: self.d_in,
            d_out: self.d_out,
            kraus,
            choi: &self.choi * C64::from(t),
        }
    }

    /// `X ↦ Z* φ(X) Z` for `Z` of shape `d_out × d_out`.
    pub fn conjugate_output(&self, z: &CMatrix) -> Result<CpMap> {
        if z.shape() != (self.d_out, self.d_out) {
            return Err(Error::dims(
                format!("{}x{}", self.d_out, self.d_out),
                format!("{}x{}", z.nrows(), z.ncols()),
            ));
        }
        let lift = kron(&CMatrix::identity(self.d_in, self.d_in), z);
        CpMap::from_choi(self.d_in, self.d_out, lift.adjoint() * &self.choi * lift)
    }

    /// `X ↦ φ(X) R`, block-wise on the Choi matrix.
    pub fn right_multiply(&self, r: &CMatrix) -> Result<CpMap> {
        if r.shape() != (self.d_out, self.d_out) {
            return Err(Error::dims(
                format!("{}x{}", self.d_out, self.d_out),
                format!("{}x{}", r.nrows(), r.ncols()),
            ));
        }
        let lift = kron(&CMatrix::identity(self.d_in, self.d_in), r);
        CpMap::from_choi(self.d_in, self.d_out, &self.choi * lift)
    }

    /// `max_{i,j} ‖φ(E_ij) − ψ(E_ij)‖_max`.
    pub fn distance(&self, other: &CpMap) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(max_abs_diff(&self.choi, &other.choi))
    }

    /// Largest entry of the Choi matrix; a scale for relative tolerances.
    pub fn scale_hint(&self) -> f64 {
        max_abs(&self.choi).max(1.0)
    }

    pub fn is_zero(&self, tol: &Tolerance) -> bool {
        max_abs(&self.choi) <= tol.eps_eq
    }

    pub fn is_cp(&self, tol: &Tolerance) -> bool {
        match self.choi_hermitian() {
            Ok(h) => numerics::psd_check(&h, tol),
            Err(_) => false,
        }
    }

    /// Canonical minimal Kraus factors (scaled Choi eigenvectors).
    pub fn minimal_kraus(&self, tol: &Tolerance) -> Result<Vec<CMatrix>> {
        let h = self.choi_hermitian().map_err(|_| Error::NotCp)?;
        choi_to_kraus(&h, self.d_in, self.d_out, tol).map_err(|e| match e {
            Error::NotPsd { .. } => Error::NotCp,
            other => other,
        })
    }

    pub fn choi_rank(&self, tol: &Tolerance) -> usize {
        numerics::numerical_rank(&self.choi, tol)
    }

    /// Eigenvalues of the Choi matrix (ascending), or an error when it is
    /// not Hermitian.
    pub fn choi_spectrum(&self) -> Result<Vec<f64>> {
        Ok(eigh(&self.choi_hermitian()?).values)
    }

    pub fn classify(&self, tol: &Tolerance) -> Result<MapClass> {
        if !self.is_cp(tol) {
            return Err(Error::NotCp);
        }
        let kraus = self.minimal_kraus(tol)?;
        let choi_rank = kraus.len();
        let id = CMatrix::identity(self.d_out, self.d_out);
        let is_unital = numerics::approx_eq(&self.apply_identity(), &id, tol);
        Ok(MapClass {
            is_cp: true,
            is_unital,
            is_pure: choi_rank <= 1,
            choi_rank,
            eb_form: self.detect_eb_form(&kraus, tol),
        })
    }

    /// All minimal Kraus factors have the form `a_j v*` for a common `v`,
    /// which holds exactly when their vertical stack has rank one.
    fn detect_eb_form(&self, kraus: &[CMatrix], tol: &Tolerance) -> Option<EbForm> {
        if kraus.is_empty() {
            return None;
        }
        let stacked = stack_rows(kraus);
        let svd = full_svd(&stacked);
        let top = svd.values[0];
        if svd.values.iter().skip(1).any(|&s| s > tol.eps_rank * top) {
            return None;
        }
        let v = normalize_phase(&svd.v.column(0).into_owned());
        let mut rho = CMatrix::zeros(self.d_in, self.d_in);
        for l in kraus {
            let a = l * &v;
            rho += &a * a.adjoint();
        }
        let rho = HermitianMatrix::from_trusted(rho);
        let vv = numerics::ketbra(&v, &v);
        let rebuilt = CpMap::from_action(self.d_in, self.d_out, |i, j| &vv * rho[(j, i)]).ok()?;
        if max_abs_diff(&rebuilt.choi, &self.choi) > tol.eps_eq * self.scale_hint() {
            return None;
        }
        Some(EbForm { rho, v })
    }
}

/// Vertical stack `[L_1; L_2; …]` of equally shaped matrices.
pub fn stack_rows(mats: &[CMatrix]) -> CMatrix {
    let rows = mats[0].nrows();
    let cols = mats[0].ncols();
    let mut s = CMatrix::zeros(rows * mats.len(), cols);
    for (b, m) in mats.iter().enumerate() {
        s.view_mut((b * rows, 0), (rows, cols)).copy_from(m);
    }
    s
}
