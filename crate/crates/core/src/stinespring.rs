//! Minimal Stinespring dilations `φ(X) = V*(X ⊗ I_k)V` and Radon–Nikodym
//! derivatives of dominated maps.
//!
//! `V` has shape `(d_in·k) × d_out` and sends `h` to `Σ_j L_j h ⊗ e_j`, so
//! row `a·k + j` of `V` is row `a` of `L_j`. The commutant of `X ↦ X ⊗ I_k`
//! is `I ⊗ M_k`, and every reducing subspace has the form `ℂ^{d_in} ⊗ S` for
//! a subspace `S ⊆ ℂ^k`. Both facts reduce the computations here to the
//! `k`-dimensional multiplicity space.

use crate::cpmap::CpMap;
use crate::numerics::{
    self, eigh, kron, max_abs, max_abs_diff, numerical_rank, pseudo_inverse, range_projection,
    CMatrix, CVector, HermitianMatrix, Tolerance, C64,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StinespringTriple {
    d_in: usize,
    d_out: usize,
    kraus: Vec<CMatrix>,
    v: CMatrix,
}

/// The `k × k` factor `D` of the commutant element `I ⊗ D`.
#[derive(Debug, Clone, PartialEq)]
pub struct RnDerivative {
    d: HermitianMatrix,
}

impl RnDerivative {
    pub fn matrix(&self) -> &HermitianMatrix {
        &self.d
    }

    /// `0 ≤ D ≤ I` up to `eps_psd`.
    pub fn is_positive_contraction(&self, tol: &Tolerance) -> bool {
        let e = eigh(&self.d);
        match (e.values.first(), e.values.last()) {
            (Some(&lo), Some(&hi)) => lo >= -tol.eps_psd && hi <= 1.0 + tol.eps_psd,
            _ => true,
        }
    }

    pub fn commutant_element(&self, d_in: usize) -> CMatrix {
        kron(&CMatrix::identity(d_in, d_in), &self.d)
    }
}

/// Matrix with columns `w_j`, `w_j[i·d_out + p] = conj(L_j[i, p])`, so that
/// `Choi(X ↦ Σ D_mj L_m* X L_j) = W D W*`.
fn choi_columns(kraus: &[CMatrix], d_in: usize, d_out: usize) -> CMatrix {
    let n = d_in * d_out;
    CMatrix::from_fn(n, kraus.len(), |r, j| {
        kraus[j][(r / d_out, r % d_out)].conj()
    })
}

impl StinespringTriple {
    /// Dilation from a list of linearly independent Kraus factors.
    pub fn from_kraus(
        d_in: usize,
        d_out: usize,
        kraus: Vec<CMatrix>,
        tol: &Tolerance,
    ) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::ZeroMap);
        }
        for l in &kraus {
            if l.shape() != (d_in, d_out) {
                return Err(Error::dims(
                    format!("Kraus factor {d_in}x{d_out}"),
                    format!("{}x{}", l.nrows(), l.ncols()),
                ));
            }
        }
        let w = choi_columns(&kraus, d_in, d_out);
        if numerical_rank(&w, tol) < kraus.len() {
            return Err(Error::Internal(
                "Kraus factors are linearly dependent".into(),
            ));
        }
        let k = kraus.len();
        let v = CMatrix::from_fn(d_in * k, d_out, |row, p| kraus[row % k][(row / k, p)]);
        Ok(StinespringTriple {
            d_in,
            d_out,
            kraus,
            v,
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// Multiplicity `k` (the Choi rank for a minimal dilation).
    pub fn k(&self) -> usize {
        self.kraus.len()
    }

    pub fn dilation_dim(&self) -> usize {
        self.d_in * self.k()
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn v(&self) -> &CMatrix {
        &self.v
    }

    /// `π(X) = X ⊗ I_k`.
    pub fn represent(&self, x: &CMatrix) -> CMatrix {
        kron(x, &CMatrix::identity(self.k(), self.k()))
    }

    /// `V* π(X) V`.
    pub fn reproduce(&self, x: &CMatrix) -> CMatrix {
        self.v.adjoint() * self.represent(x) * &self.v
    }

    /// `F(h) = [L_1 h | … | L_k h]`, a `d_in × k` matrix.
    pub fn kraus_images(&self, h: &CVector) -> CMatrix {
        let cols: Vec<CVector> = self.kraus.iter().map(|l| l * h).collect();
        CMatrix::from_columns(&cols)
    }

    /// Largest possible size of `‖F(h)‖` for unit `h`; used as an absolute scale.
    fn kraus_scale(&self) -> f64 {
        self.kraus
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE)
    }

    /// `F(h)` vanishes relative to the Kraus scale.
    pub fn annihilates(&self, h: &CVector, tol: &Tolerance) -> bool {
        max_abs(&self.kraus_images(h))
            <= tol.eps_eq * self.kraus_scale() * h.norm().max(f64::MIN_POSITIVE)
            || h.norm() == 0.0
    }

    /// Projection on `ℂ^k` whose amplification `I ⊗ P` projects onto the
    /// reducing subspace generated by `V h` for the columns `h` of `hs`.
    /// The cyclic subspace of `V h` is `ℂ^{d_in} ⊗ span{rows of F(h)}`.
    pub fn multiplicity_projection(&self, hs: &CMatrix, tol: &Tolerance) -> HermitianMatrix {
        let k = self.k();
        let mut gens: Vec<CVector> = Vec::new();
        for c in 0..hs.ncols() {
            let h = hs.column(c).into_owned();
            if self.annihilates(&h, tol) {
                continue;
            }
            let f = self.kraus_images(&h);
            for a in 0..self.d_in {
                gens.push(f.row(a).transpose());
            }
        }
        if gens.is_empty() {
            return HermitianMatrix::zeros(k);
        }
        range_projection(&CMatrix::from_columns(&gens), tol)
    }

    /// `dim span{π(X) V h0}` via `d_in · rank F(h0)`.
    pub fn cyclic_subspace_dim(&self, h0: &CVector, tol: &Tolerance) -> usize {
        if self.annihilates(h0, tol) {
            return 0;
        }
        self.d_in * numerical_rank(&self.kraus_images(h0), tol)
    }

    /// `X ↦ V*(X ⊗ D)V` for PSD `D` on the multiplicity space. Kraus factors
    /// are `√μ Σ_j conj(y_j) L_j` over eigenpairs `(μ, y)` of `D`.
    pub fn compress(&self, d: &HermitianMatrix, tol: &Tolerance) -> Result<CpMap> {
        if d.dim() != self.k() {
            return Err(Error::dims(format!("{0}x{0}", self.k()), d.dim()));
        }
        let e = eigh(d);
        if let Some(&lo) = e.values.first() {
            if lo < -tol.eps_psd {
                return Err(Error::NotPsd { min_eigenvalue: lo });
            }
        }
        let mut kraus = Vec::new();
        for (s, &mu) in e.values.iter().enumerate() {
            if mu <= 0.0 {
                continue;
            }
            let y = e.vectors.column(s);
            let mut m = CMatrix::zeros(self.d_in, self.d_out);
            for (j, l) in self.kraus.iter().enumerate() {
                m += l * y[j].conj();
            }
            kraus.push(m * C64::from(mu.sqrt()));
        }
        CpMap::from_kraus(self.d_in, self.d_out, kraus)
    }

    /// The map with Choi matrix `W D W*` for an arbitrary `k × k` matrix `D`.
    pub fn compress_linear(&self, d: &CMatrix) -> Result<CpMap> {
        if d.shape() != (self.k(), self.k()) {
            return Err(Error::dims(
                format!("{0}x{0}", self.k()),
                format!("{}x{}", d.nrows(), d.ncols()),
            ));
        }
        let w = choi_columns(&self.kraus, self.d_in, self.d_out);
        CpMap::from_choi(self.d_in, self.d_out, &w * d * w.adjoint())
    }

    /// Solves `ψ(E_pq) = Σ_{m,j} D_mj L_m* E_pq L_j` in the least-squares
    /// sense and certifies the residual. In Choi form the system reads
    /// `Choi(ψ) = W D W*`, solved by `D = W⁺ Choi(ψ) W⁺*`.
    pub fn radon_nikodym_in(&self, psi: &CpMap, tol: &Tolerance) -> Result<RnDerivative> {
        if (psi.d_in(), psi.d_out()) != (self.d_in, self.d_out) {
            return Err(Error::dims(
                format!("map {}→{}", self.d_in, self.d_out),
                format!("map {}→{}", psi.d_in(), psi.d_out()),
            ));
        }
        let w = choi_columns(&self.kraus, self.d_in, self.d_out);
        let gram = HermitianMatrix::from_trusted(w.adjoint() * &w);
        let w_pinv = pseudo_inverse(&gram, tol).as_matrix() * w.adjoint();
        let d = &w_pinv * psi.choi() * w_pinv.adjoint();
        let d = HermitianMatrix::new(d.clone())
            .unwrap_or_else(|_| HermitianMatrix::from_trusted((&d + d.adjoint()) * C64::from(0.5)));
        let rebuilt = &w * d.as_matrix() * w.adjoint();
        let residual = max_abs_diff(&rebuilt, psi.choi());
        if residual > tol.eps_eq * psi.scale_hint() {
            return Err(Error::Internal(format!(
                "Radon–Nikodym system residual {residual:.3e}"
            )));
        }
        Ok(RnDerivative { d })
    }
}

pub fn minimal_stinespring(phi: &CpMap, tol: &Tolerance) -> Result<StinespringTriple> {
    let kraus = phi.minimal_kraus(tol)?;
    if kraus.is_empty() {
        return Err(Error::ZeroMap);
    }
    StinespringTriple::from_kraus(phi.d_in(), phi.d_out(), kraus, tol)
}

/// `ψ ≤ φ`, i.e. `Choi(φ) − Choi(ψ)` is PSD up to `eps_psd`.
pub fn dominates(phi: &CpMap, psi: &CpMap, tol: &Tolerance) -> Result<bool> {
    let diff = phi.sub(psi)?;
    Ok(diff.is_cp(tol))
}

pub fn radon_nikodym(phi: &CpMap, psi: &CpMap, tol: &Tolerance) -> Result<RnDerivative> {
    if (phi.d_in(), phi.d_out()) != (psi.d_in(), psi.d_out()) {
        return Err(Error::dims(
            format!("map {}→{}", phi.d_in(), phi.d_out()),
            format!("map {}→{}", psi.d_in(), psi.d_out()),
        ));
    }
    if phi.is_zero(tol) {
        return Err(Error::ZeroMap);
    }
    if !dominates(phi, psi, tol)? || !psi.is_cp(tol) {
        return Err(Error::NotDominated);
    }
    minimal_stinespring(phi, tol)?.radon_nikodym_in(psi, tol)
}

/// `max_{i,j} ‖V*(E_ij ⊗ I)V − φ(E_ij)‖_max`.
pub fn reproduction_error(triple: &StinespringTriple, phi: &CpMap) -> f64 {
    let d = triple.d_in();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let e = numerics::matrix_unit(d, i, j);
            worst = worst.max(max_abs_diff(&triple.reproduce(&e), &phi.unit_image(i, j)));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{approx_eq, basis_vector, c, matrix_unit, pauli_x};
    use crate::sample;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn special() -> CpMap {
        CpMap::from_kraus(2, 2, vec![CMatrix::identity(2, 2), pauli_x()]).unwrap()
    }

    /// Dimension of `span{(E_ab ⊗ I) V h}` computed from all generators.
    fn explicit_cyclic_dim(t: &StinespringTriple, h: &CVector) -> usize {
        let vh = t.v() * h;
        if vh.norm() <= 1e-12 {
            return 0;
        }
        let d = t.d_in();
        let mut gens = Vec::new();
        for a in 0..d {
            for b in 0..d {
                gens.push(t.represent(&matrix_unit(d, a, b)) * &vh);
            }
        }
        numerical_rank(&CMatrix::from_columns(&gens), &tol())
    }

    #[test]
    fn identity_dilation() {
        let t = minimal_stinespring(&CpMap::identity(2), &tol()).unwrap();
        assert_eq!(t.k(), 1);
        assert_eq!(t.dilation_dim(), 2);
        let phase = t.v()[(0, 0)];
        assert!(approx_eq(
            &(t.v() / phase),
            &CMatrix::identity(2, 2),
            &tol()
        ));
    }

    #[test]
    fn special_dilation() {
        let phi = special();
        let t = minimal_stinespring(&phi, &tol()).unwrap();
        assert_eq!(t.k(), 2);
        assert_eq!(t.dilation_dim(), 4);
        assert!(reproduction_error(&t, &phi) <= 1e-9);
        let ip: C64 = t.kraus()[0]
            .iter()
            .zip(t.kraus()[1].iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!(ip.norm() < 1e-12);
    }

    #[test]
    fn eb_dilation_formula() {
        let rho = HermitianMatrix::new(numerics::real_matrix(
            2,
            2,
            &[1.0 / 3.0, 0.0, 0.0, 2.0 / 3.0],
        ))
        .unwrap();
        let v = basis_vector(2, 0);
        let phi = CpMap::eb_quasipure(&rho, &v).unwrap();
        let t = minimal_stinespring(&phi, &tol()).unwrap();
        assert_eq!(t.k(), 2);
        // V h = ⟨v,h⟩ Σ √p_j u_j ⊗ e_j: V vanishes on v⊥ and V v has norm² = trace ρ
        let vperp = basis_vector(2, 1);
        assert!((t.v() * &vperp).norm() < 1e-12);
        assert_abs_diff_eq!((t.v() * &v).norm_squared(), 1.0, epsilon = 1e-12);
        assert!(approx_eq(
            &(t.v().adjoint() * t.v()),
            &phi.apply_identity(),
            &tol()
        ));
    }

    #[test]
    fn zero_map_has_no_dilation() {
        assert_eq!(
            minimal_stinespring(&CpMap::zero(2, 2), &tol()),
            Err(Error::ZeroMap)
        );
        assert_eq!(
            minimal_stinespring(&CpMap::transpose(2), &tol()),
            Err(Error::NotCp)
        );
    }

    #[test]
    fn cyclic_dims() {
        let t = minimal_stinespring(&CpMap::identity(2), &tol()).unwrap();
        assert_eq!(t.cyclic_subspace_dim(&CVector::zeros(2), &tol()), 0);
        assert_eq!(
            t.cyclic_subspace_dim(&CVector::from_vec(vec![c(0.3, 1.0), c(-2.0, 0.0)]), &tol()),
            2
        );
        let s =
            StinespringTriple::from_kraus(2, 2, vec![CMatrix::identity(2, 2), pauli_x()], &tol())
                .unwrap();
        let h = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(s.cyclic_subspace_dim(&h, &tol()), 2);
        assert_eq!(explicit_cyclic_dim(&s, &h), 2);
        assert_eq!(s.cyclic_subspace_dim(&basis_vector(2, 0), &tol()), 4);
    }

    #[test]
    fn domination_examples() {
        let phi = special();
        for t in [0.0, 0.3, 1.0] {
            assert!(dominates(&phi, &phi.scale(t), &tol()).unwrap());
        }
        let psi = CpMap::conjugation(pauli_x());
        assert!(dominates(&phi, &psi, &tol()).unwrap());
        assert!(!dominates(&CpMap::identity(2), &CpMap::transpose(2), &tol()).unwrap());
        assert!(dominates(&CpMap::identity(2), &CpMap::identity(3), &tol()).is_err());
    }

    #[test]
    fn rn_examples() {
        let phi = special();
        let t = 0.25;
        let d = radon_nikodym(&phi, &phi.scale(t), &tol()).unwrap();
        assert!(approx_eq(
            d.matrix(),
            &CMatrix::identity(2, 2).scale(t),
            &tol()
        ));
        let d = radon_nikodym(&phi, &phi, &tol()).unwrap();
        assert!(approx_eq(d.matrix(), &CMatrix::identity(2, 2), &tol()));

        let s =
            StinespringTriple::from_kraus(2, 2, vec![CMatrix::identity(2, 2), pauli_x()], &tol())
                .unwrap();
        let d = s
            .radon_nikodym_in(&CpMap::conjugation(pauli_x()), &tol())
            .unwrap();
        let expected = numerics::real_matrix(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!(approx_eq(d.matrix(), &expected, &tol()));
        assert!(d.is_positive_contraction(&tol()));

        assert_eq!(
            radon_nikodym(&CpMap::conjugation(pauli_x()), &phi, &tol()),
            Err(Error::NotDominated)
        );
    }

    #[test]
    fn compress_matches_linear_form() {
        let mut rng = sample::rng(8);
        let phi = sample::cp_map(&mut rng, 3, 2, 3);
        let t = minimal_stinespring(&phi, &tol()).unwrap();
        let d = sample::positive_contraction(&mut rng, t.k());
        let a = t.compress(&d, &tol()).unwrap();
        let b = t.compress_linear(d.as_matrix()).unwrap();
        assert!(max_abs_diff(a.choi(), b.choi()) < 1e-10);
        // V*(X⊗D)V on a unit
        let x = matrix_unit(3, 1, 2);
        let direct = t.v().adjoint() * kron(&x, d.as_matrix()) * t.v();
        assert!(max_abs_diff(&direct, &a.apply(&x).unwrap()) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rn_round_trip(d_in in 1usize..=3, d_out in 1usize..=3, seed in any::<u64>()) {
            let mut rng = sample::rng(seed);
            let k = 1 + (seed as usize % (d_in * d_out));
            let phi = sample::cp_map(&mut rng, d_in, d_out, k);
            let t = minimal_stinespring(&phi, &tol()).unwrap();
            let d = sample::positive_contraction(&mut rng, t.k());
            let psi = t.compress(&d, &tol()).unwrap();
            prop_assert!(psi.is_cp(&tol()));
            prop_assert!(dominates(&phi, &psi, &tol()).unwrap());
            let got = t.radon_nikodym_in(&psi, &tol()).unwrap();
            prop_assert!(max_abs_diff(got.matrix(), &d) <= 1e-8);
        }

        #[test]
        fn cyclic_rank_identity(d_in in 1usize..=3, d_out in 1usize..=3, seed in any::<u64>()) {
            let mut rng = sample::rng(seed);
            let k = 1 + (seed as usize % 3).min(d_in * d_out - 1);
            // mix generic maps with maps sharing a kernel direction
            let phi = sample::cp_map(&mut rng, d_in, d_out, k);
            let t = minimal_stinespring(&phi, &tol()).unwrap();
            for _ in 0..100 {
                let h = sample::gaussian_vector(&mut rng, d_out);
                prop_assert_eq!(t.cyclic_subspace_dim(&h, &tol()), explicit_cyclic_dim(&t, &h));
            }
            let special = StinespringTriple::from_kraus(2, 2, vec![CMatrix::identity(2, 2), pauli_x()], &tol()).unwrap();
            let h = CVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]);
            prop_assert_eq!(special.cyclic_subspace_dim(&h, &tol()), explicit_cyclic_dim(&special, &h));
        }

        #[test]
        fn reproduction(d_in in 1usize..=4, d_out in 1usize..=4, seed in any::<u64>()) {
            let mut rng = sample::rng(seed);
            let k = 1 + (seed as usize % (d_in * d_out));
            let phi = sample::cp_map(&mut rng, d_in, d_out, k);
            let t = minimal_stinespring(&phi, &tol()).unwrap();
            prop_assert_eq!(t.k(), phi.choi_rank(&tol()));
            prop_assert!(reproduction_error(&t, &phi) <= 1e-9);
        }
    }
}
