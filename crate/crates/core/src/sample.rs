//! Seeded random instances: matrices, unitaries, contractions and CP maps.
//!
//! Everything draws from a [`ChaCha8Rng`] so that a seed reproduces the same
//! instance on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cpmap::CpMap;
use crate::numerics::{self, CMatrix, CVector, HermitianMatrix, C64};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn gaussian_vector(rng: &mut impl Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| gaussian(rng))
}

/// Uniformly distributed unit vector in `ℂ^n`.
pub fn unit_vector(rng: &mut impl Rng, n: usize) -> CVector {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-3 {
            return v / C64::from(norm);
        }
    }
}

/// Haar-ish unitary: Q factor of a Gaussian matrix with the phases of
/// `diag(R)` divided out.
pub fn unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, n, n).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / C64::from(d.norm())
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random PSD matrix of the given rank with eigenvalues in `[lo, hi]`.
pub fn psd_with_rank(
    rng: &mut impl Rng,
    n: usize,
    rank: usize,
    lo: f64,
    hi: f64,
) -> HermitianMatrix {
    let u = unitary(rng, n);
    let mut d = CMatrix::zeros(n, n);
    for i in 0..rank.min(n) {
        d[(i, i)] = C64::from(rng.random_range(lo..=hi));
    }
    HermitianMatrix::new(&u * d * u.adjoint()).expect("hermitian by construction")
}

/// Random positive contraction `0 ≤ D ≤ I` on `ℂ^k`.
pub fn positive_contraction(rng: &mut impl Rng, k: usize) -> HermitianMatrix {
    let u = unitary(rng, k);
    let mut d = CMatrix::zeros(k, k);
    for i in 0..k {
        d[(i, i)] = C64::from(rng.random::<f64>());
    }
    HermitianMatrix::new(&u * d * u.adjoint()).expect("hermitian by construction")
}

/// Orthogonal projection onto a random subspace of dimension `rank`.
pub fn projection(rng: &mut impl Rng, n: usize, rank: usize) -> HermitianMatrix {
    let u = unitary(rng, n);
    let b = u.columns(0, rank.min(n)).into_owned();
    HermitianMatrix::new(&b * b.adjoint()).expect("hermitian by construction")
}

/// CP map with `k` independent Gaussian Kraus factors of shape `d_in × d_out`.
pub fn cp_map(rng: &mut impl Rng, d_in: usize, d_out: usize, k: usize) -> CpMap {
    let kraus = (0..k).map(|_| gaussian_matrix(rng, d_in, d_out)).collect();
    CpMap::from_kraus(d_in, d_out, kraus).expect("shapes match")
}

/// Random map of the form `X ↦ trace(ρX)|v⟩⟨v|` with `rank(ρ) = rank`.
pub fn eb_quasipure(rng: &mut impl Rng, d_in: usize, d_out: usize, rank: usize) -> CpMap {
    let rho = psd_with_rank(rng, d_in, rank, 0.2, 1.0);
    let v = unit_vector(rng, d_out);
    CpMap::eb_quasipure(&rho, &v).expect("valid by construction")
}

/// Random PSD matrix of size `n` and rank `rank` given as `W W*`, entries
/// of moderate size; used for random Choi matrices.
pub fn psd_gram(rng: &mut impl Rng, n: usize, rank: usize) -> HermitianMatrix {
    let w = gaussian_matrix(rng, n, rank);
    HermitianMatrix::new(&w * w.adjoint()).expect("hermitian by construction")
}

/// A random operator with range inside `range` (a projection) and annihilating `kills`.
pub fn operator_between(rng: &mut impl Rng, range: &CMatrix, kills: &CVector) -> CMatrix {
    let n = range.nrows();
    let g = gaussian_matrix(rng, n, kills.len());
    let norm2 = kills.norm_squared();
    let proj_kill = if norm2 > 0.0 {
        numerics::ketbra(kills, kills).unscale(norm2)
    } else {
        CMatrix::zeros(kills.len(), kills.len())
    };
    range * g * (CMatrix::identity(kills.len(), kills.len()) - proj_kill)
}
