//! Worked examples with a pass/fail table. Each example also renders a JSON
//! report for `demo --export`.

use cpkit::completion::{minimal_cp_completion_choi, PartialCpMap};
use cpkit::equivalence::{
    ae_equal_rigidity, counterexample_construct, decompose_along, forced_equality_scan,
    r_equivalent, rigidity_check,
};
use cpkit::numerics::{
    basis_vector, ketbra, matrix_unit, max_abs, max_abs_diff, pauli_x, real_matrix,
};
use cpkit::quasipure::is_quasipure;
use cpkit::stinespring::dominates;
use cpkit::{
    sample, CMatrix, CVector, CpMap, EquivalenceContext, HermitianMatrix, QuasiPurityOptions,
    RigidityVerdict, Status, Tolerance, C64,
};
use serde_json::{json, Value};

use crate::commands::{class_value, rigidity_value, verdict_value};
use crate::doc::{encode_matrix, MapDocument};

pub struct Example {
    pub name: &'static str,
    pub summary: &'static str,
    run: fn(&Tolerance, u64) -> cpkit::Result<(bool, Value)>,
}

pub const EXAMPLES: &[Example] = &[
    Example {
        name: "first-example",
        summary: "trace(rho X)|e1><e1| with rho = diag(1,2)/3 is quasi-pure, not pure",
        run: first_example,
    },
    Example {
        name: "special",
        summary: "X -> X + sXs is not quasi-pure; with R = E11 every candidate psi equals phi",
        run: special,
    },
    Example {
        name: "non-quasi-pure",
        summary: "a non-quasi-pure map admits psi != phi agreeing on R with equal units",
        run: non_quasi_pure,
    },
    Example {
        name: "decomposition",
        summary: "phi splits as minimal R-completion plus a part vanishing on R",
        run: decomposition,
    },
    Example {
        name: "rigidity",
        summary: "quasi-pure maps agreeing on R with equal units coincide",
        run: rigidity,
    },
    Example {
        name: "identity-faithful-state",
        summary: "the identity map is determined almost everywhere by a faithful state",
        run: identity_faithful_state,
    },
    Example {
        name: "transpose-not-cp",
        summary: "the transpose map is rejected as not completely positive",
        run: transpose_not_cp,
    },
];

pub fn find(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}

impl Example {
    pub fn run(&self, tol: &Tolerance, seed: u64) -> (bool, Value) {
        match (self.run)(tol, seed) {
            Ok(out) => out,
            Err(e) => (false, json!({ "error": e.to_string() })),
        }
    }
}

fn special_map() -> CpMap {
    CpMap::from_kraus(2, 2, vec![CMatrix::identity(2, 2), pauli_x()]).expect("2x2 factors")
}

fn first_example(tol: &Tolerance, _seed: u64) -> cpkit::Result<(bool, Value)> {
    let third = 1.0 / 3.0;
    let rho = HermitianMatrix::new(real_matrix(2, 2, &[third, 0.0, 0.0, 2.0 * third]))?;
    let phi = CpMap::eb_quasipure(&rho, &basis_vector(2, 0))?;
    let class = phi.classify(tol)?;
    let verdict = is_quasipure(&phi, tol, &QuasiPurityOptions::default())?;
    let pass = verdict.is_proof_grade_quasipure() && !class.is_pure && class.is_eb_quasipure_form();
    Ok((
        pass,
        json!({
            "map": MapDocument::from_map(&phi).to_value(),
            "class": class_value(&class),
            "quasipure": verdict_value(&verdict),
        }),
    ))
}

fn special(tol: &Tolerance, seed: u64) -> cpkit::Result<(bool, Value)> {
    let phi = special_map();
    let verdict = is_quasipure(&phi, tol, &QuasiPurityOptions::default())?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let expected = CVector::from_vec(vec![C64::from(s), C64::from(s)]);
    let witness_ok = verdict
        .witness
        .as_ref()
        .is_some_and(|w| (w - &expected).norm() < 1e-9);
    let h0 = verdict.witness.clone().unwrap_or(expected);
    let construct = counterexample_construct(&phi, &h0, tol, 200, seed)?;
    let r = matrix_unit(2, 0, 0);
    let scan = forced_equality_scan(&phi, &r, 200, seed, tol)?;
    let pass = verdict.status == Status::NotQuasiPure
        && witness_ok
        && construct.is_none()
        && scan.forced_by_minimality
        && scan.max_feasible_step <= 1e-6;
    Ok((
        pass,
        json!({
            "map": MapDocument::from_map(&phi).to_value(),
            "quasipure": verdict_value(&verdict),
            "counterexample": construct.map(|c| c.distance),
            "r": encode_matrix(&r),
            "forced_equality": {
                "trace_gap": scan.trace_gap,
                "forced_by_minimality": scan.forced_by_minimality,
                "free_directions": scan.free_directions,
                "max_feasible_step": scan.max_feasible_step,
            },
        }),
    ))
}

fn non_quasi_pure(tol: &Tolerance, seed: u64) -> cpkit::Result<(bool, Value)> {
    let mut rng = sample::rng(seed);
    for attempt in 0..50u64 {
        let phi = sample::cp_map(&mut rng, 2, 3, 2);
        let verdict = is_quasipure(&phi, tol, &QuasiPurityOptions::default())?;
        let Some(h0) = verdict.witness.clone() else {
            continue;
        };
        let Some(cx) = counterexample_construct(&phi, &h0, tol, 200, seed.wrapping_add(attempt))?
        else {
            continue;
        };
        let scale = phi.scale_hint();
        let psi_cp = cx.psi.is_cp(tol);
        let units_equal =
            max_abs_diff(&cx.psi.apply_identity(), &phi.apply_identity()) <= tol.eps_eq * scale;
        let ctx = EquivalenceContext::Operator(cx.r.clone());
        let equivalent = r_equivalent(&phi, &cx.psi, &ctx, tol)?;
        let r_expected = ketbra(&h0, &h0) / C64::from(h0.norm_squared());
        let pass = psi_cp
            && units_equal
            && equivalent
            && cx.distance > 1e-6
            && max_abs_diff(&cx.r, &r_expected) <= 1e-12;
        return Ok((
            pass,
            json!({
                "map": MapDocument::from_map(&phi).to_value(),
                "quasipure": verdict_value(&verdict),
                "psi": MapDocument::from_map(&cx.psi).to_value(),
                "r": encode_matrix(&cx.r),
                "z": encode_matrix(&cx.z),
                "distance": cx.distance,
                "attempts": cx.attempts,
                "checks": {
                    "psi_cp": psi_cp,
                    "units_equal": units_equal,
                    "r_equivalent": equivalent,
                },
            }),
        ));
    }
    Ok((false, json!({ "error": "no counterexample in 50 maps" })))
}

fn decomposition(tol: &Tolerance, seed: u64) -> cpkit::Result<(bool, Value)> {
    let mut rng = sample::rng(seed ^ 0xdec0);
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let instances = 20;
    for t in 0..instances {
        let (d1, d2) = (1 + t % 3, 1 + (t / 3) % 3);
        let k = 1 + t % (d1 * d2).min(3);
        let phi = sample::cp_map(&mut rng, d1, d2, k);
        let rank = 1 + t % d2;
        let r = sample::gaussian_matrix(&mut rng, d2, rank)
            * sample::gaussian_matrix(&mut rng, rank, d2);
        let dec = decompose_along(&phi, &r, tol)?;
        worst = worst.max(dec.route_discrepancy);
        let vanishes = (0..d1).all(|i| {
            (0..d1).all(|j| {
                max_abs(&(dec.phi1.unit_image(i, j) * &r)) <= 1e-8 * phi.scale_hint() * max_abs(&r)
            })
        });
        pass &= dec.route_discrepancy <= 1e-8
            && dominates(&phi, &dec.alpha, tol)?
            && dec.phi1.is_cp(tol)
            && vanishes;
    }
    Ok((
        pass,
        json!({ "instances": instances, "max_route_discrepancy": worst }),
    ))
}

fn rigidity(tol: &Tolerance, seed: u64) -> cpkit::Result<(bool, Value)> {
    let mut rng = sample::rng(seed ^ 0x7161);
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let instances = 20;
    for t in 0..instances {
        let (d1, d2) = (2 + t % 2, 1 + t % 3);
        let phi = sample::eb_quasipure(&mut rng, d1, d2, 1 + t % 2);
        let r = sample::gaussian_matrix(&mut rng, d2, d2);
        // The minimal completion topped up to the same unit meets every
        // hypothesis; the theorem says it is phi itself.
        let beta = PartialCpMap::from_map(&phi, &r, tol)?;
        let alpha = minimal_cp_completion_choi(&beta, tol)?;
        let rest = phi.apply_identity() - alpha.apply_identity();
        let state = CMatrix::identity(d1, d1) / C64::from(d1 as f64);
        let filler = CpMap::from_action(d1, d2, |i, j| &rest * state[(j, i)])?;
        let psi = alpha.add(&filler)?;
        match rigidity_check(&phi, &psi, &r, tol)? {
            RigidityVerdict::TheoremHolds { distance } => worst = worst.max(distance),
            RigidityVerdict::Counterexample { .. } => pass = false,
        }
    }
    Ok((
        pass && worst <= 1e-8,
        json!({ "instances": instances, "max_distance": worst }),
    ))
}

fn identity_faithful_state(tol: &Tolerance, _seed: u64) -> cpkit::Result<(bool, Value)> {
    let phi = CpMap::identity(3);
    let xi = CpMap::from_action(3, 1, |i, j| {
        CMatrix::from_element(1, 1, C64::from(if i == j { 1.0 / 3.0 } else { 0.0 }))
    })?;
    let verdict = ae_equal_rigidity(&phi, &phi, &xi, tol);
    let pass = matches!(verdict, Ok(RigidityVerdict::TheoremHolds { .. }));
    Ok((pass, json!({ "rigidity": rigidity_value(verdict) })))
}

fn transpose_not_cp(tol: &Tolerance, _seed: u64) -> cpkit::Result<(bool, Value)> {
    let t = CpMap::transpose(2);
    let spectrum = t.choi_spectrum()?;
    let pass = !t.is_cp(tol) && spectrum.first().is_some_and(|&l| l < -0.5);
    Ok((pass, json!({ "choi_spectrum": spectrum })))
}

/// Report for `demo --export`.
pub fn export(example: &Example, tol: &Tolerance, seed: u64) -> (bool, Value) {
    let (pass, detail) = example.run(tol, seed);
    (
        pass,
        json!({
            "command": "demo",
            "example": example.name,
            "summary": example.summary,
            "pass": pass,
            "detail": detail,
        }),
    )
}
