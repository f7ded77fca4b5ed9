use std::path::Path;

use cpkit::completion::{
    minimal_cp_completion_choi, minimal_cp_completion_stinespring, BlockCompletionProblem,
};
use cpkit::equivalence::{ae_equal_rigidity, r_equivalent, rigidity_check};
use cpkit::numerics::{max_abs, max_abs_diff, min_eigenvalue, pseudo_inverse};
use cpkit::quasipure::is_quasipure;
use cpkit::{
    CMatrix, CpMap, EquivalenceContext, Error, HermitianMatrix, MapClass, PartialCpMap,
    QuasiPurityOptions, QuasiPurityVerdict, RigidityVerdict, Status, Tolerance,
};
use serde_json::{json, Value};

use crate::doc::{
    encode_matrix, encode_vector, read_json, read_map, read_operator, InputError, MapDocument,
    PartialDocument,
};

/// A finished command: JSON report and process exit code.
pub struct Outcome {
    pub report: Value,
    pub exit: i32,
}

pub enum Failure {
    /// Exit 2.
    Input(String),
    /// A negative verdict that carries no report, exit 1.
    Negative(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Route {
    Choi,
    Stinespring,
    Both,
}

pub fn class_value(class: &MapClass) -> Value {
    json!({
        "is_cp": class.is_cp,
        "is_unital": class.is_unital,
        "is_pure": class.is_pure,
        "choi_rank": class.choi_rank,
        "eb_form": class.eb_form.as_ref().map(|f| json!({
            "rho": encode_matrix(f.rho.as_matrix()),
            "v": encode_vector(&f.v),
        })),
    })
}

pub fn verdict_value(v: &QuasiPurityVerdict) -> Value {
    json!({
        "status": format!("{:?}", v.status),
        "method": v.method.as_str(),
        "proof_grade": v.is_proof_grade_quasipure(),
        "witness": v.witness.as_ref().map(encode_vector),
        "samples_used": v.samples_used,
    })
}

pub fn analyze(map: &Path, tol: &Tolerance) -> Result<Outcome, Failure> {
    let phi = read_map(map, tol)?;
    let class = match phi.classify(tol) {
        Ok(class) => class_value(&class),
        Err(Error::NotCp) => {
            let d = phi.d_out();
            let unit_gap = max_abs_diff(&phi.apply_identity(), &CMatrix::identity(d, d));
            json!({
                "is_cp": false,
                "is_unital": phi.d_in() == d && unit_gap <= tol.eps_eq,
                "is_pure": null,
                "choi_rank": phi.choi_rank(tol),
                "eb_form": null,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let spectrum = phi.choi_spectrum().ok();
    Ok(Outcome {
        report: json!({
            "command": "analyze",
            "d_in": phi.d_in(),
            "d_out": phi.d_out(),
            "class": class,
            "choi_spectrum": spectrum,
        }),
        exit: 0,
    })
}

pub fn quasipure(
    map: &Path,
    tol: &Tolerance,
    opts: &QuasiPurityOptions,
) -> Result<Outcome, Failure> {
    let phi = read_map(map, tol)?;
    if !phi.is_cp(tol) {
        return Err(Failure::Negative("map is not completely positive".into()));
    }
    let v = is_quasipure(&phi, tol, opts)?;
    let exit = match v.status {
        Status::QuasiPure => 0,
        Status::NotQuasiPure => 1,
        Status::Inconclusive => 3,
    };
    Ok(Outcome {
        report: json!({
            "command": "quasipure",
            "verdict": verdict_value(&v),
            "budget": opts.budget,
            "strict": opts.strict,
        }),
        exit,
    })
}

/// Why a block problem has no positive completion.
fn infeasibility_certificate(prob: &BlockCompletionProblem, tol: &Tolerance) -> Value {
    let a = prob.a();
    let asymmetry = max_abs(&(a - a.adjoint()));
    let Ok(a_h) = HermitianMatrix::new(a.clone()) else {
        return json!({ "reason": "known diagonal block is not Hermitian", "asymmetry": asymmetry });
    };
    let lo = min_eigenvalue(&a_h);
    if lo < -tol.eps_psd {
        return json!({ "reason": "known diagonal block is not positive", "min_eigenvalue": lo });
    }
    let n = a.nrows();
    let leak = prob.c() * (CMatrix::identity(n, n) - pseudo_inverse(&a_h, tol).as_matrix() * a);
    json!({
        "reason": "off-diagonal block does not vanish on the kernel of the diagonal block",
        "kernel_leakage": max_abs(&leak),
    })
}

pub fn complete(
    beta_file: &Path,
    r_file: &Path,
    route: Route,
    tol: &Tolerance,
) -> Result<Outcome, Failure> {
    let r = read_operator(r_file)?;
    let raw: Value = read_json(beta_file)?;
    let (beta, source) = if raw.get("blocks").is_some() {
        let doc: PartialDocument = serde_json::from_value(raw).map_err(InputError::from)?;
        (doc.to_partial(&r, tol)?, None)
    } else {
        let doc: MapDocument = serde_json::from_value(raw).map_err(InputError::from)?;
        let phi = doc.to_map(tol)?;
        (PartialCpMap::from_map(&phi, &r, tol)?, Some(phi))
    };
    let prob = beta.block_problem(tol)?;
    if !prob.is_completable(tol) {
        return Ok(Outcome {
            report: json!({
                "command": "complete",
                "feasible": false,
                "certificate": infeasibility_certificate(&prob, tol),
            }),
            exit: 1,
        });
    }
    let via_choi = match route {
        Route::Choi | Route::Both => Some(minimal_cp_completion_choi(&beta, tol)?),
        Route::Stinespring => None,
    };
    let via_dilation = match route {
        Route::Stinespring | Route::Both => {
            let seed = match (&source, &via_choi) {
                (Some(phi), _) if phi.is_cp(tol) => phi.clone(),
                (_, Some(m)) => m.clone(),
                _ => minimal_cp_completion_choi(&beta, tol)?,
            };
            Some(minimal_cp_completion_stinespring(&beta, &seed, tol)?)
        }
        Route::Choi => None,
    };
    let discrepancy = match (&via_choi, &via_dilation) {
        (Some(a), Some(b)) => Some(max_abs_diff(a.choi(), b.choi())),
        _ => None,
    };
    let completion: &CpMap = via_choi
        .as_ref()
        .or(via_dilation.as_ref())
        .expect("one route ran");
    let distance_to_input = source
        .as_ref()
        .map(|phi| completion.distance(phi))
        .transpose()?;
    Ok(Outcome {
        report: json!({
            "command": "complete",
            "feasible": true,
            "route": format!("{route:?}").to_lowercase(),
            "completion": MapDocument::from_map(completion).to_value(),
            "choi_rank": completion.choi_rank(tol),
            "domination_constant": prob.domination_constant(tol),
            "route_discrepancy": discrepancy,
            "distance_to_input_map": distance_to_input,
        }),
        exit: 0,
    })
}

pub fn rigidity_value(v: cpkit::Result<RigidityVerdict>) -> Value {
    match v {
        Ok(RigidityVerdict::TheoremHolds { distance }) => {
            json!({ "verdict": "TheoremHolds", "distance": distance })
        }
        Ok(RigidityVerdict::Counterexample { distance }) => {
            json!({ "verdict": "Counterexample", "distance": distance })
        }
        Err(Error::HypothesisFailed(h)) => {
            json!({ "verdict": "NotApplicable", "failed_hypothesis": h.as_str() })
        }
        Err(e) => json!({ "verdict": "NotApplicable", "error": e.to_string() }),
    }
}

pub fn aeq(
    phi_file: &Path,
    psi_file: &Path,
    r_file: Option<&Path>,
    xi_file: Option<&Path>,
    tol: &Tolerance,
) -> Result<Outcome, Failure> {
    let phi = read_map(phi_file, tol)?;
    let psi = read_map(psi_file, tol)?;
    let ctx = match (r_file, xi_file) {
        (Some(r), None) => EquivalenceContext::Operator(read_operator(r)?),
        (None, Some(xi)) => EquivalenceContext::Reference(read_map(xi, tol)?),
        _ => {
            return Err(Failure::Input(
                "exactly one of --r and --xi is required".into(),
            ))
        }
    };
    let equivalent = r_equivalent(&phi, &psi, &ctx, tol)?;
    let distance = phi.distance(&psi)?;
    let scale = phi.scale_hint().max(psi.scale_hint());
    let rigidity = match &ctx {
        EquivalenceContext::Operator(r) => rigidity_check(&phi, &psi, r, tol),
        EquivalenceContext::Reference(xi) => ae_equal_rigidity(&phi, &psi, xi, tol),
    };
    Ok(Outcome {
        report: json!({
            "command": "aeq",
            "context": match ctx {
                EquivalenceContext::Operator(_) => "operator",
                EquivalenceContext::Reference(_) => "reference",
            },
            "equivalent": equivalent,
            "maps_equal": distance <= tol.eps_eq * scale,
            "distance": distance,
            "rigidity": rigidity_value(rigidity),
        }),
        exit: if equivalent { 0 } else { 1 },
    })
}
