//! Subcommand implementations: each consumes a loaded problem and emits a
//! JSON report carrying every intermediate quantity of the computation
//! (Δ(C), Δ(P₋), M, K, Ǎ, č, β_I, eigenvalues) with the route that
//! produced it.

use serde_json::{json, Value};

use germflow::dynamics::{
    classical_flow, evolve_gaussian_detailed, evolve_projected, riccati_evolve,
};
use germflow::gaussian::{norm_constrained_detailed, project_eta_detailed};
use germflow::germ::{delta_c, h_germ, nu_orthonormalize, p_minus, s_germ_from_matrix};
use germflow::oracle;
use germflow::phase::{build_gauge_plane, gauge_pairing_constant, skew_product};
use germflow::stability::{
    analyze, eigenstate_stationarity_check, gamma_reconstruct_residual, mode_decomposition,
    reduced_generator,
};
use germflow::{C64, Error};

use crate::problem::{presence, Problem};
use crate::report::{cmat, complex, obj};

pub struct Flags {
    pub tol: f64,
    pub levels: usize,
    pub t: Option<f64>,
}

pub fn run(command: &str, p: &Problem, flags: &Flags) -> Result<Value, Error> {
    match command {
        "validate" => validate(p),
        "gauge" => gauge(p),
        "germ" => germ_report(p, flags),
        "norm" => norm(p),
        "project" => project(p),
        "evolve" => evolve(p, flags),
        "stability" => stability(p, flags),
        "spectrum" => spectrum_cmd(p, flags),
        "oracle-compare" => oracle_compare(p, flags),
        other => Err(Error::InvalidInput(format!("unknown subcommand {other}"))),
    }
}

fn require_gaussian(p: &Problem) -> Result<&germflow::gaussian::GaussianState, Error> {
    p.require_gaussian().map_err(Error::InvalidInput)
}

fn require_hamiltonian(p: &Problem) -> Result<&germflow::dynamics::QuadraticHamiltonian, Error> {
    p.require_hamiltonian().map_err(Error::InvalidInput)
}

fn time_of(p: &Problem, flags: &Flags) -> f64 {
    flags.t.or(p.t_final).unwrap_or(1.0)
}

fn validate(p: &Problem) -> Result<Value, Error> {
    let mut blocks = Vec::new();
    for (name, present) in presence(p) {
        blocks.push((name, Value::Bool(present)));
    }
    Ok(obj(vec![
        ("valid", Value::Bool(true)),
        ("n", json!(p.n)),
        ("k", json!(p.constraints.k())),
        ("blocks", obj(blocks)),
        (
            "isotropy",
            Value::Bool(p.constraints.subspace().is_isotropic(1e-10)),
        ),
    ]))
}

fn gauge(p: &Problem) -> Result<Value, Error> {
    let l = &p.constraints;
    let g = build_gauge_plane(l)?;
    let k = l.k();
    let mut pairing = germflow::linalg::CMat::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            pairing[(a, b)] = skew_product(&l.basis()[a], &g.basis()[b])?;
        }
    }
    let basis_rows: Vec<Value> = g
        .basis()
        .iter()
        .map(|v| {
            Value::Array(
                v.coords()
                    .iter()
                    .map(|z| json!(z.re))
                    .collect(),
            )
        })
        .collect();
    Ok(obj(vec![
        ("gauge_basis", Value::Array(basis_rows)),
        ("pairing_matrix", cmat(&pairing)),
        (
            "pairing_constant",
            json!(gauge_pairing_constant(k, l.measure_scale(), g.measure_scale())),
        ),
        ("isotropic", Value::Bool(g.is_isotropic(1e-10))),
    ]))
}

fn germ_report(p: &Problem, flags: &Flags) -> Result<Value, Error> {
    let g = require_gaussian(p)?;
    let l = &p.constraints;
    let s = s_germ_from_matrix(g.a())?;
    s.validate(flags.tol.max(1e-12))?;
    let ortho = nu_orthonormalize(&s)?;
    let hg = h_germ(g.a(), l)?;
    hg.validate(flags.tol.max(1e-9))?;
    let pm = p_minus(g.a(), l)?;
    Ok(obj(vec![
        ("delta_c", json!(delta_c(g.a())?)),
        ("delta_p_minus", json!(pm.jacobian())),
        ("p_minus_matrix", cmat(pm.matrix())),
        ("r_perp_dim", json!(hg.split_sizes().map(|s| s.0).unwrap_or(0))),
        ("s_germ_frame_q", cmat(&ortho.frame_q())),
        ("h_germ_frame", cmat(&hg.frame())),
    ]))
}

fn norm(p: &Problem) -> Result<Value, Error> {
    let g = require_gaussian(p)?;
    let d = norm_constrained_detailed(g, &p.constraints)?;
    let mut routes = vec![("germ", json!(d.germ_route))];
    if let Some(c) = d.coordinate_route {
        routes.push(("coordinate", json!(c)));
    }
    let mut entries = vec![
        ("norm", json!(d.norm)),
        ("routes", obj(routes)),
        ("delta_c", json!(d.delta_c)),
        ("delta_p_minus", json!(d.delta_p_minus)),
    ];
    if let Some(m) = &d.m_matrix {
        entries.push(("m_matrix", cmat(m)));
    }
    if let Some(k) = &d.k_matrix {
        entries.push(("k_matrix", cmat(k)));
    }
    Ok(obj(entries))
}

fn project(p: &Problem) -> Result<Value, Error> {
    let g = require_gaussian(p)?;
    let pr = project_eta_detailed(g, &p.constraints)?;
    Ok(obj(vec![
        ("a_check", cmat(pr.projected.a_check())),
        ("c_check", complex(pr.projected.c_check())),
        (
            "routes",
            obj(vec![
                ("direct", complex(pr.c_check_direct)),
                ("germ", complex(pr.c_check_germ)),
            ]),
        ),
        ("m_matrix", cmat(&pr.m_matrix)),
    ]))
}

fn evolve(p: &Problem, flags: &Flags) -> Result<Value, Error> {
    let g = require_gaussian(p)?;
    let h = require_hamiltonian(p)?;
    let t = time_of(p, flags);
    let traj = evolve_gaussian_detailed(g, h, t)?;
    let rk = riccati_evolve(g, h, t)?;
    let riccati_agreement = ((&rk.a - traj.state.a()).norm() / traj.state.a().norm().max(1.0))
        .max((rk.c - traj.state.c()).norm() / traj.state.c().norm().max(1e-300));
    let flow = classical_flow(h, t);
    let mut entries = vec![
        ("t", json!(t)),
        ("a_t", cmat(traj.state.a())),
        ("c_t", complex(traj.state.c())),
        ("symplectic_residual", json!(flow.symplectic_residual())),
        ("riccati_agreement", json!(riccati_agreement)),
        ("branch_steps", json!(traj.steps)),
        ("min_im_eig", json!(traj.min_im_eig)),
    ];
    if p.constraints.k() > 0 {
        match evolve_projected(g, h, &p.constraints, t) {
            Ok(pe) => {
                entries.push(("constraints_preserved", Value::Bool(true)));
                entries.push((
                    "projected",
                    obj(vec![
                        ("a_check_t", cmat(pe.projected.a_check())),
                        ("c_check_t", complex(pe.projected.c_check())),
                        ("delta_u0", json!(pe.delta_u0)),
                        (
                            "routes",
                            obj(vec![
                                ("transport", complex(pe.c_check_transport)),
                                ("projection", complex(pe.c_check_projection)),
                            ]),
                        ),
                    ]),
                ));
            }
            Err(Error::EquivalenceNotPreserved(msg)) => {
                entries.push(("constraints_preserved", Value::Bool(false)));
                entries.push(("projected", Value::Null));
                entries.push(("constraint_drift", json!(msg)));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(obj(entries))
}

fn stability(p: &Problem, flags: &Flags) -> Result<Value, Error> {
    let h = require_hamiltonian(p)?;
    let l = &p.constraints;
    let report = analyze(h, l, flags.levels)?;
    let eigs: Vec<Value> = report.eigenvalues.iter().map(|&z| complex(z)).collect();
    let mut entries = vec![
        ("stable", Value::Bool(report.stable)),
        ("eigenvalues", Value::Array(eigs)),
        ("eigvec_cond", json!(report.eigvec_cond)),
        ("betas", json!(report.betas)),
    ];
    if report.stable {
        let (q, gr) = reduced_generator(h, l)?;
        let modes = mode_decomposition(&gr, &q)?;
        entries.push((
            "ground_a",
            report.ground_a.as_ref().map(cmat).unwrap_or(Value::Null),
        ));
        entries.push((
            "gamma_reconstruction_residual",
            json!(gamma_reconstruct_residual(&modes, h, l)?),
        ));
        let st = eigenstate_stationarity_check(h, l, &modes)?;
        entries.push((
            "stationarity",
            obj(vec![
                ("max_a_drift", json!(st.max_a_drift)),
                ("max_phase_residual", json!(st.max_phase_residual)),
                ("ok", Value::Bool(st.ok)),
            ]),
        ));
    } else {
        entries.push(("ground_a", Value::Null));
    }
    Ok(obj(entries))
}

fn spectrum_cmd(p: &Problem, flags: &Flags) -> Result<Value, Error> {
    let h = require_hamiltonian(p)?;
    let report = analyze(h, &p.constraints, flags.levels)?;
    let levels: Vec<Value> = report
        .levels
        .iter()
        .map(|(occ, e)| {
            obj(vec![
                ("occupation", json!(occ)),
                ("eigenvalue", json!(e)),
            ])
        })
        .collect();
    Ok(obj(vec![
        ("stable", Value::Bool(report.stable)),
        ("betas", json!(report.betas)),
        ("levels", Value::Array(levels)),
        (
            "ground_a",
            report.ground_a.as_ref().map(cmat).unwrap_or(Value::Null),
        ),
    ]))
}

fn oracle_compare(p: &Problem, flags: &Flags) -> Result<Value, Error> {
    let g = require_gaussian(p)?;
    let l = &p.constraints;
    let mut checks = Vec::new();

    if p.n <= 2 && l.k() <= 2 {
        let closed = norm_constrained_detailed(g, l)?;
        let quad = oracle::quadrature_constrained_norm(g, l, None, 16)?;
        let rel = (closed.norm - quad).abs() / quad.abs().max(1e-300);
        checks.push((
            "norm",
            obj(vec![
                ("closed_form", json!(closed.norm)),
                ("quadrature", json!(quad)),
                ("rel_diff", json!(rel)),
            ]),
        ));
    }

    if let Some(h) = &p.hamiltonian {
        if p.n <= 2 {
            let t = time_of(p, flags);
            let spec = oracle::GridSpec {
                points: p.grid_points,
                sigmas: p.box_sigmas,
            };
            let w = oracle::split_step_evolve_auto(g, h, t, &spec)?;
            let exact = oracle::sample_evolved_closed_form(g, h, t, w.axes())?;
            let fid = oracle::fidelity(&w, &exact)?;
            let phase = oracle::inner_grid(&exact, &w)?.arg();
            checks.push((
                "evolution",
                obj(vec![
                    ("t", json!(t)),
                    ("fidelity", json!(fid)),
                    ("phase_mismatch", json!(phase)),
                ]),
            ));
        }
    }

    if checks.is_empty() {
        return Err(Error::InvalidInput(
            "oracle-compare needs n ≤ 2 and a gaussian block".into(),
        ));
    }
    Ok(obj(vec![("checks", obj(checks))]))
}

/// Exit code contract: 0 success, 2 validation failure, 3 numerical
/// consistency failure, 4 infeasible.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::InvalidGerm(_) => 2,
        Error::RouteDisagreement { .. } => 3,
        Error::DegenerateProjection(_)
        | Error::NotIntegrable(_)
        | Error::BoxTooSmall(_)
        | Error::GridResolution(_)
        | Error::EquivalenceNotPreserved(_)
        | Error::Incompatible(_)
        | Error::Degenerate(_) => 4,
        Error::Internal(_) => 1,
    }
}

/// Scalar suffix used when reports embed raw complex values.
#[allow(dead_code)]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
