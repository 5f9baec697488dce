//! Quadratic Hamiltonians: constraint compatibility and reduction, the
//! classical symplectic flow, and transport of Gaussian data along it.
//!
//! Sign conventions follow Hamilton's equations Ṗ = −∂H/∂Q, Q̇ = ∂H/∂P
//! applied to H = ½PᵀH_PP P + QᵀH_QP P + ½QᵀH_QQ Q, giving the generator
//! Ṗ = −H_QP P − H_QQ Q, Q̇ = H_PP P + H_QPᵀ Q. The amplitude transport
//! c(t) = c(0)·e^{−iεt}/√det C̃(t) needs a continuous branch of the square
//! root; the argument of det C̃ is unwrapped along the trajectory with the
//! per-step increment kept below π/2 (steps are refined until it is).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::gaussian::{project_eta, GaussianState, ProjectedGaussian};
use crate::germ;
use crate::linalg::{self, CMat, CVec, RMat};
use crate::phase::{ConstraintSet, MeasuredSubspace, PhaseVector};

/// H = ½ Σ [p̂ H_PP p̂ + q̂ H_QP p̂ + p̂ H_QPᵀ q̂ + q̂ H_QQ q̂] + ε.
#[derive(Debug, Clone)]
pub struct QuadraticHamiltonian {
    n: usize,
    h_pp: RMat,
    h_qp: RMat,
    h_qq: RMat,
    epsilon: C64,
}

impl QuadraticHamiltonian {
    pub fn new(h_pp: RMat, h_qp: RMat, h_qq: RMat, epsilon: C64) -> Result<Self> {
        let n = h_pp.nrows();
        for (name, m) in [("H_PP", &h_pp), ("H_QP", &h_qp), ("H_QQ", &h_qq)] {
            if m.nrows() != n || m.ncols() != n || n == 0 {
                return Err(Error::InvalidInput(format!("{name} must be n×n, n ≥ 1")));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} has non-finite entries")));
            }
        }
        for (name, m) in [("H_PP", &h_pp), ("H_QQ", &h_qq)] {
            let asym = (m - &m.transpose()).norm();
            if asym > 1e-10 * m.norm().max(1.0) {
                return Err(Error::InvalidInput(format!("{name} must be symmetric")));
            }
        }
        if !epsilon.is_finite() {
            return Err(Error::InvalidInput("epsilon must be finite".into()));
        }
        Ok(Self {
            n,
            h_pp,
            h_qp,
            h_qq,
            epsilon,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h_pp(&self) -> &RMat {
        &self.h_pp
    }

    pub fn h_qp(&self) -> &RMat {
        &self.h_qp
    }

    pub fn h_qq(&self) -> &RMat {
        &self.h_qq
    }

    pub fn epsilon(&self) -> C64 {
        self.epsilon
    }

    pub fn with_epsilon(&self, epsilon: C64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }

    pub fn block_norm(&self) -> f64 {
        self.h_pp
            .norm()
            .max(self.h_qp.norm())
            .max(self.h_qq.norm())
    }

    /// Generator of the classical flow on stacked (p, q) coordinates:
    /// Ẏ = G·Y with G = [[−H_QP, −H_QQ], [H_PP, H_QPᵀ]].
    pub fn generator(&self) -> RMat {
        let n = self.n;
        let mut g = RMat::zeros(2 * n, 2 * n);
        g.view_mut((0, 0), (n, n)).copy_from(&(-&self.h_qp));
        g.view_mut((0, n), (n, n)).copy_from(&(-&self.h_qq));
        g.view_mut((n, 0), (n, n)).copy_from(&self.h_pp);
        g.view_mut((n, n), (n, n)).copy_from(&self.h_qp.transpose());
        g
    }

    /// Coordinate representation of the quadratic form as a symmetric
    /// tensor on phase space: Γ = [[H_QQ, −H_QP], [−H_QPᵀ, H_PP]]. The flow
    /// generator is recovered as Ẏ = ⟨Y, Γ⟩ = −Γ·Σ·Y.
    pub fn gamma_coord(&self) -> RMat {
        let n = self.n;
        let mut g = RMat::zeros(2 * n, 2 * n);
        g.view_mut((0, 0), (n, n)).copy_from(&self.h_qq);
        g.view_mut((0, n), (n, n)).copy_from(&(-&self.h_qp));
        g.view_mut((n, 0), (n, n)).copy_from(&(-self.h_qp.transpose()));
        g.view_mut((n, n), (n, n)).copy_from(&self.h_pp);
        g
    }

    /// Inverse of [`QuadraticHamiltonian::gamma_coord`].
    pub fn from_gamma_coord(gamma: &RMat, epsilon: C64) -> Result<Self> {
        if gamma.nrows() != gamma.ncols() || gamma.nrows() % 2 != 0 || gamma.nrows() == 0 {
            return Err(Error::InvalidInput("Γ must be 2n×2n".into()));
        }
        let sym = (gamma - &gamma.transpose()).norm();
        if sym > 1e-9 * gamma.norm().max(1.0) {
            return Err(Error::InvalidInput("Γ must be symmetric".into()));
        }
        let n = gamma.nrows() / 2;
        let h_qq: RMat = gamma.view((0, 0), (n, n)).into();
        let h_qp: RMat = -RMat::from(gamma.view((0, n), (n, n)));
        let h_pp: RMat = gamma.view((n, n), (n, n)).into();
        Self::new(h_pp, h_qp, h_qq, epsilon)
    }
}

/// The time-t classical flow u_t.
#[derive(Debug, Clone)]
pub struct ClassicalFlow {
    n: usize,
    u: RMat,
    t: f64,
}

impl ClassicalFlow {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &RMat {
        &self.u
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Symplecticity defect ‖uᵀΣu − Σ‖ / max(1, ‖u‖²).
    ///
    /// The normalization makes the check meaningful for hyperbolic flows,
    /// whose matrix entries grow like e^{‖G‖t}: the absolute defect then
    /// sits at machine-epsilon times ‖u‖² no matter how the exponential is
    /// computed.
    pub fn symplectic_residual(&self) -> f64 {
        let sigma = crate::phase::skew_matrix(self.n).map(|z| z.re);
        let scale = self.u.norm();
        (self.u.transpose() * &sigma * &self.u - &sigma).norm() / (scale * scale).max(1.0)
    }

    pub fn apply(&self, y: &PhaseVector) -> Result<PhaseVector> {
        if y.dim() != self.n {
            return Err(Error::InvalidInput("flow dimension mismatch".into()));
        }
        let uc = linalg::real_to_complex(&self.u);
        PhaseVector::from_coords(&(&uc * y.coords()))
    }
}

/// u_t by the exact matrix exponential of the constant generator.
pub fn classical_flow(h: &QuadraticHamiltonian, t: f64) -> ClassicalFlow {
    ClassicalFlow {
        n: h.n,
        u: linalg::expm(&h.generator().scale(t)),
        t,
    }
}

/// u_t by fixed-step RK4 with step `dt` (reference route for consistency
/// checks against the exponential).
pub fn classical_flow_rk4(h: &QuadraticHamiltonian, t: f64, dt: f64) -> Result<ClassicalFlow> {
    if dt <= 0.0 {
        return Err(Error::InvalidInput("dt must be positive".into()));
    }
    let g = h.generator();
    let steps = ((t.abs() / dt).ceil() as usize).max(1);
    let step = t / steps as f64;
    let mut u = RMat::identity(2 * h.n, 2 * h.n);
    for _ in 0..steps {
        u = rk4_step(&g, &u, step);
    }
    Ok(ClassicalFlow { n: h.n, u, t })
}

fn rk4_step(g: &RMat, u: &RMat, dt: f64) -> RMat {
    let k1 = g * u;
    let k2 = g * (u + &k1.scale(dt / 2.0));
    let k3 = g * (u + &k2.scale(dt / 2.0));
    let k4 = g * (u + &k3.scale(dt));
    u + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0)
}

fn rk4_step_c(g: &CMat, u: &CMat, dt: f64) -> CMat {
    let h = C64::new(dt, 0.0);
    let k1 = g * u;
    let k2 = g * (u + &k1 * (h * 0.5));
    let k3 = g * (u + &k2 * (h * 0.5));
    let k4 = g * (u + &k3 * h);
    u + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4) * (h / 6.0)
}

/// Constraint reduction of a quadratic Hamiltonian.
#[derive(Debug, Clone)]
pub struct ReducedHamiltonian {
    pub compatible: bool,
    /// Norms of the two obstruction blocks (gauge⊗gauge, gauge⊗transverse)
    /// relative to ‖Γ‖.
    pub obstruction: (f64, f64),
    /// The reduced Hamiltonian, present only when compatible. Its quadratic
    /// part lives on the transverse block; the commutator correction is
    /// folded into epsilon.
    pub reduced: Option<QuadraticHamiltonian>,
    /// Adapted frame [X | Y | Z] as columns.
    pub adapted: CMat,
    pub k: usize,
}

/// Adapted frame [constraint | gauge | transverse] of a gauge pair.
pub(crate) fn adapted_frame(l: &ConstraintSet, g: &MeasuredSubspace) -> Result<CMat> {
    let n = l.ambient_n();
    let k = l.k();
    if g.dim() != k || g.ambient_n() != n {
        return Err(Error::InvalidInput("gauge plane dimension mismatch".into()));
    }
    let mut cols: Vec<CVec> = Vec::with_capacity(2 * n);
    for v in l.basis() {
        cols.push(v.coords());
    }
    for v in g.basis() {
        cols.push(v.coords());
    }
    let combined = MeasuredSubspace::new(
        n,
        l.basis().iter().chain(g.basis()).cloned().collect(),
        1.0,
    )?;
    let transverse = combined.skew_complement()?;
    if transverse.dim() != 2 * n - 2 * k {
        return Err(Error::Internal("transverse block has wrong dimension".into()));
    }
    for v in transverse.basis() {
        cols.push(v.coords());
    }
    Ok(CMat::from_columns(&cols))
}

/// Express Γ in the adapted basis, decide compatibility (no gauge⊗gauge and
/// no gauge⊗transverse coupling), and assemble the reduced Hamiltonian.
pub fn reduce_hamiltonian(
    h: &QuadraticHamiltonian,
    l: &ConstraintSet,
    g: &MeasuredSubspace,
) -> Result<ReducedHamiltonian> {
    let n = h.n;
    if l.ambient_n() != n {
        return Err(Error::InvalidInput("constraint dimension mismatch".into()));
    }
    let k = l.k();
    let t = adapted_frame(l, g)?;
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("adapted frame is singular".into()))?;
    let gamma = linalg::real_to_complex(&h.gamma_coord());
    let gamma_adapted = &t_inv * gamma * t_inv.transpose();
    let scale = gamma_adapted.norm().max(1e-300);

    let gamma_yy = gamma_adapted.view((k, k), (k, k)).norm();
    let gamma_yz = gamma_adapted.view((k, 2 * k), (k, 2 * n - 2 * k)).norm();
    let tol = 1e-10 * scale.max(1.0);
    let compatible = gamma_yy <= tol && gamma_yz <= tol;

    let reduced = if compatible {
        // ε′ = ε + (i/2)·tr Γ⁽⁴⁾ from the ordered gauge–constraint pairs.
        let gamma_xy = gamma_adapted.view((0, k), (k, k));
        let trace: C64 = (0..k).map(|a| gamma_xy[(a, a)]).sum();
        let eps = h.epsilon + C64::i() * trace * 0.5;
        let z_cols: CMat = t.view((0, 2 * k), (2 * n, 2 * n - 2 * k)).into();
        let gamma_zz: CMat = gamma_adapted
            .view((2 * k, 2 * k), (2 * n - 2 * k, 2 * n - 2 * k))
            .into();
        let gamma_reduced = (&z_cols * gamma_zz * z_cols.transpose()).map(|z| z.re);
        Some(QuadraticHamiltonian::from_gamma_coord(&gamma_reduced, eps)?)
    } else {
        None
    };

    Ok(ReducedHamiltonian {
        compatible,
        obstruction: (gamma_yy / scale, gamma_yz / scale),
        reduced,
        adapted: t,
        k,
    })
}

/// A transported Gaussian with branch diagnostics.
#[derive(Debug, Clone)]
pub struct GaussianTrajectory {
    pub state: GaussianState,
    /// Unwrapped argument of det C̃(t).
    pub arg_det: f64,
    pub det_abs: f64,
    pub steps: usize,
    /// Smallest eigenvalue of Im A(t).
    pub min_im_eig: f64,
}

/// Transport a Gaussian along the classical flow: the germ frame
/// (A(0)e_j, e_j) is pushed forward by u_t, A(t) = B̃(t)C̃(t)⁻¹, and
/// c(t) = c(0)·e^{−iεt}/√det C̃(t) with the branch tracked continuously.
pub fn evolve_gaussian_detailed(
    g0: &GaussianState,
    h: &QuadraticHamiltonian,
    t: f64,
) -> Result<GaussianTrajectory> {
    if h.n != g0.n() {
        return Err(Error::InvalidInput("hamiltonian dimension mismatch".into()));
    }
    let n = g0.n();
    let frame0 = stacked_frame(g0.a());
    let mut steps = initial_steps(h, t);
    'refine: for _ in 0..16 {
        let u_step = linalg::real_to_complex(&linalg::expm(
            &h.generator().scale(t / steps as f64),
        ));
        let mut frame = frame0.clone();
        let mut arg = 0.0f64;
        for _ in 0..steps {
            frame = &u_step * frame;
            let det = frame.view((n, 0), (n, n)).determinant();
            let raw = det.arg();
            let unwrapped = linalg::unwrap_near(arg, raw);
            if (unwrapped - arg).abs() >= std::f64::consts::FRAC_PI_2 {
                steps *= 2;
                continue 'refine;
            }
            arg = unwrapped;
        }
        let c_tilde: CMat = frame.view((n, 0), (n, n)).into();
        let b_tilde: CMat = frame.view((0, 0), (n, n)).into();
        let det = c_tilde.clone().determinant();
        let c_inv = c_tilde.try_inverse().ok_or_else(|| {
            Error::Internal("coordinate frame became singular during transport".into())
        })?;
        let a_t = linalg::symmetric_part(&(b_tilde * c_inv));
        let min_im_eig = linalg::min_eig_sym(&linalg::imag_part(&a_t));
        if min_im_eig <= 0.0 {
            return Err(Error::Internal(format!(
                "transport lost positivity of Im A (min eigenvalue {min_im_eig:.3e})"
            )));
        }
        let sqrt_det = C64::from_polar(det.norm().sqrt(), arg / 2.0);
        let phase = (-C64::i() * h.epsilon * t).exp();
        let c_t = g0.c() * phase / sqrt_det;
        return Ok(GaussianTrajectory {
            state: GaussianState::new(c_t, a_t)?,
            arg_det: arg,
            det_abs: det.norm(),
            steps,
            min_im_eig,
        });
    }
    Err(Error::Internal(
        "branch tracking failed to keep per-step increments below π/2".into(),
    ))
}

pub fn evolve_gaussian(
    g0: &GaussianState,
    h: &QuadraticHamiltonian,
    t: f64,
) -> Result<GaussianState> {
    Ok(evolve_gaussian_detailed(g0, h, t)?.state)
}

fn stacked_frame(a: &CMat) -> CMat {
    let n = a.nrows();
    let mut f = CMat::zeros(2 * n, n);
    f.view_mut((0, 0), (n, n)).copy_from(a);
    f.view_mut((n, 0), (n, n)).copy_from(&CMat::identity(n, n));
    f
}

fn initial_steps(h: &QuadraticHamiltonian, t: f64) -> usize {
    let rate = 1.0 + h.block_norm();
    ((t.abs() * rate / 0.05).ceil() as usize).max(1)
}

/// Result of the linear-frame (Riccati) integration route.
#[derive(Debug, Clone)]
pub struct RiccatiEvolution {
    pub a: CMat,
    pub c: C64,
    /// Relative difference between the full-step and half-step runs.
    pub consistency: f64,
}

/// Integrate the linear frame system Ḃ̃ = −H_QP B̃ − H_QQ C̃,
/// Ċ̃ = H_PP B̃ + H_QPᵀ C̃ by fixed-step RK4 — the linearized form of the
/// Riccati dynamics of A = B̃C̃⁻¹ — and recover A(t), c(t).
///
/// Runs at `dt` and `dt/2` and reports the Richardson discrepancy; callers
/// use it as an independent route against [`evolve_gaussian`].
pub fn riccati_evolve(
    g0: &GaussianState,
    h: &QuadraticHamiltonian,
    t: f64,
) -> Result<RiccatiEvolution> {
    let dt = 1e-3f64.min(t.abs() / 1000.0).max(1e-9);
    let (a_full, c_full) = riccati_run(g0, h, t, dt)?;
    let (a_half, c_half) = riccati_run(g0, h, t, dt / 2.0)?;
    let consistency = ((&a_full - &a_half).norm() / a_full.norm().max(1.0))
        .max((c_full - c_half).norm() / c_full.norm().max(1e-300));
    if consistency > 1e-8 {
        return Err(Error::Internal(format!(
            "half-step consistency {consistency:.3e} exceeds 1e-8"
        )));
    }
    Ok(RiccatiEvolution {
        a: a_half,
        c: c_half,
        consistency,
    })
}

fn riccati_run(
    g0: &GaussianState,
    h: &QuadraticHamiltonian,
    t: f64,
    dt: f64,
) -> Result<(CMat, C64)> {
    let n = g0.n();
    let g = linalg::real_to_complex(&h.generator());
    let steps = ((t.abs() / dt).ceil() as usize).max(1);
    let step = t / steps as f64;
    let mut frame = stacked_frame(g0.a());
    let mut arg = 0.0f64;
    for _ in 0..steps {
        frame = rk4_step_c(&g, &frame, step);
        let det = frame.view((n, 0), (n, n)).determinant();
        arg = linalg::unwrap_near(arg, det.arg());
    }
    let b_t: CMat = frame.view((0, 0), (n, n)).into();
    let c_t: CMat = frame.view((n, 0), (n, n)).into();
    let det = c_t.clone().determinant();
    let c_inv = c_t
        .try_inverse()
        .ok_or_else(|| Error::Internal("frame coordinate block singular".into()))?;
    let a = linalg::symmetric_part(&(b_t * c_inv));
    let sqrt_det = C64::from_polar(det.norm().sqrt(), arg / 2.0);
    let c_val = g0.c() * (-C64::i() * h.epsilon * t).exp() / sqrt_det;
    Ok((a, c_val))
}

/// Restriction of u_t to the constraint plane: the matrix m with
/// u_t X⁽ᵃ⁾ = Σ_b m_ba X⁽ᵇ⁾, and its Jacobian Δ(u_t⁰) = |det m| (static
/// plane, equal measures). Errors when u_t does not preserve the plane.
pub fn flow_restriction_to_constraints(
    flow: &ClassicalFlow,
    l: &ConstraintSet,
    tol: f64,
) -> Result<(RMat, f64)> {
    let k = l.k();
    if k == 0 {
        return Ok((RMat::zeros(0, 0), 1.0));
    }
    let basis = l.subspace().stacked();
    let mut m = RMat::zeros(k, k);
    for a in 0..k {
        let image = flow.apply(&l.basis()[a])?;
        let (coef, resid) = linalg::least_squares(&basis, &image.coords());
        if resid > tol {
            return Err(Error::EquivalenceNotPreserved(format!(
                "u_t moves the constraint plane (residual {resid:.3e})"
            )));
        }
        for b in 0..k {
            m[(b, a)] = coef[b].re;
        }
    }
    let delta = m.clone().determinant().abs();
    Ok((m, delta))
}

/// The transported projection with its branch diagnostics.
#[derive(Debug, Clone)]
pub struct ProjectedEvolution {
    pub projected: ProjectedGaussian,
    /// Jacobian of u_t restricted to the constraint plane.
    pub delta_u0: f64,
    /// Amplitude from the transport formula.
    pub c_check_transport: C64,
    /// Amplitude from projecting the transported state.
    pub c_check_projection: C64,
}

/// Transport the projected data: ř(A(t)) = u_t ř(A(0)) and
/// č(t) = č(0)·e^{−i∫Re ε}·√Δ(u_t⁰)/√det[Č(t) u_t Č(0)⁻¹], cross-checked
/// against projecting the transported Gaussian.
pub fn evolve_projected(
    g0: &GaussianState,
    h: &QuadraticHamiltonian,
    l: &ConstraintSet,
    t: f64,
) -> Result<ProjectedEvolution> {
    let n = g0.n();
    if l.ambient_n() != n || h.n != n {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    // The constraint plane must be preserved over [0, t].
    let flow_t = classical_flow(h, t);
    let (_, delta_u0) = flow_restriction_to_constraints(&flow_t, l, 1e-8)?;

    let start = crate::gaussian::project_eta_detailed(g0, l)?;
    let h_frame0 = germ::h_germ(g0.a(), l)?.frame();
    let c_h0: CMat = h_frame0.view((n, 0), (n, n)).into();
    let c_h0_inv = c_h0.try_inverse().ok_or_else(|| {
        Error::DegenerateProjection("projected frame is singular at t = 0".into())
    })?;

    // March the H-germ frame along the flow, unwrapping arg det of the
    // coordinate block.
    let mut steps = initial_steps(h, t);
    let (det_abs, arg) = 'refine: loop {
        let u_step =
            linalg::real_to_complex(&linalg::expm(&h.generator().scale(t / steps as f64)));
        let mut frame = h_frame0.clone();
        let mut arg = 0.0f64;
        let mut ok = true;
        for _ in 0..steps {
            frame = &u_step * frame;
            let det = (CMat::from(frame.view((n, 0), (n, n))) * &c_h0_inv).determinant();
            let unwrapped = linalg::unwrap_near(arg, det.arg());
            if (unwrapped - arg).abs() >= std::f64::consts::FRAC_PI_2 {
                ok = false;
                break;
            }
            arg = unwrapped;
        }
        if ok {
            let u_full = linalg::real_to_complex(flow_t.matrix());
            let frame_t = u_full * &h_frame0;
            let det = (CMat::from(frame_t.view((n, 0), (n, n))) * &c_h0_inv).determinant();
            break 'refine (det.norm(), linalg::unwrap_near(arg, det.arg()));
        }
        steps *= 2;
        if steps > (1 << 26) {
            return Err(Error::Internal("projected branch tracking diverged".into()));
        }
    };

    let sqrt_det = C64::from_polar(det_abs.sqrt(), arg / 2.0);
    let phase = (-C64::i() * C64::new(h.epsilon.re, 0.0) * t).exp();
    let c_check_transport =
        start.projected.c_check() * phase * C64::new(delta_u0.sqrt(), 0.0) / sqrt_det;

    // Independent route: evolve the state, project, compare.
    let evolved = evolve_gaussian(g0, h, t)?;
    let projected = project_eta(&evolved, l)?;
    let c_check_projection = projected.c_check();
    let diff = (c_check_transport - c_check_projection).norm();
    if diff > 1e-8 * c_check_transport.norm().max(c_check_projection.norm()) {
        return Err(Error::RouteDisagreement {
            a: c_check_transport.norm(),
            b: c_check_projection.norm(),
            detail: format!("projected amplitude transport vs reprojection (|Δ| = {diff:.3e})"),
        });
    }

    // Subspace transport: ř(A(t)) = u_t ř(A(0)).
    let u_full = linalg::real_to_complex(flow_t.matrix());
    let transported = u_full * &h_frame0;
    let fresh = germ::h_germ(evolved.a(), l)?.frame();
    let angle = linalg::max_principal_angle(&transported, &fresh);
    if angle > 1e-7 {
        return Err(Error::Internal(format!(
            "transported germ deviates from the evolved germ (angle {angle:.3e})"
        )));
    }

    Ok(ProjectedEvolution {
        projected,
        delta_u0,
        c_check_transport,
        c_check_projection,
    })
}

/// Report of [`check_evolution_unitarity`].
#[derive(Debug, Clone)]
pub struct UnitarityReport {
    /// Largest principal angle between u_t L and L over the grid.
    pub max_constraint_angle: f64,
    pub constraint_preserved: bool,
    /// Largest |½ d/dt ln Δ(u_t⁰) − Im ε| over interior grid points.
    pub im_eps_residual: f64,
    pub im_eps_condition: bool,
    /// Relative drift of ((f,f)) along the flow for the probe state,
    /// evaluated when both conditions hold.
    pub norm_drift: Option<f64>,
    pub unitary: bool,
}

/// Check the two evolution-unitarity conditions — u_t L = L and
/// Im ε = ½ d/dt ln Δ(u_t⁰) — and, when both hold, verify norm conservation
/// along the flow with a probe Gaussian.
pub fn check_evolution_unitarity(
    h: &QuadraticHamiltonian,
    l: &ConstraintSet,
    t_grid: &[f64],
) -> Result<UnitarityReport> {
    if t_grid.len() < 3 {
        return Err(Error::InvalidInput(
            "need at least three grid times for the derivative check".into(),
        ));
    }
    let n = h.n;
    let l_frame = l.subspace().stacked();
    let mut max_angle = 0.0f64;
    let mut deltas = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let flow = classical_flow(h, t);
        if l.k() > 0 {
            let image = linalg::real_to_complex(flow.matrix()) * &l_frame;
            max_angle = max_angle.max(linalg::max_principal_angle(&image, &l_frame));
        }
        match flow_restriction_to_constraints(&flow, l, 1e-6) {
            Ok((_, d)) => deltas.push(Some(d)),
            Err(Error::EquivalenceNotPreserved(_)) => deltas.push(None),
            Err(e) => return Err(e),
        }
    }
    let constraint_preserved = max_angle <= 1e-8 && deltas.iter().all(|d| d.is_some());

    // Norm conservation requires Im ε = −½ d/dt ln Δ(u_t⁰): an expanding
    // constraint orbit inflates the averaging measure, so the amplitude has
    // to decay to compensate. (The sign is fixed by the exact dilation
    // flow H = λ(q̂p̂+p̂q̂)/2 against the coordinate-axis constraint, whose
    // solutions scale the constrained norm by exp(λt + 2·Im ε·t).)
    let mut im_eps_residual = f64::INFINITY;
    if constraint_preserved {
        im_eps_residual = 0.0;
        for j in 1..t_grid.len() - 1 {
            let (d_prev, d_next) = (deltas[j - 1].unwrap(), deltas[j + 1].unwrap());
            let dt = t_grid[j + 1] - t_grid[j - 1];
            let dln = (d_next.ln() - d_prev.ln()) / dt;
            im_eps_residual = im_eps_residual.max((0.5 * dln + h.epsilon.im).abs());
        }
    }
    let im_eps_condition = constraint_preserved && im_eps_residual <= 1e-6;

    let norm_drift = if im_eps_condition {
        let probe = GaussianState::new(
            C64::new(1.0, 0.0),
            CMat::identity(n, n).map(|z| z * C64::i()),
        )?;
        let base = crate::gaussian::norm_constrained(&probe, l)?;
        let mut drift = 0.0f64;
        for &t in t_grid {
            let evolved = evolve_gaussian(&probe, h, t)?;
            let nt = crate::gaussian::norm_constrained(&evolved, l)?;
            drift = drift.max((nt - base).abs() / base);
        }
        Some(drift)
    } else {
        None
    };

    Ok(UnitarityReport {
        max_constraint_angle: max_angle,
        constraint_preserved,
        im_eps_residual,
        im_eps_condition,
        norm_drift,
        unitary: im_eps_condition && norm_drift.map(|d| d <= 1e-8).unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c64(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn oscillator() -> QuadraticHamiltonian {
        QuadraticHamiltonian::new(
            RMat::identity(1, 1),
            RMat::zeros(1, 1),
            RMat::identity(1, 1),
            c64(0.0, 0.0),
        )
        .unwrap()
    }

    fn xi1xi2() -> QuadraticHamiltonian {
        QuadraticHamiltonian::new(
            RMat::zeros(2, 2),
            RMat::zeros(2, 2),
            RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            c64(0.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn flow_rotation() {
        let h = oscillator();
        let t = 0.7f64;
        let u = classical_flow(&h, t);
        // u_t(p,q) = (p cos t − q sin t, q cos t + p sin t).
        let m = u.matrix();
        assert_relative_eq!(m[(0, 0)], t.cos(), max_relative = 1e-12);
        assert_relative_eq!(m[(0, 1)], -t.sin(), max_relative = 1e-12);
        assert_relative_eq!(m[(1, 0)], t.sin(), max_relative = 1e-12);
        assert_relative_eq!(m[(1, 1)], t.cos(), max_relative = 1e-12);
        assert!(u.symplectic_residual() < 1e-12);

        let id = classical_flow(&h, 0.0);
        assert!((id.matrix() - RMat::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn flow_xi1xi2_on_constraint_complement() {
        // Ṗ₁ = −Q₂, Ṗ₂ = −Q₁, Q̇ = 0: linear growth in the momenta.
        let h = xi1xi2();
        let g = h.generator();
        let want = RMat::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 0.0, -1.0, //
                0.0, 0.0, -1.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0,
            ],
        );
        assert!((g - want).norm() < 1e-14);
        let u = classical_flow(&h, 10.0);
        let y = PhaseVector::from_real(&[0.0, 0.0], &[0.0, 1.0]).unwrap();
        let moved = u.apply(&y).unwrap();
        assert_relative_eq!(moved.p()[0].re, -10.0, max_relative = 1e-12);
    }

    #[test]
    fn rk4_matches_exponential() {
        let h = QuadraticHamiltonian::new(
            RMat::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8]),
            RMat::from_row_slice(2, 2, &[0.2, -0.5, 0.1, 0.4]),
            RMat::from_row_slice(2, 2, &[0.9, -0.2, -0.2, 1.1]),
            c64(0.0, 0.0),
        )
        .unwrap();
        let exact = classical_flow(&h, 2.0);
        let rk = classical_flow_rk4(&h, 2.0, 1e-3).unwrap();
        assert!((exact.matrix() - rk.matrix()).norm() < 1e-9);
    }

    #[test]
    fn oscillator_gaussian_is_stationary() {
        let h = oscillator();
        let g0 = GaussianState::new(c64(1.0, 0.0), CMat::from_element(1, 1, C64::i())).unwrap();
        for &t in &[0.4, 1.0, 3.7, 9.0] {
            let out = evolve_gaussian(&g0, &h, t).unwrap();
            assert!((out.a()[(0, 0)] - C64::i()).norm() < 1e-10);
            let want = (-C64::i() * (t / 2.0)).exp();
            assert!((out.c() - want).norm() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn scalar_term_only_rotates_amplitude() {
        let h = QuadraticHamiltonian::new(
            RMat::zeros(1, 1),
            RMat::zeros(1, 1),
            RMat::zeros(1, 1),
            c64(0.7, 0.0),
        )
        .unwrap();
        let g0 = GaussianState::new(c64(1.0, 0.0), CMat::from_element(1, 1, c64(0.2, 1.0))).unwrap();
        let out = evolve_gaussian(&g0, &h, 2.0).unwrap();
        assert!((out.a() - g0.a()).norm() < 1e-14);
        assert!((out.c() - (-C64::i() * c64(0.7, 0.0) * 2.0).exp()).norm() < 1e-12);
    }

    #[test]
    fn riccati_route_agrees() {
        let h = QuadraticHamiltonian::new(
            RMat::from_row_slice(1, 1, &[0.9]),
            RMat::from_row_slice(1, 1, &[0.4]),
            RMat::from_row_slice(1, 1, &[1.2]),
            c64(0.1, 0.0),
        )
        .unwrap();
        let g0 = GaussianState::new(c64(0.8, 0.2), CMat::from_element(1, 1, c64(0.3, 0.9))).unwrap();
        let t = 1.3;
        let exact = evolve_gaussian_detailed(&g0, &h, t).unwrap();
        let rk = riccati_evolve(&g0, &h, t).unwrap();
        assert!((&rk.a - exact.state.a()).norm() < 1e-8);
        assert!((rk.c - exact.state.c()).norm() < 1e-8);
    }

    #[test]
    fn spreading_under_inverted_oscillator() {
        let h = QuadraticHamiltonian::new(
            RMat::identity(1, 1),
            RMat::zeros(1, 1),
            -RMat::identity(1, 1),
            c64(0.0, 0.0),
        )
        .unwrap();
        let g0 = GaussianState::new(c64(1.0, 0.0), CMat::from_element(1, 1, C64::i())).unwrap();
        let early = evolve_gaussian_detailed(&g0, &h, 0.0).unwrap();
        let late = evolve_gaussian_detailed(&g0, &h, 10.0).unwrap();
        assert!(late.min_im_eig < 0.5 * early.min_im_eig);
    }

    #[test]
    fn reduction_xi1xi2_is_trivial() {
        let h = xi1xi2();
        let l = ConstraintSet::from_real_rows(2, &[vec![1.0, 0.0, 0.0, 0.0]], 1.0).unwrap();
        let g = crate::phase::build_gauge_plane(&l).unwrap();
        let red = reduce_hamiltonian(&h, &l, &g).unwrap();
        assert!(red.compatible);
        let reduced = red.reduced.unwrap();
        assert!(reduced.block_norm() < 1e-12);
        assert!(reduced.epsilon().norm() < 1e-12);
    }

    #[test]
    fn reduction_flags_incompatible() {
        // H = ½ q₁², L = span{(p=0, q=(1,0))}: Γ couples the gauge plane to
        // itself.
        let mut h_qq = RMat::zeros(2, 2);
        h_qq[(0, 0)] = 1.0;
        let h = QuadraticHamiltonian::new(RMat::zeros(2, 2), RMat::zeros(2, 2), h_qq, c64(0.0, 0.0))
            .unwrap();
        let l = ConstraintSet::from_real_rows(2, &[vec![0.0, 0.0, 1.0, 0.0]], 1.0).unwrap();
        let g = crate::phase::build_gauge_plane(&l).unwrap();
        let red = reduce_hamiltonian(&h, &l, &g).unwrap();
        assert!(!red.compatible);
        assert!(red.reduced.is_none());
    }

    #[test]
    fn reduction_k0_is_identity() {
        let h = oscillator();
        let l = ConstraintSet::empty(1);
        let g = crate::phase::build_gauge_plane(&l).unwrap();
        let red = reduce_hamiltonian(&h, &l, &g).unwrap();
        assert!(red.compatible);
        let r = red.reduced.unwrap();
        assert!((r.h_pp() - h.h_pp()).norm() < 1e-12);
        assert!((r.h_qq() - h.h_qq()).norm() < 1e-12);
    }

    #[test]
    fn unitarity_oscillator() {
        let h = oscillator();
        let l = ConstraintSet::empty(1);
        let grid: Vec<f64> = (0..=8).map(|i| 0.25 * i as f64).collect();
        let rep = check_evolution_unitarity(&h, &l, &grid).unwrap();
        assert!(rep.unitary, "{rep:?}");
    }

    #[test]
    fn unitarity_expanding_constraint_needs_imaginary_epsilon() {
        // H with H_QP = λ expands the q-axis constraint at rate e^{λt};
        // Im ε = −λ/2 restores unitarity.
        let lam = 0.3;
        let h = QuadraticHamiltonian::new(
            RMat::zeros(1, 1),
            RMat::from_row_slice(1, 1, &[lam]),
            RMat::zeros(1, 1),
            c64(0.0, -lam / 2.0),
        )
        .unwrap();
        let l = ConstraintSet::from_real_rows(1, &[vec![0.0, 1.0]], 1.0).unwrap();
        let grid: Vec<f64> = (0..=8).map(|i| 0.2 * i as f64).collect();
        let rep = check_evolution_unitarity(&h, &l, &grid).unwrap();
        assert!(rep.constraint_preserved);
        assert!(rep.im_eps_condition, "residual {}", rep.im_eps_residual);
        assert!(rep.unitary, "{rep:?}");

        // Wrong Im ε: detected.
        let bad = h.with_epsilon(c64(0.0, 0.0));
        let rep_bad = check_evolution_unitarity(&bad, &l, &grid).unwrap();
        assert!(!rep_bad.im_eps_condition);
    }

    #[test]
    fn unitarity_detects_rotated_constraints() {
        let h = oscillator();
        let l = ConstraintSet::from_real_rows(1, &[vec![0.0, 1.0]], 1.0).unwrap();
        let grid: Vec<f64> = (0..=4).map(|i| 0.3 * i as f64).collect();
        let rep = check_evolution_unitarity(&h, &l, &grid).unwrap();
        assert!(!rep.constraint_preserved);
        assert!(!rep.unitary);
    }

    #[test]
    fn projected_evolution_static_case() {
        // Free motion H = ½p² leaves the q-axis constraint invariant
        // pointwise, so Δ(u_t⁰) = 1 and č stays constant.
        let h = QuadraticHamiltonian::new(
            RMat::identity(1, 1),
            RMat::zeros(1, 1),
            RMat::zeros(1, 1),
            c64(0.0, 0.0),
        )
        .unwrap();
        let l = ConstraintSet::from_real_rows(1, &[vec![0.0, 1.0]], 1.0).unwrap();
        let g0 = GaussianState::new(c64(1.0, 0.0), CMat::from_element(1, 1, C64::i())).unwrap();
        let t = 0.9;
        let out = evolve_projected(&g0, &h, &l, t).unwrap();
        assert_relative_eq!(out.delta_u0, 1.0, max_relative = 1e-10);
        assert!((out.c_check_transport - out.c_check_projection).norm() < 1e-9);

        // t = 0 reduces to the plain projection.
        let out0 = evolve_projected(&g0, &h, &l, 0.0).unwrap();
        let direct = project_eta(&g0, &l).unwrap();
        assert!((out0.projected.c_check() - direct.c_check()).norm() < 1e-12);
    }

    #[test]
    fn projected_evolution_rejects_moving_constraints() {
        let h = oscillator();
        let l = ConstraintSet::from_real_rows(1, &[vec![0.0, 1.0]], 1.0).unwrap();
        let g0 = GaussianState::new(c64(1.0, 0.0), CMat::from_element(1, 1, C64::i())).unwrap();
        assert!(matches!(
            evolve_projected(&g0, &h, &l, 0.5),
            Err(Error::EquivalenceNotPreserved(_))
        ));
    }
}
