//! Gaussian states, Weyl-shifted exponential quadratics, the degenerate
//! (constraint-averaged) inner product in independent closed forms, and the
//! projection onto constraint-satisfying Gaussians.
//!
//! Conventions. A Gaussian state is c·exp(½i ξᵀAξ) with Im A ≻ 0. The
//! constrained inner product ((f,g)) averages ⟨f, e^{iΩ(X)} g⟩ over the
//! constraint plane with its invariant measure. Its closed form is computed
//! two ways — through the germ data (Δ(C), Δ(P₋)) and through the
//! coordinate matrices M and K — and the two must agree; disagreement is an
//! error, never an average.
//!
//! One display-level correction is load-bearing here: the projected matrix
//! is Ǎ = A + i·(𝒫−A𝒬) M⁻¹ (𝒫−A𝒬)ᵀ, with an explicit factor i in front of
//! the correction term. Dropping the i is inconsistent with the direct
//! Gaussian integral and with the one-dimensional closed form Ǎ = 𝒫/𝒬;
//! both confirmations are kept as tests here and in the oracle suite.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::germ;
use crate::linalg::{self, CMat, CVec, RVec};
use crate::phase::{ConstraintSet, MeasuredSubspace, PhaseVector};

const PI: f64 = std::f64::consts::PI;

/// A Gaussian state (n, c, A) with A symmetric and Im A ≻ 0.
#[derive(Debug, Clone)]
pub struct GaussianState {
    n: usize,
    c: C64,
    a: CMat,
}

impl GaussianState {
    pub fn new(c: C64, a: CMat) -> Result<Self> {
        germ::validate_gaussian_matrix(&a)?;
        if c.norm() == 0.0 || !c.is_finite() {
            return Err(Error::InvalidInput("amplitude c must be nonzero".into()));
        }
        Ok(Self { n: a.nrows(), c, a })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> C64 {
        self.c
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn to_exp_quadratic(&self) -> ExpQuadratic {
        ExpQuadratic {
            n: self.n,
            c: self.c,
            a: self.a.clone(),
            b: CVec::zeros(self.n),
        }
    }
}

/// c·exp(i(½ ξᵀAξ + bᵀξ)) with A symmetric, Im A ⪰ 0.
///
/// The boundary Im A ⪰ 0 (not ≻ 0) is allowed so intermediate values of the
/// Weyl calculus stay representable; norms require strict positivity and
/// fail with [`Error::NotIntegrable`] otherwise.
#[derive(Debug, Clone)]
pub struct ExpQuadratic {
    pub n: usize,
    pub c: C64,
    pub a: CMat,
    pub b: CVec,
}

impl ExpQuadratic {
    pub fn new(c: C64, a: CMat, b: CVec) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() != b.len() || a.nrows() == 0 {
            return Err(Error::InvalidInput(
                "exponential quadratic dimensions mismatch".into(),
            ));
        }
        if !linalg::is_symmetric(&a, 1e-10) {
            return Err(Error::InvalidInput("matrix must be symmetric".into()));
        }
        if linalg::min_eig_sym(&linalg::imag_part(&a)) < -1e-12 {
            return Err(Error::InvalidInput(
                "imaginary part must be positive semi-definite".into(),
            ));
        }
        Ok(Self {
            n: a.nrows(),
            c,
            a,
            b,
        })
    }

    /// Pointwise value at real ξ.
    pub fn eval(&self, xi: &RVec) -> C64 {
        let xic = xi.map(|x| C64::new(x, 0.0));
        let quad = (xic.transpose() * &self.a * &xic)[(0, 0)];
        let lin = self.b.dot(&xic);
        self.c * (C64::i() * (quad * 0.5 + lin)).exp()
    }

    /// Equality as functions, up to `tol` on each datum.
    pub fn approx_eq(&self, other: &ExpQuadratic, tol: f64) -> bool {
        self.n == other.n
            && (self.c - other.c).norm() <= tol * self.c.norm().max(1.0)
            && (&self.a - &other.a).norm() <= tol * self.a.norm().max(1.0)
            && (&self.b - &other.b).norm() <= tol * self.b.norm().max(1.0)
    }
}

/// (αᵀξ + γ)·s — the exact image of an exponential quadratic under a single
/// phase-space operator Ω(X).
#[derive(Debug, Clone)]
pub struct LinearExpQuadratic {
    pub alpha: CVec,
    pub gamma: C64,
    pub base: ExpQuadratic,
}

/// The Weyl shift (e^{iΩ(P,Q)}s)(ξ) = e^{i(Pᵀξ − ½PᵀQ)} s(ξ−Q), evaluated
/// symbolically on the (c, A, b) data. Complex shifts are permitted.
pub fn weyl_apply(x: &PhaseVector, s: &ExpQuadratic) -> Result<ExpQuadratic> {
    if x.dim() != s.n {
        return Err(Error::InvalidInput("weyl shift dimension mismatch".into()));
    }
    let p = x.p();
    let q = x.q();
    let aq = &s.a * q;
    // Phase: −½PᵀQ + ½QᵀAQ − bᵀQ; the linear term gains P − AQ.
    let half = C64::new(0.5, 0.0);
    let phase = -half * p.dot(q) + half * q.dot(&aq) - s.b.dot(q);
    Ok(ExpQuadratic {
        n: s.n,
        c: s.c * (C64::i() * phase).exp(),
        a: s.a.clone(),
        b: &s.b + p - aq,
    })
}

/// The operator Ω(P,Q) = Σ (P_j ξ_j − Q_j (1/i)∂_j) applied to an
/// exponential quadratic: an affine polynomial times the same function.
pub fn omega_apply(x: &PhaseVector, s: &ExpQuadratic) -> Result<LinearExpQuadratic> {
    if x.dim() != s.n {
        return Err(Error::InvalidInput("omega dimension mismatch".into()));
    }
    // (1/i)∂_j s = (A ξ + b)_j s.
    let alpha = x.p() - &s.a * x.q();
    let gamma = -x.q().dot(&s.b);
    Ok(LinearExpQuadratic {
        alpha,
        gamma,
        base: s.clone(),
    })
}

struct GaussianIntegralData {
    /// Inverse of T = −i(A₂ − A₁*); Re T ≻ 0 on integrable pairs.
    t_inv: CMat,
    u: CVec,
    value: C64,
}

fn gaussian_integral(s1: &ExpQuadratic, s2: &ExpQuadratic) -> Result<GaussianIntegralData> {
    if s1.n != s2.n {
        return Err(Error::InvalidInput("inner product dimension mismatch".into()));
    }
    let n = s1.n;
    let s = &s2.a - s1.a.map(|z| z.conj());
    let min_im = linalg::min_eig_sym(&linalg::imag_part(&s));
    if min_im <= 0.0 {
        return Err(Error::NotIntegrable(format!(
            "Im(A₂ − A₁*) must be positive-definite, min eigenvalue {min_im:.3e}"
        )));
    }
    let t = s.map(|z| z * C64::new(0.0, -1.0));
    let u = (&s2.b - s1.b.map(|z| z.conj())).map(|z| z * C64::i());
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotIntegrable("quadratic form not invertible".into()))?;
    let sqrt_det_t = linalg::sqrt_det(&t)?;
    let exponent = (u.transpose() * &t_inv * &u)[(0, 0)] * 0.5;
    let value = s1.c.conj() * s2.c * C64::new((2.0 * PI).powf(n as f64 / 2.0), 0.0)
        / sqrt_det_t
        * exponent.exp();
    Ok(GaussianIntegralData { t_inv, u, value })
}

/// Closed-form ∫ conj(s1)(ξ) s2(ξ) dξ over ℝⁿ.
pub fn exp_quadratic_inner(s1: &ExpQuadratic, s2: &ExpQuadratic) -> Result<C64> {
    Ok(gaussian_integral(s1, s2)?.value)
}

/// Closed-form ∫ conj(s1)(ξ) (αᵀξ + γ) s2(ξ) dξ for a linear factor riding
/// on s2.
pub fn exp_quadratic_inner_linear(s1: &ExpQuadratic, lin: &LinearExpQuadratic) -> Result<C64> {
    let data = gaussian_integral(s1, &lin.base)?;
    let mean = &data.t_inv * &data.u;
    Ok(data.value * (lin.gamma + lin.alpha.dot(&mean)))
}

/// The coordinate matrices of the constrained norm:
/// M_ab = i Σ_j [𝒫ʲ⁽ᵃ⁾𝒬ʲ⁽ᵇ⁾ − 𝒬⁽ᵃ⁾·(A𝒬⁽ᵇ⁾)] and
/// K = (A−A*)/i + (𝒫−A𝒬) M⁻¹ (𝒫−A𝒬)ᵀ.
fn coordinate_matrices(a: &CMat, l: &ConstraintSet) -> Result<(CMat, CMat, CMat)> {
    let p_l = l.p_matrix();
    let q_l = l.q_matrix();
    let m = (p_l.transpose() * &q_l - q_l.transpose() * a * &q_l).map(|z| z * C64::i());
    let w = &p_l - a * &q_l;
    let m_inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateProjection("coordinate matrix M is singular".into()))?;
    let two_im = (a - a.map(|z| z.conj())).map(|z| z / C64::i());
    let k_mat = two_im + &w * &m_inv * w.transpose();
    Ok((m, m_inv, k_mat))
}

/// Full diagnostic output of [`norm_constrained`].
#[derive(Debug, Clone)]
pub struct NormBreakdown {
    pub norm: f64,
    pub germ_route: f64,
    /// None when the constraint plane degenerates on the coordinate plane
    /// (M singular), where only the germ route applies.
    pub coordinate_route: Option<f64>,
    pub delta_c: f64,
    pub delta_p_minus: f64,
    pub m_matrix: Option<CMat>,
    pub k_matrix: Option<CMat>,
}

/// ((f,f)) by both closed forms, with the agreement assertion.
pub fn norm_constrained_detailed(g: &GaussianState, l: &ConstraintSet) -> Result<NormBreakdown> {
    if l.ambient_n() != g.n {
        return Err(Error::InvalidInput("constraint dimension mismatch".into()));
    }
    let n = g.n as f64;
    let k = l.k() as f64;
    let c2 = g.c.norm_sqr();
    let delta_c = germ::delta_c(&g.a)?;
    let pm = germ::p_minus(&g.a, l)?;
    let delta_p_minus = pm.jacobian();
    let prefactor = (2.0 * PI).powf((k + n) / 2.0) * c2;
    let germ_route = prefactor * delta_c / delta_p_minus;

    let coordinate = if l.k() == 0 {
        Some((germ_route, None, None))
    } else {
        match coordinate_matrices(&g.a, l) {
            Ok((m, _, k_mat)) => {
                let sqrt_m = linalg::sqrt_det(&m)?;
                let sqrt_k = linalg::sqrt_det(&k_mat)?;
                let value = C64::new(prefactor * l.measure_scale(), 0.0) / (sqrt_k * sqrt_m);
                if value.im.abs() > 1e-8 * value.re.abs().max(1e-300) {
                    return Err(Error::Internal(format!(
                        "coordinate-route norm has imaginary part {:.3e}",
                        value.im
                    )));
                }
                Some((value.re, Some(m), Some(k_mat)))
            }
            Err(Error::DegenerateProjection(_)) => None,
            Err(e) => return Err(e),
        }
    };

    let (coordinate_route, m_matrix, k_matrix) = match coordinate {
        Some((v, m, kk)) => {
            let scale = germ_route.abs().max(v.abs());
            if (germ_route - v).abs() > 1e-9 * scale {
                return Err(Error::RouteDisagreement {
                    a: germ_route,
                    b: v,
                    detail: "constrained norm: germ route vs coordinate route".into(),
                });
            }
            (Some(v), m, kk)
        }
        None => (None, None, None),
    };

    if !(germ_route > 0.0) {
        return Err(Error::Internal(format!(
            "constrained norm must be positive, got {germ_route}"
        )));
    }
    Ok(NormBreakdown {
        norm: germ_route,
        germ_route,
        coordinate_route,
        delta_c,
        delta_p_minus,
        m_matrix,
        k_matrix,
    })
}

/// ((f,f)) of a Gaussian state under the constraint measure.
pub fn norm_constrained(g: &GaussianState, l: &ConstraintSet) -> Result<f64> {
    Ok(norm_constrained_detailed(g, l)?.norm)
}

/// The projected Gaussian F = ηf with data (Ǎ, č).
#[derive(Debug, Clone)]
pub struct ProjectedGaussian {
    n: usize,
    c_check: C64,
    a_check: CMat,
}

impl ProjectedGaussian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c_check(&self) -> C64 {
        self.c_check
    }

    pub fn a_check(&self) -> &CMat {
        &self.a_check
    }

    pub fn to_exp_quadratic(&self) -> ExpQuadratic {
        ExpQuadratic {
            n: self.n,
            c: self.c_check,
            a: self.a_check.clone(),
            b: CVec::zeros(self.n),
        }
    }
}

/// Diagnostic output of [`project_eta`].
#[derive(Debug, Clone)]
pub struct EtaProjection {
    pub projected: ProjectedGaussian,
    pub c_check_direct: C64,
    pub c_check_germ: C64,
    pub m_matrix: CMat,
}

/// Project a Gaussian onto the constraint-satisfying family:
/// Ǎ = A + i(𝒫−A𝒬)M⁻¹(𝒫−A𝒬)ᵀ and č = J·c·(2π)^{k/2}/√det M, with č also
/// recomputed through the germ frames and both values required to agree.
pub fn project_eta_detailed(g: &GaussianState, l: &ConstraintSet) -> Result<EtaProjection> {
    if l.ambient_n() != g.n {
        return Err(Error::InvalidInput("constraint dimension mismatch".into()));
    }
    let k = l.k();
    if k == 0 {
        return Ok(EtaProjection {
            projected: ProjectedGaussian {
                n: g.n,
                c_check: g.c,
                a_check: g.a.clone(),
            },
            c_check_direct: g.c,
            c_check_germ: g.c,
            m_matrix: CMat::zeros(0, 0),
        });
    }
    let q_l = l.q_matrix();
    if linalg::rank(&q_l, crate::phase::RANK_TOL) < k {
        return Err(Error::DegenerateProjection(
            "constraint plane degenerates on the coordinate plane".into(),
        ));
    }
    let (m, m_inv, _) = coordinate_matrices(&g.a, l)?;
    let w = l.p_matrix() - &g.a * &q_l;
    let a_check =
        linalg::symmetric_part(&(&g.a + (&w * &m_inv * w.transpose()).map(|z| z * C64::i())));

    let sqrt_m = linalg::sqrt_det(&m)?;
    let c_check_direct =
        g.c * C64::new(l.measure_scale() * (2.0 * PI).powf(k as f64 / 2.0), 0.0) / sqrt_m;

    // Germ route: č = c (2π)^{k/2} √det(Č⁻¹ C 𝒫₋) / Δ(P₋) over the aligned
    // frames [r₋ | r_⊥] and [L | r_⊥], with 𝒫₋ = (1/i)(C⁺B̌ − B⁺Č).
    let (pm, s_frame, h_frame) = germ::aligned_frames(&g.a, l)?;
    let b_s = stack_part(g.n, &s_frame, |v| v.p().clone());
    let c_s = stack_part(g.n, &s_frame, |v| v.q().clone());
    let b_h = stack_part(g.n, &h_frame, |v| v.p().clone());
    let c_h = stack_part(g.n, &h_frame, |v| v.q().clone());
    let p_minus_full = (c_s.adjoint() * &b_h - b_s.adjoint() * &c_h).map(|z| z / C64::i());
    let c_h_inv = c_h.clone().try_inverse().ok_or_else(|| {
        Error::DegenerateProjection("coordinate projection of the extended germ is singular".into())
    })?;
    let op = c_h_inv * &c_s * &p_minus_full;
    let sqrt_det_op = linalg::sqrt_det(&op)?;
    let c_check_germ = g.c * C64::new((2.0 * PI).powf(k as f64 / 2.0), 0.0) * sqrt_det_op
        / C64::new(pm.jacobian(), 0.0);

    let diff = (c_check_direct - c_check_germ).norm();
    if diff > 1e-8 * c_check_direct.norm().max(c_check_germ.norm()) {
        return Err(Error::RouteDisagreement {
            a: c_check_direct.norm(),
            b: c_check_germ.norm(),
            detail: format!(
                "projected amplitude: direct √det M route vs germ route (|Δ| = {diff:.3e})"
            ),
        });
    }

    // Ǎ𝒬 = 𝒫 must hold on the constraint block.
    let resid = (&a_check * &q_l - l.p_matrix()).norm();
    if resid > 1e-9 * (a_check.norm() * q_l.norm()).max(1.0) {
        return Err(Error::Internal(format!(
            "projected matrix fails Ǎ𝒬 = 𝒫 (residual {resid:.3e})"
        )));
    }

    Ok(EtaProjection {
        projected: ProjectedGaussian {
            n: g.n,
            c_check: c_check_direct,
            a_check,
        },
        c_check_direct,
        c_check_germ,
        m_matrix: m,
    })
}

pub fn project_eta(g: &GaussianState, l: &ConstraintSet) -> Result<ProjectedGaussian> {
    Ok(project_eta_detailed(g, l)?.projected)
}

fn stack_part(n: usize, vs: &[PhaseVector], part: impl Fn(&PhaseVector) -> CVec) -> CMat {
    if vs.is_empty() {
        return CMat::zeros(n, 0);
    }
    let cols: Vec<CVec> = vs.iter().map(part).collect();
    CMat::from_columns(&cols)
}

/// ((f₁,f₂)) computed as ⟨f₁, ηf₂⟩ through the projection.
pub fn inner_constrained(g1: &GaussianState, g2: &GaussianState, l: &ConstraintSet) -> Result<C64> {
    if g1.n != g2.n {
        return Err(Error::InvalidInput("state dimension mismatch".into()));
    }
    let f2 = project_eta(g2, l)?;
    exp_quadratic_inner(&g1.to_exp_quadratic(), &f2.to_exp_quadratic())
}

/// Report of [`dual_norm_identity_check`].
#[derive(Debug, Clone)]
pub struct DualNormReport {
    /// Δ from the closed form J·K·(2π)^k.
    pub delta_formula: f64,
    /// Δ recovered by nested quadrature of the pairing kernel.
    pub delta_numeric: f64,
    /// ((f,f)); the dual-space norm ((F,F))^∨ equals it by definition.
    pub norm: f64,
}

/// Verify the pairing constant Δ = J·K·(2π)^k by brute-force quadrature of
/// ∫dμ(X)∫dσ(Y) ρ(Y) e^{i⟨X,Y⟩} with a Gaussian profile ρ, and report the
/// state norm, which the dual-space inner product reproduces by definition
/// (that route is tautological and documented as such).
pub fn dual_norm_identity_check(
    g: &GaussianState,
    l: &ConstraintSet,
    gauge: &MeasuredSubspace,
) -> Result<DualNormReport> {
    let k = l.k();
    let j = l.measure_scale();
    let kk = gauge.measure_scale();
    let delta_formula = crate::phase::gauge_pairing_constant(k, j, kk);
    let norm = norm_constrained(g, l)?;
    if k == 0 {
        return Ok(DualNormReport {
            delta_formula,
            delta_numeric: 1.0,
            norm,
        });
    }
    if gauge.dim() != k {
        return Err(Error::InvalidInput("gauge plane dimension mismatch".into()));
    }
    let mut pairing = CMat::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            pairing[(a, b)] = crate::phase::skew_product(&l.basis()[a], &gauge.basis()[b])?;
        }
    }
    let pr = pairing.map(|z| z.re);
    // ρ(β) = exp(−½|β|²), so ρ(0) = 1. The β-integral of ρ(β)e^{iαᵀMβ}
    // equals (2π)^{k/2} exp(−½|Mᵀα|²): box the α-integral by the smallest
    // singular value of the pairing.
    let sv = pr.clone().svd(false, false).singular_values;
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-8) {
        return Err(Error::InvalidInput("pairing matrix is singular".into()));
    }
    let beta_box = 8.0;
    let alpha_box = 8.0 / smin;
    let nq = 96usize;
    let (nodes, weights) = linalg::gauss_legendre(nq);
    let scaled = |half: f64| -> Vec<(f64, f64)> {
        nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| (x * half, w * half))
            .collect()
    };
    let alpha_grid = scaled(alpha_box);
    let beta_grid = scaled(beta_box);
    let alpha_nodes = multi_index(k, nq);
    let beta_nodes = multi_index(k, nq);
    let values = crate::par::map_indexed(alpha_nodes.len(), |ia| {
        let idx_a = &alpha_nodes[ia];
        let alpha: Vec<f64> = idx_a.iter().map(|&i| alpha_grid[i].0).collect();
        let wa: f64 = idx_a.iter().map(|&i| alpha_grid[i].1).product();
        let mut inner = C64::new(0.0, 0.0);
        for idx_b in &beta_nodes {
            let beta: Vec<f64> = idx_b.iter().map(|&i| beta_grid[i].0).collect();
            let wb: f64 = idx_b.iter().map(|&i| beta_grid[i].1).product();
            let rho = (-0.5 * beta.iter().map(|b| b * b).sum::<f64>()).exp();
            let mut phase = 0.0;
            for a in 0..k {
                for b in 0..k {
                    phase += alpha[a] * pr[(a, b)] * beta[b];
                }
            }
            inner += C64::new(0.0, phase).exp() * rho * wb;
        }
        inner * wa
    });
    let integral: C64 = values.into_iter().sum();
    // Analytically the double integral equals (2π)^k ρ(0)/|det M_pair|, so
    // the |det| factor restores Δ for non-normalized pairings.
    let delta_numeric = j * kk * integral.re * pairing.determinant().norm();
    Ok(DualNormReport {
        delta_formula,
        delta_numeric,
        norm,
    })
}

fn multi_index(k: usize, base: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * base);
        for prefix in &out {
            for i in 0..base {
                let mut p = prefix.clone();
                p.push(i);
                next.push(p);
            }
        }
        out = next;
    }
    out
}
