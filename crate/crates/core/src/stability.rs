//! Stability of the reduced classical flow and the spectrum it generates.
//!
//! The pipeline: quotient the phase space by the constraint plane, express
//! the flow generator on the quotient, decide stability (bounded solutions
//! ⇔ imaginary spectrum + diagonalizability), split the solutions into
//! ν-normalized conjugate mode pairs, assemble the ground-state germ from
//! the modes, and enumerate the eigenvalues Σ β_I(N_I + ½). The ladder
//! algebra of the modes gives excited-state overlaps and the growth bounds
//! on quasi-Gaussian vectors without any function-space computation.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::dynamics::{reduce_hamiltonian, QuadraticHamiltonian};
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::germ::{self, GermBasis, GermKind};
use crate::linalg::{self, CMat, CVec, RMat};
use crate::phase::{build_gauge_plane, nu_form, skew_product, ConstraintSet, PhaseVector};

/// The quotient of the constraint complement by the constraint plane,
/// realized by representatives skew-orthogonal to both the constraints and
/// their gauge duals.
#[derive(Debug, Clone)]
pub struct QuotientSpace {
    l: ConstraintSet,
    representatives: Vec<PhaseVector>,
}

impl QuotientSpace {
    pub fn constraints(&self) -> &ConstraintSet {
        &self.l
    }

    pub fn representatives(&self) -> &[PhaseVector] {
        &self.representatives
    }

    pub fn dim(&self) -> usize {
        self.representatives.len()
    }

    fn rep_matrix(&self) -> CMat {
        let cols: Vec<CVec> = self.representatives.iter().map(|v| v.coords()).collect();
        CMat::from_columns(&cols)
    }

    /// Coordinates of `y` in the representative basis, modulo the
    /// constraint plane.
    pub fn coordinates_mod_l(&self, y: &PhaseVector) -> Result<CVec> {
        let n = self.l.ambient_n();
        let m = self.dim();
        let k = self.l.k();
        let mut basis = CMat::zeros(2 * n, m + k);
        basis.view_mut((0, 0), (2 * n, m)).copy_from(&self.rep_matrix());
        if k > 0 {
            basis
                .view_mut((0, m), (2 * n, k))
                .copy_from(&self.l.subspace().stacked());
        }
        let (coef, resid) = linalg::least_squares(&basis, &y.coords());
        if resid > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "vector lies outside the constraint complement (residual {resid:.3e})"
            )));
        }
        Ok(CVec::from_fn(m, |i, _| coef[i]))
    }
}

/// Build the quotient and the matrix of the reduced flow generator on it.
///
/// Requires the Hamiltonian to be constraint-compatible; the generator then
/// maps the constraint plane into itself and the complement into itself,
/// which is verified.
pub fn reduced_generator(
    h: &QuadraticHamiltonian,
    l: &ConstraintSet,
) -> Result<(QuotientSpace, RMat)> {
    let n = h.n();
    if l.ambient_n() != n {
        return Err(Error::InvalidInput("constraint dimension mismatch".into()));
    }
    let gauge = build_gauge_plane(l)?;
    let red = reduce_hamiltonian(h, l, &gauge)?;
    if !red.compatible {
        return Err(Error::Incompatible(format!(
            "gauge-block couplings do not vanish (relative norms {:.3e}, {:.3e})",
            red.obstruction.0, red.obstruction.1
        )));
    }
    let m = 2 * (n - l.k());
    let mut representatives = Vec::with_capacity(m);
    for j in 0..m {
        let col: CVec = red.adapted.column(2 * l.k() + j).into();
        representatives.push(PhaseVector::from_coords(&col)?);
    }
    let q = QuotientSpace {
        l: l.clone(),
        representatives,
    };

    let g_flow = h.generator();
    // The generator must map the constraint plane into itself.
    for x in l.basis() {
        let image = &g_flow * x.coords().map(|z| z.re);
        let (_, resid) = linalg::least_squares(
            &l.subspace().stacked(),
            &image.map(|x| C64::new(x, 0.0)),
        );
        if l.k() > 0 && resid > 1e-8 {
            return Err(Error::Incompatible(format!(
                "flow does not preserve the constraint plane (residual {resid:.3e})"
            )));
        }
    }
    let mut gr = RMat::zeros(m, m);
    for (i, v) in q.representatives.iter().enumerate() {
        let image = &g_flow * v.coords().map(|z| z.re);
        let image_pv = PhaseVector::from_coords(&image.map(|x| C64::new(x, 0.0)))?;
        let coords = q.coordinates_mod_l(&image_pv)?;
        for j in 0..m {
            let z = coords[j];
            if z.im.abs() > 1e-10 {
                return Err(Error::Internal("reduced generator is not real".into()));
            }
            gr[(j, i)] = z.re;
        }
    }
    Ok((q, gr))
}

/// Outcome of the boundedness test for the reduced flow.
#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub eigenvalues: Vec<C64>,
    /// max |Re λ| / ‖Gr‖.
    pub max_re_ratio: f64,
    /// Condition number of the eigenvector matrix (∞ when defective).
    pub eigvec_cond: f64,
}

/// Bounded solutions ⇔ purely imaginary eigenvalues and a diagonalizable
/// generator; diagonalizability is proxied by the eigenvector-matrix
/// condition number (threshold 1e8).
pub fn stability_check(gr: &RMat, tol: f64) -> StabilityVerdict {
    let m = gr.nrows();
    if m == 0 {
        return StabilityVerdict {
            stable: true,
            eigenvalues: Vec::new(),
            max_re_ratio: 0.0,
            eigvec_cond: 1.0,
        };
    }
    let scale = gr.norm().max(1e-300);
    let clusters = linalg::eigen_clusters_real(gr, 1e-8);
    let mut eigenvalues = Vec::new();
    let mut vectors: Vec<CVec> = Vec::new();
    let mut max_re = 0.0f64;
    for (lambda, basis) in &clusters {
        max_re = max_re.max(lambda.re.abs());
        for v in basis {
            eigenvalues.push(*lambda);
            vectors.push(v.clone());
        }
    }
    let (eigvec_cond, diagonalizable) = if vectors.len() == m {
        let vm = CMat::from_columns(&vectors);
        let c = linalg::cond(&vm);
        (c, c <= 1e8)
    } else {
        (f64::INFINITY, false)
    };
    StabilityVerdict {
        stable: max_re <= tol * scale.max(1.0) && diagonalizable,
        eigenvalues,
        max_re_ratio: max_re / scale,
        eigvec_cond,
    }
}

/// A ν-normalized eigen-solution of the reduced flow.
#[derive(Debug, Clone)]
pub struct Mode {
    y: PhaseVector,
    beta: f64,
}

impl Mode {
    pub fn vector(&self) -> &PhaseVector {
        &self.y
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// The n−k normal modes of a stable reduced flow.
#[derive(Debug, Clone)]
pub struct ModeSet {
    ambient_n: usize,
    k: usize,
    modes: Vec<Mode>,
}

impl ModeSet {
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn betas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.beta).collect()
    }

    pub fn ambient_n(&self) -> usize {
        self.ambient_n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// ν-orthonormality, pairwise isotropy, and the eigen-relation on the
    /// quotient, all at tolerance `tol`.
    pub fn validate(&self, q: &QuotientSpace, gr: &RMat, tol: f64) -> Result<()> {
        for (i, a) in self.modes.iter().enumerate() {
            for (j, b) in self.modes.iter().enumerate() {
                let nu = nu_form(&a.y, &b.y)?;
                let want = if i == j { 1.0 } else { 0.0 };
                if (nu - C64::new(want, 0.0)).norm() > tol {
                    return Err(Error::Degenerate(format!(
                        "mode ν-Gram deviates at ({i},{j}): {nu}"
                    )));
                }
                let sk = skew_product(&a.y, &b.y)?;
                if sk.norm() > tol {
                    return Err(Error::Degenerate(format!(
                        "modes not skew-orthogonal at ({i},{j}): {sk}"
                    )));
                }
            }
        }
        let grc = linalg::real_to_complex(gr);
        for m in &self.modes {
            let coords = q.coordinates_mod_l(&m.y)?;
            let resid = (&grc * &coords - &coords * C64::new(0.0, m.beta)).norm();
            if resid > tol * coords.norm().max(1.0) {
                return Err(Error::Degenerate(format!(
                    "mode fails the eigen-relation (residual {resid:.3e})"
                )));
            }
        }
        Ok(())
    }
}

/// Split a stable reduced flow into conjugate mode pairs.
///
/// Within each eigenspace the Hermitian ν-Gram is diagonalized; its
/// positive part yields modes at +β, the conjugates of its negative part
/// yield modes at −β, and for β = 0 only the positive half is kept.
/// A ν-degenerate direction inside an eigenspace is a hard error.
pub fn mode_decomposition(gr: &RMat, q: &QuotientSpace) -> Result<ModeSet> {
    let verdict = stability_check(gr, 1e-9);
    if !verdict.stable {
        return Err(Error::InvalidInput(format!(
            "reduced flow is not stable (max |Re λ|/‖Gr‖ = {:.3e}, eigenvector cond = {:.3e})",
            verdict.max_re_ratio, verdict.eigvec_cond
        )));
    }
    let m = gr.nrows();
    let scale = gr.norm().max(1.0);
    let clusters = linalg::eigen_clusters_real(gr, 1e-8);
    let mut modes: Vec<Mode> = Vec::new();
    for (lambda, basis) in &clusters {
        let beta = lambda.im;
        if beta < -1e-8 * scale {
            continue; // conjugates of the +β cluster
        }
        let zero = beta.abs() <= 1e-8 * scale;
        // Candidate vectors in ambient phase space.
        let candidates: Vec<PhaseVector> = basis
            .iter()
            .map(|c| combine(q.representatives(), c))
            .collect::<Result<Vec<_>>>()?;
        let gram = crate::phase::nu_gram(&candidates)?;
        let eig = gram.symmetric_eigen();
        let mut pairs: Vec<(f64, CVec)> = (0..eig.eigenvalues.len())
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into()))
            .collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        for (mu, w) in pairs {
            if mu.abs() <= 1e-8 {
                return Err(Error::Degenerate(format!(
                    "ν-form degenerates inside the β = {beta:.6} eigenspace (value {mu:.3e})"
                )));
            }
            let mut y = PhaseVector::zero(q.l.ambient_n());
            for (i, c) in candidates.iter().enumerate() {
                y = y.add(&c.scale(w[i]));
            }
            if mu > 0.0 {
                modes.push(Mode {
                    y: y.scale(C64::new(1.0 / mu.sqrt(), 0.0)),
                    beta,
                });
            } else if !zero {
                modes.push(Mode {
                    y: y.conj().scale(C64::new(1.0 / (-mu).sqrt(), 0.0)),
                    beta: -beta,
                });
            }
            // For β = 0 the negative half consists of the conjugates of the
            // positive half; keeping both would double-count.
        }
    }
    if modes.len() != m / 2 {
        return Err(Error::Internal(format!(
            "expected {} modes, built {}",
            m / 2,
            modes.len()
        )));
    }
    modes.sort_by(|a, b| a.beta.partial_cmp(&b.beta).unwrap_or(std::cmp::Ordering::Equal));
    let set = ModeSet {
        ambient_n: q.l.ambient_n(),
        k: q.l.k(),
        modes,
    };
    set.validate(q, gr, 1e-8)?;
    Ok(set)
}

fn combine(basis: &[PhaseVector], coeffs: &CVec) -> Result<PhaseVector> {
    let n = basis
        .first()
        .map(|v| v.dim())
        .ok_or_else(|| Error::Internal("empty basis".into()))?;
    let mut acc = PhaseVector::zero(n);
    for (i, v) in basis.iter().enumerate() {
        acc = acc.add(&v.scale(coeffs[i]));
    }
    Ok(acc)
}

/// Assemble the ground-state matrix from the modes: the germ is spanned by
/// the modes together with W⁽ᵃ⁾ = (X⁽ᵃ⁾ − iY⁽ᵃ⁾)/√2 over the gauge pair,
/// and A is recovered from the frame.
pub fn germ_from_modes(l: &ConstraintSet, modes: &ModeSet) -> Result<CMat> {
    let n = l.ambient_n();
    if modes.ambient_n != n || modes.k != l.k() || modes.len() != n - l.k() {
        return Err(Error::InvalidInput("mode set does not match constraints".into()));
    }
    let gauge = build_gauge_plane(l)?;
    let inv_sqrt2 = C64::new(1.0 / 2.0f64.sqrt(), 0.0);
    let mut vectors: Vec<PhaseVector> = Vec::with_capacity(n);
    for m in modes.modes() {
        vectors.push(m.y.clone());
    }
    for a in 0..l.k() {
        let w = l.basis()[a]
            .sub(&gauge.basis()[a].scale(C64::i()))
            .scale(inv_sqrt2);
        vectors.push(w);
    }
    let frame = GermBasis::from_vectors(GermKind::S, n, vectors, None)?;
    frame.validate(1e-8).map_err(|e| {
        Error::Internal(format!("mode-assembled frame violates the germ axioms: {e}"))
    })?;
    let a = germ::matrix_from_germ(&frame)?;
    germ::validate_gaussian_matrix(&a)?;
    // The extended germ of A must contain the constraint plane and every
    // mode vector.
    let h = germ::h_germ(&a, l)?;
    for v in l.basis().iter().chain(modes.modes().iter().map(|m| &m.y)) {
        let resid = h.membership_residual(v);
        if resid > 1e-8 {
            return Err(Error::Internal(format!(
                "extended germ misses an input vector (residual {resid:.3e})"
            )));
        }
    }
    Ok(a)
}

/// Stability analysis output; `levels` pairs occupation multi-indices with
/// eigenvalues Σ β_I(N_I + ½).
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub stable: bool,
    pub betas: Vec<f64>,
    pub ground_a: Option<CMat>,
    pub levels: Vec<(Vec<usize>, f64)>,
    pub eigenvalues: Vec<C64>,
    pub eigvec_cond: f64,
}

/// Enumerate Σ N_I ≤ max_total_occupation, eigenvalues sorted ascending
/// (ties by multi-index).
pub fn spectrum(modes: &ModeSet, max_total_occupation: usize) -> Vec<(Vec<usize>, f64)> {
    let betas = modes.betas();
    let mut levels: Vec<(Vec<usize>, f64)> = enumerate_occupations(betas.len(), max_total_occupation)
        .into_iter()
        .map(|idx| {
            let e: f64 = idx
                .iter()
                .zip(&betas)
                .map(|(&n, &b)| b * (n as f64 + 0.5))
                .sum();
            (idx, e)
        })
        .collect();
    levels.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    levels
}

fn enumerate_occupations(n_modes: usize, max_total: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n_modes {
        let mut next = Vec::new();
        for prefix in &out {
            let used: usize = prefix.iter().sum();
            for v in 0..=(max_total - used) {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    if n_modes == 0 {
        return vec![Vec::new()];
    }
    out
}

/// End-to-end analysis: reduction, stability verdict, modes, ground germ,
/// spectrum. An unstable flow yields a report without germ or levels.
pub fn analyze(
    h: &QuadraticHamiltonian,
    l: &ConstraintSet,
    max_total_occupation: usize,
) -> Result<SpectrumReport> {
    let (q, gr) = reduced_generator(h, l)?;
    let verdict = stability_check(&gr, 1e-9);
    if !verdict.stable {
        return Ok(SpectrumReport {
            stable: false,
            betas: Vec::new(),
            ground_a: None,
            levels: Vec::new(),
            eigenvalues: verdict.eigenvalues,
            eigvec_cond: verdict.eigvec_cond,
        });
    }
    let modes = mode_decomposition(&gr, &q)?;
    let ground_a = germ_from_modes(l, &modes)?;
    let levels = spectrum(&modes, max_total_occupation);
    Ok(SpectrumReport {
        stable: true,
        betas: modes.betas(),
        ground_a: Some(ground_a),
        levels,
        eigenvalues: verdict.eigenvalues,
        eigvec_cond: verdict.eigvec_cond,
    })
}

/// Rebuild the reduced generator from the modes via
/// Γ̄ = ½ Σ β_I [Y*⊗Y + Y⊗Y*] and return ‖Gr − Gr_rec‖/‖Gr‖ (0/0 → 0).
pub fn gamma_reconstruct_residual(
    modes: &ModeSet,
    h: &QuadraticHamiltonian,
    l: &ConstraintSet,
) -> Result<f64> {
    let (q, gr) = reduced_generator(h, l)?;
    let m = q.dim();
    let mut gr_rec = RMat::zeros(m, m);
    for (i, v) in q.representatives().iter().enumerate() {
        // ⟨v, Γ̄⟩ = Σ_I β_I [⟨v, Y_I*⟩ Y_I + ⟨v, Y_I⟩ Y_I*].
        let mut image = PhaseVector::zero(q.l.ambient_n());
        for md in modes.modes() {
            let b = C64::new(md.beta, 0.0);
            let c1 = skew_product(v, &md.y.conj())?;
            let c2 = skew_product(v, &md.y)?;
            image = image.add(&md.y.scale(b * c1));
            image = image.add(&md.y.conj().scale(b * c2));
        }
        let coords = q.coordinates_mod_l(&image)?;
        for j in 0..m {
            if coords[j].im.abs() > 1e-9 * coords[j].norm().max(1.0) {
                return Err(Error::Internal(
                    "mode reconstruction produced a non-real generator".into(),
                ));
            }
            gr_rec[(j, i)] = coords[j].re;
        }
    }
    let denom = gr.norm();
    let diff = (&gr - &gr_rec).norm();
    if denom <= 1e-12 {
        // Numerically zero generator: report the absolute defect.
        return Ok(diff);
    }
    Ok(diff / denom)
}

/// A finite combination of creation-monomials over the modes, tracked by
/// occupation multi-index. The basis vector for N is a†^N applied to the
/// reference Gaussian, with squared norm ΠN_I!·base_norm.
#[derive(Debug, Clone)]
pub struct LadderState {
    n_modes: usize,
    coeffs: BTreeMap<Vec<usize>, C64>,
}

impl LadderState {
    pub fn vacuum(n_modes: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![0; n_modes], C64::new(1.0, 0.0));
        Self { n_modes, coeffs }
    }

    pub fn monomial(n_modes: usize, idx: &[usize]) -> Self {
        assert_eq!(idx.len(), n_modes);
        let mut coeffs = BTreeMap::new();
        coeffs.insert(idx.to_vec(), C64::new(1.0, 0.0));
        Self { n_modes, coeffs }
    }

    pub fn add_scaled(&mut self, idx: &[usize], c: C64) {
        *self
            .coeffs
            .entry(idx.to_vec())
            .or_insert(C64::new(0.0, 0.0)) += c;
    }

    /// Highest total occupation present.
    pub fn rank(&self) -> usize {
        self.coeffs
            .iter()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(idx, _)| idx.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Apply Σ_I z_I a_I (annihilation along the mode combination z).
    pub fn apply_annihilate(&self, z: &[C64]) -> Self {
        let mut out = Self {
            n_modes: self.n_modes,
            coeffs: BTreeMap::new(),
        };
        for (idx, &c) in &self.coeffs {
            for (i, &zi) in z.iter().enumerate() {
                if idx[i] > 0 {
                    let mut lower = idx.clone();
                    lower[i] -= 1;
                    out.add_scaled(&lower, c * zi * idx[i] as f64);
                }
            }
        }
        out
    }

    /// Apply Σ_I z_I a†_I.
    pub fn apply_create(&self, z: &[C64]) -> Self {
        let mut out = Self {
            n_modes: self.n_modes,
            coeffs: BTreeMap::new(),
        };
        for (idx, &c) in &self.coeffs {
            for (i, &zi) in z.iter().enumerate() {
                let mut upper = idx.clone();
                upper[i] += 1;
                out.add_scaled(&upper, c * zi);
            }
        }
        out
    }

    /// ⟨self, other⟩ with base norm ‖f‖² = base_norm.
    pub fn inner(&self, other: &Self, base_norm: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (idx, &c1) in &self.coeffs {
            if let Some(&c2) = other.coeffs.get(idx) {
                acc += c1.conj() * c2 * factorial_product(idx);
            }
        }
        acc * base_norm
    }

    pub fn norm_sqr(&self, base_norm: f64) -> f64 {
        self.inner(self, base_norm).re
    }
}

fn factorial_product(idx: &[usize]) -> f64 {
    idx.iter()
        .map(|&n| (1..=n).map(|v| v as f64).product::<f64>())
        .product()
}

/// ⟨state_N, state_M⟩ for creation monomials over ν-orthonormal modes:
/// δ_NM · Π N_I! · base_norm, obtained from the commutation algebra.
pub fn excited_overlap(
    modes: &ModeSet,
    n_idx: &[usize],
    m_idx: &[usize],
    base_norm: f64,
) -> Result<C64> {
    let nm = modes.len();
    if n_idx.len() != nm || m_idx.len() != nm {
        return Err(Error::InvalidInput("occupation index length mismatch".into()));
    }
    let sn = LadderState::monomial(nm, n_idx);
    let sm = LadderState::monomial(nm, m_idx);
    Ok(sn.inner(&sm, base_norm))
}

/// Report of [`ladder_bound_check`].
#[derive(Debug, Clone)]
pub struct LadderReport {
    /// max ‖Ω(Z)g‖ / (√s √ν(Z,Z) ‖g‖) over the samples.
    pub max_annihilate_ratio: f64,
    /// max ‖Ω(Z*)g‖ / (√(s+1) √ν(Z,Z) ‖g‖).
    pub max_create_ratio: f64,
    pub samples: usize,
    pub ok: bool,
}

/// Check the quasi-Gaussian growth bounds ‖Ω(Z)g‖ ≤ √s·√ν(Z,Z)·‖g‖ and
/// ‖Ω(Z*)g‖ ≤ √(s+1)·√ν(Z,Z)·‖g‖ on random rank-≤ s coefficient sets,
/// evaluated純 through the ladder algebra. Deterministic given `seed`.
pub fn ladder_bound_check(
    modes: &ModeSet,
    rank: usize,
    samples: usize,
    seed: u64,
) -> Result<LadderReport> {
    if rank > 4 {
        return Err(Error::InvalidInput("rank capped at 4".into()));
    }
    let nm = modes.len();
    if nm == 0 {
        return Ok(LadderReport {
            max_annihilate_ratio: 0.0,
            max_create_ratio: 0.0,
            samples,
            ok: true,
        });
    }
    let mut rng = SplitMix64::new(seed);
    let occupations = enumerate_occupations(nm, rank);
    let base_norm = 1.0;
    let mut max_a = 0.0f64;
    let mut max_c = 0.0f64;
    for _ in 0..samples {
        let mut g = LadderState::vacuum(nm);
        g.coeffs.clear();
        for idx in &occupations {
            g.add_scaled(idx, C64::new(rng.uniform(), rng.uniform()));
        }
        let z: Vec<C64> = (0..nm).map(|_| C64::new(rng.uniform(), rng.uniform())).collect();
        // ν(Z,Z) for Z = Σ z_I Y_I over ν-orthonormal modes.
        let nu_z: f64 = z.iter().map(|c| c.norm_sqr()).sum();
        let s = g.rank() as f64;
        let g_norm = g.norm_sqr(base_norm).sqrt();
        let ann = g.apply_annihilate(&z).norm_sqr(base_norm).sqrt();
        let cre = g.apply_create(&z.iter().map(|c| c.conj()).collect::<Vec<_>>())
            .norm_sqr(base_norm)
            .sqrt();
        if g_norm > 0.0 && nu_z > 0.0 {
            if s > 0.0 {
                max_a = max_a.max(ann / (s.sqrt() * nu_z.sqrt() * g_norm));
            } else if ann > 1e-12 {
                max_a = f64::INFINITY;
            }
            max_c = max_c.max(cre / ((s + 1.0).sqrt() * nu_z.sqrt() * g_norm));
        }
    }
    Ok(LadderReport {
        max_annihilate_ratio: max_a,
        max_create_ratio: max_c,
        samples,
        ok: max_a <= 1.0 + 1e-12 && max_c <= 1.0 + 1e-12,
    })
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn new(seed: u64) -> Self {
        Self(seed)
    }

    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn uniform(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

/// Report of [`eigenstate_stationarity_check`].
#[derive(Debug, Clone)]
pub struct StationarityReport {
    /// max ‖A(t) − A(0)‖ over the time grid.
    pub max_a_drift: f64,
    /// max |arg c(t) + t(½Σβ + Re ε′)| over the grid (unwrapped).
    pub max_phase_residual: f64,
    pub ok: bool,
}

/// Evolve the ground Gaussian under the constraint-reduced Hamiltonian and
/// verify it is stationary: A(t) constant and
/// arg c(t) = −t(½Σβ_I + Re ε′).
pub fn eigenstate_stationarity_check(
    h: &QuadraticHamiltonian,
    l: &ConstraintSet,
    modes: &ModeSet,
) -> Result<StationarityReport> {
    let gauge = build_gauge_plane(l)?;
    let red = reduce_hamiltonian(h, l, &gauge)?;
    let reduced = red
        .reduced
        .ok_or_else(|| Error::Incompatible("hamiltonian incompatible with constraints".into()))?;
    let ground_a = germ_from_modes(l, modes)?;
    let g0 = GaussianState::new(C64::new(1.0, 0.0), ground_a.clone())?;
    let beta_sum: f64 = modes.betas().iter().sum();
    let ground_energy = 0.5 * beta_sum + reduced.epsilon().re;
    let mut max_a_drift = 0.0f64;
    let mut max_phase = 0.0f64;
    let mut prev_arg = 0.0f64;
    for i in 0..=20 {
        let t = 0.25 * i as f64;
        let out = crate::dynamics::evolve_gaussian(&g0, &reduced, t)?;
        max_a_drift = max_a_drift.max((out.a() - &ground_a).norm());
        let arg = linalg::unwrap_near(prev_arg, out.c().arg());
        prev_arg = arg;
        max_phase = max_phase.max((arg + t * ground_energy).abs());
    }
    Ok(StationarityReport {
        max_a_drift,
        max_phase_residual: max_phase,
        ok: max_a_drift <= 1e-8 && max_phase <= 1e-7,
    })
}
