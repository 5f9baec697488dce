//! Complex germs of Gaussian states.
//!
//! The S-germ of a Gaussian with matrix A is the n-dimensional isotropic
//! plane r(A) = {(AQ, Q)} on which the positive form ν(Y,Y′) = (1/i)⟨Y,Y′*⟩
//! lives; the H-germ ř(A) = r_⊥(A) ⊕ L^ℂ extends it with the complexified
//! constraint plane and classifies states up to constraint equivalence.
//! This module constructs both, ν-orthonormalizes frames, and builds the
//! splitting map P₋ : L → r₋(A) whose Jacobian Δ(P₋) enters every norm
//! formula downstream.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::phase::{nu_form, skew_product, ConstraintSet, PhaseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GermKind {
    S,
    H,
}

/// An ordered frame spanning a germ.
///
/// For kind H the frame is stored as [r_⊥ block | constraint block] and
/// `split` records the two block sizes (n−k, k).
#[derive(Debug, Clone)]
pub struct GermBasis {
    kind: GermKind,
    ambient_n: usize,
    vectors: Vec<PhaseVector>,
    split: Option<(usize, usize)>,
}

impl GermBasis {
    /// Assemble a frame from raw vectors without axiom checks; callers that
    /// construct frames by hand should follow with [`GermBasis::validate`].
    pub fn from_vectors(
        kind: GermKind,
        ambient_n: usize,
        vectors: Vec<PhaseVector>,
        split: Option<(usize, usize)>,
    ) -> Result<Self> {
        for v in &vectors {
            if v.dim() != ambient_n {
                return Err(Error::InvalidInput(
                    "germ frame vector dimension mismatch".into(),
                ));
            }
        }
        if let Some((m, k)) = split {
            if m + k != vectors.len() {
                return Err(Error::InvalidInput(
                    "split sizes do not sum to frame length".into(),
                ));
            }
        }
        Ok(Self {
            kind,
            ambient_n,
            vectors,
            split,
        })
    }

    pub fn kind(&self) -> GermKind {
        self.kind
    }

    pub fn ambient_n(&self) -> usize {
        self.ambient_n
    }

    pub fn vectors(&self) -> &[PhaseVector] {
        &self.vectors
    }

    pub fn split_sizes(&self) -> Option<(usize, usize)> {
        self.split
    }

    /// Stacked momentum parts (columns follow the frame order).
    pub fn frame_p(&self) -> CMat {
        frame_part(self.ambient_n, &self.vectors, |v| v.p().clone())
    }

    /// Stacked coordinate parts.
    pub fn frame_q(&self) -> CMat {
        frame_part(self.ambient_n, &self.vectors, |v| v.q().clone())
    }

    /// Full 2n×m coordinate frame.
    pub fn frame(&self) -> CMat {
        let cols: Vec<CVec> = self.vectors.iter().map(|v| v.coords()).collect();
        CMat::from_columns(&cols)
    }

    /// Least-squares membership residual of `y` against the span.
    pub fn membership_residual(&self, y: &PhaseVector) -> f64 {
        linalg::span_residual(&self.frame(), &y.coords())
    }

    /// Check the germ axioms at tolerance `tol`: pairwise skew products
    /// vanish; the ν-Gram is positive-definite for kind S, and positive
    /// semi-definite with kernel dimension exactly k for kind H (with the
    /// constraint-block members individually ν-null).
    pub fn validate(&self, tol: f64) -> Result<()> {
        let scale: f64 = self
            .vectors
            .iter()
            .map(|v| v.norm() * v.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        for a in &self.vectors {
            for b in &self.vectors {
                let s = skew_product(a, b)?.norm();
                if s > tol * scale {
                    return Err(Error::InvalidGerm(format!(
                        "pairwise skew product {s:.3e} exceeds tolerance"
                    )));
                }
            }
        }
        let gram = crate::phase::nu_gram(&self.vectors)?;
        let eigs = gram.symmetric_eigen().eigenvalues;
        let mut near_zero = 0usize;
        for &e in eigs.iter() {
            if e < -tol * scale {
                return Err(Error::InvalidGerm(format!(
                    "ν-Gram has negative eigenvalue {e:.3e}"
                )));
            }
            if e <= tol * scale {
                near_zero += 1;
            }
        }
        match self.kind {
            GermKind::S => {
                if near_zero > 0 {
                    return Err(Error::InvalidGerm(
                        "ν-Gram of an S-germ frame must be positive-definite".into(),
                    ));
                }
            }
            GermKind::H => {
                let (_, k) = self.split.unwrap_or((self.vectors.len(), 0));
                if near_zero != k {
                    return Err(Error::InvalidGerm(format!(
                        "ν-Gram kernel dimension {near_zero}, expected {k}"
                    )));
                }
                for v in &self.vectors[self.vectors.len() - k..] {
                    let nu = nu_form(v, v)?.norm();
                    if nu > tol * scale {
                        return Err(Error::InvalidGerm(format!(
                            "constraint-block member has ν = {nu:.3e} ≠ 0"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn frame_part(n: usize, vectors: &[PhaseVector], part: impl Fn(&PhaseVector) -> CVec) -> CMat {
    if vectors.is_empty() {
        return CMat::zeros(n, 0);
    }
    let cols: Vec<CVec> = vectors.iter().map(part).collect();
    CMat::from_columns(&cols)
}

/// Validate a Gaussian matrix: symmetric with positive-definite imaginary
/// part. Returns the minimum eigenvalue of Im A.
pub fn validate_gaussian_matrix(a: &CMat) -> Result<f64> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::InvalidInput("matrix must be square, n ≥ 1".into()));
    }
    if !linalg::is_symmetric(a, 1e-10) {
        return Err(Error::InvalidInput("matrix must be symmetric".into()));
    }
    let min_im = linalg::min_eig_sym(&linalg::imag_part(a));
    if min_im <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "imaginary part must be positive-definite (min eigenvalue {min_im:.3e})"
        )));
    }
    Ok(min_im)
}

/// The S-germ frame {(A e_j, e_j)} of a Gaussian matrix.
pub fn s_germ_from_matrix(a: &CMat) -> Result<GermBasis> {
    validate_gaussian_matrix(a)?;
    let n = a.nrows();
    let vectors = (0..n)
        .map(|j| {
            let q = CVec::from_fn(n, |i, _| {
                if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            PhaseVector::new(a * &q, q)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GermBasis {
        kind: GermKind::S,
        ambient_n: n,
        vectors,
        split: None,
    })
}

/// Recover the matrix from a germ frame: A = B C⁻¹ with B, C the stacked
/// momentum and coordinate parts. Basis-independent.
pub fn matrix_from_germ(r: &GermBasis) -> Result<CMat> {
    let c = r.frame_q();
    let b = r.frame_p();
    if c.ncols() != r.ambient_n {
        return Err(Error::InvalidGerm(format!(
            "frame has {} vectors, ambient dimension, {}",
            c.ncols(),
            r.ambient_n
        )));
    }
    let c_inv = c
        .try_inverse()
        .ok_or_else(|| Error::InvalidGerm("coordinate projection is singular".into()))?;
    Ok(linalg::symmetric_part(&(b * c_inv)))
}

/// Gram–Schmidt under ν; the frame must span a subspace on which ν is
/// positive-definite.
pub fn nu_gram_schmidt(vectors: &[PhaseVector]) -> Result<Vec<PhaseVector>> {
    let scale: f64 = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let mut out: Vec<PhaseVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &out {
                let coef = nu_form(&w, e)?;
                w = w.sub(&e.scale(coef));
            }
        }
        let nn = nu_form(&w, &w)?;
        if nn.re <= 1e-12 * scale * scale || nn.im.abs() > 1e-8 * nn.re.abs().max(1e-300) {
            return Err(Error::InvalidGerm(format!(
                "ν-Gram not positive-definite during orthonormalization (ν = {nn})"
            )));
        }
        out.push(w.scale(C64::new(1.0 / nn.re.sqrt(), 0.0)));
    }
    Ok(out)
}

/// ν-orthonormalize a germ frame. For kind S the whole frame is processed;
/// for kind H only the r_⊥ block (the constraint block is ν-null and kept).
pub fn nu_orthonormalize(r: &GermBasis) -> Result<GermBasis> {
    match r.kind {
        GermKind::S => Ok(GermBasis {
            kind: GermKind::S,
            ambient_n: r.ambient_n,
            vectors: nu_gram_schmidt(&r.vectors)?,
            split: None,
        }),
        GermKind::H => {
            let (m, _) = r
                .split
                .ok_or_else(|| Error::InvalidGerm("H-germ frame missing block sizes".into()))?;
            let mut vectors = nu_gram_schmidt(&r.vectors[..m])?;
            vectors.extend_from_slice(&r.vectors[m..]);
            Ok(GermBasis {
                kind: GermKind::H,
                ambient_n: r.ambient_n,
                vectors,
                split: r.split,
            })
        }
    }
}

/// Δ(C) = |det C| over a ν-orthonormal S-germ frame; equals
/// det((A − A*)/i)^{-1/2}.
pub fn delta_c(a: &CMat) -> Result<f64> {
    let ortho = nu_orthonormalize(&s_germ_from_matrix(a)?)?;
    Ok(ortho.frame_q().determinant().norm())
}

/// Coordinate-space basis of r_⊥(A): the Q ∈ ℂⁿ with (𝒫−A𝒬)ᵀQ = 0 for all
/// constraint basis vectors; lifted to germ vectors (AQ, Q).
fn r_perp_basis(a: &CMat, l: &ConstraintSet) -> Result<Vec<PhaseVector>> {
    let n = a.nrows();
    let k = l.k();
    if k == 0 {
        return Ok(s_germ_from_matrix(a)?.vectors);
    }
    let w = l.p_matrix() - a * l.q_matrix(); // n×k
    let qs = linalg::null_space(&w.transpose(), crate::phase::RANK_TOL);
    if qs.len() != n - k {
        return Err(Error::Internal(format!(
            "r_⊥ dimension {} ≠ n−k = {}",
            qs.len(),
            n - k
        )));
    }
    qs.into_iter()
        .map(|q| PhaseVector::new(a * &q, q))
        .collect()
}

/// The H-germ ř(A) = r_⊥(A) ⊕ L^ℂ as a frame [r_⊥ block | constraint block],
/// with the r_⊥ block ν-orthonormalized.
pub fn h_germ(a: &CMat, l: &ConstraintSet) -> Result<GermBasis> {
    validate_gaussian_matrix(a)?;
    let n = a.nrows();
    if l.ambient_n() != n {
        return Err(Error::InvalidInput(
            "constraint ambient dimension mismatch".into(),
        ));
    }
    let mut vectors = nu_gram_schmidt(&r_perp_basis(a, l)?)?;
    vectors.extend(l.basis().iter().cloned());
    Ok(GermBasis {
        kind: GermKind::H,
        ambient_n: n,
        vectors,
        split: Some((n - l.k(), l.k())),
    })
}

/// The splitting map of the constraint plane through the germ.
///
/// Each real constraint vector X splits uniquely as X = X₋ + X₋* with
/// X₋ ∈ r(A); P₋ is X ↦ X₋ followed by ν-orthogonal projection onto r₋(A),
/// the ν-orthocomplement of r_⊥(A) inside r(A).
#[derive(Debug, Clone)]
pub struct PMinusMap {
    /// k×k matrix from constraint-basis coordinates to the ν-orthonormal
    /// r₋ frame.
    matrix: CMat,
    /// Δ(P₋) against the constraint measure.
    jacobian: f64,
    /// ν-orthonormal frame of r₋(A).
    r_minus: Vec<PhaseVector>,
    /// ν-orthonormal frame of r_⊥(A).
    r_perp: Vec<PhaseVector>,
    /// The split components X₋ of the constraint basis.
    x_minus: Vec<PhaseVector>,
}

impl PMinusMap {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn jacobian(&self) -> f64 {
        self.jacobian
    }

    pub fn r_minus_frame(&self) -> &[PhaseVector] {
        &self.r_minus
    }

    pub fn r_perp_frame(&self) -> &[PhaseVector] {
        &self.r_perp
    }

    pub fn x_minus(&self) -> &[PhaseVector] {
        &self.x_minus
    }

    /// The split component P₋X of a real combination X = Σ α_a X^(a) of the
    /// constraint basis.
    pub fn split_combination(&self, alpha: &CVec, n: usize) -> PhaseVector {
        let mut acc = PhaseVector::zero(n);
        for (a, x) in self.x_minus.iter().enumerate() {
            acc = acc.add(&x.scale(alpha[a]));
        }
        acc
    }
}

/// Split a vector against the direct sum ℂ^{2n} = r(A) + r(A)*.
pub fn direct_sum_split(a: &CMat, x: &PhaseVector) -> Result<(PhaseVector, PhaseVector)> {
    let n = a.nrows();
    let germ = s_germ_from_matrix(a)?;
    let f = germ.frame(); // 2n×n
    let fc = f.map(|z| z.conj());
    let mut m = CMat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (2 * n, n)).copy_from(&f);
    m.view_mut((0, n), (2 * n, n)).copy_from(&fc);
    let rhs = x.coords();
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Internal("direct-sum solve singular".into()))?;
    let u: CVec = sol.rows(0, n).into();
    let v: CVec = sol.rows(n, n).into();
    let minus = PhaseVector::new(a * &u, u)?;
    let plus = PhaseVector::new(a.map(|z| z.conj()) * &v, v)?;
    Ok((minus, plus))
}

pub fn p_minus(a: &CMat, l: &ConstraintSet) -> Result<PMinusMap> {
    validate_gaussian_matrix(a)?;
    let k = l.k();
    if k == 0 {
        return Ok(PMinusMap {
            matrix: CMat::zeros(0, 0),
            jacobian: 1.0,
            r_minus: Vec::new(),
            r_perp: nu_gram_schmidt(&r_perp_basis(a, l)?)?,
            x_minus: Vec::new(),
        });
    }
    let r_perp = nu_gram_schmidt(&r_perp_basis(a, l)?)?;
    // Split each constraint vector and project the r-components off r_⊥.
    let mut x_minus = Vec::with_capacity(k);
    for x in l.basis() {
        let (mut minus, _) = direct_sum_split(a, x)?;
        for e in &r_perp {
            let coef = nu_form(&minus, e)?;
            minus = minus.sub(&e.scale(coef));
        }
        x_minus.push(minus);
    }
    let r_minus = nu_gram_schmidt(&x_minus)?;
    let mut matrix = CMat::zeros(k, k);
    for (col, xm) in x_minus.iter().enumerate() {
        for (row, e) in r_minus.iter().enumerate() {
            matrix[(row, col)] = nu_form(xm, e)?;
        }
    }
    // The r₋ measure is the one with unit density in a ν-orthonormal frame.
    let jacobian = matrix.determinant().norm() / l.measure_scale();
    if jacobian <= 0.0 || !jacobian.is_finite() {
        return Err(Error::Internal(format!(
            "Δ(P₋) must be positive, got {jacobian}"
        )));
    }
    Ok(PMinusMap {
        matrix,
        jacobian,
        r_minus,
        r_perp,
        x_minus,
    })
}

/// Whether a real vector lies in ř(A); by the germ geometry this holds
/// exactly when it lies in span L.
pub fn real_vector_in_h_germ(
    a: &CMat,
    l: &ConstraintSet,
    y: &PhaseVector,
    tol: f64,
) -> Result<bool> {
    let germ = h_germ(a, l)?;
    Ok(germ.membership_residual(y) <= tol)
}

/// The ν-orthonormal S-germ frame arranged as [r₋ block | r_⊥ block],
/// aligned with the H-germ frame [constraint block | r_⊥ block]; the layout
/// both č-route formulas expect.
pub(crate) fn aligned_frames(
    a: &CMat,
    l: &ConstraintSet,
) -> Result<(PMinusMap, Vec<PhaseVector>, Vec<PhaseVector>)> {
    let pm = p_minus(a, l)?;
    let mut s_frame: Vec<PhaseVector> = pm.r_minus.clone();
    s_frame.extend(pm.r_perp.iter().cloned());
    let mut h_frame: Vec<PhaseVector> = l.basis().to_vec();
    h_frame.extend(pm.r_perp.iter().cloned());
    Ok((pm, s_frame, h_frame))
}
