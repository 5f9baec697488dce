//! Complexified phase space ℂ^{2n} with the skew-scalar product, measured
//! isotropic subspaces, gauge planes, and Jacobians of linear maps between
//! measured subspaces.
//!
//! Vectors are stored as a momentum part `p` and a coordinate part `q`;
//! coordinate stacking order everywhere in the crate is `(p₁..p_n, q₁..q_n)`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};

/// Relative singular-value cutoff below which directions count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// A point of complexified phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    p: CVec,
    q: CVec,
}

impl PhaseVector {
    pub fn new(p: CVec, q: CVec) -> Result<Self> {
        if p.len() != q.len() || p.is_empty() {
            return Err(Error::InvalidInput(format!(
                "phase vector parts must have equal length ≥ 1, got p: {}, q: {}",
                p.len(),
                q.len()
            )));
        }
        Ok(Self { p, q })
    }

    /// Build from real momentum/coordinate slices.
    pub fn from_real(p: &[f64], q: &[f64]) -> Result<Self> {
        Self::new(
            CVec::from_iterator(p.len(), p.iter().map(|&x| C64::new(x, 0.0))),
            CVec::from_iterator(q.len(), q.iter().map(|&x| C64::new(x, 0.0))),
        )
    }

    pub fn zero(n: usize) -> Self {
        Self {
            p: CVec::zeros(n),
            q: CVec::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &CVec {
        &self.p
    }

    pub fn q(&self) -> &CVec {
        &self.q
    }

    /// Stacked coordinates (p₁..p_n, q₁..q_n).
    pub fn coords(&self) -> CVec {
        let n = self.dim();
        CVec::from_fn(2 * n, |i, _| if i < n { self.p[i] } else { self.q[i - n] })
    }

    pub fn from_coords(v: &CVec) -> Result<Self> {
        if v.len() % 2 != 0 || v.is_empty() {
            return Err(Error::InvalidInput(format!(
                "coordinate vector length must be even ≥ 2, got {}",
                v.len()
            )));
        }
        let n = v.len() / 2;
        Self::new(v.rows(0, n).into(), v.rows(n, n).into())
    }

    pub fn conj(&self) -> Self {
        Self {
            p: self.p.map(|z| z.conj()),
            q: self.q.map(|z| z.conj()),
        }
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let imag = self.p.iter().chain(self.q.iter()).map(|z| z.im.abs());
        let scale = self.norm().max(1.0);
        imag.fold(0.0, f64::max) <= tol * scale
    }

    pub fn norm(&self) -> f64 {
        (self.p.norm_squared() + self.q.norm_squared()).sqrt()
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            p: &self.p * z,
            q: &self.q * z,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            p: &self.p + &other.p,
            q: &self.q + &other.q,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            p: &self.p - &other.p,
            q: &self.q - &other.q,
        }
    }
}

/// Skew-scalar product ⟨y₁,y₂⟩ = Σ (p₁ᵢ q₂ᵢ − p₂ᵢ q₁ᵢ); bilinear, no
/// conjugation.
pub fn skew_product(y1: &PhaseVector, y2: &PhaseVector) -> Result<C64> {
    if y1.dim() != y2.dim() {
        return Err(Error::InvalidInput(format!(
            "skew product dimension mismatch: {} vs {}",
            y1.dim(),
            y2.dim()
        )));
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..y1.dim() {
        acc += y1.p[i] * y2.q[i] - y2.p[i] * y1.q[i];
    }
    Ok(acc)
}

/// The positive form ν(y₁,y₂) = (1/i)⟨y₁, y₂*⟩; linear in the first
/// argument, antilinear in the second.
pub fn nu_form(y1: &PhaseVector, y2: &PhaseVector) -> Result<C64> {
    Ok(skew_product(y1, &y2.conj())? / C64::i())
}

/// Hermitian Gram matrix of ν over `vectors`: entry (i,j) = ν(v_j, v_i),
/// so that coefficient vectors c satisfy ν(Σc v, Σc v) = c† G c.
pub fn nu_gram(vectors: &[PhaseVector]) -> Result<CMat> {
    let m = vectors.len();
    let mut g = CMat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            g[(i, j)] = nu_form(&vectors[j], &vectors[i])?;
        }
    }
    Ok(g)
}

/// Matrix of the skew form in stacked coordinates: ⟨y₁,y₂⟩ = y₁ᵀ Σ y₂.
pub fn skew_matrix(n: usize) -> CMat {
    let mut s = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        s[(i, n + i)] = C64::new(1.0, 0.0);
        s[(n + i, i)] = C64::new(-1.0, 0.0);
    }
    s
}

/// A linear subspace carrying a translation-invariant measure.
///
/// `measure_scale` is the density of the measure in the coordinates of the
/// stored basis: dμ = scale · dα₁…dα_m.
#[derive(Debug, Clone)]
pub struct MeasuredSubspace {
    ambient_n: usize,
    basis: Vec<PhaseVector>,
    measure_scale: f64,
}

impl MeasuredSubspace {
    pub fn new(ambient_n: usize, basis: Vec<PhaseVector>, measure_scale: f64) -> Result<Self> {
        if measure_scale <= 0.0 || !measure_scale.is_finite() {
            return Err(Error::InvalidInput(format!(
                "measure scale must be positive, got {measure_scale}"
            )));
        }
        for v in &basis {
            if v.dim() != ambient_n {
                return Err(Error::InvalidInput(format!(
                    "basis vector dimension {} does not match ambient n = {ambient_n}",
                    v.dim()
                )));
            }
        }
        if !basis.is_empty() {
            let stacked = stack_basis(&basis);
            if linalg::rank(&stacked, RANK_TOL) < basis.len() {
                return Err(Error::InvalidInput(
                    "basis vectors are linearly dependent".into(),
                ));
            }
        }
        Ok(Self {
            ambient_n,
            basis,
            measure_scale,
        })
    }

    pub fn ambient_n(&self) -> usize {
        self.ambient_n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[PhaseVector] {
        &self.basis
    }

    pub fn measure_scale(&self) -> f64 {
        self.measure_scale
    }

    /// Stacked 2n×m coordinate matrix of the basis.
    pub fn stacked(&self) -> CMat {
        stack_basis(&self.basis)
    }

    pub fn is_isotropic(&self, tol: f64) -> bool {
        max_pairwise_skew(&self.basis).map(|m| m <= tol).unwrap_or(false)
    }

    /// Relative least-squares residual of `y` against the span.
    pub fn membership_residual(&self, y: &PhaseVector) -> f64 {
        if self.basis.is_empty() {
            return y.norm();
        }
        linalg::span_residual(&self.stacked(), &y.coords())
    }

    pub fn contains(&self, y: &PhaseVector, tol: f64) -> bool {
        self.membership_residual(y) <= tol
    }

    /// Skew-orthogonal complement {Y : ⟨X,Y⟩ = 0 ∀ X ∈ self}, with unit
    /// measure scale.
    pub fn skew_complement(&self) -> Result<MeasuredSubspace> {
        let n = self.ambient_n;
        if self.basis.is_empty() {
            // Whole space.
            let mut basis = Vec::new();
            for i in 0..2 * n {
                let mut v = CVec::zeros(2 * n);
                v[i] = C64::new(1.0, 0.0);
                basis.push(PhaseVector::from_coords(&v)?);
            }
            return Ok(MeasuredSubspace::new(n, basis, 1.0)?);
        }
        // ⟨X, Y⟩ = (Xᵀ Σ) Y  for each basis vector X.
        let rows = self.stacked().transpose() * skew_matrix(n);
        let basis = linalg::null_space(&rows, RANK_TOL)
            .into_iter()
            .map(|v| PhaseVector::from_coords(&v))
            .collect::<Result<Vec<_>>>()?;
        MeasuredSubspace::new(n, basis, 1.0)
    }
}

fn stack_basis(basis: &[PhaseVector]) -> CMat {
    if basis.is_empty() {
        return CMat::zeros(0, 0);
    }
    let cols: Vec<CVec> = basis.iter().map(|v| v.coords()).collect();
    CMat::from_columns(&cols)
}

fn max_pairwise_skew(basis: &[PhaseVector]) -> Result<f64> {
    let mut max = 0.0f64;
    for a in basis {
        for b in basis {
            max = max.max(skew_product(a, b)?.norm());
        }
    }
    Ok(max)
}

/// The measured isotropic plane carrying the constraints: a real basis of
/// size k (0 ≤ k ≤ n) with pairwise vanishing skew products.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    subspace: MeasuredSubspace,
}

impl ConstraintSet {
    pub fn new(subspace: MeasuredSubspace) -> Result<Self> {
        let tol = 1e-10;
        if subspace.dim() > subspace.ambient_n() {
            return Err(Error::InvalidInput(format!(
                "constraint count {} exceeds n = {}",
                subspace.dim(),
                subspace.ambient_n()
            )));
        }
        for v in subspace.basis() {
            if !v.is_real(tol) {
                return Err(Error::InvalidInput(
                    "constraint basis must be real".into(),
                ));
            }
        }
        if !subspace.is_isotropic(isotropy_tol(&subspace)) {
            return Err(Error::InvalidInput(
                "constraint basis is not isotropic".into(),
            ));
        }
        Ok(Self { subspace })
    }

    /// k = 0: no constraints.
    pub fn empty(n: usize) -> Self {
        Self {
            subspace: MeasuredSubspace {
                ambient_n: n,
                basis: Vec::new(),
                measure_scale: 1.0,
            },
        }
    }

    pub fn from_real_rows(n: usize, rows: &[Vec<f64>], measure_scale: f64) -> Result<Self> {
        let mut basis = Vec::new();
        for r in rows {
            if r.len() != 2 * n {
                return Err(Error::InvalidInput(format!(
                    "constraint row must have 2n = {} entries, got {}",
                    2 * n,
                    r.len()
                )));
            }
            basis.push(PhaseVector::from_real(&r[..n], &r[n..])?);
        }
        Self::new(MeasuredSubspace::new(n, basis, measure_scale)?)
    }

    pub fn k(&self) -> usize {
        self.subspace.dim()
    }

    pub fn ambient_n(&self) -> usize {
        self.subspace.ambient_n()
    }

    pub fn subspace(&self) -> &MeasuredSubspace {
        &self.subspace
    }

    pub fn basis(&self) -> &[PhaseVector] {
        self.subspace.basis()
    }

    pub fn measure_scale(&self) -> f64 {
        self.subspace.measure_scale()
    }

    /// n×k real matrix of momentum parts of the basis.
    pub fn p_matrix(&self) -> CMat {
        part_matrix(self.ambient_n(), self.basis(), |v| v.p().clone())
    }

    /// n×k real matrix of coordinate parts of the basis.
    pub fn q_matrix(&self) -> CMat {
        part_matrix(self.ambient_n(), self.basis(), |v| v.q().clone())
    }
}

fn isotropy_tol(s: &MeasuredSubspace) -> f64 {
    let scale: f64 = s
        .basis()
        .iter()
        .map(|v| v.norm() * v.norm())
        .fold(0.0, f64::max);
    1e-10 * scale.max(1.0)
}

fn part_matrix(
    n: usize,
    basis: &[PhaseVector],
    part: impl Fn(&PhaseVector) -> CVec,
) -> CMat {
    if basis.is_empty() {
        return CMat::zeros(n, 0);
    }
    let cols: Vec<CVec> = basis.iter().map(part).collect();
    CMat::from_columns(&cols)
}

/// Build the gauge plane dual to `l`: an isotropic plane G with
/// ⟨X^(a), Y^(b)⟩ = δ_ab against the stored constraint basis.
///
/// The choice is fixed deterministically: the constraint basis is extended
/// by standard unit vectors in index order, the dual frame is solved from
/// the extended basis, and the isotropy correction
/// Y^(a) = Ỹ^(a) − ½ Σ_c ⟨Ỹ^(a),Ỹ^(c)⟩ X^(c) is applied.
pub fn build_gauge_plane(l: &ConstraintSet) -> Result<MeasuredSubspace> {
    let n = l.ambient_n();
    let k = l.k();
    if k == 0 {
        return MeasuredSubspace::new(n, Vec::new(), 1.0);
    }
    // Extend to a full basis of ℂ^{2n} with unit vectors in index order.
    let mut cols: Vec<CVec> = l.basis().iter().map(|v| v.coords()).collect();
    for i in 0..2 * n {
        if cols.len() == 2 * n {
            break;
        }
        let mut e = CVec::zeros(2 * n);
        e[i] = C64::new(1.0, 0.0);
        let mut trial = cols.clone();
        trial.push(e.clone());
        let m = CMat::from_columns(&trial);
        if linalg::rank(&m, RANK_TOL) == trial.len() {
            cols.push(e);
        }
    }
    let full = CMat::from_columns(&cols);
    // Dual vectors: ⟨X^(i), Ỹ^(j)⟩ = δ_ij  ⇔  (fullᵀ Σ) Ỹ = e_j.
    let lhs = full.transpose() * skew_matrix(n);
    let inv = lhs
        .try_inverse()
        .ok_or_else(|| Error::Internal("extended basis not invertible".into()))?;
    let duals: Vec<PhaseVector> = (0..k)
        .map(|j| PhaseVector::from_coords(&inv.column(j).into()))
        .collect::<Result<Vec<_>>>()?;
    // Isotropy correction.
    let mut gauge = Vec::with_capacity(k);
    for a in 0..k {
        let mut y = duals[a].clone();
        for c in 0..k {
            let coef = skew_product(&duals[a], &duals[c])? * C64::new(0.5, 0.0);
            y = y.sub(&l.basis()[c].scale(coef));
        }
        gauge.push(y);
    }
    let g = MeasuredSubspace::new(n, gauge, 1.0)?;
    debug_assert!(g.is_isotropic(1e-9));
    Ok(g)
}

/// Split `y` into components along `l`, along `g`, and skew-orthogonal to
/// both, for a (constraint, gauge) pair with invertible pairing.
pub fn decompose_against(
    l: &ConstraintSet,
    g: &MeasuredSubspace,
    y: &PhaseVector,
) -> Result<(PhaseVector, PhaseVector, PhaseVector)> {
    let k = l.k();
    let n = l.ambient_n();
    if g.dim() != k || g.ambient_n() != n || y.dim() != n {
        return Err(Error::InvalidInput(
            "gauge pair and vector dimensions do not match".into(),
        ));
    }
    if k == 0 {
        return Ok((PhaseVector::zero(n), PhaseVector::zero(n), y.clone()));
    }
    // Pairing M_ab = ⟨X^(a), Y^(b)⟩ must be invertible.
    let mut pairing = CMat::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            pairing[(a, b)] = skew_product(&l.basis()[a], &g.basis()[b])?;
        }
    }
    let pinv = pairing.clone().try_inverse().ok_or_else(|| {
        Error::InvalidInput("singular pairing matrix: not a gauge pair".into())
    })?;
    // ⟨X^(c), y⟩ = (M β)_c and ⟨Y^(c), y⟩ = −(Mᵀ α)_c.
    let sx = CVec::from_fn(k, |c, _| skew_product(&l.basis()[c], y).unwrap());
    let sy = CVec::from_fn(k, |c, _| skew_product(&g.basis()[c], y).unwrap());
    let beta = &pinv * sx;
    let alpha = -(pinv.transpose() * sy);
    let mut x_part = PhaseVector::zero(n);
    let mut g_part = PhaseVector::zero(n);
    for a in 0..k {
        x_part = x_part.add(&l.basis()[a].scale(alpha[a]));
        g_part = g_part.add(&g.basis()[a].scale(beta[a]));
    }
    let z_part = y.sub(&x_part).sub(&g_part);
    Ok((x_part, g_part, z_part))
}

/// Jacobian Δ(P) = |det P| · J_dst / J_src of a linear map expressed in the
/// stored bases of two measured subspaces; invariant under basis change.
/// Returns 0 for a singular map.
pub fn linear_jacobian(map: &CMat, src: &MeasuredSubspace, dst: &MeasuredSubspace) -> f64 {
    if map.nrows() != map.ncols() || map.nrows() != src.dim() || dst.dim() != src.dim() {
        return 0.0;
    }
    if map.nrows() == 0 {
        return dst.measure_scale() / src.measure_scale();
    }
    map.clone().determinant().norm() * dst.measure_scale() / src.measure_scale()
}

/// The pairing constant Δ = J·K·(2π)^k relating the constraint measure
/// (density J), the gauge measure (density K) and the Fourier kernel on a
/// dual pair of k-dimensional planes.
pub fn gauge_pairing_constant(k: usize, j: f64, kk: f64) -> f64 {
    j * kk * (2.0 * std::f64::consts::PI).powi(k as i32)
}
