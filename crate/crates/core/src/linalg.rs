//! Small dense complex linear-algebra helpers used across the crate.
//!
//! Everything here operates on matrices of order ≲ 10, so robustness and
//! determinism win over asymptotics throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real_to_complex(m: &RMat) -> CMat {
    m.map(|x| c(x, 0.0))
}

pub fn symmetric_part(m: &CMat) -> CMat {
    (m + m.transpose()).scale(0.5)
}

pub fn is_symmetric(m: &CMat, tol: f64) -> bool {
    let scale = m.norm().max(1.0);
    (m - m.transpose()).norm() <= tol * scale
}

pub fn imag_part(m: &CMat) -> RMat {
    m.map(|z| z.im)
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eig_sym(m: &RMat) -> f64 {
    let sym = (m + m.transpose()).scale(0.5);
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Right null space of a complex matrix at relative rank tolerance `rank_tol`.
pub fn null_space(m: &CMat, rank_tol: f64) -> Vec<CVec> {
    // Pad wide matrices with zero rows: the thin SVD of an m×n matrix with
    // m < n does not carry the trailing rows of Vᵀ that span the kernel.
    let mm = if m.nrows() < m.ncols() {
        let mut padded = CMat::zeros(m.ncols(), m.ncols());
        padded.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = mm.svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rank_tol * smax.max(1e-300);
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cut {
            out.push(v_t.row(i).transpose().map(|z| z.conj()));
        }
    }
    out
}

/// Right null space at an absolute singular-value cutoff.
pub fn null_space_abs(m: &CMat, abs_tol: f64) -> Vec<CVec> {
    let mm = if m.nrows() < m.ncols() {
        let mut padded = CMat::zeros(m.ncols(), m.ncols());
        padded.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = mm.svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= abs_tol {
            out.push(v_t.row(i).transpose().map(|z| z.conj()));
        }
    }
    out
}

/// Numerical rank at relative tolerance.
pub fn rank(m: &CMat, rank_tol: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.singular_values
        .iter()
        .filter(|&&s| s > rank_tol * smax.max(1e-300))
        .count()
}

/// Least-squares solve of `basis * x = y`; returns coefficients and the
/// relative residual ‖basis·x − y‖ / max(‖y‖, 1e-300).
pub fn least_squares(basis: &CMat, y: &CVec) -> (CVec, f64) {
    let svd = basis.clone().svd(true, true);
    let x = svd
        .solve(y, 1e-14)
        .unwrap_or_else(|_| CVec::zeros(basis.ncols()));
    let res = (basis * &x - y).norm() / y.norm().max(1e-300);
    (x, res)
}

/// Condition number from singular values (∞ when rank-deficient).
pub fn cond(m: &CMat) -> f64 {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Principal matrix square root by the Denman–Beavers iteration.
///
/// Requires the spectrum to avoid the closed negative real axis; all uses in
/// this crate pass matrices whose numerical range lies in the open right
/// half-plane, where the iteration converges quadratically.
pub fn principal_sqrt(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    let id = CMat::identity(n, n);
    let mut y = m.clone();
    let mut z = id.clone();
    for _ in 0..100 {
        let y_inv = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular iterate in matrix sqrt".into()))?;
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular iterate in matrix sqrt".into()))?;
        let y_next = (&y + &z_inv).scale(0.5);
        let z_next = (&z + &y_inv).scale(0.5);
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * y.norm().max(1e-300) {
            let res = (&y * &y - m).norm() / m.norm().max(1e-300);
            if res > 1e-10 {
                return Err(Error::Degenerate(format!(
                    "matrix sqrt residual {res:.3e}"
                )));
            }
            return Ok(y);
        }
    }
    Err(Error::Degenerate("matrix sqrt did not converge".into()))
}

/// det(√M) = Π √λ_i with principal branches taken per eigenvalue.
///
/// This is the square-root determinant that Gaussian integrals of
/// exp(-½ ξᵀMξ) produce when the numerical range of M lies in the right
/// half-plane; taking the principal branch of det M directly would pick the
/// wrong sheet once arg det exceeds π.
pub fn sqrt_det(m: &CMat) -> Result<C64> {
    let s = principal_sqrt(m)?;
    Ok(s.determinant())
}

pub fn determinant(m: &CMat) -> C64 {
    m.clone().determinant()
}

/// Eigenvalues of a real matrix, as complex numbers.
pub fn eigenvalues_real(m: &RMat) -> Vec<C64> {
    m.clone().complex_eigenvalues().iter().cloned().collect()
}

/// Eigen-decomposition of a real matrix over ℂ.
///
/// Eigenvalues are clustered at `cluster_tol`·max(‖m‖, 1) — the floor keeps
/// a numerically-zero matrix from splitting its kernel into spurious rank-1
/// eigenspaces — and returned sorted by (Im, Re); each cluster carries the
/// null-space basis of (m − λI).
pub fn eigen_clusters_real(m: &RMat, cluster_tol: f64) -> Vec<(C64, Vec<CVec>)> {
    let scale = m.norm().max(1.0);
    let mut vals = eigenvalues_real(m);
    vals.sort_by(|a, b| {
        (a.im, a.re)
            .partial_cmp(&(b.im, b.re))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for v in vals {
        match clusters.last_mut() {
            Some((rep, count)) if (v - *rep).norm() <= cluster_tol * scale => {
                *rep = (*rep * (*count as f64) + v) / ((*count + 1) as f64);
                *count += 1;
            }
            _ => clusters.push((v, 1)),
        }
    }
    let mc = real_to_complex(m);
    let id = CMat::identity(m.nrows(), m.ncols());
    clusters
        .into_iter()
        .map(|(lambda, count)| {
            let shifted = &mc - &id * lambda;
            // Absolute cutoff sized to the cluster diameter so that every
            // direction of the cluster's eigenspace is captured.
            let mut basis = null_space_abs(&shifted, 10.0 * cluster_tol * scale);
            basis.truncate(count);
            (lambda, basis)
        })
        .collect()
}

/// Orthonormalize the columns of a complex matrix (thin QR via
/// modified Gram–Schmidt); zero columns are dropped.
pub fn orthonormal_columns(m: &CMat, tol: f64) -> CMat {
    let mut cols: Vec<CVec> = Vec::new();
    let scale = m.norm().max(1e-300);
    for j in 0..m.ncols() {
        let mut v: CVec = m.column(j).into();
        for _ in 0..2 {
            for e in &cols {
                let proj = e.dotc(&v);
                v -= e * proj;
            }
        }
        let n = v.norm();
        if n > tol * scale {
            cols.push(v.unscale(n));
        }
    }
    if cols.is_empty() {
        return CMat::zeros(m.nrows(), 0);
    }
    CMat::from_columns(&cols)
}

/// Largest principal angle (radians) between the column spans of `a` and
/// `b`, via the sine form ‖(I − Q_aQ_a†)Q_b‖₂ — the cosine form loses all
/// resolution below √ε for nearly equal subspaces.
pub fn max_principal_angle(a: &CMat, b: &CMat) -> f64 {
    let qa = orthonormal_columns(a, 1e-12);
    let qb = orthonormal_columns(b, 1e-12);
    if qa.ncols() != qb.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if qa.ncols() == 0 {
        return 0.0;
    }
    let resid = &qb - &qa * (qa.adjoint() * &qb);
    let svd = resid.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    smax.clamp(0.0, 1.0).asin()
}

/// Relative residual of `y` against the column span of `basis`.
pub fn span_residual(basis: &CMat, y: &CVec) -> f64 {
    least_squares(basis, y).1
}

/// Real matrix exponential (nalgebra's scaling-and-squaring Padé).
pub fn expm(m: &RMat) -> RMat {
    m.clone().exp()
}

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // p_n(x) and its derivative via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Unwrap `raw` onto the branch nearest `prev` (both angles in radians).
pub fn unwrap_near(prev: f64, raw: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = raw;
    while a - prev > std::f64::consts::PI {
        a -= two_pi;
    }
    while prev - a > std::f64::consts::PI {
        a += two_pi;
    }
    a
}
