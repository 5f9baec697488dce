//! Seeded random instances for tests and benchmarks (feature `sample`).
//!
//! Generators produce well-conditioned inputs: matrices with positive-definite
//! imaginary part bounded away from zero, isotropic constraint bases whose
//! coordinate projections stay invertible, and Hamiltonians of bounded norm.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::QuadraticHamiltonian;
use crate::gaussian::GaussianState;
use crate::linalg::{CMat, RMat};
use crate::phase::{ConstraintSet, MeasuredSubspace, PhaseVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn random_real_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> RMat {
    RMat::from_fn(rows, cols, |_, _| uniform(rng, -scale, scale))
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> RMat {
    let m = random_real_matrix(rng, n, n, scale);
    (&m + m.transpose()).scale(0.5)
}

/// A random n×n complex symmetric matrix with Im A ⪰ μ·I, μ ≥ 0.3.
pub fn random_gaussian_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let re = random_symmetric(rng, n, 1.0);
    let r = random_real_matrix(rng, n, n, 0.7);
    let im = &r * r.transpose() + RMat::identity(n, n).scale(0.3);
    CMat::from_fn(n, n, |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

/// A random valid Gaussian state with |c| of order one.
pub fn random_gaussian_state(rng: &mut ChaCha8Rng, n: usize) -> GaussianState {
    let a = random_gaussian_matrix(rng, n);
    let c = C64::new(uniform(rng, 0.4, 1.6), uniform(rng, -1.0, 1.0));
    GaussianState::new(c, a).expect("generator produces valid states")
}

/// A random isotropic constraint plane of dimension k whose coordinate
/// projection is well conditioned (resampled until the smallest singular
/// value of the q-part is decent). `measure_scale` is drawn from [0.5, 2].
pub fn random_constraints(rng: &mut ChaCha8Rng, n: usize, k: usize) -> ConstraintSet {
    assert!(k <= n);
    if k == 0 {
        return ConstraintSet::empty(n);
    }
    loop {
        // Isotropy by construction: columns (P; Q) with PᵀQ symmetric.
        let q = random_real_matrix(rng, n, k, 1.0);
        let s = random_symmetric(rng, k, 1.0);
        let qtq = q.transpose() * &q;
        let Some(qtq_inv) = qtq.try_inverse() else {
            continue;
        };
        let p = &q * (qtq_inv * s);
        let sv = q.clone().svd(false, false).singular_values;
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        if smin < 0.25 || smax > 4.0 {
            continue;
        }
        let basis: Vec<PhaseVector> = (0..k)
            .map(|a| {
                let pc: Vec<f64> = (0..n).map(|i| p[(i, a)]).collect();
                let qc: Vec<f64> = (0..n).map(|i| q[(i, a)]).collect();
                PhaseVector::from_real(&pc, &qc).unwrap()
            })
            .collect();
        let scale = uniform(rng, 0.5, 2.0);
        let Ok(sub) = MeasuredSubspace::new(n, basis, scale) else {
            continue;
        };
        if let Ok(l) = ConstraintSet::new(sub) {
            return l;
        }
    }
}

/// A random symplectic matrix: the time-one flow of a random quadratic
/// Hamiltonian.
pub fn random_symplectic(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> RMat {
    let h = random_hamiltonian(rng, n, scale, C64::new(0.0, 0.0));
    crate::linalg::expm(&h.generator())
}

/// A random isotropic plane that need not project well onto the coordinate
/// plane: the image of the standard coordinate-direction plane under a
/// random symplectic map, so isotropy holds exactly.
pub fn random_constraints_any(rng: &mut ChaCha8Rng, n: usize, k: usize) -> ConstraintSet {
    assert!(k <= n);
    if k == 0 {
        return ConstraintSet::empty(n);
    }
    loop {
        let s = random_symplectic(rng, n, 0.8);
        let basis: Vec<PhaseVector> = (0..k)
            .map(|a| {
                let col: Vec<f64> = (0..2 * n).map(|i| s[(i, n + a)]).collect();
                PhaseVector::from_real(&col[..n], &col[n..]).unwrap()
            })
            .collect();
        let Ok(sub) = MeasuredSubspace::new(n, basis, 1.0) else {
            continue;
        };
        if let Ok(l) = ConstraintSet::new(sub) {
            return l;
        }
    }
}

/// A random quadratic Hamiltonian with blocks bounded by `scale` and the
/// given scalar term.
pub fn random_hamiltonian(rng: &mut ChaCha8Rng, n: usize, scale: f64, epsilon: C64) -> QuadraticHamiltonian {
    let h_pp = random_symmetric(rng, n, scale);
    let h_qq = random_symmetric(rng, n, scale);
    let h_qp = random_real_matrix(rng, n, n, scale);
    QuadraticHamiltonian::new(h_pp, h_qp, h_qq, epsilon).expect("valid by construction")
}

/// A random Hamiltonian compatible with `l` whose reduced flow is stable:
/// the transverse block of Γ is drawn positive-definite, so the reduced
/// dynamics conserves a positive quadratic form.
pub fn random_stable_compatible_hamiltonian(
    rng: &mut ChaCha8Rng,
    l: &ConstraintSet,
    scale: f64,
    epsilon: C64,
) -> QuadraticHamiltonian {
    let n = l.ambient_n();
    let k = l.k();
    let g = crate::phase::build_gauge_plane(l).expect("gauge plane");
    let adapted = crate::dynamics::adapted_frame(l, &g).expect("adapted frame");
    let m = 2 * n;
    let zdim = m - 2 * k;
    let mut gamma = DMatrix::<f64>::zeros(m, m);
    // Constraint-block couplings are unrestricted.
    for i in 0..k {
        for j in 0..=i {
            let v = uniform(rng, -scale, scale);
            gamma[(i, j)] = v;
            gamma[(j, i)] = v;
        }
        for j in 0..m {
            if j >= k && j < 2 * k {
                let v = uniform(rng, -scale, scale);
                gamma[(i, j)] = v;
                gamma[(j, i)] = v;
            }
        }
        for j in 2 * k..m {
            let v = uniform(rng, -scale, scale);
            gamma[(i, j)] = v;
            gamma[(j, i)] = v;
        }
    }
    // Positive-definite transverse block.
    let r = random_real_matrix(rng, zdim, zdim, scale);
    let zz = &r * r.transpose() + DMatrix::<f64>::identity(zdim, zdim).scale(0.3 * scale.max(0.1));
    gamma
        .view_mut((2 * k, 2 * k), (zdim, zdim))
        .copy_from(&zz);
    let t = adapted.map(|z| z.re);
    let gamma_coord = &t * gamma * t.transpose();
    QuadraticHamiltonian::from_gamma_coord(&gamma_coord, epsilon).expect("valid by construction")
}

/// A random Hamiltonian compatible with `l`: built in the adapted basis with
/// the gauge–gauge and gauge–transverse blocks zeroed.
pub fn random_compatible_hamiltonian(
    rng: &mut ChaCha8Rng,
    l: &ConstraintSet,
    scale: f64,
    epsilon: C64,
) -> QuadraticHamiltonian {
    let n = l.ambient_n();
    let k = l.k();
    if k == 0 {
        return random_hamiltonian(rng, n, scale, epsilon);
    }
    let g = crate::phase::build_gauge_plane(l).expect("gauge plane");
    let adapted = crate::dynamics::adapted_frame(l, &g).expect("adapted frame");
    let m = 2 * n;
    // Blocks in adapted order [X (k) | Y (k) | Z (2n-2k)].
    let mut gamma = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let in_y_i = i >= k && i < 2 * k;
            let in_y_j = j >= k && j < 2 * k;
            let in_z_i = i >= 2 * k;
            let in_z_j = j >= 2 * k;
            // Forbidden: Y⊗Y and Y⊗Z couplings.
            if (in_y_i && in_y_j) || (in_y_i && in_z_j) || (in_z_i && in_y_j) {
                continue;
            }
            let v = uniform(rng, -scale, scale);
            gamma[(i, j)] = v;
            gamma[(j, i)] = v;
        }
    }
    let t = adapted.map(|z| z.re);
    let gamma_coord = &t * gamma * t.transpose();
    crate::dynamics::QuadraticHamiltonian::from_gamma_coord(&gamma_coord, epsilon)
        .expect("valid by construction")
}
