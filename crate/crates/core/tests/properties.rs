//! Randomized property tests over valid random instances.
//!
//! Structured instances (valid Gaussian matrices, isotropic planes,
//! compatible Hamiltonians) come from seeded generators; purely algebraic
//! identities additionally run under proptest.

use germflow::dynamics::{classical_flow, evolve_gaussian_detailed, riccati_evolve};
use germflow::gaussian::{inner_constrained, norm_constrained_detailed, GaussianState};
use germflow::germ::{
    h_germ, matrix_from_germ, nu_orthonormalize, p_minus, real_vector_in_h_germ,
    s_germ_from_matrix,
};
use germflow::linalg::{self, CMat, CVec};
use germflow::phase::{
    build_gauge_plane, decompose_against, nu_form, skew_product, PhaseVector,
};
use germflow::sample;
use germflow::stability;
use germflow::C64;
use proptest::prelude::*;
use rand::Rng;

fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

proptest! {
    #[test]
    fn skew_product_antisymmetric_bilinear(
        p1 in prop::collection::vec(-10.0f64..10.0, 1..5),
        s in -3.0f64..3.0,
    ) {
        let n = p1.len();
        let q1: Vec<f64> = p1.iter().map(|x| x * 0.7 - 1.0).collect();
        let p2: Vec<f64> = p1.iter().map(|x| 2.0 - x).collect();
        let q2: Vec<f64> = p1.iter().map(|x| x * x * 0.1).collect();
        let y1 = PhaseVector::from_real(&p1, &q1).unwrap();
        let y2 = PhaseVector::from_real(&p2, &q2).unwrap();
        let ab = skew_product(&y1, &y2).unwrap();
        let ba = skew_product(&y2, &y1).unwrap();
        prop_assert!((ab + ba).norm() < 1e-12 * (1.0 + ab.norm()));
        // Bilinearity in the first slot.
        let scaled = skew_product(&y1.scale(c64(s, 0.0)), &y2).unwrap();
        prop_assert!((scaled - ab * s).norm() < 1e-10 * (1.0 + ab.norm() * s.abs()));
        let _ = n;
    }

    #[test]
    fn weyl_group_law_random(
        p in -2.0f64..2.0, q in -2.0f64..2.0,
        p2 in -2.0f64..2.0, q2 in -2.0f64..2.0,
    ) {
        let s = GaussianState::new(c64(1.0, 0.0), CMat::from_element(1, 1, c64(0.2, 0.9)))
            .unwrap()
            .to_exp_quadratic();
        let x = PhaseVector::from_real(&[p], &[q]).unwrap();
        let xp = PhaseVector::from_real(&[p2], &[q2]).unwrap();
        let lhs = germflow::gaussian::weyl_apply(&x, &germflow::gaussian::weyl_apply(&xp, &s).unwrap()).unwrap();
        let skew = skew_product(&x, &xp).unwrap();
        let mut rhs = germflow::gaussian::weyl_apply(&x.add(&xp), &s).unwrap();
        rhs.c *= (C64::i() * skew * 0.5).exp();
        prop_assert!(lhs.approx_eq(&rhs, 1e-10));
    }
}

#[test]
fn gauge_pairs_on_random_isotropic_planes() {
    let mut rng = sample::rng(11);
    for trial in 0..60 {
        let n = rng.random_range(1..=4usize);
        let k = rng.random_range(1..=n);
        let l = sample::random_constraints_any(&mut rng, n, k);
        let g = build_gauge_plane(&l).expect("gauge plane");
        assert!(g.is_isotropic(1e-10), "trial {trial}");
        for a in 0..k {
            for b in 0..k {
                let want = if a == b { 1.0 } else { 0.0 };
                let got = skew_product(&l.basis()[a], &g.basis()[b]).unwrap();
                assert!(
                    (got - c64(want, 0.0)).norm() < 1e-10,
                    "pairing defect at trial {trial}"
                );
            }
        }
        // Decomposition reconstructs and the remainder is skew-orthogonal
        // to both planes.
        let y = {
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            PhaseVector::from_real(&p, &q).unwrap()
        };
        let (x_part, g_part, z_part) = decompose_against(&l, &g, &y).unwrap();
        let recon = x_part.add(&g_part).add(&z_part);
        assert!(recon.sub(&y).norm() <= 1e-10 * y.norm().max(1.0));
        for v in l.basis().iter().chain(g.basis()) {
            assert!(skew_product(v, &z_part).unwrap().norm() < 1e-10 * y.norm().max(1.0));
        }
    }
}

#[test]
fn germ_axioms_on_random_instances() {
    let mut rng = sample::rng(23);
    for _ in 0..60 {
        let n = rng.random_range(1..=4usize);
        let k = rng.random_range(0..=n);
        let a = sample::random_gaussian_matrix(&mut rng, n);
        let l = sample::random_constraints_any(&mut rng, n, k);

        let s = s_germ_from_matrix(&a).unwrap();
        s.validate(1e-9).unwrap();
        let back = matrix_from_germ(&nu_orthonormalize(&s).unwrap()).unwrap();
        assert!((back - &a).norm() <= 1e-10 * a.norm().max(1.0));

        let hg = h_germ(&a, &l).unwrap();
        hg.validate(1e-9).unwrap();

        let pm = p_minus(&a, &l).unwrap();
        assert!(pm.jacobian() > 0.0);
        if k > 0 {
            assert!(linalg::cond(pm.matrix()).is_finite());
        }
    }
}

#[test]
fn real_membership_characterizes_constraints() {
    let mut rng = sample::rng(37);
    for _ in 0..100 {
        let n = rng.random_range(1..=4usize);
        let k = rng.random_range(0..=n);
        let a = sample::random_gaussian_matrix(&mut rng, n);
        let l = sample::random_constraints_any(&mut rng, n, k);
        // Random combination of constraint vectors: member.
        if k > 0 {
            let mut y = PhaseVector::zero(n);
            for b in l.basis() {
                y = y.add(&b.scale(c64(rng.random_range(-2.0..2.0), 0.0)));
            }
            if y.norm() > 1e-3 {
                assert!(real_vector_in_h_germ(&a, &l, &y, 1e-8).unwrap());
            }
        }
        // Random real vector: non-member unless it happens to lie in L,
        // which has measure zero; guard by distance from the span.
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = PhaseVector::from_real(&p, &q).unwrap();
        if l.subspace().membership_residual(&y) > 1e-3 {
            assert!(!real_vector_in_h_germ(&a, &l, &y, 1e-8).unwrap());
        }
    }
}

#[test]
fn norm_positive_and_routes_agree() {
    let mut rng = sample::rng(41);
    for trial in 0..200 {
        let n = rng.random_range(1..=4usize);
        let k = rng.random_range(0..=n);
        let g = sample::random_gaussian_state(&mut rng, n);
        let l = sample::random_constraints(&mut rng, n, k);
        let d = norm_constrained_detailed(&g, &l)
            .unwrap_or_else(|e| panic!("trial {trial}: {e}"));
        assert!(d.norm > 0.0);
        if let Some(c) = d.coordinate_route {
            assert!((d.germ_route - c).abs() <= 1e-9 * d.germ_route.max(c));
        }
    }
}

#[test]
fn inner_product_is_hermitian() {
    let mut rng = sample::rng(43);
    for _ in 0..40 {
        let n = rng.random_range(1..=3usize);
        let k = rng.random_range(0..=n);
        let g1 = sample::random_gaussian_state(&mut rng, n);
        let g2 = sample::random_gaussian_state(&mut rng, n);
        let l = sample::random_constraints(&mut rng, n, k);
        let ab = inner_constrained(&g1, &g2, &l).unwrap();
        let ba = inner_constrained(&g2, &g1, &l).unwrap();
        assert!((ab - ba.conj()).norm() <= 1e-9 * ab.norm().max(1.0));
        let self_inner = inner_constrained(&g1, &g1, &l).unwrap();
        let norm = germflow::gaussian::norm_constrained(&g1, &l).unwrap();
        assert!((self_inner.re - norm).abs() <= 1e-9 * norm);
        assert!(self_inner.im.abs() <= 1e-9 * norm);
    }
}

#[test]
fn eta_projection_properties() {
    let mut rng = sample::rng(47);
    for _ in 0..100 {
        let n = rng.random_range(1..=4usize);
        let k = rng.random_range(1..=n);
        let g = sample::random_gaussian_state(&mut rng, n);
        let l = sample::random_constraints(&mut rng, n, k);
        let pr = germflow::gaussian::project_eta_detailed(&g, &l).unwrap();
        // Ǎ𝒬 = 𝒫 on the constraint block (and hence on the whole germ).
        let resid = (pr.projected.a_check() * l.q_matrix() - l.p_matrix()).norm();
        assert!(resid <= 1e-9 * pr.projected.a_check().norm().max(1.0));
        // Both č routes agree.
        assert!(
            (pr.c_check_direct - pr.c_check_germ).norm()
                <= 1e-8 * pr.c_check_direct.norm()
        );
        // Im Ǎ is PSD with kernel exactly the coordinate projections of L.
        let im = linalg::imag_part(pr.projected.a_check());
        let eigs = im.clone().symmetric_eigen().eigenvalues;
        let mut zero_count = 0;
        for &e in eigs.iter() {
            assert!(e > -1e-9);
            if e < 1e-9 {
                zero_count += 1;
            }
        }
        assert_eq!(zero_count, k);
        let imc = im.map(|x| C64::new(x, 0.0));
        assert!((imc * l.q_matrix()).norm() < 1e-8);
    }
}

#[test]
fn symplectic_and_transport_properties() {
    let mut rng = sample::rng(53);
    for _ in 0..25 {
        let n = rng.random_range(1..=4usize);
        let h = sample::random_hamiltonian(&mut rng, n, 0.7, c64(0.0, 0.0));
        for &t in &[0.5, 2.0, 10.0] {
            let u = classical_flow(&h, t);
            assert!(u.symplectic_residual() <= 1e-9);
        }
        // Germ transport: u_t r(A(0)) = r(A(t)).
        let g0 = sample::random_gaussian_state(&mut rng, n);
        let t = rng.random_range(0.2..1.0);
        let out = evolve_gaussian_detailed(&g0, &h, t).unwrap();
        let u = classical_flow(&h, t);
        let frame0 = s_germ_from_matrix(g0.a()).unwrap().frame();
        let frame_t = s_germ_from_matrix(out.state.a()).unwrap().frame();
        let moved = linalg::real_to_complex(u.matrix()) * frame0;
        let angle = linalg::max_principal_angle(&moved, &frame_t);
        assert!(angle <= 1e-8, "angle {angle:.3e} (t = {t}, n = {n})");

        // Riccati frame route agrees with the exponential route.
        let rk = riccati_evolve(&g0, &h, t).unwrap();
        assert!((&rk.a - out.state.a()).norm() <= 1e-8 * out.state.a().norm().max(1.0));
        assert!((rk.c - out.state.c()).norm() <= 1e-8 * out.state.c().norm().max(1e-3));
    }
}

#[test]
fn h_germ_transport_preserves_membership() {
    // For Y(0) in the extended germ, u_t Y(0) lies in the transported germ
    // whenever the flow is constraint-compatible.
    let mut rng = sample::rng(59);
    for _ in 0..20 {
        let n = rng.random_range(2..=4usize);
        let k = rng.random_range(1..=n - 1);
        let l = sample::random_constraints(&mut rng, n, k);
        let h = sample::random_compatible_hamiltonian(&mut rng, &l, 0.8, c64(0.0, 0.0));
        let g0 = sample::random_gaussian_state(&mut rng, n);
        let t = rng.random_range(0.2..1.0);
        let out = evolve_gaussian_detailed(&g0, &h, t).unwrap();
        let u = classical_flow(&h, t);
        let germ0 = h_germ(g0.a(), &l).unwrap();
        let germ_t = h_germ(out.state.a(), &l).unwrap();
        for v in germ0.vectors() {
            let moved = u
                .apply(&v) // complexified transport
                .unwrap();
            assert!(germ_t.membership_residual(&moved) <= 1e-8);
        }
    }
}

#[test]
fn stable_mode_sets_are_well_formed() {
    let mut rng = sample::rng(61);
    let mut done = 0;
    while done < 25 {
        let n = rng.random_range(1..=4usize);
        let k = rng.random_range(0..=(n - 1).min(2));
        let l = sample::random_constraints(&mut rng, n, k);
        let h = sample::random_stable_compatible_hamiltonian(&mut rng, &l, 0.8, c64(0.0, 0.0));
        let (q, gr) = stability::reduced_generator(&h, &l).unwrap();
        let verdict = stability::stability_check(&gr, 1e-9);
        assert!(verdict.stable, "constructed system must be stable");
        let modes = stability::mode_decomposition(&gr, &q).unwrap();
        assert_eq!(modes.len(), n - k);
        modes.validate(&q, &gr, 1e-8).unwrap();
        // Positive-definite transverse blocks give positive frequencies.
        for b in modes.betas() {
            assert!(b > 0.0);
        }

        // Mode-reconstruction of the generator.
        let resid = stability::gamma_reconstruct_residual(&modes, &h, &l).unwrap();
        assert!(resid <= 1e-8, "reconstruction residual {resid}");

        // The assembled germ satisfies the extended axioms and membership.
        let a = stability::germ_from_modes(&l, &modes).unwrap();
        let hg = h_germ(&a, &l).unwrap();
        hg.validate(1e-8).unwrap();

        // Stationarity of the ground state under the reduced flow.
        let st = stability::eigenstate_stationarity_check(&h, &l, &modes).unwrap();
        assert!(st.ok, "{st:?}");
        done += 1;
    }
}

#[test]
fn spectrum_invariant_under_zero_mode_rechoice() {
    // Re-running the decomposition after an orthogonal change of the
    // quotient representatives leaves the betas (and hence the spectrum)
    // unchanged.
    let h = germflow::dynamics::QuadraticHamiltonian::new(
        nalgebra::DMatrix::identity(2, 2),
        nalgebra::DMatrix::zeros(2, 2),
        nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0])),
        c64(0.0, 0.0),
    )
    .unwrap();
    let l = germflow::phase::ConstraintSet::empty(2);
    let (q, gr) = stability::reduced_generator(&h, &l).unwrap();
    let modes = stability::mode_decomposition(&gr, &q).unwrap();
    // Degenerate β = 1 pair: spectrum must be the total-occupation ladder.
    let levels = stability::spectrum(&modes, 2);
    let want = [1.0, 2.0, 2.0, 3.0, 3.0, 3.0];
    assert_eq!(levels.len(), want.len());
    for ((_, e), w) in levels.iter().zip(want) {
        assert!((e - w).abs() < 1e-10);
    }
}

#[test]
fn ladder_bounds_on_random_coefficient_sets() {
    let mut rng = sample::rng(67);
    for seed in 0..5u64 {
        let n = rng.random_range(1..=3usize);
        let l = germflow::phase::ConstraintSet::empty(n);
        let h = sample::random_stable_compatible_hamiltonian(&mut rng, &l, 1.0, c64(0.0, 0.0));
        let (q, gr) = stability::reduced_generator(&h, &l).unwrap();
        let modes = stability::mode_decomposition(&gr, &q).unwrap();
        let rep = stability::ladder_bound_check(&modes, 3, 100, 1000 + seed).unwrap();
        assert!(rep.ok, "{rep:?}");
    }
}

#[test]
fn oracle_agreement_small_dimensions() {
    let mut rng = sample::rng(71);
    for _ in 0..12 {
        let n = rng.random_range(1..=2usize);
        let k = rng.random_range(0..=n.min(2));
        let g = sample::random_gaussian_state(&mut rng, n);
        let l = sample::random_constraints(&mut rng, n, k);
        let closed = germflow::gaussian::norm_constrained(&g, &l).unwrap();
        let quad = germflow::oracle::quadrature_constrained_norm(&g, &l, None, 16).unwrap();
        assert!(
            (closed - quad).abs() <= 1e-5 * quad.abs(),
            "closed {closed} vs quadrature {quad}"
        );
    }
}

#[test]
fn nu_form_positive_on_germ_members() {
    let mut rng = sample::rng(73);
    for _ in 0..50 {
        let n = rng.random_range(1..=4usize);
        let a = sample::random_gaussian_matrix(&mut rng, n);
        let germ = s_germ_from_matrix(&a).unwrap();
        // Random complex combination.
        let coef: Vec<C64> = (0..n)
            .map(|_| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut y = PhaseVector::zero(n);
        for (c, v) in coef.iter().zip(germ.vectors()) {
            y = y.add(&v.scale(*c));
        }
        if y.norm() > 1e-6 {
            let nu = nu_form(&y, &y).unwrap();
            assert!(nu.re > 0.0 && nu.im.abs() < 1e-10 * nu.re);
        }
    }
}

#[test]
fn decompose_rejects_subspace_mismatch() {
    let l = germflow::phase::ConstraintSet::from_real_rows(1, &[vec![0.0, 1.0]], 1.0).unwrap();
    // A "gauge" plane equal to L itself has singular pairing.
    let fake = germflow::phase::MeasuredSubspace::new(
        1,
        vec![PhaseVector::from_real(&[0.0], &[2.0]).unwrap()],
        1.0,
    )
    .unwrap();
    let y = PhaseVector::from_real(&[1.0], &[1.0]).unwrap();
    assert!(decompose_against(&l, &fake, &y).is_err());
}

#[test]
fn evolve_rejects_dimension_mismatch() {
    let g = GaussianState::new(c64(1.0, 0.0), CMat::from_element(1, 1, C64::i())).unwrap();
    let h = germflow::dynamics::QuadraticHamiltonian::new(
        nalgebra::DMatrix::identity(2, 2),
        nalgebra::DMatrix::zeros(2, 2),
        nalgebra::DMatrix::identity(2, 2),
        c64(0.0, 0.0),
    )
    .unwrap();
    assert!(germflow::dynamics::evolve_gaussian(&g, &h, 1.0).is_err());
}

#[test]
fn orthonormal_frame_coordinate_identity() {
    // After ν-orthonormalization, |det C|² · det((A−A*)/i) = 1.
    let mut rng = sample::rng(79);
    for _ in 0..30 {
        let n = rng.random_range(1..=4usize);
        let a = sample::random_gaussian_matrix(&mut rng, n);
        let ortho = nu_orthonormalize(&s_germ_from_matrix(&a).unwrap()).unwrap();
        let det_c = ortho.frame_q().determinant().norm();
        let im2 = (&a - a.map(|z| z.conj())).map(|z| (z / C64::i()).re);
        let prod = det_c * det_c * im2.determinant();
        assert!((prod - 1.0).abs() < 1e-9, "identity defect {prod}");
        let _ = CVec::zeros(1);
    }
}
