//! Property tests for the structural invariants: metric axioms of the
//! cocycle distance, spectral identities, domination at multiples,
//! zero-pattern preservation, and the quantitative path bounds.

use cocycle_lab::cocycle::{Cocycle2, LineBundle, Splitting2};
use cocycle_lab::matrix::{Mat2, Mat3, Vec2, Vec3};
use cocycle_lab::paths::{
    bounded_after_perturbation, build_rotation_path, trace_path, ROTATION_LIPSCHITZ,
};
use cocycle_lab::sampling::{random_small_angle_instance, random_transition_system, rng};
use cocycle_lab::spectrum::{char_poly_residual2, char_poly_residual3, spectrum2, spectrum3};
use cocycle_lab::transitions::build_dn;
use cocycle_lab::unfolding::renormalize;
use cocycle_lab::Cocycle3;
use num_complex::Complex64;
use proptest::prelude::*;

fn mat2_entries() -> impl Strategy<Value = [f64; 4]> {
    proptest::array::uniform4(-2.0f64..2.0)
}

fn invertible_mat2() -> impl Strategy<Value = Mat2> {
    mat2_entries()
        .prop_map(|[a, b, c, d]| Mat2::new(a, b, c, d))
        .prop_filter("determinant bounded away from 0", |m| m.det().abs() > 0.1)
}

fn invertible_mat3() -> impl Strategy<Value = Mat3> {
    proptest::array::uniform9(-2.0f64..2.0)
        .prop_map(|e| Mat3::from_rows([e[0], e[1], e[2]], [e[3], e[4], e[5]], [e[6], e[7], e[8]]))
        .prop_filter("determinant bounded away from 0", |m| m.det().abs() > 0.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn distance_is_a_metric(
        a in proptest::collection::vec(invertible_mat2(), 1..=3),
        b in proptest::collection::vec(invertible_mat2(), 1..=3),
        c in proptest::collection::vec(invertible_mat2(), 1..=3),
    ) {
        let period = a.len().min(b.len()).min(c.len());
        let ca = Cocycle2::new(a[..period].to_vec()).unwrap();
        let cb = Cocycle2::new(b[..period].to_vec()).unwrap();
        let cc = Cocycle2::new(c[..period].to_vec()).unwrap();

        let dab = ca.distance(&cb).unwrap();
        prop_assert!((dab - cb.distance(&ca).unwrap()).abs() <= 1e-12);
        prop_assert_eq!(ca.distance(&ca).unwrap(), 0.0);
        prop_assert!(dab >= 0.0);
        // triangle inequality with comparison slack 1e-12
        let dac = ca.distance(&cc).unwrap();
        let dcb = cc.distance(&cb).unwrap();
        prop_assert!(dab <= dac + dcb + 1e-12);
    }

    #[test]
    fn spectrum2_identities(m in invertible_mat2()) {
        let s = spectrum2(&m);
        let prod: Complex64 = s.eigenvalues.iter().product();
        let scale = s.determinant.abs().max(1.0);
        prop_assert!((prod.re - s.determinant).abs() <= 1e-10 * scale);
        prop_assert!(prod.im.abs() <= 1e-10 * scale);
        let bound = 1e-9 * (1.0 + m.frobenius().powi(2));
        for z in &s.eigenvalues {
            prop_assert!(char_poly_residual2(&m, *z) < bound);
        }
        prop_assert!(s.moduli[0] <= s.moduli[1]);
    }

    #[test]
    fn spectrum3_identities(m in invertible_mat3()) {
        let s = spectrum3(&m);
        let prod: Complex64 = s.eigenvalues.iter().product();
        let scale = s.determinant.abs().max(1.0);
        prop_assert!((prod.re - s.determinant).abs() <= 1e-10 * scale);
        prop_assert!(prod.im.abs() <= 1e-10 * scale);
        let bound = 1e-9 * (1.0 + m.frobenius().powi(3));
        for z in &s.eigenvalues {
            prop_assert!(char_poly_residual3(&m, *z) < bound);
        }
        // conjugate symmetry: imaginary parts cancel pairwise
        let im_sum: f64 = s.eigenvalues.iter().map(|z| z.im).sum();
        prop_assert!(im_sum.abs() <= 1e-12 * (1.0 + m.frobenius()));
    }

    #[test]
    fn domination_holds_at_multiples(
        f1 in 0.2f64..0.7,
        ratio in 1.05f64..1.6,
        angle in -3.0f64..3.0,
        n_checked in 1u32..8,
    ) {
        // conjugated diagonal cocycle with eigenbasis hidden by a rotation
        let g1 = f1 * ratio;
        let q = Mat2::rotation(angle);
        let m = q * Mat2::diag(f1, g1) * q.transpose();
        let c = Cocycle2::new(vec![m]).unwrap();
        let s = Splitting2::new(
            vec![q.apply(Vec2::new(1.0, 0.0))],
            vec![q.apply(Vec2::new(0.0, 1.0))],
        ).unwrap();
        if c.check_n_dominated(&s, n_checked).unwrap() {
            let mut k = 2;
            while k * n_checked <= 64 {
                prop_assert!(c.check_n_dominated(&s, k * n_checked).unwrap());
                k += 1;
            }
        }
    }

    #[test]
    fn renormalize_preserves_zero_pattern(
        m in invertible_mat3(),
        mask in proptest::array::uniform9(proptest::bool::ANY),
        n_p in 0u32..6,
        n_q in 0u32..6,
    ) {
        let mut sparse = m;
        for i in 0..3 {
            for j in 0..3 {
                if mask[3 * i + j] {
                    sparse.0[i][j] = 0.0;
                }
            }
        }
        let out = renormalize(sparse, [0.8, 0.7, 2.0], n_p, n_q);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(out.0[i][j] == 0.0, sparse.0[i][j] == 0.0);
            }
        }
    }

    #[test]
    fn quotient_determinant_factorization(
        block in mat2_entries(),
        tail in proptest::array::uniform3(-1.5f64..1.5),
    ) {
        // e3-invariant matrix: quotient by span(e3) reproduces the block
        let b = Mat2::new(block[0], block[1], block[2], block[3]);
        prop_assume!(b.det().abs() > 0.1 && tail[2].abs() > 0.1);
        let m = Mat3::from_rows(
            [b.0[0][0], b.0[0][1], 0.0],
            [b.0[1][0], b.0[1][1], 0.0],
            [tail[0], tail[1], tail[2]],
        );
        let c = Cocycle3::new(vec![m]).unwrap();
        let line = LineBundle::constant(Vec3::new(0.0, 0.0, 1.0), 1);
        let q = c.quotient(&line).unwrap();
        let factor = c.line_return_factor(&line, 0);
        let lhs = c.return_map(0).det();
        let rhs = factor * q.cocycle.return_map(0).det();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }
}

// Quantitative path properties on the seeded admissible instances.
#[test]
fn path_quantitative_invariants() {
    let mut r = rng(21);
    for _ in 0..100 {
        let inst = random_small_angle_instance(&mut r);
        let path = build_rotation_path(&inst.cocycle, inst.base_index, inst.eps).unwrap();
        let k = inst.cocycle.bound_constant();

        // diameter bounded by sqrt(3) K alpha, and below the budget
        let diameter = path.diameter();
        assert!(diameter <= ROTATION_LIPSCHITZ * k * path.alpha() + 1e-12);
        assert!(diameter < inst.eps);

        // the endpoint cocycle respects the perturbed norm bound
        let endpoint_bound = bounded_after_perturbation(&path, k, inst.eps).unwrap();
        assert!(path.cocycle_at(1.0).bound_constant() <= endpoint_bound + 1e-12);

        let trace = trace_path(&path, 1000);
        let det0 = trace.samples[0].det;
        let mut prev_theta = f64::INFINITY;
        for s in &trace.samples {
            // theta positive and strictly decreasing, matching the closed form
            assert!(s.theta > 0.0, "theta not positive at t = {}", s.t);
            assert!(s.theta < prev_theta, "theta not decreasing at t = {}", s.t);
            assert!((s.theta - path.theta_closed_form(s.t)).abs() <= 1e-10);
            prev_theta = s.theta;
            // lambda_m * lambda_b recovers the determinant
            assert!((s.lambda_m * s.lambda_b - det0.abs()).abs() <= 1e-12 * det0.abs());
        }
        // discriminant condition at the endpoint: complex pair
        let last = trace.samples.last().unwrap();
        assert!(last.is_complex);
        assert!(last.theta < 2.0 * det0.abs().sqrt());
    }
}

// The stable block of D_n is exactly r * Id over the sparsity pattern.
#[test]
fn transition_stable_block_structural_zeros() {
    let mut r = rng(22);
    for _ in 0..30 {
        let ts = random_transition_system(&mut r);
        for n in 0..=30u32 {
            let d = build_dn(&ts, n);
            assert_eq!(d.0[0][1], 0.0);
            assert_eq!(d.0[1][0], 0.0);
            assert_eq!(d.0[0][2], 0.0);
            assert_eq!(d.0[1][2], 0.0);
            assert_eq!(d.0[2][0], 0.0);
            assert_eq!(d.0[2][1], 0.0);
            // same factors, different multiplication order: equal up to ulps
            let scale = d.0[0][0].abs().max(f64::MIN_POSITIVE);
            assert!((d.0[0][0] - d.0[1][1]).abs() <= 1e-14 * scale);
        }
    }
}
