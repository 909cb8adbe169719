//! Closed-form spectra of 2x2 and 3x3 real matrices.
//!
//! The characteristic polynomial is solved exactly (stable quadratic formula,
//! trigonometric/Cardano branches for the cubic) and every simple root is
//! polished with a couple of Newton steps on the monic polynomial, which
//! brings well-separated roots down to a few ulps of relative error.

use crate::matrix::{Mat2, Mat3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Eigenvalue data of a small matrix.
///
/// Eigenvalues are sorted by modulus, then real part, then imaginary part
/// with the non-negative member of a conjugate pair first. `moduli` repeats
/// the absolute values in ascending order (so in dimension 2 they are the
/// pair `lambda_m <= lambda_b`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub eigenvalues: Vec<Complex64>,
    pub moduli: Vec<f64>,
    pub determinant: f64,
}

impl SpectralData {
    fn from_roots(mut roots: Vec<Complex64>, determinant: f64) -> Self {
        roots.sort_by(|a, b| {
            a.norm()
                .total_cmp(&b.norm())
                .then(a.re.total_cmp(&b.re))
                .then(b.im.total_cmp(&a.im))
        });
        let moduli = roots.iter().map(|z| z.norm()).collect();
        SpectralData {
            eigenvalues: roots,
            moduli,
            determinant,
        }
    }

    /// Smallest eigenvalue modulus.
    pub fn lambda_m(&self) -> f64 {
        self.moduli[0]
    }

    /// Largest eigenvalue modulus.
    pub fn lambda_b(&self) -> f64 {
        *self.moduli.last().unwrap()
    }

    pub fn has_complex_pair(&self) -> bool {
        self.eigenvalues.iter().any(|z| z.im != 0.0)
    }

    /// True when every eigenvalue is real within `tol` of the imaginary axis.
    pub fn all_real(&self, tol: f64) -> bool {
        self.eigenvalues.iter().all(|z| z.im.abs() <= tol)
    }

    /// True when no modulus lies within `tol` of 1 (cocycle hyperbolicity).
    pub fn is_hyperbolic(&self, tol: f64) -> bool {
        self.moduli.iter().all(|m| (m - 1.0).abs() > tol)
    }

    /// Number of eigenvalues with modulus greater than one.
    pub fn index(&self) -> usize {
        self.moduli.iter().filter(|m| **m > 1.0).count()
    }
}

/// Roots of the monic quadratic `x^2 + b x + c`, via the sign-safe formula.
fn solve_quadratic(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // avoid cancellation: compute the large-magnitude root first
        let big = if b >= 0.0 { (-b - sq) / 2.0 } else { (-b + sq) / 2.0 };
        let small = if big != 0.0 { c / big } else { (-b + sq) / 2.0 };
        [Complex64::new(small, 0.0), Complex64::new(big, 0.0)]
    } else {
        let re = -b / 2.0;
        let im = (-disc).sqrt() / 2.0;
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Roots of the monic cubic `x^3 + a2 x^2 + a1 x + a0`.
fn solve_cubic(a2: f64, a1: f64, a0: f64) -> [Complex64; 3] {
    // depressed form t^3 + p t + q with x = t - a2/3
    let shift = a2 / 3.0;
    let p = a1 - a2 * a2 / 3.0;
    let q = a0 - a2 * a1 / 3.0 + 2.0 * a2 * a2 * a2 / 27.0;

    let half_q = q / 2.0;
    let disc = half_q * half_q + p * p * p / 27.0;

    let mut roots = if disc <= 0.0 {
        // three real roots (trigonometric branch); p <= 0 here
        if p == 0.0 {
            let t = -q.cbrt();
            [t, t, t]
        } else {
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
            let phi = arg.acos() / 3.0;
            [
                m * phi.cos(),
                m * (phi - 2.0 * std::f64::consts::FRAC_PI_3).cos(),
                m * (phi - 4.0 * std::f64::consts::FRAC_PI_3).cos(),
            ]
        }
        .map(|t| Complex64::new(t - shift, 0.0))
    } else {
        // one real root, Cardano with cancellation-safe cube root
        let s = disc.sqrt();
        let w = if q >= 0.0 { -half_q - s } else { -half_q + s };
        let u = w.cbrt();
        let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
        let t1 = u + v;
        // deflate: t^3 + p t + q = (t - t1)(t^2 + t1 t + (t1^2 + p))
        let c = t1 * t1 + p;
        let pair_disc = t1 * t1 - 4.0 * c;
        let re = -t1 / 2.0;
        let im = (-pair_disc).max(0.0).sqrt() / 2.0;
        [
            Complex64::new(t1 - shift, 0.0),
            Complex64::new(re - shift, im),
            Complex64::new(re - shift, -im),
        ]
    };

    // Newton polish on the monic cubic; skipped near multiple roots where the
    // derivative degenerates.
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let z = *r;
            let val = ((z + a2) * z + a1) * z + a0;
            let der = (3.0 * z + 2.0 * a2) * z + a1;
            if der.norm() < 1e-12 * (1.0 + z.norm() * z.norm()) {
                break;
            }
            *r = z - val / der;
        }
        if r.im.abs() < 1e-14 * (1.0 + r.re.abs()) {
            // keep conjugate symmetry for honestly-real roots
            r.im = 0.0;
        }
    }
    roots
}

/// Spectrum of a 2x2 matrix from the characteristic quadratic.
pub fn spectrum2(m: &Mat2) -> SpectralData {
    let det = m.det();
    let roots = solve_quadratic(-m.trace(), det);
    SpectralData::from_roots(roots.to_vec(), det)
}

/// Spectrum of a 3x3 matrix from the characteristic cubic.
pub fn spectrum3(m: &Mat3) -> SpectralData {
    let det = m.det();
    let roots = solve_cubic(-m.trace(), m.second_invariant(), -det);
    // enforce exact conjugacy of a complex pair
    let mut roots = roots.to_vec();
    if roots[1].im != 0.0 && roots[2].im != 0.0 {
        let re = (roots[1].re + roots[2].re) / 2.0;
        let im = (roots[1].im.abs() + roots[2].im.abs()) / 2.0;
        roots[1] = Complex64::new(re, im);
        roots[2] = Complex64::new(re, -im);
    }
    SpectralData::from_roots(roots, det)
}

/// Characteristic-polynomial residual `|p(z)|` of a claimed eigenvalue,
/// used as the independence oracle for the closed-form solvers.
pub fn char_poly_residual2(m: &Mat2, z: Complex64) -> f64 {
    ((z - m.trace()) * z + m.det()).norm()
}

pub fn char_poly_residual3(m: &Mat3, z: Complex64) -> f64 {
    (((z - m.trace()) * z + m.second_invariant()) * z - m.det()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_double_eigenvalue() {
        for t in [0.0, 1.0, -7.5, 1e6] {
            let m = Mat2::new(3.0, t, 0.0, 3.0);
            let s = spectrum2(&m);
            assert_eq!(s.eigenvalues.len(), 2);
            for z in &s.eigenvalues {
                assert!((z.re - 3.0).abs() < 1e-9 && z.im == 0.0, "t={t} z={z}");
            }
        }
    }

    #[test]
    fn antidiagonal_3x3_closed_form() {
        // [[0,0,c],[0,b,0],[a,0,0]] has spectrum {b, +sqrt(ac), -sqrt(ac)}
        let (a, b, c) = (2.0, 0.3, 4.5);
        let m = Mat3::from_rows([0.0, 0.0, c], [0.0, b, 0.0], [a, 0.0, 0.0]);
        let s = spectrum3(&m);
        let sq = (a * c).sqrt();
        for want in [b, sq, -sq] {
            let hit = s
                .eigenvalues
                .iter()
                .any(|z| z.im == 0.0 && (z.re - want).abs() <= 1e-12 * want.abs());
            assert!(hit, "missing eigenvalue {want}");
        }
    }

    #[test]
    fn antidiagonal_3x3_complex_pair_when_ac_negative() {
        let (a, b, c) = (1.0, 0.5, -2.0);
        let m = Mat3::from_rows([0.0, 0.0, c], [0.0, b, 0.0], [a, 0.0, 0.0]);
        let s = spectrum3(&m);
        assert!(s.has_complex_pair());
        let pair: Vec<_> = s.eigenvalues.iter().filter(|z| z.im != 0.0).collect();
        assert_eq!(pair.len(), 2);
        for z in pair {
            assert!(z.re.abs() < 1e-12);
            assert!((z.im.abs() - 2.0f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn product_of_eigenvalues_is_determinant() {
        let m = Mat3::from_rows([1.3, -0.2, 0.7], [2.0, 0.4, -1.0], [0.3, 0.9, 1.1]);
        let s = spectrum3(&m);
        let prod = s.eigenvalues.iter().product::<Complex64>();
        assert!((prod.re - s.determinant).abs() <= 1e-10 * s.determinant.abs().max(1.0));
        assert!(prod.im.abs() <= 1e-10 * s.determinant.abs().max(1.0));
    }

    #[test]
    fn residual_oracle_random_like_matrix() {
        let m = Mat3::from_rows([0.8, 1.9, -0.3], [-1.2, 0.1, 0.6], [0.5, -0.7, 1.4]);
        let s = spectrum3(&m);
        let bound = 1e-9 * (1.0 + m.frobenius().powi(3));
        for z in &s.eigenvalues {
            assert!(char_poly_residual3(&m, *z) < bound);
        }
    }

    #[test]
    fn sort_order_modulus_then_real_then_positive_imaginary() {
        let m = Mat3::from_rows([0.0, 0.0, 1.0], [0.0, 0.5, 0.0], [-1.0, 0.0, 0.0]);
        let s = spectrum3(&m);
        // moduli: 0.5 then the unit pair, +i before -i
        assert!((s.eigenvalues[0].re - 0.5).abs() < 1e-12);
        assert!(s.eigenvalues[1].im > 0.0);
        assert!(s.eigenvalues[2].im < 0.0);
    }

    #[test]
    fn widely_separated_roots_hit_relative_precision() {
        // same shape as the bifurcation return derivative at n = 20
        let small = 0.7f64.powi(20);
        let big = 1.6f64.powi(20);
        let m = Mat3::from_rows([0.0, 0.0, 0.8f64.powi(20)], [0.0, small, 0.0], [
            2.0f64.powi(20),
            0.0,
            0.0,
        ]);
        let s = spectrum3(&m);
        assert!((s.eigenvalues[0].re - small).abs() <= 1e-12 * small);
        assert!((s.eigenvalues[2].re - big.sqrt()).abs() <= 1e-12 * big.sqrt());
    }
}
