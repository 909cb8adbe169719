//! One-parameter rotation perturbations of a two-dimensional cocycle.
//!
//! Starting from a cocycle whose return map has real positive distinct
//! eigenvalues spanning a small angle, composing the last map of the orbit
//! with a rotation `R(sign * alpha * t)` produces a path of cocycles whose
//! return-map eigenvalues merge and become complex at `t = 1`, while the
//! determinant stays fixed and the path diameter stays below a prescribed
//! epsilon. This module builds those paths and verifies every quantitative
//! clause of that contract.

use crate::cocycle::{eigenspace_angle, eigenvector2, Cocycle2, CocycleError};
use crate::matrix::Mat2;
use crate::spectrum::spectrum2;
use serde::Serialize;
use std::f64::consts::FRAC_PI_4;
use thiserror::Error;

/// Lipschitz constant of the rotation family on [-pi/4, pi/4] in operator
/// norm: `sqrt(3) * N` with `N = 1`, since the operator norm is dominated
/// by the Frobenius norm.
pub const ROTATION_LIPSCHITZ: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("eigenspace angle {angle} is not below the admissible threshold {threshold}")]
    AngleTooLarge { angle: f64, threshold: f64 },
    #[error("return map does not have real, positive, distinct eigenvalues")]
    SpectrumNotRealPositiveDistinct,
    #[error("rotation angles must lie in [-pi/4, pi/4]")]
    DomainError,
    #[error("path diameter {diameter} is not below epsilon {eps}")]
    DiameterExceeded { diameter: f64, eps: f64 },
    #[error("matrix does not have a positive double eigenvalue in triangular form")]
    NotDoubleEigenvalue,
    #[error("target {target} outside the reachable range [{lo}, {hi}]")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
}

/// Admissible rotation amplitude for a cocycle bounded by `k` and a
/// perturbation budget `eps`: `eps / (sqrt(3) * k)`, capped at pi/4.
pub fn alpha_threshold(k: f64, eps: f64) -> f64 {
    assert!(k > 0.0 && eps > 0.0, "bound and epsilon must be positive");
    (eps / (ROTATION_LIPSCHITZ * k)).min(FRAC_PI_4)
}

/// Evaluates both sides of the rotation Lipschitz bound
/// `|R(s) - R(t)| <= sqrt(3) |s - t|` and returns `(lhs, rhs)`.
pub fn rotation_bound_check(s: f64, t: f64) -> Result<(f64, f64), PathError> {
    if s.abs() > FRAC_PI_4 || t.abs() > FRAC_PI_4 {
        return Err(PathError::DomainError);
    }
    let lhs = (Mat2::rotation(s) - Mat2::rotation(t)).op_norm();
    let rhs = ROTATION_LIPSCHITZ * (s - t).abs();
    Ok((lhs, rhs))
}

/// A path `gamma(t)` of cocycles over a fixed orbit: equal to `base`
/// everywhere except at `perturbed_index`, where the map is
/// `R(rotation_sign * alpha * min(t, freeze)) * base.maps[perturbed_index]`.
///
/// The path lives in the orthonormal frame in which the return map at
/// `base_index` is upper triangular `[[l1, mu], [0, l2]]`; `basis` maps that
/// frame back to the original coordinates.
#[derive(Debug, Clone)]
pub struct CocyclePath {
    base: Cocycle2,
    base_index: usize,
    perturbed_index: usize,
    rotation_sign: f64,
    alpha: f64,
    basis: Mat2,
    freeze: f64,
    lambda1: f64,
    lambda2: f64,
    mu: f64,
}

impl CocyclePath {
    pub fn base(&self) -> &Cocycle2 {
        &self.base
    }

    pub fn base_index(&self) -> usize {
        self.base_index
    }

    pub fn perturbed_index(&self) -> usize {
        self.perturbed_index
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rotation_sign(&self) -> f64 {
        self.rotation_sign
    }

    pub fn basis(&self) -> Mat2 {
        self.basis
    }

    /// Triangular data `(l1, l2, mu)` of the unperturbed return map.
    pub fn triangular_data(&self) -> (f64, f64, f64) {
        (self.lambda1, self.lambda2, self.mu)
    }

    /// Rotation angle applied at parameter `t`.
    pub fn angle_at(&self, t: f64) -> f64 {
        self.rotation_sign * self.alpha * t.min(self.freeze)
    }

    /// The cocycle `gamma(t)` in the triangularized frame.
    pub fn cocycle_at(&self, t: f64) -> Cocycle2 {
        let mut maps = self.base.maps().to_vec();
        maps[self.perturbed_index] =
            Mat2::rotation(self.angle_at(t)) * maps[self.perturbed_index];
        Cocycle2::new(maps).expect("rotation preserves invertibility")
    }

    /// The cocycle `gamma(t)` conjugated back to the original coordinates.
    pub fn cocycle_at_original(&self, t: f64) -> Cocycle2 {
        let q = self.basis;
        let qt = q.transpose();
        let maps = self
            .cocycle_at(t)
            .maps()
            .iter()
            .map(|m| q * *m * qt)
            .collect();
        Cocycle2::new(maps).expect("conjugation preserves invertibility")
    }

    /// Return map of `gamma(t)` at `base_index`. The perturbed map is the
    /// last factor of the return composition, so this is
    /// `R(angle) * return_map(0)`.
    pub fn return_matrix(&self, t: f64) -> Mat2 {
        Mat2::rotation(self.angle_at(t)) * self.base.return_map(self.base_index)
    }

    /// Trace of the perturbed return map from the closed form
    /// `(l1 + l2) cos(a t) - |mu| sin(a t)`.
    pub fn theta_closed_form(&self, t: f64) -> f64 {
        let phi = self.alpha * t.min(self.freeze);
        (self.lambda1 + self.lambda2) * phi.cos() - self.mu.abs() * phi.sin()
    }

    /// Distance between `gamma(s)` and `gamma(t)`, computed from the actual
    /// matrices. Only the perturbed map differs, so this reduces to a chord
    /// of the rotation circle scaled by the map norms; it depends only on
    /// `|angle(s) - angle(t)|` and grows monotonically with it.
    pub fn dist_between(&self, s: f64, t: f64) -> f64 {
        self.cocycle_at(s)
            .distance(&self.cocycle_at(t))
            .expect("same orbit")
    }

    /// Exact diameter of the path: the chord is monotone in the angle
    /// separation, so the grid maximum sits at the endpoint pair.
    pub fn diameter(&self) -> f64 {
        self.dist_between(0.0, 1.0)
    }

    /// Smaller eigenvalue modulus of the return map at `t`.
    pub fn lambda_m_at(&self, t: f64) -> f64 {
        spectrum2(&self.return_matrix(t)).lambda_m()
    }

    /// A degenerate constant path (`alpha = 0`) over `c`, for diagnostics.
    pub fn constant(c: &Cocycle2, base_index: usize) -> Result<CocyclePath, PathError> {
        let (base, basis, l1, l2, mu) = triangularize(c, base_index)?;
        Ok(CocyclePath {
            base,
            base_index,
            perturbed_index: (base_index + c.period() - 1) % c.period(),
            rotation_sign: -mu.signum(),
            alpha: 0.0,
            basis,
            freeze: 1.0,
            lambda1: l1,
            lambda2: l2,
            mu,
        })
    }
}

/// Conjugates `c` by the Householder reflection taking `e1` to the leading
/// eigenvector of the return map at `base_index`, producing the frame where
/// that return map is upper triangular with the smaller eigenvalue first.
fn triangularize(
    c: &Cocycle2,
    base_index: usize,
) -> Result<(Cocycle2, Mat2, f64, f64, f64), PathError> {
    let rm = c.return_map(base_index);
    let s = spectrum2(&rm);
    if s.has_complex_pair() {
        return Err(PathError::SpectrumNotRealPositiveDistinct);
    }
    let (l1, l2) = (s.eigenvalues[0].re, s.eigenvalues[1].re);
    if l1 <= 0.0 || l2 <= 0.0 || (l2 - l1).abs() <= 1e-12 * l2.abs().max(1e-300) {
        return Err(PathError::SpectrumNotRealPositiveDistinct);
    }
    let v1 = eigenvector2(&rm, l1);
    let q = Mat2::householder_to(v1);
    let qt = q.transpose();
    let maps = c.maps().iter().map(|m| qt * *m * q).collect();
    let base = Cocycle2::new(maps)?;
    let tri = base.return_map(base_index);
    Ok((base, q, tri.0[0][0], tri.0[1][1], tri.0[0][1]))
}

/// Builds the rotation path at `x_index` for perturbation budget `eps`.
///
/// Requires the return map at `x_index` to have real positive distinct
/// eigenvalues whose eigenlines span an angle below
/// `alpha_threshold(bound_constant, eps)`; the rotation is applied at the
/// last orbit point before the return to `x_index`, with amplitude equal to
/// the threshold and sign opposite to the triangular off-diagonal entry.
pub fn build_rotation_path(
    c: &Cocycle2,
    x_index: usize,
    eps: f64,
) -> Result<CocyclePath, PathError> {
    let x_index = x_index % c.period();
    let (base, basis, l1, l2, mu) = triangularize(c, x_index)?;
    let alpha = alpha_threshold(c.bound_constant(), eps);
    let angle = eigenspace_angle(&c.return_map(x_index))
        .map_err(|_| PathError::SpectrumNotRealPositiveDistinct)?;
    if angle >= alpha {
        return Err(PathError::AngleTooLarge {
            angle,
            threshold: alpha,
        });
    }
    Ok(CocyclePath {
        base,
        base_index: x_index,
        perturbed_index: (x_index + c.period() - 1) % c.period(),
        rotation_sign: -mu.signum(),
        alpha,
        basis,
        freeze: 1.0,
        lambda1: l1,
        lambda2: l2,
        mu,
    })
}

/// One row of a sampled path trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSample {
    pub t: f64,
    pub lambda_m: f64,
    pub lambda_b: f64,
    pub theta: f64,
    pub det: f64,
    pub is_complex: bool,
}

/// Spectral data of the return map along a uniform parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathTrace {
    pub samples: Vec<PathSample>,
}

impl PathTrace {
    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    /// CSV rendering with the header `t,lambda_m,lambda_b,theta,det,is_complex`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,lambda_m,lambda_b,theta,det,is_complex\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.t, s.lambda_m, s.lambda_b, s.theta, s.det, s.is_complex
            ));
        }
        out
    }
}

/// Samples the spectrum of the return map on a uniform grid of `samples`
/// parameters from 0 to 1 inclusive.
pub fn trace_path(p: &CocyclePath, samples: usize) -> PathTrace {
    assert!(samples >= 2, "a trace needs at least two samples");
    let rows = (0..samples)
        .map(|i| {
            let t = i as f64 / (samples - 1) as f64;
            let m = p.return_matrix(t);
            let s = spectrum2(&m);
            PathSample {
                t,
                lambda_m: s.lambda_m(),
                lambda_b: s.lambda_b(),
                theta: m.trace(),
                det: s.determinant,
                is_complex: s.has_complex_pair(),
            }
        })
        .collect();
    PathTrace { samples: rows }
}

/// Verdicts of the path contract on a 1000-sample trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathContractReport {
    /// gamma(0) equals the base cocycle exactly.
    pub initial_matches_base: bool,
    pub diameter: f64,
    /// diameter < eps on the sample grid.
    pub diameter_within: bool,
    /// determinant drift below 1e-12 relative across the trace.
    pub det_constant: bool,
    pub max_det_drift: f64,
    /// lambda_m nondecreasing / lambda_b nonincreasing while real, moduli
    /// equal on the complex segment (slack 1e-12).
    pub monotone: bool,
    /// gamma(1) has a complex pair.
    pub complex_at_end: bool,
    /// no eigenvalue modulus within 1e-9 of 1 anywhere on the trace;
    /// reported separately from the five contract clauses.
    pub hyperbolic_throughout: bool,
    pub all_pass: bool,
}

const CONTRACT_SAMPLES: usize = 1000;
const MONOTONE_SLACK: f64 = 1e-12;

/// Checks the five path-contract clauses plus the hyperbolicity side
/// condition on a 1000-sample trace.
pub fn verify_path_contract(p: &CocyclePath, eps: f64) -> PathContractReport {
    let trace = trace_path(p, CONTRACT_SAMPLES);

    let initial_matches_base = p
        .cocycle_at(0.0)
        .distance(p.base())
        .expect("same orbit")
        == 0.0;

    let diameter = p.diameter();
    let diameter_within = diameter < eps;

    let det0 = trace.samples[0].det;
    let max_det_drift = trace
        .samples
        .iter()
        .map(|s| (s.det - det0).abs())
        .fold(0.0f64, f64::max);
    let det_constant = max_det_drift <= 1e-12 * det0.abs().max(1e-300);

    let mut monotone = true;
    for pair in trace.samples.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if !a.is_complex
            && !b.is_complex
            && (b.lambda_m < a.lambda_m - MONOTONE_SLACK
                || b.lambda_b > a.lambda_b + MONOTONE_SLACK)
        {
            monotone = false;
        }
    }
    for s in &trace.samples {
        if s.is_complex && (s.lambda_m - s.lambda_b).abs() > MONOTONE_SLACK * s.lambda_b.max(1.0) {
            monotone = false;
        }
    }

    let complex_at_end = trace.samples.last().unwrap().is_complex;

    let hyperbolic_throughout = trace
        .samples
        .iter()
        .all(|s| (s.lambda_m - 1.0).abs() > 1e-9 && (s.lambda_b - 1.0).abs() > 1e-9);

    let all_pass =
        initial_matches_base && diameter_within && det_constant && monotone && complex_at_end;
    PathContractReport {
        initial_matches_base,
        diameter,
        diameter_within,
        det_constant,
        max_det_drift,
        monotone,
        complex_at_end,
        hyperbolic_throughout,
        all_pass,
    }
}

/// Norm bound for the endpoint of a small path: a path of diameter within
/// `eps` over a cocycle bounded by `base_norm_bound` ends at a cocycle
/// bounded by `eps + base_norm_bound`. The degenerate constant path passes
/// with `eps = 0` and returns the base bound unchanged.
pub fn bounded_after_perturbation(
    p: &CocyclePath,
    base_norm_bound: f64,
    eps: f64,
) -> Result<f64, PathError> {
    let diameter = p.diameter();
    if diameter > eps {
        return Err(PathError::DiameterExceeded { diameter, eps });
    }
    Ok(eps + base_norm_bound)
}

/// Perturbs a matrix with a positive double eigenvalue into one with a
/// complex conjugate pair, at operator distance at most `delta`.
///
/// The input must be in triangular form `[[l, t], [0, l]]`. For `t = 0` the
/// perturbation composes with a small rotation; otherwise it feeds
/// `-alpha/t` into the lower-left entry.
pub fn complexify_double_eigenvalue(m: &Mat2, delta: f64) -> Result<Mat2, PathError> {
    assert!(delta > 0.0, "delta must be positive");
    let [[l, t], [low, l2]] = m.0;
    let scale = l.abs().max(1.0);
    if low.abs() > 1e-12 * scale || (l - l2).abs() > 1e-12 * scale || l <= 0.0 {
        return Err(PathError::NotDoubleEigenvalue);
    }
    if t == 0.0 {
        let alpha = (delta / (2.0 * l)).min(FRAC_PI_4);
        Ok(Mat2::rotation(alpha) * *m)
    } else {
        let alpha = delta * t.abs() / 2.0;
        Ok(Mat2::new(l, t, -alpha / t, l2))
    }
}

/// Freezes the path at the parameter where `lambda_m` first reaches
/// `target`, found by bisection to 1e-10.
pub fn truncate_path(p: &CocyclePath, target: f64) -> Result<CocyclePath, PathError> {
    const TOL: f64 = 1e-10;
    let lo = p.lambda_m_at(0.0);
    let hi = p.lambda_m_at(1.0);
    if (target - lo).abs() <= TOL {
        let mut frozen = p.clone();
        frozen.freeze = 0.0;
        return Ok(frozen);
    }
    if target < lo || target > hi {
        return Err(PathError::TargetOutOfRange { target, lo, hi });
    }
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = (a + b) / 2.0;
        let val = p.lambda_m_at(mid);
        if (val - target).abs() <= TOL {
            a = mid;
            b = mid;
            break;
        }
        if val < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    let t0 = (a + b) / 2.0;
    if (p.lambda_m_at(t0) - target).abs() > TOL {
        return Err(PathError::TargetOutOfRange { target, lo, hi });
    }
    let mut frozen = p.clone();
    frozen.freeze = t0;
    Ok(frozen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Vec2;

    fn small_angle_base() -> Cocycle2 {
        Cocycle2::new(vec![Mat2::new(1.0, 10.0, 0.0, 1.01)]).unwrap()
    }

    #[test]
    fn alpha_threshold_examples() {
        // eps = sqrt(3)/10, K = 10 gives exactly 1/100
        let eps = 3.0f64.sqrt() / 10.0;
        assert!((alpha_threshold(10.0, eps) - 0.01).abs() < 1e-15);
        // clamped at pi/4
        assert_eq!(alpha_threshold(1.0, 10.0), FRAC_PI_4);
        // monotone to zero
        let mut prev = alpha_threshold(2.0, 1.0);
        for k in 1..6 {
            let a = alpha_threshold(2.0, 1.0 / (10f64.powi(k)));
            assert!(a < prev && a > 0.0);
            prev = a;
        }
    }

    #[test]
    fn rotation_bound_examples() {
        let (lhs, rhs) = rotation_bound_check(0.1, 0.1).unwrap();
        assert!(lhs < 1e-15 && rhs == 0.0);

        let (lhs, rhs) = rotation_bound_check(0.0, FRAC_PI_4).unwrap();
        let exact = 2.0 * (FRAC_PI_4 / 2.0).sin();
        assert!((lhs - exact).abs() < 1e-12);
        assert!((rhs - ROTATION_LIPSCHITZ * FRAC_PI_4).abs() < 1e-15);
        assert!(lhs <= rhs);

        assert!(matches!(
            rotation_bound_check(1.0, 0.0),
            Err(PathError::DomainError)
        ));
    }

    #[test]
    fn build_path_small_angle_period_one() {
        let c = small_angle_base();
        let p = build_rotation_path(&c, 0, 1.0).unwrap();
        // gamma(0) reproduces the base exactly
        assert_eq!(p.cocycle_at(0.0), *p.base());
        // gamma(1) has complex eigenvalues
        let s = spectrum2(&p.return_matrix(1.0));
        assert!(s.has_complex_pair());
        // mapping back to original coordinates restores the input at t = 0
        assert!(p.cocycle_at_original(0.0).distance(&c).unwrap() < 1e-12);
    }

    #[test]
    fn angle_too_large_rejected() {
        // eigenlines at 45 degrees: far above any threshold from eps = 0.1
        let c = Cocycle2::new(vec![Mat2::new(1.0, 1.0, 0.0, 2.0)]).unwrap();
        assert!(matches!(
            build_rotation_path(&c, 0, 0.1),
            Err(PathError::AngleTooLarge { .. })
        ));
        let rot = Cocycle2::new(vec![Mat2::rotation(0.5)]).unwrap();
        assert!(matches!(
            build_rotation_path(&rot, 0, 0.1),
            Err(PathError::SpectrumNotRealPositiveDistinct)
        ));
    }

    #[test]
    fn rotation_applied_only_at_last_orbit_point() {
        // period 2 with return map [[1, 50], [0, 1.02]] at index 0
        let m0 = Mat2::new(2.0, 1.0, 0.0, 0.5);
        let target = Mat2::new(1.0, 50.0, 0.0, 1.02);
        let m1 = target * m0.inverse().unwrap();
        let c = Cocycle2::new(vec![m0, m1]).unwrap();
        let p = build_rotation_path(&c, 0, 1.0).unwrap();
        assert_eq!(p.perturbed_index(), 1);
        let g = p.cocycle_at(1.0);
        assert_eq!(g.map(0), p.base().map(0));
        assert!(g.map(1) != p.base().map(1));
    }

    #[test]
    fn trace_reproduces_base_spectrum_at_zero() {
        let c = small_angle_base();
        let p = build_rotation_path(&c, 0, 1.0).unwrap();
        let trace = trace_path(&p, 100);
        let s = spectrum2(&c.return_map(0));
        assert!((trace.samples[0].lambda_m - s.lambda_m()).abs() < 1e-12);
        assert!((trace.samples[0].lambda_b - s.lambda_b()).abs() < 1e-12);
        assert_eq!(trace.sample_count(), 100);
    }

    #[test]
    fn theta_closed_form_matches_trace() {
        let c = small_angle_base();
        let p = build_rotation_path(&c, 0, 1.0).unwrap();
        let trace = trace_path(&p, 1000);
        let (l1, l2, mu) = p.triangular_data();
        let amp = ((l1 + l2) * (l1 + l2) + mu * mu).sqrt();
        let beta = (l1 + l2).atan2(mu.abs());
        for s in &trace.samples {
            let closed = amp * (beta - p.alpha() * s.t).sin();
            assert!((s.theta - closed).abs() < 1e-10, "t = {}", s.t);
            assert!((s.theta - p.theta_closed_form(s.t)).abs() < 1e-10);
        }
    }

    #[test]
    fn determinant_constant_along_trace() {
        let c = small_angle_base();
        let p = build_rotation_path(&c, 0, 1.0).unwrap();
        let trace = trace_path(&p, 500);
        let det0 = trace.samples[0].det;
        for s in &trace.samples {
            assert!((s.det - det0).abs() <= 1e-12 * det0.abs());
        }
    }

    #[test]
    fn contract_suite_on_contracting_base() {
        let c = Cocycle2::new(vec![Mat2::new(0.5, 10.0, 0.0, 0.51)]).unwrap();
        let p = build_rotation_path(&c, 0, 0.5).unwrap();
        let report = verify_path_contract(&p, 0.5);
        assert!(report.initial_matches_base);
        assert!(report.diameter_within);
        assert!(report.det_constant);
        assert!(report.monotone);
        assert!(report.complex_at_end);
        assert!(report.all_pass);
        assert!(report.hyperbolic_throughout);
    }

    #[test]
    fn constant_path_contract() {
        let c = Cocycle2::new(vec![Mat2::new(0.5, 10.0, 0.0, 0.51)]).unwrap();
        let p = CocyclePath::constant(&c, 0).unwrap();
        let report = verify_path_contract(&p, 0.5);
        assert!(report.initial_matches_base);
        assert!(report.det_constant);
        assert!(report.monotone);
        assert!(!report.complex_at_end);
    }

    #[test]
    fn hyperbolicity_failure_detected_at_unit_determinant() {
        // scale a small-angle base so the complex pair lands on modulus 1
        let raw = Mat2::new(0.9, 30.0, 0.0, 1.1);
        let scaled = Mat2::new(
            raw.0[0][0] / raw.det().sqrt(),
            raw.0[0][1] / raw.det().sqrt(),
            0.0,
            raw.0[1][1] / raw.det().sqrt(),
        );
        let c = Cocycle2::new(vec![scaled]).unwrap();
        let p = build_rotation_path(&c, 0, 1.0).unwrap();
        let report = verify_path_contract(&p, 1.0);
        assert!(report.complex_at_end);
        assert!(!report.hyperbolic_throughout);
    }

    #[test]
    fn grid_diameter_is_endpoint_distance() {
        let c = small_angle_base();
        let p = build_rotation_path(&c, 0, 1.0).unwrap();
        let mut brute = 0.0f64;
        let n = 50;
        for i in 0..=n {
            for j in i..=n {
                brute = brute.max(p.dist_between(i as f64 / n as f64, j as f64 / n as f64));
            }
        }
        assert!((brute - p.diameter()).abs() < 1e-12);
    }

    #[test]
    fn bounded_after_examples() {
        let c = Cocycle2::new(vec![Mat2::new(0.5, 10.0, 0.0, 0.51)]).unwrap();
        let k = c.bound_constant();
        let p = build_rotation_path(&c, 0, 0.5).unwrap();
        let bound = bounded_after_perturbation(&p, k, 0.5).unwrap();
        assert!((bound - (k + 0.5)).abs() < 1e-15);
        assert!(p.cocycle_at(1.0).bound_constant() <= bound + 1e-12);

        // degenerate: the constant path has diameter 0, so even eps = 0
        // goes through and leaves the base bound unchanged
        let q = CocyclePath::constant(&c, 0).unwrap();
        let b0 = bounded_after_perturbation(&q, k, 0.0).unwrap();
        assert_eq!(b0, k);
        assert!(matches!(
            bounded_after_perturbation(&p, k, 1e-12),
            Err(PathError::DiameterExceeded { .. })
        ));
    }

    #[test]
    fn complexify_examples() {
        // diagonal branch: rotation composition
        let m = Mat2::diag(2.0, 2.0);
        let b = complexify_double_eigenvalue(&m, 0.01).unwrap();
        let s = spectrum2(&b);
        assert!(s.has_complex_pair());
        assert!((b - m).op_norm() <= 0.01);
        let alpha: f64 = 0.01 / 4.0;
        assert!((s.eigenvalues[0].norm() - 2.0).abs() < 1e-12);
        assert!((s.eigenvalues[0].im.abs() - 2.0 * alpha.sin()).abs() < 1e-12);

        // shear branch: [[l, t], [-alpha/t, l]]
        let m = Mat2::new(2.0, 1.0, 0.0, 2.0);
        let b = complexify_double_eigenvalue(&m, 0.01).unwrap();
        let s = spectrum2(&b);
        assert!(s.has_complex_pair());
        assert!((b - m).op_norm() <= 0.01);
        let alpha: f64 = 0.01 / 2.0;
        assert!((s.eigenvalues[0].im.abs() - alpha.sqrt()).abs() < 1e-12);

        assert!(matches!(
            complexify_double_eigenvalue(&Mat2::diag(1.0, 2.0), 0.1),
            Err(PathError::NotDoubleEigenvalue)
        ));
    }

    #[test]
    fn truncate_at_initial_value_freezes_at_zero() {
        let c = Cocycle2::new(vec![Mat2::new(0.5, 20.0, 0.0, 0.9)]).unwrap();
        let p = build_rotation_path(&c, 0, 2.0).unwrap();
        let frozen = truncate_path(&p, p.lambda_m_at(0.0)).unwrap();
        assert_eq!(frozen.angle_at(1.0), 0.0);
        assert_eq!(frozen.cocycle_at(1.0), *p.base());
    }

    #[test]
    fn truncate_bisection_converges() {
        let c = Cocycle2::new(vec![Mat2::new(0.5, 20.0, 0.0, 0.9)]).unwrap();
        let p = build_rotation_path(&c, 0, 2.0).unwrap();
        // lambda_m climbs from 0.5 toward sqrt(det) = sqrt(0.45)
        let target = 0.6;
        let frozen = truncate_path(&p, target).unwrap();
        assert!((frozen.lambda_m_at(1.0) - target).abs() <= 1e-10);
        // frozen endpoint keeps lambda_b = det / target
        let s = spectrum2(&frozen.return_matrix(1.0));
        assert!((s.lambda_b() - 0.45 / target).abs() < 1e-9);
        // monotonicity makes the freeze parameter unique on the grid
        let trace = trace_path(&frozen, 1000);
        let hits = trace
            .samples
            .windows(2)
            .filter(|w| (w[0].lambda_m - target) * (w[1].lambda_m - target) < 0.0)
            .count();
        assert!(hits <= 1);
    }

    #[test]
    fn truncate_rejects_unreachable_target() {
        let c = Cocycle2::new(vec![Mat2::new(0.5, 20.0, 0.0, 0.9)]).unwrap();
        let p = build_rotation_path(&c, 0, 2.0).unwrap();
        // lambda_m can never exceed sqrt(det) = 0.6708...; 0.7 is out of range
        assert!(matches!(
            truncate_path(&p, 0.7),
            Err(PathError::TargetOutOfRange { .. })
        ));
    }

    #[test]
    fn csv_header_and_shape() {
        let c = small_angle_base();
        let p = build_rotation_path(&c, 0, 1.0).unwrap();
        let csv = trace_path(&p, 5).to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,lambda_m,lambda_b,theta,det,is_complex"
        );
        assert_eq!(lines.count(), 5);
    }

    #[test]
    fn householder_triangularizes_rotated_input() {
        // conjugate a triangular matrix by a rotation and rebuild the path
        let tri = Mat2::new(0.5, 10.0, 0.0, 0.51);
        let q = Mat2::rotation(0.8);
        let m = q * tri * q.transpose();
        let c = Cocycle2::new(vec![m]).unwrap();
        let p = build_rotation_path(&c, 0, 0.5).unwrap();
        let (l1, l2, mu) = p.triangular_data();
        assert!((l1 - 0.5).abs() < 1e-10);
        assert!((l2 - 0.51).abs() < 1e-10);
        assert!((mu.abs() - 10.0).abs() < 1e-9);
        let lower_left = p.base().return_map(0).0[1][0];
        assert!(lower_left.abs() < 1e-12);
        let _ = Vec2::new(0.0, 0.0);
    }
}
