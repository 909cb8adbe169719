//! Piecewise-affine local model of a degenerate homoclinic tangency.
//!
//! The model lives on the open cube `(-1,1)^3`. Inside the cube the map is
//! the linear contraction/expansion `(x, y, z) -> (lambda x, lambda_tilde y,
//! mu z)` with `0 < lambda_tilde < lambda < 1 < mu`; on the closed box
//! `W0 = [-eps, eps]^2 x [p - eps, p + eps]` an `N`-step affine return sends
//! `(x, y, z + p)` to `(a z, b y + q, c x + t)`, with `t` the unfolding
//! parameter. Nothing is defined outside those two domains.
//!
//! At `t_n = p / mu^n` the composition of `n` interior steps and one return
//! closes up on a period-`(n+N)` orbit through
//! `R_n = (0, q / (1 - b lambda_tilde^n), p / mu^n)`; for admissible `n` its
//! derivative has one contracting and two expanding directions, a segment
//! `ell_n` through the entry point contracts onto the orbit with factor
//! `|b| lambda_tilde^n`, and a segment `pi_n` through `R_n` pulls back with
//! factor `(|ac| (lambda mu)^n)^{-1}`, witnessing intersections with both
//! invariant manifolds of the fixed point. This module computes all of it
//! and verifies the closed forms against brute-force iteration.

use crate::matrix::{Mat3, Vec3};
use crate::rational::{Rat, RatMat3};
use crate::spectrum::{spectrum3, SpectralData};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default horizon for admissibility and domination scans.
pub const DEFAULT_N_MAX: u32 = 64;

const RESONANCE_TOL: f64 = 1e-12;
const CLOSURE_TOL: f64 = 1e-9;
const MINIMALITY_TOL: f64 = 1e-6;
const RATIO_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnfoldingError {
    #[error("point ({0}, {1}, {2}) outside the interior chart domain")]
    OutOfChart(f64, f64, f64),
    #[error("point ({0}, {1}, {2}) outside the return box W0")]
    OutsideW0(f64, f64, f64),
    #[error("b * lambda_tilde^{n} is within {RESONANCE_TOL:e} of 1; periodic point undefined")]
    ResonantDenominator { n: u32 },
    #[error("n = {n} not yet admissible: {reason}")]
    NotYetInWindow { n: u32, reason: String },
    #[error("n = {n} fails containment at stage {stage}")]
    InadmissibleN { n: u32, stage: String },
    #[error("degenerate entry in reduction input: {0}")]
    DegenerateEntries(String),
}

/// Parameters of the affine unfolding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnfoldingModel {
    pub lambda: f64,
    pub lambda_tilde: f64,
    pub mu: f64,
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(rename = "N")]
    pub n_return: u32,
    pub eps_box: f64,
}

impl UnfoldingModel {
    /// The model used throughout the verification suite.
    pub fn reference() -> Self {
        UnfoldingModel {
            lambda: 0.8,
            lambda_tilde: 0.7,
            mu: 2.0,
            p: 0.5,
            q: 0.5,
            a: 1.0,
            b: 1.0,
            c: 1.0,
            n_return: 2,
            eps_box: 0.05,
        }
    }

    pub fn volume_expanding(&self) -> bool {
        self.lambda * self.lambda_tilde * self.mu > 1.0
    }

    pub fn lambda_mu_expanding(&self) -> bool {
        self.lambda * self.mu > 1.0
    }

    pub fn local_diag(&self) -> [f64; 3] {
        [self.lambda, self.lambda_tilde, self.mu]
    }

    /// Open interior domain of the linear step.
    pub fn in_local_domain(&self, pt: Vec3) -> bool {
        pt.x().abs() < 1.0 && pt.y().abs() < 1.0 && pt.z().abs() < 1.0 / self.mu
    }

    /// Closed return box `W0` (boundary points count as inside).
    pub fn in_w0(&self, pt: Vec3) -> bool {
        pt.x().abs() <= self.eps_box
            && pt.y().abs() <= self.eps_box
            && (pt.z() - self.p).abs() <= self.eps_box
    }

    /// Closed image box `W1` of `W0` under the parameter-zero return.
    pub fn in_w1(&self, pt: Vec3) -> bool {
        pt.x().abs() <= self.a.abs() * self.eps_box
            && (pt.y() - self.q).abs() <= self.b.abs() * self.eps_box
            && pt.z().abs() <= self.c.abs() * self.eps_box
    }

    /// Closed window `I_n` around the expected periodic point.
    pub fn in_window(&self, n: u32, pt: Vec3) -> bool {
        let scale = self.mu.powi(n as i32);
        pt.x().abs() <= self.eps_box
            && (pt.y() - self.q).abs() <= self.eps_box
            && pt.z() >= (self.p - self.eps_box) / scale
            && pt.z() <= (self.p + self.eps_box) / scale
    }

    /// Structural validity plus the two expansion flags the bifurcation
    /// analysis needs.
    // negated comparisons so NaN parameters fail validation
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> ModelReport {
        let mut violations = Vec::new();
        if !(0.0 < self.lambda_tilde && self.lambda_tilde < self.lambda) {
            violations
                .push("lambda_tilde must satisfy 0 < lambda_tilde < lambda".to_string());
        }
        if !(self.lambda < 1.0) {
            violations.push("lambda must be strictly below 1".to_string());
        }
        if !(self.mu > 1.0) {
            violations.push("mu must be strictly above 1".to_string());
        }
        if !(0.0 < self.p && self.p < 1.0) {
            violations.push("p must lie in (0, 1)".to_string());
        }
        if !(0.0 < self.q && self.q < 1.0) {
            violations.push("q must lie in (0, 1)".to_string());
        }
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if v == 0.0 || !v.is_finite() {
                violations.push(format!("{name} must be non-zero and finite"));
            }
        }
        if self.n_return < 2 {
            violations.push("N must be at least 2".to_string());
        }
        if !(self.eps_box > 0.0 && self.eps_box < self.p.min(1.0 - self.p)) {
            violations.push("eps_box must satisfy 0 < eps_box < min(p, 1 - p)".to_string());
        }
        ModelReport {
            valid: violations.is_empty(),
            violations,
            volume_expanding: self.volume_expanding(),
            lambda_mu_expanding: self.lambda_mu_expanding(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub valid: bool,
    pub violations: Vec<String>,
    /// `lambda * lambda_tilde * mu > 1`, the hypothesis that makes the new
    /// orbit volume-expanding.
    pub volume_expanding: bool,
    /// `lambda * mu > 1`, required for the backward contraction of `pi_n`.
    pub lambda_mu_expanding: bool,
}

/// Interior linear step `(x, y, z) -> (lambda x, lambda_tilde y, mu z)`.
pub fn local_step(m: &UnfoldingModel, pt: Vec3) -> Result<Vec3, UnfoldingError> {
    if !m.in_local_domain(pt) {
        return Err(UnfoldingError::OutOfChart(pt.x(), pt.y(), pt.z()));
    }
    Ok(local_step_raw(m, pt))
}

fn local_step_raw(m: &UnfoldingModel, pt: Vec3) -> Vec3 {
    Vec3::new(m.lambda * pt.x(), m.lambda_tilde * pt.y(), m.mu * pt.z())
}

/// Affine return on `W0`: the input `(x, y, p + z)` maps to
/// `(a z, b y + q, c x + t)`.
pub fn return_step(m: &UnfoldingModel, t: f64, pt: Vec3) -> Result<Vec3, UnfoldingError> {
    if !m.in_w0(pt) {
        return Err(UnfoldingError::OutsideW0(pt.x(), pt.y(), pt.z()));
    }
    Ok(return_step_raw(m, t, pt))
}

fn return_step_raw(m: &UnfoldingModel, t: f64, pt: Vec3) -> Vec3 {
    Vec3::new(
        m.a * (pt.z() - m.p),
        m.b * pt.y() + m.q,
        m.c * pt.x() + t,
    )
}

/// Inverse of the interior step; the preimage must itself lie in the
/// interior domain (and is the point the forward map would move from).
pub fn local_step_inverse(m: &UnfoldingModel, pt: Vec3) -> Result<Vec3, UnfoldingError> {
    let pre = Vec3::new(pt.x() / m.lambda, pt.y() / m.lambda_tilde, pt.z() / m.mu);
    if !m.in_local_domain(pre) {
        return Err(UnfoldingError::OutOfChart(pre.x(), pre.y(), pre.z()));
    }
    Ok(pre)
}

/// Inverse of the return; the preimage must lie in `W0`.
pub fn return_step_inverse(
    m: &UnfoldingModel,
    t: f64,
    pt: Vec3,
) -> Result<Vec3, UnfoldingError> {
    let pre = Vec3::new(
        (pt.z() - t) / m.c,
        (pt.y() - m.q) / m.b,
        m.p + pt.x() / m.a,
    );
    if !m.in_w0(pre) {
        return Err(UnfoldingError::OutsideW0(pre.x(), pre.y(), pre.z()));
    }
    Ok(pre)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrajectoryStatus {
    Completed,
    /// The orbit reached a point where neither map is defined.
    LeftDomain { at_step: u32 },
}

/// Recorded itinerary of the brute-force iteration. Each state carries the
/// number of underlying steps taken so far; a return advances `N` at once.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<(u32, Vec3)>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn final_point(&self) -> Vec3 {
        self.states.last().unwrap().1
    }

    pub fn final_step(&self) -> u32 {
        self.states.last().unwrap().0
    }
}

/// Iterates the model: the return applies whenever the point is in `W0`,
/// the interior step applies elsewhere in the chart, and the iteration
/// reports `LeftDomain` if neither is defined. A return that would exceed
/// `max_steps` is not taken.
pub fn iterate(m: &UnfoldingModel, t: f64, start: Vec3, max_steps: u32) -> Trajectory {
    let mut states = vec![(0u32, start)];
    let mut pt = start;
    let mut step = 0u32;
    while step < max_steps {
        if m.in_w0(pt) {
            if step + m.n_return > max_steps {
                break;
            }
            pt = return_step_raw(m, t, pt);
            step += m.n_return;
        } else if m.in_local_domain(pt) {
            pt = local_step_raw(m, pt);
            step += 1;
        } else {
            return Trajectory {
                states,
                status: TrajectoryStatus::LeftDomain { at_step: step },
            };
        }
        states.push((step, pt));
    }
    Trajectory {
        states,
        status: TrajectoryStatus::Completed,
    }
}

/// Parameter value `t_n = p / mu^n` at which the period-(n+N) orbit closes.
pub fn bifurcation_parameter(m: &UnfoldingModel, n: u32) -> f64 {
    m.p / m.mu.powi(n as i32)
}

/// Coordinates `(y_n, z_n)` of the periodic point, from the fixed-point
/// equations of the composed affine map.
pub fn cycle_coordinates(m: &UnfoldingModel, n: u32) -> Result<(f64, f64), UnfoldingError> {
    let denom = 1.0 - m.b * m.lambda_tilde.powi(n as i32);
    if denom.abs() < RESONANCE_TOL {
        return Err(UnfoldingError::ResonantDenominator { n });
    }
    Ok((m.q / denom, m.p / m.mu.powi(n as i32)))
}

/// The periodic point `R_n = (0, y_n, z_n)` without admissibility checks.
pub fn periodic_point_unchecked(m: &UnfoldingModel, n: u32) -> Result<Vec3, UnfoldingError> {
    let (y_n, z_n) = cycle_coordinates(m, n)?;
    Ok(Vec3::new(0.0, y_n, z_n))
}

/// The periodic point, requiring `R_n` inside the window `I_n` and its
/// `W0` entry point inside `W0`.
pub fn periodic_point(m: &UnfoldingModel, n: u32) -> Result<Vec3, UnfoldingError> {
    let r_n = periodic_point_unchecked(m, n)?;
    if !m.in_window(n, r_n) {
        return Err(UnfoldingError::NotYetInWindow {
            n,
            reason: format!("R_n = ({}, {}, {}) outside I_n", r_n.x(), r_n.y(), r_n.z()),
        });
    }
    let entry = w0_entry_point(m, n, r_n);
    if !m.in_w0(entry) {
        return Err(UnfoldingError::NotYetInWindow {
            n,
            reason: format!(
                "orbit entry point ({}, {}, {}) outside W0",
                entry.x(),
                entry.y(),
                entry.z()
            ),
        });
    }
    Ok(r_n)
}

/// The point where the orbit of `R_n` meets `W0`, after `n` interior steps.
fn w0_entry_point(m: &UnfoldingModel, n: u32, r_n: Vec3) -> Vec3 {
    Vec3::new(
        0.0,
        m.lambda_tilde.powi(n as i32) * r_n.y(),
        m.mu.powi(n as i32) * r_n.z(),
    )
}

/// Derivative of the period-(n+N) return composition in the factor order
/// `dF^n then dF^N`: the antidiagonal-plus-center matrix
/// `[[0, 0, lambda^n c], [0, lambda_tilde^n b, 0], [mu^n a, 0, 0]]`,
/// together with its spectrum.
pub fn return_derivative(m: &UnfoldingModel, n: u32) -> (Mat3, SpectralData) {
    let mat = Mat3::from_rows(
        [0.0, 0.0, m.lambda.powi(n as i32) * m.c],
        [0.0, m.lambda_tilde.powi(n as i32) * m.b, 0.0],
        [m.mu.powi(n as i32) * m.a, 0.0, 0.0],
    );
    let spec = spectrum3(&mat);
    (mat, spec)
}

/// Closed-form eigenvalues of the return derivative: the center entry
/// `lambda_tilde^n b` and the pair `+-sqrt(a c lambda^n mu^n)`, real when
/// `ac > 0` and purely imaginary when `ac < 0`.
pub fn return_derivative_closed_form(m: &UnfoldingModel, n: u32) -> (f64, Complex64) {
    let center = m.lambda_tilde.powi(n as i32) * m.b;
    let square = m.a * m.c * (m.lambda * m.mu).powi(n as i32);
    let pair = if square >= 0.0 {
        Complex64::new(square.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-square).sqrt())
    };
    (center, pair)
}

/// The `(n+N)`-step composition based at a `W0` point: the return first,
/// then `n` interior steps. Its fixed point is the `W0` entry point of the
/// periodic orbit and its derivative is the matrix of `return_derivative`.
pub fn cycle_return_map(
    m: &UnfoldingModel,
    t: f64,
    n: u32,
    pt: Vec3,
) -> Result<Vec3, UnfoldingError> {
    let mut cur = return_step(m, t, pt)?;
    for _ in 0..n {
        cur = local_step(m, cur)?;
    }
    Ok(cur)
}

/// Central-difference Jacobian (step 1e-6) of `cycle_return_map` at `pt`.
/// The model is affine on each itinerary piece, so this reproduces the
/// derivative to rounding accuracy as long as the stencil stays on the
/// same pieces.
pub fn cycle_return_jacobian_numeric(
    m: &UnfoldingModel,
    t: f64,
    n: u32,
    pt: Vec3,
) -> Result<Mat3, UnfoldingError> {
    const H: f64 = 1e-6;
    let mut cols = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut fw = pt;
        let mut bw = pt;
        fw.0[j] += H;
        bw.0[j] -= H;
        let plus = cycle_return_map(m, t, n, fw)?;
        let minus = cycle_return_map(m, t, n, bw)?;
        for i in 0..3 {
            cols[j][i] = (plus.0[i] - minus.0[i]) / (2.0 * H);
        }
    }
    Ok(Mat3::from_rows(
        [cols[0][0], cols[1][0], cols[2][0]],
        [cols[0][1], cols[1][1], cols[2][1]],
        [cols[0][2], cols[1][2], cols[2][2]],
    ))
}

/// Containment verdicts for the periodic orbit and the two segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContainmentChecks {
    /// `R_n` lies in the window `I_n`.
    pub point_in_window: bool,
    /// The orbit's `W0` entry point lies in `W0`.
    pub entry_in_w0: bool,
    /// Both endpoints of `ell_n` lie in `W0`.
    pub ell_in_w0: bool,
    /// First pull-back of `pi_n` lands in `W0`.
    pub pi_first_w0: bool,
    /// Pull-back after `n` more interior steps lands in `W1`.
    pub pi_w1: bool,
    /// Pull-back through the second return lands in `W0`.
    pub pi_second_w0: bool,
    /// `ell_n` contains the z-axis point `(0, 0, mu^n z_n)`.
    pub ell_meets_z_axis: bool,
    /// `pi_n` contains the stable-plane point `(0, y_n, 0)`.
    pub pi_meets_stable_plane: bool,
}

impl ContainmentChecks {
    pub fn all(&self) -> bool {
        self.point_in_window
            && self.entry_in_w0
            && self.ell_in_w0
            && self.pi_first_w0
            && self.pi_w1
            && self.pi_second_w0
            && self.ell_meets_z_axis
            && self.pi_meets_stable_plane
    }

    pub fn first_failure(&self) -> Option<&'static str> {
        [
            ("point_in_window", self.point_in_window),
            ("entry_in_w0", self.entry_in_w0),
            ("ell_in_w0", self.ell_in_w0),
            ("pi_first_w0", self.pi_first_w0),
            ("pi_w1", self.pi_w1),
            ("pi_second_w0", self.pi_second_w0),
            ("ell_meets_z_axis", self.ell_meets_z_axis),
            ("pi_meets_stable_plane", self.pi_meets_stable_plane),
        ]
        .iter()
        .find(|(_, ok)| !ok)
        .map(|(name, _)| *name)
    }
}

/// Full verification record for one value of `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleReport {
    pub n: u32,
    pub t_n: f64,
    pub r_n: Vec3,
    pub period_check: bool,
    pub closure_error: f64,
    /// No earlier return: every intermediate orbit point stays away from
    /// `R_n` by more than the minimality tolerance.
    pub minimal_period: bool,
    pub eigenvalues: SpectralData,
    pub index: usize,
    pub ell_measured: f64,
    pub ell_predicted: f64,
    pub pi_measured: f64,
    pub pi_predicted: f64,
    pub containment: ContainmentChecks,
    pub all_pass: bool,
}

/// The five admissibility predicates scanned by `min_n_index_two`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    /// `|lambda_tilde^n b| < 1`.
    pub stable_contracting: bool,
    /// `|a c (lambda mu)^n| > 1`.
    pub unstable_expanding: bool,
    /// `R_n` in `I_n` and the entry point in `W0`.
    pub orbit_contained: bool,
    /// `ell_n` checks.
    pub ell_contained: bool,
    /// `pi_n` pull-back checks.
    pub pi_contained: bool,
}

impl Admissibility {
    pub fn all(&self) -> bool {
        self.stable_contracting
            && self.unstable_expanding
            && self.orbit_contained
            && self.ell_contained
            && self.pi_contained
    }
}

pub fn admissibility(m: &UnfoldingModel, n: u32) -> Result<Admissibility, UnfoldingError> {
    let report = verify_cycle_forced(m, n)?;
    Ok(admissibility_from(m, n, &report.containment))
}

fn admissibility_from(
    m: &UnfoldingModel,
    n: u32,
    containment: &ContainmentChecks,
) -> Admissibility {
    let (center, pair) = return_derivative_closed_form(m, n);
    Admissibility {
        stable_contracting: center.abs() < 1.0,
        unstable_expanding: pair.norm() > 1.0,
        orbit_contained: containment.point_in_window && containment.entry_in_w0,
        ell_contained: containment.ell_in_w0 && containment.ell_meets_z_axis,
        pi_contained: containment.pi_first_w0
            && containment.pi_w1
            && containment.pi_second_w0
            && containment.pi_meets_stable_plane,
    }
}

/// Smallest `n <= n_max` at which all five admissibility predicates hold;
/// `None` unless the model is volume-expanding with `lambda mu > 1`.
pub fn min_n_index_two(m: &UnfoldingModel, n_max: u32) -> Option<u32> {
    if !m.volume_expanding() || !m.lambda_mu_expanding() {
        return None;
    }
    (1..=n_max).find(|&n| {
        admissibility(m, n)
            .map(|adm| adm.all())
            .unwrap_or(false)
    })
}

/// Verifies the cycle at `n`, failing with the first containment stage
/// that does not hold.
pub fn verify_cycle(m: &UnfoldingModel, n: u32) -> Result<CycleReport, UnfoldingError> {
    let report = verify_cycle_forced(m, n)?;
    if let Some(stage) = report.containment.first_failure() {
        return Err(UnfoldingError::InadmissibleN {
            n,
            stage: stage.to_string(),
        });
    }
    Ok(report)
}

/// Verifies the cycle at `n` regardless of containment; the report records
/// which checks hold.
pub fn verify_cycle_forced(m: &UnfoldingModel, n: u32) -> Result<CycleReport, UnfoldingError> {
    let t_n = bifurcation_parameter(m, n);
    let (y_n, z_n) = cycle_coordinates(m, n)?;
    let r_n = Vec3::new(0.0, y_n, z_n);
    let entry = w0_entry_point(m, n, r_n);
    let steps = n + m.n_return;

    // orbit closure via brute-force iteration
    let traj = iterate(m, t_n, r_n, steps);
    let (period_check, closure_error, minimal_period) = match traj.status {
        TrajectoryStatus::Completed if traj.final_step() == steps => {
            let err = (traj.final_point() - r_n).norm();
            let minimal = traj.states[1..traj.states.len() - 1]
                .iter()
                .all(|(_, pt)| (*pt - r_n).norm() > MINIMALITY_TOL);
            (err <= CLOSURE_TOL, err, minimal)
        }
        _ => (false, f64::INFINITY, false),
    };

    let (_, eigenvalues) = return_derivative(m, n);
    let index = eigenvalues.index();

    // ell_n: y-segment through the entry point at the W0 level
    let half_ell = 2.0 * m.lambda_tilde.powi(n as i32) * y_n;
    let z_entry = entry.z();
    let ell_end = |s: f64| Vec3::new(0.0, entry.y() + s, z_entry);
    let ell_in_w0 = m.in_w0(ell_end(half_ell)) && m.in_w0(ell_end(-half_ell));
    let ell_meets_z_axis = entry.y().abs() <= half_ell.abs() + 1e-15 && half_ell >= 0.0;

    let push = |pt: Vec3| cycle_return_map(m, t_n, n, pt);
    let (ell_measured, ell_on_line) = match (push(ell_end(half_ell)), push(ell_end(-half_ell))) {
        (Ok(hi), Ok(lo)) => {
            let ratio = (hi - lo).norm() / (ell_end(half_ell) - ell_end(-half_ell)).norm();
            let on_line = hi.x().abs() <= 1e-9
                && lo.x().abs() <= 1e-9
                && (hi.z() - z_entry).abs() <= 1e-9
                && (lo.z() - z_entry).abs() <= 1e-9;
            (ratio, on_line)
        }
        _ => (f64::NAN, false),
    };
    let ell_predicted = m.b.abs() * m.lambda_tilde.powi(n as i32);

    // pi_n: z-segment through R_n, pulled back 2(n+N) steps
    let half_pi = 2.0 * z_n;
    let pi_end = |s: f64| Vec3::new(0.0, y_n, z_n + s);
    let pi_meets_stable_plane = z_n.abs() <= half_pi.abs() + 1e-15 && half_pi >= 0.0;

    let pull_back = |pt: Vec3| -> Result<(Vec3, Vec3, Vec3, Vec3), UnfoldingError> {
        let first = return_step_inverse(m, t_n, pt)?;
        let mut mid = first;
        for _ in 0..n {
            mid = local_step_inverse(m, mid)?;
        }
        let second = return_step_inverse(m, t_n, mid)?;
        let mut last = second;
        for _ in 0..n {
            last = local_step_inverse(m, last)?;
        }
        Ok((first, mid, second, last))
    };

    let (pi_first_w0, pi_w1, pi_second_w0, pi_measured, pi_on_line) =
        match (pull_back(pi_end(half_pi)), pull_back(pi_end(-half_pi))) {
            (Ok((f1, m1, s1, l1)), Ok((f2, m2, s2, l2))) => {
                let first_w0 = m.in_w0(f1) && m.in_w0(f2);
                let w1 = m.in_w1(m1) && m.in_w1(m2);
                let second_w0 = m.in_w0(s1) && m.in_w0(s2);
                let ratio = (l1 - l2).norm() / (pi_end(half_pi) - pi_end(-half_pi)).norm();
                let on_line = l1.x().abs() <= 1e-9
                    && l2.x().abs() <= 1e-9
                    && (l1.y() - y_n).abs() <= 1e-9
                    && (l2.y() - y_n).abs() <= 1e-9;
                (first_w0, w1, second_w0, ratio, on_line)
            }
            _ => (false, false, false, f64::NAN, false),
        };
    let pi_predicted = 1.0 / (m.a * m.c).abs() / (m.lambda * m.mu).powi(n as i32);

    let containment = ContainmentChecks {
        point_in_window: m.in_window(n, r_n),
        entry_in_w0: m.in_w0(entry),
        ell_in_w0,
        pi_first_w0,
        pi_w1,
        pi_second_w0,
        ell_meets_z_axis,
        pi_meets_stable_plane,
    };

    let rel = |a: f64, b: f64| (a - b).abs() <= RATIO_TOL * a.abs().max(b.abs());
    let all_pass = containment.all()
        && period_check
        && minimal_period
        && ell_on_line
        && pi_on_line
        && rel(ell_measured, ell_predicted)
        && rel(pi_measured, pi_predicted)
        && index == 2;

    Ok(CycleReport {
        n,
        t_n,
        r_n,
        period_check,
        closure_error,
        minimal_period,
        eigenvalues,
        index,
        ell_measured,
        ell_predicted,
        pi_measured,
        pi_predicted,
        containment,
        all_pass,
    })
}

/// One row of the bifurcation sweep (closed-form quantities plus the
/// admissibility verdict).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u32,
    pub t_n: f64,
    pub y_n: f64,
    pub z_n: f64,
    pub eig_stable: f64,
    pub eig_unstable: f64,
    pub ell_ratio: f64,
    pub pi_ratio: f64,
    pub admissible: bool,
}

pub fn sweep_row(m: &UnfoldingModel, n: u32) -> SweepRow {
    let t_n = bifurcation_parameter(m, n);
    let (y_n, z_n) = match cycle_coordinates(m, n) {
        Ok(v) => v,
        Err(_) => (f64::INFINITY, m.p / m.mu.powi(n as i32)),
    };
    let (center, pair) = return_derivative_closed_form(m, n);
    let admissible = admissibility(m, n).map(|a| a.all()).unwrap_or(false);
    SweepRow {
        n,
        t_n,
        y_n,
        z_n,
        eig_stable: center,
        eig_unstable: pair.norm(),
        ell_ratio: m.b.abs() * m.lambda_tilde.powi(n as i32),
        pi_ratio: 1.0 / (m.a * m.c).abs() / (m.lambda * m.mu).powi(n as i32),
        admissible,
    }
}

/// Entrywise scale of the cancellations in a product `left * right`:
/// entry `(i, j)` is `sum_k |left[i][k]| |right[k][j]|`, the natural
/// reference magnitude for deciding whether a computed entry of the product
/// is a rounding-level zero.
pub fn product_entry_scale(left: Mat3, right: Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (k, row) in right.0.iter().enumerate() {
                out[i][j] += left.0[i][k].abs() * row[j].abs();
            }
        }
    }
    Mat3(out)
}

/// Renormalization of a return differential: `L^{n_q} * dfn * L^{n_p}` for
/// the local diagonal `l`. An entry of the result is zero exactly when the
/// corresponding entry of `dfn` is zero.
pub fn renormalize(dfn: Mat3, l: [f64; 3], n_p: u32, n_q: u32) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = l[i].powi(n_q as i32) * dfn.0[i][j] * l[j].powi(n_p as i32);
        }
    }
    Mat3(out)
}

/// First reduction stage.
///
/// Input labeled `[[a, d, g], [b, e, h], [c, f, 0]]` with `c, f, g` nonzero
/// and a zero corner. Appending `steps` interior steps and correcting the
/// last one with the shear
/// `[[1, 0, z_l], [x_l, 1, y_l], [0, 0, 1]]` kills the entries
/// `(1,1), (2,1), (2,3), (3,3)` of the composed `(steps+N)`-differential.
/// The correction tends to the identity geometrically as `steps` grows.
pub fn tangency_reduction_stage1(
    dfn: Mat3,
    l: [f64; 3],
    steps: u32,
) -> Result<(Mat3, Mat3), UnfoldingError> {
    let [[a, d, g], [b, _e, h], [c, f, zero]] = dfn.0;
    let _ = (d, f);
    if zero != 0.0 {
        return Err(UnfoldingError::DegenerateEntries(
            "entry (3,3) must be exactly zero".into(),
        ));
    }
    for (name, v) in [("c", c), ("f", dfn.0[2][1]), ("g", g)] {
        if v.abs() < 1e-12 {
            return Err(UnfoldingError::DegenerateEntries(format!(
                "entry {name} below 1e-12"
            )));
        }
    }
    let (lam, lt, mu) = (l[0], l[1], l[2]);
    let k = steps as i32;
    let x_l = -(lt / lam).powi(k) * (h / g);
    let y_l = (lt / mu).powi(k) * (a * h / (c * g)) - (lt / mu).powi(k) * (b / c);
    let z_l = -(lam / mu).powi(k) * (a / c);
    let correction = Mat3::from_rows([1.0, 0.0, z_l], [x_l, 1.0, y_l], [0.0, 0.0, 1.0]);
    let scaled = renormalize(dfn, l, 0, steps);
    Ok((correction, correction * scaled))
}

/// Exact-rational mirror of `tangency_reduction_stage1`; the stated zeros
/// of the composed matrix cancel identically.
pub fn tangency_reduction_stage1_exact(
    dfn: RatMat3,
    l: [Rat; 3],
    steps: u32,
) -> Result<(RatMat3, RatMat3), UnfoldingError> {
    let a = dfn.0[0][0];
    let g = dfn.0[0][2];
    let b = dfn.0[1][0];
    let h = dfn.0[1][2];
    let c = dfn.0[2][0];
    let f = dfn.0[2][1];
    if !dfn.0[2][2].is_zero() {
        return Err(UnfoldingError::DegenerateEntries(
            "entry (3,3) must be exactly zero".into(),
        ));
    }
    if c.is_zero() || f.is_zero() || g.is_zero() {
        return Err(UnfoldingError::DegenerateEntries(
            "entries c, f, g must be non-zero".into(),
        ));
    }
    let (lam, lt, mu) = (l[0], l[1], l[2]);
    let x_l = -(lt / lam).pow(steps) * (h / g);
    let y_l = (lt / mu).pow(steps) * (a * h / (c * g)) - (lt / mu).pow(steps) * (b / c);
    let z_l = -(lam / mu).pow(steps) * (a / c);
    let mut correction = RatMat3::identity();
    correction.0[0][2] = z_l;
    correction.0[1][0] = x_l;
    correction.0[1][2] = y_l;
    let scaled = RatMat3::diag(lam.pow(steps), lt.pow(steps), mu.pow(steps)) * dfn;
    Ok((correction, correction * scaled))
}

/// Second reduction stage.
///
/// Input labeled `[[0, b, e], [0, c, 0], [a, d, 0]]` with `a, c, e`
/// nonzero. Prepending `steps` interior steps and correcting the first one
/// with the shear `[[1, x_l, 0], [0, 1, 0], [0, y_l, 1]]` leaves nonzero
/// entries only at `(1,3), (2,2), (3,1)`.
pub fn tangency_reduction_stage2(
    dfn: Mat3,
    l: [f64; 3],
    steps: u32,
) -> Result<(Mat3, Mat3), UnfoldingError> {
    let [[z00, b, e], [z10, c, z12], [a, d, z22]] = dfn.0;
    if z00 != 0.0 || z10 != 0.0 || z12 != 0.0 || z22 != 0.0 {
        return Err(UnfoldingError::DegenerateEntries(
            "entries (1,1), (2,1), (2,3), (3,3) must be exactly zero".into(),
        ));
    }
    for (name, v) in [("a", a), ("c", c), ("e", e)] {
        if v.abs() < 1e-12 {
            return Err(UnfoldingError::DegenerateEntries(format!(
                "entry {name} below 1e-12"
            )));
        }
    }
    let (lam, lt, mu) = (l[0], l[1], l[2]);
    let k = steps as i32;
    let x_l = -(lt / lam).powi(k) * (d / a);
    let y_l = -(lt / mu).powi(k) * (b / e);
    let correction = Mat3::from_rows([1.0, x_l, 0.0], [0.0, 1.0, 0.0], [0.0, y_l, 1.0]);
    let scaled = renormalize(dfn, l, steps, 0);
    Ok((correction, scaled * correction))
}

/// Exact-rational mirror of `tangency_reduction_stage2`.
pub fn tangency_reduction_stage2_exact(
    dfn: RatMat3,
    l: [Rat; 3],
    steps: u32,
) -> Result<(RatMat3, RatMat3), UnfoldingError> {
    let b = dfn.0[0][1];
    let e = dfn.0[0][2];
    let c = dfn.0[1][1];
    let a = dfn.0[2][0];
    let d = dfn.0[2][1];
    let zeros_ok = dfn.0[0][0].is_zero()
        && dfn.0[1][0].is_zero()
        && dfn.0[1][2].is_zero()
        && dfn.0[2][2].is_zero();
    if !zeros_ok {
        return Err(UnfoldingError::DegenerateEntries(
            "entries (1,1), (2,1), (2,3), (3,3) must be exactly zero".into(),
        ));
    }
    if a.is_zero() || c.is_zero() || e.is_zero() {
        return Err(UnfoldingError::DegenerateEntries(
            "entries a, c, e must be non-zero".into(),
        ));
    }
    let (lam, lt, mu) = (l[0], l[1], l[2]);
    let x_l = -(lt / lam).pow(steps) * (d / a);
    let y_l = -(lt / mu).pow(steps) * (b / e);
    let mut correction = RatMat3::identity();
    correction.0[0][1] = x_l;
    correction.0[2][1] = y_l;
    let scaled = dfn * RatMat3::diag(lam.pow(steps), lt.pow(steps), mu.pow(steps));
    Ok((correction, scaled * correction))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rm() -> UnfoldingModel {
        UnfoldingModel::reference()
    }

    #[test]
    fn validate_reference_and_broken_models() {
        let report = rm().validate();
        assert!(report.valid, "{:?}", report.violations);
        assert!(report.volume_expanding); // 0.8 * 0.7 * 2 = 1.12
        assert!(report.lambda_mu_expanding); // 1.6

        let mut bad = rm();
        bad.lambda_tilde = bad.lambda;
        let report = bad.validate();
        assert!(!report.valid);
        assert!(report.violations.iter().any(|v| v.contains("lambda_tilde")));

        let mut weak = rm();
        weak.lambda = 0.4;
        let weak = UnfoldingModel {
            lambda_tilde: 0.3,
            ..weak
        };
        let report = weak.validate();
        assert!(report.valid);
        assert!(!report.lambda_mu_expanding); // 0.8
    }

    #[test]
    fn local_step_examples() {
        let m = rm();
        let origin = Vec3::new(0.0, 0.0, 0.0);
        assert_eq!(local_step(&m, origin).unwrap(), origin);

        let axis = Vec3::new(0.0, 0.0, m.p / m.mu);
        assert_eq!(local_step(&m, axis).unwrap(), Vec3::new(0.0, 0.0, m.p));

        let pt = Vec3::new(0.1, 0.1, 0.1);
        let image = local_step(&m, pt).unwrap();
        assert!((image.x() - 0.08).abs() < 1e-15);
        assert!((image.y() - 0.07).abs() < 1e-15);
        assert!((image.z() - 0.2).abs() < 1e-15);

        assert!(matches!(
            local_step(&m, Vec3::new(0.0, 0.0, 0.6)),
            Err(UnfoldingError::OutOfChart(..))
        ));
    }

    #[test]
    fn return_step_examples() {
        let m = rm();
        // P = (0, 0, p) maps to Q = (0, q, 0) at t = 0
        let p_point = Vec3::new(0.0, 0.0, m.p);
        assert_eq!(
            return_step(&m, 0.0, p_point).unwrap(),
            Vec3::new(0.0, m.q, 0.0)
        );
        // x-offset lands in the z output through c
        let off = Vec3::new(m.eps_box, 0.0, m.p);
        let image = return_step(&m, 0.0, off).unwrap();
        assert_eq!(image, Vec3::new(0.0, m.q, m.c * m.eps_box));
        // the parameter enters the third output additively
        let image = return_step(&m, 0.125, p_point).unwrap();
        assert_eq!(image, Vec3::new(0.0, m.q, 0.125));

        assert!(matches!(
            return_step(&m, 0.0, Vec3::new(0.3, 0.0, m.p)),
            Err(UnfoldingError::OutsideW0(..))
        ));
    }

    #[test]
    fn iterate_fixed_point_and_homoclinic_route() {
        let m = rm();
        let traj = iterate(&m, 0.0, Vec3::new(0.0, 0.0, 0.0), 10);
        assert_eq!(traj.status, TrajectoryStatus::Completed);
        for (_, pt) in &traj.states {
            assert_eq!(*pt, Vec3::new(0.0, 0.0, 0.0));
        }

        // (0, 0, p/mu^n) reaches P in n steps, returns to Q, then contracts
        // toward the origin along the y-axis
        let n = 6u32;
        let start = Vec3::new(0.0, 0.0, m.p / m.mu.powi(n as i32));
        let traj = iterate(&m, 0.0, start, n + m.n_return + 5);
        assert_eq!(traj.status, TrajectoryStatus::Completed);
        let at_n = traj.states.iter().find(|(s, _)| *s == n).unwrap().1;
        assert!((at_n.z() - m.p).abs() < 1e-12 && at_n.x() == 0.0);
        let after_return = traj.states.iter().find(|(s, _)| *s == n + m.n_return).unwrap().1;
        assert!((after_return.y() - m.q).abs() < 1e-12);
        assert!(after_return.z().abs() < 1e-12);
        let last = traj.final_point();
        assert!(last.y() < m.q && last.y() > 0.0);
    }

    #[test]
    fn bifurcation_parameter_values() {
        let m = rm();
        assert_eq!(bifurcation_parameter(&m, 4), 0.5 / 16.0);
        // exact ratio at mu = 2
        for n in 1..20 {
            assert_eq!(
                bifurcation_parameter(&m, n + 1) / bifurcation_parameter(&m, n),
                0.5
            );
        }
        assert!(bifurcation_parameter(&m, 60) < 1e-17);
    }

    #[test]
    fn periodic_point_formula_and_window() {
        let m = rm();
        // arithmetic at n = 4 (not yet admissible, so use the raw formula)
        let r4 = periodic_point_unchecked(&m, 4).unwrap();
        assert!((r4.y() - 0.5 / (1.0 - 0.7f64.powi(4))).abs() < 1e-15);
        assert_eq!(r4.z(), 0.5 / 16.0);
        assert!(matches!(
            periodic_point(&m, 4),
            Err(UnfoldingError::NotYetInWindow { .. })
        ));

        // b = 1, lt = 0.7, n = 1: y_1 = q / 0.3
        let r1 = periodic_point_unchecked(&m, 1).unwrap();
        assert!((r1.y() - m.q / 0.3).abs() < 1e-12);

        // y_n approaches q as n grows (error ~ q * lambda_tilde^n)
        let r30 = periodic_point_unchecked(&m, 30).unwrap();
        assert!((r30.y() - m.q).abs() < 1e-4);
        let r60 = periodic_point_unchecked(&m, 60).unwrap();
        assert!((r60.y() - m.q).abs() < 1e-9);
    }

    #[test]
    fn resonant_denominator_detected() {
        let mut m = rm();
        m.b = 1.0 / m.lambda_tilde.powi(3);
        assert!(matches!(
            cycle_coordinates(&m, 3),
            Err(UnfoldingError::ResonantDenominator { n: 3 })
        ));
    }

    #[test]
    fn return_derivative_matches_closed_form() {
        let m = rm();
        for n in 1..=20 {
            let (mat, spec) = return_derivative(&m, n);
            assert_eq!(mat.0[0][2], m.lambda.powi(n as i32) * m.c);
            assert_eq!(mat.0[2][0], m.mu.powi(n as i32) * m.a);
            let (center, pair) = return_derivative_closed_form(&m, n);
            let tol = 1e-12;
            for want in [center, pair.re, -pair.re] {
                let hit = spec
                    .eigenvalues
                    .iter()
                    .any(|z| (z.re - want).abs() <= tol * want.abs() && z.im == 0.0);
                assert!(hit, "n = {n}: missing eigenvalue {want}");
            }
        }
        // n = 4 reference values
        let (_, spec) = return_derivative(&m, 4);
        assert!((spec.eigenvalues[0].re - 0.2401).abs() < 1e-14);
        assert!((spec.eigenvalues[2].re - 2.56).abs() < 1e-12);
        assert!((spec.eigenvalues[1].re + 2.56).abs() < 1e-12);
    }

    #[test]
    fn return_derivative_complex_pair_for_negative_ac() {
        let mut m = rm();
        m.c = -1.0;
        let (_, spec) = return_derivative(&m, 3);
        assert!(spec.has_complex_pair());
        let (_, pair) = return_derivative_closed_form(&m, 3);
        assert!(pair.re == 0.0 && pair.im > 0.0);
        let modulus = (m.lambda * m.mu).powi(3).sqrt();
        assert!((spec.eigenvalues[2].im.abs() - modulus).abs() < 1e-12);
        // n = 0: no linear phase, eigenvalues {b, +sqrt(ac), -sqrt(ac)} = {1, 1, -1}
        let (_, spec0) = return_derivative(&rm(), 0);
        for z in &spec0.eigenvalues {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        let trace: f64 = spec0.eigenvalues.iter().map(|z| z.re).sum();
        assert!((trace - 1.0).abs() < 1e-12);
    }

    #[test]
    fn min_n_is_ten_on_reference_model() {
        let m = rm();
        assert_eq!(min_n_index_two(&m, DEFAULT_N_MAX), Some(10));
        // n = 9 fails at least one predicate
        let adm9 = admissibility(&m, 9).unwrap();
        assert!(!adm9.all());
        assert!(!adm9.ell_contained);
        // and admissibility is monotone past the threshold
        for n in 10..=20 {
            assert!(admissibility(&m, n).unwrap().all(), "n = {n}");
        }
    }

    #[test]
    fn min_n_absent_when_lambda_mu_contracts() {
        let m = UnfoldingModel {
            lambda: 0.4,
            lambda_tilde: 0.3,
            ..rm()
        };
        assert_eq!(min_n_index_two(&m, DEFAULT_N_MAX), None);
    }

    #[test]
    fn verify_cycle_reference_minimum() {
        let m = rm();
        let report = verify_cycle(&m, 10).unwrap();
        assert!(report.all_pass);
        assert!(report.period_check);
        assert!(report.minimal_period);
        assert!(report.closure_error <= 1e-9);
        assert_eq!(report.index, 2);
        assert!((report.ell_measured - report.ell_predicted).abs() <= 1e-10 * report.ell_predicted);
        assert!((report.pi_measured - report.pi_predicted).abs() <= 1e-10 * report.pi_predicted);
        // predicted factors: 0.7^10 and 1.6^-10
        assert!((report.ell_predicted - 0.7f64.powi(10)).abs() < 1e-15);
        assert!((report.pi_predicted - 1.6f64.powi(-10)).abs() < 1e-15);
    }

    #[test]
    fn verify_cycle_rejects_small_n() {
        let m = rm();
        let err = verify_cycle(&m, 4).unwrap_err();
        assert!(matches!(err, UnfoldingError::InadmissibleN { n: 4, .. }));
        // forced report still carries the measurements that make sense
        let forced = verify_cycle_forced(&m, 4).unwrap();
        assert!(!forced.containment.all());
        assert!(!forced.all_pass);
    }

    #[test]
    fn numeric_jacobian_matches_return_derivative_on_reference() {
        let m = rm();
        let n = min_n_index_two(&m, DEFAULT_N_MAX).unwrap();
        let t_n = bifurcation_parameter(&m, n);
        let r_n = periodic_point(&m, n).unwrap();
        let entry = Vec3::new(
            0.0,
            m.lambda_tilde.powi(n as i32) * r_n.y(),
            m.mu.powi(n as i32) * r_n.z(),
        );
        // the entry point is the fixed point of the return-then-interior map
        let back = cycle_return_map(&m, t_n, n, entry).unwrap();
        assert!((back - entry).norm() < 1e-12);
        let numeric = cycle_return_jacobian_numeric(&m, t_n, n, entry).unwrap();
        let (exact, _) = return_derivative(&m, n);
        assert!((numeric - exact).max_abs_entry() < 1e-5);
    }

    #[test]
    fn sweep_rows_monotone_admissibility() {
        let m = rm();
        let rows: Vec<SweepRow> = (1..=20).map(|n| sweep_row(&m, n)).collect();
        let first_admissible = rows.iter().position(|r| r.admissible).unwrap();
        assert_eq!(rows[first_admissible].n, 10);
        assert!(rows[first_admissible..].iter().all(|r| r.admissible));
        assert!(rows[..first_admissible].iter().all(|r| !r.admissible));
    }

    #[test]
    fn renormalize_scaling_and_zero_pattern() {
        let dfn = Mat3::from_rows([1.0, 2.0, 0.0], [0.5, 0.0, 3.0], [0.0, 4.0, 0.25]);
        let l = [0.8, 0.7, 2.0];
        let out = renormalize(dfn, l, 2, 3);
        for i in 0..3 {
            for j in 0..3 {
                let expect = l[i].powi(3) * dfn.0[i][j] * l[j].powi(2);
                assert_eq!(out.0[i][j], expect);
                assert_eq!(out.0[i][j] == 0.0, dfn.0[i][j] == 0.0);
            }
        }
        // identity when no steps are appended
        assert_eq!(renormalize(dfn, l, 0, 0), dfn);
    }

    #[test]
    fn stage1_zero_pattern_float_and_exact() {
        let l = [0.8, 0.7, 2.0];
        let dfn = Mat3::from_rows([1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 0.0]);
        let (correction, composed) = tangency_reduction_stage1(dfn, l, 5).unwrap();
        let scale = product_entry_scale(correction, renormalize(dfn, l, 0, 5));
        for (i, j) in [(0, 0), (1, 0), (1, 2), (2, 2)] {
            assert!(
                composed.0[i][j].abs() <= 1e-12 * scale.0[i][j],
                "entry ({i},{j}) = {}",
                composed.0[i][j]
            );
        }
        // correction drifts from the identity by the three stated rates
        assert!((correction.0[1][0].abs() - (0.7f64 / 0.8).powi(5)).abs() < 1e-12);
        assert!(correction.0[1][2].abs() < 1e-12); // ah/cg = b/c here
        assert!((correction.0[0][2].abs() - 0.4f64.powi(5)).abs() < 1e-12);

        let q = |n: i128, d: i128| Rat::new(n, d);
        let l_exact = [q(4, 5), q(7, 10), q(2, 1)];
        let dfn_exact = {
            let mut m = RatMat3::identity();
            for i in 0..3 {
                for j in 0..3 {
                    m.0[i][j] = if (i, j) == (2, 2) { Rat::zero() } else { q(1, 1) };
                }
            }
            m
        };
        let (_, composed) = tangency_reduction_stage1_exact(dfn_exact, l_exact, 5).unwrap();
        for (i, j) in [(0, 0), (1, 0), (1, 2), (2, 2)] {
            assert!(composed.0[i][j].is_zero(), "entry ({i},{j}) not exactly zero");
        }
    }

    #[test]
    fn stage1_rejects_degenerate_entries() {
        let l = [0.8, 0.7, 2.0];
        let mut dfn = Mat3::from_rows([1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 0.0]);
        dfn.0[2][0] = 0.0;
        assert!(matches!(
            tangency_reduction_stage1(dfn, l, 3),
            Err(UnfoldingError::DegenerateEntries(_))
        ));
    }

    #[test]
    fn stage2_zero_pattern() {
        let l = [0.8, 0.7, 2.0];
        let dfn = Mat3::from_rows([0.0, 1.0, 1.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]);
        let (_, composed) = tangency_reduction_stage2(dfn, l, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect_nonzero = matches!((i, j), (0, 2) | (1, 1) | (2, 0));
                if expect_nonzero {
                    assert!(composed.0[i][j] != 0.0);
                } else {
                    let scale = composed.max_abs_entry();
                    assert!(composed.0[i][j].abs() <= 1e-12 * scale);
                }
            }
        }

        // already in final form: correction is the identity
        let diagonal_like =
            Mat3::from_rows([0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]);
        let (correction, _) = tangency_reduction_stage2(diagonal_like, l, 4).unwrap();
        assert_eq!(correction, Mat3::identity());
    }

    #[test]
    fn pipeline_stage1_feeds_stage2() {
        let l = [0.8, 0.7, 2.0];
        let dfn = Mat3::from_rows([1.0, 0.6, 1.3], [0.9, 1.1, 0.7], [1.2, 0.8, 0.0]);
        let (_, composed) = tangency_reduction_stage1(dfn, l, 6).unwrap();
        // force the cancelled entries to exact zero, renormalize, and feed
        // the second stage
        let mut cleaned = composed;
        for (i, j) in [(0, 0), (1, 0), (1, 2), (2, 2)] {
            cleaned.0[i][j] = 0.0;
        }
        let renorm = renormalize(cleaned, l, 1, 1);
        let (_, finished) = tangency_reduction_stage2(renorm, l, 6).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect_nonzero = matches!((i, j), (0, 2) | (1, 1) | (2, 0));
                if expect_nonzero {
                    assert!(finished.0[i][j] != 0.0);
                } else {
                    assert!(finished.0[i][j].abs() <= 1e-12 * finished.max_abs_entry());
                }
            }
        }
    }

    #[test]
    fn correction_converges_geometrically() {
        let l = [0.8, 0.7, 2.0];
        let dfn = Mat3::from_rows([1.5, 0.6, 1.3], [0.9, 1.1, 0.7], [1.2, 0.8, 0.0]);
        let mut prev: Option<(f64, f64, f64)> = None;
        for steps in 1..=20 {
            let (corr, _) = tangency_reduction_stage1(dfn, l, steps).unwrap();
            let (x, y, z) = (corr.0[1][0].abs(), corr.0[1][2].abs(), corr.0[0][2].abs());
            if let Some((px, py, pz)) = prev {
                assert!((x / px - 0.7 / 0.8).abs() < 1e-9);
                assert!((y / py - 0.7 / 2.0).abs() < 1e-9);
                assert!((z / pz - 0.8 / 2.0).abs() < 1e-9);
            }
            prev = Some((x, y, z));
        }
    }

    #[test]
    fn model_json_round_trip_with_renamed_field() {
        let m = rm();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"N\":2"));
        assert!(json.contains("\"eps_box\":0.05"));
        let back: UnfoldingModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        // unknown keys rejected
        assert!(serde_json::from_str::<UnfoldingModel>(
            "{\"lambda\":0.8,\"lambda_tilde\":0.7,\"mu\":2,\"p\":0.5,\"q\":0.5,\"a\":1,\"b\":1,\"c\":1,\"N\":2,\"eps_box\":0.05,\"bogus\":1}"
        )
        .is_err());
    }
}
