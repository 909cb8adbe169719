//! Transition products with a homothetic stable block.
//!
//! Given a diagonal return map `sigma = diag(l1, l2, l3)` with
//! `0 < l1 < l2 < 1 < l3` and a swap matrix `T` exchanging the first two
//! eigenlines (`T e1 = m1 e2`, `T e2 = m2 e1`, `T e3 = m3 e3`), the
//! eight-factor product
//!
//! ```text
//! D_n = sigma^{2n} T sigma^n T sigma^n T sigma^{2n} T
//! ```
//!
//! acts on the plane `<e1, e2>` as the homothety `(m1 m2)^2 (l1 l2)^{3n} Id`
//! and on `e3` as multiplication by `m3^4 l3^{6n}`. Both factors of the
//! product are monomial matrices, so every entry of `D_n` is a single
//! product of factor entries; a sign + log-magnitude evaluation is exact in
//! structure and immune to overflow for large `n`.

use crate::matrix::Mat3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransitionError {
    #[error("sigma eigenvalues must satisfy 0 < l1 < l2 < 1 < l3, got {0:?}")]
    BadSigma([f64; 3]),
    #[error("transition factors must be non-zero, got {0:?}")]
    BadSwap([f64; 3]),
}

/// The pair (diagonal return map, swap transition) consumed by the
/// product construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionSystem {
    /// Eigenvalues of the return map, increasing, two below 1 and one above.
    pub lambda: [f64; 3],
    /// Transition factors: `T e1 = mu[0] e2`, `T e2 = mu[1] e1`,
    /// `T e3 = mu[2] e3`.
    pub mu: [f64; 3],
}

impl TransitionSystem {
    pub fn new(lambda: [f64; 3], mu: [f64; 3]) -> Result<Self, TransitionError> {
        if !(0.0 < lambda[0] && lambda[0] < lambda[1] && lambda[1] < 1.0 && 1.0 < lambda[2]) {
            return Err(TransitionError::BadSigma(lambda));
        }
        if mu.iter().any(|m| *m == 0.0 || !m.is_finite()) {
            return Err(TransitionError::BadSwap(mu));
        }
        Ok(TransitionSystem { lambda, mu })
    }

    pub fn sigma(&self) -> Mat3 {
        Mat3::diag(self.lambda[0], self.lambda[1], self.lambda[2])
    }

    /// The swap matrix with the exact sparsity pattern of the transition.
    pub fn swap(&self) -> Mat3 {
        Mat3::from_rows(
            [0.0, self.mu[1], 0.0],
            [self.mu[0], 0.0, 0.0],
            [0.0, 0.0, self.mu[2]],
        )
    }

    pub fn det_sigma(&self) -> f64 {
        self.lambda[0] * self.lambda[1] * self.lambda[2]
    }

    pub fn det_swap(&self) -> f64 {
        -self.mu[0] * self.mu[1] * self.mu[2]
    }

    /// Predicted stable-block homothety factor `(m1 m2)^2 (l1 l2)^{3n}`.
    pub fn stable_factor(&self, n: u32) -> f64 {
        (self.mu[0] * self.mu[1]).powi(2) * (self.lambda[0] * self.lambda[1]).powi(3 * n as i32)
    }

    /// Predicted unstable eigenvalue `m3^4 l3^{6n}`.
    pub fn unstable_factor(&self, n: u32) -> f64 {
        self.mu[2].powi(4) * self.lambda[2].powi(6 * n as i32)
    }

    pub fn log_stable_factor(&self, n: u32) -> f64 {
        2.0 * (self.mu[0].abs().ln() + self.mu[1].abs().ln())
            + 3.0 * n as f64 * (self.lambda[0].ln() + self.lambda[1].ln())
    }

    pub fn log_unstable_factor(&self, n: u32) -> f64 {
        4.0 * self.mu[2].abs().ln() + 6.0 * n as f64 * self.lambda[2].ln()
    }
}

/// The eight-factor product, multiplied out exactly as written.
pub fn build_dn(ts: &TransitionSystem, n: u32) -> Mat3 {
    let s = |k: u32| {
        Mat3::diag(
            ts.lambda[0].powi(k as i32),
            ts.lambda[1].powi(k as i32),
            ts.lambda[2].powi(k as i32),
        )
    };
    let t = ts.swap();
    s(2 * n) * t * s(n) * t * s(n) * t * s(2 * n) * t
}

/// Sign and log-magnitude of the image of each basis vector under `D_n`.
///
/// Both factors are monomial, so `D_n e_j = sign_j * exp(log_j) * e_{target_j}`;
/// this evaluation never overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialAction {
    /// `target[j]` is the basis index that `e_j` is sent to.
    pub target: [usize; 3],
    pub sign: [f64; 3],
    pub log_magnitude: [f64; 3],
}

pub fn build_dn_log(ts: &TransitionSystem, n: u32) -> MonomialAction {
    let mut target = [0usize, 1, 2];
    let mut sign = [1.0f64; 3];
    let mut logm = [0.0f64; 3];
    let log_lambda = ts.lambda.map(f64::ln);
    let apply_sigma = |k: u32, target: &[usize; 3], logm: &mut [f64; 3]| {
        for j in 0..3 {
            logm[j] += k as f64 * log_lambda[target[j]];
        }
    };
    let apply_swap = |target: &mut [usize; 3], sign: &mut [f64; 3], logm: &mut [f64; 3]| {
        for j in 0..3 {
            let (next, factor) = match target[j] {
                0 => (1usize, ts.mu[0]),
                1 => (0usize, ts.mu[1]),
                _ => (2usize, ts.mu[2]),
            };
            target[j] = next;
            sign[j] *= factor.signum();
            logm[j] += factor.abs().ln();
        }
    };
    // rightmost factor first: T, sigma^2n, T, sigma^n, T, sigma^n, T, sigma^2n
    apply_swap(&mut target, &mut sign, &mut logm);
    apply_sigma(2 * n, &target, &mut logm);
    apply_swap(&mut target, &mut sign, &mut logm);
    apply_sigma(n, &target, &mut logm);
    apply_swap(&mut target, &mut sign, &mut logm);
    apply_sigma(n, &target, &mut logm);
    apply_swap(&mut target, &mut sign, &mut logm);
    apply_sigma(2 * n, &target, &mut logm);
    MonomialAction {
        target,
        sign,
        log_magnitude: logm,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> NamedCheck {
    NamedCheck {
        name: name.to_string(),
        pass,
        detail,
    }
}

/// Verdicts for the homothetic stable block of `D_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomothetyReport {
    pub n: u32,
    /// Stable homothety factor `(m1 m2)^2 (l1 l2)^{3n}`.
    pub r: f64,
    pub unstable_eigenvalue: f64,
    pub det: f64,
    /// Number of expanding directions once `n` clears the index threshold.
    pub index: usize,
    /// Smallest n at which `|r| < 1 < |unstable|`.
    pub index_threshold: Option<u32>,
    pub checks: Vec<NamedCheck>,
    pub all_pass: bool,
}

const REL_TOL: f64 = 1e-12;
const LOG_TOL: f64 = 1e-10;
/// Past this n the verification compares in log space.
const DIRECT_N_LIMIT: u32 = 20;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Verifies block invariance, the homothety factor, the unstable eigenvalue,
/// the index and the determinant identity of `D_n`.
///
/// For `n <= 20` the checks run on the floating-point product with relative
/// tolerance 1e-12; past that the product is evaluated in sign + log
/// magnitude and compared within 1e-10 in logs.
pub fn verify_homothety(ts: &TransitionSystem, n: u32) -> HomothetyReport {
    let mut checks = Vec::new();
    let direct = n <= DIRECT_N_LIMIT;

    let (r, unstable, det) = if direct {
        let d = build_dn(ts, n);
        // off-block entries are structural zeros of the monomial product
        let off_block_zero = [
            d.0[0][2], d.0[1][2], d.0[2][0], d.0[2][1], d.0[0][1], d.0[1][0],
        ]
        .iter()
        .all(|x| *x == 0.0);
        checks.push(check(
            "block_invariance",
            off_block_zero,
            "off-block and off-diagonal entries exactly zero".into(),
        ));

        let r_pred = ts.stable_factor(n);
        let stable_ok =
            rel_close(d.0[0][0], r_pred, REL_TOL) && rel_close(d.0[1][1], r_pred, REL_TOL);
        checks.push(check(
            "stable_homothety",
            stable_ok,
            format!("diag block ({}, {}) vs r = {}", d.0[0][0], d.0[1][1], r_pred),
        ));

        let u_pred = ts.unstable_factor(n);
        checks.push(check(
            "unstable_eigenvalue",
            rel_close(d.0[2][2], u_pred, REL_TOL),
            format!("entry {} vs {}", d.0[2][2], u_pred),
        ));

        let det_pred = ts.det_sigma().powi(6 * n as i32) * ts.det_swap().powi(4);
        checks.push(check(
            "determinant_identity",
            rel_close(d.det(), det_pred, REL_TOL),
            format!("det {} vs {}", d.det(), det_pred),
        ));
        (d.0[0][0], d.0[2][2], d.det())
    } else {
        let action = build_dn_log(ts, n);
        let structure_ok = action.target == [0, 1, 2];
        checks.push(check(
            "block_invariance",
            structure_ok,
            "monomial action fixes every eigenline".into(),
        ));
        let stable_ok = (action.log_magnitude[0] - ts.log_stable_factor(n)).abs() <= LOG_TOL
            && (action.log_magnitude[1] - ts.log_stable_factor(n)).abs() <= LOG_TOL
            && action.sign[0] == action.sign[1];
        checks.push(check(
            "stable_homothety",
            stable_ok,
            format!(
                "log magnitudes ({}, {}) vs {}",
                action.log_magnitude[0],
                action.log_magnitude[1],
                ts.log_stable_factor(n)
            ),
        ));
        let unstable_ok =
            (action.log_magnitude[2] - ts.log_unstable_factor(n)).abs() <= LOG_TOL;
        checks.push(check(
            "unstable_eigenvalue",
            unstable_ok,
            format!(
                "log magnitude {} vs {}",
                action.log_magnitude[2],
                ts.log_unstable_factor(n)
            ),
        ));
        let log_det: f64 = action.log_magnitude.iter().sum();
        let log_det_pred =
            6.0 * n as f64 * ts.det_sigma().ln() + 4.0 * ts.det_swap().abs().ln();
        checks.push(check(
            "determinant_identity",
            (log_det - log_det_pred).abs() <= LOG_TOL,
            format!("log det {} vs {}", log_det, log_det_pred),
        ));
        let sign_all: f64 = action.sign.iter().product();
        let r = action.sign[0] * action.log_magnitude[0].exp();
        let u = action.sign[2] * action.log_magnitude[2].exp();
        (r, u, sign_all * log_det.exp())
    };

    // index threshold: smallest n with |r| < 1 < |unstable|
    let index_threshold = (0..=512u32).find(|&k| {
        ts.log_stable_factor(k) < 0.0 && ts.log_unstable_factor(k) > 0.0
    });
    let index = if r.abs() < 1.0 && unstable.abs() > 1.0 {
        1
    } else {
        [r, r, unstable].iter().filter(|x| x.abs() > 1.0).count()
    };
    if let Some(n0) = index_threshold {
        if n >= n0 {
            checks.push(check(
                "index_one_past_threshold",
                index == 1,
                format!("index {index} at n = {n} >= threshold {n0}"),
            ));
        }
    }

    let all_pass = checks.iter().all(|c| c.pass);
    HomothetyReport {
        n,
        r,
        unstable_eigenvalue: unstable,
        det,
        index,
        index_threshold,
        checks,
        all_pass,
    }
}

/// Contrast between `D_n` and the natural square candidates.
///
/// The square `(sigma^n T)^2` also has a homothetic stable block, but it is
/// a perfect square; `D_n` is checked entrywise against `(sigma^n T)^2` and
/// `(sigma^{2n} T)^2` to witness that it does not collapse to either.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonPowerReport {
    pub n: u32,
    /// Stable factor of `(sigma^n T)^2`, predicted `(m1 m2)(l1 l2)^n`.
    pub square_stable_factor: f64,
    pub square_is_homothetic: bool,
    pub equals_candidate_short: bool,
    pub equals_candidate_long: bool,
    /// Smallest entrywise separation from the two candidates.
    pub min_separation: f64,
    /// Degenerate coincidences (n = 0 with unit factors) are flagged, not
    /// errors.
    pub degenerate_equality: bool,
}

pub fn non_power_witness(ts: &TransitionSystem, n: u32) -> NonPowerReport {
    let d = build_dn(ts, n);
    let sn = Mat3::diag(
        ts.lambda[0].powi(n as i32),
        ts.lambda[1].powi(n as i32),
        ts.lambda[2].powi(n as i32),
    );
    let s2n = Mat3::diag(
        ts.lambda[0].powi(2 * n as i32),
        ts.lambda[1].powi(2 * n as i32),
        ts.lambda[2].powi(2 * n as i32),
    );
    let t = ts.swap();
    let short = (sn * t) * (sn * t);
    let long = (s2n * t) * (s2n * t);

    let sq_pred = (ts.mu[0] * ts.mu[1]) * (ts.lambda[0] * ts.lambda[1]).powi(n as i32);
    let square_is_homothetic = rel_close(short.0[0][0], sq_pred, REL_TOL)
        && rel_close(short.0[1][1], sq_pred, REL_TOL)
        && short.0[0][1] == 0.0
        && short.0[1][0] == 0.0;

    let max_diff = |a: Mat3, b: Mat3| (a - b).max_abs_entry();
    let diff_short = max_diff(d, short);
    let diff_long = max_diff(d, long);
    let equals_candidate_short = diff_short == 0.0;
    let equals_candidate_long = diff_long == 0.0;

    NonPowerReport {
        n,
        square_stable_factor: short.0[0][0],
        square_is_homothetic,
        equals_candidate_short,
        equals_candidate_long,
        min_separation: diff_short.min(diff_long),
        degenerate_equality: equals_candidate_short || equals_candidate_long,
    }
}
