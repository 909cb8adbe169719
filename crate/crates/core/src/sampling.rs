//! Seeded random instance generators for the verification suites.
//!
//! Everything here is deterministic given the seed, so the randomized
//! acceptance checks and the CLI's `--seed` flag reproduce bit-identical
//! runs.

use crate::cocycle::{Cocycle2, Cocycle3, LineBundle};
use crate::matrix::{Mat2, Mat3, Vec3};
use crate::paths::{alpha_threshold, ROTATION_LIPSCHITZ};
use crate::rational::{Rat, RatMat3};
use crate::transitions::TransitionSystem;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_invertible_mat2(rng: &mut ChaCha8Rng) -> Mat2 {
    loop {
        let m = Mat2::new(
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
        );
        if m.det().abs() >= 0.2 {
            return m;
        }
    }
}

pub fn random_invertible_mat3(rng: &mut ChaCha8Rng) -> Mat3 {
    loop {
        let mut rows = [[0.0; 3]; 3];
        for row in rows.iter_mut() {
            for x in row.iter_mut() {
                *x = rng.random_range(-2.0..2.0);
            }
        }
        let m = Mat3(rows);
        if m.det().abs() >= 0.1 {
            return m;
        }
    }
}

fn random_unit3(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.2 {
            return v.scale(1.0 / n);
        }
    }
}

/// A well-conditioned random basis (unit columns, determinant bounded away
/// from zero).
fn random_basis3(rng: &mut ChaCha8Rng) -> Mat3 {
    loop {
        let cols = [random_unit3(rng), random_unit3(rng), random_unit3(rng)];
        let m = Mat3::from_rows(
            [cols[0].x(), cols[1].x(), cols[2].x()],
            [cols[0].y(), cols[1].y(), cols[2].y()],
            [cols[0].z(), cols[1].z(), cols[2].z()],
        );
        if m.det().abs() >= 0.35 {
            return m;
        }
    }
}

/// A diagonalizable 3-dimensional cocycle with its three invariant line
/// bundles (the columns of the per-point eigenbases).
pub struct Diagonalizable3 {
    pub cocycle: Cocycle3,
    pub bundles: [LineBundle; 3],
}

/// Builds `maps[i] = V_{i+1} D_i V_i^{-1}` from random eigenbases and
/// positive per-step factors. With `gapped` the factor ranges are separated
/// so every domination test resolves quickly; without it the first two
/// ranges overlap and non-dominated instances appear.
pub fn random_diagonalizable_cocycle3(
    rng: &mut ChaCha8Rng,
    period: usize,
    gapped: bool,
) -> Diagonalizable3 {
    let bases: Vec<Mat3> = (0..period).map(|_| random_basis3(rng)).collect();
    let mut maps = Vec::with_capacity(period);
    for i in 0..period {
        let d = if gapped {
            Mat3::diag(
                rng.random_range(0.25..0.55),
                rng.random_range(0.85..1.15),
                rng.random_range(1.6..3.0),
            )
        } else {
            Mat3::diag(
                rng.random_range(0.4..1.1),
                rng.random_range(0.4..1.1),
                rng.random_range(0.9..2.0),
            )
        };
        let next = bases[(i + 1) % period];
        maps.push(next * d * bases[i].inverse().unwrap());
    }
    let bundle = |k: usize| {
        LineBundle::new(bases.iter().map(|b| b.col(k).normalized()).collect()).unwrap()
    };
    Diagonalizable3 {
        cocycle: Cocycle3::new(maps).unwrap(),
        bundles: [bundle(0), bundle(1), bundle(2)],
    }
}

/// A cocycle admissible for the rotation-path construction, together with
/// the perturbation budget that makes its eigenspace angle subcritical.
pub struct SmallAngleInstance {
    pub cocycle: Cocycle2,
    pub base_index: usize,
    pub eps: f64,
}

/// Random small-angle instances.
///
/// The return map at the base point is `[[l1, mu], [0, l2]]` with
/// `0 < l1 < l2 < 1` and `mu` sized so the eigenline angle is `angle0`;
/// `eps` is chosen so the admissible rotation amplitude lands strictly
/// between `angle0` and the trace-positivity angle `beta`, the regime in
/// which the full path contract holds. `mu` is kept moderate so the sampled
/// determinant drift stays well inside the 1e-12 verification tolerance.
pub fn random_small_angle_instance(rng: &mut ChaCha8Rng) -> SmallAngleInstance {
    let period = rng.random_range(1..=4usize);
    let l1: f64 = rng.random_range(0.3..0.75);
    let gap: f64 = rng.random_range(0.01..0.3);
    let l2 = l1 * (1.0 + gap);
    let angle0: f64 = rng.random_range(((l2 - l1) / 30.0).max(1e-4)..0.02);
    let mu_abs = (l2 - l1) / angle0.tan();
    let mu = if rng.random_bool(0.5) { mu_abs } else { -mu_abs };
    let target = Mat2::new(l1, mu, 0.0, l2);

    let mut maps: Vec<Mat2> = Vec::with_capacity(period);
    let mut acc = Mat2::identity();
    for _ in 0..period.saturating_sub(1) {
        let f = random_invertible_mat2(rng);
        maps.push(f);
        acc = f * acc;
    }
    maps.push(target * acc.inverse().unwrap());

    // hide the triangular frame behind per-point rotations (cyclically
    // consistent, so the return map is an orthogonal conjugate of `target`)
    let rotations: Vec<Mat2> = (0..period)
        .map(|_| Mat2::rotation(rng.random_range(-3.0..3.0)))
        .collect();
    let conjugated: Vec<Mat2> = (0..period)
        .map(|i| {
            let before = rotations[i];
            let after = rotations[(i + 1) % period];
            after * maps[i] * before.transpose()
        })
        .collect();
    let cocycle = Cocycle2::new(conjugated).unwrap();

    let k = cocycle.bound_constant();
    let alpha_target = 1.5 * angle0;
    let eps = alpha_target * ROTATION_LIPSCHITZ * k;
    debug_assert!(alpha_threshold(k, eps) > angle0);
    SmallAngleInstance {
        cocycle,
        base_index: 0,
        eps,
    }
}

pub fn random_transition_system(rng: &mut ChaCha8Rng) -> TransitionSystem {
    let l1 = rng.random_range(0.2..0.6);
    let l2 = rng.random_range(l1 + 0.05..0.95);
    let l3 = rng.random_range(1.1..3.0);
    let mut mu = [0.0f64; 3];
    for m in mu.iter_mut() {
        let magnitude = rng.random_range(1.0..2.0);
        *m = if rng.random_bool(0.5) {
            magnitude
        } else {
            -magnitude
        };
    }
    TransitionSystem::new([l1, l2, l3], mu).unwrap()
}

/// Paired float / exact-rational input for the reduction stages.
pub struct ReductionInstance {
    pub dfn: Mat3,
    pub dfn_exact: RatMat3,
    pub local: [f64; 3],
    pub local_exact: [Rat; 3],
    pub steps: u32,
}

const LOCAL_PRESETS: [[(i128, i128); 3]; 3] = [
    [(4, 5), (7, 10), (2, 1)],
    [(3, 4), (1, 2), (3, 1)],
    [(9, 10), (3, 5), (5, 2)],
];

fn random_rat(rng: &mut ChaCha8Rng) -> Rat {
    let num = loop {
        let n = rng.random_range(-8i128..=8);
        if n != 0 {
            break n;
        }
    };
    let den = rng.random_range(1i128..=4);
    Rat::new(num, den)
}

fn pick_local(rng: &mut ChaCha8Rng) -> ([f64; 3], [Rat; 3]) {
    let preset = LOCAL_PRESETS[rng.random_range(0..LOCAL_PRESETS.len())];
    let exact = preset.map(|(n, d)| Rat::new(n, d));
    (exact.map(Rat::to_f64), exact)
}

/// Random input for stage 1: all entries non-zero rationals except the
/// zero corner.
pub fn random_stage1_instance(rng: &mut ChaCha8Rng) -> ReductionInstance {
    let (local, local_exact) = pick_local(rng);
    let mut exact = RatMat3::zero();
    for i in 0..3 {
        for j in 0..3 {
            if (i, j) != (2, 2) {
                exact.0[i][j] = random_rat(rng);
            }
        }
    }
    ReductionInstance {
        dfn: Mat3(exact.to_f64()),
        dfn_exact: exact,
        local,
        local_exact,
        steps: rng.random_range(1..=6),
    }
}

/// Random input for stage 2: sparsity `[[0, b, e], [0, c, 0], [a, d, 0]]`.
pub fn random_stage2_instance(rng: &mut ChaCha8Rng) -> ReductionInstance {
    let (local, local_exact) = pick_local(rng);
    let mut exact = RatMat3::zero();
    for (i, j) in [(0, 1), (0, 2), (1, 1), (2, 0), (2, 1)] {
        exact.0[i][j] = random_rat(rng);
    }
    ReductionInstance {
        dfn: Mat3(exact.to_f64()),
        dfn_exact: exact,
        local,
        local_exact,
        steps: rng.random_range(1..=6),
    }
}
