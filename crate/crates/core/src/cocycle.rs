//! Periodic linear cocycles in dimensions 2 and 3, with the metric,
//! domination and quotient machinery used throughout the lab.
//!
//! A cocycle here is the restriction of a bundle map to one periodic orbit:
//! a cyclic list of invertible matrices, `maps[i]` carrying the fiber at
//! orbit point `i` to the fiber at point `i+1 (mod period)`.

use crate::matrix::{Mat2, Mat3, Vec2, Vec3};
use crate::spectrum::{spectrum2, spectrum3, SpectralData};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Determinant guard below which a map counts as non-invertible.
pub const DET_GUARD: f64 = 1e-300;

/// Angle tolerance for invariance of subspaces under the cocycle.
pub const INVARIANCE_TOL: f64 = 1e-9;

/// Strict margin added to the sup of the map norms, so the returned bound
/// satisfies the strict inequality defining boundedness.
pub const BOUND_MARGIN: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("cocycle must contain at least one map")]
    EmptyPeriod,
    #[error("map {index} is not invertible (|det| <= {DET_GUARD:e})")]
    NonInvertibleMap { index: usize },
    #[error("cocycles have different dimension or period")]
    ShapeMismatch,
    #[error("splitting has wrong number of points for this orbit")]
    SplittingLengthMismatch,
    #[error("splitting vector at point {point} is not a unit vector: |v| = {norm}")]
    NotUnit { point: usize, norm: f64 },
    #[error("splitting does not span the fiber at point {point} (det {det:e})")]
    NotSpanning { point: usize, det: f64 },
    #[error("splitting is not invariant at point {point} (residual {residual:e})")]
    NonInvariantSplitting { point: usize, residual: f64 },
    #[error("line bundle is not invariant at point {point} (residual {residual:e})")]
    NonInvariantLine { point: usize, residual: f64 },
    #[error("matrix has a complex or repeated spectrum where real distinct eigenvalues are required")]
    ComplexOrRepeatedSpectrum,
    #[error("line bundles are not pairwise transverse at point {point}")]
    NotTransverse { point: usize },
}

/// Square matrices a cocycle can be made of.
pub trait CocycleMatrix: Copy + PartialEq + Serialize + DeserializeOwned {
    const DIM: usize;
    fn identity() -> Self;
    fn compose(self, rhs: Self) -> Self;
    fn inverse(self) -> Option<Self>;
    fn det(self) -> f64;
    fn op_norm(self) -> f64;
    fn diff_norm(self, rhs: Self) -> f64;
    fn spectrum(&self) -> SpectralData;
}

impl CocycleMatrix for Mat2 {
    const DIM: usize = 2;
    fn identity() -> Self {
        Mat2::identity()
    }
    fn compose(self, rhs: Self) -> Self {
        self * rhs
    }
    fn inverse(self) -> Option<Self> {
        Mat2::inverse(self)
    }
    fn det(self) -> f64 {
        Mat2::det(self)
    }
    fn op_norm(self) -> f64 {
        Mat2::op_norm(self)
    }
    fn diff_norm(self, rhs: Self) -> f64 {
        (self - rhs).op_norm()
    }
    fn spectrum(&self) -> SpectralData {
        spectrum2(self)
    }
}

impl CocycleMatrix for Mat3 {
    const DIM: usize = 3;
    fn identity() -> Self {
        Mat3::identity()
    }
    fn compose(self, rhs: Self) -> Self {
        self * rhs
    }
    fn inverse(self) -> Option<Self> {
        Mat3::inverse(self)
    }
    fn det(self) -> f64 {
        Mat3::det(self)
    }
    fn op_norm(self) -> f64 {
        Mat3::op_norm(self)
    }
    fn diff_norm(self, rhs: Self) -> f64 {
        (self - rhs).op_norm()
    }
    fn spectrum(&self) -> SpectralData {
        spectrum3(self)
    }
}

#[derive(Serialize, Deserialize)]
struct CocycleRepr<M> {
    dim: usize,
    period: usize,
    maps: Vec<M>,
}

/// A periodic linear cocycle over a single orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "CocycleRepr<M>",
    into = "CocycleRepr<M>",
    bound = "M: CocycleMatrix"
)]
pub struct PeriodicCocycle<M: CocycleMatrix> {
    maps: Vec<M>,
}

pub type Cocycle2 = PeriodicCocycle<Mat2>;
pub type Cocycle3 = PeriodicCocycle<Mat3>;

impl<M: CocycleMatrix> TryFrom<CocycleRepr<M>> for PeriodicCocycle<M> {
    type Error = CocycleError;
    fn try_from(repr: CocycleRepr<M>) -> Result<Self, CocycleError> {
        if repr.dim != M::DIM || repr.period != repr.maps.len() {
            return Err(CocycleError::ShapeMismatch);
        }
        PeriodicCocycle::new(repr.maps)
    }
}

impl<M: CocycleMatrix> From<PeriodicCocycle<M>> for CocycleRepr<M> {
    fn from(c: PeriodicCocycle<M>) -> Self {
        CocycleRepr {
            dim: M::DIM,
            period: c.maps.len(),
            maps: c.maps,
        }
    }
}

impl<M: CocycleMatrix> PeriodicCocycle<M> {
    pub fn new(maps: Vec<M>) -> Result<Self, CocycleError> {
        if maps.is_empty() {
            return Err(CocycleError::EmptyPeriod);
        }
        for (index, m) in maps.iter().enumerate() {
            if m.det().abs() <= DET_GUARD {
                return Err(CocycleError::NonInvertibleMap { index });
            }
        }
        Ok(PeriodicCocycle { maps })
    }

    pub fn period(&self) -> usize {
        self.maps.len()
    }

    pub fn dim(&self) -> usize {
        M::DIM
    }

    pub fn map(&self, i: usize) -> M {
        self.maps[i % self.maps.len()]
    }

    pub fn maps(&self) -> &[M] {
        &self.maps
    }

    /// Product of `n` consecutive maps starting at orbit point `base`
    /// (indices taken cyclically).
    pub fn forward_product(&self, base: usize, n: u32) -> M {
        let per = self.maps.len();
        let mut acc = M::identity();
        for k in 0..n as usize {
            acc = self.maps[(base + k) % per].compose(acc);
        }
        acc
    }

    /// First return map at `base`: the composition once around the orbit.
    pub fn return_map(&self, base: usize) -> M {
        self.forward_product(base, self.maps.len() as u32)
    }

    /// Inverse of `forward_product(base, n)`, assembled from the per-map
    /// inverses so it stays finite even when the forward product is huge.
    pub fn backward_product(&self, base: usize, n: u32) -> M {
        let per = self.maps.len();
        let mut acc = M::identity();
        for k in 0..n as usize {
            let inv = self.maps[(base + k) % per]
                .inverse()
                .expect("invertible by construction");
            acc = acc.compose(inv);
        }
        acc
    }

    /// Smallest strict bound on the map norms and their inverses.
    pub fn bound_constant(&self) -> f64 {
        let sup = self
            .maps
            .iter()
            .map(|m| m.op_norm().max(m.inverse().expect("invertible by construction").op_norm()))
            .fold(0.0f64, f64::max);
        sup + BOUND_MARGIN
    }

    /// Sup distance between two cocycles over the same orbit: the larger of
    /// the map differences and the inverse-map differences, in operator norm.
    pub fn distance(&self, other: &Self) -> Result<f64, CocycleError> {
        if self.maps.len() != other.maps.len() {
            return Err(CocycleError::ShapeMismatch);
        }
        let mut d = 0.0f64;
        for (a, b) in self.maps.iter().zip(&other.maps) {
            d = d.max(a.diff_norm(*b));
            let (ia, ib) = (a.inverse().unwrap(), b.inverse().unwrap());
            d = d.max(ia.diff_norm(ib));
        }
        Ok(d)
    }

    /// Spectrum of the first return map at `base`.
    pub fn spectrum_at(&self, base: usize) -> SpectralData {
        self.return_map(base).spectrum()
    }
}

fn check_unit<const N: usize>(norm: f64, point: usize) -> Result<(), CocycleError> {
    if (norm - 1.0).abs() > 1e-12 {
        return Err(CocycleError::NotUnit { point, norm });
    }
    Ok(())
}

/// A proposed splitting F + G of a two-dimensional cocycle, one unit
/// direction for each summand at every orbit point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splitting2 {
    pub f: Vec<Vec2>,
    pub g: Vec<Vec2>,
}

impl Splitting2 {
    pub fn new(f: Vec<Vec2>, g: Vec<Vec2>) -> Result<Self, CocycleError> {
        if f.len() != g.len() || f.is_empty() {
            return Err(CocycleError::SplittingLengthMismatch);
        }
        for (point, (vf, vg)) in f.iter().zip(&g).enumerate() {
            check_unit::<2>(vf.norm(), point)?;
            check_unit::<2>(vg.norm(), point)?;
            let det = vf.cross(*vg);
            if det.abs() < 1e-12 {
                return Err(CocycleError::NotSpanning { point, det });
            }
        }
        Ok(Splitting2 { f, g })
    }

    /// Eigensplitting of a period-`period` diagonal cocycle: F along e1,
    /// G along e2 at every point.
    pub fn coordinate(period: usize) -> Self {
        Splitting2 {
            f: vec![Vec2::new(1.0, 0.0); period],
            g: vec![Vec2::new(0.0, 1.0); period],
        }
    }
}

/// A splitting of a three-dimensional cocycle into a line F and a plane G
/// (the plane given by two spanning unit vectors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splitting3 {
    pub f: Vec<Vec3>,
    pub g: Vec<[Vec3; 2]>,
}

impl Splitting3 {
    pub fn new(f: Vec<Vec3>, g: Vec<[Vec3; 2]>) -> Result<Self, CocycleError> {
        if f.len() != g.len() || f.is_empty() {
            return Err(CocycleError::SplittingLengthMismatch);
        }
        for (point, (vf, vg)) in f.iter().zip(&g).enumerate() {
            check_unit::<3>(vf.norm(), point)?;
            check_unit::<3>(vg[0].norm(), point)?;
            check_unit::<3>(vg[1].norm(), point)?;
            let det = vf.dot(vg[0].cross(vg[1]));
            if det.abs() < 1e-12 {
                return Err(CocycleError::NotSpanning { point, det });
            }
        }
        Ok(Splitting3 { f, g })
    }
}

/// One invariant line per orbit point (unit directions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineBundle {
    pub dirs: Vec<Vec3>,
}

impl LineBundle {
    pub fn new(dirs: Vec<Vec3>) -> Result<Self, CocycleError> {
        for (point, v) in dirs.iter().enumerate() {
            check_unit::<3>(v.norm(), point)?;
        }
        Ok(LineBundle { dirs })
    }

    pub fn constant(dir: Vec3, period: usize) -> Self {
        LineBundle {
            dirs: vec![dir.normalized(); period],
        }
    }
}

/// Sine of the angle between the line of `u` and the line of `target`.
fn line_residual2(u: Vec2, target: Vec2) -> f64 {
    let u = u.normalized();
    u.cross(target).abs() / target.norm()
}

fn line_residual3(u: Vec3, target: Vec3) -> f64 {
    let u = u.normalized();
    u.cross(target).norm() / target.norm()
}

impl Cocycle2 {
    fn check_splitting_invariant(&self, s: &Splitting2) -> Result<(), CocycleError> {
        if s.f.len() != self.period() {
            return Err(CocycleError::SplittingLengthMismatch);
        }
        let per = self.period();
        for i in 0..per {
            let next = (i + 1) % per;
            for bundle in [&s.f, &s.g] {
                let image = self.map(i).apply(bundle[i]);
                let residual = line_residual2(image, bundle[next]);
                if residual > INVARIANCE_TOL {
                    return Err(CocycleError::NonInvariantSplitting { point: i, residual });
                }
            }
        }
        Ok(())
    }

    fn dominated_raw(&self, s: &Splitting2, n: u32) -> bool {
        let per = self.period();
        (0..per).all(|i| {
            let prod = self.forward_product(i, n);
            let inv = self.backward_product(i, n);
            let f_norm = prod.apply(s.f[i]).norm();
            let g_norm = inv.apply(s.g[(i + n as usize) % per]).norm();
            f_norm * g_norm < 0.5
        })
    }

    /// Tests the strict domination inequality
    /// `|A^n|_F| * |A^-n o f^n |_G| < 1/2` at every orbit point.
    pub fn check_n_dominated(&self, s: &Splitting2, n: u32) -> Result<bool, CocycleError> {
        self.check_splitting_invariant(s)?;
        Ok(self.dominated_raw(s, n))
    }

    /// Smallest `n <= n_max` at which the splitting is n-dominated.
    pub fn min_domination_time(
        &self,
        s: &Splitting2,
        n_max: u32,
    ) -> Result<Option<u32>, CocycleError> {
        self.check_splitting_invariant(s)?;
        Ok((1..=n_max).find(|&n| self.dominated_raw(s, n)))
    }
}

/// Largest singular value of `m` restricted to the span of two unit vectors.
fn plane_restriction_norm(m: Mat3, span: [Vec3; 2]) -> f64 {
    let u1 = span[0].normalized();
    let mut u2 = span[1] - u1.scale(span[1].dot(u1));
    u2 = u2.normalized();
    let a = m.apply(u1);
    let b = m.apply(u2);
    // top eigenvalue of the 2x2 Gram matrix of the restricted map
    let (g11, g12, g22) = (a.dot(a), a.dot(b), b.dot(b));
    let tr = g11 + g22;
    let disc = ((g11 - g22) * (g11 - g22) + 4.0 * g12 * g12).sqrt();
    ((tr + disc) / 2.0).max(0.0).sqrt()
}

impl Cocycle3 {
    fn check_splitting_invariant(&self, s: &Splitting3) -> Result<(), CocycleError> {
        if s.f.len() != self.period() {
            return Err(CocycleError::SplittingLengthMismatch);
        }
        let per = self.period();
        for i in 0..per {
            let next = (i + 1) % per;
            let image = self.map(i).apply(s.f[i]);
            let residual = line_residual3(image, s.f[next]);
            if residual > INVARIANCE_TOL {
                return Err(CocycleError::NonInvariantSplitting { point: i, residual });
            }
            // plane invariance: images must stay orthogonal to the next normal
            let normal = s.g[next][0].cross(s.g[next][1]).normalized();
            for v in s.g[i] {
                let image = self.map(i).apply(v).normalized();
                let residual = image.dot(normal).abs();
                if residual > INVARIANCE_TOL {
                    return Err(CocycleError::NonInvariantSplitting { point: i, residual });
                }
            }
        }
        Ok(())
    }

    fn dominated_raw(&self, s: &Splitting3, n: u32) -> bool {
        let per = self.period();
        (0..per).all(|i| {
            let prod = self.forward_product(i, n);
            let inv = self.backward_product(i, n);
            let f_norm = prod.apply(s.f[i]).norm();
            let g_norm = plane_restriction_norm(inv, s.g[(i + n as usize) % per]);
            f_norm * g_norm < 0.5
        })
    }

    pub fn check_n_dominated(&self, s: &Splitting3, n: u32) -> Result<bool, CocycleError> {
        self.check_splitting_invariant(s)?;
        Ok(self.dominated_raw(s, n))
    }

    pub fn min_domination_time(
        &self,
        s: &Splitting3,
        n_max: u32,
    ) -> Result<Option<u32>, CocycleError> {
        self.check_splitting_invariant(s)?;
        Ok((1..=n_max).find(|&n| self.dominated_raw(s, n)))
    }

    fn check_line_invariant(&self, bundle: &LineBundle) -> Result<(), CocycleError> {
        if bundle.dirs.len() != self.period() {
            return Err(CocycleError::SplittingLengthMismatch);
        }
        let per = self.period();
        for i in 0..per {
            let image = self.map(i).apply(bundle.dirs[i]);
            let residual = line_residual3(image, bundle.dirs[(i + 1) % per]);
            if residual > INVARIANCE_TOL {
                return Err(CocycleError::NonInvariantLine { point: i, residual });
            }
        }
        Ok(())
    }

    /// Signed factor by which the return map at `base` scales the invariant
    /// line.
    pub fn line_return_factor(&self, bundle: &LineBundle, base: usize) -> f64 {
        let v = bundle.dirs[base % self.period()];
        self.return_map(base).apply(v).dot(v) / v.dot(v)
    }

    /// Induced cocycle on the orthogonal complement of an invariant line
    /// (a concrete model of the quotient bundle E/F).
    pub fn quotient(&self, line: &LineBundle) -> Result<QuotientCocycle, CocycleError> {
        self.check_line_invariant(line)?;
        let per = self.period();
        let bases: Vec<(Vec3, Vec3)> = line
            .dirs
            .iter()
            .map(|v| {
                // complement basis: least-aligned coordinate axis, projected
                let k = (0..3).min_by(|&a, &b| {
                    v.0[a].abs().total_cmp(&v.0[b].abs())
                }).unwrap();
                let e = Vec3::basis(k);
                let u1 = (e - v.scale(e.dot(*v))).normalized();
                let u2 = v.cross(u1);
                (u1, u2)
            })
            .collect();
        let mut maps = Vec::with_capacity(per);
        for i in 0..per {
            let (u1, u2) = bases[i];
            let (w1, w2) = bases[(i + 1) % per];
            let a1 = self.map(i).apply(u1);
            let a2 = self.map(i).apply(u2);
            maps.push(Mat2::new(
                w1.dot(a1),
                w1.dot(a2),
                w2.dot(a1),
                w2.dot(a2),
            ));
        }
        Ok(QuotientCocycle {
            cocycle: Cocycle2::new(maps)?,
            bases,
        })
    }

    /// Checks the sub/quotient domination dichotomy for three invariant
    /// line bundles, up to horizon `n_max`.
    pub fn domination_dichotomy(
        &self,
        e1: &LineBundle,
        e2: &LineBundle,
        e3: &LineBundle,
        n_max: u32,
    ) -> Result<DichotomyReport, CocycleError> {
        for bundle in [e1, e2, e3] {
            self.check_line_invariant(bundle)?;
        }
        let per = self.period();
        for i in 0..per {
            let det = e1.dirs[i].dot(e2.dirs[i].cross(e3.dirs[i]));
            if det.abs() < 1e-9 {
                return Err(CocycleError::NotTransverse { point: i });
            }
        }

        // (i) E1 dominated by E2 + E3
        let full = Splitting3::new(
            e1.dirs.clone(),
            e2.dirs.iter().zip(&e3.dirs).map(|(a, b)| [*a, *b]).collect(),
        )?;
        let full_dominated = self.min_domination_time(&full, n_max)?;

        // (ii) E1 dominated by E2 inside the subbundle E1 + E2
        let sub_dominated = (1..=n_max).find(|&n| {
            (0..per).all(|i| {
                let prod = self.forward_product(i, n);
                let inv = self.backward_product(i, n);
                let f_norm = prod.apply(e1.dirs[i]).norm();
                let g_norm = inv.apply(e2.dirs[(i + n as usize) % per]).norm();
                f_norm * g_norm < 0.5
            })
        });

        // (iii) E1/E2 dominated by E3/E2 in the quotient by E2
        let q = self.quotient(e2)?;
        let proj_line = |bundle: &LineBundle| -> Result<Vec<Vec2>, CocycleError> {
            bundle
                .dirs
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let p = q.project(i, *v);
                    if p.norm() < 1e-9 {
                        return Err(CocycleError::NotTransverse { point: i });
                    }
                    Ok(p.normalized())
                })
                .collect()
        };
        let qf = proj_line(e1)?;
        let qg = proj_line(e3)?;
        let quotient_splitting = Splitting2::new(qf, qg)?;
        let quotient_dominated = q.cocycle.min_domination_time(&quotient_splitting, n_max)?;

        let implication_holds = full_dominated.is_some()
            || sub_dominated.is_none()
            || quotient_dominated.is_none();
        Ok(DichotomyReport {
            full_dominated,
            sub_dominated,
            quotient_dominated,
            implication_holds,
        })
    }
}

/// Quotient of a 3-dimensional cocycle by an invariant line, realized on the
/// orthogonal complement with a stored orthonormal basis per point.
#[derive(Debug, Clone)]
pub struct QuotientCocycle {
    pub cocycle: Cocycle2,
    bases: Vec<(Vec3, Vec3)>,
}

impl QuotientCocycle {
    /// Coordinates of the orthogonal projection of `v` in the complement
    /// basis at orbit point `i`.
    pub fn project(&self, i: usize, v: Vec3) -> Vec2 {
        let (u1, u2) = self.bases[i % self.bases.len()];
        Vec2::new(u1.dot(v), u2.dot(v))
    }
}

/// Outcome of the three domination tests of the dichotomy, with the smallest
/// witnessing `n` where one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub full_dominated: Option<u32>,
    pub sub_dominated: Option<u32>,
    pub quotient_dominated: Option<u32>,
    pub implication_holds: bool,
}

/// Angle in (0, pi/2] between the two eigenlines of a 2x2 matrix with real
/// distinct eigenvalues.
pub fn eigenspace_angle(m: &Mat2) -> Result<f64, CocycleError> {
    let s = spectrum2(m);
    if s.has_complex_pair() {
        return Err(CocycleError::ComplexOrRepeatedSpectrum);
    }
    let (l1, l2) = (s.eigenvalues[0].re, s.eigenvalues[1].re);
    let scale = l1.abs().max(l2.abs()).max(1e-300);
    if (l2 - l1).abs() <= 1e-12 * scale {
        return Err(CocycleError::ComplexOrRepeatedSpectrum);
    }
    let v1 = eigenvector2(m, l1);
    let v2 = eigenvector2(m, l2);
    Ok(v1.cross(v2).abs().atan2(v1.dot(v2).abs()))
}

/// Unit eigenvector of a 2x2 matrix for a real simple eigenvalue.
pub fn eigenvector2(m: &Mat2, lambda: f64) -> Vec2 {
    let shifted = Mat2::new(
        m.0[0][0] - lambda,
        m.0[0][1],
        m.0[1][0],
        m.0[1][1] - lambda,
    );
    // kernel direction: orthogonal to the larger row
    let r0 = shifted.row(0);
    let r1 = shifted.row(1);
    let row = if r0.norm() >= r1.norm() { r0 } else { r1 };
    Vec2::new(-row.0[1], row.0[0]).normalized()
}
