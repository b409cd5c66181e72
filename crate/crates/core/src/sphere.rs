//! Riemannian geometry of the unit Hilbert sphere of SRVFs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
pub use crate::srvf::Srvf;
use crate::srvf::check_field_compatible;

/// Small-angle threshold below which exp/log/interpolation take their
/// degenerate branches.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Distance from pi (radians) at which a pair counts as antipodal.
pub const ANTIPODAL_TOLERANCE: f64 = 1e-7;

/// Sphere-membership tolerance on `|q|^2 - 1` for inputs to the geometry.
const UNIT_TOLERANCE: f64 = 1e-6;

/// Tangent-plane tolerance on `<v, p>`.
const TANGENT_TOLERANCE: f64 = 1e-6;

pub const KARCHER_TOL: f64 = 1e-8;
pub const KARCHER_MAX_ITER: usize = 100;

/// An element of the tangent space at `basepoint`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    samples: DMatrix<f64>,
    basepoint: Srvf,
}

impl TangentVector {
    /// Checks `<v, p> = 0` within `1e-6`.
    pub fn new(samples: DMatrix<f64>, basepoint: &Srvf) -> Result<Self> {
        check_field_compatible(
            samples.shape(),
            basepoint.dt(),
            basepoint.samples().shape(),
            basepoint.dt(),
        )?;
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tangent vector has non-finite samples"));
        }
        let v = Self {
            samples,
            basepoint: basepoint.clone(),
        };
        let ip = basepoint.dt() * v.samples.dot(basepoint.samples());
        if ip.abs() > TANGENT_TOLERANCE * v.norm().max(1.0) {
            return Err(Error::invalid(format!(
                "vector is not tangent at its basepoint: <v, p> = {ip:e}"
            )));
        }
        Ok(v)
    }

    /// Projects arbitrary samples onto the tangent plane at `basepoint`.
    pub fn project(samples: DMatrix<f64>, basepoint: &Srvf) -> Result<Self> {
        check_field_compatible(
            samples.shape(),
            basepoint.dt(),
            basepoint.samples().shape(),
            basepoint.dt(),
        )?;
        let p = basepoint.samples();
        let coef = basepoint.dt() * samples.dot(p) / basepoint.norm_sq();
        Ok(Self::raw(samples - p * coef, basepoint))
    }

    pub fn zero(basepoint: &Srvf) -> Self {
        let (m, n) = basepoint.samples().shape();
        Self::raw(DMatrix::zeros(m, n), basepoint)
    }

    fn raw(samples: DMatrix<f64>, basepoint: &Srvf) -> Self {
        Self {
            samples,
            basepoint: basepoint.clone(),
        }
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn basepoint(&self) -> &Srvf {
        &self.basepoint
    }

    pub fn dt(&self) -> f64 {
        self.basepoint.dt()
    }

    pub fn norm(&self) -> f64 {
        (self.dt() * self.samples.norm_squared()).sqrt()
    }

    pub fn inner(&self, other: &TangentVector) -> Result<f64> {
        self.check_same_space(other)?;
        Ok(self.dt() * self.samples.dot(&other.samples))
    }

    pub fn scale(&self, s: f64) -> TangentVector {
        Self::raw(&self.samples * s, &self.basepoint)
    }

    /// `a * self + b * other`, both in the same tangent space.
    pub fn combine(&self, a: f64, other: &TangentVector, b: f64) -> Result<TangentVector> {
        self.check_same_space(other)?;
        Ok(Self::raw(
            &self.samples * a + &other.samples * b,
            &self.basepoint,
        ))
    }

    pub fn max_abs_diff(&self, other: &TangentVector) -> f64 {
        self.samples
            .iter()
            .zip(other.samples.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Sum of absolute sample differences.
    pub fn l1_distance(&self, other: &TangentVector) -> Result<f64> {
        self.check_same_space(other)?;
        Ok(self
            .samples
            .iter()
            .zip(other.samples.iter())
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    fn check_same_space(&self, other: &TangentVector) -> Result<()> {
        if self.basepoint != other.basepoint {
            return Err(Error::shape("tangent vectors live at different basepoints"));
        }
        Ok(())
    }
}

/// A reference point for tangent-space computations plus the small-angle
/// threshold used by the maps.
#[derive(Clone, Debug)]
pub struct SphereConfig {
    pub reference_point: Srvf,
    pub numeric_epsilon: f64,
}

impl SphereConfig {
    pub fn new(reference_point: Srvf) -> Result<Self> {
        require_unit(&reference_point)?;
        Ok(Self {
            reference_point,
            numeric_epsilon: DEFAULT_EPSILON,
        })
    }

    pub fn log(&self, q: &Srvf) -> Result<TangentVector> {
        log_map_eps(&self.reference_point, q, self.numeric_epsilon)
    }

    pub fn exp(&self, v: &TangentVector) -> Result<Srvf> {
        if v.basepoint() != &self.reference_point {
            return Err(Error::shape("tangent vector is not based at the reference point"));
        }
        exp_map_eps(&self.reference_point, v, self.numeric_epsilon)
    }
}

fn require_unit(q: &Srvf) -> Result<()> {
    if !q.is_unit(UNIT_TOLERANCE) {
        return Err(Error::NotOnSphere {
            norm_sq: q.norm_sq(),
        });
    }
    Ok(())
}

/// Arc length between two unit SRVFs, `acos(<q1, q2>)`, in `[0, pi]`.
///
/// Evaluated as `atan2(|q2 - <q1,q2> q1|, <q1,q2>)`, which agrees with the
/// clamped arccos but keeps full precision near `0` and `pi`.
pub fn geodesic_distance(q1: &Srvf, q2: &Srvf) -> Result<f64> {
    angle(q1, q2)
}

fn angle(p: &Srvf, q: &Srvf) -> Result<f64> {
    let ip = q.inner(p)?;
    let perp = (q.samples() - p.samples() * ip).norm() * p.dt().sqrt();
    Ok(perp.atan2(ip))
}

pub fn exp_map(p: &Srvf, v: &TangentVector) -> Result<Srvf> {
    exp_map_eps(p, v, DEFAULT_EPSILON)
}

/// `cos(|v|) p + sin(|v|) v / |v|`; returns `p` when `|v| < eps`.
///
/// The result is renormalized so that rounding in `v`'s tangency does not
/// drift off the sphere.
pub fn exp_map_eps(p: &Srvf, v: &TangentVector, eps: f64) -> Result<Srvf> {
    check_field_compatible(
        p.samples().shape(),
        p.dt(),
        v.samples().shape(),
        v.dt(),
    )?;
    let n = v.norm();
    if n < eps {
        return Ok(p.clone());
    }
    let out = p.samples() * n.cos() + v.samples() * (n.sin() / n);
    let norm = (p.dt() * out.norm_squared()).sqrt();
    Ok(p.like(out / norm, p.length()))
}

pub fn log_map(p: &Srvf, q: &Srvf) -> Result<TangentVector> {
    log_map_eps(p, q, DEFAULT_EPSILON)
}

/// `(theta / sin theta) (q - cos(theta) p)`; zero when `theta < eps`.
pub fn log_map_eps(p: &Srvf, q: &Srvf, eps: f64) -> Result<TangentVector> {
    let theta = angle(p, q)?;
    if theta < eps {
        return Ok(TangentVector::zero(p));
    }
    if std::f64::consts::PI - theta < ANTIPODAL_TOLERANCE.max(eps) {
        return Err(Error::Antipodal { theta });
    }
    let samples = (q.samples() - p.samples() * theta.cos()) * (theta / theta.sin());
    Ok(TangentVector::raw(samples, p))
}

pub fn geodesic_interpolate(q1: &Srvf, q2: &Srvf, tau: f64) -> Result<Srvf> {
    geodesic_interpolate_eps(q1, q2, tau, DEFAULT_EPSILON)
}

/// Point at fraction `tau` along the great circle from `q1` to `q2`:
/// `[sin((1 - tau) theta) q1 + sin(tau theta) q2] / sin theta`.
///
/// The attached curve length is interpolated linearly between the
/// endpoints' lengths.
pub fn geodesic_interpolate_eps(q1: &Srvf, q2: &Srvf, tau: f64, eps: f64) -> Result<Srvf> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("tau must lie in [0, 1], got {tau}")));
    }
    let theta = angle(q1, q2)?;
    let length = (1.0 - tau) * q1.length() + tau * q2.length();
    if theta < eps {
        return Ok(q1.like(q1.samples().clone(), length));
    }
    if std::f64::consts::PI - theta < ANTIPODAL_TOLERANCE.max(eps) {
        return Err(Error::Antipodal { theta });
    }
    let s = theta.sin();
    let a = ((1.0 - tau) * theta).sin() / s;
    let b = (tau * theta).sin() / s;
    Ok(q1.like(q1.samples() * a + q2.samples() * b, length))
}

/// Intrinsic (Karcher) mean: `m <- exp_m(mean_i log_m(q_i))` until the mean
/// tangent has norm below `tol`.
///
/// Starts from the normalized extrinsic average. The attached length is the
/// arithmetic mean of the inputs' lengths.
pub fn karcher_mean(qs: &[Srvf], tol: f64, max_iter: usize) -> Result<Srvf> {
    let first = qs
        .first()
        .ok_or_else(|| Error::invalid("karcher mean of an empty set"))?;
    for q in qs {
        first.check_compatible(q)?;
        require_unit(q)?;
    }
    let n = qs.len() as f64;
    let length = qs.iter().map(Srvf::length).sum::<f64>() / n;

    let mut sum = DMatrix::zeros(first.samples().nrows(), first.samples().ncols());
    for q in qs {
        sum += q.samples();
    }
    let sum_norm = (first.dt() * sum.norm_squared()).sqrt();
    let mut mean = if sum_norm > 1e-8 {
        first.like(sum / sum_norm, length)
    } else {
        first.like(first.samples().clone(), length)
    };

    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut step = DMatrix::zeros(first.samples().nrows(), first.samples().ncols());
        for q in qs {
            step += log_map(&mean, q)?.samples();
        }
        step /= n;
        let v = TangentVector::raw(step, &mean);
        residual = v.norm();
        if residual < tol {
            return Ok(mean);
        }
        mean = exp_map(&mean, &v)?;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
        last: Box::new(mean),
    })
}
