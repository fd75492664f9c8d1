//! Geodesics, Jacobi fields, conjugate and focal points, distances.
//!
//! Geodesics are integrated in the ambient embedding: the acceleration of a
//! unit-speed geodesic is `II(v, v) n`. Every RK4 step is followed by a
//! projection of the position to the surface and of the velocity to the
//! tangent plane. Geodesics with vanishing Clairaut constant are meridians
//! and are evaluated in closed form, including the transit through a pole.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::{PoleFlag, SurfacePoint, Vec3, WarpProfile};
use crate::pathspace::{self, Boundary, DiscreteCurve};

/// Largest RK4 step for unit-curvature metrics.
pub const BASE_STEP: f64 = 5e-3;
/// Upper bound on the spacing of stored samples.
pub const H_MAX: f64 = 1e-2;
/// Conjugate-point tolerance defining nullity.
pub const TOL_CONJ: f64 = 1e-6;
/// Endpoint change allowed between step `h` and `h/2`.
pub const STEP_HALVING_TOL: f64 = 1e-8;
/// Number of initial polylines tried by [`distance`].
pub const DISTANCE_STARTS: usize = 8;

const MAX_HALVINGS: usize = 6;
const ZERO_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct GeodesicSample {
    pub s: f64,
    pub point: SurfacePoint,
    pub velocity: Vec3,
}

/// An integrated unit-speed geodesic with cached curvature along it.
#[derive(Clone, Debug)]
pub struct GeodesicPath {
    pub start: SurfacePoint,
    pub direction: Vec3,
    pub length: f64,
    pub samples: Vec<GeodesicSample>,
    /// `f(t)² dx/ds` at the start.
    pub clairaut: f64,
    step: f64,
    curvature: Vec<f64>,
    curvature_mid: Vec<f64>,
}

impl GeodesicPath {
    pub fn end(&self) -> &GeodesicSample {
        self.samples.last().expect("geodesic has samples")
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Gauss curvature at each sample.
    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    /// Largest deviation of the Clairaut quantity from its initial value.
    pub fn clairaut_drift(&self) -> f64 {
        self.samples
            .iter()
            .map(|smp| (clairaut_of(&smp.point, &smp.velocity) - self.clairaut).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_speed_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|smp| (smp.velocity.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.length);
        if self.samples.len() < 2 {
            return (0, 0.0);
        }
        let i = ((s / self.step).floor() as usize).min(self.samples.len() - 2);
        (i, s - self.samples[i].s)
    }

    /// Point at arclength `s` (cubic Hermite in the ambient space, projected).
    pub fn point_at(&self, profile: &WarpProfile, s: f64) -> SurfacePoint {
        let (i, ds) = self.locate(s);
        if self.samples.len() < 2 {
            return self.start;
        }
        let a = &self.samples[i];
        let b = &self.samples[i + 1];
        let h = b.s - a.s;
        if ds <= 0.0 {
            return a.point;
        }
        if ds >= h {
            return b.point;
        }
        let x = hermite(&a.point.ambient, &a.velocity, &b.point.ambient, &b.velocity, h, ds / h);
        profile.project(&x, Some(&a.point))
    }

    /// Unit velocity at arclength `s`.
    pub fn velocity_at(&self, profile: &WarpProfile, s: f64) -> Vec3 {
        let (i, ds) = self.locate(s);
        if self.samples.len() < 2 {
            return self.direction;
        }
        let a = &self.samples[i];
        let b = &self.samples[i + 1];
        let h = b.s - a.s;
        let w = (ds / h).clamp(0.0, 1.0);
        let v = a.velocity * (1.0 - w) + b.velocity * w;
        let p = self.point_at(profile, s);
        tangent_unit(profile, &p, &v)
    }

    /// Polyline of `n + 1` points uniform in arclength.
    pub fn to_curve(&self, profile: &WarpProfile, n: usize) -> DiscreteCurve {
        let n = n.max(1);
        let points = (0..=n)
            .map(|i| self.point_at(profile, self.length * i as f64 / n as f64))
            .collect();
        DiscreteCurve::from_points(points, Boundary::FixedEndpoints)
    }
}

fn hermite(p0: &Vec3, v0: &Vec3, p1: &Vec3, v1: &Vec3, h: f64, w: f64) -> Vec3 {
    let w2 = w * w;
    let w3 = w2 * w;
    p0 * (2.0 * w3 - 3.0 * w2 + 1.0)
        + v0 * (h * (w3 - 2.0 * w2 + w))
        + p1 * (-2.0 * w3 + 3.0 * w2)
        + v1 * (h * (w3 - w2))
}

/// `f² dx/ds`, which for the embedding equals the axial angular momentum.
pub fn clairaut_of(p: &SurfacePoint, v: &Vec3) -> f64 {
    p.ambient.x * v.y - p.ambient.y * v.x
}

fn tangent_unit(profile: &WarpProfile, p: &SurfacePoint, v: &Vec3) -> Vec3 {
    let n = profile.normal(p);
    let w = v - n * v.dot(&n);
    w / w.norm()
}

/// Unit tangent at `p` with angle `alpha` from the meridian direction
/// towards the azimuthal direction.
pub fn tangent_at(profile: &WarpProfile, p: &SurfacePoint, alpha: f64) -> Vec3 {
    let fr = profile.frame(p);
    fr.meridian * alpha.cos() + fr.azimuth * alpha.sin()
}

/// Default RK4 step for a profile.
pub fn default_step(profile: &WarpProfile) -> f64 {
    BASE_STEP / profile.max_curvature().max(1.0).sqrt().sqrt()
}

fn acceleration(profile: &WarpProfile, x: &Vec3, v: &Vec3, hint: &SurfacePoint) -> (Vec3, SurfacePoint) {
    let p = profile.project(x, Some(hint));
    let n = profile.normal(&p);
    (n * profile.second_fundamental(&p, v), p)
}

/// One projected RK4 step; returns the new state and the projected
/// half-step point.
fn rk4_step(profile: &WarpProfile, p: &SurfacePoint, v: &Vec3, h: f64) -> (SurfacePoint, Vec3) {
    let x = p.ambient;
    let (a1, _) = acceleration(profile, &x, v, p);
    let v2 = v + a1 * (0.5 * h);
    let (a2, hint) = acceleration(profile, &(x + v * (0.5 * h)), &v2, p);
    let v3 = v + a2 * (0.5 * h);
    let (a3, _) = acceleration(profile, &(x + v2 * (0.5 * h)), &v3, &hint);
    let v4 = v + a3 * h;
    let (a4, _) = acceleration(profile, &(x + v3 * h), &v4, &hint);
    let x_new = x + (v + v2 * 2.0 + v3 * 2.0 + v4) * (h / 6.0);
    let v_new = v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
    let q = profile.project(&x_new, Some(&hint));
    let speed = v.norm();
    let vt = tangent_unit(profile, &q, &v_new) * speed;
    (q, vt)
}

fn is_meridian(profile: &WarpProfile, p: &SurfacePoint, v: &Vec3) -> bool {
    if p.pole != PoleFlag::None {
        return true;
    }
    let fr = profile.frame(p);
    v.dot(&fr.azimuth).abs() < 1e-14
}

/// Closed-form meridian state at arclength `s`.
fn meridian_state(profile: &WarpProfile, p: &SurfacePoint, v: &Vec3, s: f64) -> (SurfacePoint, Vec3) {
    let len = profile.meridian_length();
    let (x0, sigma) = match p.pole {
        PoleFlag::North => (v.y.atan2(v.x), 1.0),
        PoleFlag::South => (v.y.atan2(v.x), -1.0),
        PoleFlag::None => {
            let fr = profile.frame(p);
            (p.x, fr.meridian.dot(v).signum())
        }
    };
    let tau = p.t + sigma * s;
    let m = (tau / len).floor();
    let (t, dir) = if (m as i64).rem_euclid(2) == 0 {
        (tau - m * len, 1.0)
    } else {
        ((m + 1.0) * len - tau, -1.0)
    };
    let x = x0 + m * PI;
    let q = profile.point(t, x);
    let vel = profile.frame(&q).meridian * (sigma * dir);
    (q, vel)
}

fn check_unit(profile: &WarpProfile, p: &SurfacePoint, v: &Vec3) -> Result<()> {
    if (v.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("initial direction has norm {} (must be unit)", v.norm())));
    }
    let vn = v.dot(&profile.normal(p));
    if vn.abs() > 1e-8 {
        return Err(Error::Domain(format!("initial direction is not tangent (normal component {vn:.3e})")));
    }
    Ok(())
}

/// Endpoint state after `length` with fixed step count.
fn integrate_end(profile: &WarpProfile, p: &SurfacePoint, v: &Vec3, length: f64, h: f64) -> (SurfacePoint, Vec3) {
    if is_meridian(profile, p, v) {
        return meridian_state(profile, p, v, length);
    }
    let n = (length / h).ceil().max(1.0) as usize;
    let h = length / n as f64;
    let (mut q, mut w) = (*p, *v);
    for _ in 0..n {
        (q, w) = rk4_step(profile, &q, &w, h);
    }
    (q, w)
}

/// Integrate the geodesic with initial point `p` and unit direction `v`.
pub fn shoot(profile: &WarpProfile, p: &SurfacePoint, v: &Vec3, length: f64) -> Result<GeodesicPath> {
    shoot_with_step(profile, p, v, length, None)
}

/// As [`shoot`], with an explicit RK4 step (skips the step-halving search).
pub fn shoot_with_step(
    profile: &WarpProfile,
    p: &SurfacePoint,
    v: &Vec3,
    length: f64,
    step: Option<f64>,
) -> Result<GeodesicPath> {
    check_unit(profile, p, v)?;
    if !(length >= 0.0 && length.is_finite()) {
        return Err(Error::Domain(format!("geodesic length {length} must be non-negative")));
    }
    let meridian = is_meridian(profile, p, v);
    let mut h = step.unwrap_or_else(|| default_step(profile)).min(H_MAX);
    if step.is_none() && !meridian && length > 0.0 {
        for _ in 0..MAX_HALVINGS {
            let (a, _) = integrate_end(profile, p, v, length, h);
            let (b, _) = integrate_end(profile, p, v, length, 0.5 * h);
            if (a.ambient - b.ambient).norm() < STEP_HALVING_TOL {
                break;
            }
            h *= 0.5;
        }
    }
    let n = if length > 0.0 { (length / h).ceil().max(1.0) as usize } else { 0 };
    let h = if n > 0 { length / n as f64 } else { h };

    let mut samples = Vec::with_capacity(n + 1);
    let mut curvature = Vec::with_capacity(n + 1);
    let mut curvature_mid = Vec::with_capacity(n);
    samples.push(GeodesicSample {
        s: 0.0,
        point: *p,
        velocity: *v,
    });
    curvature.push(profile.gauss_curvature(p.t));
    let (mut q, mut w) = (*p, *v);
    for i in 0..n {
        let s = (i + 1) as f64 * h;
        let (nq, nw) = if meridian {
            meridian_state(profile, p, v, s)
        } else {
            rk4_step(profile, &q, &w, h)
        };
        let mid = if meridian {
            meridian_state(profile, p, v, s - 0.5 * h).0
        } else {
            let xm = hermite(&q.ambient, &w, &nq.ambient, &nw, h, 0.5);
            profile.project(&xm, Some(&q))
        };
        curvature_mid.push(profile.gauss_curvature(mid.t));
        curvature.push(profile.gauss_curvature(nq.t));
        samples.push(GeodesicSample {
            s,
            point: nq,
            velocity: nw,
        });
        q = nq;
        w = nw;
    }
    Ok(GeodesicPath {
        start: *p,
        direction: *v,
        length,
        samples,
        clairaut: clairaut_of(p, v),
        step: h,
        curvature,
        curvature_mid,
    })
}

/// Exponential map `exp_p(w)`.
pub fn exp_point(profile: &WarpProfile, p: &SurfacePoint, w: &Vec3) -> SurfacePoint {
    exp_state(profile, p, w, default_step(profile)).0
}

/// `exp_p(w)` with the final velocity, using a fixed RK4 step.
pub fn exp_state(profile: &WarpProfile, p: &SurfacePoint, w: &Vec3, h: f64) -> (SurfacePoint, Vec3) {
    let len = w.norm();
    if len < 1e-15 {
        return (*p, Vec3::zeros());
    }
    integrate_end(profile, p, &(w / len), len, h)
}

/// Solution of the scalar Jacobi equation `y″ + K y = 0` along a geodesic.
#[derive(Clone, Debug)]
pub struct JacobiSolution {
    pub length: f64,
    pub initial: (f64, f64),
    /// `(s, y, y′)` at the geodesic samples.
    pub values: Vec<(f64, f64, f64)>,
    pub zeros: Vec<f64>,
}

impl JacobiSolution {
    /// Largest interior residual of `y″ + K y` by central differences.
    pub fn residual(&self, c: &GeodesicPath) -> f64 {
        let h = c.step;
        (1..self.values.len().saturating_sub(1))
            .map(|i| {
                let ypp = (self.values[i + 1].1 - 2.0 * self.values[i].1 + self.values[i - 1].1) / (h * h);
                (ypp + c.curvature[i] * self.values[i].1).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn end(&self) -> (f64, f64, f64) {
        *self.values.last().expect("non-empty")
    }
}

/// Integrate the normal Jacobi equation with RK4 on the cached curvature.
pub fn jacobi(c: &GeodesicPath, y0: f64, y0p: f64) -> Result<JacobiSolution> {
    if y0 == 0.0 && y0p == 0.0 {
        return Err(Error::Domain("Jacobi initial data (0, 0) is trivial".into()));
    }
    let h = c.step;
    let mut values = Vec::with_capacity(c.samples.len());
    let (mut y, mut yp) = (y0, y0p);
    values.push((0.0, y, yp));
    for i in 0..c.samples.len().saturating_sub(1) {
        let (k0, km, k1) = (c.curvature[i], c.curvature_mid[i], c.curvature[i + 1]);
        let (a1, b1) = (yp, -k0 * y);
        let (a2, b2) = (yp + 0.5 * h * b1, -km * (y + 0.5 * h * a1));
        let (a3, b3) = (yp + 0.5 * h * b2, -km * (y + 0.5 * h * a2));
        let (a4, b4) = (yp + h * b3, -k1 * (y + h * a3));
        y += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        yp += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        values.push((c.samples[i + 1].s, y, yp));
    }
    let mut zeros = Vec::new();
    for w in values.windows(2) {
        let (s0, ya, ma) = w[0];
        let (s1, yb, mb) = w[1];
        if yb == 0.0 {
            zeros.push(s1);
        } else if ya * yb < 0.0 {
            zeros.push(hermite_root(s0, ya, ma, s1, yb, mb));
        }
    }
    // A zero within TOL_CONJ past the end is reported at the end.
    if let Some(&(s_end, y_end, yp_end)) = values.last() {
        let near = yp_end != 0.0 && (y_end / yp_end).abs() <= TOL_CONJ && y_end * yp_end < 0.0;
        if s_end > 0.0 && near && zeros.last().is_none_or(|&z| s_end - z > TOL_CONJ) {
            zeros.push(s_end);
        }
    }
    Ok(JacobiSolution {
        length: c.length,
        initial: (y0, y0p),
        values,
        zeros,
    })
}

fn hermite_root(s0: f64, y0: f64, m0: f64, s1: f64, y1: f64, m1: f64) -> f64 {
    let h = s1 - s0;
    let eval = |w: f64| {
        let w2 = w * w;
        let w3 = w2 * w;
        y0 * (2.0 * w3 - 3.0 * w2 + 1.0) + m0 * h * (w3 - 2.0 * w2 + w) + y1 * (-2.0 * w3 + 3.0 * w2) + m1 * h * (w3 - w2)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let sign_lo = y0.signum();
    while (hi - lo) * h > ZERO_TOL * 1e-2 {
        let mid = 0.5 * (lo + hi);
        if eval(mid).signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    s0 + 0.5 * (lo + hi) * h
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct IndexReport {
    pub index: usize,
    pub nullity: usize,
    pub conjugate_points: Vec<f64>,
    pub focal_first: Option<f64>,
}

/// Morse index and nullity of a geodesic segment through its conjugate points.
pub fn index_report(c: &GeodesicPath) -> Result<IndexReport> {
    let sol = jacobi(c, 0.0, 1.0)?;
    let l = c.length;
    let conjugate_points: Vec<f64> = sol.zeros.iter().copied().filter(|&z| z > 0.0).collect();
    let index = conjugate_points.iter().filter(|&&z| z < l - TOL_CONJ).count();
    let (_, y_end, yp_end) = sol.end();
    let near_end = conjugate_points.iter().any(|&z| z >= l - TOL_CONJ)
        || (yp_end != 0.0 && (y_end / yp_end).abs() <= TOL_CONJ);
    let focal = jacobi(c, 1.0, 0.0)?;
    Ok(IndexReport {
        index,
        nullity: usize::from(near_end),
        conjugate_points,
        focal_first: focal.zeros.first().copied(),
    })
}

/// Minimum first focal distance over a fan of geodesics with varied start
/// latitude and direction.
pub fn focal_radius(profile: &WarpProfile, n_geodesics: usize) -> Result<f64> {
    if n_geodesics < 8 {
        return Err(Error::Domain(format!("focal fan needs at least 8 geodesics, got {n_geodesics}")));
    }
    let n_lat = (n_geodesics as f64).sqrt().ceil() as usize;
    let n_dir = n_geodesics.div_ceil(n_lat);
    let reach = FRAC_PI_2 / profile.min_curvature().sqrt() * 1.05 + 0.01;
    let starts: Vec<(f64, f64)> = (0..n_lat)
        .flat_map(|j| {
            let t = profile.meridian_length() * j as f64 / (n_lat - 1) as f64;
            (0..n_dir).map(move |k| (t, PI * k as f64 / n_dir as f64))
        })
        .collect();
    let firsts: Vec<Option<f64>> = starts
        .par_iter()
        .map(|&(t, alpha)| {
            let p = profile.point(t, 0.0);
            let v = tangent_at(profile, &p, alpha);
            let c = shoot(profile, &p, &v, reach).ok()?;
            jacobi(&c, 1.0, 0.0).ok()?.zeros.first().copied()
        })
        .collect();
    firsts
        .into_iter()
        .flatten()
        .reduce(f64::min)
        .ok_or_else(|| Error::InvariantViolation("no focal point found within the Sturm bound".into()))
}

/// Conservative lower bound for the injectivity radius:
/// `min(π/√K_max, ℓ/2)` with `ℓ` the shortest known closed geodesic
/// (equator or meridian circle).
pub fn injectivity_bound(profile: &WarpProfile) -> f64 {
    let conj = PI / profile.max_curvature().sqrt();
    let equator = 2.0 * PI * profile.r_value();
    let meridian = 2.0 * profile.meridian_length();
    conj.min(0.5 * equator.min(meridian))
}

/// Initial polylines for the multistart distance: two coordinate great-circle
/// arcs through a detour point, rotated around the `p`–`q` axis.
fn detour_starts(profile: &WarpProfile, p: &SurfacePoint, q: &SurfacePoint, n: usize, starts: usize) -> Vec<DiscreteCurve> {
    let a = profile.to_unit_sphere(p);
    let b = profile.to_unit_sphere(q);
    let sum = a + b;
    let (mid, axis) = if sum.norm() > 1e-6 {
        let axis = (a - b).try_normalize(1e-12).unwrap_or_else(|| any_orthogonal(&a));
        (sum.normalize(), axis)
    } else {
        (any_orthogonal(&a), a)
    };
    (0..starts)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / starts as f64;
            let m = rotate(&mid, &axis, phi);
            let half = n / 2;
            let mut pts = Vec::with_capacity(n + 1);
            pts.push(*p);
            for i in 1..half {
                pts.push(profile.from_unit_sphere(&slerp(&a, &m, i as f64 / half as f64)));
            }
            pts.push(profile.from_unit_sphere(&m));
            for i in 1..(n - half) {
                pts.push(profile.from_unit_sphere(&slerp(&m, &b, i as f64 / (n - half) as f64)));
            }
            pts.push(*q);
            DiscreteCurve::from_points(pts, Boundary::FixedEndpoints)
        })
        .collect()
}

pub(crate) fn any_orthogonal(a: &Vec3) -> Vec3 {
    let e = if a.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
    (e - a * e.dot(a)).normalize()
}

pub(crate) fn rotate(v: &Vec3, axis: &Vec3, phi: f64) -> Vec3 {
    let (s, c) = phi.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

pub(crate) fn slerp(a: &Vec3, b: &Vec3, w: f64) -> Vec3 {
    let cos = a.dot(b).clamp(-1.0, 1.0);
    let ang = cos.acos();
    if ang < 1e-12 {
        return *a;
    }
    (a * ((1.0 - w) * ang).sin() + b * (w * ang).sin()) / ang.sin()
}

/// Solve `exp_p(L v(α)) = q` for `(α, L)` by damped Gauss–Newton, starting
/// from a rough path.
fn shoot_to(profile: &WarpProfile, p: &SurfacePoint, q: &SurfacePoint, alpha0: f64, len0: f64) -> Option<(f64, f64)> {
    let h = default_step(profile);
    let end = |alpha: f64, len: f64| integrate_end(profile, p, &tangent_at(profile, p, alpha), len, h);
    let (mut alpha, mut len) = (alpha0, len0.max(1e-6));
    let (mut e, mut ve) = end(alpha, len);
    let mut r = e.ambient - q.ambient;
    for _ in 0..40 {
        if r.norm() < 1e-12 * profile.scale() {
            break;
        }
        let delta = 1e-7;
        let (e2, _) = end(alpha + delta, len);
        let ja = (e2.ambient - e.ambient) / delta;
        let jl = ve;
        let (a11, a12, a22) = (ja.dot(&ja), ja.dot(&jl), jl.dot(&jl));
        let mu = 1e-10 * (a11 + a22);
        let (b1, b2) = (-ja.dot(&r), -jl.dot(&r));
        let det = (a11 + mu) * (a22 + mu) - a12 * a12;
        if det.abs() < 1e-300 {
            return None;
        }
        let mut da = ((a22 + mu) * b1 - a12 * b2) / det;
        let mut dl = ((a11 + mu) * b2 - a12 * b1) / det;
        let cap = 0.2;
        let big = da.abs().max(dl.abs());
        if big > cap {
            da *= cap / big;
            dl *= cap / big;
        }
        alpha += da;
        len = (len + dl).max(0.0);
        (e, ve) = end(alpha, len);
        r = e.ambient - q.ambient;
    }
    (r.norm() < 1e-9 * profile.scale()).then_some((alpha, len))
}

/// Angle of a tangent vector at `p` measured from the meridian direction.
fn tangent_angle(profile: &WarpProfile, p: &SurfacePoint, v: &Vec3) -> f64 {
    let fr = profile.frame(p);
    v.dot(&fr.azimuth).atan2(v.dot(&fr.meridian))
}

/// Shortest path found by multistart curve shortening followed by a
/// shooting refinement.
pub fn shortest_path(profile: &WarpProfile, p: &SurfacePoint, q: &SurfacePoint) -> (f64, DiscreteCurve) {
    shortest_path_with(profile, p, q, DISTANCE_STARTS)
}

pub fn shortest_path_with(profile: &WarpProfile, p: &SurfacePoint, q: &SurfacePoint, starts: usize) -> (f64, DiscreteCurve) {
    if p.chord(q) < 1e-14 {
        return (0.0, DiscreteCurve::point_curve(*p, 2, Boundary::FixedEndpoints));
    }
    let starts = if p.chord(q) < 0.25 * injectivity_bound(profile) { 1 } else { starts.max(1) };
    let mut rough: Vec<(f64, DiscreteCurve)> = detour_starts(profile, p, q, 16, starts)
        .into_par_iter()
        .map(|c| {
            let c = pathspace::relax_multilevel(profile, c, 16, 1e-6 * profile.scale());
            (pathspace::length(profile, &c), c)
        })
        .collect();
    rough.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best_rough = rough[0].0;
    // Starts that relaxed onto the same geodesic share an initial angle.
    let mut seeds: Vec<(f64, f64)> = Vec::new();
    for (l, c) in rough.iter().filter(|(l, _)| *l < best_rough + 1e-2 * profile.scale()) {
        let v = (c.points[1].ambient - p.ambient).normalize();
        let alpha = tangent_angle(profile, p, &v);
        let seen = seeds
            .iter()
            .any(|(a, sl)| (sl - l).abs() < 1e-4 && ((a - alpha + PI).rem_euclid(2.0 * PI) - PI).abs() < 1e-3);
        if !seen {
            seeds.push((alpha, *l));
        }
    }
    let refined = seeds
        .par_iter()
        .filter_map(|&(alpha, l)| {
            let (alpha, len) = shoot_to(profile, p, q, alpha, l)?;
            ((len - l).abs() < 5e-2 * profile.scale()).then_some((alpha, len))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1));
    match refined {
        Some((alpha, len)) => {
            let v = tangent_at(profile, p, alpha);
            let path = shoot_with_step(profile, p, &v, len, Some(default_step(profile))).expect("unit tangent");
            let mut curve = path.to_curve(profile, 128);
            *curve.points.last_mut().expect("non-empty") = *q;
            (len, curve)
        }
        None => {
            let c = pathspace::relax_multilevel(profile, rough.swap_remove(0).1, 128, 1e-11 * profile.scale());
            (pathspace::length(profile, &c), c)
        }
    }
}

/// Riemannian distance (multistart heuristic).
pub fn distance(profile: &WarpProfile, p: &SurfacePoint, q: &SurfacePoint) -> f64 {
    shortest_path(profile, p, q).0
}

#[derive(Clone, Copy, Debug)]
pub struct FarthestPoint {
    pub distance: f64,
    pub point: SurfacePoint,
}

fn van_der_corput(mut k: usize) -> f64 {
    let mut v = 0.0;
    let mut base = 0.5;
    while k > 0 {
        if k & 1 == 1 {
            v += base;
        }
        k >>= 1;
        base *= 0.5;
    }
    v
}

/// Nested quasi-uniform candidate set: the chart antipode and both poles,
/// followed by the first `grid_size` points of a fixed low-discrepancy
/// sequence on the coordinate sphere.
pub fn candidate_grid(profile: &WarpProfile, p: &SurfacePoint, grid_size: usize) -> Vec<SurfacePoint> {
    let golden = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut out = vec![
        profile.from_unit_sphere(&(-profile.to_unit_sphere(p))),
        profile.north_pole(),
        profile.south_pole(),
    ];
    for k in 1..=grid_size {
        let z = 1.0 - 2.0 * van_der_corput(k);
        let az = 2.0 * PI * (k as f64 * golden).fract();
        let r = (1.0 - z * z).max(0.0).sqrt();
        out.push(profile.from_unit_sphere(&Vec3::new(r * az.cos(), r * az.sin(), z)));
    }
    out
}

/// `sup_q d(p, q)` over the candidate grid.
pub fn d_sup(profile: &WarpProfile, p: &SurfacePoint, grid_size: usize) -> Result<FarthestPoint> {
    if grid_size < 16 {
        return Err(Error::Domain(format!("d_sup grid needs at least 16 points, got {grid_size}")));
    }
    let grid = candidate_grid(profile, p, grid_size);
    let dists: Vec<f64> = grid.par_iter().map(|q| distance(profile, p, q)).collect();
    let (idx, dist) = dists
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, d)| if d > best.1 { (i, d) } else { best });
    Ok(FarthestPoint {
        distance: dist,
        point: grid[idx],
    })
}

/// Transport `w0` along a polyline: per segment, project to the next
/// tangent plane and restore the norm.
pub fn parallel_transport(profile: &WarpProfile, curve: &DiscreteCurve, w0: &Vec3) -> Vec3 {
    let norm = w0.norm();
    let mut w = *w0;
    for p in curve.points.iter().skip(1) {
        let n = profile.normal(p);
        w -= n * w.dot(&n);
        let len = w.norm();
        if len > 0.0 {
            w *= norm / len;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_pole_to_pole() {
        let g = WarpProfile::round();
        let p = g.north_pole();
        let v = tangent_at(&g, &p, 0.3);
        let c = shoot(&g, &p, &v, PI).unwrap();
        assert!((c.end().point.ambient - g.south_pole().ambient).norm() < 1e-8);
    }

    #[test]
    fn round_equator_closes() {
        let g = WarpProfile::round();
        let p = g.point(FRAC_PI_2, 0.4);
        let v = g.frame(&p).azimuth;
        let c = shoot(&g, &p, &v, 2.0 * PI).unwrap();
        assert!((c.end().point.ambient - p.ambient).norm() < 1e-7);
        assert!((c.end().velocity - v).norm() < 1e-7);
    }

    #[test]
    fn non_unit_direction_rejected() {
        let g = WarpProfile::round();
        let p = g.point(1.0, 0.0);
        let v = g.frame(&p).azimuth * 2.0;
        assert!(matches!(shoot(&g, &p, &v, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let g = WarpProfile::family(0.5).unwrap();
        let p = g.point(0.8, 1.1);
        assert_eq!(exp_point(&g, &p, &Vec3::zeros()), p);
    }

    #[test]
    fn jacobi_sine_zeros() {
        let g = WarpProfile::round();
        let p = g.point(FRAC_PI_2, 0.0);
        let c = shoot(&g, &p, &g.frame(&p).azimuth, 2.0 * PI).unwrap();
        let sol = jacobi(&c, 0.0, 1.0).unwrap();
        assert_eq!(sol.zeros.len(), 2, "{:?}", sol.zeros);
        assert!((sol.zeros[0] - PI).abs() < 1e-9);
        assert!((sol.zeros[1] - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn jacobi_trivial_data_rejected() {
        let g = WarpProfile::round();
        let p = g.point(1.0, 0.0);
        let c = shoot(&g, &p, &g.frame(&p).azimuth, 1.0).unwrap();
        assert!(jacobi(&c, 0.0, 0.0).is_err());
    }

    #[test]
    fn focal_fan_needs_eight() {
        assert!(focal_radius(&WarpProfile::round(), 4).is_err());
    }
}
