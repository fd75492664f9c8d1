//! Length comparison for curves pushed off a geodesic along its normal.
//!
//! For a geodesic `c` on `[0, a]` and an offset `f`, the curve
//! `b(t) = exp_{c(t)}(f(t) E(t))` is compared with its counterpart on the
//! unit sphere, whose length is `∫₀ᵃ √(f′² + v² cos² f) dt` in Fermi
//! coordinates (`v = L(c)/a`). Under `K ≥ 1` the pushed curve is never
//! longer.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::cheb;
use crate::error::{Error, Result};
use crate::geodesic::{self, GeodesicPath};
use crate::metric::{SurfacePoint, WarpProfile};
use crate::pathspace::{self, Boundary, DiscreteCurve};

pub const TOL_CMP: f64 = 1e-5;
/// Ten times the largest `|slack|` seen on the round profile (about 1e-8).
pub const TOL_RIGID: f64 = 1e-7;
/// Default sample count of the pushed curve.
pub const COMPARISON_SAMPLES: usize = 256;
const CURVATURE_SAMPLES: usize = 4096;

/// Offset profile on `[0, a]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum OffsetFn {
    Constant { value: f64 },
    /// `amp · sin(π t / a)`.
    Bump { amp: f64 },
    /// `base + amp · sin(π t / a)`.
    Shifted { base: f64, amp: f64 },
}

impl OffsetFn {
    pub fn value(&self, t: f64, a: f64) -> f64 {
        match *self {
            OffsetFn::Constant { value } => value,
            OffsetFn::Bump { amp } => amp * (PI * t / a).sin(),
            OffsetFn::Shifted { base, amp } => base + amp * (PI * t / a).sin(),
        }
    }

    pub fn derivative(&self, t: f64, a: f64) -> f64 {
        match *self {
            OffsetFn::Constant { .. } => 0.0,
            OffsetFn::Bump { amp } | OffsetFn::Shifted { amp, .. } => amp * PI / a * (PI * t / a).cos(),
        }
    }

    /// Upper bound of the offset over the interval.
    pub fn sup(&self) -> f64 {
        match *self {
            OffsetFn::Constant { value } => value,
            OffsetFn::Bump { amp } => amp.max(0.0),
            OffsetFn::Shifted { base, amp } => base + amp.max(0.0),
        }
    }

    pub fn inf(&self) -> f64 {
        match *self {
            OffsetFn::Constant { value } => value,
            OffsetFn::Bump { amp } => amp.min(0.0),
            OffsetFn::Shifted { base, amp } => base + amp.min(0.0),
        }
    }

    pub fn halved(&self) -> Self {
        match *self {
            OffsetFn::Constant { value } => OffsetFn::Constant { value: 0.5 * value },
            OffsetFn::Bump { amp } => OffsetFn::Bump { amp: 0.5 * amp },
            OffsetFn::Shifted { base, amp } => OffsetFn::Shifted {
                base: 0.5 * base,
                amp: 0.5 * amp,
            },
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            OffsetFn::Constant { value } => format!("const({value})"),
            OffsetFn::Bump { amp } => format!("bump({amp})"),
            OffsetFn::Shifted { base, amp } => format!("shifted({base};{amp})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ComparisonCase {
    pub base_geodesic: GeodesicPath,
    /// Parameter interval length `a`.
    pub interval: f64,
    pub offset: OffsetFn,
    pub built_curve: DiscreteCurve,
    pub built_length: f64,
    pub spherical_length: f64,
    focal_radius: f64,
}

/// Length of the comparison curve on the unit sphere.
pub fn spherical_length(geodesic_length: f64, interval: f64, offset: &OffsetFn) -> f64 {
    let v = geodesic_length / interval;
    cheb::integrate(
        |t| {
            let fp = offset.derivative(t, interval);
            let c = offset.value(t, interval).cos();
            (fp * fp + v * v * c * c).sqrt()
        },
        0.0,
        interval,
    )
}

fn pushed_points(profile: &WarpProfile, c: &GeodesicPath, interval: f64, offset: &OffsetFn, n: usize) -> Result<Vec<SurfacePoint>> {
    let v = c.length / interval;
    let h = 2.0 * geodesic::default_step(profile);
    (0..=n)
        .into_par_iter()
        .map(|i| {
            let t = interval * i as f64 / n as f64;
            let s = v * t;
            let p = c.point_at(profile, s);
            let e = profile.normal(&p).cross(&c.velocity_at(profile, s)).normalize();
            Ok(geodesic::exp_state(profile, &p, &(e * offset.value(t, interval)), h).0)
        })
        .collect()
}

/// Build `b` on a geodesic `c` parametrized on `[0, interval]`.
pub fn build_comparison(profile: &WarpProfile, c: &GeodesicPath, interval: f64, offset: OffsetFn, n: usize) -> Result<ComparisonCase> {
    let focal = geodesic::focal_radius(profile, 16)?;
    build_comparison_with_focal(profile, c, interval, offset, n, focal)
}

/// As [`build_comparison`] with a known focal radius.
pub fn build_comparison_with_focal(
    profile: &WarpProfile,
    c: &GeodesicPath,
    interval: f64,
    offset: OffsetFn,
    n: usize,
    focal_radius: f64,
) -> Result<ComparisonCase> {
    if interval.is_nan() || interval <= 0.0 {
        return Err(Error::Domain(format!("parameter interval {interval} must be positive")));
    }
    if offset.inf() < 0.0 || offset.sup() > focal_radius {
        return Err(Error::Domain(format!(
            "offset {} leaves [0, focal radius = {focal_radius:.6}]",
            offset.describe()
        )));
    }
    if n < 4 || n % 2 == 1 {
        return Err(Error::Domain(format!("sample count {n} must be even and at least 4")));
    }
    let fine = pushed_points(profile, c, interval, &offset, n)?;
    let built_curve = DiscreteCurve::from_points(fine, Boundary::FixedEndpoints);
    let l_fine = pathspace::length(profile, &built_curve);
    let coarse = DiscreteCurve::from_points(built_curve.points.iter().step_by(2).copied().collect(), Boundary::FixedEndpoints);
    let l_coarse = pathspace::length(profile, &coarse);
    Ok(ComparisonCase {
        base_geodesic: c.clone(),
        interval,
        offset,
        built_curve,
        built_length: (4.0 * l_fine - l_coarse) / 3.0,
        spherical_length: spherical_length(c.length, interval, &offset),
        focal_radius,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RauchCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub rigid: bool,
    /// Equality again for the halved offset (only checked when rigid).
    pub propagated: Option<bool>,
}

/// Compare `L(b)` with the spherical length; on equality, repeat with the
/// halved offset.
pub fn rauch_check(profile: &WarpProfile, case: &ComparisonCase) -> Result<RauchCheck> {
    let lhs = case.built_length;
    let rhs = case.spherical_length;
    let slack = rhs - lhs;
    if slack < -TOL_CMP && profile.min_curvature() >= 1.0 - 1e-9 {
        return Err(Error::InvariantViolation(format!(
            "L(b) = {lhs:.9} exceeds the spherical length {rhs:.9} on a K >= 1 profile"
        )));
    }
    let rigid = slack.abs() < TOL_RIGID;
    let propagated = if rigid {
        let half = build_comparison_with_focal(
            profile,
            &case.base_geodesic,
            case.interval,
            case.offset.halved(),
            case.built_curve.segments(),
            case.focal_radius,
        )?;
        Some((half.spherical_length - half.built_length).abs() < TOL_RIGID)
    } else {
        None
    };
    Ok(RauchCheck {
        lhs,
        rhs,
        slack,
        rigid,
        propagated,
    })
}

/// Check `y(t) ≤ cos t` for the Jacobi solution with `y(0) = 1`, `y′(0) = 0`
/// on `[0, t1]`.
pub fn jacobi_bound_check(profile: &WarpProfile, c: &GeodesicPath, t1: f64) -> Result<bool> {
    if !(t1 >= 0.0 && t1 <= c.length) {
        return Err(Error::Precondition(format!("t1 = {t1} outside [0, L(c) = {}]", c.length)));
    }
    let k_min = (0..=CURVATURE_SAMPLES)
        .map(|i| profile.gauss_curvature(c.point_at(profile, c.length * i as f64 / CURVATURE_SAMPLES as f64).t))
        .fold(f64::INFINITY, f64::min);
    if k_min < 1.0 - 1e-9 {
        return Err(Error::Precondition(format!("curvature {k_min:.6} < 1 along the geodesic")));
    }
    let sol = geodesic::jacobi(c, 1.0, 0.0)?;
    if let Some(&z) = sol.zeros.first() {
        if t1 > z + 1e-9 {
            return Err(Error::Precondition(format!("t1 = {t1} lies past the first focal point {z:.9}")));
        }
    }
    Ok(sol.values.iter().filter(|(s, _, _)| *s <= t1).all(|(s, y, _)| *y <= s.cos() + 1e-6))
}
