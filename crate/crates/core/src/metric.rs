//! Warped-product metrics `dt² + f(t)² dx²` on the 2-sphere.
//!
//! A profile is described by its slope angle `θ(u)` on `u ∈ [0, π]`, with
//! `f′ = cos θ` and the embedding height `z′ = sin θ`. The embedded surface of
//! revolution is `(f cos x, f sin x, z)`. A profile may carry a length scale
//! `λ`, in which case `t = λ u` and all lengths scale by `λ` (curvature by
//! `λ⁻²`).

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::cheb::{self, PiecewiseIntegral};
use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Width (in the unscaled coordinate) of the collar around each pole where
/// the curvature is evaluated from its pole limit.
pub const EPS_POLE: f64 = 1e-3;
/// Smallest equatorial radius the sinh family can represent.
pub const R_MIN: f64 = 0.05;
/// Sample count used for curvature bounds and the domination check.
pub const SAMPLE_GRID: usize = 4096;

const FAMILY_A_MAX: f64 = 64.0;
const INVARIANT_TOL: f64 = 1e-10;
const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITERS: usize = 30;
const SCAN_POINTS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Round,
    Family,
    UserTrig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoleFlag {
    None,
    North,
    South,
}

/// Slope angle `θ(u)` of the profile curve.
#[derive(Clone, Debug)]
enum SlopeAngle {
    Identity,
    /// `θ = (π/2)(1 + sinh(a(u − π/2)) / sinh(aπ/2))`
    Sinh {
        a: f64,
    },
    /// `θ = u + c₀ + Σ aₖ cos(ku) + bₖ sin(ku)`
    Trig {
        c0: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
}

impl SlopeAngle {
    fn value(&self, u: f64) -> f64 {
        match self {
            SlopeAngle::Identity => u,
            SlopeAngle::Sinh { a } => FRAC_PI_2 * (1.0 + sinh_ratio(a * (u - FRAC_PI_2), a * FRAC_PI_2)),
            SlopeAngle::Trig { c0, cos, sin } => {
                let mut acc = u + c0;
                for (k, (ak, bk)) in cos.iter().zip(sin).enumerate() {
                    let ku = (k + 1) as f64 * u;
                    acc += ak * ku.cos() + bk * ku.sin();
                }
                acc
            }
        }
    }

    fn derivative(&self, u: f64) -> f64 {
        match self {
            SlopeAngle::Identity => 1.0,
            SlopeAngle::Sinh { a } => FRAC_PI_2 * a * cosh_ratio(a * (u - FRAC_PI_2), a * FRAC_PI_2),
            SlopeAngle::Trig { cos, sin, .. } => {
                let mut acc = 1.0;
                for (k, (ak, bk)) in cos.iter().zip(sin).enumerate() {
                    let kf = (k + 1) as f64;
                    let ku = kf * u;
                    acc += kf * (bk * ku.cos() - ak * ku.sin());
                }
                acc
            }
        }
    }
}

/// `sinh(x) / sinh(y)` for `y > 0` without overflow.
fn sinh_ratio(x: f64, y: f64) -> f64 {
    let ax = x.abs();
    let r = (ax - y).exp() * (-(-2.0 * ax).exp_m1()) / (-(-2.0 * y).exp_m1());
    r.copysign(x)
}

/// `cosh(x) / sinh(y)` for `y > 0` without overflow.
fn cosh_ratio(x: f64, y: f64) -> f64 {
    let ax = x.abs();
    (ax - y).exp() * (1.0 + (-2.0 * ax).exp()) / (-(-2.0 * y).exp_m1())
}

#[derive(Debug)]
struct Tables {
    f: PiecewiseIntegral,
    z: PiecewiseIntegral,
    z_half: f64,
}

/// A point of the embedded surface with its chart coordinates.
///
/// `t` is meridian arclength from the north pole and `x` the azimuth. At a
/// pole `x` is kept as a direction label only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub ambient: Vec3,
    pub t: f64,
    pub x: f64,
    pub pole: PoleFlag,
}

impl SurfacePoint {
    pub fn chord(&self, other: &SurfacePoint) -> f64 {
        (self.ambient - other.ambient).norm()
    }
}

/// Orthonormal frame at a surface point: meridian direction (increasing
/// `t`), azimuthal direction (increasing `x`) and the inward normal.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub meridian: Vec3,
    pub azimuth: Vec3,
    pub normal: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricSample {
    pub t: f64,
    pub f: f64,
    pub f_prime: f64,
    pub f_doubleprime: f64,
    pub k: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MorseComparison {
    pub dominated: bool,
    pub max_gap: f64,
    pub witness_t: f64,
}

/// A rotationally symmetric metric on the 2-sphere.
#[derive(Clone, Debug)]
pub struct WarpProfile {
    kind: ProfileKind,
    angle: SlopeAngle,
    scale: f64,
    tables: Option<Arc<Tables>>,
    k_min: f64,
    k_max: f64,
    curvature_positive: bool,
}

impl WarpProfile {
    /// The unit round metric `dt² + sin²t dx²`.
    pub fn round() -> Self {
        Self {
            kind: ProfileKind::Round,
            angle: SlopeAngle::Identity,
            scale: 1.0,
            tables: None,
            k_min: 1.0,
            k_max: 1.0,
            curvature_positive: true,
        }
    }

    /// Member of the one-parameter convex family with `f(π/2) = r`.
    pub fn family(r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Domain(format!("family radius r = {r} outside (0, 1]")));
        }
        if r == 1.0 {
            return Ok(Self::round());
        }
        if r < R_MIN {
            return Err(Error::Unrepresentable(format!(
                "r = {r} is below the family minimum r_min = {R_MIN}"
            )));
        }
        let radius = |a: f64| {
            let angle = SlopeAngle::Sinh { a };
            cheb::integrate(|u| angle.value(u).cos(), 0.0, FRAC_PI_2)
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while radius(hi) > r {
            lo = hi;
            hi *= 2.0;
            if hi > FAMILY_A_MAX {
                return Err(Error::Unrepresentable(format!(
                    "bisection for r = {r} does not bracket below steepness {FAMILY_A_MAX}"
                )));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if radius(mid) > r {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * hi.max(1.0) {
                break;
            }
        }
        let profile = Self::with_angle(ProfileKind::Family, SlopeAngle::Sinh { a: 0.5 * (lo + hi) });
        if (profile.r_value() - r).abs() > 1e-8 {
            return Err(Error::Unrepresentable(format!(
                "bisection reached f(π/2) = {} for target r = {r}",
                profile.r_value()
            )));
        }
        Ok(profile)
    }

    /// User profile from trig-polynomial slope-angle coefficients
    /// `[c₀, a₁, b₁, a₂, b₂, …]`, `θ(u) = u + c₀ + Σ aₖ cos(ku) + bₖ sin(ku)`.
    pub fn from_theta_coeffs(coeffs: &[f64]) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidProfile {
                invariant: "finite coefficients",
                detail: format!("{coeffs:?}"),
            });
        }
        let c0 = coeffs.first().copied().unwrap_or(0.0);
        let rest = coeffs.get(1..).unwrap_or(&[]);
        let mut cos = Vec::new();
        let mut sin = Vec::new();
        for pair in rest.chunks(2) {
            cos.push(pair[0]);
            sin.push(pair.get(1).copied().unwrap_or(0.0));
        }
        let angle = SlopeAngle::Trig { c0, cos, sin };

        let th0 = angle.value(0.0);
        let th_pi = angle.value(PI);
        if th0.abs() > INVARIANT_TOL || (th_pi - PI).abs() > INVARIANT_TOL {
            return Err(Error::InvalidProfile {
                invariant: "pole regularity f'(0) = 1, f'(pi) = -1",
                detail: format!("f'(0) = {}, f'(pi) = {}", th0.cos(), th_pi.cos()),
            });
        }
        for i in 0..=SAMPLE_GRID {
            let u = PI * i as f64 / SAMPLE_GRID as f64;
            let asym = angle.value(PI - u) + angle.value(u) - PI;
            if asym.abs() > INVARIANT_TOL {
                return Err(Error::InvalidProfile {
                    invariant: "equatorial symmetry f(pi - t) = f(t)",
                    detail: format!("slope angle asymmetry {asym:.3e} at t = {u}"),
                });
            }
            let d = angle.derivative(u);
            if d <= 0.0 {
                return Err(Error::InvalidProfile {
                    invariant: "positive curvature (theta' > 0)",
                    detail: format!("theta'({u}) = {d}"),
                });
            }
        }
        Ok(Self::with_angle(ProfileKind::UserTrig, angle))
    }

    fn with_angle(kind: ProfileKind, angle: SlopeAngle) -> Self {
        let f = {
            let a = angle.clone();
            PiecewiseIntegral::build(move |u| a.value(u).cos(), 0.0, FRAC_PI_2)
        };
        let z = {
            let a = angle.clone();
            PiecewiseIntegral::build(move |u| a.value(u).sin(), 0.0, FRAC_PI_2)
        };
        let z_half = z.total();
        let mut profile = Self {
            kind,
            angle,
            scale: 1.0,
            tables: Some(Arc::new(Tables { f, z, z_half })),
            k_min: 0.0,
            k_max: 0.0,
            curvature_positive: true,
        };
        let (k_min, k_max) = (0..=SAMPLE_GRID)
            .map(|i| profile.curvature_unscaled(PI * i as f64 / SAMPLE_GRID as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| (lo.min(k), hi.max(k)));
        profile.k_min = k_min;
        profile.k_max = k_max;
        profile.curvature_positive = k_min > 0.0;
        profile
    }

    /// Same metric with every length multiplied by `lambda`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("scale {lambda} must be positive")));
        }
        let mut out = self.clone();
        out.scale *= lambda;
        out.k_min = self.k_min / (lambda * lambda);
        out.k_max = self.k_max / (lambda * lambda);
        Ok(out)
    }

    /// Rescale so the minimum sampled curvature equals `target`.
    pub fn rescaled_to_min_curvature(&self, target: f64) -> Result<Self> {
        if self.k_min.is_nan() || self.k_min <= 0.0 {
            return Err(Error::Domain("profile has no positive curvature minimum".into()));
        }
        self.rescaled((self.k_min / target).sqrt())
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Steepness of the sinh family (0 for other kinds).
    pub fn steepness(&self) -> f64 {
        match self.angle {
            SlopeAngle::Sinh { a } => a,
            _ => 0.0,
        }
    }

    pub fn is_round(&self) -> bool {
        matches!(self.angle, SlopeAngle::Identity)
    }

    /// `f(π/2)` in the profile's own length units.
    pub fn r_value(&self) -> f64 {
        self.f(self.meridian_length() * 0.5)
    }

    /// Length of a meridian from pole to pole.
    pub fn meridian_length(&self) -> f64 {
        PI * self.scale
    }

    pub fn min_curvature(&self) -> f64 {
        self.k_min
    }

    pub fn max_curvature(&self) -> f64 {
        self.k_max
    }

    /// Whether `K > 0` held on the sampling grid at construction.
    pub fn curvature_positive(&self) -> bool {
        self.curvature_positive
    }

    /// Human-readable descriptor used in reports.
    pub fn descriptor(&self) -> String {
        let base = match self.kind {
            ProfileKind::Round => "round".to_string(),
            ProfileKind::Family => format!("family(r={})", fmt_short(self.r_value() / self.scale)),
            ProfileKind::UserTrig => "user-trig".to_string(),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{base}*{}", fmt_short(self.scale))
        }
    }

    fn unscaled(&self, t: f64) -> f64 {
        (t / self.scale).clamp(0.0, PI)
    }

    fn big_f(&self, u: f64) -> f64 {
        match &self.tables {
            None => u.sin(),
            Some(tab) => {
                let w = if u <= FRAC_PI_2 { u } else { PI - u };
                tab.f.eval(w.max(0.0))
            }
        }
    }

    fn big_z(&self, u: f64) -> f64 {
        match &self.tables {
            None => 2.0 * (0.5 * u).sin().powi(2),
            Some(tab) => {
                if u <= FRAC_PI_2 {
                    tab.z.eval(u.max(0.0))
                } else {
                    2.0 * tab.z_half - tab.z.eval((PI - u).max(0.0))
                }
            }
        }
    }

    fn curvature_unscaled(&self, u: f64) -> f64 {
        if self.is_round() {
            return 1.0;
        }
        let w = u.min(PI - u).max(0.0);
        if w < EPS_POLE {
            let d0 = self.angle.derivative(0.0);
            let k0 = d0 * d0;
            let ke = self.curvature_direct(EPS_POLE);
            k0 + (ke - k0) * w / EPS_POLE
        } else {
            self.curvature_direct(w)
        }
    }

    fn curvature_direct(&self, u: f64) -> f64 {
        self.angle.derivative(u) * self.angle.value(u).sin() / self.big_f(u)
    }

    /// Slope angle at meridian arclength `t`.
    pub fn theta(&self, t: f64) -> f64 {
        self.angle.value(self.unscaled(t))
    }

    pub fn f(&self, t: f64) -> f64 {
        self.scale * self.big_f(self.unscaled(t))
    }

    pub fn f_prime(&self, t: f64) -> f64 {
        self.theta(t).cos()
    }

    pub fn f_second(&self, t: f64) -> f64 {
        let u = self.unscaled(t);
        -self.angle.value(u).sin() * self.angle.derivative(u) / self.scale
    }

    /// Height of the embedded profile curve.
    pub fn z(&self, t: f64) -> f64 {
        self.scale * self.big_z(self.unscaled(t))
    }

    /// Gauss curvature `K = −f″/f`, with the pole limit inside the collar.
    pub fn gauss_curvature(&self, t: f64) -> f64 {
        self.curvature_unscaled(self.unscaled(t)) / (self.scale * self.scale)
    }

    pub fn sample(&self, t: f64) -> MetricSample {
        MetricSample {
            t,
            f: self.f(t),
            f_prime: self.f_prime(t),
            f_doubleprime: self.f_second(t),
            k: self.gauss_curvature(t),
        }
    }

    /// Uniform table of `n + 1` samples over the meridian.
    pub fn samples(&self, n: usize) -> Vec<MetricSample> {
        let n = n.max(1);
        let len = self.meridian_length();
        (0..=n).map(|i| self.sample(len * i as f64 / n as f64)).collect()
    }

    /// Principal curvatures `(meridian, parallel)` at `t`.
    pub fn principal_curvatures(&self, t: f64) -> (f64, f64) {
        let u = self.unscaled(t);
        let th = self.angle.value(u);
        let d = self.angle.derivative(u);
        let k_mer = d / self.scale;
        let w = u.min(PI - u);
        let k_par = if w < 1e-9 {
            self.angle.derivative(0.0) / self.scale
        } else {
            th.sin() / (self.scale * self.big_f(u))
        };
        (k_mer, k_par)
    }

    fn pole_flag(&self, t: f64) -> PoleFlag {
        if t <= 0.0 {
            PoleFlag::North
        } else if t >= self.meridian_length() {
            PoleFlag::South
        } else {
            PoleFlag::None
        }
    }

    /// Embedding of chart coordinates.
    pub fn point(&self, t: f64, x: f64) -> SurfacePoint {
        let t = t.clamp(0.0, self.meridian_length());
        let rho = self.f(t);
        SurfacePoint {
            ambient: Vec3::new(rho * x.cos(), rho * x.sin(), self.z(t)),
            t,
            x,
            pole: self.pole_flag(t),
        }
    }

    pub fn north_pole(&self) -> SurfacePoint {
        self.point(0.0, 0.0)
    }

    pub fn south_pole(&self) -> SurfacePoint {
        self.point(self.meridian_length(), 0.0)
    }

    pub fn frame(&self, p: &SurfacePoint) -> Frame {
        let th = self.theta(p.t);
        let (st, ct) = th.sin_cos();
        let (sx, cx) = p.x.sin_cos();
        Frame {
            meridian: Vec3::new(ct * cx, ct * sx, st),
            azimuth: Vec3::new(-sx, cx, 0.0),
            normal: Vec3::new(-st * cx, -st * sx, ct),
        }
    }

    pub fn normal(&self, p: &SurfacePoint) -> Vec3 {
        self.frame(p).normal
    }

    /// Second fundamental form `II(v, v)` with respect to the inward normal.
    pub fn second_fundamental(&self, p: &SurfacePoint, v: &Vec3) -> f64 {
        let (k_mer, k_par) = self.principal_curvatures(p.t);
        let a = v.dot(&self.frame(p).meridian);
        k_par * v.norm_squared() + (k_mer - k_par) * a * a
    }

    /// Residual of the point against the surface equation `ρ = f(t)`, `z = z(t)`.
    pub fn surface_residual(&self, p: &SurfacePoint) -> f64 {
        let rho = (p.ambient.x * p.ambient.x + p.ambient.y * p.ambient.y).sqrt();
        (rho - self.f(p.t)).abs().max((p.ambient.z - self.z(p.t)).abs())
    }

    /// Nearest surface point to an ambient point.
    ///
    /// `hint` is a nearby chart point; without it a coarse meridian scan
    /// seeds the Newton iteration.
    pub fn project(&self, q: &Vec3, hint: Option<&SurfacePoint>) -> SurfacePoint {
        let rho = (q.x * q.x + q.y * q.y).sqrt();
        let x = if rho > 1e-300 {
            q.y.atan2(q.x)
        } else {
            hint.map_or(0.0, |h| h.x)
        };
        let u = if self.is_round() {
            rho.atan2(self.scale - q.z)
        } else {
            self.project_meridian(rho / self.scale, q.z / self.scale, hint.map(|h| h.t / self.scale))
        };
        self.point(u * self.scale, x)
    }

    fn project_meridian(&self, rho: f64, z: f64, hint: Option<f64>) -> f64 {
        let dist2 = |u: f64| {
            let dr = rho - self.big_f(u);
            let dz = z - self.big_z(u);
            dr * dr + dz * dz
        };
        let scan = || {
            let mut best = (0.0, f64::INFINITY);
            for i in 0..=SCAN_POINTS {
                let u = PI * i as f64 / SCAN_POINTS as f64;
                let d = dist2(u);
                if d < best.1 {
                    best = (u, d);
                }
            }
            best.0
        };
        let mut u = hint.unwrap_or_else(scan).clamp(0.0, PI);
        let mut rescanned = hint.is_none();
        let mut iters = 0;
        loop {
            let th = self.angle.value(u);
            let (st, ct) = th.sin_cos();
            let dr = rho - self.big_f(u);
            let dz = z - self.big_z(u);
            let g = dr * ct + dz * st;
            let dg = -1.0 + self.angle.derivative(u) * (dz * ct - dr * st);
            if dg > -1e-3 {
                if rescanned {
                    return u;
                }
                u = scan();
                rescanned = true;
                continue;
            }
            let step = -g / dg;
            let next = (u + step).clamp(0.0, PI);
            let moved = (next - u).abs();
            u = next;
            iters += 1;
            if moved < NEWTON_TOL || iters >= NEWTON_MAX_ITERS {
                return u;
            }
        }
    }

    /// Point with the chart coordinates of a unit-sphere point (colatitude
    /// becomes `t / λ`). Used to carry round-sphere constructions over.
    pub fn from_unit_sphere(&self, p: &Vec3) -> SurfacePoint {
        let u = (p.x * p.x + p.y * p.y).sqrt().atan2(p.z);
        let x = if p.x == 0.0 && p.y == 0.0 { 0.0 } else { p.y.atan2(p.x) };
        self.point(u * self.scale, x)
    }

    /// Unit-sphere point with the same chart coordinates.
    pub fn to_unit_sphere(&self, p: &SurfacePoint) -> Vec3 {
        let u = self.unscaled(p.t);
        Vec3::new(u.sin() * p.x.cos(), u.sin() * p.x.sin(), u.cos())
    }

    /// Pointwise comparison with the unit round metric (`f ≤ sin`).
    pub fn morse_compare(&self) -> MorseComparison {
        let len = self.meridian_length();
        let mut out = MorseComparison {
            dominated: true,
            max_gap: f64::NEG_INFINITY,
            witness_t: 0.0,
        };
        for i in 0..=SAMPLE_GRID {
            let t = len * i as f64 / SAMPLE_GRID as f64;
            let gap = t.sin() - self.f(t);
            if gap < -1e-12 {
                out.dominated = false;
            }
            if gap > out.max_gap {
                out.max_gap = gap;
                out.witness_t = t;
            }
        }
        out
    }

    /// Check the profile invariants on a dense grid.
    pub fn validate(&self) -> Result<()> {
        let len = self.meridian_length();
        let ends = [self.f(0.0), self.f(len)];
        if ends.iter().any(|v| v.abs() > 1e-12 * self.scale) {
            return Err(Error::InvalidProfile {
                invariant: "f(0) = f(pi) = 0",
                detail: format!("{ends:?}"),
            });
        }
        if (self.f_prime(0.0) - 1.0).abs() > INVARIANT_TOL || (self.f_prime(len) + 1.0).abs() > INVARIANT_TOL {
            return Err(Error::InvalidProfile {
                invariant: "pole regularity f'(0) = 1, f'(pi) = -1",
                detail: format!("f'(0) = {}, f'(pi) = {}", self.f_prime(0.0), self.f_prime(len)),
            });
        }
        for i in 1..SAMPLE_GRID {
            let t = len * i as f64 / SAMPLE_GRID as f64;
            let f = self.f(t);
            if f <= 0.0 {
                return Err(Error::InvalidProfile {
                    invariant: "f > 0 on the open meridian",
                    detail: format!("f({t}) = {f}"),
                });
            }
            if (self.f(len - t) - f).abs() > INVARIANT_TOL * self.scale {
                return Err(Error::InvalidProfile {
                    invariant: "equatorial symmetry f(pi - t) = f(t)",
                    detail: format!("t = {t}"),
                });
            }
        }
        Ok(())
    }
}

fn fmt_short(v: f64) -> String {
    let s = format!("{v:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
