//! Explicit sweep-outs of path and loop spaces.
//!
//! The closed forms `g_v`, `g_{v,u}` and the great-circle arc length
//! describe the disc family pushed off a long geodesic on the round sphere;
//! the builders assemble the corresponding discrete families on any
//! profile.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::{self, GeodesicPath};
use crate::metric::{PoleFlag, SurfacePoint, Vec3, WarpProfile};
use crate::pathspace::{self, Boundary, DiscreteCurve, EnergyLevel};

/// Continuity bound on the pointwise distance of adjacent members.
pub const DELTA_SWEEP: f64 = 0.05;
/// Default member count for interval-indexed sweeps (odd, so the centre is exact).
pub const INTERVAL_MEMBERS: usize = 129;
/// Default member count for circle-indexed sweeps.
pub const CIRCLE_MEMBERS: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum IndexSpace {
    Interval { lo: f64, hi: f64 },
    Circle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Loops through a fixed base point.
    Based,
    /// Paths with fixed endpoints.
    Path,
    /// Free loops.
    Free,
}

#[derive(Clone, Debug)]
pub struct SweepOut {
    pub members: Vec<DiscreteCurve>,
    pub index_values: Vec<f64>,
    pub index_space: IndexSpace,
    pub kind: SweepKind,
    /// Members required to sit at low energy (interval endpoints).
    pub boundary_members: Vec<usize>,
    pub energies: Vec<EnergyLevel>,
    pub level: f64,
}

impl SweepOut {
    /// Assemble a sweep, checking the mesh of every member and the
    /// continuity of adjacent members.
    pub fn new(
        profile: &WarpProfile,
        members: Vec<DiscreteCurve>,
        index_values: Vec<f64>,
        index_space: IndexSpace,
        kind: SweepKind,
        boundary_members: Vec<usize>,
    ) -> Result<Self> {
        if members.len() < 2 || members.len() != index_values.len() {
            return Err(Error::Domain(format!(
                "sweep needs at least two members with one index value each (got {} and {})",
                members.len(),
                index_values.len()
            )));
        }
        let energies = members
            .par_iter()
            .map(|m| pathspace::energy(profile, m))
            .collect::<Result<Vec<_>>>()?;
        let level = energies.iter().map(|e| e.energy).fold(f64::NEG_INFINITY, f64::max);
        let out = Self {
            members,
            index_values,
            index_space,
            kind,
            boundary_members,
            energies,
            level,
        };
        let (i, gap) = out.max_adjacent_distance();
        if gap >= DELTA_SWEEP {
            return Err(Error::Continuity {
                a: i,
                b: (i + 1) % out.members.len(),
                distance: gap,
                bound: DELTA_SWEEP,
            });
        }
        Ok(out)
    }

    /// Largest pointwise distance between adjacent members (wrapping for
    /// circle-indexed sweeps) and the first index where it occurs.
    pub fn max_adjacent_distance(&self) -> (usize, f64) {
        let m = self.members.len();
        let pairs = match self.index_space {
            IndexSpace::Circle => m,
            IndexSpace::Interval { .. } => m - 1,
        };
        (0..pairs)
            .map(|i| (i, self.members[i].pointwise_distance(&self.members[(i + 1) % m])))
            .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
    }

    pub fn segments(&self) -> usize {
        self.members[0].segments()
    }
}

/// `g_v(t) = arctan(sin(L t) tan ‖v‖)` on `0 ≤ t ≤ π/L`.
pub fn g_v(lc: f64, norm_v: f64, t: f64) -> Result<f64> {
    if lc < PI - 1e-9 {
        return Err(Error::Domain(format!("geodesic length {lc} is below pi")));
    }
    if norm_v.abs() >= FRAC_PI_2 {
        return Err(Error::Domain(format!("|v| = {norm_v} must be below pi/2")));
    }
    if !(-1e-12..=PI / lc + 1e-12).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, pi/L] = [0, {}]", PI / lc)));
    }
    Ok(((lc * t).sin() * norm_v.tan()).atan())
}

/// `g_{v,u}(t) = arctan(sin(L t) tan ‖v‖ / sin(L u / 2))` for
/// `π/L ≤ u < 2π/L` and `0 ≤ t ≤ u/2`.
pub fn g_vu(lc: f64, norm_v: f64, u: f64, t: f64) -> Result<f64> {
    if lc < PI - 1e-9 {
        return Err(Error::Domain(format!("geodesic length {lc} is below pi")));
    }
    if norm_v.abs() >= FRAC_PI_2 {
        return Err(Error::Domain(format!("|v| = {norm_v} must be below pi/2")));
    }
    if !(u >= PI / lc - 1e-12 && u < 2.0 * PI / lc) {
        return Err(Error::Domain(format!(
            "u = {u} outside [pi/L, 2 pi/L) = [{}, {})",
            PI / lc,
            2.0 * PI / lc
        )));
    }
    if !(-1e-12..=0.5 * u + 1e-12).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, u/2]")));
    }
    Ok(((lc * t).sin() * norm_v.tan() / (0.5 * lc * u).sin()).atan())
}

/// Length of the great-circle arc `L(u, v) = arccos(cos(L u/2) cos ‖v‖)`.
pub fn arc_length_luv(lc: f64, u: f64, norm_v: f64) -> f64 {
    ((0.5 * lc * u).cos() * norm_v.cos()).clamp(-1.0, 1.0).acos()
}

/// `∂²L(u, v)/∂v²` at `v = 0`: `cos(L u/2) / sin(L u/2)` on `π/L < u < 2π/L`.
pub fn hessian_sign_check(lc: f64, u: f64) -> Result<f64> {
    if !(u > PI / lc && u < 2.0 * PI / lc) {
        return Err(Error::Domain(format!("u = {u} outside (pi/L, 2 pi/L)")));
    }
    let c = (0.5 * lc * u).cos();
    Ok(c / (1.0 - c * c).sqrt())
}

/// Central second difference of [`arc_length_luv`] in `‖v‖` at 0.
pub fn hessian_finite_difference(lc: f64, u: f64, step: f64) -> f64 {
    (arc_length_luv(lc, u, step) - 2.0 * arc_length_luv(lc, u, 0.0) + arc_length_luv(lc, u, -step)) / (step * step)
}

#[derive(Clone, Copy, Debug)]
pub struct FcOptions {
    pub members: usize,
    pub segments: usize,
    /// Shortening steps applied after the push-off.
    pub flow_steps: usize,
    /// Focal radius to check `rho` against; estimated when absent.
    pub focal_radius: Option<f64>,
}

impl Default for FcOptions {
    fn default() -> Self {
        Self {
            members: INTERVAL_MEMBERS,
            segments: pathspace::LOOP_SEGMENTS,
            flow_steps: 1,
            focal_radius: None,
        }
    }
}

/// Unit normal `n × ċ` along a geodesic at arclength `s`.
fn side_normal(profile: &WarpProfile, c: &GeodesicPath, s: f64) -> (SurfacePoint, Vec3) {
    let p = c.point_at(profile, s);
    let v = c.velocity_at(profile, s);
    (p, profile.normal(&p).cross(&v).normalize())
}

/// Disc family pushed off a geodesic `c` with `L(c) ≥ π`, indexed by
/// `v ∈ [−ρ, ρ]`. On the first `π/L` of the parameter each member runs
/// along `exp(g_v(t) V)` with `V` the signed unit normal, reparametrized
/// by arclength there; afterwards it follows `c`.
pub fn build_fc(profile: &WarpProfile, c: &GeodesicPath, rho: f64, opts: FcOptions) -> Result<SweepOut> {
    let lc = c.length;
    if lc < PI - 1e-9 {
        return Err(Error::Domain(format!("geodesic length {lc} is below pi")));
    }
    let focal = match opts.focal_radius {
        Some(r) => r,
        None => geodesic::focal_radius(profile, 16)?,
    };
    if !(rho > 0.0 && rho <= focal) {
        return Err(Error::Domain(format!("rho = {rho} must lie in (0, focal radius = {focal:.6}]")));
    }
    if opts.members < 3 || opts.members.is_multiple_of(2) {
        return Err(Error::Domain(format!("member count {} must be odd and at least 3", opts.members)));
    }
    let n = opts.segments;
    let closed = c.start.chord(&c.end().point) < 1e-9 * profile.scale();
    let boundary = if closed { Boundary::BasedLoop } else { Boundary::FixedEndpoints };
    let base: Vec<SurfacePoint> = (0..=n).map(|i| c.point_at(profile, lc * i as f64 / n as f64)).collect();

    let tau_star = PI / lc;
    let moved = (0..=n).take_while(|&i| (i as f64 / n as f64) < tau_star).count();
    let step = geodesic::default_step(profile);
    // Normal geodesics on both sides at every moved grid point.
    let fans: Vec<(GeodesicPath, GeodesicPath)> = (0..moved)
        .into_par_iter()
        .map(|i| {
            let (p, e) = side_normal(profile, c, lc * i as f64 / n as f64);
            let plus = geodesic::shoot_with_step(profile, &p, &e, rho, Some(step))?;
            let minus = geodesic::shoot_with_step(profile, &p, &(-e), rho, Some(step))?;
            Ok((plus, minus))
        })
        .collect::<Result<_>>()?;
    let end_moved = c.point_at(profile, PI);

    let m = opts.members;
    let half = (m - 1) as f64;
    let index_values: Vec<f64> = (0..m).map(|j| rho * (2.0 * j as f64 - half) / half).collect();
    let members: Vec<DiscreteCurve> = index_values
        .par_iter()
        .map(|&v| {
            let mut points = base.clone();
            if v != 0.0 {
                let mut pushed: Vec<SurfacePoint> = fans
                    .iter()
                    .enumerate()
                    .map(|(i, (plus, minus))| {
                        let g = ((lc * i as f64 / n as f64).sin() * v.abs().tan()).atan();
                        if v > 0.0 {
                            plus.point_at(profile, g)
                        } else {
                            minus.point_at(profile, g)
                        }
                    })
                    .collect();
                pushed.push(end_moved);
                let arc = DiscreteCurve::from_points(pushed, Boundary::FixedEndpoints);
                let seg: Vec<f64> = arc
                    .points
                    .windows(2)
                    .map(|w| pathspace::segment_length(profile, &w[0], &w[1]))
                    .collect();
                let total: f64 = seg.iter().sum();
                // The last moved segment ends at the junction, off the grid.
                let params: Vec<f64> = (0..=moved)
                    .map(|i| if i < moved { i as f64 / n as f64 } else { tau_star })
                    .collect();
                let mut j = 0;
                let mut acc = 0.0;
                for (i, point) in points.iter_mut().enumerate().take(moved).skip(1) {
                    let target = total * params[i] / tau_star;
                    while j < seg.len() - 1 && acc + seg[j] < target {
                        acc += seg[j];
                        j += 1;
                    }
                    let w = if seg[j] > 0.0 { ((target - acc) / seg[j]).clamp(0.0, 1.0) } else { 0.0 };
                    *point = arc.point_at_param(profile, (j as f64 + w) / seg.len() as f64);
                }
            }
            let mut curve = DiscreteCurve::from_points(points, boundary);
            for _ in 0..opts.flow_steps {
                pathspace::shorten_in_place(profile, &mut curve);
            }
            curve
        })
        .collect();
    let kind = if closed { SweepKind::Based } else { SweepKind::Path };
    SweepOut::new(
        profile,
        members,
        index_values,
        IndexSpace::Interval { lo: -rho, hi: rho },
        kind,
        vec![0, m - 1],
    )
}

/// Chart basis at `a` on the unit sphere: colatitude and azimuth directions.
fn chart_basis(a: &Vec3, x: f64) -> (Vec3, Vec3) {
    let u = (a.x * a.x + a.y * a.y).sqrt().atan2(a.z);
    let (su, cu) = u.sin_cos();
    let (sx, cx) = x.sin_cos();
    (Vec3::new(cu * cx, cu * sx, -su), Vec3::new(-sx, cx, 0.0))
}

/// Angle at `p` (from the meridian direction, chart sphere) of the great
/// circle through `p` and `q`, or `None` when `q` is `±p`.
pub fn great_circle_angle(profile: &WarpProfile, p: &SurfacePoint, q: &SurfacePoint) -> Option<f64> {
    let a = profile.to_unit_sphere(p);
    let b = profile.to_unit_sphere(q);
    let w = b - a * a.dot(&b);
    if w.norm() < 1e-6 {
        return None;
    }
    let (e_mer, e_az) = chart_basis(&a, p.x);
    Some(w.dot(&e_az).atan2(w.dot(&e_mer)))
}

/// Based sweep of loops through `p`: member `v` runs the chart great circle
/// from `p` to its antipode in direction `v`, then returns along the fixed
/// half circle opposite `w₁`. Only member `w₁` is a smooth great circle.
pub fn build_gamma_sweep(profile: &WarpProfile, p: &SurfacePoint, w1_angle: f64, members: usize, segments: usize) -> Result<SweepOut> {
    if segments < 4 || segments % 2 == 1 {
        return Err(Error::Domain(format!("segment count {segments} must be even and at least 4")));
    }
    let a = profile.to_unit_sphere(p);
    let (e_mer, e_az) = chart_basis(&a, p.x);
    let dir = |phi: f64| e_mer * phi.cos() + e_az * phi.sin();
    let w1 = dir(w1_angle);
    let half = segments / 2;
    let antipode = profile.from_unit_sphere(&(-a));
    let back: Vec<SurfacePoint> = (1..half)
        .map(|i| {
            let s = PI - PI * i as f64 / half as f64;
            profile.from_unit_sphere(&(a * s.cos() - w1 * s.sin()))
        })
        .collect();
    let index_values: Vec<f64> = (0..members).map(|j| w1_angle + 2.0 * PI * j as f64 / members as f64).collect();
    let curves = index_values
        .par_iter()
        .map(|&phi| {
            let v = dir(phi);
            let mut pts = Vec::with_capacity(segments + 1);
            pts.push(*p);
            for i in 1..half {
                let s = PI * i as f64 / half as f64;
                pts.push(profile.from_unit_sphere(&(a * s.cos() + v * s.sin())));
            }
            pts.push(antipode);
            pts.extend_from_slice(&back);
            pts.push(*p);
            DiscreteCurve::from_points(pts, Boundary::BasedLoop)
        })
        .collect();
    SweepOut::new(profile, curves, index_values, IndexSpace::Circle, SweepKind::Based, Vec::new())
}

/// Free-loop sweep by parallels `t = t_j`, from pole to pole.
pub fn build_parallel_sweep(profile: &WarpProfile, members: usize, segments: usize) -> Result<SweepOut> {
    if members < 3 {
        return Err(Error::Domain(format!("member count {members} must be at least 3")));
    }
    let len = profile.meridian_length();
    let index_values: Vec<f64> = (0..members).map(|j| len * j as f64 / (members - 1) as f64).collect();
    let curves = index_values
        .iter()
        .map(|&t| {
            let pts = (0..=segments)
                .map(|i| profile.point(t, 2.0 * PI * i as f64 / segments as f64))
                .collect();
            DiscreteCurve::from_points(pts, Boundary::FreeLoop)
        })
        .collect();
    SweepOut::new(
        profile,
        curves,
        index_values,
        IndexSpace::Interval { lo: 0.0, hi: len },
        SweepKind::Free,
        vec![0, members - 1],
    )
}

/// Based sweep at a pole by the closed meridian loops leaving at angle `x`.
pub fn build_meridian_sweep(profile: &WarpProfile, p: &SurfacePoint, members: usize, segments: usize) -> Result<SweepOut> {
    let len = profile.meridian_length();
    let flip = match p.pole {
        PoleFlag::North => false,
        PoleFlag::South => true,
        PoleFlag::None => {
            return Err(Error::Domain(format!(
                "meridian sweep needs a pole base point, got t = {:.6}",
                p.t
            )))
        }
    };
    if segments < 4 || segments % 2 == 1 {
        return Err(Error::Domain(format!("segment count {segments} must be even and at least 4")));
    }
    let half = segments / 2;
    let index_values: Vec<f64> = (0..members).map(|j| 2.0 * PI * j as f64 / members as f64).collect();
    let curves = index_values
        .iter()
        .map(|&x| {
            let mut pts = Vec::with_capacity(segments + 1);
            pts.push(*p);
            for i in 1..segments {
                let (s, az) = if i <= half {
                    (len * i as f64 / half as f64, x)
                } else {
                    (len * (segments - i) as f64 / half as f64, x + PI)
                };
                let t = if flip { len - s } else { s };
                pts.push(profile.point(t, az));
            }
            pts.push(*p);
            DiscreteCurve::from_points(pts, Boundary::BasedLoop)
        })
        .collect();
    SweepOut::new(profile, curves, index_values, IndexSpace::Circle, SweepKind::Based, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_v_values() {
        assert!((g_v(PI, 0.4, 0.5).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(g_v(5.0, 0.0, 0.3).unwrap(), 0.0);
        assert!((g_v(2.0 * PI, 0.3, 0.125).unwrap() - 0.215342).abs() < 1e-5);
        assert!(g_v(2.0 * PI, 0.3, 0.6).is_err());
    }

    #[test]
    fn g_vu_values() {
        assert!((g_vu(2.0 * PI, 0.3, 0.75, 0.2).unwrap() - 0.394271).abs() < 1e-5);
        assert_eq!(g_vu(2.0 * PI, 0.3, 0.5, 0.2).unwrap(), g_v(2.0 * PI, 0.3, 0.2).unwrap());
        assert_eq!(g_vu(4.0, 0.0, 1.0, 0.3).unwrap(), 0.0);
        assert!(g_vu(2.0 * PI, 0.3, 1.0, 0.2).is_err());
        assert!(g_vu(2.0 * PI, 0.3, 0.4, 0.2).is_err());
    }

    #[test]
    fn arc_length_values() {
        assert!((arc_length_luv(2.0 * PI, 0.5, 0.7) - FRAC_PI_2).abs() < 1e-15);
        assert!((arc_length_luv(2.0 * PI, 1.0 / 3.0, 0.3) - 1.072798).abs() < 1e-5);
        assert!((arc_length_luv(5.0, 0.9, 0.0) - 2.25).abs() < 1e-14);
    }

    #[test]
    fn hessian_values() {
        let lc = 2.0 * PI;
        let u = 2.0 / 3.0;
        assert!((hessian_sign_check(lc, u).unwrap() + 0.577350).abs() < 1e-6);
        assert!(hessian_sign_check(lc, 0.5 + 1e-9).unwrap() < 0.0);
        assert!(hessian_sign_check(lc, 0.5 + 1e-9).unwrap() > -1e-8);
        let fd = hessian_finite_difference(lc, 0.75, 1e-3);
        assert!((fd - hessian_sign_check(lc, 0.75).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn parallel_sweep_round() {
        let g = WarpProfile::round();
        let s = build_parallel_sweep(&g, INTERVAL_MEMBERS, 512).unwrap();
        assert!((s.level - 2.0 * PI * PI).abs() < 1e-3);
        assert_eq!(s.energies[0].energy, 0.0);
    }

    #[test]
    fn meridian_sweep_needs_pole() {
        let g = WarpProfile::round();
        let p = g.point(1.0, 0.0);
        assert!(build_meridian_sweep(&g, &p, 128, 512).is_err());
    }

    #[test]
    fn meridian_members_have_length_two_pi() {
        let g = WarpProfile::family(0.5).unwrap();
        let s = build_meridian_sweep(&g, &g.south_pole(), 16, 512).unwrap_err();
        // 16 members are too far apart for the continuity bound.
        assert!(matches!(s, Error::Continuity { .. }));
        let s = build_meridian_sweep(&g, &g.south_pole(), CIRCLE_MEMBERS, 512).unwrap();
        for e in &s.energies {
            assert!((e.length - 2.0 * PI).abs() < 1e-4, "{}", e.length);
        }
    }

    #[test]
    fn gamma_sweep_round_energy() {
        let g = WarpProfile::round();
        let p = g.point(1.0, 0.4);
        let s = build_gamma_sweep(&g, &p, 0.3, CIRCLE_MEMBERS, 512).unwrap();
        for e in &s.energies {
            assert!((e.energy - 2.0 * PI * PI).abs() < 1e-3);
        }
        assert!(s.members.iter().all(|m| m.start().chord(&p) == 0.0 && m.end().chord(&p) == 0.0));
    }
}
