//! Discrete path and loop spaces.
//!
//! A curve is a polyline of `N + 1` surface points at the uniform parameters
//! `i / N`. Segment lengths are chords corrected for the normal curvature of
//! the surface in the chord direction, and the energy is
//! `E = (N/2) Σ dᵢ²`. The negative gradient flow of `E` is replaced by
//! Birkhoff midpoint shortening: even-index then odd-index points move to
//! the midpoint of their neighbours. A move is kept only if it does not
//! raise the two adjacent segment terms, so the energy never increases.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic;
use crate::metric::{SurfacePoint, Vec3, WarpProfile};

/// Default point count for loops.
pub const LOOP_SEGMENTS: usize = 512;
/// Default point count for paths.
pub const PATH_SEGMENTS: usize = 256;
/// Displacement below which a curve is treated as stationary.
pub const TOL_RES: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Element of `Ω_pq`: both endpoints held fixed.
    FixedEndpoints,
    /// Element of `Ω_p`: closed, the base point held fixed.
    BasedLoop,
    /// Element of `Λ`: closed, every point free.
    FreeLoop,
}

#[derive(Clone, Debug)]
pub struct DiscreteCurve {
    pub points: Vec<SurfacePoint>,
    pub boundary: Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyLevel {
    pub energy: f64,
    pub length: f64,
}

impl DiscreteCurve {
    /// Build a curve; for loops the last point is set equal to the first.
    pub fn from_points(mut points: Vec<SurfacePoint>, boundary: Boundary) -> Self {
        assert!(points.len() >= 2, "a curve needs at least two points");
        if boundary != Boundary::FixedEndpoints {
            let first = points[0];
            *points.last_mut().expect("non-empty") = first;
        }
        Self { points, boundary }
    }

    /// Constant curve at `p` with `n` segments.
    pub fn point_curve(p: SurfacePoint, n: usize, boundary: Boundary) -> Self {
        Self::from_points(vec![p; n.max(1) + 1], boundary)
    }

    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn start(&self) -> &SurfacePoint {
        &self.points[0]
    }

    pub fn end(&self) -> &SurfacePoint {
        self.points.last().expect("non-empty")
    }

    pub fn max_chord(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].chord(&w[1])).fold(0.0, f64::max)
    }

    /// Largest pointwise ambient distance to another curve with the same
    /// point count.
    pub fn pointwise_distance(&self, other: &DiscreteCurve) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| a.chord(b))
            .fold(0.0, f64::max)
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self::from_points(points, self.boundary)
    }

    /// Point at parameter `tau ∈ [0, 1]`, interpolated along the segment
    /// geodesic.
    pub fn point_at_param(&self, profile: &WarpProfile, tau: f64) -> SurfacePoint {
        let n = self.segments();
        let x = tau.clamp(0.0, 1.0) * n as f64;
        let j = (x.floor() as usize).min(n - 1);
        segment_point(profile, &self.points[j], &self.points[j + 1], x - j as f64)
    }

    /// Resample to `n` segments at uniform parameter.
    pub fn resample_uniform(&self, profile: &WarpProfile, n: usize) -> Self {
        let points = (0..=n).map(|i| self.point_at_param(profile, i as f64 / n as f64)).collect();
        Self::from_points(points, self.boundary)
    }

    /// Resample to `n` segments proportional to arclength.
    pub fn resample_arclength(&self, profile: &WarpProfile, n: usize) -> Self {
        let seg: Vec<f64> = self.points.windows(2).map(|w| segment_length(profile, &w[0], &w[1])).collect();
        let total: f64 = seg.iter().sum();
        if total <= 0.0 {
            return Self::point_curve(self.points[0], n, self.boundary);
        }
        let mut points = Vec::with_capacity(n + 1);
        points.push(self.points[0]);
        let mut j = 0;
        let mut acc = 0.0;
        for i in 1..n {
            let target = total * i as f64 / n as f64;
            while j < seg.len() - 1 && acc + seg[j] < target {
                acc += seg[j];
                j += 1;
            }
            let w = if seg[j] > 0.0 { ((target - acc) / seg[j]).clamp(0.0, 1.0) } else { 0.0 };
            points.push(segment_point(profile, &self.points[j], &self.points[j + 1], w));
        }
        points.push(*self.end());
        Self::from_points(points, self.boundary)
    }

    /// Insert the midpoint of every segment.
    pub fn subdivided(&self, profile: &WarpProfile) -> Self {
        let mut points = Vec::with_capacity(2 * self.points.len() - 1);
        for w in self.points.windows(2) {
            points.push(w[0]);
            points.push(midpoint(profile, &w[0], &w[1], &w[0]));
        }
        points.push(*self.end());
        Self::from_points(points, self.boundary)
    }
}

/// Projected ambient midpoint (valid under the mesh bound).
pub fn midpoint(profile: &WarpProfile, a: &SurfacePoint, b: &SurfacePoint, hint: &SurfacePoint) -> SurfacePoint {
    profile.project(&((a.ambient + b.ambient) * 0.5), Some(hint))
}

/// Squared normal curvature of the surface along the chord `a → b`,
/// averaged over both ends.
fn chord_curvature_sq(profile: &WarpProfile, a: &SurfacePoint, b: &SurfacePoint) -> f64 {
    if profile.is_round() {
        return 1.0 / (profile.scale() * profile.scale());
    }
    let d = b.ambient - a.ambient;
    let kn = |p: &SurfacePoint| {
        let n = profile.normal(p);
        let tan = d - n * d.dot(&n);
        let len2 = tan.norm_squared();
        if len2 == 0.0 {
            return profile.gauss_curvature(p.t);
        }
        let k = profile.second_fundamental(p, &tan) / len2;
        k * k
    };
    0.5 * (kn(a) + kn(b))
}

/// Geodesic length of a short segment: `chord (1 + chord² κₙ² / 24)`.
pub fn segment_length(profile: &WarpProfile, a: &SurfacePoint, b: &SurfacePoint) -> f64 {
    let c = a.chord(b);
    if c == 0.0 {
        return 0.0;
    }
    c * (1.0 + c * c * chord_curvature_sq(profile, a, b) / 24.0)
}

/// Point at fraction `w` of the geodesic segment `a → b`.
fn segment_point(profile: &WarpProfile, a: &SurfacePoint, b: &SurfacePoint, w: f64) -> SurfacePoint {
    if w <= 0.0 {
        return *a;
    }
    if w >= 1.0 {
        return *b;
    }
    let c = a.chord(b);
    if c == 0.0 {
        return *a;
    }
    // Locally the segment is a circular arc of curvature κ; convert the arc
    // fraction into the chord fraction of its projection.
    let phi = segment_length(profile, a, b) * chord_curvature_sq(profile, a, b).sqrt();
    let lam = if phi > 1e-8 {
        let s1 = (w * phi).sin();
        let s0 = ((1.0 - w) * phi).sin();
        s1 / (s0 + s1)
    } else {
        w
    };
    profile.project(&(a.ambient * (1.0 - lam) + b.ambient * lam), Some(if lam < 0.5 { a } else { b }))
}

pub fn length(profile: &WarpProfile, curve: &DiscreteCurve) -> f64 {
    curve.points.windows(2).map(|w| segment_length(profile, &w[0], &w[1])).sum()
}

/// Energy and length without the mesh check.
pub fn energy_unchecked(profile: &WarpProfile, curve: &DiscreteCurve) -> EnergyLevel {
    let n = curve.segments() as f64;
    let (mut sum_sq, mut len) = (0.0, 0.0);
    for w in curve.points.windows(2) {
        let d = segment_length(profile, &w[0], &w[1]);
        sum_sq += d * d;
        len += d;
    }
    EnergyLevel {
        energy: 0.5 * n * sum_sq,
        length: len,
    }
}

/// Mesh bound `min(h_max, inj/2)` with `h_max = 1e-2 · max(1, L)`.
pub fn mesh_bound(profile: &WarpProfile, length: f64) -> f64 {
    let h_max = 1e-2 * length.max(1.0);
    h_max.min(0.5 * geodesic::injectivity_bound(profile))
}

/// Energy `E = (N/2) Σ dᵢ²` and length `Σ dᵢ`.
pub fn energy(profile: &WarpProfile, curve: &DiscreteCurve) -> Result<EnergyLevel> {
    let level = energy_unchecked(profile, curve);
    let chord = curve.max_chord();
    let bound = mesh_bound(profile, level.length);
    if chord >= bound {
        return Err(Error::Mesh { chord, bound });
    }
    Ok(level)
}

fn movable(boundary: Boundary, n: usize) -> std::ops::Range<usize> {
    match boundary {
        Boundary::FreeLoop => 0..n,
        _ => 1..n,
    }
}

fn neighbours(boundary: Boundary, n: usize, i: usize) -> (usize, usize) {
    match boundary {
        Boundary::FreeLoop => ((i + n - 1) % n, (i + 1) % n),
        _ => (i - 1, i + 1),
    }
}

/// One Birkhoff step (even half-sweep, then odd). Returns the maximal
/// point displacement.
pub fn shorten_in_place(profile: &WarpProfile, curve: &mut DiscreteCurve) -> f64 {
    shorten_relaxed(profile, curve, 1.0)
}

/// Over-relaxation factor `2 / (1 + sin(π/N))` for red-black sweeps.
pub fn relaxation_factor(segments: usize) -> f64 {
    2.0 / (1.0 + (PI / segments.max(2) as f64).sin())
}

/// Birkhoff step with over-relaxation. Each point tries `p + ω (m − p)`,
/// then the midpoint `m`, keeping the first that does not raise the
/// local energy; otherwise it stays put.
pub fn shorten_relaxed(profile: &WarpProfile, curve: &mut DiscreteCurve, omega: f64) -> f64 {
    let n = curve.segments();
    let boundary = curve.boundary;
    let mut disp: f64 = 0.0;
    let local = |a: &SurfacePoint, m: &SurfacePoint, b: &SurfacePoint| {
        let (da, db) = (segment_length(profile, a, m), segment_length(profile, m, b));
        da * da + db * db
    };
    for parity in 0..2 {
        for i in movable(boundary, n).filter(|i| i % 2 == parity) {
            let (a, b) = neighbours(boundary, n, i);
            let (pa, pb) = (curve.points[a], curve.points[b]);
            let old = curve.points[i];
            let mid = midpoint(profile, &pa, &pb, &old);
            let e_old = local(&pa, &old, &pb);
            let mut accepted = None;
            if omega != 1.0 {
                let over = profile.project(&(old.ambient + (mid.ambient - old.ambient) * omega), Some(&mid));
                if local(&pa, &over, &pb) <= e_old {
                    accepted = Some(over);
                }
            }
            if accepted.is_none() && local(&pa, &mid, &pb) <= e_old {
                accepted = Some(mid);
            }
            if let Some(new) = accepted {
                disp = disp.max(old.chord(&new));
                curve.points[i] = new;
            }
        }
    }
    if boundary == Boundary::FreeLoop {
        curve.points[n] = curve.points[0];
    }
    disp
}

/// One shortening step applied to a copy.
pub fn shorten_step(profile: &WarpProfile, curve: &DiscreteCurve) -> (DiscreteCurve, f64) {
    let mut out = curve.clone();
    let disp = shorten_in_place(profile, &mut out);
    (out, disp)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowTraceRow {
    pub step: usize,
    pub energy: f64,
    pub length: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub curve: DiscreteCurve,
    pub steps: usize,
    pub converged: bool,
    pub residual: f64,
    pub trace: Vec<FlowTraceRow>,
}

/// Shorten until the displacement drops below `tol_res` or `max_steps`
/// is reached.
pub fn flow(profile: &WarpProfile, curve: &DiscreteCurve, max_steps: usize, tol_res: f64) -> FlowResult {
    let mut c = curve.clone();
    let e0 = energy_unchecked(profile, &c);
    let mut trace = vec![FlowTraceRow {
        step: 0,
        energy: e0.energy,
        length: e0.length,
        residual: f64::NAN,
    }];
    let mut residual = f64::INFINITY;
    let mut steps = 0;
    while steps < max_steps {
        residual = shorten_in_place(profile, &mut c);
        steps += 1;
        let e = energy_unchecked(profile, &c);
        trace.push(FlowTraceRow {
            step: steps,
            energy: e.energy,
            length: e.length,
            residual,
        });
        if residual < tol_res {
            break;
        }
    }
    FlowResult {
        curve: c,
        steps,
        converged: residual < tol_res,
        residual,
        trace,
    }
}

/// Relax a polyline to a discrete geodesic on successively refined meshes,
/// ending with at least `n_final` segments. Each level stops once no point
/// moves by more than `tol`.
pub fn relax_multilevel(profile: &WarpProfile, mut curve: DiscreteCurve, n_final: usize, tol: f64) -> DiscreteCurve {
    loop {
        let n = curve.segments();
        let omega = relaxation_factor(n);
        for _ in 0..200 * n + 200 {
            if shorten_relaxed(profile, &mut curve, omega) < tol {
                break;
            }
        }
        if n >= n_final {
            return curve;
        }
        curve = curve.subdivided(profile);
    }
}

/// Concatenation `Ω_pq → Ω_pr`: run `σ` on `[0, 1 − d]` and the minimal
/// geodesic from `q` to `r` on `[1 − d, 1]`, with `d = d(q, r)`.
pub fn concat_map(profile: &WarpProfile, sigma: &DiscreteCurve, r: &SurfacePoint) -> Result<DiscreteCurve> {
    let q = *sigma.end();
    if q.chord(r) < 1e-14 {
        return Ok(sigma.clone());
    }
    let (d, link) = geodesic::shortest_path_with(profile, &q, r, 1);
    let bound = (0.5 * geodesic::injectivity_bound(profile)).min(0.5);
    if d > bound + 1e-9 {
        return Err(Error::Domain(format!(
            "d(q, r) = {d:.6} exceeds min(inj/2, 1/2) = {bound:.6}"
        )));
    }
    let link = link.resample_arclength(profile, PATH_SEGMENTS);
    let n = sigma.segments();
    let split = 1.0 - d;
    let points = (0..=n)
        .map(|i| {
            let tau = i as f64 / n as f64;
            if tau <= split {
                sigma.point_at_param(profile, tau / split)
            } else {
                link.point_at_param(profile, (tau - split) / d)
            }
        })
        .collect();
    Ok(DiscreteCurve::from_points(points, Boundary::FixedEndpoints))
}

/// Closed form of the concatenation energy: `E(σ)/(1 − d) + d/2`.
pub fn concat_energy_identity(energy: f64, d: f64) -> f64 {
    energy / (1.0 - d) + 0.5 * d
}

/// Tangent vector of a polyline at an interior or end point (forward chord
/// projected to the tangent plane).
pub fn tangent_direction(profile: &WarpProfile, curve: &DiscreteCurve, i: usize) -> Vec3 {
    let n = curve.segments();
    let (a, b) = if i < n { (i, i + 1) } else { (i - 1, i) };
    let p = &curve.points[i];
    let d = curve.points[b].ambient - curve.points[a].ambient;
    let nrm = profile.normal(p);
    (d - nrm * d.dot(&nrm)).normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn equator(profile: &WarpProfile, n: usize) -> DiscreteCurve {
        let t = 0.5 * profile.meridian_length();
        let pts = (0..=n).map(|i| profile.point(t, 2.0 * PI * i as f64 / n as f64)).collect();
        DiscreteCurve::from_points(pts, Boundary::FreeLoop)
    }

    #[test]
    fn great_circle_energy() {
        let g = WarpProfile::round();
        let e = energy(&g, &equator(&g, 512)).unwrap();
        assert!((e.energy - 2.0 * PI * PI).abs() < 1e-3);
        assert!((e.length - 2.0 * PI).abs() < 1e-4);
    }

    #[test]
    fn point_curve_energy_is_zero() {
        let g = WarpProfile::round();
        let c = DiscreteCurve::point_curve(g.point(1.0, 2.0), 64, Boundary::FreeLoop);
        let e = energy(&g, &c).unwrap();
        assert_eq!(e.energy, 0.0);
        assert_eq!(e.length, 0.0);
    }

    #[test]
    fn half_great_circle_energy() {
        let g = WarpProfile::round();
        let pts = (0..=512).map(|i| g.point(PI * i as f64 / 512.0, 0.3)).collect();
        let c = DiscreteCurve::from_points(pts, Boundary::FixedEndpoints);
        let e = energy(&g, &c).unwrap();
        assert!((e.energy - 0.5 * PI * PI).abs() < 1e-3);
    }

    #[test]
    fn coarse_mesh_is_rejected() {
        let g = WarpProfile::round();
        assert!(matches!(energy(&g, &equator(&g, 16)), Err(Error::Mesh { .. })));
    }

    #[test]
    fn equator_is_fixed() {
        let g = WarpProfile::round();
        let (_, disp) = shorten_step(&g, &equator(&g, 512));
        assert!(disp < 1e-9);
    }

    #[test]
    fn concat_identity_values() {
        assert!((concat_energy_identity(2.0 * PI * PI, 0.1) - 21.98245).abs() < 2e-3);
        assert!((concat_energy_identity(2.0, 0.5) - 4.25).abs() < 1e-12);
    }

    #[test]
    fn concat_to_same_point_is_identity() {
        let g = WarpProfile::round();
        let pts = (0..=256).map(|i| g.point(FRAC_PI_2 * i as f64 / 256.0, 0.3)).collect();
        let c = DiscreteCurve::from_points(pts, Boundary::FixedEndpoints);
        let out = concat_map(&g, &c, c.end()).unwrap();
        assert_eq!(out.pointwise_distance(&c), 0.0);
    }

    #[test]
    fn concat_rejects_far_point() {
        let g = WarpProfile::round();
        let pts = (0..=256).map(|i| g.point(FRAC_PI_2 * i as f64 / 256.0, 0.3)).collect();
        let c = DiscreteCurve::from_points(pts, Boundary::FixedEndpoints);
        let far = g.point(FRAC_PI_2 + 0.8, 0.3);
        let err = concat_map(&g, &c, &far).unwrap_err();
        assert!(err.to_string().contains("min(inj/2, 1/2)"), "{err}");
    }
}
