//! Min-max estimates of critical lengths.
//!
//! Every member of a sweep-out is shortened in lockstep; the maximal member
//! energy after the flow bounds the critical value of the class the sweep
//! represents from above. Whenever two neighbouring members drift apart
//! by more than the sweep continuity bound, their pointwise midpoint is
//! inserted so the flowed family stays continuous.

use rayon::prelude::*;
use serde::Serialize;

use crate::cycles::{self, IndexSpace, SweepOut, DELTA_SWEEP};
use crate::error::Result;
use crate::geodesic::{self, FarthestPoint};
use crate::metric::{PoleFlag, SurfacePoint, WarpProfile};
use crate::pathspace::{self, DiscreteCurve, TOL_RES};

/// Default level tolerance relative to the initial level.
pub const TOL_LEVEL_REL: f64 = 1e-8;
pub const MAX_ROUNDS: usize = 50_000;
/// Slack for the radius inequality.
pub const TOL_GEOM: f64 = 1e-2;
/// Grid size used to locate the farthest point.
pub const FARTHEST_GRID: usize = 16;
/// Coarsest mesh used by the warm start.
const WARM_START_MIN_SEGMENTS: usize = 32;
/// Cap on member growth by insertion, as a multiple of the initial count.
const MAX_GROWTH: usize = 16;

#[derive(Clone, Copy, Debug)]
pub struct MinimaxOptions {
    /// Absolute level tolerance; `TOL_LEVEL_REL · level₀` when absent.
    pub tol_level: Option<f64>,
    pub max_rounds: usize,
    /// Flow on coarsened members first, then refine back.
    pub warm_start: bool,
}

impl Default for MinimaxOptions {
    fn default() -> Self {
        Self {
            tol_level: None,
            max_rounds: MAX_ROUNDS,
            warm_start: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimaxResult {
    pub sweep: String,
    pub initial_level: f64,
    /// Upper-bound estimate of the critical value.
    pub level: f64,
    pub crit_length: f64,
    pub argmax_member: usize,
    #[serde(skip)]
    pub critical_curve: DiscreteCurve,
    pub residual: f64,
    pub converged: bool,
    pub rounds: usize,
    pub warm_start_rounds: usize,
    /// More than a tenth of the non-trivial members are stationary.
    pub hanging_family: bool,
    pub members_final: usize,
    /// Member insertion hit its cap, so continuity is no longer enforced.
    pub torn: bool,
    pub stationary_members: usize,
    /// `(round, level)` on the final mesh.
    pub history: Vec<(usize, f64)>,
}

fn max_energy(profile: &WarpProfile, members: &[DiscreteCurve]) -> (usize, f64) {
    let energies: Vec<f64> = members
        .par_iter()
        .map(|m| pathspace::energy_unchecked(profile, m).energy)
        .collect();
    energies
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, e)| if e > best.1 { (i, e) } else { best })
}

/// One shortening step on every member; returns the new level and the
/// per-member displacement.
fn round(profile: &WarpProfile, members: &mut [DiscreteCurve]) -> (f64, Vec<f64>) {
    let out: Vec<(f64, f64)> = members
        .par_iter_mut()
        .map(|m| {
            let d = pathspace::shorten_relaxed(profile, m, pathspace::relaxation_factor(m.segments()));
            (pathspace::energy_unchecked(profile, m).energy, d)
        })
        .collect();
    let level = out.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
    (level, out.into_iter().map(|o| o.1).collect())
}

fn coarsen(curve: &DiscreteCurve, stride: usize) -> DiscreteCurve {
    let points = curve.points.iter().step_by(stride).copied().collect();
    DiscreteCurve::from_points(points, curve.boundary)
}

/// Pointwise projected midpoint of two curves with equal point counts.
fn mid_curve(profile: &WarpProfile, a: &DiscreteCurve, b: &DiscreteCurve) -> DiscreteCurve {
    let points = a
        .points
        .iter()
        .zip(&b.points)
        .map(|(p, q)| pathspace::midpoint(profile, p, q, p))
        .collect();
    DiscreteCurve::from_points(points, a.boundary)
}

/// Insert midpoint members between neighbours further apart than
/// `DELTA_SWEEP` and drop members whose neighbours are already close.
/// Returns false once the member cap is reached.
fn restore_continuity(profile: &WarpProfile, members: &mut Vec<DiscreteCurve>, circle: bool, cap: usize) -> bool {
    loop {
        let m = members.len();
        let pairs = if circle { m } else { m - 1 };
        let gaps: Vec<usize> = (0..pairs)
            .into_par_iter()
            .filter(|&i| members[i].pointwise_distance(&members[(i + 1) % m]) >= DELTA_SWEEP)
            .collect();
        if gaps.is_empty() {
            break;
        }
        if m + gaps.len() > cap {
            return false;
        }
        let inserts: Vec<DiscreteCurve> = gaps
            .par_iter()
            .map(|&i| mid_curve(profile, &members[i], &members[(i + 1) % m]))
            .collect();
        for (&i, c) in gaps.iter().zip(inserts).rev() {
            members.insert(i + 1, c);
        }
    }
    // Interval endpoints stay; interior members go when redundant.
    let mut i = usize::from(!circle);
    loop {
        let m = members.len();
        let end = if circle { m } else { m - 1 };
        if i >= end || m <= 3 {
            break;
        }
        let (prev, next) = ((i + m - 1) % m, (i + 1) % m);
        if members[prev].pointwise_distance(&members[next]) < 0.5 * DELTA_SWEEP {
            members.remove(i);
        } else {
            i += 1;
        }
    }
    true
}

/// Rounds until the level drops by less than `tol` or `budget` runs out.
fn flow_level(
    profile: &WarpProfile,
    members: &mut Vec<DiscreteCurve>,
    circle: bool,
    cap: usize,
    tol: f64,
    budget: usize,
) -> (usize, bool) {
    let mut level = max_energy(profile, members).1;
    for r in 1..=budget {
        let (next, _) = round(profile, members);
        let intact = restore_continuity(profile, members, circle, cap);
        let drop = level - next;
        level = next;
        if drop < tol || !intact {
            return (r, intact);
        }
    }
    (budget, true)
}

/// Flow every member of the sweep and track the maximal energy.
pub fn estimate_critical(profile: &WarpProfile, sweep: &SweepOut, opts: MinimaxOptions) -> Result<MinimaxResult> {
    estimate_named(profile, sweep, opts, "custom")
}

fn estimate_named(profile: &WarpProfile, sweep: &SweepOut, opts: MinimaxOptions, name: &str) -> Result<MinimaxResult> {
    let n = sweep.segments();
    let tol = opts.tol_level.unwrap_or(TOL_LEVEL_REL * sweep.level.abs().max(f64::MIN_POSITIVE));
    let mut members = sweep.members.clone();
    let circle = sweep.index_space == IndexSpace::Circle;
    let cap = MAX_GROWTH * members.len();
    let mut warm_rounds = 0;
    let mut intact = true;

    // A sweep whose top member is already stationary needs no warm start.
    let settled = {
        let mut probe = members.clone();
        sweep.level - round(profile, &mut probe).0 < tol
    };
    if opts.warm_start && !settled {
        let inj_half = 0.5 * geodesic::injectivity_bound(profile);
        let mut stride = 1;
        while n.is_multiple_of(2 * stride) && n / (2 * stride) >= WARM_START_MIN_SEGMENTS && stride < 16 {
            stride *= 2;
        }
        while stride > 1 && members.iter().any(|m| coarsen(m, stride).max_chord() >= inj_half) {
            stride /= 2;
        }
        if stride > 1 {
            let mut coarse: Vec<DiscreteCurve> = members.iter().map(|m| coarsen(m, stride)).collect();
            let mut coarse_intact = true;
            while stride > 1 && coarse_intact {
                let budget = opts.max_rounds.saturating_sub(warm_rounds);
                let (r, ok) = flow_level(profile, &mut coarse, circle, cap, tol, budget);
                warm_rounds += r;
                coarse_intact = ok;
                coarse = coarse.par_iter().map(|m| m.subdivided(profile)).collect();
                stride /= 2;
            }
            if coarse_intact && stride == 1 && max_energy(profile, &coarse).1 < sweep.level {
                members = coarse;
                intact = restore_continuity(profile, &mut members, circle, cap);
            }
        }
    }

    let mut level = max_energy(profile, &members).1;
    let mut history = vec![(0, level)];
    let mut converged = false;
    let mut rounds = 0;
    while rounds < opts.max_rounds && intact {
        let (next, _) = round(profile, &mut members);
        rounds += 1;
        let drop = level - next;
        level = next;
        history.push((rounds, level));
        if drop < tol {
            converged = true;
            break;
        }
        intact = restore_continuity(profile, &mut members, circle, cap);
    }

    let (argmax, level) = max_energy(profile, &members);
    let critical_curve = members[argmax].clone();
    let (_, residual) = pathspace::shorten_step(profile, &critical_curve);
    let nontrivial: Vec<usize> = (0..members.len())
        .filter(|&i| pathspace::length(profile, &members[i]) > 1e-9)
        .collect();
    let stationary = nontrivial
        .par_iter()
        .filter(|&&i| pathspace::shorten_step(profile, &members[i]).1 < TOL_RES)
        .count();
    Ok(MinimaxResult {
        sweep: name.to_string(),
        initial_level: sweep.level,
        level,
        crit_length: (2.0 * level).sqrt(),
        argmax_member: argmax,
        critical_curve,
        residual,
        converged,
        rounds,
        warm_start_rounds: warm_rounds,
        hanging_family: 10 * stationary > nontrivial.len(),
        members_final: members.len(),
        torn: !intact,
        stationary_members: stationary,
        history,
    })
}

/// Free-loop critical length from the sweep by parallels.
pub fn crl_estimate(profile: &WarpProfile) -> Result<MinimaxResult> {
    crl_estimate_with(profile, cycles::INTERVAL_MEMBERS, pathspace::LOOP_SEGMENTS)
}

pub fn crl_estimate_with(profile: &WarpProfile, members: usize, segments: usize) -> Result<MinimaxResult> {
    let sweep = cycles::build_parallel_sweep(profile, members, segments)?;
    estimate_named(profile, &sweep, MinimaxOptions::default(), "parallel")
}

/// Based critical length at `p`: the meridian sweep at a pole, otherwise
/// the great-circle sweep whose smooth member passes through the farthest
/// point from `p`.
pub fn crlp_estimate(profile: &WarpProfile, p: &SurfacePoint) -> Result<MinimaxResult> {
    crlp_estimate_with(profile, p, cycles::CIRCLE_MEMBERS, pathspace::LOOP_SEGMENTS)
}

pub fn crlp_estimate_with(profile: &WarpProfile, p: &SurfacePoint, members: usize, segments: usize) -> Result<MinimaxResult> {
    if p.pole != PoleFlag::None {
        return crlp_with(profile, p, None, members, segments);
    }
    let far = geodesic::d_sup(profile, p, FARTHEST_GRID)?;
    crlp_with(profile, p, Some(&far), members, segments)
}

fn crlp_with(
    profile: &WarpProfile,
    p: &SurfacePoint,
    far: Option<&FarthestPoint>,
    members: usize,
    segments: usize,
) -> Result<MinimaxResult> {
    if p.pole != PoleFlag::None {
        let sweep = cycles::build_meridian_sweep(profile, p, members, segments)?;
        return estimate_named(profile, &sweep, MinimaxOptions::default(), "meridian");
    }
    let w1 = far.and_then(|f| cycles::great_circle_angle(profile, p, &f.point)).unwrap_or(0.0);
    let sweep = cycles::build_gamma_sweep(profile, p, w1, members, segments)?;
    estimate_named(profile, &sweep, MinimaxOptions::default(), "gamma")
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RadiusCheck {
    pub crlp: f64,
    pub two_dp: f64,
    pub holds: bool,
}

/// `crl_p ≥ 2 sup_q d(p, q) − TOL_GEOM`.
pub fn radius_bound_check(profile: &WarpProfile, p: &SurfacePoint) -> Result<RadiusCheck> {
    radius_bound_check_with(profile, p, cycles::CIRCLE_MEMBERS, pathspace::LOOP_SEGMENTS)
}

pub fn radius_bound_check_with(
    profile: &WarpProfile,
    p: &SurfacePoint,
    members: usize,
    segments: usize,
) -> Result<RadiusCheck> {
    let far = geodesic::d_sup(profile, p, FARTHEST_GRID)?;
    let est = crlp_with(profile, p, Some(&far), members, segments)?;
    let two_dp = 2.0 * far.distance;
    Ok(RadiusCheck {
        crlp: est.crit_length,
        two_dp,
        holds: est.crit_length >= two_dp - TOL_GEOM,
    })
}
