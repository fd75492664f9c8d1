//! Experiment specs, dispatch and reports.
//!
//! A spec is a TOML file; the dotted form `metric.kind = "family"` and a
//! `[metric]` table are equivalent. Example:
//!
//! ```toml
//! name = "family-crl"
//! experiment = "crl"
//! seed = 7
//! output_dir = "out"
//! metric.kind = "family"
//! metric.r = 0.5
//! params.segments = 512
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycles::{self, FcOptions};
use crate::error::{Error, Result};
use crate::geodesic;
use crate::io::{self, FamilyRow, RauchRow};
use crate::metric::{MorseComparison, SurfacePoint, WarpProfile};
use crate::minimax::{self, MinimaxResult};
use crate::pathspace::{self, Boundary, DiscreteCurve};
use crate::rauch::{self, OffsetFn};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status for a run that finished but did not converge.
pub const EXIT_NON_CONVERGED: i32 = 3;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_OTHER: i32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Crl,
    Crlp,
    RauchSuite,
    Index,
    RadiusCheck,
    MorseCompare,
    FcCycle,
    HomoIdentity,
}

impl Experiment {
    fn params(self) -> &'static [&'static str] {
        match self {
            Experiment::Crl => &["members", "segments"],
            Experiment::Crlp | Experiment::RadiusCheck => &["t", "x", "members", "segments"],
            Experiment::RauchSuite => &["cases", "samples"],
            Experiment::Index => &["cases", "max_length", "focal_geodesics"],
            Experiment::MorseCompare => &["grid"],
            Experiment::FcCycle => &["length", "rho_frac", "members", "segments", "flow_steps", "t", "x", "alpha"],
            Experiment::HomoIdentity => &["cases", "segments"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Round,
    Family,
    UserTrig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub kind: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_coeffs: Option<Vec<f64>>,
    /// Rescale so that the minimum curvature equals this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescale_min_k: Option<f64>,
    /// Reject profiles with `f > sin` somewhere.
    #[serde(default)]
    pub dominated_check: bool,
}

impl MetricSpec {
    pub fn build(&self) -> Result<WarpProfile> {
        let base = match self.kind {
            MetricKind::Round => WarpProfile::round(),
            MetricKind::Family => {
                let r = self.r.ok_or_else(|| Error::Config("metric.r is required for kind = \"family\"".into()))?;
                WarpProfile::family(r)?
            }
            MetricKind::UserTrig => {
                let c = self.theta_coeffs.as_ref().ok_or_else(|| {
                    Error::Config("metric.theta_coeffs is required for kind = \"user-trig\"".into())
                })?;
                WarpProfile::from_theta_coeffs(c)?
            }
        };
        base.validate()?;
        if self.dominated_check {
            let m = base.morse_compare();
            if !m.dominated {
                return Err(Error::InvalidProfile {
                    invariant: "domination f <= sin",
                    detail: format!("f - sin = {:.3e} at t = {}", -m.max_gap, m.witness_t),
                });
            }
        }
        match self.rescale_min_k {
            Some(k) => base.rescaled_to_min_curvature(k),
            None => Ok(base),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub experiment: Experiment,
    pub metric: MetricSpec,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.check_params()?;
        if spec.name.is_empty() || spec.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("name {:?} must be non-empty and contain no path separators", spec.name)));
        }
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn check_params(&self) -> Result<()> {
        let allowed = self.experiment.params();
        for (k, v) in &self.params {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Config(format!(
                    "unknown parameter {k:?} for this experiment (allowed: {})",
                    allowed.join(", ")
                )));
            }
            if !v.is_finite() {
                return Err(Error::Config(format!("parameter {k:?} must be finite")));
            }
        }
        Ok(())
    }

    fn value(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        match self.params.get(key) {
            None => Ok(default),
            Some(&v) if v >= 1.0 && v.fract() == 0.0 && v <= 1e9 => Ok(v as usize),
            Some(v) => Err(Error::Config(format!("parameter {key:?} must be a positive integer, got {v}"))),
        }
    }

    /// Directory that receives this run's artifacts.
    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.name)
    }
}

/// A named tolerance with its outcome when the run checks it.
#[derive(Clone, Debug, Serialize)]
pub struct Threshold {
    pub name: &'static str,
    pub value: f64,
    pub satisfied: Option<bool>,
}

fn threshold(name: &'static str, value: f64, satisfied: Option<bool>) -> Threshold {
    Threshold { name, value, satisfied }
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimaxReport {
    pub metric: String,
    pub sweep: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<[f64; 2]>,
    pub level: f64,
    pub crit_length: f64,
    pub residual: f64,
    pub converged: bool,
    pub rounds: usize,
    pub argmax_index: usize,
    pub initial_level: f64,
    pub warm_start_rounds: usize,
    pub members_final: usize,
    pub hanging_family: bool,
    pub torn: bool,
}

impl MinimaxReport {
    fn new(profile: &WarpProfile, r: &MinimaxResult, basepoint: Option<&SurfacePoint>) -> Self {
        Self {
            metric: profile.descriptor(),
            sweep: r.sweep.clone(),
            basepoint: basepoint.map(|p| [p.t, p.x]),
            level: r.level,
            crit_length: r.crit_length,
            residual: r.residual,
            converged: r.converged,
            rounds: r.rounds,
            argmax_index: r.argmax_member,
            initial_level: r.initial_level,
            warm_start_rounds: r.warm_start_rounds,
            members_final: r.members_final,
            hanging_family: r.hanging_family,
            torn: r.torn,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusReport {
    pub metric: String,
    pub basepoint: [f64; 2],
    pub crlp: f64,
    pub two_dp: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RauchSuiteReport {
    pub metric: String,
    pub cases: usize,
    pub min_slack: f64,
    pub all_hold: bool,
    pub rigid_cases: usize,
    pub rigidity_propagated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexCase {
    pub length: f64,
    pub index: usize,
    pub nullity: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_index: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    pub metric: String,
    pub focal_radius: f64,
    pub cases: Vec<IndexCase>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_matches: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MorseReport {
    pub metric: String,
    pub comparison: MorseComparison,
    pub min_k: f64,
    pub max_k: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FcReport {
    pub metric: String,
    pub geodesic_length: f64,
    pub rho: f64,
    pub focal_radius: f64,
    pub members: usize,
    pub energy_c: f64,
    pub max_member_energy_off_center: f64,
    pub strict_decrease: bool,
    pub boundary_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HomoReport {
    pub metric: String,
    pub cases: usize,
    pub max_relative_error: f64,
    pub within_tolerance: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum ExperimentResult {
    Minimax(MinimaxReport),
    Radius(RadiusReport),
    Rauch(RauchSuiteReport),
    Index(IndexReport),
    Morse(MorseReport),
    Fc(FcReport),
    Homo(HomoReport),
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub spec: ExperimentSpec,
    pub results: ExperimentResult,
    pub wall_time: f64,
    pub tool_version: &'static str,
    pub seed: u64,
    pub thresholds: Vec<Threshold>,
    /// Artifact paths relative to the run directory.
    pub artifacts: Vec<String>,
    pub converged: bool,
}

struct Outcome {
    result: ExperimentResult,
    thresholds: Vec<Threshold>,
    converged: bool,
}

/// Relative tolerance of the concatenation energy identity.
pub const TOL_HOMO_REL: f64 = 2e-3;
/// Segments of the random paths in the concatenation check. The segment
/// straddling the junction contributes an `O(1/N)` energy defect.
pub const HOMO_SEGMENTS: usize = 2048;

/// Execute `spec`, write its artifacts and `report.json` under
/// `output_dir/name/`.
pub fn run(spec: &ExperimentSpec) -> Result<RunReport> {
    let start = Instant::now();
    let profile = spec.metric.build()?;
    let dir = spec.run_dir();
    let mut artifacts = Vec::new();
    let outcome = execute(spec, &profile, &dir, &mut artifacts)?;
    let report = RunReport {
        spec: spec.clone(),
        results: outcome.result,
        wall_time: start.elapsed().as_secs_f64(),
        tool_version: TOOL_VERSION,
        seed: spec.seed,
        thresholds: outcome.thresholds,
        artifacts: artifacts.iter().map(|p: &PathBuf| relative(&dir, p)).collect(),
        converged: outcome.converged,
    };
    io::write_json(&dir.join("report.json"), &report)?;
    Ok(report)
}

fn relative(dir: &Path, p: &Path) -> String {
    p.strip_prefix(dir).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

fn basepoint(spec: &ExperimentSpec, profile: &WarpProfile) -> SurfacePoint {
    profile.point(spec.value("t", 0.0).clamp(0.0, profile.meridian_length()), spec.value("x", 0.0))
}

fn execute(spec: &ExperimentSpec, profile: &WarpProfile, dir: &Path, artifacts: &mut Vec<PathBuf>) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.experiment {
        Experiment::Crl | Experiment::Crlp => {
            let (r, p) = if spec.experiment == Experiment::Crl {
                let m = spec.count("members", cycles::INTERVAL_MEMBERS)?;
                let n = spec.count("segments", pathspace::LOOP_SEGMENTS)?;
                (minimax::crl_estimate_with(profile, m, n)?, None)
            } else {
                let p = basepoint(spec, profile);
                let m = spec.count("members", cycles::CIRCLE_MEMBERS)?;
                let n = spec.count("segments", pathspace::LOOP_SEGMENTS)?;
                (minimax::crlp_estimate_with(profile, &p, m, n)?, Some(p))
            };
            let history = dir.join("history.csv");
            io::write_csv(&history, &io::history_rows(&r.history))?;
            let curve = dir.join("critical_curve.csv");
            io::write_csv(&curve, &io::curve_rows(&r.critical_curve))?;
            artifacts.extend([history, curve]);
            Ok(Outcome {
                thresholds: vec![
                    threshold("tol_level_rel", minimax::TOL_LEVEL_REL, Some(r.converged)),
                    threshold("tol_res", pathspace::TOL_RES, Some(r.residual < pathspace::TOL_RES)),
                    threshold("delta_sweep", cycles::DELTA_SWEEP, Some(!r.torn)),
                ],
                converged: r.converged,
                result: ExperimentResult::Minimax(MinimaxReport::new(profile, &r, p.as_ref())),
            })
        }
        Experiment::RadiusCheck => {
            let p = basepoint(spec, profile);
            let m = spec.count("members", cycles::CIRCLE_MEMBERS)?;
            let n = spec.count("segments", pathspace::LOOP_SEGMENTS)?;
            let c = minimax::radius_bound_check_with(profile, &p, m, n)?;
            Ok(Outcome {
                thresholds: vec![threshold("tol_geom", minimax::TOL_GEOM, Some(c.holds))],
                converged: true,
                result: ExperimentResult::Radius(RadiusReport {
                    metric: profile.descriptor(),
                    basepoint: [p.t, p.x],
                    crlp: c.crlp,
                    two_dp: c.two_dp,
                    holds: c.holds,
                }),
            })
        }
        Experiment::RauchSuite => {
            let cases = spec.count("cases", 50)?;
            let samples = spec.count("samples", rauch::COMPARISON_SAMPLES)?;
            let (rows, report) = rauch_suite(profile, cases, samples, &mut rng)?;
            let path = dir.join("rauch_suite.csv");
            io::write_csv(&path, &rows)?;
            artifacts.push(path);
            Ok(Outcome {
                thresholds: vec![
                    threshold("tol_cmp", rauch::TOL_CMP, Some(report.all_hold)),
                    threshold("tol_rigid", rauch::TOL_RIGID, Some(report.rigidity_propagated)),
                ],
                converged: true,
                result: ExperimentResult::Rauch(report),
            })
        }
        Experiment::Index => {
            let cases = spec.count("cases", 50)?;
            let max_length = spec.value("max_length", 3.0 * PI * profile.scale());
            let fan = spec.count("focal_geodesics", 16)?;
            let focal = geodesic::focal_radius(profile, fan)?;
            let params: Vec<(SurfacePoint, f64, f64)> = (0..cases)
                .map(|_| {
                    let p = random_point(profile, &mut rng);
                    (p, rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..max_length))
                })
                .collect();
            let paths: Vec<geodesic::GeodesicPath> = params
                .par_iter()
                .map(|(p, alpha, len)| geodesic::shoot(profile, p, &geodesic::tangent_at(profile, p, *alpha), len.max(1e-6)))
                .collect::<Result<_>>()?;
            let analytic = profile.is_round();
            let mut out = Vec::with_capacity(cases);
            for c in &paths {
                let rep = geodesic::index_report(c)?;
                out.push(IndexCase {
                    length: c.length,
                    index: rep.index,
                    nullity: rep.nullity,
                    analytic_index: analytic.then(|| round_index(c.length / profile.scale())),
                });
            }
            if let Some(c) = paths.first() {
                let g = dir.join("geodesic.csv");
                io::write_csv(&g, &io::geodesic_rows(c))?;
                let j = dir.join("jacobi.csv");
                io::write_csv(&j, &io::jacobi_rows(&geodesic::jacobi(c, 0.0, 1.0)?))?;
                artifacts.extend([g, j]);
            }
            let matches = analytic.then(|| out.iter().all(|c| Some(c.index) == c.analytic_index));
            Ok(Outcome {
                thresholds: vec![threshold("analytic_index", 0.0, matches)],
                converged: true,
                result: ExperimentResult::Index(IndexReport {
                    metric: profile.descriptor(),
                    focal_radius: focal,
                    cases: out,
                    analytic_matches: matches,
                }),
            })
        }
        Experiment::MorseCompare => {
            let grid = spec.count("grid", crate::metric::SAMPLE_GRID)?;
            let path = dir.join("profile.csv");
            io::write_csv(&path, &io::profile_rows(profile, grid))?;
            artifacts.push(path);
            let comparison = profile.morse_compare();
            Ok(Outcome {
                thresholds: vec![threshold("domination_slack", 1e-12, Some(comparison.dominated))],
                converged: true,
                result: ExperimentResult::Morse(MorseReport {
                    metric: profile.descriptor(),
                    comparison,
                    min_k: profile.min_curvature(),
                    max_k: profile.max_curvature(),
                }),
            })
        }
        Experiment::FcCycle => {
            let len = spec.value("length", 1.5 * PI);
            let p = profile.point(
                spec.value("t", 0.4 * profile.meridian_length()).clamp(0.0, profile.meridian_length()),
                spec.value("x", 0.2),
            );
            let c = geodesic::shoot(profile, &p, &geodesic::tangent_at(profile, &p, spec.value("alpha", 0.9)), len)?;
            let focal = geodesic::focal_radius(profile, 16)?;
            let opts = FcOptions {
                members: spec.count("members", cycles::INTERVAL_MEMBERS)?,
                segments: spec.count("segments", pathspace::LOOP_SEGMENTS)?,
                flow_steps: spec.count("flow_steps", 1)?,
                focal_radius: Some(focal),
            };
            let rho = spec.value("rho_frac", 0.95) * focal;
            let sweep = cycles::build_fc(profile, &c, rho, opts)?;
            artifacts.extend(io::write_sweep(&dir.join("sweep"), &sweep)?);
            let report = fc_report(profile, &c, rho, focal, &sweep)?;
            Ok(Outcome {
                thresholds: vec![threshold("strict_decrease", 0.0, Some(report.strict_decrease))],
                converged: true,
                result: ExperimentResult::Fc(report),
            })
        }
        Experiment::HomoIdentity => {
            let cases = spec.count("cases", 50)?;
            let segments = spec.count("segments", HOMO_SEGMENTS)?;
            let errs = homo_identity_errors(profile, cases, segments, &mut rng)?;
            let max = errs.iter().copied().fold(0.0, f64::max);
            Ok(Outcome {
                thresholds: vec![threshold("tol_homo_rel", TOL_HOMO_REL, Some(max <= TOL_HOMO_REL))],
                converged: true,
                result: ExperimentResult::Homo(HomoReport {
                    metric: profile.descriptor(),
                    cases,
                    max_relative_error: max,
                    within_tolerance: max <= TOL_HOMO_REL,
                }),
            })
        }
    }
}

/// Conjugate points of the unit sphere lie at multiples of `π`.
fn round_index(length: f64) -> usize {
    let k = (length / PI).ceil() as usize;
    k.saturating_sub(1)
}

fn random_point(profile: &WarpProfile, rng: &mut ChaCha8Rng) -> SurfacePoint {
    let len = profile.meridian_length();
    profile.point(rng.random_range(0.05..0.95) * len, rng.random_range(0.0..2.0 * PI))
}

/// Random comparison cases on geodesics of half to one and a half meridian
/// lengths. Offsets are constant, bump or shifted bump, all inside `0.9 ×`
/// the focal radius.
pub fn rauch_suite(
    profile: &WarpProfile,
    cases: usize,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<RauchRow>, RauchSuiteReport)> {
    let focal = geodesic::focal_radius(profile, 16)?;
    let cap = 0.9 * focal;
    let params: Vec<(SurfacePoint, f64, f64, OffsetFn)> = (0..cases)
        .map(|i| {
            let p = random_point(profile, rng);
            let alpha = rng.random_range(0.0..2.0 * PI);
            let lc = rng.random_range(0.5..1.5) * profile.meridian_length();
            let offset = match i % 3 {
                0 => OffsetFn::Constant { value: rng.random_range(0.3..1.0) * cap },
                1 => OffsetFn::Bump { amp: rng.random_range(0.3..1.0) * cap },
                _ => {
                    let base = rng.random_range(0.2..0.5) * cap;
                    OffsetFn::Shifted { base, amp: rng.random_range(0.2..1.0) * (cap - base) }
                }
            };
            (p, alpha, lc, offset)
        })
        .collect();
    let checks: Vec<(f64, rauch::RauchCheck, OffsetFn)> = params
        .par_iter()
        .map(|(p, alpha, lc, offset)| {
            let c = geodesic::shoot(profile, p, &geodesic::tangent_at(profile, p, *alpha), *lc)?;
            let case = rauch::build_comparison_with_focal(profile, &c, 1.0, *offset, samples, focal)?;
            Ok((*lc, rauch::rauch_check(profile, &case)?, *offset))
        })
        .collect::<Result<_>>()?;
    let name = profile.descriptor();
    let rows: Vec<RauchRow> = checks
        .iter()
        .enumerate()
        .map(|(case_id, (lc, chk, offset))| RauchRow {
            case_id,
            profile: name.clone(),
            lc: *lc,
            f_desc: offset.describe(),
            lhs: chk.lhs,
            rhs: chk.rhs,
            slack: chk.slack,
            rigid: chk.rigid,
        })
        .collect();
    let min_slack = checks.iter().map(|c| c.1.slack).fold(f64::INFINITY, f64::min);
    let report = RauchSuiteReport {
        metric: name,
        cases,
        min_slack,
        all_hold: checks.iter().all(|c| c.1.slack >= -rauch::TOL_CMP),
        rigid_cases: checks.iter().filter(|c| c.1.rigid).count(),
        rigidity_propagated: checks.iter().all(|c| c.1.propagated != Some(false)),
    };
    Ok((rows, report))
}

pub fn fc_report(
    profile: &WarpProfile,
    c: &geodesic::GeodesicPath,
    rho: f64,
    focal: f64,
    sweep: &cycles::SweepOut,
) -> Result<FcReport> {
    let energy_c = pathspace::energy(profile, &c.to_curve(profile, sweep.segments()))?.energy;
    let center = sweep
        .index_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let off: Vec<f64> = sweep
        .energies
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != center)
        .map(|(_, e)| e.energy)
        .collect();
    let max_off = off.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let boundary_max = sweep
        .boundary_members
        .iter()
        .map(|&i| sweep.energies[i].energy)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(FcReport {
        metric: profile.descriptor(),
        geodesic_length: c.length,
        rho,
        focal_radius: focal,
        members: sweep.members.len(),
        energy_c,
        max_member_energy_off_center: max_off,
        strict_decrease: max_off < energy_c,
        boundary_gap: energy_c - boundary_max,
    })
}

/// Relative errors of the concatenation energy identity over random
/// wiggly paths `σ` and random end points `r` near `σ(1)`.
pub fn homo_identity_errors(profile: &WarpProfile, cases: usize, segments: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let bound = (0.5 * geodesic::injectivity_bound(profile)).min(0.5);
    let len = profile.meridian_length();
    let params: Vec<[f64; 8]> = (0..cases)
        .map(|_| {
            [
                rng.random_range(0.2..0.8) * len,
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(-0.3..0.3) * len,
                rng.random_range(-1.5..1.5),
                rng.random_range(-0.1..0.1) * len,
                rng.random_range(1.0..4.0f64).floor(),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.1..0.9) * bound,
            ]
        })
        .collect();
    params
        .par_iter()
        .map(|&[t0, x0, dt, dx, amp, k, dir, d]| {
            let n = segments;
            let pts = (0..=n)
                .map(|i| {
                    let s = i as f64 / n as f64;
                    let t = (t0 + dt * s + amp * (k * PI * s).sin()).clamp(0.05 * len, 0.95 * len);
                    profile.point(t, x0 + dx * s)
                })
                .collect();
            let sigma = DiscreteCurve::from_points(pts, Boundary::FixedEndpoints);
            let q = *sigma.end();
            let r = geodesic::exp_point(profile, &q, &(geodesic::tangent_at(profile, &q, dir) * d));
            let dist = geodesic::distance(profile, &q, &r);
            let e_sigma = pathspace::energy(profile, &sigma)?.energy;
            let out = pathspace::concat_map(profile, &sigma, &r)?;
            let measured = pathspace::energy(profile, &out)?.energy;
            let predicted = pathspace::concat_energy_identity(e_sigma, dist);
            Ok((measured - predicted).abs() / predicted)
        })
        .collect()
}

/// One row of the family sweep; failures are recorded in `status`.
pub fn family_row(r: f64, segments: usize) -> FamilyRow {
    let row = || -> Result<FamilyRow> {
        let g = WarpProfile::family(r)?;
        let m = cycles::CIRCLE_MEMBERS;
        let crl = minimax::crl_estimate_with(&g, cycles::INTERVAL_MEMBERS, segments)?;
        let pole = minimax::crlp_estimate_with(&g, &g.north_pole(), m, segments)?;
        let eq = minimax::radius_bound_check_with(&g, &g.point(0.5 * g.meridian_length(), 0.0), m, segments)?;
        let converged = crl.converged && pole.converged;
        Ok(FamilyRow {
            r,
            crl: crl.crit_length,
            crlp_pole: pole.crit_length,
            crlp_equator: eq.crlp,
            two_dp_equator: eq.two_dp,
            min_k: g.min_curvature(),
            status: if converged { "ok".into() } else { "non-converged".into() },
        })
    };
    row().unwrap_or_else(|e| FamilyRow {
        r,
        crl: f64::NAN,
        crlp_pole: f64::NAN,
        crlp_equator: f64::NAN,
        two_dp_equator: f64::NAN,
        min_k: f64::NAN,
        status: format!("error: {e}"),
    })
}

/// Rows in the given order. `crl` should decrease as `r` decreases.
pub fn sweep_family(r_values: &[f64], segments: usize) -> Vec<FamilyRow> {
    r_values.iter().map(|&r| family_row(r, segments)).collect()
}

/// True when `crl` strictly increases with `r` over the successful rows.
pub fn crl_trend_holds(rows: &[FamilyRow]) -> bool {
    let mut ok: Vec<(f64, f64)> = rows.iter().filter(|r| r.crl.is_finite()).map(|r| (r.r, r.crl)).collect();
    ok.sort_by(|a, b| a.0.total_cmp(&b.0));
    ok.windows(2).all(|w| w[1].1 > w[0].1)
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidProfile { .. }
        | Error::Unrepresentable(_)
        | Error::Domain(_)
        | Error::Precondition(_)
        | Error::Mesh { .. }
        | Error::Continuity { .. } => EXIT_VALIDATION,
        _ => EXIT_OTHER,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_experiment_is_rejected_at_parse() {
        let err = ExperimentSpec::parse("name = \"a\"\nexperiment = \"bogus\"\nmetric.kind = \"round\"\n").unwrap_err();
        assert_eq!(exit_code(&err), EXIT_VALIDATION);
    }

    #[test]
    fn unknown_param_is_rejected() {
        let err = ExperimentSpec::parse("name = \"a\"\nexperiment = \"crl\"\nmetric.kind = \"round\"\nparams.t = 1.0\n")
            .unwrap_err();
        assert!(err.to_string().contains("unknown parameter"), "{err}");
    }

    #[test]
    fn dotted_and_table_forms_agree() {
        let a = ExperimentSpec::parse("name = \"a\"\nexperiment = \"crlp\"\nmetric.kind = \"family\"\nmetric.r = 0.5\n").unwrap();
        let b = ExperimentSpec::parse("name = \"a\"\nexperiment = \"crlp\"\n[metric]\nkind = \"family\"\nr = 0.5\n").unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn malformed_pole_names_invariant() {
        let spec = ExperimentSpec::parse(
            "name = \"a\"\nexperiment = \"crl\"\nmetric.kind = \"user-trig\"\nmetric.theta_coeffs = [0.1]\n",
        )
        .unwrap();
        let err = spec.metric.build().unwrap_err();
        assert_eq!(exit_code(&err), EXIT_VALIDATION);
        assert!(err.to_string().contains("pole regularity"), "{err}");
    }

    #[test]
    fn round_index_counts_interior_conjugate_points() {
        assert_eq!(round_index(1.5 * PI), 1);
        assert_eq!(round_index(2.5 * PI), 2);
        assert_eq!(round_index(0.5), 0);
    }
}
