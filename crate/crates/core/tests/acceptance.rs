//! Acceptance suite. Runs without the libtest harness and prints one
//! `PASS`/`FAIL` line per criterion; the process fails if any line fails.
//!
//! Loop sweeps for the K >= 1 suite and for the equator point run at 256
//! segments; the round-sphere levels run at the full 512.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use loopcrit::cycles::{self, FcOptions};
use loopcrit::geodesic::{self, tangent_at};
use loopcrit::minimax::{self, MinimaxResult};
use loopcrit::pathspace::{self, Boundary, DiscreteCurve};
use loopcrit::{runner, SurfacePoint, WarpProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_PI: f64 = 2.0 * PI;
const SUITE_SEGMENTS: usize = 256;
const MEMBERS: usize = cycles::CIRCLE_MEMBERS;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn family(r: f64) -> WarpProfile {
    WarpProfile::family(r).unwrap()
}

/// Round plus three family members scaled to minimum curvature one.
fn k_ge_one_profiles() -> Vec<WarpProfile> {
    let mut out = vec![WarpProfile::round()];
    for r in [0.25, 0.5, 0.75] {
        out.push(family(r).rescaled_to_min_curvature(1.0).unwrap());
    }
    out
}

/// Sample points as (fraction of the meridian, x).
const SAMPLE_POINTS: [(f64, f64); 8] =
    [(0.0, 0.0), (1.0, 0.0), (0.5, 0.0), (0.15, 0.7), (0.3, 2.0), (0.62, 4.1), (0.8, 1.3), (0.9, 5.5)];

fn sample_point(g: &WarpProfile, (u, x): (f64, f64)) -> SurfacePoint {
    g.point(u * g.meridian_length(), x)
}

struct SuiteRow {
    name: String,
    crl: f64,
    crlp: Vec<f64>,
    all_converged: bool,
}

fn run_suite() -> Result<Vec<SuiteRow>, String> {
    k_ge_one_profiles()
        .iter()
        .map(|g| {
            let crl = minimax::crl_estimate_with(g, MEMBERS, SUITE_SEGMENTS).map_err(|e| e.to_string())?;
            let mut all_converged = crl.converged && !crl.torn;
            let mut crlp = Vec::new();
            for &pt in &SAMPLE_POINTS {
                let est = minimax::crlp_estimate_with(g, &sample_point(g, pt), MEMBERS, SUITE_SEGMENTS)
                    .map_err(|e| e.to_string())?;
                all_converged &= est.converged && !est.torn;
                crlp.push(est.crit_length);
            }
            Ok(SuiteRow { name: g.descriptor(), crl: crl.crit_length, crlp, all_converged })
        })
        .collect()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn criterion_1() -> Verdict {
    let g = WarpProfile::round();
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut ok = true;
    let mut record = |res: loopcrit::Result<MinimaxResult>, secs: f64| match res {
        Ok(est) => {
            worst = worst.max((est.crit_length - TWO_PI).abs());
            slowest = slowest.max(secs);
            ok &= est.converged;
        }
        Err(_) => ok = false,
    };
    let (res, secs) = timed(|| minimax::crl_estimate(&g));
    record(res, secs);
    for pt in [(0.0, 0.0), (0.3, 2.0), (0.5, 1.0), (0.8, 4.0)] {
        let p = sample_point(&g, pt);
        let (res, secs) = timed(|| minimax::crlp_estimate(&g, &p));
        record(res, secs);
    }
    Verdict::new(
        ok && worst <= 2e-3 && slowest < 60.0,
        format!("max |crit - 2pi| = {worst:.2e}, slowest estimate {slowest:.2} s (N = 512, M = 128)"),
    )
}

fn criterion_2(suite: &[SuiteRow]) -> Verdict {
    let top = suite
        .iter()
        .flat_map(|r| std::iter::once(r.crl).chain(r.crlp.iter().copied()))
        .fold(f64::NEG_INFINITY, f64::max);
    let converged = suite.iter().all(|r| r.all_converged);
    let per: Vec<String> = suite
        .iter()
        .map(|r| format!("{}: crl {:.5}", r.name, r.crl))
        .collect();
    Verdict::new(
        converged && top <= TWO_PI + 5e-3,
        format!("largest estimate {top:.6} over {} profiles ({})", suite.len(), per.join("; ")),
    )
}

/// Hausdorff distance between a closed curve and the equator `t = π/2`.
fn hausdorff_to_equator(g: &WarpProfile, c: &DiscreteCurve) -> f64 {
    let off = c.points.iter().map(|p| (p.t - FRAC_PI_2).abs()).fold(0.0, f64::max);
    let mut xs: Vec<f64> = c.points.iter().map(|p| p.x.rem_euclid(TWO_PI)).collect();
    xs.sort_by(f64::total_cmp);
    let mut gap = TWO_PI - xs[xs.len() - 1] + xs[0];
    for w in xs.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    off + 0.5 * gap * g.f(FRAC_PI_2)
}

fn criterion_3() -> Verdict {
    let g = family(0.5);
    let q = g.point(FRAC_PI_2, 0.0);
    let run = || -> loopcrit::Result<(f64, f64, f64, f64, f64)> {
        let crl = minimax::crl_estimate(&g)?;
        let haus = hausdorff_to_equator(&g, &crl.critical_curve);
        let pole = minimax::crlp_estimate(&g, &g.north_pole())?.crit_length;
        let eq = minimax::crlp_estimate_with(&g, &q, MEMBERS, SUITE_SEGMENTS)?.crit_length;
        let d = geodesic::distance(&g, &q, &g.north_pole());
        Ok((crl.crit_length, haus, pole, eq, d))
    };
    match run() {
        Ok((crl, haus, pole, eq, d)) => Verdict::new(
            crl <= PI + 2e-3 && haus < 1e-2 && (pole - TWO_PI).abs() <= 2e-3 && eq >= PI - 5e-3 && (d - FRAC_PI_2).abs() <= 1e-3,
            format!("crl {crl:.6}, Hausdorff to equator {haus:.2e}, pole crl_p {pole:.6}, equator crl_q {eq:.6}, d(q, pole) {d:.6}"),
        ),
        Err(e) => Verdict::new(false, format!("error: {e}")),
    }
}

fn criterion_4() -> Verdict {
    let rs = [0.75, 0.5, 0.25];
    let est: Result<Vec<f64>, _> = rs.iter().map(|&r| minimax::crl_estimate(&family(r)).map(|e| e.crit_length)).collect();
    match est {
        Ok(v) => {
            let dec = v.windows(2).all(|w| w[1] < w[0]);
            let close = rs.iter().zip(&v).all(|(r, c)| (c - TWO_PI * r).abs() <= 2e-3);
            Verdict::new(dec && close, format!("crl at r = 0.75, 0.5, 0.25: {:.6}, {:.6}, {:.6}", v[0], v[1], v[2]))
        }
        Err(e) => Verdict::new(false, format!("error: {e}")),
    }
}

fn criterion_5(rng: &mut ChaCha8Rng) -> Verdict {
    let mut errs = Vec::new();
    for g in [WarpProfile::round(), family(0.5)] {
        match runner::homo_identity_errors(&g, 25, runner::HOMO_SEGMENTS, rng) {
            Ok(e) => errs.extend(e),
            Err(e) => return Verdict::new(false, format!("error: {e}")),
        }
    }
    let max = errs.iter().copied().fold(0.0, f64::max);
    Verdict::new(
        errs.len() == 50 && max <= runner::TOL_HOMO_REL,
        format!("max relative error {max:.2e} over {} cases", errs.len()),
    )
}

fn criterion_6(rng: &mut ChaCha8Rng) -> Verdict {
    let round = WarpProfile::round();
    let p = round.point(1.0, 0.5);
    let flat = (|| -> loopcrit::Result<f64> {
        let c = geodesic::shoot(&round, &p, &tangent_at(&round, &p, 0.8), PI)?;
        let opts = FcOptions { focal_radius: Some(FRAC_PI_2), ..Default::default() };
        let s = cycles::build_fc(&round, &c, 0.95 * FRAC_PI_2, opts)?;
        Ok(s.energies.iter().map(|e| (e.energy - 0.5 * PI * PI).abs()).fold(0.0, f64::max))
    })();
    let flat = match flat {
        Ok(v) => v,
        Err(e) => return Verdict::new(false, format!("error: {e}")),
    };

    let profiles = k_ge_one_profiles();
    let focal: Vec<f64> = profiles.iter().map(|g| geodesic::focal_radius(g, 16).unwrap()).collect();
    let mut passed = 0;
    let mut min_gap = f64::INFINITY;
    let mut min_drop = f64::INFINITY;
    for i in 0..20 {
        let k = i % profiles.len();
        let g = &profiles[k];
        let len = g.meridian_length();
        let p = g.point(rng.random_range(0.1..0.9) * len, rng.random_range(0.0..TWO_PI));
        let alpha = rng.random_range(0.0..TWO_PI);
        let lc = rng.random_range(PI + 0.05..TWO_PI);
        let ok = (|| -> loopcrit::Result<bool> {
            let c = geodesic::shoot(g, &p, &tangent_at(g, &p, alpha), lc)?;
            let rho = 0.95 * focal[k];
            let opts = FcOptions { focal_radius: Some(focal[k]), ..Default::default() };
            let s = cycles::build_fc(g, &c, rho, opts)?;
            let rep = runner::fc_report(g, &c, rho, focal[k], &s)?;
            min_gap = min_gap.min(rep.boundary_gap);
            min_drop = min_drop.min(rep.energy_c - rep.max_member_energy_off_center);
            Ok(rep.strict_decrease && rep.boundary_gap > 0.0)
        })()
        .unwrap_or(false);
        passed += usize::from(ok);
    }
    Verdict::new(
        flat <= 1e-4 && passed == 20,
        format!("round L = pi spread {flat:.2e}; {passed}/20 strict decrease, min drop {min_drop:.2e}, min boundary gap {min_gap:.3e}"),
    )
}

fn criterion_7(rng: &mut ChaCha8Rng) -> Verdict {
    let mut total = 0;
    let mut min_slack = f64::INFINITY;
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, g) in k_ge_one_profiles().iter().enumerate() {
        match runner::rauch_suite(g, 60, 256, rng) {
            Ok((_, rep)) => {
                total += rep.cases;
                min_slack = min_slack.min(rep.min_slack);
                let rigid_ok = if i == 0 { rep.rigid_cases == rep.cases } else { rep.rigid_cases == 0 };
                ok &= rep.all_hold && rigid_ok && rep.rigidity_propagated;
                notes.push(format!("{} rigid {}/{}", rep.metric, rep.rigid_cases, rep.cases));
            }
            Err(e) => return Verdict::new(false, format!("error: {e}")),
        }
    }
    Verdict::new(
        ok && total >= 200,
        format!("{total} cases, min slack {min_slack:.2e}; {}", notes.join("; ")),
    )
}

fn criterion_8(rng: &mut ChaCha8Rng) -> Verdict {
    let g = WarpProfile::round();
    let mut matched = 0;
    for _ in 0..50 {
        let len = rng.random_range(0.05..3.0 * PI);
        let p = g.point(rng.random_range(0.2..2.9), rng.random_range(0.0..TWO_PI));
        let c = geodesic::shoot(&g, &p, &tangent_at(&g, &p, rng.random_range(0.0..TWO_PI)), len).unwrap();
        let rep = geodesic::index_report(&c).unwrap();
        let expected = (len / PI).ceil() as usize - 1;
        matched += usize::from(rep.index == expected && rep.nullity == 0);
    }
    let rho = geodesic::focal_radius(&g, 16).unwrap();
    Verdict::new(
        matched == 50 && (rho - FRAC_PI_2).abs() <= 1e-6,
        format!("index matched {matched}/50; focal radius {rho:.9}"),
    )
}

fn criterion_9(suite: &[SuiteRow], rng: &mut ChaCha8Rng) -> Verdict {
    let mut drift: f64 = 0.0;
    for _ in 0..20 {
        let g = family(rng.random_range(0.25..1.0));
        let p = g.point(rng.random_range(0.1..3.0), rng.random_range(0.0..TWO_PI));
        let c = geodesic::shoot(&g, &p, &tangent_at(&g, &p, rng.random_range(0.0..TWO_PI)), rng.random_range(1.0..8.0)).unwrap();
        drift = drift.max(c.clairaut_drift());
    }

    let mut monotone = true;
    let mut cauchy = true;
    for _ in 0..100 {
        let g = family(rng.random_range(0.3..1.0));
        let (t0, a, k, ph) = (
            rng.random_range(0.8..2.3),
            rng.random_range(0.0..0.4),
            rng.random_range(1..6) as f64,
            rng.random_range(0.0..TWO_PI),
        );
        let pts = (0..=128)
            .map(|i| {
                let x = TWO_PI * i as f64 / 128.0;
                g.point(t0 + a * (k * x + ph).sin(), x)
            })
            .collect();
        let out = pathspace::flow(&g, &DiscreteCurve::from_points(pts, Boundary::FreeLoop), 20, pathspace::TOL_RES);
        monotone &= out.trace.windows(2).all(|w| w[1].energy <= w[0].energy);
        cauchy &= out.trace.iter().all(|r| r.length * r.length <= 2.0 * r.energy * (1.0 + 1e-12));
    }

    let g = WarpProfile::round();
    let p = g.point(0.9, 0.3);
    let c = geodesic::shoot(&g, &p, &tangent_at(&g, &p, 0.7), TWO_PI).unwrap();
    let e: Vec<f64> = [64usize, 128, 256]
        .iter()
        .map(|&n| {
            let pts = (0..=n)
                .map(|i| {
                    let u = i as f64 / n as f64;
                    c.point_at(&g, TWO_PI * (u + 0.1 * (TWO_PI * u).sin()))
                })
                .collect();
            pathspace::energy_unchecked(&g, &DiscreteCurve::from_points(pts, Boundary::FreeLoop)).energy
        })
        .collect();
    let order = ((e[0] - e[1]) / (e[1] - e[2])).log2();

    let crl_le_crlp = suite.iter().all(|r| r.crlp.iter().all(|&cp| r.crl <= cp + 5e-3));
    Verdict::new(
        drift < 1e-8 && monotone && cauchy && order >= 1.9 && crl_le_crlp,
        format!(
            "Clairaut drift {drift:.1e}, flow monotone {monotone}, length^2 <= 2E {cauchy}, mesh order {order:.3}, crl <= crl_p + 5e-3 {crl_le_crlp}"
        ),
    )
}

fn main() -> ExitCode {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let start = Instant::now();
    let suite = run_suite();
    let verdicts = match &suite {
        Ok(suite) => vec![
            criterion_1(),
            criterion_2(suite),
            criterion_3(),
            criterion_4(),
            criterion_5(&mut rng),
            criterion_6(&mut rng),
            criterion_7(&mut rng),
            criterion_8(&mut rng),
            criterion_9(suite, &mut rng),
        ],
        Err(e) => {
            let fail = |_| Verdict::new(false, format!("suite error: {e}"));
            let mut v: Vec<Verdict> = (0..9).map(fail).collect();
            v[0] = criterion_1();
            v
        }
    };
    let mut failed = 0;
    for (i, v) in verdicts.iter().enumerate() {
        println!("{} criterion {}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {}/9 passed in {:.1} s", 9 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
