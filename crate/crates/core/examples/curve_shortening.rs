//! Birkhoff shortening on a family member. A wavy loop that sits above the
//! equator slides off and shrinks; one symmetric about the equator relaxes
//! onto it, a closed geodesic of length `2π f(π/2)`.

use std::f64::consts::PI;

use loopcrit::pathspace::{self, Boundary, DiscreteCurve};
use loopcrit::WarpProfile;

fn wavy(g: &WarpProfile, t0: f64, amp: f64, n: usize) -> DiscreteCurve {
    let pts = (0..=n)
        .map(|i| {
            let x = 2.0 * PI * i as f64 / n as f64;
            g.point(t0 + amp * (3.0 * x).sin(), x)
        })
        .collect();
    DiscreteCurve::from_points(pts, Boundary::FreeLoop)
}

fn main() -> loopcrit::Result<()> {
    let g = WarpProfile::family(0.5)?;
    println!("equator length {:.8}", 2.0 * PI * g.f(0.5 * PI));

    let out = pathspace::flow(&g, &wavy(&g, 1.4, 0.25, 256), 2_000, pathspace::TOL_RES);
    for row in out.trace.iter().step_by(400) {
        println!("  step {:5}  E {:.10}  L {:.8}", row.step, row.energy, row.length);
    }
    let off = pathspace::relax_multilevel(&g, out.curve, 256, 1e-12);
    println!("off-centre loop relaxes to length {:.3e}", pathspace::length(&g, &off));

    let sym = pathspace::relax_multilevel(&g, wavy(&g, 0.5 * PI, 0.2, 32), 512, 1e-12);
    let drift = sym.points.iter().map(|p| (p.t - 0.5 * PI).abs()).fold(0.0, f64::max);
    println!("symmetric loop relaxes to length {:.8}, max |t - pi/2| {drift:.2e}", pathspace::length(&g, &sym));
    Ok(())
}
