//! Shoot geodesics, follow Jacobi fields and count conjugate points.

use std::f64::consts::{FRAC_PI_2, PI};

use loopcrit::geodesic::{self, tangent_at};
use loopcrit::WarpProfile;

fn main() -> loopcrit::Result<()> {
    let g = WarpProfile::family(0.5)?;
    let p = g.point(1.0, 0.0);
    let c = geodesic::shoot(&g, &p, &tangent_at(&g, &p, 0.7), 3.0 * PI)?;
    println!("geodesic of length {:.4} with step {:.2e}", c.length, c.step());
    println!("  Clairaut drift {:.2e}, speed error {:.2e}", c.clairaut_drift(), c.max_speed_error());

    let idx = geodesic::index_report(&c)?;
    println!("  conjugate points {:?}", idx.conjugate_points.iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>());
    println!("  index {} nullity {}", idx.index, idx.nullity);

    let n = g.north_pole();
    let q = g.point(FRAC_PI_2, 0.0);
    println!("d(N, S)    = {:.8}", geodesic::distance(&g, &n, &g.south_pole()));
    println!("d(q, N)    = {:.8}", geodesic::distance(&g, &q, &n));
    println!("d(q, -q)   = {:.8}", geodesic::distance(&g, &q, &g.point(FRAC_PI_2, PI)));

    let far = geodesic::d_sup(&g, &q, 16)?;
    println!("sup_x d(q, x) = {:.6} at (t, x) = ({:.4}, {:.4})", far.distance, far.point.t, far.point.x);
    println!("focal radius  = {:.9}", geodesic::focal_radius(&g, 16)?);
    Ok(())
}
