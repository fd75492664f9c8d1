//! Minimax estimates of the free and based critical lengths on a family
//! member, against twice the largest distance from the base point.

use std::f64::consts::FRAC_PI_2;

use loopcrit::{minimax, WarpProfile};

fn main() -> loopcrit::Result<()> {
    let r: f64 = std::env::args().nth(1).map(|s| s.parse().expect("r must be a number")).unwrap_or(0.5);
    let g = WarpProfile::family(r)?;

    let crl = minimax::crl_estimate(&g)?;
    println!("crl   {:.6}  ({} rounds, converged {})", crl.crit_length, crl.rounds, crl.converged);

    for (name, p) in [("pole", g.north_pole()), ("equator", g.point(FRAC_PI_2, 0.0))] {
        let chk = minimax::radius_bound_check_with(&g, &p, 128, 256)?;
        println!("{name:8} crl_p {:.6}  2 d_p {:.6}  bound holds {}", chk.crlp, chk.two_dp, chk.holds);
    }
    Ok(())
}
