//! Tabulate a family profile and compare it with the round sphere.
//!
//! cargo run --release --example profile_dump -- 0.5 profile.csv

use loopcrit::{io, WarpProfile};

fn main() -> loopcrit::Result<()> {
    let mut args = std::env::args().skip(1);
    let r: f64 = args.next().map(|s| s.parse().expect("r must be a number")).unwrap_or(0.5);
    let out = args.next().unwrap_or_else(|| "profile.csv".into());

    let g = WarpProfile::family(r)?;
    g.validate()?;
    let m = g.morse_compare();
    println!("{}", g.descriptor());
    println!("  steepness a      {:.12}", g.steepness());
    println!("  f(pi/2)          {:.12}", g.f(std::f64::consts::FRAC_PI_2));
    println!("  K range          [{:.6}, {:.6}]", g.min_curvature(), g.max_curvature());
    println!("  f <= sin         {} (max gap {:.6} at t = {:.4})", m.dominated, m.max_gap, m.witness_t);

    io::write_csv(out.as_ref(), &io::profile_rows(&g, 512))?;
    println!("wrote {out}");
    Ok(())
}
