//! Build the disc, based and parallel sweep-outs and dump one of them.
//!
//! cargo run --release --example sweeps -- out/sweeps

use std::f64::consts::PI;
use std::path::PathBuf;

use loopcrit::cycles::{self, FcOptions};
use loopcrit::geodesic::{self, tangent_at};
use loopcrit::{io, WarpProfile};

fn main() -> loopcrit::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/sweeps".into()));
    let g = WarpProfile::family(0.5)?.rescaled_to_min_curvature(1.0)?;
    let focal = geodesic::focal_radius(&g, 16)?;

    let p = g.point(0.4 * g.meridian_length(), 0.2);
    let c = geodesic::shoot(&g, &p, &tangent_at(&g, &p, 0.9), 1.5 * PI)?;
    let fc = cycles::build_fc(&g, &c, 0.95 * focal, FcOptions { focal_radius: Some(focal), ..Default::default() })?;
    let center = fc.members.len() / 2;
    println!("disc sweep: {} members, E(center) {:.6}, level {:.6}", fc.members.len(), fc.energies[center].energy, fc.level);

    let gamma = cycles::build_gamma_sweep(&g, &p, 0.9, cycles::CIRCLE_MEMBERS, 512)?;
    println!("based sweep through p: longest member {:.6}", (2.0 * gamma.level).sqrt());

    let par = cycles::build_parallel_sweep(&g, cycles::INTERVAL_MEMBERS, 512)?;
    println!("parallel sweep: longest member {:.6} (equator length {:.6})", (2.0 * par.level).sqrt(), 2.0 * PI * g.f(0.5 * g.meridian_length()));

    let files = io::write_sweep(&dir, &fc)?;
    println!("wrote {} files under {}", files.len(), dir.display());
    Ok(())
}
