//! Random comparison curves on a profile with K >= 1; prints the slack
//! distribution and rigid hits.

use loopcrit::{runner, WarpProfile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> loopcrit::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for g in [WarpProfile::round(), WarpProfile::family(0.5)?.rescaled_to_min_curvature(1.0)?] {
        let (rows, rep) = runner::rauch_suite(&g, 40, 256, &mut rng)?;
        let mut slack: Vec<f64> = rows.iter().map(|r| r.slack).collect();
        slack.sort_by(f64::total_cmp);
        println!(
            "{}: {} cases, slack min {:.2e} median {:.2e} max {:.2e}, rigid {}, all hold {}",
            rep.metric,
            rep.cases,
            slack[0],
            slack[slack.len() / 2],
            slack[slack.len() - 1],
            rep.rigid_cases,
            rep.all_hold
        );
    }
    Ok(())
}
