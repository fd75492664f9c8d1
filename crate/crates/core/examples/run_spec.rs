//! Drive the experiment runner from an in-memory spec.

use loopcrit::runner::{self, ExperimentSpec};

const SPEC: &str = r#"
name = "fc-demo"
experiment = "fc-cycle"
output_dir = "out"
seed = 3
metric.kind = "family"
metric.r = 0.5
metric.rescale_min_k = 1.0
params.length = 4.0
params.members = 33
"#;

fn main() -> loopcrit::Result<()> {
    let spec = ExperimentSpec::parse(SPEC)?;
    let report = runner::run(&spec)?;
    println!("{}", serde_json::to_string_pretty(&report.results).expect("report serializes"));
    println!("{} artifacts under {}", report.artifacts.len(), spec.run_dir().display());
    Ok(())
}
