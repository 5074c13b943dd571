// Load an engine configuration from TOML.

use speech_workload::config::EngineConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = EngineConfig::from_toml(
        r#"
[analysis]
window_ms = 10000

[vad]
min_run = 12

[features]
fillers = "on"

[train]
epochs = 50
"#,
    )?;
    println!("feature set {}, {} inputs", cfg.feature_set(), cfg.feature_set().dim());
    println!("{}", cfg.header_line());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
