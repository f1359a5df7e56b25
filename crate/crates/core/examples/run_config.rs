//! Drives the experiment runner from a JSON config, as `softctl pg --config` would.

use maxent_control::runner::{run, ExperimentConfig};

fn main() -> maxent_control::Result<()> {
    let dir = std::env::temp_dir().join("maxent-control-run-config");
    std::fs::create_dir_all(&dir).map_err(|source| maxent_control::Error::Io {
        path: dir.clone(),
        source,
    })?;
    let mut config = ExperimentConfig::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/data/pg_corridor.config.json"
    ))?;
    config.output_path = dir.join("pg.json");

    for path in run(&config)? {
        println!("wrote {}", path.display());
    }
    println!("config hash {}", config.hash());
    Ok(())
}
