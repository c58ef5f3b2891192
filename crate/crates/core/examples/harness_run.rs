//! A cached harness run: the same config twice, the second served from the store.

use bilayer_squeeze::harness::{run, ExperimentKind, RunConfig, RunOptions};

fn main() -> bilayer_squeeze::Result<()> {
    let out = std::env::temp_dir().join("bilayer-squeeze-example");
    let mut config = RunConfig::new(ExperimentKind::Simulate);
    config.seed = 5;
    config.alpha = vec![1.5, 3.0];
    config.lattice.l = vec![16];
    config.lattice.a_z = vec![1.0, 2.0];
    config.simulation.n_traj = 200;
    config.simulation.n_out = 60;
    print!("{}", config.to_toml());

    let opts = RunOptions::new(&out);
    let mut report = run(&config, &opts)?;
    println!("first:  computed={} cached={}", report.computed, report.cached);
    report = run(&config, &opts)?;
    println!("second: computed={} cached={}", report.computed, report.cached);
    println!("{}", report.dir.display());
    print!("{}", report.summary);
    Ok(())
}
