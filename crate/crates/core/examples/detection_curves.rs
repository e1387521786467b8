//! Short detection and false-alarm sweeps printed as CSV.

use vanet_aoa::harness::{curve_csv, run_pd_sweep, run_pf_sweep, ExperimentConfig, Scenario};

fn main() -> vanet_aoa::error::Result<()> {
    for scenario in [Scenario::PdSweep, Scenario::PfFar, Scenario::PfNear] {
        let mut cfg = ExperimentConfig::for_scenario(scenario);
        cfg.trials = 1000;
        cfg.snr_db = vec![0.0, 10.0, 20.0];
        cfg.alpha_degrees = vec![1.0, 3.0];
        let points = match scenario {
            Scenario::PdSweep => run_pd_sweep(&cfg)?,
            _ => run_pf_sweep(&cfg)?,
        };
        print!("{}", curve_csv(&points));
    }
    Ok(())
}
