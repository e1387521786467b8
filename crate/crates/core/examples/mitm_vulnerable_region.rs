//! Relay success around two nodes as a character map, with the analytic region.
//!
//! Inside the region `#` marks majority relay success and `o` a minority; outside
//! it `x` marks majority success, which happens where the array cannot tell a
//! direction from its mirror image behind the array.

use vanet_aoa::harness::{run_mitm_map, ExperimentConfig, Scenario};

fn main() -> vanet_aoa::error::Result<()> {
    for alpha in [1.0, 3.0] {
        let mut cfg = ExperimentConfig::for_scenario(Scenario::MitmMap);
        cfg.snr_db = vec![0.0];
        cfg.alpha_degrees = vec![alpha];
        cfg.trials = 30;
        cfg.raster_nx = 40;
        cfg.raster_ny = 9;
        cfg.raster_margin_m = 20.0;
        cfg.raster_half_height_m = 9.0;
        let cells = run_mitm_map(&cfg)?;
        println!("alpha = {alpha}, SNR = 0 dB, A at x = 0, B at x = {} m", cfg.separation_m);
        for row in cells.chunks(cfg.raster_nx).rev() {
            let line: String = row
                .iter()
                .map(|c| match (c.in_region, c.success_rate > 0.5) {
                    (true, true) => '#',
                    (true, false) => 'o',
                    (false, true) => 'x',
                    (false, false) => '.',
                })
                .collect();
            println!("{line}");
        }
        let wins = cells.iter().filter(|c| c.success_rate > 0.5).count();
        println!("{wins} of {} cells with majority relay success\n", cells.len());
    }
    Ok(())
}
