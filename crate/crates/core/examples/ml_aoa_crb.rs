//! ML angle estimates against the Cramer-Rao bound over a few operating points.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vanet_aoa::channel::{Coherence, LinkModel, PilotFrame};
use vanet_aoa::estimation::AoaEstimator;
use vanet_aoa::geometry::ArrayConfig;
use vanet_aoa::stats::mean_variance;

fn main() -> vanet_aoa::error::Result<()> {
    let theta = 25f64.to_radians();
    let trials = 2000;
    println!("  n  snr_db  mean_deg  std_deg  sqrt_crb_deg");
    for n in [4, 8, 16] {
        let cfg = ArrayConfig::ula(n)?;
        for snr_db in [0.0, 10.0, 20.0] {
            let link = LinkModel {
                cfg,
                k: 100.0,
                noise_var: 10f64.powf(-snr_db / 10.0),
                frame: PilotFrame::tight(&cfg, 1, 10, 1.0)?,
                coherence: Coherence::PerPilot,
            };
            let est = AoaEstimator::new(cfg, link.k);
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64 * 100 + snr_db as u64);
            let mut xs = Vec::with_capacity(trials);
            for _ in 0..trials {
                xs.push(est.estimate(&link.observe(theta, &mut rng)?)?.theta_hat);
            }
            let (mean, var) = mean_variance(&xs);
            let crb = est.crb_at(theta, &link.frame, link.noise_var)?;
            println!(
                "{n:>3}  {snr_db:>6}  {:>8.3}  {:>7.4}  {:>12.4}",
                mean.to_degrees(),
                var.sqrt().to_degrees(),
                crb.sqrt().to_degrees()
            );
        }
    }
    Ok(())
}
