//! Draws Ricean channels and pilot observations and checks their moments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vanet_aoa::channel::{draw_channel, transmit, Coherence, PilotFrame, RicianParams};
use vanet_aoa::geometry::ArrayConfig;

fn main() -> vanet_aoa::error::Result<()> {
    let cfg = ArrayConfig::ula(4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in [0.0, 10.0, 100.0] {
        let p = RicianParams::new(k, 25f64.to_radians(), -10f64.to_radians(), cfg)?;
        let draws = 20_000;
        let mut power = 0.0;
        for _ in 0..draws {
            let h = draw_channel(&p, &mut rng);
            power += h.h.iter().map(|z| z.norm_sqr()).sum::<f64>() / 16.0;
        }
        println!(
            "k = {k:>5}: mu = {:.4}, sigma = {:.4}, mean |h_ij|^2 = {:.4}",
            p.mu(),
            p.sigma(),
            power / draws as f64
        );
    }

    let frame = PilotFrame::tight(&cfg, 1, 10, 1.0)?;
    let p = RicianParams::new(100.0, 25f64.to_radians(), 0.0, cfg)?;
    let obs = transmit(&frame, &p, 0.01, &mut rng, Coherence::PerPilot)?;
    println!(
        "{} pilots of {} elements, mean pilot energy {:.3}, mean received energy {:.3}",
        frame.len(),
        frame.elements(),
        frame.mean_energy(),
        obs.ys.iter().map(|y| y.norm_squared()).sum::<f64>() / obs.ys.len() as f64
    );
    Ok(())
}
