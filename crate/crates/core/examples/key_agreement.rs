//! An honest key agreement and a relay attack, with the step-by-step trace.

use vanet_aoa::harness::{run_ska_demo, ExperimentConfig, Scenario};
use vanet_aoa::ska::{derive_session_key, quantize_angle};

fn main() -> vanet_aoa::error::Result<()> {
    let q = quantize_angle(15f64.to_radians(), 7)?;
    println!("15 deg quantizes to bin {q} of 128");
    let k = derive_session_key(&[7; 32], q, q + 1)?;
    println!("K' prefix {:02x}{:02x}{:02x}{:02x}\n", k[0], k[1], k[2], k[3]);

    let cfg = ExperimentConfig::for_scenario(Scenario::SkaDemo);
    let demo = run_ska_demo(&cfg)?;
    print!("{}", demo.render(&cfg));
    Ok(())
}
