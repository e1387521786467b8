//! A receiver authenticating beacons: an honest sender, a sender lying about
//! its position with stolen credentials, and a forged signature.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vanet_aoa::auth::{AoaRecordSet, Beacon, CertificateAuthority, KeyPair, PkiMode, PkiPolicy, Receiver, SignedMessage};
use vanet_aoa::channel::{Coherence, LinkModel, PilotFrame};
use vanet_aoa::estimation::AoaEstimator;
use vanet_aoa::geometry::{ArrayConfig, ArrayPose, GeoCoord};

fn main() -> vanet_aoa::error::Result<()> {
    let ca = CertificateAuthority::from_seed(&[9; 32]);
    let honest = ca.issue(b"veh-17", &[1; 32]);
    let cfg = ArrayConfig::ula(4)?;
    let link = LinkModel {
        cfg,
        k: 100.0,
        noise_var: 0.01,
        frame: PilotFrame::tight(&cfg, 1, 10, 1.0)?,
        coherence: Coherence::PerPilot,
    };
    let pose = ArrayPose::new(GeoCoord::from_degrees(8.68, 50.11)?, 0.0);
    let receiver = Receiver::new(pose, AoaEstimator::new(cfg, link.k), PkiPolicy::new(ca.public_key(), PkiMode::Strict));
    let mut table = AoaRecordSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let now = 1_000;
    let alpha = 3.0;

    let at_25 = pose.point_at_aoa(25f64.to_radians(), 120.0)?;
    let at_35 = pose.point_at_aoa(35f64.to_radians(), 120.0)?;

    let cases = [
        ("honest sender at 25 deg", SignedMessage::sign(&honest, Beacon::new(at_25, 14.0).encode(), now), 25.0),
        ("sender at 35 deg claiming 25 deg", SignedMessage::sign(&honest, Beacon::new(at_25, 14.0).encode(), now), 35.0),
        (
            "forged signature",
            SignedMessage::forge(&honest.identity, &KeyPair::from_seed(&[66; 32]), Beacon::new(at_35, 14.0).encode(), now),
            35.0,
        ),
    ];
    for (label, msg, true_deg) in cases {
        let obs = link.observe(f64::to_radians(true_deg), &mut rng)?;
        let v = receiver.authenticate(&msg, &obs, &mut table, alpha, now)?;
        let w = v.wald_statistic.map(|w| format!("{w:.2}")).unwrap_or_else(|| "-".into());
        println!("{label:<34} W = {w:>6}  -> {:?}", v.decision);
    }
    for r in table.iter() {
        println!(
            "record {}: theta_b {:.2} deg, theta_hat {:.2} deg",
            String::from_utf8_lossy(&r.id),
            r.theta_b.to_degrees(),
            r.theta_hat.to_degrees()
        );
    }
    Ok(())
}
