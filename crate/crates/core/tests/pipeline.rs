//! End-to-end runs across channel, estimator, receiver and key agreement.

use vanet_aoa::auth::{detection_probability, AoaRecordSet, Beacon, CertificateAuthority, Decision, PkiMode, PkiPolicy, Receiver, SignedMessage};
use vanet_aoa::estimation::AoaEstimator;
use vanet_aoa::geometry::{ArrayPose, GeoCoord};
use vanet_aoa::harness::{link_for, mitm_outcomes, run_mitm_map, ska_scenario, trial_rng, ExperimentConfig, Scenario};
use vanet_aoa::ska::{symmetric_offset_point, MitmOutcome};

#[test]
fn honest_acceptance_rate_matches_detection_probability() {
    let cfg = ExperimentConfig::for_scenario(Scenario::PdSweep);
    let link = link_for(&cfg, 4, 100.0, 20.0, 0).unwrap();
    let ca = CertificateAuthority::from_seed(&[4; 32]);
    let creds = ca.issue(b"veh", &[5; 32]);
    let pose = ArrayPose::new(GeoCoord::from_degrees(2.35, 48.85).unwrap(), -0.7);
    let tx = pose.point_at_aoa(25f64.to_radians(), 90.0).unwrap();
    let receiver = Receiver::new(pose, AoaEstimator::new(link.cfg, 100.0), PkiPolicy::new(ca.public_key(), PkiMode::Strict));
    let msg = SignedMessage::sign(&creds, Beacon::new(tx, 20.0).encode(), 500);
    let theta = pose.expected_direction(&tx).unwrap().visible;
    let mut table = AoaRecordSet::new();
    let trials = 3000;
    let mut accepted = 0;
    for t in 0..trials {
        let obs = link.observe(theta, &mut trial_rng(11, 0, t)).unwrap();
        if receiver.authenticate(&msg, &obs, &mut table, 3.0, 600).unwrap().decision == Decision::Accept {
            accepted += 1;
        }
    }
    let crb = receiver.estimator.crb_at(theta, &link.frame, link.noise_var).unwrap();
    let pd = detection_probability(3.0, theta, crb).unwrap();
    let rate = accepted as f64 / trials as f64;
    assert!((rate - pd).abs() <= 0.02, "{rate} vs {pd}");
    assert_eq!(table.len(), 1);
    assert_eq!(table.get(b"veh").unwrap().updated_at_ms, 600);
}

#[test]
fn relay_abort_rate_grows_with_offset() {
    let mut cfg = ExperimentConfig::for_scenario(Scenario::SkaDemo);
    cfg.snr_db = vec![0.0];
    cfg.alpha_degrees = vec![3.0];
    let scn = ska_scenario(&cfg).unwrap();
    let (pa, pb) = (scn.a.pose.position, scn.b.pose.position);
    let runs = 150;
    let rates: Vec<f64> = [0.0f64, 1.0, 2.0, 3.0, 5.0]
        .iter()
        .enumerate()
        .map(|(i, deg)| {
            let e = symmetric_offset_point(&pa, &pb, deg.to_radians());
            let outs = mitm_outcomes(&cfg, &e, 100 + i as u64, runs).unwrap();
            outs.iter().filter(|o| **o != MitmOutcome::AttackSucceeds).count() as f64 / runs as f64
        })
        .collect();
    // Tolerance of three binomial standard errors at the worst case p = 1/2.
    let tol = 3.0 * (0.25f64 / runs as f64).sqrt() * 2f64.sqrt();
    for w in rates.windows(2) {
        assert!(w[1] >= w[0] - tol, "{rates:?}");
    }
    assert!(rates[0] < 0.2 && rates[4] > 0.99, "{rates:?}");
}

#[test]
fn high_success_set_shrinks_with_alpha() {
    let count = |alpha: f64| {
        let mut cfg = ExperimentConfig::for_scenario(Scenario::MitmMap);
        cfg.snr_db = vec![0.0];
        cfg.alpha_degrees = vec![alpha];
        cfg.trials = 20;
        cfg.raster_nx = 16;
        cfg.raster_ny = 7;
        cfg.raster_margin_m = 10.0;
        cfg.raster_half_height_m = 7.0;
        let cells = run_mitm_map(&cfg).unwrap();
        let region = cells.iter().filter(|c| c.in_region).count();
        (cells.iter().filter(|c| c.success_rate > 0.5).count(), region)
    };
    let (hi_1, reg_1) = count(1.0);
    let (hi_3, reg_3) = count(3.0);
    let (hi_5, reg_5) = count(5.0);
    assert!(hi_1 < hi_3 && hi_3 < hi_5, "{hi_1} {hi_3} {hi_5}");
    assert!(reg_1 < reg_3 && reg_3 < reg_5, "{reg_1} {reg_3} {reg_5}");
}
