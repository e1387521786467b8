use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::auth::{acceptance_probability, hex_prefix};
use crate::error::Result;
use crate::estimation::AoaEstimator;
use crate::geometry::GeoCoord;
use crate::harness::config::{ExperimentConfig, Scenario};
use crate::harness::sweep::{link_for, trial_rng};
use crate::ska::{
    run_handshake, simulate_mitm, symmetric_offset_point, HandshakeOutcome, HandshakeReport, MitmOutcome,
    MitmReport, SealedBox, SkaScenario,
};
use crate::stats::binomial_std_error;

/// SKA scenario at the single operating point of `cfg`.
pub fn ska_scenario(cfg: &ExperimentConfig) -> Result<SkaScenario> {
    let stream = (cfg.scenario as u64) << 48;
    let link = link_for(cfg, cfg.n, cfg.k[0], cfg.snr_db[0], stream)?;
    let mut scn = SkaScenario::standard(
        link,
        cfg.alpha_degrees[0],
        cfg.m_bits,
        cfg.separation_m,
        cfg.peer_aoa_deg.to_radians(),
        Arc::new(SealedBox),
    )?;
    scn.pki_mode = cfg.pki_mode;
    Ok(scn)
}

#[derive(Debug, Clone)]
pub struct SkaDemo {
    pub scenario: SkaScenario,
    pub honest: HandshakeReport,
    /// Relay seen `offset_deg` off the A-B line from both ends.
    pub off_line: MitmReport,
    /// Relay at the midpoint of A-B.
    pub on_segment: MitmReport,
}

impl SkaDemo {
    pub fn render(&self, cfg: &ExperimentConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# SKA demo: alpha = {}, SNR = {} dB, k = {}, n = {}, L = {}, m = {} bits, A-B = {} m",
            cfg.alpha_degrees[0],
            cfg.snr_db[0],
            cfg.k[0],
            cfg.n,
            cfg.frame_len(),
            cfg.m_bits,
            cfg.separation_m
        );
        let _ = writeln!(s, "\n## honest run");
        for line in self.honest.trace() {
            let _ = writeln!(s, "{line}");
        }
        let fp = |k: Option<[u8; 32]>| k.map(|k| hex_prefix(&k)).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "outcome: {:?}; K'_A = {}, K'_B = {}",
            self.honest.outcome,
            fp(self.honest.a.session_key()),
            fp(self.honest.b.session_key())
        );
        for (title, r) in [
            (format!("MitM {} deg off the A-B line", cfg.offset_deg), &self.off_line),
            ("MitM at the A-B midpoint".to_string(), &self.on_segment),
        ] {
            let _ = writeln!(s, "\n## {title}");
            for line in &r.trace {
                let _ = writeln!(s, "{line}");
            }
            let _ = writeln!(s, "outcome: {:?}; K'_A = {}, K'_B = {}", r.outcome, fp(r.key_a), fp(r.key_b));
        }
        s
    }
}

/// One honest run and two relay runs at the configured operating point.
pub fn run_ska_demo(cfg: &ExperimentConfig) -> Result<SkaDemo> {
    cfg.validate()?;
    let scn = ska_scenario(cfg)?;
    let (pa, pb) = (scn.a.pose.position, scn.b.pose.position);
    let stream = (Scenario::SkaDemo as u64) << 48;
    let honest = run_handshake(&scn, &mut trial_rng(cfg.seed, stream, 0))?;
    let off = symmetric_offset_point(&pa, &pb, cfg.offset_deg.to_radians());
    let off_line = simulate_mitm(&scn, &off, &mut trial_rng(cfg.seed, stream, 1))?;
    let mid = symmetric_offset_point(&pa, &pb, 0.0);
    let on_segment = simulate_mitm(&scn, &mid, &mut trial_rng(cfg.seed, stream, 2))?;
    Ok(SkaDemo {
        scenario: scn,
        honest,
        off_line,
        on_segment,
    })
}

/// Honest-run completion over `runs` independent seeds.
pub fn honest_completion(cfg: &ExperimentConfig, runs: usize) -> Result<Vec<HandshakeOutcome>> {
    let scn = ska_scenario(cfg)?;
    let stream = (Scenario::SkaDemo as u64) << 48 | 1 << 32;
    (0..runs as u64)
        .into_par_iter()
        .map(|t| Ok(run_handshake(&scn, &mut trial_rng(cfg.seed, stream, t))?.outcome))
        .collect()
}

/// Relay outcomes for an attacker fixed at `pos_e`.
pub fn mitm_outcomes(cfg: &ExperimentConfig, pos_e: &GeoCoord, stream: u64, runs: usize) -> Result<Vec<MitmOutcome>> {
    let scn = ska_scenario(cfg)?;
    (0..runs as u64)
        .into_par_iter()
        .map(|t| Ok(simulate_mitm(&scn, pos_e, &mut trial_rng(cfg.seed, stream, t))?.outcome))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MitmCell {
    /// Metres east of A; B lies on the positive x axis.
    pub x: f64,
    /// Metres north of A.
    pub y: f64,
    pub trials: usize,
    pub success_rate: f64,
    pub in_region: bool,
    /// `P_F(A) P_F(B)`: acceptance probability of the relay at each end, multiplied.
    pub envelope: f64,
}

impl MitmCell {
    pub fn std_error(&self) -> f64 {
        binomial_std_error(self.success_rate, self.trials).max(binomial_std_error(self.envelope, self.trials))
    }

    /// Outside the region and above the two-test envelope by more than 3 standard errors.
    pub fn violates_envelope(&self) -> bool {
        !self.in_region && self.success_rate > self.envelope + 3.0 * self.std_error()
    }
}

/// Relay success rate on a raster around A and B, with the analytic mask.
///
/// Cells within a metre of A or B are skipped.
pub fn run_mitm_map(cfg: &ExperimentConfig) -> Result<Vec<MitmCell>> {
    cfg.validate()?;
    let scn = ska_scenario(cfg)?;
    let region = scn.vulnerable_region()?;
    let (pa, pb) = (scn.a.pose.position, scn.b.pose.position);
    let est = AoaEstimator::new(scn.link.cfg, scn.link.k);
    let crb = |theta: f64| est.crb_at(theta, &scn.link.frame, scn.link.noise_var);
    let claim_at_a = scn.a.pose.expected_direction(&pb)?.visible;
    let claim_at_b = scn.b.pose.expected_direction(&pa)?.visible;
    let (crb_claim_a, crb_claim_b) = (crb(claim_at_a)?, crb(claim_at_b)?);

    let width = cfg.separation_m + 2.0 * cfg.raster_margin_m;
    let (dx, dy) = (width / cfg.raster_nx as f64, 2.0 * cfg.raster_half_height_m / cfg.raster_ny as f64);
    let mut cells = Vec::new();
    for j in 0..cfg.raster_ny {
        for i in 0..cfg.raster_nx {
            let x = -cfg.raster_margin_m + (i as f64 + 0.5) * dx;
            let y = -cfg.raster_half_height_m + (j as f64 + 0.5) * dy;
            let p = pa.offset_m(x, y);
            let (ea, na) = pa.local_offset_m(&p);
            let (eb, nb) = pb.local_offset_m(&p);
            if ea.hypot(na) < 1.0 || eb.hypot(nb) < 1.0 {
                continue;
            }
            let true_at_a = scn.a.pose.expected_direction(&p)?.visible;
            let true_at_b = scn.b.pose.expected_direction(&p)?.visible;
            let alpha = scn.alpha;
            let envelope = acceptance_probability(alpha, claim_at_a, crb_claim_a, true_at_a, crb(true_at_a)?)?
                * acceptance_probability(alpha, claim_at_b, crb_claim_b, true_at_b, crb(true_at_b)?)?;
            let stream = (Scenario::MitmMap as u64) << 48 | ((j as u64) << 24) | i as u64;
            let outcomes = mitm_outcomes(cfg, &p, stream, cfg.trials)?;
            let wins = outcomes.iter().filter(|o| **o == MitmOutcome::AttackSucceeds).count();
            cells.push(MitmCell {
                x,
                y,
                trials: cfg.trials,
                success_rate: wins as f64 / cfg.trials as f64,
                in_region: region.contains(&p)?,
                envelope,
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_outcomes() {
        let cfg = ExperimentConfig::for_scenario(Scenario::SkaDemo);
        let demo = run_ska_demo(&cfg).unwrap();
        assert_eq!(demo.off_line.outcome, MitmOutcome::AbortedAtStep(3));
        let text = demo.render(&cfg);
        assert!(text.contains("B step 3"));
        assert!(text.contains("## honest run"));
    }

    #[test]
    fn small_map_has_mask_and_succeeds_on_segment() {
        let mut cfg = ExperimentConfig::for_scenario(Scenario::MitmMap);
        cfg.trials = 20;
        cfg.raster_nx = 5;
        cfg.raster_ny = 3;
        let cells = run_mitm_map(&cfg).unwrap();
        assert_eq!(cells.len(), 15);
        let on_line: Vec<_> = cells.iter().filter(|c| c.y.abs() < 1e-9 && c.x > 0.0 && c.x < 200.0).collect();
        assert!(!on_line.is_empty());
        for c in on_line {
            assert!(c.in_region);
            assert!(c.success_rate > 0.7, "{c:?}");
        }
        assert!(cells.iter().any(|c| !c.in_region));
        assert!(cells.iter().all(|c| !c.violates_envelope()));
    }
}
