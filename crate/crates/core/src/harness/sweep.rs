use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::auth::{
    acceptance_probability, Beacon, CertificateAuthority, Evidence, PkiPolicy, Receiver, SignedMessage,
};
use crate::channel::{default_pilots, Coherence, LinkModel, PilotFrame, RicianParams};
use crate::error::Result;
use crate::estimation::{fisher_information_numeric, AoaEstimator};
use crate::geometry::{ArrayConfig, ArrayPose, GeoCoord};
use crate::harness::config::{ExperimentConfig, PilotKind, Scenario};
use crate::stats::binomial_std_error;

/// Transmit power of the pilot frame; the SNR sets the noise variance.
pub const PILOT_POWER: f64 = 1.0;

/// Timestamp used for every simulated message.
const NOW_MS: u64 = 1_700_000_000_000;

/// Per-trial generator keyed on `(seed, stream, trial)`, independent of scheduling.
pub fn trial_rng(seed: u64, stream: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(trial);
    rng
}

pub fn noise_variance(snr_db: f64) -> f64 {
    PILOT_POWER * 10f64.powf(-snr_db / 10.0)
}

/// Radio link for one lattice point.
pub fn link_for(cfg: &ExperimentConfig, n: usize, k: f64, snr_db: f64, stream: u64) -> Result<LinkModel> {
    let array = ArrayConfig::ula(n)?;
    let frame = match cfg.pilots {
        PilotKind::Tight => PilotFrame::tight(&array, cfg.n_p, cfg.n_s, PILOT_POWER)?,
        PilotKind::Gaussian => {
            let mut rng = trial_rng(cfg.seed, stream, u64::MAX);
            default_pilots(&array, cfg.n_p, cfg.n_s, PILOT_POWER, &mut rng)?
        }
    };
    Ok(LinkModel {
        cfg: array,
        k,
        noise_var: noise_variance(snr_db),
        frame,
        coherence: if cfg.per_pilot_fading { Coherence::PerPilot } else { Coherence::Block },
    })
}

/// One row of a detection or false-alarm curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub scenario: Scenario,
    pub snr_db: f64,
    pub alpha: f64,
    pub k: f64,
    pub n: usize,
    pub pilots: usize,
    pub trials: usize,
    pub empirical_rate: f64,
    pub analytic_rate: f64,
    /// Binomial standard error, taken at the larger of the two rates' spreads.
    pub std_error: f64,
}

impl CurvePoint {
    /// `|empirical - analytic| > 3 std_error`.
    pub fn is_flagged(&self) -> bool {
        (self.empirical_rate - self.analytic_rate).abs() > 3.0 * self.std_error
    }
}

/// A receiver, and a signed beacon sent from one direction while claiming another.
struct Bench {
    receiver: Receiver,
    message: SignedMessage,
    theta_true: f64,
    theta_claim: f64,
}

fn bench(cfg: &ExperimentConfig, n: usize, k: f64, true_deg: f64, claim_deg: f64) -> Result<Bench> {
    let ca = CertificateAuthority::from_seed(&[0x5a; 32]);
    // The transmitter's credentials; in the attack scenarios they are stolen.
    let creds = ca.issue(b"vehicle-tx", &[0x17; 32]);
    let pose = ArrayPose::new(GeoCoord::from_degrees(8.68, 50.11)?, 0.3);
    let tx = pose.point_at_aoa(true_deg.to_radians(), cfg.range_m)?;
    let claimed = pose.point_at_aoa(claim_deg.to_radians(), cfg.range_m)?;
    let message = SignedMessage::sign(&creds, Beacon::new(claimed, 13.9).encode(), NOW_MS);
    let receiver = Receiver::new(
        pose,
        AoaEstimator::new(ArrayConfig::ula(n)?, k),
        PkiPolicy::new(ca.public_key(), cfg.pki_mode),
    );
    Ok(Bench {
        theta_true: pose.expected_direction(&tx)?.visible,
        theta_claim: pose.expected_direction(&claimed)?.visible,
        receiver,
        message,
    })
}

fn curve_angles(cfg: &ExperimentConfig) -> (f64, f64) {
    match cfg.scenario {
        Scenario::PfFar => (cfg.far_true_deg, cfg.far_claim_deg),
        Scenario::PfNear => (cfg.near_true_deg, cfg.near_claim_deg),
        _ => (cfg.legit_deg, cfg.legit_deg),
    }
}

/// Monte Carlo acceptance curves over the `(snr, alpha, k)` lattice.
///
/// Each trial draws one channel, runs the full receiver pipeline once and
/// scores the resulting statistic against every `alpha`.
fn run_curve(cfg: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    cfg.validate()?;
    let (true_deg, claim_deg) = curve_angles(cfg);
    let scenario_tag = cfg.scenario as u64;
    let mut out = Vec::with_capacity(cfg.snr_db.len() * cfg.alpha_degrees.len() * cfg.k.len());
    for (si, &snr_db) in cfg.snr_db.iter().enumerate() {
        for (ki, &k) in cfg.k.iter().enumerate() {
            let stream = (scenario_tag << 48) | ((si as u64) << 24) | ki as u64;
            let link = link_for(cfg, cfg.n, k, snr_db, stream)?;
            let b = bench(cfg, cfg.n, k, true_deg, claim_deg)?;
            let statistics: Vec<Option<f64>> = (0..cfg.trials as u64)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(cfg.seed, stream, t);
                    let obs = link.observe(b.theta_true, &mut rng)?;
                    Ok(match b.receiver.evaluate(&b.message, &obs, NOW_MS)? {
                        Evidence::PkiFailed => None,
                        Evidence::Checked(c) => Some(c.statistic),
                    })
                })
                .collect::<Result<_>>()?;
            let est = &b.receiver.estimator;
            let crb_claim = est.crb_at(b.theta_claim, &link.frame, link.noise_var)?;
            let crb_true = est.crb_at(b.theta_true, &link.frame, link.noise_var)?;
            for &alpha in &cfg.alpha_degrees {
                let accepted = statistics.iter().filter(|s| s.is_some_and(|w| w <= alpha)).count();
                let empirical = accepted as f64 / cfg.trials as f64;
                let analytic = acceptance_probability(alpha, b.theta_claim, crb_claim, b.theta_true, crb_true)?;
                out.push(CurvePoint {
                    scenario: cfg.scenario,
                    snr_db,
                    alpha,
                    k,
                    n: cfg.n,
                    pilots: link.frame.len(),
                    trials: cfg.trials,
                    empirical_rate: empirical,
                    analytic_rate: analytic,
                    std_error: binomial_std_error(empirical, cfg.trials)
                        .max(binomial_std_error(analytic, cfg.trials)),
                });
            }
        }
    }
    Ok(out)
}

/// Detection probability of an honest transmitter at `legit_deg`.
pub fn run_pd_sweep(cfg: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    let mut c = cfg.clone();
    c.scenario = Scenario::PdSweep;
    run_curve(&c)
}

/// False-alarm probability of the attacker scenario selected by `cfg.scenario`
/// (`PfNear`, otherwise `PfFar`).
pub fn run_pf_sweep(cfg: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    let mut c = cfg.clone();
    if c.scenario != Scenario::PfNear {
        c.scenario = Scenario::PfFar;
    }
    run_curve(&c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrbRow {
    pub theta_deg: f64,
    pub k: f64,
    pub snr_db: f64,
    pub n: usize,
    pub pilots: usize,
    pub trials: usize,
    pub mean: f64,
    pub variance: f64,
    /// Standard error of `variance`, from the sample fourth moment.
    pub variance_se: f64,
    pub crb: f64,
    pub fim_inverse: f64,
}

impl CrbRow {
    /// Empirical variance more than three standard errors below the bound.
    pub fn violates_bound(&self) -> bool {
        self.variance < self.crb - 3.0 * self.variance_se
    }

    pub fn efficiency_ratio(&self) -> f64 {
        self.variance / self.crb
    }
}

/// Estimator variance against the closed-form and numeric bounds.
pub fn run_crb_check(cfg: &ExperimentConfig) -> Result<Vec<CrbRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut point = 0u64;
    for &theta_deg in &cfg.crb_theta_deg {
        for &k in &cfg.crb_k {
            for &snr_db in &cfg.crb_snr_db {
                for &n in &cfg.crb_n {
                    let stream = (Scenario::CrbCheck as u64) << 48 | point;
                    point += 1;
                    let link = link_for(cfg, n, k, snr_db, stream)?;
                    let est = AoaEstimator::new(link.cfg, k);
                    let theta = theta_deg.to_radians();
                    let estimates: Vec<f64> = (0..cfg.trials as u64)
                        .into_par_iter()
                        .map(|t| {
                            let mut rng = trial_rng(cfg.seed, stream, t);
                            Ok(est.estimate(&link.observe(theta, &mut rng)?)?.theta_hat)
                        })
                        .collect::<Result<_>>()?;
                    let (mean, variance, variance_se) = variance_with_se(&estimates);
                    let params = RicianParams::new(k, theta, 0.0, link.cfg)?;
                    rows.push(CrbRow {
                        theta_deg,
                        k,
                        snr_db,
                        n,
                        pilots: link.frame.len(),
                        trials: cfg.trials,
                        mean,
                        variance,
                        variance_se,
                        crb: est.crb_at(theta, &link.frame, link.noise_var)?,
                        fim_inverse: 1.0 / fisher_information_numeric(&params, &link.frame, link.noise_var, theta)?,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Sample mean, unbiased variance and the standard error of that variance.
pub fn variance_with_se(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = if xs.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 };
    (mean, var, ((m4 - m2 * m2).max(0.0) / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn small(s: Scenario) -> ExperimentConfig {
        let mut c = ExperimentConfig::for_scenario(s);
        c.trials = 300;
        c.snr_db = vec![10.0, 25.0];
        c.alpha_degrees = vec![1.0, 3.0];
        c.k = vec![100.0];
        c
    }

    #[test]
    fn trial_streams_are_distinct_and_repeatable() {
        let a: u64 = trial_rng(1, 2, 3).gen();
        assert_eq!(a, trial_rng(1, 2, 3).gen::<u64>());
        assert_ne!(a, trial_rng(1, 2, 4).gen::<u64>());
        assert_ne!(a, trial_rng(1, 3, 3).gen::<u64>());
        assert_ne!(a, trial_rng(2, 2, 3).gen::<u64>());
    }

    #[test]
    fn pd_curve_shape() {
        let pts = run_pd_sweep(&small(Scenario::PdSweep)).unwrap();
        assert_eq!(pts.len(), 4);
        for p in &pts {
            assert!((0.0..=1.0).contains(&p.empirical_rate));
            assert_eq!(p.pilots, 40);
        }
        let at = |snr: f64, a: f64| pts.iter().find(|p| p.snr_db == snr && p.alpha == a).unwrap();
        assert!(at(25.0, 3.0).empirical_rate >= at(25.0, 1.0).empirical_rate);
        assert!(at(25.0, 3.0).empirical_rate > 0.95);
    }

    #[test]
    fn far_attacker_is_rejected_at_high_snr() {
        let pts = run_pf_sweep(&small(Scenario::PfFar)).unwrap();
        let top = pts.iter().find(|p| p.snr_db == 25.0 && p.alpha == 1.0).unwrap();
        assert_eq!(top.empirical_rate, 0.0);
        assert!(top.analytic_rate < 1e-6);
    }

    #[test]
    fn permissive_pki_changes_nothing_for_stolen_credentials() {
        let mut c = small(Scenario::PfNear);
        c.trials = 100;
        let strict = run_pf_sweep(&c).unwrap();
        c.pki_mode = crate::auth::PkiMode::Permissive;
        assert_eq!(strict, run_pf_sweep(&c).unwrap());
    }

    #[test]
    fn variance_se_matches_gaussian_formula() {
        let mut rng = trial_rng(9, 9, 9);
        let xs: Vec<f64> = (0..40_000).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal) * 2.0).collect();
        let (_, v, se) = variance_with_se(&xs);
        assert!((v - 4.0).abs() < 0.15);
        // For a normal sample the variance SE is sigma^2 sqrt(2/N).
        assert!((se / (4.0 * (2.0f64 / 40_000.0).sqrt()) - 1.0).abs() < 0.05);
    }
}
