//! Property checks over experiment outputs, used by the CLI's self-check mode.

use crate::harness::config::Scenario;
use crate::harness::ska::{MitmCell, SkaDemo};
use crate::harness::sweep::{CrbRow, CurvePoint};
use crate::ska::{HandshakeOutcome, MitmOutcome};

/// Combined standard error of a difference of two independent rates.
pub fn diff_se(a: &CurvePoint, b: &CurvePoint) -> f64 {
    a.std_error.hypot(b.std_error)
}

fn find(points: &[CurvePoint], snr: f64, alpha: f64, k: f64) -> Option<&CurvePoint> {
    points.iter().find(|p| p.snr_db == snr && p.alpha == alpha && p.k == k)
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Adjacent pairs along one axis where the rate moves the wrong way by more
/// than three combined standard errors. `increasing` selects the expected direction.
pub fn trend_violations(points: &[CurvePoint], along_snr: bool, increasing: bool) -> Vec<String> {
    let snrs = sorted_unique(points.iter().map(|p| p.snr_db).collect());
    let alphas = sorted_unique(points.iter().map(|p| p.alpha).collect());
    let ks = sorted_unique(points.iter().map(|p| p.k).collect());
    let mut out = Vec::new();
    for &k in &ks {
        let (outer, inner) = if along_snr { (&alphas, &snrs) } else { (&snrs, &alphas) };
        for &o in outer {
            for w in inner.windows(2) {
                let at = |v: f64| if along_snr { find(points, v, o, k) } else { find(points, o, v, k) };
                let (Some(lo), Some(hi)) = (at(w[0]), at(w[1])) else { continue };
                let delta = hi.empirical_rate - lo.empirical_rate;
                let delta = if increasing { delta } else { -delta };
                if delta < -3.0 * diff_se(lo, hi) {
                    let axis = if along_snr { "SNR" } else { "alpha" };
                    out.push(format!(
                        "{}: rate moves against the expected trend in {axis} between {} and {} (k = {k}, {} = {o}): {} -> {}",
                        lo.scenario, w[0], w[1], if along_snr { "alpha" } else { "snr" }, lo.empirical_rate, hi.empirical_rate
                    ));
                }
            }
        }
    }
    out
}

/// Points where the larger Ricean factor does worse than the smaller one by
/// more than three combined standard errors.
pub fn k_dominance_violations(points: &[CurvePoint]) -> Vec<String> {
    let ks = sorted_unique(points.iter().map(|p| p.k).collect());
    let (Some(&k_lo), Some(&k_hi)) = (ks.first(), ks.last()) else { return Vec::new() };
    let mut out = Vec::new();
    for hi in points.iter().filter(|p| p.k == k_hi && k_hi != k_lo) {
        if let Some(lo) = find(points, hi.snr_db, hi.alpha, k_lo) {
            if hi.empirical_rate < lo.empirical_rate - 3.0 * diff_se(lo, hi) {
                out.push(format!(
                    "{}: k = {k_hi} below k = {k_lo} at SNR {} alpha {}",
                    hi.scenario, hi.snr_db, hi.alpha
                ));
            }
        }
    }
    out
}

pub fn consistency_violations(points: &[CurvePoint]) -> Vec<String> {
    points
        .iter()
        .filter(|p| p.is_flagged())
        .map(|p| {
            format!(
                "{}: SNR {} alpha {} k {}: empirical {} vs analytic {} (std error {})",
                p.scenario, p.snr_db, p.alpha, p.k, p.empirical_rate, p.analytic_rate, p.std_error
            )
        })
        .collect()
}

pub fn curve_violations(points: &[CurvePoint]) -> Vec<String> {
    let Some(first) = points.first() else { return Vec::new() };
    let mut out = consistency_violations(points);
    let top_snr = points.iter().map(|p| p.snr_db).fold(f64::NEG_INFINITY, f64::max);
    match first.scenario {
        Scenario::PdSweep => {
            out.extend(trend_violations(points, true, true));
            out.extend(trend_violations(points, false, true));
            out.extend(k_dominance_violations(points));
            if let Some(p) = find(points, top_snr, 5.0, 100.0) {
                if p.empirical_rate < 0.99 {
                    out.push(format!("pd: {} < 0.99 at the top of the sweep", p.empirical_rate));
                }
            }
        }
        Scenario::PfFar | Scenario::PfNear => {
            out.extend(trend_violations(points, true, false));
            if first.scenario == Scenario::PfFar {
                if let Some(p) = find(points, top_snr, 1.0, 100.0) {
                    if p.empirical_rate > 0.01 {
                        out.push(format!("pf-far: {} > 0.01 at the top of the sweep", p.empirical_rate));
                    }
                }
            }
        }
        _ => {}
    }
    out
}

pub fn crb_violations(rows: &[CrbRow]) -> Vec<String> {
    let mut out: Vec<String> = rows
        .iter()
        .filter(|r| r.violates_bound())
        .map(|r| {
            format!(
                "crb: variance {} below bound {} by more than 3 x {} (theta {}, k {}, SNR {}, n {})",
                r.variance, r.crb, r.variance_se, r.theta_deg, r.k, r.snr_db, r.n
            )
        })
        .collect();
    if let Some((small, large)) = efficiency_ratios(rows, 100.0, 20.0) {
        if large >= small {
            out.push(format!("crb: variance/CRB at the largest array {large} is not below {small}"));
        }
    }
    out
}

/// Mean variance/CRB ratio over the angle lattice at the smallest and largest
/// array size, for the given `k` and SNR.
pub fn efficiency_ratios(rows: &[CrbRow], k: f64, snr_db: f64) -> Option<(f64, f64)> {
    let ns: Vec<usize> = {
        let mut v: Vec<usize> = rows.iter().map(|r| r.n).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let (&n_lo, &n_hi) = (ns.first()?, ns.last()?);
    if n_lo == n_hi {
        return None;
    }
    let mean_ratio = |n: usize| {
        let sel: Vec<f64> = rows
            .iter()
            .filter(|r| r.n == n && r.k == k && r.snr_db == snr_db)
            .map(CrbRow::efficiency_ratio)
            .collect();
        (!sel.is_empty()).then(|| sel.iter().sum::<f64>() / sel.len() as f64)
    };
    Some((mean_ratio(n_lo)?, mean_ratio(n_hi)?))
}

pub fn demo_violations(demo: &SkaDemo) -> Vec<String> {
    let mut out = Vec::new();
    if demo.honest.outcome != HandshakeOutcome::Completed {
        out.push(format!("ska-demo: honest run ended {:?}", demo.honest.outcome));
    }
    if demo.off_line.outcome != MitmOutcome::AbortedAtStep(3) {
        out.push(format!("ska-demo: off-line relay ended {:?}", demo.off_line.outcome));
    }
    if demo.on_segment.outcome != MitmOutcome::AttackSucceeds {
        out.push(format!("ska-demo: on-segment relay ended {:?}", demo.on_segment.outcome));
    }
    out
}

pub fn map_violations(cells: &[MitmCell]) -> Vec<String> {
    cells
        .iter()
        .filter(|c| c.violates_envelope())
        .map(|c| {
            format!(
                "mitm-map: cell ({}, {}) outside the region succeeds at {} above envelope {}",
                c.x, c.y, c.success_rate, c.envelope
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(snr: f64, alpha: f64, rate: f64) -> CurvePoint {
        CurvePoint {
            scenario: Scenario::PdSweep,
            snr_db: snr,
            alpha,
            k: 100.0,
            n: 4,
            pilots: 40,
            trials: 10_000,
            empirical_rate: rate,
            analytic_rate: rate,
            std_error: 0.004,
        }
    }

    #[test]
    fn detects_trend_breaks_only_beyond_tolerance() {
        let ok = vec![pt(0.0, 1.0, 0.5), pt(5.0, 1.0, 0.49), pt(10.0, 1.0, 0.6)];
        assert!(trend_violations(&ok, true, true).is_empty());
        let bad = vec![pt(0.0, 1.0, 0.5), pt(5.0, 1.0, 0.4)];
        assert_eq!(trend_violations(&bad, true, true).len(), 1);
        assert!(trend_violations(&bad, true, false).is_empty());
    }

    #[test]
    fn flags_inconsistent_points() {
        let mut p = pt(0.0, 1.0, 0.5);
        p.analytic_rate = 0.6;
        assert_eq!(consistency_violations(&[p]).len(), 1);
    }
}
