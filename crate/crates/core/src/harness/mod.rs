//! Monte Carlo experiments: detection and false-alarm sweeps, bound checks,
//! SKA traces and relay maps, with deterministic per-trial seeding.

pub mod check;
mod config;
mod csv;
mod ska;
mod sweep;

pub use config::{parse_list, ExperimentConfig, PilotKind, Scenario};
pub use csv::{crb_csv, curve_csv, fmt_g, map_csv, CURVE_HEADER, MAP_HEADER};
pub use ska::{honest_completion, mitm_outcomes, run_mitm_map, run_ska_demo, ska_scenario, MitmCell, SkaDemo};
pub use sweep::{
    link_for, noise_variance, run_crb_check, run_pd_sweep, run_pf_sweep, trial_rng, variance_with_se, CrbRow,
    CurvePoint, PILOT_POWER,
};

use crate::error::Result;

/// Result of one scenario run.
#[derive(Debug, Clone)]
pub enum Output {
    Curve(Vec<CurvePoint>),
    Crb(Vec<CrbRow>),
    Demo(Box<SkaDemo>, String),
    Map(Vec<MitmCell>),
}

impl Output {
    /// File contents: CSV for every scenario except the demo, which writes its trace.
    pub fn render(&self) -> String {
        match self {
            Output::Curve(p) => curve_csv(p),
            Output::Crb(r) => crb_csv(r),
            Output::Demo(_, text) => text.clone(),
            Output::Map(c) => map_csv(c),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        match self {
            Output::Curve(p) => check::curve_violations(p),
            Output::Crb(r) => check::crb_violations(r),
            Output::Demo(d, _) => check::demo_violations(d),
            Output::Map(c) => check::map_violations(c),
        }
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        match self {
            Output::Curve(p) => {
                let flagged = p.iter().filter(|x| x.is_flagged()).count();
                format!("{} lattice points, {flagged} outside 3 standard errors of the analytic rate", p.len())
            }
            Output::Crb(rows) => {
                let mut s = String::from("theta_deg k snr_db n variance crb fim_inverse ratio violation\n");
                for r in rows {
                    s.push_str(&format!(
                        "{} {} {} {} {} {} {} {} {}\n",
                        fmt_g(r.theta_deg),
                        fmt_g(r.k),
                        fmt_g(r.snr_db),
                        r.n,
                        fmt_g(r.variance),
                        fmt_g(r.crb),
                        fmt_g(r.fim_inverse),
                        fmt_g(r.efficiency_ratio()),
                        r.violates_bound()
                    ));
                }
                s
            }
            Output::Demo(d, _) => format!(
                "honest: {:?}; off-line relay: {:?}; on-segment relay: {:?}",
                d.honest.outcome, d.off_line.outcome, d.on_segment.outcome
            ),
            Output::Map(c) => {
                let inside = c.iter().filter(|x| x.in_region).count();
                format!("{} cells, {inside} inside the vulnerable region", c.len())
            }
        }
    }
}

/// Runs the scenario selected by `cfg.scenario`.
pub fn run(cfg: &ExperimentConfig) -> Result<Output> {
    use Scenario::*;
    Ok(match cfg.scenario {
        PdSweep => Output::Curve(run_pd_sweep(cfg)?),
        PfFar | PfNear => Output::Curve(run_pf_sweep(cfg)?),
        CrbCheck => Output::Crb(run_crb_check(cfg)?),
        SkaDemo => {
            let demo = run_ska_demo(cfg)?;
            let text = demo.render(cfg);
            Output::Demo(Box::new(demo), text)
        }
        MitmMap => Output::Map(run_mitm_map(cfg)?),
    })
}
