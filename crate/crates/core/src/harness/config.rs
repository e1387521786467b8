use std::fmt;
use std::str::FromStr;

use crate::auth::PkiMode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    PdSweep,
    PfFar,
    PfNear,
    CrbCheck,
    SkaDemo,
    MitmMap,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::PdSweep,
        Scenario::PfFar,
        Scenario::PfNear,
        Scenario::CrbCheck,
        Scenario::SkaDemo,
        Scenario::MitmMap,
    ];

    /// Subcommand name, also used in the `scenario` CSV column.
    pub fn name(self) -> &'static str {
        match self {
            Scenario::PdSweep => "pd",
            Scenario::PfFar => "pf-far",
            Scenario::PfNear => "pf-near",
            Scenario::CrbCheck => "crb",
            Scenario::SkaDemo => "ska-demo",
            Scenario::MitmMap => "mitm-map",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == t || format!("{sc:?}") == t)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{t}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotKind {
    /// Orthogonal DFT frame with `R_xx = (P/n) I`.
    Tight,
    /// Independent complex Gaussian pilots, drawn once per lattice point.
    Gaussian,
}

/// Experiment settings. Angles are in degrees, powers in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub snr_db: Vec<f64>,
    /// Wald thresholds, in units of `sqrt(CRB)`.
    pub alpha_degrees: Vec<f64>,
    pub k: Vec<f64>,
    pub n: usize,
    pub n_p: usize,
    pub n_s: usize,
    pub trials: usize,
    pub seed: u64,
    pub legit_deg: f64,
    pub far_true_deg: f64,
    pub far_claim_deg: f64,
    pub near_true_deg: f64,
    pub near_claim_deg: f64,
    /// Transmitter distance from the receiver in the sweeps.
    pub range_m: f64,
    pub crb_theta_deg: Vec<f64>,
    pub crb_k: Vec<f64>,
    pub crb_snr_db: Vec<f64>,
    pub crb_n: Vec<usize>,
    pub per_pilot_fading: bool,
    pub pilots: PilotKind,
    pub pki_mode: PkiMode,
    pub m_bits: u8,
    pub separation_m: f64,
    /// Angle at which each SKA node sees its peer.
    pub peer_aoa_deg: f64,
    /// Off-line relay offset used by the SKA demo.
    pub offset_deg: f64,
    pub raster_nx: usize,
    pub raster_ny: usize,
    pub raster_margin_m: f64,
    pub raster_half_height_m: f64,
}

impl ExperimentConfig {
    /// Defaults for `scenario`. SKA runs use single operating points.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let mut c = Self {
            scenario,
            snr_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            alpha_degrees: (1..=5).map(f64::from).collect(),
            k: vec![10.0, 100.0],
            n: 4,
            n_p: 1,
            n_s: 10,
            trials: 10_000,
            seed: 2017,
            legit_deg: 25.0,
            far_true_deg: -35.0,
            far_claim_deg: -25.0,
            near_true_deg: 40.0,
            near_claim_deg: 37.5,
            range_m: 100.0,
            crb_theta_deg: vec![0.0, 25.0, 40.0, 70.0],
            crb_k: vec![10.0, 100.0],
            crb_snr_db: vec![10.0, 20.0],
            crb_n: vec![4, 16],
            per_pilot_fading: true,
            pilots: PilotKind::Tight,
            pki_mode: PkiMode::Strict,
            m_bits: crate::ska::DEFAULT_M_BITS,
            separation_m: 200.0,
            peer_aoa_deg: 15.0,
            offset_deg: 20.0,
            raster_nx: 25,
            raster_ny: 13,
            raster_margin_m: 50.0,
            raster_half_height_m: 60.0,
        };
        match scenario {
            Scenario::SkaDemo => {
                c.snr_db = vec![10.0];
                c.alpha_degrees = vec![2.0];
                c.k = vec![100.0];
                c.trials = 1;
            }
            Scenario::MitmMap => {
                c.snr_db = vec![20.0];
                c.alpha_degrees = vec![3.0];
                c.k = vec![100.0];
                c.trials = 200;
            }
            _ => {}
        }
        c
    }

    /// Pilot frame length `L = 4 n_p n_s`.
    pub fn frame_len(&self) -> usize {
        crate::channel::PILOTS_PER_SYMBOL * self.n_p * self.n_s
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "scenario" => self.scenario = v.parse()?,
            "snr_db" | "snr_db_range" => self.snr_db = list(key, v)?,
            "alpha" | "alpha_degrees" => self.alpha_degrees = list(key, v)?,
            "k" => self.k = list(key, v)?,
            "n" => self.n = scalar(key, v)?,
            "n_p" => self.n_p = scalar(key, v)?,
            "n_s" => self.n_s = scalar(key, v)?,
            "trials" => self.trials = scalar(key, v)?,
            "seed" => self.seed = scalar(key, v)?,
            "legit_deg" => self.legit_deg = scalar(key, v)?,
            "far_true_deg" => self.far_true_deg = scalar(key, v)?,
            "far_claim_deg" => self.far_claim_deg = scalar(key, v)?,
            "near_true_deg" => self.near_true_deg = scalar(key, v)?,
            "near_claim_deg" => self.near_claim_deg = scalar(key, v)?,
            "range_m" => self.range_m = scalar(key, v)?,
            "crb_theta_deg" => self.crb_theta_deg = list(key, v)?,
            "crb_k" => self.crb_k = list(key, v)?,
            "crb_snr_db" => self.crb_snr_db = list(key, v)?,
            "crb_n" => self.crb_n = list(key, v)?,
            "per_pilot_fading" => self.per_pilot_fading = scalar(key, v)?,
            "pilots" => {
                self.pilots = match v {
                    "tight" => PilotKind::Tight,
                    "gaussian" => PilotKind::Gaussian,
                    _ => return Err(Error::Config(format!("pilots must be tight or gaussian, got `{v}`"))),
                }
            }
            "pki_mode" => {
                self.pki_mode = match v {
                    "strict" => PkiMode::Strict,
                    "permissive" => PkiMode::Permissive,
                    _ => return Err(Error::Config(format!("pki_mode must be strict or permissive, got `{v}`"))),
                }
            }
            "m_bits" => self.m_bits = scalar(key, v)?,
            "separation_m" => self.separation_m = scalar(key, v)?,
            "peer_aoa_deg" => self.peer_aoa_deg = scalar(key, v)?,
            "offset_deg" => self.offset_deg = scalar(key, v)?,
            "raster_nx" => self.raster_nx = scalar(key, v)?,
            "raster_ny" => self.raster_ny = scalar(key, v)?,
            "raster_margin_m" => self.raster_margin_m = scalar(key, v)?,
            "raster_half_height_m" => self.raster_half_height_m = scalar(key, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        for (name, len) in [
            ("snr_db", self.snr_db.len()),
            ("alpha_degrees", self.alpha_degrees.len()),
            ("k", self.k.len()),
            ("crb_theta_deg", self.crb_theta_deg.len()),
            ("crb_k", self.crb_k.len()),
            ("crb_snr_db", self.crb_snr_db.len()),
            ("crb_n", self.crb_n.len()),
        ] {
            if len == 0 {
                return bad(format!("{name} must not be empty"));
            }
        }
        if self.snr_db.iter().chain(&self.crb_snr_db).any(|s| !s.is_finite()) {
            return bad("SNR values must be finite".into());
        }
        if self.alpha_degrees.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return bad("alpha values must be positive".into());
        }
        if self.k.iter().chain(&self.crb_k).any(|&k| !(k > 0.0 && k.is_finite())) {
            return bad("Ricean factors must be positive".into());
        }
        if self.n_p == 0 || self.n_s == 0 {
            return bad("n_p and n_s must be at least 1".into());
        }
        for &n in std::iter::once(&self.n).chain(&self.crb_n) {
            if n < 2 {
                return bad(format!("array size must be at least 2, got {n}"));
            }
            if self.frame_len() < n {
                return bad(format!("L = {} pilots cannot resolve {n} elements", self.frame_len()));
            }
        }
        let angles = [
            self.legit_deg,
            self.far_true_deg,
            self.far_claim_deg,
            self.near_true_deg,
            self.near_claim_deg,
            self.peer_aoa_deg,
        ];
        if angles.iter().chain(&self.crb_theta_deg).any(|a| !(a.abs() < 90.0)) {
            return bad("angles must lie strictly inside (-90, 90) degrees".into());
        }
        if !(1..=16).contains(&self.m_bits) {
            return bad("m_bits must be in 1..=16".into());
        }
        if !(self.range_m > 0.0) || !(self.separation_m > 0.0) {
            return bad("distances must be positive".into());
        }
        if self.raster_nx == 0 || self.raster_ny == 0 || !(self.raster_margin_m >= 0.0) || !(self.raster_half_height_m > 0.0) {
            return bad("raster must have positive extent".into());
        }
        if !(self.offset_deg.abs() < 90.0) {
            return bad("offset_deg must lie inside (-90, 90)".into());
        }
        if matches!(self.scenario, Scenario::SkaDemo | Scenario::MitmMap)
            && (self.snr_db.len() != 1 || self.alpha_degrees.len() != 1 || self.k.len() != 1)
        {
            return bad(format!("{} takes a single snr_db, alpha and k", self.scenario));
        }
        Ok(())
    }
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value `{v}` for {}", key.trim())))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| scalar(key, s))
        .collect()
}

/// Parses a comma-separated list, as used by the CLI flags.
pub fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    list(key, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        for s in Scenario::ALL {
            let c = ExperimentConfig::for_scenario(s);
            c.validate().unwrap();
            assert_eq!(c.frame_len(), 40);
        }
    }

    #[test]
    fn file_overrides_and_errors() {
        let mut c = ExperimentConfig::for_scenario(Scenario::PdSweep);
        c.apply_text("# sweep\nsnr_db = 5, 10\nalpha_degrees=2\n\ntrials = 50 # short\nscenario = PfNear\n")
            .unwrap();
        assert_eq!(c.snr_db, vec![5.0, 10.0]);
        assert_eq!(c.alpha_degrees, vec![2.0]);
        assert_eq!(c.trials, 50);
        assert_eq!(c.scenario, Scenario::PfNear);
        assert!(c.apply_text("bogus = 1").is_err());
        assert!(c.apply_text("trials").is_err());
        assert!(c.apply_text("trials = many").is_err());
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::for_scenario(Scenario::PdSweep);
        c.snr_db.clear();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::for_scenario(Scenario::PdSweep);
        c.n_s = 1;
        c.crb_n = vec![16];
        assert!(c.validate().is_err());
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("fig5".parse::<Scenario>().is_err());
    }
}
