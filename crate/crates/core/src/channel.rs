//! Rician MIMO channel draws and pilot transmission `Y = H X + N`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{is_visible, steering_unchecked, ArrayConfig};
use crate::linalg::{ComplexMat, ComplexVec};

/// Pilot subcarriers per OFDM symbol.
pub const PILOTS_PER_SYMBOL: usize = 4;

/// Parameters of a Rician channel between two ULAs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianParams {
    /// Ricean factor (LOS to NLOS power ratio).
    pub k: f64,
    /// Angle of arrival of the LOS path.
    pub theta: f64,
    /// Angle of departure of the LOS path.
    pub phi: f64,
    pub cfg: ArrayConfig,
}

impl RicianParams {
    pub fn new(k: f64, theta: f64, phi: f64, cfg: ArrayConfig) -> Result<Self> {
        if !(k >= 0.0) {
            return Err(Error::InvalidParameter(format!("Ricean factor must be >= 0, got {k}")));
        }
        for angle in [theta, phi] {
            if !is_visible(angle) {
                return Err(Error::AngleOutOfRange(angle));
            }
        }
        Ok(Self { k, theta, phi, cfg })
    }

    /// LOS amplitude `sqrt(k / (1 + k))`.
    pub fn mu(&self) -> f64 {
        if self.k.is_infinite() {
            1.0
        } else {
            (self.k / (1.0 + self.k)).sqrt()
        }
    }

    /// NLOS scale `sqrt(1 / (2 (1 + k)))`.
    pub fn sigma(&self) -> f64 {
        (1.0 / (2.0 * (1.0 + self.k))).sqrt()
    }

    /// Deterministic component `mu (1 + j)/sqrt(2) a_r(theta) a_t(phi)^H`.
    pub fn los_matrix(&self) -> ComplexMat {
        let a_r = steering_unchecked(self.theta, &self.cfg);
        let a_t = steering_unchecked(self.phi, &self.cfg);
        let gain = Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2) * self.mu();
        (a_r * a_t.adjoint()) * gain
    }
}

/// One draw of `H = H_los + H_nlos`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_los: ComplexMat,
    pub h_nlos: ComplexMat,
    pub h: ComplexMat,
}

/// Standard complex normal with independent `N(0, 1)` real and imaginary parts.
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn draw_nlos<R: Rng + ?Sized>(params: &RicianParams, rng: &mut R) -> ComplexMat {
    let n = params.cfg.n;
    let sigma = params.sigma();
    ComplexMat::from_fn(n, n, |_, _| complex_normal(rng) * sigma)
}

/// Draws one channel realization.
///
/// NLOS entries are `sigma (g_r + j g_i)` with standard normal `g`, so each
/// entry has variance `2 sigma^2 = 1 / (1 + k)` and `mu^2 + 2 sigma^2 = 1`.
pub fn draw_channel<R: Rng + ?Sized>(params: &RicianParams, rng: &mut R) -> ChannelRealization {
    let h_los = params.los_matrix();
    let h_nlos = draw_nlos(params, rng);
    let h = &h_los + &h_nlos;
    ChannelRealization { h_los, h_nlos, h }
}

/// Known pilot vectors sent over `L = 4 n_p n_s` pilot subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotFrame {
    pub n_p: usize,
    pub n_s: usize,
    pub pilots: Vec<ComplexVec>,
    pub power: f64,
}

impl PilotFrame {
    pub fn new(n_p: usize, n_s: usize, pilots: Vec<ComplexVec>, power: f64) -> Result<Self> {
        let l = pilot_count(n_p, n_s)?;
        if pilots.len() != l {
            return Err(Error::InvalidParameter(format!(
                "expected {l} pilot vectors, got {}",
                pilots.len()
            )));
        }
        if !(power > 0.0) {
            return Err(Error::InvalidParameter(format!("power must be positive, got {power}")));
        }
        if let Some(x) = pilots.iter().find(|x| x.norm_squared() > power * (1.0 + 1e-9)) {
            return Err(Error::InvalidParameter(format!(
                "pilot energy {} exceeds power {power}",
                x.norm_squared()
            )));
        }
        Ok(Self {
            n_p,
            n_s,
            pilots,
            power,
        })
    }

    /// Harmonic tight frame: `X_l[m] = sqrt(P/n) exp(-j 2 pi l m / L)`.
    ///
    /// Every pilot has energy `P` and, for `L >= n`, the pilot auto-covariance
    /// is exactly `(P/n) I`.
    pub fn tight(cfg: &ArrayConfig, n_p: usize, n_s: usize, power: f64) -> Result<Self> {
        let l = pilot_count(n_p, n_s)?;
        let amp = (power / cfg.n as f64).sqrt();
        let pilots = (0..l)
            .map(|li| {
                ComplexVec::from_fn(cfg.n, |m, _| {
                    let phase = -2.0 * std::f64::consts::PI * ((li * m) % l) as f64 / l as f64;
                    Complex64::from_polar(amp, phase)
                })
            })
            .collect();
        Self::new(n_p, n_s, pilots, power)
    }

    /// Number of pilot uses `L`.
    pub fn len(&self) -> usize {
        self.pilots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pilots.is_empty()
    }

    pub fn elements(&self) -> usize {
        self.pilots.first().map_or(0, |x| x.len())
    }

    /// `(1/L) sum_l ||X_l||^2`.
    pub fn mean_energy(&self) -> f64 {
        self.pilots.iter().map(|x| x.norm_squared()).sum::<f64>() / self.len() as f64
    }

    /// Pilots per packet, `4 n_s`.
    pub fn pilots_per_packet(&self) -> usize {
        PILOTS_PER_SYMBOL * self.n_s
    }

    /// Copy with every pilot multiplied by `c`; the power budget scales by `|c|^2`.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            n_p: self.n_p,
            n_s: self.n_s,
            pilots: self.pilots.iter().map(|x| x * c).collect(),
            power: self.power * c.norm_sqr(),
        }
    }
}

fn pilot_count(n_p: usize, n_s: usize) -> Result<usize> {
    if n_p == 0 || n_s == 0 {
        return Err(Error::InvalidParameter("n_p and n_s must be positive".into()));
    }
    Ok(PILOTS_PER_SYMBOL * n_p * n_s)
}

/// Random pilots: complex Gaussian vectors rescaled to energy exactly `P`.
pub fn default_pilots<R: Rng + ?Sized>(
    cfg: &ArrayConfig,
    n_p: usize,
    n_s: usize,
    power: f64,
    rng: &mut R,
) -> Result<PilotFrame> {
    let l = pilot_count(n_p, n_s)?;
    let pilots = (0..l)
        .map(|_| {
            let g = ComplexVec::from_fn(cfg.n, |_, _| complex_normal(rng));
            let scale = (power / g.norm_squared()).sqrt();
            g * Complex64::new(scale, 0.0)
        })
        .collect();
    PilotFrame::new(n_p, n_s, pilots, power)
}

/// How often the NLOS component is redrawn during a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coherence {
    /// One NLOS draw per packet.
    #[default]
    Block,
    /// Independent NLOS draw for every pilot use.
    PerPilot,
}

/// Received pilots together with the frame that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    pub ys: Vec<ComplexVec>,
    pub frame: PilotFrame,
    pub noise_var: f64,
}

impl PilotObservation {
    pub fn new(ys: Vec<ComplexVec>, frame: PilotFrame, noise_var: f64) -> Result<Self> {
        if ys.len() != frame.len() {
            return Err(Error::InvalidParameter(format!(
                "{} observations for {} pilots",
                ys.len(),
                frame.len()
            )));
        }
        Ok(Self {
            ys,
            frame,
            noise_var,
        })
    }
}

/// Sends every pilot through the channel and adds `CN(0, noise_var I)` noise.
///
/// Randomness is consumed in a fixed order independent of the pilot values,
/// so the output is linear in the pilots for a fixed generator state.
pub fn transmit<R: Rng + ?Sized>(
    frame: &PilotFrame,
    params: &RicianParams,
    noise_var: f64,
    rng: &mut R,
    coherence: Coherence,
) -> Result<PilotObservation> {
    if !(noise_var >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise variance must be >= 0, got {noise_var}")));
    }
    if frame.elements() != params.cfg.n {
        return Err(Error::InvalidArray(format!(
            "pilots have {} entries for a {}-element array",
            frame.elements(),
            params.cfg.n
        )));
    }
    let h_los = params.los_matrix();
    let noise_sd = (noise_var / 2.0).sqrt();
    let per_packet = frame.pilots_per_packet();
    let mut h_nlos = ComplexMat::zeros(params.cfg.n, params.cfg.n);
    let ys = frame
        .pilots
        .iter()
        .enumerate()
        .map(|(l, x)| {
            let redraw = match coherence {
                Coherence::PerPilot => true,
                Coherence::Block => l % per_packet == 0,
            };
            if redraw {
                h_nlos = draw_nlos(params, rng);
            }
            let noise = ComplexVec::from_fn(params.cfg.n, |_, _| complex_normal(rng) * noise_sd);
            &h_los * x + &h_nlos * x + noise
        })
        .collect();
    PilotObservation::new(ys, frame.clone(), noise_var)
}

/// Radio link used by simulations: array, Ricean factor, noise and pilots.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    pub cfg: ArrayConfig,
    pub k: f64,
    pub noise_var: f64,
    pub frame: PilotFrame,
    pub coherence: Coherence,
}

impl LinkModel {
    /// Pilot observation of a transmitter whose LOS arrives at `theta`.
    pub fn observe<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<PilotObservation> {
        let params = RicianParams::new(self.k, theta, 0.0, self.cfg)?;
        transmit(&self.frame, &params, self.noise_var, rng, self.coherence)
    }
}
