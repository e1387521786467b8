//! Maximum-likelihood angle-of-arrival estimation and its Cramer-Rao bound.
//!
//! The receiver regresses the received pilots on the known ones,
//! `B = R_xy^H R_xx^-1`, whitens with the interference covariance `R_z`, and
//! picks the angle whose steering vector captures the most energy of the
//! whitened channel:
//!
//! `theta_hat = argmin tr(B^H R_z^-1/2 G(theta) R_z^-1/2 B)`,
//! `G(theta) = I - a a^H / n`.
//!
//! With `C = R_z^-1/2 B` and `M = C C^H` the criterion equals
//! `||C||_F^2 - a^H M a / n`, and `a^H M a` is a trigonometric polynomial in
//! `z = exp(-j 2 pi s sin theta)` whose coefficients are the diagonal sums of
//! `M`. The grid search evaluates that polynomial with Horner's rule.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;

use crate::channel::{PilotFrame, PilotObservation, RicianParams};
use crate::error::{Error, Result};
use crate::geometry::{steering_derivative_unchecked, steering_unchecked, ArrayConfig};
use crate::linalg::{frobenius_sq, hermitian_inv_sqrt, hermitian_inverse, is_hermitian, scaled_identity, ComplexMat, ComplexVec};
use crate::stats::TruncatedNormal;

/// Default grid step, 0.1 degree.
pub const DEFAULT_GRID_STEP: f64 = std::f64::consts::PI / 1800.0;

/// Golden-section stopping width in radians.
const REFINE_TOL: f64 = 1e-11;

/// Second-order statistics of one pilot observation.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSet {
    /// `(1/L) sum X Y^H`.
    pub r_xy: ComplexMat,
    /// `(1/L) sum X X^H`.
    pub r_xx: ComplexMat,
    /// `R_xy^H R_xx^-1`, the least-squares channel estimate.
    pub b: ComplexMat,
    /// Interference-plus-noise covariance used for whitening.
    pub r_z: ComplexMat,
}

impl CovarianceSet {
    /// Replaces the whitening covariance.
    pub fn with_interference(mut self, r_z: ComplexMat) -> Result<Self> {
        let n = self.b.nrows();
        if r_z.nrows() != n || r_z.ncols() != n {
            return Err(Error::InvalidParameter(format!(
                "R_z must be {n}x{n}, got {}x{}",
                r_z.nrows(),
                r_z.ncols()
            )));
        }
        self.r_z = r_z;
        Ok(self)
    }
}

fn interference_level(k: f64, frame: &PilotFrame, noise_var: f64) -> f64 {
    let two_sigma_sq = 1.0 / (1.0 + k);
    two_sigma_sq * frame.mean_energy() + noise_var
}

/// Interference-plus-noise covariance `(2 sigma^2 (1/L) sum ||X_l||^2 + sigma_N^2) I`.
pub fn interference_covariance(
    params: &RicianParams,
    frame: &PilotFrame,
    noise_var: f64,
) -> Result<ComplexMat> {
    let level = interference_level(params.k, frame, noise_var);
    if !(level > 0.0) || !level.is_finite() {
        return Err(Error::Numerical(format!(
            "interference covariance is not positive definite (level {level})"
        )));
    }
    Ok(scaled_identity(params.cfg.n, level))
}

/// Empirical `R_xy`, `R_xx` and the regression `B`.
///
/// `r_z` is initialised to `noise_var I` (the identity when noiseless); use
/// [`CovarianceSet::with_interference`] to whiten with the full interference.
pub fn sample_covariances(obs: &PilotObservation) -> Result<CovarianceSet> {
    let l = obs.frame.len();
    let n = obs.frame.elements();
    if l < n {
        return Err(Error::RankDeficient { pilots: l, elements: n });
    }
    let mut r_xy = ComplexMat::zeros(n, n);
    let mut r_xx = ComplexMat::zeros(n, n);
    for (x, y) in obs.frame.pilots.iter().zip(&obs.ys) {
        r_xy += x * y.adjoint();
        r_xx += x * x.adjoint();
    }
    let inv_l = Complex64::new(1.0 / l as f64, 0.0);
    r_xy *= inv_l;
    r_xx *= inv_l;

    let scale = (0..n).map(|i| r_xx[(i, i)].re).fold(0.0, f64::max);
    let chol = Cholesky::new(r_xx.clone())
        .ok_or(Error::RankDeficient { pilots: l, elements: n })?;
    let min_pivot = (0..n).map(|i| chol.l_dirty()[(i, i)].re.powi(2)).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-12 * scale) {
        return Err(Error::RankDeficient { pilots: l, elements: n });
    }
    let b = r_xy.adjoint() * chol.inverse();
    if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("channel regression produced non-finite entries".into()));
    }
    // Any scalar whitening leaves the criterion's minimiser unchanged, so a
    // noiseless observation falls back to the identity.
    let noise_floor = if obs.noise_var > 0.0 { obs.noise_var } else { 1.0 };
    Ok(CovarianceSet {
        r_xy,
        r_xx,
        b,
        r_z: scaled_identity(n, noise_floor),
    })
}

/// Orthogonal-complement projector `I - a a^H / (a^H a)` of the steering vector.
pub fn projector_complement(theta: f64, cfg: &ArrayConfig) -> ComplexMat {
    let a = steering_unchecked(theta, cfg);
    let n = cfg.n;
    let mut g = ComplexMat::identity(n, n);
    g -= (&a * a.adjoint()) / Complex64::new(n as f64, 0.0);
    g
}

/// Sorted set of candidate angles for the grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    points: Vec<f64>,
    sines: Vec<f64>,
    step: f64,
}

impl AngleGrid {
    /// Uniform grid over `[-pi/2, pi/2]` including both endpoints.
    pub fn uniform(step: f64) -> Result<Self> {
        if !(step > 0.0) || step > std::f64::consts::PI {
            return Err(Error::InvalidParameter(format!("grid step must be in (0, pi], got {step}")));
        }
        let cells = (std::f64::consts::PI / step).round().max(1.0) as usize;
        let h = std::f64::consts::PI / cells as f64;
        let mut points: Vec<f64> = (0..=cells).map(|i| -FRAC_PI_2 + i as f64 * h).collect();
        points[cells] = FRAC_PI_2;
        Self::build(points, h)
    }

    /// Arbitrary candidate angles; they are sorted and deduplicated.
    pub fn from_points(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if let Some(&bad) = points.iter().find(|t| !(-FRAC_PI_2..=FRAC_PI_2).contains(*t)) {
            return Err(Error::AngleOutOfRange(bad));
        }
        points.sort_by(|a, b| a.total_cmp(b));
        points.dedup();
        let step = points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max);
        Self::build(points, step)
    }

    fn build(points: Vec<f64>, step: f64) -> Result<Self> {
        let sines = points.iter().map(|t| t.sin()).collect();
        Ok(Self { points, sines, step })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Largest spacing between neighbouring grid points.
    pub fn resolution(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self::uniform(DEFAULT_GRID_STEP).expect("default grid step is valid")
    }
}

/// The ML criterion in polynomial form for fast repeated evaluation.
struct Criterion {
    /// `r_d = sum_p M[p, p + d]` for `d = 1..n-1`.
    coeffs: Vec<Complex64>,
    /// `||C||_F^2`.
    energy: f64,
    n: f64,
    two_pi_s: f64,
}

impl Criterion {
    fn new(cov: &CovarianceSet, cfg: &ArrayConfig) -> Result<Self> {
        let n = cfg.n;
        if cov.b.nrows() != n || cov.b.ncols() != n {
            return Err(Error::InvalidArray(format!(
                "covariances are {}x{} for a {n}-element array",
                cov.b.nrows(),
                cov.b.ncols()
            )));
        }
        let c = hermitian_inv_sqrt(&cov.r_z)? * &cov.b;
        let m = &c * c.adjoint();
        let coeffs = (1..n)
            .map(|d| (0..n - d).map(|p| m[(p, p + d)]).sum())
            .collect();
        Ok(Self {
            coeffs,
            energy: frobenius_sq(&c),
            n: n as f64,
            two_pi_s: 2.0 * std::f64::consts::PI * cfg.spacing_ratio,
        })
    }

    fn eval_sin(&self, sin_theta: f64) -> f64 {
        let z = Complex64::from_polar(1.0, -self.two_pi_s * sin_theta);
        let mut acc = Complex64::new(0.0, 0.0);
        for r in self.coeffs.iter().rev() {
            acc = (acc + r) * z;
        }
        // a^H M a = r_0 + 2 Re sum_d r_d z^d, with r_0 = ||C||_F^2.
        let quad = self.energy + 2.0 * acc.re;
        self.energy - quad / self.n
    }

    fn eval(&self, theta: f64) -> f64 {
        self.eval_sin(theta.sin())
    }
}

/// Value of the ML criterion `tr(B^H R_z^-1/2 G(theta) R_z^-1/2 B)` at `theta`,
/// evaluated directly from the projector.
pub fn ml_objective(cov: &CovarianceSet, cfg: &ArrayConfig, theta: f64) -> Result<f64> {
    let w = hermitian_inv_sqrt(&cov.r_z)?;
    let c = w * &cov.b;
    let g = projector_complement(theta, cfg);
    Ok((c.adjoint() * g * c).trace().re)
}

/// Result of the grid search and refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoaFit {
    pub theta_hat: f64,
    pub objective: f64,
    pub grid_resolution: f64,
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > REFINE_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Grid search over `grid` followed by golden-section refinement between the
/// neighbours of the best grid point. Exact ties go to the smallest `|theta|`.
pub fn ml_aoa(cov: &CovarianceSet, cfg: &ArrayConfig, grid: &AngleGrid) -> Result<AoaFit> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let crit = Criterion::new(cov, cfg)?;
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, &s) in grid.sines.iter().enumerate() {
        let v = crit.eval_sin(s);
        if v < best_val || (v == best_val && grid.points[i].abs() < grid.points[best].abs()) {
            best = i;
            best_val = v;
        }
    }
    if !best_val.is_finite() {
        return Err(Error::Numerical("ML criterion is not finite".into()));
    }
    let pts = &grid.points;
    let lo = pts[best.saturating_sub(1)];
    let hi = pts[(best + 1).min(pts.len() - 1)];
    let (mut theta_hat, mut objective) = (pts[best], best_val);
    if hi > lo {
        let (t, v) = golden_section(|t| crit.eval(t), lo, hi);
        if v < objective {
            theta_hat = t;
            objective = v;
        }
    }
    Ok(AoaFit {
        theta_hat,
        objective,
        grid_resolution: grid.resolution(),
    })
}

fn crb_from_parts(theta: f64, k: f64, cfg: &ArrayConfig, power: f64, pilots: usize, r_z: &ComplexMat) -> Result<f64> {
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&theta) {
        return Err(Error::AngleOutOfRange(theta));
    }
    if !(k > 0.0) {
        return Err(Error::UndefinedBound(format!("no LOS component to locate (k = {k})")));
    }
    if !(power > 0.0) || pilots == 0 {
        return Err(Error::InvalidParameter("power and pilot count must be positive".into()));
    }
    if theta.cos().abs() < 1e-15 {
        return Ok(f64::INFINITY);
    }
    let d_hat = hermitian_inv_sqrt(r_z)? * steering_derivative_unchecked(theta, cfg);
    let a = steering_unchecked(theta, cfg);
    // D^H G D = ||D||^2 - |a^H D|^2 / n
    let proj = a.dotc(&d_hat).norm_sqr() / cfg.n as f64;
    let quad = d_hat.norm_squared() - proj;
    if !(quad > 0.0) {
        return Ok(f64::INFINITY);
    }
    let inv_mu_sq = if k.is_infinite() { 1.0 } else { (1.0 + k) / k };
    Ok(inv_mu_sq / (2.0 * pilots as f64 * power * quad))
}

/// Cramer-Rao bound `(1 + k) / (2 L k P D_hat^H G D_hat)` with `D_hat = R_z^-1/2 dA/dtheta`.
///
/// Returns `+inf` on the array axis and an error when `k = 0`.
pub fn crb(theta: f64, params: &RicianParams, power: f64, pilots: usize, r_z: &ComplexMat) -> Result<f64> {
    crb_from_parts(theta, params.k, &params.cfg, power, pilots, r_z)
}

/// Asymptotic distribution of the estimate: a normal with mean `theta_true`
/// and variance `crb`, truncated to `[-pi/2, pi/2]`.
pub fn estimator_distribution(theta_true: f64, crb: f64) -> Result<TruncatedNormal> {
    TruncatedNormal::new(theta_true, crb, -FRAC_PI_2, FRAC_PI_2)
}

/// Density of the estimate at `theta_hat`.
pub fn estimator_pdf(theta_hat: f64, theta_true: f64, crb: f64) -> Result<f64> {
    Ok(estimator_distribution(theta_true, crb)?.pdf(theta_hat))
}

/// Fisher information for `theta` computed by finite differences.
///
/// The model treats each pilot as `Y_l = a(theta) (w^H X_l) + Z_l` with
/// `Z_l ~ CN(0, R_z)` and an unknown complex nuisance vector `w` whose true
/// value is `mu exp(-j pi/4) a_t(phi)`. The expected log-likelihood is
/// differentiated numerically in `(theta, Re w, Im w)` and the nuisance block is
/// eliminated with a Schur complement. Only the steering vector enters; the
/// analytic derivative and projector are not used.
pub fn fisher_information_numeric(
    params: &RicianParams,
    frame: &PilotFrame,
    noise_var: f64,
    theta: f64,
) -> Result<f64> {
    let cfg = &params.cfg;
    let n = cfg.n;
    let r_z = interference_covariance(params, frame, noise_var)?;
    let w_inv = hermitian_inverse(&r_z)?;
    let gain = Complex64::from_polar(params.mu(), -FRAC_PI_4);
    let w0: ComplexVec = steering_unchecked(params.phi, cfg) * gain;

    let dim = 1 + 2 * n;
    let h_theta = 1e-4;
    let h_w = 1e-3 * params.mu().max(1e-3);
    let steps: Vec<f64> = (0..dim).map(|i| if i == 0 { h_theta } else { h_w }).collect();

    let means = |delta: &[f64]| -> Vec<ComplexVec> {
        let a = steering_unchecked(theta + delta[0], cfg);
        let w = ComplexVec::from_fn(n, |m, _| w0[m] + Complex64::new(delta[1 + m], delta[1 + n + m]));
        frame.pilots.iter().map(|x| &a * w.dotc(x)).collect()
    };
    let base = means(&vec![0.0; dim]);
    // Negative expected log-likelihood relative to the truth.
    let cost = |delta: &[f64]| -> f64 {
        means(delta)
            .iter()
            .zip(&base)
            .map(|(m, m0)| {
                let d = m - m0;
                d.dotc(&(&w_inv * &d)).re
            })
            .sum()
    };

    let mut fim = DMatrix::<f64>::zeros(dim, dim);
    let mut delta = vec![0.0; dim];
    for i in 0..dim {
        delta[i] = steps[i];
        let fp = cost(&delta);
        delta[i] = -steps[i];
        let fm = cost(&delta);
        delta[i] = 0.0;
        fim[(i, i)] = (fp + fm) / (steps[i] * steps[i]);
        for j in 0..i {
            let mut eval = |si: f64, sj: f64| {
                delta[i] = si * steps[i];
                delta[j] = sj * steps[j];
                let v = cost(&delta);
                delta[i] = 0.0;
                delta[j] = 0.0;
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * steps[i] * steps[j]);
            fim[(i, j)] = v;
            fim[(j, i)] = v;
        }
    }

    let nuisance = fim.view((1, 1), (dim - 1, dim - 1)).into_owned();
    let cross = fim.view((1, 0), (dim - 1, 1)).into_owned();
    let chol = Cholesky::new(nuisance)
        .ok_or_else(|| Error::Numerical("nuisance Fisher block is not positive definite".into()))?;
    let schur = fim[(0, 0)] - (cross.transpose() * chol.solve(&cross))[(0, 0)];
    if !schur.is_finite() || schur < 0.0 {
        return Err(Error::Numerical(format!("finite-difference Fisher information failed ({schur})")));
    }
    Ok(schur)
}

/// Point estimate with its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoaEstimate {
    pub theta_hat: f64,
    /// CRB evaluated at `theta_hat`.
    pub crb: f64,
    pub objective: f64,
    pub grid_resolution: f64,
}

/// Receiver-side estimator with oracle knowledge of the Ricean factor.
#[derive(Debug, Clone, PartialEq)]
pub struct AoaEstimator {
    pub cfg: ArrayConfig,
    pub k: f64,
    pub grid: AngleGrid,
}

impl AoaEstimator {
    pub fn new(cfg: ArrayConfig, k: f64) -> Self {
        Self {
            cfg,
            k,
            grid: AngleGrid::default(),
        }
    }

    pub fn with_grid(mut self, grid: AngleGrid) -> Self {
        self.grid = grid;
        self
    }

    /// Interference covariance implied by `k` and the frame.
    pub fn interference(&self, frame: &PilotFrame, noise_var: f64) -> Result<ComplexMat> {
        let level = interference_level(self.k, frame, noise_var);
        if !(level > 0.0) || !level.is_finite() {
            return Err(Error::Numerical(format!("interference level {level} is not positive")));
        }
        Ok(scaled_identity(self.cfg.n, level))
    }

    /// CRB at `theta` for a given frame and noise level.
    pub fn crb_at(&self, theta: f64, frame: &PilotFrame, noise_var: f64) -> Result<f64> {
        let r_z = self.interference(frame, noise_var)?;
        crb_from_parts(theta, self.k, &self.cfg, frame.power, frame.len(), &r_z)
    }

    pub fn estimate(&self, obs: &PilotObservation) -> Result<AoaEstimate> {
        let r_z = self.interference(&obs.frame, obs.noise_var)?;
        if !is_hermitian(&r_z, 1e-12) {
            return Err(Error::Numerical("interference covariance is not Hermitian".into()));
        }
        let cov = sample_covariances(obs)?.with_interference(r_z.clone())?;
        let fit = ml_aoa(&cov, &self.cfg, &self.grid)?;
        let crb = crb_from_parts(fit.theta_hat, self.k, &self.cfg, obs.frame.power, obs.frame.len(), &r_z)?;
        Ok(AoaEstimate {
            theta_hat: fit.theta_hat,
            crb,
            objective: fit.objective,
            grid_resolution: fit.grid_resolution,
        })
    }
}
