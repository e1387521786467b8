//! Uniform linear array response and spherical-earth bearing geometry.
//!
//! Angles are radians throughout. Wrapped angles live in `(-pi, pi]`; angles
//! of arrival seen by a ULA live in `[-pi/2, pi/2]`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexVec;

/// Mean earth radius in metres, used only to place points at metric offsets.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Geometry of a uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    /// Number of elements.
    pub n: usize,
    /// Element spacing over carrier wavelength, `d / lambda`.
    pub spacing_ratio: f64,
}

impl ArrayConfig {
    pub fn new(n: usize, spacing_ratio: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArray(format!("need at least 2 elements, got {n}")));
        }
        if !(spacing_ratio > 0.0) || !spacing_ratio.is_finite() {
            return Err(Error::InvalidArray(format!(
                "spacing ratio must be positive, got {spacing_ratio}"
            )));
        }
        Ok(Self { n, spacing_ratio })
    }

    /// Half-wavelength array with `n` elements.
    pub fn ula(n: usize) -> Result<Self> {
        Self::new(n, 0.5)
    }

    /// Electrical phase step `2 pi (d / lambda) sin(theta)` between adjacent elements.
    pub(crate) fn phase_step(&self, theta: f64) -> f64 {
        2.0 * PI * self.spacing_ratio * theta.sin()
    }
}

/// Longitude/latitude pair in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoCoord {
    pub lon: f64,
    pub lat: f64,
}

impl GeoCoord {
    pub fn new(lon: f64, lat: f64) -> Result<Self> {
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&lat) || !(-PI..=PI).contains(&lon) {
            return Err(Error::InvalidParameter(format!(
                "coordinate out of range: lon {lon}, lat {lat}"
            )));
        }
        Ok(Self { lon, lat })
    }

    pub fn from_degrees(lon_deg: f64, lat_deg: f64) -> Result<Self> {
        Self::new(lon_deg.to_radians(), lat_deg.to_radians())
    }

    /// Point displaced by local east/north offsets in metres.
    pub fn offset_m(&self, east: f64, north: f64) -> GeoCoord {
        let lat = self.lat + north / EARTH_RADIUS_M;
        let lon = self.lon + east / (EARTH_RADIUS_M * self.lat.cos());
        GeoCoord {
            lon: wrap_angle(lon),
            lat,
        }
    }

    /// Great-circle destination reached by travelling `distance_m` along `bearing`
    /// (clockwise from true north).
    pub fn destination(&self, bearing: f64, distance_m: f64) -> GeoCoord {
        let delta = distance_m / EARTH_RADIUS_M;
        let (sin_lat, cos_lat) = self.lat.sin_cos();
        let lat = (sin_lat * delta.cos() + cos_lat * delta.sin() * bearing.cos()).asin();
        let lon = self.lon
            + (bearing.sin() * delta.sin() * cos_lat).atan2(delta.cos() - sin_lat * lat.sin());
        GeoCoord {
            lon: wrap_angle(lon),
            lat,
        }
    }

    /// Local east/north offset of `other` from `self` in metres (equirectangular).
    pub fn local_offset_m(&self, other: &GeoCoord) -> (f64, f64) {
        let east = wrap_angle(other.lon - self.lon) * EARTH_RADIUS_M * self.lat.cos();
        let north = (other.lat - self.lat) * EARTH_RADIUS_M;
        (east, north)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Maps a wrapped direction onto the ULA-visible half plane.
///
/// A linear array only resolves `sin(theta)`, so `theta` and `pi - theta` are
/// indistinguishable. The returned angle has the same sine and lies in
/// `[-pi/2, pi/2]`.
pub fn fold_to_visible(theta: f64) -> f64 {
    let t = wrap_angle(theta);
    if t > FRAC_PI_2 {
        PI - t
    } else if t < -FRAC_PI_2 {
        -PI - t
    } else {
        t
    }
}

pub fn is_visible(theta: f64) -> bool {
    (-FRAC_PI_2..=FRAC_PI_2).contains(&theta)
}

fn check_visible(theta: f64) -> Result<()> {
    if is_visible(theta) {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange(theta))
    }
}

pub(crate) fn steering_unchecked(theta: f64, cfg: &ArrayConfig) -> ComplexVec {
    let step = cfg.phase_step(theta);
    ComplexVec::from_fn(cfg.n, |m, _| Complex64::from_polar(1.0, -step * m as f64))
}

pub(crate) fn steering_derivative_unchecked(theta: f64, cfg: &ArrayConfig) -> ComplexVec {
    let a = steering_unchecked(theta, cfg);
    let slope = 2.0 * PI * cfg.spacing_ratio * theta.cos();
    ComplexVec::from_fn(cfg.n, |m, _| Complex64::new(0.0, -slope * m as f64) * a[m])
}

/// ULA steering vector `[1, z, z^2, ..., z^(n-1)]` with `z = exp(-j 2 pi (d/lambda) sin theta)`.
pub fn steering_vector(theta: f64, cfg: &ArrayConfig) -> Result<ComplexVec> {
    check_visible(theta)?;
    Ok(steering_unchecked(theta, cfg))
}

/// Derivative of [`steering_vector`] with respect to `theta`.
pub fn steering_derivative(theta: f64, cfg: &ArrayConfig) -> Result<ComplexVec> {
    check_visible(theta)?;
    Ok(steering_derivative_unchecked(theta, cfg))
}

/// Heading of a plane wave emitted at `tx` and received at `rx`, measured from
/// true north.
///
/// This is `atan2(nu, upsilon)` with
/// `nu = cos(lat_r) sin(lon_r - lon_t)` and
/// `upsilon = cos(lat_t) sin(lat_r) - sin(lat_t) cos(lat_r) cos(lon_r - lon_t)`,
/// i.e. the initial great-circle bearing from `tx` towards `rx`. Swap the
/// arguments for the reciprocal direction.
pub fn heading_angle(tx: &GeoCoord, rx: &GeoCoord) -> Result<f64> {
    let dlon = rx.lon - tx.lon;
    let nu = rx.lat.cos() * dlon.sin();
    let upsilon = tx.lat.cos() * rx.lat.sin() - tx.lat.sin() * rx.lat.cos() * dlon.cos();
    if nu.abs() < 1e-15 && upsilon.abs() < 1e-15 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(wrap_angle(nu.atan2(upsilon)))
}

/// Expected angle of arrival `theta_h + theta_r_north`, wrapped into `(-pi, pi]`.
///
/// The result may fall outside the ULA-visible range; callers decide how to
/// treat that (see [`fold_to_visible`]).
pub fn expected_aoa(theta_h: f64, theta_r_north: f64) -> f64 {
    wrap_angle(theta_h + theta_r_north)
}

/// Position and array orientation of a node.
///
/// `array_heading` is the angle between the array axis and true north,
/// counter-clockwise positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayPose {
    pub position: GeoCoord,
    pub array_heading: f64,
}

/// Expected direction of a transmitter as seen by an array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedDirection {
    /// `theta_h + theta_r^N` wrapped into `(-pi, pi]`.
    pub wrapped: f64,
    /// The same direction folded onto `[-pi/2, pi/2]`.
    pub visible: f64,
    /// Whether `wrapped` was already inside the visible range.
    pub in_view: bool,
}

impl ArrayPose {
    pub fn new(position: GeoCoord, array_heading: f64) -> Self {
        Self {
            position,
            array_heading,
        }
    }

    /// Direction at which a transmitter located at `tx` should arrive.
    pub fn expected_direction(&self, tx: &GeoCoord) -> Result<ExpectedDirection> {
        let theta_h = heading_angle(tx, &self.position)?;
        let wrapped = expected_aoa(theta_h, self.array_heading);
        Ok(ExpectedDirection {
            wrapped,
            visible: fold_to_visible(wrapped),
            in_view: is_visible(wrapped),
        })
    }

    /// A point `range_m` away whose expected angle of arrival is `aoa`.
    ///
    /// Solved by fixed-point iteration on the launch bearing; converges to
    /// machine precision in a handful of steps at vehicular ranges.
    pub fn point_at_aoa(&self, aoa: f64, range_m: f64) -> Result<GeoCoord> {
        let target = wrap_angle(aoa - self.array_heading);
        let mut launch = wrap_angle(target + PI);
        let mut tx = self.position.destination(launch, range_m);
        for _ in 0..20 {
            let h = heading_angle(&tx, &self.position)?;
            let err = wrap_angle(target - h);
            if err.abs() < 1e-13 {
                break;
            }
            launch = wrap_angle(launch + err);
            tx = self.position.destination(launch, range_m);
        }
        Ok(tx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn steering_at_broadside_is_all_ones() {
        let a = steering_vector(0.0, &ArrayConfig::ula(4).unwrap()).unwrap();
        for z in a.iter() {
            assert_eq!(*z, c(1.0, 0.0));
        }
    }

    #[test]
    fn steering_at_endfire_alternates() {
        let a = steering_vector(FRAC_PI_2, &ArrayConfig::ula(2).unwrap()).unwrap();
        assert_eq!(a[0], c(1.0, 0.0));
        assert_abs_diff_eq!(a[1].re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn steering_quarter_turns_at_thirty_degrees() {
        let a = steering_vector(PI / 6.0, &ArrayConfig::ula(4).unwrap()).unwrap();
        let expected = [c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0), c(0.0, 1.0)];
        for (z, e) in a.iter().zip(expected) {
            assert!((z - e).norm() < 1e-14, "{z} vs {e}");
        }
    }

    #[test]
    fn steering_rejects_invisible_angles() {
        let cfg = ArrayConfig::ula(4).unwrap();
        assert_eq!(
            steering_vector(2.0, &cfg).unwrap_err(),
            Error::AngleOutOfRange(2.0)
        );
        assert!(steering_derivative(-1.6, &cfg).is_err());
    }

    #[test]
    fn derivative_vanishes_on_array_axis() {
        let cfg = ArrayConfig::ula(5).unwrap();
        for theta in [FRAC_PI_2, -FRAC_PI_2] {
            let d = steering_derivative(theta, &cfg).unwrap();
            assert!(d.iter().all(|z| z.norm() < 1e-15));
        }
    }

    #[test]
    fn derivative_at_broadside() {
        let d = steering_derivative(0.0, &ArrayConfig::ula(2).unwrap()).unwrap();
        assert_eq!(d[0], c(0.0, 0.0));
        assert_abs_diff_eq!(d[1].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1].im, -PI, epsilon = 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(ArrayConfig::new(1, 0.5).is_err());
        assert!(ArrayConfig::new(4, 0.0).is_err());
        assert!(ArrayConfig::new(4, f64::NAN).is_err());
    }

    #[test]
    fn heading_examples() {
        let origin = GeoCoord::new(0.0, 0.0).unwrap();
        let east = GeoCoord::new(0.01, 0.0).unwrap();
        let north = GeoCoord::new(0.0, 0.01).unwrap();
        assert_abs_diff_eq!(heading_angle(&origin, &east).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(heading_angle(&origin, &north).unwrap(), 0.0, epsilon = 1e-15);
        assert_eq!(
            heading_angle(&origin, &origin).unwrap_err(),
            Error::DegenerateGeometry
        );
    }

    #[test]
    fn expected_aoa_examples() {
        assert_abs_diff_eq!(expected_aoa(0.3, 0.0), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(expected_aoa(FRAC_PI_2, PI), -FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(expected_aoa(0.4, -0.1), 0.3, epsilon = 1e-15);
        assert_eq!(wrap_angle(-PI), PI);
    }

    #[test]
    fn folding_preserves_sine() {
        for t in [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0] {
            let f = fold_to_visible(t);
            assert!(is_visible(f));
            assert_abs_diff_eq!(f.sin(), t.sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn point_at_aoa_round_trips() {
        let pose = ArrayPose::new(GeoCoord::from_degrees(-83.0, 40.0).unwrap(), 0.3);
        for deg in [-35.0f64, -25.0, 0.0, 25.0, 37.5, 40.0] {
            let tx = pose.point_at_aoa(deg.to_radians(), 150.0).unwrap();
            let dir = pose.expected_direction(&tx).unwrap();
            assert!(dir.in_view);
            assert_abs_diff_eq!(dir.wrapped, deg.to_radians(), epsilon = 1e-10);
        }
    }

    proptest! {
        #[test]
        fn steering_has_unit_modulus_and_norm_n(theta in -FRAC_PI_2..=FRAC_PI_2, n in 2usize..24) {
            let cfg = ArrayConfig::ula(n).unwrap();
            let a = steering_vector(theta, &cfg).unwrap();
            prop_assert_eq!(a[0], c(1.0, 0.0));
            for z in a.iter() {
                prop_assert!((z.norm() - 1.0).abs() < 1e-14);
            }
            let gram = a.dotc(&a);
            prop_assert!((gram.re - n as f64).abs() < 1e-12 && gram.im.abs() < 1e-12);
        }

        #[test]
        fn derivative_matches_central_differences(theta in -1.5f64..1.5, n in 2usize..12, s in 0.1f64..1.0) {
            // Independent oracle: central differences of the steering vector itself.
            let cfg = ArrayConfig::new(n, s).unwrap();
            let h = 1e-6;
            let fd = (steering_vector(theta + h, &cfg).unwrap() - steering_vector(theta - h, &cfg).unwrap())
                / Complex64::new(2.0 * h, 0.0);
            let d = steering_derivative(theta, &cfg).unwrap();
            let rel = (&fd - &d).norm() / d.norm().max(1e-12);
            prop_assert!(rel < 1e-6, "relative error {}", rel);
        }

        #[test]
        fn equatorial_heading_is_quarter_turn(lon_t in -1.0f64..1.0, dlon in -0.5f64..0.5) {
            prop_assume!(dlon.abs() > 1e-6);
            let tx = GeoCoord::new(lon_t, 0.0).unwrap();
            let rx = GeoCoord::new(lon_t + dlon, 0.0).unwrap();
            let h = heading_angle(&tx, &rx).unwrap();
            prop_assert!((h - FRAC_PI_2 * dlon.signum()).abs() < 1e-12);
        }

        #[test]
        fn expected_aoa_is_wrapped(h in -10.0f64..10.0, r in -10.0f64..10.0) {
            let t = expected_aoa(h, r);
            prop_assert!(t > -PI && t <= PI);
        }
    }
}
