use crate::error::{Error, Result};
use crate::geometry::{heading_angle, wrap_angle, GeoCoord};

/// Positions from which a relay passes the direction check at both ends:
/// the intersection of two cones around the A-B line, one opening at each end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VulnerableRegion {
    pub pos_a: GeoCoord,
    pub pos_b: GeoCoord,
    /// Acceptance half-width at A, `alpha sqrt(CRB_A)`.
    pub half_width_a: f64,
    pub half_width_b: f64,
}

impl VulnerableRegion {
    pub fn new(pos_a: GeoCoord, pos_b: GeoCoord, half_width_a: f64, half_width_b: f64) -> Result<Self> {
        if !(half_width_a > 0.0) || !(half_width_b > 0.0) {
            return Err(Error::InvalidParameter("half widths must be positive".into()));
        }
        heading_angle(&pos_a, &pos_b)?;
        Ok(Self {
            pos_a,
            pos_b,
            half_width_a,
            half_width_b,
        })
    }

    /// The same region with the endpoints exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            pos_a: self.pos_b,
            pos_b: self.pos_a,
            half_width_a: self.half_width_b,
            half_width_b: self.half_width_a,
        }
    }

    /// Bearing offsets of `p` from the A-B line as seen from A and from B.
    pub fn offsets(&self, p: &GeoCoord) -> Result<(f64, f64)> {
        let from_a = wrap_angle(heading_angle(&self.pos_a, p)? - heading_angle(&self.pos_a, &self.pos_b)?);
        let from_b = wrap_angle(heading_angle(&self.pos_b, p)? - heading_angle(&self.pos_b, &self.pos_a)?);
        Ok((from_a, from_b))
    }

    pub fn contains(&self, p: &GeoCoord) -> Result<bool> {
        let (da, db) = self.offsets(p)?;
        Ok(da.abs() <= self.half_width_a && db.abs() <= self.half_width_b)
    }
}

/// Whether `p` lies in `region`. Fails when `p` coincides with an endpoint.
pub fn in_vulnerable_region(p: &GeoCoord, region: &VulnerableRegion) -> Result<bool> {
    region.contains(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn region(hw: f64) -> VulnerableRegion {
        let a = GeoCoord::from_degrees(8.0, 50.0).unwrap();
        let b = a.offset_m(300.0, 40.0);
        VulnerableRegion::new(a, b, hw, hw * 1.5).unwrap()
    }

    #[test]
    fn segment_points_are_inside() {
        let r = region(0.01);
        for f in [0.1, 0.5, 0.9] {
            let p = r.pos_a.offset_m(300.0 * f, 40.0 * f);
            assert!(in_vulnerable_region(&p, &r).unwrap());
        }
    }

    #[test]
    fn wide_offset_from_a_is_outside() {
        let r = region(0.01);
        let bearing = heading_angle(&r.pos_a, &r.pos_b).unwrap() + 3.0 * r.half_width_a;
        let p = r.pos_a.destination(bearing, 100.0);
        assert!(!in_vulnerable_region(&p, &r).unwrap());
        // Beyond B the cone from B points the wrong way.
        let behind = r.pos_a.offset_m(600.0, 80.0);
        assert!(!in_vulnerable_region(&behind, &r).unwrap());
    }

    #[test]
    fn degenerate_inputs() {
        let a = GeoCoord::from_degrees(8.0, 50.0).unwrap();
        assert!(VulnerableRegion::new(a, a, 0.1, 0.1).is_err());
        assert!(VulnerableRegion::new(a, a.offset_m(10.0, 0.0), 0.0, 0.1).is_err());
        assert!(in_vulnerable_region(&a, &region(0.1).swapped().swapped()).is_err());
    }

    #[test]
    fn area_shrinks_with_half_width() {
        // Rejection-sampled area over a fixed bounding box.
        let count = |hw: f64| {
            let r = region(hw);
            let mut hits = 0;
            for i in 0..120 {
                for j in 0..60 {
                    let p = r.pos_a.offset_m(-30.0 + i as f64 * 3.0, -60.0 + j as f64 * 2.5);
                    if r.contains(&p).unwrap_or(false) {
                        hits += 1;
                    }
                }
            }
            hits
        };
        let areas: Vec<usize> = [0.02, 0.05, 0.1, 0.2].iter().map(|&h| count(h)).collect();
        assert!(areas.windows(2).all(|w| w[0] < w[1]), "{areas:?}");
    }

    proptest! {
        #[test]
        fn symmetric_under_swap(e in -200.0f64..500.0, n in -200.0f64..200.0, hw in 0.001f64..0.5) {
            let r = region(hw);
            let p = r.pos_a.offset_m(e, n);
            if let (Ok(x), Ok(y)) = (r.contains(&p), r.swapped().contains(&p)) {
                prop_assert_eq!(x, y);
            }
        }
    }
}
