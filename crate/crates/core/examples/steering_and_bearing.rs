//! Steering vectors of a half-wavelength ULA and the direction a receiver
//! expects for a transmitter at a reported GPS position.

use vanet_aoa::geometry::{heading_angle, steering_vector, ArrayConfig, ArrayPose, GeoCoord};

fn main() -> vanet_aoa::error::Result<()> {
    let cfg = ArrayConfig::ula(4)?;
    for deg in [0.0f64, 25.0, -40.0] {
        let a = steering_vector(deg.to_radians(), &cfg)?;
        let phases: Vec<String> = a.iter().map(|z| format!("{:+.3}", z.arg())).collect();
        println!("theta = {deg:>5} deg  phases [{}]", phases.join(", "));
    }

    let rx = GeoCoord::from_degrees(8.6821, 50.1109)?;
    let tx = rx.offset_m(80.0, 60.0);
    println!("bearing tx -> rx: {:.3} deg", heading_angle(&tx, &rx)?.to_degrees());

    let pose = ArrayPose::new(rx, 150f64.to_radians());
    let dir = pose.expected_direction(&tx)?;
    println!(
        "expected AoA {:.3} deg (visible {:.3} deg, in front of the array: {})",
        dir.wrapped.to_degrees(),
        dir.visible.to_degrees(),
        dir.in_view
    );

    let back = pose.point_at_aoa(dir.wrapped, 100.0)?;
    let check = pose.expected_direction(&back)?;
    println!("point placed at that AoA reads back {:.6} deg", check.wrapped.to_degrees());
    Ok(())
}
