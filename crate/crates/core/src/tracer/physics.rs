use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scene::SPEED_OF_LIGHT;

/// Axis-aligned plane `p[axis] == offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisPlane {
    pub axis: usize,
    pub offset: f64,
}

impl AxisPlane {
    pub fn new(axis: usize, offset: f64) -> Self {
        assert!(axis < 3, "axis must be 0, 1 or 2");
        AxisPlane { axis, offset }
    }
}

/// Reflects `p` across an axis-aligned plane.
pub fn mirror_point(p: Vec3, plane: AxisPlane) -> Vec3 {
    let mut out = p;
    out[plane.axis] = 2.0 * plane.offset - p[plane.axis];
    out
}

/// Received power in watts for unit transmit power and isotropic antennas:
/// Friis free-space loss times the per-bounce reflection losses.
pub fn path_power(length: f64, carrier_freq: f64, reflection_loss_db: &[f64]) -> Result<f64> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Domain(format!("path length must be positive, got {length}")));
    }
    if !(carrier_freq > 0.0) {
        return Err(Error::Domain(format!(
            "carrier frequency must be positive, got {carrier_freq}"
        )));
    }
    let lambda = SPEED_OF_LIGHT / carrier_freq;
    let friis = (lambda / (4.0 * PI * length)).powi(2);
    let total_loss_db: f64 = reflection_loss_db.iter().sum();
    Ok(friis * 10f64.powf(-total_loss_db / 10.0))
}

/// Carrier phase after propagation delay, with a π shift per bounce.
/// Result lies in [0, 2π).
pub fn path_phase(delay: f64, n_reflections: u32, carrier_freq: f64) -> f64 {
    // Reduce the cycle count first to keep precision for long delays.
    let cycles = (carrier_freq * delay).fract();
    let raw = -TAU * cycles + PI * f64::from(n_reflections % 2);
    let wrapped = raw.rem_euclid(TAU);
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Azimuth (from +x towards +y) and polar elevation (from +z), in degrees.
/// Azimuth is in (-180, 180].
pub(crate) fn direction_angles(d: Vec3) -> (f64, f64) {
    let n = d.norm();
    let az = d.y.atan2(d.x).to_degrees();
    let az = if az <= -180.0 { 180.0 } else { az };
    let el = (d.z / n).clamp(-1.0, 1.0).acos().to_degrees();
    (az, el)
}

/// Maps an azimuth in (-180, 180] onto [-180, 180).
pub(crate) fn half_open_azimuth(az: f64) -> f64 {
    if az >= 180.0 {
        az - 360.0
    } else {
        az
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_examples() {
        let p = Vec3::new(3.0, 5.0, 2.0);
        let y0 = AxisPlane::new(1, 0.0);
        assert_eq!(mirror_point(p, y0), Vec3::new(3.0, -5.0, 2.0));
        assert_eq!(mirror_point(mirror_point(p, y0), y0), p);
        assert_eq!(
            mirror_point(Vec3::new(1.0, 2.0, 3.0), AxisPlane::new(0, 10.0)),
            Vec3::new(19.0, 2.0, 3.0)
        );
    }

    #[test]
    fn friis_at_one_meter() {
        // Independent evaluation: λ = c / f, (λ / 4π)^2.
        let lambda = 299_792_458.0 / 60e9;
        let expected = (lambda / (4.0 * std::f64::consts::PI)).powi(2);
        let p = path_power(1.0, 60e9, &[]).unwrap();
        assert!((p - expected).abs() <= 1e-15 * expected);
        assert!((p - 1.5812e-7).abs() < 1e-10, "{p}");
        assert!((10.0 * p.log10() + 68.01).abs() < 0.01);
    }

    #[test]
    fn lossless_bounces_and_inverse_square() {
        let a = path_power(37.0, 60e9, &[]).unwrap();
        let b = path_power(37.0, 60e9, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(a, b);
        let p1 = path_power(1.0, 28e9, &[]).unwrap();
        let p2 = path_power(2.0, 28e9, &[]).unwrap();
        assert_eq!(p2 / p1, 0.25);
        let lossy = path_power(1.0, 28e9, &[6.0]).unwrap();
        assert!((lossy / p1 - 10f64.powf(-0.6)).abs() < 1e-15);
    }

    #[test]
    fn power_domain_error() {
        assert!(matches!(path_power(0.0, 60e9, &[]), Err(Error::Domain(_))));
        assert!(path_power(-3.0, 60e9, &[]).is_err());
    }

    #[test]
    fn phase_examples() {
        let fc = 60e9;
        let full = path_phase(1.0 / fc, 0, fc);
        assert!(full < 1e-9 || (TAU - full) < 1e-9, "{full}");
        assert!((path_phase(0.5 / fc, 0, fc) - PI).abs() < 1e-9);
        let base = path_phase(3.3e-8, 0, fc);
        let one = path_phase(3.3e-8, 1, fc);
        let diff = (one - base).rem_euclid(TAU);
        assert!((diff - PI).abs() < 1e-9);
        assert!((0.0..TAU).contains(&one));
    }

    #[test]
    fn angle_conventions() {
        let (az, el) = direction_angles(Vec3::X);
        assert_eq!((az, el), (0.0, 90.0));
        let (az, _) = direction_angles(-Vec3::X);
        assert_eq!(az, 180.0);
        assert_eq!(half_open_azimuth(az), -180.0);
        assert_eq!(direction_angles(Vec3::Z).1, 0.0);
        assert_eq!(direction_angles(-Vec3::Z).1, 180.0);
    }
}
