//! Physical constants and unit conversions.

/// Reduced Planck constant in µeV·ns.
pub const HBAR: f64 = 0.658_211_956_9;

/// Energy of a 1 e·nm dipole in a 1 V/cm field, in µeV.
///
/// 1 e · 1e-9 m · 1e2 V/m = 1e-7 eV.
pub const DIPOLE_FIELD_TO_UEV: f64 = 0.1;

/// Converts an energy in µeV to an angular frequency in rad/ns.
#[inline]
pub fn to_rate(energy_uev: f64) -> f64 {
    energy_uev / HBAR
}

/// Converts an angular frequency in rad/ns to an energy in µeV.
#[inline]
pub fn to_energy(rate: f64) -> f64 {
    rate * HBAR
}

/// Converts an energy in µeV to an angular frequency in s⁻¹.
#[inline]
pub fn to_rate_per_second(energy_uev: f64) -> f64 {
    to_rate(energy_uev) * 1e9
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(phi: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = phi.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn one_uev_is_about_1p5_per_ns() {
        assert!((to_rate(1.0) - 1.519_267_447).abs() < 1e-8);
        assert!((to_energy(to_rate(3.7)) - 3.7).abs() < 1e-14);
    }

    #[test]
    fn wrap_is_half_open() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!(wrap_angle(0.25).abs() - 0.25 < 1e-15);
    }
}
