//! Conversions between the linear frequencies quoted for devices
//! (GHz, MHz, ω/2π) and the angular units used internally (rad/ns).
//!
//! Rates quoted as "κ/2π = 3.01 MHz" convert exactly like frequencies.
//! Lifetimes are kept in ns; a decay rate is simply their inverse.

use std::f64::consts::TAU;

pub fn ghz_to_rad_per_ns(f_ghz: f64) -> f64 {
    TAU * f_ghz
}

pub fn mhz_to_rad_per_ns(f_mhz: f64) -> f64 {
    TAU * f_mhz * 1e-3
}

pub fn rad_per_ns_to_ghz(omega: f64) -> f64 {
    omega / TAU
}

pub fn rad_per_ns_to_mhz(omega: f64) -> f64 {
    omega / TAU * 1e3
}

/// Rate in 1/ns for a lifetime in ns. An infinite lifetime gives zero.
pub fn rate_from_lifetime_ns(t_ns: f64) -> f64 {
    if t_ns.is_infinite() {
        0.0
    } else {
        1.0 / t_ns
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let f = 6.937;
        assert!((rad_per_ns_to_ghz(ghz_to_rad_per_ns(f)) - f).abs() < 1e-15);
        assert!((rad_per_ns_to_mhz(mhz_to_rad_per_ns(116.0)) - 116.0).abs() < 1e-12);
        assert_eq!(rate_from_lifetime_ns(f64::INFINITY), 0.0);
        assert!((rate_from_lifetime_ns(880.0) * 880.0 - 1.0).abs() < 1e-15);
    }
}
