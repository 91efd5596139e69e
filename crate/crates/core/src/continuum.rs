//! Closed-form continuum model of two inductively coupled lumped lines:
//! normal-mode dispersion, carrier/envelope split, power split, phase
//! velocities, impedance and switching-time estimates.
//!
//! Every function accepts either bare or self-capacitance corrected
//! inductances; applying the correction is the caller's choice.

use std::f64::consts::FRAC_PI_2;

use crate::error::{non_negative, positive, Result};
use crate::model::DeviceParams;

/// Phase of the cross output relative to the through output, radians, with
/// the `e^{+j w t}` time convention used throughout the crate.
///
/// Holds while the coupling phase is in (0, pi/2); past pi/2 the through
/// amplitude changes sign and the difference flips to +pi/2.
pub const OUTPUT_PHASE_DIFFERENCE: f64 = -FRAC_PI_2;

/// Normal-mode wavenumbers at one frequency, rad per unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolution {
    /// Even mode, both lines in phase; sees L + 2 L_coup.
    pub k_plus: f64,
    /// Odd mode; sees only L.
    pub k_minus: f64,
    /// Carrier, (k_minus + k_plus) / 2.
    pub carrier: f64,
    /// Envelope, (k_minus - k_plus) / 2. Non-positive for L_coup >= 0.
    pub envelope: f64,
}

impl ModeSolution {
    pub fn envelope_magnitude(&self) -> f64 {
        self.envelope.abs()
    }
}

/// Output power fractions predicted from the coupling phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPrediction {
    /// |S21|^2, stays on the driven line.
    pub p21: f64,
    /// |S31|^2, crosses to the other line.
    pub p31: f64,
    /// arg(S31) - arg(S21), radians.
    pub phase_diff: f64,
}

fn check_line(inductance: f64, capacitance: f64, coupling: f64) -> Result<()> {
    positive("line_inductance", inductance)?;
    positive("line_capacitance", capacitance)?;
    non_negative("coupling_inductance", coupling)?;
    Ok(())
}

/// sqrt(1 + 2 L_coup / L), the even-mode slowing factor.
pub fn coupling_factor(inductance: f64, coupling: f64) -> f64 {
    (1.0 + 2.0 * coupling / inductance).sqrt()
}

pub fn dispersion(omega: f64, inductance: f64, capacitance: f64, coupling: f64) -> Result<ModeSolution> {
    check_line(inductance, capacitance, coupling)?;
    positive("omega", omega)?;
    let k_minus = omega * (inductance * capacitance).sqrt();
    let k_plus = coupling_factor(inductance, coupling) * k_minus;
    Ok(ModeSolution {
        k_plus,
        k_minus,
        carrier: 0.5 * (k_minus + k_plus),
        envelope: 0.5 * (k_minus - k_plus),
    })
}

/// Accumulated envelope phase |chi| * N over `n_units` cells, radians.
pub fn coupling_phase(omega: f64, inductance: f64, capacitance: f64, coupling: f64, n_units: f64) -> Result<f64> {
    check_line(inductance, capacitance, coupling)?;
    positive("omega", omega)?;
    positive("n_units", n_units)?;
    Ok(0.5 * (coupling_factor(inductance, coupling) - 1.0) * (inductance * capacitance).sqrt() * omega * n_units)
}

pub fn split_prediction(coupling_phase: f64) -> SplitPrediction {
    let (s, c) = coupling_phase.sin_cos();
    SplitPrediction {
        p21: c * c,
        p31: s * s,
        phase_diff: OUTPUT_PHASE_DIFFERENCE,
    }
}

/// Constant (odd-mode) and variable (even-mode) phase velocities, m/s.
pub fn phase_velocities(inductance: f64, capacitance: f64, coupling: f64, unit_pitch: f64) -> Result<(f64, f64)> {
    check_line(inductance, capacitance, coupling)?;
    positive("unit_pitch", unit_pitch)?;
    let v_const = unit_pitch / (inductance * capacitance).sqrt();
    Ok((v_const, v_const / coupling_factor(inductance, coupling)))
}

/// Mean of the even- and odd-mode impedances,
/// 0.5 (sqrt(1 + 2 L_coup / L) + 1) sqrt(L / C).
pub fn characteristic_impedance(inductance: f64, capacitance: f64, coupling: f64) -> Result<f64> {
    check_line(inductance, capacitance, coupling)?;
    let z_line = (inductance / capacitance).sqrt();
    if coupling == 0.0 {
        return Ok(z_line);
    }
    Ok(0.5 * (coupling_factor(inductance, coupling) + 1.0) * z_line)
}

/// Switching-time budget, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingTimes {
    /// Inverse SQUID plasma frequency.
    pub squid_response: f64,
    /// Propagation along the line at the constant phase velocity.
    pub through_delay: f64,
    /// Propagation at the variable phase velocity.
    pub cross_delay: f64,
    /// SQUID response plus the longer of the two delays.
    pub total: f64,
}

pub fn switching_time(device: &DeviceParams, effective_coupling: f64, squid_capacitance: f64) -> Result<SwitchingTimes> {
    positive("effective_coupling", effective_coupling)?;
    positive("squid_capacitance", squid_capacitance)?;
    positive("n_units", device.n_units as f64)?;
    let (v_const, v_var) = phase_velocities(
        device.line_inductance,
        device.line_capacitance,
        effective_coupling,
        device.unit_pitch,
    )?;
    let length = device.unit_pitch * device.n_units as f64;
    let squid_response = (effective_coupling * squid_capacitance).sqrt();
    let through_delay = length / v_const;
    let cross_delay = length / v_var;
    Ok(SwitchingTimes {
        squid_response,
        through_delay,
        cross_delay,
        total: squid_response + through_delay.max(cross_delay),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const L: f64 = 0.28e-9;
    const C: f64 = 300e-15;

    fn w(f: f64) -> f64 {
        2.0 * PI * f
    }

    /// Independent inversion of the coupling phase by bisection on L_coup.
    fn bisect_coupling(omega: f64, n: f64, target: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 10.0 * L);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if coupling_phase(omega, L, C, mid, n).unwrap() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn dispersion_examples() {
        let m = dispersion(w(6e9), L, C, 0.0).unwrap();
        assert_eq!(m.k_plus, m.k_minus);
        assert_eq!(m.envelope, 0.0);
        // 2 pi 6e9 sqrt(0.28e-9 * 300e-15) = 0.345 518
        assert_relative_eq!(m.k_minus, 0.345_518, max_relative = 1e-5);

        let m = dispersion(w(6e9), L, C, 1.5 * L).unwrap();
        assert_relative_eq!(m.k_plus, 2.0 * m.k_minus, max_relative = 1e-15);
        assert_eq!(m.carrier, 0.5 * (m.k_minus + m.k_plus));
        assert_eq!(m.envelope, 0.5 * (m.k_minus - m.k_plus));
        assert!(m.envelope < 0.0);
        assert_eq!(m.envelope_magnitude(), -m.envelope);

        assert!(dispersion(w(6e9), 0.0, C, 0.0).is_err());
        assert!(dispersion(w(6e9), L, C, -1e-12).is_err());
    }

    #[test]
    fn coupling_phase_examples() {
        assert_eq!(coupling_phase(w(6e9), L, C, 0.0, 24.0).unwrap(), 0.0);

        let lc = bisect_coupling(w(6e9), 24.0, FRAC_PI_2);
        assert_relative_eq!(lc, 0.126e-9, max_relative = 0.01);
        let forward = coupling_phase(w(6e9), L, C, 0.126e-9, 24.0).unwrap();
        assert_relative_eq!(forward, FRAC_PI_2, max_relative = 0.01);

        let single = coupling_phase(w(6e9), L, C, 0.1e-9, 24.0).unwrap();
        let double = coupling_phase(w(6e9), L, C, 0.1e-9, 48.0).unwrap();
        assert_eq!(double, 2.0 * single);
    }

    #[test]
    fn split_landmarks() {
        let eps = f64::EPSILON;
        let s = split_prediction(FRAC_PI_2);
        assert!(s.p21.abs() <= eps && (s.p31 - 1.0).abs() <= eps);
        let s = split_prediction(3.0 * PI / 4.0);
        assert!((s.p21 - 0.5).abs() <= eps && (s.p31 - 0.5).abs() <= eps);
        let s = split_prediction(PI);
        assert!((s.p21 - 1.0).abs() <= eps && s.p31.abs() <= eps);
        assert_eq!(s.phase_diff, -FRAC_PI_2);
    }

    #[test]
    fn uncoupled_lines_never_transfer() {
        let m = dispersion(w(5e9), L, C, 0.0).unwrap();
        let s = split_prediction(m.envelope_magnitude() * 24.0);
        assert_eq!((s.p21, s.p31), (1.0, 0.0));
    }

    #[test]
    fn phase_velocity_examples() {
        let (v_const, v_var) = phase_velocities(L, C, 0.0, 34e-6).unwrap();
        assert_eq!(v_const, v_var);
        // m / sqrt(LC) = 3.71e6 m/s; the quoted 3.4e6 is within 10 %.
        assert_relative_eq!(v_const, 3.709_7e6, max_relative = 1e-4);
        assert_relative_eq!(v_const, 3.4e6, max_relative = 0.1);
    }

    #[test]
    fn variable_velocity_spans_quoted_range() {
        // Couplings that put the cross state at the two ends of the 4.8-7.3 GHz band.
        let l_hi_f = bisect_coupling(w(7.3e9), 24.0, FRAC_PI_2);
        let l_lo_f = bisect_coupling(w(4.8e9), 24.0, FRAC_PI_2);
        let (_, v_fast) = phase_velocities(L, C, l_hi_f, 34e-6).unwrap();
        let (_, v_slow) = phase_velocities(L, C, l_lo_f, 34e-6).unwrap();
        assert!(v_fast > v_slow);
        assert_relative_eq!(v_fast, 2.75e6, max_relative = 0.15);
        assert!(v_slow >= 2.07e6 * 0.85 && v_slow <= 2.75e6 * 1.15);
    }

    #[test]
    fn impedance_examples() {
        let z = characteristic_impedance(L, C, 0.0).unwrap();
        assert_eq!(z, (L / C).sqrt());
        assert_relative_eq!(z, 30.55, max_relative = 1e-3);
        assert_relative_eq!(z, 30.0, max_relative = 0.05);
        let zc = characteristic_impedance(L, C, 0.1e-9).unwrap();
        assert!(zc > z);
        assert!(characteristic_impedance(L, 0.0, 0.0).is_err());
    }

    #[test]
    fn switching_time_examples() {
        let device = DeviceParams::reference();
        let l_star = 0.144e-9;
        let c_squid = (12e-12f64).powi(2) / l_star;
        let t = switching_time(&device, l_star, c_squid).unwrap();
        assert_relative_eq!(t.squid_response, 12e-12, max_relative = 1e-12);

        let t2 = switching_time(&device.with_units(48), l_star, c_squid).unwrap();
        assert_relative_eq!(t2.through_delay, 2.0 * t.through_delay, max_relative = 1e-15);
        assert_relative_eq!(t2.cross_delay, 2.0 * t.cross_delay, max_relative = 1e-15);

        // m N sqrt(LC) = 816 um / 3.71e6 m/s = 220 ps.
        assert_relative_eq!(t.through_delay, 219.96e-12, max_relative = 1e-3);
        assert!(t.cross_delay > t.through_delay);
        assert_eq!(t.total, t.squid_response + t.cross_delay);
        assert!(t.total > 1e-10 && t.total < 1e-9);
    }

    proptest! {
        #[test]
        fn split_closes(x in -20.0f64..20.0) {
            let s = split_prediction(x);
            prop_assert!((s.p21 + s.p31 - 1.0).abs() <= 1e-15);
        }

        #[test]
        fn split_is_pi_periodic_and_mirrored(x in -10.0f64..10.0) {
            let a = split_prediction(x);
            let b = split_prediction(x + PI);
            let c = split_prediction(PI - x);
            prop_assert!((a.p21 - b.p21).abs() < 1e-14);
            prop_assert!((a.p21 - c.p21).abs() < 1e-14);
        }

        #[test]
        fn coupling_phase_monotone(
            f in 1e9f64..10e9, n in 1.0f64..200.0, lc in 1e-12f64..1e-9, bump in 1.001f64..2.0,
        ) {
            let base = coupling_phase(w(f), L, C, lc, n).unwrap();
            prop_assert!(coupling_phase(w(f * bump), L, C, lc, n).unwrap() > base);
            prop_assert!(coupling_phase(w(f), L, C, lc, n * bump).unwrap() > base);
            prop_assert!(coupling_phase(w(f), L, C, lc * bump, n).unwrap() > base);
        }

        #[test]
        fn impedance_tracks_coupling(lc in 0.0f64..1e-9) {
            let z = characteristic_impedance(L, C, lc).unwrap();
            let z0 = (L / C).sqrt();
            let z_even = (L / C).sqrt() * coupling_factor(L, lc);
            prop_assert!(z >= z0 && z <= z_even * (1.0 + 1e-15));
        }
    }
}
