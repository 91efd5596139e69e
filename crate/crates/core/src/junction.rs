//! Small-signal Josephson junction and SQUID inductance, flux tuning,
//! self-capacitance corrections and power-handling estimates.

use std::f64::consts::PI;

use crate::error::{non_negative, positive, Result, SwitchError};
use crate::model::{FluxBias, FLUX_QUANTUM, PLANCK_H};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionSpec {
    /// Critical current, A.
    pub critical_current: f64,
    /// Self-capacitance, F.
    pub self_capacitance: f64,
}

impl JunctionSpec {
    pub fn new(critical_current: f64, self_capacitance: f64) -> Result<Self> {
        if !(critical_current > 0.0 && critical_current.is_finite()) {
            return Err(SwitchError::NonPositiveCurrent(critical_current));
        }
        non_negative("self_capacitance", self_capacitance)?;
        Ok(Self {
            critical_current,
            self_capacitance,
        })
    }

    pub fn inductance(&self) -> Result<f64> {
        jj_inductance(self.critical_current)
    }
}

/// Symmetric-loop dc SQUID used as the tunable coupling element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquidModel {
    /// Critical current of each of the two junctions, A.
    pub junction_critical_current: f64,
    /// Junction asymmetry d in [0, 1); bounds the inductance at half flux.
    pub asymmetry: f64,
    /// Self-capacitance of the SQUID, F.
    pub self_capacitance: f64,
}

impl SquidModel {
    pub fn new(junction_critical_current: f64, asymmetry: f64, self_capacitance: f64) -> Result<Self> {
        if !(junction_critical_current > 0.0 && junction_critical_current.is_finite()) {
            return Err(SwitchError::NonPositiveCurrent(junction_critical_current));
        }
        if !(0.0..1.0).contains(&asymmetry) {
            return Err(SwitchError::InvalidInput {
                name: "asymmetry",
                value: asymmetry,
                reason: "must lie in [0, 1)",
            });
        }
        non_negative("self_capacitance", self_capacitance)?;
        Ok(Self {
            junction_critical_current,
            asymmetry,
            self_capacitance,
        })
    }

    /// Inductance at zero flux, Phi_0 / (4 pi I_c).
    pub fn zero_flux_inductance(&self) -> f64 {
        FLUX_QUANTUM / (4.0 * PI * self.junction_critical_current)
    }

    /// Largest inductance over flux, reached at half flux; infinite for d = 0.
    pub fn max_inductance(&self) -> f64 {
        if self.asymmetry == 0.0 {
            f64::INFINITY
        } else {
            self.zero_flux_inductance() / self.asymmetry.sqrt()
        }
    }

    pub fn inductance(&self, flux: FluxBias) -> Result<f64> {
        squid_inductance(self, flux)
    }

    /// Inductance including the SQUID self-capacitance at angular frequency `omega`.
    pub fn effective_inductance(&self, flux: FluxBias, omega: f64) -> Result<EffectiveInductance> {
        effective_inductance(self.inductance(flux)?, self.self_capacitance, omega)
    }
}

/// Inductance of an element after its parallel self-capacitance is folded in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveInductance {
    pub bare: f64,
    pub effective: f64,
    /// Hz.
    pub frequency: f64,
    /// Set above self-resonance, where `effective` is negative.
    pub capacitive: bool,
}

pub fn jj_inductance(critical_current: f64) -> Result<f64> {
    if !(critical_current > 0.0 && critical_current.is_finite()) {
        return Err(SwitchError::NonPositiveCurrent(critical_current));
    }
    Ok(FLUX_QUANTUM / (2.0 * PI * critical_current))
}

/// Critical current for a junction with normal resistance `normal_resistance`
/// and superconducting gap `gap_ev` given in eV.
///
/// Any series (contact, bandage) resistance must already be subtracted.
pub fn ambegaokar_baratoff_ic(normal_resistance: f64, gap_ev: f64) -> Result<f64> {
    positive("normal_resistance", normal_resistance)?;
    positive("gap", gap_ev)?;
    // A gap of x eV divided by e is x volts.
    Ok(PI * gap_ev / (2.0 * normal_resistance))
}

/// `Phi_0 / (4 pi I_c (cos^2(pi phi) + d^2 sin^2(pi phi))^(1/4))`.
///
/// Exactly even and 1-periodic in flux: the flux is folded into [0, 0.5]
/// before evaluation.
pub fn squid_inductance(model: &SquidModel, flux: FluxBias) -> Result<f64> {
    let r = flux.reduced().abs();
    let (c, s) = if r >= 0.5 {
        (0.0, 1.0)
    } else {
        let (s, c) = (PI * r).sin_cos();
        (c, s)
    };
    let d = model.asymmetry;
    if d == 0.0 && c <= 0.0 {
        return Err(SwitchError::FluxSingularity { flux: flux.0 });
    }
    let denom = (c * c + d * d * s * s).sqrt().sqrt();
    Ok(model.zero_flux_inductance() / denom)
}

/// `1 / (1/L - w^2 C)`; negative results (above self-resonance) are flagged
/// as capacitive.
pub fn effective_inductance(inductance: f64, shunt_capacitance: f64, omega: f64) -> Result<EffectiveInductance> {
    positive("inductance", inductance)?;
    non_negative("shunt_capacitance", shunt_capacitance)?;
    non_negative("omega", omega)?;
    let frequency = omega / (2.0 * PI);
    if shunt_capacitance == 0.0 {
        return Ok(EffectiveInductance {
            bare: inductance,
            effective: inductance,
            frequency,
            capacitive: false,
        });
    }
    let inverse = 1.0 / inductance;
    let residual = inverse - omega * omega * shunt_capacitance;
    if residual.abs() < 1e-6 * inverse {
        return Err(SwitchError::SelfResonance {
            inductance,
            capacitance: shunt_capacitance,
            residual,
        });
    }
    let effective = 1.0 / residual;
    Ok(EffectiveInductance {
        bare: inductance,
        effective,
        frequency,
        capacitive: effective < 0.0,
    })
}

/// Power of a matched travelling wave whose peak current equals
/// `safety_fraction * I_c` of the line junction.
///
/// An order-of-magnitude linearity estimate, not a nonlinear simulation.
pub fn linear_power_limit(line_junction: &JunctionSpec, line_impedance: f64, safety_fraction: f64) -> Result<f64> {
    positive("line_impedance", line_impedance)?;
    if !(safety_fraction > 0.0 && safety_fraction <= 1.0) {
        return Err(SwitchError::NonPositiveInput {
            name: "safety_fraction",
            value: safety_fraction,
        });
    }
    let peak = safety_fraction * line_junction.critical_current;
    Ok(peak * peak * line_impedance / 2.0)
}

/// Photons per second carried by `power` watts at `frequency` Hz.
pub fn photon_flux(power: f64, frequency: f64) -> Result<f64> {
    non_negative("power", power)?;
    positive("frequency", frequency)?;
    Ok(power / (PLANCK_H * frequency))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dbm_to_watts;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn squid(d: f64) -> SquidModel {
        SquidModel::new(11.75e-6, d, 0.0).unwrap()
    }

    #[test]
    fn junction_inductance_examples() {
        // Hand evaluation: Phi_0 / (2 pi * 0.28 nH) = 1.17538e-6 A.
        let ic = FLUX_QUANTUM / (2.0 * PI * 0.28e-9);
        assert_relative_eq!(ic, 1.175_38e-6, max_relative = 1e-5);
        assert_relative_eq!(jj_inductance(1.175e-6).unwrap(), 0.280e-9, max_relative = 1e-3);
        assert_eq!(jj_inductance(2.0 * ic).unwrap(), jj_inductance(ic).unwrap() / 2.0);
        let unit = FLUX_QUANTUM / (2.0 * PI);
        assert_relative_eq!(jj_inductance(unit).unwrap(), 1.0, max_relative = 1e-15);
        assert_eq!(jj_inductance(0.0), Err(SwitchError::NonPositiveCurrent(0.0)));
    }

    #[test]
    fn ambegaokar_baratoff_examples() {
        // pi * 200e-6 / (2 * 267) = 1.17663e-6
        assert_relative_eq!(ambegaokar_baratoff_ic(267.0, 200e-6).unwrap(), 1.176_63e-6, max_relative = 1e-5);
        let a = ambegaokar_baratoff_ic(100.0, 180e-6).unwrap();
        let b = ambegaokar_baratoff_ic(200.0, 180e-6).unwrap();
        assert_relative_eq!(a, 2.0 * b, max_relative = 1e-15);
        assert_relative_eq!(ambegaokar_baratoff_ic(PI / 2.0, 1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert!(ambegaokar_baratoff_ic(0.0, 1.0).is_err());
        assert!(ambegaokar_baratoff_ic(1.0, -1.0).is_err());
    }

    #[test]
    fn squid_inductance_examples() {
        let m = squid(0.0);
        let l0 = FLUX_QUANTUM / (4.0 * PI * m.junction_critical_current);
        assert_eq!(m.inductance(FluxBias(0.0)).unwrap(), l0);
        assert_eq!(
            m.inductance(FluxBias(0.5)),
            Err(SwitchError::FluxSingularity { flux: 0.5 })
        );
        assert!(m.inductance(FluxBias(0.7)).is_ok());
        // cos(pi/3) = 1/2, so the inductance grows by 1/sqrt(1/2).
        assert_relative_eq!(
            m.inductance(FluxBias(1.0 / 3.0)).unwrap(),
            l0 * 2f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn asymmetry_bounds_the_maximum() {
        let m = squid(0.02);
        let at_half = m.inductance(FluxBias(0.5)).unwrap();
        assert_relative_eq!(at_half, m.zero_flux_inductance() / 0.02f64.sqrt(), max_relative = 1e-14);
        assert_eq!(at_half, m.max_inductance());
        for i in 0..=1000 {
            let phi = i as f64 / 1000.0;
            assert!(m.inductance(FluxBias(phi)).unwrap() <= at_half * (1.0 + 1e-14));
        }
    }

    #[test]
    fn squid_inductance_periodic_on_dyadic_grid() {
        // Dyadic fluxes make phi + 1 exact, isolating the function's own periodicity.
        for d in [0.0, 0.02, 0.3] {
            let m = squid(d);
            for i in -1024..=1024 {
                let phi = i as f64 / 1024.0;
                let (Ok(a), Ok(b)) = (m.inductance(FluxBias(phi)), m.inductance(FluxBias(phi + 1.0))) else {
                    assert!(d == 0.0);
                    continue;
                };
                assert!(((a - b) / a).abs() < 1e-15, "phi = {phi}, d = {d}");
            }
        }
    }

    #[test]
    fn squid_model_rejects_bad_parameters() {
        assert!(SquidModel::new(0.0, 0.0, 0.0).is_err());
        assert!(SquidModel::new(1e-6, 1.0, 0.0).is_err());
        assert!(SquidModel::new(1e-6, -0.1, 0.0).is_err());
        assert!(SquidModel::new(1e-6, 0.1, -1e-15).is_err());
    }

    #[test]
    fn effective_inductance_examples() {
        let l = 0.28e-9;
        assert_eq!(effective_inductance(l, 0.0, 1e11).unwrap().effective, l);

        let c = 50e-15;
        let w_res = 1.0 / (l * c).sqrt();
        assert!(matches!(
            effective_inductance(l, c, w_res),
            Err(SwitchError::SelfResonance { .. })
        ));

        let w = 2.0 * PI * 6e9;
        let expected = 1.0 / (1.0 / 0.28e-9 - w * w * 50e-15);
        let got = effective_inductance(l, c, w).unwrap();
        assert_relative_eq!(got.effective, expected, max_relative = 1e-14);
        assert_relative_eq!(got.effective, 0.2858e-9, max_relative = 1e-3);
        assert!(!got.capacitive);
        assert_relative_eq!(got.frequency, 6e9, max_relative = 1e-15);

        let above = effective_inductance(l, c, 2.0 * w_res).unwrap();
        assert!(above.capacitive);
        assert!(above.effective < 0.0);
    }

    #[test]
    fn effective_inductance_low_frequency_limit() {
        let got = effective_inductance(0.28e-9, 1e-12, 1.0).unwrap();
        assert_relative_eq!(got.effective, 0.28e-9, max_relative = 1e-9);
    }

    #[test]
    fn power_limit_examples() {
        let jj = JunctionSpec::new(1.175e-6, 0.0).unwrap();
        let p = linear_power_limit(&jj, 30.0, 1.0).unwrap();
        assert_relative_eq!(p, 1.175e-6f64.powi(2) * 30.0 / 2.0, max_relative = 1e-15);
        assert_relative_eq!(p, 2.07e-11, max_relative = 2e-3);
        assert_relative_eq!(crate::model::watts_to_dbm(p), -76.8, epsilon = 0.05);

        let half = linear_power_limit(&jj, 30.0, 0.5).unwrap();
        assert_relative_eq!(half, p / 4.0, max_relative = 1e-15);

        let strong = JunctionSpec::new(11.75e-6, 0.0).unwrap();
        assert_relative_eq!(linear_power_limit(&strong, 30.0, 1.0).unwrap(), 100.0 * p, max_relative = 1e-12);

        assert!(linear_power_limit(&jj, 30.0, 0.0).is_err());
        assert!(linear_power_limit(&jj, 30.0, 1.5).is_err());
        assert!(linear_power_limit(&jj, 0.0, 1.0).is_err());
    }

    #[test]
    fn photon_flux_examples() {
        let per_second = photon_flux(dbm_to_watts(-80.0), 6e9).unwrap();
        assert_relative_eq!(per_second, 2.515e12, max_relative = 1e-3);
        assert_relative_eq!(per_second * 1e-6, 2.5e6, max_relative = 0.02);
        assert_eq!(photon_flux(0.0, 6e9).unwrap(), 0.0);
        let f = 4.3e9;
        assert_relative_eq!(photon_flux(PLANCK_H * f * 1e6, f).unwrap(), 1e6, max_relative = 1e-14);
        assert!(photon_flux(1e-12, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn squid_inductance_even(phi in -1.0f64..1.0, d in 0.001f64..0.9) {
            let m = squid(d);
            let base = m.inductance(FluxBias(phi)).unwrap();
            let mirrored = m.inductance(FluxBias(-phi)).unwrap();
            prop_assert!(((base - mirrored) / base).abs() < 1e-15);
        }

        #[test]
        fn squid_inductance_monotone_below_half_flux(a in 0.0f64..0.4999, b in 0.0f64..0.4999) {
            let m = squid(0.0);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9);
            prop_assert!(m.inductance(FluxBias(lo)).unwrap() < m.inductance(FluxBias(hi)).unwrap());
        }

        #[test]
        fn shunt_capacitance_raises_inductance_below_resonance(
            l in 0.05e-9f64..2e-9, c in 1e-15f64..500e-15, x in 0.01f64..0.99,
        ) {
            let omega = (x / (l * c)).sqrt();
            let e = effective_inductance(l, c, omega).unwrap();
            prop_assert!(e.effective >= l);
        }
    }
}
