//! Design synthesis: line parameters, coupling inductance and unit count
//! for a target frequency, impedance and coupling phase, plus the flux that
//! sets a SQUID to a required inductance.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::continuum::coupling_factor;
use crate::error::{positive, Result, SwitchError};
use crate::junction::SquidModel;
use crate::model::{angular, DeviceParams, EdgeStyle, FluxBias, FLUX_QUANTUM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    /// Hz.
    pub frequency: f64,
    /// Target sqrt(L/C), ohm.
    pub impedance: f64,
    /// Target chi*N at `frequency`, rad.
    pub chi_n: f64,
    /// Fixed unit count, or `None` to derive it.
    pub n_units: Option<usize>,
    /// Fixed line inductance per unit, H.
    pub line_inductance: Option<f64>,
    /// Fabrication bounds on the line inductance, H.
    pub inductance_min: Option<f64>,
    pub inductance_max: Option<f64>,
    /// L_coup / L used when the unit count is derived.
    pub max_coupling_ratio: f64,
    pub unit_pitch: f64,
    pub edge_style: EdgeStyle,
}

impl DesignSpec {
    /// Full switching (chi*N = pi/2), unit count derived, no inductance constraint.
    pub fn new(frequency: f64, impedance: f64) -> Self {
        let reference = DeviceParams::reference();
        Self {
            frequency,
            impedance,
            chi_n: FRAC_PI_2,
            n_units: None,
            line_inductance: None,
            inductance_min: None,
            inductance_max: None,
            max_coupling_ratio: 0.5,
            unit_pitch: reference.unit_pitch,
            edge_style: reference.edge_style,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Design {
    pub device: DeviceParams,
    /// Effective coupling inductance per unit, H.
    pub coupling: f64,
    /// Unit count before rounding up.
    pub units_real: f64,
}

/// Coupling inductance giving `chi_n` over `n_units` cells:
/// `(L/2) [(1 + 2 chi_n / (sqrt(LC) w N))^2 - 1]`.
pub fn lcoup_for_phase(omega: f64, inductance: f64, capacitance: f64, n_units: f64, chi_n: f64) -> Result<f64> {
    positive("omega", omega)?;
    positive("line_inductance", inductance)?;
    positive("line_capacitance", capacitance)?;
    positive("n_units", n_units)?;
    if !(chi_n >= 0.0 && chi_n.is_finite()) {
        return Err(SwitchError::Infeasible(format!("target phase {chi_n} is negative")));
    }
    let x = 1.0 + 2.0 * chi_n / ((inductance * capacitance).sqrt() * omega * n_units);
    Ok(0.5 * inductance * (x * x - 1.0))
}

/// Unit count reaching `chi_n` at `frequency`; the real value and its ceiling.
pub fn required_units(frequency: f64, inductance: f64, capacitance: f64, coupling: f64, chi_n: f64) -> Result<(f64, usize)> {
    positive("frequency", frequency)?;
    positive("line_inductance", inductance)?;
    positive("line_capacitance", capacitance)?;
    positive("coupling", coupling)?;
    positive("chi_n", chi_n)?;
    let per_unit = 0.5 * (coupling_factor(inductance, coupling) - 1.0) * (inductance * capacitance).sqrt() * angular(frequency);
    let real = chi_n / per_unit;
    Ok((real, real.ceil() as usize))
}

fn pick_inductance(spec: &DesignSpec) -> Result<f64> {
    let (lo, hi) = (spec.inductance_min, spec.inductance_max);
    for (name, bound) in [("inductance_min", lo), ("inductance_max", hi)] {
        if let Some(b) = bound {
            positive(name, b)?;
        }
    }
    if let (Some(lo), Some(hi)) = (lo, hi) {
        if lo > hi {
            return Err(SwitchError::Infeasible(format!("inductance bounds [{lo:e}, {hi:e}] H are empty")));
        }
    }
    match spec.line_inductance {
        Some(l) => {
            positive("line_inductance", l)?;
            if lo.is_some_and(|lo| l < lo) || hi.is_some_and(|hi| l > hi) {
                return Err(SwitchError::Infeasible(format!("line inductance {l:e} H violates its bounds")));
            }
            Ok(l)
        }
        None => hi.or(lo).ok_or_else(|| {
            SwitchError::Infeasible("line inductance is free and unbounded; give a value or a bound".into())
        }),
    }
}

/// Solves sqrt(L/C) = Z and chi*N(f) = target.
///
/// With L free, the upper bound is taken (else the lower). With N free, the
/// count is derived at `max_coupling_ratio` and rounded up, and the coupling
/// is then re-solved for that integer count.
pub fn synthesize(spec: &DesignSpec) -> Result<Design> {
    positive("frequency", spec.frequency)?;
    positive("impedance", spec.impedance)?;
    positive("unit_pitch", spec.unit_pitch)?;
    if !(0.0..=PI).contains(&spec.chi_n) {
        return Err(SwitchError::Infeasible(format!("target phase {} outside [0, pi]", spec.chi_n)));
    }
    let l = pick_inductance(spec)?;
    let c = l / (spec.impedance * spec.impedance);
    let omega = angular(spec.frequency);
    let (n, units_real) = match spec.n_units {
        Some(0) => return Err(SwitchError::Infeasible("unit count must be at least 1".into())),
        Some(n) => (n, n as f64),
        None => {
            positive("max_coupling_ratio", spec.max_coupling_ratio)?;
            if spec.chi_n == 0.0 {
                (1, 0.0)
            } else {
                let (real, whole) = required_units(spec.frequency, l, c, spec.max_coupling_ratio * l, spec.chi_n)?;
                (whole.max(1), real)
            }
        }
    };
    let coupling = lcoup_for_phase(omega, l, c, n as f64, spec.chi_n)?;
    if !(coupling >= 0.0 && coupling.is_finite()) {
        return Err(SwitchError::Infeasible(format!("coupling inductance {coupling:e} H is not physical")));
    }
    let device = DeviceParams {
        line_inductance: l,
        line_capacitance: c,
        jj_self_capacitance: 0.0,
        squid_self_capacitance: 0.0,
        n_units: n,
        unit_pitch: spec.unit_pitch,
        edge_style: spec.edge_style,
    };
    device.validate().into_result()?;
    Ok(Design {
        device,
        coupling,
        units_real,
    })
}

/// Inverse effective SQUID inductance `1/L(phi) - w^2 C`, decreasing on [0, 0.5].
fn inverse_effective(squid: &SquidModel, phi: f64, omega: f64) -> f64 {
    let (s, c) = (PI * phi).sin_cos();
    let d = squid.asymmetry;
    let root = (c * c + d * d * s * s).sqrt().sqrt();
    4.0 * PI * squid.junction_critical_current * root / FLUX_QUANTUM - omega * omega * squid.self_capacitance
}

/// Flux in [0, 0.5] at which the SQUID's effective inductance equals
/// `target`. Reports the attainable interval when `target` is outside it.
pub fn flux_for_lcoup(target: f64, squid: &SquidModel, omega: f64) -> Result<FluxBias> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(SwitchError::InvalidInput {
            name: "omega",
            value: omega,
            reason: "must be finite and non-negative",
        });
    }
    let y0 = inverse_effective(squid, 0.0, omega);
    let y_half = inverse_effective(squid, 0.5, omega);
    let min = if y0 > 0.0 { 1.0 / y0 } else { f64::INFINITY };
    let max = if y_half > 0.0 { 1.0 / y_half } else { f64::INFINITY };
    let out_of_range = SwitchError::OutOfRange { target, min, max };
    if !(target > 0.0) || y0 <= 0.0 {
        return Err(out_of_range);
    }
    let y_target = 1.0 / target;
    if target == min || y_target == y0 {
        return Ok(FluxBias(0.0));
    }
    if target < min || y_target < y_half {
        return Err(out_of_range);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if inverse_effective(squid, mid, omega) > y_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(FluxBias(0.5 * (lo + hi)))
}
