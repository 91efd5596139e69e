//! Physical constants, unit conventions and the device parameter model.
//!
//! Every quantity is stored in SI base units (H, F, Hz, W, m). Conversions to
//! engineering units happen only at I/O boundaries.

use std::f64::consts::PI;
use std::fmt;

/// CODATA values, frozen to 10 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Magnetic flux quantum h/(2e), Wb.
    pub flux_quantum: f64,
    /// Elementary charge, C.
    pub electron_charge: f64,
    /// Planck constant, J*s.
    pub planck_h: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    flux_quantum: 2.067_833_848e-15,
    electron_charge: 1.602_176_634e-19,
    planck_h: 6.626_070_150e-34,
};

pub const FLUX_QUANTUM: f64 = CONSTANTS.flux_quantum;
pub const ELECTRON_CHARGE: f64 = CONSTANTS.electron_charge;
pub const PLANCK_H: f64 = CONSTANTS.planck_h;

/// Termination of the two ends of the coupled ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EdgeStyle {
    /// N identical (series, shunt) cells.
    Plain,
    /// Half-inductance junctions at both ends with no edge SQUID; the chain is
    /// mirror symmetric left to right.
    #[default]
    SymmetrizedEdges,
}

impl EdgeStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeStyle::Plain => "plain",
            EdgeStyle::SymmetrizedEdges => "symmetrized",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" => Some(EdgeStyle::Plain),
            "symmetrized" | "symmetrized_edges" | "symmetrizededges" => {
                Some(EdgeStyle::SymmetrizedEdges)
            }
            _ => None,
        }
    }
}

/// Per-unit electrical parameters of the switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Series inductance of one line per unit, H.
    pub line_inductance: f64,
    /// Shunt capacitance of one line per unit, F.
    pub line_capacitance: f64,
    /// Self-capacitance of each line junction, F.
    pub jj_self_capacitance: f64,
    /// Self-capacitance of each coupling SQUID, F.
    pub squid_self_capacitance: f64,
    pub n_units: usize,
    /// Physical length of one unit, m.
    pub unit_pitch: f64,
    pub edge_style: EdgeStyle,
}

impl DeviceParams {
    /// The fabricated device: L = 0.28 nH, C = 300 fF, N = 24, m = 34 um,
    /// parasitic capacitances neglected.
    pub fn reference() -> Self {
        Self {
            line_inductance: 0.28e-9,
            line_capacitance: 300e-15,
            jj_self_capacitance: 0.0,
            squid_self_capacitance: 0.0,
            n_units: 24,
            unit_pitch: 34e-6,
            edge_style: EdgeStyle::SymmetrizedEdges,
        }
    }

    pub fn with_units(mut self, n_units: usize) -> Self {
        self.n_units = n_units;
        self
    }

    pub fn with_edge_style(mut self, edge_style: EdgeStyle) -> Self {
        self.edge_style = edge_style;
        self
    }

    pub fn validate(&self) -> ValidationReport {
        validate_device(self)
    }
}

/// One violated invariant of [`DeviceParams`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> crate::Result<()> {
        if self.is_pass() {
            Ok(())
        } else {
            Err(crate::SwitchError::InvalidDevice(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pass() {
            return write!(f, "pass");
        }
        let messages: Vec<&str> = self.violations.iter().map(|v| v.message.as_str()).collect();
        write!(f, "{}", messages.join("; "))
    }
}

/// Checks every invariant of `params`; never fails, only reports.
pub fn validate_device(params: &DeviceParams) -> ValidationReport {
    let mut violations = Vec::new();
    let mut positive = |field: &'static str, value: f64| {
        if !(value > 0.0 && value.is_finite()) {
            violations.push(Violation {
                field,
                message: format!("{field} must be positive"),
            });
        }
    };
    positive("line_inductance", params.line_inductance);
    positive("line_capacitance", params.line_capacitance);
    positive("unit_pitch", params.unit_pitch);

    for (field, value) in [
        ("jj_self_capacitance", params.jj_self_capacitance),
        ("squid_self_capacitance", params.squid_self_capacitance),
    ] {
        if !(value >= 0.0 && value.is_finite()) {
            violations.push(Violation {
                field,
                message: format!("{field} must be non-negative"),
            });
        }
    }
    if params.n_units < 1 {
        violations.push(Violation {
            field: "n_units",
            message: "n_units must be at least 1".to_string(),
        });
    }
    ValidationReport { violations }
}

/// Normalized flux bias Phi/Phi_0. Any real value is legal.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct FluxBias(pub f64);

impl FluxBias {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Representative of the flux in (-0.5, 0.5], folded by periodicity.
    pub fn reduced(self) -> f64 {
        let r = self.0 - self.0.round();
        if r == -0.5 {
            0.5
        } else {
            r
        }
    }
}

impl From<f64> for FluxBias {
    fn from(v: f64) -> Self {
        FluxBias(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPoint {
    hz: f64,
    omega: f64,
}

impl FrequencyPoint {
    pub fn from_hz(hz: f64) -> crate::Result<Self> {
        let hz = crate::error::positive("frequency", hz)?;
        Ok(Self {
            hz,
            omega: 2.0 * PI * hz,
        })
    }

    pub fn hz(&self) -> f64 {
        self.hz
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

pub fn angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn flux_quantum_consistent_with_h_and_e() {
        let derived = CONSTANTS.planck_h / (2.0 * CONSTANTS.electron_charge);
        assert!(((CONSTANTS.flux_quantum - derived) / derived).abs() < 1e-9);
    }

    #[test]
    fn reference_device_passes() {
        assert!(validate_device(&DeviceParams::reference()).is_pass());
        assert!(validate_device(&DeviceParams::reference().with_units(1)).is_pass());
    }

    #[test]
    fn zero_inductance_is_reported() {
        let mut d = DeviceParams::reference();
        d.line_inductance = 0.0;
        let report = validate_device(&d);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].field, "line_inductance");
        assert_eq!(report.violations[0].message, "line_inductance must be positive");
    }

    #[test]
    fn every_violation_is_listed() {
        let d = DeviceParams {
            line_inductance: -1.0,
            line_capacitance: 0.0,
            jj_self_capacitance: -1e-15,
            squid_self_capacitance: f64::NAN,
            n_units: 0,
            unit_pitch: 0.0,
            edge_style: EdgeStyle::Plain,
        };
        let fields: Vec<_> = validate_device(&d).violations.iter().map(|v| v.field).collect();
        assert_eq!(
            fields,
            [
                "line_inductance",
                "line_capacitance",
                "unit_pitch",
                "jj_self_capacitance",
                "squid_self_capacitance",
                "n_units"
            ]
        );
    }

    #[test]
    fn dbm_examples() {
        assert_relative_eq!(dbm_to_watts(-80.0), 1.0e-11, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_watts(0.0), 1e-3, max_relative = 1e-15);
        assert_relative_eq!(dbm_to_watts(-65.0), 3.162_277_660e-10, max_relative = 1e-9);
        assert_relative_eq!(watts_to_dbm(dbm_to_watts(-65.0)), -65.0, max_relative = 1e-12);
    }

    #[test]
    fn frequency_point_omega() {
        let p = FrequencyPoint::from_hz(6e9).unwrap();
        assert_eq!(p.omega(), 2.0 * PI * 6e9);
        assert!(FrequencyPoint::from_hz(0.0).is_err());
    }

    #[test]
    fn flux_reduction() {
        assert_eq!(FluxBias(1.25).reduced(), 0.25);
        assert_eq!(FluxBias(-0.5).reduced(), 0.5);
        assert_eq!(FluxBias(0.5).reduced(), 0.5);
        assert_eq!(FluxBias(-0.75).reduced(), 0.25);
    }

    proptest! {
        #[test]
        fn dbm_offsets_compose(a in -150.0f64..50.0, delta in -60.0f64..60.0) {
            let lhs = dbm_to_watts(a) * 10f64.powf(delta / 10.0);
            let rhs = dbm_to_watts(a + delta);
            prop_assert!(((lhs - rhs) / rhs).abs() < 1e-12);
        }
    }
}
