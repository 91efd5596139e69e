//! Exact frequency-domain solution of the N-cell coupled LC ladder as a
//! four-port network.
//!
//! The state vector at a cell boundary is `(V_a, V_c, I_a, I_c)`, currents
//! flowing left to right. Cells are multiplied left port to right port.
//! Time convention is `e^{+j w t}`: an inductor has impedance `+j w L`.
//!
//! Port numbering: 1 = left end of line a, 2 = right end of line a,
//! 3 = right end of line c, 4 = left end of line c.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{positive, Result, SwitchError};
use crate::junction::{effective_inductance, SquidModel};
use crate::model::{angular, DeviceParams, EdgeStyle, FluxBias};

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Default port reference impedance, ohm.
pub const DEFAULT_Z0: f64 = 50.0;

/// Maps port number (1-based) to the row of the internal wave vector
/// `[left a, left c, right a, right c]`.
const PORT_ROW: [usize; 4] = [0, 2, 3, 1];

/// 4x4 chain matrix: `state_left = T * state_right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix4(pub Matrix4<C64>);

impl TransferMatrix4 {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn series(z: &Matrix2<C64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(z);
        Self(m)
    }

    pub fn shunt(y: &Matrix2<C64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(y);
        Self(m)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &TransferMatrix4) -> Self {
        Self(self.0 * next.0)
    }

    pub fn determinant(&self) -> C64 {
        self.0.determinant()
    }

    fn block(&self, row: usize, col: usize) -> Matrix2<C64> {
        self.0.fixed_view::<2, 2>(row, col).into_owned()
    }
}

/// Per-unit series and shunt branches of the coupled ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCellElements {
    /// `j w [[L* + Lc*, Lc*], [Lc*, L* + Lc*]]`, ohm.
    pub series: Matrix2<C64>,
    /// `j w diag(C, C)`, siemens.
    pub shunt: Matrix2<C64>,
    /// Line inductance after the junction self-capacitance correction, H.
    pub line_inductance: f64,
    /// Coupling inductance after the SQUID self-capacitance correction, H.
    pub coupling_inductance: f64,
}

impl UnitCellElements {
    pub fn transfer(&self) -> TransferMatrix4 {
        TransferMatrix4::series(&self.series).then(&TransferMatrix4::shunt(&self.shunt))
    }
}

fn series_matrix(omega: f64, line: f64, coupling: f64) -> Matrix2<C64> {
    let jw = C64::new(0.0, omega);
    Matrix2::new(
        jw * (line + coupling),
        jw * coupling,
        jw * coupling,
        jw * (line + coupling),
    )
}

fn corrected(inductance: f64, capacitance: f64, omega: f64) -> Result<f64> {
    if inductance == 0.0 {
        return Ok(0.0);
    }
    Ok(effective_inductance(inductance, capacitance, omega)?.effective)
}

/// Series and shunt branches of one unit. Junction and SQUID self-capacitances
/// shunt their inductors element by element.
pub fn build_unit_cell(device: &DeviceParams, coupling: f64, omega: f64) -> Result<UnitCellElements> {
    device.validate().into_result()?;
    positive("omega", omega)?;
    if !(coupling >= 0.0 && coupling.is_finite()) {
        return Err(SwitchError::InvalidInput {
            name: "coupling_inductance",
            value: coupling,
            reason: "must be finite and non-negative",
        });
    }
    let line = corrected(device.line_inductance, device.jj_self_capacitance, omega)?;
    let coupling = corrected(coupling, device.squid_self_capacitance, omega)?;
    let y = C64::new(0.0, omega * device.line_capacitance);
    Ok(UnitCellElements {
        series: series_matrix(omega, line, coupling),
        shunt: Matrix2::new(y, ZERO, ZERO, y),
        line_inductance: line,
        coupling_inductance: coupling,
    })
}

/// Ordered list of two-conductor sections from the left port to the right.
pub fn chain_sections(device: &DeviceParams, coupling: f64, omega: f64) -> Result<Vec<TransferMatrix4>> {
    let cell = build_unit_cell(device, coupling, omega)?;
    let series = TransferMatrix4::series(&cell.series);
    let shunt = TransferMatrix4::shunt(&cell.shunt);
    let n = device.n_units;
    let mut sections = Vec::with_capacity(2 * n + 1);
    match device.edge_style {
        EdgeStyle::Plain => {
            for _ in 0..n {
                sections.push(series);
                sections.push(shunt);
            }
        }
        EdgeStyle::SymmetrizedEdges => {
            // Each edge junction carries half the unit inductance; its doubled
            // area doubles the self-capacitance, so the corrected value halves too.
            let half = TransferMatrix4::series(&series_matrix(omega, 0.5 * cell.line_inductance, 0.0));
            sections.push(half);
            sections.push(shunt);
            for _ in 1..n {
                sections.push(series);
                sections.push(shunt);
            }
            sections.push(half);
        }
    }
    Ok(sections)
}

pub fn cascade(device: &DeviceParams, coupling: f64, omega: f64) -> Result<TransferMatrix4> {
    let sections = chain_sections(device, coupling, omega)?;
    Ok(sections
        .iter()
        .fold(TransferMatrix4::identity(), |acc, s| acc.then(s)))
}

/// Cosines of the two Bloch wavenumbers of a reciprocal cell, from the
/// eigenvalues of `(A + D^T) / 2`. Ordered (even, odd).
pub fn bloch_cosines(cell: &TransferMatrix4) -> [C64; 2] {
    let a = cell.block(0, 0);
    let d = cell.block(2, 2);
    let m = (a + d.transpose()) * C64::new(0.5, 0.0);
    let half_trace = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (half_trace * half_trace - det).sqrt();
    let (x, y) = (half_trace - disc, half_trace + disc);
    // The even mode is the slower one, with the smaller cosine.
    if x.re <= y.re {
        [x, y]
    } else {
        [y, x]
    }
}

/// Bloch wavenumbers (even, odd) in rad per unit; NaN for an evanescent mode.
pub fn bloch_wavenumbers(cell: &TransferMatrix4) -> [f64; 2] {
    bloch_cosines(cell).map(|c| if c.re.abs() <= 1.0 { c.re.acos() } else { f64::NAN })
}

/// Four-port scattering matrix with its reference impedances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourPortSMatrix {
    pub s: Matrix4<C64>,
    /// Reference impedance of ports 1..4, ohm.
    pub z0: [f64; 4],
    /// Hz.
    pub frequency: f64,
    /// Flux bias, when the coupling came from a SQUID model.
    pub flux: Option<f64>,
}

impl FourPortSMatrix {
    /// `S_ij` with 1-based port numbers.
    pub fn get(&self, to: usize, from: usize) -> C64 {
        self.s[(to - 1, from - 1)]
    }

    pub fn s11(&self) -> C64 {
        self.get(1, 1)
    }

    pub fn s21(&self) -> C64 {
        self.get(2, 1)
    }

    pub fn s31(&self) -> C64 {
        self.get(3, 1)
    }

    pub fn s41(&self) -> C64 {
        self.get(4, 1)
    }

    /// `max |S^H S - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let g = self.s.adjoint() * self.s - Matrix4::<C64>::identity();
        g.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max |S - S^T|`.
    pub fn reciprocity_error(&self) -> f64 {
        (self.s - self.s.transpose())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Deviation from invariance under the simultaneous swap 1<->4, 2<->3.
    pub fn mirror_error(&self) -> f64 {
        const SWAP: [usize; 4] = [3, 2, 1, 0];
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.s[(i, j)] - self.s[(SWAP[i], SWAP[j])]).norm());
            }
        }
        worst
    }

    pub fn max_difference(&self, other: &FourPortSMatrix) -> f64 {
        (self.s - other.s).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Converts a chain matrix to power-wave S-parameters,
/// `a = (V + Z0 I) / (2 sqrt Z0)`, `b = (V - Z0 I) / (2 sqrt Z0)` with `I`
/// flowing into the port.
pub fn to_s_parameters(t: &TransferMatrix4, z0: [f64; 4], frequency: f64) -> Result<FourPortSMatrix> {
    for z in z0 {
        positive("z0", z)?;
    }
    // Row order of the internal wave vectors: left a, left c, right a, right c.
    let z_row = [z0[0], z0[3], z0[1], z0[2]];
    let mut incident = Matrix4::<C64>::zeros();
    let mut reflected = Matrix4::<C64>::zeros();
    let m = &t.0;
    for row in 0..2 {
        let z = z_row[row];
        let norm = 1.0 / (2.0 * z.sqrt());
        for col in 0..4 {
            // V_left = m[row], I_left = m[row + 2], both as functions of (V_R, I_R).
            incident[(row, col)] = (m[(row, col)] + m[(row + 2, col)] * z) * norm;
            reflected[(row, col)] = (m[(row, col)] - m[(row + 2, col)] * z) * norm;
        }
    }
    for row in 2..4 {
        let z = z_row[row];
        let norm = 1.0 / (2.0 * z.sqrt());
        let line = row - 2;
        // Current into the right port is -I_R.
        incident[(row, line)] = ONE * norm;
        incident[(row, line + 2)] = C64::new(-z * norm, 0.0);
        reflected[(row, line)] = ONE * norm;
        reflected[(row, line + 2)] = C64::new(z * norm, 0.0);
    }
    let inverse = incident.try_inverse().ok_or(SwitchError::SingularConversion)?;
    let internal = reflected * inverse;
    if internal.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(SwitchError::SingularConversion);
    }
    let s = Matrix4::from_fn(|i, j| internal[(PORT_ROW[i], PORT_ROW[j])]);
    Ok(FourPortSMatrix {
        s,
        z0,
        frequency,
        flux: None,
    })
}

/// Anything that sets the per-unit coupling inductance as a function of flux.
pub trait CouplingSource: Sync {
    fn coupling_at(&self, flux: FluxBias) -> Result<f64>;
}

impl CouplingSource for SquidModel {
    fn coupling_at(&self, flux: FluxBias) -> Result<f64> {
        self.inductance(flux)
    }
}

/// Flux-independent coupling inductance, H. Zero decouples the lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedCoupling(pub f64);

impl CouplingSource for FixedCoupling {
    fn coupling_at(&self, _flux: FluxBias) -> Result<f64> {
        Ok(self.0)
    }
}

/// S-parameters of the device with a fixed coupling inductance.
pub fn solve_with_coupling(device: &DeviceParams, coupling: f64, frequency: f64, z0: [f64; 4]) -> Result<FourPortSMatrix> {
    positive("frequency", frequency)?;
    let t = cascade(device, coupling, angular(frequency))?;
    to_s_parameters(&t, z0, frequency)
}

/// S-parameters of the device with its coupling set by `squid` at `flux`.
pub fn solve_device(
    device: &DeviceParams,
    squid: &SquidModel,
    frequency: f64,
    flux: FluxBias,
    z0: [f64; 4],
) -> Result<FourPortSMatrix> {
    solve_coupled(device, squid, frequency, flux, z0)
}

pub fn solve_coupled<S: CouplingSource + ?Sized>(
    device: &DeviceParams,
    source: &S,
    frequency: f64,
    flux: FluxBias,
    z0: [f64; 4],
) -> Result<FourPortSMatrix> {
    let coupling = source.coupling_at(flux)?;
    let mut s = solve_with_coupling(device, coupling, frequency, z0)?;
    s.flux = Some(flux.0);
    Ok(s)
}

pub fn uniform_z0(z: f64) -> [f64; 4] {
    [z; 4]
}
