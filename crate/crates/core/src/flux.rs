//! Frequency by flux sweeps and the analyses built on them: isolation maps,
//! switching operating points and beamsplitter settings.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{positive, Result, SwitchError};
use crate::model::{DeviceParams, FluxBias};
use crate::network::{solve_coupled, CouplingSource, FourPortSMatrix};

/// Largest magnitude written for an isolation value, dB.
pub const DB_CAP: f64 = 120.0;

/// Below this |S31| the isolation is reported as +infinity.
pub const UNDERFLOW: f64 = 1e-12;

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(SwitchError::InvalidGrid(format!("{name} axis is empty")));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(SwitchError::InvalidGrid(format!("{name} axis has a non-finite value")));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SwitchError::InvalidGrid(format!("{name} axis is not strictly increasing")));
    }
    Ok(())
}

/// Dense S-matrix table over frequency (rows) and flux (columns).
///
/// Points where the solver failed are kept as holes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    frequencies: Vec<f64>,
    fluxes: Vec<f64>,
    z0: [f64; 4],
    cells: Vec<Option<FourPortSMatrix>>,
}

impl SweepGrid {
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn fluxes(&self) -> &[f64] {
        &self.fluxes
    }

    pub fn z0(&self) -> [f64; 4] {
        self.z0
    }

    pub fn get(&self, frequency_index: usize, flux_index: usize) -> Option<&FourPortSMatrix> {
        self.cells[frequency_index * self.fluxes.len() + flux_index].as_ref()
    }

    /// Points in frequency-major order.
    pub fn cells(&self) -> &[Option<FourPortSMatrix>] {
        &self.cells
    }

    pub fn hole_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    pub fn channel_map(&self) -> ChannelMap {
        ChannelMap {
            frequencies: self.frequencies.clone(),
            fluxes: self.fluxes.clone(),
            cells: self.cells.iter().map(|c| c.as_ref().map(Channels::from)).collect(),
        }
    }

    pub fn operating_points(&self, threshold_db: f64) -> Result<Vec<OperatingPoint>> {
        find_operating_points(&self.channel_map(), threshold_db)
    }
}

/// Solves every (frequency, flux) point. Evaluation is parallel; the result
/// does not depend on scheduling.
pub fn run_sweep<S: CouplingSource + ?Sized>(
    device: &DeviceParams,
    source: &S,
    frequencies: &[f64],
    fluxes: &[f64],
    z0: [f64; 4],
) -> Result<SweepGrid> {
    check_axis("frequency", frequencies)?;
    check_axis("flux", fluxes)?;
    positive("frequency", frequencies[0])?;
    for z in z0 {
        positive("z0", z)?;
    }
    device.validate().into_result()?;

    let n_flux = fluxes.len();
    let cells = (0..frequencies.len() * n_flux)
        .into_par_iter()
        .map(|i| {
            let f = frequencies[i / n_flux];
            let phi = fluxes[i % n_flux];
            solve_coupled(device, source, f, FluxBias(phi), z0).ok()
        })
        .collect();
    Ok(SweepGrid {
        frequencies: frequencies.to_vec(),
        fluxes: fluxes.to_vec(),
        z0,
        cells,
    })
}

/// The four first-column S-parameters the analyses need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channels {
    pub s21: Complex64,
    pub s31: Complex64,
    pub s11: Complex64,
    pub s41: Complex64,
}

impl From<&FourPortSMatrix> for Channels {
    fn from(s: &FourPortSMatrix) -> Self {
        Self {
            s21: s.s21(),
            s31: s.s31(),
            s11: s.s11(),
            s41: s.s41(),
        }
    }
}

impl Channels {
    /// `20 log10(|S21| / |S31|)`; +infinity when |S31| underflows.
    pub fn isolation_db(&self) -> f64 {
        let (a, b) = (self.s21.norm(), self.s31.norm());
        if b < UNDERFLOW {
            return f64::INFINITY;
        }
        20.0 * (a / b).log10()
    }
}

/// Port-1 driven transmissions over a frequency by flux grid. Built from a
/// [`SweepGrid`] or read back from a sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMap {
    pub frequencies: Vec<f64>,
    pub fluxes: Vec<f64>,
    /// Frequency-major; `None` marks a hole.
    pub cells: Vec<Option<Channels>>,
}

impl ChannelMap {
    pub fn new(frequencies: Vec<f64>, fluxes: Vec<f64>, cells: Vec<Option<Channels>>) -> Result<Self> {
        check_axis("frequency", &frequencies)?;
        check_axis("flux", &fluxes)?;
        if cells.len() != frequencies.len() * fluxes.len() {
            return Err(SwitchError::InvalidGrid(format!(
                "{} cells for a {}x{} grid",
                cells.len(),
                frequencies.len(),
                fluxes.len()
            )));
        }
        Ok(Self {
            frequencies,
            fluxes,
            cells,
        })
    }

    pub fn get(&self, frequency_index: usize, flux_index: usize) -> Option<&Channels> {
        self.cells[frequency_index * self.fluxes.len() + flux_index].as_ref()
    }
}

/// Isolation `20 log10(|S21| / |S31|)` per grid point, dB.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolationMap {
    pub frequencies: Vec<f64>,
    pub fluxes: Vec<f64>,
    /// Frequency-major; +infinity where |S31| < 1e-12, `None` on holes.
    pub values: Vec<Option<f64>>,
}

impl IsolationMap {
    pub fn get(&self, frequency_index: usize, flux_index: usize) -> Option<f64> {
        self.values[frequency_index * self.fluxes.len() + flux_index]
    }

    pub fn underflow_count(&self) -> usize {
        self.values.iter().filter(|v| **v == Some(f64::INFINITY)).count()
    }
}

pub fn isolation_ratio(map: &ChannelMap) -> IsolationMap {
    IsolationMap {
        frequencies: map.frequencies.clone(),
        fluxes: map.fluxes.clone(),
        values: map.cells.iter().map(|c| c.map(|c| c.isolation_db())).collect(),
    }
}

/// Clamps to +-[`DB_CAP`] for serialization.
pub fn cap_db(value: f64) -> f64 {
    value.clamp(-DB_CAP, DB_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwitchState {
    /// Port 1 to port 2, the same line.
    Through,
    /// Port 1 to port 3, the other line.
    Cross,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub frequency: f64,
    pub flux: f64,
    pub state: SwitchState,
    /// Favored over suppressed channel, dB, positive.
    pub isolation: f64,
    /// Contiguous frequency span at this flux where isolation stays above
    /// threshold, Hz.
    pub bandwidth: f64,
    /// `-20 log10 |S_favored|`, dB.
    pub insertion_loss: f64,
}

fn signed_isolation(c: &Channels, state: SwitchState) -> f64 {
    match state {
        SwitchState::Through => c.isolation_db(),
        SwitchState::Cross => -c.isolation_db(),
    }
}

/// Per frequency row and per state, the flux with the strongest isolation,
/// kept when it reaches `threshold_db`. Holes are never candidates.
pub fn find_operating_points(map: &ChannelMap, threshold_db: f64) -> Result<Vec<OperatingPoint>> {
    positive("threshold_db", threshold_db)?;
    let n_f = map.frequencies.len();
    let n_phi = map.fluxes.len();
    let mut points = Vec::new();
    for fi in 0..n_f {
        for state in [SwitchState::Through, SwitchState::Cross] {
            let mut best: Option<(usize, f64)> = None;
            for pi in 0..n_phi {
                let Some(c) = map.get(fi, pi) else { continue };
                let iso = signed_isolation(c, state);
                if iso > 0.0 && best.is_none_or(|(_, b)| iso > b) {
                    best = Some((pi, iso));
                }
            }
            let Some((pi, iso)) = best else { continue };
            if iso < threshold_db {
                continue;
            }
            let above = |i: usize| {
                map.get(i, pi)
                    .is_some_and(|c| signed_isolation(c, state) >= threshold_db)
            };
            let mut lo = fi;
            while lo > 0 && above(lo - 1) {
                lo -= 1;
            }
            let mut hi = fi;
            while hi + 1 < n_f && above(hi + 1) {
                hi += 1;
            }
            let c = map.get(fi, pi).expect("candidate is not a hole");
            let favored = match state {
                SwitchState::Through => c.s21,
                SwitchState::Cross => c.s31,
            };
            points.push(OperatingPoint {
                frequency: map.frequencies[fi],
                flux: map.fluxes[pi],
                state,
                isolation: iso,
                bandwidth: map.frequencies[hi] - map.frequencies[lo],
                insertion_loss: -20.0 * favored.norm().log10(),
            });
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitterPoint {
    pub frequency: f64,
    pub flux: f64,
    /// `|S21 / S31|^2` at `flux`.
    pub ratio: f64,
    /// `-10 log10(|S21|^2 + |S31|^2)`, dB.
    pub total_loss: f64,
}

fn power_ratio(c: &Channels) -> f64 {
    let b = c.s31.norm_sqr();
    if b == 0.0 {
        f64::INFINITY
    } else {
        c.s21.norm_sqr() / b
    }
}

/// Flux giving `|S21 / S31|^2 = target_ratio` on the grid row nearest to
/// `frequency`, refined by bisection with the full solver.
pub fn beamsplitter_point<S: CouplingSource + ?Sized>(
    grid: &SweepGrid,
    device: &DeviceParams,
    source: &S,
    frequency: f64,
    target_ratio: f64,
) -> Result<SplitterPoint> {
    positive("target_ratio", target_ratio)?;
    let freqs = grid.frequencies();
    let (f_lo, f_hi) = (freqs[0], freqs[freqs.len() - 1]);
    if !(frequency >= f_lo && frequency <= f_hi) {
        return Err(SwitchError::InvalidInput {
            name: "frequency",
            value: frequency,
            reason: "outside the sweep grid",
        });
    }
    let fi = (0..freqs.len())
        .min_by(|&a, &b| (freqs[a] - frequency).abs().total_cmp(&(freqs[b] - frequency).abs()))
        .expect("grid is non-empty");
    let row_frequency = freqs[fi];
    let fluxes = grid.fluxes();
    let log_target = target_ratio.ln();
    let mismatch = |c: &Channels| power_ratio(c).ln() - log_target;

    let row: Vec<Option<f64>> = (0..fluxes.len())
        .map(|pi| grid.get(fi, pi).map(|s| mismatch(&Channels::from(s))))
        .collect();
    let best = (0..fluxes.len())
        .filter_map(|pi| row[pi].filter(|m| m.is_finite()).map(|m| (pi, m.abs())))
        .min_by(|a, b| a.1.total_cmp(&b.1));

    // Sign changes between adjacent non-hole points, nearest the row minimum first.
    let mut brackets: Vec<usize> = (0..fluxes.len().saturating_sub(1))
        .filter(|&i| match (row[i], row[i + 1]) {
            (Some(a), Some(b)) => a.is_finite() && b.is_finite() && (a == 0.0 || a.signum() != b.signum()),
            _ => false,
        })
        .collect();
    let not_bracketed = SwitchError::NotBracketed {
        frequency: row_frequency,
        target: target_ratio,
    };
    let Some((best_index, _)) = best else {
        return Err(not_bracketed);
    };
    brackets.sort_by_key(|&i| i.abs_diff(best_index));
    let Some(&i) = brackets.first() else {
        return Err(not_bracketed);
    };

    let evaluate = |phi: f64| -> Result<Channels> {
        let s = solve_coupled(device, source, row_frequency, FluxBias(phi), grid.z0())?;
        Ok(Channels::from(&s))
    };
    let (mut lo, mut hi) = (fluxes[i], fluxes[i + 1]);
    let mut m_lo = row[i].expect("bracket endpoint");
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let m_mid = mismatch(&evaluate(mid)?);
        if m_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if m_mid.signum() == m_lo.signum() {
            lo = mid;
            m_lo = m_mid;
        } else {
            hi = mid;
        }
    }
    let flux = 0.5 * (lo + hi);
    let c = evaluate(flux)?;
    Ok(SplitterPoint {
        frequency: row_frequency,
        flux,
        ratio: power_ratio(&c),
        total_loss: -10.0 * (c.s21.norm_sqr() + c.s31.norm_sqr()).log10(),
    })
}

pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
