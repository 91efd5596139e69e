//! Coupling-phase extraction from transmission magnitudes and the scalar
//! least-squares fit of the coupling inductance.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use argmin::core::{CostFunction, Executor};
use argmin::solver::brent::BrentOpt;

use crate::continuum::coupling_factor;
use crate::error::{non_negative, positive, Result, SwitchError};
use crate::junction::effective_inductance;
use crate::model::angular;

/// Below this both magnitudes carry no phase information.
const DEGENERATE: f64 = 1e-12;

/// A first raw value this close to pi/2 may sit on either side of the fold.
const AMBIGUITY_MARGIN: f64 = 0.05;

/// Unwrapped coupling phase chi*N along frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiExtraction {
    /// Hz, as given.
    pub frequencies: Vec<f64>,
    /// Unwrapped chi*N, rad.
    pub chi_n: Vec<f64>,
    /// Quarter-turn branch index j per point: chi*N lies in [j pi/2, (j+1) pi/2].
    pub branch_offsets: Vec<u32>,
    /// The lowest-frequency point is within reach of the first fold, so the
    /// assumed start on branch 0 is uncertain.
    pub ambiguous_start: bool,
}

/// Folds `raw` in [0, pi/2] onto quarter-turn branch `j`.
fn on_branch(raw: f64, j: u32) -> f64 {
    let base = j as f64 * FRAC_PI_2;
    if j.is_multiple_of(2) {
        base + raw
    } else {
        base + FRAC_PI_2 - raw
    }
}

/// Branch whose unfolded value lies closest to `predicted`.
fn nearest_branch(raw: f64, predicted: f64) -> u32 {
    let guess = (predicted / FRAC_PI_2).floor().max(0.0) as u32;
    let lo = guess.saturating_sub(1);
    (lo..=guess + 1)
        .min_by(|&a, &b| {
            (on_branch(raw, a) - predicted)
                .abs()
                .total_cmp(&(on_branch(raw, b) - predicted).abs())
        })
        .expect("non-empty range")
}

/// Inverts the cos^2/sin^2 power split point by point and unwraps the
/// result along frequency, starting on the lowest branch.
///
/// Magnitudes are normalized by the transmitted total first, so a common
/// loss or calibration scale drops out. Frequencies must be strictly
/// increasing.
pub fn extract_chi(frequencies: &[f64], s21_mag: &[f64], s31_mag: &[f64]) -> Result<ChiExtraction> {
    if frequencies.len() != s21_mag.len() || frequencies.len() != s31_mag.len() {
        return Err(SwitchError::InvalidGrid(format!(
            "{} frequencies, {} |S21| values, {} |S31| values",
            frequencies.len(),
            s21_mag.len(),
            s31_mag.len()
        )));
    }
    if frequencies.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SwitchError::InvalidGrid("frequencies are not strictly increasing".into()));
    }
    let mut raw = Vec::with_capacity(frequencies.len());
    for (i, (&a, &b)) in s21_mag.iter().zip(s31_mag).enumerate() {
        non_negative("|S21|", a)?;
        non_negative("|S31|", b)?;
        if a < DEGENERATE && b < DEGENERATE {
            return Err(SwitchError::DegenerateInput { index: i });
        }
        let total = a.hypot(b);
        raw.push((b / total).atan2(a / total));
    }

    let mut chi_n: Vec<f64> = Vec::with_capacity(raw.len());
    let mut branch_offsets = Vec::with_capacity(raw.len());
    for (i, &r) in raw.iter().enumerate() {
        let j = match i {
            0 => 0,
            1 => nearest_branch(r, chi_n[0]),
            _ => {
                let (f0, f1, f2) = (frequencies[i - 2], frequencies[i - 1], frequencies[i]);
                let slope = (chi_n[i - 1] - chi_n[i - 2]) / (f1 - f0);
                nearest_branch(r, chi_n[i - 1] + slope * (f2 - f1))
            }
        };
        chi_n.push(on_branch(r, j));
        branch_offsets.push(j);
    }
    Ok(ChiExtraction {
        frequencies: frequencies.to_vec(),
        ambiguous_start: raw.first().is_some_and(|&r| r > FRAC_PI_2 - AMBIGUITY_MARGIN),
        chi_n,
        branch_offsets,
    })
}

/// Fixed line parameters for [`fit_lcoup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSetup {
    pub line_inductance: f64,
    pub line_capacitance: f64,
    pub n_units: f64,
    pub squid_self_capacitance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Bare coupling inductance, H.
    pub coupling: f64,
    /// Effective coupling inductance at each extraction frequency, H.
    pub coupling_star: Vec<f64>,
    /// Root-mean-square chi*N misfit, rad.
    pub residual: f64,
    /// Variance estimate of `coupling`, H^2.
    pub covariance: f64,
    /// Upper end of the final search interval, H.
    pub search_upper: f64,
}

impl FitSetup {
    fn model_point(&self, frequency: f64, coupling: f64) -> Option<(f64, f64, f64)> {
        let omega = angular(frequency);
        let star = if coupling == 0.0 {
            0.0
        } else {
            let e = effective_inductance(coupling, self.squid_self_capacitance, omega).ok()?;
            if e.capacitive {
                return None;
            }
            e.effective
        };
        let (l, c) = (self.line_inductance, self.line_capacitance);
        let scale = 0.5 * (l * c).sqrt() * omega * self.n_units;
        let factor = coupling_factor(l, star);
        let chi = scale * (factor - 1.0);
        // d chi / d L_coup through the self-capacitance correction.
        let dstar = if coupling == 0.0 { 1.0 } else { (star / coupling).powi(2) };
        let slope = scale / (l * factor) * dstar;
        Some((star, chi, slope))
    }

    /// Sum of squared misfits and its derivative; infinite past self-resonance.
    fn misfit(&self, data: &ChiExtraction, coupling: f64) -> (f64, f64, f64) {
        let mut sse = 0.0;
        let mut grad = 0.0;
        let mut jtj = 0.0;
        for (&f, &chi) in data.frequencies.iter().zip(&data.chi_n) {
            let Some((_, model, slope)) = self.model_point(f, coupling) else {
                return (f64::INFINITY, 0.0, 0.0);
            };
            let r = model - chi;
            sse += r * r;
            grad += r * slope;
            jtj += slope * slope;
        }
        (sse, grad, jtj)
    }
}

struct Misfit<'a> {
    setup: &'a FitSetup,
    data: &'a ChiExtraction,
    scale: f64,
}

impl CostFunction for Misfit<'_> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, x: &f64) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.setup.misfit(self.data, x * self.scale).0)
    }
}

const SCAN_POINTS: usize = 64;
const WIDENINGS: usize = 2;

/// Least-squares fit of one bare coupling inductance to an extracted chi*N
/// curve, with the per-frequency self-capacitance correction applied.
///
/// A coarse scan over [0, 2L] locates the minimum (the interval grows by 4x
/// up to twice when the minimum sits at its upper end); Brent's method then
/// refines it and Gauss-Newton steps polish it to machine precision.
pub fn fit_lcoup(data: &ChiExtraction, setup: &FitSetup) -> Result<FitResult> {
    let n = data.chi_n.len();
    if n < 3 {
        return Err(SwitchError::InvalidGrid(format!("fit needs at least 3 points, got {n}")));
    }
    positive("line_inductance", setup.line_inductance)?;
    positive("line_capacitance", setup.line_capacitance)?;
    positive("n_units", setup.n_units)?;
    non_negative("squid_self_capacitance", setup.squid_self_capacitance)?;
    for &f in &data.frequencies {
        positive("frequency", f)?;
    }

    let scale = setup.line_inductance;
    let cost = |x: f64| setup.misfit(data, x * scale).0;
    let mut upper = 2.0;
    let mut best = 0;
    let mut grid = Vec::new();
    for attempt in 0..=WIDENINGS {
        grid = (0..=SCAN_POINTS).map(|i| upper * i as f64 / SCAN_POINTS as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&x| cost(x)).collect();
        best = (0..values.len())
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .expect("scan is non-empty");
        // The upper end also counts when the rest of the scan is past resonance.
        let at_end = best == SCAN_POINTS || values[best + 1..].iter().all(|v| v.is_infinite());
        let at_end = at_end && values[SCAN_POINTS].is_finite();
        if !at_end {
            break;
        }
        if attempt == WIDENINGS {
            return Err(SwitchError::NoBracket {
                lower: 0.0,
                upper: upper * scale,
            });
        }
        upper *= 4.0;
    }

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(SCAN_POINTS)];
    let mut x = if cost(lo) == 0.0 && best == 0 {
        0.0
    } else {
        let solver = BrentOpt::new(lo, hi).set_tolerance(f64::EPSILON.sqrt(), 1e-14);
        let problem = Misfit { setup, data, scale };
        let res = Executor::new(problem, solver)
            .configure(|s| s.max_iters(200))
            .run()
            .map_err(|_| SwitchError::NoBracket {
                lower: lo * scale,
                upper: hi * scale,
            })?;
        res.state().best_param.unwrap_or(grid[best])
    };

    let mut coupling = x * scale;
    for _ in 0..20 {
        if coupling == 0.0 {
            break;
        }
        let (sse, grad, jtj) = setup.misfit(data, coupling);
        if jtj == 0.0 || !sse.is_finite() {
            break;
        }
        let next = (coupling - grad / jtj).max(0.0);
        if setup.misfit(data, next).0 > sse {
            break;
        }
        let done = (next - coupling).abs() <= 4.0 * f64::EPSILON * coupling;
        coupling = next;
        if done {
            break;
        }
    }
    x = coupling / scale;
    if best == 0 && cost(0.0) <= cost(x) {
        coupling = 0.0;
    }

    let (sse, _, jtj) = setup.misfit(data, coupling);
    let coupling_star = data
        .frequencies
        .iter()
        .map(|&f| setup.model_point(f, coupling).map(|p| p.0).unwrap_or(f64::NAN))
        .collect();
    let dof = (n - 1) as f64;
    let covariance = if jtj > 0.0 { sse / dof / jtj } else { f64::INFINITY };
    Ok(FitResult {
        coupling,
        coupling_star,
        residual: (sse / n as f64).sqrt(),
        covariance,
        search_upper: upper * scale,
    })
}

/// Power-split magnitudes (|S21|, |S31|) = (|cos|, |sin|) for a chi*N value.
pub fn split_magnitudes(chi_n: f64) -> (f64, f64) {
    let (s, c) = chi_n.sin_cos();
    (c.abs(), s.abs())
}

/// Equal split gives pi/4 before unwrapping.
pub const EQUAL_SPLIT_PHASE: f64 = FRAC_PI_4;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::coupling_phase;
    use crate::model::DeviceParams;
    use crate::network::{solve_with_coupling, uniform_z0};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn band(points: usize) -> Vec<f64> {
        (0..points)
            .map(|i| 4.8e9 + 2.5e9 * i as f64 / (points - 1) as f64)
            .collect()
    }

    fn setup(c_squid: f64) -> FitSetup {
        FitSetup {
            line_inductance: 0.28e-9,
            line_capacitance: 300e-15,
            n_units: 24.0,
            squid_self_capacitance: c_squid,
        }
    }

    fn synthetic(coupling: f64, c_squid: f64, freqs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        freqs
            .iter()
            .map(|&f| {
                let star = if coupling == 0.0 {
                    0.0
                } else {
                    effective_inductance(coupling, c_squid, angular(f)).unwrap().effective
                };
                split_magnitudes(coupling_phase(angular(f), 0.28e-9, 300e-15, star, 24.0).unwrap())
            })
            .unzip()
    }

    #[test]
    fn trivial_points() {
        let e = extract_chi(&[1e9], &[1.0], &[0.0]).unwrap();
        assert_eq!(e.chi_n, vec![0.0]);
        let e = extract_chi(&[1e9], &[0.3], &[0.3]).unwrap();
        assert_eq!(e.chi_n[0], EQUAL_SPLIT_PHASE);
        assert!(matches!(
            extract_chi(&[1e9, 2e9], &[1.0, 1e-13], &[0.0, 1e-13]),
            Err(SwitchError::DegenerateInput { index: 1 })
        ));
        assert!(extract_chi(&[1e9, 2e9], &[1.0], &[0.0, 0.1]).is_err());
        assert!(extract_chi(&[1e9], &[-1.0], &[0.0]).is_err());
    }

    #[test]
    fn calibration_scale_cancels() {
        let freqs = band(20);
        let (a, b) = synthetic(0.126e-9, 0.0, &freqs);
        let scaled: (Vec<f64>, Vec<f64>) = (a.iter().map(|x| 0.6 * x).collect(), b.iter().map(|x| 0.6 * x).collect());
        let e1 = extract_chi(&freqs, &a, &b).unwrap();
        let e2 = extract_chi(&freqs, &scaled.0, &scaled.1).unwrap();
        for (x, y) in e1.chi_n.iter().zip(&e2.chi_n) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn unwraps_past_several_folds() {
        let freqs: Vec<f64> = (0..200).map(|i| 1e9 + 5e7 * i as f64).collect();
        let truth: Vec<f64> = freqs.iter().map(|f| 0.1 + 0.6e-9 * f).collect();
        let (a, b): (Vec<f64>, Vec<f64>) = truth.iter().map(|&c| split_magnitudes(c)).unzip();
        let e = extract_chi(&freqs, &a, &b).unwrap();
        for (x, y) in e.chi_n.iter().zip(&truth) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
        assert!(*e.branch_offsets.last().unwrap() >= 4);
        assert!(!e.ambiguous_start);
        assert!(e.chi_n.windows(2).all(|w| (w[1] - w[0]).abs() < FRAC_PI_2));
    }

    #[test]
    fn start_near_fold_is_flagged() {
        let (a, b) = split_magnitudes(1.55);
        assert!(extract_chi(&[1e9], &[a], &[b]).unwrap().ambiguous_start);
    }

    #[test]
    fn discrete_solver_data_tracks_continuum_phase() {
        let d = DeviceParams::reference();
        let coupling = 0.126e-9;
        let z = crate::continuum::characteristic_impedance(0.28e-9, 300e-15, coupling).unwrap();
        let freqs = band(26);
        let (a, b): (Vec<f64>, Vec<f64>) = freqs
            .iter()
            .map(|&f| {
                let s = solve_with_coupling(&d, coupling, f, uniform_z0(z)).unwrap();
                (s.s21().norm(), s.s31().norm())
            })
            .unzip();
        let e = extract_chi(&freqs, &a, &b).unwrap();
        for (&f, &chi) in freqs.iter().zip(&e.chi_n) {
            let oracle = coupling_phase(angular(f), 0.28e-9, 300e-15, coupling, 24.0).unwrap();
            assert!((chi - oracle).abs() < 0.05, "{} GHz: {chi} vs {oracle}", f / 1e9);
        }
    }

    #[test]
    fn noise_free_fit_is_exact() {
        let freqs = band(26);
        for c_squid in [0.0, 20e-15] {
            let (a, b) = synthetic(0.126e-9, c_squid, &freqs);
            let e = extract_chi(&freqs, &a, &b).unwrap();
            let fit = fit_lcoup(&e, &setup(c_squid)).unwrap();
            assert!((fit.coupling / 0.126e-9 - 1.0).abs() < 1e-9, "{}", fit.coupling);
            assert!(fit.residual < 1e-10);
            assert!(fit.covariance >= 0.0);
            assert!(fit.coupling_star.iter().all(|&s| s >= fit.coupling));
        }
    }

    #[test]
    fn noisy_fit_within_three_percent() {
        let freqs = band(26);
        let (a, b) = synthetic(0.126e-9, 0.0, &freqs);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut noisy = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x * (1.0 + 0.01 * rng.random_range(-1.0..1.0))).collect() };
        let (a, b) = (noisy(&a), noisy(&b));
        let e = extract_chi(&freqs, &a, &b).unwrap();
        let fit = fit_lcoup(&e, &setup(0.0)).unwrap();
        assert!((fit.coupling / 0.126e-9 - 1.0).abs() < 0.03);
        assert!(fit.residual > 0.0);
    }

    #[test]
    fn uncoupled_data_fits_to_lower_bound() {
        let freqs = band(10);
        let (a, b) = synthetic(0.0, 0.0, &freqs);
        let e = extract_chi(&freqs, &a, &b).unwrap();
        let fit = fit_lcoup(&e, &setup(0.0)).unwrap();
        assert_eq!(fit.coupling, 0.0);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn unreachable_phase_has_no_bracket() {
        let freqs = band(5);
        let e = ChiExtraction {
            frequencies: freqs.clone(),
            chi_n: vec![500.0; 5],
            branch_offsets: vec![0; 5],
            ambiguous_start: false,
        };
        match fit_lcoup(&e, &setup(0.0)) {
            Err(SwitchError::NoBracket { lower, upper }) => {
                assert_eq!(lower, 0.0);
                assert!((upper - 32.0 * 0.28e-9).abs() < 1e-20);
            }
            other => panic!("{other:?}"),
        }
        let short = ChiExtraction {
            frequencies: freqs[..2].to_vec(),
            chi_n: vec![0.1, 0.2],
            branch_offsets: vec![0, 0],
            ambiguous_start: false,
        };
        assert!(fit_lcoup(&short, &setup(0.0)).is_err());
    }

    #[test]
    fn doubled_phase_needs_stronger_coupling() {
        let freqs = band(8);
        let fit_for = |scale: f64| {
            let (a, b) = synthetic(0.05e-9, 0.0, &freqs);
            let mut e = extract_chi(&freqs, &a, &b).unwrap();
            e.chi_n.iter_mut().for_each(|c| *c *= scale);
            fit_lcoup(&e, &setup(0.0)).unwrap().coupling
        };
        assert!(fit_for(2.0) > fit_for(1.0));
    }

    proptest! {
        #[test]
        fn extraction_inverts_the_split_law(chi in 0.0f64..FRAC_PI_2) {
            let (a, b) = split_magnitudes(chi);
            let e = extract_chi(&[6e9], &[a], &[b]).unwrap();
            prop_assert!((e.chi_n[0] - chi).abs() < 1e-12);
        }

        #[test]
        fn extraction_of_smooth_ramp_is_identity(start in 0.0f64..0.6, step in 1e-4f64..0.02) {
            let freqs: Vec<f64> = (0..40).map(|i| 4e9 + 1e8 * i as f64).collect();
            let truth: Vec<f64> = (0..40).map(|i| start + step * i as f64).filter(|&c| c <= FRAC_PI_2).collect();
            let (a, b): (Vec<f64>, Vec<f64>) = truth.iter().map(|&c| split_magnitudes(c)).unzip();
            let e = extract_chi(&freqs[..truth.len()], &a, &b).unwrap();
            for (x, y) in e.chi_n.iter().zip(&truth) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn fit_recovers_any_coupling(coupling in 0.02e-9f64..0.15e-9) {
            let freqs = band(12);
            let (a, b) = synthetic(coupling, 0.0, &freqs);
            let e = extract_chi(&freqs, &a, &b).unwrap();
            let fit = fit_lcoup(&e, &setup(0.0)).unwrap();
            prop_assert!((fit.coupling / coupling - 1.0).abs() < 1e-8);
            prop_assert!(fit.residual < 1e-10);
        }
    }
}
