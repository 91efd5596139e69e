//! The five CLI verbs. Each returns its outputs as text; the binary decides
//! where they go.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cosine_switch::continuum::characteristic_impedance;
use cosine_switch::design::{flux_for_lcoup, synthesize, DesignSpec};
use cosine_switch::fit::{extract_chi, fit_lcoup, FitSetup};
use cosine_switch::flux::{find_operating_points, linspace, run_sweep, SwitchState};
use cosine_switch::model::{angular, DeviceParams, FluxBias};
use cosine_switch::network::{uniform_z0, CouplingSource, FixedCoupling};
use cosine_switch::{Result as ModelResult, SquidModel};
use rayon::prelude::*;

use crate::config::{CouplingSection, RunConfig, SweepSection};
use crate::numfmt::sig9;
use crate::table::{self, CurvePoint, FitRow};
use crate::touchstone::{write_s4p, TouchstoneData};
use crate::CliError;

/// Band the fit uses when none is configured, Hz.
pub const DEFAULT_FIT_BAND: (f64, f64) = (4.8e9, 7.3e9);

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Overrides `sweep.z0_ohm` (and the matched impedance in `design`).
    pub z0: Option<f64>,
    /// Overrides the data path of `fit` and `points`.
    pub input: Option<PathBuf>,
    /// Directory that relative paths in the config resolve against.
    pub base_dir: PathBuf,
}

/// What a command produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Output {
    /// The main artifact; written to `--out` or stdout.
    pub primary: String,
    /// Human-readable summary; stdout when the artifact goes to a file.
    pub summary: Option<String>,
    /// Further files named by the config.
    pub files: Vec<(PathBuf, String)>,
}

/// The coupling element configured in `[squid]`.
#[derive(Debug, Clone, Copy)]
pub enum Coupling {
    Squid(SquidModel),
    Fixed(FixedCoupling),
}

impl CouplingSource for Coupling {
    fn coupling_at(&self, flux: FluxBias) -> ModelResult<f64> {
        match self {
            Coupling::Squid(s) => s.coupling_at(flux),
            Coupling::Fixed(f) => f.coupling_at(flux),
        }
    }
}

fn need<'a, T>(value: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::MissingKey(key.to_string()))
}

fn coupling(config: &RunConfig, device: &DeviceParams) -> Result<Coupling, CliError> {
    match *need(&config.squid, "squid.junction_critical_current_uA")? {
        CouplingSection::Squid {
            junction_critical_current,
            asymmetry,
        } => Ok(Coupling::Squid(SquidModel::new(
            junction_critical_current,
            asymmetry,
            device.squid_self_capacitance,
        )?)),
        CouplingSection::Fixed(l) => Ok(Coupling::Fixed(FixedCoupling(l))),
    }
}

fn z0(sweep: &SweepSection, options: &Options) -> Result<f64, CliError> {
    match options.z0 {
        Some(z) if !(z > 0.0 && z.is_finite()) => Err(CliError::Config {
            key: "--z0".into(),
            reason: format!("must be positive, got {z}"),
        }),
        Some(z) => Ok(z),
        None => Ok(sweep.z0),
    }
}

fn frequencies(sweep: &SweepSection) -> Vec<f64> {
    linspace(sweep.f_start, sweep.f_stop, sweep.f_points)
}

fn resolve(options: &Options, configured: Option<&str>, key: &str) -> Result<PathBuf, CliError> {
    match (&options.input, configured) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(p)) => Ok(options.base_dir.join(p)),
        (None, None) => Err(CliError::MissingKey(key.to_string())),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn db(x: f64) -> f64 {
    20.0 * x.log10()
}

/// Four-port response over the frequency grid at one flux.
pub fn simulate(config: &RunConfig, options: &Options) -> Result<Output, CliError> {
    let device = need(&config.device, "device.line_inductance_nH")?;
    let sweep = need(&config.sweep, "sweep.f_start_GHz")?;
    let flux = *config
        .simulate
        .as_ref()
        .and_then(|s| s.flux.as_ref())
        .ok_or_else(|| CliError::MissingKey("simulate.flux".into()))?;
    let format = config.simulate.and_then(|s| s.format).unwrap_or_default();
    let source = coupling(config, device)?;
    let z = z0(sweep, options)?;
    let freqs = frequencies(sweep);

    let grid = run_sweep(device, &source, &freqs, &[flux], uniform_z0(z))?;
    let mut matrices = Vec::with_capacity(freqs.len());
    for (i, &f) in freqs.iter().enumerate() {
        match grid.get(i, 0) {
            Some(s) => matrices.push(s.s),
            None => {
                // Re-solve to surface the underlying error.
                cosine_switch::network::solve_coupled(device, &source, f, FluxBias(flux), uniform_z0(z))?;
                unreachable!("a hole always has an error");
            }
        }
    }
    let data = TouchstoneData {
        format,
        z0: z,
        frequencies: freqs.clone(),
        s: matrices,
    };
    let comments = vec![format!("flux = {}", sig9(flux)), format!("n_units = {}", device.n_units)];

    let mut summary = format!("{:>12} {:>12} {:>12} {:>12} {:>12}\n", "f_GHz", "|S21|_dB", "|S31|_dB", "|S11|_dB", "|S41|_dB");
    let mut picks = vec![0, freqs.len() / 2, freqs.len() - 1];
    picks.dedup();
    for i in picks {
        let s = grid.get(i, 0).expect("checked above");
        let _ = writeln!(
            summary,
            "{:>12} {:>12} {:>12} {:>12} {:>12}",
            sig9(freqs[i] / 1e9),
            format!("{:.2}", db(s.s21().norm())),
            format!("{:.2}", db(s.s31().norm())),
            format!("{:.2}", db(s.s11().norm())),
            format!("{:.2}", db(s.s41().norm())),
        );
    }
    Ok(Output {
        primary: write_s4p(&data, &comments),
        summary: Some(summary),
        files: Vec::new(),
    })
}

/// Frequency by flux map as CSV, frequency-major.
pub fn sweep(config: &RunConfig, options: &Options) -> Result<Output, CliError> {
    let device = need(&config.device, "device.line_inductance_nH")?;
    let sweep = need(&config.sweep, "sweep.f_start_GHz")?;
    let start = *need(&sweep.flux_start, "sweep.flux_start")?;
    let stop = *need(&sweep.flux_stop, "sweep.flux_stop")?;
    let points = *need(&sweep.flux_points, "sweep.flux_points")?;
    let source = coupling(config, device)?;
    let z = z0(sweep, options)?;
    let grid = run_sweep(device, &source, &frequencies(sweep), &linspace(start, stop, points), uniform_z0(z))?;
    let holes = grid.hole_count();
    let summary = format!(
        "{} frequencies x {} fluxes, {} unsolvable points\n",
        grid.frequencies().len(),
        grid.fluxes().len(),
        holes
    );
    Ok(Output {
        primary: table::write_sweep(&table::sweep_rows(&grid)),
        summary: Some(summary),
        files: Vec::new(),
    })
}

/// Operating-point report from a sweep CSV.
pub fn points(config: &RunConfig, options: &Options) -> Result<Output, CliError> {
    let section = need(&config.points, "points.threshold_dB")?;
    let path = resolve(options, section.input.as_deref(), "points.input")?;
    let rows = table::read_sweep(&read_file(&path)?)?;
    let map = table::rows_to_map(&rows)?;
    let found = find_operating_points(&map, section.threshold)?;
    let cross = found.iter().filter(|p| p.state == SwitchState::Cross).count();
    Ok(Output {
        primary: table::write_points(&found),
        summary: Some(format!("{} operating points ({} cross)\n", found.len(), cross)),
        files: Vec::new(),
    })
}

/// Coupling inductance per flux from measured |S21|, |S31|.
pub fn fit(config: &RunConfig, options: &Options) -> Result<Output, CliError> {
    let device = need(&config.device, "device.line_inductance_nH")?;
    let section = config.fit.clone().unwrap_or(crate::config::FitSection {
        data: None,
        band_start: None,
        band_stop: None,
        curves: None,
    });
    let path = resolve(options, section.data.as_deref(), "fit.data")?;
    let sets = table::read_measured(&read_file(&path)?)?;
    if sets.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    let lo = section.band_start.unwrap_or(DEFAULT_FIT_BAND.0);
    let hi = section.band_stop.unwrap_or(DEFAULT_FIT_BAND.1);
    let setup = FitSetup {
        line_inductance: device.line_inductance,
        line_capacitance: device.line_capacitance,
        n_units: device.n_units as f64,
        squid_self_capacitance: device.squid_self_capacitance,
    };

    let results: Vec<Result<(FitRow, Vec<CurvePoint>), CliError>> = sets
        .par_iter()
        .map(|set| {
            let keep: Vec<usize> = (0..set.frequencies.len())
                .filter(|&i| set.frequencies[i] >= lo && set.frequencies[i] <= hi)
                .collect();
            let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<f64>>();
            let (f, a, b) = (pick(&set.frequencies), pick(&set.s21), pick(&set.s31));
            let label = set.flux.map(|x| format!(" at flux {}", sig9(x))).unwrap_or_default();
            if f.len() < 3 {
                return Err(CliError::Data(format!("{} points in the fit band{label}; need at least 3", f.len())));
            }
            let extraction = extract_chi(&f, &a, &b)?;
            let result = fit_lcoup(&extraction, &setup)?;
            let model = |fi: f64, star: f64| {
                cosine_switch::continuum::coupling_phase(angular(fi), setup.line_inductance, setup.line_capacitance, star, setup.n_units)
            };
            let mut curve = Vec::with_capacity(f.len());
            for (i, &fi) in f.iter().enumerate() {
                let star = result.coupling_star[i];
                curve.push(CurvePoint {
                    flux: set.flux,
                    frequency: fi,
                    data_over_pi: extraction.chi_n[i] / PI,
                    model_over_pi: model(fi, star)? / PI,
                    coupling_star: star,
                });
            }
            Ok((
                FitRow {
                    flux: set.flux,
                    coupling: result.coupling,
                    coupling_std: result.covariance.sqrt(),
                    residual: result.residual,
                    points: f.len(),
                    ambiguous_start: extraction.ambiguous_start,
                },
                curve,
            ))
        })
        .collect();

    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for r in results {
        let (row, curve) = r?;
        rows.push(row);
        curves.extend(curve);
    }
    let ambiguous = rows.iter().filter(|r| r.ambiguous_start).count();
    let mut summary = format!("{} fits in {}-{} GHz\n", rows.len(), sig9(lo / 1e9), sig9(hi / 1e9));
    if ambiguous > 0 {
        let _ = writeln!(summary, "warning: {ambiguous} fits start near the first fold; branch assignment is uncertain");
    }
    let files = match &section.curves {
        Some(p) => vec![(options.base_dir.join(p), table::write_curves(&curves))],
        None => Vec::new(),
    };
    Ok(Output {
        primary: table::write_fit_report(&rows),
        summary: Some(summary),
        files,
    })
}

/// Synthesized device, its SQUID bias and a forward check.
pub fn design(config: &RunConfig, options: &Options) -> Result<Output, CliError> {
    let d = need(&config.design, "design.frequency_GHz")?;
    let (ic, asymmetry) = match *need(&config.squid, "squid.junction_critical_current_uA")? {
        CouplingSection::Squid {
            junction_critical_current,
            asymmetry,
        } => (junction_critical_current, asymmetry),
        CouplingSection::Fixed(_) => {
            return Err(CliError::Config {
                key: "squid.coupling_nH".into(),
                reason: "design needs junction_critical_current_uA and asymmetry".into(),
            })
        }
    };
    let mut spec = DesignSpec::new(d.frequency, d.impedance);
    spec.chi_n = d.chi_n.unwrap_or(FRAC_PI_2);
    spec.n_units = d.n_units;
    spec.line_inductance = d.line_inductance;
    spec.inductance_min = d.line_inductance_min;
    spec.inductance_max = d.line_inductance_max;
    if let Some(r) = d.max_coupling_ratio {
        spec.max_coupling_ratio = r;
    }
    if let Some(p) = d.unit_pitch {
        spec.unit_pitch = p;
    }
    let design = synthesize(&spec)?;
    let c_squid = d.squid_self_capacitance.unwrap_or(0.0);
    let squid = SquidModel::new(ic, asymmetry, c_squid)?;
    let omega = angular(d.frequency);
    let flux = flux_for_lcoup(design.coupling, &squid, omega)?;
    let mut device = design.device;
    device.squid_self_capacitance = c_squid;

    let matched = characteristic_impedance(device.line_inductance, device.line_capacitance, design.coupling)?;
    let z = options.z0.unwrap_or(matched);
    let threshold = d.isolation_threshold.unwrap_or(20.0);
    let span = 1e9f64.min(0.9 * d.frequency);
    let freqs = linspace(d.frequency - span, d.frequency + span, 201);
    let grid = run_sweep(&device, &Coupling::Squid(squid), &freqs, &[flux.0], uniform_z0(z))?;
    let centre = grid.get(100, 0).ok_or_else(|| {
        CliError::Data("forward check failed at the target frequency".into())
    })?;
    let isolation = db(centre.s31().norm() / centre.s21().norm());
    let bandwidth = grid
        .operating_points(threshold)?
        .into_iter()
        .find(|p| p.state == SwitchState::Cross && p.frequency == freqs[100])
        .map_or(0.0, |p| p.bandwidth);

    let mut report = RunConfig {
        device: Some(device),
        squid: Some(CouplingSection::Squid {
            junction_critical_current: ic,
            asymmetry,
        }),
        ..RunConfig::default()
    }
    .to_toml();
    let _ = writeln!(report, "\n[operating_point]");
    for (k, v) in [
        ("coupling_nH", design.coupling * 1e9),
        ("n_units_real", design.units_real),
        ("flux", flux.0),
        ("matched_z0_ohm", matched),
        ("reference_z0_ohm", z),
        ("cross_isolation_dB", isolation),
        ("cross_s31_power", centre.s31().norm_sqr()),
        ("bandwidth_GHz", bandwidth / 1e9),
    ] {
        let _ = writeln!(report, "{k} = {}", sig9(v));
    }
    let summary = format!(
        "L = {} nH, C = {} fF, L_coup = {} nH, N = {}, flux = {}, isolation {:.1} dB, bandwidth {} GHz\n",
        sig9(device.line_inductance * 1e9),
        sig9(device.line_capacitance * 1e15),
        sig9(design.coupling * 1e9),
        device.n_units,
        sig9(flux.0),
        isolation,
        sig9(bandwidth / 1e9),
    );
    Ok(Output {
        primary: report,
        summary: Some(summary),
        files: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Simulate,
    Sweep,
    Fit,
    Design,
    Points,
}

pub fn run(verb: Verb, config: &RunConfig, options: &Options) -> Result<Output, CliError> {
    match verb {
        Verb::Simulate => simulate(config, options),
        Verb::Sweep => sweep(config, options),
        Verb::Fit => fit(config, options),
        Verb::Design => design(config, options),
        Verb::Points => points(config, options),
    }
}

/// Reads and parses a config file; relative paths inside it resolve against
/// its directory.
pub fn load_config(path: &Path) -> Result<(RunConfig, PathBuf), CliError> {
    let text = read_file(path)?;
    let config = RunConfig::parse(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((config, base))
}

