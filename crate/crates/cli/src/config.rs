//! Run configuration: a TOML file with unit-suffixed keys.
//!
//! Physical values are converted to SI by shifting the decimal exponent of
//! the number as written, so `0.28` nH becomes exactly the double nearest
//! 0.28e-9 and writing a config back reproduces every value bit for bit.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use cosine_switch::model::{DeviceParams, EdgeStyle};
use toml_edit::{DocumentMut, Item, Table, Value};

use crate::numfmt::{parse_scaled, scaled_text, shift_decimal};
use crate::CliError;

/// How the coupling inductance is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingSection {
    /// Flux-tuned SQUIDs.
    Squid {
        /// A.
        junction_critical_current: f64,
        asymmetry: f64,
    },
    /// Flux-independent coupling inductance, H.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSection {
    /// Hz.
    pub f_start: f64,
    pub f_stop: f64,
    pub f_points: usize,
    pub flux_start: Option<f64>,
    pub flux_stop: Option<f64>,
    pub flux_points: Option<usize>,
    /// Ohm.
    pub z0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TouchstoneFormat {
    #[default]
    MagnitudeAngle,
    RealImaginary,
}

impl TouchstoneFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            TouchstoneFormat::MagnitudeAngle => "MA",
            TouchstoneFormat::RealImaginary => "RI",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MA" => Some(TouchstoneFormat::MagnitudeAngle),
            "RI" => Some(TouchstoneFormat::RealImaginary),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateSection {
    pub flux: Option<f64>,
    pub format: Option<TouchstoneFormat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSection {
    /// Measured-data CSV, relative to the config file.
    pub data: Option<String>,
    /// Hz; the fit uses points inside [band_start, band_stop].
    pub band_start: Option<f64>,
    pub band_stop: Option<f64>,
    /// Where to write the reconstructed chi*N curves.
    pub curves: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSection {
    /// Hz.
    pub frequency: f64,
    /// Ohm.
    pub impedance: f64,
    pub chi_n: Option<f64>,
    pub n_units: Option<usize>,
    /// H.
    pub line_inductance: Option<f64>,
    pub line_inductance_min: Option<f64>,
    pub line_inductance_max: Option<f64>,
    pub max_coupling_ratio: Option<f64>,
    /// m.
    pub unit_pitch: Option<f64>,
    /// F.
    pub squid_self_capacitance: Option<f64>,
    pub isolation_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointsSection {
    /// Sweep CSV, relative to the config file.
    pub input: Option<String>,
    /// dB.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub device: Option<DeviceParams>,
    pub squid: Option<CouplingSection>,
    pub sweep: Option<SweepSection>,
    pub simulate: Option<SimulateSection>,
    pub fit: Option<FitSection>,
    pub design: Option<DesignSection>,
    pub points: Option<PointsSection>,
}

const SECTIONS: [&str; 7] = ["device", "squid", "sweep", "simulate", "fit", "design", "points"];

/// Reads one section, tracking which keys were consumed.
struct SectionReader<'a> {
    name: &'static str,
    table: &'a Table,
    used: BTreeSet<String>,
}

fn bad(key: String, reason: impl Into<String>) -> CliError {
    CliError::Config {
        key,
        reason: reason.into(),
    }
}

impl<'a> SectionReader<'a> {
    fn new(name: &'static str, table: &'a Table) -> Self {
        Self {
            name,
            table,
            used: BTreeSet::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn value(&mut self, key: &str) -> Result<Option<&'a Value>, CliError> {
        self.used.insert(key.to_string());
        match self.table.get(key) {
            None => Ok(None),
            Some(Item::Value(v)) => Ok(Some(v)),
            Some(_) => Err(bad(self.path(key), "must be a plain value")),
        }
    }

    fn number_text(&mut self, key: &str) -> Result<Option<String>, CliError> {
        match self.value(key)? {
            None => Ok(None),
            Some(Value::Float(f)) => {
                let text = f.display_repr().to_string();
                if !f.value().is_finite() {
                    return Err(bad(self.path(key), format!("must be finite, got {text}")));
                }
                Ok(Some(text))
            }
            Some(Value::Integer(i)) => Ok(Some(i.value().to_string())),
            Some(_) => Err(bad(self.path(key), "must be a number")),
        }
    }

    /// Number scaled by 10^`shift` to SI.
    fn scaled(&mut self, key: &str, shift: i64) -> Result<Option<f64>, CliError> {
        match self.number_text(key)? {
            None => Ok(None),
            Some(text) => parse_scaled(&text, shift)
                .map(Some)
                .ok_or_else(|| bad(self.path(key), format!("cannot read number {text}"))),
        }
    }

    fn required_scaled(&mut self, key: &str, shift: i64) -> Result<f64, CliError> {
        self.scaled(key, shift)?.ok_or_else(|| CliError::MissingKey(self.path(key)))
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        match self.value(key)? {
            None => Ok(None),
            Some(Value::Integer(i)) => usize::try_from(*i.value())
                .map(Some)
                .map_err(|_| bad(self.path(key), "must be a non-negative integer")),
            Some(_) => Err(bad(self.path(key), "must be an integer")),
        }
    }

    fn required_count(&mut self, key: &str) -> Result<usize, CliError> {
        self.count(key)?.ok_or_else(|| CliError::MissingKey(self.path(key)))
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, CliError> {
        match self.value(key)? {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.value().clone())),
            Some(_) => Err(bad(self.path(key), "must be a string")),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        for (key, _) in self.table.iter() {
            if !self.used.contains(key) {
                return Err(CliError::UnknownKey(self.path(key)));
            }
        }
        Ok(())
    }
}

fn read_device(table: &Table) -> Result<DeviceParams, CliError> {
    let mut r = SectionReader::new("device", table);
    let line_inductance = r.required_scaled("line_inductance_nH", -9)?;
    let line_capacitance = r.required_scaled("line_capacitance_fF", -15)?;
    let jj_self_capacitance = r.required_scaled("jj_self_capacitance_fF", -15)?;
    let squid_self_capacitance = r.required_scaled("squid_self_capacitance_fF", -15)?;
    let n_units = r.required_count("n_units")?;
    let unit_pitch = r.required_scaled("unit_pitch_um", -6)?;
    let edge_style = match r.string("edge_style")? {
        None => EdgeStyle::default(),
        Some(s) => EdgeStyle::parse(&s).ok_or_else(|| bad("device.edge_style".into(), format!("unknown edge style {s:?} (plain or symmetrized)")))?,
    };
    r.finish()?;
    let device = DeviceParams {
        line_inductance,
        line_capacitance,
        jj_self_capacitance,
        squid_self_capacitance,
        n_units,
        unit_pitch,
        edge_style,
    };
    if let Some(v) = device.validate().violations.first() {
        return Err(bad(format!("device.{}", unit_key(v.field)), v.message.clone()));
    }
    Ok(device)
}

/// Config key carrying a [`DeviceParams`] field.
fn unit_key(field: &str) -> &str {
    match field {
        "line_inductance" => "line_inductance_nH",
        "line_capacitance" => "line_capacitance_fF",
        "jj_self_capacitance" => "jj_self_capacitance_fF",
        "squid_self_capacitance" => "squid_self_capacitance_fF",
        "unit_pitch" => "unit_pitch_um",
        other => other,
    }
}

fn read_squid(table: &Table) -> Result<CouplingSection, CliError> {
    let mut r = SectionReader::new("squid", table);
    let ic = r.scaled("junction_critical_current_uA", -6)?;
    let d = r.scaled("asymmetry", 0)?;
    let fixed = r.scaled("coupling_nH", -9)?;
    r.finish()?;
    match (ic, d, fixed) {
        (None, None, Some(l)) => {
            if !(l >= 0.0) {
                return Err(bad("squid.coupling_nH".into(), "must be non-negative"));
            }
            Ok(CouplingSection::Fixed(l))
        }
        (Some(_), _, Some(_)) | (_, Some(_), Some(_)) => Err(bad(
            "squid.coupling_nH".into(),
            "give either coupling_nH or junction_critical_current_uA with asymmetry, not both",
        )),
        (Some(ic), Some(d), None) => {
            if !(ic > 0.0) {
                return Err(bad("squid.junction_critical_current_uA".into(), "must be positive"));
            }
            if !(0.0..1.0).contains(&d) {
                return Err(bad("squid.asymmetry".into(), "must lie in [0, 1)"));
            }
            Ok(CouplingSection::Squid {
                junction_critical_current: ic,
                asymmetry: d,
            })
        }
        (None, _, None) => Err(CliError::MissingKey("squid.junction_critical_current_uA".into())),
        (Some(_), None, None) => Err(CliError::MissingKey("squid.asymmetry".into())),
    }
}

fn read_sweep(table: &Table) -> Result<SweepSection, CliError> {
    let mut r = SectionReader::new("sweep", table);
    let s = SweepSection {
        f_start: r.required_scaled("f_start_GHz", 9)?,
        f_stop: r.required_scaled("f_stop_GHz", 9)?,
        f_points: r.required_count("f_points")?,
        flux_start: r.scaled("flux_start", 0)?,
        flux_stop: r.scaled("flux_stop", 0)?,
        flux_points: r.count("flux_points")?,
        z0: r.required_scaled("z0_ohm", 0)?,
    };
    r.finish()?;
    if !(s.f_start > 0.0) {
        return Err(bad("sweep.f_start_GHz".into(), "must be positive"));
    }
    if s.f_points == 0 {
        return Err(bad("sweep.f_points".into(), "must be at least 1"));
    }
    if s.f_points > 1 && !(s.f_stop > s.f_start) {
        return Err(bad("sweep.f_stop_GHz".into(), "must exceed f_start_GHz"));
    }
    if s.flux_points == Some(0) {
        return Err(bad("sweep.flux_points".into(), "must be at least 1"));
    }
    if let (Some(a), Some(b), Some(n)) = (s.flux_start, s.flux_stop, s.flux_points) {
        if n > 1 && !(b > a) {
            return Err(bad("sweep.flux_stop".into(), "must exceed flux_start"));
        }
    }
    if !(s.z0 > 0.0) {
        return Err(bad("sweep.z0_ohm".into(), "must be positive"));
    }
    Ok(s)
}

fn read_simulate(table: &Table) -> Result<SimulateSection, CliError> {
    let mut r = SectionReader::new("simulate", table);
    let flux = r.scaled("flux", 0)?;
    let format = match r.string("format")? {
        None => None,
        Some(s) => Some(TouchstoneFormat::parse(&s).ok_or_else(|| bad("simulate.format".into(), format!("unknown format {s:?} (MA or RI)")))?),
    };
    r.finish()?;
    Ok(SimulateSection { flux, format })
}

fn read_fit(table: &Table) -> Result<FitSection, CliError> {
    let mut r = SectionReader::new("fit", table);
    let s = FitSection {
        data: r.string("data")?,
        band_start: r.scaled("band_start_GHz", 9)?,
        band_stop: r.scaled("band_stop_GHz", 9)?,
        curves: r.string("curves")?,
    };
    r.finish()?;
    Ok(s)
}

fn read_design(table: &Table) -> Result<DesignSection, CliError> {
    let mut r = SectionReader::new("design", table);
    let s = DesignSection {
        frequency: r.required_scaled("frequency_GHz", 9)?,
        impedance: r.required_scaled("impedance_ohm", 0)?,
        chi_n: r.scaled("chi_n_rad", 0)?,
        n_units: r.count("n_units")?,
        line_inductance: r.scaled("line_inductance_nH", -9)?,
        line_inductance_min: r.scaled("line_inductance_min_nH", -9)?,
        line_inductance_max: r.scaled("line_inductance_max_nH", -9)?,
        max_coupling_ratio: r.scaled("max_coupling_ratio", 0)?,
        unit_pitch: r.scaled("unit_pitch_um", -6)?,
        squid_self_capacitance: r.scaled("squid_self_capacitance_fF", -15)?,
        isolation_threshold: r.scaled("isolation_threshold_dB", 0)?,
    };
    r.finish()?;
    Ok(s)
}

fn read_points(table: &Table) -> Result<PointsSection, CliError> {
    let mut r = SectionReader::new("points", table);
    let s = PointsSection {
        input: r.string("input")?,
        threshold: r.required_scaled("threshold_dB", 0)?,
    };
    r.finish()?;
    Ok(s)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: DocumentMut = text.parse().map_err(|e: toml_edit::TomlError| CliError::ConfigSyntax(e.to_string()))?;
        let root = doc.as_table();
        for (key, item) in root.iter() {
            if !SECTIONS.contains(&key) {
                return Err(CliError::UnknownKey(key.to_string()));
            }
            if !item.is_table() {
                return Err(bad(key.to_string(), "must be a [section]"));
            }
        }
        let section = |name: &str| root.get(name).and_then(Item::as_table);
        Ok(Self {
            device: section("device").map(read_device).transpose()?,
            squid: section("squid").map(read_squid).transpose()?,
            sweep: section("sweep").map(read_sweep).transpose()?,
            simulate: section("simulate").map(read_simulate).transpose()?,
            fit: section("fit").map(read_fit).transpose()?,
            design: section("design").map(read_design).transpose()?,
            points: section("points").map(read_points).transpose()?,
        })
    }

    /// TOML text that parses back to `self` exactly.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let mut section = |name: &str, lines: Vec<(String, String)>| {
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "[{name}]");
            for (k, v) in lines {
                let _ = writeln!(out, "{k} = {v}");
            }
        };
        let num = |v: f64, shift: i64| scaled_text(v, shift);
        let plain = |v: f64| shift_decimal(&format!("{v:e}"), 0).expect("float text");
        let quoted = |s: &str| Value::from(s).to_string().trim().to_string();

        if let Some(d) = &self.device {
            section(
                "device",
                vec![
                    ("line_inductance_nH".into(), num(d.line_inductance, -9)),
                    ("line_capacitance_fF".into(), num(d.line_capacitance, -15)),
                    ("jj_self_capacitance_fF".into(), num(d.jj_self_capacitance, -15)),
                    ("squid_self_capacitance_fF".into(), num(d.squid_self_capacitance, -15)),
                    ("n_units".into(), d.n_units.to_string()),
                    ("unit_pitch_um".into(), num(d.unit_pitch, -6)),
                    ("edge_style".into(), quoted(d.edge_style.as_str())),
                ],
            );
        }
        if let Some(s) = &self.squid {
            let lines = match *s {
                CouplingSection::Squid {
                    junction_critical_current,
                    asymmetry,
                } => vec![
                    ("junction_critical_current_uA".into(), num(junction_critical_current, -6)),
                    ("asymmetry".into(), plain(asymmetry)),
                ],
                CouplingSection::Fixed(l) => vec![("coupling_nH".into(), num(l, -9))],
            };
            section("squid", lines);
        }
        if let Some(s) = &self.sweep {
            let mut lines = vec![
                ("f_start_GHz".to_string(), num(s.f_start, 9)),
                ("f_stop_GHz".into(), num(s.f_stop, 9)),
                ("f_points".into(), s.f_points.to_string()),
            ];
            if let Some(v) = s.flux_start {
                lines.push(("flux_start".into(), plain(v)));
            }
            if let Some(v) = s.flux_stop {
                lines.push(("flux_stop".into(), plain(v)));
            }
            if let Some(v) = s.flux_points {
                lines.push(("flux_points".into(), v.to_string()));
            }
            lines.push(("z0_ohm".into(), plain(s.z0)));
            section("sweep", lines);
        }
        if let Some(s) = &self.simulate {
            let mut lines = Vec::new();
            if let Some(v) = s.flux {
                lines.push(("flux".to_string(), plain(v)));
            }
            if let Some(f) = s.format {
                lines.push(("format".into(), quoted(f.as_str())));
            }
            section("simulate", lines);
        }
        if let Some(s) = &self.fit {
            let mut lines = Vec::new();
            if let Some(v) = &s.data {
                lines.push(("data".to_string(), quoted(v)));
            }
            if let Some(v) = s.band_start {
                lines.push(("band_start_GHz".into(), num(v, 9)));
            }
            if let Some(v) = s.band_stop {
                lines.push(("band_stop_GHz".into(), num(v, 9)));
            }
            if let Some(v) = &s.curves {
                lines.push(("curves".into(), quoted(v)));
            }
            section("fit", lines);
        }
        if let Some(s) = &self.design {
            let mut lines = vec![
                ("frequency_GHz".to_string(), num(s.frequency, 9)),
                ("impedance_ohm".into(), plain(s.impedance)),
            ];
            let optional = [
                ("chi_n_rad", s.chi_n, 0),
                ("line_inductance_nH", s.line_inductance, -9),
                ("line_inductance_min_nH", s.line_inductance_min, -9),
                ("line_inductance_max_nH", s.line_inductance_max, -9),
                ("max_coupling_ratio", s.max_coupling_ratio, 0),
                ("unit_pitch_um", s.unit_pitch, -6),
                ("squid_self_capacitance_fF", s.squid_self_capacitance, -15),
                ("isolation_threshold_dB", s.isolation_threshold, 0),
            ];
            if let Some(n) = s.n_units {
                lines.push(("n_units".into(), n.to_string()));
            }
            for (key, value, shift) in optional {
                if let Some(v) = value {
                    lines.push((key.into(), num(v, shift)));
                }
            }
            section("design", lines);
        }
        if let Some(s) = &self.points {
            let mut lines = Vec::new();
            if let Some(v) = &s.input {
                lines.push(("input".to_string(), quoted(v)));
            }
            lines.push(("threshold_dB".into(), plain(s.threshold)));
            section("points", lines);
        }
        out
    }
}
