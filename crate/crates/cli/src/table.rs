//! CSV tables: sweep maps, operating points, measured transmission data and
//! fit reports.

use std::collections::BTreeMap;

use cosine_switch::flux::{cap_db, ChannelMap, Channels, OperatingPoint, SweepGrid, SwitchState};
use num_complex::Complex64;

use crate::numfmt::sig9;
use crate::CliError;

pub const SWEEP_HEADER: [&str; 9] = [
    "f_Hz",
    "flux",
    "|S21|_dB",
    "|S31|_dB",
    "|S11|_dB",
    "|S41|_dB",
    "arg(S21)_deg",
    "arg(S31)_deg",
    "isolation_dB",
];

fn db(z: Complex64) -> f64 {
    20.0 * z.norm().log10()
}

fn from_db(value_db: f64, deg: f64) -> Complex64 {
    Complex64::from_polar(10f64.powf(value_db / 20.0), deg.to_radians())
}

/// One data row of a sweep table; `None` marks a point the solver could not
/// evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub frequency: f64,
    pub flux: f64,
    pub values: Option<[f64; 7]>,
}

impl SweepRow {
    fn from_channels(frequency: f64, flux: f64, c: Option<&Channels>) -> Self {
        Self {
            frequency,
            flux,
            values: c.map(|c| {
                [
                    db(c.s21),
                    db(c.s31),
                    db(c.s11),
                    db(c.s41),
                    c.s21.arg().to_degrees(),
                    c.s31.arg().to_degrees(),
                    cap_db(c.isolation_db()),
                ]
            }),
        }
    }

    fn channels(&self) -> Option<Channels> {
        self.values.map(|v| Channels {
            s21: from_db(v[0], v[4]),
            s31: from_db(v[1], v[5]),
            s11: from_db(v[2], 0.0),
            s41: from_db(v[3], 0.0),
        })
    }
}

pub fn sweep_rows(grid: &SweepGrid) -> Vec<SweepRow> {
    let map = grid.channel_map();
    let n_phi = map.fluxes.len();
    map.cells
        .iter()
        .enumerate()
        .map(|(i, c)| SweepRow::from_channels(map.frequencies[i / n_phi], map.fluxes[i % n_phi], c.as_ref()))
        .collect()
}

fn csv_error(what: &str, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    CliError::Format {
        what: what.into(),
        line,
        reason: e.to_string(),
    }
}

fn finish(writer: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(writer.into_inner().expect("in-memory writer")).expect("csv output is UTF-8")
}

pub fn write_sweep(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).expect("in-memory write");
    for r in rows {
        let mut record = vec![sig9(r.frequency), sig9(r.flux)];
        match r.values {
            Some(v) => record.extend(v.iter().map(|&x| sig9(x))),
            None => record.extend(std::iter::repeat_n(String::new(), 7)),
        }
        w.write_record(&record).expect("in-memory write");
    }
    finish(w)
}

/// Column positions by header name; every name in `required` must exist.
fn locate(headers: &csv::StringRecord, required: &[&str], what: &str) -> Result<Vec<usize>, CliError> {
    required
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| CliError::MissingColumn {
                    what: what.into(),
                    column: name.to_string(),
                })
        })
        .collect()
}

fn number(record: &csv::StringRecord, index: usize, column: &str, what: &str) -> Result<f64, CliError> {
    let line = record.position().map_or(0, |p| p.line() as usize);
    let text = record.get(index).unwrap_or("").trim();
    text.parse().map_err(|_| CliError::Format {
        what: what.into(),
        line,
        reason: format!("column {column}: not a number: {text:?}"),
    })
}

pub fn read_sweep(text: &str) -> Result<Vec<SweepRow>, CliError> {
    const WHAT: &str = "sweep csv";
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(WHAT, e))?.clone();
    let cols = locate(&headers, &SWEEP_HEADER, WHAT)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(WHAT, e))?;
        let frequency = number(&record, cols[0], SWEEP_HEADER[0], WHAT)?;
        let flux = number(&record, cols[1], SWEEP_HEADER[1], WHAT)?;
        let hole = cols[2..].iter().all(|&i| record.get(i).unwrap_or("").trim().is_empty());
        let values = if hole {
            None
        } else {
            let mut v = [0.0; 7];
            for (k, &i) in cols[2..].iter().enumerate() {
                v[k] = number(&record, i, SWEEP_HEADER[k + 2], WHAT)?;
            }
            Some(v)
        };
        rows.push(SweepRow {
            frequency,
            flux,
            values,
        });
    }
    Ok(rows)
}

/// Rebuilds the frequency by flux grid from sweep rows in any order.
pub fn rows_to_map(rows: &[SweepRow]) -> Result<ChannelMap, CliError> {
    let mut cells: BTreeMap<(u64, u64), Option<Channels>> = BTreeMap::new();
    let key = |x: f64| {
        // Order-preserving bits for finite doubles.
        let b = x.to_bits();
        if x.is_sign_negative() { !b } else { b | (1 << 63) }
    };
    let mut freqs = Vec::new();
    let mut fluxes = Vec::new();
    for r in rows {
        if cells.insert((key(r.frequency), key(r.flux)), r.channels()).is_some() {
            return Err(CliError::Data(format!("duplicate point f = {} Hz, flux = {}", r.frequency, r.flux)));
        }
        freqs.push(r.frequency);
        fluxes.push(r.flux);
    }
    freqs.sort_by(f64::total_cmp);
    freqs.dedup();
    fluxes.sort_by(f64::total_cmp);
    fluxes.dedup();
    if cells.len() != freqs.len() * fluxes.len() {
        return Err(CliError::Data(format!(
            "{} points do not fill a {}x{} frequency by flux grid",
            cells.len(),
            freqs.len(),
            fluxes.len()
        )));
    }
    let ordered = cells.into_values().collect();
    ChannelMap::new(freqs, fluxes, ordered).map_err(|e| CliError::Data(e.to_string()))
}

pub fn write_points(points: &[OperatingPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["f_Hz", "flux", "state", "isolation_dB", "bandwidth_Hz", "insertion_loss_dB"])
        .expect("in-memory write");
    for p in points {
        let state = match p.state {
            SwitchState::Through => "through",
            SwitchState::Cross => "cross",
        };
        w.write_record([
            sig9(p.frequency),
            sig9(p.flux),
            state.to_string(),
            sig9(cap_db(p.isolation)),
            sig9(p.bandwidth),
            sig9(p.insertion_loss),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

/// Measured transmissions for one flux setting, sorted by frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredSet {
    pub flux: Option<f64>,
    pub frequencies: Vec<f64>,
    pub s21: Vec<f64>,
    pub s31: Vec<f64>,
}

/// Reads `f_Hz, |S21|, |S31|` with an optional `flux` column, grouping rows
/// by flux in ascending order.
pub fn read_measured(text: &str) -> Result<Vec<MeasuredSet>, CliError> {
    const WHAT: &str = "measured csv";
    const COLUMNS: [&str; 3] = ["f_Hz", "|S21|", "|S31|"];
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(WHAT, e))?.clone();
    let cols = locate(&headers, &COLUMNS, WHAT)?;
    let flux_col = headers.iter().position(|h| h.trim() == "flux");
    let mut groups: Vec<(Option<f64>, Vec<(f64, f64, f64)>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(WHAT, e))?;
        let f = number(&record, cols[0], COLUMNS[0], WHAT)?;
        let a = number(&record, cols[1], COLUMNS[1], WHAT)?;
        let b = number(&record, cols[2], COLUMNS[2], WHAT)?;
        let flux = flux_col.map(|i| number(&record, i, "flux", WHAT)).transpose()?;
        match groups.iter_mut().find(|g| g.0 == flux) {
            Some(g) => g.1.push((f, a, b)),
            None => groups.push((flux, vec![(f, a, b)])),
        }
    }
    groups.sort_by(|x, y| x.0.unwrap_or(0.0).total_cmp(&y.0.unwrap_or(0.0)));
    Ok(groups
        .into_iter()
        .map(|(flux, mut pts)| {
            pts.sort_by(|x, y| x.0.total_cmp(&y.0));
            MeasuredSet {
                flux,
                frequencies: pts.iter().map(|p| p.0).collect(),
                s21: pts.iter().map(|p| p.1).collect(),
                s31: pts.iter().map(|p| p.2).collect(),
            }
        })
        .collect())
}

pub fn write_measured(sets: &[MeasuredSet]) -> String {
    let with_flux = sets.iter().any(|s| s.flux.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["f_Hz", "|S21|", "|S31|"];
    if with_flux {
        header.push("flux");
    }
    w.write_record(&header).expect("in-memory write");
    for s in sets {
        for i in 0..s.frequencies.len() {
            let mut record = vec![sig9(s.frequencies[i]), sig9(s.s21[i]), sig9(s.s31[i])];
            if with_flux {
                record.push(sig9(s.flux.unwrap_or(0.0)));
            }
            w.write_record(&record).expect("in-memory write");
        }
    }
    finish(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub flux: Option<f64>,
    /// H.
    pub coupling: f64,
    /// H.
    pub coupling_std: f64,
    /// rad.
    pub residual: f64,
    pub points: usize,
    pub ambiguous_start: bool,
}

pub fn write_fit_report(rows: &[FitRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["flux", "L_coup_nH", "L_coup_std_nH", "residual_rad", "points", "ambiguous_start"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.flux.map(sig9).unwrap_or_default(),
            sig9(r.coupling * 1e9),
            sig9(r.coupling_std * 1e9),
            sig9(r.residual),
            r.points.to_string(),
            r.ambiguous_start.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub flux: Option<f64>,
    pub frequency: f64,
    pub data_over_pi: f64,
    pub model_over_pi: f64,
    /// H.
    pub coupling_star: f64,
}

pub fn write_curves(points: &[CurvePoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["flux", "f_Hz", "chiN_over_pi_data", "chiN_over_pi_model", "L_coup_star_nH"])
        .expect("in-memory write");
    for p in points {
        w.write_record([
            p.flux.map(sig9).unwrap_or_default(),
            sig9(p.frequency),
            sig9(p.data_over_pi),
            sig9(p.model_over_pi),
            sig9(p.coupling_star * 1e9),
        ])
        .expect("in-memory write");
    }
    finish(w)
}
