//! Touchstone v1 four-port files.

use std::fmt::Write as _;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::config::TouchstoneFormat;
use crate::numfmt::sig9;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct TouchstoneData {
    pub format: TouchstoneFormat,
    /// Ohm.
    pub z0: f64,
    /// Hz.
    pub frequencies: Vec<f64>,
    pub s: Vec<Matrix4<Complex64>>,
}

fn pair(z: Complex64, format: TouchstoneFormat) -> (f64, f64) {
    match format {
        TouchstoneFormat::MagnitudeAngle => (z.norm(), z.arg().to_degrees()),
        TouchstoneFormat::RealImaginary => (z.re, z.im),
    }
}

/// One record per frequency: the frequency and S11..S14 on the first line,
/// each following row of the matrix on its own continuation line.
pub fn write_s4p(data: &TouchstoneData, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "! {c}");
    }
    let _ = writeln!(out, "# GHZ S {} R {}", data.format.as_str(), sig9(data.z0));
    for (f, s) in data.frequencies.iter().zip(&data.s) {
        for row in 0..4 {
            let lead = if row == 0 { sig9(f / 1e9) } else { String::new() };
            let mut line = format!("{lead:<14}");
            for col in 0..4 {
                let (a, b) = pair(s[(row, col)], data.format);
                let _ = write!(line, " {:>16} {:>16}", sig9(a), sig9(b));
            }
            let _ = writeln!(out, "{}", line.trim_end());
        }
    }
    out
}

fn frequency_scale(unit: &str) -> Option<f64> {
    match unit {
        "HZ" => Some(1.0),
        "KHZ" => Some(1e3),
        "MHZ" => Some(1e6),
        "GHZ" => Some(1e9),
        _ => None,
    }
}

pub fn read_s4p(text: &str) -> Result<TouchstoneData, CliError> {
    let err = |line: usize, reason: String| CliError::Format {
        what: "touchstone".into(),
        line,
        reason,
    };
    let mut scale = 1e9;
    let mut format = TouchstoneFormat::MagnitudeAngle;
    let mut z0 = 50.0;
    let mut seen_header = false;
    let mut numbers: Vec<(usize, f64)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(options) = line.strip_prefix('#') {
            if seen_header {
                return Err(err(line_no, "second option line".into()));
            }
            seen_header = true;
            let tokens: Vec<String> = options.split_whitespace().map(str::to_ascii_uppercase).collect();
            let mut k = 0;
            while k < tokens.len() {
                let t = tokens[k].as_str();
                if let Some(s) = frequency_scale(t) {
                    scale = s;
                } else if let Some(f) = TouchstoneFormat::parse(t) {
                    format = f;
                } else if t == "DB" {
                    return Err(err(line_no, "DB format is not supported".into()));
                } else if t == "S" {
                } else if t == "R" {
                    k += 1;
                    z0 = tokens
                        .get(k)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| err(line_no, "R needs a number".into()))?;
                } else {
                    return Err(err(line_no, format!("unsupported option {t}")));
                }
                k += 1;
            }
            continue;
        }
        for token in line.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| err(line_no, format!("not a number: {token}")))?;
            numbers.push((line_no, v));
        }
    }
    if !seen_header {
        return Err(err(0, "missing # option line".into()));
    }
    const RECORD: usize = 33;
    if numbers.len() % RECORD != 0 {
        let line = numbers.last().map_or(0, |n| n.0);
        return Err(err(line, format!("{} values do not form whole 4-port records", numbers.len())));
    }
    let mut frequencies = Vec::new();
    let mut s = Vec::new();
    for record in numbers.chunks(RECORD) {
        frequencies.push(record[0].1 * scale);
        let mut m = Matrix4::zeros();
        for (k, p) in record[1..].chunks(2).enumerate() {
            let (a, b) = (p[0].1, p[1].1);
            m[(k / 4, k % 4)] = match format {
                TouchstoneFormat::MagnitudeAngle => Complex64::from_polar(a, b.to_radians()),
                TouchstoneFormat::RealImaginary => Complex64::new(a, b),
            };
        }
        s.push(m);
    }
    Ok(TouchstoneData {
        format,
        z0,
        frequencies,
        s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(format: TouchstoneFormat) -> TouchstoneData {
        let mut m = Matrix4::zeros();
        for r in 0..4 {
            for c in 0..4 {
                m[(r, c)] = Complex64::from_polar(0.1 * (r + 1) as f64 + 0.01 * c as f64, 0.3 * (c as f64 - r as f64));
            }
        }
        TouchstoneData {
            format,
            z0: 36.338,
            frequencies: vec![4e9, 6e9],
            s: vec![m, m * Complex64::new(0.0, 1.0)],
        }
    }

    #[test]
    fn layout_and_round_trip() {
        for format in [TouchstoneFormat::MagnitudeAngle, TouchstoneFormat::RealImaginary] {
            let data = sample(format);
            let text = write_s4p(&data, &["test".into()]);
            let lines: Vec<&str> = text.lines().collect();
            assert_eq!(lines[0], "! test");
            assert_eq!(lines[1], format!("# GHZ S {} R 36.338", format.as_str()));
            assert_eq!(lines.len(), 2 + 2 * 4);
            assert_eq!(lines[2].split_whitespace().count(), 9);
            assert_eq!(lines[3].split_whitespace().count(), 8);
            let back = read_s4p(&text).unwrap();
            assert_eq!(back.frequencies, data.frequencies);
            assert_eq!(back.z0, data.z0);
            for (a, b) in back.s.iter().zip(&data.s) {
                for (x, y) in a.iter().zip(b.iter()) {
                    assert!((x.norm() - y.norm()).abs() < 1e-9);
                    assert!((x - y).norm() < 1e-8);
                }
            }
            assert_eq!(write_s4p(&back, &["test".into()]), text);
        }
    }

    #[test]
    fn rejects_broken_files() {
        assert!(read_s4p("1 2 3\n").is_err());
        assert!(read_s4p("# GHZ S MA R 50\n1 2 3\n").is_err());
        assert!(read_s4p("# GHZ S DB R 50\n").is_err());
        assert!(read_s4p("# GHZ Y MA R 50\n").is_err());
        let empty = read_s4p("# HZ S RI R 75\n").unwrap();
        assert_eq!(empty.z0, 75.0);
        assert!(empty.frequencies.is_empty());
    }
}
