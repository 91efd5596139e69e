//! Decimal text handling: fixed-precision output and exact power-of-ten unit
//! shifts on the textual form of a number.

/// Rounds to 9 significant digits and prints the shortest text that parses
/// back to the rounded value.
pub fn sig9(value: f64) -> String {
    if !value.is_finite() {
        return format!("{value}");
    }
    if value == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{value:.8e}").parse().expect("formatted float parses");
    let magnitude = rounded.abs();
    if (1e-4..1e12).contains(&magnitude) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// A decimal number held as its digit string: value = 0.DIGITS x 10^point.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Decimal {
    negative: bool,
    digits: String,
    point: i64,
}

fn parse_decimal(text: &str) -> Option<Decimal> {
    let text: String = text.trim().chars().filter(|&c| c != '_').collect();
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(&text)),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all = format!("{int_part}{frac_part}");
    let leading = all.chars().take_while(|&c| c == '0').count();
    let digits = all[leading..].trim_end_matches('0').to_string();
    if digits.is_empty() {
        return Some(Decimal {
            negative,
            digits: String::new(),
            point: 0,
        });
    }
    let point = int_part.len() as i64 - leading as i64 + exponent;
    Some(Decimal {
        negative,
        digits,
        point,
    })
}

fn render(d: &Decimal) -> String {
    let sign = if d.negative { "-" } else { "" };
    if d.digits.is_empty() {
        return format!("{sign}0.0");
    }
    let n = d.digits.len() as i64;
    if d.point > 0 && d.point <= 21 {
        if d.point >= n {
            let zeros = "0".repeat((d.point - n) as usize);
            format!("{sign}{}{zeros}.0", d.digits)
        } else {
            let (a, b) = d.digits.split_at(d.point as usize);
            format!("{sign}{a}.{b}")
        }
    } else if d.point <= 0 && d.point > -6 {
        format!("{sign}0.{}{}", "0".repeat((-d.point) as usize), d.digits)
    } else {
        let (a, b) = d.digits.split_at(1);
        let b = if b.is_empty() { "0" } else { b };
        format!("{sign}{a}.{b}e{}", d.point - 1)
    }
}

/// Multiplies the number written as `text` by 10^`shift` without rounding,
/// returning TOML-compatible float text.
pub fn shift_decimal(text: &str, shift: i64) -> Option<String> {
    let mut d = parse_decimal(text)?;
    if !d.digits.is_empty() {
        d.point += shift;
    }
    Some(render(&d))
}

/// Parses `text` scaled by 10^`shift` with a single correct rounding.
pub fn parse_scaled(text: &str, shift: i64) -> Option<f64> {
    shift_decimal(text, shift)?.parse().ok()
}

/// Float text for `value / 10^shift`, exact in decimal, so that
/// `parse_scaled(&scaled_text(v, s), s) == v`.
pub fn scaled_text(value: f64, shift: i64) -> String {
    shift_decimal(&format!("{value:e}"), -shift).expect("float text is a decimal")
}
