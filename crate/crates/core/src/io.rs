//! Kernel files and number formatting.
//!
//! A kernel file holds `key: value` fields, one per line, where each value is
//! a JSON array and may continue over following lines. `#` starts a comment.
//!
//! ```text
//! # two-type kernel
//! weights: [0.5, 0.5]
//! values: [[3, 1],
//!          [1, 2]]
//! ```
//!
//! `weights` may be omitted, in which case the classes are equally weighted.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::kernel::{StepKernel, WeightedMeasure};

pub const SIGNIFICANT_DIGITS: usize = 12;

fn fields(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out: BTreeMap<String, String> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let key = line
            .split_once(':')
            .map(|(k, _)| k.trim())
            .filter(|k| !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
        match key {
            Some(key) => {
                let rest = line.split_once(':').unwrap().1.trim();
                if out.insert(key.to_string(), rest.to_string()).is_some() {
                    return Err(Error::Parse(format!("line {}: duplicate field `{key}`", lineno + 1)));
                }
                current = Some(key.to_string());
            }
            None => match &current {
                Some(key) => {
                    let v = out.get_mut(key).unwrap();
                    v.push(' ');
                    v.push_str(line);
                }
                None => {
                    return Err(Error::Parse(format!(
                        "line {}: expected `key: value`",
                        lineno + 1
                    )))
                }
            },
        }
    }
    Ok(out)
}

fn parse_field<T: serde::de::DeserializeOwned>(key: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("field `{key}`: {e}")))
}

/// Parse kernel file contents.
pub fn parse_kernel(text: &str) -> Result<StepKernel> {
    let fields = fields(text)?;
    if let Some(unknown) = fields.keys().find(|k| *k != "weights" && *k != "values") {
        return Err(Error::Parse(format!("unknown field `{unknown}`")));
    }
    let values: Vec<Vec<f64>> = parse_field(
        "values",
        fields
            .get("values")
            .ok_or_else(|| Error::Parse("missing field `values`".into()))?,
    )?;
    let measure = match fields.get("weights") {
        Some(w) => WeightedMeasure::new(parse_field("weights", w)?)?,
        None => WeightedMeasure::uniform(values.len())?,
    };
    StepKernel::new(&values, measure)
}

pub fn read_kernel(path: &Path) -> Result<StepKernel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kernel(&text)
}

/// Kernel file text for `kernel`, numbers at 12 significant digits.
pub fn format_kernel(kernel: &StepKernel) -> String {
    let list = |xs: &[f64]| {
        let items: Vec<String> = xs.iter().map(|&x| fmt_sig(x)).collect();
        format!("[{}]", items.join(", "))
    };
    let rows: Vec<String> = kernel.rows().iter().map(|r| list(r)).collect();
    format!(
        "weights: {}\nvalues: [{}]\n",
        list(kernel.weights()),
        rows.join(",\n         ")
    )
}

/// Decimal text for `x` rounded to 12 significant digits, without trailing
/// zeros. Very large or small magnitudes use exponent notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-6..16).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    let digits = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
    let s = format!("{:.*}", digits, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    fmt_sig(x).parse().unwrap_or(x)
}

/// Round every float in a JSON tree to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap());
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with sorted keys and 12-significant-digit floats.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&round_json(v)).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::BlockMatrix;

    #[test]
    fn parses_kernel_files() {
        let k = parse_kernel("# test\nweights: [0.25, 0.75]\nvalues: [[3, 1],\n  [1, 2]]\n").unwrap();
        assert_eq!(k.classes(), 2);
        assert_eq!(k.value(0, 1), 1.0);
        assert_eq!(k.weights(), &[0.25, 0.75]);

        let k = parse_kernel("values: [[2]]").unwrap();
        assert_eq!(k.weights(), &[1.0]);
    }

    #[test]
    fn rejects_bad_kernel_files() {
        assert!(parse_kernel("weights: [1]").is_err());
        assert!(parse_kernel("values: [[1, 2], [3, 1]]").is_err());
        assert!(parse_kernel("values: [[1, -2], [-2, 1]]").is_err());
        assert!(parse_kernel("values: [[1]]\nextra: 3").is_err());
        assert!(parse_kernel("values: [[1]]\nvalues: [[2]]").is_err());
        assert!(parse_kernel("[[1]]").is_err());
        assert!(parse_kernel("weights: [0.5, 0.5]\nvalues: [[1]]").is_err());
    }

    #[test]
    fn format_round_trips() {
        let k = StepKernel::new(
            &[vec![3.0, 1.0 / 3.0], vec![1.0 / 3.0, 2.0]],
            WeightedMeasure::new(vec![0.4, 0.6]).unwrap(),
        )
        .unwrap();
        let back = parse_kernel(&format_kernel(&k)).unwrap();
        for (a, b) in back.values().iter().zip(k.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.796_812_130_020_02), "0.79681213002");
        assert_eq!(fmt_sig(2.0), "2");
        assert_eq!(fmt_sig(-1.5e-9), "-1.5e-9");
        assert_eq!(fmt_sig(20000.0), "20000");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        for x in [std::f64::consts::PI, 1e-7 / 3.0, 123456.789012345, 9.99999999999951] {
            let y: f64 = fmt_sig(x).parse().unwrap();
            assert!((x - y).abs() <= 5e-12 * x.abs(), "{x}");
        }
    }
}
