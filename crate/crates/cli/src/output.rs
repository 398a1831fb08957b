use serde::Serialize;

use crate::error::CliError;

/// Formats like C's `%.15g`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..15).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (14 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// A fixed-column CSV document.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Input(e.to_string());
        w.write_record(&self.header).map_err(err)?;
        for row in &self.rows {
            w.write_record(row).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Input(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(num(0.14), "0.14");
        assert_eq!(num(0.1 + 0.2), "0.3");
        assert_eq!(num(1.0 / 3.0), "0.333333333333333");
        assert_eq!(num(2.0), "2");
        assert_eq!(num(-0.0925), "-0.0925");
        assert_eq!(num(1.5e-7), "1.5e-07");
        assert_eq!(num(1e15), "1e+15");
        assert_eq!(num(123456789012345.0), "123456789012345");
        assert_eq!(num(0.0001), "0.0001");
        assert_eq!(num(0.6051701859880914), "0.605170185988091");
        assert_eq!(num(9.999999999999999e-5), "0.0001");
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_quotes_when_needed() {
        let mut t = Table::new(vec!["name", "value"]);
        t.push(vec!["a,b".into(), num(1.0)]);
        assert_eq!(t.to_csv().unwrap(), "name,value\n\"a,b\",1\n");
    }
}
