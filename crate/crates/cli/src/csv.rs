//! Deterministic CSV output: 15 significant digits, `.` decimals, LF endings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// `%.15g`-style rendering.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..15).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Accumulates rows in memory and writes the file in one go.
pub struct Table {
    text: String,
    width: usize,
}

pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            text: format!("{}\n", header.join(",")),
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: impl IntoIterator<Item = Cell>) {
        let mut n = 0;
        for (i, c) in cells.into_iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Num(x) => self.text.push_str(&fmt_num(x)),
                Cell::Text(s) => self.text.push_str(&s),
                Cell::Empty => {}
            }
            n += 1;
        }
        debug_assert_eq!(n, self.width, "row width matches header");
        self.text.push('\n');
    }

    pub fn nums(&mut self, values: &[f64]) {
        self.row(values.iter().map(|&x| Cell::Num(x)));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, &self.text).with_context(|| format!("writing {}", path.display()))
    }

    #[cfg(test)]
    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Name of a snapshot file for time `tau`.
pub fn snapshot_name(tau: f64) -> String {
    let mut s = String::from("snapshot_");
    let _ = write!(s, "{}", fmt_num(tau));
    s.push_str(".csv");
    s
}
