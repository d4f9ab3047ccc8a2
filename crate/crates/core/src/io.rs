//! Plain-text export helpers: CSV with `,` separators, LF line endings and
//! 17 significant digits, so every double round-trips exactly.

use std::fmt::Write as _;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// In-memory CSV document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut csv = Self {
            buf: String::new(),
            columns: header.len(),
        };
        let names: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
        csv.buf.push_str(&names.join(","));
        csv.buf.push('\n');
        csv
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn row<I, C>(&mut self, cells: I)
    where
        I: IntoIterator<Item = C>,
        C: Into<Cell>,
    {
        for (i, cell) in cells.into_iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match cell.into() {
                Cell::Num(v) => self.buf.push_str(&fmt_f64(v)),
                Cell::Int(v) => {
                    let _ = write!(self.buf, "{v}");
                }
                Cell::Bool(v) => self.buf.push_str(if v { "true" } else { "false" }),
                Cell::Text(s) => self.buf.push_str(&s),
            }
        }
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, std::f64::consts::TAU, 1e17] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn layout() {
        let mut csv = Csv::new(&["t", "node", "ok"]);
        csv.row([Cell::Num(0.5), Cell::Int(2), Cell::Bool(true)]);
        assert_eq!(csv.as_str(), "t,node,ok\n5.0000000000000000e-1,2,true\n");
        assert!(!csv.as_str().contains('\r'));
    }
}
