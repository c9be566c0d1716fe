use std::fmt;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
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

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => f.write_str(&format_sig(*v, 12)),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

/// Formats `v` with `digits` significant digits, positional for moderate
/// magnitudes and scientific otherwise, with trailing zeros removed.
pub fn format_sig(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let s = if (-5..15).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s
        }
    } else {
        let s = format!("{:.*e}", digits - 1, v);
        let (mantissa, e) = s.split_once('e').expect("scientific format");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{e}")
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// A header plus rows, rendered as comma-separated text with LF endings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Numeric column by header name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[i] {
                    Cell::Num(v) => *v,
                    Cell::Int(v) => *v as f64,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(std::f64::consts::PI, 12), "3.14159265359");
        assert_eq!(format_sig(-0.000123456789012345, 12), "-0.000123456789012");
        assert_eq!(format_sig(78.539_816_339_744_83, 12), "78.5398163397");
        assert_eq!(format_sig(3.98107170553497e-21, 12), "3.98107170553e-21");
        assert_eq!(format_sig(1e20, 12), "1e20");
        assert_eq!(format_sig(-1e-300 * 1e-30, 12), "0");
        assert_eq!(format_sig(0.1 + 0.2, 12), "0.3");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.5.into(), "x,y".into()]);
        t.push(vec![2usize.into(), 0.25.into()]);
        assert_eq!(t.to_csv(), "a,b\n1.5,\"x,y\"\n2,0.25\n");
        assert_eq!(t.column("a").unwrap(), vec![1.5, 2.0]);
    }
}
