//! Aligned text tables and CSV plot-data buffers.

use std::fmt::Write as _;

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub title: String,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, headers: &[&str]) -> Self {
        Table { title: title.into(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.headers.len());
        self.rows.push(cells);
    }

    /// Text cells left-aligned, numeric cells right-aligned.
    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let numeric = |s: &str| s.parse::<f64>().is_ok();
        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, "{}", self.title);
        }
        let line = |cells: &[String], out: &mut String| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| {
                    let pad = w - c.chars().count();
                    if numeric(c) {
                        format!("{}{c}", " ".repeat(pad))
                    } else {
                        format!("{c}{}", " ".repeat(pad))
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&self.headers, &mut out);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        let _ = writeln!(out, "{}", rule.join("  "));
        for r in &self.rows {
            line(r, &mut out);
        }
        out
    }
}

/// Builds a CSV file in memory.
pub struct Csv {
    inner: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(headers: &[&str]) -> Self {
        let mut inner = csv::Writer::from_writer(Vec::new());
        inner.write_record(headers).expect("writing to memory");
        Csv { inner }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(cells).expect("writing to memory");
    }

    pub fn finish(self) -> Vec<u8> {
        self.inner.into_inner().expect("flushing to memory")
    }
}

/// Fixed-precision formatting so outputs are stable across runs.
pub fn f(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$}");
    match s.strip_prefix('-') {
        // "-0.000" after rounding
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_owned(),
        _ => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned() {
        let mut t = Table::new("T", &["name", "value"]);
        t.row(vec!["a".into(), "1.5".into()]);
        t.row(vec!["longer".into(), "10.25".into()]);
        let s = t.render();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "T");
        assert_eq!(lines[1], "name    value");
        assert_eq!(lines[3], "a         1.5");
        assert_eq!(lines[4], "longer  10.25");
    }

    #[test]
    fn csv_bytes() {
        let mut c = Csv::new(&["x", "y"]);
        c.row(["1", "2"]);
        assert_eq!(c.finish(), b"x,y\n1,2\n");
    }

    #[test]
    fn no_negative_zero() {
        assert_eq!(f(-0.0, 2), "0.00");
        assert_eq!(f(-0.0001, 2), "0.00");
        assert_eq!(f(-0.5, 1), "-0.5");
        assert_eq!(f(1.005, 1), "1.0");
    }
}
