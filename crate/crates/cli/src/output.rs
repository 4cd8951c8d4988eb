//! Number formatting and the plain-text table.

/// Rounded to six decimals, with negative zero folded to zero.
pub fn num(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn fixed(x: f64) -> String {
    format!("{:.6}", num(x))
}

#[derive(Default)]
pub struct Table {
    rows: Vec<(String, String)>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, label: &str, content: String) {
        self.rows.push((label.to_string(), content));
    }

    pub fn value(&mut self, label: &str, v: f64) {
        self.text(label, fixed(v));
    }

    pub fn value_gap(&mut self, label: &str, v: f64, gap: f64) {
        self.text(label, format!("{}  gap {}", fixed(v), fixed(gap)));
    }

    /// A chain entry: estimate direction, value, gap (if certified) and the
    /// convergence flag.
    pub fn chain(&mut self, label: &str, arrow: &str, v: f64, gap: Option<f64>, converged: bool) {
        let gap = gap.map_or_else(|| "-".to_string(), fixed);
        let arrow = if arrow.is_empty() { " " } else { arrow };
        self.text(
            label,
            format!("{arrow} {}  gap {gap:>8}  converged {}", fixed(v), if converged { "yes" } else { "no" }),
        );
    }

    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for (l, c) in &self.rows {
            out.push_str(&format!("{l:<width$}  {c}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_prints_as_zero() {
        assert_eq!(fixed(-1e-9), "0.000000");
        assert_eq!(num(-0.0).to_string(), "0");
        assert_eq!(fixed(0.1234567), "0.123457");
    }
}
