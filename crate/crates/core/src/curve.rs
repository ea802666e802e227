//! Learning curves: return against cumulative environment steps.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub iteration: usize,
    /// Cumulative environment steps after this iteration's rollouts.
    pub steps: u64,
    pub ret: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningCurve {
    rows: Vec<CurveRow>,
}

pub const CSV_HEADER: &str = "iteration,steps,return,seconds";

impl LearningCurve {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row; steps must strictly increase and iterations must follow on.
    pub fn push(&mut self, row: CurveRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.steps <= last.steps || row.iteration != last.iteration + 1 {
                return Err(Error::Config(format!(
                    "curve row (iteration {}, steps {}) does not follow (iteration {}, steps {})",
                    row.iteration, row.steps, last.iteration, last.steps
                )));
            }
        }
        if !row.ret.is_finite() || !row.seconds.is_finite() {
            return Err(Error::NonFinite("curve row"));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[CurveRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_steps(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.steps)
    }

    pub fn final_return(&self) -> Option<f64> {
        self.rows.last().map(|r| r.ret)
    }

    pub fn max_return(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.ret).reduce(f64::max)
    }

    /// Cumulative steps at the first row whose return is at least `threshold`.
    pub fn steps_to_reach(&self, threshold: f64) -> Option<u64> {
        self.rows.iter().find(|r| r.ret >= threshold).map(|r| r.steps)
    }

    /// Return at `step` by linear interpolation between rows, held flat
    /// before the first and after the last row.
    pub fn return_at(&self, step: f64) -> Option<f64> {
        let first = self.rows.first()?;
        let last = self.rows.last()?;
        if step <= first.steps as f64 {
            return Some(first.ret);
        }
        if step >= last.steps as f64 {
            return Some(last.ret);
        }
        let k = self.rows.partition_point(|r| (r.steps as f64) < step);
        let (a, b) = (&self.rows[k - 1], &self.rows[k]);
        let frac = (step - a.steps as f64) / (b.steps - a.steps) as f64;
        Some(a.ret + frac * (b.ret - a.ret))
    }

    /// Trapezoidal area under return-vs-steps over `[0, horizon]`, using
    /// [`Self::return_at`] so the curve is held flat outside its rows.
    pub fn area_under(&self, horizon: u64) -> Option<f64> {
        self.rows.first()?;
        let mut knots = vec![0.0];
        knots.extend(self.rows.iter().map(|r| r.steps as f64).filter(|&s| s > 0.0 && s < horizon as f64));
        knots.push(horizon as f64);
        let mut area = 0.0;
        for w in knots.windows(2) {
            let (ya, yb) = (self.return_at(w[0])?, self.return_at(w[1])?);
            area += 0.5 * (ya + yb) * (w[1] - w[0]);
        }
        Some(area)
    }

    /// CSV with [`CSV_HEADER`]; reals use Rust's shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.iteration, r.steps, r.ret, r.seconds).expect("string write");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(CSV_HEADER) {
            return Err(Error::Format(format!("curve CSV must start with '{CSV_HEADER}'")));
        }
        let mut curve = Self::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split(',').collect();
            let bad = || Error::Format(format!("curve CSV line {}: '{line}'", n + 2));
            if fields.len() != 4 {
                return Err(bad());
            }
            curve.push(CurveRow {
                iteration: fields[0].parse().map_err(|_| bad())?,
                steps: fields[1].parse().map_err(|_| bad())?,
                ret: fields[2].parse().map_err(|_| bad())?,
                seconds: fields[3].parse().map_err(|_| bad())?,
            })?;
        }
        Ok(curve)
    }
}
