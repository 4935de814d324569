use std::io::{BufWriter, Write};

use crate::error::Result;
use crate::real::Real;

pub const TRACE_HEADER: &str = "step,t,E,R,Rtilde,xi,eta,zeta0,gamma,mass,case";
pub const MSAV_COLUMNS: &str = "R1,R2,xi1,xi2,eta1,eta2";

/// Per-component values of the two-variable scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsavTrace<T> {
    pub r: [T; 2],
    pub xi: [T; 2],
    pub eta: [T; 2],
}

/// One accepted step.
///
/// `energy` is the shifted energy the auxiliary variable is compared
/// against. For the plain SAV variants `r` is the square-root variable
/// and `xi` is `r/√(E_nl + C₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTrace<T> {
    pub step: usize,
    pub t: T,
    pub energy: T,
    pub r: T,
    pub r_tilde: T,
    pub xi: T,
    pub eta: T,
    pub zeta0: T,
    pub gamma: T,
    pub mass: T,
    /// 0 when no relaxation ran; 1–4 for the energy relaxation cases;
    /// 5–7 for the relaxed SAV rule (anchored, root, skipped).
    pub case: u8,
    pub msav: Option<MsavTrace<T>>,
    /// Seconds spent in the step. Not written to CSV, which must be
    /// reproducible byte for byte.
    pub wall_time: f64,
}

impl<T: Real> StepTrace<T> {
    pub fn is_finite(&self) -> bool {
        let core = [
            self.t,
            self.energy,
            self.r,
            self.r_tilde,
            self.xi,
            self.eta,
            self.zeta0,
            self.gamma,
            self.mass,
        ];
        core.iter().all(|v| v.is_finite())
            && self
                .msav
                .is_none_or(|m| m.r.iter().chain(&m.xi).chain(&m.eta).all(|v| v.is_finite()))
    }

    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.step,
            self.t,
            self.energy,
            self.r,
            self.r_tilde,
            self.xi,
            self.eta,
            self.zeta0,
            self.gamma,
            self.mass,
            self.case
        );
        if let Some(m) = &self.msav {
            for v in m.r.iter().chain(&m.xi).chain(&m.eta) {
                row.push_str(&format!(",{v:e}"));
            }
        }
        row
    }
}

/// Buffered CSV sink that flushes every `flush_every` rows.
pub struct TraceWriter<W: Write> {
    out: BufWriter<W>,
    flush_every: usize,
    pending: usize,
    msav: bool,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(inner: W, msav: bool, flush_every: usize) -> Result<Self> {
        let mut out = BufWriter::new(inner);
        if msav {
            writeln!(out, "{TRACE_HEADER},{MSAV_COLUMNS}")?;
        } else {
            writeln!(out, "{TRACE_HEADER}")?;
        }
        Ok(Self {
            out,
            flush_every: flush_every.max(1),
            pending: 0,
            msav,
        })
    }

    pub fn write<T: Real>(&mut self, row: &StepTrace<T>) -> Result<()> {
        debug_assert_eq!(row.msav.is_some(), self.msav, "trace layout mismatch");
        writeln!(self.out, "{}", row.csv_row())?;
        self.pending += 1;
        if self.pending >= self.flush_every {
            self.flush()?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        self.pending = 0;
        Ok(())
    }
}

impl<W: Write> Drop for TraceWriter<W> {
    fn drop(&mut self) {
        let _ = self.out.flush();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: usize) -> StepTrace<f64> {
        StepTrace {
            step,
            t: 0.1 * step as f64,
            energy: 2.0,
            r: 1.5,
            r_tilde: 1.4,
            xi: 0.9,
            eta: 0.999,
            zeta0: 0.0,
            gamma: 1.0,
            mass: -0.25,
            case: 2,
            msav: None,
            wall_time: 0.0,
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        {
            let mut w = TraceWriter::new(&mut buf, false, 100).unwrap();
            w.write(&row(1)).unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER);
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(fields[0], "1");
        assert_eq!(fields[10], "2");
        assert_eq!(fields[9].parse::<f64>().unwrap(), -0.25);
    }

    #[test]
    fn msav_columns_appended() {
        let mut r = row(3);
        r.msav = Some(MsavTrace {
            r: [1.0, 2.0],
            xi: [1.0, 1.0],
            eta: [1.0, 1.0],
        });
        assert_eq!(r.csv_row().split(',').count(), 17);
        assert!(r.is_finite());
        r.gamma = f64::NAN;
        assert!(!r.is_finite());
    }
}
