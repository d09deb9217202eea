//! Per-step record of an evolution run.

use std::io::{self, Write};

/// One trace line. Rows with `step == 0` follow a remeshing operation
/// (refinement, equiangulation) or record the seed; all other rows are
/// accepted descent steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub area: f64,
    pub max_vol_resid: f64,
    pub step: f64,
    pub nverts: usize,
}

impl TraceRow {
    pub fn is_descent(&self) -> bool {
        self.step > 0.0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvolveTrace {
    pub rows: Vec<TraceRow>,
}

pub const TRACE_HEADER: &str = "iter,area,maxvolresid,step,nverts";

impl EvolveTrace {
    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Descent rows whose energy exceeds that of the row before them.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        self.rows
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].is_descent() && w[1].area > w[0].area)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Largest volume residual over all rows.
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.max_vol_resid).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.rows {
            writeln!(out, "{},{:.17e},{:e},{:e},{}", r.iter, r.area, r.max_vol_resid, r.step, r.nverts)?;
        }
        Ok(())
    }

    pub fn parse_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(TRACE_HEADER) {
            return Err("missing trace header".into());
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || format!("line {}: malformed trace row", n + 2);
            if f.len() != 5 {
                return Err(bad());
            }
            rows.push(TraceRow {
                iter: f[0].parse().map_err(|_| bad())?,
                area: f[1].parse().map_err(|_| bad())?,
                max_vol_resid: f[2].parse().map_err(|_| bad())?,
                step: f[3].parse().map_err(|_| bad())?,
                nverts: f[4].parse().map_err(|_| bad())?,
            });
        }
        Ok(EvolveTrace { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_violations() {
        let mut t = EvolveTrace::default();
        t.push(TraceRow { iter: 0, area: 3.0, max_vol_resid: 0.0, step: 0.0, nverts: 10 });
        t.push(TraceRow { iter: 1, area: 2.5, max_vol_resid: 1e-12, step: 0.1, nverts: 10 });
        t.push(TraceRow { iter: 1, area: 2.6, max_vol_resid: 1e-12, step: 0.0, nverts: 40 });
        t.push(TraceRow { iter: 2, area: 2.7, max_vol_resid: 1e-12, step: 0.1, nverts: 40 });
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,area,maxvolresid,step,nverts\n0,"));
        let back = EvolveTrace::parse_csv(&text).unwrap();
        assert_eq!(back.rows.len(), 4);
        assert_eq!(back.rows[1].area, 2.5);
        assert_eq!(t.monotonicity_violations(), vec![3]);
    }
}
