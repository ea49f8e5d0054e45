//! CSV output of experiment summaries and calibration margins.
//!
//! Reals are written in scientific notation with 6 significant digits.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::approximation::MarginRow;
use crate::error::{Error, Result};
use crate::estimators::Summary;

fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

fn sci_opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(format!("csv: {e}"))
}

/// One line of an `estimate` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub estimator: String,
    pub b: String,
    pub gamma: String,
    pub a_star: String,
    pub n: u64,
    pub seed: u64,
    pub mean: String,
    pub stderr: String,
    pub cv: String,
    pub ci_lo: String,
    pub ci_hi: String,
    pub mean_steps: String,
    pub mean_variates: String,
    pub wall_time: String,
}

impl SummaryRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: &str,
        estimator: &str,
        b: f64,
        gamma: Option<f64>,
        a_star: Option<f64>,
        seed: u64,
        s: &Summary,
    ) -> Self {
        SummaryRow {
            model: model.to_string(),
            estimator: estimator.to_string(),
            b: sci(b),
            gamma: sci_opt(gamma),
            a_star: sci_opt(a_star),
            n: s.n,
            seed,
            mean: sci(s.mean),
            stderr: sci(s.stderr),
            cv: sci(s.cv),
            ci_lo: sci(s.ci95.0),
            ci_hi: sci(s.ci95.1),
            mean_steps: sci(s.mean_steps),
            mean_variates: sci(s.mean_variates),
            wall_time: sci(s.wall_time),
        }
    }

    fn real(field: &str, name: &str) -> Result<f64> {
        field
            .parse()
            .map_err(|_| Error::Io(format!("column {name}: '{field}' is not a number")))
    }

    pub fn b(&self) -> Result<f64> {
        Self::real(&self.b, "b")
    }

    pub fn mean(&self) -> Result<f64> {
        Self::real(&self.mean, "mean")
    }

    pub fn stderr(&self) -> Result<f64> {
        Self::real(&self.stderr, "stderr")
    }

    pub fn a_star(&self) -> Result<Option<f64>> {
        if self.a_star.is_empty() {
            Ok(None)
        } else {
            Self::real(&self.a_star, "a_star").map(Some)
        }
    }
}

pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(csv_err)
}

/// One line of a `find-a-star` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginRecord {
    pub y: String,
    pub v: String,
    pub w: String,
    pub tail: String,
    pub margin: String,
}

impl From<&MarginRow> for MarginRecord {
    fn from(r: &MarginRow) -> Self {
        MarginRecord {
            y: sci(r.y),
            v: sci(r.v),
            w: sci(r.w),
            tail: sci(r.tail),
            margin: sci(r.margin),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::SamplerStats;

    #[test]
    fn summary_rows_round_trip() {
        let s = Summary {
            n: 3,
            mean: 1.234_567_89e-13,
            stderr: 2e-15,
            cv: 3.68,
            ci95: (1.2e-13, 1.27e-13),
            mean_steps: 32.5,
            mean_variates: 120.25,
            wall_time: 0.5,
            second_moment: 0.0,
            second_moment_stderr: 0.0,
            sampler: SamplerStats::default(),
        };
        let rows = vec![
            SummaryRow::new("weibull_det", "bg", 250.0, Some(0.5), Some(-10.0), 7, &s),
            SummaryRow::new("exp_diff", "siegmund", 10.0, None, None, 7, &s),
        ];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("model,estimator,b,gamma,a_star,n,seed,mean,stderr,cv,ci_lo,ci_hi,"));
        assert!(text.contains("1.23457e-13"));
        let back: Vec<SummaryRow> = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        assert_eq!(back[0].a_star().unwrap(), Some(-10.0));
        assert_eq!(back[1].a_star().unwrap(), None);
    }
}
