//! JSON and CSV emission of verification reports.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;

use super::verify::{ConvergenceReport, MomentReport, VerificationReport};
use crate::error::{Error, Result};

/// Pretty JSON with every float written at 17 significant digits.
#[derive(Debug, Default)]
pub struct JsonFloatFormatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.inner.$name(writer $(, $arg)*)
        })*
    };
}

impl Formatter for JsonFloatFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fmt_float(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

/// `{:.16e}`, which round-trips every finite double.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    write_json(&mut buf, value)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn write_json<W: Write, T: Serialize>(out: W, value: &T) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(out, JsonFloatFormatter::default());
    value.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))
}

const CSV_HEADER: [&str; 19] = [
    "identity",
    "mode",
    "lhs_mean",
    "lhs_std_error",
    "rhs_mean",
    "rhs_std_error",
    "n_samples",
    "difference",
    "combined_se",
    "tol_mult",
    "allowance",
    "pass",
    "alternate_difference",
    "alternate_combined_se",
    "seed",
    "dim_w",
    "dim_c",
    "steps",
    "horizon",
];

/// One row per report.
pub fn write_csv<W: Write>(out: W, reports: &[VerificationReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        let mode = serde_json::to_value(r.mode).map_err(|e| Error::Io(e.to_string()))?;
        w.write_record([
            r.identity.clone(),
            mode.as_str().unwrap_or_default().to_string(),
            fmt_float(r.lhs.mean),
            fmt_float(r.lhs.std_error),
            fmt_float(r.rhs.mean),
            fmt_float(r.rhs.std_error),
            r.lhs.n_samples.to_string(),
            fmt_float(r.difference),
            fmt_float(r.combined_se),
            fmt_float(r.tol_mult),
            fmt_float(r.allowance),
            r.pass.to_string(),
            fmt_float(r.alternate.difference),
            fmt_float(r.alternate.combined_se),
            r.config.seed.to_string(),
            r.config.dim_w.to_string(),
            r.config.dim_c.to_string(),
            r.config.steps.to_string(),
            fmt_float(r.config.horizon),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// One row per target and exponent.
pub fn write_moment_csv<W: Write>(out: W, report: &MomentReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["target", "p", "mean_n", "se_n", "mean_2n", "se_2n", "ratio", "pass"])
        .map_err(io)?;
    for r in &report.rows {
        w.write_record([
            r.target.clone(),
            r.p.to_string(),
            fmt_float(r.estimate_n.mean),
            fmt_float(r.estimate_n.std_error),
            fmt_float(r.estimate_2n.mean),
            fmt_float(r.estimate_2n.std_error),
            fmt_float(r.ratio),
            r.pass.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// One row per identity and grid, coarsest grid first.
pub fn write_convergence_csv<W: Write>(out: W, reports: &[ConvergenceReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["identity", "steps", "dt", "gap", "gap_std_error", "monotone", "order", "pass"])
        .map_err(io)?;
    for r in reports {
        for (steps, gap) in r.steps.iter().zip(&r.gaps) {
            w.write_record([
                r.identity.clone(),
                steps.to_string(),
                fmt_float(r.config.horizon / *steps as f64),
                fmt_float(gap.mean),
                fmt_float(gap.std_error),
                r.monotone.to_string(),
                fmt_float(r.order),
                r.pass.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
