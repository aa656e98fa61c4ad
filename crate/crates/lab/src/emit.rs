//! JSON and CSV writers.

use std::io::Write;

use crate::config::{Command, Format};
use crate::run::ReportBundle;
use crate::LabError;

/// Header of the yosida CSV table.
pub const YOSIDA_HEADER: [&str; 5] = ["lambda", "approx_err", "t", "semigroup_err", "expm_norm_B"];
/// Header of the per-assertion CSV used by the other commands.
pub const REPORT_HEADER: [&str; 9] = ["case", "seed", "n", "p", "report", "kind", "name", "pass", "value"];

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn emit<W: Write>(bundle: &ReportBundle, format: Format, out: W) -> Result<(), LabError> {
    match format {
        Format::Json => emit_json(bundle, out),
        Format::Csv => emit_csv(bundle, out),
    }
}

pub fn emit_json<W: Write>(bundle: &ReportBundle, mut out: W) -> Result<(), LabError> {
    serde_json::to_writer_pretty(&mut out, bundle)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn emit_csv<W: Write>(bundle: &ReportBundle, out: W) -> Result<(), LabError> {
    let mut w = csv::Writer::from_writer(out);
    if bundle.config.command == Some(Command::Yosida) {
        w.write_record(YOSIDA_HEADER)?;
        for case in &bundle.cases {
            for r in case.table.iter().flat_map(|t| &t.rows) {
                w.write_record([
                    fmt_f64(r.lambda.0),
                    fmt_f64(r.approx_err.0),
                    fmt_f64(r.t.0),
                    fmt_f64(r.semigroup_err.0),
                    fmt_f64(r.expm_norm_b.0),
                ])?;
            }
        }
    } else {
        w.write_record(REPORT_HEADER)?;
        for case in &bundle.cases {
            let head = [
                case.index.to_string(),
                case.seed.to_string(),
                case.n.to_string(),
                fmt_f64(case.p.0),
            ];
            if let Some(e) = &case.error {
                w.write_record(
                    head.iter()
                        .cloned()
                        .chain(["", "error", e.as_str(), "false", ""].map(String::from)),
                )?;
            }
            for rep in &case.reports {
                for a in &rep.asserted {
                    w.write_record(head.iter().cloned().chain([
                        rep.name.clone(),
                        "assert".to_string(),
                        a.prop.clone(),
                        a.pass.to_string(),
                        fmt_f64(a.defect.0),
                    ]))?;
                }
                for m in &rep.measured {
                    w.write_record(head.iter().cloned().chain([
                        rep.name.clone(),
                        "measure".to_string(),
                        m.quantity.clone(),
                        String::new(),
                        fmt_f64(m.value.0),
                    ]))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
