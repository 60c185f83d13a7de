use std::fmt::Write as _;
use std::io;
use std::path::Path;

use super::experiment::ExperimentResult;
use crate::stats::RunReport;

pub const REPLICATIONS_FILE: &str = "replications.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Nine significant digits, `%.9g` style, locale independent.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format has an exponent");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-5..9).contains(&exponent) {
        let decimals = (8 - exponent) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exponent.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), format_number)
}

/// `method,replication,estimate,cpu_seconds,seed`, successful methods only.
pub fn replications_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("method,replication,estimate,cpu_seconds,seed\n");
    for run in result.runs.iter().filter(|r| r.outcome.is_ok()) {
        for rec in &run.replications {
            writeln!(
                out,
                "{},{},{},{},{}",
                rec.method,
                rec.index,
                format_number(rec.estimate),
                format_number(rec.cpu_seconds),
                rec.seed
            )
            .unwrap();
        }
    }
    out
}

pub fn summary_csv(result: &ExperimentResult) -> String {
    let mut out =
        String::from("method,mean,st_dev,rmse,rrmse,rrmse_true,bias,rel_error,cpu_total,fom,reference_C,n_S,n_t,M_s\n");
    for r in result.successful() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            format_number(r.mean),
            opt(r.st_dev),
            format_number(r.rmse),
            opt(r.rrmse),
            opt(r.rrmse_true),
            format_number(r.bias),
            opt(r.rel_error),
            format_number(r.cpu_total),
            opt(r.fom),
            format_number(r.reference),
            result.n_s,
            result.n_t,
            r.replications()
        )
        .unwrap();
    }
    out
}

/// Writes `replications.csv` and `summary.csv` into `dir`, creating it.
pub fn emit_csv(result: &ExperimentResult, dir: &Path) -> io::Result<()> {
    if result.successful().next().is_none() {
        return Err(io::Error::other("no successful method to report"));
    }
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(REPLICATIONS_FILE), replications_csv(result))?;
    std::fs::write(dir.join(SUMMARY_FILE), summary_csv(result))?;
    Ok(())
}

/// Side-by-side statistics, one column per method.
pub fn comparison_table(result: &ExperimentResult) -> String {
    let reports: Vec<&RunReport<f64>> = result.successful().collect();
    type Row = (&'static str, fn(&RunReport<f64>) -> Option<f64>);
    let rows: [Row; 8] = [
        ("Mean", |r| Some(r.mean)),
        ("St. dev.", |r| r.st_dev),
        ("RMSE", |r| Some(r.rmse)),
        ("RRMSE", |r| r.rrmse),
        ("Bias", |r| Some(r.bias)),
        ("Rel. error", |r| r.rel_error),
        ("CPU time", |r| Some(r.cpu_total)),
        ("FOM", |r| r.fom),
    ];
    let mut out = String::new();
    writeln!(
        out,
        "reference C = {}   n_S = {}   n_t = {}   M_s = {}",
        format_number(result.reference),
        result.n_s,
        result.n_t,
        result.replications
    )
    .unwrap();
    write!(out, "{:<12}", "Stat").unwrap();
    for r in &reports {
        write!(out, "{:>16}", r.method.label()).unwrap();
    }
    out.push('\n');
    for (name, get) in rows {
        write!(out, "{name:<12}").unwrap();
        for r in &reports {
            write!(out, "{:>16}", opt(get(r))).unwrap();
        }
        out.push('\n');
    }
    for run in result.runs.iter().filter(|r| r.outcome.is_err()) {
        writeln!(out, "{}: FAILED ({})", run.method, run.outcome.as_ref().unwrap_err()).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_number(10.906_412_345_678), "10.9064123");
        assert_eq!(format_number(0.088_518_965_123), "0.0885189651");
        assert_eq!(format_number(4097.9), "4097.9");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.25), "-0.25");
        assert_eq!(format_number(1.5e-7), "1.5e-07");
        assert_eq!(format_number(123_456_789_012.0), "1.23456789e+11");
        assert_eq!(format_number(9_999_999_995.0), "1e+10");
        assert_eq!(format_number(f64::NAN), "nan");
        for x in [std::f64::consts::PI, 1e-300, 7.25e12, 0.000_123_456_789_9] {
            let back: f64 = format_number(x).parse().unwrap();
            assert!(((back - x) / x).abs() <= 5e-9, "{x}");
        }
    }
}
