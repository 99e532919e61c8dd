//! CSV emission and parsing.
//!
//! Reals are written with 17 significant digits in positional notation with
//! a dot separator, which round-trips every finite `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::domain::{Action, Scenario};
use crate::error::{Error, Result};
use crate::simulator::TrialResult;
use crate::sweep::{DesignSummary, MatrixBundle, MatrixPanel, RelativeRow};

pub const REPLICATE_HEADER: &str = "r0,r1,s0,s1,m,c,replicate,u_bar";
pub const AGGREGATE_HEADER: &str = "r0,r1,s0,s1,m,c,u_bar_bar,std_err";
pub const LONG_HEADER: &str = "r0,r1,s0,s1,m,rel_u";
pub const PATIENT_HEADER: &str = "patient,a1,y1,a2,y2,utility";
pub const ALLOCATION_HEADER: &str = "analysis,stage,history,action,prob,q_value";

/// 17 significant digits, positional notation. Non-finite values become
/// `NaN`, `inf` or `-inf`.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let mut out = String::from(sign);
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "NaN" => Some(f64::NAN),
        other => other.parse().ok(),
    }
}

fn scenario_cells(s: &Scenario) -> String {
    format!("{},{},{},{}", fmt_real(s.r0), fmt_real(s.r1), fmt_real(s.s0), fmt_real(s.s1))
}

pub fn replicate_csv(rows: &[DesignSummary]) -> String {
    let mut out = String::from(REPLICATE_HEADER);
    out.push('\n');
    for row in rows {
        for (i, u) in row.replicate_u.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{},{}", scenario_cells(&row.scenario), row.m, fmt_real(row.c), i, fmt_real(*u));
        }
    }
    out
}

pub fn aggregate_csv(rows: &[DesignSummary]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            scenario_cells(&row.scenario),
            row.m,
            fmt_real(row.c),
            fmt_real(row.u_bar_bar),
            fmt_real(row.std_err)
        );
    }
    out
}

fn header_check(path: &Path, header: Option<&str>, expected: &str) -> Result<()> {
    match header {
        Some(h) if h.trim() == expected => Ok(()),
        other => Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("expected header `{expected}`, found `{}`", other.unwrap_or("")),
        }),
    }
}

fn fields<'a>(path: &Path, line_no: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = line.split(',').map(str::trim).collect();
    if f.len() != n {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {line_no}: expected {n} fields, found {}", f.len()),
        });
    }
    Ok(f)
}

fn real_at(path: &Path, line_no: usize, field: &str) -> Result<f64> {
    parse_real(field).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {line_no}: `{field}` is not a number"),
    })
}

/// Read an aggregate file back into summaries (without replicate values).
pub fn parse_aggregate(path: &Path, text: &str) -> Result<Vec<DesignSummary>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    header_check(path, lines.next().map(|(_, l)| l), AGGREGATE_HEADER)?;
    lines
        .map(|(i, line)| {
            let f = fields(path, i + 1, line, 8)?;
            let r = |k: usize| real_at(path, i + 1, f[k]);
            let m: u8 = f[4].parse().ok().filter(|m| *m <= 1).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: m must be 0 or 1", i + 1),
            })?;
            Ok(DesignSummary {
                scenario: Scenario::new(r(0)?, r(1)?, r(2)?, r(3)?)?,
                m,
                c: r(5)?,
                replicate_u: Vec::new(),
                u_bar_bar: r(6)?,
                std_err: r(7)?,
            })
        })
        .collect()
}

/// Read a scenario list with header `r0,r1,s0,s1`.
pub fn parse_scenarios(path: &Path, text: &str) -> Result<Vec<Scenario>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    header_check(path, lines.next().map(|(_, l)| l), "r0,r1,s0,s1")?;
    lines
        .map(|(i, line)| {
            let f = fields(path, i + 1, line, 4)?;
            let r = |k: usize| real_at(path, i + 1, f[k]);
            Scenario::new(r(0)?, r(1)?, r(2)?, r(3)?)
        })
        .collect()
}

pub fn long_csv(relative: &[RelativeRow], m: u8) -> String {
    let mut out = String::from(LONG_HEADER);
    out.push('\n');
    for row in relative.iter().filter(|r| r.m == m && r.c == 1.0) {
        let _ = writeln!(
            out,
            "{},{},{}",
            scenario_cells(&row.scenario),
            row.m,
            fmt_real(row.rel.unwrap_or(f64::NAN))
        );
    }
    out
}

pub fn panel_file_name(m: u8, panel: &MatrixPanel) -> String {
    format!("rel_u_m{}_s0_{}_s1_{}.csv", m, panel.s0, panel.s1)
}

/// One panel: header `r1\r0` then the `r0` values; each following row starts
/// with its `r1` value.
pub fn panel_csv(panel: &MatrixPanel) -> String {
    let mut out = String::from("r1\\r0");
    for r0 in &panel.r0_values {
        let _ = write!(out, ",{r0}");
    }
    out.push('\n');
    for (r1, row) in panel.r1_values.iter().zip(&panel.values) {
        out.push_str(&r1.to_string());
        for v in row {
            out.push(',');
            out.push_str(&fmt_real(*v));
        }
        out.push('\n');
    }
    out
}

pub fn bundle_files(bundle: &MatrixBundle) -> Vec<(String, String)> {
    bundle
        .panels
        .iter()
        .map(|p| (panel_file_name(bundle.m, p), panel_csv(p)))
        .collect()
}

pub fn patients_csv(result: &TrialResult) -> String {
    let mut out = String::from(PATIENT_HEADER);
    out.push('\n');
    for (i, p) in result.patient_records.iter().flatten().enumerate() {
        let (a2, y2) = match p.stage2 {
            Some((a, y)) => (a.bit().to_string(), y.bit().to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            i,
            p.stage1_action.bit(),
            p.stage1_outcome.bit(),
            a2,
            y2,
            fmt_real(p.realized_utility)
        );
    }
    out
}

pub fn allocations_csv(result: &TrialResult) -> String {
    let mut out = String::from(ALLOCATION_HEADER);
    out.push('\n');
    for snap in &result.per_interim_alloc {
        let policy = snap.policy.as_ref();
        for a in Action::ALL {
            let q = policy.map(|p| fmt_real(p.stage1_q[&a].value)).unwrap_or_default();
            let _ = writeln!(out, "{},1,{},{},{},{}", snap.analysis, snap.stage1.history, a.bit(), fmt_real(snap.stage1.prob(a)), q);
        }
        for alloc in &snap.stage2 {
            for a in Action::ALL {
                let q = policy
                    .and_then(|p| p.stage2_values(alloc.history))
                    .map(|v| fmt_real(v[a.index()]))
                    .unwrap_or_default();
                let _ = writeln!(out, "{},2,{},{},{},{}", snap.analysis, alloc.history, a.bit(), fmt_real(alloc.prob(a)), q);
            }
        }
    }
    out
}
