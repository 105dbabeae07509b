//! CPLEX LP text output.
//!
//! ```text
//! \ faircover model: <vars> columns, <rows> rows
//! Maximize | Minimize
//!  obj: <terms>
//! Subject To
//!  <row name>: <terms> <= | = | >= <rhs>
//! Bounds
//!  <lo> <= <var> <= <hi>
//! Generals
//!  <integer vars>
//! End
//! ```
//!
//! Terms are written `+ c name` / `- c name`. Names are sanitized to
//! `[A-Za-z0-9_.]` and suffixed with the column or row index so that they
//! stay unique.

use std::fmt::Write;

use super::{Direction, LpModel};

fn sanitize(name: &str, idx: usize, prefix: char) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    if s.is_empty() || !s.starts_with(|c: char| c.is_ascii_alphabetic()) {
        s.insert(0, prefix);
    }
    format!("{s}_{idx}")
}

fn terms(out: &mut String, names: &[String], terms: impl Iterator<Item = (usize, f64)>) {
    let mut any = false;
    for (v, c) in terms {
        if c == 0.0 {
            continue;
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", c.abs(), names[v]);
        any = true;
    }
    if !any {
        out.push_str(" 0");
    }
}

fn bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

pub(super) fn write(lp: &LpModel, integer: Option<&[bool]>) -> String {
    let names: Vec<String> = lp.var_names.iter().enumerate().map(|(i, n)| sanitize(n, i, 'x')).collect();
    let mut out = String::new();
    let _ = writeln!(out, "\\ faircover model: {} columns, {} rows", lp.var_count(), lp.row_count());
    out.push_str(match lp.direction {
        Direction::Maximize => "Maximize\n",
        Direction::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    terms(&mut out, &names, lp.objective.iter().copied().enumerate());
    out.push_str("\nSubject To\n");
    for (r, row) in lp.rows.iter().enumerate() {
        let _ = write!(out, " {}:", sanitize(&row.name, r, 'r'));
        terms(&mut out, &names, row.terms.iter().map(|&(v, c)| (v.0, c)));
        let _ = writeln!(out, " {} {}", row.sense, row.rhs);
    }
    out.push_str("Bounds\n");
    for (i, name) in names.iter().enumerate() {
        let (lo, hi) = (lp.lower[i], lp.upper[i]);
        if lo == hi {
            let _ = writeln!(out, " {name} = {}", bound(lo));
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", bound(lo), bound(hi));
        }
    }
    if let Some(flags) = integer {
        if flags.iter().any(|&f| f) {
            out.push_str("Generals\n");
            for (name, _) in names.iter().zip(flags).filter(|(_, &f)| f) {
                let _ = writeln!(out, " {name}");
            }
        }
    }
    out.push_str("End\n");
    out
}
