//! Human-readable LP-format dump of a model.

use super::mps::format_number;
use super::spec::{ModelSpec, RowSense, VarKind};
use std::fmt::Write as _;

fn terms(model: &ModelSpec, coeffs: &[(usize, f64)]) -> String {
    if coeffs.is_empty() {
        return "0".to_string();
    }
    let mut s = String::new();
    for &(j, c) in coeffs {
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(s, "{sign} {} {} ", format_number(c.abs()), model.variables[j].name);
    }
    s.trim_end().to_string()
}

pub fn to_lp_string(model: &ModelSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ model {}", model.name);
    let _ = writeln!(out, "Minimize\n obj: {}", terms(model, &model.objective.coeffs));
    out.push_str("Subject To\n");
    for c in &model.constraints {
        let op = match c.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {}: {} {op} {}", c.name, terms(model, &c.coeffs), format_number(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        if v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0 {
            continue;
        }
        let lo = if v.lower == f64::NEG_INFINITY { "-inf".to_string() } else { format_number(v.lower) };
        let hi = if v.upper == f64::INFINITY { "+inf".to_string() } else { format_number(v.upper) };
        let _ = writeln!(out, " {lo} <= {} <= {hi}", v.name);
    }
    let bins: Vec<&str> =
        model.variables.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for chunk in bins.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
