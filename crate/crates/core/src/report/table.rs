use super::{CrossEvaluation, ModelStatsRow};
use std::fmt::Write;

/// Minutes without a trailing `.0`.
fn minutes(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(minutes).unwrap_or_else(|| "-".into())
}

/// `value (reduction)`, the reduction being relative to the recorded operations.
pub fn format_with_reduction(value: f64, raw: f64) -> String {
    let red = ((raw - value) * 10.0).round() / 10.0;
    format!("{} ({})", minutes(value), minutes(if red == 0.0 { 0.0 } else { red }))
}

fn with_reduction(value: Option<f64>, raw: Option<f64>) -> String {
    match (value, raw) {
        (Some(v), Some(r)) => format_with_reduction(v, r),
        (Some(v), None) => minutes(v),
        _ => "-".into(),
    }
}

fn render(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&width)
            .enumerate()
            .map(|(k, (c, w))| if k == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    let total: usize = width.iter().sum::<usize>() + 2 * (width.len() - 1);
    let _ = writeln!(out, "{}", "-".repeat(total));
    for (k, r) in rows.iter().enumerate() {
        if k + 1 == rows.len() {
            let _ = writeln!(out, "{}", "-".repeat(total));
        }
        line(&mut out, r);
    }
    out
}

/// The cross-evaluation as a text table with a totals line. Periods whose
/// solves did not both prove optimality are marked and listed below.
pub fn render_cross_table(ev: &CrossEvaluation) -> String {
    let headers = ["Period", "# of orders", "UM_Raw", "UM_UM", "UM_OM", "OM_UM", "OM_OM", "V_UM", "V_OM"];
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for r in &ev.rows {
        let mark = if r.is_optimal() { "" } else { " *" };
        rows.push(vec![
            format!("{}{mark}", r.label),
            r.orders.to_string(),
            cell(r.um_raw),
            with_reduction(r.um_um, r.um_raw),
            with_reduction(r.um_om, r.um_raw),
            cell(r.om_um),
            cell(r.om_om),
            r.v_um.map_or("-".into(), |v| v.to_string()),
            r.v_om.map_or("-".into(), |v| v.to_string()),
        ]);
        if !r.is_optimal() {
            let describe = |name: &str, status, gap: Option<f64>| match gap {
                Some(g) => format!("{name} {status} (gap {:.2}%)", 100.0 * g),
                None => format!("{name} {status}"),
            };
            notes.push(format!(
                "* {}: {}, {}",
                r.label,
                describe("OM", r.om_status, r.om_gap),
                describe("UM", r.um_status, r.um_gap)
            ));
        }
    }
    let t = &ev.totals;
    rows.push(vec![
        "Total".into(),
        t.orders.to_string(),
        minutes(t.um_raw),
        format_with_reduction(t.um_um, t.um_raw),
        format_with_reduction(t.um_om, t.um_raw),
        minutes(t.om_um),
        minutes(t.om_om),
        t.v_um.to_string(),
        t.v_om.to_string(),
    ]);
    let mut out = render(&headers, &rows);
    for n in notes {
        let _ = writeln!(out, "{n}");
    }
    out
}

/// Model sizes and solve times, one line per period.
pub fn render_stats_table(rows: &[(String, usize, ModelStatsRow, ModelStatsRow)]) -> String {
    let headers = [
        "Period",
        "# of orders",
        "OM Vars",
        "OM IntVars",
        "OM Constrs",
        "OM CPU (s)",
        "UM Vars",
        "UM IntVars",
        "UM Constrs",
        "UM CPU (s)",
    ];
    let mut body: Vec<Vec<String>> = rows
        .iter()
        .map(|(label, orders, om, um)| {
            vec![
                label.clone(),
                orders.to_string(),
                om.vars.to_string(),
                om.int_vars.to_string(),
                om.constrs.to_string(),
                format!("{:.2}", om.cpu),
                um.vars.to_string(),
                um.int_vars.to_string(),
                um.constrs.to_string(),
                format!("{:.2}", um.cpu),
            ]
        })
        .collect();
    let orders: usize = rows.iter().map(|r| r.1).sum();
    let cpu = |f: fn(&(String, usize, ModelStatsRow, ModelStatsRow)) -> f64| {
        format!("{:.2}", rows.iter().map(f).sum::<f64>())
    };
    body.push(vec![
        "Total".into(),
        orders.to_string(),
        String::new(),
        String::new(),
        String::new(),
        cpu(|r| r.2.cpu),
        String::new(),
        String::new(),
        String::new(),
        cpu(|r| r.3.cpu),
    ]);
    render(&headers, &body)
}
