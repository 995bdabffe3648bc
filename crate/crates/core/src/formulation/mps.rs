//! Fixed-format MPS (8-character name fields).
//!
//! Columns and rows are written under positional names (`C0000001`,
//! `R0000001`) so every name fits its field; the model's own names are kept
//! in `* COL` / `* ROW` comment lines, which other readers ignore and
//! [`read_mps`] uses to restore them.

use super::spec::{ModelSpec, RowSense, VarKind};
use super::FormulationError;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

const OBJ_ROW: &str = "COST";

fn col_code(j: usize) -> String {
    format!("C{:07}", j + 1)
}

fn row_code(r: usize) -> String {
    format!("R{:07}", r + 1)
}

/// Shortest representation of `v` that fits a 12-character numeric field.
pub fn format_number(v: f64) -> String {
    let plain = if v == v.trunc() && v.abs() < 1e11 { format!("{}", v as i64) } else { format!("{v}") };
    if plain.len() <= 12 {
        return plain;
    }
    (0..=6).rev().map(|p| format!("{v:.p$e}")).find(|s| s.len() <= 12).unwrap_or_else(|| format!("{v:.0e}"))
}

fn field_line(out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str, pair: Option<(&str, &str)>) {
    let mut line = format!(" {f1:<2} {f2:<8}  {f3:<8}  {f4:<12}");
    if let Some((f5, f6)) = pair {
        let _ = write!(line, "   {f5:<8}  {f6:<12}");
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

pub fn to_mps_string(model: &ModelSpec) -> String {
    let mut out = String::new();
    let name: String = model.name.chars().filter(|c| !c.is_whitespace()).take(8).collect();
    let _ = writeln!(out, "NAME          {name}");
    for (j, v) in model.variables.iter().enumerate() {
        let _ = writeln!(out, "* COL {} {}", col_code(j), v.name);
    }
    for (r, c) in model.constraints.iter().enumerate() {
        let _ = writeln!(out, "* ROW {} {}", row_code(r), c.name);
    }
    out.push_str("OBJSENSE\n    MIN\n");
    out.push_str("ROWS\n");
    field_line(&mut out, "N", OBJ_ROW, "", "", None);
    for (r, c) in model.constraints.iter().enumerate() {
        let s = match c.sense {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        field_line(&mut out, s, &row_code(r), "", "", None);
    }

    // Column-major entries.
    let mut by_col: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.num_vars()];
    for &(j, c) in &model.objective.coeffs {
        by_col[j].push((OBJ_ROW.to_string(), c));
    }
    for (r, c) in model.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            by_col[j].push((row_code(r), a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0;
    for (j, v) in model.variables.iter().enumerate() {
        let is_int = v.kind == VarKind::Binary;
        if is_int != in_int {
            let tag = if is_int { "'INTORG'" } else { "'INTEND'" };
            field_line(&mut out, "", &format!("MARKER{marker:02}"), "'MARKER'", "", Some((tag, "")));
            marker += 1;
            in_int = is_int;
        }
        let code = col_code(j);
        let entries = &by_col[j];
        if entries.is_empty() {
            field_line(&mut out, "", &code, OBJ_ROW, "0", None);
        }
        for chunk in entries.chunks(2) {
            let a = (chunk[0].0.as_str(), format_number(chunk[0].1));
            match chunk.get(1) {
                Some((row, val)) => field_line(&mut out, "", &code, a.0, &a.1, Some((row, &format_number(*val)))),
                None => field_line(&mut out, "", &code, a.0, &a.1, None),
            }
        }
    }
    if in_int {
        field_line(&mut out, "", &format!("MARKER{marker:02}"), "'MARKER'", "", Some(("'INTEND'", "")));
    }

    out.push_str("RHS\n");
    let rhs: Vec<(String, f64)> =
        model.constraints.iter().enumerate().filter(|(_, c)| c.rhs != 0.0).map(|(r, c)| (row_code(r), c.rhs)).collect();
    for chunk in rhs.chunks(2) {
        let second = chunk.get(1).map(|(r, v)| (r.as_str(), format_number(*v)));
        match &second {
            Some((r, v)) => field_line(&mut out, "", "RHS", &chunk[0].0, &format_number(chunk[0].1), Some((r, v))),
            None => field_line(&mut out, "", "RHS", &chunk[0].0, &format_number(chunk[0].1), None),
        }
    }

    out.push_str("BOUNDS\n");
    for (j, v) in model.variables.iter().enumerate() {
        let code = col_code(j);
        let (lo, hi) = (v.lower, v.upper);
        if lo == hi {
            field_line(&mut out, "FX", "BND", &code, &format_number(lo), None);
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            field_line(&mut out, "FR", "BND", &code, "", None);
            continue;
        }
        if lo == f64::NEG_INFINITY {
            field_line(&mut out, "MI", "BND", &code, "", None);
        } else if lo != 0.0 || v.kind == VarKind::Binary {
            field_line(&mut out, "LO", "BND", &code, &format_number(lo), None);
        }
        if hi != f64::INFINITY {
            field_line(&mut out, "UP", "BND", &code, &format_number(hi), None);
        } else if v.kind == VarKind::Binary {
            field_line(&mut out, "PL", "BND", &code, "", None);
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn export_mps(model: &ModelSpec, path: &Path) -> Result<(), FormulationError> {
    std::fs::write(path, to_mps_string(model))?;
    Ok(())
}

pub fn import_mps(path: &Path) -> Result<ModelSpec, FormulationError> {
    read_mps(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

/// Parses MPS text. Fields are whitespace separated, which accepts both the
/// fixed layout written here and free-format files with space-free names.
pub fn read_mps(text: &str) -> Result<ModelSpec, FormulationError> {
    let err = |line: usize, reason: &str| FormulationError::MpsParse { line, reason: reason.to_string() };
    let mut col_names: HashMap<String, String> = HashMap::new();
    let mut row_names: HashMap<String, String> = HashMap::new();
    let mut name = String::new();
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut rows: Vec<(String, RowSense)> = Vec::new();
    let mut row_pos: HashMap<String, usize> = HashMap::new();
    let mut cols: Vec<(String, bool)> = Vec::new();
    let mut col_pos: HashMap<String, usize> = HashMap::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut obj: Vec<(usize, f64)> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut bounds: Vec<(f64, f64, bool)> = Vec::new(); // (lo, hi, lo set explicitly)
    let mut integer = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        if let Some(rest) = raw.strip_prefix('*') {
            let f: Vec<&str> = rest.split_whitespace().collect();
            match f.as_slice() {
                ["COL", code, orig] => {
                    col_names.insert(code.to_string(), orig.to_string());
                }
                ["ROW", code, orig] => {
                    row_names.insert(code.to_string(), orig.to_string());
                }
                _ => {}
            }
            continue;
        }
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match fields[0] {
                "NAME" => {
                    name = fields.get(1).map(|s| s.to_string()).unwrap_or_default();
                    Section::None
                }
                "OBJSENSE" => {
                    if let Some(&s) = fields.get(1) {
                        if s != "MIN" && s != "MINIMIZE" {
                            return Err(err(lineno, "only minimization is supported"));
                        }
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => break,
                other => return Err(err(lineno, &format!("unknown section {other}"))),
            };
            continue;
        }
        let num = |s: &str| -> Result<f64, FormulationError> {
            s.parse::<f64>().map_err(|_| err(lineno, &format!("bad number `{s}`")))
        };
        match section {
            Section::ObjSense => {
                if fields[0] != "MIN" && fields[0] != "MINIMIZE" {
                    return Err(err(lineno, "only minimization is supported"));
                }
            }
            Section::Rows => {
                if fields.len() < 2 {
                    return Err(err(lineno, "ROWS entry needs a type and a name"));
                }
                let sense = match fields[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(fields[1].to_string());
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    t => return Err(err(lineno, &format!("unknown row type {t}"))),
                };
                row_pos.insert(fields[1].to_string(), rows.len());
                rows.push((fields[1].to_string(), sense));
                rhs.push(0.0);
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    integer = match fields[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        m => return Err(err(lineno, &format!("unknown marker {m}"))),
                    };
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err(lineno, "COLUMNS entry needs 3 or 5 fields"));
                }
                let j = match col_pos.get(fields[0]) {
                    Some(&j) => j,
                    None => {
                        let j = cols.len();
                        col_pos.insert(fields[0].to_string(), j);
                        cols.push((fields[0].to_string(), integer));
                        entries.push(Vec::new());
                        bounds.push((0.0, if integer { 1.0 } else { f64::INFINITY }, false));
                        j
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let v = num(pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        if v != 0.0 {
                            obj.push((j, v));
                        }
                    } else {
                        let r =
                            *row_pos.get(pair[0]).ok_or_else(|| err(lineno, &format!("unknown row {}", pair[0])))?;
                        entries[j].push((r, v));
                    }
                }
            }
            Section::Rhs => {
                let rest = if fields.len() % 2 == 1 { &fields[1..] } else { &fields[..] };
                for pair in rest.chunks(2) {
                    if pair.len() < 2 {
                        return Err(err(lineno, "RHS entry without value"));
                    }
                    if Some(pair[0]) == obj_row.as_deref() {
                        continue;
                    }
                    let r = *row_pos.get(pair[0]).ok_or_else(|| err(lineno, &format!("unknown row {}", pair[0])))?;
                    rhs[r] = num(pair[1])?;
                }
            }
            Section::Ranges => return Err(err(lineno, "RANGES are not supported")),
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(err(lineno, "BOUNDS entry needs type, set and column"));
                }
                let j = *col_pos.get(fields[2]).ok_or_else(|| err(lineno, &format!("unknown column {}", fields[2])))?;
                let val = || -> Result<f64, FormulationError> {
                    fields.get(3).ok_or_else(|| err(lineno, "bound without value")).and_then(|s| num(s))
                };
                let b = &mut bounds[j];
                match fields[0] {
                    "UP" => {
                        let v = val()?;
                        b.1 = v;
                        if v < 0.0 && !b.2 && b.0 == 0.0 {
                            b.0 = f64::NEG_INFINITY;
                        }
                    }
                    "LO" => {
                        b.0 = val()?;
                        b.2 = true;
                    }
                    "FX" => {
                        let v = val()?;
                        *b = (v, v, true);
                    }
                    "FR" => *b = (f64::NEG_INFINITY, f64::INFINITY, true),
                    "MI" => {
                        b.0 = f64::NEG_INFINITY;
                        b.2 = true;
                    }
                    "PL" => b.1 = f64::INFINITY,
                    "BV" => {
                        *b = (0.0, 1.0, true);
                        cols[j].1 = true;
                    }
                    t => return Err(err(lineno, &format!("unsupported bound type {t}"))),
                }
            }
            Section::None => return Err(err(lineno, "data outside a section")),
        }
    }

    let mut model = ModelSpec::new(name);
    for (j, (code, is_int)) in cols.iter().enumerate() {
        let nm = col_names.get(code).cloned().unwrap_or_else(|| code.clone());
        if model.var(&nm).is_some() {
            return Err(err(0, &format!("duplicate column {nm}")));
        }
        let (lo, hi, _) = bounds[j];
        let kind = if *is_int && lo >= 0.0 && hi <= 1.0 { VarKind::Binary } else { VarKind::Continuous };
        if *is_int && kind == VarKind::Continuous {
            return Err(err(0, &format!("general integer column {nm} is not supported")));
        }
        model.add_var(nm, kind, lo, hi);
    }
    let mut row_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows.len()];
    for (j, es) in entries.iter().enumerate() {
        for &(r, v) in es {
            row_terms[r].push((j, v));
        }
    }
    for (r, ((code, sense), terms)) in rows.iter().zip(row_terms).enumerate() {
        let nm = row_names.get(code).cloned().unwrap_or_else(|| code.clone());
        model.add_constraint(nm, terms, *sense, rhs[r]);
    }
    model.set_objective(obj);
    Ok(model)
}
