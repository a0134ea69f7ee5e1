//! LP-format export and a minimal reader.
//!
//! The writer emits the industry-standard LP dialect with the sections
//! `Minimize`/`Maximize`, `Subject To`, `Bounds`, `Binaries`, `End`. Row
//! names are the model's provenance tags (sanitized to `[A-Za-z0-9_]` and
//! de-duplicated deterministically). Every variable gets a `Bounds` line in
//! id order, which is what lets [`parse_lp`] reconstruct the exact column
//! order. Identical models produce byte-identical output; coefficients are
//! printed with Rust's shortest round-trip float formatting so a write/parse
//! cycle reproduces them exactly.
//!
//! The reader is intentionally minimal: it handles exactly the dialect the
//! writer produces (plus `\` comments and token-level line wrapping in the
//! objective and constraint sections).

use thiserror::Error;

use crate::milp::{is_unbounded, MilpModel, ObjSense, RowSense, VarKind, VarRef, INF};

#[derive(Error, Debug)]
pub enum LpParseError {
    #[error("line {0}: {1}")]
    Line(usize, String),
    #[error("missing section: {0}")]
    MissingSection(&'static str),
    #[error("unknown variable `{0}` (not declared in Bounds)")]
    UnknownVariable(String),
    #[error("model construction failed: {0}")]
    Model(#[from] crate::milp::ModelError),
    #[error("{0}")]
    Other(String),
}

const WRAP_COLUMN: usize = 200;

fn fmt_num(v: f64) -> String {
    debug_assert!(v.is_finite());
    format!("{}", v)
}

/// Map a tag to a legal LP row name: `[A-Za-z0-9_]`, starting with a letter
/// or underscore.
fn sanitize_name(tag: &str) -> String {
    let mut out = String::with_capacity(tag.len());
    for c in tag.chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            out.push(c);
        } else {
            out.push('_');
        }
    }
    if out.is_empty() || out.as_bytes()[0].is_ascii_digit() {
        out.insert(0, 'r');
    }
    out
}

fn push_wrapped(out: &mut String, line: &mut String, token: &str) {
    if line.len() + token.len() > WRAP_COLUMN {
        out.push_str(line);
        out.push('\n');
        line.clear();
        line.push_str("  ");
    }
    line.push_str(token);
}

fn write_linear_terms(out: &mut String, line: &mut String, coeffs: &[(VarRef, f64)], m: &MilpModel) {
    for (idx, (v, c)) in coeffs.iter().enumerate() {
        let tok = if idx == 0 {
            if *c < 0.0 {
                format!("-{} {}", fmt_num(c.abs()), m.name_of(*v))
            } else {
                format!("{} {}", fmt_num(*c), m.name_of(*v))
            }
        } else if *c < 0.0 {
            format!(" - {} {}", fmt_num(c.abs()), m.name_of(*v))
        } else {
            format!(" + {} {}", fmt_num(*c), m.name_of(*v))
        };
        push_wrapped(out, line, &tok);
    }
}

/// Serialize a model to LP-format text. Deterministic: identical models
/// produce byte-identical output.
pub fn write_lp_file(model: &MilpModel) -> String {
    let mut out = String::new();
    match model.objective().sense {
        ObjSense::Minimize => out.push_str("Minimize\n"),
        ObjSense::Maximize => out.push_str("Maximize\n"),
    }
    let mut line = String::from(" obj:");
    if !model.objective().coeffs.is_empty() {
        line.push(' ');
        write_linear_terms(&mut out, &mut line, &model.objective().coeffs, model);
    }
    out.push_str(&line);
    out.push('\n');

    out.push_str("Subject To\n");
    let mut used = std::collections::BTreeSet::new();
    for (i, row) in model.rows().iter().enumerate() {
        let mut name = sanitize_name(&row.tag);
        if !used.insert(name.clone()) {
            name = format!("{}__{}", name, i);
            used.insert(name.clone());
        }
        let mut line = format!(" {}: ", name);
        write_linear_terms(&mut out, &mut line, &row.coeffs, model);
        line.push_str(&format!(" {} {}", row.sense, fmt_num(row.rhs)));
        out.push_str(&line);
        out.push('\n');
    }

    out.push_str("Bounds\n");
    for v in model.vars() {
        let lo_inf = is_unbounded(v.lb);
        let hi_inf = is_unbounded(v.ub);
        let line = if lo_inf && hi_inf {
            format!(" {} free", v.name)
        } else if hi_inf {
            format!(" {} >= {}", v.name, fmt_num(v.lb))
        } else if lo_inf {
            format!(" -infinity <= {} <= {}", v.name, fmt_num(v.ub))
        } else if v.lb == v.ub {
            format!(" {} = {}", v.name, fmt_num(v.lb))
        } else {
            format!(" {} <= {} <= {}", fmt_num(v.lb), v.name, fmt_num(v.ub))
        };
        out.push_str(&line);
        out.push('\n');
    }

    let binaries: Vec<&str> =
        model.vars().iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for b in binaries {
            out.push(' ');
            out.push_str(b);
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    Num(f64),
    Plus,
    Minus,
    Colon,
    Sense(RowSense),
}

fn tokenize(text: &str, lineno: usize) -> Result<Vec<Tok>, LpParseError> {
    let mut toks = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            ':' => {
                toks.push(Tok::Colon);
                i += 1;
            }
            '<' | '>' | '=' => {
                let mut j = i + 1;
                if j < bytes.len() && bytes[j] as char == '=' {
                    j += 1;
                }
                toks.push(Tok::Sense(match c {
                    '<' => RowSense::Le,
                    '>' => RowSense::Ge,
                    _ => RowSense::Eq,
                }));
                i = j;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && ((bytes[i + 1] as char).is_ascii_digit()
                            || bytes[i + 1] as char == '+'
                            || bytes[i + 1] as char == '-')
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
                let s = &text[start..i];
                let v = s
                    .parse::<f64>()
                    .map_err(|_| LpParseError::Line(lineno, format!("bad number `{}`", s)))?;
                toks.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                toks.push(Tok::Name(text[start..i].to_string()));
            }
            other => {
                return Err(LpParseError::Line(lineno, format!("unexpected character `{}`", other)))
            }
        }
    }
    Ok(toks)
}

/// `infinity` and `inf` names in bound positions, with optional leading minus.
fn bound_value(tok: &Tok, negate: bool) -> Option<f64> {
    let v = match tok {
        Tok::Num(v) => *v,
        Tok::Name(n) if n.eq_ignore_ascii_case("infinity") || n.eq_ignore_ascii_case("inf") => INF,
        _ => return None,
    };
    Some(if negate { -v } else { v })
}

struct Sections {
    sense: ObjSense,
    objective: Vec<(usize, String)>,
    rows: Vec<(usize, String)>,
    bounds: Vec<(usize, String)>,
    binaries: Vec<(usize, String)>,
}

fn split_sections(text: &str) -> Result<Sections, LpParseError> {
    #[derive(PartialEq)]
    enum Sec {
        Preamble,
        Objective,
        Rows,
        Bounds,
        Binaries,
        End,
    }
    let mut sense = None;
    let mut sec = Sec::Preamble;
    let mut objective = Vec::new();
    let mut rows = Vec::new();
    let mut bounds = Vec::new();
    let mut binaries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('\\') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lower = trimmed.to_ascii_lowercase();
        match lower.as_str() {
            "minimize" | "min" => {
                sense = Some(ObjSense::Minimize);
                sec = Sec::Objective;
                continue;
            }
            "maximize" | "max" => {
                sense = Some(ObjSense::Maximize);
                sec = Sec::Objective;
                continue;
            }
            "subject to" | "st" | "s.t." => {
                sec = Sec::Rows;
                continue;
            }
            "bounds" => {
                sec = Sec::Bounds;
                continue;
            }
            "binaries" | "binary" => {
                sec = Sec::Binaries;
                continue;
            }
            "end" => {
                sec = Sec::End;
                continue;
            }
            _ => {}
        }
        match sec {
            Sec::Preamble => {
                return Err(LpParseError::Line(lineno, "expected Minimize or Maximize".into()))
            }
            Sec::Objective => objective.push((lineno, line.to_string())),
            Sec::Rows => rows.push((lineno, line.to_string())),
            Sec::Bounds => bounds.push((lineno, line.to_string())),
            Sec::Binaries => binaries.push((lineno, line.to_string())),
            Sec::End => {
                return Err(LpParseError::Line(lineno, "content after End".into()));
            }
        }
    }
    let sense = sense.ok_or(LpParseError::MissingSection("Minimize/Maximize"))?;
    Ok(Sections { sense, objective, rows, bounds, binaries })
}

/// Parse `[label:] (sign? num? name | sign? num)*` and an optional trailing
/// `sense rhs`. Returns (label, terms, Option<(sense, rhs)>).
#[allow(clippy::type_complexity)]
fn parse_expr(
    toks: &[Tok],
    lineno: usize,
) -> Result<(Option<String>, Vec<(String, f64)>, Option<(RowSense, f64)>), LpParseError> {
    let mut i = 0;
    let mut label = None;
    if toks.len() >= 2 {
        if let (Tok::Name(n), Tok::Colon) = (&toks[0], &toks[1]) {
            label = Some(n.clone());
            i = 2;
        }
    }
    let mut terms: Vec<(String, f64)> = Vec::new();
    let mut tail = None;
    while i < toks.len() {
        if let Tok::Sense(s) = &toks[i] {
            let mut neg = false;
            let mut j = i + 1;
            if j < toks.len() && toks[j] == Tok::Minus {
                neg = true;
                j += 1;
            }
            let rhs = match toks.get(j) {
                Some(Tok::Num(v)) => {
                    if neg {
                        -v
                    } else {
                        *v
                    }
                }
                _ => return Err(LpParseError::Line(lineno, "expected rhs after sense".into())),
            };
            if j + 1 != toks.len() {
                return Err(LpParseError::Line(lineno, "trailing tokens after rhs".into()));
            }
            tail = Some((*s, rhs));
            break;
        }
        let mut sign = 1.0;
        loop {
            match &toks[i] {
                Tok::Plus => i += 1,
                Tok::Minus => {
                    sign = -sign;
                    i += 1;
                }
                _ => break,
            }
            if i >= toks.len() {
                return Err(LpParseError::Line(lineno, "dangling sign".into()));
            }
        }
        match &toks[i] {
            Tok::Num(v) => {
                let coeff = sign * v;
                i += 1;
                match toks.get(i) {
                    Some(Tok::Name(n)) => {
                        terms.push((n.clone(), coeff));
                        i += 1;
                    }
                    // bare constant in an expression; contributes nothing here
                    _ => {
                        if coeff != 0.0 {
                            return Err(LpParseError::Line(
                                lineno,
                                "constant terms are not supported".into(),
                            ));
                        }
                    }
                }
            }
            Tok::Name(n) => {
                terms.push((n.clone(), sign));
                i += 1;
            }
            t => return Err(LpParseError::Line(lineno, format!("unexpected token {:?}", t))),
        }
    }
    Ok((label, terms, tail))
}

/// Minimal LP reader for the dialect produced by [`write_lp_file`].
///
/// Variables are reconstructed in the order of their `Bounds` lines, so the
/// parsed model has identical variable ids, bounds, kinds, row count, and
/// coefficients as the model that was written.
pub fn parse_lp(text: &str) -> Result<MilpModel, LpParseError> {
    let sections = split_sections(text)?;
    if sections.bounds.is_empty() {
        return Err(LpParseError::MissingSection("Bounds"));
    }

    // Pass 1: variable registry from Bounds, in order.
    let mut model = MilpModel::new();
    let mut declared: Vec<(String, f64, f64)> = Vec::new();
    for (lineno, line) in &sections.bounds {
        let toks = tokenize(line, *lineno)?;
        let parsed: Option<(String, f64, f64)> = match toks.as_slice() {
            [Tok::Name(n), Tok::Name(kw)] if kw.eq_ignore_ascii_case("free") => {
                Some((n.clone(), -INF, INF))
            }
            [Tok::Name(n), Tok::Sense(RowSense::Ge), rest @ ..] => match rest {
                [Tok::Minus, t] => bound_value(t, true).map(|v| (n.clone(), v, INF)),
                [t] => bound_value(t, false).map(|v| (n.clone(), v, INF)),
                _ => None,
            },
            [Tok::Name(n), Tok::Sense(RowSense::Le), rest @ ..] => match rest {
                [Tok::Minus, t] => bound_value(t, true).map(|v| (n.clone(), 0.0, v)),
                [t] => bound_value(t, false).map(|v| (n.clone(), 0.0, v)),
                _ => None,
            },
            [Tok::Name(n), Tok::Sense(RowSense::Eq), rest @ ..] => match rest {
                [Tok::Minus, Tok::Num(v)] => Some((n.clone(), -v, -v)),
                [Tok::Num(v)] => Some((n.clone(), *v, *v)),
                _ => None,
            },
            _ => {
                // lo <= name <= hi, either side possibly negated / infinite
                let mut i = 0;
                let mut neg_lo = false;
                if toks.get(i) == Some(&Tok::Minus) {
                    neg_lo = true;
                    i += 1;
                }
                let lo = toks.get(i).and_then(|t| bound_value(t, neg_lo));
                let name = match toks.get(i + 1..i + 3) {
                    Some([Tok::Sense(RowSense::Le), Tok::Name(n)]) => Some(n.clone()),
                    _ => None,
                };
                let mut j = i + 3;
                let mut neg_hi = false;
                if toks.get(j) == Some(&Tok::Sense(RowSense::Le)) {
                    j += 1;
                } else {
                    return Err(LpParseError::Line(*lineno, "malformed bound".into()));
                }
                if toks.get(j) == Some(&Tok::Minus) {
                    neg_hi = true;
                    j += 1;
                }
                let hi = toks.get(j).and_then(|t| bound_value(t, neg_hi));
                match (lo, name, hi) {
                    (Some(lo), Some(n), Some(hi)) if j + 1 == toks.len() => Some((n, lo, hi)),
                    _ => None,
                }
            }
        };
        let (name, lb, ub) =
            parsed.ok_or_else(|| LpParseError::Line(*lineno, "malformed bound".into()))?;
        declared.push((name, lb, ub));
    }

    let mut binary_names = std::collections::BTreeSet::new();
    for (lineno, line) in &sections.binaries {
        let toks = tokenize(line, *lineno)?;
        for t in toks {
            match t {
                Tok::Name(n) => {
                    binary_names.insert(n);
                }
                other => {
                    return Err(LpParseError::Line(*lineno, format!("unexpected {:?}", other)))
                }
            }
        }
    }

    for (name, lb, ub) in &declared {
        let kind = if binary_names.contains(name) { VarKind::Binary } else { VarKind::Continuous };
        model.add_variable(name, *lb, *ub, kind)?;
    }
    for b in &binary_names {
        if model.var_by_name(b).is_none() {
            return Err(LpParseError::UnknownVariable(b.clone()));
        }
    }

    let resolve = |name: &str| -> Result<VarRef, LpParseError> {
        model.var_by_name(name).ok_or_else(|| LpParseError::UnknownVariable(name.to_string()))
    };

    // Objective: all lines form one expression.
    let obj_line = sections.objective.first().map(|(l, _)| *l).unwrap_or(0);
    let obj_text =
        sections.objective.iter().map(|(_, s)| s.as_str()).collect::<Vec<_>>().join(" ");
    let toks = tokenize(&obj_text, obj_line)?;
    let (_, terms, tail) = parse_expr(&toks, obj_line)?;
    if tail.is_some() {
        return Err(LpParseError::Line(obj_line, "objective must not have a rhs".into()));
    }
    let mut obj_coeffs = Vec::new();
    for (n, c) in terms {
        obj_coeffs.push((resolve(&n)?, c));
    }
    let sense = sections.sense;

    // Rows: token stream split on `name :` boundaries.
    let rows_line = sections.rows.first().map(|(l, _)| *l).unwrap_or(0);
    let rows_text = sections.rows.iter().map(|(_, s)| s.as_str()).collect::<Vec<_>>().join(" ");
    let toks = tokenize(&rows_text, rows_line)?;
    let mut starts = Vec::new();
    for i in 0..toks.len() {
        if matches!(toks[i], Tok::Name(_)) && toks.get(i + 1) == Some(&Tok::Colon) {
            // a name directly after a rhs number (or at the start) begins a row
            let prev_is_rhs = i == 0 || matches!(toks[i - 1], Tok::Num(_));
            if prev_is_rhs {
                starts.push(i);
            }
        }
    }
    struct ParsedRow {
        tag: String,
        coeffs: Vec<(VarRef, f64)>,
        sense: RowSense,
        rhs: f64,
    }
    let mut parsed_rows = Vec::new();
    for (k, &s) in starts.iter().enumerate() {
        let e = starts.get(k + 1).copied().unwrap_or(toks.len());
        let (label, terms, tail) = parse_expr(&toks[s..e], rows_line)?;
        let label = label
            .ok_or_else(|| LpParseError::Line(rows_line, "constraint without a name".into()))?;
        let (rsense, rhs) = tail
            .ok_or_else(|| LpParseError::Line(rows_line, format!("row `{}` has no rhs", label)))?;
        let mut coeffs = Vec::new();
        for (n, c) in terms {
            coeffs.push((resolve(&n)?, c));
        }
        parsed_rows.push(ParsedRow { tag: label, coeffs, sense: rsense, rhs });
    }
    if !toks.is_empty() && starts.is_empty() {
        return Err(LpParseError::Line(rows_line, "malformed constraint section".into()));
    }
    for r in parsed_rows {
        model.add_row(r.coeffs, r.sense, r.rhs, &r.tag)?;
    }
    model.set_objective(sense, obj_coeffs)?;
    Ok(model)
}
