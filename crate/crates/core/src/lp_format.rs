//! CPLEX LP text for the linear part of a [`DeterministicProgram`], and a
//! JSON sidecar for its second-order-cone rows.
//!
//! Layout of the LP file:
//!
//! ```text
//! \ chancekit
//! \ method: scenario
//! \ detail: N=2
//! \ scenarios: 2
//! \ decision: 1
//! Minimize
//!  obj: + 1 x_1
//! Subject To
//!  scen_1: - 1 x_1 <= -0.3
//! Bounds
//!  -10 <= x_1 <= 10
//! End
//! ```
//!
//! Every variable appears in `Bounds`, in index order; a reader rebuilds
//! the variable list from that order. Numbers use the shortest decimal
//! that round-trips, so emission is byte-stable and lossless. A nonzero
//! objective constant is written as a bare number term.
//!
//! The sidecar (`<stem>.soc.json`) lists each cone `‖lhs‖₂ ≤ rhs` with
//! affine expressions keyed by LP variable name. It is produced iff the
//! program has cone rows.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Relation;
use crate::program::{AffineExpr, DeterministicProgram, LinRow, Method, Provenance, SocRow, VarKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("sidecar: {0}")]
    Sidecar(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
}

/// Output of [`emit`].
#[derive(Debug, Clone, PartialEq)]
pub struct LpEmission {
    pub lp: String,
    pub soc_sidecar: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SidecarExpr {
    terms: Vec<(String, f64)>,
    constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SidecarCone {
    name: String,
    lhs: Vec<SidecarExpr>,
    rhs: SidecarExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    format: String,
    version: u32,
    cones: Vec<SidecarCone>,
}

const SIDECAR_FORMAT: &str = "chancekit-soc";

fn name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_.!\"#$%&()/,;?@'{}|~".contains(c)
}

/// LP-legal, unique identifiers.
fn sanitize_names<'a>(names: impl Iterator<Item = &'a str>, fallback: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    names
        .enumerate()
        .map(|(i, raw)| {
            let mut s: String = raw.chars().map(|c| if name_char(c) { c } else { '_' }).collect();
            if s.is_empty() {
                s = format!("{fallback}{}", i + 1);
            }
            let mut chars = s.chars();
            let first = chars.next().unwrap();
            let second = chars.next();
            let exp_like = matches!(first, 'e' | 'E') && second.is_none_or(|c| c.is_ascii_digit() || c == 'e' || c == 'E');
            if first.is_ascii_digit() || first == '.' || exp_like || s.eq_ignore_ascii_case("free") || is_inf_word(&s) {
                s.insert(0, '_');
            }
            let mut unique = s.clone();
            let mut k = 1;
            while !seen.insert(unique.to_ascii_lowercase()) {
                k += 1;
                unique = format!("{s}_{k}");
            }
            unique
        })
        .collect()
}

fn is_inf_word(s: &str) -> bool {
    s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity")
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    if terms.is_empty() {
        // an empty left-hand side still needs a variable
        let _ = write!(out, " 0 {}", names[0]);
        return;
    }
    for &(i, c) in terms {
        let sign = if c.is_sign_negative() { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", num(c.abs()), names[i]);
    }
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

/// LP text plus the cone sidecar when needed.
pub fn emit(dp: &DeterministicProgram) -> LpEmission {
    let names = sanitize_names(dp.variables.iter().map(|v| v.name.as_str()), "v");
    let row_names = sanitize_names(dp.rows.iter().map(|r| r.name.as_str()), "r");
    let method = serde_json::to_value(dp.provenance.method)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();

    let mut out = String::new();
    out.push_str("\\ chancekit\n");
    let _ = writeln!(out, "\\ method: {method}");
    if !dp.provenance.detail.is_empty() {
        let _ = writeln!(out, "\\ detail: {}", one_line(&dp.provenance.detail));
    }
    if let Some(s) = dp.provenance.scenarios {
        let _ = writeln!(out, "\\ scenarios: {s}");
    }
    let _ = writeln!(out, "\\ decision: {}", dp.n_decision);
    if !dp.soc_rows.is_empty() {
        let _ = writeln!(out, "\\ cones: {} in sidecar", dp.soc_rows.len());
    }
    out.push_str("Minimize\n obj:");
    let obj = dp.objective.clone().normalized();
    if obj.terms.is_empty() && dp.variables.is_empty() {
        out.push_str(" 0");
    } else if obj.terms.is_empty() {
        write_terms(&mut out, &[], &names);
    } else {
        write_terms(&mut out, &obj.terms, &names);
    }
    if dp.objective.constant != 0.0 {
        let c = dp.objective.constant;
        let _ = write!(out, " {} {}", if c.is_sign_negative() { '-' } else { '+' }, num(c.abs()));
    }
    out.push('\n');

    out.push_str("Subject To\n");
    for (r, name) in dp.rows.iter().zip(&row_names) {
        let _ = write!(out, " {name}:");
        write_terms(&mut out, &r.terms, &names);
        let rel = match r.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", num(r.rhs));
    }

    out.push_str("Bounds\n");
    for (v, name) in dp.variables.iter().zip(&names) {
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", num(v.lower), num(v.upper));
        }
    }
    let binaries: Vec<&str> = dp
        .variables
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for b in binaries {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");

    let soc_sidecar = (!dp.soc_rows.is_empty()).then(|| {
        let expr = |e: &AffineExpr| SidecarExpr {
            terms: e.terms.iter().map(|&(i, c)| (names[i].clone(), c)).collect(),
            constant: e.constant,
        };
        let side = Sidecar {
            format: SIDECAR_FORMAT.into(),
            version: 1,
            cones: dp
                .soc_rows
                .iter()
                .map(|c| SidecarCone {
                    name: c.name.clone(),
                    lhs: c.lhs.iter().map(expr).collect(),
                    rhs: expr(&c.rhs),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&side).expect("sidecar serializes");
        s.push('\n');
        s
    });
    LpEmission { lp: out, soc_sidecar }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Plus,
    Minus,
    Colon,
    Rel(Relation),
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Tok>, LpError> {
    let err = |msg: String| LpError::Parse { line: lineno, msg };
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '\\' => break,
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
                while j < chars.len() && matches!(chars[j], '<' | '>' | '=') {
                    j += 1;
                }
                let op: String = chars[i..j].iter().collect();
                let rel = match op.as_str() {
                    "<" | "<=" | "=<" => Relation::Le,
                    ">" | ">=" | "=>" => Relation::Ge,
                    "=" => Relation::Eq,
                    _ => return Err(err(format!("unknown operator {op:?}"))),
                };
                toks.push(Tok::Rel(rel));
                i = j;
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && matches!(chars[j], 'e' | 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && matches!(chars[k], '+' | '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                toks.push(Tok::Num(s.parse().map_err(|_| err(format!("bad number {s:?}")))?));
                i = j;
            }
            _ if name_char(c) => {
                let mut j = i;
                while j < chars.len() && name_char(chars[j]) {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                toks.push(if is_inf_word(&s) { Tok::Num(f64::INFINITY) } else { Tok::Name(s) });
                i = j;
            }
            _ => return Err(err(format!("unexpected character {c:?}"))),
        }
    }
    Ok(toks)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Objective,
    Rows,
    Bounds,
    Binaries,
    Done,
}

fn section_of(line: &str) -> Option<Section> {
    let l = line.trim().to_ascii_lowercase();
    Some(match l.as_str() {
        "minimize" | "minimise" | "min" => Section::Objective,
        "subject to" | "such that" | "st" | "s.t." => Section::Rows,
        "bounds" | "bound" => Section::Bounds,
        "binaries" | "binary" | "bin" => Section::Binaries,
        "end" => Section::Done,
        _ => return None,
    })
}

struct Builder {
    index: HashMap<String, usize>,
    names: Vec<String>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
    binary: Vec<bool>,
}

impl Builder {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(name.to_owned(), i);
        self.names.push(name.to_owned());
        self.lower.push(None);
        self.upper.push(None);
        self.binary.push(false);
        i
    }
}

/// `[±] [coef] name | [±] number` terms; returns terms and the constant.
fn linear(toks: &[Tok], b: &mut Builder, line: usize) -> Result<(Vec<(usize, f64)>, f64), LpError> {
    let err = |msg: &str| LpError::Parse { line, msg: msg.into() };
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut i = 0;
    while i < toks.len() {
        let mut sign = 1.0;
        while let Some(t @ (Tok::Plus | Tok::Minus)) = toks.get(i) {
            if *t == Tok::Minus {
                sign = -sign;
            }
            i += 1;
        }
        match (toks.get(i), toks.get(i + 1)) {
            (Some(Tok::Num(c)), Some(Tok::Name(n))) => {
                terms.push((b.var(n), sign * c));
                i += 2;
            }
            (Some(Tok::Num(c)), _) => {
                constant += sign * c;
                i += 1;
            }
            (Some(Tok::Name(n)), _) => {
                terms.push((b.var(n), sign));
                i += 1;
            }
            _ => return Err(err("expected a term")),
        }
    }
    Ok((terms, constant))
}

fn signed_number(toks: &[Tok], line: usize) -> Result<f64, LpError> {
    let mut sign = 1.0;
    let mut i = 0;
    while let Some(t @ (Tok::Plus | Tok::Minus)) = toks.get(i) {
        if *t == Tok::Minus {
            sign = -sign;
        }
        i += 1;
    }
    match &toks[i..] {
        [Tok::Num(v)] => Ok(sign * v),
        _ => Err(LpError::Parse {
            line,
            msg: "expected a number".into(),
        }),
    }
}

fn parse_bound(toks: &[Tok], b: &mut Builder, line: usize) -> Result<(), LpError> {
    let err = |msg: &str| LpError::Parse { line, msg: msg.into() };
    let rel_at: Vec<usize> = toks.iter().enumerate().filter(|(_, t)| matches!(t, Tok::Rel(_))).map(|(i, _)| i).collect();
    match rel_at[..] {
        [] => match toks {
            [Tok::Name(n), Tok::Name(f)] if f.eq_ignore_ascii_case("free") => {
                let i = b.var(n);
                b.lower[i] = Some(f64::NEG_INFINITY);
                b.upper[i] = Some(f64::INFINITY);
                Ok(())
            }
            _ => Err(err("expected `name free` or a bound")),
        },
        [r] => {
            let Tok::Rel(rel) = toks[r] else { unreachable!() };
            let (name, value, rel) = match (&toks[..r], &toks[r + 1..]) {
                ([Tok::Name(n)], rhs) => (n, signed_number(rhs, line)?, rel),
                (lhs, [Tok::Name(n)]) => {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (n, signed_number(lhs, line)?, flipped)
                }
                _ => return Err(err("malformed bound")),
            };
            let i = b.var(name);
            match rel {
                Relation::Le => b.upper[i] = Some(value),
                Relation::Ge => b.lower[i] = Some(value),
                Relation::Eq => {
                    b.lower[i] = Some(value);
                    b.upper[i] = Some(value);
                }
            }
            Ok(())
        }
        [r1, r2] => {
            let (Tok::Rel(Relation::Le), Tok::Rel(Relation::Le), [Tok::Name(n)]) = (&toks[r1], &toks[r2], &toks[r1 + 1..r2]) else {
                return Err(err("double bounds must read `lo <= name <= hi`"));
            };
            let lo = signed_number(&toks[..r1], line)?;
            let hi = signed_number(&toks[r2 + 1..], line)?;
            let i = b.var(n);
            b.lower[i] = Some(lo);
            b.upper[i] = Some(hi);
            Ok(())
        }
        _ => Err(err("too many relations in bound")),
    }
}

/// Parses LP text (and the cone sidecar, if any) back into a program.
///
/// Supports the subset written by [`emit`] plus common variations:
/// multi-line rows, unnamed rows, one-sided bounds and default bounds
/// `[0, +∞)`. Maximization and general integers are rejected.
pub fn parse(lp: &str, sidecar: Option<&str>) -> Result<DeterministicProgram, LpError> {
    let mut b = Builder {
        index: HashMap::new(),
        names: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        binary: Vec::new(),
    };
    let mut meta: HashMap<String, String> = HashMap::new();
    let mut section = Section::Header;
    let mut obj_toks: Vec<Tok> = Vec::new();
    let mut obj_line = 0;
    let mut rows: Vec<(Option<String>, Vec<Tok>, usize)> = Vec::new();
    let mut pending: Vec<Tok> = Vec::new();
    let mut pending_line = 0;

    for (k, raw) in lp.lines().enumerate() {
        let lineno = k + 1;
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('\\') {
            if let Some((key, value)) = comment.split_once(':') {
                meta.entry(key.trim().to_owned()).or_insert_with(|| value.trim().to_owned());
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let lower = trimmed.to_ascii_lowercase();
        if matches!(lower.as_str(), "maximize" | "maximise" | "max" | "general" | "generals" | "semi-continuous") {
            return Err(LpError::Parse {
                line: lineno,
                msg: format!("section {trimmed:?} is not supported"),
            });
        }
        if let Some(s) = section_of(trimmed) {
            section = s;
            continue;
        }
        if section == Section::Done {
            break;
        }
        let toks = tokenize(raw, lineno)?;
        match section {
            Section::Header => {
                return Err(LpError::Parse {
                    line: lineno,
                    msg: "content before the objective section".into(),
                })
            }
            Section::Objective => {
                if obj_toks.is_empty() {
                    obj_line = lineno;
                }
                obj_toks.extend(toks);
            }
            Section::Rows => {
                if pending.is_empty() {
                    pending_line = lineno;
                }
                pending.extend(toks);
                // a row is complete once a relation is followed by a number
                let rel = pending.iter().position(|t| matches!(t, Tok::Rel(_)));
                if let Some(r) = rel {
                    if pending[r + 1..].iter().any(|t| matches!(t, Tok::Num(_))) {
                        let toks = std::mem::take(&mut pending);
                        let (name, body) = match &toks[..] {
                            [Tok::Name(n), Tok::Colon, ..] => (Some(n.clone()), toks[2..].to_vec()),
                            _ => (None, toks),
                        };
                        rows.push((name, body, pending_line));
                    }
                }
            }
            Section::Bounds => parse_bound(&toks, &mut b, lineno)?,
            Section::Binaries => {
                for t in toks {
                    let Tok::Name(n) = t else {
                        return Err(LpError::Parse {
                            line: lineno,
                            msg: "expected variable names".into(),
                        });
                    };
                    let i = b.var(&n);
                    b.binary[i] = true;
                }
            }
            Section::Done => unreachable!(),
        }
    }
    if !pending.is_empty() {
        return Err(LpError::Parse {
            line: pending_line,
            msg: "unterminated row".into(),
        });
    }

    // bounds fix the variable order; remap names seen only elsewhere after them
    let obj_body = match &obj_toks[..] {
        [Tok::Name(_), Tok::Colon, ..] => &obj_toks[2..],
        _ => &obj_toks[..],
    };
    let (obj_terms, obj_const) = linear(obj_body, &mut b, obj_line)?;
    let mut lin_rows = Vec::with_capacity(rows.len());
    for (idx, (name, body, line)) in rows.into_iter().enumerate() {
        let r = body.iter().position(|t| matches!(t, Tok::Rel(_))).expect("checked");
        let Tok::Rel(relation) = body[r] else { unreachable!() };
        let (terms, c) = linear(&body[..r], &mut b, line)?;
        let rhs = signed_number(&body[r + 1..], line)?;
        let terms = AffineExpr { terms, constant: 0.0 }.normalized().terms;
        lin_rows.push(LinRow {
            name: name.unwrap_or_else(|| format!("r{}", idx + 1)),
            terms,
            relation,
            rhs: rhs - c,
        });
    }

    let method = meta
        .get("method")
        .and_then(|m| serde_json::from_value::<Method>(serde_json::Value::String(m.clone())).ok())
        .unwrap_or(Method::Custom);
    let provenance = Provenance::new(
        method,
        meta.get("detail").cloned().unwrap_or_default(),
        meta.get("scenarios").and_then(|s| s.parse().ok()),
    );
    let mut dp = DeterministicProgram::new(provenance);
    for i in 0..b.names.len() {
        let kind = if b.binary[i] { VarKind::Binary } else { VarKind::Continuous };
        let lo = b.lower[i].unwrap_or(0.0);
        let hi = b.upper[i].unwrap_or(if b.binary[i] { 1.0 } else { f64::INFINITY });
        dp.add_var(b.names[i].clone(), kind, lo, hi);
    }
    dp.n_decision = meta
        .get("decision")
        .and_then(|s| s.parse().ok())
        .unwrap_or(dp.num_vars())
        .min(dp.num_vars());
    dp.objective = AffineExpr {
        terms: obj_terms,
        constant: obj_const,
    }
    .normalized();
    dp.rows = lin_rows;

    if let Some(text) = sidecar {
        let side: Sidecar = serde_json::from_str(text).map_err(|e| LpError::Sidecar(e.to_string()))?;
        if side.format != SIDECAR_FORMAT {
            return Err(LpError::Sidecar(format!("unexpected format {:?}", side.format)));
        }
        let expr = |e: &SidecarExpr| -> Result<AffineExpr, LpError> {
            let terms = e
                .terms
                .iter()
                .map(|(n, c)| b.index.get(n).map(|&i| (i, *c)).ok_or_else(|| LpError::UnknownVariable(n.clone())))
                .collect::<Result<_, _>>()?;
            Ok(AffineExpr {
                terms,
                constant: e.constant,
            })
        };
        for c in &side.cones {
            dp.soc_rows.push(SocRow {
                name: c.name.clone(),
                lhs: c.lhs.iter().map(expr).collect::<Result<_, _>>()?,
                rhs: expr(&c.rhs)?,
            });
        }
    }
    Ok(dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CcProgram, CcRow, GeneratorSpec, LinearFrame, ScenarioOrigin, ScenarioSet};
    use crate::reformulate::{robust_program, saa_big_m, scenario_problem, RobustSetKind};
    use crate::solver::solve;

    fn coordinatewise(n: usize) -> CcProgram {
        let frame = LinearFrame::with_box(vec![1.0; n], -10.0, 10.0);
        let rows = (0..n)
            .map(|j| {
                let mut a = vec![0.0; n];
                a[j] = -1.0;
                let mut b = vec![0.0; n];
                b[j] = 1.0;
                CcRow::separable(a, 0.0, b)
            })
            .collect();
        CcProgram::new(frame, n, rows, 0.1).unwrap()
    }

    fn two_scenarios() -> DeterministicProgram {
        let scen = ScenarioSet::from_rows(vec![vec![0.3], vec![0.7]], ScenarioOrigin::Derived).unwrap();
        scenario_problem(&coordinatewise(1), &scen).unwrap()
    }

    #[test]
    fn small_program_text() {
        let e = emit(&two_scenarios());
        assert!(e.soc_sidecar.is_none());
        assert!(e.lp.starts_with("\\ chancekit\n\\ method: scenario\n"));
        assert!(e.lp.contains("Minimize\n obj: + 1 x_1\n"));
        assert!(e.lp.contains(" -10 <= x_1 <= 10\n"));
        assert!(e.lp.ends_with("End\n"));
    }

    #[test]
    fn round_trip_is_exact() {
        let dp = two_scenarios();
        let e = emit(&dp);
        let back = parse(&e.lp, None).unwrap();
        assert_eq!(emit(&back), e);
        assert_eq!(back.n_decision, dp.n_decision);
        assert_eq!(back.provenance, dp.provenance);
        let a = solve(&dp).unwrap().objective;
        let b = solve(&back).unwrap().objective;
        assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn milp_round_trip() {
        let gen = GeneratorSpec::UniformBox {
            lo: vec![0.0; 2],
            hi: vec![1.0; 2],
        };
        let scen = crate::model::draw_scenarios(&gen, 8, 3).unwrap();
        let dp = saa_big_m(&coordinatewise(2), &scen, 0.25, None).unwrap();
        let e = emit(&dp);
        assert!(e.lp.contains("Binaries\n"));
        let back = parse(&e.lp, None).unwrap();
        assert!(back.has_binaries());
        assert!((solve(&dp).unwrap().objective - solve(&back).unwrap().objective).abs() <= 1e-9);
    }

    #[test]
    fn cones_go_to_sidecar() {
        let prog = coordinatewise(2);
        let gen = GeneratorSpec::UniformBox {
            lo: vec![-1.0; 2],
            hi: vec![1.0; 2],
        };
        let dp = robust_program(&prog, &gen, RobustSetKind::Ball, None).unwrap();
        let e = emit(&dp);
        let side = e.soc_sidecar.as_deref().expect("cone rows present");
        assert!(side.contains("\"chancekit-soc\""));
        let back = parse(&e.lp, Some(side)).unwrap();
        assert_eq!(back.soc_rows.len(), dp.soc_rows.len());
        assert_eq!(emit(&back), e);
        let a = solve(&dp).unwrap().objective;
        let b = solve(&back).unwrap().objective;
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn names_are_made_legal_and_unique() {
        let n = sanitize_names(["x[1]", "x[1]", "", "3y", "e2", "free", "inf"].into_iter(), "v");
        assert_eq!(n, vec!["x_1_", "x_1__2", "v3", "_3y", "_e2", "_free", "_inf"]);
    }

    #[test]
    fn hand_written_dialect() {
        let lp = "Minimize\n obj: 2 a + b - 1\nSubject To\n c1: a + b\n   >= 1\n -a + b = 0\nBounds\n a <= 4\n b >= -1\nEnd\n";
        let dp = parse(lp, None).unwrap();
        assert_eq!(dp.num_vars(), 2);
        assert_eq!(dp.rows.len(), 2);
        assert_eq!(dp.rows[1].name, "r2");
        assert_eq!(dp.variables[0].lower, 0.0);
        assert_eq!(dp.variables[1].upper, f64::INFINITY);
        assert_eq!(dp.provenance.method, Method::Custom);
        let r = solve(&dp).unwrap();
        assert!((r.objective - 0.5).abs() < 1e-9);
    }

    #[test]
    fn unsupported_sections_rejected() {
        assert!(matches!(parse("Maximize\n obj: x\nEnd\n", None), Err(LpError::Parse { line: 1, .. })));
        assert!(matches!(parse("Minimize\n obj: x\nSubject To\n c: x >=\nEnd\n", None), Err(LpError::Parse { .. })));
        assert!(matches!(
            parse("Minimize\n obj: x\nEnd\n", Some("{\"format\":\"other\",\"version\":1,\"cones\":[]}")),
            Err(LpError::Sidecar(_))
        ));
    }
}
