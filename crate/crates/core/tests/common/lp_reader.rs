//! Minimal reader for the subset of LP text the exporter writes.

use cpprot::ilp::{Direction, IlpModel, Sense, VarKind};

pub fn parse(text: &str) -> IlpModel {
    let mut m = IlpModel::new();
    let mut section = "";
    let mut statements: Vec<(String, String)> = Vec::new();
    let mut current = String::new();
    let mut start_section = String::new();
    for line in text.lines() {
        if line.starts_with('\\') {
            continue;
        }
        let trimmed = line.trim();
        let header = matches!(
            trimmed,
            "Minimize" | "Maximize" | "Subject To" | "Bounds" | "Binary" | "General" | "End"
        );
        if header {
            if !current.is_empty() {
                statements.push((start_section.clone(), std::mem::take(&mut current)));
            }
            section = match trimmed {
                "Minimize" => {
                    m.direction = Direction::Minimize;
                    "obj"
                }
                "Maximize" => {
                    m.direction = Direction::Maximize;
                    "obj"
                }
                "Subject To" => "st",
                "Bounds" => "bounds",
                "Binary" => "bin",
                "General" => "gen",
                _ => "end",
            };
            continue;
        }
        let continuation = line.starts_with("  ");
        if !continuation && !current.is_empty() {
            statements.push((start_section.clone(), std::mem::take(&mut current)));
        }
        if current.is_empty() {
            start_section = section.to_string();
        }
        current.push(' ');
        current.push_str(trimmed);
    }
    let mut lookup = std::collections::HashMap::new();
    let mut var = |m: &mut IlpModel, name: &str, kind: Option<VarKind>| -> usize {
        let id = *lookup
            .entry(name.to_string())
            .or_insert_with(|| m.add_integer(name, 0, i64::MAX / 4));
        if let Some(k) = kind {
            m.variables[id].kind = k;
            if k == VarKind::Binary {
                m.variables[id].lower = 0;
                m.variables[id].upper = 1;
            }
        }
        id
    };
    let linear = |m: &mut IlpModel,
                  var: &mut dyn FnMut(&mut IlpModel, &str) -> usize,
                  expr: &str|
     -> (Vec<(usize, i64)>, i64) {
        let tokens: Vec<&str> = expr.split_whitespace().collect();
        let mut terms = Vec::new();
        let mut constant = 0;
        let mut sign = 1;
        let mut i = 0;
        while i < tokens.len() {
            match tokens[i] {
                "+" => sign = 1,
                "-" => sign = -1,
                t => {
                    let coef: i64 = t.parse().unwrap();
                    if i + 1 < tokens.len() && tokens[i + 1] != "+" && tokens[i + 1] != "-" {
                        let v = var(m, tokens[i + 1]);
                        terms.push((v, sign * coef));
                        i += 1;
                    } else {
                        constant += sign * coef;
                    }
                    sign = 1;
                }
            }
            i += 1;
        }
        (terms, constant)
    };
    for (section, stmt) in statements {
        let stmt = stmt.trim();
        match section.as_str() {
            "obj" => {
                let expr = stmt.split_once(':').unwrap().1;
                let (terms, c) = linear(&mut m, &mut |m, n| var(m, n, None), expr);
                m.objective = terms;
                m.objective_constant = c;
            }
            "st" => {
                let (name, body) = stmt.split_once(':').unwrap();
                let (op, sense) = if body.contains("<=") {
                    ("<=", Sense::Le)
                } else if body.contains(">=") {
                    (">=", Sense::Ge)
                } else {
                    ("=", Sense::Eq)
                };
                let (lhs, rhs) = body.split_once(op).unwrap();
                let (terms, _) = linear(&mut m, &mut |m, n| var(m, n, None), lhs);
                m.add_constraint(name.trim(), terms, sense, rhs.trim().parse().unwrap());
            }
            "bounds" => {
                let parts: Vec<&str> = stmt.split_whitespace().collect();
                match parts.as_slice() {
                    [lo, "<=", name, "<=", hi] => {
                        let id = var(&mut m, name, None);
                        m.variables[id].lower = lo.parse().unwrap();
                        m.variables[id].upper = hi.parse().unwrap();
                    }
                    [name, "=", val] => {
                        let id = var(&mut m, name, None);
                        let v: i64 = val.parse().unwrap();
                        m.variables[id].lower = v;
                        m.variables[id].upper = v;
                    }
                    other => panic!("bound {other:?}"),
                }
            }
            "bin" | "gen" => {
                let kind = if section == "bin" {
                    VarKind::Binary
                } else {
                    VarKind::Integer
                };
                for name in stmt.split_whitespace() {
                    let id = var(&mut m, name, None);
                    let (lo, hi) = (m.variables[id].lower, m.variables[id].upper);
                    var(&mut m, name, Some(kind));
                    if kind == VarKind::Binary && (lo, hi) != (0, i64::MAX / 4) {
                        m.variables[id].lower = lo;
                        m.variables[id].upper = hi;
                    }
                }
            }
            _ => {}
        }
    }
    m
}
