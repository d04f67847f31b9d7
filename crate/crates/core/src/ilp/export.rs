use std::fmt::Write;

use super::{Direction, IlpModel, VarId, VarKind};

const TERMS_PER_LINE: usize = 8;

fn write_terms(out: &mut String, model: &IlpModel, terms: &[(VarId, i64)], indent: usize) {
    if terms.is_empty() {
        // LP readers reject rows without variables
        let name = model.variables.first().map_or("x", |v| v.name.as_str());
        let _ = write!(out, "0 {name}");
        return;
    }
    for (k, &(v, a)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push('\n');
            out.push_str(&" ".repeat(indent));
        } else if k > 0 {
            out.push(' ');
        }
        let name = &model.variables[v].name;
        match (k, a < 0) {
            (0, false) => {
                let _ = write!(out, "{a} {name}");
            }
            (0, true) => {
                let _ = write!(out, "- {} {name}", -a);
            }
            (_, false) => {
                let _ = write!(out, "+ {a} {name}");
            }
            (_, true) => {
                let _ = write!(out, "- {} {name}", -a);
            }
        }
    }
}

/// Renders `model` in CPLEX LP text format.
pub fn export_lp(model: &IlpModel) -> String {
    let mut out = String::from("\\ cpprot model\n");
    if model.variables.is_empty() && model.constraints.is_empty() {
        out.push_str("End\n");
        return out;
    }
    out.push_str(match model.direction {
        Direction::Minimize => "Minimize\n",
        Direction::Maximize => "Maximize\n",
    });
    out.push_str(" obj: ");
    write_terms(&mut out, model, &model.objective, 2);
    if model.objective_constant != 0 {
        let c = model.objective_constant;
        if c < 0 {
            let _ = write!(out, " - {}", -c);
        } else {
            let _ = write!(out, " + {c}");
        }
    }
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints.iter().enumerate() {
        let label = if c.name.is_empty() {
            format!("c{i}")
        } else {
            c.name.clone()
        };
        let _ = write!(out, " {label}: ");
        write_terms(&mut out, model, &c.terms, 2);
        let _ = writeln!(out, " {} {}", c.sense, c.rhs);
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        match v.kind {
            VarKind::Binary if (v.lower, v.upper) == (0, 1) => {}
            _ if v.lower == v.upper => {
                let _ = writeln!(out, " {} = {}", v.name, v.lower);
            }
            _ => {
                let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
            }
        }
    }
    for (kind, header) in [(VarKind::Binary, "Binary"), (VarKind::Integer, "General")] {
        let names: Vec<&str> = model
            .variables
            .iter()
            .filter(|v| v.kind == kind)
            .map(|v| v.name.as_str())
            .collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{header}");
        for chunk in names.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
