//! CPLEX-style LP text export.

use std::fmt::Write as _;

use super::model::{MiqpModel, Sense};

/// Name of the auxiliary variable, fixed to one, carrying the objective constant.
pub const CONSTANT_VARIABLE: &str = "obj_constant";

const TERMS_PER_LINE: usize = 6;

fn push_term(out: &mut String, count: &mut usize, coef: f64, body: &str) {
    if *count > 0 && *count % TERMS_PER_LINE == 0 {
        out.push_str("\n   ");
    }
    let sign = if coef < 0.0 { '-' } else { '+' };
    if *count == 0 && coef >= 0.0 {
        let _ = write!(out, " {} {body}", coef);
    } else {
        let _ = write!(out, " {sign} {} {body}", coef.abs());
    }
    *count += 1;
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

/// Writes the model as LP text. The quadratic part sits in square brackets
/// divided by two, so the bracket holds `x'Px`.
pub fn export_lp(model: &MiqpModel) -> String {
    let vars = model.variables();
    let obj = model.objective();
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    let _ = writeln!(
        out,
        "\\ {} variables, {} binaries, {} rows",
        vars.len(),
        model.num_binaries(),
        model.constraints().len()
    );
    out.push_str("Minimize\n obj:");
    let mut count = 0;
    for (j, &c) in obj.linear.iter().enumerate() {
        if c != 0.0 {
            push_term(&mut out, &mut count, c, &vars[j].name);
        }
    }
    if obj.constant != 0.0 {
        push_term(&mut out, &mut count, obj.constant, CONSTANT_VARIABLE);
    }
    if !obj.quadratic.is_empty() {
        out.push_str(if count == 0 { " [" } else { " + [" });
        let mut q = 0;
        for (&(i, j), &p) in &obj.quadratic {
            if p == 0.0 {
                continue;
            }
            if i == j {
                push_term(&mut out, &mut q, p, &format!("{}^2", vars[i].name));
            } else {
                push_term(&mut out, &mut q, 2.0 * p, &format!("{} * {}", vars[i].name, vars[j].name));
            }
        }
        out.push_str(" ] / 2");
        count += 1;
    }
    if count == 0 {
        if let Some(v) = vars.first() {
            let _ = write!(out, " 0 {}", v.name);
        }
    }
    out.push_str("\nSubject To\n");
    for row in model.constraints() {
        let _ = write!(out, " {}:", row.name);
        let mut count = 0;
        for &(j, a) in &row.terms {
            if a != 0.0 {
                push_term(&mut out, &mut count, a, &vars[j].name);
            }
        }
        if count == 0 {
            let _ = write!(out, " 0 {}", vars[0].name);
        }
        let sense = match row.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {sense} {}", row.rhs);
    }
    out.push_str("Bounds\n");
    for v in vars {
        if v.binary && v.lower == 0.0 && v.upper == 1.0 {
            continue;
        }
        if v.lower == v.upper {
            let _ = writeln!(out, " {} = {}", v.name, v.lower);
        } else if v.lower.is_infinite() && v.upper.is_infinite() {
            let _ = writeln!(out, " {} free", v.name);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", bound(v.lower), v.name, bound(v.upper));
        }
    }
    if obj.constant != 0.0 {
        let _ = writeln!(out, " {CONSTANT_VARIABLE} = 1");
    }
    let binaries: Vec<&str> = vars.iter().filter(|v| v.binary).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let mut m = MiqpModel::new("one");
        m.add_continuous("v", -1.0, 2.0);
        let text = export_lp(&m);
        assert_eq!(
            text,
            "\\ one\n\\ 1 variables, 0 binaries, 0 rows\nMinimize\n obj: 0 v\nSubject To\nBounds\n -1 <= v <= 2\nEnd\n"
        );
    }

    #[test]
    fn quadratic_uses_half_bracket() {
        let mut m = MiqpModel::new("q");
        let a = m.add_continuous("a", -5.0, 5.0);
        let b = m.add_continuous("b", -5.0, 5.0);
        m.add_quadratic(a, a, 2.0);
        m.add_quadratic(a, b, -1.0);
        m.add_linear(b, -3.0);
        m.add_constant(4.5);
        let text = export_lp(&m);
        assert!(text.contains(" obj: - 3 b + 4.5 obj_constant + [ 2 a^2 - 2 a * b ] / 2"), "{text}");
        assert!(text.contains(" obj_constant = 1\n"));
    }

    #[test]
    fn binaries_section_lists_binaries_only() {
        let mut m = MiqpModel::new("b");
        let x = m.add_continuous("x", 0.0, 1.0);
        let z = m.add_binary("z", 0);
        let w = m.add_binary("w", 0);
        m.set_bounds(w, 0.0, 0.0);
        m.add_constraint("r", vec![(x, 1.0), (z, -2.0)], Sense::Le, 0.0);
        let text = export_lp(&m);
        assert!(text.contains(" r: 1 x - 2 z <= 0\n"));
        assert!(text.contains("Binaries\n z w\n"));
        assert!(text.contains(" w = 0\n"));
        assert!(!text.contains(" 0 <= z <= 1"));
    }
}
