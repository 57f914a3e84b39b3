//! CPLEX LP text format, readable by most MILP solvers.

use std::fmt::Write as _;

use super::model::{LinearProgram, Sense};

fn term(out: &mut String, first: bool, coef: f64, name: &str) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {name}", -coef);
    } else if first {
        let _ = write!(out, " {coef} {name}");
    } else {
        let _ = write!(out, " + {coef} {name}");
    }
}

pub fn to_cplex_lp(lp: &LinearProgram) -> String {
    let mut out = String::from("\\ resassign path program\nMinimize\n obj:");
    let mut first = true;
    for v in lp.variables.iter().filter(|v| v.cost != 0.0) {
        term(&mut out, first, v.cost, &v.name);
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    for r in &lp.rows {
        let _ = write!(out, " {}:", r.name);
        if r.coeffs.is_empty() {
            out.push_str(" 0 x_dummy_zero");
        }
        for (i, &(j, a)) in r.coeffs.iter().enumerate() {
            term(&mut out, i == 0, a, &lp.variables[j].name);
        }
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", r.rhs);
    }
    out.push_str("Bounds\n");
    for v in &lp.variables {
        match v.upper {
            Some(u) => {
                let _ = writeln!(out, " {} <= {} <= {u}", v.lower, v.name);
            }
            None => {
                let _ = writeln!(out, " {} >= {}", v.name, v.lower);
            }
        }
    }
    let ints: Vec<&str> = lp.variables.iter().filter(|v| v.integer).map(|v| v.name.as_str()).collect();
    if !ints.is_empty() {
        out.push_str("Binaries\n");
        for chunk in ints.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::conflict_fixture;
    use crate::lp::formulate::{formulate, Variant};

    #[test]
    fn exports_sections() {
        let g = conflict_fixture();
        let f = formulate(&g, Variant::Integer);
        let text = to_cplex_lp(&f.lp);
        for section in ["Minimize", "Subject To", "Bounds", "Binaries", "End"] {
            assert!(text.contains(section), "{section}");
        }
        assert!(text.contains("use_p1:"));
        assert!(text.contains("select_2:"));
        assert_eq!(text.matches("couple_").count(), f.coupling_rows);
    }

    #[test]
    fn penalized_has_no_binaries_and_free_upper() {
        let g = conflict_fixture();
        let f = formulate(&g, Variant::Penalized { lambda: 5.0 });
        let text = to_cplex_lp(&f.lp);
        assert!(!text.contains("Binaries"));
        assert!(text.contains("eps_p1 >= 0"));
        assert!(text.contains("- 1 eps_p1 <= 1"));
    }
}
