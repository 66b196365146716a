//! CPLEX-LP text export for cross-checking problems with external solvers.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{LinearProgram, ObjectiveSense, Sense, VarId};
use crate::error::{Error, Result};

/// Environment variable naming a directory that receives a dump of every solve.
pub const DUMP_ENV: &str = "DISPATCH_LP_DUMP";

static DUMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

fn sanitize(name: &str, fallback: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.[]()".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    match s.chars().next() {
        None => fallback.to_string(),
        Some(c) if c.is_ascii_digit() || c == '.' => format!("_{s}"),
        Some(_) => s,
    }
}

fn term(out: &mut String, coef: f64, name: &str, first: bool) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {}", -coef, name);
    } else if first {
        let _ = write!(out, " {} {}", coef, name);
    } else {
        let _ = write!(out, " + {} {}", coef, name);
    }
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

pub fn to_lp_string(lp: &LinearProgram, integral: Option<&BTreeSet<VarId>>) -> String {
    let names: Vec<String> = lp
        .vars
        .iter()
        .enumerate()
        .map(|(j, v)| format!("{}#{}", sanitize(&v.name, "x"), j).replace('#', "_"))
        .collect();
    let mut out = String::new();
    out.push_str(match lp.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    let mut first = true;
    for (j, &c) in lp.objective.iter().enumerate() {
        if c != 0.0 {
            term(&mut out, c, &names[j], first);
            first = false;
        }
    }
    if lp.objective_constant != 0.0 {
        let _ = write!(out, " + {} constant_term", lp.objective_constant);
    } else if first {
        out.push_str(" 0 constant_term");
    }
    out.push_str("\nSubject To\n");
    for (i, row) in lp.constraints.iter().enumerate() {
        let _ = write!(out, " {}_{}:", sanitize(&row.name, "c"), i);
        let mut first = true;
        for &(j, a) in &row.coeffs {
            term(&mut out, a, &names[j.0], first);
            first = false;
        }
        if first {
            out.push_str(" 0 constant_term");
        }
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {} {}", op, row.rhs);
    }
    out.push_str("Bounds\n");
    for (j, v) in lp.vars.iter().enumerate() {
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", names[j]);
        } else {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                fmt_bound(v.lower),
                names[j],
                fmt_bound(v.upper)
            );
        }
    }
    out.push_str(" constant_term = 1\n");
    if let Some(ints) = integral {
        if !ints.is_empty() {
            out.push_str("Binaries\n");
            for id in ints {
                let _ = writeln!(out, " {}", names[id.0]);
            }
        }
    }
    out.push_str("End\n");
    out
}

pub fn write_lp(
    path: impl AsRef<Path>,
    lp: &LinearProgram,
    integral: Option<&BTreeSet<VarId>>,
) -> Result<()> {
    std::fs::write(path.as_ref(), to_lp_string(lp, integral)).map_err(|e| Error::io(path, e))
}

/// Writes `lp` into `$DISPATCH_LP_DUMP` when that variable is set. Failures
/// are ignored: dumping is a debugging aid and must never change a solve.
pub fn dump_if_requested(lp: &LinearProgram, integral: Option<&BTreeSet<VarId>>, kind: &str) {
    let Some(dir) = std::env::var_os(DUMP_ENV) else {
        return;
    };
    let k = DUMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = Path::new(&dir).join(format!("{kind}_{k:06}.lp"));
    let _ = std::fs::create_dir_all(&dir);
    let _ = write_lp(path, lp, integral);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_all_sections() {
        let mut lp = LinearProgram::new(ObjectiveSense::Minimize);
        let x = lp.add_var("x", 0.0, 3.0);
        let y = lp.add_var("y", f64::NEG_INFINITY, f64::INFINITY);
        lp.set_objective(x, 2.0);
        lp.set_objective(y, -1.0);
        lp.add_constraint("bal", vec![(x, 1.0), (y, -1.0)], Sense::Ge, 1.0);
        let mut ints = BTreeSet::new();
        ints.insert(x);
        let s = to_lp_string(&lp, Some(&ints));
        assert!(s.starts_with("Minimize\n obj: 2 x_0 - 1 y_1"));
        assert!(s.contains("Subject To\n bal_0: 1 x_0 - 1 y_1 >= 1\n"));
        assert!(s.contains(" y_1 free\n"));
        assert!(s.contains("Binaries\n x_0\n"));
        assert!(s.ends_with("End\n"));
    }
}
