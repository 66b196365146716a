//! DC power transfer distribution factors.

use super::PowerSystem;
use crate::error::{Error, Result};
use crate::solver::invert;

/// Injections must net to zero within this many MW.
pub const BALANCE_TOL: f64 = 1e-6;

/// Row-major `lines x buses` sensitivities relative to the slack bus.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftFactorMatrix {
    n_lines: usize,
    n_buses: usize,
    slack: usize,
    data: Vec<f64>,
}

impl ShiftFactorMatrix {
    pub fn num_lines(&self) -> usize {
        self.n_lines
    }

    pub fn num_buses(&self) -> usize {
        self.n_buses
    }

    pub fn slack(&self) -> usize {
        self.slack
    }

    pub fn get(&self, line: usize, bus: usize) -> f64 {
        self.data[line * self.n_buses + bus]
    }

    pub fn row(&self, line: usize) -> &[f64] {
        &self.data[line * self.n_buses..(line + 1) * self.n_buses]
    }

    /// `sum_n SF[l][n] * values[n]` without a balance check.
    pub fn apply(&self, line: usize, values: &[f64]) -> f64 {
        self.row(line).iter().zip(values).map(|(a, b)| a * b).sum()
    }
}

pub fn compute_shift_factors(system: &PowerSystem) -> Result<ShiftFactorMatrix> {
    let nb = system.num_buses();
    let slack = system.slack;
    // reduced index: bus -> position with the slack removed
    let red: Vec<Option<usize>> = (0..nb)
        .map(|b| match b.cmp(&slack) {
            std::cmp::Ordering::Less => Some(b),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(b - 1),
        })
        .collect();
    let m = nb - 1;
    let mut b = vec![0.0; m * m];
    for l in &system.lines {
        let y = 1.0 / l.reactance;
        for (p, q) in [(l.from, l.to), (l.to, l.from)] {
            if let Some(i) = red[p] {
                b[i * m + i] += y;
                if let Some(k) = red[q] {
                    b[i * m + k] -= y;
                }
            }
        }
    }
    let x = if m == 0 {
        Vec::new()
    } else {
        invert(&b, m).map_err(|(i, pivot)| {
            let bus = (0..nb).find(|&k| red[k] == Some(i)).unwrap_or(0);
            Error::SingularSusceptance {
                bus: system.buses[bus].clone(),
                pivot,
            }
        })?
    };
    let xv = |p: usize, n: usize| match (red[p], red[n]) {
        (Some(i), Some(k)) => x[i * m + k],
        _ => 0.0,
    };
    let mut data = vec![0.0; system.lines.len() * nb];
    for (li, l) in system.lines.iter().enumerate() {
        for n in 0..nb {
            if n != slack {
                data[li * nb + n] = (xv(l.from, n) - xv(l.to, n)) / l.reactance;
            }
        }
    }
    Ok(ShiftFactorMatrix {
        n_lines: system.lines.len(),
        n_buses: nb,
        slack,
        data,
    })
}

/// Line flows (MW, positive in the from -> to direction) for balanced injections.
pub fn line_flows(sf: &ShiftFactorMatrix, injections: &[f64]) -> Result<Vec<f64>> {
    if injections.len() != sf.n_buses {
        return Err(Error::Dimension {
            expected: sf.n_buses,
            got: injections.len(),
            context: "bus injections".into(),
        });
    }
    let net: f64 = injections.iter().sum();
    if net.abs() > BALANCE_TOL {
        return Err(Error::Unbalanced { net });
    }
    Ok((0..sf.n_lines).map(|l| sf.apply(l, injections)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_case;

    fn two_bus() -> PowerSystem {
        parse_case(
            r#"{"buses": ["1", "2"], "slack_bus": "1",
                "lines": [{"id": "L", "from": "1", "to": "2", "reactance": 0.2, "capacity": 50}],
                "units": [], "vrg": [], "loads": {}}"#,
        )
        .unwrap()
    }

    #[test]
    fn two_bus_factors() {
        let sf = compute_shift_factors(&two_bus()).unwrap();
        assert_eq!(sf.get(0, 0), 0.0);
        assert!((sf.get(0, 1) + 1.0).abs() < 1e-12);
        let f = line_flows(&sf, &[-10.0, 10.0]).unwrap();
        assert!((f[0] + 10.0).abs() < 1e-12);
        assert_eq!(line_flows(&sf, &[0.0, 0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn unbalanced_injections_rejected() {
        let sf = compute_shift_factors(&two_bus()).unwrap();
        assert!(matches!(
            line_flows(&sf, &[1.0, 0.0]),
            Err(Error::Unbalanced { .. })
        ));
        assert!(matches!(
            line_flows(&sf, &[1.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn single_bus_has_no_lines() {
        let s = parse_case(
            r#"{"buses": ["a"], "slack_bus": "a", "lines": [], "units": [], "vrg": [], "loads": {}}"#,
        )
        .unwrap();
        let sf = compute_shift_factors(&s).unwrap();
        assert_eq!(sf.num_lines(), 0);
    }
}
