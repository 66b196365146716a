//! Receding-horizon dispatch simulation for the proposed method and the
//! baseline.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baseline::{solve_ed, solve_odne, OdneConfig};
use crate::dne::{count_covered, solve_dne, DneConfig, COVER_TOL};
use crate::error::{Error, Result};
use crate::model::{compute_shift_factors, PowerSystem, ShiftFactorMatrix};
use crate::obp::{corrective_cost, solve_obp, ObpConfig, PenaltyMode};
use crate::sampling::{select_samples, HistoryRecord, SampleSet, ValidationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Odne,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Odne => "odne",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Method::Proposed),
            "odne" => Ok(Method::Odne),
            other => Err(Error::invariant(
                "method",
                format!("unknown method {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltySetting {
    Strict,
    Penalized,
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub method: Method,
    pub n_dne: usize,
    pub n_obp: usize,
    pub epsilon: f64,
    /// Indices into the validation series.
    pub horizon: Vec<usize>,
    pub penalty: PenaltySetting,
    pub dne: DneConfig,
}

impl SimulationConfig {
    pub fn new(method: Method, n_dne: usize, n_obp: usize, horizon: Vec<usize>) -> Self {
        Self {
            method,
            n_dne,
            n_obp,
            epsilon: crate::robust::DEFAULT_EPSILON,
            horizon,
            penalty: PenaltySetting::Penalized,
            dne: DneConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon.is_empty() {
            return Err(Error::invariant("simulation config", "empty horizon"));
        }
        if self.n_dne == 0 || self.n_obp == 0 {
            return Err(Error::invariant(
                "simulation config",
                "sample counts must be at least 1",
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invariant(
                "simulation config",
                "epsilon must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodResult {
    pub period: i64,
    pub method: Method,
    pub covered: bool,
    pub wind_output_mw: f64,
    pub curtailment_mw: f64,
    pub dispatch_cost: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub dne_width: Vec<f64>,
    /// Observed VRG output clipped to `[0, W^max]`; `covered` tests it against the limits.
    pub available_mw: Vec<f64>,
    pub cpu_dne_s: f64,
    pub cpu_obp_s: f64,
    pub slack_mw: f64,
    /// Samples of the DNE set inside the issued limits.
    pub in_sample_covered: usize,
    pub n_samples: usize,
    /// Strict-mode corrective dispatch was infeasible.
    pub infeasible: bool,
    /// Solver failure; the previous dispatch was reused.
    pub failed: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub method: Method,
    pub per_period: Vec<PeriodResult>,
    pub coverage_rate: f64,
    pub avg_cost: f64,
    pub avg_wind: f64,
    pub total_wind: f64,
    pub avg_cpu: f64,
    pub failures: usize,
}

impl SimReport {
    fn from_periods(method: Method, per_period: Vec<PeriodResult>) -> Self {
        let n = per_period.len().max(1) as f64;
        let covered = per_period.iter().filter(|p| p.covered).count() as f64;
        let costs: Vec<f64> = per_period
            .iter()
            .map(|p| p.dispatch_cost)
            .filter(|c| c.is_finite())
            .collect();
        let total_wind: f64 = per_period.iter().map(|p| p.wind_output_mw).sum();
        Self {
            method,
            coverage_rate: covered / n,
            avg_cost: costs.iter().sum::<f64>() / costs.len().max(1) as f64,
            avg_wind: total_wind / n,
            total_wind,
            avg_cpu: per_period
                .iter()
                .map(|p| p.cpu_dne_s + p.cpu_obp_s)
                .sum::<f64>()
                / n,
            failures: per_period.iter().filter(|p| p.failed).count(),
            per_period,
        }
    }

    /// Writes `periods.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, system: &PowerSystem) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("periods.csv");
        let mut w = csv::Writer::from_path(&path)?;
        let mut header: Vec<String> = [
            "period",
            "method",
            "covered",
            "wind_output_mw",
            "dispatch_cost",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(
            system
                .vrgs
                .iter()
                .map(|v| format!("coverage_width_{}", v.id)),
        );
        header.extend(
            ["cpu_dne_s", "cpu_obp_s", "slack_mw"]
                .iter()
                .map(|s| s.to_string()),
        );
        // exact limits and availability so `covered` can be recomputed from the file
        for prefix in ["lower", "upper", "available"] {
            header.extend(system.vrgs.iter().map(|v| format!("{prefix}_{}", v.id)));
        }
        w.write_record(&header)?;
        for p in &self.per_period {
            let mut rec = vec![
                p.period.to_string(),
                p.method.name().to_string(),
                p.covered.to_string(),
                format!("{:.6}", p.wind_output_mw),
                format!("{:.6}", p.dispatch_cost),
            ];
            rec.extend(p.dne_width.iter().map(|x| format!("{x:.6}")));
            rec.push(format!("{:.6}", p.cpu_dne_s));
            rec.push(format!("{:.6}", p.cpu_obp_s));
            rec.push(format!("{:.6}", p.slack_mw));
            for v in [&p.lower, &p.upper, &p.available_mw] {
                rec.extend(v.iter().map(|x| x.to_string()));
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        let summary = serde_json::json!({
            "method": self.method,
            "periods": self.per_period.len(),
            "coverage_rate": self.coverage_rate,
            "avg_cost": self.avg_cost,
            "avg_wind": self.avg_wind,
            "total_wind": self.total_wind,
            "avg_cpu": self.avg_cpu,
            "failures": self.failures,
            "in_sample_covered": self.per_period.iter().map(|p| p.in_sample_covered).collect::<Vec<_>>(),
            "n_samples": self.per_period.iter().map(|p| p.n_samples).collect::<Vec<_>>(),
        });
        let path = dir.join("summary.json");
        std::fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
            .map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

/// What a period's dispatch decision hands to the realization step.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchDecision {
    pub base_obp: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub available_vrg: Vec<f64>,
    pub realized_vrg: Vec<f64>,
    pub covered: bool,
    pub wind_output_mw: f64,
    pub curtailment_mw: f64,
    pub dispatch_cost: f64,
    pub slack_mw: f64,
    /// Unit outputs after correction (CCUs corrected, NCCUs at base point).
    pub unit_outputs: Vec<f64>,
    pub infeasible: bool,
}

/// VRG output is curtailed to the upper limit; shortfalls below the lower
/// limit are absorbed by the corrective stage.
pub fn realize_dispatch(
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    decision: &DispatchDecision,
    observed: &[f64],
    penalty: PenaltySetting,
) -> Result<Realization> {
    let n = system.vrgs.len();
    if observed.len() != n || decision.lower.len() != n || decision.upper.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: observed.len(),
            context: "observed VRG output".into(),
        });
    }
    let avail: Vec<f64> = observed
        .iter()
        .zip(&system.vrgs)
        .map(|(&o, v)| o.clamp(0.0, v.capacity))
        .collect();
    let realized: Vec<f64> = avail
        .iter()
        .zip(&decision.upper)
        .map(|(&o, &u)| o.min(u))
        .collect();
    let covered = avail
        .iter()
        .zip(decision.lower.iter().zip(&decision.upper))
        .all(|(&o, (&l, &u))| o >= l - COVER_TOL && o <= u + COVER_TOL);
    let wind: f64 = realized.iter().sum();
    let curtailment = avail.iter().sum::<f64>() - wind;
    let mode = match penalty {
        PenaltySetting::Strict => PenaltyMode::Strict,
        PenaltySetting::Penalized => PenaltyMode::default_for(system),
    };
    let mut unit_outputs = decision.base_obp.clone();
    match corrective_cost(system, sf, &decision.base_obp, &realized, mode) {
        Ok(c) => {
            for ((i, _), p) in system.ccus().zip(&c.outputs) {
                unit_outputs[i] = *p;
            }
            Ok(Realization {
                available_vrg: avail,
                realized_vrg: realized,
                covered,
                wind_output_mw: wind,
                curtailment_mw: curtailment,
                dispatch_cost: c.cost,
                slack_mw: c.slack_used,
                unit_outputs,
                infeasible: false,
            })
        }
        Err(Error::Infeasible(_)) => Ok(Realization {
            available_vrg: avail,
            realized_vrg: realized,
            covered,
            wind_output_mw: wind,
            curtailment_mw: curtailment,
            dispatch_cost: f64::NAN,
            slack_mw: f64::NAN,
            unit_outputs,
            infeasible: true,
        }),
        Err(e) => Err(e),
    }
}

struct Planned {
    decision: DispatchDecision,
    in_sample: usize,
    cpu_dne: f64,
    cpu_obp: f64,
}

fn plan_period(
    state: &PowerSystem,
    sf: &ShiftFactorMatrix,
    forecast: &[f64],
    dne_set: &SampleSet,
    pool: &[HistoryRecord],
    config: &SimulationConfig,
) -> Result<Planned> {
    let caps = state.vrg_capacities();
    match config.method {
        Method::Proposed => {
            let obp_set = select_samples(pool, forecast, config.n_obp)?.clipped(&caps);
            let dne_cfg = DneConfig {
                epsilon: config.epsilon,
                ..config.dne.clone()
            };
            let t = Instant::now();
            let dne = solve_dne(state, sf, dne_set, forecast, &dne_cfg)?;
            let cpu_dne = t.elapsed().as_secs_f64();
            let obp_cfg = ObpConfig {
                epsilon: config.epsilon,
                ..ObpConfig::default()
            };
            let t = Instant::now();
            let obp = solve_obp(
                state, sf, &obp_set, forecast, &dne.lower, &dne.upper, &obp_cfg,
            )?;
            let cpu_obp = t.elapsed().as_secs_f64();
            Ok(Planned {
                in_sample: dne.coverage_count,
                decision: DispatchDecision {
                    base_obp: obp.base_obp,
                    lower: dne.lower,
                    upper: dne.upper,
                },
                cpu_dne,
                cpu_obp,
            })
        }
        Method::Odne => {
            let t = Instant::now();
            let ed = solve_ed(state, sf, forecast)?;
            let cpu_obp = t.elapsed().as_secs_f64();
            let t = Instant::now();
            let od = solve_odne(
                state,
                sf,
                &ed,
                &OdneConfig {
                    epsilon: config.epsilon,
                    ..OdneConfig::default()
                },
            )?;
            let cpu_dne = t.elapsed().as_secs_f64();
            let realized: Vec<Vec<f64>> = (0..dne_set.len()).map(|k| dne_set.realized(k)).collect();
            Ok(Planned {
                in_sample: count_covered(&realized, &od.lower, &od.upper),
                decision: DispatchDecision {
                    base_obp: ed.obp,
                    lower: od.lower,
                    upper: od.upper,
                },
                cpu_dne,
                cpu_obp,
            })
        }
    }
}

/// Runs the horizon in order; unit outputs carry over between periods.
pub fn run_simulation(
    system: &PowerSystem,
    history: &[HistoryRecord],
    validation: &[ValidationRecord],
    config: &SimulationConfig,
) -> Result<SimReport> {
    config.validate()?;
    let sf = compute_shift_factors(system)?;
    let caps = system.vrg_capacities();
    let mut state = system.clone();
    let mut previous: Option<DispatchDecision> = None;
    let mut periods = Vec::with_capacity(config.horizon.len());
    for &t in &config.horizon {
        let rec = validation.get(t).ok_or_else(|| {
            Error::invariant(
                "validation series",
                format!("no observed data for period index {t}"),
            )
        })?;
        if rec.observed.len() != caps.len() || rec.forecast.len() != caps.len() {
            return Err(Error::Dimension {
                expected: caps.len(),
                got: rec.observed.len(),
                context: format!("validation record {}", rec.timestamp),
            });
        }
        let forecast: Vec<f64> = rec
            .forecast
            .iter()
            .zip(&caps)
            .map(|(&f, &c)| f.clamp(0.0, c))
            .collect();
        // no lookahead: only records strictly before this period
        let pool: Vec<HistoryRecord> = history
            .iter()
            .filter(|h| h.timestamp < rec.timestamp)
            .cloned()
            .collect();
        let planned = if pool.is_empty() {
            Err(Error::invariant(
                "history",
                format!("no records before period {}", rec.timestamp),
            ))
        } else {
            select_samples(&pool, &forecast, config.n_dne).and_then(|set| {
                let set = set.clipped(&caps);
                plan_period(&state, &sf, &forecast, &set, &pool, config).map(|p| (p, set.len()))
            })
        };
        let (decision, in_sample, n_samples, cpu_dne, cpu_obp, failed, note) = match planned {
            Ok((p, n)) => (
                p.decision,
                p.in_sample,
                n,
                p.cpu_dne,
                p.cpu_obp,
                false,
                None,
            ),
            Err(e) => {
                let fallback = previous.clone().unwrap_or_else(|| DispatchDecision {
                    base_obp: state.current_outputs(),
                    lower: forecast.clone(),
                    upper: forecast.clone(),
                });
                let base_obp = state.current_outputs();
                (
                    DispatchDecision {
                        base_obp,
                        ..fallback
                    },
                    0,
                    0,
                    0.0,
                    0.0,
                    true,
                    Some(e.to_string()),
                )
            }
        };
        let r = realize_dispatch(&state, &sf, &decision, &rec.observed, config.penalty)?;
        periods.push(PeriodResult {
            period: rec.timestamp,
            method: config.method,
            covered: r.covered,
            wind_output_mw: r.wind_output_mw,
            curtailment_mw: r.curtailment_mw,
            dispatch_cost: r.dispatch_cost,
            dne_width: decision
                .upper
                .iter()
                .zip(&decision.lower)
                .map(|(u, l)| u - l)
                .collect(),
            lower: decision.lower.clone(),
            upper: decision.upper.clone(),
            available_mw: r.available_vrg.clone(),
            cpu_dne_s: cpu_dne,
            cpu_obp_s: cpu_obp,
            slack_mw: r.slack_mw,
            in_sample_covered: in_sample,
            n_samples,
            infeasible: r.infeasible,
            failed,
            note,
        });
        state = state.with_current_outputs(&r.unit_outputs);
        previous = Some(decision);
    }
    Ok(SimReport::from_periods(config.method, periods))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_case;

    fn two_bus() -> PowerSystem {
        parse_case(
            r#"{"buses": ["1", "2"], "slack_bus": "1",
                "lines": [{"id": "L", "from": "1", "to": "2", "reactance": 0.1, "capacity": 500}],
                "units": [{"id": "G", "bus": "1", "class": "CCU", "p_min": 0, "p_max": 100,
                           "ramp": 100, "delta": 5, "p_current": 40,
                           "cost": {"constant": 0, "segments": [[100, 10]]}}],
                "vrg": [{"id": "W", "bus": "2", "capacity": 30}],
                "loads": {"2": 50}}"#,
        )
        .unwrap()
    }

    #[test]
    fn clamp_and_cover() {
        let s = two_bus();
        let sf = compute_shift_factors(&s).unwrap();
        let d = DispatchDecision {
            base_obp: vec![40.0],
            lower: vec![5.0],
            upper: vec![12.0],
        };
        let r = realize_dispatch(&s, &sf, &d, &[10.0], PenaltySetting::Strict).unwrap();
        assert!(r.covered);
        assert_eq!(r.wind_output_mw, 10.0);
        let r = realize_dispatch(&s, &sf, &d, &[17.0], PenaltySetting::Strict).unwrap();
        assert!(!r.covered);
        assert_eq!(r.realized_vrg, vec![12.0]);
        assert!((r.curtailment_mw - 5.0).abs() < 1e-12);
    }

    #[test]
    fn shortfall_below_lower_limit_uses_slack() {
        let s = two_bus();
        let sf = compute_shift_factors(&s).unwrap();
        let d = DispatchDecision {
            base_obp: vec![40.0],
            lower: vec![8.0],
            upper: vec![12.0],
        };
        // wind 0 needs pC = 50, but only 45 is reachable
        let r = realize_dispatch(&s, &sf, &d, &[0.0], PenaltySetting::Penalized).unwrap();
        assert!(!r.covered);
        assert!((r.slack_mw - 5.0).abs() < 1e-9);
        let r = realize_dispatch(&s, &sf, &d, &[0.0], PenaltySetting::Strict).unwrap();
        assert!(r.infeasible);
    }

    #[test]
    fn method_names_parse() {
        assert_eq!("odne".parse::<Method>().unwrap(), Method::Odne);
        assert!("other".parse::<Method>().is_err());
    }
}
