use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use dispatch_core::dne::{build_dne2, build_dne3, solve_dne, DneConfig, Formulation, KBudget};
use dispatch_core::model::{compute_shift_factors, load_case, PowerSystem, ShiftFactorMatrix};
use dispatch_core::obp::{build_obp2, solve_obp, ObpConfig};
use dispatch_core::robust::{master_problem, Scenario, DEFAULT_EPSILON};
use dispatch_core::sampling::{
    load_history, load_validation, select_samples, write_history, write_validation, HistoryRecord,
    ValidationRecord,
};
use dispatch_core::sim::{run_simulation, Method, PenaltySetting, SimReport, SimulationConfig};
use dispatch_core::solver::write_lp;
use dispatch_core::synthetic::{generate, SyntheticConfig};

use crate::manifest::RunManifest;
use crate::{DataArgs, DneArgs, Failure, FormulationArg, GenArgs, MethodArg, ObpArgs, RunArgs};

const DEFAULT_N_DNE: usize = 400;
const DEFAULT_N_OBP: usize = 20;
const DEFAULT_PERIODS: usize = 24;

fn merged(data: &DataArgs) -> Result<RunManifest, Failure> {
    let mut m = match &data.manifest {
        Some(p) => RunManifest::load(p).map_err(|e| Failure::Usage(format!("{e:#}")))?,
        None => RunManifest::default(),
    };
    if data.case.is_some() {
        m.case = data.case.clone();
    }
    if data.history.is_some() {
        m.history = data.history.clone();
    }
    if data.validation.is_some() {
        m.validation = data.validation.clone();
    }
    if let Some(n) = data.n_dne {
        m.n_dne = Some(n as usize);
    }
    if data.epsilon.is_some() {
        m.epsilon = data.epsilon;
    }
    if m.n_dne == Some(0) || m.n_obp == Some(0) {
        return Err(Failure::Usage("sample counts must be at least 1".into()));
    }
    if m.epsilon.is_some_and(|e| e.is_nan() || e <= 0.0) {
        return Err(Failure::Usage("epsilon must be positive".into()));
    }
    Ok(m)
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    p.as_deref()
        .ok_or_else(|| Failure::Usage(format!("--{flag} is required (or give it in --manifest)")))
}

struct Inputs {
    system: PowerSystem,
    sf: ShiftFactorMatrix,
    history: Vec<HistoryRecord>,
    validation: Vec<ValidationRecord>,
}

fn load_inputs(m: &RunManifest) -> Result<Inputs, Failure> {
    let case = required(&m.case, "case")?;
    let history = required(&m.history, "history")?;
    let validation = required(&m.validation, "validation")?;
    let system = load_case(case).with_context(|| format!("loading case {}", case.display()))?;
    let sf = compute_shift_factors(&system)?;
    let history = load_history(history, &system)
        .with_context(|| format!("loading history {}", history.display()))?;
    let validation = load_validation(validation, &system)
        .with_context(|| format!("loading validation series {}", validation.display()))?;
    Ok(Inputs {
        system,
        sf,
        history,
        validation,
    })
}

/// The upcoming period and the history strictly before it.
fn period_view(
    inputs: &Inputs,
    period: usize,
) -> Result<(&ValidationRecord, Vec<HistoryRecord>), Failure> {
    let rec = inputs.validation.get(period).ok_or_else(|| {
        Failure::Usage(format!(
            "--period {period} is out of range (validation series has {} records)",
            inputs.validation.len()
        ))
    })?;
    let pool: Vec<HistoryRecord> = inputs
        .history
        .iter()
        .filter(|h| h.timestamp < rec.timestamp)
        .cloned()
        .collect();
    if pool.is_empty() {
        return Err(Failure::Runtime(anyhow!(
            "no history records precede timestamp {}",
            rec.timestamp
        )));
    }
    Ok((rec, pool))
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn vrg_ids(system: &PowerSystem) -> Vec<String> {
    system.vrgs.iter().map(|v| v.id.clone()).collect()
}

fn print_limits(system: &PowerSystem, lower: &[f64], upper: &[f64]) {
    for (v, (l, u)) in system.vrgs.iter().zip(lower.iter().zip(upper)) {
        println!("  {:<8} lower {l:>10.3}  upper {u:>10.3}", v.id);
    }
}

pub fn dne(args: DneArgs) -> Result<(), Failure> {
    let m = merged(&args.data)?;
    let inputs = load_inputs(&m)?;
    let (rec, pool) = period_view(&inputs, args.period)?;
    let system = &inputs.system;
    let caps = system.vrg_capacities();
    let samples =
        select_samples(&pool, &rec.forecast, m.n_dne.unwrap_or(DEFAULT_N_DNE))?.clipped(&caps);
    let config = DneConfig {
        epsilon: m.epsilon.unwrap_or(DEFAULT_EPSILON),
        formulation: match args.formulation {
            FormulationArg::Extended => Formulation::Extended,
            FormulationArg::BigM => Formulation::BigM,
        },
        ..DneConfig::default()
    };
    let d = solve_dne(system, &inputs.sf, &samples, &rec.forecast, &config)?;
    let mut json = d.to_json();
    json["period"] = args.period.into();
    json["timestamp"] = rec.timestamp.into();
    json["vrg"] = vrg_ids(system).into();
    json["n_samples"] = samples.len().into();
    write_json(&args.out, &json)?;
    if args.emit_lp {
        let dp = match config.formulation {
            Formulation::BigM => build_dne2(system, &inputs.sf, &samples, &rec.forecast)?,
            Formulation::Extended => build_dne3(
                system,
                &inputs.sf,
                &samples,
                &rec.forecast,
                KBudget::new(d.k_used, samples.len())?,
            )?,
        };
        let master = master_problem(&dp.problem, &d.scenarios);
        write_lp(
            args.out.with_extension("lp"),
            &master.lp,
            Some(&master.integral),
        )?;
    }
    println!(
        "covered {}/{} samples (K = {}, {} C&CG iterations)",
        d.coverage_count,
        samples.len(),
        d.k_used,
        d.ccg_iterations
    );
    print_limits(system, &d.lower, &d.upper);
    Ok(())
}

fn read_limits(path: &Path, n: usize) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let field = |name: &str| -> anyhow::Result<Vec<f64>> {
        let xs: Vec<f64> = serde_json::from_value(v[name].clone()).with_context(|| {
            format!(
                "{}: field {name:?} must be a list of numbers",
                path.display()
            )
        })?;
        if xs.len() != n {
            return Err(anyhow!(
                "{}: {name:?} has {} entries, expected {n}",
                path.display(),
                xs.len()
            ));
        }
        Ok(xs)
    };
    Ok((field("lower")?, field("upper")?))
}

pub fn obp(args: ObpArgs) -> Result<(), Failure> {
    let m = merged(&args.data)?;
    let inputs = load_inputs(&m)?;
    let (rec, pool) = period_view(&inputs, args.period)?;
    let system = &inputs.system;
    let caps = system.vrg_capacities();
    let epsilon = m.epsilon.unwrap_or(DEFAULT_EPSILON);
    let (lower, upper) = match &args.limits {
        Some(p) => read_limits(p, caps.len())?,
        None => {
            let samples = select_samples(&pool, &rec.forecast, m.n_dne.unwrap_or(DEFAULT_N_DNE))?
                .clipped(&caps);
            let config = DneConfig {
                epsilon,
                ..DneConfig::default()
            };
            let d = solve_dne(system, &inputs.sf, &samples, &rec.forecast, &config)?;
            (d.lower, d.upper)
        }
    };
    let n_obp = args
        .n_obp
        .map(|n| n as usize)
        .or(m.n_obp)
        .unwrap_or(DEFAULT_N_OBP);
    let samples = select_samples(&pool, &rec.forecast, n_obp)?.clipped(&caps);
    let config = ObpConfig {
        epsilon,
        ..ObpConfig::default()
    };
    let d = solve_obp(
        system,
        &inputs.sf,
        &samples,
        &rec.forecast,
        &lower,
        &upper,
        &config,
    )?;
    let mut json = d.to_json();
    json["period"] = args.period.into();
    json["timestamp"] = rec.timestamp.into();
    json["lower"] = lower.clone().into();
    json["upper"] = upper.clone().into();
    json["units"] = system
        .units
        .iter()
        .map(|u| u.id.clone())
        .collect::<Vec<_>>()
        .into();
    write_json(&args.out, &json)?;
    if args.emit_lp {
        let op = build_obp2(system, &inputs.sf, &samples, &rec.forecast, &lower, &upper)?;
        let scenarios: Vec<Scenario> = d
            .trace
            .iterations
            .iter()
            .filter_map(|it| it.scenario.clone().map(|v| Scenario { v }))
            .collect();
        let master = master_problem(&op.problem, &scenarios);
        write_lp(
            args.out.with_extension("lp"),
            &master.lp,
            Some(&master.integral),
        )?;
    }
    println!(
        "expected cost {:.3} $/h over {} samples",
        d.expected_cost,
        samples.len()
    );
    for (u, p) in system.units.iter().zip(&d.base_obp) {
        println!("  {:<8} base point {p:>10.3}", u.id);
    }
    Ok(())
}

fn sim_config(
    args: &RunArgs,
    m: &RunManifest,
    method: Method,
    n_validation: usize,
) -> Result<SimulationConfig, Failure> {
    let horizon = match (&m.horizon, args.start, args.periods) {
        (Some(h), None, None) => h.clone(),
        _ => {
            let start = args.start.or(m.start).unwrap_or(0);
            let periods = args
                .periods
                .map(|p| p as usize)
                .or(m.periods)
                .unwrap_or(DEFAULT_PERIODS);
            (start..start + periods).collect()
        }
    };
    if horizon.is_empty() {
        return Err(Failure::Usage("the horizon is empty".into()));
    }
    if let Some(&bad) = horizon.iter().find(|&&t| t >= n_validation) {
        return Err(Failure::Usage(format!(
            "horizon index {bad} is out of range (validation series has {n_validation} records)"
        )));
    }
    let mut config = SimulationConfig::new(
        method,
        m.n_dne.unwrap_or(DEFAULT_N_DNE),
        args.n_obp
            .map(|n| n as usize)
            .or(m.n_obp)
            .unwrap_or(DEFAULT_N_OBP),
        horizon,
    );
    config.epsilon = m.epsilon.unwrap_or(DEFAULT_EPSILON);
    config.penalty = if args.strict {
        PenaltySetting::Strict
    } else if args.penalty {
        PenaltySetting::Penalized
    } else {
        m.penalty.unwrap_or(PenaltySetting::Penalized)
    };
    Ok(config)
}

fn method_of(args: &RunArgs, m: &RunManifest) -> Result<Method, Failure> {
    match (args.method, &m.method) {
        (Some(MethodArg::Proposed), _) => Ok(Method::Proposed),
        (Some(MethodArg::Odne), _) => Ok(Method::Odne),
        (None, Some(s)) => s
            .parse()
            .map_err(|e: dispatch_core::Error| Failure::Usage(e.to_string())),
        (None, None) => Ok(Method::Proposed),
    }
}

fn print_report(r: &SimReport) {
    println!(
        "{:<9} coverage {:>6.1}%  wind {:>10.1} MWh  avg cost {:>10.2} $/h  avg cpu {:.3} s  failures {}",
        r.method.name(),
        100.0 * r.coverage_rate,
        r.total_wind,
        r.avg_cost,
        r.avg_cpu,
        r.failures
    );
}

pub fn run(args: RunArgs) -> Result<(), Failure> {
    let m = merged(&args.data)?;
    let method = method_of(&args, &m)?;
    let inputs = load_inputs(&m)?;
    let config = sim_config(&args, &m, method, inputs.validation.len())?;
    let out = args
        .out
        .clone()
        .or(m.output_dir.clone())
        .unwrap_or_else(|| "out".into());
    let report = run_simulation(&inputs.system, &inputs.history, &inputs.validation, &config)?;
    report.write(&out, &inputs.system)?;
    print_report(&report);
    println!("wrote {}", out.display());
    Ok(())
}

pub fn compare(args: RunArgs) -> Result<(), Failure> {
    let m = merged(&args.data)?;
    let inputs = load_inputs(&m)?;
    let out = args
        .out
        .clone()
        .or(m.output_dir.clone())
        .unwrap_or_else(|| "out".into());
    let mut reports = Vec::new();
    for method in [Method::Proposed, Method::Odne] {
        let config = sim_config(&args, &m, method, inputs.validation.len())?;
        let report = run_simulation(&inputs.system, &inputs.history, &inputs.validation, &config)?;
        report.write(out.join(method.name()), &inputs.system)?;
        print_report(&report);
        reports.push(report);
    }
    let (p, o) = (&reports[0], &reports[1]);
    let violations: Vec<i64> = p
        .per_period
        .iter()
        .zip(&o.per_period)
        .filter(|(a, b)| a.in_sample_covered < b.in_sample_covered)
        .map(|(a, _)| a.period)
        .collect();
    let summary = serde_json::json!({
        "periods": p.per_period.len(),
        "coverage_rate": {"proposed": p.coverage_rate, "odne": o.coverage_rate},
        "total_wind": {"proposed": p.total_wind, "odne": o.total_wind},
        "avg_cost": {"proposed": p.avg_cost, "odne": o.avg_cost},
        "in_sample_dominance": violations.is_empty(),
        "dominance_violations": violations,
    });
    write_json(&out.join("comparison.json"), &summary)?;
    println!(
        "in-sample dominance {}",
        if violations.is_empty() {
            "holds in every period"
        } else {
            "VIOLATED"
        }
    );
    println!("wrote {}", out.display());
    Ok(())
}

pub fn gen_synthetic(args: GenArgs) -> Result<(), Failure> {
    let m = match &args.manifest {
        Some(p) => RunManifest::load(p).map_err(|e| Failure::Usage(format!("{e:#}")))?,
        None => RunManifest::default(),
    };
    let case = args.case.clone().or(m.case);
    let case = required(&case, "case")?;
    let out = args
        .out
        .clone()
        .or(m.output_dir)
        .unwrap_or_else(|| ".".into());
    let system = load_case(case).with_context(|| format!("loading case {}", case.display()))?;
    let config = SyntheticConfig {
        seed: args.seed.or(m.seed).unwrap_or(1),
        history_periods: args.history_periods,
        validation_periods: args.validation_periods,
        ar_coef: args.ar_coef,
        noise_scale: args.noise_scale,
        mean_level: args.mean_level,
        correlation: args.correlation,
        error_base: args.error_base,
        error_slope: args.error_slope,
    };
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let data = generate(&config, &system.vrg_capacities())?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let ids = vrg_ids(&system);
    let history = out.join("history.csv");
    let validation = out.join("validation.csv");
    write_history(&history, &ids, &data.history)?;
    write_validation(&validation, &ids, &data.validation)?;
    println!("wrote {} ({} rows)", history.display(), data.history.len());
    println!(
        "wrote {} ({} rows)",
        validation.display(),
        data.validation.len()
    );
    Ok(())
}
