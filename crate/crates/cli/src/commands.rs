use std::path::{Path, PathBuf};
use std::time::Instant;

use combres::divergence::{reachable_divergence_seeded, witness_check, WitnessCheck};
use combres::optimizer::{estimate_monotone_seeded, Objective, OptimResult, OptimizerConfig};
use combres::quantifiers::{non_markovianity, total_info};
use combres::scenarios::{build_counterexample, build_planted, build_random, ScenarioKind, ScenarioSpec};
use combres::{Channel, ControlComb, ProcessTensor, QuantifierReport, SlotStructure};
use serde::Serialize;

use crate::error::CliError;
use crate::files::{self, read_comb, read_json, read_process, sibling, write_comb, write_json, write_process};
use crate::{Command, ComposeMode, OptimizerArgs, Suite};

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Build { spec, seed, out, comb_out } => build(&spec, seed, &out, comb_out.as_deref()),
        Command::Quantify { process, coarse_grain, out } => quantify(&process, coarse_grain.as_deref(), out.as_deref()),
        Command::Optimize { process, opt, warm_starts, out } => optimize(&process, &opt, &warm_starts, &out),
        Command::Divergence { process, against, opt, reference_dim, out } => {
            divergence(&process, against.as_deref(), &opt, reference_dim, &out)
        }
        Command::Compose { first, second, mode, out } => compose(&first, &second, mode, &out),
        Command::Verify { suite, seed, out } => verify(suite, seed, out.as_deref()),
        Command::Report { process, opt, out } => report(&process, &opt, &out),
    }
}

#[derive(Debug, Default, Serialize)]
struct Inputs {
    files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<ScenarioSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<OptimizerConfig>,
    coarse_grained: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_dim: Option<usize>,
}

#[derive(Debug, Serialize)]
struct OptimSummary {
    objective: Objective,
    best_value: f64,
    converged: bool,
    sweeps: usize,
    best_start: usize,
    start_values: Vec<f64>,
    witness: QuantifierReport,
    witness_file: String,
}

#[derive(Debug, Serialize)]
struct DivergenceSummary {
    against: String,
    /// `None` when the divergence is infinite.
    value: Option<f64>,
    infinite: bool,
    samples_evaluated: usize,
    witness_file: String,
}

#[derive(Debug, Serialize)]
struct Report {
    schema_version: u32,
    command: &'static str,
    inputs: Inputs,
    #[serde(skip_serializing_if = "Option::is_none")]
    quantifiers: Option<QuantifierReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    optimizations: Vec<OptimSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    divergences: Vec<DivergenceSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    witness_checks: Vec<WitnessCheck>,
    wall_clock_seconds: f64,
    seed: u64,
}

impl Report {
    fn new(command: &'static str, inputs: Inputs, seed: u64) -> Self {
        Self {
            schema_version: files::SCHEMA_VERSION,
            command,
            inputs,
            quantifiers: None,
            optimizations: Vec::new(),
            divergences: Vec::new(),
            witness_checks: Vec::new(),
            wall_clock_seconds: 0.0,
            seed,
        }
    }

    fn emit(mut self, started: Instant, out: Option<&Path>) -> Result<(), CliError> {
        self.wall_clock_seconds = started.elapsed().as_secs_f64();
        match out {
            Some(path) => write_json(path, &self),
            None => {
                println!("{}", serde_json::to_string_pretty(&self).expect("serializable"));
                Ok(())
            }
        }
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| display(path), |s| s.to_string_lossy().into_owned())
}

/// `all`, `none` or a comma-separated list of time names and indices.
fn parse_times(slots: &SlotStructure, spec: &str) -> Result<Vec<usize>, CliError> {
    let n = slots.n_slots();
    let spec = spec.trim();
    match spec {
        "all" => return Ok((1..=n).collect()),
        "none" | "" => return Ok(Vec::new()),
        _ => {}
    }
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim) {
        let k = match item.parse::<usize>() {
            Ok(k) if (1..=n).contains(&k) => k,
            Ok(k) => return Err(CliError::Input(format!("intermediate index {k} outside 1..={n}"))),
            Err(_) => slots.resolve_intermediate(&[item]).map_err(CliError::input)?[0],
        };
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Defaults, then `--config`, then the individual flags.
fn resolve_config(args: &OptimizerArgs, slots: &SlotStructure) -> Result<OptimizerConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => read_json::<OptimizerConfig>(path)?,
        None => OptimizerConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(restarts) = args.restarts {
        cfg.restarts = restarts;
    }
    if let Some(tol) = args.tol {
        cfg.rel_tol = tol;
    }
    if let Some(objective) = &args.objective {
        cfg.objective = objective.parse().map_err(CliError::input)?;
    }
    let n = slots.n_slots();
    let resolution = args.resolution.as_deref().map(|s| parse_times(slots, s)).transpose()?;
    let kept_by_mask = args
        .coarse_grain
        .as_deref()
        .map(|s| parse_times(slots, s))
        .transpose()?
        .map(|mask| (1..=n).filter(|k| !mask.contains(k)).collect::<Vec<_>>());
    match (resolution, kept_by_mask) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Input(
                "--resolution and --coarse-grain select different times".into(),
            ))
        }
        (Some(keep), _) | (None, Some(keep)) => cfg.target_resolution = keep,
        (None, None) => {}
    }
    cfg.validate(n).map_err(CliError::input)?;
    Ok(cfg)
}

fn summarize(r: &OptimResult<f64>, objective: Objective, witness_file: &Path) -> OptimSummary {
    OptimSummary {
        objective,
        best_value: r.best_value,
        converged: r.converged,
        sweeps: r.trace.len().saturating_sub(1),
        best_start: r.best_start,
        start_values: r.start_values.clone(),
        witness: r.report,
        witness_file: file_name(witness_file),
    }
}

fn build(spec_path: &Path, seed: Option<u64>, out: &Path, comb_out: Option<&Path>) -> Result<(), CliError> {
    let mut spec: ScenarioSpec = read_json(spec_path)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    spec.validate().map_err(CliError::input)?;
    match comb_out {
        Some(comb_path) => {
            let (t, z) = build_planted::<f64>(&spec).map_err(CliError::input)?;
            write_process(out, &t)?;
            write_comb(comb_path, &z)
        }
        None => write_process(out, &build_random::<f64>(&spec).map_err(CliError::input)?),
    }
}

fn quantify(path: &Path, coarse_grain: Option<&str>, out: Option<&Path>) -> Result<(), CliError> {
    let started = Instant::now();
    let t = read_process(path)?;
    let drop = coarse_grain.map(|s| parse_times(t.slots(), s)).transpose()?.unwrap_or_default();
    let t = t.coarse_grain_indices(&drop).map_err(CliError::input)?;
    let inputs = Inputs {
        files: vec![display(path)],
        coarse_grained: drop,
        ..Inputs::default()
    };
    let mut report = Report::new("quantify", inputs, 0);
    report.quantifiers = Some(QuantifierReport::of(&t).map_err(CliError::numerical)?);
    report.emit(started, out)
}

fn optimize(path: &Path, args: &OptimizerArgs, warm: &[PathBuf], out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let t = read_process(path)?;
    let cfg = resolve_config(args, t.slots())?;
    let seeds = warm.iter().map(|p| read_comb(p)).collect::<Result<Vec<_>, _>>()?;
    let result = estimate_monotone_seeded(&t, &cfg, &seeds).map_err(CliError::numerical)?;
    let comb_path = sibling(out, "comb");
    let mut inputs = Inputs {
        files: vec![display(path)],
        coarse_grained: cfg.mask(t.n_slots()),
        config: Some(cfg.clone()),
        ..Inputs::default()
    };
    inputs.files.extend(warm.iter().map(|p| display(p)));
    let mut report = Report::new("optimize", inputs, cfg.seed);
    report.optimizations.push(summarize(&result, cfg.objective, &comb_path));
    write_comb(&comb_path, &result.best_comb)?;
    report.emit(started, Some(out))
}

fn divergence(
    path: &Path,
    against: Option<&Path>,
    args: &OptimizerArgs,
    reference_dim: usize,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let t = read_process(path)?;
    let cfg = resolve_config(args, t.slots())?;
    if !cfg.target_resolution.is_empty() {
        return Err(CliError::Input(
            "the reachable divergence coarse-grains every intermediate time".into(),
        ));
    }
    if reference_dim == 0 {
        return Err(CliError::Input("--reference-dim must be at least 1".into()));
    }
    let (r, against_name) = match against {
        Some(p) => (read_process(p)?, display(p)),
        None => (t.full_marginal(), "full_marginal".to_string()),
    };
    let d = reachable_divergence_seeded(&t, &r, &cfg, reference_dim, &[]).map_err(|e| match e {
        combres::Error::DimensionMismatch(_) => CliError::input(e),
        e => CliError::numerical(e),
    })?;
    let comb_path = sibling(out, "comb");
    let mut inputs = Inputs {
        files: vec![display(path)],
        coarse_grained: (1..=t.n_slots()).collect(),
        config: Some(cfg.clone()),
        reference_dim: Some(reference_dim),
        ..Inputs::default()
    };
    inputs.files.extend(against.map(display));
    let mut report = Report::new("divergence", inputs, cfg.seed);
    report.divergences.push(DivergenceSummary {
        against: against_name,
        value: d.value.finite(),
        infinite: d.value.is_infinite(),
        samples_evaluated: d.samples_evaluated,
        witness_file: file_name(&comb_path),
    });
    write_comb(&comb_path, &d.witness)?;
    report.emit(started, Some(out))
}

fn compose(first: &Path, second: &Path, mode: ComposeMode, out: &Path) -> Result<(), CliError> {
    let (a, b) = (read_process(first)?, read_process(second)?);
    let joint = match mode {
        ComposeMode::Seq => a.compose_sequential(&b),
        ComposeMode::Par => a.compose_parallel(&b),
    }
    .map_err(CliError::input)?;
    write_process(out, &joint)
}

fn report(path: &Path, args: &OptimizerArgs, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let t = read_process(path)?;
    let cfg = resolve_config(args, t.slots())?;
    let mut report = Report::new(
        "report",
        Inputs {
            files: vec![display(path)],
            coarse_grained: cfg.mask(t.n_slots()),
            config: Some(cfg.clone()),
            ..Inputs::default()
        },
        cfg.seed,
    );
    report.quantifiers = Some(QuantifierReport::of(&t).map_err(CliError::numerical)?);
    let mut combs: Vec<(PathBuf, ControlComb<f64>)> = Vec::new();
    let mut witnesses = Vec::new();
    for (objective, tag) in [
        (Objective::TotalInfo, "total_info"),
        (Objective::MarkovInfo, "markov_info"),
        (Objective::NonMarkovianity, "non_markovianity"),
    ] {
        let r = estimate_monotone_seeded(&t, &cfg.clone().with_objective(objective), &[])
            .map_err(CliError::numerical)?;
        let comb_path = sibling(out, &format!("{tag}.comb"));
        report.optimizations.push(summarize(&r, objective, &comb_path));
        if objective != Objective::NonMarkovianity {
            witnesses.push(r.best_comb.clone());
        }
        combs.push((comb_path, r.best_comb));
    }
    let full = cfg.clone().with_resolution(Vec::new());
    let seeds: &[ControlComb<f64>] = if cfg.target_resolution.is_empty() { &witnesses } else { &[] };
    let d = reachable_divergence_seeded(&t, &t.full_marginal(), &full, 1, seeds).map_err(CliError::numerical)?;
    let comb_path = sibling(out, "divergence.comb");
    report.divergences.push(DivergenceSummary {
        against: "full_marginal".into(),
        value: d.value.finite(),
        infinite: d.value.is_infinite(),
        samples_evaluated: d.samples_evaluated,
        witness_file: file_name(&comb_path),
    });
    let mut checked: Vec<&ControlComb<f64>> = seeds.iter().collect();
    checked.push(&d.witness);
    report.witness_checks = checked
        .into_iter()
        .map(|y| witness_check(&t, y))
        .collect::<combres::Result<_>>()
        .map_err(CliError::numerical)?;
    combs.push((comb_path, d.witness));
    for (p, z) in &combs {
        write_comb(p, z)?;
    }
    report.emit(started, Some(out))
}

#[derive(Debug, Serialize)]
struct VerifySummary {
    suite: Suite,
    seed: u64,
    cases: usize,
    worst: f64,
    tolerance: f64,
    passed: bool,
}

fn verify(suite: Suite, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let (cases, worst, tolerance) = match suite {
        Suite::Identity => verify_identity(seed),
        Suite::Markov => verify_markov(seed),
        Suite::Counterexample => verify_counterexample(),
        Suite::Composition => verify_composition(seed),
    }
    .map_err(CliError::numerical)?;
    let summary = VerifySummary {
        suite,
        seed,
        cases,
        worst,
        tolerance,
        passed: worst <= tolerance,
    };
    match out {
        Some(p) => write_json(p, &summary)?,
        None => println!("{}", serde_json::to_string_pretty(&summary).expect("serializable")),
    }
    if summary.passed {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "suite {suite:?}: worst deviation {worst:e} exceeds {tolerance:e}"
        )))
    }
}

type SuiteOutcome = combres::Result<(usize, f64, f64)>;

fn verify_identity(seed: u64) -> SuiteOutcome {
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let spec = ScenarioSpec::new(ScenarioKind::HaarRandomEnv)
            .with_slots((k % 3) as usize)
            .with_dims(2, 2 + (k % 3) as usize)
            .with_seed(seed.wrapping_add(k));
        let t = build_random::<f64>(&spec)?;
        worst = worst.max(QuantifierReport::of(&t)?.identity_defect);
    }
    Ok((100, worst, 1e-8))
}

fn verify_markov(seed: u64) -> SuiteOutcome {
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let spec = ScenarioSpec::new(ScenarioKind::MarkovRandom)
            .with_slots(1 + (k % 2) as usize)
            .with_seed(seed.wrapping_add(k));
        worst = worst.max(non_markovianity(&build_random::<f64>(&spec)?)?.abs());
    }
    Ok((50, worst, 1e-9))
}

fn verify_counterexample() -> SuiteOutcome {
    let t = build_counterexample::<f64>();
    let i = total_info(&t)?;
    let cg = total_info(&t.coarse_grain_all())?;
    let n = non_markovianity(&t)?;
    let worst = (i - 1.0).abs().max((cg - 2.0).abs());
    // A vanishing N counts as a failure.
    let worst = if n > 1e-3 { worst } else { f64::INFINITY };
    Ok((1, worst, 1e-8))
}

fn verify_composition(seed: u64) -> SuiteOutcome {
    let mut worst = 0.0f64;
    let haar = |n: usize, env: usize, s: u64| {
        build_random::<f64>(
            &ScenarioSpec::new(ScenarioKind::HaarRandomEnv)
                .with_slots(n)
                .with_dims(2, env)
                .with_seed(s),
        )
    };
    for k in 0..20u64 {
        let t = haar((k % 2) as usize, 2, seed.wrapping_add(2 * k))?;
        let s = haar(((k / 2) % 2) as usize, 3, seed.wrapping_add(2 * k + 1))?;
        let sum = total_info(&t)? + total_info(&s)?;
        worst = worst.max((total_info(&t.compose_sequential(&s)?)? - sum).abs());
        if t.n_slots() == s.n_slots() {
            worst = worst.max((total_info(&t.compose_parallel(&s)?)? - sum).abs());
        }
    }
    let id = ProcessTensor::from_markov_channels(&[Channel::<f64>::identity(2)])?;
    worst = worst.max((total_info(&id.compose_parallel(&id)?)? - 4.0).abs());
    Ok((21, worst, 1e-8))
}
