use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use qzone::decomposition::rank_indices;
use qzone::engine::{
    initialize, run_classical_baseline, run_direct, run_hybrid, HybridConfig, RunTrajectory, Selection,
};
use qzone::experiment::{run_method, CompareConfig, ComparisonReport, Method, MethodRun};
use qzone::render::{render_impacts, render_partition, ImageFormat, RenderSpec, Rgb};
use qzone::subsolvers::{external, SolverKind, SolverParams, SubSolverConfig};
use qzone::zoning::{balance_targets, build_qubo, generate_instance, read_instance, write_instance, SolutionFile};
use qzone::{Assignment, QuboModel, TrafficInstance};
use rayon::prelude::*;
use serde_json::json;

use crate::args::*;

pub const EXTERNAL_ENV: &str = "QZONE_EXTERNAL_SOLVER";

/// Every iteration of a run hit a subsolver error.
#[derive(Debug)]
pub struct SolverFailure(pub String);

impl std::fmt::Display for SolverFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SolverFailure {}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Compare(a) => compare(a),
        Command::Render(a) => render(a),
        Command::Impacts(a) => impacts(a),
        Command::Backend(a) => backend(a),
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path) -> Result<(TrafficInstance, QuboModel)> {
    let instance = read_instance(path)?;
    let model = build_qubo(&instance)?;
    Ok((instance, model))
}

fn gen(a: GenArgs) -> Result<()> {
    let instance = generate_instance(a.rows, a.cols, a.attrs, a.seed)?.with_lambda(a.lambda)?;
    write_instance(&instance, &a.out)?;
    let targets: Vec<String> = balance_targets(&instance).iter().map(|t| format!("{t:.6}")).collect();
    println!("wrote {}", a.out.display());
    println!("zones: {}", instance.num_zones());
    println!("edges: {}", instance.edges().len());
    println!("targets T_k: [{}]", targets.join(", "));
    Ok(())
}

fn solver_params(opts: &SolverOpts, kind: SolverKind) -> Result<SolverParams> {
    let command = opts.external_cmd.clone().or_else(|| std::env::var(EXTERNAL_ENV).ok());
    let external_command: Vec<String> = command
        .as_deref()
        .unwrap_or("")
        .split_whitespace()
        .map(str::to_string)
        .collect();
    if kind == SolverKind::External && external_command.is_empty() {
        bail!("the external subsolver needs --external-cmd or {EXTERNAL_ENV}");
    }
    if opts.external_timeout == 0 {
        bail!("--external-timeout must be at least 1 second");
    }
    Ok(SolverParams {
        exact_cap: opts.exact_cap,
        external_command,
        external_timeout: Duration::from_secs(opts.external_timeout),
        ..SolverParams::default()
    })
}

fn solve(a: SolveArgs) -> Result<()> {
    let (instance, model) = load(&a.instance)?;
    let method = Method::from(a.method);
    let kind = SolverKind::from(a.subsolver);
    let mut sub = SubSolverConfig::new(kind, a.seed);
    sub.params = solver_params(&a.solver, kind)?;
    if let Some(b) = a.budget {
        sub.budget = b;
    }
    let warm_start = match &a.warm_start {
        Some(p) => Some(SolutionFile::read(p)?.assignment),
        None => None,
    };
    let config = HybridConfig {
        q: a.q,
        selection: match method {
            Method::BaselineRandom => Selection::Random,
            Method::BaselineRoundRobin => Selection::RoundRobin,
            _ => Selection::Impact,
        },
        ranking: a.ranking.into(),
        subsolver: sub.clone(),
        max_iterations: a.max_iters,
        patience: a.patience,
        init: a.init.into(),
        seed: a.seed,
        warm_start,
        ..HybridConfig::default()
    };

    let started = Instant::now();
    let trajectory = match method {
        Method::Direct => run_direct(&model, &sub)?,
        Method::Hybrid => run_hybrid(&model, &config)?,
        Method::BaselineRandom | Method::BaselineRoundRobin => run_classical_baseline(&model, &config)?,
    };
    let wall = started.elapsed().as_secs_f64();
    if trajectory.iterations.iter().all(|r| r.failed) {
        return Err(SolverFailure(format!("the {kind} subsolver failed on every iteration")).into());
    }

    let partition = &trajectory.final_partition;
    let solution = SolutionFile::new(partition, method.as_str(), Some(a.seed), trajectory.iterations.len());
    let paths = OutputPaths::new(&a.out_prefix);
    solution.write(&paths.solution)?;
    let mut csv = Vec::new();
    trajectory.write_csv(&mut csv)?;
    write_file(&paths.trajectory, csv)?;
    let summary = summary_json(&instance, method, &config, &trajectory, wall);
    write_file(&paths.summary, serde_json::to_string_pretty(&summary)? + "\n")?;

    println!("method: {method}");
    println!("final objective: {}", partition.objective);
    println!("termination: {}", trajectory.termination_reason);
    println!("iterations: {}", trajectory.iterations.len());
    println!("cut edges: {}", instance.cut_edges(&partition.assignment).len());
    println!(
        "wrote {}, {}, {}",
        paths.solution.display(),
        paths.trajectory.display(),
        paths.summary.display()
    );
    Ok(())
}

pub struct OutputPaths {
    pub solution: PathBuf,
    pub trajectory: PathBuf,
    pub summary: PathBuf,
}

impl OutputPaths {
    pub fn new(prefix: &str) -> Self {
        Self {
            solution: format!("{prefix}.solution.json").into(),
            trajectory: format!("{prefix}.trajectory.csv").into(),
            summary: format!("{prefix}.summary.json").into(),
        }
    }
}

fn summary_json(
    instance: &TrafficInstance,
    method: Method,
    config: &HybridConfig,
    t: &RunTrajectory,
    wall: f64,
) -> serde_json::Value {
    let x = &t.final_partition.assignment;
    let config_echo = match method {
        Method::Direct => json!({ "subsolver": config.subsolver }),
        _ => serde_json::to_value(config).expect("config serializes"),
    };
    json!({
        "method": method,
        "final_objective": t.final_partition.objective,
        "termination_reason": t.termination_reason,
        "iterations": t.iterations.len(),
        "accepted": t.iterations.iter().filter(|r| r.accepted).count(),
        "failed": t.iterations.iter().filter(|r| r.failed).count(),
        "subsolver_evaluations": t.total_evaluations(),
        "cut_edges": instance.cut_edges(x).len(),
        "region_sizes": [x.len() - x.count_ones(), x.count_ones()],
        "config": config_echo,
        "wall_time_seconds": wall,
    })
}

/// `"10"` is a count (seeds 0..=9); anything with a comma is an explicit list.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let spec = spec.trim();
    let seeds: Vec<u64> = if spec.contains(',') {
        spec.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<u64>()
                    .with_context(|| format!("seed `{s}` is not an integer"))
            })
            .collect::<Result<_>>()?
    } else {
        let count: u64 = spec
            .parse()
            .with_context(|| format!("--seeds `{spec}` is neither a count nor a list"))?;
        (0..count).collect()
    };
    if seeds.is_empty() {
        bail!("--seeds selects no seeds");
    }
    Ok(seeds)
}

fn compare(a: CompareArgs) -> Result<()> {
    let (_, model) = load(&a.instance)?;
    let kind = SolverKind::from(a.subsolver);
    let mut methods: Vec<Method> = a.methods.iter().map(|&m| m.into()).collect();
    methods.dedup();
    let config = CompareConfig {
        methods,
        seeds: parse_seeds(&a.seeds)?,
        budget: a.budget,
        q: a.q,
        max_iterations: a.max_iters,
        patience: a.patience,
        subsolver: kind,
        subsolver_params: solver_params(&a.solver, kind)?,
        ranking: a.ranking.into(),
        init: a.init.into(),
    };
    if config.budget == 0 || config.q == 0 || config.max_iterations == 0 || config.patience == 0 {
        bail!("--budget, --q, --max-iters and --patience must all be at least 1");
    }
    let n = model.num_vars();
    for &m in &config.methods {
        let hc = config.hybrid_config(m, 0, n);
        let size = if m == Method::Direct { n } else { hc.q.min(n) };
        if kind == SolverKind::Exact && size > hc.subsolver.params.exact_cap {
            bail!(qzone::Error::ExactTooLarge {
                num_vars: size,
                cap: hc.subsolver.params.exact_cap
            });
        }
    }

    let jobs: Vec<(Method, u64)> = config
        .methods
        .iter()
        .flat_map(|&m| config.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.threads).build()?;
    let runs: Vec<MethodRun> = pool.install(|| {
        jobs.par_iter()
            .map(|&(m, s)| run_method(&model, &config, m, s).map(|t| MethodRun::from_trajectory(m, s, &t)))
            .collect::<qzone::Result<_>>()
    })?;
    let report = ComparisonReport::from_runs(config, runs);

    let table = report.to_text();
    print!("{table}");
    for baseline in [Method::BaselineRandom, Method::BaselineRoundRobin] {
        if report.row(Method::Hybrid).is_some() && report.row(baseline).is_some() {
            println!(
                "hybrid below {baseline} on {}/{} seeds",
                report.wins(Method::Hybrid, baseline),
                report.config.seeds.len()
            );
        }
    }
    if let Some(p) = &a.text_out {
        write_file(p, &table)?;
    }
    if let Some(p) = &a.json_out {
        write_file(p, report.to_json())?;
    }
    Ok(())
}

fn pick_format(explicit: Option<FormatArg>, out: &Path) -> ImageFormat {
    match explicit {
        Some(f) => f.into(),
        None if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm")) => ImageFormat::Ppm,
        None => ImageFormat::Svg,
    }
}

fn parse_palette(s: &str) -> Result<[Rgb; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts[..] else {
        bail!("--palette needs two colours separated by a comma");
    };
    Ok([a.parse()?, b.parse()?])
}

fn render(a: RenderArgs) -> Result<()> {
    let instance = read_instance(&a.instance)?;
    let solution = SolutionFile::read(&a.solution)?;
    let mut spec = RenderSpec {
        cell_size: a.style.cell_size,
        show_boundary: !a.style.no_boundary,
        ..RenderSpec::default()
    };
    if let Some(p) = &a.style.palette {
        spec.palette = parse_palette(p)?;
    }
    let format = pick_format(a.format, &a.out);
    let image = render_partition(&instance, &solution.assignment, &spec, format)?;
    write_file(&a.out, image.into_bytes())?;
    println!(
        "wrote {} ({} cut edges)",
        a.out.display(),
        instance.cut_edges(&solution.assignment).len()
    );
    Ok(())
}

fn impacts(a: ImpactsArgs) -> Result<()> {
    let (instance, model) = load(&a.instance)?;
    if a.top == 0 {
        bail!("--top must be at least 1");
    }
    let x: Assignment = match (&a.solution, a.init) {
        (Some(p), _) => SolutionFile::read(p)?.assignment,
        (None, Some(init)) => initialize(
            &model,
            &HybridConfig {
                init: init.into(),
                seed: a.seed,
                ..HybridConfig::default()
            },
        )?,
        (None, None) => bail!("give either --solution or --init"),
    };
    let impacts = model.impact_vector(&x)?;
    let mut out = io::stdout().lock();
    writeln!(out, "objective: {}", model.evaluate(&x)?)?;
    writeln!(
        out,
        "{:>4} {:>6} {:>4} {:>4} {:>6} {:>16}",
        "rank", "zone", "row", "col", "x", "impact"
    )?;
    for (rank, &i) in rank_indices(&impacts, a.ranking.into()).iter().take(a.top).enumerate() {
        let (r, c) = instance.coords(i);
        writeln!(
            out,
            "{:>4} {:>6} {:>4} {:>4} {:>6} {:>16.9}",
            rank + 1,
            i,
            r,
            c,
            x[i] as u8,
            impacts[i]
        )?;
    }
    if let Some(p) = &a.heatmap {
        let spec = RenderSpec {
            cell_size: a.cell_size,
            ..RenderSpec::default()
        };
        let image = render_impacts(&instance, &impacts, &spec, pick_format(a.format, p))?;
        write_file(p, image.into_bytes())?;
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}

fn backend(a: BackendArgs) -> Result<()> {
    let kind = SolverKind::from(a.kind);
    if kind == SolverKind::External {
        bail!("a backend cannot itself use the external subsolver");
    }
    let mut config = SubSolverConfig::new(kind, a.seed);
    config.params.exact_cap = a.exact_cap;
    if let Some(b) = a.budget {
        config.budget = b;
    }
    external::serve(io::stdin().lock(), io::stdout().lock(), &config)?;
    Ok(())
}
