use std::fs;
use std::path::Path;
use std::time::Instant;

use s3w::distance::{evaluate, EmpiricalMeasure, Method, MethodParams, S3WConfig};
use s3w::eval::{
    bench_runtime, distortion_study, eps_stability_study, evolution_study, BenchConfig, BenchSweep, EvolutionKind,
    StudyReport, StudySettings,
};
use s3w::grad::{run_flow, run_flow_from, FlowConfig, OptimizerKind, ParticleCloud, Retraction, RotationSchedule};
use s3w::io::{format_cloud, write_cloud, WeightColumn};
use s3w::ot1d::Order;
use s3w::rng::{derive_seed_tagged, rng_from_seed};
use s3w::sphere::{build_pool, CapEps};
use serde_json::{json, Value};

use crate::generators::{Generator, Input};
use crate::grid::{parse_grid, parse_int_grid};
use crate::{
    BenchArgs, CliError, DistArgs, FlowArgs, Globals, OptimizerArg, RetractionArg, SampleArgs, StudyArgs, StudyKind,
    WeightMode,
};

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::usage(format!("{}: {e}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("json serializes");
    text.push('\n');
    write_text(path, &text)
}

fn required<'a>(v: &'a Option<String>, what: &str) -> Result<&'a str, CliError> {
    v.as_deref().ok_or_else(|| CliError::usage(format!("missing {what}")))
}

fn weight_column(m: WeightMode) -> WeightColumn {
    match m {
        WeightMode::Auto => WeightColumn::Auto,
        WeightMode::Present => WeightColumn::Present,
        WeightMode::Absent => WeightColumn::Absent,
    }
}

pub fn dist(g: &Globals, a: &DistArgs, resolved: Value) -> Result<(), CliError> {
    let input_a = Input::parse(required(&a.a, "--a")?)?;
    let input_b = Input::parse(required(&a.b, "--b")?)?;
    let seeds = json!({
        "a": derive_seed_tagged(g.seed, "a"),
        "b": derive_seed_tagged(g.seed, "b"),
        "method": derive_seed_tagged(g.seed, "method"),
        "pool": derive_seed_tagged(g.seed, "pool"),
    });
    let wc = weight_column(a.weights);
    let mu = input_a.load(derive_seed_tagged(g.seed, "a"), wc)?;
    let nu = input_b.load(derive_seed_tagged(g.seed, "b"), wc)?;
    if mu.dim() != nu.dim() {
        return Err(CliError::usage(format!(
            "dimension mismatch: --a lives on S^{} and --b on S^{}",
            mu.dim(),
            nu.dim()
        )));
    }
    let cfg = S3WConfig::new(a.p, a.n_projections, a.eps)?
        .with_seed(g.seed)
        .with_reused_projections(a.reuse_projections);
    let params = MethodParams { n_rotations: a.rotations, pool_size: a.pool, candidates: a.candidates };
    let pool = if a.method == Method::AriS3w {
        Some(build_pool(mu.dim(), a.pool, &mut rng_from_seed(derive_seed_tagged(g.seed, "pool")))?)
    } else {
        None
    };
    let start = Instant::now();
    let mut rng = rng_from_seed(derive_seed_tagged(g.seed, "method"));
    let value = evaluate(a.method, &mu, &nu, &cfg, &params, pool.as_ref(), &mut rng)?;
    let wall = start.elapsed().as_secs_f64();
    println!("{value:.16e}");
    ensure_dir(&g.out)?;
    let record = json!({
        "method": a.method.name(),
        "value": value,
        "config": resolved,
        "seed": g.seed,
        "seeds": seeds,
        "wall_seconds": if g.timings { json!(wall) } else { Value::Null },
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_json(&g.out.join("dist.json"), &record)
}

fn parse_schedule(s: &str) -> Result<RotationSchedule, CliError> {
    let bad = || CliError::usage(format!("--rot-schedule expects from:to, got `{s}`"));
    let (from, to) = s.split_once(':').ok_or_else(bad)?;
    let from = from.trim().parse().map_err(|_| bad())?;
    let to = to.trim().parse().map_err(|_| bad())?;
    Ok(RotationSchedule::Linear { from, to })
}

pub fn flow(g: &Globals, a: &FlowArgs, resolved: Value) -> Result<(), CliError> {
    let target_seed = derive_seed_tagged(g.seed, "target");
    let flow_seed = derive_seed_tagged(g.seed, "flow");
    let init_seed = derive_seed_tagged(g.seed, "init");
    let input = Input::parse(&a.target)?;
    let target = input.load(target_seed, WeightColumn::Auto)?;
    let density = input.density().filter(|m| m.dim() == 2 && target.dim() == 2);
    let rotations = match &a.rot_schedule {
        Some(s) => parse_schedule(s)?,
        None => RotationSchedule::Fixed(a.rotations),
    };
    let cfg = FlowConfig {
        loss: a.loss,
        p: Order::new(a.p)?,
        n_projections: a.n_projections,
        eps: CapEps::new(a.eps)?,
        rotations,
        pool_size: a.pool,
        steps: a.steps,
        lr: a.lr,
        batch: a.batch,
        optimizer: match a.optimizer {
            OptimizerArg::Adam => OptimizerKind::Adam,
            OptimizerArg::Sgd => OptimizerKind::Sgd,
        },
        retraction: match a.retraction {
            RetractionArg::Normalize => Retraction::Normalize,
            RetractionArg::ExpMap => Retraction::ExpMap,
        },
        seed: flow_seed,
        n_particles: a.particles,
        eval_every: a.eval_every,
        eval_subsample: (a.eval_subsample > 0).then_some(a.eval_subsample),
    };
    let trace = match &a.init {
        None => run_flow(&cfg, &target, density.as_ref())?,
        Some(spec) => {
            let init = Input::parse(spec)?.load(init_seed, WeightColumn::Auto)?;
            if !init.is_uniform() {
                return Err(CliError::usage("--init must be a uniformly weighted cloud"));
            }
            run_flow_from(&cfg, ParticleCloud::from_measure(&init), &target, density.as_ref())?
        }
    };
    ensure_dir(&g.out)?;
    write_text(&g.out.join("trace.csv"), &trace.to_csv(g.timings))?;
    write_cloud(&g.out.join("final_cloud.csv"), &trace.final_cloud.to_measure())?;
    let last = trace.final_row();
    let mut meta = json!({
        "command": "flow",
        "config": resolved,
        "flow_config": serde_json::to_value(&cfg).expect("config serializes"),
        "seeds": { "global": g.seed, "target": target_seed, "flow": flow_seed, "init": init_seed },
        "target_points": target.len(),
        "summary": {
            "steps": trace.rows.len(),
            "final_loss": last.map(|r| r.loss),
            "final_log_w2": trace.final_log_w2(),
            "final_nll": last.and_then(|r| r.nll),
            "skipped_particles": trace.skipped,
            "sort_ties": trace.ties,
            "capped_evaluations": trace.capped,
        },
        "version": env!("CARGO_PKG_VERSION"),
    });
    if g.timings {
        meta["timings"] = json!({
            "pool_seconds": trace.pool_seconds,
            "step_seconds": last.map(|r| r.seconds),
        });
    }
    write_json(&g.out.join("meta.json"), &meta)?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.16e}"));
    println!(
        "steps {}  loss {}  log_w2 {}  nll {}",
        trace.rows.len(),
        fmt(last.map(|r| r.loss)),
        fmt(trace.final_log_w2()),
        fmt(last.and_then(|r| r.nll))
    );
    Ok(())
}

fn evolution_kind(k: StudyKind) -> Option<EvolutionKind> {
    Some(match k {
        StudyKind::Kappa => EvolutionKind::Kappa,
        StudyKind::Angle => EvolutionKind::Angle,
        StudyKind::Projections => EvolutionKind::Projections,
        StudyKind::Rotations => EvolutionKind::Rotations,
        StudyKind::Pool => EvolutionKind::Pool,
        StudyKind::Samples => EvolutionKind::Samples,
        StudyKind::Distortion | StudyKind::Eps => return None,
    })
}

fn apply_overrides(mut s: StudySettings, a: &StudyArgs) -> StudySettings {
    if let Some(m) = &a.methods {
        s.methods = m.clone();
    }
    if let Some(v) = a.reps {
        s.reps = v;
    }
    if let Some(v) = a.n {
        s.n_samples = v;
    }
    if let Some(v) = a.n_projections {
        s.n_projections = v;
    }
    if let Some(v) = a.rotations {
        s.n_rotations = v;
    }
    if let Some(v) = a.pool {
        s.pool_size = v;
    }
    if let Some(v) = a.kappa {
        s.kappa = v;
    }
    if let Some(v) = a.d {
        s.d = v;
    }
    if let Some(v) = a.p {
        s.p = v;
    }
    if let Some(v) = a.eps {
        s.eps = v;
    }
    s
}

fn print_summary(r: &StudyReport) {
    let mut header = r.param_names.join("\t");
    header.push_str("\treps\tmean\tstd");
    println!("{header}");
    for c in &r.cells {
        let params: Vec<String> = c.params.iter().map(ToString::to_string).collect();
        let std = c.std().map_or_else(String::new, |s| format!("{s:.16e}"));
        println!("{}\t{}\t{:.16e}\t{}", params.join("\t"), c.values.len(), c.mean(), std);
    }
}

fn write_report(g: &Globals, stem: &str, report: &StudyReport, resolved: Value) -> Result<(), CliError> {
    ensure_dir(&g.out)?;
    write_text(&g.out.join(format!("{stem}.csv")), &report.to_csv())?;
    let mut side = report.sidecar();
    side["config"] = resolved;
    write_json(&g.out.join(format!("{stem}.json")), &side)
}

pub fn study(g: &Globals, a: &StudyArgs, resolved: Value) -> Result<(), CliError> {
    let kind = a.kind.ok_or_else(|| CliError::usage("missing study kind"))?;
    let grid = a.grid.as_deref().map(parse_grid).transpose().map_err(CliError::usage)?;
    let mut rng = rng_from_seed(derive_seed_tagged(g.seed, "study"));
    let report = match kind {
        StudyKind::Distortion => distortion_study(a.pairs, a.reps.unwrap_or(1), &mut rng)?,
        StudyKind::Eps => {
            let grid = grid.unwrap_or_else(|| parse_grid("1e-6:1e-1:log:6").expect("default grid"));
            eps_stability_study(&grid, &apply_overrides(StudySettings::eps_default(), a), &mut rng)?
        }
        k => {
            let kind = evolution_kind(k).expect("evolution kinds");
            let grid = grid.unwrap_or_else(|| kind.default_grid());
            let settings = apply_overrides(StudySettings::evolution_default(kind), a);
            evolution_study(kind, &grid, &settings, &mut rng)?
        }
    };
    print_summary(&report);
    write_report(g, &format!("study_{}", report.study), &report, resolved)
}

pub fn bench(g: &Globals, a: &BenchArgs, resolved: Value) -> Result<(), CliError> {
    let parse = |v: &Option<String>, default: &str| parse_int_grid(v.as_deref().unwrap_or(default)).map_err(CliError::usage);
    let n_default = if a.n_projections.as_deref().is_some_and(|s| parse_int_grid(s).is_ok_and(|g| g.len() > 1))
        || a.rotations.as_deref().is_some_and(|s| parse_int_grid(s).is_ok_and(|g| g.len() > 1))
    {
        "500"
    } else {
        "100:3000:6"
    };
    let ns = parse(&a.n, n_default)?;
    let ls = parse(&a.n_projections, "200")?;
    let rs = parse(&a.rotations, "10")?;
    let swept: Vec<(BenchSweep, &Vec<usize>)> =
        [(BenchSweep::Samples, &ns), (BenchSweep::Projections, &ls), (BenchSweep::Rotations, &rs)]
            .into_iter()
            .filter(|(_, g)| g.len() > 1)
            .collect();
    if swept.len() > 1 {
        return Err(CliError::usage("only one of --N, --L and --rotations may be a grid"));
    }
    let (sweep, grid) = swept.first().map_or((BenchSweep::Samples, ns.clone()), |(s, g)| (*s, (*g).clone()));
    let cfg = BenchConfig {
        methods: a.methods.clone(),
        sweep,
        grid,
        d: a.d,
        n_samples: ns[0],
        n_projections: ls[0],
        n_rotations: rs[0],
        pool_size: a.pool,
        kappa: a.kappa,
        reps: a.reps,
        p: a.p,
        eps: a.eps,
    };
    let report = bench_runtime(&cfg, &mut rng_from_seed(derive_seed_tagged(g.seed, "bench")))?;
    println!("method\t{}\tmedian_seconds", sweep.name());
    for c in &report.cells {
        println!("{}\t{}\t{:.6e}", c.params[0], c.params[1], c.median());
    }
    write_report(g, "bench", &report, resolved)
}

pub fn sample(g: &Globals, a: &SampleArgs) -> Result<(), CliError> {
    let spec = required(&a.spec, "generator spec")?;
    let gen = Generator::parse(spec)?;
    let m = EmpiricalMeasure::uniform(&gen.sample(derive_seed_tagged(g.seed, "sample"))?)?;
    match &a.file {
        Some(path) => write_cloud(path, &m)?,
        None => print!("{}", format_cloud(&m)),
    }
    Ok(())
}
