use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use r2l_core::oracle::default_max_sweeps;
use r2l_core::*;

use crate::args::{EpsilonSchedule, Forbidden, Schedule};
use crate::config::Settings;
use crate::UsageError;

fn output_root(s: &Settings) -> PathBuf {
    s.raw("output_dir").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

/// Relative outputs land under the output root.
fn output_path(s: &Settings, path: &Path) -> PathBuf {
    let root = output_root(s);
    if path.is_relative() && root != Path::new(".") {
        root.join(path)
    } else {
        path.to_path_buf()
    }
}

/// Relative inputs are looked up in the working directory, then under the
/// output root (where earlier subcommands wrote them).
fn input_path(s: &Settings, key: &str) -> Result<PathBuf> {
    let path: PathBuf = s.require(key)?;
    if path.is_relative() && !path.exists() {
        let under = output_root(s).join(&path);
        if under.exists() {
            return Ok(under);
        }
    }
    Ok(path)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_to(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> r2l_core::Result<()>) -> Result<()> {
    let mut out = create(path)?;
    f(&mut out).with_context(|| format!("writing {}", path.display()))?;
    out.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes to `output` when given, otherwise to stdout.
fn emit(s: &Settings, text: &str) -> Result<()> {
    match s.get::<PathBuf>("output")? {
        Some(p) => {
            let path = output_path(s, &p);
            let mut out = create(&path)?;
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn load_net(s: &Settings) -> Result<RoutingNetwork> {
    let path = input_path(s, "net")?;
    RoutingNetwork::load(open(&path)?).with_context(|| format!("reading {}", path.display()))
}

fn load_values(path: &Path, dt: f64) -> Result<ValueTable> {
    ValueTable::read_csv(open(path)?, dt).with_context(|| format!("reading {}", path.display()))
}

pub fn gen(s: &Settings) -> Result<()> {
    let rows: usize = s.require("rows")?;
    let cols: usize = s.require("cols")?;
    let seed: u64 = s.require("seed")?;
    let dest = s.get("dest")?.unwrap_or((rows * cols).saturating_sub(1));
    let spec = GridSpec {
        mean_range: (s.require("mean_min")?, s.require("mean_max")?),
        sd_range: (s.require("sd_min")?, s.require("sd_max")?),
        symmetric_links: s.flag("symmetric")?,
        ..GridSpec::new(rows, cols, dest, seed)
    };
    let net = generate_grid(&spec)?;
    let path = output_path(s, &s.require::<PathBuf>("output")?);
    write_to(&path, |o| net.save(o))?;
    eprintln!("{} nodes, {} edges -> {}", net.node_count(), net.edges().len(), path.display());
    Ok(())
}

pub fn solve(s: &Settings) -> Result<()> {
    let net = load_net(s)?;
    let max_sweeps = s.get("max_sweeps")?.unwrap_or_else(|| default_max_sweeps(&net));
    let v = solve_sota(&net, s.require("dt")?, s.require("horizon")?, s.require("tol")?, max_sweeps)?;
    let path = output_path(s, &s.require::<PathBuf>("output")?);
    write_to(&path, |o| v.write_csv(o))?;
    eprintln!("{} sweeps, residual {:.3e} -> {}", v.sweeps(), v.residual(), path.display());
    Ok(())
}

fn learner_params(s: &Settings) -> Result<LearnerParams> {
    let alpha_schedule = match s.choice::<Schedule>("alpha_schedule")? {
        Schedule::Constant => AlphaSchedule::Constant,
        Schedule::Visit => AlphaSchedule::VisitCount { power: s.require("alpha_power")? },
    };
    let EpsilonSchedule::Linear = s.choice::<EpsilonSchedule>("epsilon_schedule")?;
    let params = LearnerParams {
        alpha: s.require("alpha")?,
        alpha_schedule,
        gamma: s.require("gamma")?,
        epsilon_start: s.require("epsilon_start")?,
        epsilon_floor: s.require("epsilon_floor")?,
        epsilon_decay_fraction: s.require("epsilon_decay")?,
        episodes: s.require("episodes")?,
        max_steps: s.require("max_steps")?,
        bin_width: s.require("dt")?,
        fill: s.require("fill")?,
        checkpoint_every: s.require("checkpoint_every")?,
        seed: s.require("seed")?,
    };
    params.validate()?;
    Ok(params)
}

/// `q.csv` -> `q_seed7.csv` when several runs share one name.
fn per_seed(path: &Path, seed: u64, runs: u64) -> PathBuf {
    if runs <= 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}_seed{seed}"),
    };
    path.with_file_name(name)
}

pub fn train(s: &Settings) -> Result<()> {
    let base = learner_params(s)?;
    let dt = base.bin_width;
    let runs: u64 = s.require("runs")?;
    if runs == 0 {
        return Err(UsageError("`--runs` must be at least 1".into()).into());
    }
    let net = load_net(s)?;
    let mut env = RoutingEnv::new(net, s.require("horizon")?)?;
    if !s.flag("continuous")? {
        env = env.with_budget_grid(dt)?;
    }
    if s.choice::<Forbidden>("forbidden")? == Forbidden::Penalty {
        env = env.with_forbidden_actions(ForbiddenActions::Penalty(s.require("penalty")?))?;
    }
    let reference = match s.raw("ref") {
        Some(_) => Some(load_values(&input_path(s, "ref")?, dt)?),
        None => None,
    };
    let q_path = output_path(s, &s.require::<PathBuf>("output")?);
    let log_path = output_path(s, &s.require::<PathBuf>("log")?);

    let run_one = |seed: u64| -> Result<()> {
        let params = LearnerParams { seed, ..base.clone() };
        let (q, log) = r2l_core::train(&env, &params, reference.as_ref())?;
        write_to(&per_seed(&q_path, seed, runs), |o| q.write_csv(o))?;
        write_to(&per_seed(&log_path, seed, runs), |o| log.write_csv(o))?;
        if let Some(r) = &reference {
            let (sup, l1) = error_norms(&q, r)?;
            eprintln!("seed {seed}: sup_err {sup:.4}, l1_err {l1:.4}");
        }
        Ok(())
    };
    let seeds: Vec<u64> = (0..runs).map(|i| base.seed.wrapping_add(i)).collect();
    if s.flag("parallel")? && runs > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds.iter().map(|&seed| scope.spawn(move || run_one(seed))).collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("training thread panicked"))))
                .collect::<Result<Vec<()>>>()
        })?;
    } else {
        for seed in seeds {
            run_one(seed)?;
        }
    }
    Ok(())
}

pub fn eval(s: &Settings) -> Result<()> {
    let dt: f64 = s.require("dt")?;
    let values = load_values(&input_path(s, "values")?, dt)?;
    let q_path = input_path(s, "q")?;
    let bounds = ThresholdBounds::budget((values.bin_count() - 1) as f64 * dt)?;
    let kind = ProblemKind::Routing { destination: values.destination() };
    let q = QTable::read_csv(open(&q_path)?, kind, bounds, dt, values.node_count())
        .with_context(|| format!("reading {}", q_path.display()))?;
    let (sup, l1) = error_norms(&q, &values)?;
    println!("sup_err,l1_err");
    println!("{},{}", format::fmt_sig(sup, 9), format::fmt_sig(l1, 9));
    Ok(())
}

enum Table {
    Values(ValueTable),
    Q(QTable, RoutingEnv),
}

impl Table {
    fn load(s: &Settings) -> Result<Self> {
        let dt: f64 = s.require("dt")?;
        if s.raw("values").is_some() {
            return Ok(Table::Values(load_values(&input_path(s, "values")?, dt)?));
        }
        if s.raw("q").is_none() {
            return Err(UsageError("needs `--values` or `--q`".into()).into());
        }
        let path = input_path(s, "q")?;
        let env = RoutingEnv::new(load_net(s)?, s.require("horizon")?)?;
        let q = QTable::read_csv(open(&path)?, env.kind(), env.bounds(), dt, env.state_count())
            .with_context(|| format!("reading {}", path.display()))?;
        Ok(Table::Q(q, env))
    }

    fn curve(&self, node: usize) -> r2l_core::Result<ReliabilityCurve> {
        match self {
            Table::Values(v) => reliability_curve(v, node),
            Table::Q(q, _) => reliability_curve(q, node),
        }
    }

    fn policy(&self) -> PolicyMap {
        match self {
            Table::Values(v) => v.policy().clone(),
            Table::Q(q, env) => env.successor_policy(&greedy_policy(q)),
        }
    }
}

pub fn por(s: &Settings) -> Result<()> {
    let table = Table::load(s)?;
    let node: usize = s.require("node")?;
    let (t1, t2): (f64, f64) = (s.require("t1")?, s.require("t2")?);
    let p = price_of_reliability(&table.curve(node)?, t1, t2)?;
    let f = |x: f64| format::fmt_sig(x, 9);
    println!("{},{},{},{},{},{}", f(t1), f(p.p1.get()), f(t2), f(p.p2.get()), f(p.delta_t), f(p.delta_p));
    Ok(())
}

pub fn curves(s: &Settings) -> Result<()> {
    let table = Table::load(s)?;
    let curve = table.curve(s.require("node")?)?;
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    emit(s, &String::from_utf8(buf)?)
}

pub fn policy(s: &Settings) -> Result<()> {
    let table = Table::load(s)?;
    emit(s, &policy_map(&table.policy()))
}
