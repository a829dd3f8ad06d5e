use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use qroute_core::bench::{self, generators, stream_rng, Config, SweepGrid};
use qroute_core::circuit::{cdo_cdr, parse_circuit};
use qroute_core::{
    decompose_swaps, router, validate_routed, Architecture, CircuitFormat, Placement, QModel, TopologySpec,
};

#[derive(Parser)]
#[command(name = "qroute", version, about = "Depth-oriented qubit routing with a learned swap scheduler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenFamily {
    #[value(name = "single_full", alias = "single-full")]
    SingleFull,
    Multi,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random circuit in gatelist format.
    Gen {
        #[arg(long, value_enum)]
        family: GenFamily,
        #[arg(long)]
        qubits: usize,
        #[arg(long, default_value_t = 1)]
        layers: usize,
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long)]
        gates: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model; the per-episode log goes next to it.
    Train {
        #[arg(long)]
        arch: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Training log path (defaults to MODEL.log.csv).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Route one circuit with a trained model, or greedy/random baselines.
    Route {
        #[arg(long)]
        arch: String,
        /// Model file, or `greedy` / `random_policy`.
        #[arg(long)]
        model: String,
        #[arg(long)]
        circuit: PathBuf,
        /// `random:SEED`, or a file listing the node of each logical qubit.
        #[arg(long, default_value = "random:0")]
        placement: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        decompose: bool,
        /// Seed for the annealer and exploration.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a benchmark described by a config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and rank every combination in a grid file.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn gen(
    family: GenFamily,
    qubits: usize,
    layers: usize,
    density: f64,
    gates: Option<usize>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let mut rng = stream_rng(seed, 0);
    let circuit = match family {
        GenFamily::SingleFull => generators::single_full_layer(qubits, &mut rng)?,
        GenFamily::Multi => generators::multi_layer(qubits, layers, density, &mut rng)?,
        GenFamily::Random => {
            let Some(gates) = gates else { bail!("--family random needs --gates") };
            generators::random_circuit(qubits, gates, &mut rng)?
        }
    };
    write(out, &circuit.to_gatelist())?;
    println!("{} gates, depth {}", circuit.len(), circuit.depth());
    Ok(())
}

fn train(
    arch: Option<&str>,
    config: Option<&Path>,
    out: &Path,
    episodes: Option<usize>,
    seed: Option<u64>,
    log: Option<&Path>,
) -> Result<()> {
    let mut cfg = match config {
        Some(p) => Config::parse(&read(p)?).with_context(|| format!("in {}", p.display()))?,
        None => Config::default(),
    };
    if let Some(a) = arch {
        cfg.arch = a.parse()?;
    }
    if let Some(e) = episodes {
        cfg.agent.episodes = e;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let (arch, outcome) = bench::train_model(&cfg)?;
    outcome.model.save(out).with_context(|| format!("writing {}", out.display()))?;
    let log_path = log.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".log.csv");
        PathBuf::from(s)
    });
    write(&log_path, &outcome.log.to_csv())?;
    let n = outcome.log.episodes.len();
    let tail = n.saturating_sub(100)..n;
    let k = tail.len();
    println!("trained {n} episodes on {}", arch.id());
    if k > 0 {
        println!("mean return over last {k}: {:.4}", outcome.log.mean_return(tail));
    }
    Ok(())
}

fn load_placement(spec: &str, arch: &Architecture, n_qubits: usize) -> Result<Placement> {
    if let Some(seed) = spec.strip_prefix("random:") {
        let seed: u64 = seed.parse().with_context(|| format!("bad placement seed '{seed}'"))?;
        return Ok(arch.random_placement(n_qubits, &mut stream_rng(seed, 0))?);
    }
    let text = read(Path::new(spec))?;
    let nodes = text
        .split_whitespace()
        .map(|t| t.parse::<usize>().with_context(|| format!("bad node '{t}' in {spec}")))
        .collect::<Result<Vec<_>>>()?;
    if nodes.len() < n_qubits {
        bail!("placement {spec} places {} qubits, circuit uses {n_qubits}", nodes.len());
    }
    let pairs: Vec<_> = nodes.into_iter().enumerate().collect();
    Ok(Placement::from_assignments(arch.n_nodes(), &pairs)?)
}

fn route(
    arch: &str,
    model: &str,
    circuit_path: &Path,
    placement: &str,
    out: &Path,
    decompose: bool,
    seed: u64,
) -> Result<()> {
    let spec: TopologySpec = arch.parse()?;
    let arch = Arc::new(Architecture::build(&spec)?);
    let circuit = parse_circuit(&read(circuit_path)?, CircuitFormat::from_path(circuit_path))
        .with_context(|| format!("in {}", circuit_path.display()))?;
    let placement = load_placement(placement, &arch, circuit.n_qubits())?;
    let mut rng = stream_rng(seed, 1);
    let mut routed = match model {
        "greedy" => router::greedy_route(&circuit, &arch, placement)?,
        "random_policy" | "random" => router::random_route(&circuit, &arch, placement, &mut rng)?,
        path => {
            let m = QModel::load(Path::new(path)).with_context(|| format!("loading model {path}"))?;
            router::route(&circuit, &arch, placement, &m, &mut rng)?
        }
    };
    if let Err(violations) = validate_routed(&circuit, &routed, &arch) {
        let first = violations.first().map(|v| v.to_string()).unwrap_or_default();
        bail!("routed circuit failed validation ({} violations): {first}", violations.len());
    }
    if decompose {
        routed = decompose_swaps(&routed);
    }
    write(out, &routed.to_dump())?;
    if circuit.is_empty() {
        println!("empty circuit, nothing routed");
        return Ok(());
    }
    let m = cdo_cdr(circuit.depth(), routed.depth())?;
    println!(
        "depth {} -> {}, cdo {}, cdr {} ({:.4}), swaps {}",
        circuit.depth(),
        routed.depth(),
        m.cdo,
        m.cdr,
        m.cdr.to_f64(),
        routed.swap_count()
    );
    Ok(())
}

fn bench_cmd(config: &Path, out: &Path) -> Result<()> {
    let cfg = Config::parse(&read(config)?).with_context(|| format!("in {}", config.display()))?;
    let report = bench::run_benchmark(&cfg)?;
    write(out, &report.to_csv())?;
    print!("{}", report.summary_text());
    Ok(())
}

fn sweep_cmd(grid: &Path, out: &Path) -> Result<()> {
    let g = SweepGrid::parse(&read(grid)?).with_context(|| format!("in {}", grid.display()))?;
    let entries = bench::sweep(&g, out)?;
    print!("{}", bench::sweep::manifest(&entries));
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen { family, qubits, layers, density, gates, seed, out } => {
            gen(family, qubits, layers, density, gates, seed, &out)
        }
        Command::Train { arch, config, out, episodes, seed, log } => {
            train(arch.as_deref(), config.as_deref(), &out, episodes, seed, log.as_deref())
        }
        Command::Route { arch, model, circuit, placement, out, decompose, seed } => {
            route(&arch, &model, &circuit, &placement, &out, decompose, seed)
        }
        Command::Bench { config, out } => bench_cmd(&config, &out),
        Command::Sweep { grid, out } => sweep_cmd(&grid, &out),
    }
}
