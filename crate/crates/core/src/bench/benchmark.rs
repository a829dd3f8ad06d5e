//! Seeded benchmark runs producing a per-circuit CSV report.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Config, Family, RouterSpec};
use super::{generate, load_circuit_dir, qubits_for, stream_rng};
use crate::architecture::{Architecture, Placement};
use crate::circuit::{decompose_swaps, validate_routed, LogicalCircuit, RoutedCircuit};
use crate::env::RoutingEnv;
use crate::error::{Error, Result};
use crate::model::QModel;
use crate::router;

pub const REPORT_HEADER: &str =
    "router,family,arch,circuit_id,batch,orig_depth,routed_depth,cdo,cdr,swaps,status,seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub router: String,
    pub family: String,
    pub arch: String,
    pub circuit_id: usize,
    pub batch: usize,
    pub orig_depth: usize,
    /// Depth of the (partial, on failure) routed transcript.
    pub routed_depth: usize,
    /// Empty on failure.
    pub cdo: Option<usize>,
    pub cdr: Option<f64>,
    pub swaps: usize,
    pub ok: bool,
    pub seconds: Option<f64>,
}

impl ReportRow {
    fn csv(&self, out: &mut String) {
        let cdo = self.cdo.map(|v| v.to_string()).unwrap_or_default();
        let cdr = self.cdr.map(|v| format!("{v:.6}")).unwrap_or_default();
        let secs = self.seconds.map(|v| format!("{v:.6}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.router,
            self.family,
            self.arch,
            self.circuit_id,
            self.batch,
            self.orig_depth,
            self.routed_depth,
            cdo,
            cdr,
            self.swaps,
            if self.ok { "ok" } else { "failed" },
            secs
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub router: String,
    /// `None` for the all-batch aggregate.
    pub batch: Option<usize>,
    pub routed: usize,
    pub failed: usize,
    pub mean_cdr: f64,
    pub std_cdr: f64,
    pub mean_cdo: f64,
    pub mean_swaps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            r.csv(&mut out);
        }
        out
    }

    pub fn routers(&self) -> Vec<String> {
        let mut names: Vec<String> = self.rows.iter().map(|r| r.router.clone()).collect();
        names.dedup();
        names
    }

    /// Mean CDR over successful rows of `router`.
    pub fn mean_cdr(&self, router: &str) -> f64 {
        let xs: Vec<f64> = self.rows.iter().filter(|r| r.router == router).filter_map(|r| r.cdr).collect();
        mean_std(&xs).0
    }

    /// Per-batch and overall aggregates for every router.
    pub fn summaries(&self) -> Vec<Summary> {
        let mut out = Vec::new();
        for router in self.routers() {
            let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.router == router).collect();
            let mut batches: Vec<usize> = rows.iter().map(|r| r.batch).collect();
            batches.sort_unstable();
            batches.dedup();
            let keys = batches.into_iter().map(Some).chain(std::iter::once(None));
            for batch in keys {
                let sel: Vec<&&ReportRow> =
                    rows.iter().filter(|r| batch.is_none_or(|b| r.batch == b)).collect();
                let ok: Vec<&&&ReportRow> = sel.iter().filter(|r| r.ok).collect();
                let cdrs: Vec<f64> = ok.iter().filter_map(|r| r.cdr).collect();
                let cdos: Vec<f64> = ok.iter().filter_map(|r| r.cdo.map(|c| c as f64)).collect();
                let swaps: Vec<f64> = ok.iter().map(|r| r.swaps as f64).collect();
                let (mean_cdr, std_cdr) = mean_std(&cdrs);
                out.push(Summary {
                    router: router.clone(),
                    batch,
                    routed: ok.len(),
                    failed: sel.len() - ok.len(),
                    mean_cdr,
                    std_cdr,
                    mean_cdo: mean_std(&cdos).0,
                    mean_swaps: mean_std(&swaps).0,
                });
            }
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::from("router,batch,routed,failed,mean_cdr,std_cdr,mean_cdo,mean_swaps\n");
        for s in self.summaries() {
            let batch = s.batch.map(|b| b.to_string()).unwrap_or_else(|| "all".into());
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
                s.router, batch, s.routed, s.failed, s.mean_cdr, s.std_cdr, s.mean_cdo, s.mean_swaps
            );
        }
        out
    }
}

/// One benchmark circuit with its starting placement.
#[derive(Debug, Clone)]
pub struct BenchCircuit {
    pub id: usize,
    pub batch: usize,
    pub circuit: LogicalCircuit,
    pub placement: Placement,
}

/// The circuits a benchmark config describes. Circuit `i` and its placement
/// come from stream `2i` of the seed; files are placed the same way.
pub fn bench_circuits(config: &Config, arch: &Architecture) -> Result<Vec<BenchCircuit>> {
    let b = &config.bench;
    let mut out = Vec::new();
    if let Family::Files { dir, max_depth } = &b.family {
        for (id, (_, circuit)) in load_circuit_dir(dir, *max_depth, arch.n_nodes())?.into_iter().enumerate() {
            let mut rng = stream_rng(config.seed, 2 * id as u64);
            let placement = arch.random_placement(circuit.n_qubits(), &mut rng)?;
            out.push(BenchCircuit { id, batch: 0, circuit, placement });
        }
        if out.is_empty() {
            return Err(Error::input(format!("no usable circuits in {}", dir.display())));
        }
        return Ok(out);
    }
    let n = qubits_for(b.n_qubits, arch)?;
    for batch in 0..b.batches {
        for k in 0..b.circuits_per_batch {
            let id = batch * b.circuits_per_batch + k;
            let mut rng = stream_rng(config.seed, 2 * id as u64);
            let circuit = generate(&b.family, n, &mut rng)?;
            let placement = arch.random_placement(n, &mut rng)?;
            out.push(BenchCircuit { id, batch, circuit, placement });
        }
    }
    Ok(out)
}

enum Router {
    Greedy,
    Random,
    Dqn(Box<QModel>),
}

fn route_one(
    router: &Router,
    env: &RoutingEnv,
    config: &Config,
    job: &BenchCircuit,
) -> Result<std::result::Result<RoutedCircuit, RoutedCircuit>> {
    let arch = env.arch();
    let mut rng = stream_rng(config.seed, 2 * job.id as u64 + 1);
    let placement = job.placement.clone();
    let result = match router {
        Router::Greedy => router::greedy_route(&job.circuit, arch, placement),
        Router::Random => router::random_route(&job.circuit, arch, placement, &mut rng),
        Router::Dqn(model) => router::route_with(
            env,
            &job.circuit,
            placement,
            model,
            config.agent.eval_epsilon,
            &config.agent.acting,
            &mut rng,
        ),
    };
    match result {
        Ok(r) => Ok(Ok(r)),
        Err(Error::Routing(f)) => Ok(Err(f.partial)),
        Err(e) => Err(e),
    }
}

/// Routes every benchmark circuit with every configured router. Rows are
/// sorted by router label then circuit id, so output order does not depend on
/// scheduling.
pub fn run_benchmark(config: &Config) -> Result<Report> {
    config.validate()?;
    let arch = Arc::new(Architecture::build(&config.arch)?);
    let env = RoutingEnv::new(arch.clone(), config.agent.rewards);
    let mut routers = Vec::new();
    for spec in &config.bench.routers {
        let r = match spec {
            RouterSpec::Greedy => Router::Greedy,
            RouterSpec::RandomPolicy => Router::Random,
            RouterSpec::Dqn(path) => {
                let model = QModel::load(path)
                    .map_err(|e| Error::config(format!("loading model {}: {e}", path.display())))?;
                model.check_arch(&arch).map_err(|e| Error::config(e.to_string()))?;
                Router::Dqn(Box::new(model))
            }
        };
        routers.push((spec.label(), r));
    }
    let jobs = bench_circuits(config, &arch)?;
    let family = config.bench.family.label();
    let pairs: Vec<(usize, usize)> =
        (0..routers.len()).flat_map(|r| (0..jobs.len()).map(move |j| (r, j))).collect();
    let mut rows = pairs
        .par_iter()
        .map(|&(r, j)| {
            let (label, router) = &routers[r];
            let job = &jobs[j];
            let start = Instant::now();
            let outcome = route_one(router, &env, config, job)?;
            let seconds = start.elapsed().as_secs_f64();
            let ok = outcome.is_ok();
            let routed = match outcome {
                Ok(r) => {
                    validate_routed(&job.circuit, &r, &arch).map_err(|v| {
                        Error::Validation(format!(
                            "{label} on circuit {}: {}",
                            job.id,
                            v.first().map(|x| x.detail.clone()).unwrap_or_default()
                        ))
                    })?;
                    r
                }
                Err(partial) => partial,
            };
            let swaps = routed.swap_count();
            let routed_depth =
                if config.bench.decompose_swaps { decompose_swaps(&routed).depth() } else { routed.depth() };
            let orig = job.circuit.depth();
            let (cdo, cdr) = if ok && orig > 0 {
                let m = crate::circuit::cdo_cdr(orig, routed_depth)?;
                (Some(m.cdo), Some(m.cdr.to_f64()))
            } else {
                (None, None)
            };
            Ok(ReportRow {
                router: label.clone(),
                family: family.to_string(),
                arch: arch.id().to_string(),
                circuit_id: job.id,
                batch: job.batch,
                orig_depth: orig,
                routed_depth,
                cdo,
                cdr,
                swaps,
                ok,
                seconds: config.bench.timing.then_some(seconds),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| (&a.router, a.circuit_id).cmp(&(&b.router, b.circuit_id)));
    Ok(Report { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(extra: &str) -> Config {
        Config::parse(&format!(
            "arch=grid:3x3\nfamily=random\ngates=12\nbatches=2\ncircuits_per_batch=5\nseed=4\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn row_counts_and_order() {
        let r = run_benchmark(&small("")).unwrap();
        assert_eq!(r.rows.len(), 20);
        assert_eq!(r.routers(), vec!["greedy".to_string(), "random_policy".to_string()]);
        assert!(r.rows.iter().all(|x| x.ok && x.cdr.unwrap() >= 1.0));
        let csv = r.to_csv();
        assert!(csv.starts_with(REPORT_HEADER));
        assert_eq!(csv.lines().count(), 21);
        let s = r.summaries();
        assert_eq!(s.len(), 6);
        assert_eq!(s[2].batch, None);
        assert_eq!(s[2].routed, 10);
    }

    #[test]
    fn reports_are_reproducible() {
        assert_eq!(run_benchmark(&small("")).unwrap().to_csv(), run_benchmark(&small("")).unwrap().to_csv());
    }

    #[test]
    fn decomposition_only_lengthens() {
        let plain = run_benchmark(&small("")).unwrap();
        let dec = run_benchmark(&small("decompose_swaps=true")).unwrap();
        for (a, b) in plain.rows.iter().zip(&dec.rows) {
            assert_eq!(a.swaps, b.swaps);
            assert!(b.routed_depth >= a.routed_depth && b.routed_depth <= 3 * a.routed_depth);
        }
    }

    #[test]
    fn timing_fills_seconds() {
        let r = run_benchmark(&small("timing=true\nrouters=greedy")).unwrap();
        assert!(r.rows.iter().all(|x| x.seconds.is_some()));
    }

    #[test]
    fn missing_or_mismatched_model_is_a_config_error() {
        let err = run_benchmark(&small("routers=dqn:/nonexistent/model.txt")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let other = Architecture::grid(2, 2).unwrap();
        let m = QModel::new(&other, &[4], Default::default(), &mut stream_rng(0, 0)).unwrap();
        m.save(&path).unwrap();
        let err = run_benchmark(&small(&format!("routers=dqn:{}", path.display()))).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }
}
