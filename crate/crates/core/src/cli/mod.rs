//! Batch front end: configuration, cache management and the `build-grid`,
//! `build-quantizer`, `optimize`, `price` and `table` commands.

pub mod cache;
pub mod config;
pub mod presets;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::rc::Rc;

use clap::{Parser, Subcommand};

use crate::basis::make_basis;
use crate::error::{Error, Result};
use crate::funcquant::{uniform_time_grid, ProductQuantizer, QuantizedEnsemble, QuantizerKind};
use crate::isopt::path::theta_csv;
use crate::isopt::NewtonReport;
use crate::mc::{compare, Comparison, Theta, CSV_HEADER};
use crate::models::{ModelSpec, Problem};
use crate::pipeline::{
    decomposition_for, noise_grid, optimize_finite, optimize_path, path_quantizer, phi_table,
    quantized_paths,
};
use crate::quantnd::GridND;

pub use cache::{Cache, DEFAULT_CACHE_DIR};
pub use config::RunConfig;
pub use presets::{preset, table, TableSpec, PRESETS};

/// Exit status for configuration errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for numerical failures.
pub const EXIT_NUMERIC: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "qis", version, about = "Quantization-based importance sampling for option pricing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in configuration (see `table` for the names).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Seed for grids and Monte Carlo draws.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the Gaussian grid of a terminal-payoff configuration into the cache.
    BuildGrid,
    /// Build the functional quantizer of a path configuration into the cache.
    BuildQuantizer,
    /// Run the Newton search and export the drift.
    Optimize,
    /// Price crude and with importance sampling on common draws.
    Price,
    /// Reproduce a whole benchmark table as CSV.
    Table {
        /// basket, spark, asian-bs, asian-lv, asian-schwartz, dic-lv or dic-bs
        name: String,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::Shape(_)
        | Error::NoTerminalMap(_)
        | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

/// Result of pricing one configuration.
#[derive(Debug, Clone)]
pub struct PriceOutcome {
    pub problem: Problem,
    pub theta: Theta,
    /// `None` when the drift came from the configuration.
    pub report: Option<NewtonReport>,
    pub comparison: Comparison,
}

/// Grids and quantizers built so far, backed by an optional disk cache.
pub struct Workspace {
    cache: Option<Cache>,
    grids: HashMap<String, Rc<GridND>>,
    decompositions: HashMap<usize, Vec<usize>>,
    ensembles: HashMap<String, Rc<(ProductQuantizer, QuantizedEnsemble)>>,
    /// Print progress to stderr.
    pub verbose: bool,
}

impl Workspace {
    pub fn new(cache: Option<Cache>) -> Self {
        Self {
            cache,
            grids: HashMap::new(),
            decompositions: HashMap::new(),
            ensembles: HashMap::new(),
            verbose: false,
        }
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    pub fn grid_name(cfg: &RunConfig, d: usize) -> String {
        let q = &cfg.quantization;
        format!(
            "grid-d{d}-n{}-seed{}-samples{}-sweeps{}.txt",
            q.n,
            cfg.grid_seed(),
            q.samples,
            q.sweeps
        )
    }

    /// Grid for a terminal-payoff configuration, from memory, cache or scratch.
    pub fn grid(&mut self, cfg: &RunConfig) -> Result<Rc<GridND>> {
        let d = cfg.model_spec()?.dim();
        let name = Self::grid_name(cfg, d);
        if let Some(g) = self.grids.get(&name) {
            return Ok(g.clone());
        }
        if let Some(text) = self.cache_read(&name)? {
            let g = Rc::new(GridND::from_cache_str(&text)?);
            self.grids.insert(name, g.clone());
            return Ok(g);
        }
        self.note(format!("building {name}"));
        let q = &cfg.quantization;
        let g = Rc::new(noise_grid(d, q.n, q.samples, cfg.grid_seed(), q.sweeps)?);
        if let Some(c) = &self.cache {
            c.write(&name, &g.to_cache_string())?;
        }
        // reload so that fresh and cached runs see bit-identical grids
        let g = Rc::new(GridND::from_cache_str(&g.to_cache_string())?);
        self.grids.insert(name, g.clone());
        Ok(g)
    }

    fn cache_read(&self, name: &str) -> Result<Option<String>> {
        match &self.cache {
            Some(c) => c.read(name),
            None => Ok(None),
        }
    }

    pub fn decomposition(&mut self, cfg: &RunConfig) -> Result<Vec<usize>> {
        if let Some(d) = &cfg.quantization.decomposition {
            return Ok(d.clone());
        }
        let budget = cfg.quantization.d_n;
        if let Some(d) = self.decompositions.get(&budget) {
            return Ok(d.clone());
        }
        let d = decomposition_for(budget)?;
        self.note(format!("decomposition of {budget}: {d:?}"));
        self.decompositions.insert(budget, d.clone());
        Ok(d)
    }

    pub fn quantizer_name(problem: &Problem, dec: &[usize]) -> String {
        let sizes: Vec<String> = dec.iter().map(|n| n.to_string()).collect();
        let kind = match &problem.model {
            ModelSpec::Schwartz { theta, sigma, .. } => format!("ou-{}-{}", theta[0], sigma[0]),
            _ => "brownian".to_string(),
        };
        format!("quantizer-{kind}-T{}-{}.txt", problem.horizon, sizes.join("x"))
    }

    pub fn quantizer(&mut self, cfg: &RunConfig, problem: &Problem) -> Result<ProductQuantizer> {
        let dec = self.decomposition(cfg)?;
        let name = Self::quantizer_name(problem, &dec);
        if let Some(text) = self.cache_read(&name)? {
            let q = ProductQuantizer::from_cache_str(&text)?;
            if q.decomposition == dec {
                return Ok(q);
            }
        }
        self.note(format!("building {name}"));
        let q = path_quantizer(problem, &dec)?;
        if let Some(c) = &self.cache {
            c.write(&name, &q.to_cache_string())?;
        }
        Ok(q)
    }

    /// Quantized price paths of a path configuration.
    pub fn ensemble(
        &mut self,
        cfg: &RunConfig,
        problem: &Problem,
    ) -> Result<Rc<(ProductQuantizer, QuantizedEnsemble)>> {
        let dec = self.decomposition(cfg)?;
        let key = format!("{:?}|{}|{}|{:?}", problem.model, problem.horizon, problem.steps, dec);
        if let Some(e) = self.ensembles.get(&key) {
            return Ok(e.clone());
        }
        let q = self.quantizer(cfg, problem)?;
        let e = quantized_paths(problem, &q)?;
        if e.failures() > 0 {
            self.note(format!("{} quantized paths failed and are excluded", e.failures()));
        }
        let pair = Rc::new((q, e));
        self.ensembles.insert(key, pair.clone());
        Ok(pair)
    }

    /// Newton search on the quantized objective of `cfg`.
    pub fn optimize(&mut self, cfg: &RunConfig) -> Result<(Problem, Theta, NewtonReport)> {
        let problem = cfg.problem()?;
        let opts = cfg.optimizer.into();
        if problem.payoff.is_path_dependent() {
            let pair = self.ensemble(cfg, &problem)?;
            let basis = make_basis(cfg.basis.kind, cfg.basis.m, problem.horizon)?;
            let table = phi_table(&problem, &pair.0, &pair.1, &basis)?;
            let report = optimize_path(&table, &opts)?;
            let theta = Theta::Path { basis, coeffs: report.theta_hat.clone() };
            Ok((problem, theta, report))
        } else {
            let grid = self.grid(cfg)?;
            let report = optimize_finite(&problem, &grid, &opts)?;
            Ok((problem, Theta::Finite(report.theta_hat.clone()), report))
        }
    }

    /// Paired crude/IS pricing with the configured or optimized drift.
    pub fn price(&mut self, cfg: &RunConfig) -> Result<PriceOutcome> {
        cfg.validate()?;
        let (problem, theta, report) = match &cfg.theta {
            Some(t) => {
                let problem = cfg.problem()?;
                let theta = if problem.payoff.is_path_dependent() {
                    let basis = make_basis(cfg.basis.kind, cfg.basis.m, problem.horizon)?;
                    Theta::Path { basis, coeffs: t.values.clone() }
                } else {
                    Theta::Finite(t.values.clone())
                };
                (problem, theta, None)
            }
            None => {
                let (p, t, r) = self.optimize(cfg)?;
                (p, t, Some(r))
            }
        };
        let comparison = compare(&problem, &theta, cfg.mc.n, cfg.mc.seed)?;
        Ok(PriceOutcome { problem, theta, report, comparison })
    }
}

/// Priced rows of a table.
#[derive(Debug, Clone)]
pub struct TableResult {
    pub spec: TableSpec,
    pub outcomes: Vec<PriceOutcome>,
}

impl TableResult {
    pub fn header(&self) -> String {
        let mut cols: Vec<&str> = self.spec.label_columns.clone();
        cols.extend(presets::VALUE_COLUMNS);
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header();
        s.push('\n');
        for (row, o) in self.spec.rows.iter().zip(&self.outcomes) {
            let c = &o.comparison;
            writeln!(
                s,
                "{},{:.4},{:.4},{:.4},{:.4}",
                row.labels.join(","),
                c.crude.estimate,
                c.crude.sample_variance,
                c.qis.estimate,
                c.qis.sample_variance
            )
            .unwrap();
        }
        s
    }
}

pub fn run_table(spec: &TableSpec, ws: &mut Workspace) -> Result<TableResult> {
    let mut outcomes = Vec::with_capacity(spec.rows.len());
    for row in &spec.rows {
        let o = ws.price(&row.config)?;
        if let Some(r) = &o.report {
            ws.note(format!(
                "{} [{}]: {} iterations, |grad| = {:.2e}, ratio {:.2}",
                spec.name,
                row.labels.join(" "),
                r.iterations,
                r.final_grad_norm,
                o.comparison.variance_ratio
            ));
        }
        outcomes.push(o);
    }
    Ok(TableResult { spec: spec.clone(), outcomes })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(cli: &Cli) -> Result<(String, RunConfig)> {
    let (id, mut cfg) = match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("give either --config or --preset, not both".into()))
        }
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let id = path.file_stem().map(|s| s.to_string_lossy().into_owned());
            (id.unwrap_or_else(|| "config".into()), RunConfig::from_toml(&text)?)
        }
        (None, Some(name)) => (name.clone(), preset(name)?),
        (None, None) => return Err(Error::Config("--config or --preset is required".into())),
    };
    if let Some(seed) = cli.seed {
        cfg.mc.seed = seed;
    }
    cfg.validate()?;
    Ok((id, cfg))
}

fn workspace(cfg: Option<&RunConfig>) -> Workspace {
    let dir = cfg.and_then(|c| c.output.cache_dir.clone()).unwrap_or_else(|| DEFAULT_CACHE_DIR.into());
    let mut ws = Workspace::new(Some(Cache::new(dir)));
    ws.verbose = true;
    ws
}

/// Runs a parsed command line; returns the process exit status.
pub fn run(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let out = |cfg: &RunConfig| cli.out.clone().or_else(|| cfg.output.path.clone().map(PathBuf::from));
    match &cli.command {
        Command::Table { name } => {
            let name = cli.preset.as_deref().unwrap_or(name);
            let spec = table(name, cli.seed.unwrap_or(1))?;
            let mut ws = workspace(None);
            let result = run_table(&spec, &mut ws)?;
            emit(&cli.out, &result.to_csv())?;
            let all_converged =
                result.outcomes.iter().all(|o| o.report.as_ref().is_none_or(|r| r.converged));
            Ok(if all_converged { 0 } else { EXIT_NUMERIC })
        }
        Command::BuildGrid => {
            let (_, cfg) = load_config(&cli)?;
            let problem = cfg.problem()?;
            if problem.payoff.is_path_dependent() {
                return Err(Error::Config("path payoffs use build-quantizer".into()));
            }
            let mut ws = workspace(Some(&cfg));
            let g = ws.grid(&cfg)?;
            let name = Workspace::grid_name(&cfg, g.dim);
            let text = g.to_cache_string();
            if let Some(p) = out(&cfg) {
                fs::write(p, &text)?;
            }
            println!("{} {}", ws.cache.as_ref().unwrap().path(&name).display(), cache::sha256_hex(&text));
            Ok(0)
        }
        Command::BuildQuantizer => {
            let (_, cfg) = load_config(&cli)?;
            let problem = cfg.problem()?;
            let mut ws = workspace(Some(&cfg));
            let q = ws.quantizer(&cfg, &problem)?;
            let name = Workspace::quantizer_name(&problem, &q.decomposition);
            let text = q.to_cache_string();
            if let Some(p) = out(&cfg) {
                fs::write(p, &text)?;
            }
            let kind = match q.kind {
                QuantizerKind::Brownian => "brownian",
                QuantizerKind::OrnsteinUhlenbeck { .. } => "ornstein-uhlenbeck",
            };
            eprintln!("{kind} quantizer {:?}, distortion² {:.6e}", q.decomposition, q.distortion2());
            println!("{} {}", ws.cache.as_ref().unwrap().path(&name).display(), cache::sha256_hex(&text));
            Ok(0)
        }
        Command::Optimize => {
            let (_, cfg) = load_config(&cli)?;
            let mut ws = workspace(Some(&cfg));
            let (problem, theta, report) = ws.optimize(&cfg)?;
            eprintln!("{report}");
            let text = match &theta {
                Theta::Path { basis, coeffs } => {
                    theta_csv(basis, coeffs, &uniform_time_grid(problem.horizon, problem.steps))
                }
                Theta::Finite(v) => {
                    let mut s = String::from("i,theta\n");
                    for (i, x) in v.iter().enumerate() {
                        writeln!(s, "{i},{x}").unwrap();
                    }
                    s
                }
                Theta::None => String::new(),
            };
            emit(&out(&cfg), &text)?;
            Ok(if report.converged { 0 } else { EXIT_NUMERIC })
        }
        Command::Price => {
            let (id, cfg) = load_config(&cli)?;
            let mut ws = workspace(Some(&cfg));
            let o = ws.price(&cfg)?;
            if let Some(r) = &o.report {
                eprintln!("{r}");
            }
            eprintln!("variance ratio = {:.4}", o.comparison.variance_ratio);
            let text = format!(
                "{CSV_HEADER}\n{}\n{}\n",
                o.comparison.crude.csv_row(&id, "crude"),
                o.comparison.qis.csv_row(&id, "qis")
            );
            emit(&out(&cfg), &text)?;
            Ok(if o.report.as_ref().is_none_or(|r| r.converged) { 0 } else { EXIT_NUMERIC })
        }
    }
}

/// Entry point of the `qis` binary.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
