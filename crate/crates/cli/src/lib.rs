//! `qnp` command-line driver.
//!
//! Every subcommand accepts its options as flags or as keys of a JSON
//! document passed with `--config`; flags win over the document. Unknown
//! keys are rejected. Hamiltonian options sit under a `"hamiltonian"`
//! object and optimizer settings under `"optimizer"`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use clap::{error::ErrorKind, Args, Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{Map, Value};

mod commands;

pub use commands::{GateRow, GradRow, IrrepRow, SpectrumRow, TraceRow, VqeRow};

/// Exit status with its cause: 1 for invalid input, 2 for failures while
/// running.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

pub type CliResult<T> = std::result::Result<T, Failure>;

trait Classify<T> {
    fn invalid(self) -> CliResult<T>;
    fn runtime(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn invalid(self) -> CliResult<T> {
        self.map_err(|e| Failure { code: 1, error: e.into() })
    }

    fn runtime(self) -> CliResult<T> {
        self.map_err(|e| Failure { code: 2, error: e.into() })
    }
}

fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure { code: 1, error: anyhow!(msg.into()) })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "qnp", version, about = "Quantum-number-preserving gate fabric experiments on a statevector simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Common {
    /// Seed for every random choice of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for independent runs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON document with the same keys as the flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ground-state search on a model Hamiltonian or FCIDUMP integrals.
    Vqe(VqeArgs),
    /// Fit a fabric to a Haar-random state of one irrep.
    Haar(HaarArgs),
    /// Table of all (Nα, Nβ, S) irreps for M orbitals.
    Irreps(MArgs),
    /// Adjoint, finite-difference and shift-rule gradients per parameter.
    Gradcheck(GradArgs),
    /// Gate catalog with generator classes and decomposition checks.
    Gates(GatesArgs),
    /// Irreps on which the Q fabric is not universal.
    Edgecases(MArgs),
}

macro_rules! merge_from {
    ($a:ident, $b:ident; $($f:ident),* $(,)?) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f; } )*
    };
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MArgs {
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianArgs {
    /// hubbard_chain, pairing or random_symmetric.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long = "U")]
    #[serde(rename = "U")]
    pub u: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Integrals file; replaces --model.
    #[arg(long)]
    pub fcidump: Option<PathBuf>,
    /// `Nα,Nβ,S`.
    #[arg(long)]
    pub irrep: Option<String>,
}

impl HamiltonianArgs {
    fn merge(mut self, o: Self) -> Self {
        merge_from!(self, o; model, m, t, u, g, spacing, fcidump, irrep);
        self
    }
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeArgs {
    #[command(flatten)]
    #[serde(default)]
    pub hamiltonian: HamiltonianArgs,
    /// Q, F, OR_only, PX_only, ...
    #[arg(long)]
    pub fabric: Option<String>,
    /// Layer counts to sweep; smallest count reaching the irrep dimension when absent.
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    /// Initialization strategies (A, B).
    #[arg(long, value_delimiter = ',')]
    pub strategy: Option<Vec<String>>,
    /// Seeds of the initial perturbation; defaults to --seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Uniform noise width added to the initial parameters.
    #[arg(long)]
    pub perturbation: Option<f64>,
    /// Exact energy to measure errors against when FCI is out of reach.
    #[arg(long)]
    pub reference_energy: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub g_tol: Option<f64>,
    /// Per-epoch traces of every run.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Basis-state probabilities of the lowest-energy run.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    #[arg(skip)]
    pub optimizer: Option<qnp_core::optimize::LbfgsConfig>,
}

impl VqeArgs {
    fn merge(mut self, o: Self) -> Self {
        self.hamiltonian = self.hamiltonian.merge(o.hamiltonian);
        merge_from!(self, o; fabric, layers, strategy, seeds, perturbation, reference_energy, max_epochs, g_tol, trace, spectrum, optimizer);
        self
    }
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaarArgs {
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    pub na: Option<usize>,
    #[arg(long)]
    pub nb: Option<usize>,
    #[arg(long = "S")]
    #[serde(rename = "S")]
    pub s: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub fabric: Option<String>,
    /// A, B or random.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(skip)]
    pub optimizer: Option<qnp_core::optimize::LbfgsConfig>,
}

impl HaarArgs {
    fn merge(mut self, o: Self) -> Self {
        merge_from!(self, o; m, na, nb, s, layers, fabric, strategy, max_epochs, optimizer);
        self
    }
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradArgs {
    #[command(flatten)]
    #[serde(default)]
    pub hamiltonian: HamiltonianArgs,
    #[arg(long)]
    pub fabric: Option<String>,
    #[arg(long)]
    pub layers: Option<usize>,
    /// identity, OR_pi or OFSWAP.
    #[arg(long)]
    pub pi: Option<String>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Check the circuit rewritten into elementary gates.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub decompose: Option<bool>,
}

impl GradArgs {
    fn merge(mut self, o: Self) -> Self {
        self.hamiltonian = self.hamiltonian.merge(o.hamiltonian);
        merge_from!(self, o; fabric, layers, pi, fd_step, decompose);
        self
    }
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatesArgs {
    /// Random angle draws per decomposition check.
    #[arg(long)]
    pub samples: Option<usize>,
}

impl GatesArgs {
    fn merge(mut self, o: Self) -> Self {
        merge_from!(self, o; samples);
        self
    }
}

impl MArgs {
    fn merge(mut self, o: Self) -> Self {
        merge_from!(self, o; m);
        self
    }
}

const COMMON_KEYS: [&str; 4] = ["seed", "out", "format", "jobs"];

/// Splits a config document into its common part and the command part.
fn load_config(path: &Path) -> CliResult<(Common, Value)> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure { code: 1, error: anyhow!("cannot read config {}: {e}", path.display()) })?;
    let doc: Value =
        serde_json::from_str(&text).map_err(|e| Failure { code: 1, error: anyhow!("config {} is not valid JSON: {e}", path.display()) })?;
    let Value::Object(map) = doc else {
        return invalid("config must be a JSON object");
    };
    let (common, rest): (Map<String, Value>, Map<String, Value>) = map.into_iter().partition(|(k, _)| COMMON_KEYS.contains(&k.as_str()));
    let common: Common = serde_json::from_value(Value::Object(common)).map_err(|e| Failure { code: 1, error: anyhow!("config: {e}") })?;
    Ok((common, Value::Object(rest)))
}

fn section<T: DeserializeOwned + Default>(v: &Option<Value>) -> CliResult<T> {
    match v {
        None => Ok(T::default()),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Failure { code: 1, error: anyhow!("config: {e}") }),
    }
}

/// Output destination and encoding.
pub(crate) struct Sink {
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Sink {
    fn writer(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
        Ok(match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| Failure { code: 2, error: anyhow!("cannot create {}: {e}", p.display()) })?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    /// CSV rows or the JSON document, to `path` or the main output.
    pub fn emit<R: Serialize, D: Serialize>(&self, path: Option<&Path>, rows: &[R], doc: &D) -> CliResult<()> {
        let target = path.or(self.out.as_deref());
        let mut w = Self::writer(target)?;
        match self.format {
            Format::Csv => {
                let mut c = csv::Writer::from_writer(&mut w);
                for r in rows {
                    c.serialize(r).runtime()?;
                }
                c.flush().runtime()?;
            }
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, doc).runtime()?;
                writeln!(w).runtime()?;
            }
        }
        w.flush().runtime()
    }
}

/// Resolved common options.
pub(crate) struct Context {
    pub seed: u64,
    pub sink: Sink,
}

fn execute(cli: Cli) -> CliResult<()> {
    let (file_common, doc) = match &cli.common.config {
        Some(p) => {
            let (c, d) = load_config(p)?;
            (c, Some(d))
        }
        None => (Common::default(), None),
    };
    let mut common = cli.common;
    merge_from!(common, file_common; seed, out, format, jobs);
    let jobs = common.jobs.unwrap_or(1);
    if jobs == 0 {
        return invalid("--jobs must be at least 1");
    }
    let ctx = Context { seed: common.seed.unwrap_or(0), sink: Sink { format: common.format.unwrap_or_default(), out: common.out } };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().runtime()?;
    pool.install(|| match cli.command {
        Command::Vqe(a) => commands::vqe(&ctx, a.merge(section(&doc)?)),
        Command::Haar(a) => commands::haar(&ctx, a.merge(section(&doc)?)),
        Command::Irreps(a) => commands::irreps(&ctx, a.merge(section(&doc)?), false),
        Command::Edgecases(a) => commands::irreps(&ctx, a.merge(section(&doc)?), true),
        Command::Gradcheck(a) => commands::gradcheck(&ctx, a.merge(section(&doc)?)),
        Command::Gates(a) => commands::gates(&ctx, a.merge(section(&doc)?)),
    })
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}
