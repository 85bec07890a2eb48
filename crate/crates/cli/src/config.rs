//! Run configuration: command-line flags, the optional config file, and
//! the merge between them.
//!
//! Precedence, lowest to highest: built-in benchmark defaults, then the
//! config file (`--config`), then explicit command-line flags. The file
//! is JSON with a mandatory `schema_version` (currently 1); unknown keys
//! are rejected so typos fail loudly. Every field has a default: runs 10,
//! seed 0, output directory `out`, format `both`, thread count automatic,
//! and solver parameters as the chosen benchmark defines them.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use quantgraph_core::benchmarks::Benchmark;
use quantgraph_core::encoding::FixedPointEncoding;
use quantgraph_core::gas::GasConfig;
use serde::{Deserialize, Serialize};

use crate::errors::CliError;

/// Which artifact families a command writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn writes_csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
    pub fn writes_json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

/// Flags shared by every subcommand. All are optional; omitted flags fall
/// back to the config file and then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Number of seeded repetitions (run i uses seed --seed + i)
    #[arg(long)]
    pub runs: Option<usize>,

    /// Base seed for the repetition ladder
    #[arg(long)]
    pub seed: Option<u64>,

    /// Control-window length N_c (inputs optimized per window)
    #[arg(long)]
    pub nc: Option<usize>,

    /// Prediction-horizon length N_p (cost-accumulating steps, >= N_c)
    #[arg(long)]
    pub np: Option<usize>,

    /// Bits per input channel in the warm-start stage
    #[arg(long)]
    pub mloc: Option<u32>,

    /// Bits per input channel in the window search
    #[arg(long)]
    pub mglob: Option<u32>,

    /// Total closed-loop steps T
    #[arg(long)]
    pub horizon: Option<usize>,

    /// Skip the warm-start stage and cold-start the window search
    #[arg(long)]
    pub no_local_stage: bool,

    /// Also run the exhaustive classical baseline and report both solvers
    #[arg(long)]
    pub compare_classical: bool,

    /// Directory artifacts are written into
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Which artifacts to write
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Worker threads for seeded repetitions (0 or omitted: logical
    /// cores; the QUANTGRAPH_THREADS variable overrides this flag)
    #[arg(long)]
    pub threads: Option<usize>,

    /// JSON config file supplying defaults for all of the above
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Adaptive-search overrides, file and resolved form.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasOverrides {
    /// Initial iteration cap K0.
    pub k0: Option<u64>,
    /// Hard iteration cap; omitted means ceil((pi/4)*sqrt(N)).
    pub k_max: Option<u64>,
    /// Idle doubling sweeps before the search accepts its incumbent.
    pub stall_sweeps: Option<u32>,
    /// Statevector register width limit.
    pub qubit_cap: Option<u32>,
}

impl GasOverrides {
    fn or(self, lower: GasOverrides) -> GasOverrides {
        GasOverrides {
            k0: self.k0.or(lower.k0),
            k_max: self.k_max.or(lower.k_max),
            stall_sweeps: self.stall_sweeps.or(lower.stall_sweeps),
            qubit_cap: self.qubit_cap.or(lower.qubit_cap),
        }
    }

    /// The search configuration with these overrides applied.
    pub fn apply(&self, mut gas: GasConfig) -> GasConfig {
        if let Some(k0) = self.k0 {
            gas.k0 = k0;
        }
        if let Some(k_max) = self.k_max {
            gas.k_max = Some(k_max);
        }
        if let Some(sweeps) = self.stall_sweeps {
            gas.max_stall_sweeps = sweeps;
        }
        if let Some(cap) = self.qubit_cap {
            gas.qubit_cap = cap;
        }
        gas
    }
}

/// The config file schema. Everything is optional except the version tag.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub schema_version: u32,
    /// Must match the subcommand when present.
    pub benchmark: Option<String>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub nc: Option<usize>,
    pub np: Option<usize>,
    pub mloc: Option<u32>,
    pub mglob: Option<u32>,
    pub horizon: Option<usize>,
    pub local_stage: Option<bool>,
    pub compare_classical: Option<bool>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    /// QUBO problem file for the qubo-file benchmark.
    pub qubo_path: Option<PathBuf>,
    pub gas: Option<GasOverrides>,
}

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file: RunConfigFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if file.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "{}: schema_version {} is not supported (expected {})",
                path.display(),
                file.schema_version,
                CONFIG_SCHEMA_VERSION
            )));
        }
        Ok(file)
    }
}

/// Fully merged run settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub benchmark: String,
    pub runs: usize,
    pub seed: u64,
    pub nc: Option<usize>,
    pub np: Option<usize>,
    pub mloc: Option<u32>,
    pub mglob: Option<u32>,
    pub horizon: Option<usize>,
    pub local_stage: Option<bool>,
    pub compare_classical: bool,
    pub out: PathBuf,
    pub format: Format,
    pub threads: Option<usize>,
    pub qubo_path: Option<PathBuf>,
    pub gas: GasOverrides,
}

impl Settings {
    /// Merge defaults, the config file (if any), and flags for the named
    /// subcommand.
    pub fn resolve(benchmark: &str, common: &CommonArgs) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(path) => RunConfigFile::load(path)?,
            None => RunConfigFile { schema_version: CONFIG_SCHEMA_VERSION, ..Default::default() },
        };
        if let Some(named) = &file.benchmark {
            if named != benchmark {
                return Err(CliError::Config(format!(
                    "config file is for benchmark '{named}' but the command ran '{benchmark}'"
                )));
            }
        }
        let flag_gas = GasOverrides::default();
        Ok(Settings {
            benchmark: benchmark.to_string(),
            runs: common.runs.or(file.runs).unwrap_or(10),
            seed: common.seed.or(file.seed).unwrap_or(0),
            nc: common.nc.or(file.nc),
            np: common.np.or(file.np),
            mloc: common.mloc.or(file.mloc),
            mglob: common.mglob.or(file.mglob),
            horizon: common.horizon.or(file.horizon),
            local_stage: if common.no_local_stage { Some(false) } else { file.local_stage },
            compare_classical: common.compare_classical
                || file.compare_classical.unwrap_or(false),
            out: common.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            format: common.format.or(file.format).unwrap_or(Format::Both),
            threads: common.threads.or(file.threads),
            qubo_path: file.qubo_path,
            gas: flag_gas.or(file.gas.unwrap_or_default()),
        })
    }

    /// Seeds for the repetition ladder.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|i| self.seed.wrapping_add(i)).collect()
    }

    /// Worker-thread count for this invocation: the QUANTGRAPH_THREADS
    /// environment variable beats the flag, which beats the automatic
    /// choice (0 = one per logical core).
    pub fn thread_count(&self) -> Result<usize, CliError> {
        match std::env::var("QUANTGRAPH_THREADS") {
            Ok(value) => value.trim().parse::<usize>().map_err(|_| {
                CliError::Config(format!(
                    "QUANTGRAPH_THREADS must be a nonnegative integer, got '{value}'"
                ))
            }),
            Err(_) => Ok(self.threads.unwrap_or(0)),
        }
    }

    /// Rewrites a control benchmark according to these settings.
    pub fn apply_to_benchmark(&self, bench: &mut Benchmark) -> Result<(), CliError> {
        if self.runs == 0 {
            return Err(CliError::Config("--runs must be at least 1".into()));
        }
        if let Some(t) = self.horizon {
            bench.total_steps = t;
        }
        if let Some(nc) = self.nc {
            bench.options.n_c = nc;
        }
        if let Some(np) = self.np {
            bench.options.n_p = Some(np);
        }
        if let Some(bits) = self.mglob {
            bench.encoding = FixedPointEncoding::new(
                bench.encoding.u_min().clone(),
                bench.encoding.u_max().clone(),
                bits,
            )?;
        }
        if let Some(bits) = self.mloc {
            bench.options.local_bits = Some(bits);
        }
        // Uniform command-line default: the warm-start stage is on unless
        // --no-local-stage (or the config file) turns it off. The stage
        // supports linear dynamics only, so benchmarks with nonlinear
        // dynamics fail validation with the configuration error that names
        // the flag — cold-starting them is an explicit choice.
        bench.options.local_stage = self.local_stage.unwrap_or(true);
        bench.options.gas = self.gas.apply(bench.options.gas.clone());
        Ok(())
    }

    /// The experiment-defining fields, echoed into every summary so a
    /// reader can reproduce the run. Output plumbing (directory, format,
    /// thread count) is deliberately left out: it cannot change results.
    pub fn echo(&self, bench: Option<&Benchmark>) -> ConfigEcho {
        ConfigEcho {
            benchmark: self.benchmark.clone(),
            runs: self.runs,
            seed: self.seed,
            nc: bench.map(|b| b.options.n_c),
            np: bench.and_then(|b| b.options.n_p),
            mloc: bench.and_then(|b| b.options.local_bits),
            mglob: bench.map(|b| b.encoding.bits_per_input()),
            horizon: bench.map(|b| b.total_steps),
            local_stage: bench.map(|b| b.options.local_stage),
            compare_classical: self.compare_classical,
            gas: self.gas,
        }
    }
}

/// Resolved experiment configuration echoed into summaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub benchmark: String,
    pub runs: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nc: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub np: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mloc: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mglob: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_stage: Option<bool>,
    pub compare_classical: bool,
    pub gas: GasOverrides,
}
