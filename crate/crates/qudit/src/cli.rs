//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qudit_core::bases::{BasisKind, CoeffSequence, OrthonormalBasis};
use qudit_core::c2::{enumerate_candidates, in_measure_zero_set, prune_candidates, C2Config, CandidateSet};
use qudit_core::measurement::{born_distribution, sample_counts};
use qudit_core::oracle::{trial_rng, CampaignConfig, Strategy};
use qudit_core::povm::{
    reconstruct_via_povm, OrderingMode, PovmConfig, PovmReconstruction, PovmSpec, SampledDevice, SimulatedDevice,
};
use qudit_core::{Error, PureState, DEFAULT_TOL};
use serde::Serialize;
use serde_json::{json, Value};

use crate::benchmark;
use crate::io::{self, ComplexPairs, InputError, Provenance, StateDoc};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qudit",
    version,
    about = "Pure qudit state reconstruction from two measurement distributions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for every random draw
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Numerical tolerance
    #[arg(long, default_value_t = DEFAULT_TOL, value_parser = positive_f64)]
    pub tol: f64,
    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a measurement basis as JSON rows
    GenBasis {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        dim: u64,
        #[arg(long, value_enum)]
        basis: BasisArg,
        #[command(flatten)]
        common: Common,
    },
    /// Born-rule distribution of a state in a basis
    Simulate {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_enum)]
        basis: BasisArg,
        /// Sample this many shots instead of returning exact probabilities
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        shots: Option<u64>,
        #[arg(long)]
        renormalize: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Candidate states from position and C2 distributions
    ReconstructC2 {
        #[arg(long)]
        pos: PathBuf,
        #[arg(long)]
        c2dist: PathBuf,
        /// Drop candidates that do not reproduce both distributions within --tol
        #[arg(long)]
        prune: bool,
        /// Allow dimensions above the enumeration cap
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct a state through the adaptive POVM measurement
    ReconstructPovm {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Chain)]
        mode: ModeArg,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        shots: Option<u64>,
        #[arg(long)]
        renormalize: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Report whether a state breaks the C2 phase recursion
    CheckMeasureZero {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        renormalize: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo campaigns over Haar-random states, as CSV
    Benchmark {
        /// Comma-separated dimensions
        #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u64).range(2..))]
        dim: Vec<u64>,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, value_enum, default_value_t = StrategyArg::Both)]
        strategy: StrategyArg,
        #[arg(long, value_enum, default_value_t = ModeArg::Chain)]
        mode: ModeArg,
        /// Fill the seconds column with wall-clock time
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Position,
    Fourier,
    C2,
}

impl From<BasisArg> for BasisKind {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Position => BasisKind::Position,
            BasisArg::Fourier => BasisKind::Fourier,
            BasisArg::C2 => BasisKind::C2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Chain,
    Star,
}

impl From<ModeArg> for OrderingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Chain => OrderingMode::Chain,
            ModeArg::Star => OrderingMode::Star,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    C2,
    Povm,
    Both,
}

impl StrategyArg {
    fn strategies(self) -> Vec<Strategy> {
        match self {
            StrategyArg::C2 => vec![Strategy::C2],
            StrategyArg::Povm => vec![Strategy::Povm],
            StrategyArg::Both => vec![Strategy::C2, Strategy::Povm],
        }
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be a positive number".into())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
    /// A computation failed; `report` is written as the output document.
    #[error("{error}")]
    Domain { error: Error, report: Value },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain { .. } => EXIT_DOMAIN,
            CliError::Input(_) | CliError::Output(_) => EXIT_USAGE,
        }
    }
}

fn domain(prov: Provenance, error: Error) -> CliError {
    CliError::Domain {
        report: json!({
            "provenance": prov,
            "error": error.name(),
            "message": error.to_string(),
        }),
        error,
    }
}

#[derive(Serialize)]
struct BasisDoc {
    provenance: Provenance,
    dim: usize,
    basis: &'static str,
    rows: Vec<ComplexPairs>,
}

#[derive(Serialize)]
struct DistributionOut {
    provenance: Provenance,
    dim: usize,
    source: &'static str,
    shots: Option<u64>,
    probs: Vec<f64>,
}

#[derive(Serialize)]
struct FailureRecord {
    index: usize,
    site: usize,
}

#[derive(Serialize)]
struct CandidatesDoc {
    provenance: Provenance,
    dim: usize,
    support: Vec<usize>,
    bound: usize,
    branch_count: usize,
    degenerate_steps: usize,
    pruned: bool,
    failed: Option<FailureRecord>,
    candidates: Vec<ComplexPairs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'static str>,
}

impl CandidatesDoc {
    fn new(prov: Provenance, cs: &CandidateSet) -> Self {
        CandidatesDoc {
            provenance: prov,
            dim: cs.dim,
            support: cs.support.sites().to_vec(),
            bound: cs.bound(),
            branch_count: cs.branch_count,
            degenerate_steps: cs.degenerate_steps,
            pruned: cs.pruned,
            failed: cs.failed.map(|f| FailureRecord {
                index: f.index,
                site: f.site,
            }),
            candidates: cs.candidates.iter().map(|c| io::to_pairs(c.amps())).collect(),
            error: None,
        }
    }
}

#[derive(Serialize)]
struct PovmDoc {
    mode: &'static str,
    ordering: Vec<usize>,
    backtracks: usize,
    pairs: Vec<(usize, usize)>,
    /// Diagonal of each element; the last one is the remainder.
    elements: Vec<Vec<f64>>,
}

impl PovmDoc {
    fn new(spec: &PovmSpec) -> Self {
        PovmDoc {
            mode: spec.ordering.mode.as_str(),
            ordering: spec.ordering.seq.clone(),
            backtracks: spec.ordering.backtracks,
            pairs: spec.pair_map.clone(),
            elements: spec
                .elements
                .iter()
                .map(|g| g.matrix().diagonal().iter().map(|c| c.re).collect())
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct PhaseDifference {
    sites: (usize, usize),
    delta: f64,
}

#[derive(Serialize)]
struct ReconstructionDoc {
    provenance: Provenance,
    dim: usize,
    shots: Option<u64>,
    path: &'static str,
    support: Vec<usize>,
    fidelity: f64,
    state: StateDoc,
    differences: Vec<PhaseDifference>,
    povm: Option<PovmDoc>,
}

#[derive(Serialize)]
struct ConsultedDoc {
    index: usize,
    magnitude: f64,
}

#[derive(Serialize)]
struct MeasureZeroDoc {
    provenance: Provenance,
    dim: usize,
    in_set: bool,
    failing_index: Option<usize>,
    margin: Option<f64>,
    consulted: Vec<ConsultedDoc>,
}

fn reconstruct_povm(
    s: &PureState,
    mode: OrderingMode,
    shots: Option<u64>,
    seed: u64,
) -> qudit_core::Result<PovmReconstruction> {
    let d = s.dim();
    let p = born_distribution(s, &OrthonormalBasis::position(d)?)?;
    let cfg = PovmConfig {
        mode,
        ..PovmConfig::default()
    };
    match shots {
        None => reconstruct_via_povm(&p, &mut SimulatedDevice::new(s.clone()), d, &cfg),
        Some(n) => {
            let mut rng = trial_rng(seed, 0);
            let p = sample_counts(&p, n, &mut rng)?;
            let cfg = PovmConfig {
                consistency_tol: f64::INFINITY,
                ..cfg
            };
            let mut device = SampledDevice::new(s.clone(), n, &mut rng);
            reconstruct_via_povm(&p, &mut device, d, &cfg)
        }
    }
}

/// Runs one parsed command and returns the text to emit.
pub fn execute(command: &Command) -> Result<String, CliError> {
    match command {
        Command::GenBasis { dim, basis, common } => {
            let prov = Provenance::new(common.seed, common.tol);
            let b = OrthonormalBasis::new((*basis).into(), *dim as usize).map_err(|e| domain(prov, e))?;
            Ok(io::to_json(&BasisDoc {
                provenance: prov,
                dim: b.dim(),
                basis: b.kind().as_str(),
                rows: b.rows().map(io::to_pairs).collect(),
            }))
        }
        Command::Simulate {
            state,
            basis,
            shots,
            renormalize,
            common,
        } => {
            let prov = Provenance::new(common.seed, common.tol);
            let s = io::read_state(state, *renormalize)?;
            let run = || -> qudit_core::Result<_> {
                let b = OrthonormalBasis::new((*basis).into(), s.dim())?;
                let exact = born_distribution(&s, &b)?;
                match shots {
                    None => Ok(exact),
                    Some(n) => sample_counts(&exact, *n, &mut trial_rng(common.seed, 0)),
                }
            };
            let dist = run().map_err(|e| domain(prov, e))?;
            Ok(io::to_json(&DistributionOut {
                provenance: prov,
                dim: dist.len(),
                source: dist.source().as_str(),
                shots: *shots,
                probs: dist.probs().to_vec(),
            }))
        }
        Command::ReconstructC2 {
            pos,
            c2dist,
            prune,
            force,
            common,
        } => {
            let prov = Provenance::new(common.seed, common.tol);
            let p = io::read_distribution(pos)?;
            let q = io::read_distribution(c2dist)?;
            let cfg = C2Config {
                force: *force,
                ..C2Config::with_chain_tol(common.tol)
            };
            let coeffs = CoeffSequence::new(p.len()).map_err(|e| domain(prov, e))?;
            let mut cs = enumerate_candidates(&p, &q, &coeffs, &cfg).map_err(|e| domain(prov, e))?;
            if let Some(f) = cs.failed {
                let mut doc = CandidatesDoc::new(prov, &cs);
                let error = Error::ChainBroken {
                    index: f.index,
                    site: f.site,
                };
                doc.error = Some(error.name());
                return Err(CliError::Domain {
                    report: serde_json::to_value(&doc).expect("document serializes"),
                    error,
                });
            }
            if *prune {
                cs = prune_candidates(&cs, &p, &q, &coeffs, common.tol);
            }
            Ok(io::to_json(&CandidatesDoc::new(prov, &cs)))
        }
        Command::ReconstructPovm {
            state,
            mode,
            shots,
            renormalize,
            common,
        } => {
            let prov = Provenance::new(common.seed, common.tol);
            let s = io::read_state(state, *renormalize)?;
            let r = reconstruct_povm(&s, (*mode).into(), *shots, common.seed).map_err(|e| domain(prov, e))?;
            let fidelity = r.state.fidelity(&s).map_err(|e| domain(prov, e))?;
            Ok(io::to_json(&ReconstructionDoc {
                provenance: prov,
                dim: s.dim(),
                shots: *shots,
                path: r.path.as_str(),
                support: r.support.sites().to_vec(),
                fidelity,
                state: StateDoc::from_state(&r.state),
                differences: r
                    .differences
                    .iter()
                    .map(|&(sites, delta)| PhaseDifference { sites, delta })
                    .collect(),
                povm: r.povm.as_ref().map(PovmDoc::new),
            }))
        }
        Command::CheckMeasureZero {
            state,
            renormalize,
            common,
        } => {
            let prov = Provenance::new(common.seed, common.tol);
            let s = io::read_state(state, *renormalize)?;
            let report = CoeffSequence::new(s.dim())
                .and_then(|a| in_measure_zero_set(&s, &a, common.tol))
                .map_err(|e| domain(prov, e))?;
            Ok(io::to_json(&MeasureZeroDoc {
                provenance: prov,
                dim: s.dim(),
                in_set: report.in_set,
                failing_index: report.failing_index,
                margin: report.margin,
                consulted: report
                    .consulted
                    .iter()
                    .map(|c| ConsultedDoc {
                        index: c.index,
                        magnitude: c.magnitude,
                    })
                    .collect(),
            }))
        }
        Command::Benchmark {
            dim,
            trials,
            strategy,
            mode,
            timing,
            common,
        } => {
            let prov = Provenance::new(common.seed, common.tol);
            let dims: Vec<usize> = dim.iter().map(|&d| d as usize).collect();
            let template = CampaignConfig {
                mode: (*mode).into(),
                ..CampaignConfig::new(2, *trials, Strategy::C2, common.seed, common.tol)
            };
            let reports =
                benchmark::run_grid(&dims, &strategy.strategies(), template, *timing).map_err(|e| domain(prov, e))?;
            Ok(benchmark::to_csv(&reports))
        }
    }
}

fn out_path(command: &Command) -> Option<&std::path::Path> {
    let common = match command {
        Command::GenBasis { common, .. }
        | Command::Simulate { common, .. }
        | Command::ReconstructC2 { common, .. }
        | Command::ReconstructPovm { common, .. }
        | Command::CheckMeasureZero { common, .. }
        | Command::Benchmark { common, .. } => common,
    };
    common.out.as_deref()
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let out = out_path(&cli.command);
    match execute(&cli.command) {
        Ok(text) => match io::emit(out, &text) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: cannot write output: {e}");
                EXIT_USAGE
            }
        },
        Err(err) => {
            eprintln!("error: {err}");
            if let CliError::Domain { report, .. } = &err {
                if let Err(e) = io::emit(out, &io::to_json(report)) {
                    eprintln!("error: cannot write output: {e}");
                }
            }
            err.exit_code()
        }
    }
}
