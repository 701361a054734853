// SPDX-License-Identifier: Apache-2.0

//! `flicforq`: compile gates, simulate pulse sequences, score fidelities and
//! run parameter sweeps. Data goes to stdout or `--out`; diagnostics go to
//! stderr.
//!
//! Exit codes: 2 schema/parse error, 3 validation violations, 4 integrator
//! or I/O failure, 5 fidelity below `--min`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use flicforq::analysis::{
    bloch_norm, cnot_error, concurrence_with_tol, d_concurrence, gate_fidelity, one_qubit_error_budget, reduced_bloch,
    sideband_check,
};
use flicforq::compiler::{Axis, Compiler};
use flicforq::integrator::{evolve, format_g, logical_propagator, DensityState, StepPolicy};
use flicforq::model::{validate_sequence, SequenceDocument, Severity};
use flicforq::{PulseSequence, Qubit, RotationWord, SystemParams};

#[derive(Parser)]
#[command(name = "flicforq", version, about = "Pulse-level simulator and gate compiler for two fixed-coupled qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a named gate into a pulse sequence (JSON).
    Compile {
        #[arg(value_enum)]
        gate: Gate,
        #[arg(long)]
        params: PathBuf,
        /// Target qubit of x90/y90.
        #[arg(long, default_value_t = 1)]
        qubit: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve an initial state through a sequence and write the trajectory CSV.
    Simulate {
        sequence: PathBuf,
        /// `00`..`11`, `bloch:x,y,z;x,y,z` or `raw:c1,...,c15`.
        #[arg(long, default_value = "00")]
        state: String,
        #[arg(long, value_enum, default_value_t = FrameArg::Rotating)]
        frame: FrameArg,
        #[arg(long, default_value_t = 200)]
        steps_per_period: usize,
        /// Uniform samples per t0_sync, besides segment boundaries.
        #[arg(long, default_value_t = 8)]
        samples_per_sync: usize,
        /// Emit all 15 coefficients instead of the two Bloch vectors.
        #[arg(long)]
        full: bool,
        /// Trajectory CSV path; the final-state JSON then goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Process fidelity of a sequence against a rotation word.
    Fidelity {
        sequence: PathBuf,
        /// e.g. "X2^1/2 Y1^1/2 X1X2^1/2 Y1^-1/2 Z1^1/2"
        word: String,
        #[arg(long)]
        min: Option<f64>,
        /// Skip the local-z alignment.
        #[arg(long)]
        no_align: bool,
        #[arg(long, default_value_t = 200)]
        steps_per_period: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a metric over a grid of (delta, wxx) points.
    Sweep {
        grid: PathBuf,
        #[arg(long, value_enum)]
        metric: Metric,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value_t = 200)]
        steps_per_period: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sideband positions and resonance gap for given drive amplitudes.
    Resonance {
        #[arg(long)]
        params: PathBuf,
        /// Amplitudes `a1,a2`; defaults to delta/2 each.
        #[arg(long, value_delimiter = ',')]
        amps: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Gate {
    D,
    XxHalf,
    Cnot,
    X90,
    Y90,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FrameArg {
    Lab,
    Rotating,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    CnotError,
    OneQubitError,
    DConcurrence,
}

enum Failure {
    Schema(String),
    Validation(Vec<String>),
    Runtime(String),
    BelowThreshold { value: f64, min: f64 },
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Schema(_) => 2,
            Failure::Validation(_) => 3,
            Failure::Runtime(_) => 4,
            Failure::BelowThreshold { .. } => 5,
        }
    }

    fn report(&self) {
        match self {
            Failure::Schema(m) => eprintln!("error: {m}"),
            Failure::Validation(ds) => {
                for d in ds {
                    eprintln!("{d}");
                }
            }
            Failure::Runtime(m) => eprintln!("error: {m}"),
            Failure::BelowThreshold { value, min } => {
                eprintln!("error: process fidelity {value:.9} is below --min {min}")
            }
        }
    }
}

type Outcome = Result<(), Failure>;

fn schema<E: std::fmt::Display>(ctx: &Path) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Schema(format!("{}: {e}", ctx.display()))
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(schema(path))?;
    serde_json::from_str(&text).map_err(schema(path))
}

fn read_params(path: &Path) -> Result<SystemParams<f64>, Failure> {
    read_json(path)
}

fn read_sequence(path: &Path) -> Result<(SystemParams<f64>, PulseSequence<f64>), Failure> {
    let doc: SequenceDocument<f64> = read_json(path)?;
    let (p, seq) = doc.into_parts().map_err(schema(path))?;
    for d in validate_sequence(&p, &seq) {
        eprintln!("{d}");
    }
    Ok((p, seq))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(runtime),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn parse_qubit(q: u8) -> Result<Qubit, Failure> {
    Qubit::try_from(q).map_err(|e| Failure::Schema(e.to_string()))
}

fn compile(gate: Gate, params: &Path, qubit: u8, out: &Option<PathBuf>) -> Outcome {
    let p = read_params(params)?;
    let q = parse_qubit(qubit)?;
    let c = Compiler::new(&p);
    let seq = match gate {
        Gate::D => c.d(0.0),
        Gate::XxHalf => c.xx_half(0.0),
        Gate::Cnot => c.cnot(),
        Gate::X90 | Gate::Y90 => {
            let axis = if matches!(gate, Gate::X90) { Axis::X } else { Axis::Y };
            c.one_qubit(q, axis, std::f64::consts::FRAC_PI_2, 0.0)
                .map(|s| PulseSequence::from_segments(vec![s]))
        }
    }
    .map_err(|e| Failure::Validation(vec![format!("violation: {e}")]))?;
    let diagnostics = validate_sequence(&p, &seq);
    let violations: Vec<String> = diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Violation)
        .map(ToString::to_string)
        .collect();
    if !violations.is_empty() {
        return Err(Failure::Validation(violations));
    }
    for d in &diagnostics {
        eprintln!("{d}");
    }
    emit(out, &to_json(&SequenceDocument::new(&p, &seq)))
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, Failure> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Schema(format!("state `{s}`: {e}")))?;
    if v.len() != n {
        return Err(Failure::Schema(format!("state `{s}`: expected {n} numbers")));
    }
    Ok(v)
}

fn parse_state(spec: &str) -> Result<DensityState<f64>, Failure> {
    let state = if let Some(rest) = spec.strip_prefix("bloch:") {
        let (a, b) = rest
            .split_once(';')
            .ok_or_else(|| Failure::Schema(format!("state `{spec}`: expected two Bloch vectors separated by `;`")))?;
        let (a, b) = (parse_floats(a, 3)?, parse_floats(b, 3)?);
        DensityState::product([a[0], a[1], a[2]], [b[0], b[1], b[2]])
    } else if let Some(rest) = spec.strip_prefix("raw:") {
        let v = parse_floats(rest, 15)?;
        DensityState {
            c: std::array::from_fn(|i| v[i]),
        }
    } else {
        match spec {
            "00" => DensityState::basis(0),
            "01" => DensityState::basis(1),
            "10" => DensityState::basis(2),
            "11" => DensityState::basis(3),
            _ => return Err(Failure::Schema(format!("unknown state `{spec}`"))),
        }
    };
    state.validate().map_err(|e| Failure::Schema(e.to_string()))?;
    Ok(state)
}

#[derive(Serialize)]
struct FinalState {
    t: f64,
    frame: &'static str,
    bloch1: [f64; 3],
    bloch2: [f64; 3],
    bloch_norms: [f64; 2],
    purity: f64,
    concurrence: f64,
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    sequence: &Path,
    state: &str,
    frame: FrameArg,
    steps_per_period: usize,
    samples_per_sync: usize,
    full: bool,
    out: &Option<PathBuf>,
) -> Outcome {
    let (p, seq) = read_sequence(sequence)?;
    let rho0 = parse_state(state)?;
    let policy = StepPolicy {
        steps_per_period,
        samples_per_sync,
        richardson: false,
    };
    let mut traj = evolve(&p, &seq, &rho0, policy).map_err(runtime)?;
    if frame == FrameArg::Rotating {
        traj = traj.to_rotating_frame(&p).map_err(runtime)?;
    }
    match out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            traj.write_csv(io::BufWriter::new(file), full)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        }
        None => {
            let mut buf = Vec::new();
            traj.write_csv(&mut buf, full).map_err(runtime)?;
            io::stdout().write_all(&buf).map_err(runtime)?;
        }
    }

    let last = traj.final_state();
    let min_eig = last.min_eigenvalue();
    if min_eig < -1e-9 {
        eprintln!("warning: final state has eigenvalue {min_eig:.3e}; raise --steps-per-period for tighter positivity");
    }
    let b1 = reduced_bloch(last, Qubit::One);
    let b2 = reduced_bloch(last, Qubit::Two);
    let summary = FinalState {
        t: traj.final_time(),
        frame: traj.frame.label(),
        bloch1: b1,
        bloch2: b2,
        bloch_norms: [bloch_norm(&b1), bloch_norm(&b2)],
        purity: last.purity(),
        concurrence: concurrence_with_tol(last, 1e-3).map_err(runtime)?,
    };
    if out.is_some() {
        emit(&None, &to_json(&summary))?;
    }
    Ok(())
}

fn fidelity(
    sequence: &Path,
    word: &str,
    min: Option<f64>,
    no_align: bool,
    steps_per_period: usize,
    out: &Option<PathBuf>,
) -> Outcome {
    let word: RotationWord = word.parse().map_err(|e| Failure::Schema(format!("{e}")))?;
    let (p, seq) = read_sequence(sequence)?;
    let u = logical_propagator(&p, &seq, StepPolicy::with_steps(steps_per_period));
    let report = gate_fidelity(&u, &word, !no_align).map_err(runtime)?;
    emit(out, &to_json(&report))?;
    match min {
        Some(min) if report.process < min => Err(Failure::BelowThreshold {
            value: report.process,
            min,
        }),
        _ => Ok(()),
    }
}

#[derive(Deserialize)]
struct GridPoint {
    delta: f64,
    wxx: f64,
}

fn sweep_point(point: &GridPoint, metric: Metric, policy: StepPolicy) -> Result<f64, String> {
    let p = SystemParams::symmetric(point.delta, point.wxx).map_err(|e| e.to_string())?;
    match metric {
        Metric::CnotError => cnot_error(&p, policy),
        Metric::OneQubitError => one_qubit_error_budget(&p, false, policy).map(|b| b.simulated_error),
        Metric::DConcurrence => d_concurrence(&p, policy),
    }
    .map_err(|e| e.to_string())
}

fn sweep(grid: &Path, metric: Metric, jobs: Option<usize>, steps_per_period: usize, out: &Option<PathBuf>) -> Outcome {
    let points: Vec<GridPoint> = read_json(grid)?;
    let jobs = jobs
        .or_else(|| std::thread::available_parallelism().ok().map(usize::from))
        .unwrap_or(1)
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(runtime)?;
    let policy = StepPolicy::with_steps(steps_per_period);
    let results: Vec<Result<f64, String>> =
        pool.install(|| points.par_iter().map(|pt| sweep_point(pt, metric, policy)).collect());

    let mut csv = String::from("delta,wxx,metric\n");
    let mut failed = 0;
    for (pt, r) in points.iter().zip(&results) {
        let value = match r {
            Ok(v) => format_g(*v),
            Err(e) => {
                failed += 1;
                eprintln!("error: delta={} wxx={}: {e}", pt.delta, pt.wxx);
                "nan".to_string()
            }
        };
        csv.push_str(&format!("{},{},{}\n", format_g(pt.delta), format_g(pt.wxx), value));
    }
    emit(out, &csv)?;
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} grid point(s) failed")));
    }
    Ok(())
}

fn resonance(params: &Path, amps: &Option<Vec<f64>>, out: &Option<PathBuf>) -> Outcome {
    let p = read_params(params)?;
    let (a1, a2) = match amps.as_deref() {
        Some([a, b]) => (*a, *b),
        Some(_) => return Err(Failure::Schema("--amps takes exactly two values".into())),
        None => (p.delta() / 2.0, p.delta() / 2.0),
    };
    let report = sideband_check(&p, a1, a2).map_err(|e| Failure::Schema(e.to_string()))?;
    emit(out, &to_json(&report))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Compile {
            gate,
            params,
            qubit,
            out,
        } => compile(gate, &params, qubit, &out),
        Command::Simulate {
            sequence,
            state,
            frame,
            steps_per_period,
            samples_per_sync,
            full,
            out,
        } => simulate(&sequence, &state, frame, steps_per_period, samples_per_sync, full, &out),
        Command::Fidelity {
            sequence,
            word,
            min,
            no_align,
            steps_per_period,
            out,
        } => fidelity(&sequence, &word, min, no_align, steps_per_period, &out),
        Command::Sweep {
            grid,
            metric,
            jobs,
            steps_per_period,
            out,
        } => sweep(&grid, metric, jobs, steps_per_period, &out),
        Command::Resonance { params, amps, out } => resonance(&params, &amps, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            ExitCode::from(f.code())
        }
    }
}
