//! Command-line front end: `levels`, `truth-table`, `run`, `sweep`, and
//! `budget` subcommands emitting JSON/CSV for plotting.
//!
//! Frequencies on the command line are in units of g_b and durations in
//! 1/g_b; `--gb-si` (rad/s) converts reported times to seconds and scales
//! `_si` bindings in sequence files. Exit codes: 0 success, 2 usage or
//! config error, 3 sequence parse/compile error, 4 numerical
//! non-convergence.

use crate::analysis::{
    error_budget, linspace, sweep_average_fidelity, sweep_with_full_model, AnalysisError,
};
use crate::device::{eigenlevels, parse_device_config, transition_table, ConvergenceReport,
    DeviceError};
use crate::dynamics::{DynamicsError, GateParams, ModelKind};
use crate::hilbert::{overlap, C64};
use crate::protocol::{
    build_schedule, computational_block, embed_computational, run_schedule, run_truth_table,
    ProtocolError, Schedule, TruthTable,
};
use crate::pulseseq::{compile_source, PulseSeqError, DEFAULT_GB_SI};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Debug)]
enum CliError {
    /// Bad flags, bad config files, invalid parameter combinations.
    Usage(String),
    /// Pulse-sequence parse/compile failures (positions included).
    Seq(String),
    /// Numerical non-convergence or a failed internal consistency check.
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Seq(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Seq(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<DeviceError> for CliError {
    fn from(e: DeviceError) -> Self {
        match e {
            DeviceError::WindowTooSmall { .. } | DeviceError::NotConverged { .. } => {
                CliError::Numeric(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<PulseSeqError> for CliError {
    fn from(e: PulseSeqError) -> Self {
        CliError::Seq(e.to_string())
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Protocol(inner) => inner.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "cpgate",
    version,
    about = "Two-SQUID controlled-phase gate simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Gate parameters shared by every protocol-facing subcommand.
#[derive(Args, Debug, Clone)]
struct GateArgs {
    /// SQUID a <-> resonator coupling, in units of g_b
    #[arg(long, default_value_t = 1.0)]
    ga: f64,
    /// SQUID b <-> resonator coupling (the frequency unit)
    #[arg(long, default_value_t = 1.0)]
    gb: f64,
    /// detuning of SQUID b's 2<->3 transition from the resonator, units of g_b
    #[arg(long = "delta-c", default_value_t = 10.0)]
    delta_c: f64,
    /// master Rabi frequency: sets omega13, omega02, and omega12 together
    #[arg(long, default_value_t = 10.0)]
    omega: f64,
    /// Rabi frequency of the (1,3) pulse on SQUID a (overrides --omega)
    #[arg(long)]
    omega13: Option<f64>,
    /// Rabi frequency of the (0,2) pulse on SQUID a (overrides --omega;
    /// omega12 follows it unless given separately)
    #[arg(long)]
    omega02: Option<f64>,
    /// Rabi frequency of the (1,2) pulse on SQUID b (overrides --omega;
    /// omega02 follows it unless given separately)
    #[arg(long)]
    omega12: Option<f64>,
    /// highest retained photon number
    #[arg(long = "n-max", default_value_t = 2)]
    n_max: usize,
    /// SI value of g_b in rad/s (converts reported times to seconds)
    #[arg(long = "gb-si", default_value_t = DEFAULT_GB_SI)]
    gb_si: f64,
}

impl GateArgs {
    fn params(&self) -> Result<GateParams, CliError> {
        let omega_13 = self.omega13.unwrap_or(self.omega);
        let omega_02 = self.omega02.or(self.omega12).unwrap_or(self.omega);
        let omega_12 = self.omega12.or(self.omega02).unwrap_or(self.omega);
        let p = GateParams {
            g_a: self.ga,
            g_b: self.gb,
            delta_c: self.delta_c,
            omega_13,
            omega_02,
            omega_12,
            n_max: self.n_max,
        };
        p.validate()?;
        if !(self.gb_si > 0.0) {
            return Err(CliError::Usage(format!(
                "--gb-si must be positive, got {}",
                self.gb_si
            )));
        }
        if !p.dispersive_valid() {
            eprintln!(
                "warning: delta_c = {} g_b is below 5 g_b; the dispersive treatment of \
                 SQUID b is strained",
                p.delta_c
            );
        }
        Ok(p)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a SQUID's low-lying level structure from a device config file
    Levels {
        /// device config path (keys: capacitance_f, inductance_h,
        /// critical_current_a, bias_flux_phi0_fraction, grid_points,
        /// window_phi0)
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the gate's action on the four computational basis inputs
    TruthTable {
        #[command(flatten)]
        gate: GateArgs,
        /// ideal | full
        #[arg(long, default_value = "ideal")]
        model: String,
    },
    /// Propagate one input state through a schedule and report the outcome
    Run {
        #[command(flatten)]
        gate: GateArgs,
        /// ideal | full
        #[arg(long, default_value = "ideal")]
        model: String,
        /// computational basis input: 00 | 01 | 10 | 11
        #[arg(long)]
        input: Option<String>,
        /// eight comma-separated reals re,im per amplitude (|00>,|01>,|10>,|11>)
        #[arg(long)]
        amps: Option<String>,
        /// pulse-sequence file (.pseq); omitted = built-in five-step schedule
        #[arg(long)]
        seq: Option<PathBuf>,
        /// json | csv
        #[arg(long, default_value = "json")]
        format: String,
        /// write here instead of standard output
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sweep omega12 (with omega02 tied to it) and tabulate average fidelity
    Sweep {
        #[command(flatten)]
        gate: GateArgs,
        /// swept parameter (only `omega12` is supported)
        #[arg(long, default_value = "omega12")]
        param: String,
        /// first grid value, units of g_b
        #[arg(long)]
        from: f64,
        /// last grid value, units of g_b
        #[arg(long)]
        to: f64,
        /// number of grid points (>= 2)
        #[arg(long)]
        steps: usize,
        /// add full-model Monte-Carlo columns
        #[arg(long)]
        full: bool,
        /// Monte-Carlo samples per grid point
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// RNG seed (point i uses seed + i)
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// worker threads for --full (default: CPGATE_JOBS or all cores)
        #[arg(long)]
        jobs: Option<usize>,
        /// write here instead of standard output
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Report the error budget as JSON
    Budget {
        #[command(flatten)]
        gate: GateArgs,
        /// relaxation time of the intermediate level, units of 1/g_b
        #[arg(long = "gamma3-inv")]
        gamma3_inv: Option<f64>,
        /// Monte-Carlo samples for the full-model residual
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// RNG seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// replace the derived detuning s = gb^2/delta_c in the analytic
        /// terms (0 probes the error-free limit)
        #[arg(long = "s-override")]
        s_override: Option<f64>,
    },
}

/// Parses arguments and executes; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Levels { config } => cmd_levels(&config),
        Command::TruthTable { gate, model } => cmd_truth_table(&gate, &model),
        Command::Run {
            gate,
            model,
            input,
            amps,
            seq,
            format,
            output,
        } => cmd_run(&gate, &model, input, amps, seq, &format, output),
        Command::Sweep {
            gate,
            param,
            from,
            to,
            steps,
            full,
            samples,
            seed,
            jobs,
            output,
        } => cmd_sweep(&gate, &param, from, to, steps, full, samples, seed, jobs, output),
        Command::Budget {
            gate,
            gamma3_inv,
            samples,
            seed,
            s_override,
        } => cmd_budget(&gate, gamma3_inv, samples, seed, s_override),
    }
}

fn parse_model(s: &str) -> Result<ModelKind, CliError> {
    s.parse::<ModelKind>().map_err(CliError::Usage)
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// levels
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct LevelsReport {
    /// E_k - E_0, rad/s, lowest five levels.
    energies_rad_per_s: Vec<f64>,
    /// Nearest-neighbor spacings E_{k+1} - E_k, rad/s.
    spacings_rad_per_s: Vec<f64>,
    /// Full transition table; entry (i, j) is E_i - E_j, rad/s.
    transitions_rad_per_s: Vec<Vec<f64>>,
    convergence: ConvergenceReport,
}

fn cmd_levels(config: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", config.display())))?;
    let (squid, grid) = parse_device_config(&text)?;
    let levels = eigenlevels(&squid, &grid, 5)?;
    let spacings = levels
        .energies
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect::<Vec<_>>();
    let report = LevelsReport {
        spacings_rad_per_s: spacings,
        transitions_rad_per_s: transition_table(&levels),
        energies_rad_per_s: levels.energies,
        convergence: levels.convergence,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
    println!("{json}");
    Ok(())
}

// ---------------------------------------------------------------------------
// truth-table
// ---------------------------------------------------------------------------

fn fmt_complex(c: C64) -> String {
    format!("{:+.6}{:+.6}i", c.re, c.im)
}

fn print_truth_table(table: &TruthTable) {
    println!(
        "model: {}",
        match table.model {
            ModelKind::Ideal => "ideal",
            ModelKind::Full => "full",
        }
    );
    println!(
        "{:<5} {:>19} {:>19} {:>19} {:>19} {:>10} {:>10}",
        "input", "|00>", "|01>", "|10>", "|11>", "phase/pi", "leakage"
    );
    for row in &table.rows {
        println!(
            "{:<5} {:>19} {:>19} {:>19} {:>19} {:>10} {:>10}",
            row.input,
            fmt_complex(row.amplitudes[0]),
            fmt_complex(row.amplitudes[1]),
            fmt_complex(row.amplitudes[2]),
            fmt_complex(row.amplitudes[3]),
            format!("{:+.6}", row.relative_phase / std::f64::consts::PI),
            format!("{:.3e}", row.leakage),
        );
    }
}

fn cmd_truth_table(gate: &GateArgs, model: &str) -> Result<(), CliError> {
    let p = gate.params()?;
    let model = parse_model(model)?;
    let table = run_truth_table(&p, model)?;
    print_truth_table(&table);
    // exit 0 iff the *ideal*-model table matches the CP gate, whichever
    // model was displayed
    let ideal_ok = match model {
        ModelKind::Ideal => table.matches_ideal(1e-10),
        ModelKind::Full => run_truth_table(&p, ModelKind::Ideal)?.matches_ideal(1e-10),
    };
    if ideal_ok {
        Ok(())
    } else {
        Err(CliError::Numeric(
            "ideal-model truth table deviates from diag(1, 1, 1, -1) beyond 1e-10".into(),
        ))
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

fn parse_input_label(label: &str) -> Result<[C64; 4], CliError> {
    let idx = match label {
        "00" => 0,
        "01" => 1,
        "10" => 2,
        "11" => 3,
        other => {
            return Err(CliError::Usage(format!(
                "input must be one of 00|01|10|11, got `{other}`"
            )))
        }
    };
    let mut amps = [C64::new(0.0, 0.0); 4];
    amps[idx] = C64::new(1.0, 0.0);
    Ok(amps)
}

fn parse_amps(text: &str) -> Result<[C64; 4], CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 8 {
        return Err(CliError::Usage(format!(
            "--amps needs 8 comma-separated reals (re,im per amplitude), got {}",
            parts.len()
        )));
    }
    let mut vals = [0.0f64; 8];
    for (i, part) in parts.iter().enumerate() {
        vals[i] = part.trim().parse::<f64>().map_err(|_| {
            CliError::Usage(format!("--amps entry {} is not a number: `{part}`", i + 1))
        })?;
    }
    let amps: [C64; 4] = std::array::from_fn(|i| C64::new(vals[2 * i], vals[2 * i + 1]));
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(CliError::Usage(format!(
            "--amps has norm {norm}; must be 1 within 1e-6"
        )));
    }
    Ok(std::array::from_fn(|i| amps[i] / norm))
}

#[derive(Serialize)]
struct RunReport {
    model: String,
    source: String,
    input_amplitudes: [[f64; 2]; 4],
    /// Output amplitudes on the computational subspace ⊗ vacuum,
    /// order |00>, |01>, |10>, |11>.
    computational_amplitudes: [[f64; 2]; 4],
    /// Population outside the computational subspace ⊗ vacuum.
    leakage: f64,
    /// |⟨ideal output|output⟩|² with the ideal-model run of the same
    /// schedule as target.
    overlap_with_ideal: f64,
    /// Total schedule duration, units of 1/g_b.
    tau: f64,
    /// Total schedule duration in seconds at the configured --gb-si.
    tau_seconds: f64,
}

fn pairs(amps: &[C64; 4]) -> [[f64; 2]; 4] {
    std::array::from_fn(|i| [amps[i].re, amps[i].im])
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    gate: &GateArgs,
    model: &str,
    input: Option<String>,
    amps: Option<String>,
    seq: Option<PathBuf>,
    format: &str,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let p = gate.params()?;
    let model = parse_model(model)?;
    let in_amps = match (input, amps) {
        (Some(label), None) => parse_input_label(&label)?,
        (None, Some(text)) => parse_amps(&text)?,
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --input or --amps".into(),
            ))
        }
    };
    let (schedule, source): (Schedule, String) = match seq {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            (
                compile_source(&text, &p, gate.gb_si)?,
                path.display().to_string(),
            )
        }
        None => (build_schedule(&p)?, "built-in".into()),
    };
    let start = embed_computational(&in_amps, p.n_max);
    let out = run_schedule(&start, &schedule, &p, model)?;
    let ideal_out = run_schedule(&start, &schedule, &p, ModelKind::Ideal)?;
    let (block, leakage) = computational_block(&out);
    let fidelity = overlap(&ideal_out, &out)
        .map_err(|e| CliError::Usage(e.to_string()))?
        .norm_sqr();
    let tau = schedule.total_duration();
    let report = RunReport {
        model: match model {
            ModelKind::Ideal => "ideal".into(),
            ModelKind::Full => "full".into(),
        },
        source,
        input_amplitudes: pairs(&in_amps),
        computational_amplitudes: pairs(&block),
        leakage,
        overlap_with_ideal: fidelity,
        tau,
        tau_seconds: tau / gate.gb_si,
    };
    let text = match format {
        "json" => {
            let mut s = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
        "csv" => run_report_csv(&report),
        other => {
            return Err(CliError::Usage(format!(
                "format must be json or csv, got `{other}`"
            )))
        }
    };
    emit(&text, output.as_deref())
}

fn run_report_csv(r: &RunReport) -> String {
    let mut s = String::from(
        "re00,im00,re01,im01,re10,im10,re11,im11,leakage,overlap_with_ideal,tau,tau_seconds\n",
    );
    for pair in r.computational_amplitudes {
        s.push_str(&format!("{:.16e},{:.16e},", pair[0], pair[1]));
    }
    s.push_str(&format!(
        "{:.16e},{:.16e},{:.16e},{:.16e}\n",
        r.leakage, r.overlap_with_ideal, r.tau, r.tau_seconds
    ));
    s
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    gate: &GateArgs,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
    full: bool,
    samples: usize,
    seed: u64,
    jobs: Option<usize>,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    if param != "omega12" {
        return Err(CliError::Usage(format!(
            "only --param omega12 is supported, got `{param}`"
        )));
    }
    let p = gate.params()?;
    if !(from > 0.0) {
        return Err(CliError::Usage(format!(
            "--from must be positive, got {from}"
        )));
    }
    let grid = linspace(from, to, steps)?;
    let mut csv = String::new();
    if full {
        let points = with_jobs(jobs, || sweep_with_full_model(&p, &grid, samples, seed))??;
        csv.push_str("omega12_over_gb,avg_fidelity_analytic,avg_fidelity_full,stderr\n");
        for pt in points {
            let mc = pt.full.expect("full sweep fills the estimate");
            csv.push_str(&format!(
                "{:.11e},{:.11e},{:.11e},{:.11e}\n",
                pt.omega12, pt.analytic, mc.mean, mc.std_err
            ));
        }
    } else {
        let rows = sweep_average_fidelity(&grid, p.g_b, p.delta_c)?;
        csv.push_str("omega12_over_gb,avg_fidelity_analytic\n");
        for (omega12, analytic) in rows {
            csv.push_str(&format!("{:.11e},{:.11e}\n", omega12, analytic));
        }
    }
    emit(&csv, output.as_deref())
}

/// Runs `f` on a dedicated pool when a job count is requested via `--jobs`
/// or `CPGATE_JOBS`; otherwise uses the global pool.
fn with_jobs<R: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> R + Send,
) -> Result<R, CliError> {
    let jobs = match jobs {
        Some(j) => Some(j),
        None => match std::env::var("CPGATE_JOBS") {
            Ok(raw) => Some(raw.parse::<usize>().map_err(|_| {
                CliError::Usage(format!("CPGATE_JOBS must be a positive integer, got `{raw}`"))
            })?),
            Err(_) => None,
        },
    };
    match jobs {
        Some(0) => Err(CliError::Usage("job count must be at least 1".into())),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

// ---------------------------------------------------------------------------
// budget
// ---------------------------------------------------------------------------

fn cmd_budget(
    gate: &GateArgs,
    gamma3_inv: Option<f64>,
    samples: usize,
    seed: u64,
    s_override: Option<f64>,
) -> Result<(), CliError> {
    let p = gate.params()?;
    let budget = error_budget(&p, gamma3_inv, samples, seed, s_override)?;
    let json = serde_json::to_string_pretty(&budget)
        .map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
    println!("{json}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_args_resolution() {
        let cli = Cli::try_parse_from(["cpgate", "truth-table", "--omega", "25"]).unwrap();
        if let Command::TruthTable { gate, .. } = cli.command {
            let p = gate.params().unwrap();
            assert_eq!(p.omega_13, 25.0);
            assert_eq!(p.omega_02, 25.0);
            assert_eq!(p.omega_12, 25.0);
        } else {
            panic!("wrong command");
        }

        // omega12 alone drags omega02 with it
        let cli =
            Cli::try_parse_from(["cpgate", "truth-table", "--omega12", "0.6"]).unwrap();
        if let Command::TruthTable { gate, .. } = cli.command {
            let p = gate.params().unwrap();
            assert_eq!(p.omega_02, 0.6);
            assert_eq!(p.omega_12, 0.6);
            assert_eq!(p.omega_13, 10.0);
        } else {
            panic!("wrong command");
        }
    }

    #[test]
    fn amps_parsing() {
        let amps = parse_amps("0.5,0,0.5,0,0.5,0,0.5,0").unwrap();
        assert!((amps[3].re - 0.5).abs() < 1e-12);
        assert!(parse_amps("1,0,0").is_err());
        assert!(parse_amps("1,0,1,0,1,0,1,x").is_err());
        assert!(parse_amps("1,0,1,0,1,0,1,0").is_err()); // norm 2
        let label = parse_input_label("10").unwrap();
        assert_eq!(label[2], C64::new(1.0, 0.0));
        assert!(parse_input_label("20").is_err());
    }

    #[test]
    fn exit_codes_map() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 2);
        assert_eq!(CliError::Seq(String::new()).exit_code(), 3);
        assert_eq!(CliError::Numeric(String::new()).exit_code(), 4);
        let from_seq: CliError = PulseSeqError::Compile(crate::pulseseq::CompileError::BadGbSi(
            0.0,
        ))
        .into();
        assert_eq!(from_seq.exit_code(), 3);
    }
}
