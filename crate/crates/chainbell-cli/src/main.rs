//! Command-line front-end: certification, optimization, swap self-tests,
//! robustness sweeps and randomness reports, with JSON/CSV/text output.
//!
//! Exit codes: 0 success (and certification pass), 1 usage error,
//! 2 certification failure, 3 internal numeric failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use chainbell::optimizer::{seesaw, SeesawConfig};
use chainbell::random::{empirical_randomness, noisy_randomness, r_min_closed};
use chainbell::robust::{
    r_from_xi, robustness_point, threshold_r, xi_from_epsilon, Curve, NoiseModel,
};
use chainbell::scenario::{quantum_optimum, reference_realization, Party};
use chainbell::swapcircuit::{
    apply_isometry, check_swap_relations, swap_observables, Insertion,
};
use chainbell::{certify, qmath::CMat};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Directory prepended to relative --out paths when set.
const OUT_DIR_ENV: &str = "CHAINBELL_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "chainbell", version, about = "Chained Bell scenario toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Which {
    State,
    Observable,
}

#[derive(Args, Debug, Serialize)]
struct OutputArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Omit the timestamp field for byte-identical reruns.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verify the optimization-condition identities at the reference
    /// realization and reconstruct the state.
    Certify {
        #[arg(long)]
        n: usize,
        /// Pass/fail tolerance on every residual.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// See-saw search for the optimal violation from random starts.
    Optimize {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 20240901)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the swap isometry for the standard insertions and report
    /// ancilla fidelities.
    Swap {
        #[arg(long)]
        n: usize,
        /// Number of sampled A_i ⊗ B_j insertions.
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep robustness curves over r (or a noise grid) and solve the
    /// fidelity thresholds.
    Robustness {
        /// Comma-separated list of settings counts.
        #[arg(long, value_delimiter = ',', default_value = "3,5,7,11")]
        n_list: Vec<usize>,
        /// Relative-violation grid bounds, in thousandths (850 → r = 0.850).
        #[arg(long, default_value_t = 850)]
        r_min_millis: u32,
        #[arg(long, default_value_t = 1000)]
        r_max_millis: u32,
        /// Grid stride in thousandths.
        #[arg(long, default_value_t = 10)]
        stride_millis: u32,
        /// Sweep these ε values instead of the r grid (sorted ascending).
        #[arg(long, value_delimiter = ',')]
        eps_grid: Option<Vec<f64>>,
        /// Fidelity level the thresholds solve for.
        #[arg(long, default_value_t = 0.5)]
        target: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Certified-randomness report at the reference realization.
    Randomness {
        #[arg(long)]
        n: usize,
        /// Bob-side noise level (normalized model).
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Batch fidelity-curve data over a list of n; always CSV.
    Curves {
        #[arg(long, value_delimiter = ',', default_value = "3,5,7,11")]
        n_list: Vec<usize>,
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long, default_value_t = 850)]
        r_min_millis: u32,
        #[arg(long, default_value_t = 1000)]
        r_max_millis: u32,
        #[arg(long, default_value_t = 1)]
        stride_millis: u32,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct Report<C: Serialize, T: Serialize> {
    command: &'static str,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp_unix: Option<u64>,
    config: C,
    result: T,
}

fn timestamp(no_timestamp: bool) -> Option<u64> {
    if no_timestamp {
        None
    } else {
        Some(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        )
    }
}

/// Writes through a temporary file in the target directory so a failure
/// never leaves a partial output behind.
fn write_output(path: &Path, content: &str) -> std::io::Result<()> {
    let resolved = match std::env::var_os(OUT_DIR_ENV) {
        Some(base) if path.is_relative() => PathBuf::from(base).join(path),
        _ => path.to_path_buf(),
    };
    let dir = resolved.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))?;
    tmp.write_all(content.as_bytes())?;
    tmp.persist(&resolved)?;
    Ok(())
}

fn emit(output: &OutputArgs, content: String) -> Result<(), String> {
    emit_to(&output.out, content)
}

fn emit_to(out: &Option<PathBuf>, content: String) -> Result<(), String> {
    match out {
        Some(path) => write_output(path, &content).map_err(|e| format!("write failed: {e}")),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_json<C: Serialize, T: Serialize>(report: &Report<C, T>) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("serializable report");
    s.push('\n');
    s
}

/// 17-significant-digit decimal, enough to round-trip any f64.
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

// ── certify ──────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct CertifyConfig {
    n: usize,
    tol: f64,
}

#[derive(Serialize)]
struct CertifyResult {
    sos: certify::SosReport,
    reconstruction: ReconstructionSummary,
    swap_relations: chainbell::swapcircuit::SwapRelationReport,
    pass: bool,
}

#[derive(Serialize)]
struct ReconstructionSummary {
    fidelity_with_input: f64,
    fidelity_with_phi_plus: f64,
    /// Frobenius distances of (C₁, C₂, C₃) from (σx⊗σx, σz⊗σz, -σy⊗σy).
    c_op_deviation: [f64; 3],
    rho_purity_gap: f64,
}

fn run_certify(n: usize, tol: f64, output: &OutputArgs) -> Result<bool, chainbell::Error> {
    let r = reference_realization(n)?;
    let sos = certify::check_selftest_relations(&r, tol)?;
    let rec = certify::reconstruct_state(&r)?;
    let sx = CMat::pauli_x();
    let sz = CMat::pauli_z();
    let sy = CMat::pauli_y();
    let targets = [sx.kron(&sx), sz.kron(&sz), sy.kron(&sy).scale_re(-1.0)];
    let c_op_deviation = [
        rec.c_ops[0].frobenius_diff(&targets[0]),
        rec.c_ops[1].frobenius_diff(&targets[1]),
        rec.c_ops[2].frobenius_diff(&targets[2]),
    ];
    let rho_purity_gap = rec
        .rho
        .matmul(&rec.rho)?
        .frobenius_diff(&rec.rho);
    let swap = swap_observables(&r)?;
    let swap_relations = check_swap_relations(&r, &swap)?;

    let pass = sos.pass
        && rec.fidelity_with_phi_plus >= 1.0 - tol
        && c_op_deviation.iter().all(|&d| d <= tol)
        && rho_purity_gap <= tol
        && swap_relations.z_mismatch <= tol
        && swap_relations.x_mismatch <= tol
        && swap_relations.alice_anticomm <= tol
        && swap_relations.bob_anticomm <= tol;

    let result = CertifyResult {
        sos,
        reconstruction: ReconstructionSummary {
            fidelity_with_input: rec.fidelity_with_input,
            fidelity_with_phi_plus: rec.fidelity_with_phi_plus,
            c_op_deviation,
            rho_purity_gap,
        },
        swap_relations,
        pass,
    };
    let report = Report {
        command: "certify",
        version: VERSION,
        timestamp_unix: timestamp(output.no_timestamp),
        config: CertifyConfig { n, tol },
        result,
    };
    let content = match output.format {
        Format::Csv => {
            return Err(chainbell::Error::InvalidArgument(
                "csv output is only available for curve data; use the curves command".into(),
            ))
        }
        Format::Json => to_json(&report),
        Format::Text => {
            let r = &report.result;
            format!(
                "certify n={n} tol={tol:.1e}\n\
                 gamma_expectation = {:.3e}\n\
                 max l_residual    = {:.3e}\n\
                 anticommutators   = {:.3e} (A) / {:.3e} (B)\n\
                 correlations      = {:.3e}\n\
                 fidelity(phi+)    = {:.12}\n\
                 swap residuals    = {:.3e} {:.3e} {:.3e} {:.3e}\n\
                 pass = {}\n",
                r.sos.gamma_expectation,
                r.sos.l_residuals.iter().cloned().fold(0.0, f64::max),
                r.sos.alice_anticomm_dev,
                r.sos.bob_anticomm_dev,
                r.sos.correlation_dev,
                r.reconstruction.fidelity_with_phi_plus,
                r.swap_relations.z_mismatch,
                r.swap_relations.x_mismatch,
                r.swap_relations.alice_anticomm,
                r.swap_relations.bob_anticomm,
                r.pass
            )
        }
    };
    let pass = report.result.pass;
    emit(output, content).map_err(chainbell::Error::InvalidArgument)?;
    Ok(pass)
}

// ── optimize ─────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct OptimizeResult {
    best_value: f64,
    quantum_optimum: f64,
    gap: f64,
    converged: bool,
    restart_final_values: Vec<f64>,
}

fn run_optimize(
    n: usize,
    cfg: SeesawConfig,
    output: &OutputArgs,
) -> Result<(), chainbell::Error> {
    let res = seesaw(n, &cfg)?;
    let optimum = quantum_optimum(n);
    let result = OptimizeResult {
        best_value: res.best_value,
        quantum_optimum: optimum,
        gap: optimum - res.best_value,
        converged: res.converged,
        restart_final_values: res
            .iterations
            .iter()
            .map(|t| *t.last().expect("non-empty trace"))
            .collect(),
    };
    let report = Report {
        command: "optimize",
        version: VERSION,
        timestamp_unix: timestamp(output.no_timestamp),
        config: cfg,
        result,
    };
    let content = match output.format {
        Format::Csv => {
            return Err(chainbell::Error::InvalidArgument(
                "csv output is only available for curve data; use the curves command".into(),
            ))
        }
        Format::Json => to_json(&report),
        Format::Text => format!(
            "optimize n={n} dim={} restarts={} seed={}\n\
             best_value      = {:.12}\n\
             quantum_optimum = {:.12}\n\
             gap             = {:.3e}\n\
             converged       = {}\n",
            cfg.dim,
            cfg.restarts,
            cfg.seed,
            report.result.best_value,
            report.result.quantum_optimum,
            report.result.gap,
            report.result.converged
        ),
    };
    emit(output, content).map_err(chainbell::Error::InvalidArgument)
}

// ── swap ─────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct SwapConfig {
    n: usize,
    samples: usize,
    seed: u64,
}

#[derive(Serialize)]
struct SwapEntry {
    insertion: String,
    ancilla_fidelity: f64,
    factorization_residual: f64,
    joint_norm: f64,
}

fn run_swap(n: usize, samples: usize, seed: u64, output: &OutputArgs) -> Result<(), chainbell::Error> {
    let r = reference_realization(n)?;
    let s = swap_observables(&r)?;
    let mut insertions = vec![
        ("identity".to_string(), Insertion::Identity),
        ("X_A".to_string(), Insertion::SwapX(Party::Alice)),
        ("X_B".to_string(), Insertion::SwapX(Party::Bob)),
        ("Z_A".to_string(), Insertion::SwapZ(Party::Alice)),
        ("Z_B".to_string(), Insertion::SwapZ(Party::Bob)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let i = 1 + rng.gen_range(0..n);
        let j = 1 + rng.gen_range(0..n);
        insertions.push((format!("A{i}xB{j}"), Insertion::AliceBob(i, j)));
    }
    let mut entries = Vec::with_capacity(insertions.len());
    for (label, ins) in &insertions {
        let out = apply_isometry(&r, &s, ins)?;
        entries.push(SwapEntry {
            insertion: label.clone(),
            ancilla_fidelity: out.ancilla_fidelity,
            factorization_residual: out.factorization_residual,
            joint_norm: out.joint.norm(),
        });
    }
    let report = Report {
        command: "swap",
        version: VERSION,
        timestamp_unix: timestamp(output.no_timestamp),
        config: SwapConfig { n, samples, seed },
        result: entries,
    };
    let content = match output.format {
        Format::Csv => {
            return Err(chainbell::Error::InvalidArgument(
                "csv output is only available for curve data; use the curves command".into(),
            ))
        }
        Format::Json => to_json(&report),
        Format::Text => {
            let mut s = format!("swap n={n}\n");
            for e in &report.result {
                s.push_str(&format!(
                    "{:10} fidelity={:.12} residual={:.3e}\n",
                    e.insertion, e.ancilla_fidelity, e.factorization_residual
                ));
            }
            s
        }
    };
    emit(output, content).map_err(chainbell::Error::InvalidArgument)
}

// ── robustness ───────────────────────────────────────────────────────────

#[derive(Serialize)]
struct RobustnessConfig {
    n_list: Vec<usize>,
    r_min_millis: u32,
    r_max_millis: u32,
    stride_millis: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_grid: Option<Vec<f64>>,
    target: f64,
}

#[derive(Serialize)]
struct RobustnessPerN {
    n: usize,
    threshold_r_state: f64,
    threshold_r_observable: f64,
    points: Vec<chainbell::robust::RobustnessPoint>,
}

fn millis_grid(min: u32, max: u32, stride: u32) -> Result<Vec<f64>, chainbell::Error> {
    if min > max || stride == 0 || max > 1000 {
        return Err(chainbell::Error::InvalidArgument(format!(
            "bad grid spec: min={min}, max={max}, stride={stride} (thousandths, max 1000)"
        )));
    }
    Ok((min..=max)
        .step_by(stride as usize)
        .map(|k| k as f64 / 1000.0)
        .collect())
}

fn run_robustness(cfg: RobustnessConfig, output: &OutputArgs) -> Result<(), chainbell::Error> {
    if cfg.n_list.is_empty() {
        return Err(chainbell::Error::InvalidArgument("empty n list".into()));
    }
    if let Some(eps) = &cfg.eps_grid {
        if eps.is_empty() || eps.windows(2).any(|w| w[0] > w[1]) || eps.iter().any(|&e| e < 0.0) {
            return Err(chainbell::Error::InvalidArgument(
                "ε grid must be non-empty, non-negative and sorted ascending".into(),
            ));
        }
    }
    let r_grid = millis_grid(cfg.r_min_millis, cfg.r_max_millis, cfg.stride_millis)?;
    let mut per_n = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        // An ε grid maps onto r through ξ; the per-point report is the same.
        let rs: Vec<f64> = match &cfg.eps_grid {
            Some(eps) => eps
                .iter()
                .map(|&e| Ok(r_from_xi(n, xi_from_epsilon(n, e)?)))
                .collect::<Result<_, chainbell::Error>>()?,
            None => r_grid.clone(),
        };
        let points = rs
            .iter()
            .map(|&r| robustness_point(n, r))
            .collect::<Result<Vec<_>, _>>()?;
        per_n.push(RobustnessPerN {
            n,
            threshold_r_state: threshold_r(n, cfg.target, Curve::State)?,
            threshold_r_observable: threshold_r(n, cfg.target, Curve::Observable)?,
            points,
        });
    }
    let report = Report {
        command: "robustness",
        version: VERSION,
        timestamp_unix: timestamp(output.no_timestamp),
        config: cfg,
        result: per_n,
    };
    let content = match output.format {
        Format::Csv => {
            return Err(chainbell::Error::InvalidArgument(
                "csv output is only available for curve data; use the curves command".into(),
            ))
        }
        Format::Json => to_json(&report),
        Format::Text => {
            let mut s = String::new();
            for e in &report.result {
                s.push_str(&format!(
                    "n={:2} threshold_r(state)={:.4} threshold_r(observable)={:.4}\n",
                    e.n, e.threshold_r_state, e.threshold_r_observable
                ));
            }
            s
        }
    };
    emit(output, content).map_err(chainbell::Error::InvalidArgument)
}

// ── randomness ───────────────────────────────────────────────────────────

#[derive(Serialize)]
struct RandomnessConfig {
    n: usize,
    epsilon: f64,
}

#[derive(Serialize)]
struct RandomnessResult {
    report: chainbell::random::RandomnessReport,
    r_min_closed: f64,
    /// Present for odd n only.
    #[serde(skip_serializing_if = "Option::is_none")]
    r_max_closed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noisy_closed: Option<(f64, f64)>,
}

fn run_randomness(n: usize, epsilon: f64, output: &OutputArgs) -> Result<(), chainbell::Error> {
    let r = reference_realization(n)?;
    let nm = NoiseModel::new(epsilon, true)?;
    let report_data = empirical_randomness(&r, &nm)?;
    let odd = n % 2 == 1;
    let result = RandomnessResult {
        r_min_closed: r_min_closed(n),
        r_max_closed: odd.then_some(2.0),
        noisy_closed: if odd && epsilon > 0.0 {
            Some(noisy_randomness(n, epsilon)?)
        } else {
            None
        },
        report: report_data,
    };
    let report = Report {
        command: "randomness",
        version: VERSION,
        timestamp_unix: timestamp(output.no_timestamp),
        config: RandomnessConfig { n, epsilon },
        result,
    };
    let content = match output.format {
        Format::Csv => {
            return Err(chainbell::Error::InvalidArgument(
                "csv output is only available for curve data; use the curves command".into(),
            ))
        }
        Format::Json => to_json(&report),
        Format::Text => {
            let r = &report.result.report;
            format!(
                "randomness n={n} epsilon={epsilon}\n\
                 R_min = {:.4} (closed form {:.4})\n\
                 R_max = {:.3} at pair (A{}, B{})\n",
                r.r_min,
                report.result.r_min_closed,
                r.r_max,
                r.max_pair.0,
                r.max_pair.1
            )
        }
    };
    emit(output, content).map_err(chainbell::Error::InvalidArgument)
}

// ── curves ───────────────────────────────────────────────────────────────

fn run_curves(
    n_list: &[usize],
    which: Which,
    r_min_millis: u32,
    r_max_millis: u32,
    stride_millis: u32,
    out: &Option<PathBuf>,
) -> Result<(), chainbell::Error> {
    if n_list.is_empty() {
        return Err(chainbell::Error::InvalidArgument("empty n list".into()));
    }
    let grid = millis_grid(r_min_millis, r_max_millis, stride_millis)?;
    let mut csv = String::from("n,r,xi,epsilon,f,F_lower\n");
    for &n in n_list {
        for &r in &grid {
            let p = robustness_point(n, r)?;
            let (f, f_lower) = match which {
                Which::State => (p.f_s, p.f_s_lower),
                Which::Observable => (p.f_o, p.f_o_lower),
            };
            csv.push_str(&format!(
                "{n},{},{},{},{},{}\n",
                full(p.r),
                full(p.xi),
                full(p.epsilon),
                full(f),
                full(f_lower)
            ));
        }
    }
    emit_to(out, csv).map_err(chainbell::Error::InvalidArgument)
}

// ── dispatch ─────────────────────────────────────────────────────────────

fn dispatch(cli: Cli) -> Result<bool, chainbell::Error> {
    match cli.command {
        Command::Certify { n, tol, output } => run_certify(n, tol, &output),
        Command::Optimize {
            n,
            dim,
            restarts,
            max_iters,
            tol,
            seed,
            output,
        } => {
            let mut cfg = SeesawConfig::for_n(n, dim, seed);
            if let Some(r) = restarts {
                cfg.restarts = r;
            }
            cfg.max_iters = max_iters;
            cfg.tol = tol;
            run_optimize(n, cfg, &output).map(|_| true)
        }
        Command::Swap {
            n,
            samples,
            seed,
            output,
        } => run_swap(n, samples, seed, &output).map(|_| true),
        Command::Robustness {
            n_list,
            r_min_millis,
            r_max_millis,
            stride_millis,
            eps_grid,
            target,
            output,
        } => run_robustness(
            RobustnessConfig {
                n_list,
                r_min_millis,
                r_max_millis,
                stride_millis,
                eps_grid,
                target,
            },
            &output,
        )
        .map(|_| true),
        Command::Randomness { n, epsilon, output } => {
            run_randomness(n, epsilon, &output).map(|_| true)
        }
        Command::Curves {
            n_list,
            which,
            r_min_millis,
            r_max_millis,
            stride_millis,
            out,
        } => run_curves(&n_list, which, r_min_millis, r_max_millis, stride_millis, &out)
            .map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not usage errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
