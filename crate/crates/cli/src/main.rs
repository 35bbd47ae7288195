use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use lorank::admm::StoppingRule;
use lorank::driver::{run_benchmark, BenchRow};
use lorank::io::report::{csv_error_row, csv_row, write_factor, CSV_HEADER};
use lorank::io::{gen_matrix_completion, gen_maxcut, gen_mc_random, read_sdpa_file, write_sdpa, GsetGraph};
use lorank::{solve, GammaRule, RankMode, SolveReport, SolverConfig, Status};

#[derive(Parser)]
#[command(name = "lorank", version, about = "Low-rank ADMM solver for linear SDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem in SDPA sparse format.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write a one-row CSV report (with header) to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the recombined factor U.
        #[arg(long)]
        factor_out: Option<PathBuf>,
    },
    /// Generate a problem in SDPA sparse format.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Solve every problem listed in a manifest (one path per line).
    Bench {
        manifest: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// CSV report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// MaxCut relaxation of a Gset-format graph or a random graph.
    Maxcut {
        /// Gset graph file; a random graph is generated when omitted.
        #[arg(long, conflicts_with = "nodes")]
        graph: Option<PathBuf>,
        /// Vertex count of a random graph.
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long, default_value_t = 0.06)]
        density: f64,
        /// Random +-1 weights instead of unit weights.
        #[arg(long)]
        signed: bool,
        #[arg(long, default_value_t = lorank::io::instances::DEFAULT_SEED)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Nuclear-norm matrix completion of a random low-rank matrix.
    Mc {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 3)]
        rank: usize,
        #[arg(long, default_value_t = 0.2)]
        fraction: f64,
        #[arg(long, default_value_t = lorank::io::instances::DEFAULT_SEED)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    /// Phase switching tolerance (class default when omitted).
    #[arg(long)]
    switch_tol: Option<f64>,
    /// log, log-large, sqrt2m or a fixed positive rank.
    #[arg(long, default_value = "log")]
    rank: RankMode,
    #[arg(long, default_value_t = lorank::rank::DEFAULT_ESCALATION_FACTOR)]
    rank_escalation_factor: f64,
    #[arg(long, default_value_t = lorank::rank::DEFAULT_DIFFICULTY_THRESHOLD)]
    rank_difficulty_threshold: usize,
    /// Penalty multiplier at the phase switch (class default when omitted).
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    rho0: f64,
    /// norm, rho, warm or a positive value.
    #[arg(long, default_value = "norm", value_parser = parse_gamma)]
    gamma: GammaRule,
    /// primal or full.
    #[arg(long, default_value = "full", value_parser = parse_stop)]
    stop: StoppingRule,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 5000)]
    admm_cap: usize,
}

fn parse_gamma(s: &str) -> Result<GammaRule, String> {
    match s {
        "norm" => Ok(GammaRule::ObjectiveNorm),
        "rho" => Ok(GammaRule::EqualRho),
        "warm" => Ok(GammaRule::WarmStartRho),
        v => match v.parse::<f64>() {
            Ok(g) if g > 0.0 && g.is_finite() => Ok(GammaRule::Fixed(g)),
            _ => Err(format!("expected norm, rho, warm or a positive number, got `{v}`")),
        },
    }
}

fn parse_stop(s: &str) -> Result<StoppingRule, String> {
    match s {
        "primal" => Ok(StoppingRule::Primal),
        "full" => Ok(StoppingRule::PrimalAndStep),
        v => Err(format!("expected primal or full, got `{v}`")),
    }
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, String> {
        let time_limit = match self.time_limit {
            Some(t) if t >= 0.0 && t.is_finite() => Some(Duration::from_secs_f64(t)),
            Some(t) => return Err(format!("invalid time limit {t}")),
            None => None,
        };
        Ok(SolverConfig {
            epsilon: self.eps,
            stopping: self.stop,
            switch_tol: self.switch_tol,
            rho_init: self.rho0,
            heuristic_factor: self.h,
            gamma_rule: self.gamma,
            admm_cap: self.admm_cap,
            rank_mode: self.rank,
            escalation_factor: self.rank_escalation_factor,
            difficulty_threshold: self.rank_difficulty_threshold,
            seed: self.seed,
            time_limit,
            ..SolverConfig::default()
        })
    }
}

fn exit_code(status: Status) -> u8 {
    match status {
        Status::Converged => 0,
        Status::IterCap | Status::TimeCap => 2,
        Status::NumericalFailure => 1,
    }
}

fn print_report(name: &str, rep: &SolveReport) {
    println!("problem        {name}");
    println!("status         {}", rep.status);
    if let Some(msg) = &rep.message {
        println!("message        {msg}");
    }
    println!("objective      {:.10e}", rep.objective);
    println!("p_infeas       {:.3e}  (1+|b|_inf)", rep.p_infeas);
    println!("p_infeas_one   {:.3e}  (1+|b|_1)", rep.p_infeas_one);
    println!("p_infeas_two   {:.3e}  (1+|b|_2)", rep.p_infeas_two);
    println!("d_infeas       {:.3e}", rep.d_infeas);
    println!("pd_gap         {:.3e}", rep.pd_gap);
    println!("rank           {} -> {}", rep.initial_rank, rep.final_rank);
    println!("phase1         {} outer, {} inner, {:.3}s", rep.phase1_outer, rep.phase1_inner_total, rep.time_phase1.as_secs_f64());
    println!(
        "phase2         {} iterations, {} CG ({:.2} avg), {:.3}s",
        rep.phase2_iters,
        rep.cg_total,
        rep.cg_avg,
        rep.time_phase2.as_secs_f64()
    );
    println!("total time     {:.3}s", rep.time_total.as_secs_f64());
}

fn write_text(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run_solve(file: &Path, solver: &SolverArgs, out: Option<&Path>, factor_out: Option<&Path>) -> Result<u8, String> {
    let config = solver.config()?;
    let problem = read_sdpa_file(file).map_err(|e| e.to_string())?;
    let report = solve(&problem, &config).map_err(|e| e.to_string())?;
    let name = file.display().to_string();
    print_report(&name, &report);
    if let Some(path) = out {
        write_text(path, &format!("{CSV_HEADER}\n{}\n", csv_row(&name, &report)))?;
    }
    if let Some(path) = factor_out {
        write_factor(path, &report.factor).map_err(|e| e.to_string())?;
    }
    Ok(exit_code(report.status))
}

fn run_gen(cmd: &GenCommand) -> Result<u8, String> {
    let (problem, output) = match cmd {
        GenCommand::Maxcut {
            graph,
            nodes,
            density,
            signed,
            seed,
            output,
        } => {
            let g = match (graph, nodes) {
                (Some(path), _) => {
                    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                    GsetGraph::parse(&text)
                }
                (None, Some(n)) => GsetGraph::random(*n, *density, *signed, *seed),
                (None, None) => return Err("either --graph or --nodes is required".into()),
            }
            .map_err(|e| e.to_string())?;
            (gen_maxcut(&g), output)
        }
        GenCommand::Mc {
            p,
            q,
            rank,
            fraction,
            seed,
            output,
        } => {
            let inst = gen_mc_random(*p, *q, *rank, *fraction, *seed).map_err(|e| e.to_string())?;
            (gen_matrix_completion(&inst), output)
        }
    };
    let problem = problem.map_err(|e| e.to_string())?;
    write_text(output, &write_sdpa(&problem).map_err(|e| e.to_string())?)?;
    log::info!("wrote n = {}, m = {} to {}", problem.n(), problem.m(), output.display());
    Ok(0)
}

/// Non-empty, non-comment manifest lines, resolved against the manifest's
/// directory.
fn manifest_entries(manifest: &Path) -> Result<Vec<PathBuf>, String> {
    let text = fs::read_to_string(manifest).map_err(|e| format!("{}: {e}", manifest.display()))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let entries: Vec<PathBuf> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect();
    if entries.is_empty() {
        return Err(format!("{}: no problems listed", manifest.display()));
    }
    Ok(entries)
}

fn bench_line(row: &BenchRow) -> String {
    match &row.outcome {
        Ok(rep) => csv_row(&row.name, rep),
        Err(_) => csv_error_row(&row.name, row.seconds),
    }
}

fn run_bench(manifest: &Path, solver: &SolverArgs, out: Option<&Path>) -> Result<u8, String> {
    let config = solver.config()?;
    let entries = manifest_entries(manifest)?;
    let problems = entries.iter().map(|path| {
        let name = path.display().to_string();
        (name, read_sdpa_file(path).map_err(|e| e.to_string()))
    });
    let summary = run_benchmark(problems, &config).map_err(|e| e.to_string())?;

    let mut csv = format!("{CSV_HEADER}\n");
    for row in &summary.rows {
        csv.push_str(&bench_line(row));
        csv.push('\n');
    }
    match out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    eprintln!("SGM (shift {}): {:.4}s over {} problems", lorank::driver::SGM_SHIFT, summary.sgm, summary.rows.len());

    let code = summary
        .rows
        .iter()
        .map(|row| match &row.outcome {
            Ok(rep) => exit_code(rep.status),
            Err(_) => 1,
        })
        .fold(0, |acc, c| match (acc, c) {
            (1, _) | (_, 1) => 1,
            (a, b) => a.max(b),
        });
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with 2 on usage errors, which is reserved for cap hits here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Solve {
            file,
            solver,
            out,
            factor_out,
        } => run_solve(file, solver, out.as_deref(), factor_out.as_deref()),
        Command::Gen(cmd) => run_gen(cmd),
        Command::Bench { manifest, solver, out } => run_bench(manifest, solver, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
