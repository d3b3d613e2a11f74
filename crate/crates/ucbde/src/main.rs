use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ucbde::baselines::POLICY_NAMES;
use ucbde::benchmarks::FUNCTION_NAMES;
use ucbde::harness::{
    self, ConfigOverrides, ExperimentConfig, OutputFormat, RunRecord, TIMING_N_OBS,
};
use ucbde::Result;

#[derive(Parser)]
#[command(name = "ucbde", version, about = "Batch Bayesian optimization benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (seeded repeats of the optimization loop)
    Run(RunArgs),
    /// Sweep the Sobol pool size M, with a continuous-optimization arm
    SweepM(SweepArgs),
    /// Batch-selection timing across batch sizes and dimensions
    Timing(TimingArgs),
    /// List registered benchmark functions
    ListFunctions,
    /// List registered batch policies
    ListPolicies,
}

#[derive(Args)]
struct CommonArgs {
    /// Benchmark function name (see list-functions)
    #[arg(long)]
    function: Option<String>,
    /// Input dimension (required for alpine2/gsobol)
    #[arg(long)]
    dim: Option<usize>,
    /// Batch policy name (see list-policies)
    #[arg(long)]
    policy: Option<String>,
    /// Iterations per repeat [default: 10*dim]
    #[arg(long = "T")]
    t_iterations: Option<usize>,
    /// Initial design size [default: 3*dim]
    #[arg(long)]
    n_init: Option<usize>,
    /// Batch size [default: 10]
    #[arg(long = "B")]
    batch_size: Option<usize>,
    /// Sobol candidate pool size [default: 10*T*B]
    #[arg(long = "M")]
    pool_size: Option<usize>,
    /// Number of seeded repeats [default: 20]
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// GP observation noise variance [default: 1e-4]
    #[arg(long)]
    noise_var: Option<f64>,
    /// UCB confidence parameter [default: 0.1]
    #[arg(long)]
    delta: Option<f64>,
    /// Fix beta_t instead of the UCB schedule
    #[arg(long)]
    beta_override: Option<f64>,
    /// Multi-start refinement starts [default: 5]
    #[arg(long)]
    n_starts: Option<usize>,
    /// Refinement evaluations per start; 0 disables [default: 50*dim]
    #[arg(long)]
    max_evals: Option<usize>,
    /// Simulated per-evaluation latency in milliseconds
    #[arg(long)]
    latency_ms: Option<f64>,
    /// Evaluate batch points on parallel threads
    #[arg(long)]
    parallel_eval: bool,
    /// Run repeats on parallel threads
    #[arg(long)]
    parallel_repeats: bool,
    /// Direction-number file (default: compiled-in Joe-Kuo table)
    #[arg(long)]
    sobol_table: Option<PathBuf>,
    /// key=value config file; CLI flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json
    #[arg(long)]
    format: Option<String>,
}

impl CommonArgs {
    fn overrides(&self) -> Result<ConfigOverrides> {
        let mut cli = ConfigOverrides {
            function: self.function.clone(),
            dim: self.dim,
            policy: self.policy.clone(),
            t_iterations: self.t_iterations,
            n_init: self.n_init,
            batch_size: self.batch_size,
            pool_size: self.pool_size,
            repeats: self.repeats,
            seed: self.seed,
            noise_var: self.noise_var,
            delta: self.delta,
            beta_override: self.beta_override,
            n_starts: self.n_starts,
            max_evals_per_start: self.max_evals,
            latency_ms: self.latency_ms,
            parallel_eval: self.parallel_eval.then_some(true),
            parallel_repeats: self.parallel_repeats.then_some(true),
            sobol_table: self.sobol_table.clone(),
            output_path: self.out.clone(),
            ..Default::default()
        };
        if let Some(f) = &self.format {
            cli.format = Some(f.parse()?);
        }
        match &self.config {
            Some(path) => Ok(ConfigOverrides::from_kv_file(path)?.merged_with(cli)),
            None => Ok(cli),
        }
    }

    fn resolve(&self) -> Result<ExperimentConfig> {
        harness::resolve_config(&self.overrides()?)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated pool sizes, e.g. 600,6000,12000
    #[arg(long, value_delimiter = ',', required = true)]
    m_values: Vec<usize>,
}

#[derive(Args)]
struct TimingArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dimensions to test (gsobol is used at each)
    #[arg(long, value_delimiter = ',', default_value = "3,6")]
    dims: Vec<usize>,
    /// Batch sizes to test
    #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
    batch_sizes: Vec<usize>,
    /// Policies to time
    #[arg(long, value_delimiter = ',', default_value = "ucb-de,bucb")]
    policies: Vec<String>,
    /// Frozen training-set size while B varies
    #[arg(long, default_value_t = TIMING_N_OBS)]
    n_obs: usize,
}

fn print_run_summary(record: &RunRecord) {
    let cfg = &record.config;
    println!(
        "function={} dim={} policy={} T={} n_init={} B={} M={} repeats={} seed={}",
        cfg.function,
        cfg.dim,
        cfg.policy,
        cfg.t_iterations,
        cfg.n_init,
        cfg.batch_size,
        cfg.pool_size,
        cfg.repeats,
        cfg.seed
    );
    let summary = harness::summarize(record);
    if summary.final_values.is_empty() {
        println!("no recommendation rows (T = 0)");
    } else {
        println!(
            "mean final recommended value: {:.6} (se {:.6}, {} repeats)",
            summary.mean_final,
            summary.se_final,
            summary.final_values.len()
        );
        println!(
            "mean seconds per iteration: selection {:.4}, gp fit {:.4}, evaluation {:.4}",
            summary.mean_selection_seconds, summary.mean_fit_seconds, summary.mean_eval_seconds
        );
        println!("mean total wall seconds per repeat: {:.3}", summary.mean_total_wall_seconds);
    }
    for failure in &record.failures {
        eprintln!("repeat {} failed: {}", failure.repeat_id, failure.reason);
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let record = harness::run_experiment(&cfg)?;
    print_run_summary(&record);
    if let Some(path) = &cfg.output_path {
        harness::emit(&record, cfg.format, path)?;
        println!(
            "wrote {} to {}",
            if cfg.format == OutputFormat::Csv { "csv" } else { "json" },
            path.display()
        );
    }
    if !record.failures.is_empty() {
        return Err(ucbde::Error::InvalidConfig(format!(
            "{} of {} repeats failed",
            record.failures.len(),
            cfg.repeats
        )));
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let result = harness::sweep_m(&cfg, &args.m_values)?;
    for arm in &result.arms {
        println!(
            "{:>12}: mean final {:.6} (se {:.6}), mean selection s {:.4}",
            arm.label,
            arm.summary.mean_final,
            arm.summary.se_final,
            arm.summary.mean_selection_seconds
        );
    }
    if let Some(path) = &cfg.output_path {
        let file = std::fs::File::create(path)?;
        let mut buf = std::io::BufWriter::new(file);
        match cfg.format {
            OutputFormat::Csv => harness::write_sweep_csv(&result, &mut buf)?,
            OutputFormat::Json => serde_json::to_writer_pretty(&mut buf, &result)?,
        }
        use std::io::Write;
        buf.flush()?;
        println!("wrote sweep results to {}", path.display());
    }
    Ok(())
}

fn cmd_timing(args: &TimingArgs) -> Result<()> {
    let mut common = args.common.overrides()?;
    common.function.get_or_insert_with(|| "gsobol".into());
    common.dim.get_or_insert(args.dims[0]);
    common.repeats.get_or_insert(3);
    let cfg = harness::resolve_config(&common)?;
    let result =
        harness::timing_study(&cfg, &args.dims, &args.batch_sizes, &args.policies, args.n_obs)?;
    println!("n_observations={} repeats={}", result.n_observations, result.repeats);
    for cell in &result.cells {
        println!(
            "{:>8} d={} B={:>2}: median selection {:.4}s (mean {:.4}s), inner-opt calls/batch {}",
            cell.policy,
            cell.dim,
            cell.batch_size,
            cell.median_selection_seconds,
            cell.mean_selection_seconds,
            cell.inner_opt_calls_per_batch
        );
    }
    if let Some(path) = &cfg.output_path {
        let file = std::fs::File::create(path)?;
        let mut buf = std::io::BufWriter::new(file);
        match cfg.format {
            OutputFormat::Csv => harness::write_timing_csv(&result, &mut buf)?,
            OutputFormat::Json => serde_json::to_writer_pretty(&mut buf, &result)?,
        }
        use std::io::Write;
        buf.flush()?;
        println!("wrote timing results to {}", path.display());
    }
    Ok(())
}

fn cmd_list_functions() {
    println!("{:<11} {:<6} bounds", "name", "dim");
    for name in FUNCTION_NAMES {
        let (dim_desc, probe_dim) = match name {
            "branin" => ("2", None),
            "hartmann3" => ("3", None),
            "hartmann6" => ("6", None),
            _ => ("any", Some(3)),
        };
        let f = ucbde::benchmarks::make(name, probe_dim).expect("registered function");
        let (lo, hi) = f.bounds()[0];
        println!("{name:<11} {dim_desc:<6} [{lo}, {hi}] per coordinate");
    }
}

fn cmd_list_policies() {
    for name in POLICY_NAMES {
        let desc = match name {
            "random" => "uniform random batch",
            "ucb-rand" => "GP-UCB first point, random remainder",
            "bucb" => "GP-BUCB: variance-only hallucination",
            "cl" => "Constant Liar (max lie)",
            "ucb-de" => "GP-UCB first point + Sobol distance exploration",
            _ => "",
        };
        println!("{name:<9} {desc}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::SweepM(args) => cmd_sweep(args),
        Command::Timing(args) => cmd_timing(args),
        Command::ListFunctions => {
            cmd_list_functions();
            Ok(())
        }
        Command::ListPolicies => {
            cmd_list_policies();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
