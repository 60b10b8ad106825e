use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use repmech::config::parse_seeds;
use repmech::verify::{run_suite, VerifyBounds, SUITES};
use repmech::{io, scenarios, Overrides, SystemConfig};

#[derive(Parser)]
#[command(
    name = "repmech",
    version,
    about = "Reputation-based master-worker simulator and verifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario or config file over a set of seeds.
    Run(RunArgs),
    /// Run a verification suite; exits non-zero if any check disagrees.
    Verify(VerifyArgs),
    /// Print the built-in scenario names.
    ListScenarios,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in scenario name (see `list-scenarios`).
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    scenario: Option<String>,
    /// TOML config, e.g. a manifest written by an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed list such as `1-10` or `1,4,7`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    horizon: Option<u64>,
    /// type1, type2, type3 or none.
    #[arg(long)]
    scheme: Option<String>,
    /// Type 2 base.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Master's tolerated cheater/total reputation ratio.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    wpc: Option<f64>,
    /// Reward for every worker.
    #[arg(long)]
    wby: Option<f64>,
    #[arg(long)]
    wct: Option<f64>,
    /// Learning rate for master and workers.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    aspiration: Option<f64>,
    #[arg(long)]
    pa0: Option<f64>,
    #[arg(long)]
    pamin: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of property1, property2, lemma1, transitions, closed-sets, all.
    suite: String,
    /// Property 1 horizon.
    #[arg(long, default_value_t = 500)]
    horizon: u64,
    #[arg(long, default_value_t = 10)]
    max_aud: u64,
    #[arg(long, default_value_t = 3)]
    max_set_size: usize,
    /// Lemma 1 reachability horizon.
    #[arg(long, default_value_t = 200)]
    reach_horizon: usize,
    #[arg(long, default_value_t = 2_000_000)]
    budget: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0.01)]
    significance: f64,
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let (mut config, label) = match (&args.scenario, &args.config) {
        (Some(name), _) => (scenarios::scenario(name)?.config, Some(name.clone())),
        (None, Some(path)) => (
            SystemConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None,
        ),
        (None, None) => bail!("either --scenario or --config is required"),
    };
    let overrides = Overrides {
        seeds: args.seeds.as_deref().map(parse_seeds).transpose()?,
        horizon: args.horizon,
        scheme: args.scheme,
        epsilon: args.epsilon,
        tau: args.tau,
        wpc: args.wpc,
        wby: args.wby,
        wct: args.wct,
        alpha: args.alpha,
        aspiration: args.aspiration,
        pa0: args.pa0,
        pamin: args.pamin,
    };
    overrides.apply(&mut config)?;

    let result = scenarios::run_scenario(&config)?;
    io::write_run(&args.out, &result, label.as_deref())
        .with_context(|| format!("writing to {}", args.out.display()))?;

    let s = &result.summary;
    println!(
        "{} seeds x {} rounds -> {}",
        config.seeds.len(),
        config.horizon,
        args.out.display()
    );
    for seed in &s.seeds {
        let conv = seed.convergence.map_or("-".to_string(), |r| r.to_string());
        println!(
            "  seed {:>3}: convergence {:>5}, audits {:>5}, correct {:>5}, final p_a {:.4}",
            seed.seed, conv, seed.audits, seed.correct, seed.final_p_audit
        );
    }
    println!(
        "converged {}/{}, total audits {}, reward paid {:.1}",
        s.converged_seeds(),
        s.seeds.len(),
        s.total_audits(),
        s.total_reward_paid()
    );
    Ok(())
}

fn verify(args: VerifyArgs) -> anyhow::Result<bool> {
    let bounds = VerifyBounds {
        horizon: args.horizon,
        max_aud: args.max_aud,
        max_set_size: args.max_set_size,
        reach_horizon: args.reach_horizon,
        budget: args.budget,
        samples: args.samples,
        significance: args.significance,
        ..VerifyBounds::default()
    };
    let suites: Vec<&str> = if args.suite == "all" {
        SUITES.to_vec()
    } else {
        vec![args.suite.as_str()]
    };
    let mut ok = true;
    for suite in suites {
        let report = run_suite(suite, &bounds)?;
        print!("{report}");
        ok &= report.passed();
    }
    println!(
        "{}",
        if ok {
            "all checks PASS"
        } else {
            "some checks FAIL"
        }
    );
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args).map(|()| true),
        Command::Verify(args) => verify(args),
        Command::ListScenarios => {
            for s in scenarios::catalog() {
                println!("{:<36} {}", s.name, s.description);
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
