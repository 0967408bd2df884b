use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use regforce::experiments::{
    emit_outputs, parse_config_with, run, ExperimentConfig, Overrides, Scale, Scenario,
};

#[derive(Parser)]
#[command(name = "regforce", version, about = "Run regulation-enforcement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equal agents, per-step quota, rule detector, boycott sweep
    Exp1(RunArgs),
    /// Strong and weak agents, threshold regulation, learned detector
    Exp2(RunArgs),
    /// Empirical 2x2 payoff matrices before and after boycotting
    Egta(RunArgs),
    /// Detector accuracy against observation length
    Detector(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML experiment config
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `out`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults used for keys the config leaves out
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScaleArg,
}

fn load(args: &RunArgs, expected: Scenario) -> Result<ExperimentConfig, String> {
    let scale = match args.scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Paper => Scale::Paper,
    };
    let ov = Overrides {
        seed: args.seed,
        out: args.out.clone(),
    };
    let cfg = parse_config_with(&args.config, scale, &ov).map_err(|e| e.to_string())?;
    if cfg.scenario != expected {
        return Err(format!(
            "{} declares scenario {}, but the {} subcommand was used",
            args.config.display(),
            cfg.scenario.as_str(),
            expected.as_str()
        ));
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, scenario) = match &cli.command {
        Command::Exp1(a) => (a, Scenario::Exp1),
        Command::Exp2(a) => (a, Scenario::Exp2),
        Command::Egta(a) => (a, Scenario::Egta),
        Command::Detector(a) => (a, Scenario::Detector),
    };
    let result = load(args, scenario).and_then(|cfg| {
        let out = cfg
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("results").join(scenario.as_str()));
        let report = run(&cfg).map_err(|e| e.to_string())?;
        let files = emit_outputs(&report, &out).map_err(|e| e.to_string())?;
        for s in &report.summary {
            let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.1}"));
            println!(
                "{:<16} Avg(C) {:>8}  Avg(D) {:>8}  Weak {:>8}  Strong {:>8}",
                s.condition,
                f(s.avg_c),
                f(s.avg_d),
                f(s.avg_weak),
                f(s.avg_strong)
            );
        }
        for (name, doc) in [("before", &report.payoff_before), ("after", &report.payoff_after)] {
            if let Some(d) = doc {
                let eq: Vec<String> = d
                    .equilibria
                    .iter()
                    .map(|e| format!("({},{}) {:?}", e.profile[0], e.profile[1], e.kind))
                    .collect();
                println!(
                    "{name}: cells {:?}  equilibria [{}]  enforcement {} margins {:?}",
                    d.cells.iter().map(|c| c.payoffs).collect::<Vec<_>>(),
                    eq.join(", "),
                    d.enforcement_holds,
                    d.margins
                );
            }
        }
        for m in &report.detector_metrics {
            println!(
                "length {:>3}  train {:.3}  test {:.3}",
                m.length, m.train_acc, m.test_acc
            );
        }
        for p in files {
            println!("wrote {}", p.display());
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
