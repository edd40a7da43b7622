use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use icvar::harness::{
    aggregate, read_regret_csv, run_bpi_experiment, run_regret_experiment, write_aggregate_csv,
    write_bpi_csv, write_regret_csv, ExperimentConfig, GeneratorSpec, InstanceSource, LearnerKind,
};
use icvar::planner::{plan, Criterion};
use icvar::{MdpSpec, Result};

#[derive(Parser)]
#[command(
    name = "icvar",
    version,
    about = "Iterated CVaR planning and learning on tabular MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance as JSON.
    Gen {
        #[command(subcommand)]
        generator: Generator,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Solve an instance exactly and dump V, Q and the policy as JSON.
    Plan {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, required_unless_present = "criterion")]
        alpha: Option<f64>,
        /// iterated-cvar (default), worst-path or risk-neutral
        #[arg(long)]
        criterion: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regret experiment with the Iterated CVaR learner.
    RunRm(RunArgs),
    /// Best policy identification experiment.
    RunBpi(RunArgs),
    /// Regret experiment with the Worst Path learner.
    RunMaxwp(RunArgs),
    /// Regret experiment with the risk-neutral Hoeffding baseline.
    RunBaseline(RunArgs),
    /// Aggregate a regret CSV into per-episode means with 95% half-widths.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Generator {
    Layered {
        #[arg(long = "H")]
        horizon: usize,
        #[arg(long = "A")]
        num_actions: usize,
    },
    Chain {
        #[arg(long)]
        n: usize,
        #[arg(long = "A")]
        num_actions: usize,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        j_star: usize,
        #[arg(long = "H")]
        horizon: Option<usize>,
        #[arg(long)]
        remove_s1_x3_edge: bool,
    },
    AlphaChain {
        #[arg(long)]
        n: usize,
        #[arg(long = "A")]
        num_actions: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        j_star: usize,
    },
    WorstPath {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        a_star: usize,
        #[arg(long)]
        remove_s1_x3_edge: bool,
        #[arg(long = "H")]
        horizon: Option<usize>,
    },
    TreatmentTree,
    Random {
        #[arg(long = "S")]
        num_states: usize,
        #[arg(long = "A")]
        num_actions: usize,
        #[arg(long = "H")]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        min_prob: Option<f64>,
    },
}

impl From<Generator> for GeneratorSpec {
    fn from(g: Generator) -> Self {
        match g {
            Generator::Layered {
                horizon,
                num_actions,
            } => GeneratorSpec::Layered {
                horizon,
                num_actions,
            },
            Generator::Chain {
                n,
                num_actions,
                mu,
                alpha,
                eta,
                j_star,
                horizon,
                remove_s1_x3_edge,
            } => GeneratorSpec::Chain {
                n,
                num_actions,
                mu,
                alpha,
                eta,
                j_star,
                horizon,
                remove_s1_x3_edge,
            },
            Generator::AlphaChain {
                n,
                num_actions,
                alpha,
                gamma,
                eta,
                j_star,
            } => GeneratorSpec::AlphaChain {
                n,
                num_actions,
                alpha,
                gamma,
                eta,
                j_star,
            },
            Generator::WorstPath {
                n,
                alpha,
                a_star,
                remove_s1_x3_edge,
                horizon,
            } => GeneratorSpec::WorstPath {
                n,
                alpha,
                a_star,
                remove_s1_x3_edge,
                horizon,
            },
            Generator::TreatmentTree => GeneratorSpec::TreatmentTree,
            Generator::Random {
                num_states,
                num_actions,
                horizon,
                seed,
                min_prob,
            } => GeneratorSpec::Random {
                num_states,
                num_actions,
                horizon,
                seed,
                min_prob,
            },
        }
    }
}

/// Either `--config FILE` or an instance plus flags. Flags given together
/// with `--config` override the file.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance JSON file.
    #[arg(long, conflicts_with = "instance")]
    spec: Option<PathBuf>,
    /// Inline generator JSON, e.g. '{"generator":"layered","H":5,"A":5}'.
    #[arg(long)]
    instance: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    bonus_scale: Option<f64>,
    #[arg(long)]
    max_episodes: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self, learner: LearnerKind) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let mut c = ExperimentConfig::from_file(path)?;
                c.learner = learner;
                c
            }
            None => {
                let instance = match (&self.spec, &self.instance) {
                    (Some(path), _) => InstanceSource::Path { path: path.clone() },
                    (None, Some(text)) => InstanceSource::Generator(serde_json::from_str(text)?),
                    (None, None) => {
                        return Err(icvar::Error::Config(
                            "give --config, --spec or --instance".into(),
                        ));
                    }
                };
                ExperimentConfig::new(instance, learner)
            }
        };
        if self.config.is_some() {
            if let Some(path) = self.spec {
                config.instance = InstanceSource::Path { path };
            } else if let Some(text) = self.instance {
                config.instance = InstanceSource::Generator(serde_json::from_str(&text)?);
            }
        }
        config.alpha = self.alpha.or(config.alpha);
        config.delta = self.delta.or(config.delta);
        config.epsilon = self.epsilon.or(config.epsilon);
        config.episodes = self.episodes.unwrap_or(config.episodes);
        config.runs = self.runs.unwrap_or(config.runs);
        config.base_seed = self.seed.unwrap_or(config.base_seed);
        config.bonus_scale = self.bonus_scale.unwrap_or(config.bonus_scale);
        config.max_episodes = self.max_episodes.or(config.max_episodes);
        config.output = self.out.or(config.output);
        config.validate()?;
        Ok(config)
    }
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_criterion(name: Option<&str>, alpha: Option<f64>) -> Result<Criterion> {
    match name.unwrap_or("iterated-cvar") {
        "iterated-cvar" => match alpha {
            Some(alpha) => Ok(Criterion::IteratedCvar { alpha }),
            None => Err(icvar::Error::Config("iterated-cvar needs --alpha".into())),
        },
        "worst-path" => Ok(Criterion::WorstPath),
        "risk-neutral" => Ok(Criterion::RiskNeutral),
        other => Err(icvar::Error::Config(format!("unknown criterion `{other}`"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { generator, out } => {
            let spec = GeneratorSpec::from(generator).build()?;
            let mut w = output(out.as_ref())?;
            writeln!(w, "{}", spec.to_json()?)?;
            w.flush()?;
        }
        Command::Plan {
            spec,
            alpha,
            criterion,
            out,
        } => {
            let mdp = MdpSpec::from_json(&std::fs::read_to_string(spec)?)?;
            let result = plan(&mdp, parse_criterion(criterion.as_deref(), alpha)?)?;
            let mut w = output(out.as_ref())?;
            writeln!(w, "{}", result.to_json()?)?;
            w.flush()?;
        }
        Command::RunRm(args) => regret(args.into_config(LearnerKind::IcvarRm)?)?,
        Command::RunMaxwp(args) => regret(args.into_config(LearnerKind::Maxwp)?)?,
        Command::RunBaseline(args) => regret(args.into_config(LearnerKind::Baseline)?)?,
        Command::RunBpi(args) => {
            let config = args.into_config(LearnerKind::IcvarBpi)?;
            let records = run_bpi_experiment(&config)?;
            let mut w = output(config.output.as_ref())?;
            write_bpi_csv(&records, &mut w)?;
            w.flush()?;
        }
        Command::Report { input, out } => {
            let records = read_regret_csv(File::open(input)?)?;
            let agg = aggregate(&records);
            if agg.single_run {
                eprintln!(
                    "warning: some episodes have a single run; their half-width is reported as 0"
                );
            }
            let mut w = output(out.as_ref())?;
            write_aggregate_csv(&agg.rows, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn regret(config: ExperimentConfig) -> Result<()> {
    let records = run_regret_experiment(&config)?;
    let mut w = output(config.output.as_ref())?;
    write_regret_csv(&records, &mut w)?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
