mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ewf_core::epistemics::{self, profiles, InterpretationProfile};
use ewf_core::{CoinAmplitudes, CollapsePolicy, Fault, Protocol};

#[derive(Parser)]
#[command(name = "ewf", version, about = "Extended Wigner's friend laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Joint distribution of (r, z, w1, w2) and the (w1, w2) marginal
    Simulate {
        /// Real coin amplitudes `alpha,beta` with alpha^2 + beta^2 = 1 [default: sqrt(1/3),sqrt(2/3)]
        #[arg(long, value_parser = parse_coin)]
        coin: Option<(f64, f64)>,
        #[arg(long, value_enum, default_value_t = PolicyArg::Collapse)]
        policy: PolicyArg,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Check every quantum claim of the argument; exit 1 if any fails
    Verify {
        #[command(flatten)]
        format: FormatArg,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// History probabilities and joint considerability
    Histories {
        /// `name: var@stage=label, ...`; defaults to h1 and h1'
        #[arg(long = "history")]
        histories: Vec<String>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Exact enumeration of memory trajectories
    Bellbohm {
        /// Print only the realised trajectory and its probability
        #[arg(long)]
        paper_only: bool,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Replay the argument under an interpretation's assumptions
    Argue {
        #[command(flatten)]
        source: ProfileSource,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Cross-check the escape rule against the derivation for every interpretation
    Audit {
        #[command(flatten)]
        format: FormatArg,
    },
    /// Tables, checklist, simulation, histories, trajectory and audit together
    Report,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ProfileSource {
    /// A shipped interpretation, e.g. `qbism`, `many-worlds`
    #[arg(long)]
    interpretation: Option<String>,
    /// A profile file: `name: ...` then eight `A = check|cross` lines
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args)]
struct FormatArg {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Collapse,
    Marginal,
}

impl From<PolicyArg> for CollapsePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Collapse => CollapsePolicy::SequentialProjection,
            PolicyArg::Marginal => CollapsePolicy::NoCollapseMarginal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    OkSign,
    PrepSign,
}

fn parse_coin(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `alpha,beta`")?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

pub enum Failure {
    Usage(String),
    Verification,
}

fn load_profile(source: &ProfileSource) -> Result<InterpretationProfile, Failure> {
    match (&source.interpretation, &source.profile) {
        (Some(name), _) => profiles::by_name(name).map_err(|e| Failure::Usage(e.to_string())),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            InterpretationProfile::parse(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
        }
        (None, None) => Err(Failure::Usage("give --interpretation or --profile".into())),
    }
}

/// Rendered output and whether every check in it passed.
pub type Rendered = (String, bool);

fn run(cli: Cli) -> Result<Rendered, Failure> {
    match cli.command {
        Command::Simulate {
            coin,
            policy,
            format,
        } => {
            let coin = match coin {
                Some((a, b)) => {
                    CoinAmplitudes::real(a, b).map_err(|e| Failure::Usage(e.to_string()))?
                }
                None => CoinAmplitudes::default(),
            };
            render::simulate(&Protocol::new(coin), policy.into(), format.format)
        }
        Command::Verify {
            format,
            inject_fault,
        } => {
            let mut protocol = Protocol::default();
            if let Some(f) = inject_fault {
                protocol = protocol.with_fault(match f {
                    FaultArg::OkSign => Fault::OkSignFlip,
                    FaultArg::PrepSign => Fault::PreparationSignFlip,
                });
            }
            render::verify(&protocol, format.format)
        }
        Command::Histories { histories, format } => {
            render::histories(&Protocol::default(), &histories, format.format)
        }
        Command::Bellbohm { paper_only, format } => {
            render::bellbohm(&Protocol::default(), paper_only, format.format)
        }
        Command::Argue { source, format } => {
            let profile = load_profile(&source)?;
            let verdict = epistemics::check(&profile, &Protocol::default()).map_err(|e| {
                eprintln!("{e}");
                Failure::Verification
            })?;
            Ok((render::argue(&profile, &verdict, format.format), true))
        }
        Command::Audit { format } => Ok((render::audit(format.format), true)),
        Command::Report => render::report(&Protocol::default()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, passed)) => {
            print!("{out}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification) => ExitCode::from(1),
    }
}
