mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use bfflab_core::Nat;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Type-2 feasible computation workbench.
///
/// Exit status: 0 on success, 1 when a domain violation is found (a bound
/// violation, a disagreement, a failed check), 2 on usage, file or parse
/// errors. The environment variable BFFLAB_NORM_CAP overrides the largest
/// argument for which a norm is computed by brute force.
#[derive(Parser, Debug)]
#[command(name = "bfflab", version)]
struct Cli {
    /// Print a line-oriented `key<TAB>value` report instead of plain output.
    #[arg(long, global = true)]
    report: bool,

    /// How norms `|f|(x)` are computed.
    #[arg(long, global = true, value_enum, default_value_t = Norm::Brute)]
    norm: Norm,

    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    /// Enumerate every `y < 2^x`, up to the norm cap.
    Brute,
    /// Read the answer off the oracle table.
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a term file.
    Eval(EvalArgs),
    /// Infer and check length bounds of terms.
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Operations on second-order polynomials.
    #[command(subcommand)]
    Sop(SopCommand),
    /// Run and validate recursion schemes.
    #[command(subcommand)]
    Scheme(SchemeCommand),
    /// Run and check oracle Turing machines.
    #[command(subcommand)]
    Otm(OtmCommand),
    /// Run the acceptance suites.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
pub struct Inputs {
    /// Oracle table files, in order `f0 f1 ...`.
    #[arg(long = "oracle", value_name = "FILE")]
    pub oracles: Vec<PathBuf>,
    /// Number arguments.
    #[arg(long, num_args = 1.., value_name = "N", value_parser = parse_nat)]
    pub args: Vec<Nat>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub term: PathBuf,
    #[command(flatten)]
    pub inputs: Inputs,
    /// Evaluation budget.
    #[arg(long, default_value_t = 1_000_000)]
    pub fuel: u64,
    /// Report a recursion value above its bound instead of clamping it.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug)]
pub struct Sampling {
    /// Number of random samples.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Oracle tables are random on `[0, table-size)`.
    #[arg(long, default_value_t = 16)]
    pub table_size: u64,
    /// Largest table value.
    #[arg(long, default_value_t = 255)]
    pub max_value: u64,
    /// Number arguments are drawn below this.
    #[arg(long, default_value_t = 256)]
    pub below: u64,
}

#[derive(Subcommand, Debug)]
pub enum BoundCommand {
    /// Print a polynomial majorizing the length of a term's value.
    Infer { term: PathBuf },
    /// Check a bound on random samples.
    Check {
        term: PathBuf,
        sop: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
    },
}

#[derive(Subcommand, Debug)]
pub enum SopCommand {
    /// Print the depth.
    Depth { sop: PathBuf },
    /// Evaluate under the given oracles and lengths.
    Eval {
        sop: PathBuf,
        #[arg(long = "oracle", value_name = "FILE")]
        oracles: Vec<PathBuf>,
        /// Values of `|x0| |x1| ...`.
        #[arg(long, num_args = 1.., value_name = "L")]
        lens: Vec<u64>,
    },
    /// Print a regular majorant of the same depth.
    Regularize { sop: PathBuf },
    /// Print the witness terms of a regular polynomial, one per line.
    Witness { sop: PathBuf },
    /// Check the witness biconditional for every `u` in a range.
    WitnessCheck {
        sop: PathBuf,
        #[command(flatten)]
        inputs: Inputs,
        /// Witness terms to check instead of the constructed ones.
        #[arg(long, value_name = "FILE")]
        terms: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        u_min: u64,
        #[arg(long, default_value_t = 255)]
        u_max: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum SchemeCommand {
    /// Evaluate the functionals of a simultaneous recursion system.
    MlrnRun {
        file: PathBuf,
        #[command(flatten)]
        inputs: Inputs,
        /// The recursion argument.
        #[arg(long, value_parser = parse_nat)]
        u: Nat,
        /// Use direct simultaneous recursion instead of the construction.
        #[arg(long)]
        direct: bool,
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate a polynomially bounded recursion.
    PbrnRun {
        file: PathBuf,
        #[command(flatten)]
        inputs: Inputs,
        /// The recursion argument.
        #[arg(long, value_parser = parse_nat)]
        y: Nat,
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate a polynomial-length recursion through its clock.
    PbrplRun {
        file: PathBuf,
        #[command(flatten)]
        inputs: Inputs,
        /// Iterate to the polynomial's value on the real oracles instead.
        #[arg(long)]
        unclocked: bool,
        /// Largest recursion index before giving up.
        #[arg(long, default_value_t = 1 << 16)]
        hard_cap: u64,
    },
    /// Check the admissibility conditions over a finite domain.
    PbrplValidate {
        file: PathBuf,
        /// Candidate oracles; every choice of one per function variable is used.
        #[arg(long = "oracle", value_name = "FILE")]
        oracles: Vec<PathBuf>,
        /// Candidate values for every number argument.
        #[arg(long, num_args = 1.., value_name = "N", value_parser = parse_nat)]
        values: Vec<Nat>,
        /// Do not add the restrictions of the domain's oracles.
        #[arg(long)]
        no_closure: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cost {
    Unit,
    Len,
}

#[derive(Subcommand, Debug)]
pub enum OtmCommand {
    /// Run a machine file, or `bundled:NAME`.
    Run {
        machine: String,
        #[arg(long = "oracle", value_name = "FILE")]
        oracles: Vec<PathBuf>,
        #[arg(long, value_parser = parse_nat)]
        input: Nat,
        #[arg(long, value_enum, default_value_t = Cost::Unit)]
        cost: Cost,
        #[arg(long, default_value_t = 1 << 20)]
        fuel: u64,
    },
    /// Check a time bound and the tape monitors on random samples.
    Check {
        machine: String,
        #[arg(long, value_name = "FILE")]
        bound: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        /// Run every input below `--below` against each sampled oracle.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 1 << 20)]
        fuel: u64,
    },
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    /// Run only these criteria.
    #[arg(long, value_name = "ID")]
    pub criterion: Vec<usize>,
    #[arg(long, default_value_t = bfflab_core::selftest::DEFAULT_SEED)]
    pub seed: u64,
}

fn parse_nat(s: &str) -> Result<Nat, String> {
    s.parse().map_err(|_| format!("not a natural number: '{s}'"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match commands::Settings::from_env(cli.norm) {
        Ok(s) => s,
        Err(e) => return e.report(),
    };
    let result = match cli.command {
        Command::Eval(a) => commands::eval(&settings, a),
        Command::Bound(c) => commands::bound(&settings, c),
        Command::Sop(c) => commands::sop(&settings, c),
        Command::Scheme(c) => commands::scheme(&settings, c),
        Command::Otm(c) => commands::otm(&settings, c),
        Command::Selftest(a) => commands::selftest(a, cli.report),
    };
    match result {
        Ok(out) => {
            print!("{}", out.render(cli.report));
            ExitCode::from(u8::from(out.violation))
        }
        Err(e) => e.report(),
    }
}
