//! `cvqec`: command-line front end for the three-mode displacement code
//! simulator. Tables and sweeps are written as CSV.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvqec_core::analysis::{format_f64, misclassification_probs, render_csv, sweep, SweepParam, SweepSpec};
use cvqec_core::channels::branch_table;
use cvqec_core::code::syndrome_table;
use cvqec_core::{CodeParams, Error, ErrorPattern, GaussianState, Policy, SyndromeClass};

#[derive(Parser)]
#[command(name = "cvqec", version, about = "Continuous-variable repetition code simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One Monte Carlo fidelity estimate, as a one-row sweep CSV.
    Run {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fidelities over a grid of one parameter.
    Sweep {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        mc: McArgs,
        /// Parameter varied over the grid.
        #[arg(long, value_enum)]
        param: ParamArg,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Error patterns with their weights and decoded x-shifts.
    Branches {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        xbar2: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Ancilla sign pair and decoded class of each error pattern.
    SyndromeTable {
        #[command(flatten)]
        out: OutArgs,
    },
    /// Probability of each assigned class given the true error pattern.
    Misclass {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, value_enum, default_value_t = PolicyArg::Threshold)]
        policy: PolicyArg,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct CodeArgs {
    /// Error probability per channel.
    #[arg(long)]
    gamma: f64,
    /// Ancilla squeezing parameter.
    #[arg(long, allow_negative_numbers = true)]
    r: f64,
    /// Size of the x-displacement error.
    #[arg(long, allow_negative_numbers = true)]
    xbar2: f64,
}

#[derive(Args)]
struct McArgs {
    /// Coherent signal x mean.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    signal_x: f64,
    /// Coherent signal p mean.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    signal_p: f64,
    /// Monte Carlo runs per point.
    #[arg(long, default_value_t = 10_000)]
    runs: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PolicyArg::Threshold)]
    policy: PolicyArg,
}

#[derive(Args)]
struct OutArgs {
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Threshold,
    Map,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Threshold => Policy::ThresholdSign,
            PolicyArg::Map => Policy::MapLikelihood,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamArg {
    Gamma,
    R,
    Xbar2,
}

impl From<ParamArg> for SweepParam {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::Gamma => SweepParam::Gamma,
            ParamArg::R => SweepParam::R,
            ParamArg::Xbar2 => SweepParam::Xbar2,
        }
    }
}

impl CodeArgs {
    fn params(&self) -> Result<CodeParams, Error> {
        CodeParams::new(self.r, self.xbar2, self.gamma)
    }
}

impl McArgs {
    fn signal(&self) -> Result<GaussianState, Error> {
        if !(self.signal_x.is_finite() && self.signal_p.is_finite()) {
            return Err(Error::Domain("signal mean must be finite".into()));
        }
        Ok(GaussianState::coherent(self.signal_x, self.signal_p))
    }

    fn spec(&self, base: CodeParams, param: SweepParam, values: Vec<f64>) -> Result<SweepSpec, Error> {
        Ok(SweepSpec {
            param,
            values,
            base,
            signal: self.signal()?,
            policy: self.policy.into(),
            runs: self.runs,
            seed: self.seed,
        })
    }
}

fn csv_line(out: &mut String, label: &str, nums: &[f64]) -> Result<(), Error> {
    out.push_str(label);
    for &v in nums {
        out.push(',');
        out.push_str(&format_f64(v)?);
    }
    out.push('\n');
    Ok(())
}

fn branches_csv(gamma: f64, xbar2: f64) -> Result<String, Error> {
    CodeParams::new(0.0, xbar2, gamma)?;
    let mut out = String::from("pattern,weight,mode1_x_shift,mode2_x_shift,mode3_x_shift\n");
    for b in branch_table(gamma, xbar2) {
        csv_line(
            &mut out,
            &b.pattern.to_string(),
            &[b.weight, b.mode1_x_shift, b.ancilla_shifts[0], b.ancilla_shifts[1]],
        )?;
    }
    Ok(out)
}

fn syndrome_csv() -> String {
    let mut out = String::from("pattern,sign2,sign3,class\n");
    for (pat, pair, cls) in syndrome_table() {
        writeln!(out, "{pat},{},{},{cls}", pair.s2, pair.s3).expect("writing to a String cannot fail");
    }
    out
}

fn misclass_csv(p: &CodeParams, policy: Policy) -> Result<String, Error> {
    let m = misclassification_probs(p, policy);
    let mut out = String::from("true_pattern");
    for cls in SyndromeClass::ALL {
        write!(out, ",{cls}").expect("writing to a String cannot fail");
    }
    out.push('\n');
    for pat in ErrorPattern::THREE_MODE {
        let row: Vec<f64> = SyndromeClass::ALL.iter().map(|&c| m.prob(pat, c)).collect();
        csv_line(&mut out, &pat.to_string(), &row)?;
    }
    Ok(out)
}

fn execute(cmd: Command) -> Result<(String, Option<PathBuf>), Error> {
    Ok(match cmd {
        Command::Run { code, mc, out } => {
            let p = code.params()?;
            let spec = mc.spec(p, SweepParam::Gamma, vec![p.gamma])?;
            (render_csv(&sweep(&spec)?)?, out.out)
        }
        Command::Sweep { code, mc, param, values, out } => {
            let spec = mc.spec(code.params()?, param.into(), values)?;
            (render_csv(&sweep(&spec)?)?, out.out)
        }
        Command::Branches { gamma, xbar2, out } => (branches_csv(gamma, xbar2)?, out.out),
        Command::SyndromeTable { out } => (syndrome_csv(), out.out),
        Command::Misclass { code, policy, out } => (misclass_csv(&code.params()?, policy.into())?, out.out),
    })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ZeroDensity | Error::Numerical(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn emit(text: &str, path: Option<PathBuf>) -> std::io::Result<()> {
    match path {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(cli.command).and_then(|(text, path)| emit(&text, path).map_err(Error::from));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvqec: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
