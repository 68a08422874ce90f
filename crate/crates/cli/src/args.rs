use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elusion::Variant;

#[derive(Parser, Debug)]
#[command(
    name = "elusion",
    version,
    about = "Clause-cloud reductions, GE3 refutation and exact SDP witnesses for 3CNF"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for random formulas (scan uses seed, seed+1, ...).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Report format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file; relative paths resolve under $ELUSION_OUT_DIR when set.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a random 3CNF formula (DIMACS by default).
    Gen(Source),
    /// Build the clause-cloud graph (DIMACS edge format by default).
    Reduce {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value_t = VariantArg::Xor)]
        variant: VariantArg,
        /// Also write the vertex-to-clause map as JSON here.
        #[arg(long)]
        vertex_map: Option<PathBuf>,
    },
    /// Saturate under width-3 mod-2 elimination.
    Ge3 {
        #[command(flatten)]
        source: Source,
        /// Maximum number of stored equations.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Build and exactly verify the vector witness.
    Witness {
        #[command(flatten)]
        source: Source,
        /// Include the vectors in the JSON report.
        #[arg(long)]
        vectors: bool,
    },
    /// Solve the theta program numerically on a cloud graph.
    Theta {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value_t = VariantArg::Xor)]
        variant: VariantArg,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Find four-clause patterns and count matched clause pairs.
    Pattern(Source),
    /// GE3, then either a refutation trace or a verified witness.
    Pipeline {
        #[command(flatten)]
        source: Source,
        /// Also solve theta on the xor graph when it fits under the dense limit.
        #[arg(long)]
        theta: bool,
        /// Cross-check the verdict by enumerating assignments (n <= 20).
        #[arg(long)]
        audit: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run the pipeline over a grid of (n, m) cells and seeds; CSV by default.
    Scan {
        /// Variable counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Vec<u32>,
        /// Clause counts or density expressions such as `2n` or `6n^1.5`, comma separated.
        #[arg(long, value_delimiter = ',')]
        m: Vec<ClauseCount>,
        /// Seeds per cell.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Also solve theta where 4m+1 fits under the dense limit.
        #[arg(long)]
        theta: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Full,
    Xor,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => Variant::Full,
            VariantArg::Xor => Variant::Xor,
        }
    }
}

/// A formula read from a DIMACS file or generated from `n`, `m` and the seed.
#[derive(Args, Debug, Clone)]
pub struct Source {
    /// DIMACS CNF input file.
    #[arg(long, conflicts_with_all = ["n", "m"])]
    pub input: Option<PathBuf>,
    /// Number of variables for a generated formula.
    #[arg(long, requires = "m")]
    pub n: Option<u32>,
    /// Number of clauses, or a density expression such as `2n` or `6n^1.5`.
    #[arg(long, requires = "n")]
    pub m: Option<ClauseCount>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 200_000)]
    pub max_iter: usize,
    /// Largest vertex count the dense solver accepts.
    #[arg(long, default_value_t = 512)]
    pub dense_limit: usize,
}

/// `m` as a literal count or `c * n^e`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClauseCount {
    Fixed(usize),
    Density { coefficient: f64, exponent: f64 },
}

impl ClauseCount {
    pub fn resolve(self, n: u32) -> usize {
        match self {
            ClauseCount::Fixed(m) => m,
            ClauseCount::Density { coefficient, exponent } => {
                (coefficient * f64::from(n).powf(exponent)).round() as usize
            }
        }
    }
}

impl FromStr for ClauseCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(m) = s.parse::<usize>() {
            return Ok(ClauseCount::Fixed(m));
        }
        let bad = || format!("expected a clause count or an expression like `2n` or `6n^1.5`, got `{s}`");
        let (coef, rest) = s.split_once('n').ok_or_else(bad)?;
        let coef = coef.trim().trim_end_matches('*').trim();
        let coefficient = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().map_err(|_| bad())? };
        let rest = rest.trim();
        let exponent = if rest.is_empty() {
            1.0
        } else {
            rest.strip_prefix('^').ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?
        };
        if !(coefficient.is_finite() && exponent.is_finite() && coefficient >= 0.0) {
            return Err(bad());
        }
        Ok(ClauseCount::Density { coefficient, exponent })
    }
}

impl fmt::Display for ClauseCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ClauseCount::Fixed(m) => write!(f, "{m}"),
            ClauseCount::Density { coefficient, exponent } => {
                if exponent == 1.0 {
                    write!(f, "{coefficient}n")
                } else {
                    write!(f, "{coefficient}n^{exponent}")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clause_count_expressions() {
        assert_eq!("80".parse::<ClauseCount>().unwrap(), ClauseCount::Fixed(80));
        assert_eq!("2n".parse::<ClauseCount>().unwrap().resolve(50), 100);
        assert_eq!("n".parse::<ClauseCount>().unwrap().resolve(7), 7);
        assert_eq!("6n^1.5".parse::<ClauseCount>().unwrap().resolve(400), 48_000);
        assert_eq!("0.5*n^2".parse::<ClauseCount>().unwrap().resolve(10), 50);
        assert!("n^".parse::<ClauseCount>().is_err());
        assert!("x".parse::<ClauseCount>().is_err());
        assert!("-2n".parse::<ClauseCount>().is_err());
    }
}
