use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fem_core::discretization::ElementKind;
use fem_core::mms::{ManufacturedSolution, MeshFamily, ModelKind};

#[derive(Debug, Parser)]
#[command(
    name = "femverify",
    version,
    about = "Verification harness for chunked finite element assembly"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Manufactured-solution convergence study, one row per level.
    Converge(ConvergeArgs),
    /// Assembled Jacobian against central differences of the residual.
    CheckJacobian(CheckArgs),
    /// Pointwise derivative blocks against central differences.
    VerifyModel(VerifyArgs),
    /// Flops and bytes per dof for residual, assembled and matrix-free apply.
    Perf(PerfArgs),
    /// Residual vector and Jacobian triplets at the interpolated exact solution.
    ResidualDump(DumpArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MeshArg {
    Interval,
    TriSquare,
    QuadSquare,
    TetCube,
}

impl From<MeshArg> for MeshFamily {
    fn from(m: MeshArg) -> Self {
        match m {
            MeshArg::Interval => MeshFamily::Interval,
            MeshArg::TriSquare => MeshFamily::TriSquare,
            MeshArg::QuadSquare => MeshFamily::QuadSquare,
            MeshArg::TetCube => MeshFamily::TetCube,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ElementArg {
    P1,
    P2,
    Q1,
}

impl From<ElementArg> for ElementKind {
    fn from(e: ElementArg) -> Self {
        match e {
            ElementArg::P1 => ElementKind::P1,
            ElementArg::P2 => ElementKind::P2,
            ElementArg::Q1 => ElementKind::Q1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Poisson,
    Mass,
    Bratu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolutionArg {
    /// Product of sin(πx_i).
    Sine,
    /// Sum of x_i.
    Linear,
    /// Sum of x_i².
    Quadratic,
}

impl SolutionArg {
    pub fn build(self) -> ManufacturedSolution {
        match self {
            SolutionArg::Sine => ManufacturedSolution::sine_product(),
            SolutionArg::Linear => ManufacturedSolution::linear_sum(),
            SolutionArg::Quadratic => ManufacturedSolution::quadratic_sum(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

/// Options shared by every command that builds a discrete problem.
#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long, value_enum, default_value = "tri-square")]
    pub mesh: MeshArg,
    #[arg(long, value_enum, default_value = "p1")]
    pub element: ElementArg,
    #[arg(long, value_enum, default_value = "poisson")]
    pub model: ModelArg,
    /// Bratu nonlinearity parameter (default 2).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Mass-model reaction coefficient (default 1).
    #[arg(long)]
    pub coefficient: Option<f64>,
    #[arg(long, value_enum, default_value = "sine")]
    pub solution: SolutionArg,
    #[arg(long, default_value_t = fem_core::assembly::DEFAULT_CHUNK_SIZE)]
    pub chunk_size: usize,
    /// Worker threads for chunk integration.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

impl ProblemArgs {
    /// Checks flag combinations and resolves the model.
    pub fn validate(&self) -> Result<ModelKind, String> {
        let quad = self.mesh == MeshArg::QuadSquare;
        if (self.element == ElementArg::Q1) != quad {
            return Err(format!(
                "element {:?} is incompatible with mesh {}; q1 requires quad-square and quad-square requires q1",
                self.element,
                MeshFamily::from(self.mesh).name()
            )
            .to_lowercase());
        }
        if self.element == ElementArg::P2 && self.mesh == MeshArg::TetCube {
            return Err("p2 is not available on tet-cube".into());
        }
        if self.chunk_size == 0 {
            return Err("--chunk-size must be at least 1".into());
        }
        if self.lambda.is_some() && self.model != ModelArg::Bratu {
            return Err("--lambda applies only to --model bratu".into());
        }
        if self.coefficient.is_some() && self.model != ModelArg::Mass {
            return Err("--coefficient applies only to --model mass".into());
        }
        Ok(match self.model {
            ModelArg::Poisson => ModelKind::Poisson,
            ModelArg::Mass => ModelKind::Mass {
                c: self.coefficient.unwrap_or(1.0),
            },
            ModelArg::Bratu => ModelKind::Bratu {
                lambda: self.lambda.unwrap_or(2.0),
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated divisions per axis, strictly increasing.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    pub levels: Vec<usize>,
    /// Write 0 in the seconds column.
    #[arg(long)]
    pub no_timing: bool,
    /// Exit with status 1 when the finest-pair rate falls below this.
    #[arg(long)]
    pub min_rate: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Columns to check; all columns when omitted.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "poisson")]
    pub model: ModelArg,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub coefficient: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PerfArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Residual destination (one value per line); stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Jacobian destination in `row col value` triplets.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}
