use clap::{Args, Parser, Subcommand, ValueEnum};
use horolab::arith::PreciseReal;

#[derive(Debug, Parser)]
#[command(
    name = "horolab",
    version,
    about = "Batch driver for unipotent-orbit experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Plain-text `key = value` file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for schedule points (defaults to all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Majorant δ_m(y; ξ). Columns: y,value,tail,Qmax,Dmax.
    Delta(DeltaArgs),
    /// (κ, α)-LFD scan. Columns: outcome,d,q.
    Lfd(LfdArgs),
    /// Grid gap S_{g,q}(T). Columns: T,S,n1,n2.
    Sgq(SgqArgs),
    /// Smooth exponential sum over a coset of Γ(N). Columns: X,lhs_re,lhs_im,rhs,ratio.
    Expsum(ExpsumArgs),
    /// Kloosterman sums. Columns: q,re,im,abs.
    Kloosterman(KloostermanArgs),
    /// Quadratic exponential sum S(q, v). Columns: q,N,re,im,abs,weil.
    Quadsum(QuadsumArgs),
    /// Translate integrals and equidistribution errors. Columns: y,value_re,value_im,main,error,bound,bound_tail,ratio.
    Orbit(OrbitArgs),
    /// Horocycle main-term errors for a zero-frequency test function. Columns: y,error.
    Horocycle(HorocycleArgs),
    /// Long-orbit bound. Columns: T,term0,series,tail,Dmax.
    Theorem4(Theorem4Args),
    /// Run the invariant suite. Columns: check,status,detail.
    Verify(VerifyArgs),
    /// Seeded sweeps. theorem4 columns: sample,slope,intercept,residual;
    /// delta columns: y,mean,std_error,tail,samples.
    Sweep(SweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Delta(_) => "delta",
            Command::Lfd(_) => "lfd",
            Command::Sgq(_) => "sgq",
            Command::Expsum(_) => "expsum",
            Command::Kloosterman(_) => "kloosterman",
            Command::Quadsum(_) => "quadsum",
            Command::Orbit(_) => "orbit",
            Command::Horocycle(_) => "horocycle",
            Command::Theorem4(_) => "theorem4",
            Command::Verify(_) => "verify",
            Command::Sweep(_) => "sweep",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Delta(a) => &a.common,
            Command::Lfd(a) => &a.common,
            Command::Sgq(a) => &a.common,
            Command::Expsum(a) => &a.common,
            Command::Kloosterman(a) => &a.common,
            Command::Quadsum(a) => &a.common,
            Command::Orbit(a) => &a.common,
            Command::Horocycle(a) => &a.common,
            Command::Theorem4(a) => &a.common,
            Command::Verify(a) => &a.common,
            Command::Sweep(a) => &a.common,
        }
    }
}

/// A comma-separated list of reals, or `geom:start:end:count`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealList(pub Vec<f64>);

/// Semicolon-separated rows of two comma-separated reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Rows(pub Vec<[f64; 2]>);

/// A comma-separated list of integers.
#[derive(Debug, Clone, PartialEq)]
pub struct IntList(pub Vec<i64>);

/// Semicolon-separated rows of two comma-separated integers.
#[derive(Debug, Clone, PartialEq)]
pub struct IntRows(pub Vec<[i64; 2]>);

pub fn real_list(s: &str) -> Result<RealList, String> {
    if let Some(rest) = s.strip_prefix("geom:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected geom:start:end:count, got {s}"));
        }
        let a: f64 = parts[0].trim().parse().map_err(|e| format!("{e}: {}", parts[0]))?;
        let b: f64 = parts[1].trim().parse().map_err(|e| format!("{e}: {}", parts[1]))?;
        let n: usize = parts[2].trim().parse().map_err(|e| format!("{e}: {}", parts[2]))?;
        if !(a > 0.0 && b > 0.0) || n < 2 {
            return Err("geom needs positive endpoints and at least two points".into());
        }
        let ratio = (b / a).powf(1.0 / (n - 1) as f64);
        return Ok(RealList((0..n).map(|i| a * ratio.powi(i as i32)).collect()));
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{e}: '{t}'")))
        .collect::<Result<Vec<_>, _>>()
        .map(RealList)
}

pub fn rows(s: &str) -> Result<Rows, String> {
    s.split(';')
        .map(|r| {
            let v = real_list(r)?.0;
            match v.as_slice() {
                [a, b] => Ok([*a, *b]),
                _ => Err(format!("each row needs two entries, got '{r}'")),
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Rows)
}

pub fn int_list(s: &str) -> Result<IntList, String> {
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| format!("{e}: '{t}'")))
        .collect::<Result<Vec<_>, _>>()
        .map(IntList)
}

pub fn int_rows(s: &str) -> Result<IntRows, String> {
    s.split(';')
        .map(|r| match int_list(r)?.0.as_slice() {
            [a, b] => Ok([*a, *b]),
            _ => Err(format!("each row needs two entries, got '{r}'")),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(IntRows)
}

pub fn precise(s: &str) -> Result<PreciseReal, String> {
    let t = s.trim();
    if t == "golden" || t == "phi" {
        return Ok(PreciseReal::golden_ratio());
    }
    if let Some(inner) = t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let n: f64 = inner.trim().parse().map_err(|e| format!("{e}: '{inner}'"))?;
        if n < 0.0 {
            return Err(format!("sqrt of a negative number: {n}"));
        }
        return Ok(PreciseReal::sqrt(n));
    }
    t.parse::<f64>().map(PreciseReal::from).map_err(|e| format!("{e}: '{t}'"))
}

pub fn precise_list(s: &str) -> Result<Vec<PreciseReal>, String> {
    s.split(',').map(precise).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightKind {
    /// bump6 on [−1, 1].
    Bump,
    /// (1 + x²)^(−22).
    Decay44,
}

#[derive(Debug, Args)]
pub struct DeltaArgs {
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub m: u32,
    /// Rows of ξ, e.g. `0.1,0.2;0.3,0.4`; zero when absent.
    #[arg(long, value_parser = rows)]
    pub xi: Option<Rows>,
    #[arg(long, value_parser = real_list)]
    pub y: RealList,
    #[arg(long, default_value_t = 20)]
    pub qmax: u32,
    #[arg(long)]
    pub dmax: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct LfdArgs {
    /// Entries of ξ as decimals, `sqrt(n)` or `golden`.
    #[arg(long, value_parser = precise_list_parser)]
    pub xi: PreciseVec,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.2)]
    pub c: f64,
    #[arg(long, default_value_t = 10_000)]
    pub dmax: u64,
    #[arg(long, default_value_t = 10_000)]
    pub qmax: u32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreciseVec(pub Vec<PreciseReal>);

fn precise_list_parser(s: &str) -> Result<PreciseVec, String> {
    precise_list(s).map(PreciseVec)
}

#[derive(Debug, Args)]
pub struct SgqArgs {
    /// Matrix entries `a,b,c,d`.
    #[arg(long, value_parser = real_list)]
    pub mat: Option<RealList>,
    #[arg(long, value_parser = rows, default_value = "0,0")]
    pub xi: Rows,
    #[arg(long, value_parser = int_list, default_value = "0")]
    pub q: IntList,
    #[arg(long, value_parser = real_list)]
    pub t: RealList,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExpsumArgs {
    #[arg(long = "N", default_value_t = 1)]
    pub level: i64,
    /// Coset residue `a,b,c,d` reduced mod N; identity when absent.
    #[arg(long, value_parser = int_list)]
    pub r: Option<IntList>,
    /// `golden` or four reals.
    #[arg(long, default_value = "golden")]
    pub alpha: String,
    #[arg(long, value_parser = real_list)]
    pub x: RealList,
    /// Support parameter B of the bump6 product weight.
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct KloostermanArgs {
    #[arg(long)]
    pub m: i64,
    #[arg(long)]
    pub n: i64,
    #[arg(long, value_parser = int_list)]
    pub q: IntList,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuadMethod {
    Closed,
    Brute,
}

#[derive(Debug, Args)]
pub struct QuadsumArgs {
    #[arg(long)]
    pub q: u64,
    #[arg(long = "N", default_value_t = 1)]
    pub level: u64,
    #[arg(long, value_parser = int_list)]
    pub r: Option<IntList>,
    #[arg(long, value_parser = int_list)]
    pub v: IntList,
    #[arg(long, value_enum, default_value = "closed")]
    pub method: QuadMethod,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    #[arg(long = "N", default_value_t = 1)]
    pub level: i64,
    /// Frequency rows of the test function, e.g. `1,0`.
    #[arg(long, value_parser = int_rows, default_value = "1,0")]
    pub m0: IntRows,
    #[arg(long, default_value_t = 2.4)]
    pub rho0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub amp: f64,
    #[arg(long, value_parser = rows)]
    pub xi: Option<Rows>,
    #[arg(long, value_parser = real_list)]
    pub mat: Option<RealList>,
    #[arg(long, value_enum, default_value = "decay44")]
    pub h: WeightKind,
    #[arg(long, value_parser = real_list)]
    pub y: RealList,
    /// Majorant exponent; k + 2 when absent.
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long, default_value_t = 20)]
    pub qmax: u32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct HorocycleArgs {
    #[arg(long = "N", default_value_t = 1)]
    pub level: i64,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 2.4)]
    pub rho0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub amp: f64,
    #[arg(long, value_parser = real_list)]
    pub mat: Option<RealList>,
    #[arg(long, value_enum, default_value = "bump")]
    pub h: WeightKind,
    #[arg(long, value_parser = real_list)]
    pub y: RealList,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Theorem4Args {
    #[arg(long, value_parser = real_list)]
    pub mat: Option<RealList>,
    #[arg(long, value_parser = rows, default_value = "0,0")]
    pub xi: Rows,
    /// Majorant exponent; k + 2 when absent.
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long, default_value_t = 20)]
    pub qmax: u32,
    #[arg(long)]
    pub dmax: Option<u64>,
    #[arg(long, value_parser = real_list)]
    pub t: RealList,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    /// Fitted T-slope of the long-orbit bound for random g.
    Theorem4,
    /// Mean of δ_m(y; ξ) over uniform ξ.
    Delta,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Majorant exponent; k + 2 when absent.
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long, default_value_t = 20)]
    pub qmax: u32,
    /// T schedule for the theorem4 sweep.
    #[arg(long, value_parser = real_list, default_value = "100,1000,10000")]
    pub t: RealList,
    /// y schedule for the delta sweep.
    #[arg(long, value_parser = real_list, default_value = "1e-2,1e-4,1e-6")]
    pub y: RealList,
    #[command(flatten)]
    pub common: Common,
}
