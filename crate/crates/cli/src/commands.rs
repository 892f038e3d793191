//! Subcommand definitions. Flag names follow the parameter names of the
//! library operations they call.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use furstenberg_core::ELEMENT_BUDGET;

#[derive(Debug, Parser)]
#[command(
    name = "furstenberg",
    version,
    about = "Furstenberg entropy, sigma-stochastic walks and majorant gauges"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output encoding.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write the report here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Print the wall-clock time of the command to stderr.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Exact,
    Prefix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Linear,
    Dyadic,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// f-divergence D_f(P||Q) of two finite measures.
    Divergence(DivergenceArgs),
    /// (lambda,f)-entropy of a measure family with explicit translates.
    FamilyEntropy(FamilyEntropyArgs),
    /// Free reduction of a letter sequence.
    Reduce(ReduceArgs),
    /// Product of two reduced words.
    Multiply(MultiplyArgs),
    /// First-passage probabilities q and v = q/(1+q).
    SolveQ(SolveQArgs),
    /// Harmonic measure on depth-n cylinders.
    Harmonic(HarmonicArgs),
    /// Translate g*nu of a cylinder measure.
    Pushforward(PushforwardArgs),
    /// Radon-Nikodym derivative d(a_j nu_mu)/d nu_mu on a cylinder.
    Rn(RnArgs),
    /// (lambda,f)-entropy of a cylinder measure.
    Entropy(EntropyArgs),
    /// The T map mu -> lambda.
    Tmap(TmapArgs),
    /// Inverse of the T map.
    Tinv(TinvArgs),
    /// Random search for measures of lower entropy than nu_mu.
    Scan(ScanArgs),
    /// Finite-difference entropy gradient along the simplex.
    Gradient(GradientArgs),
    /// Row sums, zero columns and support of a stochastic sequence.
    ValidateSigma(SigmaArgs),
    /// Exact level-n distribution of a sigma-walk.
    WalkExact(WalkExactArgs),
    /// Sampled trajectory, or sampled endpoints compared with the exact law.
    WalkSample(WalkSampleArgs),
    /// Empirical boundary cylinder frequencies of the mu-walk on F_d.
    WalkBoundary(WalkBoundaryArgs),
    /// Harmonicity residual of a sequence of function tables.
    HarmonicCheck(HarmonicCheckArgs),
    /// Martingale residual E[h_{n+1}(X_{n+1}) | X_n] - h_n(X_n).
    MartingaleCheck(MartingaleCheckArgs),
    /// Abel-weighted measure on the truncated level space.
    Abel(AbelArgs),
    /// Residual of the Abel identity on a truncation.
    AbelIdentity(AbelIdentityArgs),
    /// Entropy of Abel projections along a Folner sequence on Z.
    Folner(FolnerArgs),
    /// Build a gauge by compose, max, cap or mix.
    Combine(CombineArgs),
    /// Grid checks of a gauge.
    MajorantCheck(MajorantCheckArgs),
    /// C_rho norm of a weighted function.
    RhoNorm(RhoNormArgs),
    /// Whether m(A) <= rho(nu(A)) for every event A.
    RhoAc(RhoAcArgs),
    /// Least concave gauge making m rho-absolutely continuous w.r.t. nu.
    ContinuityMajorant(ContinuityMajorantArgs),
    /// Upper concave envelope of samples.
    Envelope(EnvelopeArgs),
    /// de la Vallee-Poussin gauge of a superlinear G.
    Vp(VpArgs),
    /// Split off a bad set so the rest has C_rho norm at most C.
    Split(SplitArgs),
}

/// Library operation backing each subcommand.
pub const OPERATION_COVERAGE: &[(&str, &str)] = &[
    ("f_divergence", "divergence"),
    ("furstenberg_entropy", "family-entropy"),
    ("reduce", "reduce"),
    ("multiply", "multiply"),
    ("solve_q", "solve-q"),
    ("harmonic_measure", "harmonic"),
    ("pushforward", "pushforward"),
    ("rn_generator", "rn"),
    ("cylinder_entropy", "entropy"),
    ("t_map", "tmap"),
    ("t_inverse", "tinv"),
    ("minimality_scan", "scan"),
    ("entropy_gradient_at_harmonic", "gradient"),
    ("validate_sigma", "validate-sigma"),
    ("exact_distribution", "walk-exact"),
    ("sample_trajectory", "walk-sample"),
    ("boundary_empirical", "walk-boundary"),
    ("check_harmonic", "harmonic-check"),
    ("martingale_check", "martingale-check"),
    ("abel_measure", "abel"),
    ("abel_identity_residual", "abel-identity"),
    ("folner_entropy_curve", "folner"),
    ("combine", "combine"),
    ("check_invariants", "majorant-check"),
    ("rho_norm", "rho-norm"),
    ("rho_abs_continuity", "rho-ac"),
    ("continuity_majorant", "continuity-majorant"),
    ("concave_envelope", "envelope"),
    ("vallee_poussin", "vp"),
    ("split_integrable", "split"),
];

/// Subcommands whose output depends on a seed.
pub const STOCHASTIC_COMMANDS: &[&str] = &["scan", "walk-sample", "walk-boundary"];

fn default_budget() -> usize {
    ELEMENT_BUDGET
}

#[derive(Debug, Args, Serialize)]
pub struct DivergenceArgs {
    /// FiniteMeasure JSON.
    #[arg(long)]
    pub p: String,
    /// FiniteMeasure JSON.
    #[arg(long)]
    pub q: String,
    /// kl | chi2 | power:<alpha>
    #[arg(long)]
    pub f: String,
}

#[derive(Debug, Args, Serialize)]
pub struct FamilyEntropyArgs {
    /// MeasureFamily JSON {"base", "translates", "lambda"}.
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub f: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ReduceArgs {
    /// Comma-separated signed letters.
    #[arg(long, allow_hyphen_values = true)]
    pub letters: String,
    #[arg(long)]
    pub d: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct MultiplyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub g: String,
    #[arg(long, allow_hyphen_values = true)]
    pub h: String,
    #[arg(long)]
    pub d: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveQArgs {
    /// GeneratorMeasure JSON or uniform:<d>.
    #[arg(long)]
    pub mu: String,
    /// Stopping tolerance; iterates to floating-point resolution when omitted.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct HarmonicArgs {
    #[arg(long)]
    pub mu: String,
    #[arg(long)]
    pub depth: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PushforwardArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub g: String,
    /// CylinderMeasure JSON of depth m + |g|.
    #[arg(long)]
    pub nu: String,
    /// Generating measure for a harmonic tail.
    #[arg(long)]
    pub mu: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct RnArgs {
    #[arg(long)]
    pub mu: String,
    #[arg(long, allow_hyphen_values = true)]
    pub j: i32,
    #[arg(long, allow_hyphen_values = true)]
    pub w: String,
}

#[derive(Debug, Args, Serialize)]
pub struct EntropyArgs {
    #[arg(long)]
    pub lambda: String,
    #[arg(long)]
    pub f: String,
    /// Depth of the harmonic measure nu_mu (ignored with --nu).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Generating measure of nu_mu; defaults to lambda.
    #[arg(long)]
    pub mu: Option<String>,
    /// An explicit CylinderMeasure instead of nu_mu.
    #[arg(long)]
    pub nu: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct TmapArgs {
    #[arg(long)]
    pub mu: String,
    #[arg(long)]
    pub f: String,
}

#[derive(Debug, Args, Serialize)]
pub struct TinvArgs {
    #[arg(long)]
    pub lambda: String,
    #[arg(long)]
    pub f: String,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub lambda: String,
    #[arg(long)]
    pub f: String,
    #[arg(long)]
    pub depth: usize,
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    /// Share of draws concentrated around nu_mu.
    #[arg(long, default_value_t = 0.25)]
    pub local_fraction: f64,
    /// Share of draws with zeroed cylinders.
    #[arg(long, default_value_t = 0.1)]
    pub zero_fraction: f64,
    /// Share of draws extended by the uniform tail rule.
    #[arg(long, default_value_t = 0.15)]
    pub uniform_tail_fraction: f64,
    /// Do not use nu_mu itself as sample 0.
    #[arg(long)]
    pub no_anchor: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct GradientArgs {
    #[arg(long)]
    pub lambda: String,
    #[arg(long)]
    pub f: String,
    #[arg(long)]
    pub depth: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub h_step: f64,
    /// Differentiate at this CylinderMeasure instead of nu_mu.
    #[arg(long)]
    pub nu: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SigmaArgs {
    /// StochasticSequence JSON.
    #[arg(long)]
    pub sigma: String,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkExactArgs {
    #[arg(long)]
    pub sigma: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = default_budget())]
    pub budget: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkSampleArgs {
    #[arg(long)]
    pub sigma: String,
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Sample this many endpoints X_steps instead of one trajectory.
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long, default_value_t = default_budget())]
    pub budget: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkBoundaryArgs {
    #[arg(long)]
    pub mu: String,
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    pub trajectories: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub depth: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct HarmonicCheckArgs {
    #[arg(long)]
    pub sigma: String,
    /// Function tables JSON {"levels": {"<m>": {"default", "values"}}}.
    #[arg(long)]
    pub h: String,
    /// First level m checked (h_{m-1} against h_m).
    #[arg(long)]
    pub from: usize,
    /// Last level checked.
    #[arg(long)]
    pub to: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct MartingaleCheckArgs {
    #[arg(long)]
    pub sigma: String,
    #[arg(long)]
    pub h: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = default_budget())]
    pub budget: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct AbelArgs {
    #[arg(long)]
    pub sigma: String,
    #[arg(long, allow_hyphen_values = true)]
    pub t: i64,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub a: f64,
    #[arg(long, default_value_t = 0)]
    pub k: u32,
    #[arg(long, default_value_t = 1e-10)]
    pub eps: f64,
    #[arg(long, default_value_t = default_budget())]
    pub budget: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct AbelIdentityArgs {
    #[arg(long)]
    pub sigma: String,
    #[arg(long, allow_hyphen_values = true)]
    pub t: i64,
    #[arg(long)]
    pub s: usize,
    #[arg(long)]
    pub a: f64,
    #[arg(long, default_value_t = 0)]
    pub k: u32,
    #[arg(long, default_value_t = 1e-10)]
    pub eps: f64,
    #[arg(long, default_value_t = default_budget())]
    pub budget: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct FolnerArgs {
    /// FiniteMeasure JSON on Z, e.g. {"atoms": {"-1": 0.5, "1": 0.5}}.
    #[arg(long)]
    pub lambda: String,
    #[arg(long)]
    pub f: String,
    /// Comma-separated a values in (0,1).
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.9, 0.99])]
    pub a_values: Vec<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = FamilyArg::Linear)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = default_budget())]
    pub budget: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CombineArgs {
    /// {"op":"compose"} | {"op":"max"} | {"op":"cap","k":2} | {"op":"mix","weights":[..]}
    #[arg(long)]
    pub op: String,
    /// Majorant JSON inputs, outermost first for compose.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct MajorantCheckArgs {
    #[arg(long)]
    pub rho: String,
}

#[derive(Debug, Args, Serialize)]
pub struct RhoNormArgs {
    /// WeightedFunction JSON {"space": {...}, "values": {...}}.
    #[arg(long)]
    pub function: String,
    /// Majorant JSON.
    #[arg(long)]
    pub rho: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
}

#[derive(Debug, Args, Serialize)]
pub struct RhoAcArgs {
    #[arg(long)]
    pub m: String,
    #[arg(long)]
    pub nu: String,
    #[arg(long)]
    pub rho: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ContinuityMajorantArgs {
    #[arg(long)]
    pub m: String,
    #[arg(long)]
    pub nu: String,
}

#[derive(Debug, Args, Serialize)]
pub struct EnvelopeArgs {
    /// JSON list of [t, y] pairs.
    #[arg(long)]
    pub samples: String,
}

#[derive(Debug, Args, Serialize)]
pub struct VpArgs {
    /// power:<p> with p > 1, or xlogx.
    #[arg(long)]
    pub g: String,
    #[arg(long)]
    pub m: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long)]
    pub function: String,
    #[arg(long)]
    pub rho: String,
    #[arg(long)]
    pub c: f64,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Divergence(_) => "divergence",
            Command::FamilyEntropy(_) => "family-entropy",
            Command::Reduce(_) => "reduce",
            Command::Multiply(_) => "multiply",
            Command::SolveQ(_) => "solve-q",
            Command::Harmonic(_) => "harmonic",
            Command::Pushforward(_) => "pushforward",
            Command::Rn(_) => "rn",
            Command::Entropy(_) => "entropy",
            Command::Tmap(_) => "tmap",
            Command::Tinv(_) => "tinv",
            Command::Scan(_) => "scan",
            Command::Gradient(_) => "gradient",
            Command::ValidateSigma(_) => "validate-sigma",
            Command::WalkExact(_) => "walk-exact",
            Command::WalkSample(_) => "walk-sample",
            Command::WalkBoundary(_) => "walk-boundary",
            Command::HarmonicCheck(_) => "harmonic-check",
            Command::MartingaleCheck(_) => "martingale-check",
            Command::Abel(_) => "abel",
            Command::AbelIdentity(_) => "abel-identity",
            Command::Folner(_) => "folner",
            Command::Combine(_) => "combine",
            Command::MajorantCheck(_) => "majorant-check",
            Command::RhoNorm(_) => "rho-norm",
            Command::RhoAc(_) => "rho-ac",
            Command::ContinuityMajorant(_) => "continuity-majorant",
            Command::Envelope(_) => "envelope",
            Command::Vp(_) => "vp",
            Command::Split(_) => "split",
        }
    }
}
