use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use furstenberg_core::boundary::{
    cylinder_entropy, entropy_gradient, entropy_gradient_at_harmonic, harmonic_entropy_closed_form,
    harmonic_measure, minimality_scan, pushforward, rn_generator, solve_q, solve_q_tight,
    stationarity_residual, t_inverse, t_map, t_map_denominators, CylinderMeasure, GradientReport,
    ScanConfig,
};
use furstenberg_core::divergence::{f_divergence, furstenberg_entropy, normalized_f_divergence};
use furstenberg_core::free_group::{generator_letters, multiply, reduce, Letter, WordIndexer};
use furstenberg_core::majorant::{
    combine, concave_envelope, continuity_majorant, rho_abs_continuity, rho_abs_continuity_report,
    rho_norm_report, split_integrable, vallee_poussin_report, CombineOp, Majorant, NormMode,
};
use furstenberg_core::walk::{
    abel_identity_residual, abel_measure, boundary_empirical, check_harmonic,
    chi_squared_statistic, empirical_distribution, exact_distribution, folner_entropy_curve,
    martingale_check, sample_endpoints, sample_trajectory, validate_sigma, AnySequence,
    FolnerFamily, FunctionTables, Group, LeveledMeasure, StochasticSequence, WalkError,
};
use serde_value::Value;

use crate::canonical::{cell, to_canonical_json, to_tree, Table, Tree};
use crate::commands::*;
use crate::error::CliError;
use crate::inputs;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The outcome of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub config: Tree,
    pub results: Tree,
    pub diagnostics: Tree,
    pub version: String,
    /// Tabular view of the payload, when it has one.
    pub table: Option<Table>,
}

impl Report {
    pub fn tree(&self) -> Tree {
        obj(vec![
            ("command", Value::String(self.command.clone())),
            ("config", self.config.clone()),
            ("results", self.results.clone()),
            ("diagnostics", self.diagnostics.clone()),
            ("version", Value::String(self.version.clone())),
        ])
    }

    pub fn emit(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => Ok(to_canonical_json(&self.tree())),
            Format::Csv => match &self.table {
                Some(t) => t.to_csv(),
                None => Err(CliError::UnsupportedPayloadForCsv(self.command.clone())),
            },
        }
    }
}

pub fn obj(pairs: Vec<(&str, Tree)>) -> Tree {
    Value::Map(
        pairs
            .into_iter()
            .map(|(k, v)| (Value::String(k.to_string()), v))
            .collect(),
    )
}

fn empty() -> Tree {
    Value::Map(BTreeMap::new())
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomically(path: &str, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.to_string(),
        message: e.to_string(),
    };
    let target = Path::new(path);
    let dir = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(target).map_err(|e| io(e.error))?;
    Ok(())
}

struct Outcome {
    results: Tree,
    diagnostics: Tree,
    table: Option<Table>,
}

impl Outcome {
    fn new(results: Tree) -> Self {
        Self {
            results,
            diagnostics: empty(),
            table: None,
        }
    }

    fn diagnostics(mut self, d: Tree) -> Self {
        self.diagnostics = d;
        self
    }

    fn table(mut self, t: Table) -> Self {
        self.table = Some(t);
        self
    }
}

pub fn run(command: &Command) -> Result<Report, CliError> {
    let outcome = dispatch(command)?;
    Ok(Report {
        command: command.name().to_string(),
        config: to_tree(command)?,
        results: outcome.results,
        diagnostics: outcome.diagnostics,
        version: VERSION.to_string(),
        table: outcome.table,
    })
}

fn json_tree(v: serde_json::Value) -> Result<Tree, CliError> {
    to_tree(&v)
}

fn core<T, E: Into<crate::error::CoreError>>(field: &str, r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::from_core(field, e))
}

fn dispatch(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Divergence(a) => {
            let p = inputs::finite_measure::<String>("p", &a.p)?;
            let q = inputs::finite_measure::<String>("q", &a.q)?;
            let f = inputs::convex_generator("f", &a.f)?;
            let d = core("p", f_divergence(&p, &q, &f))?;
            let normalized = core("p", normalized_f_divergence(&p, &q, &f))?;
            Ok(Outcome::new(obj(vec![
                ("divergence", cell(d)),
                ("normalized_divergence", cell(normalized)),
            ])))
        }
        Command::FamilyEntropy(a) => {
            let fam = inputs::measure_family("family", &a.family)?;
            let f = inputs::convex_generator("f", &a.f)?;
            let h = core("family", furstenberg_entropy(&fam, &f))?;
            Ok(Outcome::new(obj(vec![("h", cell(h))])))
        }
        Command::Reduce(a) => {
            let letters: Vec<Letter> = a
                .letters
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| CliError::validation("letters", format!("bad letter '{s}'")))
                })
                .collect::<Result<_, _>>()?;
            let w = core("letters", reduce(&letters, a.d))?;
            Ok(Outcome::new(obj(vec![
                ("word", cell(w.to_key())),
                ("length", cell(w.len())),
            ])))
        }
        Command::Multiply(a) => {
            let g = inputs::word("g", &a.g, a.d)?;
            let h = inputs::word("h", &a.h, a.d)?;
            let p = core("h", multiply(&g, &h))?;
            Ok(Outcome::new(obj(vec![
                ("product", cell(p.to_key())),
                ("length", cell(p.len())),
            ])))
        }
        Command::SolveQ(a) => {
            let mu = inputs::generator_measure("mu", &a.mu)?;
            let q = match a.tol {
                Some(tol) => core("tol", solve_q(&mu, tol))?,
                None => core("mu", solve_q_tight(&mu))?,
            };
            let letters = generator_letters(mu.rank());
            let by_letter = |f: &dyn Fn(Letter) -> f64| -> Tree {
                Value::Map(
                    letters
                        .iter()
                        .map(|&l| (Value::String(l.to_string()), cell(f(l))))
                        .collect(),
                )
            };
            let results = obj(vec![
                ("q", by_letter(&|l| q.q(l))),
                ("v", by_letter(&|l| q.v(l))),
                ("v_sum", cell(q.v_sum())),
            ]);
            Ok(Outcome::new(results).diagnostics(obj(vec![
                ("residual", cell(q.residual(&mu))),
                ("iterations", cell(q.iterations())),
            ])))
        }
        Command::Harmonic(a) => {
            let mu = inputs::generator_measure("mu", &a.mu)?;
            let nu = core("depth", harmonic_measure(&mu, a.depth))?;
            let residual = core("depth", stationarity_residual(&mu, &nu))?;
            Ok(Outcome::new(obj(vec![(
                "measure",
                json_tree(nu.to_json_value(Some(&mu)))?,
            )]))
            .diagnostics(obj(vec![("stationarity_residual", cell(residual))]))
            .table(cylinder_table(&nu)))
        }
        Command::Pushforward(a) => {
            let mu =
                a.mu.as_deref()
                    .map(|m| inputs::generator_measure("mu", m))
                    .transpose()?;
            let nu = inputs::cylinder_measure("nu", &a.nu, mu.as_ref())?;
            let g = inputs::word("g", &a.g, nu.rank())?;
            let out = core("nu", pushforward(&g, &nu))?;
            Ok(
                Outcome::new(obj(vec![("measure", json_tree(out.to_json_value(None))?)]))
                    .table(cylinder_table(&out)),
            )
        }
        Command::Rn(a) => {
            let mu = inputs::generator_measure("mu", &a.mu)?;
            let j = inputs::letter("j", a.j, mu.rank())?;
            let w = inputs::word("w", &a.w, mu.rank())?;
            let q = core("mu", solve_q_tight(&mu))?;
            let rn = core("w", rn_generator(&q, j, &w))?;
            Ok(Outcome::new(obj(vec![("rn", cell(rn))])))
        }
        Command::Entropy(a) => {
            let lambda = inputs::generator_measure("lambda", &a.lambda)?;
            let f = inputs::convex_generator("f", &a.f)?;
            let mu = match &a.mu {
                Some(m) => inputs::generator_measure("mu", m)?,
                None => lambda.clone(),
            };
            let (nu, harmonic) = match &a.nu {
                Some(path) => (inputs::cylinder_measure("nu", path, Some(&mu))?, false),
                None => {
                    let depth = a.depth.ok_or_else(|| {
                        CliError::validation("depth", "required unless --nu is given")
                    })?;
                    (core("depth", harmonic_measure(&mu, depth))?, true)
                }
            };
            let h = core("nu", cylinder_entropy(&lambda, &nu, &f))?;
            let mut results = vec![("h", cell(h)), ("depth", cell(nu.depth()))];
            if harmonic {
                let q = core("mu", solve_q_tight(&mu))?;
                results.push(("mu", to_tree(&mu)?));
                results.push((
                    "closed_form",
                    cell(harmonic_entropy_closed_form(&q, &lambda, &f)),
                ));
            }
            Ok(Outcome::new(obj(results)))
        }
        Command::Tmap(a) => {
            let mu = inputs::generator_measure("mu", &a.mu)?;
            let f = inputs::convex_generator("f", &a.f)?;
            let lambda = core("mu", t_map(&mu, &f))?;
            let den = core("mu", t_map_denominators(&mu, &f))?;
            Ok(Outcome::new(obj(vec![
                ("lambda", to_tree(&lambda)?),
                ("denominators", cell(den)),
            ])))
        }
        Command::Tinv(a) => {
            let lambda = inputs::generator_measure("lambda", &a.lambda)?;
            let f = inputs::convex_generator("f", &a.f)?;
            let mu = core("lambda", t_inverse(&lambda, &f, a.tol))?;
            let back = core("lambda", t_map(&mu, &f))?;
            Ok(
                Outcome::new(obj(vec![("mu", to_tree(&mu)?)])).diagnostics(obj(vec![(
                    "round_trip_error",
                    cell(back.distance(&lambda)),
                )])),
            )
        }
        Command::Scan(a) => scan(a),
        Command::Gradient(a) => {
            let lambda = inputs::generator_measure("lambda", &a.lambda)?;
            let f = inputs::convex_generator("f", &a.f)?;
            let report = match &a.nu {
                Some(path) => {
                    let nu = inputs::cylinder_measure("nu", path, None)?;
                    core("nu", entropy_gradient(&lambda, &nu, &f, a.h_step))?
                }
                None => core(
                    "h_step",
                    entropy_gradient_at_harmonic(&lambda, &f, a.depth, a.h_step),
                )?,
            };
            let table = gradient_table(&report, lambda.rank(), a.depth);
            Ok(Outcome::new(to_tree(&report)?).table(table))
        }
        Command::ValidateSigma(a) => match inputs::sequence("sigma", &a.sigma)? {
            AnySequence::Free(s) => Ok(Outcome::new(to_tree(&validate_sigma(&s))?)),
            AnySequence::Int(s) => Ok(Outcome::new(to_tree(&validate_sigma(&s))?)),
        },
        Command::WalkExact(a) => match inputs::sequence("sigma", &a.sigma)? {
            AnySequence::Free(s) => walk_exact(&s, a),
            AnySequence::Int(s) => walk_exact(&s, a),
        },
        Command::WalkSample(a) => match inputs::sequence("sigma", &a.sigma)? {
            AnySequence::Free(s) => walk_sample(&s, a),
            AnySequence::Int(s) => walk_sample(&s, a),
        },
        Command::WalkBoundary(a) => {
            let mu = inputs::generator_measure("mu", &a.mu)?;
            let report = core(
                "trajectories",
                boundary_empirical(&mu, a.steps, a.trajectories, a.seed, a.depth),
            )?;
            let mut table =
                Table::new(&["word", "count", "frequency", "expected", "std_error", "z"]);
            for c in &report.frequencies {
                table.push(vec![
                    cell(&c.word),
                    cell(c.count),
                    cell(c.frequency),
                    cell(c.expected),
                    cell(c.std_error),
                    cell(c.z),
                ]);
            }
            Ok(Outcome::new(to_tree(&report)?).table(table))
        }
        Command::HarmonicCheck(a) => match inputs::sequence("sigma", &a.sigma)? {
            AnySequence::Free(s) => harmonic_check(&s, a),
            AnySequence::Int(s) => harmonic_check(&s, a),
        },
        Command::MartingaleCheck(a) => match inputs::sequence("sigma", &a.sigma)? {
            AnySequence::Free(s) => martingale(&s, a),
            AnySequence::Int(s) => martingale(&s, a),
        },
        Command::Abel(a) => match inputs::sequence("sigma", &a.sigma)? {
            AnySequence::Free(s) => abel(&s, a),
            AnySequence::Int(s) => abel(&s, a),
        },
        Command::AbelIdentity(a) => {
            let report = match inputs::sequence("sigma", &a.sigma)? {
                AnySequence::Free(s) => {
                    abel_identity_residual(&s, a.t, a.s, a.a, a.k, a.eps, a.budget)
                }
                AnySequence::Int(s) => {
                    abel_identity_residual(&s, a.t, a.s, a.a, a.k, a.eps, a.budget)
                }
            };
            Ok(Outcome::new(to_tree(&core("sigma", report)?)?))
        }
        Command::Folner(a) => {
            let lambda = inputs::finite_measure::<i64>("lambda", &a.lambda)?;
            let f = inputs::convex_generator("f", &a.f)?;
            let family = match a.family {
                FamilyArg::Linear => FolnerFamily::Linear,
                FamilyArg::Dyadic => FolnerFamily::Dyadic,
            };
            let report = core(
                "a_values",
                folner_entropy_curve(&lambda, &f, &a.a_values, a.eps, family, a.budget),
            )?;
            let mut table = Table::new(&[
                "a",
                "h",
                "truncation",
                "tail_mass",
                "support_lo",
                "support_hi",
                "window_defect",
            ]);
            for p in &report.points {
                table.push(vec![
                    cell(p.a),
                    cell(p.h),
                    cell(p.truncation),
                    cell(p.tail_mass),
                    cell(p.support_lo),
                    cell(p.support_hi),
                    cell(p.window_defect),
                ]);
            }
            Ok(Outcome::new(to_tree(&report)?).table(table))
        }
        Command::Combine(a) => {
            let op: CombineOp = serde_json::from_value(inputs::read_json("op", &a.op)?)
                .map_err(|e| CliError::validation("op", e))?;
            let gauges: Vec<Majorant> = a
                .inputs
                .iter()
                .map(|i| inputs::majorant("input", i))
                .collect::<Result<_, _>>()?;
            let out = core("input", combine(&op, &gauges))?;
            majorant_outcome(&out)
        }
        Command::MajorantCheck(a) => majorant_outcome(&inputs::majorant("rho", &a.rho)?),
        Command::RhoNorm(a) => {
            let f = inputs::weighted_function("function", &a.function)?;
            let rho = inputs::majorant("rho", &a.rho)?;
            let mode = match a.mode {
                ModeArg::Exact => NormMode::Exact,
                ModeArg::Prefix => NormMode::Prefix,
            };
            let report = core("function", rho_norm_report(&f, &rho, mode))?;
            Ok(Outcome::new(to_tree(&report)?))
        }
        Command::RhoAc(a) => {
            let m = inputs::finite_measure::<String>("m", &a.m)?;
            let nu = inputs::finite_measure::<String>("nu", &a.nu)?;
            let rho = inputs::majorant("rho", &a.rho)?;
            let report = core("m", rho_abs_continuity_report(&m, &nu, &rho))?;
            Ok(Outcome::new(to_tree(&report)?))
        }
        Command::ContinuityMajorant(a) => {
            let m = inputs::finite_measure::<String>("m", &a.m)?;
            let nu = inputs::finite_measure::<String>("nu", &a.nu)?;
            let rho = core("m", continuity_majorant(&m, &nu))?;
            let holds = core("m", rho_abs_continuity(&m, &nu, &rho))?;
            let mut out = majorant_outcome(&rho)?;
            if let Value::Map(map) = &mut out.results {
                map.insert(Value::String("holds".into()), cell(holds));
            }
            Ok(out)
        }
        Command::Envelope(a) => {
            let samples: Vec<(f64, f64)> =
                serde_json::from_value(inputs::read_json("samples", &a.samples)?)
                    .map_err(|e| CliError::validation("samples", e))?;
            majorant_outcome(&core("samples", concave_envelope(&samples))?)
        }
        Command::Vp(a) => {
            let g = inputs::vp_generator("g", &a.g)?;
            let report = core("g", vallee_poussin_report(g, a.m))?;
            Ok(Outcome::new(to_tree(&report)?).diagnostics(obj(vec![(
                "invariants",
                to_tree(&report.majorant.check_invariants())?,
            )])))
        }
        Command::Split(a) => {
            let f = inputs::weighted_function("function", &a.function)?;
            let rho = inputs::majorant("rho", &a.rho)?;
            let report = core("c", split_integrable(&f, &rho, a.c))?;
            Ok(Outcome::new(to_tree(&report)?))
        }
    }
}

fn cylinder_table(nu: &CylinderMeasure) -> Table {
    let mut table = Table::new(&["word", "mass"]);
    for (w, m) in nu.entries() {
        table.push(vec![cell(w.to_key()), cell(m)]);
    }
    table
}

fn gradient_table(report: &GradientReport, rank: u32, depth: usize) -> Table {
    let idx = WordIndexer::new(rank, depth.max(1));
    let mut table = Table::new(&["index", "word", "component"]);
    for (k, c) in report.components.iter().enumerate() {
        let word = if k < idx.count() {
            idx.word_at(k).to_key()
        } else {
            String::new()
        };
        table.push(vec![cell(k), cell(word), cell(*c)]);
    }
    table
}

fn majorant_outcome(rho: &Majorant) -> Result<Outcome, CliError> {
    let mut results = vec![
        ("majorant", json_tree(rho.to_json_value())?),
        ("kind", cell(rho.kind())),
    ];
    let mut table = None;
    if let Some(points) = rho.breakpoints() {
        results.push(("breakpoints", cell(points)));
        let mut t = Table::new(&["t", "y"]);
        for p in points {
            t.push(vec![cell(p[0]), cell(p[1])]);
        }
        table = Some(t);
    }
    let mut out = Outcome::new(obj(results))
        .diagnostics(obj(vec![("invariants", to_tree(&rho.check_invariants())?)]));
    out.table = table;
    Ok(out)
}

fn scan(a: &ScanArgs) -> Result<Outcome, CliError> {
    let lambda = inputs::generator_measure("lambda", &a.lambda)?;
    let f = inputs::convex_generator("f", &a.f)?;
    let mut config = ScanConfig::new(a.depth, a.samples, a.seed);
    config.local_fraction = a.local_fraction;
    config.zero_fraction = a.zero_fraction;
    config.uniform_tail_fraction = a.uniform_tail_fraction;
    config.include_anchor = !a.no_anchor;
    let r = core("lambda", minimality_scan(&lambda, &f, &config))?;
    let idx = WordIndexer::new(lambda.rank(), a.depth);
    let argmin: BTreeMap<String, f64> = r
        .argmin_masses
        .iter()
        .enumerate()
        .map(|(k, m)| (idx.word_at(k).to_key(), *m))
        .collect();
    let results = obj(vec![
        ("mu", to_tree(&r.mu)?),
        ("reference_entropy", cell(r.reference_entropy)),
        ("min_entropy", cell(r.min_entropy)),
        ("argmin_index", cell(r.argmin_index)),
        ("argmin_kind", cell(r.argmin_kind)),
        ("argmin_tail", cell(r.argmin_tail)),
        ("argmin_masses", cell(argmin)),
        ("samples", cell(r.samples)),
        ("infinite_count", cell(r.infinite_count)),
        ("theorem_A_violated", cell(r.theorem_a_violated)),
    ]);
    Ok(Outcome::new(results).diagnostics(obj(vec![(
        "margin",
        cell(r.min_entropy - r.reference_entropy),
    )])))
}

fn leveled_table<G: Group>(group: &G, m: &LeveledMeasure<G::Element>) -> Table {
    let mut table = Table::new(&["sheet", "elem", "mass"]);
    for ((j, g), mass) in &m.entries {
        table.push(vec![cell(j), cell(group.format_element(g)), cell(mass)]);
    }
    table
}

fn walk_exact<G: Group>(s: &StochasticSequence<G>, a: &WalkExactArgs) -> Result<Outcome, CliError> {
    let p = core("n", exact_distribution(s, a.n, a.budget))?;
    Ok(Outcome::new(obj(vec![
        ("distribution", json_tree(p.to_json_value(s.group()))?),
        ("support", cell(p.len())),
    ]))
    .diagnostics(obj(vec![("total_mass", cell(p.total()))]))
    .table(leveled_table(s.group(), &p)))
}

fn walk_sample<G: Group>(
    s: &StochasticSequence<G>,
    a: &WalkSampleArgs,
) -> Result<Outcome, CliError> {
    let group = s.group();
    let Some(count) = a.trajectories else {
        let path = core("steps", sample_trajectory(s, a.steps, a.seed))?;
        let mut table = Table::new(&["n", "sheet", "elem"]);
        let states: Vec<Tree> = path
            .iter()
            .map(|x| {
                table.push(vec![cell(x.n), cell(x.i), cell(group.format_element(&x.g))]);
                obj(vec![
                    ("n", cell(x.n)),
                    ("sheet", cell(x.i)),
                    ("elem", cell(group.format_element(&x.g))),
                ])
            })
            .collect();
        return Ok(Outcome::new(obj(vec![("trajectory", Value::Seq(states))])).table(table));
    };
    let states = core("steps", sample_endpoints(s, a.steps, count, a.seed))?;
    let empirical = empirical_distribution(a.steps, &states);
    let chi = match exact_distribution(s, a.steps, a.budget) {
        Ok(exact) => to_tree(&chi_squared_statistic(&exact, &states))?,
        Err(WalkError::BudgetExceeded { .. }) => Value::Unit,
        Err(e) => return Err(CliError::from_core("sigma", e)),
    };
    let mut table = Table::new(&["sheet", "elem", "frequency"]);
    for ((j, g), m) in &empirical.entries {
        table.push(vec![cell(j), cell(group.format_element(g)), cell(m)]);
    }
    Ok(Outcome::new(obj(vec![
        ("empirical", json_tree(empirical.to_json_value(group))?),
        ("trajectories", cell(count)),
    ]))
    .diagnostics(obj(vec![("chi_squared", chi)]))
    .table(table))
}

fn tables<G: Group>(
    s: &StochasticSequence<G>,
    arg: &str,
) -> Result<FunctionTables<G::Element>, CliError> {
    core(
        "h",
        FunctionTables::from_json_value(s.group(), inputs::read_json("h", arg)?),
    )
}

fn harmonic_check<G: Group>(
    s: &StochasticSequence<G>,
    a: &HarmonicCheckArgs,
) -> Result<Outcome, CliError> {
    if a.from > a.to {
        return Err(CliError::validation("from", "must not exceed --to"));
    }
    let h = tables(s, &a.h)?;
    let report = core("h", check_harmonic(s, &h, a.from..=a.to))?;
    let mut table = Table::new(&["level", "points", "residual"]);
    for l in &report.levels {
        table.push(vec![cell(l.level), cell(l.points), cell(l.residual)]);
    }
    Ok(Outcome::new(to_tree(&report)?).table(table))
}

fn martingale<G: Group>(
    s: &StochasticSequence<G>,
    a: &MartingaleCheckArgs,
) -> Result<Outcome, CliError> {
    let h = tables(s, &a.h)?;
    let report = core("h", martingale_check(s, &h, a.n, a.budget))?;
    Ok(Outcome::new(to_tree(&report)?))
}

fn abel<G: Group>(s: &StochasticSequence<G>, a: &AbelArgs) -> Result<Outcome, CliError> {
    let m = core("a", abel_measure(s, a.t, a.r, a.a, a.k, a.eps, a.budget))?;
    let mut table = Table::new(&["n", "sheet", "elem", "mass"]);
    for ((n, j, g), mass) in &m.entries {
        table.push(vec![
            cell(n),
            cell(j),
            cell(s.group().format_element(g)),
            cell(mass),
        ]);
    }
    Ok(Outcome::new(json_tree(m.to_json_value(s.group()))?)
        .diagnostics(obj(vec![(
            "normalization_error",
            cell((m.stored_total() + m.tail_mass - 1.0).abs()),
        )]))
        .table(table))
}

/// Builds the global worker pool from `FE_THREADS`.
pub fn configure_threads(value: Option<&str>) -> Result<(), CliError> {
    let Some(v) = value else {
        return Ok(());
    };
    let threads: usize = v.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        CliError::validation(
            "FE_THREADS",
            format!("expected a positive integer, got '{v}'"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use furstenberg_core::boundary::GeneratorMeasure as Gm;

    #[test]
    fn same_report_twice_gives_identical_bytes() {
        let cmd = Command::Entropy(EntropyArgs {
            lambda: "uniform:2".into(),
            f: "kl".into(),
            depth: Some(2),
            mu: None,
            nu: None,
        });
        let a = run(&cmd).unwrap().emit(Format::Json).unwrap();
        let b = run(&cmd).unwrap().emit(Format::Json).unwrap();
        assert_eq!(a, b);
        let doc: serde_json::Value = serde_json::from_slice(&a).unwrap();
        let h = doc["results"]["h"].as_f64().unwrap();
        assert!((h - 0.5 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn csv_is_refused_without_a_table() {
        let cmd = Command::Tmap(TmapArgs {
            mu: "uniform:2".into(),
            f: "kl".into(),
        });
        let err = run(&cmd).unwrap().emit(Format::Csv).unwrap_err();
        assert!(matches!(err, CliError::UnsupportedPayloadForCsv(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn tmap_of_uniform_is_uniform() {
        let cmd = Command::Tmap(TmapArgs {
            mu: "uniform:3".into(),
            f: "kl".into(),
        });
        let report = run(&cmd).unwrap();
        let doc: serde_json::Value =
            serde_json::from_slice(&report.emit(Format::Json).unwrap()).unwrap();
        let lambda: Gm = serde_json::from_value(doc["results"]["lambda"].clone()).unwrap();
        assert_eq!(lambda.weights(), Gm::uniform(3).weights());
    }
}
