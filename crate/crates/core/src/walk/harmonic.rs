use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{exact_distribution, FreeGroup, Group, StochasticSequence, WalkError};
use crate::boundary::{solve_q_tight, BoundaryError, GeneratorMeasure, QVector};
use crate::free_group::{generator_letters, Letter, ReducedWord, WordIndexer};
use crate::sum::CompensatedSum;

/// A bounded function on `V_m = [ℓ_m] × G` given by a finite table and an
/// optional default for points outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTable<E: Ord> {
    pub values: BTreeMap<(usize, E), f64>,
    pub default: Option<f64>,
}

impl<E: Clone + Ord> LevelTable<E> {
    pub fn constant(c: f64) -> Self {
        Self {
            values: BTreeMap::new(),
            default: Some(c),
        }
    }

    pub fn get(&self, sheet: usize, g: &E) -> Option<f64> {
        self.values
            .get(&(sheet, g.clone()))
            .copied()
            .or(self.default)
    }
}

/// A sequence `h = (h_m)` of level tables.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionTables<E: Ord> {
    pub levels: BTreeMap<i64, LevelTable<E>>,
}

impl<E: Clone + Ord + std::fmt::Debug> FunctionTables<E> {
    pub fn new() -> Self {
        Self {
            levels: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, level: i64, table: LevelTable<E>) {
        self.levels.insert(level, table);
    }

    pub fn value(&self, level: i64, sheet: usize, g: &E) -> Result<f64, WalkError> {
        self.levels
            .get(&level)
            .and_then(|t| t.get(sheet, g))
            .ok_or_else(|| WalkError::IncompleteTable {
                level,
                point: format!("({sheet}, {g:?})"),
            })
    }
}

impl<E: Clone + Ord + std::fmt::Debug> Default for FunctionTables<E> {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    sheet: usize,
    elem: String,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct LevelJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<f64>,
    #[serde(default)]
    values: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
struct TablesJson {
    levels: BTreeMap<String, LevelJson>,
}

impl<E: Clone + Ord + std::fmt::Debug> FunctionTables<E> {
    /// `{"levels": {"<m>": {"default": c, "values": [{"sheet":0,"elem":"1","value":0.5}]}}}`
    pub fn from_json_value<G: Group<Element = E>>(
        group: &G,
        value: serde_json::Value,
    ) -> Result<Self, WalkError> {
        let raw: TablesJson =
            serde_json::from_value(value).map_err(|e| WalkError::Parse(e.to_string()))?;
        let mut out = Self::new();
        for (level, table) in raw.levels {
            let m: i64 = level
                .trim()
                .parse()
                .map_err(|_| WalkError::Parse(format!("bad level '{level}'")))?;
            let mut values = BTreeMap::new();
            for entry in table.values {
                values.insert(
                    (entry.sheet, group.parse_element(&entry.elem)?),
                    entry.value,
                );
            }
            out.insert(
                m,
                LevelTable {
                    values,
                    default: table.default,
                },
            );
        }
        Ok(out)
    }

    pub fn to_json_value<G: Group<Element = E>>(&self, group: &G) -> serde_json::Value {
        let levels = self
            .levels
            .iter()
            .map(|(m, t)| {
                let values = t
                    .values
                    .iter()
                    .map(|((sheet, g), v)| EntryJson {
                        sheet: *sheet,
                        elem: group.format_element(g),
                        value: *v,
                    })
                    .collect();
                (
                    m.to_string(),
                    LevelJson {
                        default: t.default,
                        values,
                    },
                )
            })
            .collect();
        serde_json::to_value(TablesJson { levels }).expect("tables serialize")
    }
}

/// `Σ_{j,h} σ^{(m)}_{ij}(h) h_m(j, g·h)`.
pub fn one_step_expectation<G: Group>(
    s: &StochasticSequence<G>,
    h: &FunctionTables<G::Element>,
    m: usize,
    i: usize,
    g: &G::Element,
) -> Result<f64, WalkError> {
    let matrix = s.matrix(m);
    let group = s.group();
    let mut acc = CompensatedSum::new();
    for j in 0..matrix.cols() {
        for (x, w) in matrix.cell(i, j) {
            acc.add(w * h.value(m as i64, j, &group.multiply(g, x))?);
        }
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResidual {
    pub level: usize,
    pub points: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicReport {
    pub max_residual: f64,
    pub levels: Vec<LevelResidual>,
}

/// Max over `m` in `levels` and over `(i, g)` of
/// `|h_{m-1}(i,g) - Σ_{j,h} h_m(j, g·h) σ^{(m)}_{ij}(h)|`.
///
/// The points `(i, g)` are the explicit entries of the level-`(m-1)` table
/// plus `(i, e)` for every sheet.
pub fn check_harmonic<G: Group>(
    s: &StochasticSequence<G>,
    h: &FunctionTables<G::Element>,
    levels: std::ops::RangeInclusive<usize>,
) -> Result<HarmonicReport, WalkError> {
    let identity = s.group().identity();
    let mut report = HarmonicReport {
        max_residual: 0.0,
        levels: Vec::new(),
    };
    for m in levels {
        let below = m as i64 - 1;
        let mut points: Vec<(usize, G::Element)> = h
            .levels
            .get(&below)
            .map(|t| t.values.keys().cloned().collect())
            .unwrap_or_default();
        for i in 0..s.ell(below) {
            points.push((i, identity.clone()));
        }
        points.sort();
        points.dedup();
        let mut worst: f64 = 0.0;
        for (i, g) in &points {
            let expected = one_step_expectation(s, h, m, *i, g)?;
            worst = worst.max((h.value(below, *i, g)? - expected).abs());
        }
        report.max_residual = report.max_residual.max(worst);
        report.levels.push(LevelResidual {
            level: m,
            points: points.len(),
            residual: worst,
        });
    }
    Ok(report)
}

/// Max over states `(i, g)` charged by `X_n` of
/// `|E[h_{n+1}(X_{n+1}) | X_n = (i,g)] - h_n(i,g)|`.
pub fn martingale_check<G: Group>(
    s: &StochasticSequence<G>,
    h: &FunctionTables<G::Element>,
    n: usize,
    budget: usize,
) -> Result<LevelResidual, WalkError> {
    let p = exact_distribution(s, n, budget)?;
    let mut worst: f64 = 0.0;
    for (i, g) in p.entries.keys() {
        let expected = one_step_expectation(s, h, n + 1, *i, g)?;
        worst = worst.max((expected - h.value(n as i64, *i, g)?).abs());
    }
    Ok(LevelResidual {
        level: n + 1,
        points: p.len(),
        residual: worst,
    })
}

/// `ν_μ(g⁻¹C_w) = (gν_μ)(C_w)`, applying the letters of `g⁻¹` from the right
/// to a disjoint union of cylinders: `a·C_u = C_{au}` unless `u` starts with
/// `a⁻¹`, where `a·C_{a⁻¹u'} = C_{u'}` and `a·C_{a⁻¹} = ⋃_{b≠a} C_b`.
pub fn translated_cylinder_mass(
    q: &QVector,
    g: &ReducedWord,
    w: &ReducedWord,
) -> Result<f64, BoundaryError> {
    let rank = q.rank();
    if g.rank() != rank || w.rank() != rank {
        return Err(BoundaryError::RankMismatch(g.rank(), w.rank()));
    }
    if w.is_identity() {
        return Ok(1.0);
    }
    let mut cylinders: Vec<Vec<Letter>> = vec![w.letters().to_vec()];
    for &a in g.inverse().letters().iter().rev() {
        let mut next = Vec::with_capacity(cylinders.len() + 2 * rank as usize);
        for u in cylinders {
            if u[0] != -a {
                let mut v = Vec::with_capacity(u.len() + 1);
                v.push(a);
                v.extend_from_slice(&u);
                next.push(v);
            } else if u.len() > 1 {
                next.push(u[1..].to_vec());
            } else {
                next.extend(
                    generator_letters(rank)
                        .into_iter()
                        .filter(|&b| b != a)
                        .map(|b| vec![b]),
                );
            }
        }
        cylinders = next;
    }
    Ok(cylinders
        .iter()
        .map(|u| {
            let n = u.len();
            u[..n - 1].iter().map(|&l| q.q(l)).product::<f64>() * q.v(u[n - 1])
        })
        .collect::<CompensatedSum>()
        .value())
}

/// Tables of the Poisson transform `h_m(g) = (gν_μ)(C_w)` of the cylinder
/// indicator `1_{C_w}` on sheet 0, for levels `first..=last`; level `m`
/// covers the ball of radius `radius + (m - first)`.
pub fn poisson_transform_tables(
    mu: &GeneratorMeasure,
    w: &ReducedWord,
    first: i64,
    last: i64,
    radius: usize,
) -> Result<FunctionTables<ReducedWord>, BoundaryError> {
    let rank = mu.rank();
    let q = solve_q_tight(mu)?;
    let widest = radius + (last - first).max(0) as usize;
    let mut values_by_word: BTreeMap<ReducedWord, f64> = BTreeMap::new();
    values_by_word.insert(
        ReducedWord::identity(rank),
        translated_cylinder_mass(&q, &ReducedWord::identity(rank), w)?,
    );
    for len in 1..=widest {
        for g in WordIndexer::new(rank, len).words() {
            let v = translated_cylinder_mass(&q, &g, w)?;
            values_by_word.insert(g, v);
        }
    }
    let mut tables = FunctionTables::new();
    for m in first..=last {
        let r = radius + (m - first) as usize;
        let values = values_by_word
            .iter()
            .filter(|(g, _)| g.len() <= r)
            .map(|(g, v)| ((0, g.clone()), *v))
            .collect();
        tables.insert(
            m,
            LevelTable {
                values,
                default: None,
            },
        );
    }
    Ok(tables)
}

/// The constant walk `σ^{(n)} = μ` on `F_d`.
pub fn constant_free_walk(
    mu: &GeneratorMeasure,
) -> Result<StochasticSequence<FreeGroup>, WalkError> {
    let group = FreeGroup::new(mu.rank())?;
    let atoms = mu
        .letters()
        .into_iter()
        .map(|l| Ok((ReducedWord::generator(mu.rank(), l)?, mu.weight(l))))
        .collect::<Result<Vec<_>, WalkError>>()?;
    StochasticSequence::constant(group, atoms)
}
