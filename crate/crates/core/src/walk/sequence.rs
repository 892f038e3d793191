use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FreeGroup, Group, GroupSpec, Integers, WalkError};

/// Row-sum tolerance of a σ-stochastic matrix.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// How matrices beyond the stored horizon are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Repetition {
    /// `σ^{(n)} = σ^{(H-1)}` for `n ≥ H`.
    #[default]
    #[serde(rename = "hold-last")]
    HoldLast,
    /// `σ^{(n)} = σ^{(1 + (n-1) mod (H-1))}` for `n ≥ H`.
    #[serde(rename = "cycle")]
    Cycle,
}

/// An `ℓ_{n-1} × ℓ_n` matrix of finitely supported measures on a group.
///
/// Each cell lists `(element, mass)` pairs sorted by element, without
/// duplicates or zero masses.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureMatrix<E> {
    rows: usize,
    cols: usize,
    cells: Vec<Vec<Vec<(E, f64)>>>,
}

impl<E: Clone + Ord> MeasureMatrix<E> {
    pub fn new(cells: Vec<Vec<Vec<(E, f64)>>>) -> Result<Self, WalkError> {
        let rows = cells.len();
        if rows == 0 {
            return Err(WalkError::InvalidSequence("matrix has no rows".into()));
        }
        let cols = cells[0].len();
        if cols == 0 {
            return Err(WalkError::InvalidSequence("matrix has no columns".into()));
        }
        let mut normalized = Vec::with_capacity(rows);
        for (i, row) in cells.into_iter().enumerate() {
            if row.len() != cols {
                return Err(WalkError::InvalidSequence(format!(
                    "row {i} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            let mut out_row = Vec::with_capacity(cols);
            for cell in row {
                let mut merged: BTreeMap<E, f64> = BTreeMap::new();
                for (e, m) in cell {
                    if !(m >= 0.0) || !m.is_finite() {
                        return Err(WalkError::InvalidSequence(format!(
                            "negative or non-finite mass {m}"
                        )));
                    }
                    *merged.entry(e).or_insert(0.0) += m;
                }
                out_row.push(merged.into_iter().filter(|(_, m)| *m > 0.0).collect());
            }
            normalized.push(out_row);
        }
        Ok(Self {
            rows,
            cols,
            cells: normalized,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell(&self, i: usize, j: usize) -> &[(E, f64)] {
        &self.cells[i][j]
    }

    /// `σ_{ij}(G)`.
    pub fn cell_mass(&self, i: usize, j: usize) -> f64 {
        self.cells[i][j].iter().map(|(_, m)| m).sum()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        (0..self.cols).map(|j| self.cell_mass(i, j)).sum()
    }
}

/// A σ-stochastic sequence `σ = (σ^{(n)})_{n≥0}` with `σ^{(n)}` of shape
/// `ℓ_{n-1} × ℓ_n` and `ℓ_{-1} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticSequence<G: Group> {
    group: G,
    matrices: Vec<MeasureMatrix<G::Element>>,
    beyond: Repetition,
}

impl<G: Group> StochasticSequence<G> {
    pub fn new(
        group: G,
        matrices: Vec<MeasureMatrix<G::Element>>,
        beyond: Repetition,
    ) -> Result<Self, WalkError> {
        let horizon = matrices.len();
        if horizon == 0 {
            return Err(WalkError::InvalidSequence(
                "at least one matrix is required".into(),
            ));
        }
        if matrices[0].rows() != 1 {
            return Err(WalkError::InvalidSequence(
                "σ^(0) must have a single row".into(),
            ));
        }
        for n in 1..horizon {
            if matrices[n].rows() != matrices[n - 1].cols() {
                return Err(WalkError::InvalidSequence(format!(
                    "σ^({n}) has {} rows but ℓ_{} = {}",
                    matrices[n].rows(),
                    n - 1,
                    matrices[n - 1].cols()
                )));
            }
        }
        let last = &matrices[horizon - 1];
        let consistent = match (beyond, horizon) {
            (_, 1) => last.cols() == 1,
            (Repetition::HoldLast, _) => last.rows() == last.cols(),
            (Repetition::Cycle, _) => last.cols() == matrices[1].rows(),
        };
        if !consistent {
            return Err(WalkError::InvalidSequence(
                "repetition rule beyond the horizon is inconsistent with the matrix shapes".into(),
            ));
        }
        Ok(Self {
            group,
            matrices,
            beyond,
        })
    }

    /// `ℓ ≡ 1`, `σ^{(n)} = μ` for all `n`.
    pub fn constant(group: G, mu: Vec<(G::Element, f64)>) -> Result<Self, WalkError> {
        Self::new(
            group,
            vec![MeasureMatrix::new(vec![vec![mu]])?],
            Repetition::HoldLast,
        )
    }

    pub fn group(&self) -> &G {
        &self.group
    }

    pub fn horizon(&self) -> usize {
        self.matrices.len()
    }

    pub fn beyond(&self) -> Repetition {
        self.beyond
    }

    pub fn stored(&self) -> &[MeasureMatrix<G::Element>] {
        &self.matrices
    }

    /// Index of the stored matrix used at level `n`.
    pub fn stored_index(&self, n: usize) -> usize {
        let h = self.matrices.len();
        if n < h {
            n
        } else if h == 1 {
            0
        } else {
            match self.beyond {
                Repetition::HoldLast => h - 1,
                Repetition::Cycle => 1 + (n - 1) % (h - 1),
            }
        }
    }

    /// `σ^{(n)}`.
    pub fn matrix(&self, n: usize) -> &MeasureMatrix<G::Element> {
        &self.matrices[self.stored_index(n)]
    }

    /// `ℓ_n` for `n ≥ -1`.
    pub fn ell(&self, n: i64) -> usize {
        if n < 0 {
            1
        } else {
            self.matrix(n as usize).cols()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ElemJson {
    Text(String),
    Int(i64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AtomJson {
    elem: ElemJson,
    mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RowJson {
    Cells(Vec<Vec<AtomJson>>),
    Single(Vec<AtomJson>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SequenceJson {
    group: GroupSpec,
    #[serde(default)]
    ell: Option<Vec<usize>>,
    matrices: Vec<Vec<RowJson>>,
    #[serde(default)]
    beyond: Repetition,
}

fn parse_matrices<G: Group>(
    group: &G,
    raw: &SequenceJson,
) -> Result<Vec<MeasureMatrix<G::Element>>, WalkError> {
    let mut out = Vec::with_capacity(raw.matrices.len());
    for (n, rows) in raw.matrices.iter().enumerate() {
        let mut cells = Vec::with_capacity(rows.len());
        for row in rows {
            let columns: Vec<&[AtomJson]> = match row {
                RowJson::Cells(c) => c.iter().map(|v| v.as_slice()).collect(),
                RowJson::Single(atoms) => vec![atoms.as_slice()],
            };
            let mut parsed_row = Vec::with_capacity(columns.len());
            for atoms in columns {
                let mut cell = Vec::with_capacity(atoms.len());
                for atom in atoms {
                    let e = match &atom.elem {
                        ElemJson::Text(t) => group.parse_element(t)?,
                        ElemJson::Int(i) => group.parse_element(&i.to_string())?,
                    };
                    cell.push((e, atom.mass));
                }
                parsed_row.push(cell);
            }
            cells.push(parsed_row);
        }
        let m = MeasureMatrix::new(cells)
            .map_err(|e| WalkError::InvalidSequence(format!("σ^({n}): {e}")))?;
        out.push(m);
    }
    if let Some(ell) = &raw.ell {
        if ell.len() != out.len() || ell.iter().zip(&out).any(|(l, m)| *l != m.cols()) {
            return Err(WalkError::InvalidSequence(format!(
                "\"ell\" {ell:?} disagrees with the matrix shapes"
            )));
        }
    }
    Ok(out)
}

impl<G: Group> StochasticSequence<G> {
    pub fn to_json_value(&self) -> serde_json::Value {
        let matrices = self
            .matrices
            .iter()
            .map(|m| {
                (0..m.rows())
                    .map(|i| {
                        RowJson::Cells(
                            (0..m.cols())
                                .map(|j| {
                                    m.cell(i, j)
                                        .iter()
                                        .map(|(e, mass)| AtomJson {
                                            elem: ElemJson::Text(self.group.format_element(e)),
                                            mass: *mass,
                                        })
                                        .collect()
                                })
                                .collect(),
                        )
                    })
                    .collect()
            })
            .collect();
        let raw = SequenceJson {
            group: self.group.spec(),
            ell: Some(self.matrices.iter().map(|m| m.cols()).collect()),
            matrices,
            beyond: self.beyond,
        };
        serde_json::to_value(raw).expect("sequence serializes")
    }
}

/// A stochastic sequence over either supported group, as loaded from JSON.
#[derive(Debug, Clone, PartialEq)]
pub enum AnySequence {
    Free(StochasticSequence<FreeGroup>),
    Int(StochasticSequence<Integers>),
}

impl AnySequence {
    pub fn from_json_value(value: serde_json::Value) -> Result<Self, WalkError> {
        let raw: SequenceJson =
            serde_json::from_value(value).map_err(|e| WalkError::Parse(e.to_string()))?;
        match raw.group {
            GroupSpec::Free { d } => {
                let group = FreeGroup::new(d)?;
                let matrices = parse_matrices(&group, &raw)?;
                Ok(Self::Free(StochasticSequence::new(
                    group, matrices, raw.beyond,
                )?))
            }
            GroupSpec::Int => {
                let matrices = parse_matrices(&Integers, &raw)?;
                Ok(Self::Int(StochasticSequence::new(
                    Integers, matrices, raw.beyond,
                )?))
            }
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, WalkError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| WalkError::Parse(e.to_string()))?;
        Self::from_json_value(value)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        match self {
            Self::Free(s) => s.to_json_value(),
            Self::Int(s) => s.to_json_value(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowViolation {
    pub level: usize,
    pub row: usize,
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnViolation {
    pub level: usize,
    pub column: usize,
}

/// Outcome of [`validate_sigma`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaReport {
    pub horizon: usize,
    pub max_row_residual: f64,
    pub row_violations: Vec<RowViolation>,
    pub zero_columns: Vec<ColumnViolation>,
    /// Finite tables never have full support on an infinite group.
    pub sigma0_full_support: bool,
    pub warnings: Vec<String>,
    pub passes: bool,
}

/// Checks row-stochasticity and the absence of zero columns on every stored
/// matrix, and records the support status of `σ^{(0)}`.
pub fn validate_sigma<G: Group>(s: &StochasticSequence<G>) -> SigmaReport {
    let mut max_row_residual: f64 = 0.0;
    let mut row_violations = Vec::new();
    let mut zero_columns = Vec::new();
    for (level, m) in s.stored().iter().enumerate() {
        for i in 0..m.rows() {
            let sum = m.row_sum(i);
            let residual = (sum - 1.0).abs();
            max_row_residual = max_row_residual.max(residual);
            if residual > ROW_SUM_TOLERANCE {
                row_violations.push(RowViolation { level, row: i, sum });
            }
        }
        for j in 0..m.cols() {
            if (0..m.rows()).all(|i| m.cell_mass(i, j) <= 0.0) {
                zero_columns.push(ColumnViolation { level, column: j });
            }
        }
    }
    let warnings =
        vec!["σ^(0) has finite support; the full-support assumption does not hold".to_string()];
    let passes = row_violations.is_empty() && zero_columns.is_empty();
    SigmaReport {
        horizon: s.horizon(),
        max_row_residual,
        row_violations,
        zero_columns,
        sigma0_full_support: false,
        warnings,
        passes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_group::reduce;

    fn uniform_f2() -> StochasticSequence<FreeGroup> {
        let g = FreeGroup::new(2).unwrap();
        let mu = [1, -1, 2, -2]
            .iter()
            .map(|&l| (reduce(&[l], 2).unwrap(), 0.25))
            .collect();
        StochasticSequence::constant(g, mu).unwrap()
    }

    #[test]
    fn constant_uniform_walk_passes_with_support_warning() {
        let report = validate_sigma(&uniform_f2());
        assert!(report.passes);
        assert!(!report.sigma0_full_support);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn zero_column_is_reported() {
        let s = StochasticSequence::new(
            Integers,
            vec![
                MeasureMatrix::new(vec![vec![vec![(0, 0.5)], vec![(1, 0.5)]]]).unwrap(),
                MeasureMatrix::new(vec![
                    vec![vec![(0, 1.0)], vec![]],
                    vec![vec![(1, 1.0)], vec![]],
                ])
                .unwrap(),
            ],
            Repetition::HoldLast,
        )
        .unwrap();
        let report = validate_sigma(&s);
        assert!(!report.passes);
        assert_eq!(
            report.zero_columns,
            vec![ColumnViolation {
                level: 1,
                column: 1
            }]
        );
    }

    #[test]
    fn repetition_rules() {
        let cell = |k: i64| vec![(k, 1.0)];
        let m = |k| MeasureMatrix::new(vec![vec![cell(k)]]).unwrap();
        let s = StochasticSequence::new(Integers, vec![m(0), m(1), m(2), m(3)], Repetition::Cycle)
            .unwrap();
        let picked: Vec<usize> = (0..9).map(|n| s.stored_index(n)).collect();
        assert_eq!(picked, vec![0, 1, 2, 3, 1, 2, 3, 1, 2]);
        let s = StochasticSequence::new(Integers, vec![m(0), m(1), m(2)], Repetition::HoldLast)
            .unwrap();
        assert_eq!(s.stored_index(10), 2);
        let wide = MeasureMatrix::new(vec![vec![cell(0), cell(1)]]).unwrap();
        assert!(StochasticSequence::new(Integers, vec![wide], Repetition::HoldLast).is_err());
    }

    #[test]
    fn json_round_trip_and_shorthand() {
        let doc = r#"{"group": {"kind":"free","d":2}, "ell":[1],
            "matrices":[ [ [ {"elem":"1","mass":0.25}, {"elem":"-1","mass":0.25},
                             {"elem":"2","mass":0.25}, {"elem":"-2","mass":0.25} ] ] ],
            "beyond":"hold-last"}"#;
        let s = AnySequence::from_json_str(doc).unwrap();
        assert_eq!(s, AnySequence::Free(uniform_f2()));
        let back = AnySequence::from_json_value(s.to_json_value()).unwrap();
        assert_eq!(back, s);

        let int = r#"{"group":{"kind":"int"},"matrices":[[[[{"elem":-1,"mass":0.5},{"elem":"1","mass":0.5}]]]]}"#;
        let AnySequence::Int(s) = AnySequence::from_json_str(int).unwrap() else {
            panic!("expected an integer sequence")
        };
        assert_eq!(s.matrix(5).cell(0, 0), &[(-1, 0.5), (1, 0.5)]);
        let bad_ell =
            r#"{"group":{"kind":"int"},"ell":[2],"matrices":[[[[{"elem":0,"mass":1}]]]]}"#;
        assert!(AnySequence::from_json_str(bad_ell).is_err());
    }
}
