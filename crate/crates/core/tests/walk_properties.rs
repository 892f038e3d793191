use furstenberg_core::boundary::GeneratorMeasure;
use furstenberg_core::free_group::{reduce, ReducedWord};
use furstenberg_core::walk::{
    abel_identity_residual, abel_measure, chapman_kolmogorov_residual, check_harmonic,
    chi_squared_statistic, constant_free_walk, exact_distribution, martingale_check,
    poisson_transform_tables, sample_endpoints, FreeGroup, Integers, MeasureMatrix, Repetition,
    StochasticSequence,
};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const BUDGET: usize = 2_000_000;

/// Row-stochastic cells on `ℤ` from raw non-negative weights indexed
/// `[row][col][step + 2]`.
fn z_matrix(raw: &[Vec<Vec<f64>>]) -> MeasureMatrix<i64> {
    let cells = raw
        .iter()
        .map(|row| {
            let total: f64 = row.iter().flatten().sum();
            row.iter()
                .map(|cell| {
                    cell.iter()
                        .enumerate()
                        .filter(|(_, w)| **w > 0.0)
                        .map(|(k, w)| (k as i64 - 2, w / total))
                        .collect()
                })
                .collect()
        })
        .collect();
    MeasureMatrix::new(cells).unwrap()
}

fn raw_rows(rows: usize) -> impl Strategy<Value = Vec<Vec<Vec<f64>>>> {
    prop::collection::vec(
        prop::collection::vec(
            prop::collection::vec(prop_oneof![1 => Just(0.0), 2 => 0.05f64..1.0], 5),
            2,
        ),
        rows,
    )
    .prop_filter("every row and column needs mass", |m| {
        m.iter().all(|row| row.iter().flatten().any(|w| *w > 0.0))
            && (0..2).all(|j| m.iter().any(|row| row[j].iter().any(|w| *w > 0.0)))
    })
}

/// A random two-sheet sequence on `ℤ` with three stored levels.
fn two_sheet_sequence() -> impl Strategy<Value = StochasticSequence<Integers>> {
    (raw_rows(1), raw_rows(2), raw_rows(2), prop::bool::ANY).prop_map(|(m0, m1, m2, cycle)| {
        let beyond = if cycle {
            Repetition::Cycle
        } else {
            Repetition::HoldLast
        };
        StochasticSequence::new(
            Integers,
            vec![z_matrix(&m0), z_matrix(&m1), z_matrix(&m2)],
            beyond,
        )
        .unwrap()
    })
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn coin_flip_is_exactly_binomial() {
    let s = StochasticSequence::constant(Integers, vec![(-1, 0.5), (1, 0.5)]).unwrap();
    for n in 0..=20u64 {
        let steps = n + 1;
        let p = exact_distribution(&s, n as usize, BUDGET).unwrap();
        assert_eq!(p.len() as u64, steps + 1);
        for k in 0..=steps {
            let position = 2 * k as i64 - steps as i64;
            let expected = binomial(steps, k) as f64 / (1u64 << steps) as f64;
            assert_eq!(p.mass(0, &position), expected, "n={n} position={position}");
        }
    }
}

#[test]
fn free_group_two_sheet_chapman_kolmogorov() {
    let g = |letters: &[i32]| reduce(letters, 2).unwrap();
    let m0 = MeasureMatrix::new(vec![vec![
        vec![(g(&[1]), 0.3)],
        vec![(g(&[-2]), 0.2), (g(&[]), 0.5)],
    ]])
    .unwrap();
    let m1 = MeasureMatrix::new(vec![
        vec![
            vec![(g(&[1]), 0.25), (g(&[-1]), 0.25)],
            vec![(g(&[2]), 0.5)],
        ],
        vec![vec![(g(&[-2]), 0.6)], vec![(g(&[1, 2]), 0.4)]],
    ])
    .unwrap();
    let s = StochasticSequence::new(
        FreeGroup::new(2).unwrap(),
        vec![m0, m1],
        Repetition::HoldLast,
    )
    .unwrap();
    for n in 0..=5 {
        assert!(chapman_kolmogorov_residual(&s, n, BUDGET).unwrap() < 1e-14);
    }
}

#[test]
fn monte_carlo_level_three_chi_squared() {
    let s = StochasticSequence::new(
        Integers,
        vec![
            z_matrix(&[vec![
                vec![0.0, 0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0, 0.0],
            ]]),
            z_matrix(&[
                vec![vec![0.0, 0.3, 0.0, 0.2, 0.0], vec![0.0, 0.0, 0.5, 0.0, 0.0]],
                vec![
                    vec![0.1, 0.0, 0.0, 0.0, 0.4],
                    vec![0.0, 0.25, 0.0, 0.25, 0.0],
                ],
            ]),
        ],
        Repetition::HoldLast,
    )
    .unwrap();
    let exact = exact_distribution(&s, 3, BUDGET).unwrap();
    let states = sample_endpoints(&s, 3, 100_000, 2024).unwrap();
    assert_eq!(states, sample_endpoints(&s, 3, 100_000, 2024).unwrap());
    let report = chi_squared_statistic(&exact, &states);
    let quantile = ChiSquared::new(report.degrees_of_freedom as f64)
        .unwrap()
        .inverse_cdf(0.999);
    assert!(
        report.statistic < quantile,
        "{} ≥ {quantile} ({} dof)",
        report.statistic,
        report.degrees_of_freedom
    );
}

#[test]
fn poisson_transform_is_harmonic_and_a_martingale() {
    let mu = GeneratorMeasure::symmetric(&[0.35, 0.15]).unwrap();
    let s = constant_free_walk(&mu).unwrap();
    let w = ReducedWord::generator(2, 1).unwrap();
    let tables = poisson_transform_tables(&mu, &w, -1, 5, 3).unwrap();
    let harmonic = check_harmonic(&s, &tables, 0..=4).unwrap();
    assert!(harmonic.max_residual < 1e-12, "{}", harmonic.max_residual);
    for n in 0..=3 {
        let m = martingale_check(&s, &tables, n, BUDGET).unwrap();
        assert!(m.residual < 1e-12);
        let level = &harmonic.levels[n + 1];
        assert!((m.residual - level.residual).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chapman_kolmogorov_on_random_sequences(s in two_sheet_sequence()) {
        for n in 0..=5 {
            prop_assert!(chapman_kolmogorov_residual(&s, n, BUDGET).unwrap() < 1e-14);
        }
    }

    #[test]
    fn exact_distributions_are_probabilities(s in two_sheet_sequence(), n in 0usize..6) {
        let p = exact_distribution(&s, n, BUDGET).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-12);
        prop_assert!(p.entries.values().all(|m| *m >= 0.0));
    }

    #[test]
    fn abel_identity_and_domination(s in two_sheet_sequence(), a in 0.2f64..0.6, k in 0u32..2) {
        for t in 0..=2i64 {
            for row in 0..s.ell(t - 1) {
                let r = abel_identity_residual(&s, t, row, a, k, 1e-10, BUDGET).unwrap();
                prop_assert!(r.residual < 1e-12, "t={t} s={row}: {}", r.residual);
            }
        }
        for r in 0..2 {
            let lower = abel_measure(&s, 1, r, a, k, 1e-8, BUDGET).unwrap();
            let upper = abel_measure(&s, 1, r, a, k + 1, 1e-8, BUDGET).unwrap();
            for (key, v) in &upper.entries {
                if let Some(base) = lower.entries.get(key) {
                    prop_assert!(*v <= base / a * (1.0 + 1e-13));
                }
            }
        }
    }
}
