use mvp_core::backend::{ScoreMode, TableBackend};
use mvp_core::data::{DatasetExample, Split};
use mvp_core::orders::{demarked_target, enumerate_orders, rank_orders, select_orders};
use mvp_core::schema::{ElementOrder, Polarity, SentimentTuple, Task, TaskSpec};
use proptest::prelude::*;

fn dataset(n: usize) -> Vec<DatasetExample> {
    let spec = TaskSpec::new(Task::Aste, "Fixture", vec![]).unwrap();
    (0..n)
        .map(|i| DatasetExample {
            sentence: format!("sentence {i}"),
            gold: vec![SentimentTuple::aste(&format!("a{i}"), "o", Polarity::Neg)],
            task: spec.clone(),
            split: Split::Train,
        })
        .collect()
}

/// Mean per order, then sort by score descending and marker string.
fn oracle(data: &[DatasetExample], scores: &[Vec<f64>]) -> Vec<ElementOrder> {
    let orders = enumerate_orders(Task::Aste);
    let mut rows: Vec<(f64, String, ElementOrder)> = orders
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let mean = scores.iter().map(|row| row[j]).sum::<f64>() / data.len() as f64;
            (mean, o.marker_string(), o.clone())
        })
        .collect();
    rows.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    rows.into_iter().map(|r| r.2).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selection_matches_sort_oracle(
        n in 1usize..5,
        raw in prop::collection::vec(prop::collection::vec(-8i32..0, 6), 5),
    ) {
        let data = dataset(n);
        let scores: Vec<Vec<f64>> = raw[..n].iter().map(|r| r.iter().map(|&x| x as f64 / 4.0).collect()).collect();
        let mut backend = TableBackend::new(0);
        for (i, e) in data.iter().enumerate() {
            for (j, o) in enumerate_orders(Task::Aste).iter().enumerate() {
                backend = backend.with_score(&e.sentence, &demarked_target(e, o).unwrap(), scores[i][j]);
            }
        }
        let expected = oracle(&data, &scores);
        let ranked: Vec<ElementOrder> = rank_orders(Task::Aste, &data, &backend, ScoreMode::Mean)
            .unwrap()
            .into_iter()
            .map(|s| s.order)
            .collect();
        prop_assert_eq!(&ranked, &expected);
        for m in 1..=6 {
            let top = select_orders(Task::Aste, &data, &backend, m, ScoreMode::Mean).unwrap();
            prop_assert_eq!(&top[..], &expected[..m]);
        }
    }
}
