mod common;

use common::{spec, task, tuple};
use mvp_core::orders::enumerate_orders;
use mvp_core::schema::{
    normalize_text, observed_order, parse_target, serialize_target, SentimentTuple, Task,
};
use proptest::prelude::*;

fn task_and_tuples() -> impl Strategy<Value = (Task, Vec<SentimentTuple>)> {
    task().prop_flat_map(|t| (Just(t), prop::collection::vec(tuple(t), 0..=4)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn round_trip_under_every_order((task, tuples) in task_and_tuples()) {
        let spec = spec(task);
        for order in enumerate_orders(task) {
            let text = serialize_target(&tuples, &order).unwrap();
            let (back, diag) = parse_target(&text, &spec);
            prop_assert!(diag.is_clean(), "{text}: {:?}", diag);
            prop_assert_eq!(&back, &tuples);
            if !tuples.is_empty() {
                prop_assert_eq!(observed_order(&text), order.kinds().to_vec());
            }
        }
    }

    #[test]
    fn normalization_is_idempotent(s in "\\PC{0,40}") {
        let once = normalize_text(&s);
        prop_assert_eq!(normalize_text(&once), once.clone());
        prop_assert!(!once.starts_with(' ') && !once.ends_with(' '));
    }

    #[test]
    fn equality_ignores_case_and_spacing((task, tuples) in task_and_tuples()) {
        for t in tuples {
            let mut noisy = t.clone();
            noisy.aspect = format!("  {}  ", t.aspect.to_uppercase());
            prop_assert_eq!(&noisy, &t);
            let _ = task;
        }
    }
}

#[test]
fn serializes_worked_example() {
    let order = "[O][A][C][S]".parse().unwrap();
    let t = SentimentTuple::quad("sushi", "food", "love", mvp_core::schema::Polarity::Pos);
    assert_eq!(
        serialize_target(&[t], &order).unwrap(),
        "[O] love [A] sushi [C] food [S] great"
    );
}
