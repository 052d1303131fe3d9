use std::collections::{BTreeSet, HashMap};

use mvp_core::aggregate::{rank_select, vote, ViewPrediction};
use mvp_core::orders::enumerate_orders;
use mvp_core::schema::{Polarity, SentimentTuple, Task};
use proptest::prelude::*;

fn universe() -> Vec<SentimentTuple> {
    ["a", "b", "c", "d"]
        .iter()
        .map(|a| SentimentTuple::aste(a, "o", Polarity::Pos))
        .collect()
}

fn views(masks: &[u8]) -> Vec<ViewPrediction> {
    let u = universe();
    let orders = enumerate_orders(Task::Asqp);
    masks
        .iter()
        .enumerate()
        .map(|(i, mask)| {
            let tuples = (0..4)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| u[b].clone());
            ViewPrediction::new(orders[i].clone(), tuples, -(i as f64))
        })
        .collect()
}

fn brute_force(views: &[ViewPrediction]) -> BTreeSet<SentimentTuple> {
    let mut counts: HashMap<String, (SentimentTuple, usize)> = HashMap::new();
    for v in views {
        for t in &v.tuples {
            counts.entry(t.to_string()).or_insert((t.clone(), 0)).1 += 1;
        }
    }
    let m = views.len() as f64;
    counts
        .into_values()
        .filter(|(_, c)| *c as f64 >= m / 2.0)
        .map(|(t, _)| t)
        .collect()
}

proptest! {
    #[test]
    fn vote_matches_counter(masks in prop::collection::vec(0u8..16, 1..=8)) {
        let v = views(&masks);
        prop_assert_eq!(vote(&v), brute_force(&v));
    }

    #[test]
    fn vote_ignores_view_order(masks in prop::collection::vec(0u8..16, 1..=6), rot in 0usize..6) {
        let v = views(&masks);
        let mut rotated = v.clone();
        rotated.rotate_left(rot % v.len());
        prop_assert_eq!(vote(&v), vote(&rotated));
    }

    #[test]
    fn vote_stays_within_union(masks in prop::collection::vec(0u8..16, 1..=6)) {
        let v = views(&masks);
        let union: BTreeSet<_> = v.iter().flat_map(|x| x.tuples.iter().cloned()).collect();
        prop_assert!(vote(&v).is_subset(&union));
    }

    #[test]
    fn rank_returns_some_view(masks in prop::collection::vec(0u8..16, 1..=6)) {
        let v = views(&masks);
        let picked = rank_select(&v);
        prop_assert!(v.iter().any(|x| x.tuples == picked));
    }
}

#[test]
fn single_view_vote_is_identity() {
    for mask in 0..16u8 {
        let v = views(&[mask]);
        assert_eq!(vote(&v), v[0].tuples);
    }
}
