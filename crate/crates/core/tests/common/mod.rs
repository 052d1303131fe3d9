#![allow(dead_code)]

use mvp_core::schema::{ElementKind, Polarity, SentimentTuple, Task, TaskSpec};
use proptest::prelude::*;

pub const TASKS: [Task; 4] = [Task::Asqp, Task::Acos, Task::Aste, Task::Tasd];

pub const CATEGORIES: [&str; 4] = [
    "FOOD#QUALITY",
    "RESTAURANT#GENERAL",
    "service_general",
    "laptop#design_features",
];

pub fn spec(task: Task) -> TaskSpec {
    let cats = if task.has(ElementKind::Category) {
        CATEGORIES.iter().map(|c| c.to_string()).collect()
    } else {
        Vec::new()
    };
    TaskSpec::new(task, "Fixture", cats).unwrap()
}

pub fn polarity() -> impl Strategy<Value = Polarity> {
    prop_oneof![
        Just(Polarity::Pos),
        Just(Polarity::Neu),
        Just(Polarity::Neg)
    ]
}

/// Free-form terms: one to three words without brackets. The word `it` is
/// left out because it is how implicit elements are written.
pub fn term() -> impl Strategy<Value = String> {
    let word =
        "[a-zA-Z0-9'.,!&\u{e9}-]{1,8}".prop_filter("reserved", |w| !w.eq_ignore_ascii_case("it"));
    prop_oneof![
        1 => Just("NULL".to_string()),
        6 => prop::collection::vec(word, 1..=3).prop_map(|w| w.join(" ")),
    ]
}

pub fn tuple(task: Task) -> impl Strategy<Value = SentimentTuple> {
    (term(), term(), 0..CATEGORIES.len(), polarity()).prop_map(move |(a, o, c, p)| {
        let cat = CATEGORIES[c];
        match task {
            Task::Asqp | Task::Acos => SentimentTuple::quad(&a, cat, &o, p),
            Task::Aste => SentimentTuple::aste(&a, &o, p),
            Task::Tasd => SentimentTuple::tasd(&a, cat, p),
        }
    })
}

pub fn task() -> impl Strategy<Value = Task> {
    prop::sample::select(TASKS.to_vec())
}
