mod common;

use std::collections::BTreeSet;

use common::{spec, CATEGORIES, TASKS};
use mvp_core::backend::TableBackend;
use mvp_core::decoding::{
    allowed_next, constrained_generate, step, steps_to_finish, value_spans, ConstraintTables,
    DecoderState, PieceVocab, Tokenizer,
};
use mvp_core::orders::enumerate_orders;
use mvp_core::schema::{build_input, parse_target, ElementKind, Polarity, Task};
use proptest::prelude::*;

const SENTENCES: [&str; 3] = [
    "The sushi was great but the service was slow.",
    "Battery life is short, keyboard feels cheap!",
    "We waited 40 minutes for a cold pizza.",
];

fn vocab() -> PieceVocab {
    let mut texts: Vec<String> = SENTENCES.iter().map(|s| s.to_string()).collect();
    texts.extend(
        CATEGORIES
            .iter()
            .map(|c| c.replace(['#', '_'], " ").to_lowercase()),
    );
    texts.push("great bad neutral it".into());
    PieceVocab::from_corpus(texts.iter().map(String::as_str))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn uniform_generations_are_well_formed(
        seed in any::<u64>(),
        task_i in 0usize..4,
        order_i in 0usize..24,
        sent_i in 0usize..3,
    ) {
        let v = vocab();
        let task = TASKS[task_i];
        let spec = spec(task);
        let orders = enumerate_orders(task);
        let order = &orders[order_i % orders.len()];
        let sentence = SENTENCES[sent_i];
        let backend = TableBackend::uniform(seed);
        let g = constrained_generate(&backend, &v, &spec, sentence, order, None, 4096).unwrap();
        prop_assert!(!g.truncated);

        let (tuples, diag) = parse_target(&g.text, &spec);
        prop_assert!(diag.is_clean(), "{}: {:?}", g.text, diag);
        prop_assert!(!tuples.is_empty());
        for t in &tuples {
            if let Some(c) = &t.category {
                prop_assert!(CATEGORIES.contains(&c.as_str()), "{c}");
            }
        }

        let tables = ConstraintTables::build(sentence, &spec, &v).unwrap();
        let mut sentence_tokens: BTreeSet<u32> = v.encode(sentence).into_iter().collect();
        sentence_tokens.extend(v.encode("it"));
        let polarities: BTreeSet<String> =
            [Polarity::Pos, Polarity::Neu, Polarity::Neg].iter().map(|p| p.paraphrase().to_string()).collect();
        for (kind, ids) in value_spans(&g.ids, &tables, order).unwrap() {
            match kind {
                ElementKind::Aspect | ElementKind::Opinion => {
                    prop_assert!(ids.iter().all(|id| sentence_tokens.contains(id)));
                }
                ElementKind::Polarity => {
                    prop_assert!(polarities.contains(&v.decode(&ids)), "{}", v.decode(&ids));
                }
                ElementKind::Category => {}
            }
        }
    }

    #[test]
    fn no_state_is_a_dead_end(seed in any::<u64>(), task_i in 0usize..4) {
        let v = vocab();
        let task = TASKS[task_i];
        let spec = spec(task);
        let order = &enumerate_orders(task)[0];
        let tables = ConstraintTables::build(SENTENCES[0], &spec, &v).unwrap();
        let backend = TableBackend::uniform(seed);
        let input = build_input(SENTENCES[0], order, None);
        let mut state = DecoderState::new();
        let mut budget = steps_to_finish(&state, &tables, order);
        while !state.is_finished() {
            let allowed = allowed_next(&state, &tables, order);
            prop_assert!(!allowed.is_empty(), "dead end at {}", state);
            prop_assert!(budget >= 1);
            let choice = mvp_core::backend::Backend::next_token(&backend, &input, state.emitted(), &allowed).unwrap();
            state = step(&state, choice.id, &tables, order).unwrap();
            budget = steps_to_finish(&state, &tables, order);
            prop_assert!(budget < usize::MAX / 4);
        }
        prop_assert_eq!(budget, 0);
    }
}

#[test]
fn greedy_shortest_path_matches_steps_to_finish() {
    let v = vocab();
    for task in [Task::Asqp, Task::Aste] {
        let spec = spec(task);
        for order in enumerate_orders(task) {
            let tables = ConstraintTables::build(SENTENCES[1], &spec, &v).unwrap();
            let mut state = DecoderState::new();
            let mut expected = steps_to_finish(&state, &tables, &order);
            let mut taken = 0;
            while !state.is_finished() {
                let next = allowed_next(&state, &tables, &order)
                    .into_iter()
                    .map(|id| step(&state, id, &tables, &order).unwrap())
                    .min_by_key(|s| steps_to_finish(s, &tables, &order))
                    .unwrap();
                let left = steps_to_finish(&next, &tables, &order);
                assert_eq!(left + 1, expected, "{order} at {state}");
                expected = left;
                state = next;
                taken += 1;
            }
            assert_eq!(
                taken,
                steps_to_finish(&DecoderState::new(), &tables, &order)
            );
        }
    }
}
