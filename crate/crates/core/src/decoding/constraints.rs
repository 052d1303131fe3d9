//! The schema constraint automaton.
//!
//! A target is a sequence of segments, each segment the view's markers in
//! order, each marker followed by a non-empty value, segments separated by
//! `[SSEP]`. Values draw from per-element candidate lists: the input
//! sentence's tokens for aspects and opinions, the three polarity words for
//! `[S]`, and the category phrases for `[C]`. Closed lists are walked as a
//! trie so a value is always exactly one phrase.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::tokenizer::{TokenId, Tokenizer};
use crate::error::{Error, Result};
use crate::schema::{
    paraphrase_element, ElementKind, ElementOrder, Polarity, TaskSpec, NULL_PARAPHRASE, SSEP,
};

/// Longest free-form value, in tokens.
pub const MAX_TERM_TOKENS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Marker {
    Element(ElementKind),
    Sep,
}

impl Marker {
    pub fn text(self) -> &'static str {
        match self {
            Marker::Element(k) => k.marker(),
            Marker::Sep => SSEP,
        }
    }
}

/// Token trie over a closed list of phrases.
#[derive(Clone, Debug, Default)]
pub struct PhraseTrie {
    nodes: Vec<TrieNode>,
}

#[derive(Clone, Debug, Default)]
struct TrieNode {
    children: BTreeMap<TokenId, usize>,
    terminal: bool,
}

impl PhraseTrie {
    pub fn new() -> Self {
        PhraseTrie {
            nodes: vec![TrieNode::default()],
        }
    }

    pub fn insert(&mut self, ids: &[TokenId]) {
        let mut node = 0;
        for &id in ids {
            node = match self.nodes[node].children.get(&id) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(id, next);
                    next
                }
            };
        }
        self.nodes[node].terminal = true;
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn children(&self, node: usize) -> impl Iterator<Item = TokenId> + '_ {
        self.nodes[node].children.keys().copied()
    }

    pub fn child(&self, node: usize, id: TokenId) -> Option<usize> {
        self.nodes[node].children.get(&id).copied()
    }

    pub fn is_terminal(&self, node: usize) -> bool {
        self.nodes[node].terminal
    }

    /// Every token appearing anywhere in the trie.
    pub fn tokens(&self) -> BTreeSet<TokenId> {
        self.nodes
            .iter()
            .flat_map(|n| n.children.keys().copied())
            .collect()
    }
}

/// Per-sentence candidate lists.
#[derive(Clone, Debug)]
pub struct ConstraintTables {
    eos: TokenId,
    free_terms: Vec<TokenId>,
    polarity: PhraseTrie,
    categories: Option<PhraseTrie>,
    markers: BTreeMap<Marker, Vec<TokenId>>,
}

impl ConstraintTables {
    pub fn build(sentence: &str, task: &TaskSpec, tokenizer: &dyn Tokenizer) -> Result<Self> {
        if sentence.trim().is_empty() {
            return Err(Error::Invalid("cannot constrain an empty sentence".into()));
        }
        let eos = tokenizer.eos_id();
        let mut markers = BTreeMap::new();
        for kind in task.elements() {
            markers.insert(Marker::Element(*kind), tokenizer.encode(kind.marker()));
        }
        markers.insert(Marker::Sep, tokenizer.encode(SSEP));
        for (m, ids) in &markers {
            if ids.is_empty() || ids.contains(&eos) {
                return Err(Error::Vocabulary {
                    message: format!("marker {} does not encode to usable tokens", m.text()),
                });
            }
        }
        let marker_starts: BTreeSet<TokenId> = markers.values().map(|ids| ids[0]).collect();

        // a value token must not open a marker, smuggle in brackets, or be blank
        let usable = |id: &TokenId| {
            let piece = tokenizer.decode(&[*id]);
            *id != eos
                && !marker_starts.contains(id)
                && !piece.trim().is_empty()
                && !piece.contains(['[', ']'])
        };
        let mut free: BTreeSet<TokenId> = tokenizer.encode(sentence).into_iter().collect();
        free.extend(tokenizer.encode(NULL_PARAPHRASE));
        let free_terms: Vec<TokenId> = free.into_iter().filter(usable).collect();

        let phrase_trie = |phrases: &mut dyn Iterator<Item = String>| -> Result<PhraseTrie> {
            let mut trie = PhraseTrie::new();
            for phrase in phrases {
                let ids = tokenizer.encode(&phrase);
                if ids.is_empty() || !ids.iter().all(usable) {
                    return Err(Error::Vocabulary {
                        message: format!("phrase {phrase:?} does not encode to usable tokens"),
                    });
                }
                trie.insert(&ids);
            }
            Ok(trie)
        };
        let polarity = phrase_trie(&mut Polarity::ALL.iter().map(|p| p.paraphrase().to_string()))?;
        let categories = if task.task.has(ElementKind::Category) {
            if task.categories().is_empty() {
                return Err(Error::InvalidTask(format!(
                    "{} needs a category vocabulary",
                    task.task
                )));
            }
            let mut phrases = Vec::with_capacity(task.categories().len());
            for c in task.categories() {
                phrases.push(paraphrase_element(ElementKind::Category, c)?);
            }
            Some(phrase_trie(&mut phrases.into_iter())?)
        } else {
            None
        };
        Ok(ConstraintTables {
            eos,
            free_terms,
            polarity,
            categories,
            markers,
        })
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    /// Candidate tokens for `[A]` and `[O]` values.
    pub fn free_terms(&self) -> &[TokenId] {
        &self.free_terms
    }

    pub fn polarity(&self) -> &PhraseTrie {
        &self.polarity
    }

    pub fn categories(&self) -> Option<&PhraseTrie> {
        self.categories.as_ref()
    }

    pub fn marker_ids(&self, marker: Marker) -> Option<&[TokenId]> {
        self.markers.get(&marker).map(Vec::as_slice)
    }

    fn marker(&self, marker: Marker) -> &[TokenId] {
        // build() encodes every element of the task plus the separator
        self.markers
            .get(&marker)
            .map(Vec::as_slice)
            .expect("marker outside the task element set")
    }

    fn closed(&self, kind: ElementKind) -> Option<&PhraseTrie> {
        match kind {
            ElementKind::Polarity => Some(&self.polarity),
            ElementKind::Category => self.categories.as_ref(),
            ElementKind::Aspect | ElementKind::Opinion => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// At the start of a segment, before its first marker.
    ExpectMarker,
    /// `pos` tokens of `marker` emitted so far.
    InMarker {
        marker: Marker,
        pos: usize,
    },
    /// Inside a value; `node` tracks the phrase trie for closed lists.
    InTerm {
        kind: ElementKind,
        len: usize,
        node: Option<usize>,
    },
    Finished,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoderState {
    phase: Phase,
    /// Markers of the order already opened in the current segment.
    cursor: usize,
    emitted: Vec<TokenId>,
}

impl Default for DecoderState {
    fn default() -> Self {
        Self::new()
    }
}

impl DecoderState {
    pub fn new() -> Self {
        DecoderState {
            phase: Phase::ExpectMarker,
            cursor: 0,
            emitted: Vec::new(),
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn emitted(&self) -> &[TokenId] {
        &self.emitted
    }

    pub fn is_finished(&self) -> bool {
        self.phase == Phase::Finished
    }

    fn segment_complete(&self, order: &ElementOrder) -> bool {
        self.cursor == order.len()
    }

    /// Whether the current value may be closed.
    fn can_close(&self, tables: &ConstraintTables) -> bool {
        match self.phase {
            Phase::InTerm { kind, len, node } => match (tables.closed(kind), node) {
                (Some(trie), Some(n)) => trie.is_terminal(n),
                _ => len > 0 || tables.free_terms.is_empty(),
            },
            _ => false,
        }
    }
}

impl fmt::Display for DecoderState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.phase {
            Phase::ExpectMarker => write!(f, "expect-marker(cursor {})", self.cursor),
            Phase::InMarker { marker, pos } => {
                write!(f, "inside-marker({} at {pos})", marker.text())
            }
            Phase::InTerm { kind, len, .. } => write!(f, "inside-term({kind}, {len} tokens)"),
            Phase::Finished => f.write_str("finished"),
        }
    }
}

/// Sorted set of tokens the automaton accepts next. Empty only once
/// end-of-sequence has been emitted.
pub fn allowed_next(
    state: &DecoderState,
    tables: &ConstraintTables,
    order: &ElementOrder,
) -> Vec<TokenId> {
    let mut out = BTreeSet::new();
    match state.phase {
        Phase::Finished => {}
        Phase::ExpectMarker => {
            out.insert(tables.marker(Marker::Element(order.kinds()[state.cursor]))[0]);
        }
        Phase::InMarker { marker, pos } => {
            out.insert(tables.marker(marker)[pos]);
        }
        Phase::InTerm { kind, len, node } => {
            match (tables.closed(kind), node) {
                (Some(trie), Some(n)) => out.extend(trie.children(n)),
                _ if len < MAX_TERM_TOKENS => out.extend(tables.free_terms.iter().copied()),
                _ => {}
            }
            if state.can_close(tables) {
                if state.segment_complete(order) {
                    out.insert(tables.marker(Marker::Sep)[0]);
                    out.insert(tables.eos);
                } else {
                    out.insert(tables.marker(Marker::Element(order.kinds()[state.cursor]))[0]);
                }
            }
        }
    }
    out.into_iter().collect()
}

fn enter_marker(
    mut state: DecoderState,
    marker: Marker,
    tables: &ConstraintTables,
) -> DecoderState {
    state.phase = Phase::InMarker { marker, pos: 1 };
    if tables.marker(marker).len() == 1 {
        close_marker(state, marker, tables)
    } else {
        state
    }
}

fn close_marker(
    mut state: DecoderState,
    marker: Marker,
    tables: &ConstraintTables,
) -> DecoderState {
    match marker {
        Marker::Sep => {
            state.phase = Phase::ExpectMarker;
            state.cursor = 0;
        }
        Marker::Element(kind) => {
            state.cursor += 1;
            state.phase = Phase::InTerm {
                kind,
                len: 0,
                node: tables.closed(kind).map(PhraseTrie::root),
            };
        }
    }
    state
}

/// Advances the automaton by one token.
pub fn step(
    state: &DecoderState,
    token: TokenId,
    tables: &ConstraintTables,
    order: &ElementOrder,
) -> Result<DecoderState> {
    if !allowed_next(state, tables, order).contains(&token) {
        return Err(Error::DisallowedToken {
            token,
            state: state.to_string(),
        });
    }
    let mut next = state.clone();
    next.emitted.push(token);
    Ok(match state.phase {
        Phase::Finished => unreachable!("nothing is allowed after end-of-sequence"),
        Phase::ExpectMarker => {
            enter_marker(next, Marker::Element(order.kinds()[state.cursor]), tables)
        }
        Phase::InMarker { marker, pos } => {
            if pos + 1 == tables.marker(marker).len() {
                close_marker(next, marker, tables)
            } else {
                next.phase = Phase::InMarker {
                    marker,
                    pos: pos + 1,
                };
                next
            }
        }
        Phase::InTerm { kind, len, node } => {
            let complete = state.segment_complete(order);
            let closer = if complete {
                Marker::Sep
            } else {
                Marker::Element(order.kinds()[state.cursor])
            };
            if state.can_close(tables) && complete && token == tables.eos {
                next.phase = Phase::Finished;
                next
            } else if state.can_close(tables) && token == tables.marker(closer)[0] {
                enter_marker(next, closer, tables)
            } else {
                let node = match (tables.closed(kind), node) {
                    (Some(trie), Some(n)) => trie.child(n, token),
                    _ => None,
                };
                next.phase = Phase::InTerm {
                    kind,
                    len: len + 1,
                    node,
                };
                next
            }
        }
    })
}

/// Fewest tokens needed to reach end-of-sequence from `state`.
pub fn steps_to_finish(
    state: &DecoderState,
    tables: &ConstraintTables,
    order: &ElementOrder,
) -> usize {
    // shortest completion of a value
    let min_value = |kind: ElementKind, node: Option<usize>, len: usize| -> usize {
        match (tables.closed(kind), node) {
            (Some(trie), Some(n)) => shortest_phrase(trie, n),
            _ if len > 0 || tables.free_terms.is_empty() => 0,
            _ => 1,
        }
    };
    let rest_of_segment = |from: usize| -> usize {
        order.kinds()[from..]
            .iter()
            .map(|k| {
                tables.marker(Marker::Element(*k)).len()
                    + min_value(*k, tables.closed(*k).map(PhraseTrie::root), 0)
            })
            .sum()
    };
    match state.phase {
        Phase::Finished => 0,
        Phase::ExpectMarker => rest_of_segment(state.cursor) + 1,
        Phase::InMarker { marker, pos } => {
            let left = tables.marker(marker).len() - pos;
            match marker {
                Marker::Sep => left + rest_of_segment(0) + 1,
                Marker::Element(k) => {
                    left + min_value(k, tables.closed(k).map(PhraseTrie::root), 0)
                        + rest_of_segment(state.cursor + 1)
                        + 1
                }
            }
        }
        Phase::InTerm { kind, len, node } => {
            min_value(kind, node, len) + rest_of_segment(state.cursor) + 1
        }
    }
}

fn shortest_phrase(trie: &PhraseTrie, node: usize) -> usize {
    if trie.is_terminal(node) {
        return 0;
    }
    trie.children(node)
        .filter_map(|id| trie.child(node, id))
        .map(|c| 1 + shortest_phrase(trie, c))
        .min()
        .unwrap_or(usize::MAX / 2)
}

/// Replays `ids` through the automaton and returns each value's tokens.
pub fn value_spans(
    ids: &[TokenId],
    tables: &ConstraintTables,
    order: &ElementOrder,
) -> Result<Vec<(ElementKind, Vec<TokenId>)>> {
    let mut state = DecoderState::new();
    let mut spans: Vec<(ElementKind, Vec<TokenId>)> = Vec::new();
    for &id in ids {
        let next = step(&state, id, tables, order)?;
        if let Phase::InTerm { kind, len, .. } = next.phase {
            if len == 0 {
                spans.push((kind, Vec::new()));
            } else if let Some(last) = spans.last_mut() {
                last.1.push(id);
            }
        }
        state = next;
    }
    Ok(spans)
}
