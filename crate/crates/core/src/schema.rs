//! Sentiment tuples, element markers, label paraphrasing and the ordered
//! target text format.
//!
//! A target sequence renders every tuple as marker-prefixed elements in the
//! order of an [`ElementOrder`], e.g. `[O] love [A] sushi [C] food [S] great`,
//! and joins tuples with ` [SSEP] `.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tuple separator inside a target sequence.
pub const SSEP: &str = "[SSEP]";

/// Label used by the datasets for implicit aspects and opinions.
pub const NULL_LABEL: &str = "NULL";

/// Natural-language stand-in for [`NULL_LABEL`].
pub const NULL_PARAPHRASE: &str = "it";

/// The sentiment elements, declared in marker-string order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Aspect,
    Category,
    Opinion,
    Polarity,
}

impl ElementKind {
    pub const ALL: [ElementKind; 4] = [
        ElementKind::Aspect,
        ElementKind::Category,
        ElementKind::Opinion,
        ElementKind::Polarity,
    ];

    pub fn marker(self) -> &'static str {
        match self {
            ElementKind::Aspect => "[A]",
            ElementKind::Category => "[C]",
            ElementKind::Opinion => "[O]",
            ElementKind::Polarity => "[S]",
        }
    }

    pub fn from_marker(marker: &str) -> Option<Self> {
        ElementKind::ALL.into_iter().find(|k| k.marker() == marker)
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.marker())
    }
}

/// Every reserved marker string, separator included.
pub fn reserved_markers() -> [&'static str; 5] {
    ["[A]", "[C]", "[O]", "[S]", SSEP]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "POS")]
    Pos,
    #[serde(rename = "NEU")]
    Neu,
    #[serde(rename = "NEG")]
    Neg,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Pos, Polarity::Neu, Polarity::Neg];

    pub fn label(self) -> &'static str {
        match self {
            Polarity::Pos => "POS",
            Polarity::Neu => "NEU",
            Polarity::Neg => "NEG",
        }
    }

    /// Word used in generated targets.
    pub fn paraphrase(self) -> &'static str {
        match self {
            Polarity::Pos => "great",
            Polarity::Neu => "neutral",
            Polarity::Neg => "bad",
        }
    }

    /// Word used in the benchmark data files.
    pub fn file_word(self) -> &'static str {
        match self {
            Polarity::Pos => "positive",
            Polarity::Neu => "neutral",
            Polarity::Neg => "negative",
        }
    }

    pub fn from_label(label: &str) -> Result<Self> {
        match label.trim() {
            "POS" => Ok(Polarity::Pos),
            "NEU" => Ok(Polarity::Neu),
            "NEG" => Ok(Polarity::Neg),
            other => Err(Error::UnknownPolarity(other.to_string())),
        }
    }

    pub fn from_paraphrase(word: &str) -> Option<Self> {
        let word = normalize_text(word);
        Polarity::ALL.into_iter().find(|p| p.paraphrase() == word)
    }

    /// Accepts file words, canonical labels and paraphrases.
    pub fn from_any(word: &str) -> Result<Self> {
        let trimmed = word.trim();
        if let Ok(p) = Polarity::from_label(trimmed) {
            return Ok(p);
        }
        let lower = trimmed.to_lowercase();
        Polarity::ALL
            .into_iter()
            .find(|p| p.file_word() == lower || p.paraphrase() == lower)
            .ok_or_else(|| Error::UnknownPolarity(trimmed.to_string()))
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    Asqp,
    Acos,
    Aste,
    Tasd,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Asqp, Task::Acos, Task::Aste, Task::Tasd];

    pub fn name(self) -> &'static str {
        match self {
            Task::Asqp => "ASQP",
            Task::Acos => "ACOS",
            Task::Aste => "ASTE",
            Task::Tasd => "TASD",
        }
    }

    /// Element set in marker order.
    pub fn elements(self) -> &'static [ElementKind] {
        use ElementKind::*;
        match self {
            Task::Asqp | Task::Acos => &[Aspect, Category, Opinion, Polarity],
            Task::Aste => &[Aspect, Opinion, Polarity],
            Task::Tasd => &[Aspect, Category, Polarity],
        }
    }

    pub fn has(self, kind: ElementKind) -> bool {
        self.elements().contains(&kind)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ASQP" => Ok(Task::Asqp),
            "ACOS" => Ok(Task::Acos),
            "ASTE" => Ok(Task::Aste),
            "TASD" => Ok(Task::Tasd),
            _ => Err(Error::UnknownTask(s.to_string())),
        }
    }
}

/// A task bound to one dataset and its category vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task: Task,
    pub dataset: String,
    categories: Vec<String>,
}

impl TaskSpec {
    pub fn new(task: Task, dataset: impl Into<String>, categories: Vec<String>) -> Result<Self> {
        let needs = task.has(ElementKind::Category);
        if needs == categories.is_empty() {
            return Err(Error::InvalidTask(format!(
                "{task} {} a category vocabulary",
                if needs { "requires" } else { "does not take" }
            )));
        }
        Ok(TaskSpec {
            task,
            dataset: dataset.into(),
            categories,
        })
    }

    pub fn elements(&self) -> &'static [ElementKind] {
        self.task.elements()
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    /// `"TASK: DATASET: "`, the multi-task input prefix.
    pub fn prefix(&self) -> String {
        format!("{}: {}: ", self.task.name(), self.dataset)
    }

    /// Category label whose paraphrase equals `surface`, if any.
    pub fn category_for(&self, surface: &str) -> Option<&str> {
        let surface = normalize_text(surface);
        self.categories
            .iter()
            .find(|c| paraphrase_category(c) == surface)
            .map(String::as_str)
    }
}

/// Lowercase, trim and collapse internal whitespace.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn paraphrase_category(label: &str) -> String {
    normalize_text(&label.replace(['#', '_'], " "))
}

/// Maps a canonical label or free-form term to its generation-side surface form.
pub fn paraphrase_element(kind: ElementKind, raw: &str) -> Result<String> {
    Ok(match kind {
        ElementKind::Polarity => Polarity::from_label(raw)?.paraphrase().to_string(),
        ElementKind::Category => paraphrase_category(raw),
        ElementKind::Aspect | ElementKind::Opinion => {
            if raw.trim() == NULL_LABEL {
                NULL_PARAPHRASE.to_string()
            } else {
                raw.to_string()
            }
        }
    })
}

/// Inverse of [`paraphrase_element`]. Categories pass through here; use
/// [`canonicalize_in`] to map them back through a vocabulary.
pub fn canonicalize_element(kind: ElementKind, surface: &str) -> String {
    match kind {
        ElementKind::Polarity => Polarity::from_paraphrase(surface)
            .map(|p| p.label().to_string())
            .unwrap_or_else(|| surface.to_string()),
        ElementKind::Aspect | ElementKind::Opinion => {
            if normalize_text(surface) == NULL_PARAPHRASE {
                NULL_LABEL.to_string()
            } else {
                surface.to_string()
            }
        }
        ElementKind::Category => surface.to_string(),
    }
}

pub fn canonicalize_in(task: &TaskSpec, kind: ElementKind, surface: &str) -> String {
    match kind {
        ElementKind::Category => task
            .category_for(surface)
            .map(str::to_string)
            .unwrap_or_else(|| surface.to_string()),
        _ => canonicalize_element(kind, surface),
    }
}

/// One sentiment tuple in canonical label space.
///
/// Equality, hashing and ordering compare normalized element text, so
/// `"The  Sushi"` and `"the sushi"` are the same aspect.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SentimentTuple {
    pub aspect: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opinion: Option<String>,
    pub polarity: Polarity,
}

type TupleKey = (String, Option<String>, Option<String>, Polarity);

impl SentimentTuple {
    pub fn quad(aspect: &str, category: &str, opinion: &str, polarity: Polarity) -> Self {
        SentimentTuple {
            aspect: aspect.to_string(),
            category: Some(category.to_string()),
            opinion: Some(opinion.to_string()),
            polarity,
        }
    }

    /// Aspect, opinion, polarity.
    pub fn aste(aspect: &str, opinion: &str, polarity: Polarity) -> Self {
        SentimentTuple {
            aspect: aspect.to_string(),
            category: None,
            opinion: Some(opinion.to_string()),
            polarity,
        }
    }

    /// Aspect, category, polarity.
    pub fn tasd(aspect: &str, category: &str, polarity: Polarity) -> Self {
        SentimentTuple {
            aspect: aspect.to_string(),
            category: Some(category.to_string()),
            opinion: None,
            polarity,
        }
    }

    pub fn key(&self) -> TupleKey {
        (
            normalize_text(&self.aspect),
            self.category.as_deref().map(normalize_text),
            self.opinion.as_deref().map(normalize_text),
            self.polarity,
        )
    }

    /// Which optional elements are present, as (category, opinion).
    pub fn shape(&self) -> (bool, bool) {
        (self.category.is_some(), self.opinion.is_some())
    }

    pub fn conforms_to(&self, elements: &[ElementKind]) -> bool {
        self.shape()
            == (
                elements.contains(&ElementKind::Category),
                elements.contains(&ElementKind::Opinion),
            )
    }

    /// Canonical value of one element.
    pub fn get(&self, kind: ElementKind) -> Option<&str> {
        match kind {
            ElementKind::Aspect => Some(&self.aspect),
            ElementKind::Category => self.category.as_deref(),
            ElementKind::Opinion => self.opinion.as_deref(),
            ElementKind::Polarity => Some(self.polarity.label()),
        }
    }
}

impl PartialEq for SentimentTuple {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for SentimentTuple {}

impl Hash for SentimentTuple {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl PartialOrd for SentimentTuple {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SentimentTuple {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for SentimentTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = ElementKind::ALL
            .iter()
            .filter_map(|k| self.get(*k))
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// A permutation of a task's element markers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ElementOrder(Vec<ElementKind>);

impl ElementOrder {
    pub fn new(kinds: Vec<ElementKind>) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::InvalidOrder("empty order".into()));
        }
        let mut seen = BTreeSet::new();
        for k in &kinds {
            if !seen.insert(*k) {
                return Err(Error::InvalidOrder(format!("repeated marker {k}")));
            }
        }
        if !kinds.contains(&ElementKind::Aspect) || !kinds.contains(&ElementKind::Polarity) {
            return Err(Error::InvalidOrder(
                "an order must contain [A] and [S]".into(),
            ));
        }
        Ok(ElementOrder(kinds))
    }

    /// Builds an order and checks it covers exactly the task's elements.
    pub fn for_task(kinds: Vec<ElementKind>, task: Task) -> Result<Self> {
        let order = ElementOrder::new(kinds)?;
        order.check_task(task)?;
        Ok(order)
    }

    pub fn check_task(&self, task: Task) -> Result<()> {
        let mut mine = self.0.clone();
        mine.sort();
        if mine != task.elements() {
            return Err(Error::InvalidOrder(format!(
                "order {self} does not match the {task} element set"
            )));
        }
        Ok(())
    }

    pub fn kinds(&self) -> &[ElementKind] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenated markers with no separators, e.g. `[O][A][C][S]`.
    pub fn marker_string(&self) -> String {
        self.0.iter().map(|k| k.marker()).collect()
    }
}

impl fmt::Display for ElementOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.marker_string())
    }
}

impl FromStr for ElementOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut kinds = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let end = rest
                .find(']')
                .ok_or_else(|| Error::InvalidOrder(format!("unterminated marker in {s:?}")))?;
            let marker = rest[..=end].trim();
            kinds.push(
                ElementKind::from_marker(marker)
                    .ok_or_else(|| Error::InvalidOrder(format!("unknown marker {marker:?}")))?,
            );
            rest = rest[end + 1..].trim_start();
        }
        ElementOrder::new(kinds)
    }
}

impl TryFrom<String> for ElementOrder {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ElementOrder> for String {
    fn from(o: ElementOrder) -> String {
        o.marker_string()
    }
}

impl PartialOrd for ElementOrder {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic by marker string.
impl Ord for ElementOrder {
    fn cmp(&self, other: &Self) -> Ordering {
        self.marker_string().cmp(&other.marker_string())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    pub skipped: Vec<SkippedSegment>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedSegment {
    pub segment: String,
    pub reason: String,
}

impl ParseDiagnostics {
    pub fn skipped_count(&self) -> usize {
        self.skipped.len()
    }

    pub fn is_clean(&self) -> bool {
        self.skipped.is_empty()
    }
}

/// Renders tuples as an ordered target sequence.
pub fn serialize_target(tuples: &[SentimentTuple], order: &ElementOrder) -> Result<String> {
    let mut segments = Vec::with_capacity(tuples.len());
    for t in tuples {
        if !t.conforms_to(order.kinds()) {
            return Err(Error::ShapeMismatch(format!(
                "tuple {t} does not fit order {order}"
            )));
        }
        let mut parts = Vec::with_capacity(order.len() * 2);
        for kind in order.kinds() {
            // conforms_to guarantees presence
            let raw = t.get(*kind).unwrap_or_default();
            parts.push(kind.marker().to_string());
            parts.push(paraphrase_element(*kind, raw)?);
        }
        segments.push(parts.join(" "));
    }
    Ok(segments.join(&format!(" {SSEP} ")))
}

/// Sentence followed by the order prompt, with an optional leading task prefix.
pub fn build_input(sentence: &str, order: &ElementOrder, task_prefix: Option<&str>) -> String {
    format!(
        "{}{} {}",
        task_prefix.unwrap_or(""),
        sentence,
        order.marker_string()
    )
}

enum Piece<'a> {
    Marker(&'a str),
    Text(&'a str),
}

/// Splits a segment into bracketed marker-like tokens and the text between.
fn scan(segment: &str) -> Vec<Piece<'_>> {
    let mut pieces = Vec::new();
    let mut last = 0;
    let bytes = segment.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'[' {
            if let Some(len) = segment[i + 1..].find(']') {
                let inner = &segment[i + 1..i + 1 + len];
                if !inner.is_empty() && inner.chars().all(|c| c.is_ascii_uppercase()) {
                    if last < i {
                        pieces.push(Piece::Text(&segment[last..i]));
                    }
                    pieces.push(Piece::Marker(&segment[i..i + len + 2]));
                    i += len + 2;
                    last = i;
                    continue;
                }
            }
        }
        i += 1;
    }
    if last < segment.len() {
        pieces.push(Piece::Text(&segment[last..]));
    }
    pieces
}

fn parse_segment(segment: &str, task: &TaskSpec) -> std::result::Result<SentimentTuple, String> {
    let mut values: Vec<(ElementKind, String)> = Vec::new();
    for piece in scan(segment) {
        match piece {
            Piece::Marker(m) => {
                let kind =
                    ElementKind::from_marker(m).ok_or_else(|| format!("unknown marker {m}"))?;
                if !task.task.has(kind) {
                    return Err(format!("marker {m} is not part of {}", task.task));
                }
                if values.iter().any(|(k, _)| *k == kind) {
                    return Err(format!("duplicate marker {m}"));
                }
                values.push((kind, String::new()));
            }
            Piece::Text(text) => match values.last_mut() {
                Some((_, v)) => v.push_str(text),
                None if text.trim().is_empty() => {}
                None => return Err("text before the first marker".into()),
            },
        }
    }
    for kind in task.elements() {
        if !values.iter().any(|(k, _)| k == kind) {
            return Err(format!("missing marker {kind}"));
        }
    }
    let mut aspect = String::new();
    let mut category = None;
    let mut opinion = None;
    let mut polarity = None;
    for (kind, raw) in values {
        let surface = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        if surface.is_empty() {
            return Err(format!("empty value for {kind}"));
        }
        match kind {
            ElementKind::Aspect => aspect = canonicalize_element(kind, &surface),
            ElementKind::Opinion => opinion = Some(canonicalize_element(kind, &surface)),
            ElementKind::Category => category = Some(canonicalize_in(task, kind, &surface)),
            ElementKind::Polarity => {
                polarity = Some(
                    Polarity::from_paraphrase(&surface)
                        .ok_or_else(|| format!("unknown polarity word {surface:?}"))?,
                )
            }
        }
    }
    Ok(SentimentTuple {
        aspect,
        category,
        opinion,
        // presence checked above
        polarity: polarity.ok_or("missing polarity")?,
    })
}

/// Reads a generated target sequence back into canonical tuples.
///
/// Never fails: segments that are missing an element, repeat a marker, use
/// an unknown marker or have an empty value are skipped and listed in the
/// diagnostics.
pub fn parse_target(text: &str, task: &TaskSpec) -> (Vec<SentimentTuple>, ParseDiagnostics) {
    let mut tuples = Vec::new();
    let mut diagnostics = ParseDiagnostics::default();
    if text.trim().is_empty() {
        return (tuples, diagnostics);
    }
    for segment in text.split(SSEP) {
        match parse_segment(segment, task) {
            Ok(t) => tuples.push(t),
            Err(reason) => diagnostics.skipped.push(SkippedSegment {
                segment: segment.trim().to_string(),
                reason,
            }),
        }
    }
    (tuples, diagnostics)
}

/// Marker sequence of the first segment, in the order it appears.
pub fn observed_order(text: &str) -> Vec<ElementKind> {
    let first = text.split(SSEP).next().unwrap_or("");
    scan(first)
        .into_iter()
        .filter_map(|p| match p {
            Piece::Marker(m) => ElementKind::from_marker(m),
            Piece::Text(_) => None,
        })
        .collect()
}
