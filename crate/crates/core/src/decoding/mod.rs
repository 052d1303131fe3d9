//! Schema-constrained decoding.

mod constraints;
mod generate;
mod tokenizer;

pub use constraints::{
    allowed_next, step, steps_to_finish, value_spans, ConstraintTables, DecoderState, Marker,
    Phase, PhraseTrie, MAX_TERM_TOKENS,
};
pub use generate::{constrained_generate, generate_with_tables, Generation};
pub use tokenizer::{
    PieceVocab, TokenId, Tokenizer, EOS_PIECE, PAD_PIECE, UNK_PIECE, WORD_BOUNDARY,
};

use crate::schema::{paraphrase_element, ElementKind, Polarity, TaskSpec, NULL_PARAPHRASE};

/// A [`PieceVocab`] covering `sentences` and every closed-class phrase the
/// decoder can emit for `specs`.
pub fn vocab_for<'a>(
    sentences: impl IntoIterator<Item = &'a str>,
    specs: &[&TaskSpec],
) -> PieceVocab {
    let mut texts: Vec<String> = sentences.into_iter().map(str::to_string).collect();
    texts.extend(Polarity::ALL.iter().map(|p| p.paraphrase().to_string()));
    texts.push(NULL_PARAPHRASE.to_string());
    for spec in specs {
        for c in spec.categories() {
            // categories always paraphrase
            texts.extend(paraphrase_element(ElementKind::Category, c).ok());
        }
    }
    PieceVocab::from_corpus(texts.iter().map(String::as_str))
}
