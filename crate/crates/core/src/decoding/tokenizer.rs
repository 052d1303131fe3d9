use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::schema::reserved_markers;

pub type TokenId = u32;

/// Word-boundary marker used by piece vocabularies.
pub const WORD_BOUNDARY: char = '\u{2581}';

pub const EOS_PIECE: &str = "</s>";
pub const UNK_PIECE: &str = "<unk>";
pub const PAD_PIECE: &str = "<pad>";

pub trait Tokenizer: Send + Sync {
    fn encode(&self, text: &str) -> Vec<TokenId>;
    /// Special tokens are dropped from the output.
    fn decode(&self, ids: &[TokenId]) -> String;
    fn vocab_size(&self) -> usize;
    fn eos_id(&self) -> TokenId;
}

impl<T: Tokenizer + ?Sized> Tokenizer for &T {
    fn encode(&self, text: &str) -> Vec<TokenId> {
        (**self).encode(text)
    }

    fn decode(&self, ids: &[TokenId]) -> String {
        (**self).decode(ids)
    }

    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn eos_id(&self) -> TokenId {
        (**self).eos_id()
    }
}

/// Greedy longest-match tokenizer over a piece table.
///
/// Pieces starting with `▁` begin a whitespace-separated word. The artifact
/// format is plain text, one piece per line, the line index being the id.
/// `</s>` and `<unk>` must be present.
#[derive(Clone)]
pub struct PieceVocab {
    pieces: Vec<String>,
    index: HashMap<String, TokenId>,
    eos: TokenId,
    unk: TokenId,
    pad: Option<TokenId>,
    max_chars: usize,
}

impl fmt::Debug for PieceVocab {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PieceVocab")
            .field("size", &self.pieces.len())
            .field("eos", &self.eos)
            .finish()
    }
}

impl PieceVocab {
    pub fn from_pieces(pieces: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(pieces.len());
        for (i, p) in pieces.iter().enumerate() {
            if p.is_empty() || p.contains('\n') {
                return Err(Error::Vocabulary {
                    message: format!("invalid piece at id {i}"),
                });
            }
            if index.insert(p.clone(), i as TokenId).is_some() {
                return Err(Error::Vocabulary {
                    message: format!("duplicate piece {p:?}"),
                });
            }
        }
        let find = |p: &str| {
            index.get(p).copied().ok_or_else(|| Error::Vocabulary {
                message: format!("vocabulary lacks {p}"),
            })
        };
        let eos = find(EOS_PIECE)?;
        let unk = find(UNK_PIECE)?;
        let pad = index.get(PAD_PIECE).copied();
        let max_chars = pieces.iter().map(|p| p.chars().count()).max().unwrap_or(1);
        Ok(PieceVocab {
            pieces,
            index,
            eos,
            unk,
            pad,
            max_chars,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        PieceVocab::from_pieces(
            text.lines()
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PieceVocab::parse(&text)
    }

    pub fn to_artifact(&self) -> String {
        let mut out = self.pieces.join("\n");
        out.push('\n');
        out
    }

    /// Builds a vocabulary covering every character of `texts`.
    ///
    /// Each word contributes its leading alphanumeric run as a word piece,
    /// later runs as continuation pieces, and every punctuation character on
    /// its own. Marker strings are always included and split as `▁[`, the
    /// letters, and `]`, so markers span several tokens.
    pub fn from_corpus<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut set = BTreeSet::new();
        let mut add_text = |text: &str| {
            for word in text.split_whitespace() {
                let mut first = true;
                let mut run = String::new();
                let flush = |run: &mut String, first: &mut bool, set: &mut BTreeSet<String>| {
                    if run.is_empty() {
                        return;
                    }
                    if *first {
                        set.insert(format!("{WORD_BOUNDARY}{run}"));
                        *first = false;
                    } else {
                        set.insert(run.clone());
                    }
                    run.clear();
                };
                for c in word.chars() {
                    set.insert(c.to_string());
                    if c.is_alphanumeric() {
                        run.push(c);
                    } else {
                        flush(&mut run, &mut first, &mut set);
                        if first {
                            set.insert(format!("{WORD_BOUNDARY}{c}"));
                            first = false;
                        }
                    }
                }
                flush(&mut run, &mut first, &mut set);
            }
        };
        for m in reserved_markers() {
            add_text(m);
        }
        for t in texts {
            add_text(t);
        }
        let mut pieces = vec![
            PAD_PIECE.to_string(),
            EOS_PIECE.to_string(),
            UNK_PIECE.to_string(),
            WORD_BOUNDARY.to_string(),
        ];
        set.remove(&WORD_BOUNDARY.to_string());
        pieces.extend(set);
        // pieces are unique and the specials are present
        PieceVocab::from_pieces(pieces).expect("corpus vocabulary is well formed")
    }

    pub fn piece(&self, id: TokenId) -> Option<&str> {
        self.pieces.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, piece: &str) -> Option<TokenId> {
        self.index.get(piece).copied()
    }

    fn encode_word(&self, word: &str, out: &mut Vec<TokenId>) {
        let chars: Vec<char> = std::iter::once(WORD_BOUNDARY).chain(word.chars()).collect();
        let mut pos = 0;
        let mut buf = String::new();
        while pos < chars.len() {
            let mut matched = None;
            let longest = self.max_chars.min(chars.len() - pos);
            for len in (1..=longest).rev() {
                buf.clear();
                buf.extend(&chars[pos..pos + len]);
                if let Some(&id) = self.index.get(buf.as_str()) {
                    matched = Some((id, len));
                    break;
                }
            }
            match matched {
                Some((id, len)) => {
                    out.push(id);
                    pos += len;
                }
                None => {
                    // a boundary with no piece of its own is dropped
                    if pos != 0 {
                        out.push(self.unk);
                    }
                    pos += 1;
                }
            }
        }
    }
}

impl Tokenizer for PieceVocab {
    fn encode(&self, text: &str) -> Vec<TokenId> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            self.encode_word(word, &mut out);
        }
        out
    }

    fn decode(&self, ids: &[TokenId]) -> String {
        let mut s = String::new();
        for &id in ids {
            if id == self.eos || Some(id) == self.pad {
                continue;
            }
            match self.pieces.get(id as usize) {
                Some(p) => s.push_str(p),
                None => s.push_str(UNK_PIECE),
            }
        }
        s.replace(WORD_BOUNDARY, " ").trim_start().to_string()
    }

    fn vocab_size(&self) -> usize {
        self.pieces.len()
    }

    fn eos_id(&self) -> TokenId {
        self.eos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> PieceVocab {
        PieceVocab::from_corpus([
            "I love the sushi badly!",
            "great bad neutral it food quality",
        ])
    }

    #[test]
    fn round_trips_corpus_text() {
        let v = vocab();
        for s in [
            "I love the sushi badly!",
            "[O] love [A] sushi [C] food quality [S] great",
        ] {
            assert_eq!(v.decode(&v.encode(s)), s);
        }
    }

    #[test]
    fn markers_span_several_tokens() {
        let v = vocab();
        let a = v.encode("[A]");
        assert_eq!(a.len(), 3);
        assert_eq!(v.piece(a[0]), Some("\u{2581}["));
        assert_eq!(v.encode("[SSEP]").len(), 3);
        assert_eq!(v.encode("[SSEP]")[0], a[0]);
    }

    #[test]
    fn unknown_characters_map_to_unk() {
        let v = vocab();
        let ids = v.encode("sushi\u{00e9}");
        assert_eq!(*ids.last().unwrap(), v.id(UNK_PIECE).unwrap());
    }

    #[test]
    fn artifact_round_trip() {
        let v = vocab();
        let again = PieceVocab::parse(&v.to_artifact()).unwrap();
        assert_eq!(again.vocab_size(), v.vocab_size());
        assert_eq!(again.encode("love the sushi"), v.encode("love the sushi"));
    }

    #[test]
    fn artifact_requires_specials() {
        assert!(PieceVocab::parse("a\nb\n").is_err());
        assert!(PieceVocab::parse("</s>\n<unk>\na\na\n").is_err());
    }

    #[test]
    fn decode_skips_eos() {
        let v = vocab();
        let mut ids = v.encode("love");
        ids.push(v.eos_id());
        assert_eq!(v.decode(&ids), "love");
    }
}
