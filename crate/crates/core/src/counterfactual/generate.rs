use super::detect::{KeywordSpan, Outcome};
use super::{BiasAttribute, CounterfactualError, FlagResult, Role, SwapLexicon, LABEL_COUNT};
use crate::corpus::{BiasMeta, Entry};
use crate::text::{has_sentence_break, match_initial_case, words};

/// Words after which an ambiguous pronoun reads as an object.
const OBJECT_CONTEXT: &[&str] = &[
    "a", "about", "after", "against", "also", "am", "among", "an", "and", "are", "as", "at", "be", "because", "been",
    "before", "being", "between", "but", "by", "can", "could", "did", "do", "does", "during", "for", "from", "had",
    "has", "have", "he", "her", "here", "him", "i", "if", "in", "into", "is", "it", "its", "may", "me", "might",
    "must", "nor", "not", "of", "on", "onto", "or", "over", "shall", "she", "should", "so", "than", "that", "the",
    "them", "then", "there", "these", "they", "this", "those", "through", "to", "under", "upon", "us", "was", "we",
    "were", "when", "where", "whether", "which", "while", "who", "whom", "whose", "will", "with", "within", "without",
    "would", "yet", "you",
];

/// Words that leave the role undecided ("gave her more" / "her more recent").
const AMBIGUOUS_CONTEXT: &[&str] = &[
    "all", "alone", "again", "away", "back", "both", "down", "each", "either", "enough", "few", "first", "home",
    "last", "many", "more", "most", "much", "off", "only", "out", "too", "up",
];

/// Lookahead rule for role-split rows: object when the pronoun ends the
/// text or sentence, or is followed by a function word; undecided when
/// followed by a quantifier/adverb from the ambiguous list; possessive
/// otherwise.
pub fn infer_role(text: &str, span: &KeywordSpan) -> Option<Role> {
    let ws = words(text);
    let Some(next) = ws.get(span.last_word + 1) else {
        return Some(Role::Object);
    };
    if has_sentence_break(text, span.end, next.start) {
        return Some(Role::Object);
    }
    let next = next.lower();
    if AMBIGUOUS_CONTEXT.contains(&next.as_str()) {
        None
    } else if OBJECT_CONTEXT.contains(&next.as_str()) {
        Some(Role::Object)
    } else {
        Some(Role::Possessive)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub label: usize,
    pub entry: Entry,
    /// A role-split keyword could not be resolved; the variant is kept for
    /// reporting but excluded from augmentation and audit sets.
    pub ambiguous: bool,
}

/// An original entry and its rewritten forms for the other two labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterfactualFamily {
    pub original: Entry,
    pub attribute: BiasAttribute,
    pub source: usize,
    pub spans: Vec<KeywordSpan>,
    pub variants: Vec<Variant>,
}

impl CounterfactualFamily {
    pub fn is_ambiguous(&self) -> bool {
        self.variants.iter().any(|v| v.ambiguous)
    }

    /// The form carrying `label`: the original or one of its variants.
    pub fn form(&self, label: usize) -> &Entry {
        if label == self.source {
            &self.original
        } else {
            &self.variants.iter().find(|v| v.label == label).expect("one variant per other label").entry
        }
    }
}

pub fn variant_id(original: &str, attribute: BiasAttribute, label: usize) -> String {
    format!("{original}#cf:{attribute}:{}", attribute.label(label))
}

/// Surface form for one span under `target`, plus whether it was ambiguous.
fn rewrite_span(text: &str, span: &KeywordSpan, lexicon: &SwapLexicon, target: usize) -> (String, bool) {
    let rows: Vec<_> = span.rows.iter().map(|&r| &lexicon.rows[r]).collect();
    let first = rows[0].primary(target);
    let mut ambiguous = false;
    let chosen = if rows.iter().all(|r| r.primary(target) == first) {
        first
    } else if rows.iter().any(|r| r.role.is_some()) {
        match infer_role(text, span) {
            Some(role) => rows.iter().find(|r| r.role == Some(role)).map_or(first, |r| r.primary(target)),
            None => {
                ambiguous = true;
                first
            }
        }
    } else {
        first
    };
    (match_initial_case(chosen, &text[span.start..span.end]), ambiguous)
}

/// Rewrites `text` from the flagged label to `target`, touching only the
/// matched spans.
pub fn rewrite(text: &str, spans: &[KeywordSpan], lexicon: &SwapLexicon, target: usize) -> (String, bool) {
    let mut out = String::with_capacity(text.len() + 16);
    let mut cursor = 0;
    let mut ambiguous = false;
    for span in spans {
        out.push_str(&text[cursor..span.start]);
        let (surface, amb) = rewrite_span(text, span, lexicon, target);
        ambiguous |= amb;
        out.push_str(&surface);
        cursor = span.end;
    }
    out.push_str(&text[cursor..]);
    (out, ambiguous)
}

pub fn generate_variants(
    entry: &Entry,
    flag: &FlagResult,
    lexicon: &SwapLexicon,
) -> Result<CounterfactualFamily, CounterfactualError> {
    let Outcome::Flagged { label: source, spans } = &flag.outcome else {
        return Err(CounterfactualError::NotFlagged { id: entry.id.clone() });
    };
    if flag.entry_id != entry.id || flag.attribute != lexicon.attribute {
        return Err(CounterfactualError::NotFlagged { id: entry.id.clone() });
    }
    let attribute = lexicon.attribute;
    let mut original = entry.clone();
    original.bias = Some(BiasMeta {
        attribute: attribute.to_string(),
        label: attribute.label(*source).into(),
        origin: entry.id.clone(),
    });
    let variants = (0..LABEL_COUNT)
        .filter(|&n| n != *source)
        .map(|n| {
            let (text, ambiguous) = rewrite(&entry.text, spans, lexicon, n);
            let mut variant = entry.clone();
            variant.id = variant_id(&entry.id, attribute, n);
            variant.text = text;
            variant.bias = Some(BiasMeta {
                attribute: attribute.to_string(),
                label: attribute.label(n).into(),
                origin: entry.id.clone(),
            });
            Variant { label: n, entry: variant, ambiguous }
        })
        .collect();
    Ok(CounterfactualFamily { original, attribute, source: *source, spans: spans.clone(), variants })
}
