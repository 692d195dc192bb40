//! Template paraphraser. Content words (verb, color, noun, zone name and the
//! zone literal) are carried through unchanged; only function words and the
//! sentence frame vary.

use rand::Rng;

use crate::seed;
use crate::{Error, Result};

pub const FUNCTION_WORDS: &[&str] = &[
    "the", "a", "that", "this", "in", "into", "inside", "within", "onto", "on", "please", "could", "you", "now", "go",
    "and", "it", "then", "gently", "robot", "to",
];

const DETERMINERS: &[&str] = &["the", "that", "this", "a"];
const PREPOSITIONS: &[&str] = &["in", "into", "inside", "within", "onto"];

#[derive(Clone, Copy)]
enum Slot {
    Content(usize),
    Det,
    Prep,
    Lit(&'static str),
}

use Slot::{Content as C, Det as D, Lit as L, Prep as P};

// Content order: verb, color, noun, zone name, zone literal.
const TEMPLATES: &[&[Slot]] = &[
    &[C(0), D, C(1), C(2), P, D, C(3), C(4)],
    &[L("please"), C(0), D, C(1), C(2), P, D, C(3), C(4)],
    &[C(0), D, C(1), C(2), P, C(3), C(4), L("now")],
    &[L("could"), L("you"), C(0), D, C(1), C(2), P, D, C(3), C(4)],
    &[L("go"), L("and"), C(0), D, C(1), C(2), P, D, C(3), C(4)],
    &[L("robot"), C(0), D, C(1), C(2), P, D, C(3), C(4)],
    &[D, C(1), C(2), L("then"), C(0), L("it"), P, D, C(3), C(4)],
    &[P, D, C(3), C(4), C(0), D, C(1), C(2)],
    &[L("gently"), C(0), D, C(1), C(2), P, D, C(3), C(4), L("please")],
];

const FALLBACK_PREFIXES: &[&[&str]] = &[&[], &["please"], &["could", "you"], &["now"], &["robot"]];

pub fn is_function_word(token: &str) -> bool {
    FUNCTION_WORDS.contains(&token)
}

/// Content words of a description in order of appearance.
pub fn content_words(tokens: &[String]) -> Vec<String> {
    tokens.iter().filter(|t| !is_function_word(t)).cloned().collect()
}

pub fn templates_len() -> usize {
    TEMPLATES.len()
}

/// Produce `k` paraphrases of `description`. Variant 0 renders template 0
/// with canonical function words; later variants draw template and
/// synonyms from the seeded stream.
pub fn paraphrase(description: &[String], k: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    if description.is_empty() {
        return Err(Error::Input("cannot paraphrase an empty description".into()));
    }
    if k == 0 {
        return Err(Error::Input("paraphrase count must be at least 1".into()));
    }
    let content = content_words(description);
    if content.is_empty() {
        return Err(Error::Input("description has no content words".into()));
    }
    let mut rng = seed::rng(seed, &[seed::tag::PARAPHRASE]);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let canonical = i == 0;
        let pick = |rng: &mut rand_chacha::ChaCha8Rng, choices: &[&'static str]| -> String {
            if canonical {
                choices[0].to_string()
            } else {
                choices[rng.random_range(0..choices.len())].to_string()
            }
        };
        let sentence: Vec<String> = if content.len() == 5 {
            let t = if canonical { 0 } else { rng.random_range(0..TEMPLATES.len()) };
            TEMPLATES[t]
                .iter()
                .map(|slot| match *slot {
                    Slot::Content(c) => content[c].clone(),
                    Slot::Det => pick(&mut rng, DETERMINERS),
                    Slot::Prep => pick(&mut rng, PREPOSITIONS),
                    Slot::Lit(w) => w.to_string(),
                })
                .collect()
        } else {
            let p = if canonical { 0 } else { rng.random_range(0..FALLBACK_PREFIXES.len()) };
            FALLBACK_PREFIXES[p].iter().map(|s| s.to_string()).chain(content.iter().cloned()).collect()
        };
        out.push(sentence);
    }
    Ok(out)
}
