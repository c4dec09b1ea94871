//! Speaker anonymization and the three dialogue-to-text formats.
//!
//! * S: the main speaker's utterances joined by spaces.
//! * S+C: S, then `<ctx>`, then every other utterance in order.
//! * F: every utterance as `mark: text`, one per line.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::msf::SubScene;
use crate::text::CONTEXT_SEPARATOR;
use crate::traits::TraitMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("main speaker of {0} has no utterances")]
    NoMainSpeakerUtterances(String),
    #[error("unknown dialogue format {0:?} (expected S, SC or F)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DialogueFormat {
    #[serde(rename = "S")]
    Single,
    #[serde(rename = "S+C")]
    SingleContext,
    #[serde(rename = "F")]
    Full,
}

impl DialogueFormat {
    pub const ALL: [DialogueFormat; 3] = [
        DialogueFormat::Single,
        DialogueFormat::SingleContext,
        DialogueFormat::Full,
    ];

    pub const fn label(self) -> &'static str {
        match self {
            DialogueFormat::Single => "S",
            DialogueFormat::SingleContext => "S+C",
            DialogueFormat::Full => "F",
        }
    }
}

impl fmt::Display for DialogueFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DialogueFormat {
    type Err = FormatError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S" => Ok(DialogueFormat::Single),
            "SC" | "S+C" => Ok(DialogueFormat::SingleContext),
            "F" => Ok(DialogueFormat::Full),
            _ => Err(FormatError::UnknownFormat(String::from(s))),
        }
    }
}

/// Original speaker names and the marks that replaced them; index k holds `speakerk`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SpeakerMapping {
    pub originals: Vec<String>,
}

impl SpeakerMapping {
    pub fn mark(index: usize) -> String {
        alloc::format!("speaker{index}")
    }

    pub fn mark_of(&self, name: &str) -> Option<String> {
        self.originals
            .iter()
            .position(|n| n == name)
            .map(Self::mark)
    }

    pub fn original_of(&self, mark: &str) -> Option<&str> {
        let index: usize = mark.strip_prefix("speaker")?.parse().ok()?;
        (Self::mark(index) == mark).then_some(())?;
        self.originals.get(index).map(String::as_str)
    }

    /// Inverse of the speaker renaming. Mentions inside text are left as marks.
    pub fn restore(&self, anonymized: &SubScene) -> SubScene {
        let mut out = anonymized.clone();
        let back = |m: &str| {
            self.original_of(m)
                .map(String::from)
                .unwrap_or_else(|| String::from(m))
        };
        out.main_speaker = back(&out.main_speaker);
        for u in &mut out.utterances {
            u.speaker = back(&u.speaker);
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.originals
            .iter()
            .enumerate()
            .all(|(i, n)| *n == Self::mark(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnonymizeOptions {
    /// Also replace mentions of speaker names inside utterance text.
    pub replace_mentions: bool,
}

impl Default for AnonymizeOptions {
    fn default() -> Self {
        AnonymizeOptions {
            replace_mentions: true,
        }
    }
}

pub fn anonymize(subscene: &SubScene) -> (SubScene, SpeakerMapping) {
    anonymize_with(subscene, AnonymizeOptions::default())
}

/// Renames the main speaker to `speaker0` and the others to `speaker1`,
/// `speaker2`, ... by order of first utterance.
pub fn anonymize_with(
    subscene: &SubScene,
    options: AnonymizeOptions,
) -> (SubScene, SpeakerMapping) {
    let mut originals = alloc::vec![subscene.main_speaker.clone()];
    for u in &subscene.utterances {
        if !originals.contains(&u.speaker) {
            originals.push(u.speaker.clone());
        }
    }
    let mapping = SpeakerMapping { originals };

    // longest names first so "Ross Geller" wins over "Ross"
    let mut by_length: Vec<(Vec<char>, String)> = mapping
        .originals
        .iter()
        .enumerate()
        .filter(|(_, n)| !n.is_empty())
        .map(|(i, n)| (n.chars().collect(), SpeakerMapping::mark(i)))
        .collect();
    by_length.sort_by_key(|(name, _)| core::cmp::Reverse(name.len()));

    let mut out = subscene.clone();
    out.main_speaker = SpeakerMapping::mark(0);
    for u in &mut out.utterances {
        u.speaker = mapping.mark_of(&u.speaker).expect("collected above");
        if options.replace_mentions {
            u.text = replace_mentions(&u.text, &by_length);
        }
    }
    (out, mapping)
}

fn chars_eq_ignore_case(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

fn replace_mentions(text: &str, names: &[(Vec<char>, String)]) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let at_boundary = i == 0 || !chars[i - 1].is_alphanumeric();
        let hit = at_boundary
            .then(|| {
                names.iter().find(|(name, _)| {
                    let end = i + name.len();
                    end <= chars.len()
                        && chars[i..end]
                            .iter()
                            .zip(name)
                            .all(|(&a, &b)| chars_eq_ignore_case(a, b))
                        && (end == chars.len() || !chars[end].is_alphanumeric())
                })
            })
            .flatten();
        match hit {
            Some((name, mark)) => {
                out.push_str(mark);
                i += name.len();
            }
            None => {
                out.push(chars[i]);
                i += 1;
            }
        }
    }
    out
}

/// A classifier input: flattened dialogue text with the sub-scene's labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormattedItem {
    pub subscene_id: String,
    pub format: DialogueFormat,
    pub text: String,
    pub labels: TraitMap<u8>,
}

fn main_and_context(subscene: &SubScene) -> Result<(Vec<&str>, Vec<&str>), FormatError> {
    let (main, context): (Vec<_>, Vec<_>) = subscene
        .utterances
        .iter()
        .partition(|u| u.speaker == subscene.main_speaker);
    if main.is_empty() {
        return Err(FormatError::NoMainSpeakerUtterances(subscene.id.clone()));
    }
    Ok((
        main.into_iter().map(|u| u.text.as_str()).collect(),
        context.into_iter().map(|u| u.text.as_str()).collect(),
    ))
}

pub fn to_single(subscene: &SubScene, labels: TraitMap<u8>) -> Result<FormattedItem, FormatError> {
    let (main, _) = main_and_context(subscene)?;
    Ok(FormattedItem {
        subscene_id: subscene.id.clone(),
        format: DialogueFormat::Single,
        text: main.join(" "),
        labels,
    })
}

pub fn to_single_plus_context(
    subscene: &SubScene,
    labels: TraitMap<u8>,
) -> Result<FormattedItem, FormatError> {
    let (main, context) = main_and_context(subscene)?;
    let mut text = main.join(" ");
    text.push(' ');
    text.push_str(CONTEXT_SEPARATOR);
    if !context.is_empty() {
        text.push(' ');
        text.push_str(&context.join(" "));
    }
    Ok(FormattedItem {
        subscene_id: subscene.id.clone(),
        format: DialogueFormat::SingleContext,
        text,
        labels,
    })
}

pub fn to_full(subscene: &SubScene, labels: TraitMap<u8>) -> FormattedItem {
    let text = subscene
        .utterances
        .iter()
        .map(|u| alloc::format!("{}: {}", u.speaker, u.text))
        .collect::<Vec<_>>()
        .join("\n");
    FormattedItem {
        subscene_id: subscene.id.clone(),
        format: DialogueFormat::Full,
        text,
        labels,
    }
}

pub fn render(
    subscene: &SubScene,
    format: DialogueFormat,
    labels: TraitMap<u8>,
) -> Result<FormattedItem, FormatError> {
    match format {
        DialogueFormat::Single => to_single(subscene, labels),
        DialogueFormat::SingleContext => to_single_plus_context(subscene, labels),
        DialogueFormat::Full => Ok(to_full(subscene, labels)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msf::Span;
    use crate::transcript::Utterance;

    fn sub(main: &str, turns: &[(&str, &str)]) -> SubScene {
        SubScene {
            id: "e:s:0-0:x".into(),
            episode_id: "e".into(),
            scene_id: "s".into(),
            main_speaker: main.into(),
            span: Span {
                start: 0,
                end: turns.len().saturating_sub(1),
            },
            peak_position: 0,
            utterances: turns
                .iter()
                .enumerate()
                .map(|(index, (s, t))| Utterance {
                    speaker: (*s).into(),
                    text: (*t).into(),
                    index,
                })
                .collect(),
        }
    }

    const NO_LABELS: TraitMap<u8> = TraitMap([0; 5]);

    #[test]
    fn anonymize_names_and_mentions() {
        let (a, map) = anonymize(&sub(
            "Ross",
            &[("Rachel", "Hi Ross!"), ("Ross", "hey rachel")],
        ));
        assert_eq!(map.originals, ["Ross", "Rachel"]);
        assert_eq!(a.main_speaker, "speaker0");
        assert_eq!(a.utterances[0].speaker, "speaker1");
        assert_eq!(a.utterances[0].text, "Hi speaker0!");
        assert_eq!(a.utterances[1].text, "hey speaker1");
    }

    #[test]
    fn mentions_are_whole_tokens() {
        let (a, _) = anonymize(&sub("Ross", &[("Ross", "Rossi and Ross's cat, ROSS")]));
        assert_eq!(a.utterances[0].text, "Rossi and speaker0's cat, speaker0");
        let (a, _) = anonymize_with(
            &sub("Ross", &[("Ross", "Ross")]),
            AnonymizeOptions {
                replace_mentions: false,
            },
        );
        assert_eq!(a.utterances[0].text, "Ross");
    }

    #[test]
    fn longer_names_first() {
        let (a, _) = anonymize(&sub(
            "Ross",
            &[("Ross", "hi"), ("Mr Geller", "Mr Geller says hi Ross")],
        ));
        assert_eq!(a.utterances[1].text, "speaker1 says hi speaker0");
    }

    #[test]
    fn single_speaker() {
        let (a, map) = anonymize(&sub("Joey", &[("Joey", "a"), ("Joey", "b")]));
        assert!(a.utterances.iter().all(|u| u.speaker == "speaker0"));
        assert_eq!(map.originals.len(), 1);
    }

    #[test]
    fn anonymize_twice_is_identity_mapping() {
        let (once, _) = anonymize(&sub("B", &[("A", "hi B"), ("B", "yo"), ("C", "A and C")]));
        let (twice, map) = anonymize(&once);
        assert_eq!(once, twice);
        assert!(map.is_identity());
    }

    #[test]
    fn three_formats() {
        let s = sub(
            "speaker0",
            &[("speaker0", "hi"), ("speaker1", "hey"), ("speaker0", "bye")],
        );
        assert_eq!(to_single(&s, NO_LABELS).unwrap().text, "hi bye");
        assert_eq!(
            to_single_plus_context(&s, NO_LABELS).unwrap().text,
            "hi bye <ctx> hey"
        );
        assert_eq!(
            to_full(&s, NO_LABELS).text,
            "speaker0: hi\nspeaker1: hey\nspeaker0: bye"
        );
    }

    #[test]
    fn degenerate_formats() {
        let s = sub("speaker0", &[("speaker0", "hi"), ("speaker0", "bye")]);
        assert_eq!(
            to_single_plus_context(&s, NO_LABELS).unwrap().text,
            "hi bye <ctx>"
        );
        assert_eq!(
            to_full(&sub("speaker0", &[("speaker0", "x")]), NO_LABELS).text,
            "speaker0: x"
        );

        let s = sub("speaker0", &[("speaker1", "hi")]);
        assert!(matches!(
            to_single(&s, NO_LABELS),
            Err(FormatError::NoMainSpeakerUtterances(_))
        ));
        assert!(to_single_plus_context(&s, NO_LABELS).is_err());
    }

    #[test]
    fn context_keeps_relative_order() {
        let s = sub(
            "speaker0",
            &[
                ("speaker1", "a"),
                ("speaker0", "x"),
                ("speaker2", "b"),
                ("speaker1", "c"),
            ],
        );
        assert_eq!(
            to_single_plus_context(&s, NO_LABELS).unwrap().text,
            "x <ctx> a b c"
        );
    }

    #[test]
    fn parse_format_names() {
        assert_eq!(
            "sc".parse::<DialogueFormat>(),
            Ok(DialogueFormat::SingleContext)
        );
        assert_eq!(
            "S+C".parse::<DialogueFormat>(),
            Ok(DialogueFormat::SingleContext)
        );
        assert!("Q".parse::<DialogueFormat>().is_err());
    }
}
