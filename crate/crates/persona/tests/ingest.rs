use persona::ingest::{
    parse_essays, parse_transcript, parse_transcript_with, write_transcript, TranscriptOptions,
};
use persona::PersonaError;
use persona_core::{Scene, Trait};
use proptest::prelude::*;

fn doc(utterances: &str) -> String {
    format!(
        r#"{{"episodes":[{{"episode_id":"s01e01","scenes":[{{"scene_id":"c01","utterances":[{utterances}]}}]}}]}}"#
    )
}

#[test]
fn one_scene_two_utterances() {
    let scenes = parse_transcript(
        doc(r#"{"speaker":"Ross","text":"hi"},{"speaker":"Rachel","text":"hey"}"#).as_bytes(),
    )
    .unwrap();
    assert_eq!(scenes.len(), 1);
    let s = &scenes[0];
    assert_eq!(
        (s.episode_id.as_str(), s.scene_id.as_str()),
        ("s01e01", "c01")
    );
    let got: Vec<(&str, &str, usize)> = s
        .utterances
        .iter()
        .map(|u| (u.speaker.as_str(), u.text.as_str(), u.index))
        .collect();
    assert_eq!(got, [("Ross", "hi", 0), ("Rachel", "hey", 1)]);
}

#[test]
fn no_scenes_is_empty() {
    assert!(parse_transcript(br#"{"episodes":[]}"#).unwrap().is_empty());
    assert!(
        parse_transcript(br#"{"episodes":[{"episode_id":"e","scenes":[]}]}"#)
            .unwrap()
            .is_empty()
    );
}

#[test]
fn missing_speaker_names_the_path() {
    let err = parse_transcript(doc(r#"{"speaker":"Ross","text":"hi"},{"text":"hey"}"#).as_bytes())
        .unwrap_err();
    match err {
        PersonaError::Schema { path, .. } => {
            assert_eq!(path, "episodes[0].scenes[0].utterances[1].speaker")
        }
        other => panic!("expected a schema error, got {other}"),
    }
}

#[test]
fn structural_errors() {
    let cases: [(&str, &str); 4] = [
        (r#"[]"#, "$"),
        (r#"{}"#, "episodes"),
        (r#"{"episodes":[{"scenes":[]}]}"#, "episodes[0].episode_id"),
        (
            r#"{"episodes":[{"episode_id":"e","scenes":[{"scene_id":"a","utterances":[{"speaker":"A","text":3}]}]}]}"#,
            "episodes[0].scenes[0].utterances[0].text",
        ),
    ];
    for (input, want) in cases {
        match parse_transcript(input.as_bytes()) {
            Err(PersonaError::Schema { path, .. }) => assert_eq!(path, want, "{input}"),
            other => panic!("{input}: {other:?}"),
        }
    }
}

#[test]
fn duplicate_scene_id_rejected() {
    let input = r#"{"episodes":[{"episode_id":"e","scenes":[{"scene_id":"a","utterances":[]},{"scene_id":"a","utterances":[]}]}]}"#;
    assert!(matches!(
        parse_transcript(input.as_bytes()),
        Err(PersonaError::Schema { .. })
    ));
}

#[test]
fn invalid_utf8_is_an_encoding_error() {
    let mut bytes = doc(r#"{"speaker":"Ross","text":"hi"}"#).into_bytes();
    bytes.insert(10, 0xff);
    assert!(matches!(
        parse_transcript(&bytes),
        Err(PersonaError::Encoding { offset: 10 })
    ));
}

#[test]
fn normalization() {
    let scenes = parse_transcript(
        doc(r#"{"speaker":"  Ross ","text":"  hi  there \n"},{"speaker":["Monica","Rachel"],"text":"Both: hey"}"#).as_bytes(),
    )
    .unwrap();
    let u = &scenes[0].utterances;
    assert_eq!(
        (u[0].speaker.as_str(), u[0].text.as_str()),
        ("Ross", "  hi  there")
    );
    assert_eq!(u[1].speaker, "Monica");
}

#[test]
fn empty_speakers() {
    let input = doc(r#"{"speaker":"","text":"(door opens)"},{"speaker":"Joey","text":"hey"}"#);
    assert!(matches!(
        parse_transcript(input.as_bytes()),
        Err(PersonaError::Schema { .. })
    ));
    let kept = parse_transcript_with(
        input.as_bytes(),
        TranscriptOptions {
            drop_empty_speaker: true,
        },
    )
    .unwrap();
    assert_eq!(kept[0].utterances.len(), 1);
    assert_eq!(kept[0].utterances[0].index, 0);
}

#[test]
fn essays_two_rows() {
    let table = "id,text,AGR,CON,EXT,OPN,NEU\n1,\"Well, today\",y,y,y,y,y\n2,hmm,n,n,n,n,n\n";
    let docs = parse_essays(table.as_bytes()).unwrap();
    assert_eq!(docs.len(), 2);
    assert_eq!(docs[0].text, "Well, today");
    assert!(Trait::ALL
        .iter()
        .all(|&t| docs[0].labels[t] == 1 && docs[1].labels[t] == 0));
}

#[test]
fn essays_distribution_layout() {
    let table = "#AUTHID,TEXT,cEXT,cNEU,cAGR,cCON,cOPN\nA1,text,1,0,1,0,1\n";
    let docs = parse_essays(table.as_bytes()).unwrap();
    assert_eq!(docs[0].doc_id, "A1");
    assert_eq!(docs[0].labels.0, [1, 0, 1, 1, 0]);
}

#[test]
fn essays_bad_label_names_row_and_column() {
    let table = "id,text,AGR,CON,EXT,OPN,NEU\n1,a,y,y,y,y,y\n2,b,n,n,maybe,n,n\n";
    match parse_essays(table.as_bytes()).unwrap_err() {
        PersonaError::Label { row, column, value } => {
            assert_eq!((row, column.as_str(), value.as_str()), (2, "EXT", "maybe"));
        }
        other => panic!("{other}"),
    }
}

#[test]
fn essays_missing_column() {
    let err = parse_essays(b"id,text,AGR,CON,EXT,OPN\n").unwrap_err();
    assert!(
        matches!(err, PersonaError::Schema { ref path, .. } if path.ends_with("NEU")),
        "{err}"
    );
}

fn scenes() -> impl Strategy<Value = Vec<Scene>> {
    let speaker = "[A-Z][a-z]{0,6}( [A-Z][a-z]{0,4})?";
    let text = "[ -~\u{e9}\u{4e2d}\"\\\\\n\t]{0,20}[!-~]";
    let utterance = (speaker, text);
    let scene = prop::collection::vec(utterance, 0..6);
    prop::collection::vec((0usize..3, scene), 0..5).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (ep, turns))| Scene::from_turns(format!("e{ep}"), format!("s{i}"), turns))
            .collect()
    })
}

proptest! {
    #[test]
    fn canonical_form_round_trips(scenes in scenes()) {
        let written = write_transcript(&scenes);
        let parsed = parse_transcript(written.as_bytes()).unwrap();
        prop_assert_eq!(&parsed, &scenes);
        prop_assert_eq!(write_transcript(&parsed), written);
    }

    #[test]
    fn turn_sequence_is_preserved(scenes in scenes()) {
        let parsed = parse_transcript(write_transcript(&scenes).as_bytes()).unwrap();
        let flat = |s: &[Scene]| -> Vec<(String, String)> {
            s.iter().flat_map(|s| s.utterances.iter().map(|u| (u.speaker.clone(), u.text.clone()))).collect()
        };
        prop_assert_eq!(flat(&parsed), flat(&scenes));
    }
}
