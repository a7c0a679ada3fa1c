use std::io::{Cursor, Write};
use std::sync::{Arc, Mutex};

use kgdm_core::ranking::{RankError, SidecarScorer, TrainConfig, TrainExample, TrainMode};
use kgdm_core::Scorer;

const TRANSCRIPT: &str = include_str!("../fixtures/scorer_transcript.jsonl");

#[derive(Clone)]
struct Sink(Arc<Mutex<Vec<u8>>>);

impl Write for Sink {
    fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(b);
        Ok(b.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn side(prefix: &str) -> String {
    TRANSCRIPT
        .lines()
        .filter_map(|l| l.strip_prefix(prefix))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[test]
fn client_matches_golden_transcript() {
    let sent = Arc::new(Mutex::new(Vec::new()));
    let scorer = SidecarScorer::from_streams(
        "golden",
        Box::new(Cursor::new(side("< "))),
        Box::new(Sink(sent.clone())),
    );
    scorer.handshake().unwrap();

    let candidates = vec![
        "The office is room 270.".to_string(),
        "Have a nice day!".to_string(),
    ];
    let scores = scorer
        .score("Visitor: Where is the office of Mark Suarez?", &candidates)
        .unwrap();
    assert_eq!(scores, vec![0.91, 0.12]);

    let pairwise = [TrainExample::Pairwise {
        context: "Visitor: Hello".into(),
        positive: "Hello! How can I help you?".into(),
        negative: "Have a nice day!".into(),
    }];
    let out = scorer.train(&TrainConfig::default(), &pairwise).unwrap();
    assert_eq!(
        (out.status.as_str(), out.final_loss, out.version),
        ("ok", 0.25, 1)
    );

    let pointwise = [
        TrainExample::Pointwise {
            context: "Visitor: Hello".into(),
            response: "Hello! How can I help you?".into(),
            label: 1.0,
        },
        TrainExample::Pointwise {
            context: "Visitor: Hello".into(),
            response: "Have a nice day!".into(),
            label: 0.0,
        },
    ];
    let config = TrainConfig {
        mode: TrainMode::Pointwise,
        epochs: 1,
        batch_size: 2,
    };
    assert_eq!(scorer.train(&config, &pointwise).unwrap().version, 2);

    let err = scorer
        .score("x", &["a".to_string(), "b".to_string()])
        .unwrap_err();
    assert!(
        matches!(err, RankError::Remote { batch: 5, ref message } if message == "model not loaded")
    );

    assert_eq!(
        String::from_utf8(sent.lock().unwrap().clone()).unwrap(),
        side("> ")
    );
}

#[test]
fn closed_stream_is_a_transport_error() {
    let scorer = SidecarScorer::from_streams(
        "eof",
        Box::new(Cursor::new(String::new())),
        Box::new(std::io::sink()),
    );
    assert!(matches!(
        scorer.handshake(),
        Err(RankError::Transport { batch: 1, .. })
    ));
}
