//! Synthetic benchmarks built on generated organizations.

mod ranking;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{DialogueRecord, Intent, MentionAnnotation, Target, Turn};
use crate::graph::Speaker;
use crate::org::{generate_org, OrgConfig, Organization};
use crate::strsim::levenshtein;

pub use ranking::{ranking_benchmark, RankingBenchmark, SynthRankingInstance};

/// How a user refers to an entity in the synthetic linking benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MentionStyle {
    Exact,
    Noised,
    Pronoun,
}

#[derive(Debug, Clone)]
pub struct LinkingBenchmark {
    pub org: Organization,
    pub train: Vec<DialogueRecord>,
    pub test: Vec<DialogueRecord>,
    /// Style of every user mention in `test`, in dialogue order.
    pub test_styles: Vec<MentionStyle>,
}

pub const TEST_USER_MENTIONS: usize = 200;
pub const TRAIN_USER_MENTIONS: usize = 100;

/// Applies one or two random character edits (substitution, deletion,
/// insertion) to letters of `name`.
pub fn noise_name<R: Rng + ?Sized>(rng: &mut R, name: &str) -> String {
    let target = rng.gen_range(1..=2);
    loop {
        let mut chars: Vec<char> = name.chars().collect();
        for _ in 0..target {
            let letters: Vec<usize> = (0..chars.len())
                .filter(|&i| chars[i].is_alphabetic())
                .collect();
            let Some(&i) = letters.choose(rng) else {
                return name.to_string();
            };
            let c = (b'a' + rng.gen_range(0..26)) as char;
            match rng.gen_range(0..3) {
                0 => chars[i] = c,
                1 if letters.len() > 3 => {
                    chars.remove(i);
                }
                _ => chars.insert(i + 1, c),
            }
        }
        let out: String = chars.into_iter().collect();
        let d = levenshtein(&out.to_lowercase(), &name.to_lowercase());
        if (1..=2).contains(&d) {
            return out;
        }
    }
}

struct Builder {
    turns: Vec<Turn>,
}

impl Builder {
    fn push(
        &mut self,
        speaker: Speaker,
        pieces: &[(&str, Option<Target>)],
        intent: &str,
        args: Vec<String>,
    ) {
        let mut text = String::new();
        let mut mentions = Vec::new();
        for (piece, target) in pieces {
            let start = text.chars().count();
            text.push_str(piece);
            if let Some(t) = target {
                mentions.push(MentionAnnotation {
                    start,
                    end: text.chars().count(),
                    surface: piece.to_string(),
                    targets: t.clone(),
                    constraints: None,
                });
            }
        }
        self.turns.push(Turn {
            i: self.turns.len() + 1,
            speaker,
            asr: text,
            gold: None,
            intent: Intent {
                name: intent.to_string(),
                args,
            },
            mentions,
        });
    }
}

fn clock(ts: &str) -> &str {
    ts.split('T')
        .nth(1)
        .map(|t| &t[..t.len().min(5)])
        .unwrap_or(ts)
}

/// Generates dialogues until exactly `budget` user mentions exist.
fn linking_dialogues(
    org: &Organization,
    rng: &mut ChaCha8Rng,
    prefix: &str,
    budget: usize,
) -> (Vec<DialogueRecord>, Vec<MentionStyle>) {
    let mut dialogues = Vec::new();
    let mut styles = Vec::new();
    while styles.len() < budget {
        let mut b = Builder { turns: Vec::new() };
        b.push(Speaker::User, &[("Hello there.", None)], "greet", vec![]);
        b.push(
            Speaker::Agent,
            &[("Hello! How can I help you?", None)],
            "greet",
            vec![],
        );
        let episodes = rng.gen_range(2..=4);
        for _ in 0..episodes {
            if styles.len() >= budget {
                break;
            }
            let is_person = rng.gen_bool(0.6);
            let (id, name, detail_id, detail) = if is_person {
                let p = org.persons.choose(rng).unwrap();
                let room = org.room(&p.office).unwrap();
                (
                    p.id.clone(),
                    p.name.clone(),
                    room.id.clone(),
                    room.name.clone(),
                )
            } else {
                let e = org.events.choose(rng).unwrap();
                let room = org.room(&e.location).unwrap();
                (
                    e.id.clone(),
                    e.name.clone(),
                    room.id.clone(),
                    room.name.clone(),
                )
            };
            let gold = Target::Entities(vec![id.clone()]);
            let (style, surface) = if rng.gen_bool(0.5) {
                (MentionStyle::Exact, name.clone())
            } else {
                (MentionStyle::Noised, noise_name(rng, &name))
            };
            styles.push(style);
            let (before, after) = if is_person {
                *[
                    ("Can you tell me where I can find ", "?"),
                    ("I am looking for ", "."),
                    ("Do you know ", "?"),
                ]
                .choose(rng)
                .unwrap()
            } else {
                *[
                    ("Where is ", " taking place?"),
                    ("When does ", " start?"),
                    ("Tell me about ", ", please."),
                ]
                .choose(rng)
                .unwrap()
            };
            b.push(
                Speaker::User,
                &[
                    (before, None),
                    (&surface, Some(gold.clone())),
                    (after, None),
                ],
                "request_info",
                vec![id.clone()],
            );
            let room_target = Some(Target::Entities(vec![detail_id]));
            if is_person {
                b.push(
                    Speaker::Agent,
                    &[
                        (&name, Some(gold.clone())),
                        (" has the office ", None),
                        (&detail, room_target),
                        (".", None),
                    ],
                    "inform",
                    vec![id.clone()],
                );
            } else {
                let start = org
                    .event(&id)
                    .map(|e| clock(&e.start).to_string())
                    .unwrap_or_default();
                b.push(
                    Speaker::Agent,
                    &[
                        (&name, Some(gold.clone())),
                        (&format!(" starts at {start} in "), None),
                        (&detail, room_target),
                        (".", None),
                    ],
                    "inform",
                    vec![id.clone()],
                );
            }
            if styles.len() < budget && rng.gen_bool(0.6) {
                styles.push(MentionStyle::Pronoun);
                let (before, pronoun, after) = if is_person {
                    *[
                        ("What is ", "his", " email address?"),
                        ("What is ", "her", " phone number?"),
                        ("Could you call ", "him", " for me?"),
                        ("Is ", "she", " in today?"),
                    ]
                    .choose(rng)
                    .unwrap()
                } else {
                    *[
                        ("Who is attending ", "the meeting", "?"),
                        ("Can I still join ", "the event", "?"),
                        ("How long does ", "it", " take?"),
                    ]
                    .choose(rng)
                    .unwrap()
                };
                b.push(
                    Speaker::User,
                    &[(before, None), (pronoun, Some(gold.clone())), (after, None)],
                    "request_info",
                    vec![id.clone()],
                );
                b.push(
                    Speaker::Agent,
                    &[("Let me check that for you.", None)],
                    "inform",
                    vec![],
                );
            }
        }
        b.push(
            Speaker::User,
            &[("Thank you, goodbye.", None)],
            "bye",
            vec![],
        );
        dialogues.push(DialogueRecord {
            id: format!("{prefix}-{:03}", dialogues.len()),
            org: format!("synthetic-{}", org.seed),
            task: String::new(),
            turns: b.turns,
        });
    }
    (dialogues, styles)
}

/// Synthetic linking benchmark: user mentions are exact names, names with one
/// or two character edits, or pronouns referring back to the entity the agent
/// just named. The test split has exactly [`TEST_USER_MENTIONS`] user
/// mentions, the training split [`TRAIN_USER_MENTIONS`].
pub fn linking_benchmark(seed: u64) -> LinkingBenchmark {
    let org = generate_org(seed, &OrgConfig::default()).expect("default config is valid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (test, test_styles) = linking_dialogues(&org, &mut rng, "synth-test", TEST_USER_MENTIONS);
    let (train, _) = linking_dialogues(&org, &mut rng, "synth-train", TRAIN_USER_MENTIONS);
    LinkingBenchmark {
        org,
        train,
        test,
        test_styles,
    }
}
