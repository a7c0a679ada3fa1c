//! Bundled desk-scale fixtures: a small organization and two annotated
//! receptionist dialogues (an organizer/office lookup, and an attendance
//! request with a misheard name and an unrecognized turn).

use crate::dataset::{parse_dialogue, DialogueRecord};
use crate::org::Organization;

pub const ORG_JSON: &str = include_str!("../fixtures/org_fixture.json");
pub const DIALOGUE_1_JSON: &str = include_str!("../fixtures/dialogue_receptionist_1.json");
pub const DIALOGUE_2_JSON: &str = include_str!("../fixtures/dialogue_receptionist_2.json");

pub fn org() -> Organization {
    serde_json::from_str(ORG_JSON).expect("bundled organization parses")
}

pub fn dialogue_1() -> DialogueRecord {
    parse_dialogue(DIALOGUE_1_JSON, "dialogue_receptionist_1.json", &org())
        .expect("bundled dialogue is valid")
}

pub fn dialogue_2() -> DialogueRecord {
    parse_dialogue(DIALOGUE_2_JSON, "dialogue_receptionist_2.json", &org())
        .expect("bundled dialogue is valid")
}

pub fn dialogues() -> Vec<DialogueRecord> {
    vec![dialogue_1(), dialogue_2()]
}
