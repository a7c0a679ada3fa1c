//! Tolerant translation from externally released dialogue/organization JSON
//! into the canonical schema.
//!
//! All knowledge about foreign field names lives in the alias tables at the
//! top of this file. Entity references may be given as ids or as surface
//! names; names are resolved against the organization.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use super::{
    io_err, DatasetError, DialogueRecord, Intent, MentionAnnotation, SplitManifest, Target, Turn,
};
use crate::graph::Speaker;
use crate::org::{Event, Group, Organization, Person, Room, RoomKind};

const DIALOGUE_ID: &[&str] = &["id", "dialogue_id", "dialog_id", "name"];
const DIALOGUE_ORG: &[&str] = &[
    "org",
    "organization",
    "org_file",
    "organization_file",
    "graph",
];
const DIALOGUE_TASK: &[&str] = &["task", "task_text", "goal", "instruction"];
const DIALOGUE_TURNS: &[&str] = &["turns", "log", "dialogue", "utterances"];

const TURN_INDEX: &[&str] = &["i", "turn", "turn_id", "index"];
const TURN_SPEAKER: &[&str] = &["speaker", "role", "author", "from"];
const TURN_ASR: &[&str] = &["asr", "asr_text", "text", "transcript", "utterance"];
const TURN_GOLD: &[&str] = &["gold", "gold_text", "gold_transcript", "transcription"];
const TURN_INTENT: &[&str] = &["intent", "action", "dialogue_act", "logical_form", "act"];
const TURN_MENTIONS: &[&str] = &["mentions", "entities", "entity_mentions", "annotations"];

const MENTION_START: &[&str] = &["start", "begin", "start_char", "span_start"];
const MENTION_END: &[&str] = &["end", "end_char", "span_end"];
const MENTION_SPAN: &[&str] = &["span", "offsets"];
const MENTION_SURFACE: &[&str] = &["surface", "text", "mention", "string"];
const MENTION_TARGET: &[&str] = &["targets", "target", "links", "link", "entity", "refers_to"];
const MENTION_CONSTRAINTS: &[&str] = &["constraints", "constraint"];

const ORG_PERSONS: &[&str] = &["persons", "people", "employees"];
const ORG_EVENTS: &[&str] = &["events", "meetings", "calendar"];
const ORG_ROOMS: &[&str] = &["rooms", "locations", "places"];
const ORG_GROUPS: &[&str] = &["groups", "teams", "departments"];

const USER_SPEAKERS: &[&str] = &["user", "visitor", "human", "participant", "customer"];
const AGENT_SPEAKERS: &[&str] = &["agent", "robot", "wizard", "system", "receptionist"];
const SPURIOUS_TAGS: &[&str] = &["spurious", "none", "null", "unk"];
const NEW_TAGS: &[&str] = &["new", "new_entity", "new_event", "speaker_new"];

fn field<'a>(obj: &'a Map<String, Value>, aliases: &[&str]) -> Option<&'a Value> {
    aliases
        .iter()
        .find_map(|k| obj.get(*k))
        .filter(|v| !v.is_null())
}

fn text_field(obj: &Map<String, Value>, aliases: &[&str]) -> Option<String> {
    field(obj, aliases).and_then(|v| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    })
}

fn usize_field(obj: &Map<String, Value>, aliases: &[&str]) -> Option<usize> {
    field(obj, aliases).and_then(|v| match v {
        Value::Number(n) => n.as_u64().map(|n| n as usize),
        Value::String(s) => s.parse().ok(),
        _ => None,
    })
}

fn strings(v: &Value) -> Vec<String> {
    match v {
        Value::String(s) => vec![s.clone()],
        Value::Array(xs) => xs.iter().flat_map(strings).collect(),
        Value::Object(o) => text_field(o, &["id", "name"]).into_iter().collect(),
        Value::Number(n) => vec![n.to_string()],
        _ => vec![],
    }
}

fn unrecognized(path: &str, reason: impl Into<String>) -> DatasetError {
    DatasetError::Unrecognized {
        path: path.to_string(),
        reason: reason.into(),
    }
}

pub fn looks_like_org(v: &Value) -> bool {
    v.as_object()
        .is_some_and(|o| field(o, ORG_PERSONS).is_some())
}

pub fn looks_like_dialogue(v: &Value) -> bool {
    v.as_object()
        .is_some_and(|o| field(o, DIALOGUE_TURNS).is_some_and(Value::is_array))
}

/// Maps an organization document onto [`Organization`]. Rooms and groups
/// that are only referenced by name are created on the fly.
pub fn adapt_org(v: &Value, origin: &str) -> Result<Organization, DatasetError> {
    let obj = v
        .as_object()
        .ok_or_else(|| unrecognized(origin, "organization is not an object"))?;
    let mut org = Organization {
        seed: 0,
        persons: vec![],
        groups: vec![],
        rooms: vec![],
        events: vec![],
    };
    let mut room_ix: HashMap<String, String> = HashMap::new();
    let mut group_ix: HashMap<String, String> = HashMap::new();

    let list = |aliases: &[&str]| -> Vec<Map<String, Value>> {
        match field(obj, aliases) {
            Some(Value::Array(xs)) => xs.iter().filter_map(|x| x.as_object().cloned()).collect(),
            Some(Value::Object(m)) => m
                .iter()
                .filter_map(|(k, x)| {
                    let mut o = x.as_object().cloned()?;
                    o.entry("id").or_insert_with(|| Value::String(k.clone()));
                    Some(o)
                })
                .collect(),
            _ => vec![],
        }
    };

    for g in list(ORG_GROUPS) {
        let name = text_field(&g, &["name", "id"]).unwrap_or_default();
        let id = text_field(&g, &["id"]).unwrap_or_else(|| format!("group:{}", org.groups.len()));
        group_ix.insert(id.clone(), id.clone());
        group_ix.insert(name.clone(), id.clone());
        org.groups.push(Group { id, name });
    }
    for r in list(ORG_ROOMS) {
        let name = text_field(&r, &["name", "id"]).unwrap_or_default();
        let id = text_field(&r, &["id"]).unwrap_or_else(|| format!("room:{}", org.rooms.len()));
        let kind = match text_field(&r, &["kind", "type"]).as_deref() {
            Some("office") => RoomKind::Office,
            _ => RoomKind::Conference,
        };
        room_ix.insert(id.clone(), id.clone());
        room_ix.insert(name.clone(), id.clone());
        org.rooms.push(Room { id, name, kind });
    }

    fn intern(
        ix: &mut HashMap<String, String>,
        rooms: &mut Vec<Room>,
        key: &str,
        kind: RoomKind,
    ) -> String {
        if let Some(id) = ix.get(key) {
            return id.clone();
        }
        let id = format!("room:{}", rooms.len());
        let name = if kind == RoomKind::Office && key.chars().all(|c| c.is_ascii_digit()) {
            format!("room {key}")
        } else {
            key.to_string()
        };
        rooms.push(Room {
            id: id.clone(),
            name,
            kind,
        });
        ix.insert(key.to_string(), id.clone());
        id
    }

    let mut person_ix: HashMap<String, String> = HashMap::new();
    for (k, p) in list(ORG_PERSONS).into_iter().enumerate() {
        let name = text_field(&p, &["name", "full_name"])
            .ok_or_else(|| unrecognized(origin, format!("person #{k} has no name")))?;
        let id = text_field(&p, &["id"]).unwrap_or_else(|| format!("person:{k}"));
        let group_key =
            text_field(&p, &["group", "team", "department"]).unwrap_or_else(|| "unassigned".into());
        let group = match group_ix.get(&group_key) {
            Some(g) => g.clone(),
            None => {
                let gid = format!("group:{}", org.groups.len());
                org.groups.push(Group {
                    id: gid.clone(),
                    name: group_key.clone(),
                });
                group_ix.insert(group_key, gid.clone());
                gid
            }
        };
        let office_key = text_field(&p, &["office", "office_number", "room"])
            .unwrap_or_else(|| format!("office of {name}"));
        let office = intern(&mut room_ix, &mut org.rooms, &office_key, RoomKind::Office);
        person_ix.insert(id.clone(), id.clone());
        person_ix.insert(name.clone(), id.clone());
        org.persons.push(Person {
            id,
            name,
            group,
            office,
            phone: text_field(&p, &["phone", "phone_number", "telephone"]).unwrap_or_default(),
            email: text_field(&p, &["email", "mail", "email_address"]).unwrap_or_default(),
        });
    }
    for (k, e) in list(ORG_EVENTS).into_iter().enumerate() {
        let name = text_field(&e, &["name", "title"])
            .ok_or_else(|| unrecognized(origin, format!("event #{k} has no name")))?;
        let id = text_field(&e, &["id"]).unwrap_or_else(|| format!("event:{k}"));
        let resolve_person = |key: &str| {
            person_ix
                .get(key)
                .cloned()
                .unwrap_or_else(|| key.to_string())
        };
        let organizer =
            resolve_person(&text_field(&e, &["organizer", "host", "owner"]).unwrap_or_default());
        let loc_key = text_field(&e, &["location", "room", "place"])
            .unwrap_or_else(|| "unknown location".into());
        let location = intern(&mut room_ix, &mut org.rooms, &loc_key, RoomKind::Conference);
        let attendees = field(&e, &["attendees", "participants", "invitees"])
            .map(strings)
            .unwrap_or_default()
            .iter()
            .map(|a| resolve_person(a))
            .collect();
        org.events.push(Event {
            id,
            name,
            organizer,
            location,
            start: text_field(&e, &["start", "start_time", "begin"]).unwrap_or_default(),
            end: text_field(&e, &["end", "end_time", "finish"]).unwrap_or_default(),
            attendees,
        });
    }
    Ok(org)
}

fn speaker(raw: Option<String>, position: usize) -> Speaker {
    let s = raw.unwrap_or_default().to_lowercase();
    if AGENT_SPEAKERS.contains(&s.as_str()) {
        Speaker::Agent
    } else if USER_SPEAKERS.contains(&s.as_str()) || position.is_multiple_of(2) {
        Speaker::User
    } else {
        Speaker::Agent
    }
}

/// Accepts `{"name", "args"}` objects as well as `pred(a, b)` strings.
fn intent(v: Option<&Value>) -> Intent {
    match v {
        Some(Value::Object(o)) => Intent {
            name: text_field(o, &["name", "predicate", "intent"]).unwrap_or_default(),
            args: field(o, &["args", "arguments"])
                .map(strings)
                .unwrap_or_default(),
        },
        Some(Value::String(s)) => match s.find('(') {
            Some(p) if s.ends_with(')') => Intent {
                name: s[..p].trim().to_string(),
                args: s[p + 1..s.len() - 1]
                    .split(',')
                    .map(|a| a.trim().to_string())
                    .filter(|a| !a.is_empty())
                    .collect(),
            },
            _ => Intent {
                name: s.trim().to_string(),
                args: vec![],
            },
        },
        _ => Intent::default(),
    }
}

fn target(v: Option<&Value>, org: &Organization) -> Target {
    let raw = v.map(strings).unwrap_or_default();
    if raw.is_empty() {
        return Target::Spurious;
    }
    if raw.len() == 1 {
        let tag = raw[0].to_lowercase();
        if SPURIOUS_TAGS.contains(&tag.as_str()) {
            return Target::Spurious;
        }
        if NEW_TAGS.contains(&tag.as_str()) {
            return Target::New;
        }
    }
    let mut ids = Vec::new();
    for r in raw {
        if org.lookup(&r).is_some() {
            ids.push(r);
            continue;
        }
        // Surface names may be ambiguous: keep every entity carrying the name.
        let by_name: Vec<String> = org
            .persons
            .iter()
            .map(|p| (&p.id, &p.name))
            .chain(org.events.iter().map(|e| (&e.id, &e.name)))
            .chain(org.rooms.iter().map(|x| (&x.id, &x.name)))
            .chain(org.groups.iter().map(|x| (&x.id, &x.name)))
            .filter(|(_, n)| n.eq_ignore_ascii_case(&r))
            .map(|(id, _)| id.clone())
            .collect();
        if by_name.is_empty() {
            ids.push(r);
        } else {
            ids.extend(by_name);
        }
    }
    ids.dedup();
    Target::Entities(ids)
}

fn char_find(text: &str, needle: &str) -> Option<usize> {
    text.find(needle).map(|b| text[..b].chars().count())
}

pub fn adapt_dialogue(
    v: &Value,
    origin: &str,
    org_id: &str,
    org: &Organization,
) -> Result<DialogueRecord, DatasetError> {
    let obj = v
        .as_object()
        .ok_or_else(|| unrecognized(origin, "dialogue is not an object"))?;
    let turns_raw = field(obj, DIALOGUE_TURNS)
        .and_then(Value::as_array)
        .ok_or_else(|| unrecognized(origin, "no turn list"))?;
    let mut turns = Vec::with_capacity(turns_raw.len());
    for (k, t) in turns_raw.iter().enumerate() {
        let t = t
            .as_object()
            .ok_or_else(|| unrecognized(origin, format!("turn #{k} is not an object")))?;
        let asr = text_field(t, TURN_ASR).unwrap_or_default();
        let mut mentions = Vec::new();
        if let Some(Value::Array(ms)) = field(t, TURN_MENTIONS) {
            for m in ms.iter().filter_map(Value::as_object) {
                let span = field(m, MENTION_SPAN)
                    .and_then(Value::as_array)
                    .and_then(|s| {
                        Some((s.first()?.as_u64()? as usize, s.get(1)?.as_u64()? as usize))
                    });
                let surface = text_field(m, MENTION_SURFACE);
                let (start, end) = match (
                    usize_field(m, MENTION_START),
                    usize_field(m, MENTION_END),
                    span,
                ) {
                    (Some(s), Some(e), _) => (s, e),
                    (_, _, Some(se)) => se,
                    _ => {
                        let s = surface.as_deref().unwrap_or_default();
                        let at = char_find(&asr, s).unwrap_or(0);
                        (at, at + s.chars().count())
                    }
                };
                let surface = surface.unwrap_or_else(|| {
                    asr.chars()
                        .skip(start)
                        .take(end.saturating_sub(start))
                        .collect()
                });
                let constraints = field(m, MENTION_CONSTRAINTS)
                    .and_then(Value::as_object)
                    .map(|c| {
                        c.iter()
                            .filter_map(|(k, v)| {
                                strings(v).into_iter().next().map(|v| (k.clone(), v))
                            })
                            .collect::<BTreeMap<_, _>>()
                    });
                mentions.push(MentionAnnotation {
                    start,
                    end,
                    surface,
                    targets: target(field(m, MENTION_TARGET), org),
                    constraints,
                });
            }
        }
        turns.push(Turn {
            i: usize_field(t, TURN_INDEX).unwrap_or(k + 1),
            speaker: speaker(text_field(t, TURN_SPEAKER), k),
            asr,
            gold: text_field(t, TURN_GOLD),
            intent: intent(field(t, TURN_INTENT)),
            mentions,
        });
    }
    // Foreign indices may start at 0; canonical ones start at 1.
    if turns.first().is_some_and(|t| t.i == 0) {
        for t in &mut turns {
            t.i += 1;
        }
    }
    let stem = Path::new(origin)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut rec = DialogueRecord {
        id: text_field(obj, DIALOGUE_ID).unwrap_or(stem),
        org: org_id.to_string(),
        task: text_field(obj, DIALOGUE_TASK).unwrap_or_default(),
        turns,
    };
    rec.resolve(org)?;
    Ok(rec)
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), DatasetError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, out)?;
        } else if p.extension().is_some_and(|x| x == "json") {
            out.push(p);
        }
    }
    Ok(())
}

fn split_of(path: &Path) -> Option<&'static str> {
    path.ancestors()
        .find_map(|a| match a.file_name()?.to_str()? {
            "train" => Some("train"),
            "dev" | "val" | "validation" => Some("dev"),
            "test" => Some("test"),
            _ => None,
        })
}

#[derive(Debug, Clone, Default)]
pub struct IngestSummary {
    pub orgs: usize,
    pub dialogues: usize,
    pub split: Option<SplitManifest>,
}

/// Reads every JSON document below `root`, translates it, and writes the
/// canonical dataset to `out`.
pub fn ingest(root: &Path, out: &Path) -> Result<IngestSummary, DatasetError> {
    let mut files = Vec::new();
    walk(root, &mut files)?;
    let mut docs: Vec<(PathBuf, Value)> = Vec::new();
    for p in files {
        let text = fs::read_to_string(&p).map_err(io_err(&p))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| DatasetError::Parse {
            path: p.display().to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        docs.push((p, v));
    }

    let mut orgs: BTreeMap<String, Organization> = BTreeMap::new();
    let mut org_dirs: Vec<(PathBuf, String)> = Vec::new();
    for (p, v) in docs.iter().filter(|(_, v)| looks_like_org(v)) {
        let rel = p.strip_prefix(root).unwrap_or(p).with_extension("");
        let id = super::sanitize(&rel.to_string_lossy());
        orgs.insert(id.clone(), adapt_org(v, &p.display().to_string())?);
        org_dirs.push((p.parent().unwrap_or(root).to_path_buf(), id));
    }

    let mut dialogues = Vec::new();
    let mut manifest = SplitManifest::default();
    let mut any_split_dirs = false;
    for (p, v) in docs.iter().filter(|(_, v)| looks_like_dialogue(v)) {
        let origin = p.display().to_string();
        let obj = v.as_object().unwrap();
        let named = text_field(obj, DIALOGUE_ORG).map(|s| {
            Path::new(&s)
                .file_stem()
                .map(|x| x.to_string_lossy().into_owned())
                .unwrap_or(s)
        });
        let org_id = match named {
            Some(id) if orgs.contains_key(&id) => id,
            Some(id) => return Err(DatasetError::MissingOrg(id)),
            None => {
                let dir = p.parent().unwrap_or(root);
                let local: Vec<&String> = org_dirs
                    .iter()
                    .filter(|(d, _)| d == dir)
                    .map(|(_, id)| id)
                    .collect();
                match (local.as_slice(), orgs.len()) {
                    ([one], _) => (*one).clone(),
                    (_, 1) => orgs.keys().next().unwrap().clone(),
                    _ => {
                        return Err(unrecognized(
                            &origin,
                            "cannot tell which organization the dialogue uses",
                        ))
                    }
                }
            }
        };
        let rec = adapt_dialogue(v, &origin, &org_id, &orgs[&org_id])?;
        match split_of(p.strip_prefix(root).unwrap_or(p)) {
            Some("train") => manifest.train.push(rec.id.clone()),
            Some("dev") => manifest.dev.push(rec.id.clone()),
            Some(_) => manifest.test.push(rec.id.clone()),
            None => {}
        }
        any_split_dirs |= split_of(p.strip_prefix(root).unwrap_or(p)).is_some();
        dialogues.push(rec);
    }

    let explicit = root.join("split.json");
    let split = if explicit.exists() {
        let text = fs::read_to_string(&explicit).map_err(io_err(&explicit))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| DatasetError::Parse {
            path: explicit.display().to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let o = v
            .as_object()
            .ok_or_else(|| unrecognized(&explicit.display().to_string(), "not an object"))?;
        let m = SplitManifest {
            train: field(o, &["train"]).map(strings).unwrap_or_default(),
            dev: field(o, &["dev", "val", "validation"])
                .map(strings)
                .unwrap_or_default(),
            test: field(o, &["test"]).map(strings).unwrap_or_default(),
        };
        m.check_disjoint()?;
        Some(m)
    } else if any_split_dirs {
        manifest.check_disjoint()?;
        Some(manifest)
    } else {
        None
    };

    super::write_dataset(out, &orgs, &dialogues, split.as_ref())?;
    Ok(IngestSummary {
        orgs: orgs.len(),
        dialogues: dialogues.len(),
        split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn foreign_org() -> Value {
        json!({
            "people": [
                {"name": "Mark Suarez", "group": "Data Science", "office": "270", "phone": "1", "email": "m@x"},
                {"name": "Wendy Parker", "group": "Mathematics", "office": "118", "phone": "2", "email": "w@x"}
            ],
            "meetings": [
                {"title": "users workshop", "organizer": "Mark Suarez", "room": "Alpha Conference Room",
                 "start_time": "2022-05-16T09:00:00", "end_time": "2022-05-16T10:00:00",
                 "participants": ["Mark Suarez", "Wendy Parker"]}
            ]
        })
    }

    #[test]
    fn org_aliases() {
        let org = adapt_org(&foreign_org(), "o.json").unwrap();
        assert_eq!(org.persons.len(), 2);
        assert_eq!(org.groups.len(), 2);
        assert!(org.rooms.iter().any(|r| r.name == "room 270"));
        assert_eq!(org.events[0].organizer, org.persons[0].id);
        org.validate().unwrap();
    }

    #[test]
    fn dialogue_aliases() {
        let org = adapt_org(&foreign_org(), "o.json").unwrap();
        let d = json!({
            "dialogue_id": "d7",
            "goal": "find the organizer",
            "log": [
                {"role": "visitor", "text": "who runs the users workshop", "act": "request_organizer(users workshop)",
                 "entities": [{"mention": "users workshop", "target": "users workshop"}]},
                {"role": "robot", "text": "Mark Suarez does, ask Stephanie Jules", "entities": [
                    {"span": [0, 11], "links": ["Mark Suarez"]},
                    {"mention": "Stephanie Jules", "target": "SPURIOUS"}
                ]}
            ]
        });
        let rec = adapt_dialogue(&d, "d7.json", "org", &org).unwrap();
        assert_eq!(rec.id, "d7");
        assert_eq!(rec.turns[0].speaker, Speaker::User);
        assert_eq!(rec.turns[1].speaker, Speaker::Agent);
        assert_eq!(rec.turns[0].intent.name, "request_organizer");
        assert_eq!(rec.turns[0].mentions[0].start, 13);
        assert_eq!(
            rec.turns[0].mentions[0].targets,
            Target::Entities(vec![org.events[0].id.clone()])
        );
        assert_eq!(rec.turns[1].mentions[0].surface, "Mark Suarez");
        assert_eq!(rec.turns[1].mentions[1].targets, Target::Spurious);
    }

    #[test]
    fn ingest_directory_with_split_dirs() {
        let tmp = tempfile::tempdir().unwrap();
        let src = tmp.path().join("raw");
        for (split, name) in [("train", "a"), ("test", "b")] {
            let dir = src.join(split).join(name);
            fs::create_dir_all(&dir).unwrap();
            fs::write(dir.join("org.json"), foreign_org().to_string()).unwrap();
            let d = json!({"id": name, "turns": [{"speaker": "user", "text": "hello Mark Suarez",
                "mentions": [{"surface": "Mark Suarez", "target": "Mark Suarez"}]}]});
            fs::write(dir.join("dialogue.json"), d.to_string()).unwrap();
        }
        let out = tmp.path().join("canon");
        let summary = ingest(&src, &out).unwrap();
        assert_eq!((summary.orgs, summary.dialogues), (2, 2));
        let ds = super::super::load_split(&out).unwrap();
        assert_eq!(ds.split.train, vec!["a".to_string()]);
        assert_eq!(ds.split.test, vec!["b".to_string()]);
    }
}
