//! Fictive organizations, their calendars, and the user tasks built on them.
//!
//! Everything here is a pure function of `(seed, config)`: the same inputs
//! always give byte-identical organizations, tasks, and graph exports.

pub mod wordlists;

use std::collections::{BTreeMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeKind, GraphError, KnowledgeGraph, NodeId, NodeKind};

#[derive(Debug, Error)]
pub enum OrgError {
    #[error("word list `{0}` is empty")]
    EmptyList(&'static str),
    #[error("invalid {what} range: min {min} > max {max}")]
    InvalidRange {
        what: &'static str,
        min: usize,
        max: usize,
    },
    #[error("cannot draw {wanted} unique person names from the word lists")]
    NameSpaceExhausted { wanted: usize },
    #[error("template `{template}` needs a {kind} but the organization has none")]
    MissingKind {
        template: &'static str,
        kind: &'static str,
    },
    #[error("unknown task template `{0}`")]
    UnknownTemplate(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordLists {
    pub given_names: Vec<String>,
    pub family_names: Vec<String>,
    pub jargon: Vec<String>,
    pub meeting_types: Vec<String>,
    pub conference_rooms: Vec<String>,
    pub groups: Vec<String>,
}

impl Default for WordLists {
    fn default() -> Self {
        let own = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        WordLists {
            given_names: own(wordlists::GIVEN_NAMES),
            family_names: own(wordlists::FAMILY_NAMES),
            jargon: own(wordlists::JARGON),
            meeting_types: own(wordlists::MEETING_TYPES),
            conference_rooms: own(wordlists::CONFERENCE_ROOMS),
            groups: own(wordlists::GROUPS),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrgConfig {
    pub persons_min: usize,
    pub persons_max: usize,
    pub events_min: usize,
    pub events_max: usize,
    pub groups_min: usize,
    pub groups_max: usize,
    /// Calendar day all events fall on, `YYYY-MM-DD`.
    pub date: String,
    pub words: WordLists,
}

impl Default for OrgConfig {
    fn default() -> Self {
        OrgConfig {
            persons_min: 40,
            persons_max: 60,
            events_min: 30,
            events_max: 50,
            groups_min: 4,
            groups_max: 8,
            date: "2022-05-16".to_string(),
            words: WordLists::default(),
        }
    }
}

impl OrgConfig {
    fn check(&self) -> Result<(), OrgError> {
        let w = &self.words;
        for (name, list) in [
            ("given_names", &w.given_names),
            ("family_names", &w.family_names),
            ("jargon", &w.jargon),
            ("meeting_types", &w.meeting_types),
            ("conference_rooms", &w.conference_rooms),
            ("groups", &w.groups),
        ] {
            if list.is_empty() {
                return Err(OrgError::EmptyList(name));
            }
        }
        for (what, min, max) in [
            ("persons", self.persons_min, self.persons_max),
            ("events", self.events_min, self.events_max),
            ("groups", self.groups_min, self.groups_max),
        ] {
            if min > max {
                return Err(OrgError::InvalidRange { what, min, max });
            }
        }
        // At least one person so every event has an organizer.
        if self.persons_min == 0 || self.groups_min == 0 {
            return Err(OrgError::InvalidRange {
                what: "persons/groups",
                min: 1,
                max: 0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Person {
    pub id: String,
    pub name: String,
    pub group: String,
    pub office: String,
    pub phone: String,
    pub email: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomKind {
    Conference,
    Office,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub id: String,
    pub name: String,
    pub kind: RoomKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    pub name: String,
    pub organizer: String,
    pub location: String,
    pub start: String,
    pub end: String,
    pub attendees: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Organization {
    pub seed: u64,
    pub persons: Vec<Person>,
    pub groups: Vec<Group>,
    pub rooms: Vec<Room>,
    pub events: Vec<Event>,
}

impl Organization {
    pub fn entity_count(&self) -> usize {
        self.persons.len() + self.groups.len() + self.rooms.len() + self.events.len()
    }

    pub fn person(&self, id: &str) -> Option<&Person> {
        self.persons.iter().find(|p| p.id == id)
    }

    pub fn event(&self, id: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn room(&self, id: &str) -> Option<&Room> {
        self.rooms.iter().find(|r| r.id == id)
    }

    pub fn group(&self, id: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.id == id)
    }

    /// Kind and surface name of any entity id.
    pub fn lookup(&self, id: &str) -> Option<(NodeKind, &str)> {
        if let Some(p) = self.person(id) {
            return Some((NodeKind::Person, &p.name));
        }
        if let Some(e) = self.event(id) {
            return Some((NodeKind::Event, &e.name));
        }
        if let Some(r) = self.room(id) {
            return Some((NodeKind::Room, &r.name));
        }
        self.group(id).map(|g| (NodeKind::Group, g.name.as_str()))
    }

    /// Attribute view of an entity, used to evaluate annotation constraints.
    pub fn attributes(&self, id: &str) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        if let Some(p) = self.person(id) {
            out.insert("name".into(), p.name.clone());
            out.insert("email".into(), p.email.clone());
            out.insert("phone".into(), p.phone.clone());
            out.insert("group".into(), p.group.clone());
            out.insert("office".into(), p.office.clone());
        } else if let Some(e) = self.event(id) {
            out.insert("name".into(), e.name.clone());
            out.insert("organizer".into(), e.organizer.clone());
            out.insert("location".into(), e.location.clone());
            out.insert("start".into(), e.start.clone());
            out.insert("end".into(), e.end.clone());
        } else if let Some(r) = self.room(id) {
            out.insert("name".into(), r.name.clone());
        } else if let Some(g) = self.group(id) {
            out.insert("name".into(), g.name.clone());
        }
        out
    }

    /// Checks referential closure and the generator's structural invariants.
    pub fn validate(&self) -> Result<(), String> {
        let persons: HashSet<&str> = self.persons.iter().map(|p| p.id.as_str()).collect();
        let groups: HashSet<&str> = self.groups.iter().map(|g| g.id.as_str()).collect();
        let rooms: HashSet<&str> = self.rooms.iter().map(|r| r.id.as_str()).collect();
        for p in &self.persons {
            if p.email.is_empty() || p.phone.is_empty() {
                return Err(format!("person {} lacks contact details", p.id));
            }
            if !groups.contains(p.group.as_str()) || !rooms.contains(p.office.as_str()) {
                return Err(format!("person {} has a dangling group or office", p.id));
            }
        }
        for e in &self.events {
            if e.start >= e.end {
                return Err(format!("event {} does not end after it starts", e.id));
            }
            if !persons.contains(e.organizer.as_str()) || !rooms.contains(e.location.as_str()) {
                return Err(format!(
                    "event {} has a dangling organizer or location",
                    e.id
                ));
            }
            if e.attendees.iter().any(|a| !persons.contains(a.as_str())) {
                return Err(format!("event {} has an unknown attendee", e.id));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("organization serializes")
    }

    pub fn from_json(text: &str) -> Result<Organization, OrgError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One jargon term followed by one meeting type.
pub fn event_name<R: Rng + ?Sized, S: AsRef<str>>(
    rng: &mut R,
    jargon: &[S],
    meeting_types: &[S],
) -> String {
    let j = jargon
        .choose(rng)
        .expect("jargon list is non-empty")
        .as_ref();
    let t = meeting_types
        .choose(rng)
        .expect("meeting type list is non-empty")
        .as_ref();
    format!("{j} {t}")
}

fn clock(date: &str, minutes: u32) -> String {
    format!("{date}T{:02}:{:02}:00", minutes / 60, minutes % 60)
}

pub fn generate_org(seed: u64, config: &OrgConfig) -> Result<Organization, OrgError> {
    config.check()?;
    let words = &config.words;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_groups = rng
        .gen_range(config.groups_min..=config.groups_max)
        .min(words.groups.len());
    let groups: Vec<Group> = index::sample(&mut rng, words.groups.len(), n_groups)
        .into_iter()
        .enumerate()
        .map(|(i, w)| Group {
            id: format!("group:{i}"),
            name: words.groups[w].clone(),
        })
        .collect();

    let mut rooms: Vec<Room> = words
        .conference_rooms
        .iter()
        .enumerate()
        .map(|(i, name)| Room {
            id: format!("room:{i}"),
            name: name.clone(),
            kind: RoomKind::Conference,
        })
        .collect();

    let n_persons = rng.gen_range(config.persons_min..=config.persons_max);
    let capacity = words.given_names.len() * words.family_names.len();
    if n_persons > capacity || n_persons > 300 {
        return Err(OrgError::NameSpaceExhausted { wanted: n_persons });
    }
    let offices = index::sample(&mut rng, 300, n_persons).into_vec();
    let mut names = HashSet::new();
    let mut emails = HashSet::new();
    let mut persons = Vec::with_capacity(n_persons);
    for (i, office_offset) in offices.into_iter().enumerate() {
        let name = loop {
            let given = words.given_names.choose(&mut rng).unwrap();
            let family = words.family_names.choose(&mut rng).unwrap();
            let name = format!("{given} {family}");
            if names.insert(name.clone()) {
                break name;
            }
        };
        let base = name.to_lowercase().replace(' ', ".");
        let mut email = format!("{base}@example.org");
        let mut k = 2;
        while !emails.insert(email.clone()) {
            email = format!("{base}{k}@example.org");
            k += 1;
        }
        let office_id = format!("room:{}", rooms.len());
        rooms.push(Room {
            id: office_id.clone(),
            name: format!("room {}", 100 + office_offset),
            kind: RoomKind::Office,
        });
        persons.push(Person {
            id: format!("person:{i}"),
            name,
            group: groups.choose(&mut rng).unwrap().id.clone(),
            office: office_id,
            phone: format!("+1 555 {:04}", rng.gen_range(0..10_000)),
            email,
        });
    }

    let conference: Vec<&Room> = rooms
        .iter()
        .filter(|r| r.kind == RoomKind::Conference)
        .collect();
    let n_events = rng.gen_range(config.events_min..=config.events_max);
    let mut events = Vec::with_capacity(n_events);
    for i in 0..n_events {
        let name = event_name(&mut rng, &words.jargon, &words.meeting_types);
        let organizer = persons.choose(&mut rng).unwrap();
        let slot = rng.gen_range(0..=conference.len());
        let location = if slot == conference.len() {
            organizer.office.clone()
        } else {
            conference[slot].id.clone()
        };
        let duration = *[30u32, 60, 90].choose(&mut rng).unwrap();
        let slots = (18 * 60 - 8 * 60 - duration) / 15;
        let start = 8 * 60 + 15 * rng.gen_range(0..=slots);
        let k = rng.gen_range(2..=8usize).min(persons.len());
        let others: Vec<&Person> = persons.iter().filter(|p| p.id != organizer.id).collect();
        let mut attendees = vec![organizer.id.clone()];
        attendees.extend(
            index::sample(&mut rng, others.len(), (k - 1).min(others.len()))
                .into_iter()
                .map(|j| others[j].id.clone()),
        );
        events.push(Event {
            id: format!("event:{i}"),
            name,
            organizer: organizer.id.clone(),
            location,
            start: clock(&config.date, start),
            end: clock(&config.date, start + duration),
            attendees,
        });
    }

    Ok(Organization {
        seed,
        persons,
        groups,
        rooms,
        events,
    })
}

/// Materializes the organization as background knowledge: one node per
/// entity, with membership, office, organizer, attendance and location edges.
pub fn org_to_graph(org: &Organization) -> Result<KnowledgeGraph, OrgError> {
    let mut g = KnowledgeGraph::new();
    let attrs = |pairs: &[(&str, &str)]| -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    };
    for grp in &org.groups {
        g.add_node_with_id(
            NodeId::new(&grp.id),
            NodeKind::Group,
            &grp.name,
            BTreeMap::new(),
        )?;
    }
    for r in &org.rooms {
        let kind = match r.kind {
            RoomKind::Conference => "conference",
            RoomKind::Office => "office",
        };
        g.add_node_with_id(
            NodeId::new(&r.id),
            NodeKind::Room,
            &r.name,
            attrs(&[("room_kind", kind)]),
        )?;
    }
    for p in &org.persons {
        g.add_node_with_id(
            NodeId::new(&p.id),
            NodeKind::Person,
            &p.name,
            attrs(&[("email", &p.email), ("phone", &p.phone)]),
        )?;
    }
    for e in &org.events {
        g.add_node_with_id(
            NodeId::new(&e.id),
            NodeKind::Event,
            &e.name,
            attrs(&[("start", &e.start), ("end", &e.end)]),
        )?;
    }
    for p in &org.persons {
        let pid = NodeId::new(&p.id);
        g.add_edge(&pid, &NodeId::new(&p.group), EdgeKind::MemberOf)?;
        g.add_edge(&pid, &NodeId::new(&p.office), EdgeKind::HasOffice)?;
    }
    for e in &org.events {
        let eid = NodeId::new(&e.id);
        g.add_edge(&NodeId::new(&e.organizer), &eid, EdgeKind::Organizes)?;
        g.add_edge(&eid, &NodeId::new(&e.location), EdgeKind::LocatedIn)?;
        for a in &e.attendees {
            g.add_edge(&NodeId::new(a), &eid, EdgeKind::Attends)?;
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    Schedule,
    Move,
    Cancel,
    FindAttribute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum BindingValue {
    Person(String),
    Event(String),
    Room(String),
    Group(String),
    Time(String),
    NewEvent(String),
    Duration(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub slot: String,
    pub value: BindingValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub template_id: String,
    pub topic: Topic,
    pub text: String,
    pub bindings: Vec<Binding>,
}

struct TaskTemplate {
    id: &'static str,
    topic: Topic,
    text: &'static str,
}

const TASK_TEMPLATES: &[TaskTemplate] = &[
    TaskTemplate {
        id: "schedule_meeting",
        topic: Topic::Schedule,
        text: "You are {persona}, and you want to arrange a meeting called {new_event}. Make a {duration} long \
               meeting in an available conference room, and invite {invitee} and at least one member of the \
               {group} group.",
    },
    TaskTemplate {
        id: "move_meeting",
        topic: Topic::Move,
        text: "You are {persona}. The {event} has to be moved so that it starts at {time}. Ask the receptionist \
               to reschedule it.",
    },
    TaskTemplate {
        id: "cancel_meeting",
        topic: Topic::Cancel,
        text: "You are {persona}, and you organize the {event}. Cancel the meeting and make sure the attendees \
               are informed.",
    },
    TaskTemplate {
        id: "find_office",
        topic: Topic::FindAttribute,
        text: "You are {persona}. Find out which office {person} works in.",
    },
    TaskTemplate {
        id: "find_email",
        topic: Topic::FindAttribute,
        text: "You are {persona}. Find out the email address of {person}.",
    },
    TaskTemplate {
        id: "find_event_location",
        topic: Topic::FindAttribute,
        text: "You are {persona}. Find out where the {event} takes place.",
    },
];

pub fn task_template_ids() -> impl Iterator<Item = &'static str> {
    TASK_TEMPLATES.iter().map(|t| t.id)
}

/// Instantiates a randomly chosen task template against `org`.
pub fn generate_task(org: &Organization, seed: u64) -> Result<TaskInstance, OrgError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = TASK_TEMPLATES.choose(&mut rng).unwrap();
    fill_task(org, t, &mut rng)
}

pub fn generate_task_from(
    org: &Organization,
    template_id: &str,
    seed: u64,
) -> Result<TaskInstance, OrgError> {
    let t = TASK_TEMPLATES
        .iter()
        .find(|t| t.id == template_id)
        .ok_or_else(|| OrgError::UnknownTemplate(template_id.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fill_task(org, t, &mut rng)
}

fn fill_task(
    org: &Organization,
    t: &TaskTemplate,
    rng: &mut ChaCha8Rng,
) -> Result<TaskInstance, OrgError> {
    let needs = |kind: &'static str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(OrgError::MissingKind {
                template: t.id,
                kind,
            })
        }
    };
    needs("person", !org.persons.is_empty())?;
    let mut bindings = Vec::new();
    let mut surface: Vec<(&str, String)> = Vec::new();
    let mut bind = |slot: &'static str,
                    value: BindingValue,
                    text: String,
                    surface: &mut Vec<(&str, String)>| {
        bindings.push(Binding {
            slot: slot.to_string(),
            value,
        });
        surface.push((slot, text));
    };

    match t.id {
        "schedule_meeting" => {
            needs("group", !org.groups.is_empty())?;
            needs("second person", org.persons.len() >= 2)?;
            let picks = index::sample(rng, org.persons.len(), 2);
            let persona = &org.persons[picks.index(0)];
            let invitee = &org.persons[picks.index(1)];
            let words = WordLists::default();
            let new_event = event_name(rng, &words.jargon, &words.meeting_types);
            let duration = ["half hour", "one hour", "90 minute"]
                .choose(rng)
                .unwrap()
                .to_string();
            let group = org.groups.choose(rng).unwrap();
            bind(
                "persona",
                BindingValue::Person(persona.id.clone()),
                persona.name.clone(),
                &mut surface,
            );
            bind(
                "new_event",
                BindingValue::NewEvent(new_event.clone()),
                new_event,
                &mut surface,
            );
            bind(
                "duration",
                BindingValue::Duration(duration.clone()),
                duration,
                &mut surface,
            );
            bind(
                "invitee",
                BindingValue::Person(invitee.id.clone()),
                invitee.name.clone(),
                &mut surface,
            );
            bind(
                "group",
                BindingValue::Group(group.id.clone()),
                group.name.clone(),
                &mut surface,
            );
        }
        "move_meeting" | "cancel_meeting" | "find_event_location" => {
            needs("event", !org.events.is_empty())?;
            let event = org.events.choose(rng).unwrap();
            let persona = if t.id == "cancel_meeting" {
                org.person(&event.organizer).unwrap_or(&org.persons[0])
            } else {
                org.persons.choose(rng).unwrap()
            };
            bind(
                "persona",
                BindingValue::Person(persona.id.clone()),
                persona.name.clone(),
                &mut surface,
            );
            bind(
                "event",
                BindingValue::Event(event.id.clone()),
                event.name.clone(),
                &mut surface,
            );
            if t.id == "move_meeting" {
                let minutes = 8 * 60 + 15 * rng.gen_range(0..36u32);
                let time = format!("{:02}:{:02}", minutes / 60, minutes % 60);
                bind("time", BindingValue::Time(time.clone()), time, &mut surface);
            }
        }
        "find_office" | "find_email" => {
            needs("second person", org.persons.len() >= 2)?;
            let picks = index::sample(rng, org.persons.len(), 2);
            let persona = &org.persons[picks.index(0)];
            let person = &org.persons[picks.index(1)];
            bind(
                "persona",
                BindingValue::Person(persona.id.clone()),
                persona.name.clone(),
                &mut surface,
            );
            bind(
                "person",
                BindingValue::Person(person.id.clone()),
                person.name.clone(),
                &mut surface,
            );
        }
        other => return Err(OrgError::UnknownTemplate(other.to_string())),
    }

    let mut text = t.text.to_string();
    for (slot, value) in &surface {
        text = text.replace(&format!("{{{slot}}}"), value);
    }
    Ok(TaskInstance {
        template_id: t.id.to_string(),
        topic: t.topic,
        text,
        bindings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_counts_within_ranges() {
        let org = generate_org(1, &OrgConfig::default()).unwrap();
        assert!((40..=60).contains(&org.persons.len()));
        assert!((30..=50).contains(&org.events.len()));
        org.validate().unwrap();
    }

    #[test]
    fn deterministic() {
        let c = OrgConfig::default();
        assert_eq!(
            generate_org(42, &c).unwrap().to_json(),
            generate_org(42, &c).unwrap().to_json()
        );
        assert_ne!(
            generate_org(42, &c).unwrap().to_json(),
            generate_org(43, &c).unwrap().to_json()
        );
    }

    #[test]
    fn empty_lists_rejected() {
        let mut c = OrgConfig::default();
        c.words.jargon.clear();
        assert!(matches!(
            generate_org(0, &c),
            Err(OrgError::EmptyList("jargon"))
        ));
        let c = OrgConfig {
            persons_min: 10,
            persons_max: 5,
            ..OrgConfig::default()
        };
        assert!(matches!(
            generate_org(0, &c),
            Err(OrgError::InvalidRange { .. })
        ));
    }

    #[test]
    fn event_name_combines() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            event_name(&mut rng, &["web-readiness"], &["status update"]),
            "web-readiness status update"
        );
    }

    #[test]
    fn event_invariants() {
        let org = generate_org(7, &OrgConfig::default()).unwrap();
        for e in &org.events {
            assert!(e.start < e.end);
            assert!(e.attendees.contains(&e.organizer));
            assert!((2..=8).contains(&e.attendees.len()));
            let room = org.room(&e.location).unwrap();
            let organizer = org.person(&e.organizer).unwrap();
            assert!(room.kind == RoomKind::Conference || room.id == organizer.office);
        }
        let offices: HashSet<_> = org.persons.iter().map(|p| p.office.clone()).collect();
        assert_eq!(offices.len(), org.persons.len());
        for r in org.rooms.iter().filter(|r| r.kind == RoomKind::Office) {
            let n: u32 = r.name.trim_start_matches("room ").parse().unwrap();
            assert!((100..=399).contains(&n));
        }
    }

    #[test]
    fn graph_materialization() {
        let org = generate_org(3, &OrgConfig::default()).unwrap();
        let g = org_to_graph(&org).unwrap();
        assert_eq!(g.node_count(), org.entity_count());
        assert!(g.validate().is_ok());
        for e in &org.events {
            let id = NodeId::new(&e.id);
            let inc = g.in_edges(&id).unwrap();
            assert_eq!(inc.iter().filter(|x| x.1 == EdgeKind::Organizes).count(), 1);
            let mut attending: Vec<String> = inc
                .iter()
                .filter(|x| x.1 == EdgeKind::Attends)
                .map(|x| x.0 .0.clone())
                .collect();
            let mut expected = e.attendees.clone();
            attending.sort();
            expected.sort();
            assert_eq!(attending, expected);
        }
    }

    #[test]
    fn tasks() {
        let org = generate_org(5, &OrgConfig::default()).unwrap();
        let t = generate_task_from(&org, "schedule_meeting", 9).unwrap();
        assert!(t.text.starts_with("You are "));
        assert!(t.text.contains("arrange a meeting called"));
        assert!(t
            .text
            .contains(" long meeting in an available conference room, and invite "));
        let t = generate_task_from(&org, "find_office", 1).unwrap();
        let BindingValue::Person(pid) = &t.bindings[1].value else {
            panic!()
        };
        assert!(t.text.contains(&org.person(pid).unwrap().name));
        assert_eq!(
            generate_task(&org, 11).unwrap(),
            generate_task(&org, 11).unwrap()
        );
        for id in task_template_ids() {
            let t = generate_task_from(&org, id, 3).unwrap();
            assert!(!t.text.contains('{'), "{}", t.text);
        }
        let no_events = Organization {
            events: vec![],
            ..org
        };
        assert!(matches!(
            generate_task_from(&no_events, "cancel_meeting", 0),
            Err(OrgError::MissingKind { .. })
        ));
    }
}
