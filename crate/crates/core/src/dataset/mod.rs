//! Canonical dialogue records, their loading and validation, and dataset splits.
//!
//! On-disk layout of a canonical dataset directory:
//!
//! ```text
//! <root>/orgs/<org id>.json          Organization
//! <root>/dialogues/<dialogue>.json   DialogueRecord
//! <root>/split.json                  {"train": [...], "dev": [...], "test": [...]}  (optional)
//! ```
//!
//! Without `split.json` the dialogues are split 50/25/25 by the SHA-256 of
//! their id, which is deterministic but says nothing about speakers.

pub mod adapter;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::Speaker;
use crate::org::{OrgError, Organization};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("dialogue `{dialogue}` is invalid: {problems:?}")]
    Validation {
        dialogue: String,
        problems: Vec<String>,
    },
    #[error("split manifest lists `{0}` more than once")]
    OverlappingSplit(String),
    #[error("split manifest and dialogue directory disagree: {0}")]
    SplitMismatch(String),
    #[error("organization `{0}` not found")]
    MissingOrg(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("unrecognized input document {path}: {reason}")]
    Unrecognized { path: String, reason: String },
    #[error(transparent)]
    Org(#[from] OrgError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Link target of a mention annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Entities(Vec<String>),
    Spurious,
    New,
}

impl Target {
    /// Gold entity ids; empty for spurious and new-entity mentions.
    pub fn entities(&self) -> &[String] {
        match self {
            Target::Entities(v) => v,
            _ => &[],
        }
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Target::Entities(v) => v.serialize(s),
            Target::Spurious => s.serialize_str("SPURIOUS"),
            Target::New => s.serialize_str("NEW"),
        }
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Tag(String),
            List(Vec<String>),
        }
        match Raw::deserialize(d)? {
            Raw::List(v) => Ok(Target::Entities(v)),
            Raw::Tag(t) if t == "SPURIOUS" => Ok(Target::Spurious),
            Raw::Tag(t) if t == "NEW" => Ok(Target::New),
            Raw::Tag(t) => Err(de::Error::custom(format!("unknown target tag `{t}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionAnnotation {
    /// Character offsets into the turn's `asr` text, end exclusive.
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub targets: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    pub name: String,
    #[serde(default)]
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub i: usize,
    pub speaker: Speaker,
    pub asr: String,
    #[serde(default)]
    pub gold: Option<String>,
    #[serde(default)]
    pub intent: Intent,
    #[serde(default)]
    pub mentions: Vec<MentionAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub id: String,
    pub org: String,
    pub task: String,
    pub turns: Vec<Turn>,
}

impl DialogueRecord {
    /// Checks structure against `org` and narrows ambiguous target sets with
    /// their constraints. Returns every problem found, not just the first.
    pub fn resolve(&mut self, org: &Organization) -> Result<(), DatasetError> {
        let mut problems = Vec::new();
        if self.turns.is_empty() {
            problems.push("dialogue has no turns".to_string());
        }
        for (k, turn) in self.turns.iter_mut().enumerate() {
            if turn.i != k + 1 {
                problems.push(format!(
                    "turn {} has index {} (expected {})",
                    k + 1,
                    turn.i,
                    k + 1
                ));
            }
            let chars: Vec<char> = turn.asr.chars().collect();
            for (j, m) in turn.mentions.iter_mut().enumerate() {
                let at = format!("turn {} mention {j} `{}`", turn.i, m.surface);
                if m.start > m.end || m.end > chars.len() {
                    problems.push(format!("{at}: span {}..{} outside text", m.start, m.end));
                    continue;
                }
                let spanned: String = chars[m.start..m.end].iter().collect();
                if spanned != m.surface {
                    problems.push(format!("{at}: span covers `{spanned}`"));
                }
                if let Target::Entities(ids) = &mut m.targets {
                    let unknown: Vec<&String> =
                        ids.iter().filter(|id| org.lookup(id).is_none()).collect();
                    if !unknown.is_empty() {
                        problems.push(format!("{at}: unresolved targets {unknown:?}"));
                        continue;
                    }
                    if let Some(constraints) = &m.constraints {
                        if ids.len() > 1 {
                            let narrowed: Vec<String> = ids
                                .iter()
                                .filter(|id| {
                                    let attrs = org.attributes(id);
                                    constraints.iter().all(|(k, v)| attrs.get(k) == Some(v))
                                })
                                .cloned()
                                .collect();
                            if !narrowed.is_empty() {
                                *ids = narrowed;
                            }
                        }
                    }
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DatasetError::Validation {
                dialogue: self.id.clone(),
                problems,
            })
        }
    }

    pub fn mention_count(&self) -> usize {
        self.turns.iter().map(|t| t.mentions.len()).sum()
    }
}

fn parse_error(path: &str, e: serde_json::Error) -> DatasetError {
    DatasetError::Parse {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses and validates a canonical dialogue document.
pub fn parse_dialogue(
    text: &str,
    origin: &str,
    org: &Organization,
) -> Result<DialogueRecord, DatasetError> {
    let mut rec: DialogueRecord = serde_json::from_str(text).map_err(|e| parse_error(origin, e))?;
    rec.resolve(org)?;
    Ok(rec)
}

pub fn load_dialogue(path: &Path, org: &Organization) -> Result<DialogueRecord, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_dialogue(&text, &path.display().to_string(), org)
}

pub fn export_dialogue(record: &DialogueRecord) -> String {
    let mut s = serde_json::to_string_pretty(record).expect("dialogue serializes");
    s.push('\n');
    s
}

pub fn write_dialogue(path: &Path, record: &DialogueRecord) -> Result<(), DatasetError> {
    fs::write(path, export_dialogue(record)).map_err(io_err(path))
}

pub fn load_org(path: &Path) -> Result<Organization, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_error(&path.display().to_string(), e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        })
    }
}

impl std::str::FromStr for SplitName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(SplitName::Train),
            "dev" => Ok(SplitName::Dev),
            "test" => Ok(SplitName::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

impl SplitManifest {
    pub fn ids(&self, split: SplitName) -> &[String] {
        match split {
            SplitName::Train => &self.train,
            SplitName::Dev => &self.dev,
            SplitName::Test => &self.test,
        }
    }

    fn check_disjoint(&self) -> Result<(), DatasetError> {
        let mut seen = HashSet::new();
        for id in self.train.iter().chain(&self.dev).chain(&self.test) {
            if !seen.insert(id) {
                return Err(DatasetError::OverlappingSplit(id.clone()));
            }
        }
        Ok(())
    }
}

/// Deterministic 50/25/25 split ordered by the SHA-256 of each id.
pub fn hash_split<S: AsRef<str>>(ids: &[S]) -> SplitManifest {
    let mut keyed: Vec<([u8; 32], String)> = ids
        .iter()
        .map(|id| {
            (
                Sha256::digest(id.as_ref().as_bytes()).into(),
                id.as_ref().to_string(),
            )
        })
        .collect();
    keyed.sort();
    let n = keyed.len();
    let n_train = n / 2;
    let n_dev = (n - n_train) / 2;
    let mut it = keyed.into_iter().map(|(_, id)| id);
    let train = it.by_ref().take(n_train).collect();
    let dev = it.by_ref().take(n_dev).collect();
    let test = it.collect();
    SplitManifest { train, dev, test }
}

/// A loaded canonical dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub orgs: BTreeMap<String, Organization>,
    pub dialogues: BTreeMap<String, DialogueRecord>,
    pub split: SplitManifest,
}

impl Dataset {
    pub fn split(&self, which: SplitName) -> Vec<&DialogueRecord> {
        self.split
            .ids(which)
            .iter()
            .filter_map(|id| self.dialogues.get(id))
            .collect()
    }

    pub fn org_of(&self, d: &DialogueRecord) -> Result<&Organization, DatasetError> {
        self.orgs
            .get(&d.org)
            .ok_or_else(|| DatasetError::MissingOrg(d.org.clone()))
    }
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Loads a canonical dataset directory with its train/dev/test split.
pub fn load_split(root: &Path) -> Result<Dataset, DatasetError> {
    let mut orgs = BTreeMap::new();
    for p in json_files(&root.join("orgs"))? {
        orgs.insert(stem(&p), load_org(&p)?);
    }
    let mut dialogues = BTreeMap::new();
    for p in json_files(&root.join("dialogues"))? {
        let text = fs::read_to_string(&p).map_err(io_err(&p))?;
        let raw: DialogueRecord =
            serde_json::from_str(&text).map_err(|e| parse_error(&p.display().to_string(), e))?;
        let org = orgs
            .get(&raw.org)
            .ok_or_else(|| DatasetError::MissingOrg(raw.org.clone()))?;
        let rec = parse_dialogue(&text, &p.display().to_string(), org)?;
        dialogues.insert(rec.id.clone(), rec);
    }
    let manifest_path = root.join("split.json");
    let split = if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        let m: SplitManifest = serde_json::from_str(&text)
            .map_err(|e| parse_error(&manifest_path.display().to_string(), e))?;
        m.check_disjoint()?;
        let listed: HashSet<&String> = m.train.iter().chain(&m.dev).chain(&m.test).collect();
        if let Some(id) = listed
            .iter()
            .find(|id| !dialogues.contains_key(id.as_str()))
        {
            return Err(DatasetError::SplitMismatch(format!(
                "`{id}` is listed but has no dialogue file"
            )));
        }
        if let Some(id) = dialogues.keys().find(|id| !listed.contains(id)) {
            return Err(DatasetError::SplitMismatch(format!(
                "`{id}` is not assigned to any split"
            )));
        }
        m
    } else {
        hash_split(&dialogues.keys().collect::<Vec<_>>())
    };
    Ok(Dataset {
        root: root.to_path_buf(),
        orgs,
        dialogues,
        split,
    })
}

/// Writes a dataset in canonical layout.
pub fn write_dataset(
    out: &Path,
    orgs: &BTreeMap<String, Organization>,
    dialogues: &[DialogueRecord],
    split: Option<&SplitManifest>,
) -> Result<(), DatasetError> {
    let od = out.join("orgs");
    let dd = out.join("dialogues");
    fs::create_dir_all(&od).map_err(io_err(&od))?;
    fs::create_dir_all(&dd).map_err(io_err(&dd))?;
    for (id, org) in orgs {
        let p = od.join(format!("{id}.json"));
        fs::write(&p, org.to_json() + "\n").map_err(io_err(&p))?;
    }
    for d in dialogues {
        write_dialogue(&dd.join(format!("{}.json", sanitize(&d.id))), d)?;
    }
    if let Some(m) = split {
        let p = out.join("split.json");
        fs::write(
            &p,
            serde_json::to_string_pretty(m).expect("manifest serializes") + "\n",
        )
        .map_err(io_err(&p))?;
    }
    Ok(())
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
