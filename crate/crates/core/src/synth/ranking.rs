use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{KnowledgeGraph, NodeId, Speaker};
use crate::org::{generate_org, org_to_graph, OrgConfig, Organization, Person};
use crate::ranking::{
    build_context, InputMode, RankError, RankingInstance, TemplateRegistry, CANDIDATES,
};

/// One decision point: history, linked entities, and candidates whose gold
/// answer states a fact about the linked person.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRankingInstance {
    pub history: Vec<(Speaker, String)>,
    pub linked: Vec<NodeId>,
    pub candidates: Vec<String>,
    pub gold_index: usize,
}

#[derive(Debug, Clone)]
pub struct RankingBenchmark {
    pub org: Organization,
    pub graph: KnowledgeGraph,
    pub instances: Vec<SynthRankingInstance>,
}

pub const RANKING_INSTANCES: usize = 100;

#[derive(Clone, Copy)]
enum Ask {
    Office,
    Phone,
    Group,
    Email,
}

impl Ask {
    fn question(self, name: &str) -> String {
        match self {
            Ask::Office => format!("Where is the office of {name}?"),
            Ask::Phone => format!("What number can I call to reach {name}?"),
            Ask::Group => format!("Which group does {name} work in?"),
            Ask::Email => format!("How can I write to {name}?"),
        }
    }

    fn answer(self, org: &Organization, p: &Person) -> String {
        match self {
            Ask::Office => format!(
                "The office is {}.",
                org.room(&p.office).map_or("", |r| r.name.as_str())
            ),
            Ask::Phone => format!("You can call {}.", p.phone),
            Ask::Group => format!(
                "That would be the {} group.",
                org.group(&p.group).map_or("", |g| g.name.as_str())
            ),
            Ask::Email => format!("Send a message to {}.", p.email),
        }
    }
}

/// Synthetic ranking benchmark: each instance asks about an attribute of a
/// person, and the gold response states that attribute while the
/// distractors state the same attribute of other people.
pub fn ranking_benchmark(seed: u64) -> RankingBenchmark {
    let org = generate_org(seed, &OrgConfig::default()).expect("default config is valid");
    let graph = org_to_graph(&org).expect("generated organizations are valid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::with_capacity(RANKING_INSTANCES);
    while instances.len() < RANKING_INSTANCES {
        let p = org.persons.choose(&mut rng).unwrap();
        let ask = *[Ask::Office, Ask::Phone, Ask::Group, Ask::Email]
            .choose(&mut rng)
            .unwrap();
        let gold = ask.answer(&org, p);
        let mut candidates = vec![gold.clone()];
        let mut others: Vec<&Person> = org.persons.iter().filter(|o| o.id != p.id).collect();
        others.shuffle(&mut rng);
        for o in others {
            let c = ask.answer(&org, o);
            if !candidates.contains(&c) {
                candidates.push(c);
            }
            if candidates.len() == CANDIDATES {
                break;
            }
        }
        if candidates.len() < CANDIDATES {
            // Too few distinct values for this attribute, e.g. groups.
            let fillers = [
                "Have a nice day!",
                "I am not sure about that.",
                "Could you repeat that, please?",
                "The cafeteria is on the ground floor.",
                "Let me check the calendar.",
                "Is there anything else I can help you with?",
                "Please take a seat.",
                "The elevator is to your left.",
                "I will let them know you are here.",
            ];
            for f in fillers {
                if candidates.len() == CANDIDATES {
                    break;
                }
                candidates.push(f.to_string());
            }
        }
        candidates.shuffle(&mut rng);
        let gold_index = candidates.iter().position(|c| *c == gold).unwrap();
        let greeting = if rng.gen_bool(0.5) {
            "Hello!"
        } else {
            "Good morning."
        };
        let history = vec![
            (Speaker::User, greeting.to_string()),
            (Speaker::Agent, "Hello! How can I help you?".to_string()),
            (Speaker::User, ask.question(&p.name)),
        ];
        instances.push(SynthRankingInstance {
            history,
            linked: vec![NodeId::new(&p.id)],
            candidates,
            gold_index,
        });
    }
    RankingBenchmark {
        org,
        graph,
        instances,
    }
}

impl RankingBenchmark {
    pub fn ranking_instances(
        &self,
        mode: InputMode,
        registry: &TemplateRegistry,
        budget: usize,
    ) -> Result<Vec<RankingInstance>, RankError> {
        self.instances
            .iter()
            .map(|i| {
                Ok(RankingInstance {
                    context: build_context(
                        &self.graph,
                        &i.linked,
                        &i.history,
                        mode,
                        registry,
                        budget,
                    )?,
                    candidates: i.candidates.clone(),
                    gold_index: i.gold_index,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::DEFAULT_BUDGET;

    #[test]
    fn instances_are_valid() {
        let b = ranking_benchmark(7);
        assert_eq!(b.instances.len(), RANKING_INSTANCES);
        for mode in [InputMode::History, InputMode::SubgraphHistory] {
            for inst in b
                .ranking_instances(mode, &TemplateRegistry::bundled(), DEFAULT_BUDGET)
                .unwrap()
            {
                inst.validate().unwrap();
            }
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            ranking_benchmark(7).instances,
            ranking_benchmark(7).instances
        );
    }
}
