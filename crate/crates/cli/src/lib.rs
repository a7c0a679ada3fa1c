//! The `kgdm` command-line tool.

pub mod args;
pub mod server;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::CommandFactory;
use kgdm_core::dataset::{adapter, load_org, load_split, DialogueRecord, SplitName};
use kgdm_core::eval::{
    dialogue_ranking_instances, eval_linking, eval_ranking, train_on, InstanceOptions,
};
use kgdm_core::linking::coref::read_chain_file;
use kgdm_core::linking::pipeline::score_records;
use kgdm_core::linking::{CorefSource, Hyper, Linker};
use kgdm_core::ranking::{
    train_scorer, NativeScorer, RankingInstance, SidecarScorer, TrainConfig, TrainExample,
    TrainMode,
};
use kgdm_core::synth::{linking_benchmark, ranking_benchmark};
use kgdm_core::{
    eval::InstanceDump, fixtures, generate_org, org_to_graph, ChatConfig, ChatSession, EvalReport,
};
use kgdm_core::{KnowledgeGraph, LinkerModel, OrgConfig, Scorer, TemplateRegistry};

use args::*;

/// Usage checks clap cannot express.
pub fn check(cli: &Cli) -> Result<(), clap::Error> {
    if let Command::GenOrg(a) = &cli.command {
        for (what, min, max) in [
            ("persons", a.persons_min, a.persons_max),
            ("events", a.events_min, a.events_max),
        ] {
            if min > max {
                return Err(Cli::command().error(
                    ErrorKind::ValueValidation,
                    format!("--{what}-min ({min}) is greater than --{what}-max ({max})"),
                ));
            }
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenOrg(a) => gen_org(&a),
        Command::Ingest(a) => ingest(&a),
        Command::Link(LinkCommand::Train(a)) => link_train(&a),
        Command::Link(LinkCommand::Eval(a)) => link_eval(&a),
        Command::Rank(RankCommand::Eval(a)) => rank_eval(&a),
        Command::Rank(RankCommand::Train(a)) => rank_train(&a),
        Command::Chat(a) => chat(&a),
        Command::Report(a) => report(&a),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn gen_org(a: &GenOrgArgs) -> Result<()> {
    let config = OrgConfig {
        persons_min: a.persons_min,
        persons_max: a.persons_max,
        events_min: a.events_min,
        events_max: a.events_max,
        ..OrgConfig::default()
    };
    let org = generate_org(a.seed, &config)?;
    let graph = org_to_graph(&org)?;
    write_file(&a.out.join("org.json"), &(org.to_json() + "\n"))?;
    write_file(&a.out.join("graph.json"), &(graph.to_json() + "\n"))?;
    println!(
        "entities: {} ({} persons, {} events, {} rooms, {} groups)",
        org.entity_count(),
        org.persons.len(),
        org.events.len(),
        org.rooms.len(),
        org.groups.len()
    );
    Ok(())
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let s = adapter::ingest(&a.root, &a.out)?;
    println!(
        "ingested {} organizations and {} dialogues into {}",
        s.orgs,
        s.dialogues,
        a.out.display()
    );
    if let Some(m) = s.split {
        println!(
            "split: {} train, {} dev, {} test",
            m.train.len(),
            m.dev.len(),
            m.test.len()
        );
    }
    Ok(())
}

/// Organization graphs keyed by org id, the train split, and the requested split.
struct Corpus {
    graphs: BTreeMap<String, KnowledgeGraph>,
    train: Vec<DialogueRecord>,
    split: Vec<DialogueRecord>,
}

fn dataset_hint(root: &Path) -> String {
    format!(
        "no canonical dataset at {0}; run `kgdm ingest --root <raw data> --out {0}` first, or pass --synthetic <seed>",
        root.display()
    )
}

fn load_corpus(data: &DataArgs, split: SplitName) -> Result<Corpus> {
    match (&data.data, data.synthetic) {
        (Some(root), _) => {
            if !root.join("dialogues").is_dir() || !root.join("orgs").is_dir() {
                bail!(dataset_hint(root));
            }
            let ds = load_split(root)?;
            let mut graphs = BTreeMap::new();
            for (id, org) in &ds.orgs {
                graphs.insert(id.clone(), org_to_graph(org)?);
            }
            let pick = |s| ds.split(s).into_iter().cloned().collect::<Vec<_>>();
            Ok(Corpus {
                train: pick(SplitName::Train),
                split: pick(split),
                graphs,
            })
        }
        (None, Some(seed)) => {
            let b = linking_benchmark(seed);
            let org_id = b.test.first().map(|d| d.org.clone()).unwrap_or_default();
            let graphs = BTreeMap::from([(org_id, org_to_graph(&b.org)?)]);
            let split = match split {
                SplitName::Train => b.train.clone(),
                SplitName::Test => b.test.clone(),
                SplitName::Dev => bail!("the synthetic benchmark has only train and test splits"),
            };
            Ok(Corpus {
                graphs,
                train: b.train,
                split,
            })
        }
        (None, None) => bail!("pass --data <canonical dataset dir> or --synthetic <seed>"),
    }
}

fn coref_source(spec: &str) -> Result<CorefSource> {
    match spec {
        "heuristic" => Ok(CorefSource::Heuristic),
        "none" => Ok(CorefSource::None),
        other => match other.strip_prefix("file:") {
            Some(path) => Ok(CorefSource::Chains(read_chain_file(Path::new(path))?)),
            None => {
                bail!("unknown coref source `{other}` (expected heuristic, none, or file:<path>)")
            }
        },
    }
}

fn hyper(m: &ModelArgs) -> Hyper {
    Hyper {
        max_iter: m.max_iter,
        seed: m.seed,
        balance_classes: !m.no_class_weights,
        ..Hyper::default()
    }
}

fn link_train(a: &LinkTrainArgs) -> Result<()> {
    let corpus = load_corpus(&a.data, a.split)?;
    let coref = coref_source(&a.model.coref)?;
    let model = train_on(
        &corpus.graphs,
        &corpus.split,
        a.model.model,
        a.model.features,
        &coref,
        &hyper(&a.model),
    )?;
    model.save(&a.out)?;
    if let Some(t) = &model.training {
        println!(
            "trained {} ({}) on {} pairs ({} positive): loss {:.4} -> {:.4} in {} iterations",
            model.kind,
            model.features,
            t.examples,
            t.positives,
            t.initial_loss,
            t.final_loss,
            t.iterations
        );
    }
    println!("model written to {}", a.out.display());
    Ok(())
}

fn link_eval(a: &LinkEvalArgs) -> Result<()> {
    let corpus = load_corpus(&a.data, a.split)?;
    let coref = coref_source(&a.model.coref)?;
    let model: Option<LinkerModel> = match (&a.baseline, &a.model_file) {
        (Some(_), _) => None,
        (None, Some(path)) => Some(LinkerModel::load(path)?),
        (None, None) => Some(train_on(
            &corpus.graphs,
            &corpus.train,
            a.model.model,
            a.model.features,
            &coref,
            &hyper(&a.model),
        )?),
    };
    let linker = match (a.baseline, &model) {
        (Some(Baseline::StringEquality), _) => Linker::StringEquality,
        (Some(Baseline::Recency), _) => Linker::Recency,
        (None, Some(m)) => Linker::Model(m),
        (None, None) => unreachable!("a model is loaded or trained when no baseline is given"),
    };
    let report = eval_linking(
        &corpus.graphs,
        &corpus.split,
        &linker,
        &coref,
        &a.split.to_string(),
    )?;
    let InstanceDump::Linking(records) = &report.instances else {
        unreachable!("linking reports dump mention records")
    };
    let p = score_records(records, a.scope);
    println!("{}", report.config);
    println!(
        "{:?} scope on {}: P={:.4} R={:.4} F1={:.4} (tp={} predicted={} gold={})",
        a.scope, report.split, p.precision, p.recall, p.f1, p.true_positives, p.predicted, p.gold
    );
    if let Some(path) = &a.report {
        write_file(path, &(report.to_json() + "\n"))?;
    }
    Ok(())
}

/// Builds a scorer from `native`, `tcp:<addr>`, or `cmd:<program> [args...]`.
pub fn scorer_from_spec(spec: &str) -> Result<Arc<dyn Scorer>> {
    if spec == "native" {
        return Ok(Arc::new(NativeScorer));
    }
    let sidecar = if let Some(addr) = spec.strip_prefix("tcp:") {
        SidecarScorer::connect(addr)?
    } else if let Some(cmd) = spec.strip_prefix("cmd:") {
        let mut parts = cmd.split_whitespace().map(String::from);
        let program = parts.next().context("cmd: needs a program")?;
        SidecarScorer::spawn(&program, &parts.collect::<Vec<_>>())?
    } else {
        bail!("unknown scorer `{spec}` (expected native, tcp:<host:port>, or cmd:<program>)");
    };
    sidecar.handshake().context("scorer handshake failed")?;
    Ok(Arc::new(sidecar))
}

fn ranking_instances(data: &DataArgs, a: &InstanceArgs, split: SplitName) -> Result<Vec<RankingInstance>> {
    let registry = TemplateRegistry::bundled();
    if data.data.is_none() {
        if let Some(seed) = data.synthetic {
            return Ok(ranking_benchmark(seed).ranking_instances(
                a.input_mode,
                &registry,
                a.budget,
            )?);
        }
    }
    let corpus = load_corpus(data, split)?;
    let options = InstanceOptions {
        mode: a.input_mode,
        budget: a.budget,
        negatives: a.negatives,
        seed: a.seed,
        extra_pool: Vec::new(),
    };
    Ok(dialogue_ranking_instances(
        &corpus.graphs,
        &corpus.split,
        &registry,
        &options,
    )?)
}

fn rank_eval(a: &RankEvalArgs) -> Result<()> {
    let split = a.instances.split.unwrap_or(SplitName::Test);
    let instances = ranking_instances(&a.data, &a.instances, split)?;
    let scorer = scorer_from_spec(&a.scorer)?;
    let split = if a.data.data.is_some() {
        split.to_string()
    } else {
        "synthetic".to_string()
    };
    let config = format!(
        "input={} negatives={:?} seed={}",
        a.instances.input_mode, a.instances.negatives, a.instances.seed
    );
    let report = eval_ranking(scorer.as_ref(), &instances, &split, &config)?;
    println!("{}", report.summary());
    if let Some(path) = &a.report {
        write_file(path, &(report.to_json() + "\n"))?;
    }
    Ok(())
}

fn training_examples(instances: &[RankingInstance], mode: TrainMode) -> Vec<TrainExample> {
    let mut out = Vec::new();
    for inst in instances {
        let gold = &inst.candidates[inst.gold_index];
        for (i, c) in inst.candidates.iter().enumerate() {
            match mode {
                TrainMode::Pairwise if i != inst.gold_index => out.push(TrainExample::Pairwise {
                    context: inst.context.clone(),
                    positive: gold.clone(),
                    negative: c.clone(),
                }),
                TrainMode::Pointwise => out.push(TrainExample::Pointwise {
                    context: inst.context.clone(),
                    response: c.clone(),
                    label: if i == inst.gold_index { 1.0 } else { 0.0 },
                }),
                _ => {}
            }
        }
    }
    out
}

fn rank_train(a: &RankTrainArgs) -> Result<()> {
    let data = DataArgs {
        data: Some(a.data.clone()),
        synthetic: None,
    };
    let instances = ranking_instances(&data, &a.instances, a.instances.split.unwrap_or(SplitName::Train))?;
    let scorer = scorer_from_spec(&a.scorer)?;
    let config = TrainConfig {
        mode: a.mode,
        epochs: a.epochs,
        batch_size: a.batch_size,
    };
    let examples = training_examples(&instances, a.mode);
    let outcome = train_scorer(scorer.as_ref(), &config, &examples)?;
    println!(
        "{} examples from {} instances: status {} final loss {:.4} (version {})",
        examples.len(),
        instances.len(),
        outcome.status,
        outcome.final_loss,
        outcome.version
    );
    Ok(())
}

fn chat_config(a: &ChatArgs) -> Result<ChatConfig> {
    let mut config = ChatConfig {
        scorer: scorer_from_spec(&a.scorer)?,
        ..ChatConfig::default()
    };
    if let Some(path) = &a.model_file {
        config.linker = Arc::new(LinkerModel::load(path)?);
    }
    Ok(config)
}

fn chat(a: &ChatArgs) -> Result<()> {
    let org = match &a.org {
        Some(path) => load_org(path)?,
        None => fixtures::org(),
    };
    let config = chat_config(a)?;
    if let Some(port) = a.serve {
        let runtime = tokio::runtime::Runtime::new()?;
        return runtime
            .block_on(server::serve(
                server::AppState::new(org, config),
                &a.host,
                port,
            ))
            .context("HTTP server failed");
    }
    let mut session = ChatSession::new("stdin", org, config)?;
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    for line in stdin.lock().lines() {
        let reply = session.chat_turn(&line?)?;
        for m in &reply.linked {
            let labels: Vec<&str> = m.entities.iter().map(|e| e.label.as_str()).collect();
            writeln!(
                out,
                "  [{}] -> {}",
                m.surface,
                if labels.is_empty() {
                    "-".into()
                } else {
                    labels.join(", ")
                }
            )?;
        }
        if let Some(w) = &reply.warning {
            writeln!(out, "  warning: {w}")?;
        }
        writeln!(out, "{}", reply.response)?;
        out.flush()?;
    }
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    let mut failed = 0;
    for path in &a.files {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let r = EvalReport::from_json(&text)
            .with_context(|| format!("{} is not an evaluation report", path.display()))?;
        match r.verify() {
            Ok(()) => println!("{}: {}", path.display(), r.summary()),
            Err(e) => {
                failed += 1;
                println!("{}: INCONSISTENT: {e}", path.display());
            }
        }
    }
    if failed > 0 {
        bail!("{failed} report(s) failed verification");
    }
    Ok(())
}
