use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use vocabforge::assemble::{self, FrequencyTarget, MatchedPair};
use vocabforge::candidates::Validator;
use vocabforge::compound::{self, remove_compounds, CompoundGate, SplitterModel};
use vocabforge::corpus::{self, filter_jargon, Ingested, WordList};
use vocabforge::ngram::{self, NGramModel};
use vocabforge::pipeline::{self, PipelineConfig, TargetSource};
use vocabforge::scoring::{self, DistanceMatrix, ScoreReport};
use vocabforge::{FilterConfig, Lexicon, PseudowordCandidate, TestSet, TranslitTable, Upos};
use vocabforge_service::log::{read_events, records};
use vocabforge_service::{http, Service, ServiceConfig, SystemClock};

use crate::{
    AssembleArgs, BuildArgs, CorpusInput, DecompoundArgs, GenerateArgs, LexiconArgs, ScoreArgs, ServeArgs, StatsArgs,
    TargetArgs, ValidateArgs, ValidatorInput,
};

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_lexicon(path: &Path) -> Result<Lexicon> {
    Lexicon::load(path).with_context(|| format!("loading lexicon {}", path.display()))
}

fn load_table(path: Option<&PathBuf>) -> Result<Option<TranslitTable>> {
    path.map(|p| TranslitTable::from_path(p).with_context(|| format!("loading {}", p.display()))).transpose()
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect())
}

fn filter_config(input: &CorpusInput) -> Result<FilterConfig> {
    let mut cfg = FilterConfig::new(&input.language);
    cfg.jargon_percentile = input.jargon_percentile;
    cfg.allowed_pos = input
        .pos
        .iter()
        .map(|p| p.trim().to_uppercase().parse::<Upos>().map_err(|e| anyhow::anyhow!("{e}")))
        .collect::<Result<BTreeSet<_>>>()?;
    for path in &input.word_lists {
        cfg = cfg.with_word_list(WordList::from_path(path).with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(cfg)
}

fn ingest(input: &CorpusInput) -> Result<Ingested> {
    let mut all = Ingested::default();
    for path in &input.corpora {
        let part = corpus::read_corpus_file(path).with_context(|| format!("reading corpus {}", path.display()))?;
        log::info!("{}: {} tokens, {} documents", path.display(), part.tokens.len(), part.doc_count());
        all.extend(part);
    }
    if all.skipped_unknown_pos > 0 {
        log::warn!("skipped {} tokens with unknown POS tags", all.skipped_unknown_pos);
    }
    Ok(all)
}

pub fn lexicon(args: LexiconArgs) -> Result<()> {
    let cfg = filter_config(&args.input)?;
    let ingested = ingest(&args.input)?;
    let accepted = corpus::build_lexicon(&ingested.tokens, &cfg)?;
    let kept = filter_jargon(&accepted, cfg.jargon_percentile)?;
    log::info!("{} accepted lemmas, {} after the jargon cut", accepted.len(), kept.len());
    if let Some(path) = &args.accepted_out {
        fs::write(path, accepted.to_json())?;
    }
    fs::write(&args.out, kept.to_json())?;
    Ok(())
}

pub fn decompound(args: DecompoundArgs) -> Result<()> {
    let lex = load_lexicon(&args.lexicon)?;
    let gate = if args.disable {
        CompoundGate::Disabled
    } else {
        CompoundGate::Enabled(compound::train_splitter(&lex, args.max_ngram, args.min_segment))
    };
    let out = remove_compounds(&lex, &gate)?;
    log::info!("removed {} compounds, {} lemmas left", out.removed.len(), out.lexicon.len());
    if let (Some(path), CompoundGate::Enabled(model)) = (&args.model_out, &gate) {
        write_json(path, model)?;
    }
    if let Some(path) = &args.removed_out {
        write_json(path, &out.removed)?;
    }
    fs::write(&args.out, out.lexicon.to_json())?;
    Ok(())
}

/// Everything a validator borrows, loaded from the command line.
struct ValidatorParts {
    lexicon: Lexicon,
    known: Vec<Lexicon>,
    word_lists: Vec<WordList>,
    gate: CompoundGate,
    model: NGramModel,
    table: Option<TranslitTable>,
}

impl ValidatorParts {
    fn load(input: &ValidatorInput) -> Result<Self> {
        let lexicon = load_lexicon(&input.lexicon)?;
        let known = input.known.iter().map(|p| load_lexicon(p)).collect::<Result<_>>()?;
        let word_lists = input
            .word_lists
            .iter()
            .map(|p| WordList::from_path(p).with_context(|| format!("reading {}", p.display())))
            .collect::<Result<_>>()?;
        let gate = if input.no_compound {
            CompoundGate::Disabled
        } else if let Some(path) = &input.splitter {
            CompoundGate::Enabled(read_json::<SplitterModel>(path)?)
        } else {
            CompoundGate::Enabled(compound::train_splitter(
                &lexicon,
                compound::DEFAULT_MAX_NGRAM,
                compound::DEFAULT_MIN_SEGMENT_LEN,
            ))
        };
        let table = load_table(input.translit.as_ref())?;
        let model = ngram::build_model(&lexicon, input.n, table.as_ref())?;
        Ok(ValidatorParts { lexicon, known, word_lists, gate, model, table })
    }

    fn validator(&self) -> Validator<'_> {
        let v = Validator::new(&self.lexicon, &self.gate, &self.model, self.table.as_ref());
        let v = self.known.iter().fold(v, |v, l| v.with_known_lexicon(l));
        self.word_lists.iter().fold(v, |v, l| v.with_word_list(l))
    }
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let parts = ValidatorParts::load(&args.validator)?;
    let validator = parts.validator();
    let generation = ngram::generate_candidates(
        &parts.model,
        parts.table.as_ref(),
        |s| validator.validate(s),
        args.count,
        args.max_attempts,
        &mut pipeline::stream(args.seed, pipeline::GENERATION_STREAM),
    )?;
    log::info!(
        "{} candidates from {} samples ({} duplicates)",
        generation.candidates.len(),
        generation.attempts,
        generation.duplicates
    );
    for (reason, n) in &generation.rejections {
        log::info!("rejected {reason}: {n}");
    }
    if let Some(path) = &args.model_out {
        fs::write(path, parts.model.to_json())?;
    }
    write_json(&args.out, &generation.candidates)
}

fn read_candidate_texts(path: &Path) -> Result<Vec<String>> {
    if path.extension().is_some_and(|e| e == "json") {
        let values: Vec<Value> = read_json(path)?;
        values
            .into_iter()
            .map(|v| match v {
                Value::String(s) => Ok(s),
                Value::Object(ref m) => match m.get("text") {
                    Some(Value::String(s)) => Ok(s.clone()),
                    _ => bail!("candidate object without text: {v}"),
                },
                other => bail!("unexpected candidate {other}"),
            })
            .collect()
    } else {
        read_lines(path)
    }
}

pub fn validate(args: ValidateArgs) -> Result<()> {
    let parts = ValidatorParts::load(&args.validator)?;
    let texts = read_candidate_texts(&args.candidates)?;
    let (accepted, rejected, histogram) = parts.validator().validate_all(&texts);
    eprintln!("{} of {} accepted", accepted.len(), texts.len());
    for (reason, n) in &histogram {
        eprintln!("{reason}\t{n}");
    }
    for (text, reason) in &rejected {
        log::debug!("{text}: {reason}");
    }
    write_json(&args.out, &accepted)
}

fn parse_keyed(items: &[String]) -> Result<BTreeMap<String, PathBuf>> {
    items
        .iter()
        .map(|s| {
            let (k, v) = s.split_once('=').with_context(|| format!("expected LANG=PATH, got {s:?}"))?;
            Ok((k.to_string(), PathBuf::from(v)))
        })
        .collect()
}

pub fn target(args: TargetArgs) -> Result<()> {
    let mut reference = BTreeMap::new();
    for (lang, path) in parse_keyed(&args.references)? {
        reference.insert(lang, read_lines(&path)?);
    }
    let mut owned = BTreeMap::new();
    for (lang, path) in parse_keyed(&args.lexicons)? {
        owned.insert(lang, load_lexicon(&path)?);
    }
    let lexicons = owned.iter().map(|(k, v)| (k.clone(), v)).collect();
    let fit = assemble::fit_target(&reference, &lexicons)?;
    for (lang, missing) in &fit.missing {
        log::warn!("{lang}: {} reference items not in the lexicon", missing.len());
    }
    write_json(&args.out, &fit.targets)
}

fn resolve_target(args: &AssembleArgs, lexicon: Option<&Lexicon>) -> Result<FrequencyTarget> {
    let t = &args.target;
    if let (Some(mu), Some(sigma)) = (t.mu, t.sigma) {
        return Ok(FrequencyTarget::new(mu, sigma)?);
    }
    if let Some(path) = &t.target {
        let targets: BTreeMap<String, FrequencyTarget> = read_json(path)?;
        let lang = t.language.as_deref().context("--target needs --lang")?;
        return targets.get(lang).copied().with_context(|| format!("no target for {lang}"));
    }
    if let Some(path) = &t.reference {
        let freq = match &args.frequency_lexicon {
            Some(p) => load_lexicon(p)?,
            None => lexicon.context("--reference needs a lexicon")?.clone(),
        };
        let lang = freq.language().to_string();
        let reference = BTreeMap::from([(lang.clone(), read_lines(path)?)]);
        let fit = assemble::fit_target(&reference, &BTreeMap::from([(lang.clone(), &freq)]))?;
        return Ok(fit.targets[&lang]);
    }
    bail!("give --mu/--sigma, --target with --lang, or --reference")
}

pub fn assemble(args: AssembleArgs) -> Result<()> {
    let (language, pairs) = match &args.pairs {
        Some(path) => {
            let pairs: Vec<MatchedPair> = read_json(path)?;
            let language = args.target.language.clone().context("--pairs needs --lang")?;
            (language, pairs)
        }
        None => {
            let lex_path = args.lexicon.as_ref().context("--lexicon is required without --pairs")?;
            let cand_path = args.candidates.as_ref().context("--candidates is required without --pairs")?;
            let lexicon = load_lexicon(lex_path)?;
            let candidates: Vec<PseudowordCandidate> = read_json(cand_path)?;
            let target = resolve_target(&args, Some(&lexicon))?;
            let table = load_table(args.translit.as_ref())?;
            let model = ngram::build_model(&lexicon, args.n, table.as_ref())?;
            let n_real = args.real_words.unwrap_or(candidates.len()).min(lexicon.len());
            let words = assemble::select_real_words(
                &lexicon,
                target,
                n_real,
                &mut pipeline::stream(args.seed, pipeline::SELECTION_STREAM),
            )?;
            let pairing = assemble::pair(&words, &candidates, &model, table.as_ref());
            log::info!(
                "{} pairs; {} words and {} pseudowords unmatched",
                pairing.pairs.len(),
                pairing.unmatched_words.len(),
                pairing.unmatched_pseudos.len()
            );
            (lexicon.language().to_string(), pairing.pairs)
        }
    };
    let keep = args.keep.min(pairs.len());
    let kept = assemble::select_pairs(pairs, keep)?;
    if let Some(path) = &args.pairs_out {
        write_json(path, &kept)?;
    }
    let test = assemble::build_test(&kept, args.items, &language, args.seed)?;
    fs::write(&args.out, test.to_json())?;
    Ok(())
}

pub fn build(args: BuildArgs) -> Result<()> {
    let filter = filter_config(&args.input)?;
    let ingested = ingest(&args.input)?;
    let target = match (&args.reference, args.mu, args.sigma) {
        (Some(path), _, _) => TargetSource::Reference(read_lines(path)?),
        (None, Some(mu), Some(sigma)) => TargetSource::Fixed(FrequencyTarget::new(mu, sigma)?),
        _ => bail!("give --reference or --mu and --sigma"),
    };
    let mut config = PipelineConfig::new(target);
    config.order = args.n;
    config.candidates = args.count;
    config.keep = args.keep;
    config.items = args.items;
    config.seed = args.seed;
    config.compound.enabled = !args.no_compound;
    config.table = load_table(args.translit.as_ref())?;
    let out = pipeline::run(&ingested.tokens, &filter, &config)?;
    log::info!("{}", serde_json::to_string(&out.summary)?);
    if let Some(path) = &args.summary_out {
        write_json(path, &out.summary)?;
    }
    fs::write(&args.out, out.test.to_json())?;
    Ok(())
}

fn test_id(path: &Path) -> String {
    path.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

pub fn score(args: ScoreArgs) -> Result<()> {
    let mut tests = BTreeMap::new();
    for path in &args.tests {
        tests.insert(test_id(path), TestSet::load(path).with_context(|| format!("loading {}", path.display()))?);
    }
    let events = read_events(&args.sessions).with_context(|| format!("reading {}", args.sessions.display()))?;
    let mut reports = Vec::new();
    let mut skipped = 0;
    for (id, rec) in records(&events) {
        if rec.report.is_none() && !args.include_unfinished {
            skipped += 1;
            continue;
        }
        let Some(key) = tests.get(&rec.test_id) else {
            log::warn!("session {id}: test {:?} not given", rec.test_id);
            continue;
        };
        let mut report = scoring::score_session(&id, &rec.responses, key)?;
        report.native_language = rec.native_language;
        reports.push(report);
    }
    if skipped > 0 {
        log::info!("{skipped} unfinished sessions skipped");
    }
    let file = fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    scoring::write_reports_csv(file, &reports)?;
    if let Some(path) = &args.json_out {
        write_json(path, &reports)?;
    }
    eprintln!("scored {} sessions", reports.len());
    Ok(())
}

fn correlation(result: std::result::Result<f64, scoring::ScoringError>) -> Value {
    match result {
        Ok(r) => json!(r),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn read_covariates(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let id_col = headers.iter().position(|h| h == "session_id").context("covariates need a session_id column")?;
    let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        for (i, name) in headers.iter().enumerate() {
            if i == id_col || row[i].is_empty() {
                continue;
            }
            let v: f64 = row[i].parse().with_context(|| format!("{name}: {:?} is not a number", &row[i]))?;
            out.entry(name.to_string()).or_default().insert(row[id_col].to_string(), v);
        }
    }
    Ok(out)
}

pub fn stats(args: StatsArgs) -> Result<()> {
    let mut reports: Vec<ScoreReport> = Vec::new();
    for path in &args.reports {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        reports.extend(scoring::read_reports_csv(file)?);
    }
    let n = reports.len();
    let mean = reports.iter().map(|r| r.accuracy).sum::<f64>() / n.max(1) as f64;
    let mut by_language: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in &reports {
        by_language.entry(&r.tested_language).or_default().push(r.accuracy);
    }
    let languages: BTreeMap<&str, Value> = by_language
        .iter()
        .map(|(l, xs)| (*l, json!({ "n": xs.len(), "mean_accuracy": xs.iter().sum::<f64>() / xs.len() as f64 })))
        .collect();
    let cells = scoring::cell_means(&reports);
    let mut out = json!({
        "n_reports": n,
        "mean_accuracy": mean,
        "split_half_reliability": correlation(scoring::split_half_reliability(&reports)),
        "languages": languages,
        "cells": cells.iter().map(|((t, nl), a)| json!({ "tested": t, "native": nl, "mean_accuracy": a })).collect::<Vec<_>>(),
    });
    if let Some(path) = &args.distances {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let d = DistanceMatrix::from_csv(file)?;
        out["distance_correlation"] = correlation(scoring::distance_correlation(&cells, &d, args.exclude_native));
        out["exclude_native"] = json!(args.exclude_native);
    }
    if let Some(path) = &args.covariates {
        let mut cov = serde_json::Map::new();
        for (name, values) in read_covariates(path)? {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for r in &reports {
                if let Some(v) = values.get(&r.session_id) {
                    x.push(r.accuracy);
                    y.push(*v);
                }
            }
            cov.insert(name, json!({ "n": x.len(), "r": correlation(scoring::pearson(&x, &y)) }));
        }
        out["covariates"] = Value::Object(cov);
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<()> {
    let tests = vocabforge_service::load_tests(&args.data_dir.join("tests"))
        .with_context(|| format!("loading tests from {}", args.data_dir.join("tests").display()))?;
    if tests.is_empty() {
        bail!("no test sets in {}", args.data_dir.join("tests").display());
    }
    let config =
        ServiceConfig { display_ms: args.display_ms, grace_ms: args.grace_ms, session_ttl_ms: args.session_ttl_ms };
    let service =
        Service::new(tests, config, Arc::new(SystemClock::new())).with_log(&args.data_dir.join("events.jsonl"))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(http::serve(Arc::new(service), args.listen))?;
    Ok(())
}
