use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use entryshift::biasaudit::{self, cda_experiment, heatmap_csv, heatmap_svg, AttributeSetup, TagSet, TagShiftMatrix};
use entryshift::classifier::{
    apply_config_text, arch_echo, predict_batch, read_checkpoint, train_echo, write_checkpoint, ArchKind,
    ArchitectureConfig, ModelParameters, TrainConfig,
};
use entryshift::corpus::{Dataset, Entry, Split};
use entryshift::counterfactual::{
    augment_training_set, flag_corpus, BiasAttribute, BiasSubset, ExclusionRules, SwapLexicon,
};
use entryshift::evaluation::{apply_thresholds, compute_metrics, gold_for, tune_thresholds, ThresholdTable};
use entryshift::zeroshot::{
    Aggregation, FileProvider, MaskFillProvider, PromptTemplate, StubProvider, Verbalizer, ZeroShotConfig,
    ZeroShotReport,
};

use crate::io::{load, print_json, read_text, resolve_taxonomy, sidecar, write_atomic};
use crate::{
    AggregationArg, ArchArg, AttributeArg, AuditArgs, AugmentArgs, CdaArgs, DataArgs, EvalArgs, FlagArgs, IngestArgs,
    LexiconArgs, ModelConfigArgs, Preset, ReportArgs, SplitArg, TrainArgs, TuneArgs, UsageError, ZeroShotArgs,
};

impl From<AttributeArg> for BiasAttribute {
    fn from(a: AttributeArg) -> Self {
        match a {
            AttributeArg::Gender => BiasAttribute::Gender,
            AttributeArg::Country => BiasAttribute::Country,
        }
    }
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Validation => Split::Validation,
            SplitArg::Test => Split::Test,
        }
    }
}

fn load_data(args: &DataArgs) -> Result<Dataset> {
    let tax = resolve_taxonomy(args.taxonomy.as_deref(), &args.data)?;
    load(&args.data, tax)
}

fn load_model(path: &Path) -> Result<ModelParameters> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    read_checkpoint(&bytes).with_context(|| format!("in checkpoint {}", path.display()))
}

/// The model's own taxonomy is used to read the data.
fn load_model_and_data(model: &Path, data: &Path) -> Result<(ModelParameters, Dataset)> {
    let model = load_model(model)?;
    let dataset = load(data, model.shared_taxonomy())?;
    Ok((model, dataset))
}

fn split_entries(dataset: &Dataset, split: Split) -> Result<Vec<&Entry>> {
    let entries: Vec<&Entry> = dataset.entries().iter().filter(|e| e.split == split).collect();
    if entries.is_empty() {
        bail!("the {split} split of {} is empty", dataset.provenance);
    }
    Ok(entries)
}

fn tag_set(s: &str) -> Result<TagSet> {
    TagSet::parse(s).ok_or_else(|| UsageError(format!("--tags must be single-level or all, not {s:?}")).into())
}

fn lexicon_setup(args: &LexiconArgs) -> Result<AttributeSetup> {
    let attribute = BiasAttribute::from(args.attribute);
    let lexicon = match &args.lexicon {
        Some(p) => SwapLexicon::parse(attribute, &read_text(p)?).with_context(|| format!("in {}", p.display()))?,
        None => SwapLexicon::default_for(attribute),
    };
    let rules = match &args.exclusions {
        Some(p) => ExclusionRules::parse(&read_text(p)?).with_context(|| format!("in {}", p.display()))?,
        None => ExclusionRules::default_for(attribute),
    };
    Ok(AttributeSetup { lexicon, rules })
}

/// Preset, then the config file, then `--arch` and `--seed`.
fn model_config(args: &ModelConfigArgs) -> Result<(ArchitectureConfig, TrainConfig)> {
    let mut arch = ArchitectureConfig::default();
    let mut train = match args.preset {
        Preset::Reference => TrainConfig::default(),
        Preset::Desk => TrainConfig::desk(),
    };
    if let Some(p) = &args.config {
        apply_config_text(&read_text(p)?, &mut arch, &mut train).with_context(|| format!("in {}", p.display()))?;
    }
    if let Some(kind) = args.arch {
        arch.kind = match kind {
            ArchArg::Base => ArchKind::Base,
            ArchArg::Combinatorial => ArchKind::Combinatorial,
        };
    }
    if let Some(seed) = args.seed {
        arch.seed = seed;
        train.seed = seed;
    }
    arch.validate()?;
    train.validate()?;
    Ok((arch, train))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

pub fn ingest(args: IngestArgs) -> Result<()> {
    let ds = load_data(&args.data)?;
    let tax = ds.taxonomy();
    let mut splits = BTreeMap::new();
    for s in Split::ALL {
        splits.insert(s.as_str(), ds.split_len(s));
    }
    let mut groups = BTreeMap::new();
    for g in tax.groups() {
        let labeled = ds.entries().iter().filter(|e| e.labels.get(&g.name).is_some_and(|t| !t.is_empty())).count();
        let assigned: usize = ds.entries().iter().filter_map(|e| e.labels.get(&g.name)).map(Vec::len).sum();
        groups.insert(g.name.as_str(), json!({ "tags": g.tags.len(), "labeled_entries": labeled, "labels": assigned }));
    }
    let mut languages = BTreeMap::new();
    for e in ds.entries() {
        *languages.entry(e.language.as_str()).or_insert(0usize) += 1;
    }
    if let Some(out) = &args.out {
        write_atomic(out, ds.to_jsonl().as_bytes())?;
    }
    print_json(&json!({
        "valid": true,
        "entries": ds.len(),
        "taxonomy_tags": tax.len(),
        "splits": splits,
        "groups": groups,
        "languages": languages,
    }));
    Ok(())
}

pub fn flag(args: FlagArgs) -> Result<()> {
    let ds = load_data(&args.data)?;
    let setup = lexicon_setup(&args.lexicon)?;
    let subset = flag_corpus(&ds, &setup.lexicon, &setup.rules);
    write_atomic(&args.out, subset.to_jsonl().as_bytes())?;
    write_atomic(&sidecar(&args.out, ".counts.csv"), subset.counts_table().as_bytes())?;
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for (_, why) in &subset.excluded {
        let key =
            serde_json::to_value(why).ok().and_then(|v| v["kind"].as_str().map(str::to_string)).unwrap_or_default();
        *reasons.entry(key).or_default() += 1;
    }
    print_json(&json!({
        "attribute": subset.attribute,
        "flagged": subset.families.len(),
        "excluded": subset.excluded.len(),
        "excluded_by_kind": reasons,
        "not_applicable": subset.not_applicable,
        "ambiguous_variants": subset.ambiguous_variants(),
    }));
    Ok(())
}

pub fn augment(args: AugmentArgs) -> Result<()> {
    let ds = load_data(&args.data)?;
    let mut subsets: Vec<BiasSubset> = Vec::new();
    for p in &args.subset {
        let parsed = BiasSubset::parse_jsonl(&read_text(p)?, &ds).with_context(|| format!("in {}", p.display()))?;
        subsets.extend(parsed);
    }
    let (augmented, report) = augment_training_set(&ds, &subsets)?;
    write_atomic(&args.out, augmented.to_jsonl().as_bytes())?;
    print_json(&serde_json::to_value(&report)?);
    Ok(())
}

pub fn train(args: TrainArgs) -> Result<()> {
    let (arch, cfg) = model_config(&args.model)?;
    let ds = load_data(&args.data)?;
    let trained = entryshift::classifier::train(&ds, &arch, &cfg)?;
    write_atomic(&args.out, &write_checkpoint(&trained.model))?;
    write_atomic(&sidecar(&args.out, ".config"), (arch_echo(&arch) + &train_echo(&cfg)).as_bytes())?;
    print_json(&json!({
        "model_fingerprint": trained.model.fingerprint(),
        "parameters": trained.model.values().len(),
        "history": trained.history,
    }));
    Ok(())
}

pub fn tune(args: TuneArgs) -> Result<()> {
    let (model, ds) = load_model_and_data(&args.io.model, &args.io.data)?;
    let preds = predict_batch(&model, split_entries(&ds, args.split.into())?);
    let table = tune_thresholds(&preds, &gold_for(&preds, &ds)?);
    write_atomic(&args.out, table.to_csv().as_bytes())?;
    print_json(&json!({ "tags": table.tags.len(), "entries": preds.n_rows() }));
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let (model, ds) = load_model_and_data(&args.io.model, &args.io.data)?;
    let table = ThresholdTable::parse_csv(&read_text(&args.thresholds)?, ds.taxonomy().tags())
        .with_context(|| format!("in {}", args.thresholds.display()))?;
    let preds = predict_batch(&model, split_entries(&ds, args.split.into())?);
    let assign = apply_thresholds(&preds, &table)?;
    let report = compute_metrics(&assign, &gold_for(&preds, &ds)?, ds.taxonomy());
    write_atomic(&args.out, to_json(&report).as_bytes())?;
    print_json(&json!({ "avg": report.avg, "entries": preds.n_rows() }));
    Ok(())
}

pub fn audit(args: AuditArgs) -> Result<()> {
    let tags = tag_set(&args.tags)?;
    let setup = lexicon_setup(&args.lexicon)?;
    let (model, ds) = load_model_and_data(&args.io.model, &args.io.data)?;
    let outcome = biasaudit::audit(&model, &ds, &setup.lexicon, &setup.rules, tags)?;
    write_atomic(&args.out, to_json(&outcome).as_bytes())?;
    if let Some(p) = &args.csv {
        write_atomic(p, heatmap_csv(&[&outcome.report.matrix]).as_bytes())?;
    }
    if let Some(p) = &args.svg {
        write_atomic(p, heatmap_svg(&outcome.report.matrix).as_bytes())?;
    }
    print_json(&json!({
        "attribute": outcome.attribute,
        "families": outcome.report.matrix.families,
        "overall_shift": outcome.report.overall_shift,
    }));
    Ok(())
}

pub fn cda(args: CdaArgs) -> Result<()> {
    let tags = tag_set(&args.tags)?;
    let (arch, cfg) = model_config(&args.model)?;
    let ds = load_data(&args.data)?;
    let setups: Vec<AttributeSetup> = BiasAttribute::ALL.into_iter().map(AttributeSetup::default_for).collect();
    let report = cda_experiment(&ds, &arch, &cfg, &setups, tags)?;
    write_atomic(&args.out, (report.to_json() + "\n").as_bytes())?;
    write_atomic(&sidecar(&args.out, ".config"), (arch_echo(&arch) + &train_echo(&cfg)).as_bytes())?;
    if let Some(p) = &args.csv {
        let matrices: Vec<&TagShiftMatrix> =
            report.arms.iter().flat_map(|a| a.audits.iter().map(|o| &o.report.matrix)).collect();
        write_atomic(p, heatmap_csv(&matrices).as_bytes())?;
    }
    print_json(&serde_json::to_value(&report.table)?);
    Ok(())
}

fn provider(spec: &str, verbalizer: &Verbalizer) -> Result<Box<dyn MaskFillProvider>> {
    if spec == "stub" {
        return Ok(Box::new(StubProvider::new(verbalizer)));
    }
    match spec.strip_prefix("file:") {
        Some(path) => {
            let path = Path::new(path);
            Ok(Box::new(
                FileProvider::parse_jsonl(&read_text(path)?).with_context(|| format!("in {}", path.display()))?,
            ))
        }
        None => Err(UsageError(format!("--provider must be stub or file:<path>, not {spec:?}")).into()),
    }
}

pub fn zeroshot(args: ZeroShotArgs) -> Result<()> {
    let ds = load_data(&args.data)?;
    let verbalizer = match &args.verbalizer {
        Some(p) => {
            Verbalizer::parse_csv(&read_text(p)?, ds.taxonomy()).with_context(|| format!("in {}", p.display()))?
        }
        None => Verbalizer::builtin(ds.taxonomy())?,
    };
    let template = match &args.template {
        Some(t) => PromptTemplate::new(t.clone()).map_err(|e| UsageError(e.to_string()))?,
        None => PromptTemplate::default(),
    };
    let config = ZeroShotConfig {
        template,
        aggregation: match args.aggregation {
            AggregationArg::Max => Aggregation::Max,
            AggregationArg::Mean => Aggregation::Mean,
        },
        threshold: args.threshold,
        max_tokens: args.max_tokens,
    };
    let provider = provider(&args.provider, &verbalizer)?;
    let report = ZeroShotReport::build(&ds, args.split.into(), provider.as_ref(), &verbalizer, &config)?;
    write_atomic(&args.out, to_json(&report).as_bytes())?;
    print_json(&json!({ "entries": report.entries, "avg": report.metrics.avg }));
    Ok(())
}

/// Every object under a `matrix` key, in document order.
fn find_matrices(v: &Value, out: &mut Vec<TagShiftMatrix>) -> Result<()> {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                if k == "matrix" {
                    out.push(TagShiftMatrix::from_value(child)?);
                } else {
                    find_matrices(child, out)?;
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                find_matrices(item, out)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn cda_table_csv(report: &Value) -> Result<String> {
    let rows = report["table"].as_array().context("the report has no side-by-side table")?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["arm", "avg_precision", "avg_f1", "gender_bias", "country_bias"])?;
    let cell = |v: &Value| v.as_f64().map(|x| format!("{x:?}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r["arm"].as_str().unwrap_or_default().to_string(),
            cell(&r["avg_precision"]),
            cell(&r["avg_f1"]),
            cell(&r["bias"]["gender"]),
            cell(&r["bias"]["country"]),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn report(args: ReportArgs) -> Result<()> {
    let value: Value = serde_json::from_str(&read_text(&args.input)?)
        .with_context(|| format!("{} is not JSON", args.input.display()))?;
    let mut matrices = Vec::new();
    find_matrices(&value, &mut matrices)?;
    if (args.csv.is_some() || args.svg.is_some()) && matrices.is_empty() {
        bail!("{} holds no tag-shift matrix", args.input.display());
    }
    if let Some(p) = &args.csv {
        write_atomic(p, heatmap_csv(&matrices.iter().collect::<Vec<_>>()).as_bytes())?;
    }
    if let Some(p) = &args.svg {
        let pattern = p.to_string_lossy();
        if matrices.len() > 1 && !pattern.contains("{n}") {
            return Err(UsageError(format!(
                "{} matrices found; put {{n}} in --svg to number the files",
                matrices.len()
            ))
            .into());
        }
        for (i, m) in matrices.iter().enumerate() {
            let path = pattern.replace("{n}", &i.to_string());
            write_atomic(Path::new(&path), heatmap_svg(m).as_bytes())?;
        }
    }
    if let Some(p) = &args.table {
        write_atomic(p, cda_table_csv(&value)?.as_bytes())?;
    }
    let groups: Vec<Value> =
        matrices.iter().map(|m| json!({ "attribute": m.attribute, "tags": m.tags.len() })).collect();
    print_json(&json!({ "matrices": groups }));
    Ok(())
}
