//! The `mme` command line.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for data errors.
//! Errors are also written to standard error as one JSON object.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mme_core::eval::{
    aging_curve, average_row, maintain_to_threshold, maintain_with_budget, temporal_split, Bucketing, Budget,
    MetricsRow, Period, TemporalSplit,
};
use mme_core::kgraph::{build_graph, default_lexicon, graph_stats, EntityKind, Relation, RelationTemplate};
use mme_core::nnet::{predict, train_model, EncoderKind};
use mme_core::seqembed::ApiTrace;
use mme_core::synthgen::generate_corpus;
use mme_core::transe::{self, EmbeddingTable};

use crate::config::{echo_text, Settings};
use crate::error::{Error, Result};
use crate::experiment::{self, build_world, fnr_thirds, monthly_split, ExperimentConfig, TraceDetector};
use crate::features::{FeatureConfig, Mode};
use crate::formats::docs::{parse_doc_corpus, read_docs};
use crate::formats::embedding::{load_embedding, save_embedding};
use crate::formats::graph::{load_graph, save_graph};
use crate::formats::model::{load_model, save_model, ModelFile};
use crate::formats::report::{
    label_log_json, save_text, save_with, stability_json, write_metrics_csv, write_plot_data, write_scores_csv,
    ScoreLine,
};
use crate::formats::templates::{load_templates, read_templates};
use crate::formats::tensor::{save_tensors, TensorRecord};
use crate::formats::traces::{load_traces, save_traces};

const DEFAULT_DOCS: &str = include_str!("../fixtures/docs.jsonl");
const DEFAULT_TEMPLATES: &str = include_str!("../fixtures/templates.jsonl");

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\ngraph: mme-graph 1",
    "\nembedding: mme-embedding 1",
    "\ntraces: jsonl, one trace per line",
    "\ntensor: MMETNSR1",
    "\nmodel: mme-model 1",
    "\nconfig: key = value"
);

#[derive(Debug, Parser)]
#[command(name = "mme", version, long_version = LONG_VERSION, about = "API knowledge-graph enhanced malware detector pipeline")]
struct Cli {
    /// Settings file with `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; every random stream is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Regular,
    Mme,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Regular => Mode::Regular,
            ModeArg::Mme => Mode::Mme,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EncoderArg {
    Textcnn,
    Meanpool,
}

impl EncoderArg {
    fn kind(self) -> EncoderKind {
        match self {
            EncoderArg::Textcnn => EncoderKind::TextCnn,
            EncoderArg::Meanpool => EncoderKind::MeanPool,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Yearly,
    Monthly,
}

impl SplitArg {
    fn bucketing(self) -> Bucketing {
        match self {
            SplitArg::Yearly => Bucketing::Yearly,
            SplitArg::Monthly => Bucketing::Monthly,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Strategy {
    Threshold,
    Budget,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the API knowledge graph from a documentation corpus.
    BuildKg {
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train TransE vectors for every graph entity.
    TrainKgEmbed {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic evolving trace corpus from a graph.
    Gen {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        families: Option<usize>,
        #[arg(long)]
        months: Option<usize>,
        /// Traces per family and month.
        #[arg(long)]
        per_month: Option<usize>,
        /// Benign traces per month.
        #[arg(long)]
        benign: Option<usize>,
        /// Substitute unrelated APIs instead of graph neighbours.
        #[arg(long)]
        hostile: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed traces into a tensor file.
    Embed {
        #[command(flatten)]
        data: Data,
        #[arg(long, value_enum, default_value = "mme")]
        mode: ModeArg,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        len: Option<usize>,
        #[arg(long)]
        hash_seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a detector.
    Train {
        #[command(flatten)]
        data: Data,
        #[arg(long, value_enum, default_value = "mme")]
        mode: ModeArg,
        #[arg(long, value_enum)]
        encoder: Option<EncoderArg>,
        /// Only train on traces inside this period (`YYYY` or `YYYY-MM`).
        #[arg(long)]
        period: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        len: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score traces with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: Data,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-period metrics of a trained model.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        split: SplitOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Active-learning maintenance, retraining with the model's settings.
    Maintain {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        split: SplitOpts,
        #[arg(long, value_enum)]
        strategy: Strategy,
        /// Target F1 for the threshold strategy.
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Labels per period for the budget strategy.
        #[arg(long)]
        budget: Option<usize>,
        /// Fraction of each period labeled by the budget strategy.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Latent-space stability of malware families over time.
    Stability {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: Data,
        /// Comma-separated family ids (default: all).
        #[arg(long)]
        families: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full desk-scale aging, maintenance and stability comparison.
    Demo {
        #[arg(long)]
        docs: Option<PathBuf>,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, default_value = "mme-demo")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Data {
    #[arg(long)]
    traces: PathBuf,
    /// Entity embedding file (needed for graph-named features).
    #[arg(long)]
    emb: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitOpts {
    #[arg(long, value_enum, default_value = "monthly")]
    split: SplitArg,
    /// Training period (`YYYY` or `YYYY-MM`); defaults to the earliest one.
    #[arg(long)]
    train_period: Option<String>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => {
                    report_error("usage", &e.kind().to_string());
                    1
                }
            };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            if matches!(e, Error::Usage(_)) {
                1
            } else {
                2
            }
        }
    }
}

fn report_error(kind: &str, message: &str) {
    let j = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{j}");
}

fn settings(cli: &Cli) -> Result<Settings> {
    let mut s = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    s.flag("seed", cli.seed);
    Ok(s)
}

fn conf_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".conf");
    PathBuf::from(s)
}

fn save_echo(out: &Path, pairs: &[(String, String)]) -> Result<()> {
    let text: String = pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    save_text(&conf_path(out), &text)
}

fn paths(pairs: &[(&str, &Path)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, p)| (k.to_string(), p.display().to_string())).collect()
}

fn execute(cli: Cli) -> Result<()> {
    let mut s = settings(&cli)?;
    match cli.command {
        Command::BuildKg { docs, templates, out } => {
            let records = parse_doc_corpus(&docs)?;
            let templates_path = templates;
            let templates = match &templates_path {
                Some(p) => load_templates(p)?,
                None => Vec::new(),
            };
            let g = build_graph(&records, &templates, &default_lexicon())?;
            save_graph(&out, &g)?;
            print!("{}", stats_table(&g));
            let mut echo = paths(&[("docs", &docs)]);
            if let Some(t) = &templates_path {
                echo.push(("templates".into(), t.display().to_string()));
            }
            echo.push(("out".into(), out.display().to_string()));
            save_echo(&out, &echo)
        }
        Command::TrainKgEmbed { graph, dim, epochs, margin, lr, out } => {
            s.flag("kg.dim", dim);
            s.flag("kg.epochs", epochs);
            s.flag("kg.margin", margin);
            s.flag("kg.learning_rate", lr);
            let cfg = s.experiment()?;
            let g = load_graph(&graph)?;
            let table = transe::train(&g, &cfg.transe)?;
            save_embedding(&out, &table)?;
            let mut echo = paths(&[("graph", &graph)]);
            echo.extend(cfg.echo().into_iter().filter(|(k, _)| k == "seed" || k.starts_with("kg.")));
            save_echo(&out, &echo)
        }
        Command::Gen { graph, families, months, per_month, benign, hostile, out } => {
            s.flag("gen.families", families);
            s.flag("gen.months", months);
            s.flag("gen.traces_per_family_month", per_month);
            s.flag("gen.benign_per_month", benign);
            if hostile {
                s.set("gen.hostile", true);
            }
            let cfg = s.experiment()?;
            let g = load_graph(&graph)?;
            let corpus = generate_corpus(&g, &cfg.evolution)?;
            save_traces(&out, &corpus.traces)?;
            let mut subs = String::from("family\ttemplate\tmonth\tposition\tfrom\tto\n");
            for x in &corpus.substitutions {
                let _ = writeln!(subs, "{}\t{}\t{}\t{}\t{}\t{}", x.family, x.template, x.month, x.position, x.from, x.to);
            }
            let mut sub_path = out.as_os_str().to_owned();
            sub_path.push(".subs.tsv");
            save_text(Path::new(&sub_path), &subs)?;
            let mut echo = paths(&[("graph", &graph)]);
            echo.extend(cfg.echo().into_iter().filter(|(k, _)| k == "seed" || k.starts_with("gen.")));
            save_echo(&out, &echo)
        }
        Command::Embed { data, mode, bins, len, hash_seed, out } => {
            s.flag("hash.bins", bins);
            s.flag("seq.max_len", len);
            s.flag("hash.seed", hash_seed);
            let (traces, table) = load_data(&data)?;
            let cfg = resolve_dim(&mut s, table.as_ref())?;
            let features = cfg.features(mode.into());
            let samples = features.samples(table.as_ref(), &traces)?;
            let records: Vec<TensorRecord> = traces
                .iter()
                .zip(samples)
                .map(|(t, s)| TensorRecord {
                    id: t.id.clone(),
                    y: t.y,
                    family: t.family,
                    timestamp: t.timestamp,
                    x: s.x,
                })
                .collect();
            save_tensors(&out, &records)?;
            let mut echo = data_echo(&data);
            echo.extend(features_echo(&features));
            save_echo(&out, &echo)
        }
        Command::Train { data, mode, encoder, period, epochs, lr, lambda, bins, len, out } => {
            s.flag("encoder.kind", encoder.map(|e| e.kind().as_str()));
            s.flag("train.epochs", epochs);
            s.flag("train.learning_rate", lr);
            s.flag("train.lambda", lambda);
            s.flag("hash.bins", bins);
            s.flag("seq.max_len", len);
            let (traces, table) = load_data(&data)?;
            let cfg = resolve_dim(&mut s, table.as_ref())?;
            let mode = Mode::from(mode);
            let features = cfg.features(mode);
            let mut samples = features.samples(table.as_ref(), &traces)?;
            if let Some(p) = &period {
                let p = Period::parse(p)?;
                samples = samples
                    .into_iter()
                    .zip(&traces)
                    .filter(|(_, t)| p.contains(t.timestamp))
                    .map(|(s, _)| s)
                    .collect();
            }
            let model = train_model(&samples, &cfg.encoder(mode), &cfg.train_config(mode))?;
            save_model(&out, &ModelFile { model, features })?;
            let mut echo = data_echo(&data);
            echo.push(("mode".into(), mode.as_str().into()));
            echo.push(("period".into(), period.unwrap_or_else(|| "all".into())));
            echo.extend(cfg.echo().into_iter().filter(|(k, _)| !k.starts_with("gen.") && !k.starts_with("maintain.")));
            save_echo(&out, &echo)
        }
        Command::Predict { model, data, out } => {
            let (mf, traces, mut d) = model_detector(&model, &data)?;
            let mut scores = Vec::with_capacity(traces.len());
            for (t, sample) in traces.iter().zip(d.samples.drain(..)) {
                let (y_hat, f_x, _) = predict(&mf.model, &sample.x)?;
                scores.push(ScoreLine { id: t.id.clone(), y_true: t.y, f_x, y_hat });
            }
            save_with(&out, |w| write_scores_csv(w, &scores))?;
            save_echo(&out, &model_echo(&model, &data, &mf))
        }
        Command::Evaluate { model, data, split, out } => {
            let (mf, traces, mut d) = model_detector(&model, &data)?;
            let sp = split_for(&traces, &split)?;
            let mut rows = aging_curve(&mut d, &mf.model, &sp)?;
            rows.push(average_row(&rows, "average"));
            let mut echo = model_echo(&model, &data, &mf);
            echo.extend(split_echo(&sp, &split));
            emit(out.as_deref(), &echo, |w| write_metrics_csv(w, &rows))
        }
        Command::Maintain { model, data, split, strategy, t, step, budget, ratio, out } => {
            s.flag("maintain.threshold", t);
            s.flag("maintain.step", step);
            s.flag("maintain.ratio", ratio);
            let cfg = s.experiment()?;
            let (mf, traces, mut d) = model_detector(&model, &data)?;
            let sp = split_for(&traces, &split)?;
            let mut echo = model_echo(&model, &data, &mf);
            echo.extend(split_echo(&sp, &split));
            let ids: Vec<String> = traces.iter().map(|t| t.id.clone()).collect();
            let (mut rows, log) = match strategy {
                Strategy::Threshold => {
                    let r = maintain_to_threshold(&mut d, &sp, cfg.threshold, cfg.step)?;
                    echo.push(("maintain.threshold".into(), cfg.threshold.to_string()));
                    echo.push(("maintain.step".into(), cfg.step.to_string()));
                    echo.push(("labels".into(), r.total_labels().to_string()));
                    echo.push(("retrains".into(), r.retrains.to_string()));
                    (r.after, r.label_log)
                }
                Strategy::Budget => {
                    let b = match budget {
                        Some(n) => Budget::Count(n),
                        None => Budget::Ratio(cfg.budget_ratio),
                    };
                    let r = maintain_with_budget(&mut d, &sp, b)?;
                    echo.push(("maintain.budget".into(), format!("{b:?}")));
                    echo.push(("labels".into(), r.label_log.len().to_string()));
                    (r.rows, r.label_log)
                }
            };
            rows.push(average_row(&rows, "average"));
            save_with(&out, |w| write_metrics_csv(w, &rows))?;
            let mut log_path = out.as_os_str().to_owned();
            log_path.push(".labels.json");
            save_text(Path::new(&log_path), &label_log_json(&log, &ids)?)?;
            save_echo(&out, &echo)
        }
        Command::Stability { model, data, families, out } => {
            let (mf, mut traces, d) = model_detector(&model, &data)?;
            if let Some(list) = &families {
                let keep: BTreeSet<u32> = list
                    .split(',')
                    .map(|f| f.trim().parse().map_err(|_| Error::Usage(format!("bad family id `{f}`"))))
                    .collect::<Result<_>>()?;
                for t in &mut traces {
                    if !keep.contains(&t.family) {
                        t.y = 0;
                    }
                }
            }
            let r = experiment::run_stability(&d, &mf.model, &traces)?;
            let mut echo = model_echo(&model, &data, &mf);
            echo.push(("families".into(), families.unwrap_or_else(|| "all".into())));
            let json = stability_json(&r)?;
            emit(out.as_deref(), &echo, |w| Ok(writeln!(w, "{json}")?))
        }
        Command::Demo { docs, templates, out } => {
            let cfg = s.experiment()?;
            let docs = match &docs {
                Some(p) => parse_doc_corpus(p)?,
                None => read_docs(DEFAULT_DOCS.as_bytes())?,
            };
            let templates = match &templates {
                Some(p) => load_templates(p)?,
                None => read_templates(DEFAULT_TEMPLATES.as_bytes())?,
            };
            let summary = demo(&docs, &templates, &cfg, &out)?;
            print!("{summary}");
            Ok(())
        }
    }
}

fn stats_table(g: &mme_core::kgraph::KnowledgeGraph) -> String {
    let st = graph_stats(g);
    let mut t = String::new();
    let _ = writeln!(t, "{:<14} {:>7}", "entity", "count");
    for k in EntityKind::ALL {
        let _ = writeln!(t, "{:<14} {:>7}", k.as_str(), st.entities[&k]);
    }
    let _ = writeln!(t, "{:<14} {:>7}", "total", st.entity_total());
    let _ = writeln!(t, "{:<14} {:>7}", "relation", "count");
    for r in Relation::ALL {
        let _ = writeln!(t, "{:<14} {:>7}", r.as_str(), st.relations[&r]);
    }
    let _ = writeln!(t, "{:<14} {:>7}", "total", st.relation_total());
    t
}

fn load_data(data: &Data) -> Result<(Vec<ApiTrace>, Option<EmbeddingTable>)> {
    let traces = load_traces(&data.traces)?;
    let table = data.emb.as_deref().map(load_embedding).transpose()?;
    Ok((traces, table))
}

/// Name vectors take their width from the embedding file when one is given.
fn resolve_dim(s: &mut Settings, table: Option<&EmbeddingTable>) -> Result<ExperimentConfig> {
    if let Some(t) = table {
        s.set("kg.dim", t.dim);
    }
    s.experiment()
}

fn model_detector(model: &Path, data: &Data) -> Result<(ModelFile, Vec<ApiTrace>, TraceDetector)> {
    let mf = load_model(model)?;
    let (traces, table) = load_data(data)?;
    let samples = mf.features.samples(table.as_ref(), &traces)?;
    let d = TraceDetector {
        samples,
        encoder: mf.model.encoder.clone(),
        train: mf.model.train.clone(),
    };
    Ok((mf, traces, d))
}

fn split_for(traces: &[ApiTrace], opts: &SplitOpts) -> Result<TemporalSplit> {
    let b = opts.split.bucketing();
    let ts: Vec<_> = traces.iter().map(|t| t.timestamp).collect();
    let train = match &opts.train_period {
        Some(p) => Period::parse(p)?,
        None => Period::of(ts.iter().min().copied().ok_or(mme_core::Error::EmptyDataset)?, b),
    };
    Ok(temporal_split(&ts, train, b)?)
}

fn data_echo(data: &Data) -> Vec<(String, String)> {
    let mut v = paths(&[("traces", &data.traces)]);
    if let Some(e) = &data.emb {
        v.extend(paths(&[("emb", e)]));
    }
    v
}

fn features_echo(f: &FeatureConfig) -> Vec<(String, String)> {
    [
        ("features.names", f.names.as_str().to_string()),
        ("features.dim", f.dim.to_string()),
        ("features.name_seed", f.name_seed.to_string()),
        ("features.args", f.args.to_string()),
        ("hash.bins", f.bins.to_string()),
        ("hash.seed", f.hash_seed.to_string()),
        ("seq.max_len", f.max_len.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn model_echo(model: &Path, data: &Data, mf: &ModelFile) -> Vec<(String, String)> {
    let mut v = paths(&[("model", model)]);
    v.extend(data_echo(data));
    v.extend(features_echo(&mf.features));
    v.push(("encoder.kind".into(), mf.model.encoder.kind.as_str().into()));
    v.push(("train.seed".into(), mf.model.train.seed.to_string()));
    v
}

fn split_echo(sp: &TemporalSplit, opts: &SplitOpts) -> Vec<(String, String)> {
    vec![
        ("split".into(), format!("{:?}", opts.split).to_lowercase()),
        ("train_period".into(), sp.train_period.to_string()),
    ]
}

/// Writes the report to `out` (echo beside it) or to stdout (echo to
/// stderr as comments).
fn emit(out: Option<&Path>, echo: &[(String, String)], f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(p) => {
            save_with(p, f)?;
            save_echo(p, echo)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
            for (k, v) in echo {
                eprintln!("# {k} = {v}");
            }
            Ok(())
        }
    }
}

fn metrics_file(dir: &Path, name: &str, rows: &[MetricsRow]) -> Result<()> {
    let mut all = rows.to_vec();
    all.push(average_row(rows, "average"));
    save_with(&dir.join(name), |w| write_metrics_csv(w, &all))
}

/// Runs both detector flavours on one synthetic world and writes every
/// report into `dir`. Returns the summary table.
pub fn demo(docs: &[mme_core::docmodel::ApiDocRecord], templates: &[RelationTemplate], cfg: &ExperimentConfig, dir: &Path) -> Result<String> {
    let world = build_world(docs, templates, cfg)?;
    save_graph(&dir.join("graph.tsv"), &world.graph)?;
    save_embedding(&dir.join("kg.emb"), &world.table)?;
    save_traces(&dir.join("traces.jsonl"), &world.corpus.traces)?;
    let split = monthly_split(&world.corpus.traces)?;
    let ids: Vec<String> = world.corpus.traces.iter().map(|t| t.id.clone()).collect();

    let mut summary: Vec<(&str, [String; 2])> = Vec::new();
    let mut put = |key: &'static str, i: usize, v: String| match summary.iter_mut().find(|(k, _)| *k == key) {
        Some((_, vals)) => vals[i] = v,
        None => {
            let mut vals = [String::new(), String::new()];
            vals[i] = v;
            summary.push((key, vals));
        }
    };
    for (i, mode) in [Mode::Regular, Mode::Mme].into_iter().enumerate() {
        let m = mode.as_str();
        let mut d = TraceDetector::new(&world, cfg, mode)?;
        let aging = experiment::run_aging(&mut d, &split)?;
        metrics_file(dir, &format!("aging_{m}.csv"), &aging.rows)?;
        let fnr: Vec<f64> = aging.rows.iter().map(|r| r.fnr).collect();
        save_with(&dir.join(format!("fnr_{m}.dat")), |w| write_plot_data(w, &format!("{m} monthly FNR"), &fnr))?;
        let (first, last) = fnr_thirds(&aging.rows);

        let budget = experiment::run_budget(&mut d, &split, cfg)?;
        metrics_file(dir, &format!("budget_{m}.csv"), &budget.rows)?;
        save_text(&dir.join(format!("budget_{m}.labels.json")), &label_log_json(&budget.label_log, &ids)?)?;

        let thr = experiment::run_threshold(&mut d, &split, cfg)?;
        metrics_file(dir, &format!("threshold_{m}.csv"), &thr.after)?;
        save_text(&dir.join(format!("threshold_{m}.labels.json")), &label_log_json(&thr.label_log, &ids)?)?;

        let stab = experiment::run_stability(&d, &aging.model, &world.corpus.traces)?;
        save_text(&dir.join(format!("stability_{m}.json")), &stability_json(&stab)?)?;

        put("aging_fpr", i, aging.average.fpr.to_string());
        put("aging_fnr", i, aging.average.fnr.to_string());
        put("aging_f1", i, aging.average.f1.to_string());
        put("aging_fnr_first_third", i, first.to_string());
        put("aging_fnr_last_third", i, last.to_string());
        put("budget_f1", i, budget.average.f1.to_string());
        put("budget_labels", i, budget.label_log.len().to_string());
        put("threshold_labels", i, thr.total_labels().to_string());
        put("threshold_retrains", i, thr.retrains.to_string());
        put("stability_js", i, stab.mean().to_string());
    }
    let mut table = String::from("metric,regular,mme\n");
    for (k, [r, m]) in &summary {
        let _ = writeln!(table, "{k},{r},{m}");
    }
    save_text(&dir.join("summary.csv"), &table)?;
    save_text(&dir.join("demo.conf"), &echo_text(cfg))?;
    Ok(table)
}
