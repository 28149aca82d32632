//! `sumroute` command-line front end.
//!
//! Data goes to the files named by `--out`; progress and diagnostics go to
//! standard error. Exit status is 2 for an invalid config and 1 for any other
//! failure.

mod input;
mod sweep;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sumroute::annotation::normalize_value;
use sumroute::simnet::{
    advertise, build_codebook, build_tree, generate_corpus, run_on_world, sub_seed, SimError, SimParams,
};
use sumroute::sumtree::{serialize_tree, EmbeddingSet};
use sumroute::AttrId;

use crate::input::InputArgs;
use crate::sweep::{run_sweep, Plan};

#[derive(Debug, Parser)]
#[command(name = "sumroute", version, about = "Routing-table summarization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the summarization tree of one attribute and write it to a file.
    BuildTree(BuildTreeArgs),
    /// Run one experiment and write metrics as JSON and CSV.
    Run(RunArgs),
    /// Run every point of a sweep plan.
    Sweep(SweepArgs),
    /// Write every node's routing table after advertisement.
    DumpRt(DumpRtArgs),
    /// Write the generated corpus and its keyword vectors.
    GenCorpus(GenCorpusArgs),
}

#[derive(Debug, Args)]
struct BuildTreeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Plain keyword list, one per line, used instead of a corpus.
    #[arg(long, conflicts_with = "corpus")]
    keywords: Option<PathBuf>,
    /// Attribute name; defaults to the first attribute.
    #[arg(long)]
    attr: Option<String>,
    /// alph, hash or meaning; defaults to the config's policy.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    c: Option<u8>,
    /// Hash depth; 0 picks the smallest that fits.
    #[arg(long)]
    d: Option<u16>,
    #[arg(long)]
    extra_levels: Option<u8>,
    #[arg(long)]
    n_char: Option<u16>,
    /// Tree file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory for metrics.json and metrics.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep plan (TOML).
    #[arg(long)]
    plan: PathBuf,
    /// Overrides the base config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Output directory; overrides the plan's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DumpRtArgs {
    #[command(flatten)]
    input: InputArgs,
    /// TSV file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenCorpusArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for corpus.tsv and embeddings.txt.
    #[arg(long)]
    out: PathBuf,
}

fn write(path: &Path, data: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, data).with_context(|| format!("cannot write {}", path.display()))
}

fn build_tree_cmd(args: &BuildTreeArgs) -> Result<()> {
    let cfg = args.input.config()?;
    let mut policy = cfg.policy.clone();
    if let Some(name) = &args.policy {
        policy.name = name.parse().map_err(|_| anyhow!("unknown policy `{name}`"))?;
    }
    policy.c = args.c.unwrap_or(policy.c);
    policy.d = args.d.unwrap_or(policy.d);
    policy.extra_levels = args.extra_levels.unwrap_or(policy.extra_levels);
    policy.n_char = args.n_char.unwrap_or(policy.n_char);

    let pick = |names: &[String]| -> Result<(AttrId, String)> {
        match &args.attr {
            None => names
                .first()
                .map(|n| (0, n.clone()))
                .ok_or_else(|| anyhow!("the corpus has no attributes")),
            Some(a) => names
                .iter()
                .position(|n| n == a)
                .map(|i| (i as AttrId, a.clone()))
                .ok_or_else(|| anyhow!("unknown attribute `{a}`")),
        }
    };
    let mut embeddings = args.input.embeddings()?;
    let (attr, name, keywords) = if let Some(path) = &args.keywords {
        let mut kws: Vec<String> = input::read(path)?
            .lines()
            .map(normalize_value)
            .filter(|k| !k.is_empty())
            .collect();
        kws.sort_unstable();
        kws.dedup();
        (0, args.attr.clone().unwrap_or_else(|| "keyword".into()), kws)
    } else if let Some(ds) = args.input.dataset()? {
        let (attr, name) = pick(ds.registry.names())?;
        (attr, name, ds.keywords(attr))
    } else {
        let corpus = generate_corpus(&cfg.corpus, sub_seed(cfg.seed, "corpus"));
        let (attr, name) = pick(corpus.dataset.registry.names())?;
        embeddings.get_or_insert(corpus.embeddings);
        let kws = corpus.vocabulary.get(&attr).cloned().unwrap_or_default();
        (attr, name, kws)
    };
    if keywords.is_empty() {
        bail!("attribute `{name}` has no keywords");
    }
    eprintln!("building {} tree over {} keywords", policy.name, keywords.len());
    let embeddings = embeddings.unwrap_or_else(|| EmbeddingSet::fallback(&keywords));
    let tree = build_tree(attr, &keywords, &policy, &embeddings, cfg.seed)?
        .ok_or_else(|| anyhow!("policy `none` has no tree"))?;
    write(&args.out, serialize_tree(&tree))?;
    println!("attribute\t{name}");
    println!("policy\t{}", policy.name);
    println!("keywords\t{}", tree.keyword_count());
    println!("depth\t{}", tree.depth());
    println!("code_length\t{}", tree.code_length());
    println!("nodes\t{}", tree.node_count());
    Ok(())
}

fn run_cmd(args: &RunArgs) -> Result<()> {
    let cfg = args.input.require_config()?;
    eprintln!("generating world ({} nodes)", cfg.network.nodes);
    let world = args.input.world(&cfg)?;
    eprintln!("simulating {} and baseline {}", cfg.policy.name, cfg.baseline);
    let report = run_on_world(&cfg, &world)?;
    let mut json = serde_json::to_string_pretty(&report.to_json())?;
    json.push('\n');
    write(&args.out.join("metrics.json"), json)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(report.field_names())?;
    w.write_record(report.fields())?;
    write(&args.out.join("metrics.csv"), w.into_inner()?)?;
    Ok(())
}

fn sweep_cmd(args: &SweepArgs) -> Result<()> {
    let plan = Plan::parse(&input::read(&args.plan)?, args.seed)?;
    let out = args
        .out
        .clone()
        .or_else(|| plan.out.clone())
        .ok_or_else(|| anyhow!("no output directory: pass --out or set `out` in the plan"))?;
    let shared = InputArgs {
        config: None,
        seed: None,
        corpus: args.corpus.clone(),
        embeddings: args.embeddings.clone(),
    };
    run_sweep(&plan, shared.dataset()?.as_ref(), shared.embeddings()?.as_ref(), &out)
}

fn dump_rt_cmd(args: &DumpRtArgs) -> Result<()> {
    let cfg = args.input.require_config()?;
    let world = args.input.world(&cfg)?;
    let book = build_codebook(&world, &cfg.policy, cfg.seed)?;
    let nodes = advertise(&world, &book, &SimParams::from_policy(&cfg.policy, cfg.bounds.b_ad)?)?;
    let names = world.dataset.registry.names();
    let mut out = String::from("node\tattr\tcode\tneighbor\n");
    for node in &nodes {
        let mut rows: Vec<(&str, String, u32)> = node
            .table
            .entries()
            .map(|(code, slot)| {
                let attr = book.attr(code) as usize;
                (names[attr].as_str(), book.code(code).to_string(), node.neighbors()[slot as usize])
            })
            .collect();
        rows.sort();
        for (attr, code, nb) in rows {
            writeln!(out, "{}\t{attr}\t{code}\t{nb}", node.id)?;
        }
    }
    write(&args.out, out)
}

fn gen_corpus_cmd(args: &GenCorpusArgs) -> Result<()> {
    let input = InputArgs {
        config: args.config.clone(),
        seed: args.seed,
        corpus: None,
        embeddings: None,
    };
    let cfg = input.config()?;
    let corpus = generate_corpus(&cfg.corpus, sub_seed(cfg.seed, "corpus"));
    write(&args.out.join("corpus.tsv"), corpus.dataset.to_string())?;
    write(&args.out.join("embeddings.txt"), corpus.embeddings.to_string())?;
    eprintln!(
        "{} streams, {} keywords",
        corpus.dataset.streams.len(),
        corpus.vocabulary.values().map(Vec::len).sum::<usize>()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::BuildTree(a) => build_tree_cmd(a),
        Command::Run(a) => run_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::DumpRt(a) => dump_rt_cmd(a),
        Command::GenCorpus(a) => gen_corpus_cmd(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<SimError>(), Some(SimError::ConfigInvalid { .. })));
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}
