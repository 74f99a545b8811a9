use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ecn_core::annotate::{load_annotations, AnnotationSet, LoadOptions, Strictness, Taxonomy};
use ecn_core::appraise::{
    count_in, derive_assertion, resolve_scope, topic_distribution, GradeMapping, Grader, Scope, SentimentValues,
};
use ecn_core::ingest::{
    filter_by_drug, load_corpus, save_corpus, CachedTransport, Corpus, DrugLexicon, EutilsClient, HttpTransport, Pmid,
    RateLimiter, Transport, DEFAULT_BASE_URL,
};
use ecn_core::network::{build_ecn, kind_counts, weakly_connected_components, Ecn, NodeKind};
use ecn_core::report::{
    descriptive_table, export_dot, export_graphml, render_summary, table_markdown, write_series_csv,
    write_sentiment_csv, write_table_csv, write_topics_csv,
};
use ecn_core::timeline::{milestones, sentiment_series, Guidelines};
use ecn_core::Error;
use log::info;

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "ecn", version, about = "Evidence-comment network analysis over PubMed comment links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Query PubMed and write a corpus file.
    Fetch(FetchArgs),
    /// Weakly connected subgraphs of a drug's network.
    Components(ComponentsArgs),
    /// Sentiment counts, assertions and topic shares.
    Sentiment(SentimentArgs),
    /// Grade one research article from the comments on it.
    Grade(GradeArgs),
    /// Dated sentiment series and critical-comment milestones.
    Timeline(TimelineArgs),
    /// Descriptive table and per-drug Markdown summaries.
    Report(ReportArgs),
    /// Whole-network export as GraphML or DOT.
    Export(ExportArgs),
}

#[derive(Args)]
struct FetchArgs {
    /// PubMed query; repeat for several.
    #[arg(long = "query", required = true)]
    queries: Vec<String>,
    /// Corpus file to write.
    #[arg(long)]
    out: PathBuf,
    /// Maximum hits kept per query.
    #[arg(long)]
    max: Option<usize>,
    /// Requests per second (defaults to 3, or 10 with an API key).
    #[arg(long)]
    rate: Option<f64>,
    /// Concurrent EFetch batches.
    #[arg(long, default_value_t = 2)]
    workers: usize,
    /// Response cache directory.
    #[arg(long, env = "ECN_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, env = "NCBI_API_KEY", hide_env_values = true)]
    api_key: Option<String>,
    #[arg(long, hide = true, default_value = DEFAULT_BASE_URL)]
    base_url: String,
}

#[derive(Args)]
struct Inputs {
    /// Corpus file written by `fetch`.
    #[arg(long)]
    corpus: PathBuf,
    /// Drug lexicon (JSON: group -> synonyms). Defaults to the bundled one.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Keep non-English records and their annotations.
    #[arg(long)]
    include_non_english: bool,
}

#[derive(Args)]
struct AnnotationInputs {
    /// Annotation file (CSV or JSON Lines).
    #[arg(long)]
    annotations: PathBuf,
    /// Topic taxonomy (JSON). Defaults to the bundled one.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Skip invalid annotation rows instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct ComponentsArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Colour edges by sentiment from this annotation file.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    drug: String,
    /// Number of largest subgraphs to export.
    #[arg(long, default_value_t = 1)]
    top: usize,
    #[arg(long, value_enum, default_value_t = GraphFormat::Graphml)]
    format: GraphFormat,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SentimentArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    annotations: AnnotationInputs,
    /// Drug group; repeat for several. Defaults to every lexicon group.
    #[arg(long = "drug")]
    drugs: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GradeArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    annotations: AnnotationInputs,
    /// PMID of the research article.
    #[arg(long)]
    evidence: Pmid,
    /// Tag-to-grade-topic mapping (JSON). Defaults to the bundled one.
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TimelineArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    annotations: AnnotationInputs,
    #[arg(long = "drug")]
    drugs: Vec<String>,
    /// Guideline releases (JSON). Defaults to the bundled list.
    #[arg(long)]
    guidelines: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    annotations: AnnotationInputs,
    #[arg(long = "drug")]
    drugs: Vec<String>,
    #[arg(long)]
    guidelines: Option<PathBuf>,
    /// Subgraphs listed per summary.
    #[arg(long, default_value_t = 2)]
    top: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Restrict to one drug group.
    #[arg(long)]
    drug: Option<String>,
    #[arg(long, value_enum, default_value_t = GraphFormat::Graphml)]
    format: GraphFormat,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Graphml,
    Dot,
}

impl GraphFormat {
    fn extension(self) -> &'static str {
        match self {
            GraphFormat::Graphml => "graphml",
            GraphFormat::Dot => "dot",
        }
    }
}

type Result<T> = std::result::Result<T, Error>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Fetch(a) => fetch(a),
        Command::Components(a) => components(a),
        Command::Sentiment(a) => sentiment(a),
        Command::Grade(a) => grade(a),
        Command::Timeline(a) => timeline(a),
        Command::Report(a) => report(a),
        Command::Export(a) => export(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { EXIT_IO } else { EXIT_VALIDATION })
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Runs `body` against a buffered file, flushing it afterwards.
fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| io_err(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, |w| w.write_all(text.as_bytes()).map_err(|e| io_err(path, e)))
}

/// File-name friendly form of a drug group name.
fn slug(name: &str) -> String {
    let mut s = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('-') {
            s.push('-');
        }
    }
    s.trim_matches('-').to_string()
}

struct Loaded {
    /// Everything in the corpus file; annotations are validated against it.
    full: Corpus,
    /// What the analysis sees.
    corpus: Corpus,
    lexicon: DrugLexicon,
    include_non_english: bool,
}

impl Inputs {
    fn load(&self) -> Result<Loaded> {
        let full = load_corpus(&self.corpus)?;
        let lexicon = match &self.lexicon {
            Some(p) => DrugLexicon::load(p)?,
            None => DrugLexicon::default(),
        };
        Ok(Loaded {
            corpus: full.analysis_view(self.include_non_english),
            full,
            lexicon,
            include_non_english: self.include_non_english,
        })
    }
}

impl Loaded {
    fn annotations(&self, args: &AnnotationInputs) -> Result<AnnotationSet> {
        let taxonomy = match &args.taxonomy {
            Some(p) => Taxonomy::load(p)?,
            None => Taxonomy::default(),
        };
        self.annotations_from(&args.annotations, &taxonomy, args.lenient)
    }

    fn annotations_from(&self, path: &Path, taxonomy: &Taxonomy, lenient: bool) -> Result<AnnotationSet> {
        let options = LoadOptions {
            strictness: if lenient { Strictness::Lenient } else { Strictness::Strict },
            include_non_english: self.include_non_english,
        };
        let (set, report) = load_annotations(path, &self.full, taxonomy, options)?;
        for issue in report.rejected.iter() {
            log::warn!("row {}: {}", issue.row, issue.message);
        }
        info!("loaded {} of {} annotation rows", report.loaded, report.rows);
        Ok(set)
    }

    fn optional_annotations(&self, path: Option<&Path>) -> Result<Option<AnnotationSet>> {
        path.map(|p| self.annotations_from(p, &Taxonomy::default(), false))
            .transpose()
    }

    /// Canonical group names for `requested`, or every group when empty.
    fn drugs(&self, requested: &[String]) -> Result<Vec<String>> {
        if requested.is_empty() {
            return Ok(self.lexicon.group_names().map(str::to_string).collect());
        }
        requested
            .iter()
            .map(|d| self.lexicon.resolve(d).map(|(name, _)| name.to_string()))
            .collect()
    }

    fn drug_ecn(&self, drug: &str) -> Result<Ecn> {
        let (name, _) = self.lexicon.resolve(drug)?;
        Ok(build_ecn(&filter_by_drug(&self.corpus, &self.lexicon, name)?))
    }
}

fn load_guidelines(path: Option<&Path>) -> Result<Guidelines> {
    match path {
        Some(p) => Guidelines::load(p),
        None => Ok(Guidelines::bundled()),
    }
}

fn write_graph(path: &Path, ecn: &Ecn, annotations: Option<&AnnotationSet>, format: GraphFormat) -> Result<()> {
    write_file(path, |w| match format {
        GraphFormat::Graphml => export_graphml(ecn, annotations, w),
        GraphFormat::Dot => export_dot(ecn, annotations, w),
    })
}

fn fetch(a: FetchArgs) -> Result<()> {
    let limiter = match a.rate {
        Some(r) if !(r.is_finite() && r > 0.0) => {
            return Err(Error::InvalidArgument(format!("--rate must be positive, got {r}")))
        }
        Some(r) => RateLimiter::per_second(r),
        None => RateLimiter::ncbi_default(a.api_key.as_deref().is_some_and(|k| !k.is_empty())),
    };
    let http = HttpTransport::new(limiter)?;
    match &a.cache_dir {
        Some(dir) => fetch_with(CachedTransport::new(http, dir)?, &a),
        None => fetch_with(http, &a),
    }
}

fn fetch_with<T: Transport>(transport: T, a: &FetchArgs) -> Result<()> {
    let client = EutilsClient::new(transport)
        .with_base_url(a.base_url.clone())
        .with_api_key(a.api_key.clone());
    let corpus = client.fetch_corpus(&a.queries, a.max, a.workers.max(1))?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        out_dir(parent)?;
    }
    save_corpus(&corpus, &a.out)?;
    println!(
        "{} records, {} links, {} unresolved -> {}",
        corpus.records.len(),
        corpus.links.len(),
        corpus.unresolved.len(),
        a.out.display()
    );
    Ok(())
}

fn components(a: ComponentsArgs) -> Result<()> {
    let data = a.inputs.load()?;
    let annotations = data.optional_annotations(a.annotations.as_deref())?;
    let (name, _) = data.lexicon.resolve(&a.drug)?;
    let ecn = data.drug_ecn(name)?;
    let comps = weakly_connected_components(&ecn);
    if a.top > comps.len() {
        return Err(Error::InvalidArgument(format!(
            "--top {} exceeds the {} subgraphs of {name}",
            a.top,
            comps.len()
        )));
    }
    out_dir(&a.out)?;
    let stem = slug(name);
    let table = a.out.join(format!("{stem}_components.csv"));
    write_file(&table, |w| {
        writeln!(w, "rank,nodes,pairs,research,comments,members").map_err(|e| io_err(&table, e))?;
        for (i, comp) in comps.iter().enumerate() {
            let sub = ecn.induced(comp);
            let k = kind_counts(&sub);
            let members: Vec<String> = comp.iter().map(Pmid::to_string).collect();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                i + 1,
                sub.node_count(),
                sub.edge_count(),
                k.original_research + k.other_research,
                k.comment,
                members.join(" ")
            )
            .map_err(|e| io_err(&table, e))?;
        }
        Ok(())
    })?;
    for (i, comp) in comps.iter().take(a.top).enumerate() {
        let sub = ecn.induced(comp);
        let path = a.out.join(format!("{stem}_subgraph_{}.{}", i + 1, a.format.extension()));
        write_graph(&path, &sub, annotations.as_ref(), a.format)?;
        println!("subgraph {}: {} nodes, {} pairs -> {}", i + 1, sub.node_count(), sub.edge_count(), path.display());
    }
    Ok(())
}

fn sentiment(a: SentimentArgs) -> Result<()> {
    let data = a.inputs.load()?;
    let annotations = data.annotations(&a.annotations)?;
    let drugs = data.drugs(&a.drugs)?;
    out_dir(&a.out)?;
    let names: Vec<&str> = drugs.iter().map(String::as_str).collect();
    let path = a.out.join("sentiment.csv");
    write_file(&path, |w| write_sentiment_csv(&data.corpus, &data.lexicon, &annotations, &names, w))?;

    let mut in_scope = std::collections::BTreeSet::new();
    for drug in &drugs {
        let members = resolve_scope(&Scope::Drug(drug.clone()), &data.corpus, &data.lexicon)?;
        let c = count_in(&annotations, &members);
        println!(
            "{drug}: supportive {} critical {} neutral {} -> {}",
            c.supportive,
            c.critical,
            c.neutral,
            derive_assertion(c)
        );
        in_scope.extend(members);
    }
    let scoped = annotations.filtered(|x| in_scope.contains(&x.target_pmid));
    if !scoped.is_empty() {
        let dist = topic_distribution(&scoped)?;
        let path = a.out.join("topics.csv");
        write_file(&path, |w| write_topics_csv(&dist, w))?;
    }
    Ok(())
}

fn grade(a: GradeArgs) -> Result<()> {
    let data = a.inputs.load()?;
    let annotations = data.annotations(&a.annotations)?;
    let mapping = match &a.mapping {
        Some(p) => GradeMapping::load(p)?,
        None => GradeMapping::default(),
    };
    let score = Grader::new(mapping, SentimentValues::default()).grade(a.evidence, &annotations, &data.corpus)?;
    let json = serde_json::to_string_pretty(&score)?;
    out_dir(&a.out)?;
    write_text(&a.out.join(format!("grade_{}.json", a.evidence)), &format!("{json}\n"))?;
    println!("{json}");
    Ok(())
}

fn timeline(a: TimelineArgs) -> Result<()> {
    let data = a.inputs.load()?;
    let annotations = data.annotations(&a.annotations)?;
    let guidelines = load_guidelines(a.guidelines.as_deref())?;
    out_dir(&a.out)?;
    let mut all = Vec::new();
    for drug in data.drugs(&a.drugs)? {
        let series = sentiment_series(&annotations, &data.corpus, &data.lexicon, &drug)?;
        let path = a.out.join(format!("{}_series.csv", slug(&drug)));
        write_file(&path, |w| write_series_csv(&drug, &series, w))?;
        let m = milestones(&drug, &series, &guidelines);
        println!(
            "{drug}: first critical {}, half critical {}, half lead {}",
            m.first_critical.map_or("-".into(), |d| d.to_string()),
            m.half_critical.map_or("-".into(), |d| d.to_string()),
            m.half_critical_lead.map_or("-".into(), |l| format!("{l:.2} months")),
        );
        all.push(m);
    }
    let json = serde_json::to_string_pretty(&all)?;
    write_text(&a.out.join("milestones.json"), &format!("{json}\n"))
}

fn report(a: ReportArgs) -> Result<()> {
    let data = a.inputs.load()?;
    let annotations = data.annotations(&a.annotations)?;
    let guidelines = load_guidelines(a.guidelines.as_deref())?;
    let drugs = data.drugs(&a.drugs)?;
    out_dir(&a.out)?;
    let rows = descriptive_table(&data.corpus, &data.lexicon)?;
    let rows: Vec<_> = rows.into_iter().filter(|r| drugs.contains(&r.drug)).collect();
    write_file(&a.out.join("table.csv"), |w| write_table_csv(&rows, w))?;
    let md = table_markdown(&rows);
    write_text(&a.out.join("table.md"), &md)?;
    print!("{md}");
    for drug in &drugs {
        let summary = render_summary(drug, &data.corpus, &data.lexicon, &annotations, &guidelines, a.top)?;
        write_text(&a.out.join(format!("{}_summary.md", slug(drug))), &summary)?;
    }
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    let data = a.inputs.load()?;
    let annotations = data.optional_annotations(a.annotations.as_deref())?;
    let (ecn, stem) = match &a.drug {
        Some(d) => {
            let (name, _) = data.lexicon.resolve(d)?;
            (data.drug_ecn(name)?, format!("{}_ecn", slug(name)))
        }
        None => (build_ecn(&data.corpus), "ecn".to_string()),
    };
    out_dir(&a.out)?;
    let path = a.out.join(format!("{stem}.{}", a.format.extension()));
    write_graph(&path, &ecn, annotations.as_ref(), a.format)?;
    let k = kind_counts(&ecn);
    println!(
        "{} nodes ({} {}, {} {}, {} {}), {} pairs -> {}",
        ecn.node_count(),
        k.original_research,
        NodeKind::OriginalResearch,
        k.other_research,
        NodeKind::OtherResearch,
        k.comment,
        NodeKind::Comment,
        ecn.edge_count(),
        path.display()
    );
    Ok(())
}
