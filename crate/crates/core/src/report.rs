//! Descriptive tables, per-drug summaries, plotting series and graph exports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;

use crate::annotate::{coverage_ratio, AnnotationSet, Sentiment};
use crate::appraise::{count_in, derive_assertion, grade_evidence, topic_distribution, TopicDistribution};
use crate::error::{Error, Result};
use crate::ingest::{filter_by_drug, CommentLink, Corpus, DrugLexicon, Pmid};
use crate::network::{build_ecn, weakly_connected_components, Ecn, Edge, NodeAttrs, NodeKind};
use crate::timeline::{milestones, series_for, Guidelines, SentimentSeries};

pub const COLOR_SUPPORTIVE: &str = "#2ca02c";
pub const COLOR_CRITICAL: &str = "#d62728";
pub const COLOR_NEUTRAL: &str = "#7f7f7f";

const EMPTY_CELL: &str = "—";

pub fn sentiment_color(s: Option<Sentiment>) -> &'static str {
    match s {
        Some(Sentiment::Supportive) => COLOR_SUPPORTIVE,
        Some(Sentiment::Critical) => COLOR_CRITICAL,
        Some(Sentiment::Neutral) | None => COLOR_NEUTRAL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Timespan {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Timespan {
    fn over(dates: impl IntoIterator<Item = NaiveDate>) -> Option<Timespan> {
        dates.into_iter().fold(None, |acc, d| match acc {
            None => Some(Timespan { start: d, end: d }),
            Some(t) => Some(Timespan {
                start: t.start.min(d),
                end: t.end.max(d),
            }),
        })
    }
}

fn span_cell(span: Option<Timespan>) -> String {
    match span {
        Some(t) => format!("{} to {}", t.start, t.end),
        None => EMPTY_CELL.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DescriptiveRow {
    pub drug: String,
    pub evidence_timespan: Option<Timespan>,
    pub comment_timespan: Option<Timespan>,
    pub evidence_count: usize,
    pub comment_count: usize,
    pub pair_count: usize,
    pub subgraph_count: usize,
    pub top_subgraph_nodes: usize,
}

/// One row per drug over the drug-filtered network.
///
/// Evidence is every record that receives a comment (including commented
/// comments); comments are every comment-kind node, whether or not its
/// target resolved. Undated records count but do not widen the spans.
/// Callers wanting English-only figures pass [`Corpus::analysis_view`].
pub fn descriptive_row(corpus: &Corpus, lexicon: &DrugLexicon, drug: &str) -> Result<DescriptiveRow> {
    let (name, _) = lexicon.resolve(drug)?;
    let ecn = build_ecn(&filter_by_drug(corpus, lexicon, name)?);
    let evidence: BTreeSet<Pmid> = ecn.edges().iter().map(|e| e.target).collect();
    let comments: Vec<&NodeAttrs> = ecn.nodes().values().filter(|a| a.kind == NodeKind::Comment).collect();
    let components = weakly_connected_components(&ecn);
    Ok(DescriptiveRow {
        drug: name.to_string(),
        evidence_timespan: Timespan::over(evidence.iter().filter_map(|p| ecn.node(*p).and_then(|a| a.date))),
        comment_timespan: Timespan::over(comments.iter().filter_map(|a| a.date)),
        evidence_count: evidence.len(),
        comment_count: comments.len(),
        pair_count: ecn.edge_count(),
        subgraph_count: components.len(),
        top_subgraph_nodes: components.get(1).map_or(0, BTreeSet::len),
    })
}

pub fn descriptive_table(corpus: &Corpus, lexicon: &DrugLexicon) -> Result<Vec<DescriptiveRow>> {
    lexicon.group_names().map(|g| descriptive_row(corpus, lexicon, g)).collect()
}

const TABLE_HEADER: [&str; 8] = [
    "drug",
    "evidence_timespan",
    "comment_timespan",
    "evidence",
    "comments",
    "pairs",
    "subgraphs",
    "top_subgraph_nodes",
];

fn row_cells(r: &DescriptiveRow) -> [String; 8] {
    [
        r.drug.clone(),
        span_cell(r.evidence_timespan),
        span_cell(r.comment_timespan),
        r.evidence_count.to_string(),
        r.comment_count.to_string(),
        r.pair_count.to_string(),
        r.subgraph_count.to_string(),
        r.top_subgraph_nodes.to_string(),
    ]
}

pub fn write_table_csv<W: Write>(rows: &[DescriptiveRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for r in rows {
        w.write_record(row_cells(r))?;
    }
    w.flush().map_err(|e| Error::io("<table>", e))
}

pub fn table_markdown(rows: &[DescriptiveRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| {} |", TABLE_HEADER.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(TABLE_HEADER.len()));
    for r in rows {
        let _ = writeln!(s, "| {} |", row_cells(r).join(" | "));
    }
    s
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\r' => out.push_str("&#13;"),
            // not representable in XML 1.0
            c if (c as u32) < 0x20 && c != '\n' && c != '\t' => out.push('\u{FFFD}'),
            c => out.push(c),
        }
    }
    out
}

fn edge_sentiment(e: &Edge, annotations: Option<&AnnotationSet>) -> Option<Sentiment> {
    match annotations {
        Some(a) => a.sentiment_of(&e.link()),
        None => e.sentiment,
    }
}

/// GraphML 1.0 document; edge sentiments come from `annotations` when
/// given, otherwise from the edges themselves.
pub fn export_graphml<W: Write>(ecn: &Ecn, annotations: Option<&AnnotationSet>, mut out: W) -> Result<()> {
    out.write_all(graphml_string(ecn, annotations).as_bytes())
        .map_err(|e| Error::io("<graphml>", e))
}

pub fn graphml_string(ecn: &Ecn, annotations: Option<&AnnotationSet>) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    for (id, target, name) in [
        ("kind", "node", "kind"),
        ("label", "node", "label"),
        ("date", "node", "date"),
        ("title", "node", "title"),
        ("sentiment", "edge", "sentiment"),
        ("color", "edge", "color"),
    ] {
        let _ = writeln!(s, "  <key id=\"{id}\" for=\"{target}\" attr.name=\"{name}\" attr.type=\"string\"/>");
    }
    s.push_str("  <graph id=\"ecn\" edgedefault=\"directed\">\n");
    for (p, a) in ecn.nodes() {
        let _ = writeln!(s, "    <node id=\"n{p}\">");
        let _ = writeln!(s, "      <data key=\"kind\">{}</data>", a.kind);
        let _ = writeln!(s, "      <data key=\"label\">{p}</data>");
        if let Some(d) = a.date {
            let _ = writeln!(s, "      <data key=\"date\">{d}</data>");
        }
        let _ = writeln!(s, "      <data key=\"title\">{}</data>", xml_escape(&a.title));
        s.push_str("    </node>\n");
    }
    for e in ecn.edges() {
        let sentiment = edge_sentiment(e, annotations);
        let _ = writeln!(s, "    <edge source=\"n{}\" target=\"n{}\">", e.source, e.target);
        if let Some(v) = sentiment {
            let _ = writeln!(s, "      <data key=\"sentiment\">{v}</data>");
        }
        let _ = writeln!(s, "      <data key=\"color\">{}</data>", sentiment_color(sentiment));
        s.push_str("    </edge>\n");
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

fn graphml_pmid(id: &str) -> Result<Pmid> {
    id.strip_prefix('n')
        .ok_or_else(|| Error::Parse(format!("unexpected node id {id:?}")))?
        .parse()
}

fn data_values<'a>(node: roxmltree::Node<'a, 'a>) -> BTreeMap<&'a str, String> {
    node.children()
        .filter(|c| c.has_tag_name("data"))
        .filter_map(|c| Some((c.attribute("key")?, c.text().unwrap_or("").to_string())))
        .collect()
}

/// Reads a document produced by [`export_graphml`].
pub fn import_graphml(text: &str) -> Result<Ecn> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::Parse(format!("graphml: {e}")))?;
    let graph = doc
        .descendants()
        .find(|n| n.has_tag_name("graph"))
        .ok_or_else(|| Error::Parse("graphml has no graph element".into()))?;
    let mut nodes = BTreeMap::new();
    let mut edges = Vec::new();
    for n in graph.children().filter(|n| n.is_element()) {
        let data = data_values(n);
        match n.tag_name().name() {
            "node" => {
                let pmid = graphml_pmid(n.attribute("id").unwrap_or_default())?;
                let kind = NodeKind::parse(data.get("kind").map_or("", String::as_str))?;
                let date = data
                    .get("date")
                    .map(|d| d.parse::<NaiveDate>())
                    .transpose()
                    .map_err(|e| Error::Parse(format!("graphml date: {e}")))?;
                let attrs = NodeAttrs {
                    kind,
                    date,
                    title: data.get("title").cloned().unwrap_or_default(),
                };
                if nodes.insert(pmid, attrs).is_some() {
                    return Err(Error::Parse(format!("graphml repeats node {pmid}")));
                }
            }
            "edge" => {
                let end = |a: &str| graphml_pmid(n.attribute(a).unwrap_or_default());
                edges.push(Edge {
                    source: end("source")?,
                    target: end("target")?,
                    sentiment: data.get("sentiment").map(|s| s.parse()).transpose()?,
                });
            }
            _ => {}
        }
    }
    Ecn::from_parts(nodes, edges).map_err(|e| Error::Parse(format!("graphml: {e}")))
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace(['\n', '\r'], " ")
}

fn dot_shape(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::OriginalResearch => "box",
        NodeKind::OtherResearch => "diamond",
        NodeKind::Comment => "ellipse",
    }
}

pub fn dot_string(ecn: &Ecn, annotations: Option<&AnnotationSet>) -> String {
    let mut s = String::from("digraph ecn {\n");
    for (p, a) in ecn.nodes() {
        let _ = writeln!(
            s,
            "  \"{p}\" [label=\"{p}\", shape={}, tooltip=\"{}\"];",
            dot_shape(a.kind),
            dot_escape(&a.title)
        );
    }
    for e in ecn.edges() {
        let sentiment = edge_sentiment(e, annotations);
        let _ = writeln!(
            s,
            "  \"{}\" -> \"{}\" [color=\"{}\", label=\"{}\"];",
            e.source,
            e.target,
            sentiment_color(sentiment),
            sentiment.map_or("", Sentiment::as_str)
        );
    }
    s.push_str("}\n");
    s
}

pub fn export_dot<W: Write>(ecn: &Ecn, annotations: Option<&AnnotationSet>, mut out: W) -> Result<()> {
    out.write_all(dot_string(ecn, annotations).as_bytes())
        .map_err(|e| Error::io("<dot>", e))
}

/// Per-drug sentiment counts, one CSV row per drug.
pub fn write_sentiment_csv<W: Write>(
    corpus: &Corpus,
    lexicon: &DrugLexicon,
    annotations: &AnnotationSet,
    drugs: &[&str],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["drug", "supportive", "critical", "neutral", "total", "assertion"])?;
    for drug in drugs {
        let scope = filter_by_drug(corpus, lexicon, drug)?;
        let members: BTreeSet<Pmid> = scope.records.keys().copied().collect();
        let c = count_in(annotations, &members);
        w.write_record([
            drug.to_string(),
            c.supportive.to_string(),
            c.critical.to_string(),
            c.neutral.to_string(),
            c.total().to_string(),
            derive_assertion(c).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<sentiment>", e))
}

/// Level-1 and level-2 shares, one row per tag plus one per group.
pub fn write_topics_csv<W: Write>(dist: &TopicDistribution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "group", "tag", "count", "percent"])?;
    for g in &dist.groups {
        w.write_record(["1", g.group.as_str(), "", &g.count.to_string(), &format!("{:.2}", g.percent)])?;
        for t in &g.tags {
            w.write_record(["2", g.group.as_str(), &t.tag, &t.count.to_string(), &format!("{:.2}", t.percent)])?;
        }
    }
    w.flush().map_err(|e| Error::io("<topics>", e))
}

/// Dated events with running critical count, for timespan plots.
pub fn write_series_csv<W: Write>(drug: &str, series: &SentimentSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["drug", "date", "comment_pmid", "sentiment", "cumulative_critical"])?;
    let mut critical = 0;
    for e in &series.events {
        if e.sentiment == Sentiment::Critical {
            critical += 1;
        }
        w.write_record([
            drug,
            &e.date.to_string(),
            &e.comment_pmid.to_string(),
            e.sentiment.as_str(),
            &critical.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<series>", e))
}

fn fmt_opt_date(d: Option<NaiveDate>) -> String {
    d.map_or_else(|| EMPTY_CELL.to_string(), |d| d.to_string())
}

fn fmt_opt_months(m: Option<f64>) -> String {
    m.map_or_else(|| EMPTY_CELL.to_string(), |m| format!("{m:.2}"))
}

/// Markdown summary for one drug: coverage, sentiment and assertion, the
/// `top_k` largest subgraphs with grades of their research articles, and
/// critical-comment milestones against the reference guideline.
pub fn render_summary(
    drug: &str,
    corpus: &Corpus,
    lexicon: &DrugLexicon,
    annotations: &AnnotationSet,
    guidelines: &Guidelines,
    top_k: usize,
) -> Result<String> {
    let (name, _) = lexicon.resolve(drug)?;
    let scope = filter_by_drug(corpus, lexicon, name)?;
    let ecn = build_ecn(&scope);
    let members: BTreeSet<Pmid> = scope.records.keys().copied().collect();
    let pairs: BTreeSet<CommentLink> = ecn.edges().iter().map(Edge::link).collect();
    let annotated = pairs.iter().filter(|p| annotations.get(p).is_some()).count();
    let counts = count_in(annotations, &members);

    let mut s = String::new();
    let _ = writeln!(s, "# {name}\n");
    let _ = writeln!(
        s,
        "Annotation coverage: {annotated}/{} pairs ({:.1}%)\n",
        pairs.len(),
        100.0 * coverage_ratio(annotated, pairs.len())
    );

    s.push_str("## Sentiment\n\n");
    let _ = writeln!(
        s,
        "| supportive | critical | neutral |\n|---|---|---|\n| {} | {} | {} |\n",
        counts.supportive, counts.critical, counts.neutral
    );
    if counts.total() > 0 {
        let _ = writeln!(s, "Assertion: {}\n", derive_assertion(counts));
    } else {
        s.push_str("No annotations; assertion omitted.\n\n");
    }

    if let Ok(topics) = topic_distribution(&annotations.filtered(|a| members.contains(&a.target_pmid))) {
        s.push_str("## Topics\n\n| group | share |\n|---|---|\n");
        for g in &topics.groups {
            let _ = writeln!(s, "| {} | {:.2}% |", g.group, g.percent);
        }
        s.push('\n');
    }

    let components = weakly_connected_components(&ecn);
    let _ = writeln!(s, "## Subgraphs\n\n{} subgraphs in total.\n", components.len());
    for (rank, comp) in components.iter().take(top_k).enumerate() {
        let sub = ecn.induced(comp);
        let _ = writeln!(
            s,
            "### Subgraph {} ({} nodes, {} pairs)\n",
            rank + 1,
            sub.node_count(),
            sub.edge_count()
        );
        s.push_str("| evidence | kind | comments | total | level |\n|---|---|---|---|---|\n");
        for (p, a) in sub.nodes().iter().filter(|(_, a)| a.kind != NodeKind::Comment) {
            let g = grade_evidence(*p, annotations, &scope)?;
            let _ = writeln!(
                s,
                "| {p} | {} | {} | {:.2} | {}{} |",
                a.kind,
                g.comments,
                g.total,
                g.level,
                if g.ungraded_basis { " (ungraded basis)" } else { "" }
            );
        }
        s.push('\n');
    }

    let series = series_for(annotations, corpus, &members);
    let m = milestones(name, &series, guidelines);
    s.push_str("## Timeline\n\n");
    match &m.guideline {
        Some(g) => {
            let _ = writeln!(s, "Guideline: version {} released {} ({:?})\n", g.version, g.release_date, g.polarity);
        }
        None => s.push_str("Guideline: none configured\n\n"),
    }
    let _ = writeln!(
        s,
        "| milestone | date | lead months |\n|---|---|---|\n| first critical | {} | {} |\n| half critical | {} | {} |\n",
        fmt_opt_date(m.first_critical),
        fmt_opt_months(m.first_critical_lead),
        fmt_opt_date(m.half_critical),
        fmt_opt_months(m.half_critical_lead)
    );
    let _ = writeln!(
        s,
        "{} dated events, {} critical, {} undated.",
        m.events, m.critical, m.undated
    );
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{Annotation, Taxonomy, TopicPath};
    use crate::ingest::PubRecord;

    fn p(v: u64) -> Pmid {
        Pmid::new(v).unwrap()
    }

    fn small() -> Corpus {
        let mut c = Corpus::new();
        let mut a = PubRecord::new(p(1), "Remdesivir trial & <results>");
        a.pub_types.insert("Randomized Controlled Trial".into());
        a.epub_date = "2020-04-29".parse().ok();
        c.insert_record(a);
        let mut b = PubRecord::new(p(2), "Remdesivir \"letter\"");
        b.pub_types.insert("Letter".into());
        b.epub_date = "2020-05-10".parse().ok();
        c.insert_record(b);
        let mut r = PubRecord::new(p(3), "Review of remdesivir");
        r.pub_types.insert("Review".into());
        c.insert_record(r);
        c.push_link(CommentLink::new(p(2), p(1)));
        c
    }

    fn critical_on(c: u64, t: u64) -> AnnotationSet {
        [Annotation {
            comment_pmid: p(c),
            target_pmid: p(t),
            sentiment: Sentiment::Critical,
            topics: vec![TopicPath::new(Taxonomy::default().group_of("analysis").unwrap(), "analysis")],
        }]
        .into_iter()
        .collect()
    }

    #[test]
    fn row_for_small_corpus() {
        let r = descriptive_row(&small(), &DrugLexicon::default(), "remdesivir").unwrap();
        assert_eq!(
            (r.evidence_count, r.comment_count, r.pair_count, r.subgraph_count, r.top_subgraph_nodes),
            (1, 1, 1, 2, 2)
        );
        assert_eq!(r.evidence_timespan.unwrap().start.to_string(), "2020-04-29");
    }

    #[test]
    fn empty_scope_renders_dashes() {
        let r = descriptive_row(&small(), &DrugLexicon::default(), "ivermectin").unwrap();
        assert_eq!((r.evidence_count, r.comment_count, r.pair_count, r.top_subgraph_nodes), (0, 0, 0, 0));
        let md = table_markdown(std::slice::from_ref(&r));
        assert!(md.contains("| ivermectin | — | — | 0 | 0 | 0 | 0 | 0 |"), "{md}");
        let mut buf = Vec::new();
        write_table_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("drug,evidence_timespan"));
        assert!(text.contains("ivermectin,—,—,0,0,0,0,0"));
    }

    #[test]
    fn graphml_colors_and_roundtrip() {
        let ecn = build_ecn(&small());
        let ann = critical_on(2, 1);
        let doc = graphml_string(&ecn, Some(&ann));
        assert!(doc.contains("<data key=\"color\">#d62728</data>"));
        assert!(graphml_string(&ecn, None).contains("#7f7f7f"));
        let back = import_graphml(&doc).unwrap();
        assert_eq!(back, ecn.with_sentiments(&ann));
        assert_eq!(import_graphml(&graphml_string(&ecn, None)).unwrap(), ecn);
        assert!(import_graphml("<graphml>").is_err());
    }

    #[test]
    fn dot_statements() {
        let mut c = Corpus::new();
        c.insert_record(PubRecord::new(p(7), "x"));
        let lone = dot_string(&build_ecn(&c), None);
        assert_eq!(lone.matches("shape=").count(), 1);
        assert!(!lone.contains("->"));

        let ecn = build_ecn(&small());
        let dot = dot_string(&ecn, Some(&critical_on(2, 1)));
        assert!(dot.contains("\"2\" -> \"1\""));
        assert!(dot.contains("shape=box") && dot.contains("shape=ellipse") && dot.contains("shape=diamond"));
        let parsed = dot_parser::ast::Graph::try_from(dot.as_str()).expect("valid DOT");
        let canon = dot_parser::canonical::Graph::from(parsed);
        assert_eq!(canon.nodes.set.len(), 3);
        assert_eq!(canon.edges.set.len(), 1);
    }

    #[test]
    fn summary_mentions_assertion_and_is_deterministic() {
        let c = small();
        let lex = DrugLexicon::default();
        let g = Guidelines::bundled();
        let s = render_summary("remdesivir", &c, &lex, &critical_on(2, 1), &g, 1).unwrap();
        assert!(s.contains("Assertion: Challenged"));
        assert!(s.contains("| first critical | 2020-05-10 |"));
        assert_eq!(s, render_summary("remdesivir", &c, &lex, &critical_on(2, 1), &g, 1).unwrap());
        let none = render_summary("remdesivir", &c, &lex, &AnnotationSet::new(), &g, 1).unwrap();
        assert!(none.contains("(0.0%)") && none.contains("assertion omitted"));
    }

    #[test]
    fn series_csv_accumulates() {
        let c = small();
        let s = series_for(&critical_on(2, 1), &c, &BTreeSet::from([p(1)]));
        let mut buf = Vec::new();
        write_series_csv("remdesivir", &s, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "drug,date,comment_pmid,sentiment,cumulative_critical\nremdesivir,2020-05-10,2,critical,1\n"
        );
    }
}
