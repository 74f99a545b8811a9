//! Acceptance run: eight criteria against the bundled fixtures and
//! randomized instances. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Cursor;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use ecn_core::annotate::{
    load_annotations, read_annotations, write_annotations, Annotation, AnnotationFormat, AnnotationSet, LoadOptions,
    Sentiment, Taxonomy, TopicGroup, TopicPath,
};
use ecn_core::appraise::{
    certainty_level, derive_assertion, grade_evidence, sentiment_distribution, topic_distribution, Assertion,
    CertaintyLevel, GradeTopic, Scope, SentimentCounts,
};
use ecn_core::ingest::{
    efetch_and_parse, load_corpus, parse_efetch, parse_esearch, read_corpus, write_corpus, CommentLink, Corpus,
    DrugLexicon, EutilsClient, Fetched, Pmid, Provenance, PubRecord, Transport,
};
use ecn_core::network::{build_ecn, weakly_connected_components, Ecn, Edge, NodeAttrs, NodeKind};
use ecn_core::report::{descriptive_table, graphml_string, import_graphml};
use ecn_core::timeline::{
    first_critical, half_critical_date, lead_months, milestones, months_between, sentiment_series, Guidelines,
    TimelineEvent,
};
use ecn_core::Error;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn p(v: u64) -> Pmid {
    Pmid::new(v).unwrap()
}

fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct PaperData {
    corpus: Corpus,
    annotations: AnnotationSet,
    lexicon: DrugLexicon,
}

fn paper_data() -> Result<PaperData, String> {
    let dir = fixtures().join("paper");
    let full = load_corpus(&dir.join("corpus.jsonl")).map_err(|e| e.to_string())?;
    let corpus = full.analysis_view(false);
    let (annotations, _) = load_annotations(
        &dir.join("annotations.csv"),
        &full,
        &Taxonomy::default(),
        LoadOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok(PaperData {
        corpus,
        annotations,
        lexicon: DrugLexicon::default(),
    })
}

// 1 --------------------------------------------------------------------------

fn descriptive() -> Outcome {
    let d = paper_data()?;
    let expected: [(&str, &str, &str, [usize; 5]); 6] = [
        ("corticosteroid", "2020-02-24 2021-02-18", "2020-03-20 2021-06-01", [17, 72, 56, 19, 16]),
        ("remdesivir", "2020-02-04 2021-03-18", "2020-03-04 2021-04-01", [19, 66, 65, 16, 28]),
        ("HCQ", "2020-02-04 2021-01-28", "2020-03-04 2021-05-27", [56, 207, 190, 61, 45]),
        ("LPV/r", "2003-05-22 2021-01-07", "2020-02-24 2021-03-16", [12, 45, 43, 11, 28]),
        ("ivermectin", "2020-04-03 2021-04-03", "2020-04-16 2021-07-07", [4, 16, 13, 7, 6]),
        ("IL-6 receptor blockers", "2013-06-01 2021-03-18", "2020-03-31 2021-07-08", [45, 98, 96, 38, 18]),
    ];
    let rows = descriptive_table(&d.corpus, &d.lexicon).map_err(|e| e.to_string())?;
    ensure(rows.len() == expected.len(), || format!("{} rows", rows.len()))?;
    let span = |s: &str| {
        let (a, b) = s.split_once(' ').unwrap();
        (date(a), date(b))
    };
    for (row, (drug, ev, cm, counts)) in rows.iter().zip(expected) {
        let got = [
            row.evidence_count,
            row.comment_count,
            row.pair_count,
            row.subgraph_count,
            row.top_subgraph_nodes,
        ];
        ensure(row.drug == drug, || format!("row order: {} vs {drug}", row.drug))?;
        ensure(got == counts, || format!("{drug}: counts {got:?} != {counts:?}"))?;
        let es = row.evidence_timespan.map(|t| (t.start, t.end));
        let cs = row.comment_timespan.map(|t| (t.start, t.end));
        ensure(es == Some(span(ev)), || format!("{drug}: evidence span {es:?}"))?;
        ensure(cs == Some(span(cm)), || format!("{drug}: comment span {cs:?}"))?;
    }
    let unique: BTreeSet<CommentLink> = d.corpus.resolved_links().copied().collect();
    ensure(unique.len() == 427, || format!("{} unique pairs", unique.len()))
}

// 2 --------------------------------------------------------------------------

fn sentiments() -> Outcome {
    use Assertion::{Challenged, Supported};
    let d = paper_data()?;
    let expected = [
        ("corticosteroid", 28, 12, Supported),
        ("remdesivir", 19, 30, Challenged),
        ("HCQ", 62, 94, Challenged),
        ("LPV/r", 9, 25, Challenged),
        ("ivermectin", 4, 7, Challenged),
        ("IL-6 receptor blockers", 48, 25, Supported),
    ];
    for (drug, s, c, assertion) in expected {
        let counts = sentiment_distribution(&d.annotations, &Scope::Drug(drug.into()), &d.corpus, &d.lexicon)
            .map_err(|e| e.to_string())?;
        ensure((counts.supportive, counts.critical) == (s, c), || {
            format!("{drug}: {};{} != {s};{c}", counts.supportive, counts.critical)
        })?;
        let got = derive_assertion(counts);
        ensure(got == assertion, || format!("{drug}: {got} != {assertion}"))?;
    }
    Ok(())
}

// 3 --------------------------------------------------------------------------

fn topics() -> Outcome {
    let d = paper_data()?;
    let dist = topic_distribution(&d.annotations).map_err(|e| e.to_string())?;
    let close = |got: f64, want: f64| (got - want).abs() <= 0.05;
    for (group, want) in [
        (TopicGroup::Methodology, 54.42),
        (TopicGroup::ClinicalThemes, 31.92),
        (TopicGroup::Other, 13.65),
    ] {
        let got = dist.group(group).map_or(0.0, |g| g.percent);
        ensure(close(got, want), || format!("{group}: {got:.3} vs {want}"))?;
    }
    for (tag, want) in [
        ("analysis", 14.04),
        ("intervention", 10.38),
        ("study design", 8.46),
        ("clinical practice related", 11.54),
        ("just mentioned", 8.08),
    ] {
        let got = dist.tag_percent(tag).unwrap_or(0.0);
        ensure(close(got, want), || format!("{tag}: {got:.3} vs {want}"))?;
    }
    let sum: f64 = dist.groups.iter().map(|g| g.percent).sum();
    ensure(close(sum, 100.0), || format!("group percentages sum to {sum}"))
}

// 4 --------------------------------------------------------------------------

fn reachability_oracle(n: usize, edges: &[(usize, usize)]) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            comp.insert(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        out.push(comp);
    }
    out
}

fn components() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..500 {
        let n = rng.gen_range(1..=200);
        let density = [0.0, 0.002, 0.005, 0.01, 0.02, 0.05, 0.2][case % 7];
        let ids: Vec<u64> = {
            let mut v: Vec<u64> = (1..=n as u64 * 3).collect();
            v.shuffle(&mut rng);
            v.truncate(n);
            v
        };
        let mut pairs = BTreeSet::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && rng.gen_bool(density) {
                    pairs.insert((a, b));
                }
            }
        }
        let edges: Vec<(usize, usize)> = pairs.into_iter().collect();
        let nodes: BTreeMap<Pmid, NodeAttrs> = ids
            .iter()
            .map(|&i| {
                (
                    p(i),
                    NodeAttrs {
                        kind: NodeKind::Comment,
                        date: None,
                        title: String::new(),
                    },
                )
            })
            .collect();
        let ecn = Ecn::from_parts(
            nodes,
            edges.iter().map(|&(a, b)| Edge {
                source: p(ids[a]),
                target: p(ids[b]),
                sentiment: None,
            }),
        )
        .map_err(|e| e.to_string())?;
        let got = weakly_connected_components(&ecn);
        let want: BTreeSet<BTreeSet<Pmid>> = reachability_oracle(n, &edges)
            .into_iter()
            .map(|c| c.into_iter().map(|i| p(ids[i])).collect())
            .collect();
        let got_set: BTreeSet<BTreeSet<Pmid>> = got.iter().cloned().collect();
        ensure(got_set == want, || format!("case {case}: partition differs from oracle"))?;
        let covered: usize = got.iter().map(BTreeSet::len).sum();
        ensure(covered == n && got.len() == want.len(), || format!("case {case}: not a partition"))?;
        let order: Vec<(usize, Pmid)> = got.iter().map(|c| (c.len(), *c.first().unwrap())).collect();
        ensure(
            order.windows(2).all(|w| w[0].0 > w[1].0 || (w[0].0 == w[1].0 && w[0].1 < w[1].1)),
            || format!("case {case}: components out of order"),
        )?;
    }
    Ok(())
}

// 5 --------------------------------------------------------------------------

const GRADE_TAGS: [(&str, Option<GradeTopic>); 9] = [
    ("study design", Some(GradeTopic::StudyDesign)),
    ("population", Some(GradeTopic::PopulationData)),
    ("data", Some(GradeTopic::PopulationData)),
    ("analysis", Some(GradeTopic::Analysis)),
    ("clinical practice related", Some(GradeTopic::ClinicalPracticeRelated)),
    ("safety concerns", Some(GradeTopic::AdverseEffect)),
    ("results", None),
    ("just mentioned", None),
    ("biological mechanisms", None),
];

fn topic(tag: &str) -> TopicPath {
    static TAXONOMY: OnceLock<Taxonomy> = OnceLock::new();
    let taxonomy = TAXONOMY.get_or_init(Taxonomy::default);
    TopicPath::new(taxonomy.group_of(tag).unwrap(), tag)
}

fn value(s: Sentiment) -> f64 {
    match s {
        Sentiment::Supportive => 2.0,
        Sentiment::Critical => -2.0,
        Sentiment::Neutral => 0.0,
    }
}

/// Per-topic means and their sum, recomputed from scratch.
fn grade_oracle(rows: &[(Sentiment, Vec<&str>)]) -> (BTreeMap<GradeTopic, f64>, f64) {
    let mut scores = BTreeMap::new();
    for t in GradeTopic::ALL {
        let hits: Vec<f64> = rows
            .iter()
            .filter(|(_, tags)| {
                tags.iter()
                    .any(|tag| GRADE_TAGS.iter().any(|(g, m)| g == tag && *m == Some(t)))
            })
            .map(|(s, _)| value(*s))
            .collect();
        if !hits.is_empty() {
            scores.insert(t, hits.iter().sum::<f64>() / hits.len() as f64);
        }
    }
    let total = scores.values().sum();
    (scores, total)
}

fn grade_corpus(comments: usize) -> Corpus {
    let mut c = Corpus::new();
    c.insert_record(PubRecord::new(p(1), "trial"));
    for i in 0..comments as u64 {
        c.insert_record(PubRecord::new(p(100 + i), "letter"));
        c.push_link(CommentLink::new(p(100 + i), p(1)));
    }
    c
}

fn grade_set(rows: &[(Sentiment, Vec<&str>)]) -> AnnotationSet {
    rows.iter()
        .enumerate()
        .map(|(i, (s, tags))| Annotation {
            comment_pmid: p(100 + i as u64),
            target_pmid: p(1),
            sentiment: *s,
            topics: tags.iter().map(|t| topic(t)).collect(),
        })
        .collect()
}

fn grade_matches_oracle(rows: &[(Sentiment, Vec<&str>)], corpus: &Corpus) -> Result<f64, String> {
    let score = grade_evidence(p(1), &grade_set(rows), corpus).map_err(|e| e.to_string())?;
    let (scores, total) = grade_oracle(rows);
    ensure(score.topic_scores.keys().eq(scores.keys()), || {
        format!("topics {:?} vs {:?}", score.topic_scores.keys(), scores.keys())
    })?;
    for (t, v) in &scores {
        ensure((score.topic_scores[t] - v).abs() < 1e-9, || format!("{t}: {} vs {v}", score.topic_scores[t]))?;
    }
    ensure((score.total - total).abs() < 1e-9, || format!("total {} vs {total}", score.total))?;
    ensure((-10.0..=10.0).contains(&score.total), || format!("total {} out of range", score.total))?;
    ensure(score.level == certainty_level(score.total).unwrap(), || "level mismatch".into())?;
    Ok(score.total)
}

fn grading() -> Outcome {
    use Sentiment::{Critical as C, Supportive as S};
    // worked examples
    let empty = grade_evidence(p(1), &AnnotationSet::new(), &grade_corpus(0)).map_err(|e| e.to_string())?;
    ensure(
        empty.total == 0.0 && empty.level == CertaintyLevel::Moderate && empty.ungraded_basis,
        || format!("no comments: {empty:?}"),
    )?;
    let all_five: Vec<(Sentiment, Vec<&str>)> = ["study design", "data", "analysis", "clinical practice related", "safety concerns"]
        .into_iter()
        .map(|t| (S, vec![t]))
        .collect();
    let total = grade_matches_oracle(&all_five, &grade_corpus(5))?;
    let level = certainty_level(total).unwrap();
    ensure(total == 10.0 && level == CertaintyLevel::High, || format!("all supportive: {total} {level}"))?;
    let mixed = vec![
        (S, vec!["study design"]),
        (C, vec!["study design"]),
        (C, vec!["analysis"]),
        (S, vec!["clinical practice related"]),
    ];
    let total = grade_matches_oracle(&mixed, &grade_corpus(4))?;
    ensure(total == 0.0 && certainty_level(total).unwrap() == CertaintyLevel::Moderate, || {
        format!("mixed example: {total}")
    })?;

    // bundled grade fixture, including a reply that must not count
    let dir = fixtures().join("grade");
    let corpus = load_corpus(&dir.join("corpus.jsonl")).map_err(|e| e.to_string())?;
    let (ann, _) = load_annotations(&dir.join("annotations.csv"), &corpus, &Taxonomy::default(), LoadOptions::default())
        .map_err(|e| e.to_string())?;
    let g = grade_evidence(p(32187464), &ann, &corpus).map_err(|e| e.to_string())?;
    let want = BTreeMap::from([
        (GradeTopic::StudyDesign, 0.0),
        (GradeTopic::Analysis, -2.0),
        (GradeTopic::ClinicalPracticeRelated, 2.0),
    ]);
    ensure(g.topic_scores == want && g.total == 0.0 && g.level == CertaintyLevel::Moderate, || {
        format!("grade fixture: {g:?}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let corpus = grade_corpus(12);
    for case in 0..10_000 {
        let n = rng.gen_range(0..=12);
        let rows: Vec<(Sentiment, Vec<&str>)> = (0..n)
            .map(|_| {
                let s = *Sentiment::ALL.choose(&mut rng).unwrap();
                let k = rng.gen_range(1..=3);
                let tags = GRADE_TAGS.choose_multiple(&mut rng, k).map(|(t, _)| *t).collect();
                (s, tags)
            })
            .collect();
        let total = grade_matches_oracle(&rows, &corpus).map_err(|e| format!("case {case}: {e}"))?;
        let flipped: Vec<_> = rows.iter().map(|(s, t)| (s.flipped(), t.clone())).collect();
        let neg = grade_matches_oracle(&flipped, &corpus).map_err(|e| format!("case {case}: {e}"))?;
        ensure((total + neg).abs() < 1e-9, || format!("case {case}: flip gives {total} and {neg}"))?;
        if rows.iter().all(|(s, _)| *s == S) {
            ensure(total >= 0.0, || format!("case {case}: all supportive but {total}"))?;
        }
        if rows.iter().all(|(s, _)| *s == C) {
            ensure(total <= 0.0, || format!("case {case}: all critical but {total}"))?;
        }

        let counts = SentimentCounts {
            supportive: rng.gen_range(0..50),
            critical: rng.gen_range(0..50),
            neutral: rng.gen_range(0..50),
        };
        let more = SentimentCounts {
            neutral: rng.gen_range(0..500),
            ..counts
        };
        ensure(derive_assertion(counts) == derive_assertion(more), || {
            format!("case {case}: neutral count changed the assertion")
        })?;

        let a = rng.gen_range(-10.0..=10.0);
        let b = rng.gen_range(-10.0..=10.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        ensure(certainty_level(lo).unwrap() <= certainty_level(hi).unwrap(), || {
            format!("case {case}: level not monotone at {lo}, {hi}")
        })?;
    }
    Ok(())
}

// 6 --------------------------------------------------------------------------

fn timeline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let base = date("2020-01-01");
    for case in 0..1000 {
        let n = rng.gen_range(0..60);
        let events: Vec<TimelineEvent> = (0..n)
            .map(|i| TimelineEvent {
                date: base + chrono::Duration::days(rng.gen_range(0..400)),
                comment_pmid: p(i + 1),
                sentiment: *Sentiment::ALL.choose(&mut rng).unwrap(),
            })
            .collect();
        let mut sorted = events.clone();
        sorted.sort();
        let crit = sorted.iter().filter(|e| e.sentiment == Sentiment::Critical).count();
        let half = half_critical_date(&sorted);
        match half {
            None => ensure(crit == 0, || format!("case {case}: no half date with {crit} criticals"))?,
            Some(h) => {
                let k = crit.div_ceil(2);
                let upto = |d: NaiveDate| {
                    sorted
                        .iter()
                        .filter(|e| e.sentiment == Sentiment::Critical && e.date <= d)
                        .count()
                };
                ensure(upto(h) >= k, || format!("case {case}: {} < {k} at {h}", upto(h)))?;
                ensure(upto(h.pred_opt().unwrap()) < k, || format!("case {case}: threshold reached before {h}"))?;
                let f = first_critical(&sorted).unwrap();
                ensure(f <= h, || format!("case {case}: first {f} after half {h}"))?;
            }
        }
        let a = base + chrono::Duration::days(rng.gen_range(0..800));
        let b = base + chrono::Duration::days(rng.gen_range(0..800));
        ensure((months_between(a, b) + months_between(b, a)).abs() < 1e-12, || {
            format!("case {case}: lead not antisymmetric")
        })?;
    }
    let worked = months_between(date("2020-08-15"), date("2020-12-17"));
    ensure((worked - 4.07).abs() <= 0.01, || format!("worked lead {worked}"))?;

    let d = paper_data()?;
    let guidelines = Guidelines::bundled();
    // (drug, months in which the half-way critical date may fall, stated half lead)
    let expected: [(&str, &[&str], f64); 6] = [
        ("corticosteroid", &["2020-06", "2020-07"], 2.5),
        ("remdesivir", &["2020-05", "2020-08"], 4.5),
        ("HCQ", &["2020-07", "2020-08"], 4.5),
        ("LPV/r", &["2020-05"], 7.0),
        ("ivermectin", &["2021-04"], -1.0),
        ("IL-6 receptor blockers", &["2020-11"], 8.0),
    ];
    let mut half_leads = Vec::new();
    let mut first_leads = Vec::new();
    for (drug, months, stated) in expected {
        let series = sentiment_series(&d.annotations, &d.corpus, &d.lexicon, drug).map_err(|e| e.to_string())?;
        let m = milestones(drug, &series, &guidelines);
        let half = m.half_critical.ok_or(format!("{drug}: no half-critical date"))?;
        let month = half.format("%Y-%m").to_string();
        ensure(months.contains(&month.as_str()), || format!("{drug}: half-critical in {month}"))?;
        let lead = m.half_critical_lead.ok_or(format!("{drug}: no guideline"))?;
        ensure((lead - stated).abs() <= 0.5, || format!("{drug}: half lead {lead:.2} vs {stated}"))?;
        let guideline = guidelines.reference(drug).unwrap();
        ensure(lead == lead_months(half, guideline), || format!("{drug}: inconsistent lead"))?;
        half_leads.push(lead);
        first_leads.push(m.first_critical_lead.unwrap());
        if drug == "LPV/r" {
            let f = m.first_critical_lead.unwrap();
            ensure((f - 7.0).abs() <= 0.5, || format!("LPV/r first lead {f:.2}"))?;
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let half_mean = mean(&half_leads);
    ensure((half_mean - 4.25).abs() <= 0.05, || format!("mean half lead {half_mean:.3}"))?;
    let first_mean = mean(&first_leads);
    ensure((first_mean - 8.8).abs() <= 0.05, || format!("mean first lead {first_mean:.3}"))
}

// 7 --------------------------------------------------------------------------

const TITLE_CHARS: &[char] = &[
    'a', 'b', 'Z', '0', '9', ' ', '-', '&', '<', '>', '"', '\'', ',', ';', 'é', 'ß', 'α', '中', '/', ':',
];

fn random_text(rng: &mut ChaCha8Rng, max: usize) -> String {
    let n = rng.gen_range(1..=max);
    let s: String = (0..n).map(|_| *TITLE_CHARS.choose(rng).unwrap()).collect();
    let t = s.trim().to_string();
    if t.is_empty() {
        "x".into()
    } else {
        t
    }
}

fn random_date(rng: &mut ChaCha8Rng) -> Option<NaiveDate> {
    rng.gen_bool(0.8)
        .then(|| date("2019-01-01") + chrono::Duration::days(rng.gen_range(0..1000)))
}

const PUB_TYPES: [&str; 7] = [
    "Journal Article",
    "Letter",
    "Comment",
    "Editorial",
    "Randomized Controlled Trial",
    "Review",
    "Observational Study",
];

fn random_corpus(rng: &mut ChaCha8Rng) -> Corpus {
    let mut c = Corpus::new();
    let n = rng.gen_range(1..40u64);
    for i in 1..=n {
        let mut r = PubRecord::new(p(i * 7), random_text(rng, 40));
        r.abstract_text = rng.gen_bool(0.5).then(|| random_text(rng, 80));
        r.epub_date = random_date(rng);
        r.journal_date = random_date(rng);
        r.journal = random_text(rng, 20);
        let k = rng.gen_range(0..3);
        r.pub_types = PUB_TYPES
            .choose_multiple(rng, k)
            .map(|t| t.to_string())
            .collect();
        r.language = ["eng", "spa", "fre"].choose(rng).unwrap().to_string();
        c.insert_record(r);
    }
    for _ in 0..rng.gen_range(0..60) {
        let s = p(rng.gen_range(1..=n + 3) * 7);
        let t = p(rng.gen_range(1..=n + 3) * 7);
        c.push_link(CommentLink::new(s, t));
    }
    c.mark_dangling();
    if rng.gen_bool(0.5) {
        c.context_only = c.records.keys().copied().filter(|_| rng.gen_bool(0.2)).collect();
    }
    c.provenance = Provenance {
        queries: (0..rng.gen_range(0..3)).map(|_| random_text(rng, 30)).collect(),
        fetched_at: rng.gen_bool(0.5).then(|| "2021-07-21T00:00:00Z".into()),
    };
    c
}

fn random_annotations(rng: &mut ChaCha8Rng, corpus: &Corpus) -> AnnotationSet {
    let taxonomy = Taxonomy::default();
    let all_tags: Vec<TopicPath> = TopicGroup::ALL
        .iter()
        .flat_map(|g| taxonomy.tags(*g).iter().map(|t| TopicPath::new(*g, t.clone())))
        .collect();
    let english = |p: Pmid| corpus.record(p).unwrap().is_english();
    let mut set = AnnotationSet::new();
    for l in corpus.resolved_links() {
        if !english(l.source) || !english(l.target) || set.get(l).is_some() || !rng.gen_bool(0.7) {
            continue;
        }
        let k = rng.gen_range(1..4);
        set.insert(Annotation {
            comment_pmid: l.source,
            target_pmid: l.target,
            sentiment: *Sentiment::ALL.choose(rng).unwrap(),
            topics: all_tags.choose_multiple(rng, k).cloned().collect(),
        })
        .unwrap();
    }
    set
}

fn roundtrips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let taxonomy = Taxonomy::default();
    for case in 0..100 {
        let corpus = random_corpus(&mut rng);
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf).map_err(|e| e.to_string())?;
        let back = read_corpus(Cursor::new(&buf)).map_err(|e| e.to_string())?;
        ensure(back == corpus, || format!("case {case}: corpus changed on reload"))?;

        let ann = random_annotations(&mut rng, &corpus);
        for format in [AnnotationFormat::Csv, AnnotationFormat::JsonLines] {
            let mut buf = Vec::new();
            write_annotations(&ann, format, &mut buf).map_err(|e| e.to_string())?;
            let (back, report) = read_annotations(Cursor::new(&buf), format, &corpus, &taxonomy, LoadOptions::default())
                .map_err(|e| format!("case {case}: {e}"))?;
            ensure(back == ann && report.loaded == ann.len(), || {
                format!("case {case}: annotations changed on reload ({format:?})")
            })?;
        }

        let ecn = build_ecn(&corpus).with_sentiments(&ann);
        let text = graphml_string(&ecn, None);
        let back = import_graphml(&text).map_err(|e| format!("case {case}: {e}"))?;
        ensure(back == ecn, || format!("case {case}: graphml roundtrip differs"))?;
    }
    Ok(())
}

// 8 --------------------------------------------------------------------------

fn xml(name: &str) -> String {
    std::fs::read_to_string(fixtures().join("eutils").join(name)).unwrap()
}

struct OneShot(String);

impl Transport for OneShot {
    fn get(&self, _url: &str) -> ecn_core::Result<Fetched> {
        Ok(Fetched {
            body: self.0.clone(),
            fetched_at: "2021-07-21T00:00:00Z".into(),
        })
    }
}

fn ingest_parsing() -> Outcome {
    let page = parse_esearch(&xml("esearch_ids.xml")).map_err(|e| e.to_string())?;
    ensure(
        page.count == 3 && page.retstart == 0 && page.ids == vec![p(32007143), p(32187464), p(32282022)],
        || format!("esearch ids: {page:?}"),
    )?;
    let empty = parse_esearch(&xml("esearch_empty.xml")).map_err(|e| e.to_string())?;
    ensure(empty.count == 0 && empty.ids.is_empty(), || format!("esearch empty: {empty:?}"))?;
    let truncated = parse_esearch(&xml("esearch_truncated.xml"));
    ensure(matches!(truncated, Err(Error::Parse(_))), || format!("truncated: {truncated:?}"))?;
    let banner = parse_esearch(&xml("esearch_error.xml"));
    ensure(
        matches!(&banner, Err(Error::Remote(m)) if m.contains("unbalanced")),
        || format!("error banner: {banner:?}"),
    )?;

    let (records, links) = parse_efetch(&xml("efetch_articles.xml")).map_err(|e| e.to_string())?;
    ensure(records.len() == 3, || format!("{} records", records.len()))?;
    let want_links = vec![
        CommentLink::new(p(32007143), p(31986264)),
        CommentLink::new(p(32369284), p(32187464)),
    ];
    ensure(links == want_links, || format!("links {links:?}"))?;
    let letter = &records[0];
    ensure(
        letter.pmid == p(32007143)
            && letter.title == "Clinical features of patients infected with 2019 novel coronavirus: a letter."
            && letter.epub_date == Some(date("2020-01-30"))
            && letter.journal_date == Some(date("2020-02-15"))
            && letter.journal == "Lancet (London, England)"
            && letter.abstract_text.as_deref() == Some("First part. Second part.")
            && letter.has_pub_type("Letter")
            && letter.has_pub_type("Comment")
            && letter.is_english(),
        || format!("first record: {letter:?}"),
    )?;
    let trial = &records[1];
    ensure(
        trial.pmid == p(32187464)
            && trial.epub_date == Some(date("2020-03-18"))
            && trial.effective_date() == Some(date("2020-03-18"))
            && trial.has_pub_type("Randomized Controlled Trial"),
        || format!("second record: {trial:?}"),
    )?;
    let review = &records[2];
    ensure(
        review.pmid == p(32282022)
            && review.epub_date.is_none()
            && review.journal_date == Some(date("2020-03-01"))
            && review.effective_date() == Some(date("2020-03-01"))
            && review.language == "spa"
            && !review.is_english(),
        || format!("third record: {review:?}"),
    )?;

    let malformed = parse_efetch(&xml("efetch_malformed.xml"));
    ensure(matches!(malformed, Err(Error::Parse(_))), || format!("malformed: {malformed:?}"))?;

    let client = EutilsClient::new(OneShot(xml("efetch_partial.xml")));
    let batch = efetch_and_parse(&client, &[p(32007143), p(32187464), p(32282022)], 1).map_err(|e| e.to_string())?;
    let got: Vec<Pmid> = batch.records.iter().map(|r| r.pmid).collect();
    ensure(got == vec![p(32007143), p(32282022)], || format!("partial records {got:?}"))?;
    ensure(batch.unresolved == BTreeSet::from([p(32187464)]), || {
        format!("partial unresolved {:?}", batch.unresolved)
    })
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("descriptive table on bundled corpus", descriptive, Duration::from_secs(1)),
        ("per-drug sentiment counts and assertions", sentiments, Duration::from_secs(1)),
        ("topic distribution percentages", topics, Duration::from_secs(1)),
        ("weak components vs reachability oracle (500 graphs)", components, Duration::from_secs(30)),
        ("grading properties (10,000 sets)", grading, Duration::from_secs(10)),
        ("timeline invariants and milestones", timeline, Duration::from_secs(5)),
        ("corpus, annotation and GraphML roundtrips", roundtrips, Duration::from_secs(10)),
        ("E-utilities XML parsing", ingest_parsing, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            ensure(elapsed <= *budget, || {
                format!("took {elapsed:.2?}, budget {budget:?}")
            })
        });
        match outcome {
            Ok(()) => println!("PASS [{}] {name} ({elapsed:.2?})", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL [{}] {name} ({elapsed:.2?}): {e}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
