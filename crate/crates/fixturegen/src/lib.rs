//! Builds the bundled fixtures: a synthetic six-drug corpus with annotations
//! whose aggregates match the published descriptive, sentiment, topic and
//! timeline figures, plus a small corpus for the grading example.
//!
//! Everything is derived from a fixed seed, so regeneration is byte-stable.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use ecn_core::annotate::{save_annotations, Annotation, AnnotationSet, Sentiment, Taxonomy, TopicPath};
use ecn_core::ingest::{save_corpus, CommentLink, Corpus, Pmid, Provenance, PubRecord};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use Sentiment::{Critical as C, Neutral as N, Supportive as S};

const SEED: u64 = 20210721;
const RESEARCH_FLOOR: &str = "2020-01-06";
const RESEARCH_CEILING: &str = "2020-11-30";

pub const QUERIES: [&str; 2] = [
    "(Covid-19[MeSH] OR Covid-19[Title/Abstract]) and hascommentin",
    "(Covid-19[MeSH] OR Covid-19[Title/Abstract]) and hascommenton",
];

fn d(s: &str) -> NaiveDate {
    s.parse().expect("valid date literal")
}

fn pmid(v: u64) -> Pmid {
    Pmid::new(v).expect("positive")
}

struct Ids {
    next: u64,
    next_dangling: u64,
}

impl Ids {
    fn take(&mut self) -> Pmid {
        self.next += 1;
        pmid(self.next)
    }

    fn dangling(&mut self) -> Pmid {
        self.next_dangling += 1;
        pmid(self.next_dangling)
    }
}

#[derive(Clone)]
struct Node {
    pmid: Pmid,
    title: String,
    types: Vec<&'static str>,
    research: bool,
    lang: &'static str,
    /// Set up front for pinned records and for sources of critical edges.
    fixed: Option<NaiveDate>,
    date: Option<NaiveDate>,
}

#[derive(Clone, Copy, PartialEq)]
enum Target {
    Local(usize),
    Dangling(Pmid),
}

#[derive(Clone)]
struct Edge {
    src: usize,
    dst: Target,
    sentiment: Option<Sentiment>,
    prescribed: bool,
    crit_ok: bool,
    /// Non-English comment: present in the corpus, absent from analysis.
    foreign: bool,
}

#[derive(Default)]
struct Graph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

struct Words {
    drug: &'static str,
    label: &'static str,
}

const DESIGNS: [&str; 6] = [
    "Randomized trial",
    "Observational cohort study",
    "Open-label trial",
    "Retrospective analysis",
    "Case series",
    "Multicentre trial",
];

const COMMENT_HEADS: [&str; 8] = [
    "Concerns about",
    "Reconsidering",
    "Questions on",
    "In defence of",
    "A note on",
    "Caution with",
    "Further thoughts on",
    "Interpreting evidence on",
];

impl Graph {
    fn research(&mut self, ids: &mut Ids, rng: &mut ChaCha8Rng, w: &Words) -> usize {
        let n = self.nodes.len();
        let other = rng.gen_bool(0.15);
        let (title, types) = if other {
            (
                format!("Review of {} for COVID-19 ({} {n})", w.drug, w.label),
                vec!["Journal Article", "Review"],
            )
        } else {
            let design = DESIGNS[rng.gen_range(0..DESIGNS.len())];
            let tag = match design {
                "Randomized trial" | "Multicentre trial" => "Randomized Controlled Trial",
                "Open-label trial" => "Clinical Trial",
                "Case series" => "Case Reports",
                _ => "Observational Study",
            };
            (
                format!("{design} of {} in COVID-19 ({} {n})", w.drug, w.label),
                vec!["Journal Article", tag],
            )
        };
        self.push(ids, title, types, true)
    }

    fn named_research(&mut self, ids: &mut Ids, title: &str, types: Vec<&'static str>) -> usize {
        self.push(ids, title.to_string(), types, true)
    }

    fn comment(&mut self, ids: &mut Ids, rng: &mut ChaCha8Rng, w: &Words) -> usize {
        let n = self.nodes.len();
        let head = COMMENT_HEADS[rng.gen_range(0..COMMENT_HEADS.len())];
        let types = match rng.gen_range(0..10) {
            0..=5 => vec!["Letter"],
            6..=8 => vec!["Comment", "Letter"],
            _ => vec!["Editorial"],
        };
        self.push(ids, format!("{head} {} in COVID-19 ({} {n})", w.drug, w.label), types, false)
    }

    fn push(&mut self, ids: &mut Ids, title: String, types: Vec<&'static str>, research: bool) -> usize {
        self.nodes.push(Node {
            pmid: ids.take(),
            title,
            types,
            research,
            lang: "eng",
            fixed: None,
            date: None,
        });
        self.nodes.len() - 1
    }

    fn link(&mut self, src: usize, dst: usize, crit_ok: bool) -> usize {
        self.edges.push(Edge {
            src,
            dst: Target::Local(dst),
            sentiment: None,
            prescribed: false,
            crit_ok,
            foreign: false,
        });
        self.edges.len() - 1
    }

    fn prescribe(&mut self, edge: usize, s: Sentiment) {
        self.edges[edge].sentiment = Some(s);
        self.edges[edge].prescribed = true;
    }

    fn link_dangling(&mut self, ids: &mut Ids, src: usize) {
        self.edges.push(Edge {
            src,
            dst: Target::Dangling(ids.dangling()),
            sentiment: None,
            prescribed: false,
            crit_ok: false,
            foreign: false,
        });
    }

    /// A research article with `direct` comments; the first `replies.len()`
    /// comments receive that many replies each.
    fn star(&mut self, ids: &mut Ids, rng: &mut ChaCha8Rng, w: &Words, direct: usize, replies: &[usize], late: bool) -> usize {
        let r = self.research(ids, rng, w);
        self.comments_on(ids, rng, w, r, direct, replies, late);
        r
    }

    #[allow(clippy::too_many_arguments)]
    fn comments_on(
        &mut self,
        ids: &mut Ids,
        rng: &mut ChaCha8Rng,
        w: &Words,
        target: usize,
        direct: usize,
        replies: &[usize],
        late: bool,
    ) {
        assert!(replies.len() <= direct);
        for i in 0..direct {
            let c = self.comment(ids, rng, w);
            let has_replies = i < replies.len();
            self.link(c, target, !late && !has_replies);
            if has_replies {
                for _ in 0..replies[i] {
                    let r = self.comment(ids, rng, w);
                    self.link(r, c, !late);
                }
            }
        }
    }

    /// A letter on an unresolvable article, with replies. Returns the last reply.
    fn tree(&mut self, ids: &mut Ids, rng: &mut ChaCha8Rng, w: &Words, replies: usize) -> usize {
        let root = self.comment(ids, rng, w);
        self.link_dangling(ids, root);
        let mut last = root;
        for _ in 0..replies {
            last = self.comment(ids, rng, w);
            self.link(last, root, true);
        }
        last
    }

    fn isolated(&mut self, ids: &mut Ids, rng: &mut ChaCha8Rng, w: &Words) -> usize {
        let c = self.comment(ids, rng, w);
        self.link_dangling(ids, c);
        c
    }

    fn pin(&mut self, node: usize, date: NaiveDate) {
        self.nodes[node].fixed = Some(date);
        for e in self.edges.iter_mut().filter(|e| e.src == node) {
            e.crit_ok = false;
        }
    }

    fn annotated(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| matches!(e.dst, Target::Local(_)) && !e.foreign)
    }

    fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for (_, e) in self.annotated() {
            c[sentiment_index(e.sentiment.expect("sentiment assigned"))] += 1;
        }
        c
    }

    fn critical_dates(&self) -> Vec<NaiveDate> {
        self.annotated()
            .filter(|(_, e)| e.sentiment == Some(C))
            .map(|(_, e)| self.nodes[e.src].fixed.expect("critical source is dated"))
            .collect()
    }
}

fn sentiment_index(s: Sentiment) -> usize {
    match s {
        Sentiment::Supportive => 0,
        Sentiment::Critical => 1,
        Sentiment::Neutral => 2,
    }
}

struct DrugSpec {
    words: Words,
    evidence: (NaiveDate, NaiveDate),
    comments: (NaiveDate, NaiveDate),
    first_critical: NaiveDate,
    half_critical: NaiveDate,
    /// Last admissible date for a critical comment.
    critical_limit: NaiveDate,
    /// Supportive, critical, neutral over the whole drug scope.
    totals: [usize; 3],
}

fn days_between(rng: &mut ChaCha8Rng, lo: NaiveDate, hi: NaiveDate) -> NaiveDate {
    assert!(lo <= hi, "empty date range {lo}..{hi}");
    lo + Duration::days(rng.gen_range(0..=(hi - lo).num_days()))
}

/// Chooses sentiments for unprescribed edges, dates critical edges so the
/// first and half-way critical dates land where specified, then dates every
/// remaining record consistently with its links.
fn settle(g: &mut Graph, spec: &DrugSpec, shared: &[&Graph], rng: &mut ChaCha8Rng) {
    let mut want = spec.totals;
    for s in shared {
        for (i, n) in s.counts().iter().enumerate() {
            want[i] -= n;
        }
    }
    for (_, e) in g.annotated().filter(|(_, e)| e.prescribed) {
        want[sentiment_index(e.sentiment.unwrap())] -= 1;
    }

    let mut eligible: Vec<usize> = g
        .annotated()
        .filter(|(_, e)| !e.prescribed && e.crit_ok)
        .map(|(i, _)| i)
        .collect();
    eligible.shuffle(rng);
    assert!(eligible.len() >= want[1], "{}: too few critical candidates", spec.words.label);
    for &i in &eligible[..want[1]] {
        g.edges[i].sentiment = Some(C);
    }
    let mut rest: Vec<usize> = g
        .annotated()
        .filter(|(_, e)| e.sentiment.is_none())
        .map(|(i, _)| i)
        .collect();
    assert_eq!(rest.len(), want[0] + want[2], "{}: non-critical budget", spec.words.label);
    rest.shuffle(rng);
    for (j, &i) in rest.iter().enumerate() {
        g.edges[i].sentiment = Some(if j < want[0] { S } else { N });
    }

    // critical schedule
    let shared_crit: Vec<NaiveDate> = shared.iter().flat_map(|s| s.critical_dates()).collect();
    let total = spec.totals[1];
    let k = total.div_ceil(2);
    let h = spec.half_critical;
    let before_sh = shared_crit.iter().filter(|x| **x < h).count();
    let after_sh = shared_crit.iter().filter(|x| **x > h).count();
    assert_eq!(before_sh + after_sh, shared_crit.len());
    let own_before = k - 1 - before_sh;
    let own_after = total - k - after_sh;
    let mut dates = Vec::new();
    let f = spec.first_critical;
    let shared_first = shared_crit.iter().min().copied();
    if shared_first == Some(f) {
        for _ in 0..own_before {
            dates.push(days_between(rng, f, h - Duration::days(1)));
        }
    } else {
        assert!(shared_first.is_none_or(|s| s > f) && own_before >= 1);
        dates.push(f);
        for _ in 1..own_before {
            dates.push(days_between(rng, f + Duration::days(1), h - Duration::days(1)));
        }
    }
    dates.push(h);
    for _ in 0..own_after {
        dates.push(days_between(rng, h + Duration::days(1), spec.critical_limit));
    }
    let mut crit: Vec<usize> = g
        .annotated()
        .filter(|(_, e)| e.sentiment == Some(C))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(crit.len(), dates.len(), "{}: critical schedule", spec.words.label);
    crit.shuffle(rng);
    for (i, date) in crit.into_iter().zip(dates) {
        let src = g.edges[i].src;
        assert!(g.nodes[src].fixed.is_none());
        g.nodes[src].fixed = Some(date);
    }

    assign_dates(g, spec, rng);
}

fn assign_dates(g: &mut Graph, spec: &DrugSpec, rng: &mut ChaCha8Rng) {
    let n = g.nodes.len();
    let mut commenters: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut targets: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &g.edges {
        if let Target::Local(t) = e.dst {
            commenters[t].push(e.src);
            targets[e.src].push(t);
        }
    }
    // Earliest date any record downstream is committed to.
    let mut cap: Vec<Option<NaiveDate>> = vec![None; n];
    loop {
        let mut changed = false;
        for v in 0..n {
            let c = commenters[v]
                .iter()
                .filter_map(|&c| match (g.nodes[c].fixed, cap[c]) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                })
                .min();
            if c != cap[v] {
                cap[v] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let (es, ee) = spec.evidence;
    let (cs, ce) = spec.comments;
    loop {
        let mut progress = false;
        for v in 0..n {
            if g.nodes[v].date.is_some() || targets[v].iter().any(|&t| g.nodes[t].date.is_none()) {
                continue;
            }
            let after = targets[v].iter().map(|&t| g.nodes[t].date.unwrap()).max();
            let node = &g.nodes[v];
            let is_evidence = !commenters[v].is_empty();
            let date = if let Some(fixed) = node.fixed {
                fixed
            } else if node.research {
                let lo = es.max(d(RESEARCH_FLOOR));
                let hi = ee.min(d(RESEARCH_CEILING));
                match cap[v] {
                    Some(c) => {
                        let top = (c - Duration::days(7)).clamp(es, hi);
                        let bottom = (c - Duration::days(45)).clamp(lo.min(top), top);
                        days_between(rng, bottom, top)
                    }
                    None => days_between(rng, lo, hi),
                }
            } else {
                let lo = after.map_or(cs, |a| a.max(cs));
                let mut hi = ce;
                if is_evidence {
                    hi = hi.min(ee);
                }
                match cap[v] {
                    Some(c) => days_between(rng, lo, hi.min(c)),
                    None => days_between(rng, lo, hi.min(lo + Duration::days(150))),
                }
            };
            if let Some(a) = after {
                assert!(date >= a, "{}: record {} predates its target", spec.words.label, node.pmid);
            }
            if node.research || is_evidence {
                assert!((es..=ee).contains(&date), "{}: evidence date {date} out of span", spec.words.label);
            }
            if !node.research && node.lang == "eng" {
                assert!((cs..=ce).contains(&date), "{}: comment date {date} out of span", spec.words.label);
            }
            g.nodes[v].date = Some(date);
            progress = true;
        }
        if !progress {
            break;
        }
    }
    assert!(g.nodes.iter().all(|x| x.date.is_some()));
}

/// Remdesivir and LPV/r share one 28-node component.
fn shared_antiviral(ids: &mut Ids) -> Graph {
    let mut g = Graph::default();
    let grein = g.named_research(
        ids,
        "Compassionate use of remdesivir after lopinavir-ritonavir in severe COVID-19",
        vec!["Journal Article", "Multicenter Study"],
    );
    let cao = g.named_research(
        ids,
        "Randomized trial of lopinavir-ritonavir in adults hospitalized with severe COVID-19, with remdesivir discussed",
        vec!["Journal Article", "Randomized Controlled Trial"],
    );
    g.nodes[grein].fixed = Some(d("2020-04-10"));
    g.nodes[cao].fixed = Some(d("2020-03-18"));
    let letter = |g: &mut Graph, ids: &mut Ids, n: usize, date: &str| {
        let c = g.push(
            ids,
            format!("Letter on remdesivir and lopinavir-ritonavir trials (shared {n})"),
            vec!["Letter"],
            false,
        );
        g.nodes[c].fixed = Some(d(date));
        c
    };
    let bridge = g.push(
        ids,
        "Immunodeficiency and antivirals: a review-type comment on remdesivir and lopinavir-ritonavir".into(),
        vec!["Journal Article", "Review"],
        false,
    );
    g.nodes[bridge].fixed = Some(d("2020-04-22"));
    let e = g.link(bridge, grein, false);
    g.prescribe(e, S);
    let e = g.link(bridge, cao, false);
    g.prescribe(e, N);

    let grein_critics = ["2020-06-11", "2020-06-24", "2020-07-15", "2020-08-10", "2020-08-28", "2020-09-16", "2020-10-21"];
    let mut first_critic = None;
    for (i, date) in grein_critics.iter().enumerate() {
        let c = letter(&mut g, ids, i, date);
        first_critic.get_or_insert(c);
        let e = g.link(c, grein, false);
        g.prescribe(e, C);
    }
    let reply = letter(&mut g, ids, 7, "2020-07-02");
    let e = g.link(reply, first_critic.unwrap(), false);
    g.prescribe(e, S);

    let cao_comments: [(&str, Sentiment); 17] = [
        ("2020-05-07", C),
        ("2020-05-09", C),
        ("2020-05-11", C),
        ("2020-05-13", C),
        ("2020-05-15", C),
        ("2020-05-17", C),
        ("2020-05-19", C),
        ("2020-04-02", S),
        ("2020-04-20", S),
        ("2020-03-25", N),
        ("2020-04-05", N),
        ("2020-04-15", N),
        ("2020-04-28", N),
        ("2020-06-02", N),
        ("2020-06-20", N),
        ("2020-08-12", N),
        ("2020-10-05", N),
    ];
    for (i, (date, s)) in cao_comments.iter().enumerate() {
        let c = letter(&mut g, ids, 8 + i, date);
        let e = g.link(c, cao, false);
        g.prescribe(e, *s);
    }
    for v in 0..g.nodes.len() {
        g.nodes[v].date = g.nodes[v].fixed;
    }
    g
}

/// Corticosteroid and IL-6 receptor blockers share one ten-node star.
fn shared_immunomodulator(ids: &mut Ids) -> Graph {
    let mut g = Graph::default();
    let r = g.named_research(
        ids,
        "Tocilizumab with dexamethasone in hyperinflammatory COVID-19: a cohort study",
        vec!["Journal Article", "Observational Study"],
    );
    g.nodes[r].fixed = Some(d("2020-07-01"));
    let comments: [(&str, Sentiment); 9] = [
        ("2020-07-20", C),
        ("2020-08-15", C),
        ("2020-07-08", S),
        ("2020-07-25", S),
        ("2020-08-02", S),
        ("2020-09-10", S),
        ("2020-10-14", S),
        ("2020-07-12", N),
        ("2020-11-20", N),
    ];
    for (i, (date, s)) in comments.iter().enumerate() {
        let c = g.push(
            ids,
            format!("Tocilizumab and dexamethasone together: comment {i}"),
            vec!["Letter"],
            false,
        );
        g.nodes[c].fixed = Some(d(date));
        let e = g.link(c, r, false);
        g.prescribe(e, *s);
    }
    for v in 0..g.nodes.len() {
        g.nodes[v].date = g.nodes[v].fixed;
    }
    g
}

fn corticosteroid(ids: &mut Ids, rng: &mut ChaCha8Rng, shared: &Graph) -> Graph {
    let spec = DrugSpec {
        words: Words {
            drug: "dexamethasone",
            label: "corticosteroid",
        },
        evidence: (d("2020-02-24"), d("2021-02-18")),
        comments: (d("2020-03-20"), d("2021-06-01")),
        first_critical: d("2020-05-10"),
        half_critical: d("2020-06-17"),
        critical_limit: d("2020-09-01"),
        totals: [28, 12, 16],
    };
    let w = &spec.words;
    let mut g = Graph::default();
    let top = g.star(ids, rng, w, 10, &[3, 2], false);
    g.pin(top, spec.evidence.0);
    let late = g.star(ids, rng, w, 5, &[1], true);
    g.pin(late, spec.evidence.1);
    for r in [4, 3, 3, 3, 2, 2, 2, 2, 2, 2, 1] {
        g.tree(ids, rng, w, r);
    }
    let first = g.isolated(ids, rng, w);
    g.pin(first, spec.comments.0);
    let last = g.isolated(ids, rng, w);
    g.pin(last, spec.comments.1);
    for _ in 0..3 {
        g.isolated(ids, rng, w);
    }
    settle(&mut g, &spec, &[shared], rng);
    g
}

fn remdesivir(ids: &mut Ids, rng: &mut ChaCha8Rng, shared: &Graph) -> Graph {
    let spec = DrugSpec {
        words: Words {
            drug: "remdesivir",
            label: "remdesivir",
        },
        evidence: (d("2020-02-04"), d("2021-03-18")),
        comments: (d("2020-03-04"), d("2021-04-01")),
        first_critical: d("2020-03-17"),
        half_critical: d("2020-08-03"),
        critical_limit: d("2021-03-31"),
        totals: [19, 30, 16],
    };
    let w = &spec.words;
    let mut g = Graph::default();
    let wang = g.named_research(
        ids,
        "Remdesivir in adults with severe COVID-19: a randomised, double-blind, placebo-controlled, multicentre trial",
        vec!["Journal Article", "Randomized Controlled Trial", "Multicenter Study"],
    );
    for s in [S, S, C, N, N, N] {
        let c = g.comment(ids, rng, w);
        let e = g.link(c, wang, true);
        g.prescribe(e, s);
    }
    let direct = [5, 4, 3, 3, 2, 2, 2, 2, 1, 1, 1, 1];
    for (i, n) in direct.iter().enumerate() {
        let replies: &[usize] = if i < 2 { &[1] } else { &[] };
        let late = i == direct.len() - 1;
        let r = g.star(ids, rng, w, *n, replies, late);
        if i == 0 {
            g.pin(r, spec.evidence.0);
        }
        if late {
            g.pin(r, spec.evidence.1);
        }
    }
    let last = g.tree(ids, rng, w, 3);
    g.pin(last, spec.comments.1);
    let first = g.isolated(ids, rng, w);
    g.pin(first, spec.comments.0);
    settle(&mut g, &spec, &[shared], rng);
    g
}

fn hcq(ids: &mut Ids, rng: &mut ChaCha8Rng) -> Graph {
    let spec = DrugSpec {
        words: Words {
            drug: "hydroxychloroquine",
            label: "HCQ",
        },
        evidence: (d("2020-02-04"), d("2021-01-28")),
        comments: (d("2020-03-04"), d("2021-05-27")),
        first_critical: d("2020-03-04"),
        half_critical: d("2020-07-31"),
        critical_limit: d("2021-05-26"),
        totals: [62, 94, 34],
    };
    let w = &spec.words;
    let mut g = Graph::default();
    let hub: Vec<usize> = (0..5).map(|_| g.research(ids, rng, w)).collect();
    for targets in [&[0usize, 1, 4][..], &[1, 2], &[2, 3]] {
        let bridge = g.comment(ids, rng, w);
        for &t in targets {
            g.link(bridge, hub[t], false);
        }
    }
    for (i, &r) in hub.iter().enumerate() {
        let replies: &[usize] = if i < 2 { &[1] } else { &[] };
        g.comments_on(ids, rng, w, r, 7, replies, false);
    }
    let mut direct = vec![10, 9, 8, 7, 6, 6, 5, 5, 5, 4, 4, 4, 4, 4];
    direct.extend([3; 4]);
    direct.extend([2; 14]);
    direct.extend([1; 7]);
    assert_eq!((direct.len(), direct.iter().sum::<usize>()), (39, 128));
    let reply_plan: [&[usize]; 4] = [&[2], &[2], &[1], &[1]];
    for (i, n) in direct.iter().enumerate() {
        let replies = reply_plan.get(i).copied().unwrap_or(&[]);
        let late = i == direct.len() - 1;
        let r = g.star(ids, rng, w, *n, replies, late);
        if i == 0 {
            g.pin(r, spec.evidence.0);
        }
        if late {
            g.pin(r, spec.evidence.1);
        }
    }
    for r in [3, 2, 2, 2, 2, 1] {
        g.tree(ids, rng, w, r);
    }
    let first = g.isolated(ids, rng, w);
    g.pin(first, spec.comments.0);
    let last = g.isolated(ids, rng, w);
    g.pin(last, spec.comments.1);
    for _ in 0..13 {
        g.isolated(ids, rng, w);
    }
    settle(&mut g, &spec, &[], rng);
    g
}

fn lpv(ids: &mut Ids, rng: &mut ChaCha8Rng, shared: &Graph) -> Graph {
    let spec = DrugSpec {
        words: Words {
            drug: "lopinavir-ritonavir",
            label: "LPV/r",
        },
        evidence: (d("2003-05-22"), d("2021-01-07")),
        comments: (d("2020-02-24"), d("2021-03-16")),
        first_critical: d("2020-05-07"),
        half_critical: d("2020-05-20"),
        critical_limit: d("2021-03-15"),
        totals: [9, 25, 9],
    };
    let w = &spec.words;
    let mut g = Graph::default();
    let lim = g.research(ids, rng, w);
    for _ in 0..2 {
        let c = g.comment(ids, rng, w);
        let e = g.link(c, lim, true);
        g.prescribe(e, C);
    }
    let direct = [3, 2, 2, 2, 1, 1];
    for (i, n) in direct.iter().enumerate() {
        let replies: &[usize] = if i == 0 { &[1] } else { &[] };
        let late = i == direct.len() - 1;
        let r = if i == 0 {
            let r = g.named_research(
                ids,
                "Role of lopinavir-ritonavir in the treatment of SARS: initial virological and clinical findings",
                vec!["Journal Article", "Clinical Trial"],
            );
            g.comments_on(ids, rng, w, r, *n, replies, false);
            r
        } else {
            g.star(ids, rng, w, *n, replies, late)
        };
        if i == 0 {
            g.pin(r, spec.evidence.0);
        }
        if late {
            g.pin(r, spec.evidence.1);
        }
    }
    g.tree(ids, rng, w, 2);
    let first = g.isolated(ids, rng, w);
    g.pin(first, spec.comments.0);
    let last = g.isolated(ids, rng, w);
    g.pin(last, spec.comments.1);
    settle(&mut g, &spec, &[shared], rng);
    g
}

fn ivermectin(ids: &mut Ids, rng: &mut ChaCha8Rng) -> Graph {
    let spec = DrugSpec {
        words: Words {
            drug: "ivermectin",
            label: "ivermectin",
        },
        evidence: (d("2020-04-03"), d("2021-04-03")),
        comments: (d("2020-04-16"), d("2021-07-07")),
        first_critical: d("2020-05-31"),
        half_critical: d("2021-04-30"),
        critical_limit: d("2021-07-06"),
        totals: [4, 7, 2],
    };
    let w = &spec.words;
    let mut g = Graph::default();
    let caly = g.named_research(
        ids,
        "The FDA-approved drug ivermectin inhibits the replication of SARS-CoV-2 in vitro",
        vec!["Journal Article"],
    );
    g.pin(caly, spec.evidence.0);
    for s in [S, S, S, N, C] {
        let c = g.comment(ids, rng, w);
        let e = g.link(c, caly, true);
        g.prescribe(e, s);
    }
    for (i, date) in ["2020-06-15", "2020-07-02"].iter().enumerate() {
        let c = g.push(ids, format!("Ivermectin y COVID-19: carta al editor ({i})"), vec!["Letter"], false);
        g.nodes[c].lang = "spa";
        g.nodes[c].fixed = Some(d(date));
        let e = g.link(c, caly, false);
        g.prescribe(e, C);
        g.edges[e].foreign = true;
    }
    let rajter = g.named_research(
        ids,
        "Use of ivermectin is associated with lower mortality in hospitalized patients with COVID-19",
        vec!["Journal Article", "Observational Study"],
    );
    for _ in 0..3 {
        let c = g.comment(ids, rng, w);
        let e = g.link(c, rajter, true);
        g.prescribe(e, C);
    }
    g.star(ids, rng, w, 3, &[], false);
    let late = g.star(ids, rng, w, 2, &[], true);
    g.pin(late, spec.evidence.1);
    let first = g.isolated(ids, rng, w);
    g.pin(first, spec.comments.0);
    let last = g.isolated(ids, rng, w);
    g.pin(last, spec.comments.1);
    g.isolated(ids, rng, w);
    settle(&mut g, &spec, &[], rng);
    g
}

fn il6(ids: &mut Ids, rng: &mut ChaCha8Rng, shared: &Graph) -> Graph {
    let spec = DrugSpec {
        words: Words {
            drug: "tocilizumab",
            label: "IL-6 receptor blockers",
        },
        evidence: (d("2013-06-01"), d("2021-03-18")),
        comments: (d("2020-03-31"), d("2021-07-08")),
        first_critical: d("2020-05-24"),
        half_critical: d("2020-11-06"),
        critical_limit: d("2021-07-05"),
        totals: [48, 25, 23],
    };
    let w = &spec.words;
    let mut g = Graph::default();
    let xu = g.named_research(
        ids,
        "Effective treatment of severe COVID-19 patients with tocilizumab",
        vec!["Journal Article"],
    );
    let luo = g.named_research(
        ids,
        "Tocilizumab treatment in COVID-19: a single center experience",
        vec!["Journal Article", "Case Reports"],
    );
    let yang = g.comment(ids, rng, w);
    g.link(yang, xu, false);
    let reply = g.comment(ids, rng, w);
    g.link(reply, yang, false);
    g.link(reply, luo, false);
    g.comments_on(ids, rng, w, xu, 8, &[], false);
    g.comments_on(ids, rng, w, luo, 6, &[], false);

    let mut direct = vec![6, 4, 3, 3, 3, 3];
    direct.extend([2; 10]);
    direct.extend([1; 17]);
    assert_eq!((direct.len(), direct.iter().sum::<usize>()), (33, 59));
    let reply_plan: [&[usize]; 6] = [&[2], &[2], &[1], &[1], &[1], &[1]];
    for (i, n) in direct.iter().enumerate() {
        let replies = reply_plan.get(i).copied().unwrap_or(&[]);
        let late = i == direct.len() - 1;
        let r = if i == 0 {
            let r = g.named_research(
                ids,
                "Tocilizumab in rheumatoid arthritis: long-term safety follow-up of an IL-6 receptor antagonist",
                vec!["Journal Article", "Clinical Trial"],
            );
            g.comments_on(ids, rng, w, r, *n, replies, false);
            r
        } else {
            g.star(ids, rng, w, *n, replies, late)
        };
        if i == 0 {
            g.pin(r, spec.evidence.0);
        }
        if late {
            g.pin(r, spec.evidence.1);
        }
    }
    g.tree(ids, rng, w, 1);
    let last = g.tree(ids, rng, w, 2);
    g.pin(last, spec.comments.1);
    let first = g.isolated(ids, rng, w);
    g.pin(first, spec.comments.0);
    settle(&mut g, &spec, &[shared], rng);
    g
}

/// Level-2 tag counts over all topic occurrences, in assignment order.
const TOPIC_PLAN: [(&str, usize); 27] = [
    ("analysis", 146),
    ("clinical practice related", 120),
    ("intervention", 108),
    ("study design", 88),
    ("just mentioned", 84),
    ("biological mechanisms", 52),
    ("clinical evidence related", 38),
    ("population", 32),
    ("data", 32),
    ("models", 32),
    ("outcomes", 32),
    ("results", 32),
    ("discussion", 32),
    ("generalizability", 32),
    ("ethical issues", 22),
    ("diagnosis", 16),
    ("treatment & drug", 16),
    ("safety concerns", 16),
    ("dosage issues", 16),
    ("drug interactions", 16),
    ("alternative treatment", 16),
    ("animal model", 16),
    ("genetic issues", 10),
    ("evidence-based medicine", 10),
    ("enlightenment", 9),
    ("critical thinking", 9),
    ("other issues", 8),
];

pub struct PaperFixture {
    pub corpus: Corpus,
    pub annotations: AnnotationSet,
}

/// The six-drug corpus with raw links (shared components appear once per
/// drug, so they are repeated) and one annotation per comment link.
pub fn paper_fixture() -> PaperFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ids = Ids {
        next: 90_000_000,
        next_dangling: 99_000_000,
    };
    let antiviral = shared_antiviral(&mut ids);
    let immuno = shared_immunomodulator(&mut ids);
    let drugs: Vec<(Graph, Vec<&Graph>)> = vec![
        (corticosteroid(&mut ids, &mut rng, &immuno), vec![&immuno]),
        (remdesivir(&mut ids, &mut rng, &antiviral), vec![&antiviral]),
        (hcq(&mut ids, &mut rng), vec![]),
        (lpv(&mut ids, &mut rng, &antiviral), vec![&antiviral]),
        (ivermectin(&mut ids, &mut rng), vec![]),
        (il6(&mut ids, &mut rng, &immuno), vec![&immuno]),
    ];

    let mut corpus = Corpus::new();
    corpus.provenance = Provenance {
        queries: QUERIES.iter().map(|q| q.to_string()).collect(),
        fetched_at: Some("2021-07-21T00:00:00Z".into()),
    };
    let mut pairs: BTreeMap<CommentLink, (Sentiment, bool)> = BTreeMap::new();
    let mut emit = |g: &Graph, corpus: &mut Corpus, with_records: bool| {
        if with_records {
            for n in &g.nodes {
                let mut r = PubRecord::new(n.pmid, n.title.clone());
                r.epub_date = n.date;
                r.journal = if n.research { "Synthetic Journal of Medicine" } else { "Synthetic Letters" }.into();
                r.pub_types = n.types.iter().map(|t| t.to_string()).collect();
                r.language = n.lang.to_string();
                corpus.insert_record(r);
            }
        }
        for e in &g.edges {
            let source = g.nodes[e.src].pmid;
            let target = match e.dst {
                Target::Local(t) => g.nodes[t].pmid,
                Target::Dangling(p) => p,
            };
            let link = CommentLink::new(source, target);
            corpus.push_link(link);
            if let Some(s) = e.sentiment {
                pairs.insert(link, (s, e.foreign));
            }
        }
    };
    let mut emitted_shared: Vec<*const Graph> = Vec::new();
    for (own, shared) in &drugs {
        emit(own, &mut corpus, true);
        for s in shared {
            let key = *s as *const Graph;
            let first = !emitted_shared.contains(&key);
            emitted_shared.push(key);
            emit(s, &mut corpus, first);
        }
    }
    corpus.mark_dangling();

    let taxonomy = Taxonomy::default();
    let topic = |tag: &str| TopicPath::new(taxonomy.group_of(tag).expect("tag in taxonomy"), tag);
    let english: Vec<CommentLink> = pairs.iter().filter(|(_, (_, f))| !f).map(|(l, _)| *l).collect();
    let mut topics: Vec<Vec<TopicPath>> = vec![Vec::new(); english.len()];
    let mut i = 0;
    for (tag, count) in TOPIC_PLAN {
        for _ in 0..count {
            topics[i % english.len()].push(topic(tag));
            i += 1;
        }
    }
    let mut annotations = AnnotationSet::new();
    for (link, t) in english.iter().zip(topics) {
        annotations
            .insert(Annotation {
                comment_pmid: link.source,
                target_pmid: link.target,
                sentiment: pairs[link].0,
                topics: t,
            })
            .expect("unique pair");
    }
    for (link, (s, foreign)) in &pairs {
        if *foreign {
            annotations
                .insert(Annotation {
                    comment_pmid: link.source,
                    target_pmid: link.target,
                    sentiment: *s,
                    topics: vec![topic("results")],
                })
                .expect("unique pair");
        }
    }
    PaperFixture { corpus, annotations }
}

/// One trial with four direct comments and a reply, for the grading example.
pub fn grade_fixture() -> PaperFixture {
    let taxonomy = Taxonomy::default();
    let topic = |tag: &str| TopicPath::new(taxonomy.group_of(tag).expect("tag in taxonomy"), tag);
    let mut corpus = Corpus::new();
    corpus.provenance.queries = vec![QUERIES[0].to_string()];
    let trial = pmid(32187464);
    let mut r = PubRecord::new(
        trial,
        "A Trial of Lopinavir-Ritonavir in Adults Hospitalized with Severe Covid-19",
    );
    r.epub_date = Some(d("2020-03-18"));
    r.journal = "N Engl J Med".into();
    r.pub_types = ["Journal Article", "Randomized Controlled Trial"].map(String::from).into();
    corpus.insert_record(r);
    let rows: [(u64, &str, Sentiment, &[&str]); 4] = [
        (90_100_001, "2020-05-07", S, &["study design"]),
        (90_100_002, "2020-05-09", C, &["study design", "just mentioned"]),
        (90_100_003, "2020-05-11", C, &["analysis"]),
        (90_100_004, "2020-05-13", S, &["clinical practice related"]),
    ];
    let mut annotations = AnnotationSet::new();
    for (id, date, s, tags) in rows {
        let mut c = PubRecord::new(pmid(id), "Lopinavir-ritonavir in severe Covid-19");
        c.epub_date = Some(d(date));
        c.pub_types = ["Letter", "Comment"].map(String::from).into();
        corpus.insert_record(c);
        corpus.push_link(CommentLink::new(pmid(id), trial));
        annotations
            .insert(Annotation {
                comment_pmid: pmid(id),
                target_pmid: trial,
                sentiment: s,
                topics: tags.iter().map(|t| topic(t)).collect(),
            })
            .expect("unique pair");
    }
    let reply = pmid(90_100_005);
    let mut c = PubRecord::new(reply, "Lopinavir-ritonavir in severe Covid-19. Reply");
    c.epub_date = Some(d("2020-05-20"));
    c.pub_types = ["Letter", "Comment"].map(String::from).into();
    corpus.insert_record(c);
    corpus.push_link(CommentLink::new(reply, pmid(90_100_003)));
    annotations
        .insert(Annotation {
            comment_pmid: reply,
            target_pmid: pmid(90_100_003),
            sentiment: C,
            topics: vec![topic("analysis")],
        })
        .expect("unique pair");
    PaperFixture { corpus, annotations }
}

/// Writes `paper/` and `grade/` under `root`, each holding `corpus.jsonl`
/// and `annotations.csv`.
pub fn write_fixtures(root: &Path) -> ecn_core::Result<()> {
    for (name, fixture) in [("paper", paper_fixture()), ("grade", grade_fixture())] {
        let dir = root.join(name);
        fs::create_dir_all(&dir).map_err(|source| ecn_core::Error::Io { path: dir.clone(), source })?;
        save_corpus(&fixture.corpus, &dir.join("corpus.jsonl"))?;
        save_annotations(&fixture.annotations, &dir.join("annotations.csv"))?;
    }
    Ok(())
}
