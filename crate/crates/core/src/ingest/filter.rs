use std::collections::{BTreeMap, BTreeSet};

use super::lexicon::matches_any;
use super::{Corpus, DrugLexicon, Pmid};
use crate::error::Result;

/// Restricts a corpus to one drug group.
///
/// Records whose title contains a synonym of the group are kept. A link is
/// kept when at least one endpoint matched and the other endpoint has a
/// record; that other endpoint is retained and flagged as context-only.
/// Links to unresolved PMIDs are dropped.
pub fn filter_by_drug(corpus: &Corpus, lexicon: &DrugLexicon, group: &str) -> Result<Corpus> {
    let synonyms = lexicon.synonyms(group)?;
    let matched: BTreeSet<Pmid> = corpus
        .records
        .values()
        .filter(|r| matches_any(synonyms, &r.title))
        .map(|r| r.pmid)
        .collect();

    let mut context = BTreeSet::new();
    let mut links = Vec::new();
    for link in &corpus.links {
        let (s, t) = (link.source, link.target);
        if !(corpus.contains(s) && corpus.contains(t)) {
            continue;
        }
        match (matched.contains(&s), matched.contains(&t)) {
            (true, true) => links.push(*link),
            (true, false) => {
                context.insert(t);
                links.push(*link);
            }
            (false, true) => {
                context.insert(s);
                links.push(*link);
            }
            (false, false) => {}
        }
    }

    let records: BTreeMap<_, _> = corpus
        .records
        .iter()
        .filter(|(p, _)| matched.contains(p) || context.contains(p))
        .map(|(p, r)| (*p, r.clone()))
        .collect();

    Ok(Corpus {
        records,
        links,
        unresolved: corpus.unresolved.clone(),
        context_only: context,
        provenance: corpus.provenance.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{CommentLink, PubRecord};
    use crate::Error;

    fn p(v: u64) -> Pmid {
        Pmid::new(v).unwrap()
    }

    fn corpus(titles: &[(u64, &str)], links: &[(u64, u64)]) -> Corpus {
        let mut c = Corpus::new();
        for (id, t) in titles {
            c.insert_record(PubRecord::new(p(*id), *t));
        }
        for (a, b) in links {
            c.push_link(CommentLink::new(p(*a), p(*b)));
        }
        c.mark_dangling();
        c
    }

    #[test]
    fn keeps_only_matching_titles() {
        let c = corpus(&[(1, "Remdesivir in adults with severe COVID-19"), (2, "Tocilizumab works")], &[]);
        let f = filter_by_drug(&c, &DrugLexicon::default(), "remdesivir").unwrap();
        assert_eq!(f.records.keys().copied().collect::<Vec<_>>(), vec![p(1)]);
    }

    #[test]
    fn other_endpoint_is_kept_as_context() {
        let c = corpus(
            &[(1, "Remdesivir trial"), (2, "Letter: antivirals"), (3, "Unrelated"), (4, "Unrelated reply")],
            &[(2, 1), (4, 3), (2, 99)],
        );
        let f = filter_by_drug(&c, &DrugLexicon::default(), "remdesivir").unwrap();
        assert_eq!(f.records.len(), 2);
        assert_eq!(f.links, vec![CommentLink::new(p(2), p(1))]);
        assert!(f.context_only.contains(&p(2)));
        assert!(!f.context_only.contains(&p(1)));
    }

    #[test]
    fn unknown_group_is_invalid() {
        let c = corpus(&[(1, "x")], &[]);
        assert!(matches!(
            filter_by_drug(&c, &DrugLexicon::default(), "aspirin"),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn filtering_is_idempotent_and_shrinking() {
        let c = corpus(
            &[
                (1, "Hydroxychloroquine and azithromycin"),
                (2, "Comment"),
                (3, "Reply on hydroxychloroquine"),
                (4, "Other"),
            ],
            &[(2, 1), (3, 2), (4, 2)],
        );
        let lex = DrugLexicon::default();
        let once = filter_by_drug(&c, &lex, "HCQ").unwrap();
        let twice = filter_by_drug(&once, &lex, "HCQ").unwrap();
        assert_eq!(once, twice);
        assert!(once.records.keys().all(|k| c.records.contains_key(k)));
        assert_eq!(once.links.len(), 2);
    }
}
