mod common;

use std::collections::HashSet;

use common::arb_corpus;
use proptest::prelude::*;
use venuerec::corpus::{filter_venues, read_corpus, split_by_year, CorpusSchema, SplitSpec};

proptest! {
    #[test]
    fn split_is_a_partition(corpus in arb_corpus(60, 5), boundary in 2009i32..2018) {
        let n_train = corpus.articles().iter().filter(|a| a.year <= boundary).count();
        let result = split_by_year(&corpus, SplitSpec { boundary_year: boundary });
        if n_train == 0 || n_train == corpus.len() {
            prop_assert!(result.is_err());
            return Ok(());
        }
        let split = result.unwrap();
        prop_assert_eq!(split.train.len() + split.test.len(), corpus.len());
        let train: HashSet<&str> = split.train.articles().iter().map(|a| a.article_id.as_str()).collect();
        prop_assert!(split.test.articles().iter().all(|a| !train.contains(a.article_id.as_str())));
        prop_assert!(split.train.articles().iter().all(|a| a.year <= boundary));
        prop_assert!(split.test.articles().iter().all(|a| a.year > boundary));
        for id in &split.unseen_venue_articles {
            let a = split.test.articles().iter().find(|a| &a.article_id == id).unwrap();
            prop_assert!(!split.train.contains_venue(&a.venue_id));
        }
        let unseen = split.test.articles().iter().filter(|a| !split.train.contains_venue(&a.venue_id)).count();
        prop_assert_eq!(unseen, split.unseen_venue_articles.len());
    }

    #[test]
    fn venue_filter_is_idempotent(corpus in arb_corpus(60, 6), min in 1usize..15) {
        match filter_venues(&corpus, min) {
            Ok(once) => {
                prop_assert!(once.venues().values().all(|&n| n >= min));
                prop_assert_eq!(filter_venues(&once, min).unwrap(), once);
            }
            Err(_) => prop_assert!(corpus.venues().values().all(|&n| n < min)),
        }
    }

    #[test]
    fn jsonl_round_trip(corpus in arb_corpus(40, 4)) {
        let mut buf = Vec::new();
        corpus.write_jsonl(&mut buf).unwrap();
        let (back, report) = read_corpus(&buf[..], "mem".as_ref(), &CorpusSchema::default()).unwrap();
        prop_assert_eq!(report.skipped, 0);
        prop_assert_eq!(&back, &corpus);
        let mut again = Vec::new();
        back.write_jsonl(&mut again).unwrap();
        prop_assert_eq!(buf, again);
    }
}
