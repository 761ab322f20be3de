mod common;

use common::{arb_profiles, arb_query, brute_ranking, brute_scores};
use proptest::prelude::*;
use venuerec::index::{score_lm_jm, search, Field, FieldWeights, FieldedIndex, Query, SearchParams};
use venuerec::profile::{bag_of, Subprofile, TermBag};

fn query(q: &[TermBag; 3]) -> Option<Query> {
    Query::new(q[0].clone(), q[1].clone(), q[2].clone()).ok()
}

fn params(weights: FieldWeights, lambda_s: f64, top_n: usize) -> SearchParams {
    SearchParams {
        weights,
        lambda_s,
        top_n,
    }
}

fn arb_weights() -> impl Strategy<Value = FieldWeights> {
    (0u8..3, 0u8..3, 0u8..3)
        .prop_filter("at least one field", |w| *w != (0, 0, 0))
        .prop_map(|(c, k, a)| FieldWeights {
            content: f64::from(c) * 0.5,
            keywords: f64::from(k) * 0.5,
            authors: f64::from(a) * 0.5,
        })
}

fn score_of(index: &FieldedIndex, q: &[TermBag; 3], doc: &str, w: FieldWeights, lambda_s: f64) -> f64 {
    let mut s = 0.0;
    for (f, bag, wf) in [
        (Field::Content, &q[0], w.content),
        (Field::Keywords, &q[1], w.keywords),
        (Field::Authors, &q[2], w.authors),
    ] {
        if wf != 0.0 {
            s += wf * score_lm_jm(index, bag, doc, f, lambda_s).unwrap();
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn search_matches_exhaustive_scoring(
        profiles in arb_profiles(60),
        q in arb_query(),
        w in arb_weights(),
        lambda_s in 0.05f64..0.95,
        top_n in 1usize..80,
    ) {
        let Some(query) = query(&q) else { return Ok(()) };
        let index = FieldedIndex::build(&profiles).unwrap();
        let got = search(&index, &query, &params(w, lambda_s, top_n)).unwrap();
        let want = brute_ranking(brute_scores(&profiles, [&q[0], &q[1], &q[2]], w, lambda_s), top_n);
        prop_assert_eq!(got.len(), want.len());
        for (i, (r, (d, s))) in got.entries.iter().zip(&want).enumerate() {
            prop_assert_eq!(&r.doc_id, d);
            prop_assert_eq!(r.position, i + 1);
            prop_assert!((r.score - s).abs() <= 1e-9, "{} vs {}", r.score, s);
            prop_assert!(r.score > 0.0);
        }
        for pair in got.entries.windows(2) {
            prop_assert!(pair[0].score > pair[1].score
                || (pair[0].score == pair[1].score && pair[0].doc_id < pair[1].doc_id));
        }
        for p in &profiles {
            let s = score_of(&index, &q, &p.doc_id, w, lambda_s);
            prop_assert!(s >= 0.0);
        }
    }

    // Swapping a non-query token of a document for a query term keeps |d| and
    // |C| fixed; the document's score must not drop.
    #[test]
    fn extra_query_term_occurrence_never_hurts(
        profiles in arb_profiles(30),
        q in arb_query(),
        pick in any::<prop::sample::Index>(),
        term_pick in any::<prop::sample::Index>(),
        lambda_s in 0.05f64..0.95,
    ) {
        if q[0].is_empty() {
            return Ok(());
        }
        let d = pick.index(profiles.len());
        let Some(victim) = profiles[d].content.keys().find(|t| !q[0].contains_key(*t)).cloned() else {
            return Ok(());
        };
        let terms: Vec<&String> = q[0].keys().collect();
        let boost = terms[term_pick.index(terms.len())].clone();
        let mut changed = profiles.clone();
        let bag = &mut changed[d].content;
        *bag.get_mut(&victim).unwrap() -= 1;
        if bag[&victim] == 0 {
            bag.remove(&victim);
        }
        *bag.entry(boost).or_insert(0) += 1;
        let before = score_lm_jm(&FieldedIndex::build(&profiles).unwrap(), &q[0], &profiles[d].doc_id, Field::Content, lambda_s).unwrap();
        let after = score_lm_jm(&FieldedIndex::build(&changed).unwrap(), &q[0], &profiles[d].doc_id, Field::Content, lambda_s).unwrap();
        prop_assert!(after >= before - 1e-12, "{} -> {}", before, after);
    }

    #[test]
    fn zero_weight_fields_are_ignored(
        profiles in arb_profiles(30),
        other_authors in prop::collection::vec(prop::collection::btree_map("[a-c]{2}", 1u32..4, 0..3), 30),
        q in arb_query(),
    ) {
        let Some(query) = query(&q) else { return Ok(()) };
        let mut changed = profiles.clone();
        for (p, a) in changed.iter_mut().zip(other_authors) {
            p.authors = a;
        }
        let w = FieldWeights::CONTENT;
        let p = params(w, 0.1, 1000);
        let a = search(&FieldedIndex::build(&profiles).unwrap(), &query, &p).unwrap();
        let b = search(&FieldedIndex::build(&changed).unwrap(), &query, &p).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn index_persists(profiles in arb_profiles(40)) {
        let index = FieldedIndex::build(&profiles).unwrap();
        let dir = tempfile::tempdir().unwrap();
        index.save(dir.path()).unwrap();
        prop_assert_eq!(FieldedIndex::load(dir.path()).unwrap(), index);
    }
}

fn doc(id: &str, content: &[&str]) -> Subprofile {
    Subprofile {
        doc_id: id.to_string(),
        venue_id: id.to_string(),
        cluster_id: None,
        content: bag_of(content.iter().map(|s| s.to_string())),
        keywords: TermBag::new(),
        authors: TermBag::new(),
        n_articles: 1,
    }
}

// Appending an occurrence (rather than swapping one in) lengthens the
// document, which dilutes every other matching query term. With λ_s = 0.1
// and this fixture the net effect is negative.
#[test]
fn appended_occurrence_can_lower_score() {
    let filler: Vec<String> = (0..200).map(|i| format!("z{i}")).collect();
    let mut big: Vec<&str> = filler.iter().map(String::as_str).collect();
    big.extend(["a", "b"]);
    let before = vec![doc("d1", &["a", "b"]), doc("d2", &big)];
    let after = vec![doc("d1", &["a", "a", "b"]), doc("d2", &big)];
    let q = bag_of(["a", "b"].map(String::from));
    let s0 = score_lm_jm(&FieldedIndex::build(&before).unwrap(), &q, "d1", Field::Content, 0.1).unwrap();
    let s1 = score_lm_jm(&FieldedIndex::build(&after).unwrap(), &q, "d1", Field::Content, 0.1).unwrap();
    assert!(s1 < s0, "{s0} -> {s1}");
}
