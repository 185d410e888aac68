use std::collections::BTreeMap;

use lsr_core::{
    build_index, search, search_two_phase, theoretical_flops, IdfTable, InvertedIndex, ScoreMode, ScoredDoc,
    SearchParams, SparseVector, TokenId, Vocabulary,
};
use proptest::prelude::*;

#[derive(Debug)]
struct Corpus {
    index: InvertedIndex,
    docs: Vec<(String, SparseVector)>,
    idf: IdfTable,
}

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    (3u32..40, 1usize..60).prop_flat_map(|(vocab, n)| {
        let doc = prop::collection::btree_map(0..vocab, 1u32..64, 0..8);
        let idf = prop::collection::vec(1u32..400, vocab as usize);
        (Just(vocab), prop::collection::vec(doc, n), idf).prop_map(|(vocab, raw, idf_raw)| {
            let v = Vocabulary::from_terms((0..vocab).map(|i| format!("t{i}"))).unwrap();
            // weights on a 1/16 grid survive the f32 posting weights exactly
            let docs: Vec<(String, SparseVector)> = raw
                .into_iter()
                .enumerate()
                .map(|(i, m)| {
                    let pairs = m.into_iter().map(|(t, w)| (TokenId(t), f64::from(w) / 16.0));
                    (format!("d{i:03}"), SparseVector::from_pairs(pairs).unwrap())
                })
                .collect();
            let mut idf = IdfTable::new("random");
            for (t, x) in idf_raw.into_iter().enumerate() {
                idf.insert(TokenId(t as u32), f64::from(x) / 100.0).unwrap();
            }
            let index = build_index(docs.iter().map(|(id, d)| (id.as_str(), d.clone())), v).unwrap().index;
            Corpus { index, docs, idf }
        })
    })
}

fn query_strategy() -> impl Strategy<Value = SparseVector> {
    prop::collection::btree_set(0u32..40, 0..6).prop_map(|s| SparseVector::binary(s.into_iter().map(TokenId)))
}

fn brute_force(docs: &[(String, SparseVector)], q: &SparseVector, k: usize, idf: Option<&IdfTable>) -> Vec<ScoredDoc> {
    let mut all: Vec<ScoredDoc> = docs
        .iter()
        .map(|(id, d)| {
            let s: f64 = q.iter().map(|(t, qw)| idf.map_or(1.0, |x| x.get(t)) * qw * d.get(t)).sum();
            ScoredDoc::new(id.clone(), s)
        })
        .filter(|d| d.score > 0.0)
        .collect();
    all.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
    all.truncate(k);
    all
}

fn assert_same(got: &[ScoredDoc], want: &[ScoredDoc]) {
    let ids = |v: &[ScoredDoc]| v.iter().map(|d| d.doc_id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(got), ids(want));
    for (g, w) in got.iter().zip(want) {
        assert!((g.score - w.score).abs() <= 1e-9, "{} vs {}", g.score, w.score);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn search_matches_brute_force(c in corpus_strategy(), q in query_strategy(), k in 1usize..20) {
        let plain = search(&c.index, &q, &SearchParams::new(k, ScoreMode::Plain), None).unwrap();
        assert_same(&plain, &brute_force(&c.docs, &q, k, None));
        let weighted = search(&c.index, &q, &SearchParams::new(k, ScoreMode::IdfWeighted), Some(&c.idf)).unwrap();
        assert_same(&weighted, &brute_force(&c.docs, &q, k, Some(&c.idf)));
    }

    #[test]
    fn full_window_two_phase_is_exact(c in corpus_strategy(), q in query_strategy(), k in 1usize..20, extra in 0usize..5) {
        let n = c.index.corpus_size();
        for mode in [ScoreMode::Plain, ScoreMode::IdfWeighted] {
            let exact = search(&c.index, &q, &SearchParams::new(k, mode), Some(&c.idf)).unwrap();
            let params = SearchParams::new(k, mode).with_two_phase((n + extra).max(k), None);
            let two = search_two_phase(&c.index, &q, &params, &c.idf).unwrap();
            prop_assert_eq!(two.hits, exact);
        }
    }

    #[test]
    fn narrow_window_scores_are_exact_on_returned_docs(c in corpus_strategy(), q in query_strategy(), k in 1usize..5, extra in 0usize..10) {
        let window = k + extra;
        let params = SearchParams::new(k, ScoreMode::IdfWeighted).with_two_phase(window, None);
        let two = search_two_phase(&c.index, &q, &params, &c.idf).unwrap();
        let full: BTreeMap<String, f64> = brute_force(&c.docs, &q, usize::MAX, Some(&c.idf))
            .into_iter()
            .map(|d| (d.doc_id, d.score))
            .collect();
        if !two.stats.fell_back {
            prop_assert!(two.hits.len() <= window);
        }
        for h in &two.hits {
            prop_assert!((full[&h.doc_id] - h.score).abs() <= 1e-9);
        }
    }

    #[test]
    fn larger_window_never_loses_exact_hits(c in corpus_strategy(), q in query_strategy(), k in 1usize..5, w in 0usize..10, grow in 1usize..20) {
        let exact = search(&c.index, &q, &SearchParams::new(k, ScoreMode::IdfWeighted), Some(&c.idf)).unwrap();
        let overlap = |window: usize| {
            let params = SearchParams::new(k, ScoreMode::IdfWeighted).with_two_phase(window, None);
            let hits = search_two_phase(&c.index, &q, &params, &c.idf).unwrap().hits;
            hits.iter().filter(|h| exact.iter().any(|e| e.doc_id == h.doc_id)).count()
        };
        prop_assert!(overlap(k + w + grow) >= overlap(k + w));
    }

    #[test]
    fn theoretical_flops_counts_intersections(c in corpus_strategy(), qs in prop::collection::vec(query_strategy(), 1..20)) {
        let qs: Vec<SparseVector> = qs.into_iter().map(|q| SparseVector::binary(q.tokens().filter(|t| c.index.vocabulary().contains(*t)))).collect();
        let n = c.index.corpus_size();
        let pairs: usize = qs
            .iter()
            .map(|q| c.docs.iter().map(|(_, d)| q.tokens().filter(|&t| d.get(t) > 0.0).count()).sum::<usize>())
            .sum();
        let expected = pairs as f64 / (qs.len() * n) as f64;
        let got = theoretical_flops(&qs, &c.index, n as u64).unwrap();
        prop_assert!((got - expected).abs() <= 1e-9);
    }
}

#[test]
fn ten_k_window_agrees_with_exact_search_on_fixture() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let vocab_size = 300u32;
    let vocab = Vocabulary::from_terms((0..vocab_size).map(|i| format!("t{i}"))).unwrap();
    // Zipf-like token draws so document frequencies, and hence IDF, spread out
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        let u: f64 = rng.gen_range(0.0..1.0);
        TokenId(((vocab_size as f64).powf(u) - 1.0) as u32)
    };
    let docs: Vec<(String, SparseVector)> = (0..200)
        .map(|i| {
            let pairs: BTreeMap<TokenId, f64> = (0..20).map(|_| (draw(&mut rng), f64::from(rng.gen_range(1u32..32)) / 8.0)).collect();
            (format!("d{i:03}"), SparseVector::from_pairs(pairs).unwrap())
        })
        .collect();
    let index = build_index(docs.iter().map(|(id, d)| (id.as_str(), d.clone())), vocab.clone()).unwrap().index;
    let idf = lsr_core::compute_idf(docs.iter().map(|(_, d)| d.tokens()), &vocab, "fixture").unwrap();
    let k = 10;
    let mut equal = 0;
    for _ in 0..50 {
        let q = SparseVector::binary((0..4).map(|_| draw(&mut rng)));
        let exact = search(&index, &q, &SearchParams::new(k, ScoreMode::IdfWeighted), Some(&idf)).unwrap();
        let params = SearchParams::new(k, ScoreMode::IdfWeighted).with_two_phase(10 * k, None);
        if search_two_phase(&index, &q, &params, &idf).unwrap().hits == exact {
            equal += 1;
        }
    }
    assert!(equal >= 48, "{equal}/50 queries identical");
}
