use std::collections::BTreeMap;

use convsearch::eval::{compute, Judgments};
use convsearch::index::Index;
use convsearch::rerank::{make_candidates, rerank_lexical};
use convsearch::retrieval::{retrieve, RetrievalParams};
use convsearch::textpipe::AnalyzerConfig;
use proptest::prelude::*;

const WORDS: &[&str] = &[
    "shark", "reef", "ocean", "tiger", "diet", "fish", "coral", "night", "teeth", "warm",
];

fn corpus() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(proptest::collection::vec(0..WORDS.len(), 1..12), 2..30).prop_map(|docs| {
        docs.into_iter()
            .map(|d| d.into_iter().map(|w| WORDS[w]).collect::<Vec<_>>().join(" "))
            .collect()
    })
}

fn query() -> impl Strategy<Value = String> {
    proptest::collection::vec(0..WORDS.len(), 1..4)
        .prop_map(|q| q.into_iter().map(|w| WORDS[w]).collect::<Vec<_>>().join(" "))
}

fn build(docs: &[String]) -> Index {
    Index::build(
        docs.iter().enumerate().map(|(i, t)| (format!("d{i:02}"), t.clone())),
        AnalyzerConfig::plain(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn rerank_is_a_permutation_of_the_prefix(docs in corpus(), q1 in query(), q2 in query(), depth in 1usize..40) {
        let idx = build(&docs);
        let params = RetrievalParams { mu: 50.0f64, k: 100 };
        let Ok(run) = retrieve(&idx, &q1, &params, None) else { return Ok(()) };
        prop_assume!(!run.is_empty());
        let cands = make_candidates(&run, &idx, &q2, depth).unwrap();
        let out = rerank_lexical(&cands, &idx, 50.0).unwrap();
        let mut before: Vec<&str> = run.ids().take(depth).collect();
        let mut after: Vec<&str> = out.ids().collect();
        before.sort_unstable();
        after.sort_unstable();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn same_query_keeps_map(docs in corpus(), q in query(), depth in 1usize..40, grades in proptest::collection::vec(0u8..3, 30)) {
        let idx = build(&docs);
        let params = RetrievalParams { mu: 50.0f64, k: 100 };
        let Ok(run) = retrieve(&idx, &q, &params, None) else { return Ok(()) };
        prop_assume!(!run.is_empty());
        let run = run.with_turn("t");
        let cands = make_candidates(&run, &idx, &q, depth).unwrap();
        let out = rerank_lexical(&cands, &idx, 50.0).unwrap();
        prop_assert!(out.ids().eq(run.ids().take(depth)));

        let mut judgments = Judgments::default();
        for (i, g) in grades.iter().enumerate().take(docs.len()) {
            judgments.insert("t", &format!("d{i:02}"), *g);
        }
        prop_assume!(grades.iter().take(docs.len()).any(|&g| g >= 1));
        let mut prefix = run.clone();
        prefix.entries.truncate(depth);
        let a = compute(&BTreeMap::from([("t".to_string(), prefix)]), &judgments, 1).unwrap();
        let b = compute(&BTreeMap::from([("t".to_string(), out)]), &judgments, 1).unwrap();
        prop_assert_eq!(a.mean.map, b.mean.map);
    }
}
