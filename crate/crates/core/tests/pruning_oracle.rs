//! Set-comprehension oracles for subgraph pruning and fact extraction,
//! computed straight from the raw edge list.

use std::collections::HashSet;

use neuroground::{
    extract_facts, induce_subgraph, normalize_concept, prune, CandidateSet, Edge, KnowledgeGraph,
    PruningConfig, RelationWhitelist,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RELATIONS: [&str; 7] = [
    "AtLocation",
    "UsedFor",
    "HasProperty",
    "CapableOf",
    "PartOf",
    "IsA",
    "RelatedTo",
];

struct Case {
    edges: Vec<(String, String, String, f64)>,
    candidates: Vec<String>,
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let pool: Vec<String> = (0..30).map(|i| format!("c{i}")).collect();
    let n_edges = rng.gen_range(0..60);
    let edges = (0..n_edges)
        .map(|_| {
            let h = pool[rng.gen_range(0..pool.len())].clone();
            let t = if rng.gen_bool(0.05) {
                h.clone()
            } else {
                pool[rng.gen_range(0..pool.len())].clone()
            };
            let r = RELATIONS[rng.gen_range(0..RELATIONS.len())].to_string();
            let w = [0.5, 1.0, 1.5, 2.0, 3.0][rng.gen_range(0..5)];
            (h, r, t, w)
        })
        .collect();
    // Candidates draw from the pool plus words that never appear in the graph.
    let mut words: Vec<String> = pool.clone();
    words.extend((0..10).map(|i| format!("absent{i}")));
    words.shuffle(rng);
    words.truncate(15);
    Case {
        edges,
        candidates: words,
    }
}

fn graph_of(case: &Case) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new();
    for (h, r, t, w) in &case.edges {
        g.add_edge(Edge {
            head: normalize_concept(h).unwrap(),
            relation: r.clone(),
            tail: normalize_concept(t).unwrap(),
            weight: *w,
        })
        .unwrap();
    }
    g
}

/// Retained words: rank < m, or some qualifying edge joins the word to a
/// different candidate.
fn oracle_retained(case: &Case, m: usize, w_min: f64) -> Vec<String> {
    let members: HashSet<&str> = case.candidates.iter().map(String::as_str).collect();
    case.candidates
        .iter()
        .enumerate()
        .filter(|(rank, c)| {
            *rank < m
                || case.edges.iter().any(|(h, _, t, w)| {
                    *w >= w_min
                        && h != t
                        && members.contains(h.as_str())
                        && members.contains(t.as_str())
                        && (h == *c || t == *c)
                })
        })
        .map(|(_, c)| c.clone())
        .collect()
}

fn oracle_centrality(case: &Case, word: &str, w_min: f64) -> f64 {
    let members: HashSet<&str> = case.candidates.iter().map(String::as_str).collect();
    let neighbors: HashSet<&str> = case
        .edges
        .iter()
        .filter(|(h, _, t, w)| {
            *w >= w_min && h != t && members.contains(h.as_str()) && members.contains(t.as_str())
        })
        .filter_map(|(h, _, t, _)| {
            if h == word {
                Some(t.as_str())
            } else if t == word {
                Some(h.as_str())
            } else {
                None
            }
        })
        .collect();
    if members.len() <= 1 {
        0.0
    } else {
        neighbors.len() as f64 / (members.len() - 1) as f64
    }
}

fn run(case: &Case, m: usize, w_min: f64) -> (Vec<String>, Vec<String>) {
    let g = graph_of(case);
    let cands = CandidateSet::from_ranked_words(&case.candidates);
    let sub = induce_subgraph(&g, &cands, w_min).unwrap();
    let (pruned, report) = prune(&cands, &sub, &PruningConfig { m, w_min }).unwrap();
    assert_eq!(pruned.words, report.retained);
    (report.retained, report.dropped)
}

#[test]
fn pruning_matches_set_comprehension() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..1500 {
        let case = random_case(&mut rng);
        let m = rng.gen_range(0..=case.candidates.len());
        let w_min = [0.0, 1.0, 1.5, 2.5][rng.gen_range(0..4)];
        let (retained, dropped) = run(&case, m, w_min);
        assert_eq!(retained, oracle_retained(&case, m, w_min));
        assert_eq!(retained.len() + dropped.len(), case.candidates.len());
        let dropped_oracle: Vec<_> = case
            .candidates
            .iter()
            .filter(|c| !retained.contains(c))
            .cloned()
            .collect();
        assert_eq!(dropped, dropped_oracle);
    }
}

#[test]
fn centrality_matches_neighbor_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..1000 {
        let case = random_case(&mut rng);
        let g = graph_of(&case);
        let cands = CandidateSet::from_ranked_words(&case.candidates);
        let sub = induce_subgraph(&g, &cands, 1.0).unwrap();
        for (v, c) in sub.centralities() {
            let want = oracle_centrality(&case, v.as_str(), 1.0);
            assert!((c - want).abs() < 1e-12, "{v}: {c} vs {want}");
            assert!((0.0..=1.0).contains(&c));
        }
        assert_eq!(sub.vertices.len(), case.candidates.len());
    }
}

/// A tight cluster of wrong concepts outranked by an isolated correct label:
/// without the safeguard the label is lost, with it the label survives.
#[test]
fn clustered_leak_is_caught_by_the_safeguard() {
    let mut edges = Vec::new();
    let cluster = ["fish", "water", "boat", "sea", "net"];
    for (i, a) in cluster.iter().enumerate() {
        for b in &cluster[i + 1..] {
            edges.push((a.to_string(), "RelatedTo".into(), b.to_string(), 2.0));
        }
    }
    let mut candidates: Vec<String> = vec!["mushroom".into()];
    candidates.extend(cluster.iter().map(|s| s.to_string()));
    candidates.extend((0..9).map(|i| format!("noise{i}")));
    let case = Case { edges, candidates };

    let (retained, _) = run(&case, 0, 1.0);
    assert!(!retained.contains(&"mushroom".to_string()));
    assert_eq!(retained, cluster.map(String::from).to_vec());

    let (retained, _) = run(&case, 5, 1.0);
    assert_eq!(retained[0], "mushroom");
    assert_eq!(retained.len(), 6);
}

#[test]
fn facts_stay_inside_the_subgraph() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let wl = RelationWhitelist::default();
    for _ in 0..1000 {
        let case = random_case(&mut rng);
        let g = graph_of(&case);
        let cands = CandidateSet::from_ranked_words(&case.candidates);
        let sub = induce_subgraph(&g, &cands, 1.0).unwrap();
        let cap = rng.gen_range(0..8);
        let facts = extract_facts(&sub, &wl, cap).unwrap();
        assert!(facts.len() <= cap);
        for f in &facts.facts {
            assert!(wl.contains(&f.relation));
            assert!(sub.contains(&f.head) && sub.contains(&f.tail));
            assert!(f.weight >= 1.0);
            assert_ne!(f.head, f.tail);
        }
        for w in facts.facts.windows(2) {
            assert!(w[0].weight >= w[1].weight);
        }
        // Prefix stability.
        let more = extract_facts(&sub, &wl, cap + 1).unwrap();
        assert_eq!(&more.facts[..facts.len()], &facts.facts[..]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn retained_grows_with_m(seed in any::<u64>(), m in 0usize..15) {
        let case = random_case(&mut ChaCha8Rng::seed_from_u64(seed));
        let (a, _) = run(&case, m, 1.0);
        let (b, _) = run(&case, m + 1, 1.0);
        prop_assert!(a.iter().all(|w| b.contains(w)));
        if m >= 1 {
            prop_assert_eq!(&a[0], &case.candidates[0]);
        }
        let mut order = a.iter().map(|w| case.candidates.iter().position(|c| c == w).unwrap());
        let first = order.next();
        prop_assert!(order.try_fold(first, |prev, x| (Some(x) > prev).then_some(Some(x))).is_some());
    }

    #[test]
    fn retained_shrinks_with_w_min(seed in any::<u64>(), m in 0usize..=15, lo in 0.0f64..3.0, d in 0.0f64..2.0) {
        let case = random_case(&mut ChaCha8Rng::seed_from_u64(seed));
        let (loose, _) = run(&case, m, lo);
        let (strict, _) = run(&case, m, lo + d);
        prop_assert!(strict.iter().all(|w| loose.contains(w)));
    }

    #[test]
    fn facts_ignore_edge_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut case = random_case(&mut rng);
        let cands = CandidateSet::from_ranked_words(&case.candidates);
        let wl = RelationWhitelist::default();
        let a = extract_facts(&induce_subgraph(&graph_of(&case), &cands, 1.0).unwrap(), &wl, 5).unwrap();
        case.edges.shuffle(&mut rng);
        let b = extract_facts(&induce_subgraph(&graph_of(&case), &cands, 1.0).unwrap(), &wl, 5).unwrap();
        prop_assert_eq!(a, b);
    }
}
