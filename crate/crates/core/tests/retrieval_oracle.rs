//! Exhaustive-sort oracles for candidate and exemplar retrieval.

use neuroground::exemplars::ExemplarRecord;
use neuroground::{
    build_store, retrieve_candidates, retrieve_exemplars, LatentKind, LatentVector,
    VocabularyMatrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Full descending sort of cosine scores, lower index first on ties.
fn oracle(query: &[f64], rows: &[Vec<f64>], k: usize) -> Vec<(usize, f64)> {
    let qn = query.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut scored: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let rn = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            let d: f64 = query.iter().zip(r).map(|(a, b)| a * b).sum();
            (i, d / (qn * rn))
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Small-integer vectors so exact ties and duplicate rows happen often.
fn coarse_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1i32..=1) as f64).collect();
        if v.iter().any(|&x| x != 0.0) {
            return v;
        }
    }
}

fn vocab(rows: &[Vec<f64>], d: usize) -> VocabularyMatrix {
    VocabularyMatrix::from_entries(
        rows.iter()
            .enumerate()
            .map(|(i, r)| (format!("w{i}"), r.clone())),
        d,
    )
    .unwrap()
}

/// Order must match exactly; scores within a small tolerance.
fn assert_same(got: &[(String, f64)], want: &[(usize, f64)], prefix: &str) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert_eq!(g.0, format!("{prefix}{}", w.0));
        assert!((g.1 - w.1).abs() < 1e-9);
    }
}

#[test]
fn candidates_match_oracle_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let d = rng.gen_range(2..8);
        let n = 50;
        let rows: Vec<_> = (0..n).map(|_| coarse_vec(&mut rng, d)).collect();
        let z = coarse_vec(&mut rng, d);
        let v = vocab(&rows, d);
        let got = retrieve_candidates(
            &LatentVector::new(z.clone(), LatentKind::RefinedZ).unwrap(),
            &v,
            10,
        )
        .unwrap();
        let got: Vec<_> = got
            .items
            .iter()
            .map(|c| (c.word.clone(), c.score))
            .collect();
        let want = oracle(&z, &rows, 10);
        assert_same(&got, &want, "w");
    }
}

#[test]
fn candidates_match_oracle_full_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..40 {
        let n = rng.gen_range(1..=1000);
        let rows: Vec<_> = (0..n).map(|_| random_vec(&mut rng, 512)).collect();
        let z = random_vec(&mut rng, 512);
        let k = if case % 5 == 0 { n + 3 } else { 15 };
        let v = vocab(&rows, 512);
        let got = retrieve_candidates(
            &LatentVector::new(z.clone(), LatentKind::RefinedZ).unwrap(),
            &v,
            k,
        )
        .unwrap();
        assert_eq!(got.len(), k.min(n));
        let got: Vec<_> = got
            .items
            .iter()
            .map(|c| (c.word.clone(), c.score))
            .collect();
        assert_same(&got, &oracle(&z, &rows, k), "w");
    }
}

#[test]
fn exemplars_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..1000 {
        let d = if case % 100 == 0 {
            512
        } else {
            rng.gen_range(2..6)
        };
        let n = 100;
        let rows: Vec<_> = (0..n)
            .map(|_| {
                if d == 512 {
                    random_vec(&mut rng, d)
                } else {
                    coarse_vec(&mut rng, d)
                }
            })
            .collect();
        let store = build_store(
            rows.iter().enumerate().map(|(i, r)| ExemplarRecord {
                id: format!("e{i}"),
                latent: r.clone(),
                caption: format!("caption {i}"),
            }),
            d,
        )
        .unwrap();
        let x = if d == 512 {
            random_vec(&mut rng, d)
        } else {
            coarse_vec(&mut rng, d)
        };
        let got = retrieve_exemplars(
            &LatentVector::new(x.clone(), LatentKind::RawX).unwrap(),
            &store,
            2,
        )
        .unwrap();
        for item in &got.items {
            let row: usize = item.id[1..].parse().unwrap();
            assert_eq!(item.caption, format!("caption {row}"));
        }
        let got: Vec<_> = got.items.iter().map(|e| (e.id.clone(), e.score)).collect();
        assert_same(&got, &oracle(&x, &rows, 2), "e");
    }
}

#[test]
fn piano_self_retrieval() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rows: Vec<_> = (0..40).map(|_| random_vec(&mut rng, 512)).collect();
    let piano = random_vec(&mut rng, 512);
    rows[17] = piano.clone();
    let v = VocabularyMatrix::from_entries(
        rows.iter().enumerate().map(|(i, r)| {
            (
                if i == 17 {
                    "piano".to_string()
                } else {
                    format!("class{i}")
                },
                r.clone(),
            )
        }),
        512,
    )
    .unwrap();
    let z = LatentVector::with_dim(
        piano.iter().map(|x| x * 3.5).collect(),
        LatentKind::RefinedZ,
        512,
    )
    .unwrap();
    let c = retrieve_candidates(&z, &v, 15).unwrap();
    assert_eq!(c.len(), 15);
    assert_eq!(c.items[0].word, "piano");
    assert!((c.items[0].score - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn positive_scaling_is_invisible(
        seed in any::<u64>(),
        scale in 1e-3f64..1e3,
        k in 1usize..20,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<_> = (0..12).map(|_| random_vec(&mut rng, 6)).collect();
        let v = vocab(&rows, 6);
        let z = LatentVector::new(random_vec(&mut rng, 6), LatentKind::RefinedZ).unwrap();
        let a = retrieve_candidates(&z, &v, k).unwrap();
        let b = retrieve_candidates(&z.scaled(scale).unwrap(), &v, k).unwrap();
        prop_assert_eq!(a.len(), k.min(12));
        prop_assert_eq!(a.words().collect::<Vec<_>>(), b.words().collect::<Vec<_>>());
        for (x, y) in a.items.iter().zip(&b.items) {
            prop_assert!((x.score - y.score).abs() < 1e-9);
        }
        for w in a.items.windows(2) {
            prop_assert!(w[0].score >= w[1].score);
            prop_assert_eq!(w[0].rank + 1, w[1].rank);
        }

        let store = build_store(rows.iter().enumerate().map(|(i, r)| ExemplarRecord {
            id: i.to_string(), latent: r.clone(), caption: String::new(),
        }), 6).unwrap();
        let x = LatentVector::new(random_vec(&mut rng, 6), LatentKind::RawX).unwrap();
        let a = retrieve_exemplars(&x, &store, k).unwrap();
        let b = retrieve_exemplars(&x.scaled(scale).unwrap(), &store, k).unwrap();
        prop_assert_eq!(a.ids().collect::<Vec<_>>(), b.ids().collect::<Vec<_>>());
    }
}
