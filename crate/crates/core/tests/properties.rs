mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::gen::*;
use eventmine::dedup::{cluster_duplicates, compute_pair_features, PairInput, ScoredPair};
use eventmine::extraction::parse_response;
use eventmine::linkage::{match_events, MatchCriteria, MonthTolerance, PartyCanon, PartyRule, ReferenceIndex};
use eventmine::regress::{fit_fixed_effects, ols_qr};
use eventmine::Matrix;
use eventmine::synth::{generate_corpus, planted_panel, CorpusParams, PanelParams};
use eventmine::{distance_km, text_similarity};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rendered_records_parse_back(seed in any::<u64>()) {
        let record = random_record(&mut rng(seed));
        let mut parsed = parse_response(&record.to_response()).unwrap().record;
        parsed.article_id.clear();
        prop_assert_eq!(parsed, record);
    }

    #[test]
    fn parser_never_panics(raw in "(?s).{0,400}") {
        if let Ok(p) = parse_response(&raw) {
            prop_assert!(p.record.locations.len() <= 2);
        }
    }

    #[test]
    fn similarity_is_symmetric_and_bounded(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (phrase(&mut r, 15), phrase(&mut r, 15));
        let ab = text_similarity(&a, &b, 2);
        prop_assert!((ab - text_similarity(&b, &a, 2)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn haversine_is_a_metric(
        a in (-89.0..89.0f64, -180.0..180.0f64),
        b in (-89.0..89.0f64, -180.0..180.0f64),
        c in (-89.0..89.0f64, -180.0..180.0f64),
    ) {
        let d = |p: (f64, f64), q: (f64, f64)| distance_km(p.0, p.1, q.0, q.1);
        prop_assert!(d(a, a).abs() < 1e-9);
        prop_assert!((d(a, b) - d(b, a)).abs() < 1e-9);
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-6);
        prop_assert!(d(a, b) <= std::f64::consts::PI * 6371.0 + 1e-6);
        prop_assert!((d(a, b) - oracle_km(a, b)).abs() < 1e-6);
    }

    #[test]
    fn clusters_are_cliques_that_partition(
        n in 1usize..14,
        edges in prop::collection::vec((0usize..14, 0usize..14, 0.0..1.0f64), 0..60),
        cutoff in 0.05..0.95f64,
    ) {
        let ids: Vec<String> = (0..n).map(|i| format!("e{i:02}")).collect();
        let mut scores = BTreeMap::new();
        for (i, j, s) in edges {
            let (i, j) = (i % n, j % n);
            if i != j {
                scores.insert((i.min(j), i.max(j)), s);
            }
        }
        let pairs: Vec<ScoredPair> = scores.iter().map(|(&(i, j), &s)| ScoredPair::new(&ids[i], &ids[j], s)).collect();
        let clusters = cluster_duplicates(&ids, &pairs, cutoff);
        let mut seen = BTreeSet::new();
        for c in &clusters {
            for m in &c.members {
                prop_assert!(seen.insert(m.clone()), "{} in two clusters", m);
            }
            for (x, a) in c.members.iter().enumerate() {
                for b in &c.members[x + 1..] {
                    let i: usize = a[1..].parse().unwrap();
                    let j: usize = b[1..].parse().unwrap();
                    let s = scores.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0);
                    prop_assert!(s >= cutoff, "{} and {} share a cluster at {}", a, b, s);
                }
            }
        }
        prop_assert_eq!(seen.len(), n);
    }

    #[test]
    fn linkage_is_monotone_in_each_criterion(seed in any::<u64>(), extra_km in 0.0..50.0f64) {
        let mut r = rng(seed);
        let (n_o, n_r) = (r.random_range(0..25), r.random_range(0..25));
        let (ours, reference) = random_linkage(&mut r, n_o, n_r);
        let canon = PartyCanon::bundled();
        let base = MatchCriteria::lower();
        let index = ReferenceIndex::new(&reference, &canon);
        let count = |c: &MatchCriteria| match_events(&ours, &index, c).len();
        let k = count(&base);
        let relaxed = [
            MatchCriteria { max_distance_km: base.max_distance_km + extra_km, ..base },
            MatchCriteria { party_rule: PartyRule::SomeMatch, ..base },
            MatchCriteria { require_type_match: false, ..base },
        ];
        for c in &relaxed {
            prop_assert!(count(c) >= k);
        }
        let same_month = MatchCriteria { month_tolerance: MonthTolerance::Same, ..base };
        prop_assert!(count(&same_month) <= k);
        prop_assert!(k <= count(&MatchCriteria::upper()));
    }

    #[test]
    fn linkage_matches_brute_force(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (n_o, n_r) = (r.random_range(0..40), r.random_range(0..40));
        let (ours, reference) = random_linkage(&mut r, n_o, n_r);
        let canon = PartyCanon::bundled();
        let index = ReferenceIndex::new(&reference, &canon);
        for c in [MatchCriteria::lower(), MatchCriteria::upper()] {
            let got: BTreeSet<_> = match_events(&ours, &index, &c)
                .into_iter()
                .map(|p| (p.our_id, p.ref_id))
                .collect();
            prop_assert_eq!(got, brute_force(&ours, &reference, &canon, &c));
        }
    }

    #[test]
    fn ols_ignores_row_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, y) = small_design(&mut r);
        let mut order: Vec<usize> = (0..x.rows()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut r);
        let cols: Vec<Vec<f64>> = (0..x.cols()).map(|j| order.iter().map(|&i| x.get(i, j)).collect()).collect();
        let xp = Matrix::from_columns(x.rows(), &cols);
        let yp: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let (a, b) = (ols_qr(&x, &y).unwrap(), ols_qr(&xp, &yp).unwrap());
        for (u, v) in a.coefficients.iter().zip(&b.coefficients).chain(a.std_errors.iter().zip(&b.std_errors)) {
            prop_assert!((u - v).abs() <= 1e-9 * u.abs().max(1.0));
        }
    }

    #[test]
    fn duplicated_column_is_dropped(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, y) = small_design(&mut r);
        let p = x.cols();
        let copy = r.random_range(0..p);
        let factor = [1.0, -2.0, 0.5][r.random_range(0..3)];
        let mut cols: Vec<Vec<f64>> = (0..p).map(|j| (0..x.rows()).map(|i| x.get(i, j)).collect()).collect();
        cols.push(cols[copy].iter().map(|v| v * factor).collect());
        let with_copy = ols_qr(&Matrix::from_columns(x.rows(), &cols), &y).unwrap();
        let plain = ols_qr(&x, &y).unwrap();
        prop_assert_eq!(with_copy.dropped, vec![p]);
        for (u, v) in with_copy.coefficients.iter().zip(&plain.coefficients) {
            prop_assert!((u - v).abs() <= 1e-9 * v.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn pair_features_are_symmetric(seed in 0u64..1000) {
        let corpus = generate_corpus(&CorpusParams { articles: 30, seed, ..CorpusParams::default() });
        let events = corpus.event_records();
        let inputs: Vec<PairInput<'_>> = events.iter().map(|e| PairInput::new(e, 2)).collect();
        for i in 0..inputs.len() {
            for j in i + 1..inputs.len().min(i + 6) {
                let ab = compute_pair_features(&inputs[i], &inputs[j]).to_columns();
                let ba = compute_pair_features(&inputs[j], &inputs[i]).to_columns();
                prop_assert_eq!(ab, ba);
            }
        }
    }

    #[test]
    fn department_shift_moves_only_its_effect(seed in 0u64..1000, c in -5.0..5.0f64, pick in 1usize..30) {
        let panel = planted_panel(&PanelParams { seed, ..PanelParams::default() });
        let design = panel.design(1);
        let target = panel.departments[pick].clone();
        let mut shifted = design.clone();
        for (y, d) in shifted.y.iter_mut().zip(&design.departments) {
            if *d == target {
                *y += c;
            }
        }
        let (a, b) = (fit_fixed_effects(&design).unwrap(), fit_fixed_effects(&shifted).unwrap());
        for (u, v) in a.regressors().zip(b.regressors()) {
            prop_assert!((u.estimate - v.estimate).abs() <= 1e-8 * u.estimate.abs().max(1.0));
        }
        let moved = b.department_effect(&target).unwrap() - a.department_effect(&target).unwrap();
        prop_assert!((moved - c).abs() <= 1e-8);
    }
}

fn small_design(r: &mut ChaCha8Rng) -> (Matrix, Vec<f64>) {
    let p = r.random_range(1..8);
    let n = r.random_range(p + 3..40);
    let mut cols = vec![vec![1.0; n]];
    for _ in 1..p {
        cols.push((0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect());
    }
    let y = (0..n).map(|_| r.random::<f64>()).collect();
    (Matrix::from_columns(n, &cols), y)
}
