//! Near-duplicate detection: date blocking, pair features, a random-forest
//! pair classifier and clique clustering.

pub mod blocking;
pub mod cluster;
pub mod features;
pub mod forest;
pub mod similarity;
pub mod train;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

pub use blocking::{generate_candidate_pairs, CandidatePairs};
pub use cluster::{
    assign_representatives, calibrate_cutoff, cluster_duplicates, duplicate_rate, information_score,
    select_representative, Calibration, EventCluster, ScoredPair,
};
pub use features::{compute_pair_features, MatchLevel, PairFeatures, PairInput, FEATURE_NAMES};
pub use similarity::{shingle_tfidf_cosine, ShingleProfile};
pub use train::{
    load_labels, pair_key, score_pair, train_classifier, DedupConfig, Metrics, PairLabel,
    TrainedClassifier, TrainingReport,
};

use crate::event::EventRecord;
use crate::Result;

/// Scores every candidate pair within the blocking window. Output is
/// sorted by `(a, b)` regardless of thread count.
pub fn score_candidates(
    events: &[EventRecord],
    model: &TrainedClassifier,
    config: &DedupConfig,
) -> Result<Vec<ScoredPair>> {
    model.check_schema()?;
    let inputs: Vec<PairInput<'_>> = events
        .par_iter()
        .map(|e| PairInput::new(e, config.shingle_n))
        .collect();
    let dates: Vec<_> = events.iter().map(|e| e.event_date).collect();
    let candidates = generate_candidate_pairs(&dates, config.blocking_window_days);
    let mut scored: Vec<ScoredPair> = candidates
        .par_iter()
        .map(|&(i, j)| {
            let f = compute_pair_features(&inputs[i], &inputs[j]);
            ScoredPair::new(events[i].id(), events[j].id(), model.score_unchecked(&f))
        })
        .collect();
    scored.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
    Ok(scored)
}

/// Clusters at `cutoff` and picks each cluster's representative.
pub fn deduplicate(events: &[EventRecord], pairs: &[ScoredPair], cutoff: f64) -> Vec<EventCluster> {
    let ids: Vec<String> = events.iter().map(|e| e.id().to_string()).collect();
    let mut clusters = cluster_duplicates(&ids, pairs, cutoff);
    assign_representatives(&mut clusters, events);
    clusters
}

/// Features for every labeled pair whose two articles are both among
/// `events`. Pairs with a missing article are skipped; callers compare the
/// map size with the label count to report them.
pub fn label_features(
    events: &[EventRecord],
    labels: &[PairLabel],
    shingle_n: usize,
) -> BTreeMap<(String, String), PairFeatures> {
    let index: HashMap<&str, usize> = events.iter().enumerate().map(|(i, e)| (e.id(), i)).collect();
    let needed: Vec<(usize, usize)> = labels
        .iter()
        .filter_map(|l| Some((*index.get(l.article_id_a.as_str())?, *index.get(l.article_id_b.as_str())?)))
        .collect();
    let mut used = vec![false; events.len()];
    for &(i, j) in &needed {
        used[i] = true;
        used[j] = true;
    }
    let inputs: Vec<Option<PairInput<'_>>> = events
        .par_iter()
        .zip(used.par_iter())
        .map(|(e, &u)| u.then(|| PairInput::new(e, shingle_n)))
        .collect();
    needed
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (inputs[i].as_ref().unwrap(), inputs[j].as_ref().unwrap());
            (pair_key(events[i].id(), events[j].id()), compute_pair_features(a, b))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
