//! Clique clustering of scored pairs, representative selection and cutoff
//! calibration.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::event::EventRecord;

/// A scored candidate pair; `a < b` lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub a: String,
    pub b: String,
    pub score: f64,
}

impl ScoredPair {
    pub fn new(x: &str, y: &str, score: f64) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        ScoredPair {
            a: a.to_string(),
            b: b.to_string(),
            score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCluster {
    pub cluster_id: String,
    /// Sorted article ids; every pair among them scored at or above the cutoff.
    pub members: Vec<String>,
    pub representative: String,
    /// Mean score over the internal pairs; `None` for singletons.
    pub mean_score: Option<f64>,
}

/// Dense adjacency of one connected component, nodes in id order.
struct Component {
    nodes: Vec<usize>,
    adj: Vec<bool>,
    score: Vec<f64>,
}

impl Component {
    fn n(&self) -> usize {
        self.nodes.len()
    }

    fn edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n() + j]
    }
}

#[derive(Debug, Clone)]
struct Best {
    members: Vec<usize>,
    score_sum: f64,
}

impl Best {
    /// Larger cliques first, then higher score sum, then the smaller
    /// (lexicographic) member list.
    fn beats(&self, other: &Best) -> bool {
        if self.members.len() != other.members.len() {
            return self.members.len() > other.members.len();
        }
        if self.score_sum != other.score_sum {
            return self.score_sum > other.score_sum;
        }
        self.members < other.members
    }
}

struct CliqueSearch<'a> {
    comp: &'a Component,
    best: Option<Best>,
}

impl CliqueSearch<'_> {
    fn score_sum(&self, members: &[usize]) -> f64 {
        let mut sum = 0.0;
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                sum += self.comp.score[i * self.comp.n() + j];
            }
        }
        sum
    }

    /// Bron-Kerbosch with pivoting, pruned once a branch cannot reach the
    /// size of the best clique found so far.
    fn expand(&mut self, r: &mut Vec<usize>, p: Vec<usize>, x: Vec<usize>) {
        if let Some(best) = &self.best {
            if r.len() + p.len() < best.members.len() {
                return;
            }
        }
        if p.is_empty() {
            if x.is_empty() {
                let mut members = r.clone();
                members.sort_unstable();
                let candidate = Best {
                    score_sum: self.score_sum(&members),
                    members,
                };
                if self.best.as_ref().is_none_or(|b| candidate.beats(b)) {
                    self.best = Some(candidate);
                }
            }
            return;
        }
        let comp = self.comp;
        let pivot = p
            .iter()
            .chain(&x)
            .copied()
            .max_by_key(|&u| (p.iter().filter(|&&v| comp.edge(u, v)).count(), std::cmp::Reverse(u)))
            .expect("p is non-empty");
        let branch: Vec<usize> = p.iter().copied().filter(|&v| !comp.edge(pivot, v)).collect();
        let mut p = p;
        let mut x = x;
        for v in branch {
            let np: Vec<usize> = p.iter().copied().filter(|&w| comp.edge(v, w)).collect();
            let nx: Vec<usize> = x.iter().copied().filter(|&w| comp.edge(v, w)).collect();
            r.push(v);
            self.expand(r, np, nx);
            r.pop();
            p.retain(|&w| w != v);
            x.push(v);
        }
    }
}

/// Repeatedly removes the best maximal clique from the component.
fn partition_component(comp: &Component) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..comp.n()).collect();
    let mut out = Vec::new();
    while !remaining.is_empty() {
        let mut search = CliqueSearch { comp, best: None };
        search.expand(&mut Vec::new(), remaining.clone(), Vec::new());
        let best = search.best.expect("a non-empty graph has a clique").members;
        remaining.retain(|v| best.binary_search(v).is_err());
        out.push(best);
    }
    out
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Partitions `ids` into cliques of the graph whose edges are the pairs
/// scoring at least `cutoff`.
///
/// Within each connected component the best maximal clique is extracted
/// repeatedly, best meaning largest, then highest sum of edge scores, then
/// lexicographically smallest sorted member list. Records without a kept
/// edge become singletons. Representatives are left empty here; see
/// [`assign_representatives`].
pub fn cluster_duplicates(ids: &[String], pairs: &[ScoredPair], cutoff: f64) -> Vec<EventCluster> {
    let mut sorted: Vec<&str> = ids.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let index: HashMap<&str, usize> = sorted.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for p in pairs.iter().filter(|p| p.score >= cutoff) {
        let (Some(&i), Some(&j)) = (index.get(p.a.as_str()), index.get(p.b.as_str())) else {
            continue;
        };
        if i == j {
            continue;
        }
        let key = (i.min(j), i.max(j));
        let e = edges.entry(key).or_insert(p.score);
        *e = e.max(p.score);
    }

    let mut parent: Vec<usize> = (0..sorted.len()).collect();
    for &(i, j) in edges.keys() {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
        }
    }
    let mut components: BTreeMap<usize, (Vec<usize>, Vec<(usize, usize, f64)>)> = BTreeMap::new();
    for v in 0..sorted.len() {
        let root = find(&mut parent, v);
        components.entry(root).or_default().0.push(v);
    }
    for (&(i, j), &s) in &edges {
        let root = find(&mut parent, i);
        components.get_mut(&root).expect("component exists").1.push((i, j, s));
    }

    let mut groups: Vec<(Vec<usize>, Option<f64>)> = Vec::new();
    for (nodes, comp_edges) in components.into_values() {
        if nodes.len() == 1 {
            groups.push((nodes, None));
            continue;
        }
        let n = nodes.len();
        let local: HashMap<usize, usize> = nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let mut comp = Component {
            nodes,
            adj: vec![false; n * n],
            score: vec![0.0; n * n],
        };
        for (i, j, s) in comp_edges {
            let (li, lj) = (local[&i], local[&j]);
            for (x, y) in [(li, lj), (lj, li)] {
                comp.adj[x * n + y] = true;
                comp.score[x * n + y] = s;
            }
        }
        for clique in partition_component(&comp) {
            let mean = (clique.len() > 1).then(|| {
                let mut sum = 0.0;
                let mut count = 0usize;
                for (k, &i) in clique.iter().enumerate() {
                    for &j in &clique[k + 1..] {
                        sum += comp.score[i * n + j];
                        count += 1;
                    }
                }
                sum / count as f64
            });
            groups.push((clique.iter().map(|&l| comp.nodes[l]).collect(), mean));
        }
    }
    groups.sort_by(|a, b| a.0.cmp(&b.0));
    groups
        .into_iter()
        .enumerate()
        .map(|(k, (members, mean_score))| EventCluster {
            cluster_id: format!("c{k:06}"),
            members: members.iter().map(|&i| sorted[i].to_string()).collect(),
            representative: String::new(),
            mean_score,
        })
        .collect()
}

/// Information score: present fields count once, location fields (the
/// location list and the geocoded point) twice.
pub fn information_score(event: &EventRecord) -> u32 {
    let fields: u32 = event
        .record
        .present_fields()
        .into_iter()
        .filter(|(_, present)| *present)
        .map(|(name, _)| if name == "locations" { 2 } else { 1 })
        .sum();
    fields + if event.point.is_some() { 2 } else { 0 }
}

/// Highest information score; ties go to the earlier publication date,
/// then the smaller id. Members missing from `records` are ignored unless
/// none are present, in which case the first member is returned.
pub fn select_representative(cluster: &EventCluster, records: &HashMap<&str, &EventRecord>) -> String {
    cluster
        .members
        .iter()
        .filter_map(|id| records.get(id.as_str()).map(|r| (id, *r)))
        .min_by(|(ia, a), (ib, b)| {
            information_score(b)
                .cmp(&information_score(a))
                .then(a.publication_date.cmp(&b.publication_date))
                .then(ia.cmp(ib))
        })
        .map(|(id, _)| id.clone())
        .unwrap_or_else(|| cluster.members[0].clone())
}

pub fn assign_representatives(clusters: &mut [EventCluster], events: &[EventRecord]) {
    let by_id: HashMap<&str, &EventRecord> = events.iter().map(|e| (e.id(), e)).collect();
    for c in clusters {
        c.representative = select_representative(c, &by_id);
    }
}

/// Fraction of records that are not cluster representatives.
pub fn duplicate_rate(n_records: usize, n_clusters: usize) -> f64 {
    if n_records == 0 {
        0.0
    } else {
        (n_records - n_clusters) as f64 / n_records as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub cutoff: f64,
    pub duplicate_rate: f64,
    pub target_rate: f64,
    pub clusters: usize,
    pub warning: Option<String>,
}

const RATE_WARN_GAP: f64 = 0.05;

/// Chooses the cutoff whose duplicate rate is nearest `target_rate`.
///
/// Candidates are the distinct positive pair scores plus a no-merge cutoff
/// above the highest score. The rate falls as the cutoff rises, so a binary
/// search locates the crossing; the nearer side wins, ties going to the
/// higher cutoff.
pub fn calibrate_cutoff(ids: &[String], pairs: &[ScoredPair], target_rate: f64) -> crate::Result<Calibration> {
    if !(0.0..1.0).contains(&target_rate) {
        return Err(crate::Error::Config(format!(
            "target duplicate rate must be in [0,1), got {target_rate}"
        )));
    }
    let mut n = ids.to_vec();
    n.sort_unstable();
    n.dedup();
    let n = n.len();

    let mut scores: Vec<f64> = pairs.iter().map(|p| p.score).filter(|&s| s > 0.0).collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    let mut warning = None;
    let max = scores.last().copied();
    match max {
        Some(m) if m < 1.0 => scores.push((m + 1.0) / 2.0),
        Some(_) => {}
        None => scores.push(1.0),
    }
    if scores.len() <= 2 {
        warning = Some("pair scores are all identical; returning a boundary cutoff".to_string());
    }

    let mut cache: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    let mut eval = |k: usize| -> (f64, usize) {
        *cache.entry(k).or_insert_with(|| {
            let clusters = cluster_duplicates(ids, pairs, scores[k]).len();
            (duplicate_rate(n, clusters), clusters)
        })
    };
    // last index whose rate is still at least the target
    let last = scores.len() - 1;
    let mut pick = 0;
    if eval(0).0 >= target_rate {
        let (mut lo, mut hi) = (0usize, last);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if eval(mid).0 >= target_rate {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        pick = lo;
        if lo < last && (eval(lo + 1).0 - target_rate).abs() <= (eval(lo).0 - target_rate).abs() {
            pick = lo + 1;
        }
    }
    let (rate, clusters) = eval(pick);
    if warning.is_none() && (rate - target_rate).abs() > RATE_WARN_GAP {
        warning = Some(format!(
            "target duplicate rate {target_rate} is not attainable; nearest is {rate:.4}"
        ));
    }
    Ok(Calibration {
        cutoff: scores[pick],
        duplicate_rate: rate,
        target_rate,
        clusters,
        warning,
    })
}
