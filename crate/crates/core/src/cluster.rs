//! Density-based clustering of per-wire entropy records and selection of
//! the suspicious low-activity cluster.
//!
//! The clustering space is one-dimensional: each wire contributes a single
//! scalar (its encoded-transition entropy, or its raw transition
//! probability in the ablation mode). Distance is absolute difference and
//! neighborhoods are closed balls (`|a - b| <= r`). A point's neighbor
//! count includes the point itself.
//!
//! Points are processed in canonical order (ascending value, ties by wire
//! name), clusters are numbered in discovery order, and border points
//! reachable from several clusters go to the lowest cluster id. That pins
//! the classic DBSCAN order-dependence: the full labeling is invariant
//! under input permutation.

use serde::{Deserialize, Serialize};

use crate::infotheory::EntropyRecord;
use crate::real::Real;

/// DBSCAN parameters: closed neighborhood radius (in the units of the
/// clustered value, i.e. nats for entropy space) and the minimum neighbor
/// count (including the point itself) for a core point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ClusterParams<F> {
    pub radius: F,
    pub min_pts: usize,
}

impl Default for ClusterParams<f64> {
    fn default() -> Self {
        // the most common settings in practice; override per run
        ClusterParams {
            radius: 0.05,
            min_pts: 5,
        }
    }
}

/// Which per-wire scalar to cluster on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterSpace {
    Entropy,
    Probability,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointRole {
    Core,
    Border,
    Noise,
}

/// DBSCAN output over the canonicalized point list.
#[derive(Clone, Debug)]
pub struct Clustering<F> {
    /// Entropy records in canonical order (ascending clustered value, then
    /// wire name). `values`, `labels` and `roles` are index-aligned.
    pub points: Vec<EntropyRecord<F>>,
    pub values: Vec<F>,
    pub labels: Vec<Option<usize>>,
    pub roles: Vec<PointRole>,
    pub num_clusters: usize,
    pub space: ClusterSpace,
}

impl<F: Real> Clustering<F> {
    /// Members of one cluster as canonical indices.
    pub fn cluster_members(&self, id: usize) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&i| self.labels[i] == Some(id))
            .collect()
    }

    /// Cluster wire-name sets, for order-insensitive partition comparison.
    pub fn partition(&self) -> Vec<Vec<String>> {
        (0..self.num_clusters)
            .map(|c| {
                self.cluster_members(c)
                    .iter()
                    .map(|&i| self.points[i].wire.clone())
                    .collect()
            })
            .collect()
    }
}

fn canonical_order<F: Real>(records: &[EntropyRecord<F>], space: ClusterSpace) -> Vec<usize> {
    let value = |r: &EntropyRecord<F>| match space {
        ClusterSpace::Entropy => r.entropy,
        ClusterSpace::Probability => r.p_transition,
    };
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        value(&records[a])
            .partial_cmp(&value(&records[b]))
            .expect("entropy values are finite")
            .then_with(|| records[a].wire.cmp(&records[b].wire))
    });
    order
}

/// DBSCAN over the 1-D value space of `records`.
pub fn dbscan<F: Real>(
    records: &[EntropyRecord<F>],
    params: &ClusterParams<F>,
    space: ClusterSpace,
) -> Clustering<F> {
    assert!(params.radius > F::zero(), "radius must be positive");
    assert!(params.min_pts >= 1, "min_pts must be at least 1");
    let order = canonical_order(records, space);
    let points: Vec<EntropyRecord<F>> = order.iter().map(|&i| records[i].clone()).collect();
    let values: Vec<F> = points
        .iter()
        .map(|r| match space {
            ClusterSpace::Entropy => r.entropy,
            ClusterSpace::Probability => r.p_transition,
        })
        .collect();
    let n = points.len();

    // values are sorted, so each neighborhood is a contiguous index range
    let mut lo = vec![0usize; n];
    let mut hi = vec![0usize; n];
    {
        let mut a = 0usize;
        let mut b = 0usize;
        for i in 0..n {
            while values[i] - values[a] > params.radius {
                a += 1;
            }
            if b < i {
                b = i;
            }
            while b + 1 < n && values[b + 1] - values[i] <= params.radius {
                b += 1;
            }
            lo[i] = a;
            hi[i] = b;
        }
    }
    let is_core: Vec<bool> = (0..n).map(|i| hi[i] - lo[i] + 1 >= params.min_pts).collect();

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut num_clusters = 0usize;
    for i in 0..n {
        if !is_core[i] || labels[i].is_some() {
            continue;
        }
        let cluster = num_clusters;
        num_clusters += 1;
        let mut queue = std::collections::VecDeque::from([i]);
        labels[i] = Some(cluster);
        while let Some(p) = queue.pop_front() {
            if !is_core[p] {
                continue; // border points do not expand
            }
            for q in lo[p]..=hi[p] {
                if labels[q].is_none() {
                    labels[q] = Some(cluster);
                    queue.push_back(q);
                }
            }
        }
    }

    let roles: Vec<PointRole> = (0..n)
        .map(|i| {
            if is_core[i] {
                PointRole::Core
            } else if labels[i].is_some() {
                PointRole::Border
            } else {
                PointRole::Noise
            }
        })
        .collect();

    Clustering {
        points,
        values,
        labels,
        roles,
        num_clusters,
        space,
    }
}

/// O(n^2) reference implementation: direct density-reachability closure by
/// union-find over core points, then border attachment to the lowest
/// cluster id. No performance goals; exists to property-test [`dbscan`].
pub fn dbscan_reference_oracle<F: Real>(
    records: &[EntropyRecord<F>],
    params: &ClusterParams<F>,
    space: ClusterSpace,
) -> Clustering<F> {
    let order = canonical_order(records, space);
    let points: Vec<EntropyRecord<F>> = order.iter().map(|&i| records[i].clone()).collect();
    let values: Vec<F> = points
        .iter()
        .map(|r| match space {
            ClusterSpace::Entropy => r.entropy,
            ClusterSpace::Probability => r.p_transition,
        })
        .collect();
    let n = points.len();
    let within = |a: usize, b: usize| (values[a] - values[b]).abs() <= params.radius;

    let is_core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| within(i, j)).count() >= params.min_pts)
        .collect();

    // union-find over mutually reachable core points
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && is_core[i] && is_core[j] && within(i, j) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    // cluster ids in order of each component's smallest core index
    let mut cluster_of_root: std::collections::BTreeMap<usize, usize> = Default::default();
    for i in 0..n {
        if is_core[i] {
            let root = find(&mut parent, i);
            let next = cluster_of_root.len();
            cluster_of_root.entry(root).or_insert(next);
        }
    }

    let mut labels: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        if is_core[i] {
            let root = find(&mut parent, i);
            labels[i] = Some(cluster_of_root[&root]);
        }
    }
    for i in 0..n {
        if !is_core[i] {
            labels[i] = (0..n)
                .filter(|&j| is_core[j] && within(i, j))
                .map(|j| labels[j].unwrap())
                .min();
        }
    }

    let roles: Vec<PointRole> = (0..n)
        .map(|i| {
            if is_core[i] {
                PointRole::Core
            } else if labels[i].is_some() {
                PointRole::Border
            } else {
                PointRole::Noise
            }
        })
        .collect();
    let num_clusters = cluster_of_root.len();

    Clustering {
        points,
        values,
        labels,
        roles,
        num_clusters,
        space,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuspectWarning {
    /// Every point was noise; parameters are too strict for this space.
    NoClusters,
    /// The reported cluster covers the whole space: the parameters did not
    /// separate anything.
    NoSeparation,
}

/// The reported suspicious wires: the cluster at the bottom of the space,
/// minus wires whose activity is high (entropy low only by symmetry).
#[derive(Clone, Debug)]
pub struct SuspectSet<F> {
    /// Suspects ordered by ascending entropy.
    pub wires: Vec<EntropyRecord<F>>,
    /// Canonical cluster id the suspects came from, when any cluster exists.
    pub source_cluster: Option<usize>,
    /// Wires of the source cluster excluded by the `p > 0.5` symmetry rule.
    pub symmetry_excluded: Vec<String>,
    pub warnings: Vec<SuspectWarning>,
}

impl<F> SuspectSet<F> {
    pub fn names(&self) -> Vec<String> {
        self.wires.iter().map(|r| r.wire.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.wires.is_empty()
    }
}

/// Picks the cluster with the minimum mean clustered value as the suspect
/// set. Noise points are deleted, never reported (unless
/// `include_low_noise` pulls back noise points at or below the cluster's
/// maximum value). Members with transition probability above 0.5 are
/// excluded: their entropy is low because of too much activity, not too
/// little.
pub fn select_suspects<F: Real>(
    clustering: &Clustering<F>,
    include_low_noise: bool,
) -> SuspectSet<F> {
    let half = F::from_f64_lossy(0.5);
    if clustering.num_clusters == 0 {
        return SuspectSet {
            wires: Vec::new(),
            source_cluster: None,
            symmetry_excluded: Vec::new(),
            warnings: vec![SuspectWarning::NoClusters],
        };
    }
    let best = (0..clustering.num_clusters)
        .min_by(|&a, &b| {
            let mean = |c: usize| {
                let members = clustering.cluster_members(c);
                let sum: F = members.iter().map(|&i| clustering.values[i]).sum();
                sum / F::from_count(members.len())
            };
            mean(a)
                .partial_cmp(&mean(b))
                .expect("cluster means are finite")
        })
        .expect("at least one cluster");

    let members = clustering.cluster_members(best);
    let mut warnings = Vec::new();
    if members.len() == clustering.points.len() {
        warnings.push(SuspectWarning::NoSeparation);
    }

    let mut wires: Vec<EntropyRecord<F>> = Vec::new();
    let mut symmetry_excluded = Vec::new();
    for &i in &members {
        let rec = &clustering.points[i];
        if rec.p_transition > half {
            symmetry_excluded.push(rec.wire.clone());
        } else {
            wires.push(rec.clone());
        }
    }
    if include_low_noise {
        let cutoff = members
            .iter()
            .map(|&i| clustering.values[i])
            .fold(F::neg_infinity(), F::max);
        for i in 0..clustering.points.len() {
            if clustering.roles[i] == PointRole::Noise && clustering.values[i] <= cutoff {
                let rec = &clustering.points[i];
                if rec.p_transition > half {
                    symmetry_excluded.push(rec.wire.clone());
                } else {
                    wires.push(rec.clone());
                }
            }
        }
    }
    wires.sort_by(|a, b| {
        a.entropy
            .partial_cmp(&b.entropy)
            .unwrap()
            .then_with(|| a.wire.cmp(&b.wire))
    });
    SuspectSet {
        wires,
        source_cluster: Some(best),
        symmetry_excluded,
        warnings,
    }
}
