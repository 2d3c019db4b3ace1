//! Pairwise consistency over views (the GAC fixpoint).

use std::collections::{BTreeSet, HashSet};

use crate::decomposition::{ValId, ViewPair};

/// Counters of one fixpoint computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GacReport {
    /// Source views taken from the worklist.
    pub passes: usize,
    /// Passes that deleted at least one tuple.
    pub rounds: usize,
    pub deletions: usize,
}

/// Greatest pairwise-consistent sub-structure of `v`. The input is not modified.
pub fn gac(v: &ViewPair) -> ViewPair {
    let mut out = v.clone();
    gac_in_place(&mut out);
    out
}

pub fn gac_in_place(v: &mut ViewPair) -> GacReport {
    let rank: Vec<usize> = (0..v.len()).collect();
    gac_scheduled(v, &rank)
}

/// Fixpoint with the worklist ordered by `rank` (lower first). The result does
/// not depend on the schedule; this entry point exists to check exactly that.
pub fn gac_scheduled(v: &mut ViewPair, rank: &[usize]) -> GacReport {
    let all: Vec<usize> = (0..v.len()).collect();
    propagate(v, rank, &all)
}

/// Fixpoint of a structure that was pairwise consistent before the views in
/// `changed` lost tuples.
pub fn gac_after_change(v: &mut ViewPair, changed: &[usize]) -> GacReport {
    let rank: Vec<usize> = (0..v.len()).collect();
    propagate(v, &rank, changed)
}

/// Dense key spaces up to this size use a bitmap instead of a hash set.
const DENSE_LIMIT: u64 = 1 << 22;

/// The projection of a view onto some of its positions.
enum Projection {
    Dense { base: u64, bits: Vec<bool>, len: usize },
    Sparse(HashSet<Vec<ValId>>),
}

impl Projection {
    fn new(tuples: &[Vec<ValId>], positions: &[usize], values: usize) -> Projection {
        let base = values.max(1) as u64;
        match base.checked_pow(positions.len() as u32) {
            Some(size) if size <= DENSE_LIMIT => {
                let mut bits = vec![false; size as usize];
                let mut len = 0;
                for t in tuples {
                    let code = encode(base, t, positions);
                    if !bits[code] {
                        bits[code] = true;
                        len += 1;
                    }
                }
                Projection::Dense { base, bits, len }
            }
            _ => Projection::Sparse(tuples.iter().map(|t| positions.iter().map(|&p| t[p]).collect()).collect()),
        }
    }

    /// Every key of the space occurs, so nothing can be filtered out.
    fn is_full(&self) -> bool {
        matches!(self, Projection::Dense { bits, len, .. } if *len == bits.len())
    }

    fn len(&self) -> usize {
        match self {
            Projection::Dense { len, .. } => *len,
            Projection::Sparse(set) => set.len(),
        }
    }

    fn contains(&self, t: &[ValId], positions: &[usize]) -> bool {
        match self {
            Projection::Dense { base, bits, .. } => bits[encode(*base, t, positions)],
            Projection::Sparse(set) => set.contains(&positions.iter().map(|&p| t[p]).collect::<Vec<_>>()),
        }
    }
}

fn encode(base: u64, t: &[ValId], positions: &[usize]) -> usize {
    positions.iter().fold(0u64, |acc, &p| acc * base + t[p] as u64) as usize
}

fn propagate(v: &mut ViewPair, rank: &[usize], start: &[usize]) -> GacReport {
    assert_eq!(rank.len(), v.len(), "one rank per view");
    let table = v.link_table();
    let links = table.get().expect("link table is initialised");
    let mut report = GacReport::default();
    let mut applied = v.take_applied(links);
    let values = v.values().len();
    let mut queue: BTreeSet<(usize, usize)> = start.iter().map(|&i| (rank[i], i)).collect();
    while let Some((_, source)) = queue.pop_first() {
        report.passes += 1;
        let mut deleted_here = 0;
        for (g, group) in links[source].iter().enumerate() {
            let projection = Projection::new(&v.views()[source].tuples, &group.source_positions, values);
            if applied[source][g] == projection.len() {
                continue;
            }
            applied[source][g] = projection.len();
            if projection.is_full() {
                continue;
            }
            for (target, positions) in &group.targets {
                let tuples = v.tuples_mut(*target);
                let before = tuples.len();
                tuples.retain(|t| projection.contains(t, positions));
                let removed = before - tuples.len();
                if removed > 0 {
                    deleted_here += removed;
                    queue.insert((rank[*target], *target));
                }
            }
        }
        if deleted_here > 0 {
            report.rounds += 1;
            report.deletions += deleted_here;
        }
    }
    v.restore_applied(applied);
    report
}

/// Whether every two views agree on the projections to their shared variables.
pub fn is_pairwise_consistent(v: &ViewPair) -> bool {
    let table = v.link_table();
    let links = table.get().expect("link table is initialised");
    links.iter().enumerate().all(|(source, groups)| {
        groups.iter().all(|group| {
            let projection: HashSet<Vec<ValId>> = v.views()[source]
                .tuples
                .iter()
                .map(|t| group.source_positions.iter().map(|&p| t[p]).collect())
                .collect();
            group.targets.iter().all(|(target, positions)| {
                let other: HashSet<Vec<ValId>> = v.views()[*target]
                    .tuples
                    .iter()
                    .map(|t| positions.iter().map(|&p| t[p]).collect())
                    .collect();
                other == projection
            })
        })
    })
}
