//! Hypergraphs, acyclicity, join trees and tree projections.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::structures::{compute_cores, pin_jointly, RelationalStructure, StructureError};

pub type Edge = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HypergraphError {
    #[error("hyperedges must be nonempty")]
    EmptyEdge,
    #[error("hyperedge node `{0}` is not a node of the hypergraph")]
    UnknownNode(String),
    #[error("hypergraph is not acyclic")]
    Cyclic,
}

/// A hypergraph. Duplicate edges collapse; subsumed edges are kept (see [`Hypergraph::reduced`]).
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hypergraph {
    nodes: BTreeSet<String>,
    edges: BTreeSet<Edge>,
}

impl Hypergraph {
    pub fn new<N, E>(nodes: N, edges: E) -> Result<Self, HypergraphError>
    where
        N: IntoIterator,
        N::Item: Into<String>,
        E: IntoIterator<Item = Edge>,
    {
        let nodes: BTreeSet<String> = nodes.into_iter().map(Into::into).collect();
        let mut hg = Hypergraph { nodes, edges: BTreeSet::new() };
        for edge in edges {
            if edge.is_empty() {
                return Err(HypergraphError::EmptyEdge);
            }
            if let Some(x) = edge.iter().find(|x| !hg.nodes.contains(*x)) {
                return Err(HypergraphError::UnknownNode(x.clone()));
            }
            hg.edges.insert(edge);
        }
        Ok(hg)
    }

    /// Hypergraph whose nodes are exactly the nodes of its (nonempty) edges.
    pub fn from_edges<E, I, S>(edges: E) -> Self
    where
        E: IntoIterator<Item = I>,
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let edges: BTreeSet<Edge> = edges
            .into_iter()
            .map(|e| e.into_iter().map(Into::into).collect::<Edge>())
            .filter(|e| !e.is_empty())
            .collect();
        let nodes = edges.iter().flatten().cloned().collect();
        Hypergraph { nodes, edges }
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    /// The same hypergraph without edges strictly contained in another edge.
    pub fn reduced(&self) -> Hypergraph {
        let edges = self
            .edges
            .iter()
            .filter(|e| !self.edges.iter().any(|f| f != *e && e.is_subset(f)))
            .cloned()
            .collect();
        Hypergraph { nodes: self.nodes.clone(), edges }
    }
}

/// `H_A`: one hyperedge per constraint tuple.
pub fn hypergraph_of(a: &RelationalStructure) -> Hypergraph {
    Hypergraph {
        nodes: a.universe().clone(),
        edges: a.tuples().map(|(_, t)| t.iter().cloned().collect()).collect(),
    }
}

/// Gaifman graph: an edge between any two distinct elements sharing a tuple.
pub fn gaifman_graph(a: &RelationalStructure) -> Hypergraph {
    let mut edges = BTreeSet::new();
    for (_, t) in a.tuples() {
        for x in t {
            for y in t {
                if x < y {
                    edges.insert(BTreeSet::from([x.clone(), y.clone()]));
                }
            }
        }
    }
    Hypergraph { nodes: a.universe().clone(), edges }
}

/// GYO reduction; the residual is empty iff the input is acyclic.
pub fn gyo_reduce(h: &Hypergraph) -> Hypergraph {
    let mut edges: Vec<Edge> = h.edges.iter().cloned().collect();
    loop {
        let mut changed = false;
        let mut occurrences: HashMap<&String, usize> = HashMap::new();
        for e in &edges {
            for x in e {
                *occurrences.entry(x).or_default() += 1;
            }
        }
        let lonely: BTreeSet<String> = occurrences
            .into_iter()
            .filter(|(_, c)| *c <= 1)
            .map(|(x, _)| x.clone())
            .collect();
        if !lonely.is_empty() {
            for e in &mut edges {
                e.retain(|x| !lonely.contains(x));
            }
            changed = true;
        }
        let before = edges.len();
        edges.retain(|e| !e.is_empty());
        edges.sort();
        edges.dedup();
        let snapshot = edges.clone();
        edges.retain(|e| !snapshot.iter().any(|f| f != e && e.is_subset(f)));
        changed |= edges.len() != before;
        if !changed {
            break;
        }
    }
    let nodes = edges.iter().flatten().cloned().collect();
    Hypergraph { nodes, edges: edges.into_iter().collect() }
}

pub fn is_acyclic(h: &Hypergraph) -> bool {
    gyo_reduce(h).edges.is_empty()
}

/// A tree over the hyperedges of a hypergraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinTree {
    pub vertices: Vec<Edge>,
    pub tree_edges: Vec<(usize, usize)>,
}

impl JoinTree {
    pub fn is_tree(&self) -> bool {
        let n = self.vertices.len();
        if n == 0 {
            return self.tree_edges.is_empty();
        }
        if self.tree_edges.len() != n - 1 {
            return false;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.tree_edges {
            if a >= n || b >= n {
                return false;
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }

    /// Running intersection: for every node, the vertices containing it span a subtree.
    pub fn satisfies_connectedness(&self) -> bool {
        if !self.is_tree() {
            return false;
        }
        let nodes: BTreeSet<&String> = self.vertices.iter().flatten().collect();
        nodes.into_iter().all(|x| {
            let holders = self.vertices.iter().filter(|v| v.contains(x)).count();
            let links = self
                .tree_edges
                .iter()
                .filter(|(a, b)| self.vertices[*a].contains(x) && self.vertices[*b].contains(x))
                .count();
            links + 1 == holders
        })
    }
}

/// Join tree of an acyclic hypergraph, as a maximum-weight spanning tree of the
/// intersection graph (weights are intersection sizes).
pub fn build_join_tree(h: &Hypergraph) -> Result<JoinTree, HypergraphError> {
    if !is_acyclic(h) {
        return Err(HypergraphError::Cyclic);
    }
    let vertices: Vec<Edge> = h.edges.iter().cloned().collect();
    let n = vertices.len();
    let mut tree_edges = Vec::with_capacity(n.saturating_sub(1));
    if n > 0 {
        // Prim, ties broken by index for determinism.
        let mut in_tree = vec![false; n];
        let mut best: Vec<(usize, usize)> = vec![(0, 0); n];
        in_tree[0] = true;
        for j in 1..n {
            best[j] = (vertices[0].intersection(&vertices[j]).count(), 0);
        }
        for _ in 1..n {
            let next = (0..n)
                .filter(|&j| !in_tree[j])
                .max_by_key(|&j| (best[j].0, std::cmp::Reverse(j)))
                .unwrap();
            in_tree[next] = true;
            let from = best[next].1;
            tree_edges.push((from.min(next), from.max(next)));
            for j in 0..n {
                if !in_tree[j] {
                    let w = vertices[next].intersection(&vertices[j]).count();
                    if w > best[j].0 {
                        best[j] = (w, next);
                    }
                }
            }
        }
    }
    let tree = JoinTree { vertices, tree_edges };
    if !tree.satisfies_connectedness() {
        return Err(HypergraphError::Cyclic);
    }
    Ok(tree)
}

/// `h1 ≤ h2`: every edge of `h1` is contained in some edge of `h2`.
pub fn hg_leq(h1: &Hypergraph, h2: &Hypergraph) -> bool {
    h1.edges.iter().all(|e| h2.edges.iter().any(|f| e.is_subset(f)))
}

/// Largest node count accepted by [`find_tree_projection`].
pub const MAX_PROJECTION_NODES: usize = 24;

/// Some acyclic `Ha` with `h1 ≤ Ha ≤ h2`, or `None` if the pair has no tree projection.
///
/// Exact search over elimination orderings of the primal graph of `h1`: a tree
/// projection exists iff some ordering has every elimination clique (the
/// eliminated node plus the later nodes reachable through eliminated ones)
/// inside an edge of `h2`. The cliques of such an ordering form `Ha`.
pub fn find_tree_projection(h1: &Hypergraph, h2: &Hypergraph) -> Option<Hypergraph> {
    if !hg_leq(h1, h2) {
        return None;
    }
    let vertices: Vec<&String> = h1.edges.iter().flatten().collect::<BTreeSet<_>>().into_iter().collect();
    let n = vertices.len();
    assert!(
        n <= MAX_PROJECTION_NODES,
        "tree projection search is limited to {MAX_PROJECTION_NODES} nodes, got {n}"
    );
    let index: HashMap<&String, usize> = vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut adjacency = vec![0u32; n];
    for e in &h1.edges {
        let mask = e.iter().fold(0u32, |m, x| m | 1 << index[x]);
        for x in e {
            adjacency[index[x]] |= mask & !(1 << index[x]);
        }
    }
    let caps: Vec<u32> = h2
        .reduced()
        .edges
        .iter()
        .map(|e| e.iter().filter_map(|x| index.get(x)).fold(0u32, |m, &i| m | 1 << i))
        .collect();
    let fits = |bag: u32| caps.iter().any(|&c| bag & !c == 0);

    // Later neighbours of v once the set `done` has been eliminated.
    let clique = |done: u32, v: usize| -> u32 {
        let mut seen = 1u32 << v;
        let mut frontier = 1u32 << v;
        let mut outside = 0u32;
        while frontier != 0 {
            let x = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let nb = adjacency[x] & !seen;
            seen |= nb;
            outside |= nb & !done;
            frontier |= nb & done;
        }
        outside | 1 << v
    };

    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut last = vec![u8::MAX; 1usize << n];
    last[0] = 0;
    for done in 0..=full {
        if done != 0 && last[done as usize] == u8::MAX {
            continue;
        }
        for v in 0..n {
            let next = done | 1 << v;
            if done & 1 << v != 0 || last[next as usize] != u8::MAX {
                continue;
            }
            if fits(clique(done, v)) {
                last[next as usize] = v as u8;
            }
        }
        if last[full as usize] != u8::MAX || done == full {
            break;
        }
    }
    if n > 0 && last[full as usize] == u8::MAX {
        return None;
    }
    let mut order = Vec::with_capacity(n);
    let mut rest = full;
    while rest != 0 {
        let v = last[rest as usize] as usize;
        order.push(v);
        rest &= !(1 << v);
    }
    order.reverse();
    let mut done = 0u32;
    let mut bags = BTreeSet::new();
    for v in order {
        let bag = clique(done, v);
        bags.insert(
            (0..n)
                .filter(|i| bag & 1 << i != 0)
                .map(|i| vertices[i].clone())
                .collect::<Edge>(),
        );
        done |= 1 << v;
    }
    let projection = Hypergraph { nodes: h1.nodes.clone(), edges: bags }.reduced();
    debug_assert!(is_acyclic(&projection) && hg_leq(h1, &projection) && hg_leq(&projection, h2));
    Some(projection)
}

/// A core of `a ⊎ S_O` together with its tree projection w.r.t. `views`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringWitness {
    pub core: RelationalStructure,
    pub projection: Hypergraph,
}

/// First core (canonical order) of `pinned` whose hypergraph has a tree projection w.r.t. `views`.
pub fn covering_core(pinned: &RelationalStructure, views: &Hypergraph) -> Option<CoveringWitness> {
    compute_cores(pinned).into_iter().find_map(|core| {
        find_tree_projection(&hypergraph_of(&core), views).map(|projection| CoveringWitness { core, projection })
    })
}

/// Whether `output` is tp-covered in a view hypergraph: some core of
/// `a ⊎ S_O` has a tree projection w.r.t. `views`.
pub fn is_tp_covered<S: AsRef<str>>(
    a: &RelationalStructure,
    views: &Hypergraph,
    output: &[S],
) -> Result<bool, StructureError> {
    Ok(covering_core(&pin_jointly(a, output)?, views).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{example1, example1_view_hypergraph, naive_tree_projection_exists, brute_force_join_tree_exists};

    fn hg(edges: &[&[&str]]) -> Hypergraph {
        Hypergraph::from_edges(edges.iter().map(|e| e.iter().copied()))
    }

    #[test]
    fn example1_hypergraph() {
        let h = hypergraph_of(&example1());
        assert_eq!(h.nodes().len(), 6);
        assert_eq!(h.edges().len(), 7);
        assert!(h.edges().iter().all(|e| e.len() == 2));
        assert_eq!(gaifman_graph(&example1()), h);
    }

    #[test]
    fn empty_structure_has_no_edges() {
        let a = RelationalStructure::new(crate::structures::Vocabulary::from_symbols([("R", 2)]).unwrap());
        assert!(hypergraph_of(&a).edges().is_empty());
    }

    #[test]
    fn ternary_tuple_gaifman_is_triangle() {
        let mut a = RelationalStructure::new(crate::structures::Vocabulary::from_symbols([("T", 3)]).unwrap());
        a.add_tuple("T", &["x", "y", "z"]).unwrap();
        assert_eq!(gaifman_graph(&a), hg(&[&["x", "y"], &["y", "z"], &["x", "z"]]));
    }

    #[test]
    fn invalid_hypergraphs() {
        assert_eq!(Hypergraph::new(["a"], [Edge::new()]), Err(HypergraphError::EmptyEdge));
        assert_eq!(
            Hypergraph::new(["a"], [BTreeSet::from(["b".to_string()])]),
            Err(HypergraphError::UnknownNode("b".into()))
        );
    }

    #[test]
    fn acyclicity_examples() {
        assert!(is_acyclic(&hg(&[&["A", "B", "C"]])));
        let triangle = hg(&[&["A", "B"], &["B", "C"], &["A", "C"]]);
        assert!(!is_acyclic(&triangle));
        assert!(!brute_force_join_tree_exists(&triangle));
        let ha = hg(&[&["A", "E", "F"], &["A", "B", "C"], &["C", "D", "F"]]);
        assert_eq!(is_acyclic(&ha), brute_force_join_tree_exists(&ha));
        assert!(!is_acyclic(&ha));
        assert!(is_acyclic(&hg(&[])));
    }

    #[test]
    fn join_trees() {
        let single = build_join_tree(&hg(&[&["A", "B", "C"]])).unwrap();
        assert_eq!(single.vertices.len(), 1);
        assert!(single.tree_edges.is_empty());
        let chain = build_join_tree(&hg(&[&["A", "B"], &["B", "C"], &["C", "D"]])).unwrap();
        assert!(chain.satisfies_connectedness());
        assert_eq!(chain.tree_edges.len(), 2);
        assert_eq!(
            build_join_tree(&hg(&[&["A", "B"], &["B", "C"], &["A", "C"]])),
            Err(HypergraphError::Cyclic)
        );
    }

    #[test]
    fn leq_examples() {
        let h = hypergraph_of(&example1());
        assert!(hg_leq(&h, &h));
        assert!(!hg_leq(&hg(&[&["A", "B", "D"]]), &hg(&[&["A", "B", "C"]])));
    }

    #[test]
    fn example2_tree_projections() {
        let views = example1_view_hypergraph();
        assert_eq!(find_tree_projection(&hypergraph_of(&example1()), &views), None);
        let a1 = hg(&[&["A", "C"], &["A", "B"], &["B", "C"]]);
        assert!(hg_leq(&a1, &views));
        let ha = find_tree_projection(&a1, &views).unwrap();
        assert!(is_acyclic(&ha) && hg_leq(&a1, &ha) && hg_leq(&ha, &views));
        let abc = hg(&[&["A", "B", "C"]]);
        assert!(is_acyclic(&abc) && hg_leq(&a1, &abc) && hg_leq(&abc, &views));
        let ha_join = build_join_tree(&ha).unwrap();
        assert!(ha_join.satisfies_connectedness());
        let a2 = hg(&[&["B", "C"], &["D", "B"], &["D", "C"]]);
        assert_eq!(find_tree_projection(&a2, &views), None);
    }

    #[test]
    fn sandwich_of_acyclic_hypergraph() {
        let h = hg(&[&["A", "B"], &["B", "C", "D"]]);
        let p = find_tree_projection(&h, &h).unwrap();
        assert_eq!(p.edges(), h.edges());
    }

    #[test]
    fn projection_agrees_with_naive_search() {
        let views = example1_view_hypergraph();
        for h1 in [hypergraph_of(&example1()), hg(&[&["A", "C"], &["A", "B"], &["B", "C"]])] {
            assert_eq!(find_tree_projection(&h1, &views).is_some(), naive_tree_projection_exists(&h1, &views));
        }
    }

    #[test]
    fn example1_tp_covered_sets() {
        let views = example1_view_hypergraph();
        let a = example1();
        assert!(is_tp_covered(&a, &views, &["A", "B", "C"]).unwrap());
        assert!(!is_tp_covered(&a, &views, &["B", "C", "D"]).unwrap());
        assert!(is_tp_covered::<&str>(&a, &views, &[]).unwrap());
    }
}
