//! Ground truth for tests: fixtures, a brute-force oracle, instance
//! generators and delay metering.
//!
//! Everything here is deliberately naive. The oracle backtracks without any
//! propagation and the hypergraph checks enumerate trees, so a bug in the
//! engine is unlikely to be mirrored here.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::decomposition::{ViewOrigin, ViewPair};
use crate::enumeration::EnumerationStats;
use crate::hypergraphs::{Edge, Hypergraph};
use crate::structures::{dom_symbol, is_homomorphism, PartialMap, RelationalStructure, Vocabulary};

fn binary(symbol: &str, pairs: &[(&str, &str)]) -> RelationalStructure {
    let mut s = RelationalStructure::new(Vocabulary::from_symbols([(symbol, 2)]).unwrap());
    for (x, y) in pairs {
        s.add_tuple(symbol, &[x, y]).unwrap();
    }
    s
}

/// The left-hand structure of the running example: two triangles sharing the
/// edge `B -> C`, plus the pendant path `F -> E <- A`.
pub fn example1() -> RelationalStructure {
    binary(
        "R",
        &[("F", "E"), ("A", "E"), ("A", "C"), ("A", "B"), ("B", "C"), ("D", "B"), ("D", "C")],
    )
}

/// The transitive triangle `A -> B -> C`, `A -> C`.
pub fn triangle() -> RelationalStructure {
    binary("R", &[("A", "B"), ("A", "C"), ("B", "C")])
}

/// Proper 3-colouring: `R = {(c, c') : c != c'}` over `{1, 2, 3}`.
pub fn b3c() -> RelationalStructure {
    b3c_named("R")
}

pub fn b3c_named(symbol: &str) -> RelationalStructure {
    let colours = ["1", "2", "3"];
    let pairs: Vec<(&str, &str)> = colours
        .iter()
        .flat_map(|c| colours.iter().filter(move |d| *d != c).map(move |d| (*c, *d)))
        .collect();
    binary(symbol, &pairs)
}

/// Proper 2-colouring.
pub fn k2() -> RelationalStructure {
    binary("R", &[("1", "2"), ("2", "1")])
}

/// The complete graph on four vertices, one tuple per edge.
pub fn k4() -> RelationalStructure {
    binary("R", &[("A", "B"), ("A", "C"), ("A", "D"), ("B", "C"), ("B", "D"), ("C", "D")])
}

const EXAMPLE1_SUBPROBLEMS: [&[&str]; 3] = [&["A", "E", "F"], &["A", "B", "C", "F"], &["C", "D", "F"]];

/// Hypergraph of the hand-built view structure of the running example: the
/// seven constraint scopes plus three subproblem scopes.
pub fn example1_view_hypergraph() -> Hypergraph {
    let a = example1();
    let base = a.tuples().map(|(_, t)| t.iter().cloned().collect::<Edge>());
    let extra = EXAMPLE1_SUBPROBLEMS.iter().map(|e| e.iter().map(|x| x.to_string()).collect::<Edge>());
    Hypergraph::new(a.universe().iter().cloned(), base.chain(extra)).unwrap()
}

/// The hand-built view structure of the running example over `b`: base views
/// hold `b`'s relation, subproblem views hold the projected solutions.
pub fn example1_view_pair(b: &RelationalStructure) -> ViewPair {
    let a = example1();
    let mut v = ViewPair::new(a.universe().iter().cloned(), b.universe().iter().cloned());
    let relation = b.relation("R").cloned().unwrap_or_default();
    for (i, (symbol, t)) in a.tuples().enumerate() {
        v.add_view(
            &format!("{symbol}#{i}"),
            t,
            relation.iter().cloned(),
            ViewOrigin::Base { symbol: symbol.to_string(), tuple: t.clone() },
        )
        .unwrap();
    }
    let everything: Vec<&str> = a.universe().iter().map(String::as_str).collect();
    let solutions = oracle_enumerate(&a, b, &everything, OracleBudget::default()).unwrap();
    for scope in EXAMPLE1_SUBPROBLEMS {
        let tuples: BTreeSet<Vec<String>> = solutions
            .iter()
            .map(|h| scope.iter().map(|x| h.get(x).unwrap().to_string()).collect())
            .collect();
        v.add_view(&format!("V{{{}}}", scope.join(",")), scope, tuples, ViewOrigin::Derived)
            .unwrap();
    }
    v
}

/// Size guard of the oracle: it runs if the left universe is small enough or
/// the raw search space is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleBudget {
    pub max_variables: usize,
    pub max_search_space: f64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_variables: 12, max_search_space: 1e9 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("oracle budget exceeded: {variables} variables over {values} values")]
    BudgetExceeded { variables: usize, values: usize },
}

/// Tuples checked once their last variable is assigned: positions and allowed images.
type Checks = Vec<Vec<(Vec<usize>, HashSet<Vec<usize>>)>>;

/// `A^B[O]` by plain backtracking over the left universe in canonical order.
pub fn oracle_enumerate<S: AsRef<str>>(
    a: &RelationalStructure,
    b: &RelationalStructure,
    output: &[S],
    budget: OracleBudget,
) -> Result<BTreeSet<PartialMap>, OracleError> {
    let n = a.universe().len();
    let d = b.universe().len();
    if n > budget.max_variables && (d as f64).powi(n as i32) > budget.max_search_space {
        return Err(OracleError::BudgetExceeded { variables: n, values: d });
    }
    let vars: Vec<&str> = a.universe().iter().map(String::as_str).collect();
    let vals: Vec<&str> = b.universe().iter().map(String::as_str).collect();
    let var_index: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, x)| (*x, i)).collect();
    let val_index: HashMap<&str, usize> = vals.iter().enumerate().map(|(i, x)| (*x, i)).collect();
    let mut checks: Checks = vec![Vec::new(); n];
    let mut right: HashMap<&str, HashSet<Vec<usize>>> = HashMap::new();
    for (symbol, tuple) in a.tuples() {
        let allowed = right
            .entry(symbol)
            .or_insert_with(|| {
                b.relation(symbol)
                    .map(|r| r.iter().map(|t| t.iter().map(|v| val_index[v.as_str()]).collect()).collect())
                    .unwrap_or_default()
            })
            .clone();
        let positions: Vec<usize> = tuple.iter().map(|x| var_index[x.as_str()]).collect();
        match positions.iter().max() {
            Some(&last) => checks[last].push((positions, allowed)),
            None => {
                if !allowed.contains(&Vec::new()) {
                    return Ok(BTreeSet::new());
                }
            }
        }
    }
    let output: Vec<&str> = output.iter().map(AsRef::as_ref).collect();
    let mut found = BTreeSet::new();
    let mut assignment = vec![0usize; n];
    fn extend(
        depth: usize,
        d: usize,
        assignment: &mut Vec<usize>,
        checks: &Checks,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if depth == assignment.len() {
            return visit(assignment);
        }
        for value in 0..d {
            assignment[depth] = value;
            let ok = checks[depth].iter().all(|(positions, allowed)| {
                let image: Vec<usize> = positions.iter().map(|&p| assignment[p]).collect();
                allowed.contains(&image)
            });
            if ok && !extend(depth + 1, d, assignment, checks, visit) {
                return false;
            }
        }
        true
    }
    let mut visit = |h: &[usize]| {
        found.insert(output.iter().map(|x| (*x, vals[h[var_index[x]]])).collect::<PartialMap>());
        // with no output variables one witness settles the answer
        !output.is_empty()
    };
    extend(0, d, &mut assignment, &checks, &mut visit);
    Ok(found)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("grids need at least 2 rows and 2 columns, got {rows}x{cols}")]
    GridTooSmall { rows: usize, cols: usize },
    #[error("the graph has no edges")]
    EmptyGraph,
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
}

/// Edge orientation of [`gen_grid`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GridOrientation {
    /// One tuple per edge, left to right and top to bottom.
    #[default]
    Directed,
    /// Both directions of every edge.
    Symmetric,
}

pub const GRID_SYMBOL: &str = "R_u";

pub fn grid_variable(row: usize, col: usize) -> String {
    format!("v{row}_{col}")
}

/// A `rows x cols` grid over the binary symbol `R_u`. With `restrict_corners`
/// the four corners get a `dom(.)` relation each.
pub fn gen_grid(
    rows: usize,
    cols: usize,
    restrict_corners: bool,
    orientation: GridOrientation,
) -> Result<RelationalStructure, GenError> {
    if rows < 2 || cols < 2 {
        return Err(GenError::GridTooSmall { rows, cols });
    }
    let mut vocabulary = Vocabulary::from_symbols([(GRID_SYMBOL, 2)]).unwrap();
    let corners = [(1, 1), (1, cols), (rows, 1), (rows, cols)].map(|(r, c)| grid_variable(r, c));
    if restrict_corners {
        for c in &corners {
            vocabulary.add(dom_symbol(c), 1).unwrap();
        }
    }
    let mut s = RelationalStructure::new(vocabulary);
    let mut edge = |x: String, y: String| {
        s.add_tuple(GRID_SYMBOL, &[&x, &y]).unwrap();
        if orientation == GridOrientation::Symmetric {
            s.add_tuple(GRID_SYMBOL, &[&y, &x]).unwrap();
        }
    };
    for r in 1..=rows {
        for c in 1..=cols {
            if c < cols {
                edge(grid_variable(r, c), grid_variable(r, c + 1));
            }
            if r < rows {
                edge(grid_variable(r, c), grid_variable(r + 1, c));
            }
        }
    }
    if restrict_corners {
        for c in &corners {
            s.add_tuple(&dom_symbol(c), &[c]).unwrap();
        }
    }
    Ok(s)
}

pub const COLOURING_SYMBOL: &str = "R_E";

/// The 3-colourability instance `(A_G, B_3c)` of a graph. A triangle-free
/// graph first gets two fresh adjacent vertices, both joined to its smallest
/// vertex, so the instance always contains a triangle.
pub fn gen_3col<S: AsRef<str>>(edges: &[(S, S)]) -> Result<(RelationalStructure, RelationalStructure), GenError> {
    if edges.is_empty() {
        return Err(GenError::EmptyGraph);
    }
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (x, y) in edges {
        let (x, y) = (x.as_ref(), y.as_ref());
        if x == y {
            return Err(GenError::SelfLoop(x.to_string()));
        }
        pairs.push((x.to_string(), y.to_string()));
    }
    let adjacent: HashSet<(String, String)> = pairs
        .iter()
        .flat_map(|(x, y)| [(x.clone(), y.clone()), (y.clone(), x.clone())])
        .collect();
    let vertices: BTreeSet<String> = pairs.iter().flat_map(|(x, y)| [x.clone(), y.clone()]).collect();
    let has_triangle = pairs.iter().any(|(x, y)| {
        vertices
            .iter()
            .any(|z| adjacent.contains(&(x.clone(), z.clone())) && adjacent.contains(&(y.clone(), z.clone())))
    });
    if !has_triangle {
        let fresh = |base: &str| {
            let mut name = base.to_string();
            while vertices.contains(&name) {
                name.push('\'');
            }
            name
        };
        let (n2, n3) = (fresh("n2"), fresh("n3"));
        let anchor = vertices.iter().next().unwrap().clone();
        pairs.push((anchor.clone(), n2.clone()));
        pairs.push((anchor, n3.clone()));
        pairs.push((n2, n3));
    }
    let mut a = RelationalStructure::new(Vocabulary::from_symbols([(COLOURING_SYMBOL, 2)]).unwrap());
    for (x, y) in &pairs {
        a.add_tuple(COLOURING_SYMBOL, &[x, y]).unwrap();
    }
    Ok((a, b3c_named(COLOURING_SYMBOL)))
}

/// Shape limits of [`random_instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomConfig {
    pub max_variables: usize,
    pub max_values: usize,
    pub max_arity: usize,
    pub extra_constraints: usize,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig { max_variables: 7, max_values: 4, max_arity: 3, extra_constraints: 3 }
    }
}

/// A random ECSP triple with a connected constraint hypergraph over the
/// symbols `P` and `Q`, and a random ordered output list.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    config: RandomConfig,
) -> (RelationalStructure, RelationalStructure, Vec<String>) {
    let n = rng.gen_range(2..=config.max_variables.max(2));
    let d = rng.gen_range(2..=config.max_values.max(2));
    let max_arity = config.max_arity.max(2);
    let arity_p = rng.gen_range(2..=max_arity);
    let arity_q = rng.gen_range(1..=max_arity);
    let vocabulary = Vocabulary::from_symbols([("P", arity_p), ("Q", arity_q)]).unwrap();
    let variables: Vec<String> = (1..=n).map(|i| format!("X{i}")).collect();
    let mut a = RelationalStructure::new(vocabulary.clone());
    // a spanning chain of P tuples keeps the hypergraph connected
    for i in 1..n {
        let mut t: Vec<&str> = (0..arity_p).map(|_| variables[rng.gen_range(0..=i)].as_str()).collect();
        t[0] = &variables[rng.gen_range(0..i)];
        t[1] = &variables[i];
        t.shuffle(rng);
        a.add_tuple("P", &t).unwrap();
    }
    for _ in 0..rng.gen_range(0..=config.extra_constraints) {
        let (symbol, arity) = if rng.gen_bool(0.5) { ("P", arity_p) } else { ("Q", arity_q) };
        let t: Vec<&str> = (0..arity).map(|_| variables[rng.gen_range(0..n)].as_str()).collect();
        a.add_tuple(symbol, &t).unwrap();
    }
    let values: Vec<String> = (1..=d).map(|v| v.to_string()).collect();
    let mut b = RelationalStructure::new(vocabulary);
    for v in &values {
        b.add_element(v.clone());
    }
    for (symbol, arity) in [("P", arity_p), ("Q", arity_q)] {
        let density = rng.gen_range(0.3..0.9);
        let total = d.pow(arity as u32);
        for code in 0..total {
            if rng.gen_bool(density) {
                let t: Vec<&str> = (0..arity)
                    .map(|p| values[(code / d.pow(p as u32)) % d].as_str())
                    .collect();
                b.add_tuple(symbol, &t).unwrap();
            }
        }
    }
    let mut output = variables;
    output.shuffle(rng);
    output.truncate(rng.gen_range(0..=n));
    (a, b, output)
}

/// Gap profile of a finished stream against a per-gap bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayReport {
    pub gaps: Vec<usize>,
    #[serde(skip)]
    pub durations: Vec<Duration>,
    pub max_gap: usize,
    pub max_duration_micros: u128,
    pub bound: usize,
    pub within_bound: bool,
}

pub fn measure_delay(stats: &EnumerationStats, bound: usize) -> DelayReport {
    let max_gap = stats.gac_calls_between_outputs.iter().copied().max().unwrap_or(0);
    DelayReport {
        gaps: stats.gac_calls_between_outputs.clone(),
        durations: stats.gap_durations.clone(),
        max_gap,
        max_duration_micros: stats.gap_durations.iter().map(Duration::as_micros).max().unwrap_or(0),
        bound,
        within_bound: max_gap <= bound,
    }
}

/// Whether the edges of `h` admit a join tree, by trying every labelled tree
/// on the edges (Pruefer sequences).
pub fn brute_force_join_tree_exists(h: &Hypergraph) -> bool {
    let edges: Vec<&Edge> = h.edges().iter().collect();
    let k = edges.len();
    if k <= 2 {
        return true;
    }
    let mut sequence = vec![0usize; k - 2];
    loop {
        let tree = pruefer_decode(&sequence, k);
        if join_tree_ok(&edges, &tree) {
            return true;
        }
        let mut p = 0;
        loop {
            if p == sequence.len() {
                return false;
            }
            sequence[p] += 1;
            if sequence[p] < k {
                break;
            }
            sequence[p] = 0;
            p += 1;
        }
    }
}

fn pruefer_decode(sequence: &[usize], k: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; k];
    for &s in sequence {
        degree[s] += 1;
    }
    let mut tree = Vec::with_capacity(k - 1);
    for &s in sequence {
        let leaf = (0..k).find(|&v| degree[v] == 1).unwrap();
        tree.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..k).filter(|&v| degree[v] == 1).collect();
    tree.push((rest[0], rest[1]));
    tree
}

/// Every node's edges induce a connected subtree.
fn join_tree_ok(edges: &[&Edge], tree: &[(usize, usize)]) -> bool {
    let nodes: BTreeSet<&String> = edges.iter().flat_map(|e| e.iter()).collect();
    nodes.into_iter().all(|x| {
        let holding: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].contains(x)).collect();
        let mut reached = vec![holding[0]];
        let mut frontier = vec![holding[0]];
        while let Some(u) = frontier.pop() {
            for &(p, q) in tree {
                for (from, to) in [(p, q), (q, p)] {
                    if from == u && edges[to].contains(x) && !reached.contains(&to) {
                        reached.push(to);
                        frontier.push(to);
                    }
                }
            }
        }
        reached.len() == holding.len()
    })
}

/// Whether `h1` has a tree projection w.r.t. `h2`, by searching antichains of
/// sub-edges of `h2` (restricted to the nodes of `h1`) of size at most the
/// number of nodes of `h1`.
pub fn naive_tree_projection_exists(h1: &Hypergraph, h2: &Hypergraph) -> bool {
    let nodes: BTreeSet<&String> = h1.edges().iter().flat_map(|e| e.iter()).collect();
    let mut candidates: BTreeSet<Edge> = BTreeSet::new();
    for e in h2.edges() {
        let inside: Vec<&String> = e.iter().filter(|x| nodes.contains(x)).collect();
        for mask in 1u32..(1 << inside.len()) {
            candidates.insert(
                inside
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, x)| (*x).clone())
                    .collect(),
            );
        }
    }
    let candidates: Vec<Edge> = candidates.into_iter().collect();
    let targets: Vec<&Edge> = h1.edges().iter().collect();
    if targets.is_empty() {
        return true;
    }
    fn search(
        start: usize,
        chosen: &mut Vec<usize>,
        limit: usize,
        candidates: &[Edge],
        targets: &[&Edge],
    ) -> bool {
        let covers = targets
            .iter()
            .all(|t| chosen.iter().any(|&c| t.is_subset(&candidates[c])));
        if covers {
            let h = Hypergraph::from_edges(chosen.iter().map(|&c| candidates[c].iter().cloned()));
            if brute_force_join_tree_exists(&h) {
                return true;
            }
        }
        if chosen.len() == limit {
            return false;
        }
        for next in start..candidates.len() {
            let comparable = chosen
                .iter()
                .any(|&c| candidates[c].is_subset(&candidates[next]) || candidates[next].is_subset(&candidates[c]));
            if comparable {
                continue;
            }
            chosen.push(next);
            if search(next + 1, chosen, limit, candidates, targets) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    search(0, &mut Vec::new(), nodes.len(), &candidates, &targets)
}

/// Whether two structures are isomorphic, by trying every bijection.
pub fn brute_force_isomorphic(a: &RelationalStructure, b: &RelationalStructure) -> bool {
    if a.vocabulary() != b.vocabulary() || a.universe().len() != b.universe().len() || a.tuple_count() != b.tuple_count()
    {
        return false;
    }
    let left: Vec<&String> = a.universe().iter().collect();
    let mut right: Vec<&String> = b.universe().iter().collect();
    permutations(&mut right, 0, &mut |perm| {
        let h: PartialMap = left.iter().zip(perm).map(|(x, y)| (x.as_str(), y.as_str())).collect();
        is_homomorphism(&h, a, b).unwrap()
    })
}

fn permutations<T>(items: &mut [T], k: usize, check: &mut dyn FnMut(&[T]) -> bool) -> bool {
    if k == items.len() {
        return check(items);
    }
    for i in k..items.len() {
        items.swap(k, i);
        if permutations(items, k + 1, check) {
            return true;
        }
        items.swap(k, i);
    }
    false
}

/// Cores of `a` as the inclusion-minimal images over all `n^n` self-maps.
pub fn brute_force_cores(a: &RelationalStructure) -> Vec<RelationalStructure> {
    let elements: Vec<&String> = a.universe().iter().collect();
    let n = elements.len();
    let mut images: BTreeSet<RelationalStructure> = BTreeSet::new();
    let mut code = vec![0usize; n];
    loop {
        let h: PartialMap = elements.iter().zip(&code).map(|(x, &y)| (x.as_str(), elements[y].as_str())).collect();
        if is_homomorphism(&h, a, a).unwrap() {
            let mut image = RelationalStructure::new(a.vocabulary().clone());
            for &y in &code {
                image.add_element(elements[y].clone());
            }
            for (symbol, t) in a.tuples() {
                let t: Vec<&str> = t.iter().map(|x| h.get(x).unwrap()).collect();
                image.add_tuple(symbol, &t).unwrap();
            }
            images.insert(image);
        }
        let mut p = 0;
        loop {
            if p == n {
                let minimal = images
                    .iter()
                    .filter(|i| !images.iter().any(|j| j != *i && j.is_substructure_of(i)))
                    .cloned()
                    .collect();
                return minimal;
            }
            code[p] += 1;
            if code[p] < n {
                break;
            }
            code[p] = 0;
            p += 1;
        }
    }
}

/// The pairwise-consistency fixpoint computed on named tuples, pair by pair,
/// until nothing changes.
pub fn naive_pairwise_fixpoint(v: &ViewPair) -> Vec<BTreeSet<Vec<String>>> {
    let scopes: Vec<Vec<&str>> = (0..v.len()).map(|i| v.scope_names(i)).collect();
    let mut sets: Vec<BTreeSet<Vec<String>>> = (0..v.len()).map(|i| v.tuple_set(i)).collect();
    let project = |scope: &[&str], t: &[String], onto: &[&str]| -> Vec<String> {
        onto.iter().map(|x| t[scope.iter().position(|y| y == x).unwrap()].clone()).collect()
    };
    loop {
        let mut changed = false;
        for i in 0..sets.len() {
            for j in 0..sets.len() {
                if i == j {
                    continue;
                }
                let shared: Vec<&str> = scopes[i].iter().copied().filter(|x| scopes[j].contains(x)).collect();
                if shared.is_empty() {
                    continue;
                }
                let from_i: BTreeSet<Vec<String>> = sets[i].iter().map(|t| project(&scopes[i], t, &shared)).collect();
                let before = sets[j].len();
                let scope_j = scopes[j].clone();
                sets[j].retain(|t| from_i.contains(&project(&scope_j, t, &shared)));
                changed |= sets[j].len() != before;
            }
        }
        if !changed {
            return sets;
        }
    }
}

/// Every graph on the vertices `0..n` as an edge list, one per subset of the
/// `n choose 2` possible edges.
pub fn all_graphs(n: usize) -> Vec<Vec<(String, String)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    (0u64..1 << pairs.len())
        .map(|mask| {
            pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, (i, j))| (format!("g{i}"), format!("g{j}")))
                .collect()
        })
        .collect()
}

/// Whether a graph has a proper 3-colouring, by trying all `3^n` colourings.
pub fn brute_force_3colourable(edges: &[(String, String)]) -> bool {
    let vertices: Vec<&String> = edges
        .iter()
        .flat_map(|(x, y)| [x, y])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&String, usize> = vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = vertices.len();
    (0..3usize.pow(n as u32)).any(|code| {
        let colour = |v: &String| (code / 3usize.pow(index[v] as u32)) % 3;
        edges.iter().all(|(x, y)| colour(x) != colour(y))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn triangle_single_output() {
        let got = oracle_enumerate(&triangle(), &b3c(), &["A"], OracleBudget::default()).unwrap();
        let expected: BTreeSet<PartialMap> = ["1", "2", "3"].iter().map(|c| [("A", *c)].into_iter().collect()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn k4_is_not_three_colourable() {
        assert!(oracle_enumerate::<&str>(&k4(), &b3c(), &[], OracleBudget::default()).unwrap().is_empty());
    }

    #[test]
    fn self_target_yields_h_phi() {
        let a = example1();
        let got = oracle_enumerate::<&str>(&a, &a, &[], OracleBudget::default()).unwrap();
        assert_eq!(got, BTreeSet::from([PartialMap::new()]));
    }

    #[test]
    fn budget_refuses_loudly() {
        let tight = OracleBudget { max_variables: 2, max_search_space: 10.0 };
        assert_eq!(
            oracle_enumerate::<&str>(&triangle(), &b3c(), &[], tight),
            Err(OracleError::BudgetExceeded { variables: 3, values: 3 })
        );
    }

    #[test]
    fn grid_shapes() {
        let g = gen_grid(2, 2, false, GridOrientation::Directed).unwrap();
        assert_eq!(g.universe().len(), 4);
        assert_eq!(g.tuple_count(), 4);
        let r = gen_grid(3, 4, true, GridOrientation::Symmetric).unwrap();
        assert_eq!(r.relation(GRID_SYMBOL).unwrap().len(), 2 * 17);
        assert_eq!(r.domain_restricted().len(), 4);
        assert_eq!(gen_grid(1, 3, false, GridOrientation::Directed), Err(GenError::GridTooSmall { rows: 1, cols: 3 }));
    }

    #[test]
    fn three_colouring_gadget() {
        let (a, b) = gen_3col(&[("x", "y"), ("y", "z"), ("x", "z")]).unwrap();
        assert_eq!(a.universe().len(), 3);
        let all: Vec<&str> = a.universe().iter().map(String::as_str).collect();
        assert_eq!(oracle_enumerate(&a, &b, &all, OracleBudget::default()).unwrap().len(), 6);
        let (a, b) = gen_3col(&[("x", "y")]).unwrap();
        assert_eq!(a.universe().len(), 4);
        assert!(!oracle_enumerate::<&str>(&a, &b, &[], OracleBudget::default()).unwrap().is_empty());
        assert_eq!(gen_3col::<&str>(&[]), Err(GenError::EmptyGraph));
    }

    #[test]
    fn random_instances_are_valid_and_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (a, b, o) = random_instance(&mut rng, RandomConfig::default());
            let diag = crate::structures::validate_instance(&a, &b, &o);
            assert!(diag.is_ok() && diag.is_connected(), "{diag:?}");
            assert!(a.universe().len() <= 7 && b.universe().len() <= 4);
        }
    }

    #[test]
    fn empty_run_has_one_terminal_gap() {
        let stats = EnumerationStats { gac_calls_between_outputs: vec![1], ..Default::default() };
        let report = measure_delay(&stats, 3);
        assert_eq!(report.gaps, vec![1]);
        assert!(report.within_bound);
    }

    #[test]
    fn pruefer_trees_cover_all_labelled_trees() {
        let mut trees = BTreeSet::new();
        let mut seq = vec![0usize; 2];
        for i in 0..16 {
            seq[0] = i % 4;
            seq[1] = i / 4;
            let mut t: Vec<(usize, usize)> = pruefer_decode(&seq, 4).into_iter().map(|(p, q)| (p.min(q), p.max(q))).collect();
            t.sort();
            trees.insert(t);
        }
        assert_eq!(trees.len(), 16);
    }

    #[test]
    fn brute_cores_of_example1() {
        let cores = brute_force_cores(&example1());
        assert_eq!(cores.len(), 2);
        assert!(cores.iter().all(|c| brute_force_isomorphic(c, &triangle())));
    }
}
