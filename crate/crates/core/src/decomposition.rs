//! View structures and the `tw_k` / `hw_k` decomposition methods.
//!
//! A [`ViewPair`] holds both sides of a view structure at once: every view has
//! a scope (its single left-hand tuple) and a set of value tuples (its
//! right-hand relation). Variables and values are interned in canonical name
//! order, so numeric order of ids is name order.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::hypergraphs::{covering_core, Hypergraph};
use crate::structures::{parse_dom_symbol, pin_individually, RelationalStructure, StructureError, Tuple};
use crate::testkit::{oracle_enumerate, OracleBudget, OracleError};

pub type VarId = u32;
pub type ValId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViewError {
    #[error("view `{0}` is defined twice")]
    DuplicateView(String),
    #[error("view `{view}` mentions unknown variable `{variable}`")]
    UnknownVariable { view: String, variable: String },
    #[error("view `{view}` mentions unknown value `{value}`")]
    UnknownValue { view: String, value: String },
    #[error("view `{0}` repeats a variable in its scope")]
    RepeatedScopeVariable(String),
    #[error("view `{view}` has a tuple of length {found}, scope length is {expected}")]
    TupleLength { view: String, expected: usize, found: usize },
    #[error("decomposition width must be at least 1")]
    ZeroWidth,
    #[error("unknown decomposition method `{0}` (expected tw or hw)")]
    UnknownMethod(String),
}

/// Where a view comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViewOrigin {
    /// The view of one constraint tuple `<symbol, tuple>` of the left-hand structure.
    Base { symbol: String, tuple: Tuple },
    /// A subproblem view.
    Derived,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct View {
    pub name: String,
    pub scope: Vec<VarId>,
    /// Sorted, without duplicates.
    pub tuples: Vec<Vec<ValId>>,
    pub origin: ViewOrigin,
}

impl View {
    pub fn is_base(&self) -> bool {
        matches!(self.origin, ViewOrigin::Base { .. })
    }
}

/// For each source view, its neighbours grouped by shared variable set.
pub(crate) struct LinkGroup {
    pub source_positions: Vec<usize>,
    pub targets: Vec<(usize, Vec<usize>)>,
}

/// A view structure together with a right-hand view structure.
#[derive(Clone)]
pub struct ViewPair {
    variables: Vec<String>,
    values: Vec<String>,
    views: Vec<View>,
    names: HashMap<String, usize>,
    dom_views: BTreeMap<VarId, usize>,
    links: Arc<OnceLock<Vec<Vec<LinkGroup>>>>,
    /// Per view and link group, the size of the projection last pushed to
    /// every target. Tuples only shrink, so an equal size means an equal set.
    applied: Vec<Vec<usize>>,
}

impl fmt::Debug for ViewPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ViewPair")
            .field("variables", &self.variables)
            .field("values", &self.values)
            .field("views", &self.views)
            .finish()
    }
}

impl PartialEq for ViewPair {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.values == other.values && self.views == other.views
    }
}

impl Eq for ViewPair {}

impl ViewPair {
    pub fn new<V, W, S, T>(variables: V, values: W) -> Self
    where
        V: IntoIterator<Item = S>,
        W: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        let variables: BTreeSet<String> = variables.into_iter().map(Into::into).collect();
        let values: BTreeSet<String> = values.into_iter().map(Into::into).collect();
        ViewPair {
            variables: variables.into_iter().collect(),
            values: values.into_iter().collect(),
            views: Vec::new(),
            names: HashMap::new(),
            dom_views: BTreeMap::new(),
            links: Arc::default(),
            applied: Vec::new(),
        }
    }

    /// Adds a view by names. A base view over `dom(X)` becomes the domain view of `X`.
    pub fn add_view<S: AsRef<str>, T: AsRef<str>>(
        &mut self,
        name: &str,
        scope: &[S],
        tuples: impl IntoIterator<Item = Vec<T>>,
        origin: ViewOrigin,
    ) -> Result<usize, ViewError> {
        let scope_ids = scope
            .iter()
            .map(|x| {
                self.variable_id(x.as_ref()).ok_or_else(|| ViewError::UnknownVariable {
                    view: name.to_string(),
                    variable: x.as_ref().to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut ids = Vec::new();
        for t in tuples {
            if t.len() != scope_ids.len() {
                return Err(ViewError::TupleLength {
                    view: name.to_string(),
                    expected: scope_ids.len(),
                    found: t.len(),
                });
            }
            ids.push(
                t.iter()
                    .map(|v| {
                        self.value_id(v.as_ref()).ok_or_else(|| ViewError::UnknownValue {
                            view: name.to_string(),
                            value: v.as_ref().to_string(),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        self.push_view(name.to_string(), scope_ids, ids, origin)
    }

    pub(crate) fn push_view(
        &mut self,
        name: String,
        scope: Vec<VarId>,
        mut tuples: Vec<Vec<ValId>>,
        origin: ViewOrigin,
    ) -> Result<usize, ViewError> {
        if self.names.contains_key(&name) {
            return Err(ViewError::DuplicateView(name));
        }
        if scope.iter().collect::<HashSet<_>>().len() != scope.len() {
            return Err(ViewError::RepeatedScopeVariable(name));
        }
        tuples.sort_unstable();
        tuples.dedup();
        let index = self.views.len();
        if let ViewOrigin::Base { symbol, tuple } = &origin {
            if let Some(var) = parse_dom_symbol(symbol) {
                if tuple.len() == 1 && tuple[0] == var {
                    if let Some(id) = self.variable_id(var) {
                        self.dom_views.entry(id).or_insert(index);
                    }
                }
            }
        }
        self.names.insert(name.clone(), index);
        self.views.push(View { name, scope, tuples, origin });
        self.links = Arc::default();
        self.applied.clear();
        Ok(index)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn variable_id(&self, name: &str) -> Option<VarId> {
        self.variables.binary_search_by(|v| v.as_str().cmp(name)).ok().map(|i| i as VarId)
    }

    pub fn value_id(&self, name: &str) -> Option<ValId> {
        self.values.binary_search_by(|v| v.as_str().cmp(name)).ok().map(|i| i as ValId)
    }

    pub fn variable_name(&self, id: VarId) -> &str {
        &self.variables[id as usize]
    }

    pub fn value_name(&self, id: ValId) -> &str {
        &self.values[id as usize]
    }

    pub fn views(&self) -> &[View] {
        &self.views
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn view(&self, name: &str) -> Option<&View> {
        self.names.get(name).map(|&i| &self.views[i])
    }

    pub fn view_index(&self, name: &str) -> Option<usize> {
        self.names.get(name).copied()
    }

    /// Scope of a view as variable names.
    pub fn scope_names(&self, index: usize) -> Vec<&str> {
        self.views[index].scope.iter().map(|&x| self.variable_name(x)).collect()
    }

    /// Tuples of a view as value names.
    pub fn tuple_set(&self, index: usize) -> BTreeSet<Vec<String>> {
        self.views[index]
            .tuples
            .iter()
            .map(|t| t.iter().map(|&v| self.value_name(v).to_string()).collect())
            .collect()
    }

    pub fn base_view_names(&self) -> BTreeSet<&str> {
        self.views.iter().filter(|v| v.is_base()).map(|v| v.name.as_str()).collect()
    }

    /// Index of the domain view of a variable.
    pub fn dom_view(&self, variable: VarId) -> Option<usize> {
        self.dom_views.get(&variable).copied()
    }

    /// Values left in the domain view of a variable.
    pub fn domain_values(&self, variable: VarId) -> Option<Vec<ValId>> {
        self.dom_view(variable)
            .map(|i| self.views[i].tuples.iter().map(|t| t[0]).collect())
    }

    /// Restricts a unary view to the single value `value`.
    pub(crate) fn fix_unary(&mut self, index: usize, value: ValId) {
        self.views[index].tuples.retain(|t| t[0] == value);
    }

    pub(crate) fn tuples_mut(&mut self, index: usize) -> &mut Vec<Vec<ValId>> {
        &mut self.views[index].tuples
    }

    /// Whether some view has no tuples left.
    pub fn any_empty(&self) -> bool {
        self.views.iter().any(|v| v.tuples.is_empty())
    }

    pub fn total_tuples(&self) -> usize {
        self.views.iter().map(|v| v.tuples.len()).sum()
    }

    /// The view hypergraph: one hyperedge per scope.
    pub fn hypergraph(&self) -> Hypergraph {
        Hypergraph::new(
            self.variables.iter().cloned(),
            self.views
                .iter()
                .filter(|v| !v.scope.is_empty())
                .map(|v| v.scope.iter().map(|&x| self.variable_name(x).to_string()).collect()),
        )
        .expect("view scopes only mention known variables")
    }

    /// Shared handle on the (initialised) neighbour table.
    pub(crate) fn link_table(&self) -> Arc<OnceLock<Vec<Vec<LinkGroup>>>> {
        self.links.get_or_init(|| self.compute_links());
        Arc::clone(&self.links)
    }

    pub(crate) fn take_applied(&mut self, links: &[Vec<LinkGroup>]) -> Vec<Vec<usize>> {
        let applied = std::mem::take(&mut self.applied);
        if applied.len() == links.len() {
            applied
        } else {
            links.iter().map(|groups| vec![usize::MAX; groups.len()]).collect()
        }
    }

    pub(crate) fn restore_applied(&mut self, applied: Vec<Vec<usize>>) {
        self.applied = applied;
    }

    fn compute_links(&self) -> Vec<Vec<LinkGroup>> {
        {
            let n = self.views.len();
            let mut by_var: HashMap<VarId, Vec<usize>> = HashMap::new();
            for (i, v) in self.views.iter().enumerate() {
                for &x in &v.scope {
                    by_var.entry(x).or_default().push(i);
                }
            }
            (0..n)
                .map(|s| {
                    let mut neighbours: BTreeSet<usize> = BTreeSet::new();
                    for x in &self.views[s].scope {
                        neighbours.extend(by_var[x].iter().copied().filter(|&t| t != s));
                    }
                    let mut groups: BTreeMap<Vec<VarId>, LinkGroup> = BTreeMap::new();
                    for t in neighbours {
                        let mut shared: Vec<VarId> = self.views[s]
                            .scope
                            .iter()
                            .copied()
                            .filter(|x| self.views[t].scope.contains(x))
                            .collect();
                        shared.sort_unstable();
                        let position = |view: usize, x: VarId| self.views[view].scope.iter().position(|&y| y == x).unwrap();
                        let target_positions = shared.iter().map(|&x| position(t, x)).collect();
                        let group = groups.entry(shared.clone()).or_insert_with(|| LinkGroup {
                            source_positions: shared.iter().map(|&x| position(s, x)).collect(),
                            targets: Vec::new(),
                        });
                        group.targets.push((t, target_positions));
                    }
                    groups.into_values().collect()
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Subproblems over every set of at most `k` variables.
    TreeWidth,
    /// Subproblems over every set of at most `k` constraints.
    HypertreeWidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MethodSpec {
    method: Method,
    k: usize,
}

impl MethodSpec {
    pub fn new(method: Method, k: usize) -> Result<Self, ViewError> {
        if k == 0 {
            return Err(ViewError::ZeroWidth);
        }
        Ok(MethodSpec { method, k })
    }

    pub fn tw(k: usize) -> Self {
        Self::new(Method::TreeWidth, k).expect("k >= 1")
    }

    pub fn hw(k: usize) -> Self {
        Self::new(Method::HypertreeWidth, k).expect("k >= 1")
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = match self.method {
            Method::TreeWidth => "tw",
            Method::HypertreeWidth => "hw",
        };
        write!(f, "{m}_{}", self.k)
    }
}

impl FromStr for Method {
    type Err = ViewError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tw" => Ok(Method::TreeWidth),
            "hw" => Ok(Method::HypertreeWidth),
            other => Err(ViewError::UnknownMethod(other.to_string())),
        }
    }
}

/// A constraint of the left-hand structure in interned form.
struct Constraint {
    symbol: String,
    tuple: Tuple,
    /// Distinct variables in order of first occurrence.
    scope: Vec<VarId>,
    /// For every tuple position, the index into `scope`.
    pattern: Vec<usize>,
}

impl Constraint {
    fn new(symbol: &str, tuple: &Tuple, var_id: impl Fn(&str) -> VarId) -> Self {
        let mut scope: Vec<VarId> = Vec::new();
        let pattern = tuple
            .iter()
            .map(|x| {
                let id = var_id(x);
                scope.iter().position(|&y| y == id).unwrap_or_else(|| {
                    scope.push(id);
                    scope.len() - 1
                })
            })
            .collect();
        Constraint { symbol: symbol.to_string(), tuple: tuple.clone(), scope, pattern }
    }

    /// Right-hand tuples consistent with the repetition pattern, projected onto `scope`.
    fn allowed(&self, relation: Option<&BTreeSet<Tuple>>, value_id: impl Fn(&str) -> Option<ValId>) -> Vec<Vec<ValId>> {
        let Some(relation) = relation else { return Vec::new() };
        let mut out = Vec::new();
        'tuples: for t in relation {
            let mut row = vec![ValId::MAX; self.scope.len()];
            for (pos, &slot) in self.pattern.iter().enumerate() {
                let Some(v) = value_id(&t[pos]) else { continue 'tuples };
                if row[slot] != ValId::MAX && row[slot] != v {
                    continue 'tuples;
                }
                row[slot] = v;
            }
            out.push(row);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn base_name(&self, index_in_symbol: usize) -> String {
        format!("{}#{}", self.symbol, index_in_symbol)
    }
}

fn constraints_of(a: &RelationalStructure, var_id: &impl Fn(&str) -> VarId) -> Vec<(String, Constraint)> {
    let mut out = Vec::new();
    for (symbol, tuples) in a.relations() {
        for (i, t) in tuples.iter().enumerate() {
            let c = Constraint::new(symbol, t, var_id);
            out.push((c.base_name(i), c));
        }
    }
    out
}

/// Lexicographic combinations of `0..n` of every size from 1 to `k`.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 1..=k.min(n) {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            out.push(combo.clone());
            let Some(i) = (0..size).rev().find(|&i| combo[i] != i + n - size) else { break };
            combo[i] += 1;
            for j in i + 1..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    out
}

/// Scopes of the left-hand view structure `l-DM(A)`, by view name, in view order.
pub fn view_scopes(a: &RelationalStructure, spec: MethodSpec) -> Vec<(String, Vec<String>)> {
    let variables: Vec<&String> = a.universe().iter().collect();
    let var_id = |x: &str| variables.binary_search_by(|v| v.as_str().cmp(x)).unwrap() as VarId;
    let constraints = constraints_of(a, &var_id);
    let name_of = |ids: &[VarId]| ids.iter().map(|&x| variables[x as usize].clone()).collect::<Vec<_>>();
    let mut out: Vec<(String, Vec<String>)> = constraints
        .iter()
        .map(|(name, c)| (name.clone(), name_of(&c.scope)))
        .collect();
    match spec.method {
        Method::TreeWidth => {
            for combo in combinations(variables.len(), spec.k) {
                let ids: Vec<VarId> = combo.iter().map(|&i| i as VarId).collect();
                out.push((tw_name(&name_of(&ids)), name_of(&ids)));
            }
        }
        Method::HypertreeWidth => {
            for combo in combinations(constraints.len(), spec.k) {
                let ids = hw_scope(&constraints, &combo);
                out.push((hw_name(&combo), name_of(&ids)));
            }
        }
    }
    out
}

/// Hypergraph of `l-DM(A)`.
pub fn view_hypergraph(a: &RelationalStructure, spec: MethodSpec) -> Hypergraph {
    Hypergraph::new(
        a.universe().iter().cloned(),
        view_scopes(a, spec)
            .into_iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(_, s)| s.into_iter().collect()),
    )
    .expect("scopes are drawn from the universe")
}

fn tw_name(scope: &[String]) -> String {
    format!("W{{{}}}", scope.join(","))
}

fn hw_name(combo: &[usize]) -> String {
    let parts: Vec<String> = combo.iter().map(usize::to_string).collect();
    format!("C{{{}}}", parts.join(","))
}

fn hw_scope(constraints: &[(String, Constraint)], combo: &[usize]) -> Vec<VarId> {
    let vars: BTreeSet<VarId> = combo.iter().flat_map(|&i| constraints[i].1.scope.iter().copied()).collect();
    vars.into_iter().collect()
}

/// `(l-DM(A), r-DM(A,B))`: base views for every constraint plus one subproblem view
/// per subset of at most `k` variables (tw) or constraints (hw).
pub fn build_views(a: &RelationalStructure, b: &RelationalStructure, spec: MethodSpec) -> ViewPair {
    let mut pair = ViewPair::new(a.universe().iter().cloned(), b.universe().iter().cloned());
    let var_id = |x: &str| pair.variable_id(x).expect("tuple elements are in the universe");
    let constraints = constraints_of(a, &var_id);
    let value_id = |v: &str| pair.value_id(v);
    let allowed: Vec<Vec<Vec<ValId>>> = constraints
        .iter()
        .map(|(_, c)| c.allowed(b.relation(&c.symbol), value_id))
        .collect();
    let mut views = Vec::new();
    for ((name, c), tuples) in constraints.iter().zip(&allowed) {
        views.push((
            name.clone(),
            c.scope.clone(),
            tuples.clone(),
            ViewOrigin::Base { symbol: c.symbol.clone(), tuple: c.tuple.clone() },
        ));
    }
    let domain = pair.values.len() as ValId;
    match spec.method {
        Method::TreeWidth => {
            let allowed_sets: Vec<HashSet<&Vec<ValId>>> = allowed.iter().map(|a| a.iter().collect()).collect();
            for combo in combinations(pair.variables.len(), spec.k) {
                let scope: Vec<VarId> = combo.iter().map(|&i| i as VarId).collect();
                let inside: Vec<(usize, Vec<usize>)> = constraints
                    .iter()
                    .enumerate()
                    .filter(|(_, (_, c))| c.scope.iter().all(|x| scope.contains(x)))
                    .map(|(i, (_, c))| (i, c.scope.iter().map(|x| scope.iter().position(|y| y == x).unwrap()).collect()))
                    .collect();
                let mut tuples = Vec::new();
                let mut row = vec![0 as ValId; scope.len()];
                if domain > 0 {
                    'rows: loop {
                        let ok = inside.iter().all(|(ci, positions)| {
                            let projected: Vec<ValId> = positions.iter().map(|&p| row[p]).collect();
                            allowed_sets[*ci].contains(&projected)
                        });
                        if ok {
                            tuples.push(row.clone());
                        }
                        for p in (0..row.len()).rev() {
                            row[p] += 1;
                            if row[p] < domain {
                                continue 'rows;
                            }
                            row[p] = 0;
                        }
                        break;
                    }
                }
                let names: Vec<String> = scope.iter().map(|&x| pair.variable_name(x).to_string()).collect();
                views.push((tw_name(&names), scope, tuples, ViewOrigin::Derived));
            }
        }
        Method::HypertreeWidth => {
            for combo in combinations(constraints.len(), spec.k) {
                let scope = hw_scope(&constraints, &combo);
                let mut rows: Vec<Vec<ValId>> = vec![vec![ValId::MAX; scope.len()]];
                for &ci in &combo {
                    let positions: Vec<usize> = constraints[ci]
                        .1
                        .scope
                        .iter()
                        .map(|x| scope.iter().position(|y| y == x).unwrap())
                        .collect();
                    let mut next = Vec::new();
                    for row in &rows {
                        for t in &allowed[ci] {
                            let compatible = positions
                                .iter()
                                .zip(t)
                                .all(|(&p, &v)| row[p] == ValId::MAX || row[p] == v);
                            if compatible {
                                let mut joined = row.clone();
                                for (&p, &v) in positions.iter().zip(t) {
                                    joined[p] = v;
                                }
                                next.push(joined);
                            }
                        }
                    }
                    rows = next;
                }
                views.push((hw_name(&combo), scope, rows, ViewOrigin::Derived));
            }
        }
    }
    for (name, scope, tuples, origin) in views {
        pair.push_view(name, scope, tuples, origin).expect("generated view names are unique");
    }
    pair
}

/// Legality of a view pair w.r.t. `(A, B)`: every view contains all projected
/// solutions on its scope and every base view is no looser than its constraint.
/// Uses the brute-force oracle, so only for desk-scale instances.
pub fn is_legal(v: &ViewPair, a: &RelationalStructure, b: &RelationalStructure) -> Result<bool, OracleError> {
    let everything: Vec<&str> = a.universe().iter().map(String::as_str).collect();
    let solutions = oracle_enumerate(a, b, &everything, OracleBudget::default())?;
    for (i, view) in v.views.iter().enumerate() {
        let scope = v.scope_names(i);
        let tuples = v.tuple_set(i);
        for h in &solutions {
            let projected: Vec<String> = scope.iter().map(|x| h.get(x).unwrap().to_string()).collect();
            if !tuples.contains(&projected) {
                return Ok(false);
            }
        }
        if let ViewOrigin::Base { symbol, tuple } = &view.origin {
            let Some(relation) = b.relation(symbol) else { return Ok(false) };
            for t in &tuples {
                let assignment: HashMap<&str, &String> = scope.iter().copied().zip(t).collect();
                let Some(expanded) = tuple
                    .iter()
                    .map(|x| assignment.get(x.as_str()).map(|v| (*v).clone()))
                    .collect::<Option<Vec<String>>>()
                else {
                    return Ok(false);
                };
                if !relation.contains(&expanded) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Whether `(A, O)` is tp-covered through the method: some core of
/// `A ⊎ S_{X1} ⊎ ... ⊎ S_{Xm}` has a tree projection w.r.t. `l-DM(A)`.
pub fn tp_covered_through_dm<S: AsRef<str>>(
    a: &RelationalStructure,
    output: &[S],
    spec: MethodSpec,
) -> Result<bool, StructureError> {
    let pinned = pin_individually(a, output)?;
    Ok(covering_core(&pinned, &view_hypergraph(a, spec)).is_some())
}
