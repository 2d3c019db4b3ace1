//! Relational structures, homomorphisms and cores.
//!
//! A [`RelationalStructure`] plays both CSP roles: as the left-hand structure its
//! universe holds the variables and every tuple is a constraint scope; as the
//! right-hand structure its universe holds the values and every relation is a
//! constraint relation. Everything is kept in canonical (lexicographic) order so
//! that derived outputs are deterministic.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A tuple of element names.
pub type Tuple = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("relation symbol `{0}` is declared twice")]
    DuplicateSymbol(String),
    #[error("relation symbol `{0}` must have arity at least 1")]
    ZeroArity(String),
    #[error("unknown relation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("tuple {tuple:?} of `{symbol}` has length {found}, expected arity {expected}")]
    ArityMismatch {
        symbol: String,
        tuple: Tuple,
        expected: usize,
        found: usize,
    },
    #[error("element `{element}` of a `{symbol}` tuple is not in the universe")]
    ElementNotInUniverse { symbol: String, element: String },
    #[error("vocabularies overlap on symbol `{0}`")]
    OverlappingVocabulary(String),
    #[error("singleton structure needs a nonempty list of distinct elements")]
    InvalidSingleton,
    #[error("mapping is not total: `{0}` is unmapped")]
    NotTotal(String),
    #[error("variable `{0}` occurs in no constraint scope")]
    VariableInNoScope(String),
}

/// Reserved name of the domain relation of a variable.
pub fn dom_symbol(variable: &str) -> String {
    format!("dom({variable})")
}

/// Returns the variable named by a `dom(X)` symbol.
pub fn parse_dom_symbol(symbol: &str) -> Option<&str> {
    symbol
        .strip_prefix("dom(")
        .and_then(|rest| rest.strip_suffix(')'))
        .filter(|v| !v.is_empty())
}

/// Relation symbols with their arities, ordered by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vocabulary {
    symbols: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_symbols<I, S>(symbols: I) -> Result<Self, StructureError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut vocabulary = Self::new();
        for (name, arity) in symbols {
            vocabulary.add(name, arity)?;
        }
        Ok(vocabulary)
    }

    pub fn add(&mut self, name: impl Into<String>, arity: usize) -> Result<(), StructureError> {
        let name = name.into();
        if arity == 0 {
            return Err(StructureError::ZeroArity(name));
        }
        if self.symbols.contains_key(&name) {
            return Err(StructureError::DuplicateSymbol(name));
        }
        self.symbols.insert(name, arity);
        Ok(())
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.symbols.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.symbols.contains_key(name)
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.symbols.iter().map(|(n, a)| (n.as_str(), *a))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// A symbol name derived from `base` that is not yet declared.
    pub fn fresh_symbol(&self, base: &str) -> String {
        let mut name = base.to_string();
        while self.contains(&name) {
            name.push('\'');
        }
        name
    }
}

/// A finite relational structure over a vocabulary.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationalStructure {
    vocabulary: Vocabulary,
    universe: BTreeSet<String>,
    relations: BTreeMap<String, BTreeSet<Tuple>>,
}

impl RelationalStructure {
    /// An empty structure; every symbol starts with an empty relation.
    pub fn new(vocabulary: Vocabulary) -> Self {
        let relations = vocabulary
            .symbols()
            .map(|(name, _)| (name.to_string(), BTreeSet::new()))
            .collect();
        Self {
            vocabulary,
            universe: BTreeSet::new(),
            relations,
        }
    }

    /// Builds a structure and checks every invariant.
    pub fn from_parts<U, S>(
        vocabulary: Vocabulary,
        universe: U,
        relations: BTreeMap<String, BTreeSet<Tuple>>,
    ) -> Result<Self, StructureError>
    where
        U: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut structure = Self::new(vocabulary);
        for element in universe {
            structure.universe.insert(element.into());
        }
        for (symbol, tuples) in relations {
            for tuple in tuples {
                structure.check_tuple(&symbol, &tuple)?;
                for element in &tuple {
                    if !structure.universe.contains(element) {
                        return Err(StructureError::ElementNotInUniverse {
                            symbol: symbol.clone(),
                            element: element.clone(),
                        });
                    }
                }
                structure.relations.get_mut(&symbol).unwrap().insert(tuple);
            }
        }
        Ok(structure)
    }

    pub fn add_element(&mut self, element: impl Into<String>) {
        self.universe.insert(element.into());
    }

    /// Adds a tuple, inserting its elements into the universe.
    pub fn add_tuple<S: AsRef<str>>(&mut self, symbol: &str, tuple: &[S]) -> Result<(), StructureError> {
        let tuple: Tuple = tuple.iter().map(|s| s.as_ref().to_string()).collect();
        self.check_tuple(symbol, &tuple)?;
        for element in &tuple {
            if !self.universe.contains(element) {
                self.universe.insert(element.clone());
            }
        }
        self.relations.get_mut(symbol).unwrap().insert(tuple);
        Ok(())
    }

    fn check_tuple(&self, symbol: &str, tuple: &[String]) -> Result<(), StructureError> {
        let arity = self
            .vocabulary
            .arity(symbol)
            .ok_or_else(|| StructureError::UnknownSymbol(symbol.to_string()))?;
        if tuple.len() != arity {
            return Err(StructureError::ArityMismatch {
                symbol: symbol.to_string(),
                tuple: tuple.to_vec(),
                expected: arity,
                found: tuple.len(),
            });
        }
        Ok(())
    }

    /// Declares a new symbol with an empty relation.
    pub fn declare(&mut self, symbol: impl Into<String>, arity: usize) -> Result<(), StructureError> {
        let symbol = symbol.into();
        self.vocabulary.add(symbol.clone(), arity)?;
        self.relations.insert(symbol, BTreeSet::new());
        Ok(())
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn universe(&self) -> &BTreeSet<String> {
        &self.universe
    }

    pub fn relation(&self, symbol: &str) -> Option<&BTreeSet<Tuple>> {
        self.relations.get(symbol)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &BTreeSet<Tuple>)> + '_ {
        self.relations.iter().map(|(n, r)| (n.as_str(), r))
    }

    /// Every tuple of every relation, in canonical order.
    pub fn tuples(&self) -> impl Iterator<Item = (&str, &Tuple)> + '_ {
        self.relations
            .iter()
            .flat_map(|(n, r)| r.iter().map(move |t| (n.as_str(), t)))
    }

    pub fn tuple_count(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }

    pub fn contains(&self, element: &str) -> bool {
        self.universe.contains(element)
    }

    /// Elements that occur in at least one tuple.
    pub fn scoped_elements(&self) -> BTreeSet<&str> {
        self.tuples()
            .flat_map(|(_, t)| t.iter().map(String::as_str))
            .collect()
    }

    /// Domain-restricted variables: those with a `dom(X)` relation equal to `{<X>}`.
    pub fn domain_restricted(&self) -> BTreeSet<String> {
        self.relations
            .iter()
            .filter_map(|(name, tuples)| {
                let var = parse_dom_symbol(name)?;
                let singleton = tuples.len() == 1 && tuples.iter().next().unwrap() == &vec![var.to_string()];
                singleton.then(|| var.to_string())
            })
            .collect()
    }

    /// Whether `self` is a substructure of `other`.
    pub fn is_substructure_of(&self, other: &RelationalStructure) -> bool {
        self.vocabulary == other.vocabulary
            && self.universe.is_subset(&other.universe)
            && self
                .relations
                .iter()
                .all(|(n, r)| other.relations.get(n).is_some_and(|o| r.is_subset(o)))
    }
}

impl fmt::Display for RelationalStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let universe: Vec<_> = self.universe.iter().map(String::as_str).collect();
        write!(f, "{{{}}}", universe.join(","))?;
        for (name, tuples) in &self.relations {
            let rendered: Vec<String> = tuples.iter().map(|t| format!("<{}>", t.join(","))).collect();
            write!(f, " {}={{{}}}", name, rendered.join(","))?;
        }
        Ok(())
    }
}

/// An assignment of left-hand elements to right-hand elements.
///
/// The empty map is the distinguished `h_phi` answer of a satisfiable instance
/// without output variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartialMap(BTreeMap<String, String>);

impl PartialMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, from: impl Into<String>, to: impl Into<String>) {
        self.0.insert(from.into(), to.into());
    }

    pub fn get(&self, from: &str) -> Option<&str> {
        self.0.get(from).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn domain(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.keys().map(String::as_str)
    }

    /// Restriction to the given elements.
    pub fn restrict<S: AsRef<str>>(&self, to: &[S]) -> PartialMap {
        to.iter()
            .filter_map(|x| self.0.get_key_value(x.as_ref()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    /// Union of two maps; entries of `other` win on conflict.
    pub fn union(&self, other: &PartialMap) -> PartialMap {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.0
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for PartialMap {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        PartialMap(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Issue {
    VocabularyMismatch(String),
    Structure(StructureError),
    OutputNotInUniverse(String),
    OutputInNoScope(String),
    DuplicateOutput(String),
    /// A `dom(X)` relation on the left other than `{<X>}`.
    MalformedDomain(String),
    Disconnected { components: usize },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::VocabularyMismatch(msg) => write!(f, "vocabulary mismatch: {msg}"),
            Issue::Structure(e) => write!(f, "{e}"),
            Issue::OutputNotInUniverse(x) => write!(f, "output variable `{x}` is not in the universe"),
            Issue::OutputInNoScope(x) => write!(f, "output variable `{x}` occurs in no constraint scope"),
            Issue::DuplicateOutput(x) => write!(f, "output variable `{x}` is listed twice"),
            Issue::MalformedDomain(symbol) => {
                write!(f, "left-hand relation `{symbol}` must hold exactly the tuple of its variable")
            }
            Issue::Disconnected { components } => {
                write!(f, "disconnected: the constraint hypergraph has {components} components")
            }
        }
    }
}

/// Result of [`validate_instance`]: hard errors and warnings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl Diagnostics {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn is_connected(&self) -> bool {
        !self.warnings.iter().any(|w| matches!(w, Issue::Disconnected { .. }))
    }
}

/// Checks an ECSP triple before it is handed to the solver.
pub fn validate_instance<S: AsRef<str>>(
    a: &RelationalStructure,
    b: &RelationalStructure,
    output: &[S],
) -> Diagnostics {
    let mut diag = Diagnostics::default();
    if a.vocabulary != b.vocabulary {
        for (name, arity) in a.vocabulary.symbols() {
            match b.vocabulary.arity(name) {
                None => diag
                    .errors
                    .push(Issue::VocabularyMismatch(format!("`{name}` is missing from the right-hand structure"))),
                Some(other) if other != arity => diag.errors.push(Issue::VocabularyMismatch(format!(
                    "`{name}` has arity {arity} on the left and {other} on the right"
                ))),
                Some(_) => {}
            }
        }
        for (name, _) in b.vocabulary.symbols() {
            if !a.vocabulary.contains(name) {
                diag.errors
                    .push(Issue::VocabularyMismatch(format!("`{name}` is missing from the left-hand structure")));
            }
        }
    }
    for s in [a, b] {
        for (symbol, tuple) in s.tuples() {
            if let Err(e) = s.check_tuple(symbol, tuple) {
                diag.errors.push(Issue::Structure(e));
            }
            for element in tuple {
                if !s.universe.contains(element) {
                    diag.errors.push(Issue::Structure(StructureError::ElementNotInUniverse {
                        symbol: symbol.to_string(),
                        element: element.clone(),
                    }));
                }
            }
        }
    }
    let restricted = a.domain_restricted();
    for (symbol, _) in a.relations() {
        if parse_dom_symbol(symbol).is_some_and(|x| !restricted.contains(x)) {
            diag.errors.push(Issue::MalformedDomain(symbol.to_string()));
        }
    }
    let scoped = a.scoped_elements();
    let mut seen = BTreeSet::new();
    for x in output {
        let x = x.as_ref();
        if !seen.insert(x) {
            diag.errors.push(Issue::DuplicateOutput(x.to_string()));
        } else if !a.contains(x) {
            diag.errors.push(Issue::OutputNotInUniverse(x.to_string()));
        } else if !scoped.contains(x) {
            diag.errors.push(Issue::OutputInNoScope(x.to_string()));
        }
    }
    let components = connected_components(a);
    if components > 1 {
        diag.warnings.push(Issue::Disconnected { components });
    }
    diag
}

fn connected_components(a: &RelationalStructure) -> usize {
    let index: HashMap<&str, usize> = a.universe.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..index.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (_, tuple) in a.tuples() {
        let Some(first) = tuple.first().and_then(|e| index.get(e.as_str())) else { continue };
        let first = *first;
        for e in &tuple[1..] {
            if let Some(&other) = index.get(e.as_str()) {
                let (ra, rb) = (find(&mut parent, first), find(&mut parent, other));
                parent[ra] = rb;
            }
        }
    }
    (0..parent.len()).filter(|&i| find(&mut parent, i) == i).count()
}

/// `a1 ⊎ a2`: union of universes and relations over disjoint vocabularies.
pub fn disjoint_union(
    a1: &RelationalStructure,
    a2: &RelationalStructure,
) -> Result<RelationalStructure, StructureError> {
    let mut out = a1.clone();
    for (name, arity) in a2.vocabulary.symbols() {
        if a1.vocabulary.contains(name) {
            return Err(StructureError::OverlappingVocabulary(name.to_string()));
        }
        out.declare(name, arity)?;
    }
    out.universe.extend(a2.universe.iter().cloned());
    for (name, tuples) in &a2.relations {
        out.relations.get_mut(name).unwrap().extend(tuples.iter().cloned());
    }
    Ok(out)
}

/// Default symbol name of the output-pinning relation.
pub const SINGLETON_SYMBOL: &str = "R_O";

/// The structure with universe `output` and one tuple `<X1,...,Xr>` over symbol `R_O`.
pub fn singleton_structure<S: AsRef<str>>(output: &[S]) -> Result<RelationalStructure, StructureError> {
    singleton_structure_named(SINGLETON_SYMBOL, output)
}

pub fn singleton_structure_named<S: AsRef<str>>(
    symbol: &str,
    output: &[S],
) -> Result<RelationalStructure, StructureError> {
    let distinct: BTreeSet<&str> = output.iter().map(AsRef::as_ref).collect();
    if output.is_empty() || distinct.len() != output.len() {
        return Err(StructureError::InvalidSingleton);
    }
    let mut s = RelationalStructure::new(Vocabulary::from_symbols([(symbol, output.len())])?);
    s.add_tuple(symbol, output)?;
    Ok(s)
}

/// `a ⊎ S_O` with a fresh symbol; `a` itself when `output` is empty.
pub fn pin_jointly<S: AsRef<str>>(a: &RelationalStructure, output: &[S]) -> Result<RelationalStructure, StructureError> {
    if output.is_empty() {
        return Ok(a.clone());
    }
    let symbol = a.vocabulary.fresh_symbol(SINGLETON_SYMBOL);
    disjoint_union(a, &singleton_structure_named(&symbol, output)?)
}

/// `a ⊎ S_{X1} ⊎ ... ⊎ S_{Xm}`: every output variable pinned on its own.
pub fn pin_individually<S: AsRef<str>>(
    a: &RelationalStructure,
    output: &[S],
) -> Result<RelationalStructure, StructureError> {
    let mut out = a.clone();
    for x in output {
        let x = x.as_ref();
        let symbol = out.vocabulary.fresh_symbol(&format!("pin({x})"));
        out = disjoint_union(&out, &singleton_structure_named(&symbol, &[x])?)?;
    }
    Ok(out)
}

/// Whether a total map `h` is a homomorphism from `a` to `b`.
pub fn is_homomorphism(
    h: &PartialMap,
    a: &RelationalStructure,
    b: &RelationalStructure,
) -> Result<bool, StructureError> {
    if let Some(x) = a.universe.iter().find(|x| h.get(x).is_none()) {
        return Err(StructureError::NotTotal(x.clone()));
    }
    for (symbol, tuple) in a.tuples() {
        let Some(target) = b.relation(symbol) else {
            return Ok(false);
        };
        let image: Tuple = tuple.iter().map(|x| h.get(x).unwrap().to_string()).collect();
        if !target.contains(&image) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Index-based view of a structure used by the homomorphism search.
struct Indexed<'a> {
    elements: Vec<&'a str>,
    /// (symbol position, tuple) for every tuple.
    tuples: Vec<(usize, Vec<u32>)>,
    relations: Vec<HashSet<Vec<u32>>>,
}

impl<'a> Indexed<'a> {
    fn new(s: &'a RelationalStructure) -> Self {
        let elements: Vec<&str> = s.universe.iter().map(String::as_str).collect();
        let index: HashMap<&str, u32> = elements.iter().enumerate().map(|(i, e)| (*e, i as u32)).collect();
        let mut tuples = Vec::new();
        let mut relations = Vec::new();
        for (pos, (_, rel)) in s.relations.iter().enumerate() {
            let mut set = HashSet::new();
            for t in rel {
                let t: Vec<u32> = t.iter().map(|e| index[e.as_str()]).collect();
                tuples.push((pos, t.clone()));
                set.insert(t);
            }
            relations.push(set);
        }
        Self { elements, tuples, relations }
    }
}

/// Backtracking enumeration of endomorphisms; `visit` returns `false` to stop.
fn search_endomorphisms(s: &Indexed<'_>, mut visit: impl FnMut(&[u32]) -> bool) {
    let n = s.elements.len();
    if n == 0 {
        visit(&[]);
        return;
    }
    // Greedy order: next element is the one most connected to the ones already placed.
    let mut adjacency = vec![BTreeSet::new(); n];
    for (_, t) in &s.tuples {
        for &x in t {
            for &y in t {
                if x != y {
                    adjacency[x as usize].insert(y as usize);
                }
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut weight = vec![0usize; n];
    for _ in 0..n {
        let next = (0..n)
            .filter(|&v| !placed[v])
            .max_by_key(|&v| (weight[v], adjacency[v].len(), std::cmp::Reverse(v)))
            .unwrap();
        placed[next] = true;
        order.push(next);
        for &w in &adjacency[next] {
            weight[w] += 1;
        }
    }
    let mut rank = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    // Each tuple is checked once its last element (in search order) is assigned.
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, (_, t)) in s.tuples.iter().enumerate() {
        let last = t.iter().map(|&x| rank[x as usize]).max().unwrap();
        checks[last].push(i);
    }

    let mut assignment = vec![u32::MAX; n];
    let mut choice = vec![0u32; n];
    let mut depth = 0usize;
    loop {
        if choice[depth] as usize >= n {
            choice[depth] = 0;
            assignment[order[depth]] = u32::MAX;
            if depth == 0 {
                return;
            }
            depth -= 1;
            continue;
        }
        let var = order[depth];
        assignment[var] = choice[depth];
        choice[depth] += 1;
        let ok = checks[depth].iter().all(|&ti| {
            let (rel, t) = &s.tuples[ti];
            let image: Vec<u32> = t.iter().map(|&x| assignment[x as usize]).collect();
            s.relations[*rel].contains(&image)
        });
        if !ok {
            continue;
        }
        if depth + 1 == n {
            if !visit(&assignment) {
                return;
            }
        } else {
            depth += 1;
        }
    }
}

/// All endomorphisms of `a`, in canonical order.
pub fn enumerate_endomorphisms(a: &RelationalStructure) -> Vec<PartialMap> {
    let indexed = Indexed::new(a);
    let mut out = Vec::new();
    search_endomorphisms(&indexed, |h| {
        out.push(
            h.iter()
                .enumerate()
                .map(|(x, &y)| (indexed.elements[x], indexed.elements[y as usize]))
                .collect(),
        );
        true
    });
    out.sort();
    out
}

/// Image of a map as (sorted universe, sorted (symbol, tuple) list).
type Image = (Vec<u32>, Vec<(usize, Vec<u32>)>);

fn image_of(s: &Indexed<'_>, h: &[u32]) -> Image {
    let mut universe: Vec<u32> = h.to_vec();
    universe.sort_unstable();
    universe.dedup();
    let mut tuples: Vec<(usize, Vec<u32>)> = s
        .tuples
        .iter()
        .map(|(r, t)| (*r, t.iter().map(|&x| h[x as usize]).collect()))
        .collect();
    tuples.sort_unstable();
    tuples.dedup();
    (universe, tuples)
}

/// Every core of `a`, in canonical order.
///
/// Cores are exactly the endomorphism images that minimise (universe size, tuple
/// count): every image contains a core and all cores are isomorphic.
pub fn compute_cores(a: &RelationalStructure) -> Vec<RelationalStructure> {
    let indexed = Indexed::new(a);
    let mut best: Option<(usize, usize)> = None;
    let mut images: HashSet<Image> = HashSet::new();
    search_endomorphisms(&indexed, |h| {
        let image = image_of(&indexed, h);
        let key = (image.0.len(), image.1.len());
        match best {
            Some(b) if key > b => {}
            Some(b) if key == b => {
                images.insert(image);
            }
            _ => {
                best = Some(key);
                images.clear();
                images.insert(image);
            }
        }
        true
    });
    let symbols: Vec<&str> = a.relations.keys().map(String::as_str).collect();
    let mut cores: Vec<RelationalStructure> = images
        .into_iter()
        .map(|(universe, tuples)| {
            let mut core = RelationalStructure::new(a.vocabulary.clone());
            for e in universe {
                core.add_element(indexed.elements[e as usize]);
            }
            for (r, t) in tuples {
                let t: Vec<&str> = t.iter().map(|&x| indexed.elements[x as usize]).collect();
                core.add_tuple(symbols[r], &t).expect("image tuples follow the vocabulary");
            }
            core
        })
        .collect();
    cores.sort();
    cores
}

/// The structure induced by an endomorphism image, used by tests and the CLI.
pub fn image_structure(a: &RelationalStructure, h: &PartialMap) -> Result<RelationalStructure, StructureError> {
    let mut out = RelationalStructure::new(a.vocabulary.clone());
    for x in &a.universe {
        out.add_element(h.get(x).ok_or_else(|| StructureError::NotTotal(x.clone()))?);
    }
    for (symbol, tuple) in a.tuples() {
        let image: Vec<&str> = tuple.iter().map(|x| h.get(x).unwrap()).collect();
        out.add_tuple(symbol, &image)?;
    }
    Ok(out)
}

/// Adds a `dom(X)` relation for every output variable not yet domain restricted.
///
/// The allowed values of `X` are the projection of the right-hand relation of
/// the first symbol (by name) whose first tuple containing `X` is used, at the
/// first position of `X` in that tuple.
pub fn domain_restricted_version<S: AsRef<str>>(
    a: &RelationalStructure,
    b: &RelationalStructure,
    output: &[S],
) -> Result<(RelationalStructure, RelationalStructure), StructureError> {
    let mut a2 = a.clone();
    let mut b2 = b.clone();
    let restricted = a.domain_restricted();
    for x in output {
        let x = x.as_ref();
        if restricted.contains(x) {
            continue;
        }
        let (symbol, position) = a
            .tuples()
            .find_map(|(symbol, t)| t.iter().position(|e| e == x).map(|p| (symbol, p)))
            .ok_or_else(|| StructureError::VariableInNoScope(x.to_string()))?;
        let values: BTreeSet<String> = b
            .relation(symbol)
            .map(|r| r.iter().map(|t| t[position].clone()).collect())
            .unwrap_or_default();
        add_domain(&mut a2, &mut b2, x, values)?;
    }
    Ok((a2, b2))
}

/// Adds (or replaces) the domain relation of `x` with the given values.
pub(crate) fn add_domain(
    a: &mut RelationalStructure,
    b: &mut RelationalStructure,
    x: &str,
    values: BTreeSet<String>,
) -> Result<(), StructureError> {
    let symbol = dom_symbol(x);
    for s in [&mut *a, &mut *b] {
        if !s.vocabulary.contains(&symbol) {
            s.declare(symbol.clone(), 1)?;
        }
        s.relations.get_mut(&symbol).unwrap().clear();
    }
    a.add_tuple(&symbol, &[x])?;
    for v in values {
        b.add_tuple(&symbol, &[v])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{example1, triangle, b3c, k2};

    #[test]
    fn example1_validates_clean() {
        let a = example1();
        let diag = validate_instance(&a, &b3c(), &["A", "B", "C"]);
        assert!(diag.is_ok(), "{diag:?}");
        assert!(diag.is_connected());
    }

    #[test]
    fn output_outside_universe_is_an_error() {
        let diag = validate_instance(&example1(), &b3c(), &["Z"]);
        assert_eq!(diag.errors, vec![Issue::OutputNotInUniverse("Z".into())]);
    }

    #[test]
    fn misplaced_domain_relation_is_an_error() {
        let mut a = example1();
        let mut b = b3c();
        a.declare("dom(A)", 1).unwrap();
        b.declare("dom(A)", 1).unwrap();
        a.add_tuple("dom(A)", &["B"]).unwrap();
        let diag = validate_instance(&a, &b, &["A"]);
        assert_eq!(diag.errors, vec![Issue::MalformedDomain("dom(A)".into())]);
    }

    #[test]
    fn output_in_no_scope_is_an_error() {
        let mut a = example1();
        a.add_element("Q");
        let diag = validate_instance(&a, &b3c(), &["Q"]);
        assert_eq!(diag.errors, vec![Issue::OutputInNoScope("Q".into())]);
    }

    #[test]
    fn two_components_warn_only() {
        let mut a = RelationalStructure::new(Vocabulary::from_symbols([("R", 2)]).unwrap());
        a.add_tuple("R", &["x", "y"]).unwrap();
        a.add_tuple("R", &["u", "v"]).unwrap();
        let diag = validate_instance(&a, &k2(), &["x"]);
        assert!(diag.is_ok());
        assert_eq!(diag.warnings, vec![Issue::Disconnected { components: 2 }]);
    }

    #[test]
    fn vocabulary_mismatch_is_an_error() {
        let b = RelationalStructure::new(Vocabulary::from_symbols([("S", 2)]).unwrap());
        let diag = validate_instance(&example1(), &b, &[] as &[&str]);
        assert_eq!(diag.errors.len(), 2);
    }

    #[test]
    fn union_with_singleton() {
        let a = example1();
        let u = disjoint_union(&a, &singleton_structure(&["A", "B", "C"]).unwrap()).unwrap();
        assert_eq!(u.vocabulary().len(), 2);
        assert_eq!(u.tuple_count(), 8);
        assert_eq!(u.relation("R_O").unwrap().iter().next().unwrap(), &vec!["A", "B", "C"]);
    }

    #[test]
    fn union_with_empty_vocabulary_is_identity() {
        let a = example1();
        let mut empty = RelationalStructure::new(Vocabulary::new());
        for x in a.universe() {
            empty.add_element(x.clone());
        }
        assert_eq!(disjoint_union(&a, &empty).unwrap(), a);
    }

    #[test]
    fn overlapping_union_fails() {
        let a = example1();
        assert_eq!(
            disjoint_union(&a, &a),
            Err(StructureError::OverlappingVocabulary("R".into()))
        );
    }

    #[test]
    fn singleton_edge_cases() {
        let s = singleton_structure(&["X"]).unwrap();
        assert_eq!(s.vocabulary().arity("R_O"), Some(1));
        assert_eq!(s.tuple_count(), 1);
        assert_eq!(singleton_structure::<&str>(&[]), Err(StructureError::InvalidSingleton));
        assert_eq!(singleton_structure(&["X", "X"]), Err(StructureError::InvalidSingleton));
    }

    #[test]
    fn homomorphism_checks() {
        let t = triangle();
        let id: PartialMap = t.universe().iter().map(|x| (x.clone(), x.clone())).collect();
        assert!(is_homomorphism(&id, &t, &t).unwrap());
        let coloring: PartialMap = [("A", "1"), ("B", "2"), ("C", "3")].into_iter().collect();
        assert!(is_homomorphism(&coloring, &t, &b3c()).unwrap());
        let partial: PartialMap = [("A", "1")].into_iter().collect();
        assert_eq!(is_homomorphism(&partial, &t, &b3c()), Err(StructureError::NotTotal("B".into())));
    }

    #[test]
    fn triangle_has_no_two_coloring() {
        // all 2^3 maps
        let t = triangle();
        for bits in 0..8u32 {
            let h: PartialMap = ["A", "B", "C"]
                .iter()
                .enumerate()
                .map(|(i, x)| (*x, if bits >> i & 1 == 1 { "2" } else { "1" }))
                .collect();
            assert!(!is_homomorphism(&h, &t, &k2()).unwrap());
        }
    }

    #[test]
    fn directed_triangle_only_has_identity() {
        let endos = enumerate_endomorphisms(&triangle());
        assert_eq!(endos.len(), 1);
        assert!(endos[0].iter().all(|(x, y)| x == y));
    }

    #[test]
    fn self_loop_only_has_identity() {
        let mut a = RelationalStructure::new(Vocabulary::from_symbols([("R", 2)]).unwrap());
        a.add_tuple("R", &["X", "X"]).unwrap();
        assert_eq!(enumerate_endomorphisms(&a), vec![[("X", "X")].into_iter().collect()]);
    }

    #[test]
    fn example1_cores() {
        let cores = compute_cores(&example1());
        let rels: Vec<Vec<Vec<String>>> = cores
            .iter()
            .map(|c| c.relation("R").unwrap().iter().cloned().collect())
            .collect();
        let t = |x: &str, y: &str| vec![x.to_string(), y.to_string()];
        assert_eq!(
            rels,
            vec![
                vec![t("A", "B"), t("A", "C"), t("B", "C")],
                vec![t("B", "C"), t("D", "B"), t("D", "C")],
            ]
        );
    }

    #[test]
    fn core_of_core_is_itself() {
        assert_eq!(compute_cores(&triangle()), vec![triangle()]);
    }

    #[test]
    fn pinning_forces_identity_on_outputs() {
        let pinned = pin_jointly(&example1(), &["B", "C", "D"]).unwrap();
        for h in enumerate_endomorphisms(&pinned) {
            for x in ["B", "C", "D"] {
                assert_eq!(h.get(x), Some(x));
            }
        }
    }

    #[test]
    fn domain_restriction_of_example1() {
        let (a2, b2) = domain_restricted_version(&example1(), &b3c(), &["A"]).unwrap();
        assert_eq!(a2.domain_restricted(), BTreeSet::from(["A".to_string()]));
        let dom: Vec<_> = b2.relation("dom(A)").unwrap().iter().map(|t| t[0].as_str()).collect();
        assert_eq!(dom, vec!["1", "2", "3"]);
        // idempotent
        let (a3, b3) = domain_restricted_version(&a2, &b2, &["A"]).unwrap();
        assert_eq!((a3, b3), (a2, b2));
        let (a4, b4) = domain_restricted_version::<&str>(&example1(), &b3c(), &[]).unwrap();
        assert_eq!((a4, b4), (example1(), b3c()));
    }

    #[test]
    fn domain_restriction_needs_a_scope() {
        let mut a = example1();
        a.add_element("Q");
        assert_eq!(
            domain_restricted_version(&a, &b3c(), &["Q"]),
            Err(StructureError::VariableInNoScope("Q".into()))
        );
    }

    #[test]
    fn dom_symbol_round_trip() {
        assert_eq!(parse_dom_symbol(&dom_symbol("X1")), Some("X1"));
        assert_eq!(parse_dom_symbol("dom()"), None);
        assert_eq!(parse_dom_symbol("R"), None);
    }
}
