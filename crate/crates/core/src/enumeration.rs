//! Polynomial-delay enumeration by propagating fixed values through GAC.
//!
//! [`enumerate_all`] backtracks over the output variables only and is exact
//! when the instance is tp-covered through the decomposition method.
//! [`enumerate_certified`] also walks the remaining variables to attach a full
//! solution to every projected solution, and reports a decomposition failure
//! instead of ever emitting a wrong answer.
//!
//! Both are streams: the recursion lives on an explicit stack, so the consumer
//! can stop or pause between events.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::consistency::{gac_after_change, gac_in_place};
use crate::decomposition::{build_views, MethodSpec, ValId, VarId, ViewPair};
use crate::structures::{
    add_domain, domain_restricted_version, validate_instance, Diagnostics, PartialMap, RelationalStructure,
    StructureError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerationError {
    #[error("invalid instance: {}", .0.errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Diagnostics),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ProjectedSolution,
    CertifiedSolution,
    DmFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolutionEvent {
    #[serde(rename = "event")]
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<PartialMap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<PartialMap>,
}

impl SolutionEvent {
    fn projected(solution: PartialMap) -> Self {
        SolutionEvent { kind: EventKind::ProjectedSolution, solution: Some(solution), certificate: None }
    }

    fn certified(solution: PartialMap, certificate: PartialMap) -> Self {
        SolutionEvent {
            kind: EventKind::CertifiedSolution,
            solution: Some(solution),
            certificate: Some(certificate),
        }
    }

    fn failure() -> Self {
        SolutionEvent { kind: EventKind::DmFailure, solution: None, certificate: None }
    }

    /// Solution and certificate merged; a full solution for certified events.
    pub fn full_map(&self) -> Option<PartialMap> {
        let solution = self.solution.as_ref()?;
        Some(match &self.certificate {
            Some(c) => solution.union(c),
            None => solution.clone(),
        })
    }
}

/// Instrumentation of one stream.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EnumerationStats {
    /// GAC calls spent before each output; the last entry is the terminal gap
    /// (after the last output until the stream ended).
    pub gac_calls_between_outputs: Vec<usize>,
    #[serde(skip)]
    pub gap_durations: Vec<Duration>,
    pub propagate_invocations: usize,
    pub outputs: usize,
    /// Fixed values whose subtree produced no output.
    pub failed_extensions: usize,
    /// The first GAC already left some view empty.
    pub top_level_empty: bool,
    pub dm_failure: bool,
    pub finished: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    All,
    Certified,
}

struct Frame {
    depth: usize,
    views: ViewPair,
    active: Vec<ValId>,
    next: usize,
    outputs_at_entry: usize,
}

/// A single-consumer stream of [`SolutionEvent`]s.
pub struct SolutionStream {
    mode: Mode,
    /// Variables in backtracking order: the outputs first.
    order: Vec<VarId>,
    output_len: usize,
    dom_views: Vec<usize>,
    start: Option<ViewPair>,
    stack: Vec<Frame>,
    prefix: Vec<ValId>,
    names: ViewPair,
    stats: EnumerationStats,
    gap_calls: usize,
    gap_started: Instant,
    done: bool,
}

fn check<S: AsRef<str>>(
    a: &RelationalStructure,
    b: &RelationalStructure,
    output: &[S],
) -> Result<(), EnumerationError> {
    let diag = validate_instance(a, b, output);
    if diag.is_ok() {
        Ok(())
    } else {
        Err(EnumerationError::Invalid(diag))
    }
}

/// Enumerates `A^B[O]` by fixing output variables one at a time and
/// re-establishing GAC after each choice. Exact whenever `(A, O)` is
/// tp-covered through `spec`; otherwise the output is unspecified.
pub fn enumerate_all<S: AsRef<str>>(
    a: &RelationalStructure,
    b: &RelationalStructure,
    output: &[S],
    spec: MethodSpec,
) -> Result<SolutionStream, EnumerationError> {
    check(a, b, output)?;
    let (a, b) = domain_restricted_version(a, b, output)?;
    let views = build_views(&a, &b, spec);
    let order: Vec<&str> = output.iter().map(AsRef::as_ref).collect();
    Ok(SolutionStream::new(Mode::All, views, &order, order.len()))
}

/// Enumerates certified projected solutions: each projected solution comes
/// with an extension to all variables. Emits a `dm_failure` event and stops if
/// GAC ever empties below the first level, which can only happen when the
/// instance hypergraph has no tree projection w.r.t. the views.
pub fn enumerate_certified<S: AsRef<str>>(
    a: &RelationalStructure,
    b: &RelationalStructure,
    output: &[S],
    spec: MethodSpec,
) -> Result<SolutionStream, EnumerationError> {
    check(a, b, output)?;
    let mut order: Vec<&str> = output.iter().map(AsRef::as_ref).collect();
    let outputs: BTreeSet<&str> = order.iter().copied().collect();
    order.extend(a.universe().iter().map(String::as_str).filter(|x| !outputs.contains(x)));
    let scoped = a.scoped_elements();
    let (in_scope, loose): (Vec<&str>, Vec<&str>) = order.iter().partition(|x| scoped.contains(*x));
    let (mut a2, mut b2) = domain_restricted_version(a, b, &in_scope)?;
    for x in loose {
        if !a2.domain_restricted().contains(x) {
            let everything = b.universe().clone();
            add_domain(&mut a2, &mut b2, x, everything)?;
        }
    }
    let views = build_views(&a2, &b2, spec);
    Ok(SolutionStream::new(Mode::Certified, views, &order, output.len()))
}

impl SolutionStream {
    fn new(mode: Mode, views: ViewPair, order: &[&str], output_len: usize) -> Self {
        let order: Vec<VarId> = order
            .iter()
            .map(|x| views.variable_id(x).expect("ordered variables are in the universe"))
            .collect();
        let dom_views = order
            .iter()
            .map(|&x| views.dom_view(x).expect("every ordered variable is domain restricted"))
            .collect();
        SolutionStream {
            mode,
            order,
            output_len,
            dom_views,
            names: views.clone(),
            start: Some(views),
            stack: Vec::new(),
            prefix: Vec::new(),
            stats: EnumerationStats::default(),
            gap_calls: 0,
            gap_started: Instant::now(),
            done: false,
        }
    }

    pub fn stats(&self) -> &EnumerationStats {
        &self.stats
    }

    /// Number of output variables `m`.
    pub fn output_len(&self) -> usize {
        self.output_len
    }

    /// Number of variables the stream backtracks over (`m`, or `n` when certified).
    pub fn depth_bound(&self) -> usize {
        self.order.len()
    }

    pub fn is_certified(&self) -> bool {
        self.mode == Mode::Certified
    }

    /// The view pair the stream started from (before any GAC).
    pub fn initial_views(&self) -> &ViewPair {
        &self.names
    }

    /// Drains the stream, returning all events and the final statistics.
    pub fn run(mut self) -> (Vec<SolutionEvent>, EnumerationStats) {
        let events: Vec<SolutionEvent> = self.by_ref().collect();
        (events, self.stats)
    }

    /// One GAC call; `fixed` is the domain view just narrowed, if any.
    fn propagate(&mut self, views: &mut ViewPair, fixed: Option<usize>) {
        match fixed {
            Some(view) => gac_after_change(views, &[view]),
            None => gac_in_place(views),
        };
        self.stats.propagate_invocations += 1;
        self.gap_calls += 1;
    }

    fn close_gap(&mut self) {
        self.stats.gac_calls_between_outputs.push(self.gap_calls);
        self.stats.gap_durations.push(self.gap_started.elapsed());
        self.gap_calls = 0;
        self.gap_started = Instant::now();
    }

    fn finish(&mut self) {
        if !self.done {
            self.done = true;
            self.stats.finished = true;
            self.close_gap();
        }
    }

    fn emit(&mut self) -> SolutionEvent {
        self.stats.outputs += 1;
        self.close_gap();
        let map = |range: std::ops::Range<usize>| -> PartialMap {
            range
                .map(|i| (self.names.variable_name(self.order[i]), self.names.value_name(self.prefix[i])))
                .collect()
        };
        match self.mode {
            Mode::All => SolutionEvent::projected(map(0..self.output_len)),
            Mode::Certified => SolutionEvent::certified(map(0..self.output_len), map(self.output_len..self.order.len())),
        }
    }

    fn start(&mut self, mut views: ViewPair) -> Option<SolutionEvent> {
        self.propagate(&mut views, None);
        self.stats.top_level_empty = views.any_empty();
        if self.order.is_empty() {
            let event = (!views.any_empty()).then(|| self.emit());
            self.finish();
            return event;
        }
        let active = views.domain_values(self.order[0]).unwrap_or_default();
        self.stack.push(Frame { depth: 0, views, active, next: 0, outputs_at_entry: 0 });
        None
    }
}

impl Iterator for SolutionStream {
    type Item = SolutionEvent;

    fn next(&mut self) -> Option<SolutionEvent> {
        if self.done {
            return None;
        }
        if let Some(views) = self.start.take() {
            if let Some(event) = self.start(views) {
                return Some(event);
            }
            if self.done {
                return None;
            }
        }
        loop {
            let Some(top) = self.stack.last_mut() else {
                self.finish();
                return None;
            };
            if top.next >= top.active.len() {
                let frame = self.stack.pop().unwrap();
                if frame.depth > 0 && self.stats.outputs == frame.outputs_at_entry {
                    self.stats.failed_extensions += 1;
                }
                continue;
            }
            let depth = top.depth;
            let value = top.active[top.next];
            top.next += 1;
            if self.mode == Mode::Certified && depth >= self.output_len {
                // one certificate per projected solution
                top.next = top.active.len();
            }
            self.prefix.truncate(depth);
            self.prefix.push(value);
            if depth + 1 == self.order.len() {
                return Some(self.emit());
            }
            let mut child = top.views.clone();
            child.fix_unary(self.dom_views[depth], value);
            self.propagate(&mut child, Some(self.dom_views[depth]));
            if self.mode == Mode::Certified && child.any_empty() {
                self.stats.dm_failure = true;
                self.stack.clear();
                self.finish();
                return Some(SolutionEvent::failure());
            }
            let active = child.domain_values(self.order[depth + 1]).unwrap_or_default();
            let outputs_at_entry = self.stats.outputs;
            self.stack.push(Frame { depth: depth + 1, views: child, active, next: 0, outputs_at_entry });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::is_homomorphism;
    use crate::testkit::{b3c, example1, k2, k4, oracle_enumerate, triangle, OracleBudget};

    fn solutions(events: &[SolutionEvent]) -> BTreeSet<PartialMap> {
        events.iter().filter_map(|e| e.solution.clone()).collect()
    }

    #[test]
    fn triangle_three_colourings() {
        let (events, stats) = enumerate_all(&triangle(), &b3c(), &["A", "B", "C"], MethodSpec::tw(3))
            .unwrap()
            .run();
        assert_eq!(events.len(), 6);
        let oracle = oracle_enumerate(&triangle(), &b3c(), &["A", "B", "C"], OracleBudget::default()).unwrap();
        assert_eq!(solutions(&events), oracle);
        assert!(stats.gac_calls_between_outputs.iter().all(|&g| g <= 3));
        assert_eq!(stats.failed_extensions, 0);
    }

    #[test]
    fn k4_has_no_three_colouring() {
        let (events, stats) = enumerate_all::<&str>(&k4(), &b3c(), &[], MethodSpec::tw(4)).unwrap().run();
        assert!(events.is_empty());
        assert!(stats.top_level_empty);
        assert_eq!(stats.gac_calls_between_outputs, vec![1]);
    }

    #[test]
    fn decision_instance_yields_h_phi() {
        let (events, _) = enumerate_all::<&str>(&triangle(), &b3c(), &[], MethodSpec::tw(3)).unwrap().run();
        assert_eq!(events, vec![SolutionEvent::projected(PartialMap::new())]);
    }

    #[test]
    fn example1_certified_pairs() {
        let a = example1();
        let b = b3c();
        let (events, stats) = enumerate_certified(&a, &b, &["A", "B"], MethodSpec::tw(3)).unwrap().run();
        assert!(!stats.dm_failure);
        let oracle = oracle_enumerate(&a, &b, &["A", "B"], OracleBudget::default()).unwrap();
        assert_eq!(solutions(&events), oracle);
        for e in &events {
            assert_eq!(e.kind, EventKind::CertifiedSolution);
            assert!(is_homomorphism(&e.full_map().unwrap(), &a, &b).unwrap());
        }
        let n = a.universe().len();
        assert!(stats.gac_calls_between_outputs.iter().all(|&g| g <= n));
    }

    #[test]
    fn triangle_vs_k2_fails_below_the_top() {
        let (events, stats) = enumerate_certified(&triangle(), &k2(), &["A"], MethodSpec::tw(2)).unwrap().run();
        assert_eq!(events, vec![SolutionEvent::failure()]);
        assert!(stats.dm_failure);
        assert!(!stats.top_level_empty);
        assert_eq!(stats.propagate_invocations, 2);
    }

    #[test]
    fn single_constraint_full_scope() {
        let mut a = RelationalStructure::new(crate::structures::Vocabulary::from_symbols([("T", 3)]).unwrap());
        a.add_tuple("T", &["x", "y", "z"]).unwrap();
        let mut b = RelationalStructure::new(a.vocabulary().clone());
        for t in [["1", "1", "2"], ["2", "1", "1"], ["2", "2", "2"]] {
            b.add_tuple("T", &t).unwrap();
        }
        for spec in [MethodSpec::tw(1), MethodSpec::hw(1), MethodSpec::tw(3)] {
            let (events, stats) = enumerate_certified(&a, &b, &["x", "y", "z"], spec).unwrap().run();
            assert!(!stats.dm_failure);
            assert_eq!(events.len(), 3, "{spec}");
            for e in &events {
                assert!(e.certificate.as_ref().unwrap().is_empty());
                let s = e.solution.as_ref().unwrap();
                let t = vec![s.get("x").unwrap().to_string(), s.get("y").unwrap().to_string(), s.get("z").unwrap().to_string()];
                assert!(b.relation("T").unwrap().contains(&t));
            }
        }
    }

    #[test]
    fn certified_decision_instance() {
        let (events, _) = enumerate_certified::<&str>(&triangle(), &b3c(), &[], MethodSpec::tw(3)).unwrap().run();
        assert_eq!(events.len(), 1);
        assert!(events[0].solution.as_ref().unwrap().is_empty());
        assert_eq!(events[0].certificate.as_ref().unwrap().len(), 3);
    }

    #[test]
    fn invalid_instances_are_rejected() {
        assert!(matches!(
            enumerate_all(&triangle(), &b3c(), &["Z"], MethodSpec::tw(2)),
            Err(EnumerationError::Invalid(_))
        ));
    }

    #[test]
    fn streams_are_deterministic() {
        let run = || enumerate_all(&example1(), &b3c(), &["D", "A"], MethodSpec::hw(2)).unwrap().run().0;
        assert_eq!(run(), run());
    }
}
