#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viewcsp::consistency::{gac, gac_scheduled};
use viewcsp::decomposition::{build_views, tp_covered_through_dm, MethodSpec, ViewPair};
use viewcsp::enumeration::SolutionEvent;
use viewcsp::structures::{domain_restricted_version, PartialMap, RelationalStructure};
use viewcsp::testkit::{oracle_enumerate, random_instance, OracleBudget, RandomConfig};

pub fn specs() -> [MethodSpec; 4] {
    [MethodSpec::tw(2), MethodSpec::tw(3), MethodSpec::hw(2), MethodSpec::hw(3)]
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub seed: u64,
    pub a: RelationalStructure,
    pub b: RelationalStructure,
    pub output: Vec<String>,
    pub spec: MethodSpec,
}

impl Sample {
    pub fn new(seed: u64) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, output) = random_instance(&mut rng, RandomConfig::default());
        let spec = specs()[rng.gen_range(0..4)];
        Sample { seed, a, b, output, spec }
    }

    pub fn oracle(&self) -> BTreeSet<PartialMap> {
        oracle_enumerate(&self.a, &self.b, &self.output, OracleBudget::default()).unwrap()
    }

    pub fn all_solutions(&self) -> BTreeSet<PartialMap> {
        let everything: Vec<&str> = self.a.universe().iter().map(String::as_str).collect();
        oracle_enumerate(&self.a, &self.b, &everything, OracleBudget::default()).unwrap()
    }

    pub fn promise(&self) -> bool {
        tp_covered_through_dm(&self.a, &self.output, self.spec).unwrap()
    }
}

/// `count` samples from consecutive seeds starting at `first`.
pub fn samples(first: u64, count: usize) -> Vec<Sample> {
    (first..first + count as u64).map(Sample::new).collect()
}

/// The first `count` samples (by seed) satisfying the promise, and the number of seeds tried.
pub fn promise_samples(first: u64, count: usize) -> (Vec<Sample>, u64) {
    let mut out = Vec::new();
    let mut seed = first;
    while out.len() < count {
        let s = Sample::new(seed);
        if s.promise() {
            out.push(s);
        }
        seed += 1;
    }
    (out, seed - first)
}

pub fn projected(events: &[SolutionEvent]) -> BTreeSet<PartialMap> {
    events.iter().filter_map(|e| e.solution.clone()).collect()
}

/// Views of the instance with every scoped variable domain restricted.
pub fn restricted_views(s: &Sample) -> ViewPair {
    let scoped: Vec<String> = s.a.scoped_elements().into_iter().map(String::from).collect();
    let (a, b) = domain_restricted_version(&s.a, &s.b, &scoped).unwrap();
    build_views(&a, &b, s.spec)
}

/// Checks the fixpoint laws on `v`; `solutions` are total solutions of the
/// underlying instance that `v` must not lose.
pub fn check_gac_laws(v: &ViewPair, solutions: &BTreeSet<PartialMap>, rng: &mut impl Rng) -> Result<(), String> {
    let g = gac(v);
    if gac(&g) != g {
        return Err("not idempotent".into());
    }
    for i in 0..v.len() {
        if !g.tuple_set(i).is_subset(&v.tuple_set(i)) {
            return Err(format!("view {} grew", v.views()[i].name));
        }
    }
    let mut rank: Vec<usize> = (0..v.len()).collect();
    for _ in 0..10 {
        rank.shuffle(rng);
        let mut other = v.clone();
        gac_scheduled(&mut other, &rank);
        if other != g {
            return Err(format!("schedule {rank:?} reached a different fixpoint"));
        }
    }
    for i in 0..g.len() {
        let scope = g.scope_names(i);
        let kept = g.tuple_set(i);
        for h in solutions {
            let t: Vec<String> = scope.iter().map(|x| h.get(x).unwrap().to_string()).collect();
            if !kept.contains(&t) {
                return Err(format!("solution tuple {t:?} deleted from {}", g.views()[i].name));
            }
        }
    }
    Ok(())
}
