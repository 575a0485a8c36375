//! Graded instance matching and spatial matching.
//!
//! Both relations are directed and kept at every derivable confidence
//! level; the reported value for an ordered pair is its maximum level.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::diag::{codes, Diagnostic};
use crate::ident::Ident;
use crate::store::KnowledgeStore;
use crate::taxonomy::{classes_of, ClassHierarchy};
use crate::vocab::{CLONED_FROM, INSTANCE_OF, IS_INSIDE, PART_OF, SPATIAL_ENTITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Low,
    Medium,
    High,
}

impl Confidence {
    pub const ALL: [Confidence; 3] = [Confidence::Low, Confidence::Medium, Confidence::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::Low => "low",
            Confidence::Medium => "medium",
            Confidence::High => "high",
        }
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Confidence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Confidence::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown confidence `{s}` (expected low, medium or high)"))
    }
}

/// Meet of the confidence lattice.
pub fn min_confidence(a: Confidence, b: Confidence) -> Confidence {
    a.min(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Match,
    Spatial,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MatchAtom {
    pub from: Ident,
    pub to: Ident,
    pub confidence: Confidence,
    pub kind: MatchKind,
}

/// One derivation of an atom: the instances it passes through and the
/// confidence of each base step. The atom's level is the minimum step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub chain: Vec<Ident>,
    pub steps: Vec<Confidence>,
}

impl Witness {
    fn step(from: &Ident, to: &Ident, level: Confidence) -> Self {
        Witness {
            chain: vec![from.clone(), to.clone()],
            steps: vec![level],
        }
    }

    fn join(&self, next: &Witness) -> Self {
        let mut chain = self.chain.clone();
        chain.extend(next.chain.iter().skip(1).cloned());
        let mut steps = self.steps.clone();
        steps.extend(&next.steps);
        Witness { chain, steps }
    }

    pub fn level(&self) -> Confidence {
        self.steps.iter().copied().min().unwrap_or(Confidence::High)
    }
}

impl Serialize for Witness {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.chain.serialize(s)
    }
}

type Key = (Ident, Ident, Confidence);

/// All derived atoms of one relation, at every level, with one witness each.
#[derive(Debug, Clone)]
pub struct MatchSet {
    pub kind: MatchKind,
    scope: BTreeSet<Ident>,
    atoms: BTreeMap<Key, Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchReport {
    pub from: Ident,
    pub to: Ident,
    pub kind: MatchKind,
    pub confidence: Confidence,
    pub witness_chain: Witness,
}

impl MatchSet {
    fn new(kind: MatchKind, scope: BTreeSet<Ident>) -> Self {
        MatchSet {
            kind,
            scope,
            atoms: BTreeMap::new(),
        }
    }

    /// Instances the relation was computed over.
    pub fn scope(&self) -> &BTreeSet<Ident> {
        &self.scope
    }

    pub fn contains(&self, from: &str, to: &str, level: Confidence) -> bool {
        match (Ident::new(from), Ident::new(to)) {
            (Ok(a), Ok(b)) => self.atoms.contains_key(&(a, b, level)),
            _ => false,
        }
    }

    /// Highest derivable level for the ordered pair.
    pub fn best(&self, from: &str, to: &str) -> Option<Confidence> {
        let (from, to) = (Ident::new(from).ok()?, Ident::new(to).ok()?);
        Confidence::ALL
            .into_iter()
            .rev()
            .find(|c| self.atoms.contains_key(&(from.clone(), to.clone(), *c)))
    }

    /// Every atom at every level.
    pub fn all(&self) -> impl Iterator<Item = (&Ident, &Ident, Confidence)> {
        self.atoms.keys().map(|(a, b, c)| (a, b, *c))
    }

    pub fn at_level(&self, level: Confidence) -> BTreeSet<(Ident, Ident)> {
        self.atoms
            .keys()
            .filter(|(_, _, c)| *c == level)
            .map(|(a, b, _)| (a.clone(), b.clone()))
            .collect()
    }

    pub fn witness(&self, from: &Ident, to: &Ident, level: Confidence) -> Option<&Witness> {
        self.atoms.get(&(from.clone(), to.clone(), level))
    }

    /// One atom per ordered pair, at its maximum level.
    pub fn best_atoms(&self) -> Vec<MatchAtom> {
        self.report()
            .into_iter()
            .map(|r| MatchAtom {
                from: r.from,
                to: r.to,
                confidence: r.confidence,
                kind: r.kind,
            })
            .collect()
    }

    pub fn report(&self) -> Vec<MatchReport> {
        let mut best: BTreeMap<(&Ident, &Ident), (Confidence, &Witness)> = BTreeMap::new();
        for ((a, b, c), w) in &self.atoms {
            let slot = best.entry((a, b)).or_insert((*c, w));
            if *c > slot.0 {
                *slot = (*c, w);
            }
        }
        best.into_iter()
            .map(|((a, b), (c, w))| MatchReport {
                from: a.clone(),
                to: b.clone(),
                kind: self.kind,
                confidence: c,
                witness_chain: w.clone(),
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn add_base(&mut self, from: &Ident, to: &Ident, level: Confidence) {
        self.atoms
            .entry((from.clone(), to.clone(), level))
            .or_insert_with(|| Witness::step(from, to, level));
    }

    /// Closes the atoms under chaining: A->C at c1 and C->B at c2, with A,
    /// B, C pairwise distinct, give A->B at min(c1, c2).
    fn close_chains(&mut self) {
        let mut by_from: BTreeMap<Ident, BTreeSet<(Ident, Confidence)>> = BTreeMap::new();
        let mut by_to: BTreeMap<Ident, BTreeSet<(Ident, Confidence)>> = BTreeMap::new();
        for (a, b, c) in self.atoms.keys() {
            by_from.entry(a.clone()).or_default().insert((b.clone(), *c));
            by_to.entry(b.clone()).or_default().insert((a.clone(), *c));
        }
        let mut queue: VecDeque<Key> = self.atoms.keys().cloned().collect();
        while let Some((a, b, c)) = queue.pop_front() {
            if a == b {
                continue;
            }
            let mut new: Vec<(Key, Witness)> = Vec::new();
            let here = &self.atoms[&(a.clone(), b.clone(), c)];
            for (x, c2) in by_from.get(&b).into_iter().flatten() {
                if *x != a && *x != b {
                    let right = &self.atoms[&(b.clone(), x.clone(), *c2)];
                    new.push(((a.clone(), x.clone(), min_confidence(c, *c2)), here.join(right)));
                }
            }
            for (y, c0) in by_to.get(&a).into_iter().flatten() {
                if *y != a && *y != b {
                    let left = &self.atoms[&(y.clone(), a.clone(), *c0)];
                    new.push(((y.clone(), b.clone(), min_confidence(*c0, c)), left.join(here)));
                }
            }
            for (key, witness) in new {
                if self.atoms.contains_key(&key) {
                    continue;
                }
                let (from, to, level) = key.clone();
                by_from.entry(from.clone()).or_default().insert((to.clone(), level));
                by_to.entry(to).or_default().insert((from, level));
                self.atoms.insert(key.clone(), witness);
                queue.push_back(key);
            }
        }
    }
}

/// Nodes that have at least one class, restricted to `scope` when given.
pub fn instances(store: &KnowledgeStore, scope: Option<&BTreeSet<Ident>>) -> BTreeSet<Ident> {
    store
        .with_slot(INSTANCE_OF)
        .into_iter()
        .map(|t| &t.subject)
        .filter(|s| scope.is_none_or(|sc| sc.contains(*s)))
        .cloned()
        .collect()
}

/// Matches between the instances of `scope` (every instance when `None`).
///
/// Base levels: high for identity, for `cloned_from`, and when a main class
/// of A is an ancestor of a main class of B; medium when both are cloned
/// from a common instance; low when they share a main class.
pub fn match_instances(
    store: &KnowledgeStore,
    hierarchy: &ClassHierarchy,
    scope: Option<&BTreeSet<Ident>>,
) -> MatchSet {
    let insts = instances(store, scope);
    let main: BTreeMap<&Ident, BTreeSet<Ident>> = insts
        .iter()
        .map(|i| (i, hierarchy.main_among(&classes_of(store, i.as_str()))))
        .collect();
    let mut set = MatchSet::new(MatchKind::Match, insts.clone());

    for a in &insts {
        set.add_base(a, a, Confidence::High);
        for b in store.values(a.as_str(), CLONED_FROM) {
            if insts.contains(b) {
                set.add_base(a, b, Confidence::High);
            }
        }
    }
    for a in &insts {
        for b in &insts {
            let (ma, mb) = (&main[a], &main[b]);
            if ma.iter().any(|ca| mb.iter().any(|cb| hierarchy.is_ancestor(ca.as_str(), cb.as_str()))) {
                set.add_base(a, b, Confidence::High);
            }
            if ma.intersection(mb).next().is_some() {
                set.add_base(a, b, Confidence::Low);
            }
        }
    }
    let mut clones: BTreeMap<&Ident, Vec<&Ident>> = BTreeMap::new();
    for t in store.with_slot(CLONED_FROM) {
        if insts.contains(&t.subject) {
            clones.entry(&t.value).or_default().push(&t.subject);
        }
    }
    for siblings in clones.values() {
        for a in siblings {
            for b in siblings {
                set.add_base(a, b, Confidence::Medium);
            }
        }
    }
    set.close_chains();
    set
}

/// Whether some class of `a` is `spatial_entity` or one of its descendants.
pub fn is_location_instance(store: &KnowledgeStore, hierarchy: &ClassHierarchy, a: &str) -> bool {
    store
        .values(a, INSTANCE_OF)
        .iter()
        .any(|c| hierarchy.is_a(c.as_str(), SPATIAL_ENTITY))
}

/// Spatial matches between the location instances of the match scope:
/// every match between two locations, plus high-confidence containment
/// (`B is_inside A`, `B part_of A` gives A -> B), closed under chaining.
pub fn spatial_match(
    store: &KnowledgeStore,
    hierarchy: &ClassHierarchy,
    matches: &MatchSet,
) -> (MatchSet, Vec<Diagnostic>) {
    let locations: BTreeSet<Ident> = matches
        .scope()
        .iter()
        .filter(|i| is_location_instance(store, hierarchy, i.as_str()))
        .cloned()
        .collect();
    let mut set = MatchSet::new(MatchKind::Spatial, locations.clone());
    let mut diags = Vec::new();
    for (a, b, c) in matches.all() {
        if locations.contains(a) && locations.contains(b) {
            set.add_base(a, b, c);
        }
    }
    for slot in [IS_INSIDE, PART_OF] {
        for t in store.with_slot(slot) {
            let (inner, outer) = (&t.subject, &t.value);
            let in_scope = |n: &Ident| matches.scope().contains(n);
            if !in_scope(inner) && !in_scope(outer) {
                continue;
            }
            if locations.contains(inner) && locations.contains(outer) {
                set.add_base(outer, inner, Confidence::High);
            } else {
                let offenders: Vec<&str> = [outer, inner]
                    .into_iter()
                    .filter(|n| !locations.contains(*n))
                    .map(Ident::as_str)
                    .collect();
                diags.push(Diagnostic::warn(
                    codes::NON_LOCATION,
                    format!("{t} ignored for spatial matching: `{}` is not a location instance", offenders.join("`, `")),
                ));
            }
        }
    }
    set.close_chains();
    (set, diags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::id;
    use crate::store::parse_fact_file;
    use Confidence::*;

    fn setup(text: &str) -> (KnowledgeStore, ClassHierarchy) {
        let s = parse_fact_file(text, "t").unwrap();
        let h = ClassHierarchy::from_store(&s).unwrap();
        (s, h)
    }

    const CELL: &str = "
        has(spatial_entity, superclass, entity).
        has(cell_region, superclass, spatial_entity).
        has(cytoplasm, superclass, cell_region).
        has(cytosol, superclass, cell_region).
        has(rna, superclass, entity).
        has(mrna, superclass, rna).
        has(cytoplasm322, instance_of, cytoplasm).
        has(cytosol987, instance_of, cytosol).
        has(cytosol234, instance_of, cytosol).
        has(cytosol987, is_inside, cytoplasm322).
        has(mrna4642, instance_of, mrna).
        has(mrna22911, instance_of, mrna).
    ";

    #[test]
    fn lattice_meet() {
        assert_eq!(min_confidence(High, High), High);
        assert_eq!(min_confidence(High, Low), Low);
        assert_eq!(min_confidence(Medium, Low), Low);
        assert_eq!("medium".parse::<Confidence>(), Ok(Medium));
        assert!("certain".parse::<Confidence>().is_err());
    }

    #[test]
    fn worked_example_levels() {
        let (s, h) = setup(CELL);
        let m = match_instances(&s, &h, None);
        assert_eq!(m.best("mrna4642", "mrna22911"), Some(Low));
        assert_eq!(m.best("cytosol234", "cytosol987"), Some(Low));
        assert_eq!(m.best("mrna4642", "mrna4642"), Some(High));
        assert_eq!(m.best("mrna4642", "cytosol987"), None);

        let (sp, diags) = spatial_match(&s, &h, &m);
        assert!(diags.is_empty());
        assert_eq!(sp.best("cytoplasm322", "cytosol987"), Some(High));
        assert_eq!(sp.best("cytosol987", "cytosol234"), Some(Low));
        assert_eq!(sp.best("cytoplasm322", "cytosol234"), Some(Low));
        assert_eq!(sp.best("cytosol987", "cytoplasm322"), None);
        assert_eq!(sp.best("mrna4642", "mrna22911"), None);

        let w = sp.witness(&id("cytoplasm322"), &id("cytosol234"), Low).unwrap();
        assert_eq!(w.chain, vec![id("cytoplasm322"), id("cytosol987"), id("cytosol234")]);
        assert_eq!(w.level(), Low);
    }

    #[test]
    fn location_instances() {
        let (s, h) = setup(&format!("{CELL} has(place1, instance_of, spatial_entity)."));
        assert!(is_location_instance(&s, &h, "cytoplasm322"));
        assert!(!is_location_instance(&s, &h, "mrna4642"));
        assert!(is_location_instance(&s, &h, "place1"));
    }

    #[test]
    fn cloning_levels() {
        let (s, h) = setup(
            "has(a, instance_of, x). has(b, instance_of, y). has(c, instance_of, z).
             has(a, cloned_from, c). has(b, cloned_from, c).",
        );
        let m = match_instances(&s, &h, None);
        assert!(m.contains("a", "c", High));
        assert!(m.contains("a", "b", Medium));
        assert!(m.contains("b", "a", Medium));
        assert!(!m.contains("c", "a", High));
        // a -> c -> ? : no atom leaves c other than c -> c
        assert_eq!(m.best("a", "b"), Some(Medium));
    }

    #[test]
    fn ancestor_main_class_is_directional() {
        let (s, h) = setup(
            "has(mrna, superclass, rna). has(r1, instance_of, rna). has(m1, instance_of, mrna).",
        );
        let m = match_instances(&s, &h, None);
        assert_eq!(m.best("r1", "m1"), Some(High));
        assert_eq!(m.best("m1", "r1"), None);
    }

    #[test]
    fn non_location_containment_is_diagnosed() {
        let (s, h) = setup(&format!("{CELL} has(mrna4642, is_inside, cytoplasm322)."));
        let m = match_instances(&s, &h, None);
        let (sp, diags) = spatial_match(&s, &h, &m);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, codes::NON_LOCATION);
        assert_eq!(sp.best("cytoplasm322", "mrna4642"), None);
    }

    #[test]
    fn scope_limits_instances() {
        let (s, h) = setup(CELL);
        let scope: BTreeSet<Ident> = [id("mrna4642")].into();
        let m = match_instances(&s, &h, Some(&scope));
        assert_eq!(m.report().len(), 1);
    }
}
