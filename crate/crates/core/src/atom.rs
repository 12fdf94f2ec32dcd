//! Atoms and the structures built directly on them: worlds, machine states
//! and finite permutations.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A name token. Atoms are identified by their index in a fixed enumeration,
/// displayed as `#a<index>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom(pub u32);

impl Atom {
    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#a{}", self.0)
    }
}

impl std::str::FromStr for Atom {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.strip_prefix("#a")
            .and_then(|n| n.parse().ok())
            .map(Atom)
            .ok_or_else(|| format!("not an atom: {s:?}"))
    }
}

impl Serialize for Atom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite set of atoms.
pub type World = BTreeSet<Atom>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("E_DUPLICATE_ATOM: {0} occurs twice in the state")]
    Duplicate(Atom),
}

/// The ordered list of distinct atoms allocated so far.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct State {
    atoms: Vec<Atom>,
}

impl State {
    pub fn empty() -> Self {
        State { atoms: Vec::new() }
    }

    pub fn new(atoms: Vec<Atom>) -> Result<Self, StateError> {
        let mut seen = BTreeSet::new();
        for &a in &atoms {
            if !seen.insert(a) {
                return Err(StateError::Duplicate(a));
            }
        }
        Ok(State { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, a: Atom) -> bool {
        self.atoms.contains(&a)
    }

    /// Zero-based position of `a` in the list.
    pub fn position(&self, a: Atom) -> Option<usize> {
        self.atoms.iter().position(|&b| b == a)
    }

    pub fn world(&self) -> World {
        self.atoms.iter().copied().collect()
    }

    /// `s ⊕ a`: append a fresh atom on the right.
    pub fn push_right(&mut self, a: Atom) -> Result<(), StateError> {
        if self.contains(a) {
            return Err(StateError::Duplicate(a));
        }
        self.atoms.push(a);
        Ok(())
    }

    /// `a ◁ s`: prepend a fresh atom on the left.
    pub fn push_left(&self, a: Atom) -> Result<State, StateError> {
        if self.contains(a) {
            return Err(StateError::Duplicate(a));
        }
        let mut atoms = Vec::with_capacity(self.atoms.len() + 1);
        atoms.push(a);
        atoms.extend_from_slice(&self.atoms);
        Ok(State { atoms })
    }

    pub fn permute(&self, pi: &Permutation) -> State {
        State {
            atoms: self.atoms.iter().map(|&a| pi.apply(a)).collect(),
        }
    }

    /// Append without the distinctness check; callers guarantee freshness.
    pub(crate) fn push_fresh(&mut self, a: Atom) {
        debug_assert!(!self.contains(a));
        self.atoms.push(a);
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "]")
    }
}

/// A finite permutation of atoms, stored as a list of transpositions.
///
/// The list `[t1, t2, ..., tn]` denotes the composite `t1 ∘ t2 ∘ ... ∘ tn`, so
/// `tn` acts first. Composition is concatenation and the inverse is the
/// reversed list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Permutation {
    swaps: Vec<(Atom, Atom)>,
}

impl Permutation {
    pub fn identity() -> Self {
        Permutation { swaps: Vec::new() }
    }

    pub fn swap(a: Atom, b: Atom) -> Self {
        Permutation {
            swaps: vec![(a, b)],
        }
    }

    pub fn from_swaps(swaps: Vec<(Atom, Atom)>) -> Self {
        Permutation { swaps }
    }

    /// Builds the permutation sending `domain[i]` to `image[i]`, where `image`
    /// is a rearrangement of `domain`.
    ///
    /// # Panics
    /// If `image` is not a permutation of `domain`.
    pub fn from_mapping(domain: &[Atom], image: &[Atom]) -> Self {
        assert_eq!(domain.len(), image.len());
        {
            let d: BTreeSet<_> = domain.iter().collect();
            let i: BTreeSet<_> = image.iter().collect();
            assert!(d == i && d.len() == domain.len(), "not a rearrangement");
        }
        // Decompose into cycles c0 -> c1 -> ... -> c(k-1) -> c0; each cycle is
        // (c0 c(k-1)) ∘ ... ∘ (c0 c1).
        let target = |x: Atom| image[domain.iter().position(|&d| d == x).unwrap()];
        let mut visited = BTreeSet::new();
        let mut swaps = Vec::new();
        for &start in domain {
            if visited.contains(&start) {
                continue;
            }
            let mut cycle = vec![start];
            visited.insert(start);
            let mut next = target(start);
            while next != start {
                visited.insert(next);
                cycle.push(next);
                next = target(next);
            }
            for &c in cycle[1..].iter().rev() {
                swaps.push((cycle[0], c));
            }
        }
        Permutation { swaps }
    }

    pub fn swaps(&self) -> &[(Atom, Atom)] {
        &self.swaps
    }

    pub fn apply(&self, a: Atom) -> Atom {
        let mut x = a;
        for &(p, q) in self.swaps.iter().rev() {
            if x == p {
                x = q;
            } else if x == q {
                x = p;
            }
        }
        x
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        let mut swaps = self.swaps.clone();
        swaps.extend_from_slice(&other.swaps);
        Permutation { swaps }
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            swaps: self.swaps.iter().rev().copied().collect(),
        }
    }

    /// Atoms moved by the permutation.
    pub fn support(&self) -> World {
        self.swaps
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .filter(|&a| self.apply(a) != a)
            .collect()
    }

    pub fn apply_world(&self, w: &World) -> World {
        w.iter().map(|&a| self.apply(a)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(i: u32) -> Atom {
        Atom(i)
    }

    #[test]
    fn swap_on_state_is_pointwise() {
        let s = State::new(vec![a(0), a(2), a(1)]).unwrap();
        let p = Permutation::swap(a(0), a(1));
        assert_eq!(s.permute(&p).atoms(), &[a(1), a(2), a(0)]);
    }

    #[test]
    fn duplicate_atoms_rejected() {
        assert_eq!(
            State::new(vec![a(1), a(1)]),
            Err(StateError::Duplicate(a(1)))
        );
        let mut s = State::new(vec![a(1)]).unwrap();
        assert!(s.push_right(a(1)).is_err());
        assert!(s.push_left(a(1)).is_err());
    }

    #[test]
    fn composition_applies_right_first() {
        let p1 = Permutation::swap(a(0), a(1));
        let p2 = Permutation::swap(a(1), a(2));
        let c = p1.compose(&p2);
        // p2 sends 2 to 1, then p1 sends 1 to 0.
        assert_eq!(c.apply(a(2)), a(0));
        assert_eq!(c.apply(c.inverse().apply(a(5))), a(5));
        assert_eq!(c.apply(c.inverse().apply(a(2))), a(2));
    }

    #[test]
    fn from_mapping_realises_rearrangement() {
        let dom = [a(0), a(1), a(2), a(3)];
        let img = [a(2), a(3), a(1), a(0)];
        let p = Permutation::from_mapping(&dom, &img);
        for (d, i) in dom.iter().zip(img.iter()) {
            assert_eq!(p.apply(*d), *i);
        }
        assert_eq!(p.apply(a(9)), a(9));
        assert_eq!(p.support().len(), 4);
    }

    #[test]
    fn prepend_and_append() {
        let s = State::new(vec![a(1)]).unwrap();
        let t = s.push_left(a(0)).unwrap();
        assert_eq!(t.atoms(), &[a(0), a(1)]);
        assert_eq!(t.position(a(1)), Some(1));
        assert_eq!(format!("{t}"), "[#a0,#a1]");
    }
}
