//! Integer linear combinations of canonical module labels — elements of a
//! (Grothendieck) fusion ring.

use std::collections::BTreeMap;
use std::fmt;

/// An element of a fusion ring over the label type `L`.
///
/// `genuine` records that the combination is a genuine fusion decomposition
/// (direct sum of indecomposables) rather than only a Grothendieck image;
/// `via_composition_factors` flags products in which a length-2 standard
/// input was resolved into its composition factors before fusing.
#[derive(Clone, Debug)]
pub struct FusionElement<L: Ord> {
    terms: BTreeMap<L, i64>,
    pub genuine: bool,
    pub via_composition_factors: bool,
}

/// Ring-element equality: the terms alone, not the provenance flags.
impl<L: Ord> PartialEq for FusionElement<L> {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl<L: Ord> Eq for FusionElement<L> {}

impl<L: Ord + Clone> FusionElement<L> {
    pub fn zero() -> Self {
        FusionElement {
            terms: BTreeMap::new(),
            genuine: true,
            via_composition_factors: false,
        }
    }

    pub fn from_label(label: L) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(label, 1);
        FusionElement {
            terms,
            genuine: true,
            via_composition_factors: false,
        }
    }

    pub fn add_term(&mut self, label: L, mult: i64) {
        if mult == 0 {
            return;
        }
        let slot = self.terms.entry(label).or_insert(0);
        *slot += mult;
        if *slot == 0 {
            self.terms.retain(|_, m| *m != 0);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (l, m) in &other.terms {
            self.add_term(l.clone(), *m);
        }
        self.genuine &= other.genuine;
        self.via_composition_factors |= other.via_composition_factors;
    }

    pub fn scaled(&self, k: i64) -> Self {
        let mut out = self.clone();
        if k == 0 {
            out.terms.clear();
            return out;
        }
        for m in out.terms.values_mut() {
            *m *= k;
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&L, i64)> + '_ {
        self.terms.iter().map(|(l, m)| (l, *m))
    }

    pub fn multiplicity(&self, label: &L) -> i64 {
        self.terms.get(label).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when the element is a single label with multiplicity one.
    pub fn as_single(&self) -> Option<&L> {
        if self.terms.len() == 1 {
            let (l, m) = self.terms.iter().next().unwrap();
            if *m == 1 {
                return Some(l);
            }
        }
        None
    }
}

impl<L: Ord + Clone + fmt::Display> fmt::Display for FusionElement<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (l, m) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if *m != 1 {
                write!(f, "{m}*")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}
