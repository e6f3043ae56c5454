//! Enumeration of exotic aromatic trees up to isomorphism.
//!
//! For a composition κ the vertex in-degrees are fixed, so τ can be chosen
//! once (vertices by non-increasing in-degree, arrows assigned in blocks);
//! every tree with that composition is then isomorphic to one obtained by
//! choosing a perfect matching σ. Matchings are generated recursively and
//! deduplicated through canonical forms.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::canon::{canonical_form, CanonicalForm};
use crate::tree::{Composition, ExoticAromaticTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerationError {
    #[error("composition {0} has odd |κ|+|κ′|+1; no tree exists")]
    OddParity(Composition),
    #[error("enumeration by node count needs an order bound")]
    MissingOrderBound,
}

/// Structural filter applied to enumeration output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeFilter {
    Aromatic,
    Exotic,
    Connected,
    Butcher,
}

impl TreeFilter {
    pub fn accepts(self, t: &ExoticAromaticTree) -> bool {
        let f = t.classify();
        match self {
            TreeFilter::Aromatic => f.is_aromatic,
            TreeFilter::Exotic => f.is_exotic_tree,
            TreeFilter::Connected => f.is_connected,
            TreeFilter::Butcher => f.is_butcher_tree,
        }
    }
}

impl std::str::FromStr for TreeFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aromatic" => Ok(TreeFilter::Aromatic),
            "exotic" => Ok(TreeFilter::Exotic),
            "connected" => Ok(TreeFilter::Connected),
            "butcher" => Ok(TreeFilter::Butcher),
            _ => Err(format!("unknown filter `{s}` (aromatic|exotic|connected|butcher)")),
        }
    }
}

/// Compositions κ with `|κ|+|κ′|+1 = 2n`, in lexicographic order.
pub fn compositions_of_order(n: u32) -> Vec<Composition> {
    if n == 0 {
        return Vec::new();
    }
    compositions_with_elements(2 * n - 1)
}

/// Compositions of the multi-aromas of order `n`: `|κ|+|κ′| = 2n`.
pub fn aroma_compositions_of_order(n: u32) -> Vec<Composition> {
    if n == 0 {
        return Vec::new();
    }
    compositions_with_elements(2 * n)
}

fn compositions_with_elements(total: u32) -> Vec<Composition> {
    // a vertex of in-degree j uses j+1 elements
    let mut out = Vec::new();
    let mut counts = vec![0u32; total as usize];
    fn go(j: usize, rest: u32, counts: &mut Vec<u32>, out: &mut Vec<Composition>) {
        if rest == 0 {
            out.push(Composition::new(counts.clone()));
            return;
        }
        if j == counts.len() {
            return;
        }
        let w = j as u32 + 1;
        for c in 0..=rest / w {
            counts[j] = c;
            go(j + 1, rest - c * w, counts, out);
        }
        counts[j] = 0;
    }
    go(0, total, &mut counts, &mut out);
    out.sort();
    out
}

/// The τ used for enumeration: vertex 1 has the largest in-degree, and
/// arrows target vertices in consecutive blocks.
pub fn canonical_tau(kappa: &Composition) -> Vec<u32> {
    let mut degrees: Vec<usize> = Vec::new();
    for j in (0..kappa.counts().len()).rev() {
        for _ in 0..kappa.get(j) {
            degrees.push(j);
        }
    }
    let mut tau = Vec::new();
    for (v, &d) in degrees.iter().enumerate() {
        tau.extend(std::iter::repeat_n(v as u32 + 1, d));
    }
    tau
}

/// All perfect matchings of `0..n` as partner arrays.
pub fn perfect_matchings(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n % 2 == 1 {
        return out;
    }
    let mut partner = vec![usize::MAX; n];
    fn go(partner: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some(first) = partner.iter().position(|&p| p == usize::MAX) else {
            out.push(partner.clone());
            return;
        };
        for other in first + 1..partner.len() {
            if partner[other] == usize::MAX {
                partner[first] = other;
                partner[other] = first;
                go(partner, out);
                partner[first] = usize::MAX;
                partner[other] = usize::MAX;
            }
        }
    }
    go(&mut partner, &mut out);
    out
}

/// All trees with composition κ, one per isomorphism class, sorted by
/// canonical form.
pub fn enumerate_by_composition(kappa: &Composition) -> Result<Vec<ExoticAromaticTree>, EnumerationError> {
    if kappa.order().is_none() {
        return Err(EnumerationError::OddParity(kappa.clone()));
    }
    let nv = kappa.size() as usize;
    let tau: Vec<usize> = canonical_tau(kappa).iter().map(|&v| v as usize - 1).collect();
    let n = nv + 1 + tau.len();
    let mut seen: BTreeMap<CanonicalForm, ()> = BTreeMap::new();
    for sigma in perfect_matchings(n) {
        let t = ExoticAromaticTree::from_flat(nv, true, tau.clone(), sigma);
        seen.entry(canonical_form(&t)).or_insert(());
    }
    Ok(seen.into_keys().map(|f| f.to_tree()).collect())
}

/// All multi-aromas with composition κ (no root arrow), sorted by
/// canonical form.
pub fn enumerate_aromas_by_composition(kappa: &Composition) -> Vec<ExoticAromaticTree> {
    let nv = kappa.size() as usize;
    let tau: Vec<usize> = canonical_tau(kappa).iter().map(|&v| v as usize - 1).collect();
    let n = nv + tau.len();
    let mut seen: BTreeMap<CanonicalForm, ()> = BTreeMap::new();
    for sigma in perfect_matchings(n) {
        let t = ExoticAromaticTree::from_flat(nv, false, tau.clone(), sigma);
        seen.entry(canonical_form(&t)).or_insert(());
    }
    seen.into_keys().map(|f| f.to_tree()).collect()
}

/// All multi-aromas of order `n`, grouped by composition.
pub fn enumerate_aromas_by_order(n: u32) -> Vec<ExoticAromaticTree> {
    aroma_compositions_of_order(n).iter().flat_map(enumerate_aromas_by_composition).collect()
}

/// All trees of order `n`, grouped by composition.
pub fn enumerate_by_order(n: u32) -> Vec<ExoticAromaticTree> {
    compositions_of_order(n)
        .iter()
        .flat_map(|k| enumerate_by_composition(k).expect("compositions of an order have even parity"))
        .collect()
}

/// All trees of order `1..=n`.
pub fn enumerate_up_to_order(n: u32) -> Vec<ExoticAromaticTree> {
    (1..=n).flat_map(enumerate_by_order).collect()
}

/// All trees with exactly `m` vertices and order at most `max_order`.
pub fn enumerate_by_nodes(m: u32, max_order: Option<u32>) -> Result<Vec<ExoticAromaticTree>, EnumerationError> {
    let max_order = max_order.ok_or(EnumerationError::MissingOrderBound)?;
    Ok((1..=max_order)
        .flat_map(|n| compositions_of_order(n).into_iter().filter(move |k| k.size() == m))
        .flat_map(|k| enumerate_by_composition(&k).expect("even parity"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[u32]) -> Composition {
        Composition::new(v.to_vec())
    }

    #[test]
    fn compositions_for_small_orders() {
        assert_eq!(compositions_of_order(1), vec![c(&[1])]);
        assert_eq!(compositions_of_order(2), vec![c(&[0, 0, 1]), c(&[1, 1]), c(&[3])]);
        assert_eq!(
            compositions_of_order(3),
            vec![
                c(&[0, 0, 0, 0, 1]),
                c(&[0, 1, 1]),
                c(&[1, 0, 0, 1]),
                c(&[1, 2]),
                c(&[2, 0, 1]),
                c(&[3, 1]),
                c(&[5])
            ]
        );
    }

    #[test]
    fn small_aromas() {
        // f^j_j and f^j f^j
        assert_eq!(enumerate_aromas_by_order(1).len(), 2);
        assert_eq!(enumerate_aromas_by_order(2).len(), 9);
        let connected: Vec<_> = enumerate_aromas_by_order(2).into_iter().filter(|t| t.is_connected()).collect();
        // f^j_jkk, f^j_k f^j_k, f^j_k f^k_j, f^j f^j_kk, f^j f^k_jk, f^j f^j_k f^k
        for a in &connected {
            assert_eq!(a.order(), 2);
            assert!(!a.is_rooted());
        }
        assert_eq!(connected.len(), 6);
    }

    #[test]
    fn canonical_tau_groups_arrows() {
        assert_eq!(canonical_tau(&c(&[0, 1, 1])), vec![1, 1, 2]);
        assert_eq!(canonical_tau(&c(&[1, 2])), vec![1, 2]);
        assert_eq!(canonical_tau(&c(&[5])), Vec::<u32>::new());
    }

    #[test]
    fn matching_counts_are_double_factorials() {
        assert_eq!(perfect_matchings(2).len(), 1);
        assert_eq!(perfect_matchings(4).len(), 3);
        assert_eq!(perfect_matchings(6).len(), 15);
        assert_eq!(perfect_matchings(8).len(), 105);
        assert!(perfect_matchings(3).is_empty());
    }

    #[test]
    fn counts_per_composition() {
        let got: Vec<usize> = compositions_of_order(3)
            .iter()
            .map(|k| enumerate_by_composition(k).unwrap().len())
            .collect();
        assert_eq!(got, vec![2, 9, 4, 9, 6, 4, 1]);
        assert_eq!(enumerate_by_order(2).len(), 6);
    }

    #[test]
    fn odd_parity_is_reported() {
        assert!(matches!(
            enumerate_by_composition(&c(&[0, 1])),
            Err(EnumerationError::OddParity(_))
        ));
    }

    #[test]
    fn node_mode_needs_a_bound() {
        assert_eq!(enumerate_by_nodes(2, None), Err(EnumerationError::MissingOrderBound));
        let two = enumerate_by_nodes(2, Some(2)).unwrap();
        // (1,1) has three trees at order 2
        assert_eq!(two.len(), 3);
    }
}
