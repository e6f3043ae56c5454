//! Exotic aromatic trees and their elementary differentials.
//!
//! The crate enumerates trees up to isomorphism, evaluates their elementary
//! differentials exactly on polynomial vector fields, builds dual vector
//! fields and pairings, checks equivariance properties with exact witnesses
//! and explores gradient-equivalence classes.

pub mod canon;
pub mod duality;
pub mod elementary;
pub mod enumerate;
pub mod equivariance;
pub mod field;
pub mod gradient;
pub mod linalg;
pub mod notation;
pub mod poly;
pub mod tree;

pub use canon::{canonical_form, canonical_labeling, is_isomorphic, symmetry_coefficient, CanonicalForm};
pub use elementary::{elementary_differential, evaluate_with_jet};
pub use enumerate::{compositions_of_order, enumerate_by_composition, enumerate_by_nodes, enumerate_by_order};
pub use field::{AffineMap, Jet, PolyVectorField};
pub use poly::{Monomial, Poly, Q};
pub use tree::{ClassificationFlags, Composition, ExoticAromaticTree, Node, TreeError};
