//! Exact-arithmetic computational topology toolkit.
//!
//! The crate is organized in layers: `exactalg` provides integer matrices and
//! Smith normal form; `simplicial` builds chain complexes and (co)homology of
//! simplicial complexes; `equivariant` handles cell complexes with a free
//! involution, their twisted (co)chain complexes and the connecting
//! homomorphisms between the two parities; `obstructions` computes embedding
//! and linking obstructions of complexes and spatial graphs; `chords` analyzes
//! chord diagrams of closed curves and arrow formulas for degree-one finite
//! type invariants.

pub mod chords;
pub mod equivariant;
pub mod exactalg;
pub mod obstructions;
pub mod simplicial;
