//! Molecular graphs, SMILES, and mechanistic reaction records.

pub mod canon;
pub mod element;
pub mod explicit;
pub mod molecule;
pub mod reaction;
pub mod rings;
pub mod smiles;

pub use canon::{canonical_ranks, write_fragment, write_molecules, write_smiles, WriteOptions};
pub use element::{Element, MassMode};
pub use explicit::{fold_hydrogens, make_explicit, retain_maps, ExplicitSet};
pub use molecule::{molecular_mass, Atom, Bond, BondOrder, GraphError, Molecule, MoleculeSet, Role};
pub use reaction::{
    check_balance, parse_reaction, ArrowCode, Category, HalfArrow, OrbitalRef, ReactionError, ReactionRecord, Split,
};
pub use smiles::{parse_smiles, SmilesError, SmilesErrorKind};
