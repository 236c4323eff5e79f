//! Molecule handling for the generator toolkit: SMILES parsing, valence
//! checks, canonical SMILES, path fingerprints and Crippen logP.

pub mod canon;
pub mod crippen;
pub mod element;
pub mod fingerprint;
pub mod graph;
pub mod parse;
pub mod smarts;
pub mod valence;

pub use canon::{canonicalize, write_smiles};
pub use crippen::{crippen_logp, LogP};
pub use element::Element;
pub use fingerprint::{fingerprint, tanimoto, Fingerprint, FINGERPRINT_BITS};
pub use graph::{Atom, Bond, BondOrder, MolGraph};
pub use parse::{parse_smiles, ParseError, ParseErrorKind};
pub use valence::{check_valence, is_valid, parse_and_check, Diagnostic, DiagnosticKind, InvalidSmiles, Perception};

/// Canonical SMILES for `text` when it parses and passes the valence check.
pub fn canonical_smiles(text: &str) -> Option<String> {
    parse_and_check(text).ok().map(|(g, _)| canonicalize(&g))
}
