//! Wildman-Crippen logP: each atom, hydrogens included, is assigned the
//! first matching type from a contribution table and the contributions are
//! summed.

use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::graph::{BondOrder, MolGraph};
use crate::smarts::{BondKind, MatchTarget, Smarts, SmartsError};
use crate::valence::Perception;

/// The vendored contribution table.
pub const STANDARD_TABLE: &str = include_str!("../data/crippen.tsv");
/// SHA-256 of [`STANDARD_TABLE`].
pub const STANDARD_TABLE_SHA256: &str = "ca5fb9fc518adc72ddca37e0efc85d9e1a59a6243b067409178a220e4d04b347";

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("line {line}: expected 3 tab-separated fields")]
    Format { line: usize },
    #[error("line {line}: bad contribution '{value}'")]
    Number { line: usize, value: String },
    #[error("line {line}: {source}")]
    Pattern { line: usize, source: SmartsError },
    #[error("table version header missing")]
    Version,
    #[error("table checksum mismatch: {0}")]
    Checksum(String),
}

#[derive(Debug, Clone)]
pub struct CrippenType {
    pub label: String,
    pub pattern: String,
    pub logp: f64,
    smarts: Smarts,
}

#[derive(Debug, Clone)]
pub struct CrippenTable {
    types: Vec<CrippenType>,
}

impl CrippenTable {
    /// Parses the `type<TAB>SMARTS<TAB>logP` format; `#` lines are comments
    /// and the first line must be the version header.
    pub fn parse(text: &str) -> Result<CrippenTable, TableError> {
        if !text.starts_with("# crippen-contributions v1") {
            return Err(TableError::Version);
        }
        let mut types = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [label, pattern, value] = fields[..] else {
                return Err(TableError::Format { line: line_no });
            };
            let logp = value.parse().map_err(|_| TableError::Number {
                line: line_no,
                value: value.to_string(),
            })?;
            let smarts = Smarts::parse(pattern).map_err(|source| TableError::Pattern { line: line_no, source })?;
            types.push(CrippenType {
                label: label.to_string(),
                pattern: pattern.to_string(),
                logp,
                smarts,
            });
        }
        Ok(CrippenTable { types })
    }

    /// The vendored table, checksum-verified on first use.
    pub fn standard() -> &'static CrippenTable {
        static TABLE: OnceLock<CrippenTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let digest = hex::encode(Sha256::digest(STANDARD_TABLE.as_bytes()));
            assert_eq!(digest, STANDARD_TABLE_SHA256, "vendored Crippen table was modified");
            CrippenTable::parse(STANDARD_TABLE).expect("vendored Crippen table parses")
        })
    }

    pub fn types(&self) -> &[CrippenType] {
        &self.types
    }

    pub fn contribution(&self, label: &str) -> Option<f64> {
        self.types.iter().find(|t| t.label == label).map(|t| t.logp)
    }
}

/// Atom the table could not type; it contributes 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UntypedAtom {
    /// Index in the hydrogen-expanded graph; heavy atoms keep their index.
    pub atom: usize,
    pub atomic_number: u8,
}

#[derive(Debug, Clone)]
pub struct LogP {
    pub value: f64,
    /// Type label per atom of the hydrogen-expanded graph: heavy atoms
    /// first in input order, then added hydrogens.
    pub atom_types: Vec<Option<String>>,
    pub untyped: Vec<UntypedAtom>,
}

/// Molecular graph with every hydrogen as an explicit node.
struct Expanded {
    z: Vec<u8>,
    aromatic: Vec<bool>,
    charge: Vec<i8>,
    adj: Vec<Vec<(usize, BondKind)>>,
    h: Vec<u8>,
}

impl Expanded {
    fn new(g: &MolGraph, p: &Perception) -> Expanded {
        let heavy = g.atom_count();
        let mut e = Expanded {
            z: g.atoms().iter().map(|a| a.element.atomic_number()).collect(),
            aromatic: g.atoms().iter().map(|a| a.aromatic).collect(),
            charge: g.atoms().iter().map(|a| a.charge).collect(),
            adj: vec![Vec::new(); heavy],
            h: Vec::new(),
        };
        for (i, b) in g.bonds().iter().enumerate() {
            let kind = match p.bond_orders[i] {
                BondOrder::Single => BondKind::Single,
                BondOrder::Double => BondKind::Double,
                BondOrder::Triple => BondKind::Triple,
                BondOrder::Aromatic => BondKind::Aromatic,
            };
            e.adj[b.atoms.0].push((b.atoms.1, kind));
            e.adj[b.atoms.1].push((b.atoms.0, kind));
        }
        for a in 0..heavy {
            for _ in 0..p.total_h[a] {
                let h = e.z.len();
                e.z.push(1);
                e.aromatic.push(false);
                e.charge.push(0);
                e.adj.push(vec![(a, BondKind::Single)]);
                e.adj[a].push((h, BondKind::Single));
            }
        }
        e.h = (0..e.z.len())
            .map(|a| e.adj[a].iter().filter(|&&(n, _)| e.z[n] == 1).count() as u8)
            .collect();
        e
    }
}

impl MatchTarget for Expanded {
    fn node_count(&self) -> usize {
        self.z.len()
    }
    fn atomic_number(&self, a: usize) -> u8 {
        self.z[a]
    }
    fn is_aromatic(&self, a: usize) -> bool {
        self.aromatic[a]
    }
    fn charge(&self, a: usize) -> i8 {
        self.charge[a]
    }
    fn total_h(&self, a: usize) -> u8 {
        self.h[a]
    }
    fn neighbors(&self, a: usize) -> &[(usize, BondKind)] {
        &self.adj[a]
    }
}

/// Crippen logP of `g` using the vendored table.
pub fn crippen_logp(g: &MolGraph) -> LogP {
    crippen_logp_with(CrippenTable::standard(), g)
}

pub fn crippen_logp_with(table: &CrippenTable, g: &MolGraph) -> LogP {
    let p = Perception::new(g);
    let ex = Expanded::new(g, &p);
    let mut value = 0.0;
    let mut atom_types = Vec::with_capacity(ex.node_count());
    let mut untyped = Vec::new();
    for a in 0..ex.node_count() {
        match table.types.iter().find(|t| t.smarts.matches_at(&ex, a)) {
            Some(t) => {
                value += t.logp;
                atom_types.push(Some(t.label.clone()));
            }
            None => {
                atom_types.push(None);
                untyped.push(UntypedAtom {
                    atom: a,
                    atomic_number: ex.z[a],
                });
            }
        }
    }
    LogP {
        value,
        atom_types,
        untyped,
    }
}
