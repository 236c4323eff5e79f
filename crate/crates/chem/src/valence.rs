//! Chemical sanity checks on a parsed graph: valence limits, hydrogen
//! bookkeeping and aromatic-ring consistency.
//!
//! Aromatic atoms are split into pi acceptors, which need one ring double
//! bond in a Kekulé form, and donors (pyrrole-type `[nH]`, furan `o`,
//! thiophene `s`, ring atoms with an exocyclic double bond). An acceptor
//! counts one extra unit of valence. Acceptors must pair up along aromatic
//! ring bonds; an unpaired acceptor means no alternating structure exists.

use std::collections::HashSet;
use std::fmt;

use crate::element::allowed_valences;
use crate::graph::{BondOrder, MolGraph};
use crate::parse::{parse_smiles, ParseError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    ValenceExceeded { valence: u8, max: u8 },
    AromaticOutsideRing,
    AromaticBondOnAliphaticAtom,
    UnpairedAromaticAtom,
}

/// A chemistry problem found in a parsed graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// Byte offset of the offending atom in the source text.
    pub offset: usize,
    pub atom: usize,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DiagnosticKind::ValenceExceeded { valence, max } => {
                write!(f, "atom {} has valence {valence} > {max}", self.atom)?
            }
            DiagnosticKind::AromaticOutsideRing => write!(f, "aromatic atom {} is not in an aromatic ring", self.atom)?,
            DiagnosticKind::AromaticBondOnAliphaticAtom => {
                write!(f, "aromatic bond on non-aromatic atom {}", self.atom)?
            }
            DiagnosticKind::UnpairedAromaticAtom => {
                write!(f, "aromatic atom {} has no partner for a ring double bond", self.atom)?
            }
        }
        write!(f, " at offset {}", self.offset)
    }
}

/// Derived per-atom and per-bond chemistry for a graph.
#[derive(Debug, Clone)]
pub struct Perception {
    /// Bond orders after aromatic bonds outside aromatic rings are demoted
    /// to single.
    pub bond_orders: Vec<BondOrder>,
    pub pi_acceptor: Vec<bool>,
    /// Implicit plus explicit hydrogens per atom.
    pub total_h: Vec<u8>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Perception {
    pub fn new(g: &MolGraph) -> Perception {
        let n = g.atom_count();
        let mut diagnostics = Vec::new();
        let mut orders: Vec<BondOrder> = g.bonds().iter().map(|b| b.order).collect();

        for (i, bond) in g.bonds().iter().enumerate() {
            if bond.order != BondOrder::Aromatic {
                continue;
            }
            let (a, b) = bond.atoms;
            for x in [a, b] {
                if !g.atoms()[x].aromatic {
                    diagnostics.push(Diagnostic {
                        offset: g.atoms()[x].offset,
                        atom: x,
                        kind: DiagnosticKind::AromaticBondOnAliphaticAtom,
                    });
                }
            }
            if !(g.atoms()[a].aromatic && g.atoms()[b].aromatic) {
                orders[i] = BondOrder::Single;
            }
        }
        // Aromatic bonds that are bridges of the aromatic subgraph are not in
        // any aromatic ring.
        let aromatic: Vec<usize> = (0..orders.len()).filter(|&i| orders[i] == BondOrder::Aromatic).collect();
        for &i in &aromatic {
            if !in_cycle(g, &orders, i) {
                orders[i] = BondOrder::Single;
            }
        }

        let mut pi_acceptor = vec![false; n];
        let mut total_h = vec![0u8; n];
        for a in 0..n {
            let atom = &g.atoms()[a];
            let (acceptor, h, valence) = atom_state(g, &orders, a, atom.explicit_h);
            pi_acceptor[a] = acceptor;
            total_h[a] = h;
            if atom.aromatic {
                let ring_bonds = g
                    .neighbors(a)
                    .iter()
                    .filter(|&&(_, b)| orders[b] == BondOrder::Aromatic)
                    .count();
                if ring_bonds < 2 {
                    diagnostics.push(Diagnostic {
                        offset: atom.offset,
                        atom: a,
                        kind: DiagnosticKind::AromaticOutsideRing,
                    });
                }
            }
            if let Some(allowed) = allowed_valences(atom.element, atom.charge) {
                let max = *allowed.last().unwrap();
                if valence > max {
                    diagnostics.push(Diagnostic {
                        offset: atom.offset,
                        atom: a,
                        kind: DiagnosticKind::ValenceExceeded { valence, max },
                    });
                }
            }
        }

        for a in unpaired_acceptors(g, &orders, &pi_acceptor) {
            diagnostics.push(Diagnostic {
                offset: g.atoms()[a].offset,
                atom: a,
                kind: DiagnosticKind::UnpairedAromaticAtom,
            });
        }
        diagnostics.sort_by_key(|d| (d.offset, d.atom));

        Perception {
            bond_orders: orders,
            pi_acceptor,
            total_h,
            diagnostics,
        }
    }

    /// Hydrogen count the atom would carry if written without brackets.
    pub fn organic_h(&self, g: &MolGraph, atom: usize) -> u8 {
        atom_state(g, &self.bond_orders, atom, None).1
    }

    pub fn is_valid(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Returns (pi acceptor, total hydrogens, valence including hydrogens).
fn atom_state(g: &MolGraph, orders: &[BondOrder], a: usize, explicit_h: Option<u8>) -> (bool, u8, u8) {
    let atom = &g.atoms()[a];
    let bond_sum: u32 = g.neighbors(a).iter().map(|&(_, b)| orders[b].valence() as u32).sum();
    let bond_sum = bond_sum.min(u8::MAX as u32 / 2) as u8;
    let explicit = explicit_h.unwrap_or(0);
    let allowed = allowed_valences(atom.element, atom.charge);

    let mut acceptor = false;
    if atom.aromatic {
        let multiple = g
            .neighbors(a)
            .iter()
            .any(|&(_, b)| matches!(orders[b], BondOrder::Double | BondOrder::Triple));
        let primary = allowed
            .as_ref()
            .map(|v| v[0])
            .or_else(|| atom.element.primary_valence());
        acceptor = match primary {
            Some(p) => !multiple && bond_sum + explicit < p,
            None => false,
        };
    }
    let valence = bond_sum + explicit + acceptor as u8;
    let h = match (explicit_h, &allowed) {
        (Some(h), _) => h,
        (None, Some(list)) => list.iter().find(|&&v| v >= valence).map(|&v| v - valence).unwrap_or(0),
        (None, None) => 0,
    };
    let total = if explicit_h.is_some() { valence } else { valence + h };
    (acceptor, h, total)
}

fn in_cycle(g: &MolGraph, orders: &[BondOrder], bond: usize) -> bool {
    let (start, goal) = g.bonds()[bond].atoms;
    let mut seen = vec![false; g.atom_count()];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(a) = stack.pop() {
        for &(n, b) in g.neighbors(a) {
            if b == bond || orders[b] != BondOrder::Aromatic || seen[n] {
                continue;
            }
            if n == goal {
                return true;
            }
            seen[n] = true;
            stack.push(n);
        }
    }
    false
}

/// Atoms of acceptor components that admit no perfect pairing.
fn unpaired_acceptors(g: &MolGraph, orders: &[BondOrder], acceptor: &[bool]) -> Vec<usize> {
    let n = g.atom_count();
    let mut comp = vec![usize::MAX; n];
    let mut bad = Vec::new();
    for start in 0..n {
        if !acceptor[start] || comp[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        comp[start] = start;
        let mut i = 0;
        while i < members.len() {
            let a = members[i];
            i += 1;
            for &(nb, b) in g.neighbors(a) {
                if acceptor[nb] && orders[b] == BondOrder::Aromatic && comp[nb] == usize::MAX {
                    comp[nb] = start;
                    members.push(nb);
                }
            }
        }
        members.sort_unstable();
        if members.len() % 2 == 1 {
            bad.push(members[0]);
            continue;
        }
        if members.len() > 128 {
            continue;
        }
        let local: Vec<Vec<usize>> = members
            .iter()
            .map(|&a| {
                g.neighbors(a)
                    .iter()
                    .filter(|&&(nb, b)| acceptor[nb] && orders[b] == BondOrder::Aromatic)
                    .map(|&(nb, _)| members.binary_search(&nb).unwrap())
                    .collect()
            })
            .collect();
        let mut failed = HashSet::new();
        if !perfect_matching(&local, 0, &mut failed) {
            bad.push(members[0]);
        }
    }
    bad
}

fn perfect_matching(adj: &[Vec<usize>], matched: u128, failed: &mut HashSet<u128>) -> bool {
    let n = adj.len();
    let full = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    if matched == full {
        return true;
    }
    if failed.contains(&matched) {
        return false;
    }
    // Branch on the unmatched vertex with the fewest free neighbours.
    let free = |v: usize| matched & (1u128 << v) == 0;
    let pick = (0..n)
        .filter(|&v| free(v))
        .min_by_key(|&v| adj[v].iter().filter(|&&u| free(u)).count())
        .unwrap();
    for &u in &adj[pick] {
        if free(u) {
            let next = matched | (1u128 << pick) | (1u128 << u);
            if perfect_matching(adj, next, failed) {
                return true;
            }
        }
    }
    failed.insert(matched);
    false
}

/// Valence and aromaticity diagnostics for a parsed graph; empty means the
/// molecule is chemically sane.
pub fn check_valence(g: &MolGraph) -> Vec<Diagnostic> {
    Perception::new(g).diagnostics
}

/// True iff `text` parses and passes [`check_valence`].
pub fn is_valid(text: &str) -> bool {
    parse_and_check(text).is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvalidSmiles {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Chemistry(Vec<Diagnostic>),
}

/// Parses `text` and runs the valence check, returning the graph with its
/// perception when both succeed.
pub fn parse_and_check(text: &str) -> Result<(MolGraph, Perception), InvalidSmiles> {
    let g = parse_smiles(text)?;
    let p = Perception::new(&g);
    if p.is_valid() {
        Ok((g, p))
    } else {
        Err(InvalidSmiles::Chemistry(p.diagnostics))
    }
}
