use std::collections::HashSet;

use crate::element::Element;

/// Stereo marker on a bracket atom. Parsed and kept, never interpreted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Chirality {
    Anticlockwise,
    Clockwise,
    /// Extended forms such as `@TH1` or `@OH12`, kept verbatim.
    Other(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub charge: i8,
    /// Hydrogen count written inside brackets. `None` means the atom was
    /// written in the organic subset and carries implicit hydrogens.
    pub explicit_h: Option<u8>,
    pub isotope: Option<u16>,
    pub chirality: Option<Chirality>,
    pub class: Option<u32>,
    /// Byte offset of the atom in the source text.
    pub offset: usize,
}

impl Atom {
    /// Organic-subset atom with implicit hydrogens.
    pub fn organic(element: Element, aromatic: bool) -> Atom {
        Atom {
            element,
            aromatic,
            charge: 0,
            explicit_h: None,
            isotope: None,
            chirality: None,
            class: None,
            offset: 0,
        }
    }

    pub fn is_bracket(&self) -> bool {
        self.explicit_h.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's valence sum; aromatic bonds count 1.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BondDirection {
    Up,
    Down,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bond {
    pub atoms: (usize, usize),
    pub order: BondOrder,
    pub direction: Option<BondDirection>,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Bond {
        Bond {
            atoms: (a, b),
            order,
            direction: None,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.atoms.0 == atom {
            self.atoms.1
        } else {
            self.atoms.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("bond {0} joins atom {1} to itself")]
    SelfBond(usize, usize),
    #[error("bond {0} references missing atom {1}")]
    MissingAtom(usize, usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
}

/// Parsed molecule: atoms, bonds and the text it came from.
#[derive(Clone, Debug)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    source_text: String,
    /// Per atom: (neighbour, bond index).
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MolGraph {
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>, source_text: impl Into<String>) -> Result<MolGraph, GraphError> {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        let mut seen = HashSet::new();
        for (i, bond) in bonds.iter().enumerate() {
            let (a, b) = bond.atoms;
            for x in [a, b] {
                if x >= atoms.len() {
                    return Err(GraphError::MissingAtom(i, x));
                }
            }
            if a == b {
                return Err(GraphError::SelfBond(i, a));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(GraphError::DuplicateBond(a.min(b), a.max(b)));
            }
            adjacency[a].push((b, i));
            adjacency[b].push((a, i));
        }
        Ok(MolGraph {
            atoms,
            bonds,
            source_text: source_text.into(),
            adjacency,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Neighbours of `atom` as (neighbour index, bond index).
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].iter().find(|(n, _)| *n == b).map(|&(_, i)| i)
    }

    /// Connected components as sorted atom-index lists, ordered by their
    /// smallest atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.atoms.len()];
        let mut out = Vec::new();
        for start in 0..self.atoms.len() {
            if label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            label[start] = id;
            let mut stack = vec![start];
            while let Some(a) = stack.pop() {
                for &(n, _) in &self.adjacency[a] {
                    if label[n] == usize::MAX {
                        label[n] = id;
                        members.push(n);
                        stack.push(n);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Relabels atoms: atom `i` of the result is atom `order[i]` of `self`.
    /// Bond list order is kept, so callers can shuffle it separately with
    /// [`MolGraph::with_bond_order`].
    pub fn permuted(&self, order: &[usize]) -> MolGraph {
        assert_eq!(order.len(), self.atoms.len(), "permutation length");
        let mut inverse = vec![usize::MAX; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let atoms = order.iter().map(|&old| self.atoms[old].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                atoms: (inverse[b.atoms.1], inverse[b.atoms.0]),
                ..b.clone()
            })
            .collect();
        MolGraph::new(atoms, bonds, self.source_text.clone()).expect("relabelling preserves validity")
    }

    /// Same molecule with the bond list reordered: bond `i` of the result is
    /// bond `order[i]` of `self`.
    pub fn with_bond_order(&self, order: &[usize]) -> MolGraph {
        let bonds = order.iter().map(|&i| self.bonds[i].clone()).collect();
        MolGraph::new(self.atoms.clone(), bonds, self.source_text.clone()).expect("reordering preserves validity")
    }

    /// Builds a new graph with one extra bond. Used by property tests.
    pub fn with_extra_bond(&self, bond: Bond) -> Result<MolGraph, GraphError> {
        let mut bonds = self.bonds.clone();
        bonds.push(bond);
        MolGraph::new(self.atoms.clone(), bonds, self.source_text.clone())
    }
}
