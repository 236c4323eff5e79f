//! SMILES writers: one that follows input atom order and one that emits a
//! canonical spelling.
//!
//! Canonical ranks come from iterative refinement of atom invariants
//! (degree, element, aromaticity, charge, hydrogens, isotope) by neighbour
//! ranks. Remaining ties are broken by individualising each member of the
//! first tied class in turn; the lexicographically smallest string over the
//! explored orderings wins.

use crate::graph::{Bond, BondDirection, BondOrder, Chirality, MolGraph};
use crate::valence::Perception;

/// Upper bound on complete orderings explored per component. Past it the
/// search follows only the first member of each tied class.
const MAX_LEAVES: usize = 256;

/// Canonical SMILES for `g`. Stereo marks and atom classes are dropped;
/// components are sorted and joined with '.'.
pub fn canonicalize(g: &MolGraph) -> String {
    let mut parts: Vec<String> = g
        .components()
        .into_iter()
        .map(|atoms| canonical_component(&subgraph(g, &atoms)))
        .collect();
    parts.sort();
    parts.join(".")
}

/// Writes `g` following the input atom order, keeping stereo marks and
/// atom classes. Re-parsing gives a graph isomorphic to `g`.
pub fn write_smiles(g: &MolGraph) -> String {
    let p = Perception::new(g);
    let order: Vec<usize> = (0..g.atom_count()).collect();
    let writer = Writer {
        g,
        p: &p,
        rank: &order,
        canonical: false,
    };
    g.components()
        .iter()
        .map(|c| writer.component(c[0]))
        .collect::<Vec<_>>()
        .join(".")
}

fn subgraph(g: &MolGraph, atoms: &[usize]) -> MolGraph {
    let mut index = vec![usize::MAX; g.atom_count()];
    for (i, &a) in atoms.iter().enumerate() {
        index[a] = i;
    }
    let bonds = g
        .bonds()
        .iter()
        .filter(|b| index[b.atoms.0] != usize::MAX)
        .map(|b| Bond {
            atoms: (index[b.atoms.0], index[b.atoms.1]),
            ..b.clone()
        })
        .collect();
    let sub_atoms = atoms.iter().map(|&a| g.atoms()[a].clone()).collect();
    MolGraph::new(sub_atoms, bonds, g.source_text()).expect("subgraph of a valid graph")
}

fn canonical_component(g: &MolGraph) -> String {
    let p = Perception::new(g);
    let invariants: Vec<(usize, u8, bool, i8, u8, u16)> = (0..g.atom_count())
        .map(|a| {
            let atom = &g.atoms()[a];
            (
                g.degree(a),
                atom.element.atomic_number(),
                atom.aromatic,
                atom.charge,
                p.total_h[a],
                atom.isotope.unwrap_or(0),
            )
        })
        .collect();
    let ranks = dense_rank(&invariants);
    let mut search = Search {
        g,
        p: &p,
        leaves: 0,
        best: None,
    };
    search.run(ranks);
    search.best.expect("at least one ordering")
}

fn dense_rank<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).unwrap()).collect()
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().copied().max().map_or(0, |m| m + 1)
}

struct Search<'a> {
    g: &'a MolGraph,
    p: &'a Perception,
    leaves: usize,
    best: Option<String>,
}

impl Search<'_> {
    fn refine(&self, mut ranks: Vec<usize>) -> Vec<usize> {
        loop {
            let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..ranks.len())
                .map(|a| {
                    let mut nb: Vec<(usize, u8)> = self
                        .g
                        .neighbors(a)
                        .iter()
                        .map(|&(n, b)| (ranks[n], self.p.bond_orders[b].code()))
                        .collect();
                    nb.sort_unstable();
                    (ranks[a], nb)
                })
                .collect();
            let next = dense_rank(&keys);
            if class_count(&next) == class_count(&ranks) {
                return next;
            }
            ranks = next;
        }
    }

    fn run(&mut self, ranks: Vec<usize>) {
        let ranks = self.refine(ranks);
        let n = ranks.len();
        if class_count(&ranks) == n {
            self.leaves += 1;
            let s = Writer {
                g: self.g,
                p: self.p,
                rank: &ranks,
                canonical: true,
            }
            .component(ranks.iter().position(|&r| r == 0).unwrap());
            if self.best.as_ref().is_none_or(|b| s < *b) {
                self.best = Some(s);
            }
            return;
        }
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let cell = (0..n).find(|&r| counts[r] > 1).unwrap();
        let members: Vec<usize> = (0..n).filter(|&a| ranks[a] == cell).collect();
        for (i, &m) in members.iter().enumerate() {
            if i > 0 && self.leaves >= MAX_LEAVES {
                break;
            }
            let keys: Vec<(usize, bool)> = (0..n).map(|a| (ranks[a], a != m)).collect();
            self.run(dense_rank(&keys));
        }
    }
}

struct Writer<'a> {
    g: &'a MolGraph,
    p: &'a Perception,
    rank: &'a [usize],
    canonical: bool,
}

struct Walk {
    /// Atoms in output order.
    order: Vec<usize>,
    position: Vec<usize>,
    children: Vec<Vec<(usize, usize)>>,
    /// Ring-closure bonds touching each atom.
    rings: Vec<Vec<usize>>,
}

impl Writer<'_> {
    fn order_of(&self, b: usize) -> BondOrder {
        if self.canonical {
            self.p.bond_orders[b]
        } else {
            self.g.bonds()[b].order
        }
    }

    fn component(&self, root: usize) -> String {
        let n = self.g.atom_count();
        let mut walk = Walk {
            order: Vec::new(),
            position: vec![usize::MAX; n],
            children: vec![Vec::new(); n],
            rings: vec![Vec::new(); n],
        };
        let mut used = vec![false; self.g.bonds().len()];
        self.visit(root, &mut walk, &mut used);

        let mut out = String::new();
        let mut digits: Vec<Option<usize>> = vec![None; self.g.bonds().len()];
        let mut free: Vec<bool> = vec![true; 100];
        self.write(root, None, &walk, &mut digits, &mut free, &mut out);
        out
    }

    fn visit(&self, a: usize, walk: &mut Walk, used: &mut [bool]) {
        walk.position[a] = walk.order.len();
        walk.order.push(a);
        let mut nbrs: Vec<(usize, usize)> = self.g.neighbors(a).to_vec();
        nbrs.sort_by_key(|&(n, _)| self.rank[n]);
        for (n, b) in nbrs {
            if used[b] {
                continue;
            }
            used[b] = true;
            if walk.position[n] != usize::MAX {
                walk.rings[a].push(b);
                walk.rings[n].push(b);
            } else {
                walk.children[a].push((n, b));
                self.visit(n, walk, used);
            }
        }
    }

    fn write(
        &self,
        a: usize,
        via: Option<usize>,
        walk: &Walk,
        digits: &mut [Option<usize>],
        free: &mut [bool],
        out: &mut String,
    ) {
        if let Some(b) = via {
            out.push_str(&self.bond_symbol(b));
        }
        out.push_str(&self.atom_text(a));

        let mut ring_bonds = walk.rings[a].clone();
        ring_bonds.sort_by_key(|&b| walk.position[self.g.bonds()[b].other(a)]);
        let mut released = Vec::new();
        for b in ring_bonds {
            match digits[b] {
                Some(d) => {
                    push_ring_number(out, d);
                    released.push(d);
                }
                None => {
                    let d = (1..100).find(|&d| free[d]).expect("fewer than 100 open rings");
                    free[d] = false;
                    digits[b] = Some(d);
                    out.push_str(&self.bond_symbol(b));
                    push_ring_number(out, d);
                }
            }
        }
        for d in released {
            free[d] = true;
        }

        let kids = &walk.children[a];
        for (i, &(c, b)) in kids.iter().enumerate() {
            let last = i + 1 == kids.len();
            if !last {
                out.push('(');
            }
            self.write(c, Some(b), walk, digits, free, out);
            if !last {
                out.push(')');
            }
        }
    }

    fn bond_symbol(&self, b: usize) -> String {
        let bond = &self.g.bonds()[b];
        let (x, y) = bond.atoms;
        let both_aromatic = self.g.atoms()[x].aromatic && self.g.atoms()[y].aromatic;
        match self.order_of(b) {
            BondOrder::Single => {
                if !self.canonical {
                    match bond.direction {
                        Some(BondDirection::Up) => return "/".into(),
                        Some(BondDirection::Down) => return "\\".into(),
                        None => {}
                    }
                }
                if both_aromatic { "-" } else { "" }.into()
            }
            BondOrder::Double => "=".into(),
            BondOrder::Triple => "#".into(),
            BondOrder::Aromatic => if both_aromatic { "" } else { ":" }.into(),
        }
    }

    fn atom_text(&self, a: usize) -> String {
        let atom = &self.g.atoms()[a];
        let keep_stereo = !self.canonical;
        let symbol = if atom.aromatic {
            atom.element.symbol().to_ascii_lowercase()
        } else {
            atom.element.symbol().to_string()
        };
        let organic = atom.element.is_organic_subset()
            && atom.charge == 0
            && atom.isotope.is_none()
            && (!atom.aromatic || atom.element.is_organic_aromatic())
            && !(keep_stereo && (atom.chirality.is_some() || atom.class.is_some()))
            && self.p.total_h[a] == self.p.organic_h(self.g, a);
        if organic {
            return symbol;
        }
        let mut s = String::from("[");
        if let Some(iso) = atom.isotope {
            s.push_str(&iso.to_string());
        }
        s.push_str(&symbol);
        if keep_stereo {
            match &atom.chirality {
                Some(Chirality::Anticlockwise) => s.push('@'),
                Some(Chirality::Clockwise) => s.push_str("@@"),
                Some(Chirality::Other(t)) => s.push_str(t),
                None => {}
            }
        }
        match self.p.total_h[a] {
            0 => {}
            1 => s.push('H'),
            h => s.push_str(&format!("H{h}")),
        }
        match atom.charge {
            0 => {}
            1 => s.push('+'),
            -1 => s.push('-'),
            q if q > 0 => s.push_str(&format!("+{q}")),
            q => s.push_str(&format!("-{}", -q)),
        }
        if keep_stereo {
            if let Some(c) = atom.class {
                s.push_str(&format!(":{c}"));
            }
        }
        s.push(']');
        s
    }
}

fn push_ring_number(out: &mut String, d: usize) {
    if d < 10 {
        out.push(char::from(b'0' + d as u8));
    } else {
        out.push_str(&format!("%{d}"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_smiles;

    fn canon(s: &str) -> String {
        canonicalize(&parse_smiles(s).unwrap())
    }

    #[test]
    fn same_molecule_two_spellings() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("C"), "C");
        assert_eq!(canon("c1ccccc1O"), canon("Oc1ccccc1"));
        assert_eq!(canon("C1CC1C"), canon("CC1CC1"));
        assert_eq!(canon("[CH4]"), "C");
    }

    #[test]
    fn distinguishes_isomers() {
        assert_ne!(canon("CCCO"), canon("CC(C)O"));
        assert_ne!(canon("Cc1ccccc1C"), canon("Cc1cccc(C)c1"));
    }

    #[test]
    fn components_sorted() {
        assert_eq!(canon("O.CC"), canon("CC.O"));
    }

    #[test]
    fn biaryl_spellings_agree() {
        assert_eq!(canon("c1ccccc1c1ccccc1"), canon("c1ccccc1-c1ccccc1"));
    }

    #[test]
    fn stereo_dropped() {
        assert_eq!(canon("F/C=C/F"), canon("FC=CF"));
        assert_eq!(canon("N[C@@H](C)C(=O)O"), canon("NC(C)C(=O)O"));
    }

    #[test]
    fn writer_round_trip() {
        for s in ["CCO", "C1CC1", "c1ccc2[nH]ccc2c1", "C[N+](C)(C)C.[Cl-]", "F/C=C\\F", "[13CH3]O", "C%12CCCC%12"] {
            let g = parse_smiles(s).unwrap();
            let w = write_smiles(&g);
            let back = parse_smiles(&w).unwrap();
            assert_eq!(canonicalize(&back), canonicalize(&g), "{s} -> {w}");
        }
    }
}
