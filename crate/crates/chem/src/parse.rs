//! SMILES reader covering the OpenSMILES grammar minus reaction syntax:
//! organic-subset and bracket atoms, bonds, branches, single-digit and
//! `%nn` ring closures, and dot-separated components.

use std::collections::BTreeMap;

use crate::element::Element;
use crate::graph::{Atom, Bond, BondDirection, BondOrder, Chirality, MolGraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("empty input")]
    Empty,
    #[error("unclosed branch")]
    UnclosedBranch,
    #[error("unmatched ')'")]
    UnmatchedClose,
    #[error("empty branch")]
    EmptyBranch,
    #[error("branch before any atom")]
    BranchWithoutAtom,
    #[error("unmatched ring-closure {0}")]
    UnmatchedRingClosure(u16),
    #[error("conflicting bond symbols on ring-closure {0}")]
    ConflictingRingBond(u16),
    #[error("ring-closure {0} bonds an atom to itself or duplicates a bond")]
    InvalidRingClosure(u16),
    #[error("ring-closure before any atom")]
    RingClosureWithoutAtom,
    #[error("unknown element '{0}'")]
    UnknownElement(String),
    #[error("malformed bracket atom: {0}")]
    MalformedBracket(&'static str),
    #[error("dangling bond symbol")]
    DanglingBond,
    #[error("unsupported bond symbol '{0}'")]
    UnsupportedBond(char),
    #[error("empty component")]
    EmptyComponent,
    #[error("'.' inside a branch")]
    DotInBranch,
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
}

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct BondSpec {
    order: BondOrder,
    direction: Option<BondDirection>,
}

struct RingOpen {
    atom: usize,
    bond: Option<BondSpec>,
    offset: usize,
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    prev: Option<usize>,
    /// (atom the branch hangs from, offset of '(', atom count when opened)
    branches: Vec<(usize, usize, usize)>,
    pending: Option<(BondSpec, usize)>,
    rings: BTreeMap<u16, RingOpen>,
}

/// Parses SMILES text into a molecular graph.
pub fn parse_smiles(text: &str) -> Result<MolGraph, ParseError> {
    Parser {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        branches: Vec::new(),
        pending: None,
        rings: BTreeMap::new(),
    }
    .run()
    .map_err(|mut e| {
        // Errors found at end of input point at the last byte.
        e.offset = e.offset.min(text.len().saturating_sub(1));
        e
    })
}

fn err<T>(offset: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
    Err(ParseError { offset, kind })
}

impl<'a> Parser<'a> {
    fn run(mut self) -> Result<MolGraph, ParseError> {
        if self.bytes.is_empty() {
            return err(0, ParseErrorKind::Empty);
        }
        while self.pos < self.bytes.len() {
            let start = self.pos;
            let c = self.bytes[start];
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return err(start, ParseErrorKind::BranchWithoutAtom);
                    };
                    if self.pending.is_some() {
                        return err(start - 1, ParseErrorKind::DanglingBond);
                    }
                    self.branches.push((prev, start, self.atoms.len()));
                    self.pos += 1;
                }
                b')' => {
                    let Some((anchor, _, atoms_at_open)) = self.branches.pop() else {
                        return err(start, ParseErrorKind::UnmatchedClose);
                    };
                    if let Some((_, off)) = self.pending {
                        return err(off, ParseErrorKind::DanglingBond);
                    }
                    if self.atoms.len() == atoms_at_open {
                        return err(start, ParseErrorKind::EmptyBranch);
                    }
                    self.prev = Some(anchor);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' | b'$' => {
                    if c == b'$' {
                        return err(start, ParseErrorKind::UnsupportedBond('$'));
                    }
                    if self.pending.is_some() || self.prev.is_none() {
                        return err(start, ParseErrorKind::DanglingBond);
                    }
                    let spec = match c {
                        b'-' => BondSpec { order: BondOrder::Single, direction: None },
                        b'=' => BondSpec { order: BondOrder::Double, direction: None },
                        b'#' => BondSpec { order: BondOrder::Triple, direction: None },
                        b':' => BondSpec { order: BondOrder::Aromatic, direction: None },
                        b'/' => BondSpec { order: BondOrder::Single, direction: Some(BondDirection::Up) },
                        _ => BondSpec { order: BondOrder::Single, direction: Some(BondDirection::Down) },
                    };
                    self.pending = Some((spec, start));
                    self.pos += 1;
                }
                b'.' => {
                    if let Some((_, off)) = self.pending {
                        return err(off, ParseErrorKind::DanglingBond);
                    }
                    if self.prev.is_none() {
                        return err(start, ParseErrorKind::EmptyComponent);
                    }
                    if !self.branches.is_empty() {
                        return err(start, ParseErrorKind::DotInBranch);
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom)?;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom)?;
                }
            }
        }
        if let Some((_, off)) = self.pending {
            return err(off, ParseErrorKind::DanglingBond);
        }
        if let Some(&(_, off, _)) = self.branches.first() {
            return err(off, ParseErrorKind::UnclosedBranch);
        }
        if let Some((n, open)) = self.rings.iter().min_by_key(|(_, o)| o.offset) {
            return err(open.offset, ParseErrorKind::UnmatchedRingClosure(*n));
        }
        if self.prev.is_none() {
            return err(self.bytes.len(), ParseErrorKind::EmptyComponent);
        }
        // Ring closures are checked for self and duplicate bonds as they close.
        Ok(MolGraph::new(self.atoms, self.bonds, self.text).expect("parser emits a well-formed graph"))
    }

    fn add_atom(&mut self, atom: Atom) -> Result<(), ParseError> {
        let idx = self.atoms.len();
        let aromatic = atom.aromatic;
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let (order, direction) = match self.pending.take() {
                Some((spec, _)) => (spec.order, spec.direction),
                None => (self.implicit_order(prev, aromatic), None),
            };
            self.bonds.push(Bond {
                atoms: (prev, idx),
                order,
                direction,
            });
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn implicit_order(&self, prev: usize, aromatic: bool) -> BondOrder {
        if aromatic && self.atoms[prev].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn ring_closure(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let number = if self.bytes[start] == b'%' {
            let digits = self.bytes.get(start + 1..start + 3);
            match digits {
                Some([a, b]) if a.is_ascii_digit() && b.is_ascii_digit() => {
                    self.pos += 3;
                    ((a - b'0') * 10 + (b - b'0')) as u16
                }
                _ => return err(start, ParseErrorKind::UnexpectedChar('%')),
            }
        } else {
            self.pos += 1;
            (self.bytes[start] - b'0') as u16
        };
        let Some(atom) = self.prev else {
            return err(start, ParseErrorKind::RingClosureWithoutAtom);
        };
        let here = self.pending.take().map(|(spec, _)| spec);
        match self.rings.remove(&number) {
            None => {
                self.rings.insert(number, RingOpen { atom, bond: here, offset: start });
            }
            Some(open) => {
                let spec = match (open.bond, here) {
                    (Some(a), Some(b)) if a.order != b.order => {
                        return err(start, ParseErrorKind::ConflictingRingBond(number));
                    }
                    (Some(a), _) => Some(a),
                    (None, b) => b,
                };
                if open.atom == atom || self.bonds.iter().any(|b| {
                    (b.atoms.0 == atom && b.atoms.1 == open.atom) || (b.atoms.1 == atom && b.atoms.0 == open.atom)
                }) {
                    return err(start, ParseErrorKind::InvalidRingClosure(number));
                }
                let order = match spec {
                    Some(s) => s.order,
                    None => {
                        if self.atoms[atom].aromatic && self.atoms[open.atom].aromatic {
                            BondOrder::Aromatic
                        } else {
                            BondOrder::Single
                        }
                    }
                };
                self.bonds.push(Bond {
                    atoms: (open.atom, atom),
                    order,
                    direction: spec.and_then(|s| s.direction),
                });
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, ParseError> {
        let start = self.pos;
        let c = self.bytes[start];
        let next = self.bytes.get(start + 1).copied();
        let (element, aromatic, len) = match (c, next) {
            (b'B', Some(b'r')) => (Element::BR, false, 2),
            (b'C', Some(b'l')) => (Element::CL, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'b', _) => (Element::B, true, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b's', _) => (Element::S, true, 1),
            _ if c.is_ascii_alphabetic() || c == b'*' => {
                return err(start, ParseErrorKind::UnknownElement((c as char).to_string()));
            }
            _ => {
                let ch = self.text[start..].chars().next().unwrap_or('?');
                return err(start, ParseErrorKind::UnexpectedChar(ch));
            }
        };
        self.pos += len;
        Ok(Atom {
            offset: start,
            ..Atom::organic(element, aromatic)
        })
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() && self.pos - start < 9 {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.text[start..self.pos].parse().unwrap())
    }

    fn bracket_atom(&mut self) -> Result<Atom, ParseError> {
        let open = self.pos;
        self.pos += 1;
        let isotope = match self.number() {
            Some(0) => return err(open + 1, ParseErrorKind::MalformedBracket("isotope must be positive")),
            Some(n) if n > u16::MAX as u32 => {
                return err(open + 1, ParseErrorKind::MalformedBracket("isotope out of range"));
            }
            n => n.map(|n| n as u16),
        };

        let (element, aromatic) = self.bracket_symbol()?;

        let mut chirality = None;
        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
                chirality = Some(Chirality::Clockwise);
            } else if let Some(class) = self.bytes.get(self.pos..self.pos + 2) {
                if matches!(class, b"TH" | b"AL" | b"SP" | b"TB" | b"OH") {
                    let s = self.pos - 1;
                    self.pos += 2;
                    if self.number().is_none() {
                        return err(self.pos, ParseErrorKind::MalformedBracket("chirality class without number"));
                    }
                    chirality = Some(Chirality::Other(self.text[s..self.pos].to_string()));
                } else {
                    chirality = Some(Chirality::Anticlockwise);
                }
            } else {
                chirality = Some(Chirality::Anticlockwise);
            }
        }

        let mut h = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            h = match self.peek() {
                Some(d) if d.is_ascii_digit() => {
                    self.pos += 1;
                    d - b'0'
                }
                _ => 1,
            };
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.number() {
                if n > 15 {
                    return err(self.pos, ParseErrorKind::MalformedBracket("charge out of range"));
                }
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
                if charge.abs() > 15 {
                    return err(self.pos, ParseErrorKind::MalformedBracket("charge out of range"));
                }
            }
        }

        let mut class = None;
        if self.peek() == Some(b':') {
            self.pos += 1;
            class = Some(self.number().ok_or(ParseError {
                offset: self.pos,
                kind: ParseErrorKind::MalformedBracket("atom class without number"),
            })?);
        }

        match self.peek() {
            Some(b']') => self.pos += 1,
            None => return err(open, ParseErrorKind::MalformedBracket("missing ']'")),
            Some(_) => return err(self.pos, ParseErrorKind::MalformedBracket("unexpected character")),
        }
        Ok(Atom {
            element,
            aromatic,
            charge: charge as i8,
            explicit_h: Some(h),
            isotope,
            chirality,
            class,
            offset: open,
        })
    }

    fn bracket_symbol(&mut self) -> Result<(Element, bool), ParseError> {
        let start = self.pos;
        let Some(c) = self.peek() else {
            return err(start, ParseErrorKind::MalformedBracket("missing element"));
        };
        if c.is_ascii_lowercase() {
            // Aromatic symbols: two-letter forms first.
            for (sym, elem) in [("se", "Se"), ("as", "As"), ("te", "Te")] {
                if self.bytes[start..].starts_with(sym.as_bytes()) {
                    self.pos += 2;
                    return Ok((Element::from_symbol(elem).unwrap(), true));
                }
            }
            let upper = (c as char).to_ascii_uppercase().to_string();
            return match Element::from_symbol(&upper) {
                Some(e) if e.can_be_aromatic() => {
                    self.pos += 1;
                    Ok((e, true))
                }
                _ => err(start, ParseErrorKind::UnknownElement((c as char).to_string())),
            };
        }
        if !c.is_ascii_uppercase() {
            if c == b'*' {
                return err(start, ParseErrorKind::UnknownElement("*".into()));
            }
            return err(start, ParseErrorKind::MalformedBracket("missing element"));
        }
        if let Some(&l) = self.bytes.get(start + 1) {
            if l.is_ascii_lowercase() {
                if let Some(e) = Element::from_symbol(&self.text[start..start + 2]) {
                    self.pos += 2;
                    return Ok((e, false));
                }
            }
        }
        match Element::from_symbol(&self.text[start..start + 1]) {
            Some(e) => {
                self.pos += 1;
                Ok((e, false))
            }
            None => err(start, ParseErrorKind::UnknownElement(self.text[start..start + 1].to_string())),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }
}
