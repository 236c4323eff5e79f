//! A small SMARTS subset, enough for atom-typing tables: bracket atom
//! expressions with `! & , ;`, the primitives `#n`, element symbols,
//! `A`, `a`, `*`, `Hn`, `Xn`, `Dn` and charges, plus bond primitives
//! `- = # : ~` and branches. Ring closures and recursive SMARTS are not
//! supported.

use crate::element::Element;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad SMARTS '{pattern}' at offset {offset}: {reason}")]
pub struct SmartsError {
    pub pattern: String,
    pub offset: usize,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Primitive {
    Any,
    Aliphatic,
    Aromatic,
    Element { z: u8, aromatic: bool },
    AtomicNumber(u8),
    TotalH(u8),
    Connectivity(u8),
    Degree(u8),
    Charge(i8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum AtomExpr {
    Prim(Primitive),
    Not(Box<AtomExpr>),
    And(Vec<AtomExpr>),
    Or(Vec<AtomExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondExpr {
    /// Unspecified: single or aromatic.
    Default,
    Single,
    Double,
    Triple,
    Aromatic,
    Any,
}

/// Graph view the matcher runs against. Hydrogens may be explicit nodes.
pub trait MatchTarget {
    fn node_count(&self) -> usize;
    fn atomic_number(&self, a: usize) -> u8;
    fn is_aromatic(&self, a: usize) -> bool;
    fn charge(&self, a: usize) -> i8;
    /// Implicit plus explicit-node hydrogens.
    fn total_h(&self, a: usize) -> u8;
    /// Explicit neighbours.
    fn neighbors(&self, a: usize) -> &[(usize, BondKind)];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondKind {
    Single,
    Double,
    Triple,
    Aromatic,
}

#[derive(Debug, Clone)]
pub struct Smarts {
    atoms: Vec<AtomExpr>,
    /// For atoms 1.., the parent atom and the bond to it.
    parents: Vec<(usize, BondExpr)>,
}

impl Smarts {
    pub fn parse(pattern: &str) -> Result<Smarts, SmartsError> {
        SmartsParser {
            pattern,
            bytes: pattern.as_bytes(),
            pos: 0,
        }
        .parse()
    }

    /// True if the pattern matches with its first atom mapped onto `root`.
    pub fn matches_at<T: MatchTarget>(&self, target: &T, root: usize) -> bool {
        if !atom_matches(&self.atoms[0], target, root) {
            return false;
        }
        let mut mapping = vec![usize::MAX; self.atoms.len()];
        mapping[0] = root;
        self.extend(target, 1, &mut mapping)
    }

    fn extend<T: MatchTarget>(&self, target: &T, next: usize, mapping: &mut [usize]) -> bool {
        if next == self.atoms.len() {
            return true;
        }
        let (parent, bond) = self.parents[next - 1];
        let anchor = mapping[parent];
        for &(n, kind) in target.neighbors(anchor) {
            if mapping[..next].contains(&n) || !bond_matches(bond, kind) || !atom_matches(&self.atoms[next], target, n) {
                continue;
            }
            mapping[next] = n;
            if self.extend(target, next + 1, mapping) {
                return true;
            }
        }
        mapping[next] = usize::MAX;
        false
    }
}

fn bond_matches(expr: BondExpr, kind: BondKind) -> bool {
    match expr {
        BondExpr::Any => true,
        BondExpr::Default => matches!(kind, BondKind::Single | BondKind::Aromatic),
        BondExpr::Single => kind == BondKind::Single,
        BondExpr::Double => kind == BondKind::Double,
        BondExpr::Triple => kind == BondKind::Triple,
        BondExpr::Aromatic => kind == BondKind::Aromatic,
    }
}

fn atom_matches<T: MatchTarget>(expr: &AtomExpr, t: &T, a: usize) -> bool {
    match expr {
        AtomExpr::Not(e) => !atom_matches(e, t, a),
        AtomExpr::And(es) => es.iter().all(|e| atom_matches(e, t, a)),
        AtomExpr::Or(es) => es.iter().any(|e| atom_matches(e, t, a)),
        AtomExpr::Prim(p) => match *p {
            Primitive::Any => true,
            Primitive::Aliphatic => !t.is_aromatic(a),
            Primitive::Aromatic => t.is_aromatic(a),
            Primitive::Element { z, aromatic } => t.atomic_number(a) == z && t.is_aromatic(a) == aromatic,
            Primitive::AtomicNumber(z) => t.atomic_number(a) == z,
            Primitive::TotalH(h) => t.total_h(a) == h,
            Primitive::Connectivity(x) => {
                let explicit_h = t.neighbors(a).iter().filter(|&&(n, _)| t.atomic_number(n) == 1).count();
                // total_h already counts explicit hydrogen nodes
                t.neighbors(a).len() - explicit_h + t.total_h(a) as usize == x as usize
            }
            Primitive::Degree(d) => t.neighbors(a).len() == d as usize,
            Primitive::Charge(q) => t.charge(a) == q,
        },
    }
}

struct SmartsParser<'a> {
    pattern: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl SmartsParser<'_> {
    fn fail<T>(&self, reason: &'static str) -> Result<T, SmartsError> {
        Err(SmartsError {
            pattern: self.pattern.to_string(),
            offset: self.pos,
            reason,
        })
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<Smarts, SmartsError> {
        let mut atoms = Vec::new();
        let mut parents = Vec::new();
        let mut prev: Option<usize> = None;
        let mut stack = Vec::new();
        let mut bond = None;
        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    let Some(p) = prev else { return self.fail("branch before atom") };
                    stack.push(p);
                    self.pos += 1;
                }
                b')' => {
                    let Some(p) = stack.pop() else { return self.fail("unmatched ')'") };
                    prev = Some(p);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'~' => {
                    bond = Some(match c {
                        b'-' => BondExpr::Single,
                        b'=' => BondExpr::Double,
                        b'#' => BondExpr::Triple,
                        b':' => BondExpr::Aromatic,
                        _ => BondExpr::Any,
                    });
                    self.pos += 1;
                }
                _ => {
                    let expr = if c == b'[' { self.bracket()? } else { self.bare_atom()? };
                    let idx = atoms.len();
                    atoms.push(expr);
                    if let Some(p) = prev {
                        parents.push((p, bond.take().unwrap_or(BondExpr::Default)));
                    } else if idx > 0 {
                        return self.fail("disconnected pattern");
                    }
                    prev = Some(idx);
                }
            }
        }
        if atoms.is_empty() || !stack.is_empty() || bond.is_some() {
            return self.fail("incomplete pattern");
        }
        Ok(Smarts { atoms, parents })
    }

    fn bare_atom(&mut self) -> Result<AtomExpr, SmartsError> {
        let rest = &self.pattern[self.pos..];
        let (prim, len) = if rest.starts_with("Cl") {
            (Primitive::Element { z: 17, aromatic: false }, 2)
        } else if rest.starts_with("Br") {
            (Primitive::Element { z: 35, aromatic: false }, 2)
        } else {
            match self.bytes[self.pos] {
                b'*' => (Primitive::Any, 1),
                b'A' => (Primitive::Aliphatic, 1),
                b'a' => (Primitive::Aromatic, 1),
                c @ (b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I') => {
                    let e = Element::from_symbol(&(c as char).to_string()).unwrap();
                    (Primitive::Element { z: e.atomic_number(), aromatic: false }, 1)
                }
                c @ (b'b' | b'c' | b'n' | b'o' | b'p' | b's') => {
                    let e = Element::from_symbol(&(c as char).to_ascii_uppercase().to_string()).unwrap();
                    (Primitive::Element { z: e.atomic_number(), aromatic: true }, 1)
                }
                _ => return self.fail("unexpected character"),
            }
        };
        self.pos += len;
        Ok(AtomExpr::Prim(prim))
    }

    fn bracket(&mut self) -> Result<AtomExpr, SmartsError> {
        self.pos += 1;
        let expr = self.low_and()?;
        if self.peek() != Some(b']') {
            return self.fail("expected ']'");
        }
        self.pos += 1;
        Ok(expr)
    }

    fn low_and(&mut self) -> Result<AtomExpr, SmartsError> {
        let mut terms = vec![self.or()?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            terms.push(self.or()?);
        }
        Ok(collapse(terms, AtomExpr::And))
    }

    fn or(&mut self) -> Result<AtomExpr, SmartsError> {
        let mut terms = vec![self.high_and()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            terms.push(self.high_and()?);
        }
        Ok(collapse(terms, AtomExpr::Or))
    }

    fn high_and(&mut self) -> Result<AtomExpr, SmartsError> {
        let mut terms = vec![self.unary()?];
        loop {
            match self.peek() {
                Some(b'&') => {
                    self.pos += 1;
                    terms.push(self.unary()?);
                }
                Some(b']' | b';' | b',') | None => break,
                Some(_) => terms.push(self.unary()?),
            }
        }
        Ok(collapse(terms, AtomExpr::And))
    }

    fn unary(&mut self) -> Result<AtomExpr, SmartsError> {
        if self.peek() == Some(b'!') {
            self.pos += 1;
            return Ok(AtomExpr::Not(Box::new(self.unary()?)));
        }
        Ok(AtomExpr::Prim(self.primitive()?))
    }

    fn count(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.pattern[start..self.pos].parse().unwrap())
    }

    fn primitive(&mut self) -> Result<Primitive, SmartsError> {
        let Some(c) = self.peek() else { return self.fail("unexpected end") };
        self.pos += 1;
        Ok(match c {
            b'*' => Primitive::Any,
            b'A' => Primitive::Aliphatic,
            b'a' => Primitive::Aromatic,
            b'#' => match self.count() {
                Some(z) if z <= 118 => Primitive::AtomicNumber(z as u8),
                _ => return self.fail("bad atomic number"),
            },
            b'H' => Primitive::TotalH(self.count().unwrap_or(1) as u8),
            b'X' => Primitive::Connectivity(self.count().unwrap_or(1) as u8),
            b'D' => Primitive::Degree(self.count().unwrap_or(1) as u8),
            b'+' | b'-' => {
                let unit: i8 = if c == b'+' { 1 } else { -1 };
                match self.count() {
                    Some(n) => Primitive::Charge(unit * n as i8),
                    None => {
                        let mut q = unit;
                        while self.peek() == Some(c) {
                            self.pos += 1;
                            q += unit;
                        }
                        Primitive::Charge(q)
                    }
                }
            }
            b'a'..=b'z' => {
                let sym = (c as char).to_ascii_uppercase().to_string();
                match Element::from_symbol(&sym).filter(|e| e.can_be_aromatic()) {
                    Some(e) => Primitive::Element { z: e.atomic_number(), aromatic: true },
                    None => return self.fail("unknown aromatic symbol"),
                }
            }
            b'A'..=b'Z' => {
                let two = self
                    .peek()
                    .filter(|l| l.is_ascii_lowercase())
                    .and_then(|l| Element::from_symbol(&format!("{}{}", c as char, l as char)));
                match two {
                    Some(e) => {
                        self.pos += 1;
                        Primitive::Element { z: e.atomic_number(), aromatic: false }
                    }
                    None => match Element::from_symbol(&(c as char).to_string()) {
                        Some(e) => Primitive::Element { z: e.atomic_number(), aromatic: false },
                        None => return self.fail("unknown element"),
                    },
                }
            }
            _ => {
                self.pos -= 1;
                return self.fail("unexpected character");
            }
        })
    }
}

fn collapse(mut terms: Vec<AtomExpr>, wrap: fn(Vec<AtomExpr>) -> AtomExpr) -> AtomExpr {
    if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        wrap(terms)
    }
}
