//! Periodic table lookup and the default valence table used by the
//! valence checker.

use std::fmt;

const SYMBOLS: [&str; 119] = [
    "*", "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S",
    "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge",
    "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd",
    "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn",
    "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
];

/// A chemical element, stored as its atomic number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element(u8);

impl Element {
    pub const H: Element = Element(1);
    pub const B: Element = Element(5);
    pub const C: Element = Element(6);
    pub const N: Element = Element(7);
    pub const O: Element = Element(8);
    pub const F: Element = Element(9);
    pub const P: Element = Element(15);
    pub const S: Element = Element(16);
    pub const CL: Element = Element(17);
    pub const BR: Element = Element(35);
    pub const I: Element = Element(53);

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        (1..SYMBOLS.len()).contains(&(z as usize)).then_some(Element(z))
    }

    /// Looks up a capitalised element symbol ("C", "Cl", "Se").
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        SYMBOLS
            .iter()
            .skip(1)
            .position(|s| *s == symbol)
            .map(|i| Element(i as u8 + 1))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        SYMBOLS[self.0 as usize]
    }

    /// Elements that may appear outside brackets.
    pub fn is_organic_subset(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
    }

    /// Elements that may be written as lowercase aromatic symbols.
    pub fn can_be_aromatic(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34 | 52)
    }

    /// Elements allowed as lowercase aromatic atoms outside brackets.
    pub fn is_organic_aromatic(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 15 | 16)
    }

    /// Allowed neutral valences, ascending. `None` for elements the
    /// valence checker does not constrain.
    pub fn default_valences(self) -> Option<&'static [u8]> {
        match self.0 {
            1 => Some(&[1]),
            5 => Some(&[3]),
            6 => Some(&[4]),
            7 => Some(&[3]),
            8 => Some(&[2]),
            15 => Some(&[3, 5]),
            16 => Some(&[2, 4, 6]),
            9 | 17 | 35 | 53 => Some(&[1]),
            _ => None,
        }
    }

    /// Lowest valence used to decide whether an aromatic atom takes part in
    /// a ring double bond. Covers the bracket-only aromatic elements too.
    pub(crate) fn primary_valence(self) -> Option<u8> {
        match self.0 {
            33 => Some(3),
            34 | 52 => Some(2),
            _ => self.default_valences().map(|v| v[0]),
        }
    }
}

/// Allowed valences after the formal-charge shift: cations of N, O, S and P
/// gain `+charge`, other cations lose it, and anions lose `|charge|`
/// (except boron, which gains it, as in BH4-).
pub fn allowed_valences(element: Element, charge: i8) -> Option<Vec<u8>> {
    let base = element.default_valences()?;
    let shift: i32 = match charge {
        0 => 0,
        q if q > 0 => {
            if matches!(element.0, 7 | 8 | 15 | 16) {
                q as i32
            } else {
                -(q as i32)
            }
        }
        q => {
            if element == Element::B {
                -(q as i32)
            } else {
                q as i32
            }
        }
    };
    let shifted: Vec<u8> = base
        .iter()
        .map(|&v| v as i32 + shift)
        .filter(|&v| v >= 0)
        .map(|v| v as u8)
        .collect();
    Some(if shifted.is_empty() { vec![0] } else { shifted })
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
