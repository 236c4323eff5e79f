//! Path fingerprints: every simple path of up to [`MAX_PATH_BONDS`] bonds is
//! hashed into a 2048-bit vector.

use std::fmt;

use crate::graph::MolGraph;
use crate::valence::Perception;

pub const FINGERPRINT_BITS: usize = 2048;
pub const MAX_PATH_BONDS: usize = 7;
const WORDS: usize = FINGERPRINT_BITS / 64;

/// Fixed-width bitset. Bit 0 is the most significant bit of the first word,
/// so the hex form reads bit 0 first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: [u64; WORDS],
}

impl Default for Fingerprint {
    fn default() -> Self {
        Fingerprint { words: [0; WORDS] }
    }
}

impl Fingerprint {
    pub fn from_bits(indices: impl IntoIterator<Item = usize>) -> Fingerprint {
        let mut fp = Fingerprint::default();
        for i in indices {
            fp.set(i);
        }
        fp
    }

    pub fn set(&mut self, bit: usize) {
        assert!(bit < FINGERPRINT_BITS, "bit {bit} out of range");
        self.words[bit / 64] |= 1u64 << (63 - bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] & (1u64 << (63 - bit % 64)) != 0
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// 512 lowercase hex characters.
    pub fn to_hex(&self) -> String {
        self.words.iter().map(|w| format!("{w:016x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<Fingerprint> {
        if s.len() != FINGERPRINT_BITS / 4 || !s.is_ascii() {
            return None;
        }
        let mut words = [0u64; WORDS];
        for (i, w) in words.iter_mut().enumerate() {
            *w = u64::from_str_radix(&s[i * 16..(i + 1) * 16], 16).ok()?;
        }
        Some(Fingerprint { words })
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({} bits set)", self.count_ones())
    }
}

/// |a ∧ b| / |a ∨ b|, defined as 1 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Hashes every linear path of 0..=7 bonds. A path key is the sequence of
/// (element, aromatic) atom labels interleaved with bond orders, taken in
/// whichever direction sorts first.
pub fn fingerprint(g: &MolGraph) -> Fingerprint {
    let p = Perception::new(g);
    let labels: Vec<u16> = g
        .atoms()
        .iter()
        .map(|a| (a.element.atomic_number() as u16) << 1 | a.aromatic as u16)
        .collect();
    let mut fp = Fingerprint::default();
    let mut on_path = vec![false; g.atom_count()];
    let mut key = Vec::with_capacity(2 * MAX_PATH_BONDS + 1);
    for start in 0..g.atom_count() {
        on_path[start] = true;
        key.push(labels[start]);
        extend(g, &p, &labels, start, &mut on_path, &mut key, &mut fp);
        key.pop();
        on_path[start] = false;
    }
    fp
}

fn extend(
    g: &MolGraph,
    p: &Perception,
    labels: &[u16],
    tip: usize,
    on_path: &mut [bool],
    key: &mut Vec<u16>,
    fp: &mut Fingerprint,
) {
    fp.set(path_bit(key));
    if key.len() / 2 == MAX_PATH_BONDS {
        return;
    }
    for &(n, b) in g.neighbors(tip) {
        if on_path[n] {
            continue;
        }
        on_path[n] = true;
        key.push(1000 + p.bond_orders[b].code() as u16);
        key.push(labels[n]);
        extend(g, p, labels, n, on_path, key, fp);
        key.pop();
        key.pop();
        on_path[n] = false;
    }
}

fn path_bit(key: &[u16]) -> usize {
    let forward_first = key.iter().le(key.iter().rev());
    // FNV-1a, 64-bit.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u16| {
        for byte in x.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    if forward_first {
        key.iter().for_each(|&x| feed(x));
    } else {
        key.iter().rev().for_each(|&x| feed(x));
    }
    (h % FINGERPRINT_BITS as u64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_smiles;

    fn fp(s: &str) -> Fingerprint {
        fingerprint(&parse_smiles(s).unwrap())
    }

    #[test]
    fn tanimoto_small_cases() {
        let a = Fingerprint::from_bits([0, 1]);
        let b = Fingerprint::from_bits([0, 2]);
        assert_eq!(tanimoto(&a, &b), 1.0 / 3.0);
        assert_eq!(tanimoto(&a, &a), 1.0);
        assert_eq!(tanimoto(&Fingerprint::from_bits([5]), &Fingerprint::from_bits([6])), 0.0);
        assert_eq!(tanimoto(&Fingerprint::default(), &Fingerprint::default()), 1.0);
    }

    #[test]
    fn deterministic_and_discriminating() {
        assert_eq!(fp("CCO"), fp("CCO"));
        assert_ne!(fp("C"), fp("CC"));
        assert_eq!(fp("CCO"), fp("OCC"));
    }

    #[test]
    fn hex_layout() {
        let f = Fingerprint::from_bits([0, 2047]);
        let h = f.to_hex();
        assert_eq!(h.len(), 512);
        assert!(h.starts_with('8'));
        assert!(h.ends_with('1'));
        assert_eq!(Fingerprint::from_hex(&h), Some(f));
        assert_eq!(Fingerprint::from_hex("zz"), None);
    }
}
