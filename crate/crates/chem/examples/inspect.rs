//! Reads SMILES from stdin and prints validity, canonical form and logP,
//! tab-separated.

use std::io::{self, BufRead, Write};

use molgan_chem::{canonicalize, crippen_logp, parse_and_check, parse_smiles};

fn main() {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for line in io::stdin().lock().lines() {
        let line = line.unwrap();
        let s = line.trim();
        match parse_and_check(s) {
            Ok((g, _)) => {
                writeln!(out, "{s}\tvalid\t{}\t{:.6}", canonicalize(&g), crippen_logp(&g).value).unwrap();
            }
            Err(e) => {
                let canon = parse_smiles(s).map(|g| canonicalize(&g)).unwrap_or_default();
                writeln!(out, "{s}\tinvalid\t{canon}\t{e}").unwrap();
            }
        }
    }
}
