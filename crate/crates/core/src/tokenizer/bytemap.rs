//! Reversible byte ↔ printable-char mapping for readable vocabulary files
//! (the same table byte-level BPE vocabularies conventionally use, where a
//! space shows up as `Ġ`).

use alloc::string::String;
use alloc::vec::Vec;

fn table() -> [char; 256] {
    let mut out = ['\0'; 256];
    let mut extra = 0u32;
    for b in 0..=255u8 {
        let printable = (b'!'..=b'~').contains(&b) || (0xA1..=0xAC).contains(&b) || (0xAE..=0xFF).contains(&b);
        out[b as usize] = if printable {
            char::from(b)
        } else {
            let c = char::from_u32(256 + extra).unwrap();
            extra += 1;
            c
        };
    }
    out
}

pub fn bytes_to_display(bytes: &[u8]) -> String {
    let t = table();
    bytes.iter().map(|&b| t[b as usize]).collect()
}

pub fn display_to_bytes(s: &str) -> Option<Vec<u8>> {
    let t = table();
    s.chars().map(|c| t.iter().position(|&x| x == c).map(|p| p as u8)).collect()
}
