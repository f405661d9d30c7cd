//! Small hand-built protocols used as fixtures and reference points.

use crate::error::Result;
use crate::linalg::C64;
use crate::protocol::{Isometry, Party, QuantumProtocol, Round};
use crate::registers::RegisterLabel;
use crate::state::{REG_X, REG_Y};

fn reg(name: &str, dim: usize) -> RegisterLabel {
    RegisterLabel::new(name, dim)
}

/// Relabels one register as another of the same dimension.
pub fn relabel(from: &str, to: &str, dim: usize) -> Result<Isometry> {
    Isometry::classical(vec![reg(from, dim)], vec![reg(to, dim)], |d| d.to_vec())
}

/// |v⟩ ↦ |v⟩|v⟩ from `from` into (`keep`, `copy`).
pub fn copy_map(from: &str, keep: &str, copy: &str, dim: usize) -> Result<Isometry> {
    Isometry::classical(vec![reg(from, dim)], vec![reg(keep, dim), reg(copy, dim)], |d| {
        vec![d[0], d[0]]
    })
}

/// Alice hands her input register over as the single message.
pub fn send_input(dim: usize) -> Result<QuantumProtocol> {
    let mut p = QuantumProtocol::empty(dim, dim);
    p.rounds
        .push(Round::new(Party::Alice, relabel(REG_X, "C1", dim)?, Some("C1")));
    p.bob_output = vec!["C1".into()];
    Ok(p)
}

/// Alice sends a computational-basis copy of her input and keeps the original.
pub fn send_copy(dim: usize) -> Result<QuantumProtocol> {
    let mut p = QuantumProtocol::empty(dim, dim);
    p.rounds
        .push(Round::new(Party::Alice, copy_map(REG_X, REG_X, "C1", dim)?, Some("C1")).with_controls(&[REG_X]));
    p.bob_output = vec!["C1".into()];
    Ok(p)
}

/// Alice sends her input; Bob returns it without keeping anything.
pub fn bounce_uncopied(dim: usize) -> Result<QuantumProtocol> {
    let mut p = QuantumProtocol::empty(dim, dim);
    p.rounds
        .push(Round::new(Party::Alice, relabel(REG_X, "C1", dim)?, Some("C1")));
    p.rounds.push(Round::new(Party::Bob, relabel("C1", "C2", dim)?, Some("C2")));
    Ok(p)
}

/// Alice sends her input; then, `trips` times, Bob copies what he holds into a fresh register and
/// returns it, with Alice relaying it straight back between trips. Uses `2·trips` messages.
pub fn bounce_family(dim: usize, trips: usize) -> Result<QuantumProtocol> {
    let mut p = QuantumProtocol::empty(dim, dim);
    p.rounds
        .push(Round::new(Party::Alice, relabel(REG_X, "C1", dim)?, Some("C1")));
    let mut last = "C1".to_string();
    for j in 1..=trips {
        let (cb, keep) = (format!("C{}", 2 * j), format!("K{j}"));
        p.rounds
            .push(Round::new(Party::Bob, copy_map(&last, &keep, &cb, dim)?, Some(&cb)));
        last = cb;
        if j < trips {
            let ca = format!("C{}", 2 * j + 1);
            p.rounds.push(Round::new(Party::Alice, relabel(&last, &ca, dim)?, Some(&ca)));
            last = ca;
        }
    }
    Ok(p)
}

/// Deterministic one-message protocol: Alice sends a copy of x, Bob writes `f(x, y)` into `BOUT`.
/// `f` is indexed `x * |Y| + y` with values below `out_dim`.
pub fn send_x_compute(x_dim: usize, y_dim: usize, f: &[usize], out_dim: usize) -> Result<QuantumProtocol> {
    let mut p = QuantumProtocol::empty(x_dim, y_dim);
    p.rounds
        .push(Round::new(Party::Alice, copy_map(REG_X, REG_X, "C1", x_dim)?, Some("C1")).with_controls(&[REG_X]));
    let table = f.to_vec();
    let compute = Isometry::classical(
        vec![reg(REG_Y, y_dim), reg("C1", x_dim)],
        vec![reg(REG_Y, y_dim), reg("C1", x_dim), reg("BOUT", out_dim)],
        move |d| vec![d[0], d[1], table[d[1] * y_dim + d[0]]],
    )?;
    p.rounds
        .push(Round::new(Party::Bob, compute, None).with_controls(&[REG_Y, "C1"]));
    p.bob_output = vec!["BOUT".into()];
    Ok(p)
}

/// Inner product modulo 2 of two n-bit strings.
pub fn inner_product_table(n: usize) -> Vec<usize> {
    let d = 1usize << n;
    (0..d * d).map(|i| ((i / d) & (i % d)).count_ones() as usize % 2).collect()
}

/// Entrywise phase (−1)^bit as a complex number.
pub fn sign(bit: usize) -> C64 {
    if bit.is_multiple_of(2) {
        C64::new(1.0, 0.0)
    } else {
        C64::new(-1.0, 0.0)
    }
}
