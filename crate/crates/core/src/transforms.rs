//! Protocol-to-protocol constructions on the quantum model.

use std::collections::HashMap;

use crate::classical::{pad_messages, radix_index, ClassicalProtocol, OutputRule, Rule};
use crate::error::{arg, contract, Result};
use crate::library::copy_map;
use crate::linalg::{kron, ComplexMatrix, C64};
use crate::protocol::{error_of, Entanglement, Isometry, Party, QuantumProtocol, Round};
use crate::registers::{RegisterLabel, RegisterSystem};
use crate::state::{PureState, REG_X, REG_Y};

/// Name of the working copy each party makes of its input in the safe version.
pub const X_COPY: &str = "X'";
pub const Y_COPY: &str = "Y'";
/// Fresh output register written by the clean and phase constructions.
pub const CLEAN_OUT: &str = "BOUT'";

const ZERO_ERROR_TOL: f64 = 1e-10;

/// Both parties first copy their inputs and then run the protocol on the copies,
/// so X and Y are only ever used as controls.
/// Already-used copy names get further primes appended.
pub fn safe_version(p: &QuantumProtocol) -> Result<QuantumProtocol> {
    let used: Vec<&str> = p
        .rounds
        .iter()
        .flat_map(|r| r.isometry.inputs.iter().chain(&r.isometry.outputs))
        .chain(p.entanglement.alice.iter().chain(&p.entanglement.bob))
        .map(|l| l.name.as_str())
        .collect();
    let fresh = |base: &str| {
        let mut name = base.to_string();
        while used.contains(&name.as_str()) {
            name.push('\'');
        }
        name
    };
    let (x_copy, y_copy) = (fresh(X_COPY), fresh(Y_COPY));
    let rename: HashMap<String, String> = [(REG_X.to_string(), x_copy.clone()), (REG_Y.to_string(), y_copy.clone())]
        .into_iter()
        .collect();
    let mut out = p.clone();
    for r in out.rounds.iter_mut() {
        r.isometry = r.isometry.renamed(&rename);
        r.controls = r
            .controls
            .iter()
            .map(|c| rename.get(c).cloned().unwrap_or_else(|| c.clone()))
            .collect();
        if let Some(m) = &r.message {
            r.message = Some(rename.get(m).cloned().unwrap_or_else(|| m.clone()));
        }
    }
    let rn = |v: &mut Vec<String>| {
        for n in v.iter_mut() {
            if let Some(r) = rename.get(n) {
                *n = r.clone();
            }
        }
    };
    rn(&mut out.alice_output);
    rn(&mut out.bob_output);
    for (party, input, copy_name, dim) in [
        (Party::Alice, REG_X, x_copy.as_str(), p.x_dim),
        (Party::Bob, REG_Y, y_copy.as_str(), p.y_dim),
    ] {
        if let Some(k) = out.rounds.iter().position(|r| r.owner == party) {
            let r = &mut out.rounds[k];
            let copy = copy_map(input, input, copy_name, dim)?;
            r.isometry = copy.then(&r.isometry)?;
            if r.adjoint {
                return contract("safe_version expects forward rounds only");
            }
            r.controls.retain(|c| c != copy_name);
            r.controls.push(input.to_string());
        }
    }
    Ok(out)
}

fn with_identity(iso: &Isometry, label: &RegisterLabel) -> Result<Isometry> {
    let mut inputs = iso.inputs.clone();
    inputs.push(label.clone());
    let mut outputs = iso.outputs.clone();
    outputs.push(label.clone());
    Isometry::new(inputs, outputs, kron(&iso.matrix, &ComplexMatrix::identity(label.dim))?)
}

/// Backward rounds mirroring `p`'s rounds in reverse order. The backward step of round k is run by
/// the same party with the adjoint map and hands back the message that party received before round k.
fn backward_rounds(p: &QuantumProtocol) -> Result<Vec<Round>> {
    let mut out = Vec::new();
    if let Some(last) = p.rounds.last() {
        if let Some(m) = &last.message {
            let label = last
                .isometry
                .outputs
                .iter()
                .find(|l| &l.name == m)
                .expect("validated")
                .clone();
            out.push(Round {
                owner: last.owner.other(),
                isometry: Isometry::identity(vec![label])?,
                message: Some(m.clone()),
                controls: Vec::new(),
                adjoint: false,
            });
        }
    }
    for k in (0..p.rounds.len()).rev() {
        let r = &p.rounds[k];
        let incoming = if k > 0 && p.rounds[k - 1].owner != r.owner {
            p.rounds[k - 1].message.as_ref().map(|m| {
                p.rounds[k - 1]
                    .isometry
                    .outputs
                    .iter()
                    .find(|l| &l.name == m)
                    .expect("validated")
                    .clone()
            })
        } else {
            None
        };
        let mut iso = r.isometry.adjoint();
        if let Some(l) = &incoming {
            if !iso.outputs.iter().any(|o| o.name == l.name) {
                iso = with_identity(&iso, l)?;
            }
        }
        let message = incoming.map(|l| l.name);
        out.push(Round {
            owner: r.owner,
            isometry: iso,
            controls: r.controls.iter().filter(|c| Some(*c) != message.as_ref()).cloned().collect(),
            message,
            adjoint: true,
        });
    }
    Ok(out)
}

/// Runs `p` forward keeping every register, then backward with no copies.
pub fn reverse_composition(p: &QuantumProtocol) -> Result<QuantumProtocol> {
    if !p.is_safe() {
        return contract("reverse composition expects a safe protocol");
    }
    let mut out = p.clone();
    out.rounds.extend(backward_rounds(p)?);
    out.alice_output.clear();
    out.bob_output.clear();
    out.custom_order = true;
    Ok(out)
}

fn out_middle(p: &QuantumProtocol, phase: bool) -> Result<Round> {
    let [b] = p.bob_output.as_slice() else {
        return arg("the construction needs exactly one output register on Bob's side");
    };
    let dim = p
        .rounds
        .iter()
        .flat_map(|r| r.isometry.outputs.iter())
        .find(|l| &l.name == b)
        .map(|l| l.dim)
        .unwrap_or(0);
    if dim != 2 {
        return arg("Bob's output must be a single qubit");
    }
    let s = 0.5f64.sqrt();
    let iso = Isometry::from_fn(
        vec![RegisterLabel::new(b.clone(), 2)],
        vec![RegisterLabel::new(b.clone(), 2), RegisterLabel::new(CLEAN_OUT, 2)],
        |d| {
            if phase {
                let sgn = if d[0] == 1 { -1.0 } else { 1.0 };
                vec![
                    (vec![d[0], 0], C64::new(sgn * s, 0.0)),
                    (vec![d[0], 1], C64::new(-sgn * s, 0.0)),
                ]
            } else {
                vec![(vec![d[0], d[0]], C64::new(1.0, 0.0))]
            }
        },
    )?;
    Ok(Round::new(Party::Bob, iso, None).with_controls(&[b]))
}

fn uncompute(p: &QuantumProtocol, f: &[usize], phase: bool) -> Result<QuantumProtocol> {
    let err = error_of(p, f, &crate::state::InputDistribution::uniform(p.x_dim, p.y_dim), true)?;
    if err > ZERO_ERROR_TOL {
        return contract(format!("protocol is not zero-error (worst-case error {err:.3e})"));
    }
    let mut out = p.clone();
    out.rounds.push(out_middle(p, phase)?);
    out.rounds.extend(backward_rounds(p)?);
    out.alice_output.clear();
    out.bob_output = if phase { Vec::new() } else { vec![CLEAN_OUT.to_string()] };
    out.custom_order = true;
    Ok(out)
}

/// Forward run, copy of Bob's output bit into a fresh |0⟩ register, backward run.
pub fn clean_protocol(p: &QuantumProtocol, f: &[usize]) -> Result<QuantumProtocol> {
    uncompute(p, f, false)
}

/// As [`clean_protocol`] with a |−⟩ target, leaving the value in the phase (−1)^f.
pub fn phase_protocol(p: &QuantumProtocol, f: &[usize]) -> Result<QuantumProtocol> {
    uncompute(p, f, true)
}

/// Register names used by [`quantize_classical`].
pub const QUANT_ALICE_OUT: &str = "AOUT";
pub const QUANT_BOB_OUT: &str = "BOUT";

fn coin_register(p: Party, j: usize) -> String {
    match p {
        Party::Alice => format!("SA{}", j + 1),
        Party::Bob => format!("SB{}", j + 1),
    }
}

fn coin_purifier(p: Party, j: usize) -> String {
    match p {
        Party::Alice => format!("PA{}", j + 1),
        Party::Bob => format!("PB{}", j + 1),
    }
}

fn public_register(p: Party) -> &'static str {
    match p {
        Party::Alice => "RA",
        Party::Bob => "RB",
    }
}

/// Pairs of registers (a, b) sharing Σ_v √p(v) |v⟩|v⟩, assembled into one state over `alice ++ bob`.
fn paired_state(alice: &[RegisterLabel], bob: &[RegisterLabel], pairs: &[(usize, usize, &[f64])]) -> Result<PureState> {
    let mut labels = alice.to_vec();
    labels.extend(bob.iter().cloned());
    let sys = RegisterSystem::new(labels)?;
    let mut entries: Vec<(Vec<usize>, f64)> = vec![(vec![0; sys.len()], 1.0)];
    for &(a, b, law) in pairs {
        let mut next = Vec::with_capacity(entries.len() * law.len());
        for (d, p) in &entries {
            for (v, &q) in law.iter().enumerate().filter(|(_, &q)| q > 0.0) {
                let mut d2 = d.clone();
                d2[a] = v;
                d2[b] = v;
                next.push((d2, p * q));
            }
        }
        entries = next;
    }
    let entries = entries
        .into_iter()
        .map(|(d, p)| (sys.index_of(&d), C64::new(p.sqrt(), 0.0)))
        .collect();
    PureState::from_entries(sys, entries)
}

/// Quantum protocol with the same transcript law: every message is written into a fresh register
/// with a kept copy, coins are purified and held by their owner, and the public coin is a shared
/// maximally correlated state. Protocols whose speaker depends on the transcript are padded first.
pub fn quantize_classical(pi: &ClassicalProtocol) -> Result<QuantumProtocol> {
    let pi = pad_messages(pi)?;
    let n = pi.rounds.len();
    let speaker = |k: usize| if k.is_multiple_of(2) { Party::Alice } else { Party::Bob };
    let public = pi.public_coin.len() > 1;

    let mut regs: [Vec<RegisterLabel>; 2] = [Vec::new(), Vec::new()];
    let mut pairs: Vec<(usize, usize, &[f64])> = Vec::new();
    if public {
        regs[0].push(RegisterLabel::new(public_register(Party::Alice), pi.public_coin.len()));
        regs[1].push(RegisterLabel::new(public_register(Party::Bob), pi.public_coin.len()));
    }
    for (s, p) in [Party::Alice, Party::Bob].into_iter().enumerate() {
        for (j, law) in pi.coins(p).iter().enumerate() {
            regs[s].push(RegisterLabel::new(coin_register(p, j), law.len()));
            regs[s].push(RegisterLabel::new(coin_purifier(p, j), law.len()));
        }
    }
    let na = regs[0].len();
    if public {
        pairs.push((0, na, &pi.public_coin));
    }
    for (s, p) in [Party::Alice, Party::Bob].into_iter().enumerate() {
        let base = if s == 0 { 0 } else { na };
        let offset = base + usize::from(public);
        for (j, law) in pi.coins(p).iter().enumerate() {
            pairs.push((offset + 2 * j, offset + 2 * j + 1, law));
        }
    }
    let mut out = QuantumProtocol::empty(pi.x_dim, pi.y_dim);
    if !regs[0].is_empty() || !regs[1].is_empty() {
        let state = paired_state(&regs[0], &regs[1], &pairs)?;
        out.entanglement = Entanglement::new(regs[0].clone(), regs[1].clone(), state)?;
    }

    let history_reg = |p: Party, i: usize| {
        if speaker(i) == p {
            format!("K{}", i + 1)
        } else {
            format!("M{}", i + 1)
        }
    };
    // Registers read by a map of `p` after `k` messages that uses coin components `coins`.
    let reads = |p: Party, coins: &[usize], k: usize| -> Vec<RegisterLabel> {
        let mut v = vec![RegisterLabel::new(p.input_register(), pi.input_dim(p))];
        v.extend(
            coins
                .iter()
                .map(|&j| RegisterLabel::new(coin_register(p, j), pi.coins(p)[j].len())),
        );
        if public {
            v.push(RegisterLabel::new(public_register(p), pi.public_coin.len()));
        }
        v.extend((0..k).map(|i| RegisterLabel::new(history_reg(p, i), pi.rounds[i].alphabet)));
        v
    };
    // Evaluates `rule` on digits laid out as by `reads(p, coins, k)`, with `extra` appended to the history.
    let lookup = |p: Party, rule: &Rule, coins: &[usize], d: &[usize], extra: &[usize]| -> usize {
        let nc = coins.len();
        let mut digits = vec![d[0]];
        digits.extend(
            rule.coins
                .iter()
                .map(|c| d[1 + coins.iter().position(|x| x == c).expect("coin read")]),
        );
        digits.push(if public { d[1 + nc] } else { 0 });
        digits.extend_from_slice(&d[1 + nc + usize::from(public)..]);
        digits.extend_from_slice(extra);
        let h = digits.len() - 2 - rule.coins.len();
        rule.table[radix_index(&digits, &pi.rule_dims(p, &rule.coins, h))]
    };
    let output = |p: Party| -> Option<(&OutputRule, &'static str)> {
        match p {
            Party::Alice => pi.alice_output.as_ref().map(|o| (o, QUANT_ALICE_OUT)),
            Party::Bob => pi.bob_output.as_ref().map(|o| (o, QUANT_BOB_OUT)),
        }
    };

    for k in 0..n {
        let p = speaker(k);
        let rule = pi.rounds[k].rule(p).expect("padded rounds have a rule for their speaker");
        let fin = if k + 1 == n { output(p) } else { None };
        let mut coins = rule.coins.clone();
        if let Some((o, _)) = fin {
            coins.extend(o.rule.coins.iter().copied());
        }
        coins.sort_unstable();
        coins.dedup();
        let inputs = reads(p, &coins, k);
        let mut outputs = inputs.clone();
        let alphabet = pi.rounds[k].alphabet;
        let (m, keep) = (format!("M{}", k + 1), format!("K{}", k + 1));
        outputs.push(RegisterLabel::new(&m, alphabet));
        outputs.push(RegisterLabel::new(&keep, alphabet));
        if let Some((o, name)) = fin {
            outputs.push(RegisterLabel::new(name, o.alphabet));
        }
        let iso = Isometry::classical(inputs.clone(), outputs, |d| {
            let v = lookup(p, rule, &coins, d, &[]);
            let mut o = d.to_vec();
            o.extend([v, v]);
            if let Some((orule, _)) = fin {
                o.push(lookup(p, &orule.rule, &coins, d, &[v]));
            }
            o
        })?;
        let controls: Vec<&str> = inputs.iter().map(|l| l.name.as_str()).collect();
        out.rounds.push(Round::new(p, iso, Some(&m)).with_controls(&controls));
    }
    let trailing: Vec<Party> = if n == 0 {
        [Party::Alice, Party::Bob]
            .into_iter()
            .filter(|&p| output(p).is_some())
            .collect()
    } else {
        let next = speaker(n);
        output(next).map(|_| next).into_iter().collect()
    };
    if n == 0 && trailing.first() == Some(&Party::Bob) || trailing.len() > 1 {
        out.custom_order = true;
    }
    for p in trailing {
        let (o, name) = output(p).expect("filtered");
        let inputs = reads(p, &o.rule.coins, n);
        let mut outputs = inputs.clone();
        outputs.push(RegisterLabel::new(name, o.alphabet));
        let iso = Isometry::classical(inputs.clone(), outputs, |d| {
            let mut v = d.to_vec();
            v.push(lookup(p, &o.rule, &o.rule.coins, d, &[]));
            v
        })?;
        let controls: Vec<&str> = inputs.iter().map(|l| l.name.as_str()).collect();
        out.rounds.push(Round::new(p, iso, None).with_controls(&controls));
    }
    if pi.alice_output.is_some() {
        out.alice_output = vec![QUANT_ALICE_OUT.into()];
    }
    if pi.bob_output.is_some() {
        out.bob_output = vec![QUANT_BOB_OUT.into()];
    }
    Ok(out)
}
