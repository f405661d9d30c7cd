//! Bookkeeping of information flow in two-way interactive processes.
//!
//! In an interactive process both parties act in every round: Alice maps her memory and the
//! register she last received to new memory and an outgoing register, Bob does the same, and the
//! two outgoing registers swap hands. Two extension registers E and F are never acted on. The net
//! change in Bob's correlation with E (seen from F) equals the signed sum over rounds of what
//! arrives from Alice minus what leaves towards her; [`flow_lemma_residual`] measures how far a
//! simulated process is from that identity.

use rand::Rng;

use crate::error::{arg, contract, Result};
use crate::protocol::{Isometry, Party, ProtocolTrace};
use crate::random::{random_isometry, random_pure_state};
use crate::registers::{RegisterLabel, RegisterSystem};
use crate::state::{cqmi_named, PureState};

/// One simultaneous round. The final round of a process sends nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessRound {
    pub alice: Isometry,
    pub bob: Isometry,
    /// Register Alice hands to Bob after this round.
    pub alice_message: Option<String>,
    /// Register Bob hands to Alice after this round.
    pub bob_message: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractiveProcess {
    /// Joint initial state on Alice's, Bob's and the extension registers.
    pub initial: PureState,
    pub alice: Vec<String>,
    pub bob: Vec<String>,
    pub rounds: Vec<ProcessRound>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    /// I(E; B_final | F) − I(E; B_0 | F).
    pub lhs: f64,
    /// Σ_i I(E; C_i | F B_i) − I(E; D_i | F B_i).
    pub rhs: f64,
    /// Per-round (incoming, outgoing) terms from Bob's point of view.
    pub terms: Vec<(f64, f64)>,
}

impl FlowReport {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

fn check_local(iso: &Isometry, held: &[String], e: &[String], f: &[String], who: &str, k: usize) -> Result<()> {
    for l in &iso.inputs {
        if e.contains(&l.name) || f.contains(&l.name) {
            return contract(format!("round {k}: {who} acts on extension register {}", l.name));
        }
        if !held.contains(&l.name) {
            return arg(format!("round {k}: {who} does not hold register {}", l.name));
        }
    }
    Ok(())
}

fn apply(state: &PureState, iso: &Isometry, held: &mut Vec<String>) -> Result<PureState> {
    held.retain(|h| !iso.inputs.iter().any(|l| &l.name == h));
    held.extend(iso.outputs.iter().map(|l| l.name.clone()));
    state.apply_map(&iso.inputs, &iso.outputs, &iso.matrix)
}

/// Evaluates both sides of the flow identity for Bob's memory against extension `e` given `f`.
pub fn flow_lemma_residual(process: &InteractiveProcess, e: &[String], f: &[String]) -> Result<FlowReport> {
    let sys = process.initial.system();
    for n in e.iter().chain(f) {
        if !sys.contains(n) {
            return arg(format!("unknown extension register {n}"));
        }
        if process.alice.contains(n) || process.bob.contains(n) {
            return contract(format!("extension register {n} is held by a party"));
        }
    }
    let mut alice = process.alice.clone();
    let mut bob = process.bob.clone();
    let before = cqmi_named(&process.initial, e, &bob, f)?;
    let mut state = process.initial.clone();
    let mut terms = Vec::with_capacity(process.rounds.len());
    let last = process.rounds.len();
    for (k, r) in process.rounds.iter().enumerate() {
        let k = k + 1;
        check_local(&r.alice, &alice, e, f, "Alice", k)?;
        check_local(&r.bob, &bob, e, f, "Bob", k)?;
        state = apply(&state, &r.alice, &mut alice)?;
        state = apply(&state, &r.bob, &mut bob)?;
        if k == last && (r.alice_message.is_some() || r.bob_message.is_some()) {
            return arg("the final round cannot send messages");
        }
        let memory: Vec<String> = bob.iter().filter(|b| Some(*b) != r.bob_message.as_ref()).cloned().collect();
        let mut cond = f.to_vec();
        cond.extend(memory.iter().cloned());
        let term = |m: &Option<String>, owner: &[String]| -> Result<f64> {
            match m {
                Some(m) if owner.contains(m) => cqmi_named(&state, e, std::slice::from_ref(m), &cond),
                Some(m) => arg(format!("round {k}: message {m} is not held by its sender")),
                None => Ok(0.0),
            }
        };
        let incoming = term(&r.alice_message, &alice)?;
        let outgoing = term(&r.bob_message, &bob)?;
        terms.push((incoming, outgoing));
        if let Some(m) = &r.alice_message {
            alice.retain(|h| h != m);
            bob.push(m.clone());
        }
        if let Some(m) = &r.bob_message {
            bob.retain(|h| h != m);
            alice.push(m.clone());
        }
    }
    let after = cqmi_named(&state, e, &bob, f)?;
    Ok(FlowReport {
        lhs: after - before,
        rhs: terms.iter().map(|(a, b)| a - b).sum(),
        terms,
    })
}

/// Random process with `rounds` communicating rounds plus a final local round. Every register has
/// dimension at most 2; message registers are trivial (dimension 1) with probability 1/4.
pub fn random_process<R: Rng + ?Sized>(rounds: usize, rng: &mut R) -> Result<InteractiveProcess> {
    let labels = ["A0", "B0", "E", "F"].iter().map(|n| RegisterLabel::new(*n, 2)).collect();
    let initial = random_pure_state(RegisterSystem::new(labels)?, rng)?;
    let mut alice = vec![RegisterLabel::new("A0", 2)];
    let mut bob = vec![RegisterLabel::new("B0", 2)];
    let mut out = Vec::with_capacity(rounds + 1);
    for k in 1..=rounds + 1 {
        let step = |held: &mut Vec<RegisterLabel>, name: String, rng: &mut R| -> Result<(Isometry, Option<RegisterLabel>)> {
            let mut outputs = held.clone();
            let msg = (k <= rounds).then(|| RegisterLabel::new(name, if rng.gen_bool(0.25) { 1 } else { 2 }));
            outputs.extend(msg.iter().cloned());
            Ok((random_isometry(held.clone(), outputs, rng)?, msg))
        };
        let (u, c) = step(&mut alice, format!("C{k}"), rng)?;
        let (v, d) = step(&mut bob, format!("D{k}"), rng)?;
        alice.extend(d.iter().cloned());
        bob.extend(c.iter().cloned());
        out.push(ProcessRound {
            alice: u,
            bob: v,
            alice_message: c.map(|l| l.name),
            bob_message: d.map(|l| l.name),
        });
    }
    Ok(InteractiveProcess {
        initial,
        alice: vec!["A0".into()],
        bob: vec!["B0".into()],
        rounds: out,
    })
}

/// The flow identity specialised to a protocol run: for `party`'s side,
/// I(E1; final registers | E2) − I(E1; initial registers | E2) against the signed message terms.
pub fn protocol_flow_report(trace: &ProtocolTrace, e1: &[String], e2: &[String], party: Party) -> Result<FlowReport> {
    let strip =
        |regs: &[String]| -> Vec<String> { regs.iter().filter(|r| !e1.contains(r) && !e2.contains(r)).cloned().collect() };
    let before = cqmi_named(&trace.initial, e1, &strip(trace.initial_holdings.of(party)), e2)?;
    let after = cqmi_named(trace.final_state(), e1, &strip(trace.final_holdings().of(party)), e2)?;
    let mut terms = Vec::new();
    for s in trace.message_steps() {
        let m = vec![s.flow.message.clone().expect("message step")];
        let (regs, incoming) = if s.flow.owner == party {
            (&s.flow.sender_after, false)
        } else {
            (&s.flow.receiver_before, true)
        };
        let mut cond = e2.to_vec();
        cond.extend(strip(regs));
        let v = cqmi_named(&s.state, e1, &m, &cond)?;
        terms.push(if incoming { (v, 0.0) } else { (0.0, v) });
    }
    Ok(FlowReport {
        lhs: after - before,
        rhs: terms.iter().map(|(a, b)| a - b).sum(),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_processes_satisfy_the_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for rounds in 0..=3 {
            let p = random_process(rounds, &mut rng).unwrap();
            let r = flow_lemma_residual(&p, &["E".into()], &["F".into()]).unwrap();
            assert!(r.residual() < 1e-8, "rounds={rounds} residual={}", r.residual());
        }
    }

    #[test]
    fn acting_on_the_extension_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = random_process(1, &mut rng).unwrap();
        p.alice.push("E".into());
        assert!(flow_lemma_residual(&p, &["E".into()], &["F".into()]).is_err());
    }
}
