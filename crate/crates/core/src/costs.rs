//! Information-cost functionals evaluated on protocol traces.

use crate::error::{arg, contract, Result};
use crate::protocol::{run_trace, Party, ProtocolTrace, QuantumProtocol, TraceStep};
use crate::registers::RegisterLabel;
use crate::state::{cqmi_named, InputDistribution, PureState, REG_RX, REG_RY, REG_X, REG_Y};

/// Tolerance for declaring a reverse cost zero.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTerm {
    pub round: usize,
    pub sender: Party,
    pub value: f64,
}

/// A cost split by direction: `a_to_b` collects Alice's contributions, `b_to_a` Bob's.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DirectionalCost {
    pub a_to_b: f64,
    pub b_to_a: f64,
    pub terms: Vec<RoundTerm>,
}

impl DirectionalCost {
    pub fn total(&self) -> f64 {
        self.a_to_b + self.b_to_a
    }

    fn push(&mut self, round: usize, sender: Party, value: f64, into_a_to_b: bool) {
        if into_a_to_b {
            self.a_to_b += value;
        } else {
            self.b_to_a += value;
        }
        self.terms.push(RoundTerm { round, sender, value });
    }
}

/// Reverse costs: `a_from_b` sums Bob's messages, `b_from_a` Alice's.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReverseCost {
    pub a_from_b: f64,
    pub b_from_a: f64,
    pub terms: Vec<RoundTerm>,
}

impl ReverseCost {
    pub fn total(&self) -> f64 {
        self.a_from_b + self.b_from_a
    }
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn union(base: &[String], extra: &[&str]) -> Vec<String> {
    let mut out = base.to_vec();
    for e in extra {
        if !out.iter().any(|o| o == e) {
            out.push(e.to_string());
        }
    }
    out
}

fn without(base: &[String], drop: &[&str]) -> Vec<String> {
    base.iter().filter(|b| !drop.contains(&b.as_str())).cloned().collect()
}

fn message(step: &TraceStep) -> Vec<String> {
    vec![step.flow.message.clone().expect("message step")]
}

/// I(C_i; RX RY | receiver's registers), summed by sender.
pub fn qic(trace: &ProtocolTrace) -> Result<DirectionalCost> {
    let mut out = DirectionalCost::default();
    for s in trace.message_steps() {
        let v = cqmi_named(&s.state, &message(s), &names(&[REG_RX, REG_RY]), &s.flow.receiver_before)?;
        out.push(s.round, s.flow.owner, v, s.flow.owner == Party::Alice);
    }
    Ok(out)
}

fn require_safe(trace: &ProtocolTrace) -> Result<()> {
    if trace.safe {
        Ok(())
    } else {
        contract("this cost is defined for safe protocols; apply safe_version first")
    }
}

/// Alice's messages: I(C_i; X | Y B_i). Bob's: I(C_i; Y | X A_i).
pub fn cic(trace: &ProtocolTrace) -> Result<DirectionalCost> {
    require_safe(trace)?;
    let mut out = DirectionalCost::default();
    for s in trace.message_steps() {
        let p = s.flow.owner;
        let (target, cond) = (p.input_register(), p.other().input_register());
        let c = union(&s.flow.receiver_before, &[cond]);
        let v = cqmi_named(&s.state, &message(s), &names(&[target]), &c)?;
        out.push(s.round, p, v, p == Party::Alice);
    }
    Ok(out)
}

/// Bob's messages: I(C_i; X | Y B_i) with B_i Bob's registers after sending. Alice's: I(C_i; Y | X A_i).
pub fn cric(trace: &ProtocolTrace) -> Result<ReverseCost> {
    require_safe(trace)?;
    let mut out = ReverseCost::default();
    for s in trace.message_steps() {
        let p = s.flow.owner;
        let (target, cond) = (p.other().input_register(), p.input_register());
        let c = union(&s.flow.sender_after, &[cond]);
        let v = cqmi_named(&s.state, &message(s), &names(&[target]), &c)?;
        match p {
            Party::Bob => out.a_from_b += v,
            Party::Alice => out.b_from_a += v,
        }
        out.terms.push(RoundTerm {
            round: s.round,
            sender: p,
            value: v,
        });
    }
    Ok(out)
}

/// HIC_{A→B} = I(X; Bob's final registers | Y) and its mirror.
pub fn hic(trace: &ProtocolTrace) -> Result<DirectionalCost> {
    require_safe(trace)?;
    let st = trace.final_state();
    let h = trace.final_holdings();
    let bob = without(&h.bob, &[REG_Y]);
    let alice = without(&h.alice, &[REG_X]);
    Ok(DirectionalCost {
        a_to_b: cqmi_named(st, &names(&[REG_X]), &bob, &names(&[REG_Y]))?,
        b_to_a: cqmi_named(st, &names(&[REG_Y]), &alice, &names(&[REG_X]))?,
        terms: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoCostReport {
    pub qic: DirectionalCost,
    pub cic: DirectionalCost,
    pub cric: ReverseCost,
    pub hic: DirectionalCost,
}

impl InfoCostReport {
    pub fn compute(trace: &ProtocolTrace) -> Result<Self> {
        Ok(Self {
            qic: qic(trace)?,
            cic: cic(trace)?,
            cric: cric(trace)?,
            hic: hic(trace)?,
        })
    }

    /// max over directions of |HIC − (CIC − CRIC)|.
    pub fn residual_hic(&self) -> f64 {
        let a = self.hic.a_to_b - (self.cic.a_to_b - self.cric.a_from_b);
        let b = self.hic.b_to_a - (self.cic.b_to_a - self.cric.b_from_a);
        a.abs().max(b.abs())
    }

    /// max over directions of |QIC − (CIC + CRIC)|.
    pub fn residual_qic(&self) -> f64 {
        let a = self.qic.a_to_b - (self.cic.a_to_b + self.cric.b_from_a);
        let b = self.qic.b_to_a - (self.cic.b_to_a + self.cric.a_from_b);
        a.abs().max(b.abs())
    }

    /// How far QIC falls outside [CIC, 2·CIC]; zero when inside.
    pub fn sandwich_violation(&self) -> f64 {
        let (q, c) = (self.qic.total(), self.cic.total());
        (c - q).max(q - 2.0 * c).max(0.0)
    }
}

/// Convenience: run and report all four measures.
pub fn cost_report(p: &QuantumProtocol, mu: &InputDistribution) -> Result<InfoCostReport> {
    InfoCostReport::compute(&run_trace(p, mu)?)
}

/// QIC total of a protocol on µ.
pub fn qic_of(p: &QuantumProtocol, mu: &InputDistribution) -> Result<f64> {
    Ok(qic(&run_trace(p, mu)?)?.total())
}

// ---------------------------------------------------------------------------
// Superposed costs

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuperposedCosts {
    pub scic_a_to_b: f64,
    pub scic_b_to_a: f64,
    pub scric_a_from_b: f64,
    pub scric_b_from_a: f64,
    pub shic_a_to_b: f64,
    pub shic_b_to_a: f64,
}

impl SuperposedCosts {
    pub fn scic(&self) -> f64 {
        self.scic_a_to_b + self.scic_b_to_a
    }

    pub fn scric(&self) -> f64 {
        self.scric_a_from_b + self.scric_b_from_a
    }

    /// max over directions of |SHIC − (SCIC − SCRIC)|.
    pub fn residual(&self) -> f64 {
        let a = self.shic_a_to_b - (self.scic_a_to_b - self.scric_a_from_b);
        let b = self.shic_b_to_a - (self.scic_b_to_a - self.scric_b_from_a);
        a.abs().max(b.abs())
    }
}

/// Superposed costs for a product input distribution.
pub fn superposed_costs(trace: &ProtocolTrace) -> Result<SuperposedCosts> {
    if !trace.mu.is_product(1e-10) {
        return arg("superposed costs need a product input distribution; use superposed_costs_raw for the formal sums");
    }
    superposed_costs_raw(trace)
}

/// The same sums evaluated without the product check.
pub fn superposed_costs_raw(trace: &ProtocolTrace) -> Result<SuperposedCosts> {
    require_safe(trace)?;
    let mut out = SuperposedCosts::default();
    for s in trace.message_steps() {
        let p = s.flow.owner;
        let m = message(s);
        // Forward term on the receiver's side, reverse term on the sender's side.
        let (fwd_target, fwd_extra) = match p {
            Party::Alice => (REG_X, [REG_RY, REG_Y]),
            Party::Bob => (REG_Y, [REG_RX, REG_X]),
        };
        let fwd = cqmi_named(
            &s.state,
            &m,
            &names(&[fwd_target]),
            &union(&s.flow.receiver_before, &fwd_extra),
        )?;
        let (rev_target, rev_extra) = match p {
            Party::Alice => (REG_Y, [REG_RX, REG_X]),
            Party::Bob => (REG_X, [REG_RY, REG_Y]),
        };
        let rev = cqmi_named(&s.state, &m, &names(&[rev_target]), &union(&s.flow.sender_after, &rev_extra))?;
        match p {
            Party::Alice => {
                out.scic_a_to_b += fwd;
                out.scric_b_from_a += rev;
            }
            Party::Bob => {
                out.scic_b_to_a += fwd;
                out.scric_a_from_b += rev;
            }
        }
    }
    let st = trace.final_state();
    let h = trace.final_holdings();
    out.shic_a_to_b = cqmi_named(
        st,
        &names(&[REG_X]),
        &union(&without(&h.bob, &[REG_Y]), &[REG_RY, REG_Y]),
        &[],
    )?;
    out.shic_b_to_a = cqmi_named(
        st,
        &names(&[REG_Y]),
        &union(&without(&h.alice, &[REG_X]), &[REG_RX, REG_X]),
        &[],
    )?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Hybrid costs

/// Input factorisation X = X1⊗X2, Y = Y1⊗Y2 (big-endian: x = x1·|X2| + x2) with µ = µ1 ⊗ µ2.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub x_dims: (usize, usize),
    pub y_dims: (usize, usize),
    /// Distribution on X1 Y1.
    pub mu1: InputDistribution,
    /// Distribution on X2 Y2.
    pub mu2: InputDistribution,
}

impl Decomposition {
    pub fn new(mu1: InputDistribution, mu2: InputDistribution) -> Self {
        Self {
            x_dims: (mu1.x_dim(), mu2.x_dim()),
            y_dims: (mu1.y_dim(), mu2.y_dim()),
            mu1,
            mu2,
        }
    }

    /// The joint input distribution µ1 ⊗ µ2 on X Y.
    pub fn joint(&self) -> InputDistribution {
        let (x1, x2) = self.x_dims;
        let (y1, y2) = self.y_dims;
        let (dx, dy) = (x1 * x2, y1 * y2);
        let mut probs = vec![0.0; dx * dy];
        for a1 in 0..x1 {
            for a2 in 0..x2 {
                for b1 in 0..y1 {
                    for b2 in 0..y2 {
                        probs[(a1 * x2 + a2) * dy + b1 * y2 + b2] = self.mu1.get(a1, b1) * self.mu2.get(a2, b2);
                    }
                }
            }
        }
        InputDistribution::new(dx, dy, probs).expect("product of valid distributions")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HybridCosts {
    pub hcic_a_to_b: f64,
    pub hcic_b_to_a: f64,
    pub hcric_a_from_b: f64,
    pub hcric_b_from_a: f64,
    pub hhic_a_to_b: f64,
    pub hhic_b_to_a: f64,
    pub terms: Vec<RoundTerm>,
}

impl HybridCosts {
    /// max over directions of |HHIC − (HCIC − HCRIC)|.
    pub fn residual(&self) -> f64 {
        let a = self.hhic_a_to_b - (self.hcic_a_to_b - self.hcric_a_from_b);
        let b = self.hhic_b_to_a - (self.hcic_b_to_a - self.hcric_b_from_a);
        a.abs().max(b.abs())
    }
}

const X1: &str = "X.1";
const X2: &str = "X.2";
const Y1: &str = "Y.1";
const Y2: &str = "Y.2";
const RX2: &str = "RX.2";
const RY2: &str = "RY.2";

fn split_inputs(s: &PureState, d: &Decomposition) -> Result<PureState> {
    let (x1, x2) = d.x_dims;
    let (y1, y2) = d.y_dims;
    s.split_register(REG_X, &[RegisterLabel::new(X1, x1), RegisterLabel::new(X2, x2)])?
        .split_register(REG_RX, &[RegisterLabel::new("RX.1", x1), RegisterLabel::new(RX2, x2)])?
        .split_register(REG_Y, &[RegisterLabel::new(Y1, y1), RegisterLabel::new(Y2, y2)])?
        .split_register(REG_RY, &[RegisterLabel::new("RY.1", y1), RegisterLabel::new(RY2, y2)])
}

/// Hybrid costs of a trace run on `d.joint()`.
pub fn hybrid_costs(trace: &ProtocolTrace, d: &Decomposition) -> Result<HybridCosts> {
    require_safe(trace)?;
    if d.x_dims.0 * d.x_dims.1 != trace.mu.x_dim() || d.y_dims.0 * d.y_dims.1 != trace.mu.y_dim() {
        return arg("decomposition dimensions do not multiply to the input dimensions");
    }
    let joint = d.joint();
    let dev = joint
        .probabilities()
        .iter()
        .zip(trace.mu.probabilities())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if dev > 1e-10 {
        return arg("trace was not run on the decomposition's product distribution");
    }
    let swap_inputs = |regs: &[String], drop: &str| -> Vec<String> { without(regs, &[drop]) };
    let mut out = HybridCosts::default();
    for s in trace.message_steps() {
        let st = split_inputs(&s.state, d)?;
        let p = s.flow.owner;
        let m = message(s);
        // Terms about X1 sit with Bob's registers, terms about Y1 with Alice's.
        let x1_cond = |regs: &[String]| union(&swap_inputs(regs, REG_Y), &[RX2, RY2, Y1, Y2]);
        let y1_cond = |regs: &[String]| union(&swap_inputs(regs, REG_X), &[RY2, RX2, X1, X2]);
        match p {
            Party::Alice => {
                let fwd = cqmi_named(&st, &m, &names(&[X1]), &x1_cond(&s.flow.receiver_before))?;
                let rev = cqmi_named(&st, &m, &names(&[Y1]), &y1_cond(&s.flow.sender_after))?;
                out.hcic_a_to_b += fwd;
                out.hcric_b_from_a += rev;
                out.terms.push(RoundTerm {
                    round: s.round,
                    sender: p,
                    value: rev,
                });
            }
            Party::Bob => {
                let fwd = cqmi_named(&st, &m, &names(&[Y1]), &y1_cond(&s.flow.receiver_before))?;
                let rev = cqmi_named(&st, &m, &names(&[X1]), &x1_cond(&s.flow.sender_after))?;
                out.hcic_b_to_a += fwd;
                out.hcric_a_from_b += rev;
                out.terms.push(RoundTerm {
                    round: s.round,
                    sender: p,
                    value: rev,
                });
            }
        }
    }
    let st = split_inputs(trace.final_state(), d)?;
    let h = trace.final_holdings();
    let bob = union(&without(&h.bob, &[REG_Y]), &[RY2, Y2]);
    let alice = union(&without(&h.alice, &[REG_X]), &[RX2, X2]);
    out.hhic_a_to_b = cqmi_named(&st, &names(&[X1]), &bob, &names(&[Y1, X2]))?;
    out.hhic_b_to_a = cqmi_named(&st, &names(&[Y1]), &alice, &names(&[X1, Y2]))?;
    Ok(out)
}

pub fn hybrid_costs_of(p: &QuantumProtocol, d: &Decomposition) -> Result<HybridCosts> {
    hybrid_costs(&run_trace(p, &d.joint())?, d)
}

// ---------------------------------------------------------------------------
// No-forget certification

#[derive(Debug, Clone, PartialEq)]
pub enum CertificateBasis {
    /// Every message round leaves the sender with a computational-basis copy of the message.
    /// This sufficient condition is a structural check added by this crate.
    Structural,
    /// HCRIC vanished on every supplied decomposition.
    Exhaustive { decompositions: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub certified: bool,
    pub basis: Option<CertificateBasis>,
    /// Rounds failing the structural check, with the reason.
    pub structural_failures: Vec<(usize, String)>,
    /// (decomposition index, round, HCRIC term) for the largest positive term found.
    pub witness: Option<(usize, usize, f64)>,
}

/// Finds an output register of the sender that equals the message in the computational basis.
fn has_coherent_copy(iso: &crate::protocol::Isometry, msg: &str) -> bool {
    let Some(pm) = iso.outputs.iter().position(|l| l.name == msg) else {
        return false;
    };
    let dim = iso.outputs[pm].dim;
    let osys = match crate::registers::RegisterSystem::new(iso.outputs.clone()) {
        Ok(s) => s,
        Err(_) => return false,
    };
    let nz: Vec<Vec<usize>> = (0..iso.out_dim())
        .filter(|&i| (0..iso.in_dim()).any(|j| iso.matrix.get(i, j).norm() > 1e-12))
        .map(|i| osys.digits(i as u64))
        .collect();
    iso.outputs
        .iter()
        .enumerate()
        .filter(|(k, l)| *k != pm && l.dim == dim)
        .any(|(k, _)| nz.iter().all(|d| d[k] == d[pm]))
}

/// Certifies that neither party forgets information: first structurally, then by HCRIC over `family`.
pub fn no_forget_certify(p: &QuantumProtocol, family: &[Decomposition]) -> Result<CertificateReport> {
    if !p.is_safe() {
        return contract("certification needs a safe protocol");
    }
    let mut failures = Vec::new();
    for (k, r) in p.rounds.iter().enumerate() {
        if let Some(m) = &r.message {
            if r.adjoint || !has_coherent_copy(&r.isometry, m) {
                failures.push((k + 1, format!("sender keeps no computational-basis copy of {m}")));
            }
        }
    }
    if failures.is_empty() {
        return Ok(CertificateReport {
            certified: true,
            basis: Some(CertificateBasis::Structural),
            structural_failures: failures,
            witness: None,
        });
    }
    let mut witness: Option<(usize, usize, f64)> = None;
    for (i, d) in family.iter().enumerate() {
        let h = hybrid_costs_of(p, d)?;
        for t in &h.terms {
            if t.value > ZERO_TOL && witness.is_none_or(|w| t.value > w.2) {
                witness = Some((i, t.round, t.value));
            }
        }
    }
    let certified = witness.is_none() && !family.is_empty();
    Ok(CertificateReport {
        certified,
        basis: certified.then_some(CertificateBasis::Exhaustive {
            decompositions: family.len(),
        }),
        structural_failures: failures,
        witness,
    })
}
