//! Two-party round model: each round is a local isometry by one party, optionally producing a
//! message register that passes to the other party.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{arg, contract, QicError, Result};
use crate::limits;
use crate::linalg::{ComplexMatrix, C64, ZERO};
use crate::registers::{RegisterLabel, RegisterSystem};
use crate::state::{canonical_purification, offdiagonal_mass, strs, InputDistribution, PureState};
use crate::state::{REG_RX, REG_RY, REG_X, REG_Y};

const ISOMETRY_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-10;
const CLASSICAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }

    pub fn input_register(self) -> &'static str {
        match self {
            Party::Alice => REG_X,
            Party::Bob => REG_Y,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "Alice",
            Party::Bob => "Bob",
        })
    }
}

// ---------------------------------------------------------------------------
// Isometries

/// Linear map between named register lists; `matrix` is dim(out) × dim(in).
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    pub inputs: Vec<RegisterLabel>,
    pub outputs: Vec<RegisterLabel>,
    pub matrix: ComplexMatrix,
}

fn product_dim(labels: &[RegisterLabel]) -> Result<usize> {
    let d: u128 = labels.iter().map(|l| l.dim as u128).product();
    if d > limits::dim_cap() as u128 {
        return Err(QicError::DimensionCap {
            requested: d,
            cap: limits::dim_cap() as u128,
        });
    }
    Ok(d as usize)
}

impl Isometry {
    pub fn new(inputs: Vec<RegisterLabel>, outputs: Vec<RegisterLabel>, matrix: ComplexMatrix) -> Result<Self> {
        let din = product_dim(&inputs)?;
        let dout = product_dim(&outputs)?;
        if matrix.rows() != dout || matrix.cols() != din {
            return arg(format!(
                "matrix is {}x{}, registers need {dout}x{din}",
                matrix.rows(),
                matrix.cols()
            ));
        }
        RegisterSystem::new(inputs.clone())?;
        RegisterSystem::new(outputs.clone())?;
        Ok(Self { inputs, outputs, matrix })
    }

    /// Builds a map column by column: `f` receives input digits and returns output digits with amplitudes.
    pub fn from_fn<F>(inputs: Vec<RegisterLabel>, outputs: Vec<RegisterLabel>, f: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> Vec<(Vec<usize>, C64)>,
    {
        let din = product_dim(&inputs)?;
        let dout = product_dim(&outputs)?;
        let isys = RegisterSystem::new(inputs.clone())?;
        let osys = RegisterSystem::new(outputs.clone())?;
        let mut m = ComplexMatrix::zeros(dout, din);
        for j in 0..din {
            for (digits, amp) in f(&isys.digits(j as u64)) {
                if digits.len() != outputs.len() || digits.iter().zip(&outputs).any(|(d, l)| *d >= l.dim) {
                    return arg("output digits do not fit the output registers");
                }
                let i = osys.index_of(&digits) as usize;
                m.set(i, j, m.get(i, j) + amp);
            }
        }
        Self::new(inputs, outputs, m)
    }

    /// Permutation of basis states (a reversible classical map).
    pub fn classical<F>(inputs: Vec<RegisterLabel>, outputs: Vec<RegisterLabel>, f: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> Vec<usize>,
    {
        Self::from_fn(inputs, outputs, |d| vec![(f(d), C64::new(1.0, 0.0))])
    }

    pub fn identity(labels: Vec<RegisterLabel>) -> Result<Self> {
        let d = product_dim(&labels)?;
        Self::new(labels.clone(), labels, ComplexMatrix::identity(d))
    }

    pub fn in_dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn adjoint(&self) -> Isometry {
        Isometry {
            inputs: self.outputs.clone(),
            outputs: self.inputs.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn deviation(&self) -> f64 {
        self.matrix.isometry_deviation()
    }

    /// Renames registers on both sides according to `map`.
    pub fn renamed(&self, map: &HashMap<String, String>) -> Isometry {
        let r = |ls: &[RegisterLabel]| {
            ls.iter()
                .map(|l| RegisterLabel::new(map.get(&l.name).cloned().unwrap_or_else(|| l.name.clone()), l.dim))
                .collect()
        };
        Isometry {
            inputs: r(&self.inputs),
            outputs: r(&self.outputs),
            matrix: self.matrix.clone(),
        }
    }

    /// True when the map never changes the computational-basis value of `name`.
    pub fn is_controlled_by(&self, name: &str) -> bool {
        let (Some(pi), Some(po)) = (
            self.inputs.iter().position(|l| l.name == name),
            self.outputs.iter().position(|l| l.name == name),
        ) else {
            return false;
        };
        if self.inputs[pi].dim != self.outputs[po].dim {
            return false;
        }
        let isys = RegisterSystem::new(self.inputs.clone()).expect("validated");
        let osys = RegisterSystem::new(self.outputs.clone()).expect("validated");
        for j in 0..self.in_dim() {
            let c = isys.digits(j as u64)[pi];
            for i in 0..self.out_dim() {
                if self.matrix.get(i, j).norm() > 1e-12 && osys.digits(i as u64)[po] != c {
                    return false;
                }
            }
        }
        true
    }

    /// Applies `self` and then `next`. Registers of `next` not produced by `self` become extra inputs.
    pub fn then(&self, next: &Isometry) -> Result<Isometry> {
        let mut inputs = self.inputs.clone();
        for l in &next.inputs {
            if !self.outputs.iter().any(|o| o.name == l.name) {
                if inputs.iter().any(|i| i.name == l.name) {
                    return arg(format!("register {} is consumed twice", l.name));
                }
                inputs.push(l.clone());
            }
        }
        let mut outputs: Vec<RegisterLabel> = self
            .outputs
            .iter()
            .filter(|o| !next.inputs.iter().any(|l| l.name == o.name))
            .cloned()
            .collect();
        outputs.extend(next.outputs.iter().cloned());
        let isys = RegisterSystem::new(inputs.clone())?;
        let osys = RegisterSystem::new(outputs.clone())?;
        let order: Vec<String> = osys.names();
        let din = product_dim(&inputs)?;
        let dout = product_dim(&outputs)?;
        let mut m = ComplexMatrix::zeros(dout, din);
        for j in 0..din {
            let s = PureState::basis(isys.clone(), &isys.digits(j as u64))?;
            let s = s.apply_map(&self.inputs, &self.outputs, &self.matrix)?;
            let s = s.apply_map(&next.inputs, &next.outputs, &next.matrix)?;
            let s = s.permute(&strs(&order))?;
            for &(i, a) in s.entries() {
                m.set(i as usize, j, a);
            }
        }
        Isometry::new(inputs, outputs, m)
    }
}

// ---------------------------------------------------------------------------
// Protocols

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub owner: Party,
    pub isometry: Isometry,
    /// Register handed to the other party after this round.
    pub message: Option<String>,
    /// Registers used only as classical controls.
    pub controls: Vec<String>,
    /// The matrix is the adjoint of an isometry (a backward step); it must preserve the norm of the actual state.
    pub adjoint: bool,
}

impl Round {
    pub fn new(owner: Party, isometry: Isometry, message: Option<&str>) -> Self {
        Self {
            owner,
            isometry,
            message: message.map(str::to_string),
            controls: Vec::new(),
            adjoint: false,
        }
    }

    pub fn with_controls(mut self, controls: &[&str]) -> Self {
        self.controls = controls.iter().map(|s| s.to_string()).collect();
        self
    }
}

/// Pre-shared pure state; the first `alice.len()` registers belong to Alice.
#[derive(Debug, Clone, PartialEq)]
pub struct Entanglement {
    pub alice: Vec<RegisterLabel>,
    pub bob: Vec<RegisterLabel>,
    pub state: PureState,
}

impl Entanglement {
    pub fn none() -> Self {
        Self {
            alice: Vec::new(),
            bob: Vec::new(),
            state: PureState::empty(),
        }
    }

    pub fn new(alice: Vec<RegisterLabel>, bob: Vec<RegisterLabel>, state: PureState) -> Result<Self> {
        let mut labels = alice.clone();
        labels.extend(bob.iter().cloned());
        if state.system().labels() != labels.as_slice() {
            return arg("entanglement state must list Alice's then Bob's registers");
        }
        Ok(Self { alice, bob, state })
    }

    /// All registers in |0⟩.
    pub fn zeros(alice: Vec<RegisterLabel>, bob: Vec<RegisterLabel>) -> Result<Self> {
        let mut labels = alice.clone();
        labels.extend(bob.iter().cloned());
        let n = labels.len();
        let state = PureState::basis(RegisterSystem::new(labels)?, &vec![0; n])?;
        Self::new(alice, bob, state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumProtocol {
    pub x_dim: usize,
    pub y_dim: usize,
    pub entanglement: Entanglement,
    pub rounds: Vec<Round>,
    pub alice_output: Vec<String>,
    pub bob_output: Vec<String>,
    /// Lifts the strict Alice-first alternation and the final-round-only rule for local rounds.
    pub custom_order: bool,
}

impl QuantumProtocol {
    /// A protocol with no rounds.
    pub fn empty(x_dim: usize, y_dim: usize) -> Self {
        Self {
            x_dim,
            y_dim,
            entanglement: Entanglement::none(),
            rounds: Vec::new(),
            alice_output: Vec::new(),
            bob_output: Vec::new(),
            custom_order: false,
        }
    }

    pub fn message_rounds(&self) -> usize {
        self.rounds.iter().filter(|r| r.message.is_some()).count()
    }

    /// Σ lg dim over message registers, split by sender: (Alice→Bob, Bob→Alice).
    pub fn communication_qubits(&self) -> (f64, f64) {
        let mut out = (0.0, 0.0);
        for r in &self.rounds {
            if let Some(m) = &r.message {
                let d = r.isometry.outputs.iter().find(|l| &l.name == m).map_or(1, |l| l.dim);
                match r.owner {
                    Party::Alice => out.0 += (d as f64).log2(),
                    Party::Bob => out.1 += (d as f64).log2(),
                }
            }
        }
        out
    }

    /// True when X and Y are only ever touched as declared controls.
    pub fn is_safe(&self) -> bool {
        self.safety_violations().is_empty()
    }

    pub fn safety_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (k, r) in self.rounds.iter().enumerate() {
            for reg in [REG_X, REG_Y] {
                if r.isometry.inputs.iter().any(|l| l.name == reg) && !r.controls.iter().any(|c| c == reg) {
                    v.push(format!("round {}: input register {reg} is not used as a control", k + 1));
                }
                if r.message.as_deref() == Some(reg) {
                    v.push(format!("round {}: input register {reg} is sent", k + 1));
                }
            }
        }
        v
    }
}

// ---------------------------------------------------------------------------
// Validation and register flow

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Isometry,
    Flow,
    Order,
    Control,
    Output,
    Entanglement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub round: Option<usize>,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.round {
            Some(r) => write!(f, "round {r}: {:?}: {}", self.kind, self.detail),
            None => write!(f, "{:?}: {}", self.kind, self.detail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Register names held by each party.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Holdings {
    pub alice: Vec<String>,
    pub bob: Vec<String>,
}

impl Holdings {
    pub fn of(&self, p: Party) -> &Vec<String> {
        match p {
            Party::Alice => &self.alice,
            Party::Bob => &self.bob,
        }
    }

    fn of_mut(&mut self, p: Party) -> &mut Vec<String> {
        match p {
            Party::Alice => &mut self.alice,
            Party::Bob => &mut self.bob,
        }
    }
}

/// Bookkeeping for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundFlow {
    pub owner: Party,
    pub message: Option<String>,
    /// Sender's registers right after the round.
    pub sender_after: Vec<String>,
    /// Receiver's registers right after the round, without the new message.
    pub receiver_before: Vec<String>,
    /// Holdings after the round; the message already sits with the receiver.
    pub holdings: Holdings,
}

fn violation(round: Option<usize>, kind: ViolationKind, detail: impl Into<String>) -> Violation {
    Violation {
        round,
        kind,
        detail: detail.into(),
    }
}

fn flow(p: &QuantumProtocol) -> (Vec<Violation>, Holdings, Vec<RoundFlow>) {
    use ViolationKind::*;
    let mut v = Vec::new();
    let mut dims: HashMap<String, usize> = HashMap::new();
    dims.insert(REG_X.into(), p.x_dim);
    dims.insert(REG_Y.into(), p.y_dim);
    dims.insert(REG_RX.into(), p.x_dim);
    dims.insert(REG_RY.into(), p.y_dim);
    if p.x_dim == 0 || p.y_dim == 0 {
        v.push(violation(None, Flow, "input dimensions must be positive"));
    }
    let mut hold = Holdings {
        alice: vec![REG_X.into()],
        bob: vec![REG_Y.into()],
    };
    let ent = &p.entanglement;
    let mut expected = ent.alice.clone();
    expected.extend(ent.bob.iter().cloned());
    if ent.state.system().labels() != expected.as_slice() {
        v.push(violation(None, Entanglement, "state registers must be Alice's then Bob's"));
    }
    if (ent.state.norm_sqr() - 1.0).abs() > 1e-8 {
        v.push(violation(None, Entanglement, "entanglement state is not normalised"));
    }
    for (party, labels) in [(Party::Alice, &ent.alice), (Party::Bob, &ent.bob)] {
        for l in labels {
            if dims.contains_key(&l.name) {
                v.push(violation(
                    None,
                    Entanglement,
                    format!("register name {} is already in use", l.name),
                ));
                continue;
            }
            dims.insert(l.name.clone(), l.dim);
            hold.of_mut(party).push(l.name.clone());
        }
    }
    let initial = hold.clone();
    let mut flows = Vec::new();
    let n = p.rounds.len();
    for (k, r) in p.rounds.iter().enumerate() {
        let idx = Some(k + 1);
        let owner = r.owner;
        if !p.custom_order {
            let want = if k % 2 == 0 { Party::Alice } else { Party::Bob };
            if owner != want {
                v.push(violation(idx, Order, format!("expected {want} to act")));
            }
            if r.message.is_none() && k + 1 != n {
                v.push(violation(idx, Order, "only the final round may omit a message"));
            }
        }
        let iso = &r.isometry;
        let mut ok_shape = true;
        for l in &iso.inputs {
            if !hold.of(owner).contains(&l.name) {
                v.push(violation(idx, Flow, format!("{owner} does not hold register {}", l.name)));
                ok_shape = false;
            } else if dims.get(&l.name) != Some(&l.dim) {
                v.push(violation(idx, Flow, format!("register {} has the wrong dimension", l.name)));
                ok_shape = false;
            }
        }
        if RegisterSystem::new(iso.inputs.clone()).is_err() || RegisterSystem::new(iso.outputs.clone()).is_err() {
            v.push(violation(idx, Flow, "repeated or empty register in the map"));
            ok_shape = false;
        }
        for l in &iso.outputs {
            let consumed = iso.inputs.iter().any(|i| i.name == l.name);
            if !consumed && dims.contains_key(&l.name) {
                v.push(violation(idx, Flow, format!("register {} already exists", l.name)));
                ok_shape = false;
            }
            if l.name == REG_RX || l.name == REG_RY {
                v.push(violation(idx, Flow, "purification registers cannot be produced"));
            }
        }
        let din: usize = iso.inputs.iter().map(|l| l.dim).product();
        let dout: usize = iso.outputs.iter().map(|l| l.dim).product();
        if iso.matrix.rows() != dout || iso.matrix.cols() != din {
            v.push(violation(idx, Isometry, "matrix shape does not match registers"));
            ok_shape = false;
        } else {
            let dev = if r.adjoint {
                iso.matrix.coisometry_deviation()
            } else {
                iso.matrix.isometry_deviation()
            };
            if dev > ISOMETRY_TOL {
                v.push(violation(idx, Isometry, format!("deviation from isometry {dev:.3e}")));
            }
        }
        if let Some(m) = &r.message {
            if !iso.outputs.iter().any(|l| &l.name == m) {
                v.push(violation(idx, Flow, format!("message {m} is not an output")));
                ok_shape = false;
            }
            if r.controls.contains(m) {
                v.push(violation(idx, Control, format!("control {m} cannot be sent")));
            }
        }
        for c in &r.controls {
            if ok_shape && !iso.is_controlled_by(c) {
                v.push(violation(idx, Control, format!("map is not block-diagonal in {c}")));
            }
        }
        if !ok_shape {
            continue;
        }
        for l in &iso.inputs {
            dims.remove(&l.name);
            hold.of_mut(owner).retain(|h| h != &l.name);
        }
        for l in &iso.outputs {
            dims.insert(l.name.clone(), l.dim);
            hold.of_mut(owner).push(l.name.clone());
        }
        let sender_after: Vec<String> = hold
            .of(owner)
            .iter()
            .filter(|h| Some(*h) != r.message.as_ref())
            .cloned()
            .collect();
        let receiver_before = hold.of(owner.other()).clone();
        if let Some(m) = &r.message {
            hold.of_mut(owner).retain(|h| h != m);
            hold.of_mut(owner.other()).push(m.clone());
        }
        flows.push(RoundFlow {
            owner,
            message: r.message.clone(),
            sender_after,
            receiver_before,
            holdings: hold.clone(),
        });
    }
    for (party, outs) in [(Party::Alice, &p.alice_output), (Party::Bob, &p.bob_output)] {
        for o in outs {
            if !hold.of(party).contains(o) {
                v.push(violation(None, Output, format!("{party} does not hold output register {o}")));
            }
        }
    }
    (v, initial, flows)
}

pub fn validate_protocol(p: &QuantumProtocol) -> ValidationReport {
    ValidationReport { violations: flow(p).0 }
}

// ---------------------------------------------------------------------------
// Execution

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub round: usize,
    pub flow: RoundFlow,
    pub state: PureState,
}

/// Purified run of a protocol: the state after every round and who holds what.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTrace {
    pub mu: InputDistribution,
    pub initial: PureState,
    pub initial_holdings: Holdings,
    pub steps: Vec<TraceStep>,
    pub alice_output: Vec<String>,
    pub bob_output: Vec<String>,
    pub safe: bool,
}

impl ProtocolTrace {
    pub fn final_state(&self) -> &PureState {
        self.steps.last().map_or(&self.initial, |s| &s.state)
    }

    pub fn final_holdings(&self) -> &Holdings {
        self.steps.last().map_or(&self.initial_holdings, |s| &s.flow.holdings)
    }

    pub fn message_steps(&self) -> impl Iterator<Item = &TraceStep> {
        self.steps.iter().filter(|s| s.flow.message.is_some())
    }
}

pub fn run_trace(p: &QuantumProtocol, mu: &InputDistribution) -> Result<ProtocolTrace> {
    if mu.x_dim() != p.x_dim || mu.y_dim() != p.y_dim {
        return arg("input distribution does not match the protocol's input dimensions");
    }
    let (violations, initial_holdings, flows) = flow(p);
    if !violations.is_empty() {
        return Err(QicError::Invalid(violations.iter().map(|v| v.to_string()).collect()));
    }
    let initial = canonical_purification(mu).tensor(&p.entanglement.state)?;
    let mut steps = Vec::with_capacity(p.rounds.len());
    let mut state = initial.clone();
    for (k, (r, f)) in p.rounds.iter().zip(flows).enumerate() {
        state = state.apply_map(&r.isometry.inputs, &r.isometry.outputs, &r.isometry.matrix)?;
        let n = state.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return contract(format!(
                "round {}: state norm {n} after the map; a backward step left the range of its isometry",
                k + 1
            ));
        }
        steps.push(TraceStep {
            round: k + 1,
            flow: f,
            state: state.clone(),
        });
    }
    Ok(ProtocolTrace {
        mu: mu.clone(),
        initial,
        initial_holdings,
        steps,
        alice_output: p.alice_output.clone(),
        bob_output: p.bob_output.clone(),
        safe: p.is_safe(),
    })
}

/// Joint distribution of inputs and outputs, indexed `[x][y][a][b]` (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub x_dim: usize,
    pub y_dim: usize,
    pub a_dim: usize,
    pub b_dim: usize,
    pub probs: Vec<f64>,
}

impl Channel {
    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.probs[((x * self.y_dim + y) * self.a_dim + a) * self.b_dim + b]
    }

    pub fn max_abs_diff(&self, other: &Channel) -> f64 {
        if (self.x_dim, self.y_dim, self.a_dim, self.b_dim) != (other.x_dim, other.y_dim, other.a_dim, other.b_dim) {
            return f64::INFINITY;
        }
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Pr[b ≠ f(x,y)] under the channel's own input weights.
    pub fn bob_error(&self, f: &[usize]) -> f64 {
        let mut err = 0.0;
        for x in 0..self.x_dim {
            for y in 0..self.y_dim {
                for a in 0..self.a_dim {
                    for b in 0..self.b_dim {
                        if b != f[x * self.y_dim + y] {
                            err += self.get(x, y, a, b);
                        }
                    }
                }
            }
        }
        err
    }
}

pub fn channel_from_trace(t: &ProtocolTrace) -> Result<Channel> {
    let fs = t.final_state();
    let mut keep: Vec<&str> = vec![REG_RX, REG_RY];
    keep.extend(t.alice_output.iter().map(String::as_str));
    keep.extend(t.bob_output.iter().map(String::as_str));
    let rho = fs.partial_trace(&keep)?;
    let mass = offdiagonal_mass(rho.matrix());
    if mass > CLASSICAL_TOL {
        return contract(format!(
            "final input/output marginal is not classical (off-diagonal mass {mass:.3e})"
        ));
    }
    let dim_of = |names: &[String]| -> usize { names.iter().map(|n| fs.system().dim_of(n).unwrap_or(1)).product() };
    let (a_dim, b_dim) = (dim_of(&t.alice_output), dim_of(&t.bob_output));
    let probs = (0..rho.matrix().rows()).map(|i| rho.matrix().get(i, i).re.max(0.0)).collect();
    Ok(Channel {
        x_dim: t.mu.x_dim(),
        y_dim: t.mu.y_dim(),
        a_dim,
        b_dim,
        probs,
    })
}

pub fn channel_of(p: &QuantumProtocol, mu: &InputDistribution) -> Result<Channel> {
    channel_from_trace(&run_trace(p, mu)?)
}

/// Whether Bob's output equals `f(x,y)` except with probability `epsilon`; `f` is indexed `x * |Y| + y`.
/// With `worst_case`, the error is maximised over individual inputs instead of averaged under µ.
pub fn solves(p: &QuantumProtocol, f: &[usize], mu: &InputDistribution, epsilon: f64, worst_case: bool) -> Result<bool> {
    Ok(error_of(p, f, mu, worst_case)? <= epsilon)
}

/// Distributional or worst-case error of Bob's output against `f`.
pub fn error_of(p: &QuantumProtocol, f: &[usize], mu: &InputDistribution, worst_case: bool) -> Result<f64> {
    if f.len() != p.x_dim * p.y_dim {
        return arg("truth table size does not match the inputs");
    }
    if !worst_case {
        return Ok(channel_of(p, mu)?.bob_error(f));
    }
    let ch = channel_of(p, &InputDistribution::uniform(p.x_dim, p.y_dim))?;
    let w = (p.x_dim * p.y_dim) as f64;
    let mut worst: f64 = 0.0;
    for x in 0..p.x_dim {
        for y in 0..p.y_dim {
            let mut e = 0.0;
            for a in 0..ch.a_dim {
                for b in 0..ch.b_dim {
                    if b != f[x * p.y_dim + y] {
                        e += ch.get(x, y, a, b);
                    }
                }
            }
            worst = worst.max(e * w);
        }
    }
    Ok(worst)
}

/// Fidelity |⟨ψ|ρ|ψ⟩| between a pure target on `names` and the corresponding marginal of `state`.
pub fn marginal_fidelity(state: &PureState, target: &PureState) -> Result<f64> {
    let names = target.system().names();
    let rho = state.partial_trace(&strs(&names))?;
    let psi = target.amplitudes()?;
    let rpsi = rho.matrix().mul_vec(&psi);
    let f: C64 = psi.iter().zip(&rpsi).map(|(a, b)| a.conj() * b).fold(ZERO, |s, v| s + v);
    Ok(f.re)
}
