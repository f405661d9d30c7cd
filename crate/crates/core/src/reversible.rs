//! Classical protocols built from reversible circuits, where a party may forget what it sent.
//!
//! Every circuit is a bijection between the values of the registers it consumes (plus ancillas
//! starting at 0) and the values of the registers it produces. A circuit may hand some of its
//! outputs to the other party as a message.

use std::collections::HashMap;

use crate::classical::{
    message_column, radix_digits, radix_index, ClassicalProtocol, ClassicalRound, Extension, JointTable, OutputRule, Rule, COL_D,
    COL_R, COL_X, COL_XC, COL_Y, COL_YC,
};
use crate::error::{arg, contract, QicError, Result};
use crate::limits::DEFAULT_ATOM_CAP;
use crate::protocol::Party;
use crate::registers::RegisterLabel;
use crate::state::{InputDistribution, REG_X, REG_Y};
use crate::transforms::{X_COPY, Y_COPY};
use serde::{Deserialize, Serialize};

pub const REG_SA: &str = "SA";
pub const REG_SB: &str = "SB";
pub const REG_RA: &str = "RA";
pub const REG_RB: &str = "RB";

fn dims_of(labels: &[RegisterLabel]) -> Vec<usize> {
    labels.iter().map(|l| l.dim).collect()
}

/// Gates over two-valued registers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Not(String),
    Cnot(String, String),
    Toffoli(String, String, String),
    Swap(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub owner: Party,
    /// Registers consumed from the owner's holdings.
    pub inputs: Vec<RegisterLabel>,
    /// Fresh registers initialised to 0.
    pub ancillas: Vec<RegisterLabel>,
    pub outputs: Vec<RegisterLabel>,
    /// Output value for every (inputs, ancillas) value, both flattened big-endian.
    pub table: Vec<usize>,
    /// Outputs handed to the other party.
    pub message: Vec<String>,
}

impl Circuit {
    pub fn from_fn<F>(
        owner: Party,
        inputs: Vec<RegisterLabel>,
        ancillas: Vec<RegisterLabel>,
        outputs: Vec<RegisterLabel>,
        message: &[&str],
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[usize]) -> Vec<usize>,
    {
        let mut dom = dims_of(&inputs);
        dom.extend(dims_of(&ancillas));
        let cod = dims_of(&outputs);
        let n: usize = dom.iter().product();
        if n > DEFAULT_ATOM_CAP {
            return Err(QicError::AtomCap {
                atoms: n as u128,
                cap: DEFAULT_ATOM_CAP as u128,
            });
        }
        let mut table = Vec::with_capacity(n);
        for i in 0..n {
            let out = f(&radix_digits(i, &dom));
            if out.len() != cod.len() || out.iter().zip(&cod).any(|(v, d)| v >= d) {
                return arg("circuit output does not fit its registers");
            }
            table.push(radix_index(&out, &cod));
        }
        let c = Self {
            owner,
            inputs,
            ancillas,
            outputs,
            table,
            message: message.iter().map(|s| s.to_string()).collect(),
        };
        if !c.is_bijection() {
            return arg("circuit is not a bijection");
        }
        Ok(c)
    }

    /// Compiles a gate list over `inputs` and `ancillas` (all two-valued). Outputs are the same
    /// registers in the same order, renamed through `renames`.
    pub fn from_gates(
        owner: Party,
        inputs: Vec<RegisterLabel>,
        ancillas: Vec<RegisterLabel>,
        gates: &[Gate],
        renames: &[(&str, &str)],
        message: &[&str],
    ) -> Result<Self> {
        let all: Vec<RegisterLabel> = inputs.iter().chain(&ancillas).cloned().collect();
        let pos: HashMap<&str, usize> = all.iter().enumerate().map(|(k, l)| (l.name.as_str(), k)).collect();
        let bit = |n: &str| -> Result<usize> {
            match pos.get(n) {
                Some(&k) if all[k].dim == 2 => Ok(k),
                Some(_) => arg(format!("gate register {n} is not two-valued")),
                None => arg(format!("gate register {n} is not in the circuit")),
            }
        };
        let mut ops: Vec<(u8, [usize; 3])> = Vec::with_capacity(gates.len());
        for g in gates {
            ops.push(match g {
                Gate::Not(a) => (0, [bit(a)?, 0, 0]),
                Gate::Cnot(c, t) => (1, [bit(c)?, bit(t)?, 0]),
                Gate::Toffoli(c1, c2, t) => (2, [bit(c1)?, bit(c2)?, bit(t)?]),
                Gate::Swap(a, b) => (3, [bit(a)?, bit(b)?, 0]),
            });
        }
        let outputs = all
            .iter()
            .map(|l| {
                let name = renames
                    .iter()
                    .find(|(from, _)| *from == l.name)
                    .map_or(l.name.as_str(), |(_, to)| to);
                RegisterLabel::new(name, l.dim)
            })
            .collect();
        Self::from_fn(owner, inputs, ancillas, outputs, message, |d| {
            let mut v = d.to_vec();
            for (op, [a, b, c]) in &ops {
                match op {
                    0 => v[*a] ^= 1,
                    1 => v[*b] ^= v[*a],
                    2 => v[*c] ^= v[*a] & v[*b],
                    _ => v.swap(*a, *b),
                }
            }
            v
        })
    }

    /// Copies register `from` of dimension `dim` into a fresh `to` (value added modulo `dim`).
    pub fn copy(owner: Party, from: &str, to: &str, dim: usize, message: bool) -> Result<Self> {
        let msg: Vec<&str> = if message { vec![to] } else { vec![] };
        Self::from_fn(
            owner,
            vec![RegisterLabel::new(from, dim)],
            vec![RegisterLabel::new(to, dim)],
            vec![RegisterLabel::new(from, dim), RegisterLabel::new(to, dim)],
            &msg,
            |d| vec![d[0], (d[0] + d[1]) % dim],
        )
    }

    /// Renames a register and sends it.
    pub fn forward(owner: Party, from: &str, to: &str, dim: usize) -> Result<Self> {
        Self::from_fn(
            owner,
            vec![RegisterLabel::new(from, dim)],
            vec![],
            vec![RegisterLabel::new(to, dim)],
            &[to],
            |d| d.to_vec(),
        )
    }

    pub fn is_bijection(&self) -> bool {
        let n = self.table.len();
        let m: usize = self.outputs.iter().map(|l| l.dim).product();
        if n != m {
            return false;
        }
        let mut seen = vec![false; n];
        for &t in &self.table {
            if t >= n || seen[t] {
                return false;
            }
            seen[t] = true;
        }
        true
    }

    fn apply(&self, values: &mut HashMap<String, usize>) {
        let mut d: Vec<usize> = self.inputs.iter().map(|l| values.remove(&l.name).unwrap_or(0)).collect();
        d.extend(self.ancillas.iter().map(|_| 0));
        let mut dom = dims_of(&self.inputs);
        dom.extend(dims_of(&self.ancillas));
        let out = radix_digits(self.table[radix_index(&d, &dom)], &dims_of(&self.outputs));
        for (l, v) in self.outputs.iter().zip(out) {
            values.insert(l.name.clone(), v);
        }
    }

    fn message_dims(&self) -> Vec<usize> {
        self.message
            .iter()
            .map(|m| self.outputs.iter().find(|l| &l.name == m).map_or(1, |l| l.dim))
            .collect()
    }

    /// Leaves `name` unchanged on every value.
    fn preserves(&self, name: &str) -> bool {
        let (Some(pi), Some(po)) = (
            self.inputs.iter().position(|l| l.name == name),
            self.outputs.iter().position(|l| l.name == name),
        ) else {
            return false;
        };
        let mut dom = dims_of(&self.inputs);
        dom.extend(dims_of(&self.ancillas));
        let cod = dims_of(&self.outputs);
        self.table
            .iter()
            .enumerate()
            .all(|(i, &t)| radix_digits(i, &dom)[pi] == radix_digits(t, &cod)[po])
            && !self.message.iter().any(|m| m == name)
    }

    fn renamed(&self, map: &HashMap<&str, &str>) -> Circuit {
        let r = |ls: &[RegisterLabel]| -> Vec<RegisterLabel> {
            ls.iter()
                .map(|l| RegisterLabel::new(map.get(l.name.as_str()).map_or(l.name.as_str(), |v| v), l.dim))
                .collect()
        };
        Circuit {
            owner: self.owner,
            inputs: r(&self.inputs),
            ancillas: r(&self.ancillas),
            outputs: r(&self.outputs),
            table: self.table.clone(),
            message: self
                .message
                .iter()
                .map(|m| map.get(m.as_str()).map_or(m.clone(), |v| v.to_string()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversibleProtocol {
    pub x_dim: usize,
    pub y_dim: usize,
    /// Private coin laws; a one-letter law means no coin register.
    pub alice_coin: Vec<f64>,
    pub bob_coin: Vec<f64>,
    /// Shared coin law; each party starts with its own copy (RA, RB).
    pub public_coin: Vec<f64>,
    pub circuits: Vec<Circuit>,
    pub alice_output: Vec<String>,
    pub bob_output: Vec<String>,
}

/// Holdings and values through one execution.
struct Run {
    /// After each circuit: every register value, and who holds what.
    snapshots: Vec<(HashMap<String, usize>, [Vec<String>; 2])>,
}

fn side(p: Party) -> usize {
    match p {
        Party::Alice => 0,
        Party::Bob => 1,
    }
}

impl ReversibleProtocol {
    pub fn new(x_dim: usize, y_dim: usize) -> Self {
        Self {
            x_dim,
            y_dim,
            alice_coin: vec![1.0],
            bob_coin: vec![1.0],
            public_coin: vec![1.0],
            circuits: Vec::new(),
            alice_output: Vec::new(),
            bob_output: Vec::new(),
        }
    }

    /// Registers each party starts with.
    pub fn initial_registers(&self, p: Party) -> Vec<RegisterLabel> {
        let (input, dim, coin, cname, rname) = match p {
            Party::Alice => (REG_X, self.x_dim, &self.alice_coin, REG_SA, REG_RA),
            Party::Bob => (REG_Y, self.y_dim, &self.bob_coin, REG_SB, REG_RB),
        };
        let mut v = vec![RegisterLabel::new(input, dim)];
        if coin.len() > 1 {
            v.push(RegisterLabel::new(cname, coin.len()));
        }
        if self.public_coin.len() > 1 {
            v.push(RegisterLabel::new(rname, self.public_coin.len()));
        }
        v
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (what, law) in [
            ("Alice's coin", &self.alice_coin),
            ("Bob's coin", &self.bob_coin),
            ("public coin", &self.public_coin),
        ] {
            if law.is_empty() || law.iter().any(|p| !(*p >= 0.0)) || (law.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
                v.push(format!("{what} is not a probability distribution"));
            }
        }
        let mut dims: HashMap<String, usize> = HashMap::new();
        let mut hold: [Vec<String>; 2] = [Vec::new(), Vec::new()];
        for p in [Party::Alice, Party::Bob] {
            for l in self.initial_registers(p) {
                dims.insert(l.name.clone(), l.dim);
                hold[side(p)].push(l.name);
            }
        }
        for (k, c) in self.circuits.iter().enumerate() {
            let k = k + 1;
            let s = side(c.owner);
            if !c.is_bijection() {
                v.push(format!("circuit {k} is not a bijection"));
            }
            let mut ok = true;
            for l in &c.inputs {
                if !hold[s].contains(&l.name) || dims.get(&l.name) != Some(&l.dim) {
                    v.push(format!(
                        "circuit {k}: {} does not hold register {} of dimension {}",
                        c.owner, l.name, l.dim
                    ));
                    ok = false;
                }
            }
            for l in c.ancillas.iter().chain(&c.outputs) {
                let consumed = c.inputs.iter().any(|i| i.name == l.name);
                if !consumed && dims.contains_key(&l.name) {
                    v.push(format!("circuit {k}: register {} already exists", l.name));
                    ok = false;
                }
            }
            for m in &c.message {
                if !c.outputs.iter().any(|l| &l.name == m) {
                    v.push(format!("circuit {k}: message {m} is not an output"));
                    ok = false;
                }
            }
            if !ok {
                continue;
            }
            for l in &c.inputs {
                dims.remove(&l.name);
                hold[s].retain(|h| h != &l.name);
            }
            for l in &c.outputs {
                dims.insert(l.name.clone(), l.dim);
                if c.message.contains(&l.name) {
                    hold[1 - s].push(l.name.clone());
                } else {
                    hold[s].push(l.name.clone());
                }
            }
        }
        for (p, outs) in [(Party::Alice, &self.alice_output), (Party::Bob, &self.bob_output)] {
            for o in outs {
                if !hold[side(p)].contains(o) {
                    v.push(format!("{p} does not hold output register {o}"));
                }
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(QicError::Invalid(v))
        }
    }

    /// X and Y are never changed or sent.
    pub fn is_safe(&self) -> bool {
        self.circuits.iter().all(|c| {
            [REG_X, REG_Y]
                .iter()
                .all(|r| !c.inputs.iter().any(|l| &l.name == r) || c.preserves(r))
        })
    }

    pub fn message_circuits(&self) -> impl Iterator<Item = (usize, &Circuit)> {
        self.circuits.iter().enumerate().filter(|(_, c)| !c.message.is_empty())
    }

    /// Σ lg |message alphabet| over circuits.
    pub fn communication_bits(&self) -> f64 {
        self.message_circuits()
            .map(|(_, c)| c.message_dims().iter().map(|&d| (d as f64).log2()).sum::<f64>())
            .sum()
    }

    fn run(&self, x: usize, y: usize, sa: usize, sb: usize, r: usize) -> Run {
        let mut values: HashMap<String, usize> = HashMap::new();
        let mut hold: [Vec<String>; 2] = [Vec::new(), Vec::new()];
        for p in [Party::Alice, Party::Bob] {
            for l in self.initial_registers(p) {
                let v = match l.name.as_str() {
                    REG_X => x,
                    REG_Y => y,
                    REG_SA => sa,
                    REG_SB => sb,
                    _ => r,
                };
                values.insert(l.name.clone(), v);
                hold[side(p)].push(l.name);
            }
        }
        let mut snapshots = vec![(values.clone(), hold.clone())];
        for c in &self.circuits {
            let s = side(c.owner);
            c.apply(&mut values);
            for l in &c.inputs {
                hold[s].retain(|h| h != &l.name);
            }
            for l in &c.outputs {
                if c.message.contains(&l.name) {
                    hold[1 - s].push(l.name.clone());
                } else {
                    hold[s].push(l.name.clone());
                }
            }
            snapshots.push((values.clone(), hold.clone()));
        }
        Run { snapshots }
    }
}

/// One message term pair of the reversible cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicTerm {
    /// 1-based circuit index.
    pub circuit: usize,
    pub sender: Party,
    /// Information about the extension given the receiver's memory.
    pub receiver: f64,
    /// Information about the extension given the sender's memory after sending.
    pub sender_side: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RicReport {
    pub total: f64,
    pub terms: Vec<RicTerm>,
}

fn snapshot_col(k: usize, name: &str) -> String {
    format!("{k}:{name}")
}

/// Joint table with the extension columns, X, Y, R, every message (flattened, as `M{i}`), and
/// the memory of each party around every message circuit (as `{k}:{register}`).
fn reversible_table(
    rp: &ReversibleProtocol,
    atoms: &[(usize, usize, usize, f64)],
) -> Result<(JointTable, Vec<(usize, Vec<String>, Vec<String>)>)> {
    rp.validate()?;
    let laws = [&rp.alice_coin, &rp.bob_coin, &rp.public_coin];
    let n = atoms.len() as u128
        * laws
            .iter()
            .map(|l| l.iter().filter(|&&p| p > 0.0).count() as u128)
            .product::<u128>();
    if n > DEFAULT_ATOM_CAP as u128 {
        return Err(QicError::AtomCap {
            atoms: n,
            cap: DEFAULT_ATOM_CAP as u128,
        });
    }
    let probe = rp.run(0, 0, 0, 0, 0);
    // Per message circuit: (k, receiver memory columns, sender memory columns), memory excluding the message.
    let mut layout: Vec<(usize, Vec<String>, Vec<String>)> = Vec::new();
    let mut columns: Vec<String> = [COL_XC, COL_YC, COL_D, COL_X, COL_Y, COL_R]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut snap_regs: Vec<(usize, String)> = Vec::new();
    for (i, (k, c)) in rp.message_circuits().enumerate() {
        columns.push(message_column(i + 1));
        let hold = &probe.snapshots[k + 1].1;
        let s = side(c.owner);
        let mem = |regs: &Vec<String>| -> Vec<String> { regs.iter().filter(|r| !c.message.contains(r)).cloned().collect() };
        let (recv, send) = (mem(&hold[1 - s]), mem(&hold[s]));
        for r in recv.iter().chain(&send) {
            if !snap_regs.contains(&(k + 1, r.clone())) {
                snap_regs.push((k + 1, r.clone()));
            }
        }
        layout.push((
            i + 1,
            recv.iter().map(|r| snapshot_col(k + 1, r)).collect(),
            send.iter().map(|r| snapshot_col(k + 1, r)).collect(),
        ));
    }
    columns.extend(snap_regs.iter().map(|(k, r)| snapshot_col(*k, r)));
    let msg: Vec<(usize, &Circuit)> = rp.message_circuits().collect();
    let mut rows = Vec::with_capacity(n as usize);
    for &(x, y, d, p) in atoms {
        for (sa, &pa) in rp.alice_coin.iter().enumerate().filter(|(_, &q)| q > 0.0) {
            for (sb, &pb) in rp.bob_coin.iter().enumerate().filter(|(_, &q)| q > 0.0) {
                for (r, &pr) in rp.public_coin.iter().enumerate().filter(|(_, &q)| q > 0.0) {
                    let run = rp.run(x, y, sa, sb, r);
                    let mut row = vec![x, y, d, x, y, r];
                    for (k, c) in &msg {
                        let vals = &run.snapshots[k + 1].0;
                        let digits: Vec<usize> = c.message.iter().map(|m| vals[m]).collect();
                        row.push(radix_index(&digits, &c.message_dims()));
                    }
                    for (k, reg) in &snap_regs {
                        row.push(run.snapshots[*k].0[reg]);
                    }
                    rows.push((row, p * pa * pb * pr));
                }
            }
        }
    }
    Ok((JointTable { columns, rows }, layout))
}

fn ext_atoms(ext: &Extension) -> Vec<(usize, usize, usize, f64)> {
    let dims = [ext.x_dim, ext.y_dim, ext.x_dim, ext.y_dim, ext.d_dim];
    ext.probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| {
            let d = radix_digits(i, &dims);
            (d[0], d[1], d[4], p)
        })
        .collect()
}

/// Exact joint table of a run, with the trivial extension.
pub fn run_reversible(rp: &ReversibleProtocol, mu: &InputDistribution) -> Result<JointTable> {
    Ok(reversible_table(rp, &ext_atoms(&Extension::trivial(mu)))?.0)
}

/// Σ over message circuits of I(X'Y'D; M | receiver memory) + I(X'Y'D; M | sender memory).
pub fn ric(rp: &ReversibleProtocol, mu: &InputDistribution, ext: &Extension) -> Result<RicReport> {
    if rp.x_dim != mu.x_dim() || rp.y_dim != mu.y_dim() {
        return arg("input distribution does not match the protocol's input dimensions");
    }
    ext.check(mu)?;
    let (t, layout) = reversible_table(rp, &ext_atoms(ext))?;
    let target = [COL_XC, COL_YC, COL_D];
    let mut terms = Vec::with_capacity(layout.len());
    for ((i, recv, send), (k, c)) in layout.iter().zip(rp.message_circuits()) {
        let m = message_column(*i);
        let rv: Vec<&str> = recv.iter().map(String::as_str).collect();
        let sv: Vec<&str> = send.iter().map(String::as_str).collect();
        terms.push(RicTerm {
            circuit: k + 1,
            sender: c.owner,
            receiver: t.cmi(&target, &[&m], &rv)?,
            sender_side: t.cmi(&target, &[&m], &sv)?,
        });
    }
    Ok(RicReport {
        total: terms.iter().map(|t| t.receiver + t.sender_side).sum(),
        terms,
    })
}

/// Both parties first copy their inputs into X' and Y' and run the protocol on the copies.
pub fn safe_reversible(rp: &ReversibleProtocol) -> Result<ReversibleProtocol> {
    rp.validate()?;
    let map: HashMap<&str, &str> = [(REG_X, X_COPY), (REG_Y, Y_COPY)].into_iter().collect();
    let mut out = rp.clone();
    out.circuits = vec![
        Circuit::copy(Party::Alice, REG_X, X_COPY, rp.x_dim, false)?,
        Circuit::copy(Party::Bob, REG_Y, Y_COPY, rp.y_dim, false)?,
    ];
    out.circuits.extend(rp.circuits.iter().map(|c| c.renamed(&map)));
    let rn = |v: &[String]| -> Vec<String> {
        v.iter()
            .map(|n| map.get(n.as_str()).map_or(n.clone(), |s| s.to_string()))
            .collect()
    };
    out.alice_output = rn(&rp.alice_output);
    out.bob_output = rn(&rp.bob_output);
    Ok(out)
}

/// Runs `p`'s side of the protocol on the given messages from the other party, up to circuit `upto`
/// (exclusive), returning `p`'s register values.
fn local_values(
    rp: &ReversibleProtocol,
    p: Party,
    input: usize,
    coin: usize,
    public: usize,
    history: &[usize],
    upto: usize,
) -> HashMap<String, usize> {
    let mut values: HashMap<String, usize> = HashMap::new();
    for l in rp.initial_registers(p) {
        let v = match l.name.as_str() {
            REG_X | REG_Y => input,
            REG_SA | REG_SB => coin,
            _ => public,
        };
        values.insert(l.name, v);
    }
    let mut m = 0;
    for c in &rp.circuits[..upto] {
        let has_msg = !c.message.is_empty();
        if c.owner == p {
            c.apply(&mut values);
            for name in &c.message {
                values.remove(name);
            }
        } else if has_msg {
            let digits = radix_digits(history[m], &c.message_dims());
            for (name, v) in c.message.iter().zip(digits) {
                values.insert(name.clone(), v);
            }
        }
        if has_msg {
            m += 1;
        }
    }
    values
}

/// A standard protocol with the same messages in which nobody ever discards a message.
pub fn unforget_simulation(rp: &ReversibleProtocol) -> Result<ClassicalProtocol> {
    rp.validate()?;
    if !rp.is_safe() {
        return contract("the simulation expects a safe protocol; apply safe_reversible first");
    }
    let mut pi = ClassicalProtocol::new(rp.x_dim, rp.y_dim);
    pi.public_coin = rp.public_coin.clone();
    let coin_of = |law: &Vec<f64>| if law.len() > 1 { vec![law.clone()] } else { Vec::new() };
    pi.alice_coins = coin_of(&rp.alice_coin);
    pi.bob_coins = coin_of(&rp.bob_coin);
    let msgs: Vec<(usize, Circuit)> = rp.message_circuits().map(|(k, c)| (k, c.clone())).collect();
    for (i, (k, c)) in msgs.iter().enumerate() {
        let p = c.owner;
        let coins: Vec<usize> = (0..pi.coins(p).len()).collect();
        let cd: Vec<usize> = pi.coins(p).iter().map(|l| l.len()).collect();
        let hd = pi.history_dims(i);
        let md = c.message_dims();
        let rule = Rule::from_fn(coins, pi.input_dim(p), &cd, pi.public_coin.len(), &hd, |u, s, r, h| {
            let mut vals = local_values(rp, p, u, s.first().copied().unwrap_or(0), r, h, *k);
            c.apply(&mut vals);
            radix_index(&c.message.iter().map(|m| vals[m]).collect::<Vec<_>>(), &md)
        })?;
        pi.rounds.push(ClassicalRound::fixed(p, md.iter().product(), rule));
    }
    let n = rp.circuits.len();
    for (p, outs) in [(Party::Alice, &rp.alice_output), (Party::Bob, &rp.bob_output)] {
        if outs.is_empty() {
            continue;
        }
        let od: Vec<usize> = outs
            .iter()
            .map(|o| {
                rp.circuits
                    .iter()
                    .rev()
                    .flat_map(|c| c.outputs.iter())
                    .chain(rp.initial_registers(p).iter())
                    .find(|l| &l.name == o)
                    .map_or(1, |l| l.dim)
            })
            .collect();
        let cd: Vec<usize> = pi.coins(p).iter().map(|l| l.len()).collect();
        let hd = pi.history_dims(msgs.len());
        let rule = Rule::from_fn(
            (0..cd.len()).collect(),
            pi.input_dim(p),
            &cd,
            pi.public_coin.len(),
            &hd,
            |u, s, r, h| {
                let vals = local_values(rp, p, u, s.first().copied().unwrap_or(0), r, h, n);
                radix_index(
                    &outs.iter().map(|o| vals.get(o).copied().unwrap_or(0)).collect::<Vec<_>>(),
                    &od,
                )
            },
        )?;
        let o = Some(OutputRule {
            alphabet: od.iter().product(),
            rule,
        });
        match p {
            Party::Alice => pi.alice_output = o,
            Party::Bob => pi.bob_output = o,
        }
    }
    pi.validate()?;
    Ok(pi)
}

/// Runs `a` and `b` side by side on X = (X_a, X_b), Y = (Y_a, Y_b), with coins paired the same way.
/// Circuit k of the product is circuit k of each factor; registers are prefixed `1.` and `2.`.
pub fn tensor(a: &ReversibleProtocol, b: &ReversibleProtocol) -> Result<ReversibleProtocol> {
    a.validate()?;
    b.validate()?;
    let pair = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().flat_map(|p| v.iter().map(move |q| p * q)).collect() };
    let mut out = ReversibleProtocol::new(a.x_dim * b.x_dim, a.y_dim * b.y_dim);
    out.alice_coin = pair(&a.alice_coin, &b.alice_coin);
    out.bob_coin = pair(&a.bob_coin, &b.bob_coin);
    out.public_coin = pair(&a.public_coin, &b.public_coin);
    let prefix = |tag: &str, c: &Circuit| -> Circuit {
        let names: Vec<String> = c
            .inputs
            .iter()
            .chain(&c.ancillas)
            .chain(&c.outputs)
            .map(|l| l.name.clone())
            .collect();
        let owned: Vec<(String, String)> = names.iter().map(|n| (n.clone(), format!("{tag}.{n}"))).collect();
        let map: HashMap<&str, &str> = owned.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        c.renamed(&map)
    };
    // Split every starting register into the two factors' copies.
    for p in [Party::Alice, Party::Bob] {
        let whole = out.initial_registers(p);
        let (ra, rb) = (a.initial_registers(p), b.initial_registers(p));
        let find = |regs: &[RegisterLabel], name: &str| regs.iter().find(|l| l.name == name).map_or(1, |l| l.dim);
        let mut outputs = Vec::new();
        let mut split_dims = Vec::new();
        for l in &whole {
            let (da, db) = (find(&ra, &l.name), find(&rb, &l.name));
            outputs.push(RegisterLabel::new(format!("1.{}", l.name), da));
            outputs.push(RegisterLabel::new(format!("2.{}", l.name), db));
            split_dims.push((da, db));
        }
        let c = Circuit::from_fn(p, whole, vec![], outputs, &[], |d| {
            d.iter().zip(&split_dims).flat_map(|(v, (_, db))| [v / db, v % db]).collect()
        })?;
        out.circuits.push(c);
    }
    let n = a.circuits.len().max(b.circuits.len());
    for k in 0..n {
        let ca = a.circuits.get(k).map(|c| prefix("1", c));
        let cb = b.circuits.get(k).map(|c| prefix("2", c));
        let c = match (ca, cb) {
            (Some(x), Some(y)) => {
                if x.owner != y.owner {
                    return arg(format!("circuit {} has different owners in the two factors", k + 1));
                }
                let (ix, iy) = (x.inputs.len() + x.ancillas.len(), y.inputs.len() + y.ancillas.len());
                let mut inputs = x.inputs.clone();
                inputs.extend(y.inputs.iter().cloned());
                let mut ancillas = x.ancillas.clone();
                ancillas.extend(y.ancillas.iter().cloned());
                let mut outputs = x.outputs.clone();
                outputs.extend(y.outputs.iter().cloned());
                let mut message: Vec<&str> = x.message.iter().map(String::as_str).collect();
                message.extend(y.message.iter().map(String::as_str));
                let (nxi, nyi) = (x.inputs.len(), y.inputs.len());
                let mut dx = dims_of(&x.inputs);
                dx.extend(dims_of(&x.ancillas));
                let mut dy = dims_of(&y.inputs);
                dy.extend(dims_of(&y.ancillas));
                let (ox, oy) = (dims_of(&x.outputs), dims_of(&y.outputs));
                debug_assert_eq!(ix + iy, inputs.len() + ancillas.len());
                Circuit::from_fn(x.owner, inputs, ancillas, outputs, &message, |d| {
                    // d = [x inputs, y inputs, x ancillas, y ancillas]
                    let nxa = ix - nxi;
                    let mut vx: Vec<usize> = d[..nxi].to_vec();
                    vx.extend_from_slice(&d[nxi + nyi..nxi + nyi + nxa]);
                    let mut vy: Vec<usize> = d[nxi..nxi + nyi].to_vec();
                    vy.extend_from_slice(&d[nxi + nyi + nxa..]);
                    let mut o = radix_digits(x.table[radix_index(&vx, &dx)], &ox);
                    o.extend(radix_digits(y.table[radix_index(&vy, &dy)], &oy));
                    o
                })?
            }
            (Some(x), None) => x,
            (None, Some(y)) => y,
            (None, None) => unreachable!(),
        };
        out.circuits.push(c);
    }
    out.alice_output = a
        .alice_output
        .iter()
        .map(|o| format!("1.{o}"))
        .chain(b.alice_output.iter().map(|o| format!("2.{o}")))
        .collect();
    out.bob_output = a
        .bob_output
        .iter()
        .map(|o| format!("1.{o}"))
        .chain(b.bob_output.iter().map(|o| format!("2.{o}")))
        .collect();
    out.validate()?;
    Ok(out)
}

/// Marginal of a joint law on X = (X1, X2), Y = (Y1, Y2) onto one factor pair.
pub fn factor_marginal(
    mu: &InputDistribution,
    x_dims: (usize, usize),
    y_dims: (usize, usize),
    first: bool,
) -> Result<InputDistribution> {
    let (xd, yd) = if first { (x_dims.0, y_dims.0) } else { (x_dims.1, y_dims.1) };
    let mut probs = vec![0.0; xd * yd];
    for x in 0..mu.x_dim() {
        for y in 0..mu.y_dim() {
            let (a, b) = if first {
                (x / x_dims.1, y / y_dims.1)
            } else {
                (x % x_dims.1, y % y_dims.1)
            };
            probs[a * yd + b] += mu.get(x, y);
        }
    }
    InputDistribution::new(xd, yd, probs)
}

/// Transcript columns of a reversible run, as produced by [`run_reversible`], against [`COL_R`].
pub fn transcript_columns(rp: &ReversibleProtocol) -> Vec<String> {
    let mut v = vec![COL_X.to_string(), COL_Y.to_string(), COL_R.to_string()];
    v.extend((1..=rp.message_circuits().count()).map(message_column));
    v
}
