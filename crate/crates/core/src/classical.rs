//! Standard classical protocols with public and private coins, evaluated by exhaustive enumeration.
//!
//! A message rule is a truth table over the speaker's view: its input, the private coin components
//! it reads, the public coin and the transcript so far, all flattened big-endian in that order.

use std::collections::HashMap;

use crate::entropy::xlogx;
use crate::error::{arg, QicError, Result};
use crate::limits::DEFAULT_ATOM_CAP;
use crate::protocol::{Channel, Party};
use crate::state::InputDistribution;
use serde::{Deserialize, Serialize};

const PROB_TOL: f64 = 1e-10;

/// Flattens `digits` in mixed radix `dims`, most significant first.
pub fn radix_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d)
}

/// Inverse of [`radix_index`].
pub fn radix_digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() || p.iter().any(|v| !(*v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > PROB_TOL {
        return arg(format!("{what} is not a probability distribution"));
    }
    Ok(())
}

/// Who speaks in a round: fixed in advance, or read off the transcript so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Speaker {
    Fixed(Party),
    /// Indexed by the flattened history of earlier messages.
    Transcript(Vec<Party>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// Indices into the owner's private coin components read by this rule.
    pub coins: Vec<usize>,
    /// Value for every (input, coins…, public coin, history…).
    pub table: Vec<usize>,
}

impl Rule {
    /// Tabulates `f(input, coin values, public coin, history)` over the given dimensions.
    pub fn from_fn<F>(
        coins: Vec<usize>,
        input_dim: usize,
        coin_dims: &[usize],
        public_dim: usize,
        history: &[usize],
        f: F,
    ) -> Result<Self>
    where
        F: Fn(usize, &[usize], usize, &[usize]) -> usize,
    {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(coin_dims);
        dims.push(public_dim);
        dims.extend_from_slice(history);
        let n = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
        if n > DEFAULT_ATOM_CAP {
            return Err(QicError::AtomCap {
                atoms: n as u128,
                cap: DEFAULT_ATOM_CAP as u128,
            });
        }
        let k = coin_dims.len();
        let table = (0..n)
            .map(|i| {
                let d = radix_digits(i, &dims);
                f(d[0], &d[1..1 + k], d[1 + k], &d[2 + k..])
            })
            .collect();
        Ok(Self { coins, table })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalRound {
    pub speaker: Speaker,
    pub alphabet: usize,
    /// Rule used when Alice speaks.
    pub alice: Option<Rule>,
    /// Rule used when Bob speaks.
    pub bob: Option<Rule>,
}

impl ClassicalRound {
    pub fn fixed(owner: Party, alphabet: usize, rule: Rule) -> Self {
        let (alice, bob) = match owner {
            Party::Alice => (Some(rule), None),
            Party::Bob => (None, Some(rule)),
        };
        Self {
            speaker: Speaker::Fixed(owner),
            alphabet,
            alice,
            bob,
        }
    }

    pub fn rule(&self, p: Party) -> Option<&Rule> {
        match p {
            Party::Alice => self.alice.as_ref(),
            Party::Bob => self.bob.as_ref(),
        }
    }
}

/// Output computed from the party's view of the full transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRule {
    pub alphabet: usize,
    pub rule: Rule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalProtocol {
    pub x_dim: usize,
    pub y_dim: usize,
    /// Distribution of the shared coin (a single letter when there is none).
    pub public_coin: Vec<f64>,
    /// Independent private coin components of each party.
    pub alice_coins: Vec<Vec<f64>>,
    pub bob_coins: Vec<Vec<f64>>,
    pub rounds: Vec<ClassicalRound>,
    pub alice_output: Option<OutputRule>,
    pub bob_output: Option<OutputRule>,
}

impl ClassicalProtocol {
    pub fn new(x_dim: usize, y_dim: usize) -> Self {
        Self {
            x_dim,
            y_dim,
            public_coin: vec![1.0],
            alice_coins: Vec::new(),
            bob_coins: Vec::new(),
            rounds: Vec::new(),
            alice_output: None,
            bob_output: None,
        }
    }

    pub fn input_dim(&self, p: Party) -> usize {
        match p {
            Party::Alice => self.x_dim,
            Party::Bob => self.y_dim,
        }
    }

    pub fn coins(&self, p: Party) -> &Vec<Vec<f64>> {
        match p {
            Party::Alice => &self.alice_coins,
            Party::Bob => &self.bob_coins,
        }
    }

    /// Message alphabets of the first `n` rounds.
    pub fn history_dims(&self, n: usize) -> Vec<usize> {
        self.rounds[..n].iter().map(|r| r.alphabet).collect()
    }

    /// Full dimension list a rule of `p` reading `coins` after `n` messages is indexed by.
    pub fn rule_dims(&self, p: Party, coins: &[usize], n: usize) -> Vec<usize> {
        let mut dims = vec![self.input_dim(p)];
        dims.extend(coins.iter().map(|&c| self.coins(p)[c].len()));
        dims.push(self.public_coin.len());
        dims.extend(self.history_dims(n));
        dims
    }

    fn eval(&self, p: Party, rule: &Rule, input: usize, coins: &[usize], public: usize, history: &[usize]) -> usize {
        let dims = self.rule_dims(p, &rule.coins, history.len());
        let mut digits = vec![input];
        digits.extend(rule.coins.iter().map(|&c| coins[c]));
        digits.push(public);
        digits.extend_from_slice(history);
        rule.table[radix_index(&digits, &dims)]
    }

    /// Speaker of round `k` (0-based) after `history`.
    pub fn speaker(&self, k: usize, history: &[usize]) -> Party {
        match &self.rounds[k].speaker {
            Speaker::Fixed(p) => *p,
            Speaker::Transcript(t) => t[radix_index(history, &self.history_dims(k))],
        }
    }

    /// Problems with table shapes, values and distributions.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.x_dim == 0 || self.y_dim == 0 {
            v.push("input dimensions must be positive".to_string());
        }
        let mut dist = |p: &[f64], what: String| {
            if check_distribution(p, &what).is_err() {
                v.push(format!("{what} is not a probability distribution"));
            }
        };
        dist(&self.public_coin, "public coin".into());
        for (who, cs) in [("Alice", &self.alice_coins), ("Bob", &self.bob_coins)] {
            for (i, c) in cs.iter().enumerate() {
                dist(c, format!("{who}'s coin {i}"));
            }
        }
        let check_rule = |v: &mut Vec<String>, p: Party, rule: &Rule, n: usize, alphabet: usize, what: &str| {
            if rule.coins.iter().any(|&c| c >= self.coins(p).len()) {
                v.push(format!("{what}: unknown coin component"));
                return;
            }
            let size = product(&self.rule_dims(p, &rule.coins, n));
            if rule.table.len() != size {
                v.push(format!("{what}: table has {} entries, expected {size}", rule.table.len()));
            } else if rule.table.iter().any(|&m| m >= alphabet) {
                v.push(format!("{what}: value outside the alphabet"));
            }
        };
        for (k, r) in self.rounds.iter().enumerate() {
            let what = format!("round {}", k + 1);
            if r.alphabet == 0 {
                v.push(format!("{what}: empty alphabet"));
                continue;
            }
            let needed: Vec<Party> = match &r.speaker {
                Speaker::Fixed(p) => vec![*p],
                Speaker::Transcript(t) => {
                    if t.len() != product(&self.history_dims(k)) {
                        v.push(format!("{what}: speaker table has the wrong size"));
                    }
                    vec![Party::Alice, Party::Bob]
                }
            };
            for p in [Party::Alice, Party::Bob] {
                match r.rule(p) {
                    Some(rule) => check_rule(&mut v, p, rule, k, r.alphabet, &format!("{what} ({p})")),
                    None if needed.contains(&p) => v.push(format!("{what}: missing rule for {p}")),
                    None => {}
                }
            }
        }
        for (p, o) in [(Party::Alice, &self.alice_output), (Party::Bob, &self.bob_output)] {
            if let Some(o) = o {
                check_rule(&mut v, p, &o.rule, self.rounds.len(), o.alphabet, &format!("{p}'s output"));
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

    /// Σ lg |alphabet| over rounds.
    pub fn communication_bits(&self) -> f64 {
        self.rounds.iter().map(|r| (r.alphabet as f64).log2()).sum()
    }

    /// Fixed speakers alternating from Alice.
    pub fn is_alternating(&self) -> bool {
        self.rounds.iter().enumerate().all(|(k, r)| {
            let want = if k % 2 == 0 { Party::Alice } else { Party::Bob };
            r.speaker == Speaker::Fixed(want)
        })
    }
}

// ---------------------------------------------------------------------------
// Joint tables

/// Exact joint distribution over named discrete columns; rows may repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub columns: Vec<String>,
    pub rows: Vec<(Vec<usize>, f64)>,
}

impl JointTable {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| QicError::Argument(format!("unknown column {name}")))
    }

    fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.column(n)).collect()
    }

    pub fn total(&self) -> f64 {
        self.rows.iter().map(|r| r.1).sum()
    }

    pub fn marginal(&self, names: &[&str]) -> Result<HashMap<Vec<usize>, f64>> {
        let pos = self.positions(names)?;
        let mut m: HashMap<Vec<usize>, f64> = HashMap::new();
        for (vals, p) in &self.rows {
            *m.entry(pos.iter().map(|&i| vals[i]).collect()).or_insert(0.0) += p;
        }
        Ok(m)
    }

    /// Shannon entropy of the named columns, in bits.
    pub fn entropy(&self, names: &[&str]) -> Result<f64> {
        Ok(self.marginal(names)?.values().map(|&p| xlogx(p)).sum())
    }

    /// I(A; B | C) in bits.
    pub fn cmi(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        for x in a {
            if b.contains(x) || c.contains(x) {
                return arg(format!("column {x} appears in two arguments"));
            }
        }
        if b.iter().any(|x| c.contains(x)) {
            return arg("conditioning set overlaps the second argument");
        }
        let ac: Vec<&str> = a.iter().chain(c).copied().collect();
        let bc: Vec<&str> = b.iter().chain(c).copied().collect();
        let abc: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
        Ok(self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(c)? - self.entropy(&abc)?)
    }
}

pub const COL_X: &str = "X";
pub const COL_Y: &str = "Y";
pub const COL_R: &str = "R";
pub const COL_SA: &str = "SA";
pub const COL_SB: &str = "SB";
pub const COL_AOUT: &str = "AOUT";
pub const COL_BOUT: &str = "BOUT";
pub const COL_XC: &str = "X'";
pub const COL_YC: &str = "Y'";
pub const COL_D: &str = "D";

pub fn message_column(k: usize) -> String {
    format!("M{k}")
}

/// Joint distribution of (X, Y, X', Y', D) with X' = X and Y' = Y.
#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    pub x_dim: usize,
    pub y_dim: usize,
    pub d_dim: usize,
    /// Indexed (x, y, x', y', d) big-endian.
    pub probs: Vec<f64>,
}

impl Extension {
    fn dims(&self) -> [usize; 5] {
        [self.x_dim, self.y_dim, self.x_dim, self.y_dim, self.d_dim]
    }

    /// D drawn from `kernel(x, y)`, a distribution over `d_dim` letters.
    pub fn channel<F>(mu: &InputDistribution, d_dim: usize, kernel: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Vec<f64>,
    {
        let (xd, yd) = (mu.x_dim(), mu.y_dim());
        let mut probs = vec![0.0; xd * yd * xd * yd * d_dim];
        let dims = [xd, yd, xd, yd, d_dim];
        for x in 0..xd {
            for y in 0..yd {
                let k = kernel(x, y);
                check_distribution(&k, "extension kernel")?;
                if k.len() != d_dim {
                    return arg("extension kernel has the wrong length");
                }
                for (d, pd) in k.iter().enumerate() {
                    probs[radix_index(&[x, y, x, y, d], &dims)] = mu.get(x, y) * pd;
                }
            }
        }
        Ok(Self {
            x_dim: xd,
            y_dim: yd,
            d_dim,
            probs,
        })
    }

    pub fn trivial(mu: &InputDistribution) -> Self {
        Self::channel(mu, 1, |_, _| vec![1.0]).expect("trivial kernel")
    }

    /// D = f(x, y).
    pub fn function<F: Fn(usize, usize) -> usize>(mu: &InputDistribution, d_dim: usize, f: F) -> Result<Self> {
        Self::channel(mu, d_dim, |x, y| {
            let mut v = vec![0.0; d_dim];
            v[f(x, y).min(d_dim - 1)] = 1.0;
            v
        })
    }

    /// Checks the copy property and that the (X, Y) marginal is `mu`.
    pub fn check(&self, mu: &InputDistribution) -> Result<()> {
        if self.x_dim != mu.x_dim() || self.y_dim != mu.y_dim() || self.probs.len() != product(&self.dims()) {
            return arg("extension dimensions do not match the input distribution");
        }
        check_distribution(&self.probs, "extension")?;
        let mut marg = vec![0.0; self.x_dim * self.y_dim];
        for (i, &p) in self.probs.iter().enumerate() {
            let d = radix_digits(i, &self.dims());
            if p > 0.0 && (d[0] != d[2] || d[1] != d[3]) {
                return arg("extension copies differ from the inputs");
            }
            marg[d[0] * self.y_dim + d[1]] += p;
        }
        if marg.iter().zip(mu.probabilities()).any(|(a, b)| (a - b).abs() > PROB_TOL) {
            return arg("extension marginal on the inputs is not the input distribution");
        }
        Ok(())
    }

    /// Nonzero (x, y, d, p) atoms.
    fn atoms(&self) -> Vec<(usize, usize, usize, f64)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| {
                let d = radix_digits(i, &self.dims());
                (d[0], d[1], d[4], p)
            })
            .collect()
    }
}

fn coin_tuples(coins: &[Vec<f64>]) -> Vec<(Vec<usize>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for c in coins {
        let mut next = Vec::new();
        for (t, p) in &out {
            for (v, &q) in c.iter().enumerate() {
                if q > 0.0 {
                    let mut t2 = t.clone();
                    t2.push(v);
                    next.push((t2, p * q));
                }
            }
        }
        out = next;
    }
    out
}

fn coin_dims(coins: &[Vec<f64>]) -> Vec<usize> {
    coins.iter().map(|c| c.len()).collect()
}

/// One deterministic execution: the transcript and the two outputs.
pub fn execute(pi: &ClassicalProtocol, x: usize, y: usize, sa: &[usize], sb: &[usize], r: usize) -> (Vec<usize>, usize, usize) {
    let mut h = Vec::with_capacity(pi.rounds.len());
    for (k, round) in pi.rounds.iter().enumerate() {
        let p = pi.speaker(k, &h);
        let rule = round.rule(p).expect("validated");
        let (input, coins) = match p {
            Party::Alice => (x, sa),
            Party::Bob => (y, sb),
        };
        h.push(pi.eval(p, rule, input, coins, r, &h));
    }
    let a = pi
        .alice_output
        .as_ref()
        .map_or(0, |o| pi.eval(Party::Alice, &o.rule, x, sa, r, &h));
    let b = pi
        .bob_output
        .as_ref()
        .map_or(0, |o| pi.eval(Party::Bob, &o.rule, y, sb, r, &h));
    (h, a, b)
}

fn enumerate(pi: &ClassicalProtocol, atoms: &[(usize, usize, usize, f64)], with_ext: bool) -> Result<JointTable> {
    pi.validate()?;
    let sa = coin_tuples(&pi.alice_coins);
    let sb = coin_tuples(&pi.bob_coins);
    let nr = pi.public_coin.iter().filter(|&&p| p > 0.0).count();
    let n = atoms.len() as u128 * sa.len() as u128 * sb.len() as u128 * nr as u128;
    if n > DEFAULT_ATOM_CAP as u128 {
        return Err(QicError::AtomCap {
            atoms: n,
            cap: DEFAULT_ATOM_CAP as u128,
        });
    }
    let (da, db) = (coin_dims(&pi.alice_coins), coin_dims(&pi.bob_coins));
    let mut columns: Vec<String> = [COL_X, COL_Y, COL_R, COL_SA, COL_SB].iter().map(|s| s.to_string()).collect();
    columns.extend((1..=pi.rounds.len()).map(message_column));
    columns.push(COL_AOUT.into());
    columns.push(COL_BOUT.into());
    if with_ext {
        columns.extend([COL_XC, COL_YC, COL_D].iter().map(|s| s.to_string()));
    }
    let mut rows = Vec::with_capacity(n as usize);
    for &(x, y, d, p) in atoms {
        for (r, &pr) in pi.public_coin.iter().enumerate() {
            if pr <= 0.0 {
                continue;
            }
            for (a, pa) in &sa {
                for (b, pb) in &sb {
                    let (h, ao, bo) = execute(pi, x, y, a, b, r);
                    let mut row = vec![x, y, r, radix_index(a, &da), radix_index(b, &db)];
                    row.extend(h);
                    row.push(ao);
                    row.push(bo);
                    if with_ext {
                        row.extend([x, y, d]);
                    }
                    rows.push((row, p * pr * pa * pb));
                }
            }
        }
    }
    Ok(JointTable { columns, rows })
}

fn input_atoms(mu: &InputDistribution) -> Vec<(usize, usize, usize, f64)> {
    let mut out = Vec::new();
    for x in 0..mu.x_dim() {
        for y in 0..mu.y_dim() {
            let p = mu.get(x, y);
            if p > 0.0 {
                out.push((x, y, 0, p));
            }
        }
    }
    out
}

fn check_dims(pi: &ClassicalProtocol, mu: &InputDistribution) -> Result<()> {
    if pi.x_dim != mu.x_dim() || pi.y_dim != mu.y_dim() {
        return arg("input distribution does not match the protocol's input dimensions");
    }
    Ok(())
}

/// Exact joint distribution of inputs, coins, transcript and outputs.
pub fn run_classical(pi: &ClassicalProtocol, mu: &InputDistribution) -> Result<JointTable> {
    check_dims(pi, mu)?;
    enumerate(pi, &input_atoms(mu), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassicalCost {
    pub a_to_b: f64,
    pub b_to_a: f64,
}

impl ClassicalCost {
    pub fn total(&self) -> f64 {
        self.a_to_b + self.b_to_a
    }
}

fn transcript_columns(n: usize) -> Vec<String> {
    (1..=n).map(message_column).collect()
}

/// IC_{A→B} = I(X; M | R Y) and IC_{B→A} = I(Y; M | R X).
pub fn ic_of_table(t: &JointTable, rounds: usize) -> Result<ClassicalCost> {
    let m = transcript_columns(rounds);
    let m: Vec<&str> = m.iter().map(String::as_str).collect();
    Ok(ClassicalCost {
        a_to_b: t.cmi(&[COL_X], &m, &[COL_R, COL_Y])?,
        b_to_a: t.cmi(&[COL_Y], &m, &[COL_R, COL_X])?,
    })
}

pub fn ic(pi: &ClassicalProtocol, mu: &InputDistribution) -> Result<ClassicalCost> {
    ic_of_table(&run_classical(pi, mu)?, pi.rounds.len())
}

/// Σ_i I(X'Y'D; M_i | R S_B Y M_<i) + I(X'Y'D; M_i | R S_A X M_<i), with per-round terms.
pub fn ic_extended(pi: &ClassicalProtocol, mu: &InputDistribution, ext: &Extension) -> Result<(f64, Vec<(f64, f64)>)> {
    check_dims(pi, mu)?;
    ext.check(mu)?;
    let t = enumerate(pi, &ext.atoms(), true)?;
    let m = transcript_columns(pi.rounds.len());
    let target = [COL_XC, COL_YC, COL_D];
    let mut terms = Vec::with_capacity(m.len());
    for k in 0..m.len() {
        let mut bob: Vec<&str> = vec![COL_R, COL_SB, COL_Y];
        let mut alice: Vec<&str> = vec![COL_R, COL_SA, COL_X];
        bob.extend(m[..k].iter().map(String::as_str));
        alice.extend(m[..k].iter().map(String::as_str));
        terms.push((t.cmi(&target, &[&m[k]], &bob)?, t.cmi(&target, &[&m[k]], &alice)?));
    }
    Ok((terms.iter().map(|(a, b)| a + b).sum(), terms))
}

/// Largest H(M_i | speaker's view) over rounds; zero for any well-formed table.
pub fn markov_violation(pi: &ClassicalProtocol, t: &JointTable) -> Result<f64> {
    let m = transcript_columns(pi.rounds.len());
    let mut worst: f64 = 0.0;
    for (k, r) in pi.rounds.iter().enumerate() {
        let mut cond: Vec<&str> = match r.speaker {
            Speaker::Fixed(Party::Alice) => vec![COL_X, COL_R, COL_SA],
            Speaker::Fixed(Party::Bob) => vec![COL_Y, COL_R, COL_SB],
            Speaker::Transcript(_) => vec![COL_X, COL_Y, COL_R, COL_SA, COL_SB],
        };
        cond.extend(m[..k].iter().map(String::as_str));
        let mut all = cond.clone();
        all.push(&m[k]);
        worst = worst.max(t.entropy(&all)? - t.entropy(&cond)?);
    }
    Ok(worst)
}

/// Joint distribution of (x, y, Alice's output, Bob's output).
pub fn classical_channel(pi: &ClassicalProtocol, mu: &InputDistribution) -> Result<Channel> {
    let t = run_classical(pi, mu)?;
    let a_dim = pi.alice_output.as_ref().map_or(1, |o| o.alphabet);
    let b_dim = pi.bob_output.as_ref().map_or(1, |o| o.alphabet);
    let mut probs = vec![0.0; pi.x_dim * pi.y_dim * a_dim * b_dim];
    for (k, p) in t.marginal(&[COL_X, COL_Y, COL_AOUT, COL_BOUT])? {
        probs[radix_index(&k, &[pi.x_dim, pi.y_dim, a_dim, b_dim])] += p;
    }
    Ok(Channel {
        x_dim: pi.x_dim,
        y_dim: pi.y_dim,
        a_dim,
        b_dim,
        probs,
    })
}

// ---------------------------------------------------------------------------
// Padding

#[derive(Debug, Clone, Copy)]
enum Slot {
    /// Nothing but the pad letter is ever sent.
    Pad,
    /// Carries round `k` whenever the slot's party is the original speaker.
    Carry { k: usize },
}

/// Fixed alternating order from Alice. Each round whose speaker is read off the transcript becomes
/// two slots; a slot whose party is silent carries the pad letter, which is one past the original
/// alphabet. Slots that only ever carry the pad letter have a one-letter alphabet.
pub fn pad_messages(pi: &ClassicalProtocol) -> Result<ClassicalProtocol> {
    pi.validate()?;
    if pi.is_alternating() {
        return Ok(pi.clone());
    }
    let mut slots: Vec<(Party, Slot, usize)> = Vec::new();
    let mut next = Party::Alice;
    for (k, r) in pi.rounds.iter().enumerate() {
        match &r.speaker {
            Speaker::Fixed(p) => {
                if *p != next {
                    slots.push((next, Slot::Pad, 1));
                    next = next.other();
                }
                slots.push((*p, Slot::Carry { k }, r.alphabet));
                next = next.other();
            }
            Speaker::Transcript(_) => {
                for _ in 0..2 {
                    slots.push((next, Slot::Carry { k }, r.alphabet + 1));
                    next = next.other();
                }
            }
        }
    }
    let dims: Vec<usize> = slots.iter().map(|s| s.2).collect();
    // Recovers the original transcript from a padded one; None on histories that cannot occur.
    let decode = |h: &[usize]| -> Option<Vec<usize>> {
        let mut out: Vec<usize> = Vec::new();
        let mut pending: Option<(usize, usize)> = None;
        for (j, &v) in h.iter().enumerate() {
            match slots[j].1 {
                Slot::Pad => {}
                Slot::Carry { k } => {
                    let transcript = matches!(pi.rounds[k].speaker, Speaker::Transcript(_));
                    if !transcript {
                        out.push(v);
                        continue;
                    }
                    let pad = pi.rounds[k].alphabet;
                    match pending {
                        None => pending = Some((k, v)),
                        Some((_, first)) => {
                            pending = None;
                            match (first == pad, v == pad) {
                                (false, true) => out.push(first),
                                (true, false) => out.push(v),
                                _ => return None,
                            }
                        }
                    }
                }
            }
        }
        Some(out)
    };
    let mut padded = ClassicalProtocol {
        rounds: Vec::with_capacity(slots.len()),
        alice_output: None,
        bob_output: None,
        ..pi.clone()
    };
    for (j, &(party, slot, alphabet)) in slots.iter().enumerate() {
        let own_coins: Vec<usize> = (0..pi.coins(party).len()).collect();
        let cd = coin_dims(pi.coins(party));
        let rule = Rule::from_fn(
            own_coins,
            pi.input_dim(party),
            &cd,
            pi.public_coin.len(),
            &dims[..j],
            |u, c, r, h| {
                let Slot::Carry { k } = slot else {
                    return 0;
                };
                let Some(orig) = decode(h) else {
                    return 0;
                };
                if orig.len() != k {
                    return 0;
                }
                if pi.speaker(k, &orig) != party {
                    return pi.rounds[k].alphabet;
                }
                let rl = pi.rounds[k].rule(party).expect("validated");
                pi.eval(party, rl, u, c, r, &orig)
            },
        )?;
        padded.rounds.push(ClassicalRound::fixed(party, alphabet, rule));
    }
    for party in [Party::Alice, Party::Bob] {
        let o = match party {
            Party::Alice => &pi.alice_output,
            Party::Bob => &pi.bob_output,
        };
        if let Some(o) = o {
            let own_coins: Vec<usize> = (0..pi.coins(party).len()).collect();
            let cd = coin_dims(pi.coins(party));
            let rule = Rule::from_fn(
                own_coins,
                pi.input_dim(party),
                &cd,
                pi.public_coin.len(),
                &dims,
                |u, c, r, h| {
                    decode(h)
                        .filter(|t| t.len() == pi.rounds.len())
                        .map_or(0, |t| pi.eval(party, &o.rule, u, c, r, &t))
                },
            )?;
            let out = Some(OutputRule {
                alphabet: o.alphabet,
                rule,
            });
            match party {
                Party::Alice => padded.alice_output = out,
                Party::Bob => padded.bob_output = out,
            }
        }
    }
    Ok(padded)
}

// ---------------------------------------------------------------------------
// Canonical randomness

/// Conditional law of a party's next letter given its view, with the private coins integrated out
/// under their posterior given the transcript so far.
fn view_law(
    pi: &ClassicalProtocol,
    p: Party,
    tuples: &[(Vec<usize>, f64)],
    upto: usize,
    letter: impl Fn(&[usize]) -> usize,
    alphabet: usize,
    input: usize,
    public: usize,
    history: &[usize],
) -> Option<Vec<f64>> {
    let mut law = vec![0.0; alphabet];
    let mut mass = 0.0;
    'coins: for (s, w) in tuples {
        for j in 0..upto {
            if pi.speaker(j, &history[..j]) == p {
                let rl = pi.rounds[j].rule(p).expect("validated");
                if pi.eval(p, rl, input, s, public, &history[..j]) != history[j] {
                    continue 'coins;
                }
            }
        }
        law[letter(s)] += w;
        mass += w;
    }
    (mass > 0.0).then(|| law.into_iter().map(|v| v / mass).collect())
}

/// Replaces private coins by fresh per-round randomness: for every view of the speaker, an independent
/// coin distributed as the next message given that view. Deterministic views get no coin.
pub fn canonical_randomness_form(pi: &ClassicalProtocol) -> Result<ClassicalProtocol> {
    pi.validate()?;
    if pi.alice_coins.is_empty() && pi.bob_coins.is_empty() {
        return Ok(pi.clone());
    }
    let tuples = [coin_tuples(&pi.alice_coins), coin_tuples(&pi.bob_coins)];
    let mut out = ClassicalProtocol {
        alice_coins: Vec::new(),
        bob_coins: Vec::new(),
        rounds: Vec::with_capacity(pi.rounds.len()),
        alice_output: None,
        bob_output: None,
        ..pi.clone()
    };
    let n = pi.rounds.len();
    // One pass per rule: (round index or None for an output, party).
    let mut jobs: Vec<(Option<usize>, Party)> = Vec::new();
    for k in 0..n {
        for p in [Party::Alice, Party::Bob] {
            if pi.rounds[k].rule(p).is_some() {
                jobs.push((Some(k), p));
            }
        }
    }
    for p in [Party::Alice, Party::Bob] {
        let has = match p {
            Party::Alice => pi.alice_output.is_some(),
            Party::Bob => pi.bob_output.is_some(),
        };
        if has {
            jobs.push((None, p));
        }
    }
    let mut rules: HashMap<(Option<usize>, Party), Rule> = HashMap::new();
    for (k, p) in jobs {
        let (len, alphabet, src) = match k {
            Some(k) => (k, pi.rounds[k].alphabet, pi.rounds[k].rule(p).expect("listed")),
            None => {
                let o = match p {
                    Party::Alice => pi.alice_output.as_ref(),
                    Party::Bob => pi.bob_output.as_ref(),
                }
                .expect("listed");
                (n, o.alphabet, &o.rule)
            }
        };
        let hd = pi.history_dims(len);
        let view_dims = {
            let mut d = vec![pi.input_dim(p), pi.public_coin.len()];
            d.extend_from_slice(&hd);
            d
        };
        let ti = match p {
            Party::Alice => &tuples[0],
            Party::Bob => &tuples[1],
        };
        // Per view: Ok(letter) when deterministic, Err(coin index) otherwise.
        let mut per_view: Vec<std::result::Result<usize, usize>> = Vec::with_capacity(product(&view_dims));
        let mut new_coins: Vec<usize> = Vec::new();
        for v in 0..product(&view_dims) {
            let d = radix_digits(v, &view_dims);
            let (u, r, h) = (d[0], d[1], &d[2..]);
            let speaks = k.is_none_or(|k| pi.speaker(k, h) == p);
            let law = if speaks {
                view_law(pi, p, ti, len, |s| pi.eval(p, src, u, s, r, h), alphabet, u, r, h)
            } else {
                None
            };
            match law {
                Some(l) if l.iter().filter(|&&q| q > PROB_TOL).count() > 1 => {
                    let coins = match p {
                        Party::Alice => &mut out.alice_coins,
                        Party::Bob => &mut out.bob_coins,
                    };
                    coins.push(l);
                    new_coins.push(coins.len() - 1);
                    per_view.push(Err(new_coins.len() - 1));
                }
                Some(l) => per_view.push(Ok(l.iter().position(|&q| q > PROB_TOL).unwrap_or(0))),
                None => per_view.push(Ok(0)),
            }
        }
        let cd = vec![alphabet; new_coins.len()];
        let rule = Rule::from_fn(new_coins, pi.input_dim(p), &cd, pi.public_coin.len(), &hd, |u, c, r, h| {
            let mut d = vec![u, r];
            d.extend_from_slice(h);
            match per_view[radix_index(&d, &view_dims)] {
                Ok(m) => m,
                Err(i) => c[i],
            }
        })?;
        rules.insert((k, p), rule);
    }
    for (k, r) in pi.rounds.iter().enumerate() {
        out.rounds.push(ClassicalRound {
            speaker: r.speaker.clone(),
            alphabet: r.alphabet,
            alice: rules.remove(&(Some(k), Party::Alice)),
            bob: rules.remove(&(Some(k), Party::Bob)),
        });
    }
    out.alice_output = pi.alice_output.as_ref().map(|o| OutputRule {
        alphabet: o.alphabet,
        rule: rules.remove(&(None, Party::Alice)).expect("computed"),
    });
    out.bob_output = pi.bob_output.as_ref().map(|o| OutputRule {
        alphabet: o.alphabet,
        rule: rules.remove(&(None, Party::Bob)).expect("computed"),
    });
    out.validate()?;
    Ok(out)
}

/// Each private coin component is read by at most one rule.
pub fn coins_used_once(pi: &ClassicalProtocol) -> bool {
    for p in [Party::Alice, Party::Bob] {
        let mut seen = vec![0usize; pi.coins(p).len()];
        let outs = match p {
            Party::Alice => pi.alice_output.as_ref(),
            Party::Bob => pi.bob_output.as_ref(),
        };
        for rule in pi.rounds.iter().filter_map(|r| r.rule(p)).chain(outs.map(|o| &o.rule)) {
            for &c in &rule.coins {
                seen[c] += 1;
            }
        }
        if seen.iter().any(|&s| s > 1) {
            return false;
        }
    }
    true
}

/// Largest absolute difference between the (X, Y, R, M…) marginals of two runs.
pub fn transcript_distance(a: &JointTable, b: &JointTable, rounds: usize) -> Result<f64> {
    let mut cols: Vec<String> = vec![COL_X.into(), COL_Y.into(), COL_R.into()];
    cols.extend(transcript_columns(rounds));
    let c: Vec<&str> = cols.iter().map(String::as_str).collect();
    let (ma, mb) = (a.marginal(&c)?, b.marginal(&c)?);
    let mut worst: f64 = 0.0;
    for (k, v) in &ma {
        worst = worst.max((v - mb.get(k).copied().unwrap_or(0.0)).abs());
    }
    for (k, v) in &mb {
        if !ma.contains_key(k) {
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn send_x() -> ClassicalProtocol {
        let mut p = ClassicalProtocol::new(2, 2);
        let rule = Rule::from_fn(vec![], 2, &[], 1, &[], |x, _, _, _| x).unwrap();
        p.rounds.push(ClassicalRound::fixed(Party::Alice, 2, rule));
        p
    }

    #[test]
    fn radix_round_trip() {
        let dims = [3, 2, 4];
        for i in 0..24 {
            assert_eq!(radix_index(&radix_digits(i, &dims), &dims), i);
        }
    }

    #[test]
    fn sending_x_costs_one_bit() {
        let v = ic(&send_x(), &InputDistribution::uniform(2, 2)).unwrap();
        assert!((v.a_to_b - 1.0).abs() < 1e-12 && v.b_to_a.abs() < 1e-12);
    }

    #[test]
    fn markov_property_holds() {
        let p = send_x();
        let t = run_classical(&p, &InputDistribution::uniform(2, 2)).unwrap();
        assert!(markov_violation(&p, &t).unwrap() < 1e-12);
        assert!((t.total() - 1.0).abs() < 1e-12);
    }
}
