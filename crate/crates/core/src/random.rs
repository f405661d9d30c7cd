//! Seedable generators for random states, maps, distributions and protocols.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::classical::{radix_digits, radix_index, ClassicalProtocol, ClassicalRound, OutputRule, Rule};
use crate::error::Result;
use crate::linalg::{ComplexMatrix, C64, ZERO};
use crate::protocol::{Entanglement, Isometry, Party, QuantumProtocol, Round};
use crate::registers::{RegisterLabel, RegisterSystem};
use crate::reversible::{Circuit, ReversibleProtocol};
use crate::state::{DensityOperator, InputDistribution, PureState, REG_X, REG_Y};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `rows × cols` matrix with orthonormal columns, Haar-distributed (Gram–Schmidt on complex Gaussians).
pub fn random_isometry_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(cols <= rows, "an isometry cannot shrink the dimension");
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v: Vec<C64> = (0..rows).map(|_| gaussian(rng)).collect();
        // Two passes keep the columns orthogonal to machine precision.
        for _ in 0..2 {
            for b in &basis {
                let dot: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            basis.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (j, col) in basis.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            m.set(i, j, z);
        }
    }
    m
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    random_isometry_matrix(dim, dim, rng)
}

pub fn random_isometry<R: Rng + ?Sized>(
    inputs: Vec<RegisterLabel>,
    outputs: Vec<RegisterLabel>,
    rng: &mut R,
) -> Result<Isometry> {
    let din: usize = inputs.iter().map(|l| l.dim).product();
    let dout: usize = outputs.iter().map(|l| l.dim).product();
    Isometry::new(inputs, outputs, random_isometry_matrix(dout, din, rng))
}

/// Random isometry acting as an independent random map for each basis value of `control`,
/// which must appear (same name and dimension) among both inputs and outputs.
pub fn random_controlled_isometry<R: Rng + ?Sized>(
    control: &str,
    inputs: Vec<RegisterLabel>,
    outputs: Vec<RegisterLabel>,
    rng: &mut R,
) -> Result<Isometry> {
    let pi = inputs.iter().position(|l| l.name == control).expect("control among inputs");
    let po = outputs.iter().position(|l| l.name == control).expect("control among outputs");
    let cdim = inputs[pi].dim;
    let rest_in: Vec<RegisterLabel> = inputs.iter().filter(|l| l.name != control).cloned().collect();
    let rest_out: Vec<RegisterLabel> = outputs.iter().filter(|l| l.name != control).cloned().collect();
    let din: usize = rest_in.iter().map(|l| l.dim).product();
    let dout: usize = rest_out.iter().map(|l| l.dim).product();
    let blocks: Vec<ComplexMatrix> = (0..cdim).map(|_| random_isometry_matrix(dout, din, rng)).collect();
    let rin = RegisterSystem::new(rest_in.clone())?;
    let rout = RegisterSystem::new(rest_out.clone())?;
    Isometry::from_fn(inputs, outputs, |d| {
        let c = d[pi];
        let rest: Vec<usize> = d.iter().enumerate().filter(|(k, _)| *k != pi).map(|(_, v)| *v).collect();
        let j = rin.index_of(&rest) as usize;
        (0..dout)
            .filter_map(|i| {
                let a = blocks[c].get(i, j);
                (a != ZERO).then(|| {
                    let mut digits = rout.digits(i as u64);
                    digits.insert(po, c);
                    (digits, a)
                })
            })
            .collect()
    })
}

pub fn random_pure_state<R: Rng + ?Sized>(system: RegisterSystem, rng: &mut R) -> Result<PureState> {
    let d = system.total_dim() as usize;
    let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    PureState::from_dense(system, &v.iter().map(|z| z / n).collect::<Vec<_>>())
}

/// Mixed state obtained by tracing a random environment of dimension `env_dim` out of a random pure state.
pub fn random_density<R: Rng + ?Sized>(system: RegisterSystem, env_dim: usize, rng: &mut R) -> Result<DensityOperator> {
    let keep = system.names();
    let mut labels = system.labels().to_vec();
    labels.push(RegisterLabel::new("__env", env_dim));
    let psi = random_pure_state(RegisterSystem::new(labels)?, rng)?;
    psi.partial_trace(&crate::state::strs(&keep))
}

pub fn random_probabilities<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

pub fn random_distribution<R: Rng + ?Sized>(x_dim: usize, y_dim: usize, rng: &mut R) -> InputDistribution {
    InputDistribution::new(x_dim, y_dim, random_probabilities(x_dim * y_dim, rng)).expect("normalised")
}

pub fn random_product_distribution<R: Rng + ?Sized>(x_dim: usize, y_dim: usize, rng: &mut R) -> InputDistribution {
    InputDistribution::product(&random_probabilities(x_dim, rng), &random_probabilities(y_dim, rng)).expect("normalised")
}

/// Shape of a random protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolShape {
    pub x_dim: usize,
    pub y_dim: usize,
    pub rounds: usize,
    /// Message register dimension.
    pub message_dim: usize,
    /// Dimension of each party's share of a random entangled state (1 for none).
    pub entanglement_dim: usize,
    /// Inputs are used only as controls.
    pub safe: bool,
}

/// Random protocol where, in each round, the owner applies a random isometry to everything it holds
/// (with its input as a control when `safe`) and emits a fresh message register.
pub fn random_protocol<R: Rng + ?Sized>(shape: &ProtocolShape, rng: &mut R) -> Result<QuantumProtocol> {
    let mut p = QuantumProtocol::empty(shape.x_dim, shape.y_dim);
    let mut alice = vec![RegisterLabel::new(REG_X, shape.x_dim)];
    let mut bob = vec![RegisterLabel::new(REG_Y, shape.y_dim)];
    if shape.entanglement_dim > 1 {
        let (ta, tb) = (
            RegisterLabel::new("TA", shape.entanglement_dim),
            RegisterLabel::new("TB", shape.entanglement_dim),
        );
        let state = random_pure_state(RegisterSystem::new(vec![ta.clone(), tb.clone()])?, rng)?;
        p.entanglement = Entanglement::new(vec![ta.clone()], vec![tb.clone()], state)?;
        alice.push(ta);
        bob.push(tb);
    }
    for k in 0..shape.rounds {
        let owner = if k % 2 == 0 { Party::Alice } else { Party::Bob };
        let held = match owner {
            Party::Alice => &mut alice,
            Party::Bob => &mut bob,
        };
        let msg = RegisterLabel::new(format!("C{}", k + 1), shape.message_dim);
        let inputs = held.clone();
        let mut outputs = held.clone();
        outputs.push(msg.clone());
        let input = owner.input_register();
        let iso = if shape.safe {
            random_controlled_isometry(input, inputs, outputs, rng)?
        } else {
            random_isometry(inputs, outputs, rng)?
        };
        let mut round = Round::new(owner, iso, Some(&msg.name));
        if shape.safe {
            round = round.with_controls(&[input]);
        }
        p.rounds.push(round);
        match owner {
            Party::Alice => bob.push(msg),
            Party::Bob => alice.push(msg),
        }
    }
    Ok(p)
}

/// Shape of a random classical protocol with binary messages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalShape {
    pub x_dim: usize,
    pub y_dim: usize,
    pub max_rounds: usize,
    /// Allow a shared binary coin.
    pub public_coin: bool,
    /// Speakers alternate from Alice; otherwise each round's speaker is drawn at random.
    pub alternating: bool,
}

/// Random protocol with binary messages. Each party owns one biased private coin; each rule is a
/// random table of the speaker's view, except that at one randomly chosen view (in about half of
/// the rounds) the message is the coin itself. Bob always outputs a bit, Alice sometimes does.
pub fn random_classical_protocol<R: Rng + ?Sized>(shape: &ClassicalShape, rng: &mut R) -> Result<ClassicalProtocol> {
    let mut pi = ClassicalProtocol::new(shape.x_dim, shape.y_dim);
    if shape.public_coin && rng.gen_bool(0.5) {
        pi.public_coin = random_probabilities(2, rng);
    }
    pi.alice_coins = vec![random_probabilities(2, rng)];
    pi.bob_coins = vec![random_probabilities(2, rng)];
    let rounds = rng.gen_range(1..=shape.max_rounds.max(1));
    let random_rule = |pi: &ClassicalProtocol, p: Party, n: usize, coin_view: bool, rng: &mut R| -> Result<Rule> {
        let mut dims = vec![pi.input_dim(p), pi.public_coin.len()];
        dims.extend(pi.history_dims(n));
        let views: usize = dims.iter().product();
        let table: Vec<usize> = (0..views).map(|_| rng.gen_range(0..2)).collect();
        let special = coin_view.then(|| rng.gen_range(0..views));
        let coins = if special.is_some() { vec![0] } else { vec![] };
        let cd = if special.is_some() { vec![2] } else { vec![] };
        Rule::from_fn(
            coins,
            pi.input_dim(p),
            &cd,
            pi.public_coin.len(),
            &pi.history_dims(n),
            |u, c, r, h| {
                let mut d = vec![u, r];
                d.extend_from_slice(h);
                let v = radix_index(&d, &dims);
                if Some(v) == special {
                    c[0]
                } else {
                    table[v]
                }
            },
        )
    };
    for k in 0..rounds {
        let p = if shape.alternating {
            if k % 2 == 0 {
                Party::Alice
            } else {
                Party::Bob
            }
        } else if rng.gen_bool(0.5) {
            Party::Alice
        } else {
            Party::Bob
        };
        let coin_view = rng.gen_bool(0.5);
        let rule = random_rule(&pi, p, k, coin_view, rng)?;
        pi.rounds.push(ClassicalRound::fixed(p, 2, rule));
    }
    let b = random_rule(&pi, Party::Bob, rounds, false, rng)?;
    pi.bob_output = Some(OutputRule { alphabet: 2, rule: b });
    if rng.gen_bool(0.5) {
        let a = random_rule(&pi, Party::Alice, rounds, false, rng)?;
        pi.alice_output = Some(OutputRule { alphabet: 2, rule: a });
    }
    Ok(pi)
}

/// Random reversible protocol on one-bit inputs with `rounds` alternating circuits from Alice.
/// Each circuit applies a random permutation to one or two of the speaker's registers plus a fresh
/// bit, then sends one of the resulting bits; inputs may be consumed, so the result is usually unsafe.
pub fn random_reversible_protocol<R: Rng + ?Sized>(rounds: usize, coins: bool, rng: &mut R) -> Result<ReversibleProtocol> {
    let mut rp = ReversibleProtocol::new(2, 2);
    if coins {
        rp.alice_coin = random_probabilities(2, rng);
        rp.bob_coin = random_probabilities(2, rng);
        if rng.gen_bool(0.5) {
            rp.public_coin = random_probabilities(2, rng);
        }
    }
    let mut hold = [
        rp.initial_registers(Party::Alice)
            .into_iter()
            .map(|l| l.name)
            .collect::<Vec<_>>(),
        rp.initial_registers(Party::Bob)
            .into_iter()
            .map(|l| l.name)
            .collect::<Vec<_>>(),
    ];
    for k in 1..=rounds {
        let owner = if k % 2 == 1 { Party::Alice } else { Party::Bob };
        let s = usize::from(owner == Party::Bob);
        let take = rng.gen_range(1..=hold[s].len().min(2));
        let picked: Vec<String> = hold[s].choose_multiple(rng, take).cloned().collect();
        let inputs: Vec<RegisterLabel> = picked.iter().map(|n| RegisterLabel::new(n.as_str(), 2)).collect();
        let ancilla = RegisterLabel::new(format!("T{k}"), 2);
        let message = format!("C{k}");
        let sent = rng.gen_range(0..=take);
        let mut outputs: Vec<RegisterLabel> = inputs.iter().chain([&ancilla]).cloned().collect();
        outputs[sent] = RegisterLabel::new(message.as_str(), 2);
        let mut perm: Vec<usize> = (0..1 << (take + 1)).collect();
        perm.shuffle(rng);
        let dims = vec![2; take + 1];
        let c = Circuit::from_fn(owner, inputs, vec![ancilla], outputs.clone(), &[message.as_str()], |d| {
            radix_digits(perm[radix_index(d, &dims)], &dims)
        })?;
        hold[s].retain(|h| !picked.contains(h));
        for l in &outputs {
            if l.name == message {
                hold[1 - s].push(l.name.clone());
            } else {
                hold[s].push(l.name.clone());
            }
        }
        rp.circuits.push(c);
    }
    rp.validate()?;
    Ok(rp)
}
