use qicost::classical::{
    canonical_randomness_form, classical_channel, coins_used_once, ic, ic_extended, pad_messages, run_classical,
    transcript_distance, ClassicalProtocol, ClassicalRound, Extension, OutputRule, Rule, Speaker, COL_R, COL_X,
};
use qicost::costs::{cost_report, no_forget_certify, CertificateBasis};
use qicost::protocol::{channel_of, validate_protocol, Party};
use qicost::registers::RegisterLabel;
use qicost::reversible::{
    factor_marginal, ric, run_reversible, safe_reversible, tensor, unforget_simulation, Circuit, Gate, ReversibleProtocol,
};
use qicost::state::InputDistribution;
use qicost::transforms::quantize_classical;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn rule<F: Fn(usize, &[usize], usize, &[usize]) -> usize>(
    pi: &ClassicalProtocol,
    p: Party,
    coins: Vec<usize>,
    n: usize,
    f: F,
) -> Rule {
    let cd: Vec<usize> = coins.iter().map(|&c| pi.coins(p)[c].len()).collect();
    Rule::from_fn(coins, pi.input_dim(p), &cd, pi.public_coin.len(), &pi.history_dims(n), f).unwrap()
}

fn push(
    pi: &mut ClassicalProtocol,
    p: Party,
    alphabet: usize,
    coins: Vec<usize>,
    f: impl Fn(usize, &[usize], usize, &[usize]) -> usize,
) {
    let n = pi.rounds.len();
    let r = rule(pi, p, coins, n, f);
    pi.rounds.push(ClassicalRound::fixed(p, alphabet, r));
}

fn private_forward() -> ClassicalProtocol {
    let mut pi = ClassicalProtocol::new(2, 2);
    pi.alice_coins = vec![vec![0.5, 0.5]];
    push(&mut pi, Party::Alice, 2, vec![0], |_, s, _, _| s[0]);
    pi
}

fn xor_private() -> ClassicalProtocol {
    let mut pi = ClassicalProtocol::new(2, 2);
    pi.alice_coins = vec![vec![0.5, 0.5]];
    push(&mut pi, Party::Alice, 2, vec![0], |x, s, _, _| x ^ s[0]);
    pi
}

fn xor_public() -> ClassicalProtocol {
    let mut pi = ClassicalProtocol::new(2, 2);
    pi.public_coin = vec![0.5, 0.5];
    push(&mut pi, Party::Alice, 2, vec![], |x, _, r, _| x ^ r);
    let out = rule(&pi, Party::Bob, vec![], 1, |_, _, r, h| h[0] ^ r);
    pi.bob_output = Some(OutputRule { alphabet: 2, rule: out });
    pi
}

/// Alice sends x, Bob answers x XOR y and both output x XOR y.
fn xor_exchange() -> ClassicalProtocol {
    let mut pi = ClassicalProtocol::new(2, 2);
    push(&mut pi, Party::Alice, 2, vec![], |x, _, _, _| x);
    push(&mut pi, Party::Bob, 2, vec![], |y, _, _, h| h[0] ^ y);
    let a = rule(&pi, Party::Alice, vec![], 2, |_, _, _, h| h[1]);
    let b = rule(&pi, Party::Bob, vec![], 2, |y, _, _, h| h[0] ^ y);
    pi.alice_output = Some(OutputRule { alphabet: 2, rule: a });
    pi.bob_output = Some(OutputRule { alphabet: 2, rule: b });
    pi
}

/// Coins reused across rounds, with a three-valued biased coin.
fn shared_coin() -> ClassicalProtocol {
    let mut pi = ClassicalProtocol::new(2, 2);
    pi.alice_coins = vec![vec![0.2, 0.3, 0.5]];
    pi.bob_coins = vec![vec![0.6, 0.4]];
    push(&mut pi, Party::Alice, 2, vec![0], |x, s, _, _| x ^ (s[0] % 2));
    push(&mut pi, Party::Bob, 2, vec![0], |y, s, _, h| (y & s[0]) ^ h[0]);
    push(&mut pi, Party::Alice, 2, vec![0], |x, s, _, h| {
        usize::from(s[0] >= 1) & (x | h[1])
    });
    let b = rule(&pi, Party::Bob, vec![0], 3, |y, s, _, h| h[2] ^ (y & s[0]));
    pi.bob_output = Some(OutputRule { alphabet: 2, rule: b });
    pi
}

/// Alice sends x; the second speaker is Alice again when she sent 0 and Bob otherwise.
fn input_dependent_order() -> ClassicalProtocol {
    let mut pi = ClassicalProtocol::new(2, 2);
    push(&mut pi, Party::Alice, 2, vec![], |x, _, _, _| x);
    let a = rule(&pi, Party::Alice, vec![], 1, |x, _, _, _| 1 - x);
    let b = rule(&pi, Party::Bob, vec![], 1, |y, _, _, _| y);
    pi.rounds.push(ClassicalRound {
        speaker: Speaker::Transcript(vec![Party::Alice, Party::Bob]),
        alphabet: 2,
        alice: Some(a),
        bob: Some(b),
    });
    pi
}

fn skewed() -> InputDistribution {
    InputDistribution::new(2, 2, vec![0.4, 0.1, 0.2, 0.3]).unwrap()
}

#[test]
fn forwarding_a_private_coin_reveals_nothing() {
    let mu = InputDistribution::uniform(2, 2);
    let pi = private_forward();
    let t = run_classical(&pi, &mu).unwrap();
    assert!(close(t.entropy(&["M1"]).unwrap(), 1.0));
    assert!(close(t.cmi(&["M1"], &[COL_X], &[]).unwrap(), 0.0));
    assert!(close(ic(&pi, &mu).unwrap().total(), 0.0));
}

#[test]
fn one_time_pads() {
    let mu = InputDistribution::uniform(2, 2);
    assert!(close(ic(&xor_private(), &mu).unwrap().total(), 0.0));
    let c = ic(&xor_public(), &mu).unwrap();
    assert!(close(c.a_to_b, 1.0));
    assert!(close(c.b_to_a, 0.0));
}

#[test]
fn extended_cost_ignores_the_extension() {
    let mu = skewed();
    for pi in [xor_exchange(), shared_coin(), xor_public()] {
        let base = ic(&pi, &mu).unwrap().total();
        let exts = [
            Extension::trivial(&mu),
            Extension::function(&mu, 2, |x, y| x & y).unwrap(),
            Extension::channel(&mu, 3, |x, y| {
                let z = (x + 2 * y) as f64;
                vec![0.2 + 0.1 * z, 0.5 - 0.1 * z, 0.3]
            })
            .unwrap(),
        ];
        for e in &exts {
            let (total, _) = ic_extended(&pi, &mu, e).unwrap();
            assert!((total - base).abs() < 1e-10, "{total} vs {base}");
        }
    }
}

#[test]
fn padding_keeps_the_cost() {
    let mu = skewed();
    let pi = input_dependent_order();
    let padded = pad_messages(&pi).unwrap();
    assert!(padded.is_alternating());
    let (a, b) = (ic(&pi, &mu).unwrap(), ic(&padded, &mu).unwrap());
    assert!((a.total() - b.total()).abs() < 1e-10);
    assert!(
        (classical_channel(&pi, &mu)
            .unwrap()
            .max_abs_diff(&classical_channel(&padded, &mu).unwrap()))
            < 1e-12
    );
}

#[test]
fn canonical_form_keeps_transcripts_and_cost() {
    let mu = skewed();
    let pi = shared_coin();
    assert!(!coins_used_once(&pi));
    let c = canonical_randomness_form(&pi).unwrap();
    assert!(coins_used_once(&c));
    let (ta, tb) = (run_classical(&pi, &mu).unwrap(), run_classical(&c, &mu).unwrap());
    assert!(transcript_distance(&ta, &tb, 3).unwrap() < 1e-10);
    assert!((ic(&pi, &mu).unwrap().total() - ic(&c, &mu).unwrap().total()).abs() < 1e-10);
}

#[test]
fn quantized_protocols_match_their_classical_originals() {
    let mu = skewed();
    for pi in [
        xor_exchange(),
        xor_public(),
        private_forward(),
        shared_coin(),
        input_dependent_order(),
    ] {
        let q = quantize_classical(&pi).unwrap();
        let rep = validate_protocol(&q);
        assert!(rep.is_valid(), "{:?}", rep.violations);
        assert!(q.is_safe());
        let costs = cost_report(&q, &mu).unwrap();
        let c = ic(&pi, &mu).unwrap();
        assert!(
            (costs.qic.total() - c.total()).abs() < 1e-9,
            "{} vs {}",
            costs.qic.total(),
            c.total()
        );
        assert!((costs.qic.a_to_b - c.a_to_b).abs() < 1e-9);
        assert!(costs.cric.total().abs() < 1e-9);
        let cert = no_forget_certify(&q, &[]).unwrap();
        assert!(cert.certified && cert.basis == Some(CertificateBasis::Structural));
        let ch = channel_of(&q, &mu).unwrap();
        assert!(ch.max_abs_diff(&classical_channel(&pi, &mu).unwrap()) < 1e-10);
        let (qa, qb) = q.communication_qubits();
        assert!(close(qa + qb, pad_messages(&pi).unwrap().communication_bits()));
    }
}

fn bit(name: &str) -> RegisterLabel {
    RegisterLabel::new(name, 2)
}

/// Alice sends x and forgets it; Bob sends it back and forgets it.
fn reversible_bounce() -> ReversibleProtocol {
    let mut rp = ReversibleProtocol::new(2, 2);
    rp.circuits.push(Circuit::forward(Party::Alice, "X", "C1", 2).unwrap());
    rp.circuits.push(Circuit::forward(Party::Bob, "C1", "C2", 2).unwrap());
    rp
}

/// Alice sends x XOR a shared bit, keeping a copy; Bob replies with y, keeping a copy.
fn reversible_keeper() -> ReversibleProtocol {
    let mut rp = ReversibleProtocol::new(2, 2);
    rp.public_coin = vec![0.5, 0.5];
    rp.circuits.push(
        Circuit::from_gates(
            Party::Alice,
            vec![bit("X"), bit("RA")],
            vec![bit("C1")],
            &[Gate::Cnot("X".into(), "C1".into()), Gate::Cnot("RA".into(), "C1".into())],
            &[],
            &["C1"],
        )
        .unwrap(),
    );
    rp.circuits.push(Circuit::copy(Party::Bob, "Y", "C2", 2, true).unwrap());
    rp
}

#[test]
fn bounce_under_the_reversible_cost() {
    let mu = InputDistribution::uniform(2, 2);
    let rp = reversible_bounce();
    assert!(!rp.is_safe());
    let r = ric(&rp, &mu, &Extension::trivial(&mu)).unwrap();
    assert!(close(r.total, 4.0), "{}", r.total);
    let safe = safe_reversible(&rp).unwrap();
    assert!(safe.is_safe());
    let r = ric(&safe, &mu, &Extension::trivial(&mu)).unwrap();
    assert!(close(r.total, 2.0), "{}", r.total);
    let pi = unforget_simulation(&safe).unwrap();
    assert!(close(ic(&pi, &mu).unwrap().total(), 1.0));
    assert!(unforget_simulation(&rp).is_err());
}

#[test]
fn unforgetful_simulation_keeps_transcripts() {
    let mu = skewed();
    for rp in [safe_reversible(&reversible_bounce()).unwrap(), reversible_keeper()] {
        let pi = unforget_simulation(&rp).unwrap();
        let (ta, tb) = (run_reversible(&rp, &mu).unwrap(), run_classical(&pi, &mu).unwrap());
        assert!(transcript_distance(&ta, &tb, pi.rounds.len()).unwrap() < 1e-12);
        assert!(close(ta.entropy(&[COL_R]).unwrap(), tb.entropy(&[COL_R]).unwrap()));
        let r = ric(&rp, &mu, &Extension::trivial(&mu)).unwrap().total;
        assert!(ic(&pi, &mu).unwrap().total() <= r + 1e-9);
    }
}

#[test]
fn reversible_cost_with_kept_history_equals_the_standard_cost() {
    let mu = skewed();
    let rp = reversible_keeper();
    let pi = unforget_simulation(&rp).unwrap();
    let r = ric(&rp, &mu, &Extension::trivial(&mu)).unwrap();
    assert!((r.total - ic(&pi, &mu).unwrap().total()).abs() < 1e-10);
    let e = Extension::function(&mu, 2, |x, y| x ^ y).unwrap();
    assert!((ric(&rp, &mu, &e).unwrap().total - r.total).abs() < 1e-10);
}

#[test]
fn reversible_cost_is_subadditive() {
    let a = safe_reversible(&reversible_bounce()).unwrap();
    let b = reversible_keeper();
    let ab = tensor(&a, &b).unwrap();
    let probs: Vec<f64> = (0..16).map(|i| 1.0 + ((i * 7) % 5) as f64).collect();
    let s: f64 = probs.iter().sum();
    let mu = InputDistribution::new(4, 4, probs.iter().map(|p| p / s).collect()).unwrap();
    let m1 = factor_marginal(&mu, (2, 2), (2, 2), true).unwrap();
    let m2 = factor_marginal(&mu, (2, 2), (2, 2), false).unwrap();
    let joint = ric(&ab, &mu, &Extension::trivial(&mu)).unwrap().total;
    let parts = ric(&a, &m1, &Extension::trivial(&m1)).unwrap().total + ric(&b, &m2, &Extension::trivial(&m2)).unwrap().total;
    assert!(joint <= parts + 1e-9, "{joint} > {parts}");
    let prod = InputDistribution::product(&[0.3, 0.7, 0.5, 0.5].map(|v| v / 2.0), &[0.25; 4]).unwrap();
    let (p1, p2) = (
        factor_marginal(&prod, (2, 2), (2, 2), true).unwrap(),
        factor_marginal(&prod, (2, 2), (2, 2), false).unwrap(),
    );
    let joint = ric(&ab, &prod, &Extension::trivial(&prod)).unwrap().total;
    let parts = ric(&a, &p1, &Extension::trivial(&p1)).unwrap().total + ric(&b, &p2, &Extension::trivial(&p2)).unwrap().total;
    assert!(joint <= parts + 1e-9, "{joint} > {parts}");
}
