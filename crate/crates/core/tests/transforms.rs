use qicost::costs::{cost_report, no_forget_certify, qic, qic_of, CertificateBasis, Decomposition};
use qicost::experiments::{send_x_classical, BooleanFunctionTable};
use qicost::flow::{protocol_flow_report, FlowReport};
use qicost::library::{bounce_uncopied, inner_product_table, send_copy, send_input, send_x_compute};
use qicost::linalg::C64;
use qicost::protocol::{marginal_fidelity, run_trace, validate_protocol, Party, QuantumProtocol};
use qicost::random::{random_distribution, random_product_distribution, random_protocol, ProtocolShape};
use qicost::registers::{RegisterLabel, RegisterSystem};
use qicost::state::{canonical_purification, InputDistribution, PureState, REG_RX, REG_RY};
use qicost::transforms::{clean_protocol, phase_protocol, quantize_classical, reverse_composition, safe_version, CLEAN_OUT};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn shape(rounds: usize, safe: bool) -> ProtocolShape {
    ProtocolShape {
        x_dim: 2,
        y_dim: 2,
        rounds,
        message_dim: 2,
        entanglement_dim: 2,
        safe,
    }
}

#[test]
fn reverse_composition_doubles_the_cost() {
    let mu = InputDistribution::uniform(2, 2);
    let p = send_copy(2).unwrap();
    let r = reverse_composition(&p).unwrap();
    assert!(validate_protocol(&r).is_valid());
    assert_eq!(r.message_rounds(), 2);
    let rep = cost_report(&r, &mu).unwrap();
    assert!(close(rep.qic.total(), 2.0, 1e-9));
    assert!(close(rep.cic.total(), 1.0, 1e-9));

    let empty = QuantumProtocol::empty(2, 2);
    let re = reverse_composition(&empty).unwrap();
    assert!(re.rounds.is_empty());
    assert!(reverse_composition(&send_input(2).unwrap()).is_err());
}

#[test]
fn reverse_composition_on_random_safe_protocols() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for rounds in [1, 2, 2, 3] {
        let p = random_protocol(&shape(rounds, true), &mut rng).unwrap();
        let mu = random_distribution(2, 2, &mut rng);
        let forward = run_trace(&p, &mu).unwrap();
        let q = qic(&forward).unwrap();
        let r = reverse_composition(&p).unwrap();
        let t = run_trace(&r, &mu).unwrap();
        let rep = cost_report(&r, &mu).unwrap();
        assert!(
            close(rep.qic.total(), 2.0 * q.total(), 1e-8),
            "{} vs {}",
            rep.qic.total(),
            q.total()
        );
        assert!(close(rep.cic.total(), q.total(), 1e-8));
        // The k-th backward message mirrors the (r − k + 1)-th forward message.
        let back = qic(&t).unwrap();
        let n = q.terms.len();
        for k in 0..n {
            let mirrored = back.terms[n + k].value;
            assert!(close(mirrored, q.terms[n - 1 - k].value, 1e-9), "k={k}");
        }
    }
}

#[test]
fn safe_version_is_monotone_and_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for k in 0..8 {
        let p = random_protocol(&shape(1 + k % 3, k % 2 == 0), &mut rng).unwrap();
        let mu = random_distribution(2, 2, &mut rng);
        let s = safe_version(&p).unwrap();
        assert!(s.is_safe());
        let (a, b) = (qic_of(&p, &mu).unwrap(), qic_of(&s, &mu).unwrap());
        assert!(b <= a + 1e-8);
        if p.is_safe() {
            assert!(close(a, b, 1e-8));
        }
        let ss = safe_version(&s).unwrap();
        assert!(close(qic_of(&ss, &mu).unwrap(), b, 1e-8));
    }
}

fn restored_fidelity(p: &QuantumProtocol, mu: &InputDistribution) -> f64 {
    let t = run_trace(p, mu).unwrap();
    marginal_fidelity(t.final_state(), &t.initial).unwrap()
}

/// The initial state with |f(x, y)⟩ appended in the clean output register.
fn with_value(initial: &PureState, f: &[usize], y_dim: usize) -> PureState {
    let mut labels = initial.system().labels().to_vec();
    labels.push(RegisterLabel::new(CLEAN_OUT, 2));
    let sys = RegisterSystem::new(labels).unwrap();
    let entries = initial
        .entries()
        .iter()
        .map(|&(i, a)| {
            let d = initial.system().digits(i);
            (i * 2 + f[d[0] * y_dim + d[2]] as u64, a)
        })
        .collect();
    PureState::from_entries(sys, entries).unwrap()
}

/// The initial state with each branch multiplied by (−1)^f(x, y).
fn signed(initial: &PureState, f: &[usize], y_dim: usize) -> PureState {
    let sys = initial.system().clone();
    let entries = initial
        .entries()
        .iter()
        .map(|&(i, a)| {
            let d = sys.digits(i);
            let s = if f[d[0] * y_dim + d[2]] == 1 { -1.0 } else { 1.0 };
            (i, a * C64::new(s, 0.0))
        })
        .collect();
    PureState::from_entries(sys, entries).unwrap()
}

fn cleaned_fidelity(p: &QuantumProtocol, f: &[usize], mu: &InputDistribution) -> f64 {
    let t = run_trace(p, mu).unwrap();
    marginal_fidelity(t.final_state(), &with_value(&t.initial, f, mu.y_dim())).unwrap()
}

#[test]
fn clean_protocol_restores_the_work_registers() {
    let and = [0, 0, 0, 1];
    let p = send_x_compute(2, 2, &and, 2).unwrap();
    let c = clean_protocol(&p, &and).unwrap();
    assert!(clean_protocol(&p, &[0, 1, 1, 0]).is_err());
    assert!(validate_protocol(&c).is_valid());
    for x in 0..2 {
        for y in 0..2 {
            let mu = InputDistribution::point_mass(2, 2, x, y).unwrap();
            assert!(restored_fidelity(&c, &mu) >= 1.0 - 1e-10);
            let t = run_trace(&c, &mu).unwrap();
            let out = t.final_state().partial_trace(&[CLEAN_OUT]).unwrap();
            assert!(close(out.matrix().get(and[x * 2 + y], and[x * 2 + y]).re, 1.0, 1e-10));
        }
    }
    let mu = InputDistribution::uniform(2, 2);
    assert!(cleaned_fidelity(&c, &and, &mu) >= 1.0 - 1e-10);
    assert!(restored_fidelity(&c, &mu) < 1.0 - 0.1);
}

#[test]
fn clean_and_phase_keep_the_forward_cost() {
    let mu = InputDistribution::uniform(2, 2);
    let ip = inner_product_table(1);
    let p = send_x_compute(2, 2, &ip, 2).unwrap();
    let base = qic_of(&p, &mu).unwrap();
    for q in [clean_protocol(&p, &ip).unwrap(), phase_protocol(&p, &ip).unwrap()] {
        assert!(close(cost_report(&q, &mu).unwrap().qic.a_to_b, base, 1e-8));
    }
}

#[test]
fn phase_protocol_writes_the_sign_pattern() {
    let mu = InputDistribution::uniform(2, 2);
    let ip = inner_product_table(1);
    let p = phase_protocol(&send_x_compute(2, 2, &ip, 2).unwrap(), &ip).unwrap();
    let t = run_trace(&p, &mu).unwrap();
    let base = canonical_purification(&mu);
    let target = signed(&base, &ip, 2);
    assert!(marginal_fidelity(t.final_state(), &target).unwrap() >= 1.0 - 1e-10);
    assert!(close(marginal_fidelity(t.final_state(), &base).unwrap(), 0.25, 1e-10));

    let zero = [0; 4];
    let z = phase_protocol(&send_x_compute(2, 2, &zero, 2).unwrap(), &zero).unwrap();
    assert!(restored_fidelity(&z, &mu) >= 1.0 - 1e-10);
}

#[test]
fn clean_and_phase_on_random_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for n in 1..=2 {
        for _ in 0..3 {
            let f = BooleanFunctionTable::random(n, n, &mut rng);
            let p = quantize_classical(&send_x_classical(&f).unwrap()).unwrap();
            let mu = random_product_distribution(1 << n, 1 << n, &mut rng);
            let base = qic_of(&p, &mu).unwrap();
            let c = clean_protocol(&p, &f.table()).unwrap();
            let h = phase_protocol(&p, &f.table()).unwrap();
            let qc = cost_report(&c, &mu).unwrap().qic.a_to_b;
            let qh = cost_report(&h, &mu).unwrap().qic.a_to_b;
            assert!(close(qc, base, 1e-8) && close(qh, base, 1e-8), "{qc} {qh} {base}");
            assert!(cleaned_fidelity(&c, &f.table(), &mu) >= 1.0 - 1e-10);
            let t = run_trace(&h, &mu).unwrap();
            let target = signed(&t.initial, &f.table(), 1 << n);
            assert!(marginal_fidelity(t.final_state(), &target).unwrap() >= 1.0 - 1e-10);
        }
    }
}

#[test]
fn certification() {
    let q = quantize_classical(&send_x_classical(&BooleanFunctionTable::and()).unwrap()).unwrap();
    let r = no_forget_certify(&q, &[]).unwrap();
    assert!(r.certified && r.basis == Some(CertificateBasis::Structural));

    let r = no_forget_certify(&QuantumProtocol::empty(2, 2), &[]).unwrap();
    assert!(r.certified);

    let b = safe_version(&bounce_uncopied(2).unwrap()).unwrap();
    let trivial = InputDistribution::new(1, 1, vec![1.0]).unwrap();
    let family = [Decomposition::new(InputDistribution::uniform(2, 2), trivial)];
    let r = no_forget_certify(&b, &family).unwrap();
    assert!(!r.certified);
    assert!(!r.structural_failures.is_empty());
    let (_, _, v) = r.witness.expect("witness");
    assert!(v > 0.5);

    assert!(no_forget_certify(&send_input(2).unwrap(), &[]).is_err());
}

fn flow_residual(r: &FlowReport) -> f64 {
    r.residual()
}

#[test]
fn flow_identity_on_protocol_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for rounds in 0..=3 {
        let p = random_protocol(&shape(rounds, true), &mut rng).unwrap();
        let mu = random_distribution(2, 2, &mut rng);
        let t = run_trace(&p, &mu).unwrap();
        for party in [Party::Alice, Party::Bob] {
            let r = protocol_flow_report(&t, &[REG_RX.into()], &[REG_RY.into()], party).unwrap();
            assert!(flow_residual(&r) < 1e-8, "rounds={rounds} {party}: {}", r.residual());
        }
        if rounds == 0 {
            let r = protocol_flow_report(&t, &[REG_RX.into()], &[REG_RY.into()], Party::Bob).unwrap();
            assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
        }
    }
}
