//! Acceptance gate. Run with `cargo test -p qicost --test acceptance -- --nocapture --test-threads=1`
//! to see one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use qicost::classical::{
    canonical_randomness_form, classical_channel, coins_used_once, ic, ic_extended, pad_messages, run_classical,
    transcript_distance, Extension,
};
use qicost::costs::{cost_report, hybrid_costs_of, no_forget_certify, qic_of, superposed_costs, Decomposition};
use qicost::experiments::{
    appendix_inequality_suite, phase_entropy, phase_entropy_full, quasi_convexity_check, random_and_protocol,
    random_function_experiment, sample_rng, send_x_classical, BooleanFunctionTable,
};
use qicost::flow::{flow_lemma_residual, random_process};
use qicost::library::{bounce_family, bounce_uncopied, send_input};
use qicost::linalg::C64;
use qicost::protocol::{channel_of, marginal_fidelity, run_trace, QuantumProtocol};
use qicost::random::{
    random_classical_protocol, random_distribution, random_product_distribution, random_protocol, random_reversible_protocol,
    ClassicalShape, ProtocolShape,
};
use qicost::registers::{RegisterLabel, RegisterSystem};
use qicost::reversible::{factor_marginal, ric, run_reversible, safe_reversible, tensor, unforget_simulation};
use qicost::state::{InputDistribution, PureState};
use qicost::transforms::{clean_protocol, phase_protocol, quantize_classical, safe_version, CLEAN_OUT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: usize, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n:>2} {verdict} {name}: {detail}");
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

/// Tracks the largest deviation seen and the number of failed checks.
#[derive(Default)]
struct Tally {
    worst: Option<f64>,
    failures: usize,
    checks: usize,
}

impl Tally {
    fn within(&mut self, deviation: f64, tol: f64) {
        self.checks += 1;
        self.worst = Some(self.worst.map_or(deviation, |w| w.max(deviation)));
        if !(deviation <= tol) {
            self.failures += 1;
        }
    }

    fn holds(&mut self, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
    }

    fn ok(&self) -> bool {
        self.failures == 0
    }

    fn summary(&self) -> String {
        let base = format!("{} checks, {} failed", self.checks, self.failures);
        match self.worst {
            Some(w) => format!("{base}, worst deviation {w:.2e}"),
            None => base,
        }
    }
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
fn criterion_01_information_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let start = Instant::now();
    let mut t = Tally::default();
    for k in 0..500 {
        let p = random_process(k % 4, &mut rng).unwrap();
        let r = flow_lemma_residual(&p, &["E".into()], &["F".into()]).unwrap();
        t.within(r.residual(), 1e-8);
    }
    let elapsed = start.elapsed();
    let fast = elapsed <= Duration::from_secs(60);
    report(
        1,
        "information flow",
        t.ok() && fast,
        format!("{} in {elapsed:.2?}", t.summary()),
    );
}

#[test]
fn criterion_02_examples() {
    let corr = InputDistribution::correlated(2);
    let ind = InputDistribution::uniform(2, 2);
    let mut t = Tally::default();
    let mut check = |p: &QuantumProtocol, mu: &InputDistribution, unsafe_value: f64, safe_value: f64| {
        t.within((qic_of(p, mu).unwrap() - unsafe_value).abs(), 1e-9);
        t.within((qic_of(&safe_version(p).unwrap(), mu).unwrap() - safe_value).abs(), 1e-9);
    };
    let send = send_input(2).unwrap();
    check(&send, &corr, 1.0, 0.0);
    check(&send, &ind, 2.0, 1.0);
    check(&bounce_uncopied(2).unwrap(), &ind, 4.0, 2.0);
    for r in 1..=3 {
        check(&bounce_family(2, r).unwrap(), &ind, (2 * r + 1) as f64, 1.0);
    }
    report(2, "worked examples", t.ok(), t.summary());
}

#[test]
fn criterion_03_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut t = Tally::default();
    for k in 0..200 {
        let p = random_protocol(&shape(k % 4, true), &mut rng).unwrap();
        let mu = if k % 2 == 0 {
            random_product_distribution(2, 2, &mut rng)
        } else {
            random_distribution(2, 2, &mut rng)
        };
        let tr = run_trace(&p, &mu).unwrap();
        let c = cost_report(&p, &mu).unwrap();
        t.within((c.hic.a_to_b - (c.cic.a_to_b - c.cric.a_from_b)).abs(), 1e-8);
        t.within((c.hic.b_to_a - (c.cic.b_to_a - c.cric.b_from_a)).abs(), 1e-8);
        t.within((c.qic.a_to_b - (c.cic.a_to_b + c.cric.b_from_a)).abs(), 1e-8);
        t.within((c.qic.b_to_a - (c.cic.b_to_a + c.cric.a_from_b)).abs(), 1e-8);
        let (q, ci) = (c.qic.total(), c.cic.total());
        t.holds(ci - 1e-8 <= q && q <= 2.0 * ci + 1e-8);
        if mu.is_product(1e-12) {
            let s = superposed_costs(&tr).unwrap();
            t.within((q - (s.scic() + s.scric())).abs(), 1e-8);
        }
        let shapes = [((2, 2), (1, 1)), ((2, 1), (1, 2)), ((1, 2), (2, 1)), ((1, 1), (2, 2))];
        let ((a1, b1), (a2, b2)) = shapes[rng.gen_range(0..shapes.len())];
        let d = Decomposition::new(random_distribution(a1, b1, &mut rng), random_distribution(a2, b2, &mut rng));
        let h = hybrid_costs_of(&p, &d).unwrap();
        t.within((h.hhic_a_to_b - (h.hcic_a_to_b - h.hcric_a_from_b)).abs(), 1e-8);
        t.within((h.hhic_b_to_a - (h.hcic_b_to_a - h.hcric_b_from_a)).abs(), 1e-8);
    }
    report(3, "cost identities", t.ok(), t.summary());
}

#[test]
fn criterion_04_safe_copies() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut t = Tally::default();
    for k in 0..300 {
        let already_safe = k >= 200;
        let p = random_protocol(&shape(1 + k % 3, already_safe), &mut rng).unwrap();
        let mu = random_distribution(2, 2, &mut rng);
        let (before, after) = (qic_of(&p, &mu).unwrap(), qic_of(&safe_version(&p).unwrap(), &mu).unwrap());
        if already_safe {
            t.within((after - before).abs(), 1e-8);
        } else {
            t.within((after - before).max(0.0), 1e-8);
        }
    }
    report(4, "safe-copy monotonicity", t.ok(), t.summary());
}

#[test]
fn criterion_05_quantum_lift() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let shape = ClassicalShape {
        x_dim: 2,
        y_dim: 2,
        max_rounds: 3,
        public_coin: true,
        alternating: false,
    };
    let mut t = Tally::default();
    for _ in 0..100 {
        let pi = random_classical_protocol(&shape, &mut rng).unwrap();
        let mu = random_distribution(2, 2, &mut rng);
        let padded = pad_messages(&pi).unwrap();
        let canonical = canonical_randomness_form(&padded).unwrap();
        t.holds(coins_used_once(&canonical));
        let q = quantize_classical(&canonical).unwrap();
        let costs = cost_report(&q, &mu).unwrap();
        t.within((costs.qic.total() - ic(&pi, &mu).unwrap().total()).abs(), 1e-8);
        let ch = channel_of(&q, &mu).unwrap();
        t.within(ch.max_abs_diff(&classical_channel(&pi, &mu).unwrap()), 1e-9);
        t.within(costs.cric.total().abs(), 1e-8);
        let (qa, qb) = q.communication_qubits();
        t.within((qa + qb - padded.communication_bits()).abs(), 1e-12);
    }
    report(5, "classical to quantum lift", t.ok(), t.summary());
}

#[test]
fn criterion_06_reversible_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let (mut ext, mut safe, mut sub, mut sim) = (Tally::default(), Tally::default(), Tally::default(), Tally::default());
    for k in 0..100 {
        let rp = random_reversible_protocol(k % 4, k % 3 != 0, &mut rng).unwrap();
        let mu = random_distribution(2, 2, &mut rng);
        let base = ric(&rp, &mu, &Extension::trivial(&mu)).unwrap().total;
        let f = Extension::function(&mu, 2, |x, y| x & y).unwrap();
        let noisy = Extension::channel(&mu, 3, |x, y| {
            let (x, y) = (x as f64, y as f64);
            vec![0.5 - 0.25 * x, 0.25 + 0.25 * x - 0.125 * y, 0.25 + 0.125 * y]
        })
        .unwrap();
        let s = safe_reversible(&rp).unwrap();
        let pi = unforget_simulation(&s).unwrap();
        let standard = ic(&pi, &mu).unwrap().total();
        for e in [f, noisy] {
            ext.within((ric(&rp, &mu, &e).unwrap().total - base).abs(), 1e-10);
            ext.within((ic_extended(&pi, &mu, &e).unwrap().0 - standard).abs(), 1e-10);
        }

        let safe_cost = ric(&s, &mu, &Extension::trivial(&mu)).unwrap().total;
        safe.within((safe_cost - base).max(0.0), 1e-10);

        sim.within((standard - safe_cost).max(0.0), 1e-10);
        let (a, b) = (run_reversible(&s, &mu).unwrap(), run_classical(&pi, &mu).unwrap());
        sim.within(transcript_distance(&a, &b, pi.rounds.len()).unwrap(), 1e-12);

        let other = random_reversible_protocol(rng.gen_range(0..=3), rng.gen_bool(0.5), &mut rng).unwrap();
        let joint = random_distribution(4, 4, &mut rng);
        let m1 = factor_marginal(&joint, (2, 2), (2, 2), true).unwrap();
        let m2 = factor_marginal(&joint, (2, 2), (2, 2), false).unwrap();
        let whole = ric(&tensor(&rp, &other).unwrap(), &joint, &Extension::trivial(&joint))
            .unwrap()
            .total;
        let parts = base_ric(&rp, &m1) + base_ric(&other, &m2);
        sub.within((whole - parts).max(0.0), 1e-9);
    }
    let pass = ext.ok() && safe.ok() && sub.ok() && sim.ok();
    let detail = format!(
        "extension independence [{}]; safe inequality [{}]; subadditivity [{}]; simulation [{}]",
        ext.summary(),
        safe.summary(),
        sub.summary(),
        sim.summary()
    );
    report(6, "reversible classical suite", pass, detail);
}

fn base_ric(rp: &qicost::reversible::ReversibleProtocol, mu: &InputDistribution) -> f64 {
    ric(rp, mu, &Extension::trivial(mu)).unwrap().total
}

fn with_value(initial: &PureState, f: &[usize], y_dim: usize) -> PureState {
    let mut labels = initial.system().labels().to_vec();
    labels.push(RegisterLabel::new(CLEAN_OUT, 2));
    let entries = initial
        .entries()
        .iter()
        .map(|&(i, a)| {
            let d = initial.system().digits(i);
            (i * 2 + f[d[0] * y_dim + d[2]] as u64, a)
        })
        .collect();
    PureState::from_entries(RegisterSystem::new(labels).unwrap(), entries).unwrap()
}

fn signed(initial: &PureState, f: &[usize], y_dim: usize) -> PureState {
    let entries = initial
        .entries()
        .iter()
        .map(|&(i, a)| {
            let d = initial.system().digits(i);
            let s = if f[d[0] * y_dim + d[2]] == 1 { -1.0 } else { 1.0 };
            (i, a * C64::new(s, 0.0))
        })
        .collect();
    PureState::from_entries(initial.system().clone(), entries).unwrap()
}

#[test]
fn criterion_07_clean_and_phase() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let (mut costs, mut fidelity) = (Tally::default(), Tally::default());
    for k in 0..20 {
        let n = 1 + k % 2;
        let f = BooleanFunctionTable::random(n, n, &mut rng);
        let table = f.table();
        let p = quantize_classical(&send_x_classical(&f).unwrap()).unwrap();
        let mu = random_distribution(1 << n, 1 << n, &mut rng);
        let base = qic_of(&p, &mu).unwrap();
        let c = clean_protocol(&p, &table).unwrap();
        let h = phase_protocol(&p, &table).unwrap();
        costs.within((cost_report(&c, &mu).unwrap().qic.a_to_b - base).abs(), 1e-8);
        costs.within((cost_report(&h, &mu).unwrap().qic.a_to_b - base).abs(), 1e-8);
        let tc = run_trace(&c, &mu).unwrap();
        let fc = marginal_fidelity(tc.final_state(), &with_value(&tc.initial, &table, 1 << n)).unwrap();
        let th = run_trace(&h, &mu).unwrap();
        let fh = marginal_fidelity(th.final_state(), &signed(&th.initial, &table, 1 << n)).unwrap();
        fidelity.within(1.0 - fc.min(fh), 1e-10);
    }
    let detail = format!("costs [{}]; restoration [{}]", costs.summary(), fidelity.summary());
    report(7, "clean and phase protocols", costs.ok() && fidelity.ok(), detail);
}

#[test]
fn criterion_08_inner_product() {
    let start = Instant::now();
    let mut t = Tally::default();
    let mut values = Vec::new();
    for n in 1..=4 {
        let f = BooleanFunctionTable::inner_product(n);
        let u = vec![1.0 / (1usize << n) as f64; 1 << n];
        let h = phase_entropy(&f, &u, &u).unwrap();
        let p = quantize_classical(&send_x_classical(&f).unwrap()).unwrap();
        let q = qic_of(&p, &InputDistribution::uniform(1 << n, 1 << n)).unwrap();
        t.within((h - n as f64).abs(), 1e-9);
        t.within((q - n as f64).abs(), 1e-9);
        values.push(format!("n={n} H={h:.9} QIC={q:.9}"));
    }
    let elapsed = start.elapsed();
    let fast = elapsed <= Duration::from_secs(30);
    report(
        8,
        "inner product",
        t.ok() && fast,
        format!("{}; {} in {elapsed:.2?}", values.join(", "), t.summary()),
    );
}

#[test]
fn criterion_09_random_functions() {
    let r = random_function_experiment(3, 200, 109).unwrap();
    let mut t = Tally::default();
    for (h2, h) in r.h2.iter().zip(&r.h) {
        t.holds(*h2 <= h + 1e-9 && *h <= 3.0 + 1e-9);
    }
    t.holds(r.ordered);
    for n in 1..=3 {
        for i in 0..200 {
            let mut rng = sample_rng(9, i);
            let f = BooleanFunctionTable::random(n, n, &mut rng);
            let mx = qicost::random::random_probabilities(1 << n, &mut rng);
            let my = qicost::random::random_probabilities(1 << n, &mut rng);
            t.within(
                (phase_entropy(&f, &mx, &my).unwrap() - phase_entropy_full(&f, &mx, &my).unwrap()).abs(),
                1e-9,
            );
        }
    }
    let detail = format!(
        "{}; tail bound (reported only) {:.3e}, violation fraction {:.3}",
        t.summary(),
        r.tail_bound,
        r.violation_fraction
    );
    report(9, "random functions", t.ok(), detail);
}

#[test]
fn criterion_10_convexity_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let (mut stated, mut per_direction) = (Tally::default(), Tally::default());
    let mut certified = 0;
    for k in 0..50 {
        let w = [0.0, 0.125, 0.25, 0.5][k % 4];
        let q = quantize_classical(&random_and_protocol(&mut rng).unwrap()).unwrap();
        if no_forget_certify(&q, &[]).unwrap().certified {
            certified += 1;
        }
        let rest = qicost::random::random_probabilities(3, &mut rng);
        let mut probs: Vec<f64> = rest.iter().map(|v| v * (1.0 - w)).collect();
        probs.push(w);
        let mu = InputDistribution::new(2, 2, probs).unwrap();
        let m = appendix_inequality_suite(&q, &mu, 1e-8).unwrap();
        stated.holds(m.holds);
        per_direction.holds(m.split.lower_holds && m.split.upper_holds);

        let split = [0.25, 0.5][k % 2];
        let (mu1, mu2) = (random_distribution(2, 2, &mut rng), random_distribution(2, 2, &mut rng));
        let c = quasi_convexity_check(&q, &mu1, &mu2, split, 1e-8).unwrap();
        stated.holds(c.lower_holds && c.upper_total_holds);
        per_direction.holds(c.lower_holds && c.upper_holds);
    }
    let detail = format!(
        "{certified}/50 certified; two-way total form [{}]; per-direction form [{}]",
        stated.summary(),
        per_direction.summary()
    );
    report(10, "convexity bounds", stated.ok() && certified == 50, detail);
}
