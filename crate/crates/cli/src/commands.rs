use std::path::Path;

use qicost::classical::{canonical_randomness_form, ic, pad_messages, run_classical, transcript_distance, Extension};
use qicost::costs::{cic, cric, hic, qic, superposed_costs, RoundTerm};
use qicost::experiments::{inner_product_report, random_function_experiment, sample_rng};
use qicost::flow::{flow_lemma_residual, random_process};
use qicost::protocol::{error_of, run_trace, QuantumProtocol};
use qicost::reversible::{ric, run_reversible, safe_reversible, unforget_simulation};
use qicost::state::InputDistribution;
use qicost::transforms::{clean_protocol, phase_protocol, quantize_classical, reverse_composition, safe_version};

use crate::format::{read_classical, read_distribution, read_protocol, read_reversible, write_json, ProtocolFile};
use crate::{bits, Cli, CliError, Command, Output, Transform};

const DEFAULT_SAMPLES: usize = 200;
const DEFAULT_TRIALS: usize = 100;

pub fn dispatch(cli: &Cli) -> Result<Output, CliError> {
    let tol = cli.tol;
    match &cli.command {
        Command::Costs {
            protocol,
            dist,
            safe,
            function,
            worst_case,
        } => {
            let mut p = read_protocol(protocol)?;
            if *safe {
                p = safe_version(&p)?;
            }
            let mu = distribution(dist.as_deref(), &p)?;
            let f = function.as_deref().map(parse_table).transpose()?;
            costs(&p, &mu, f.as_deref(), *worst_case, tol)
        }
        Command::Quantize { classical, dist, out } => quantize(classical, dist.as_deref(), out.as_deref(), tol),
        Command::Safe(t) => safe(t, tol),
        Command::Clean { t, function } => uncompute(t, function, false, tol),
        Command::Phase { t, function } => uncompute(t, function, true, tol),
        Command::Reverse(t) => reverse(t, tol),
        Command::Ip { n } => ip(*n, tol),
        Command::Randomfn {
            n,
            samples_arg,
            seed_arg,
            samples,
            seed,
        } => randomfn(
            *n,
            samples.or(*samples_arg).unwrap_or(DEFAULT_SAMPLES),
            seed.or(*seed_arg).unwrap_or(0),
        ),
        Command::Flowcheck {
            trials_arg,
            seed_arg,
            samples,
            seed,
        } => flowcheck(
            samples.or(*trials_arg).unwrap_or(DEFAULT_TRIALS),
            seed.or(*seed_arg).unwrap_or(0),
            tol,
        ),
        Command::Ricsim {
            reversible,
            dist,
            safe,
            out,
        } => ricsim(reversible, dist.as_deref(), *safe, out.as_deref(), tol),
    }
}

/// Parses a comma-separated truth table such as `0,0,0,1`.
pub fn parse_table(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Input(format!("bad truth-table entry {v:?}")))
        })
        .collect()
}

fn distribution(path: Option<&Path>, p: &QuantumProtocol) -> Result<InputDistribution, CliError> {
    let mu = match path {
        Some(path) => read_distribution(path)?,
        None => InputDistribution::uniform(p.x_dim, p.y_dim),
    };
    if mu.x_dim() != p.x_dim || mu.y_dim() != p.y_dim {
        return Err(CliError::Input("distribution dimensions do not match the protocol".into()));
    }
    Ok(mu)
}

fn save(out: Option<&Path>, p: &QuantumProtocol) -> Result<(), CliError> {
    if let Some(path) = out {
        write_json(path, &ProtocolFile::from_protocol(p)?)?;
    }
    Ok(())
}

fn term(terms: &[RoundTerm], round: usize) -> String {
    terms
        .iter()
        .find(|t| t.round == round)
        .map_or_else(|| "-".to_string(), |t| bits(t.value))
}

pub fn costs(
    p: &QuantumProtocol,
    mu: &InputDistribution,
    f: Option<&[usize]>,
    worst_case: bool,
    tol: f64,
) -> Result<Output, CliError> {
    let mut o = Output::new();
    let trace = run_trace(p, mu)?;
    let q = qic(&trace)?;
    let safe = p.is_safe();
    let (c, r) = if safe {
        (Some(cic(&trace)?), Some(cric(&trace)?))
    } else {
        (None, None)
    };
    o.text(format!(
        "{:<6} {:<6} {:>12} {:>12} {:>12}",
        "round", "sender", "qic", "cic", "cric"
    ));
    for t in &q.terms {
        let cell = |terms: Option<&[RoundTerm]>| terms.map_or_else(|| "-".to_string(), |ts| term(ts, t.round));
        o.text(format!(
            "{:<6} {:<6} {:>12} {:>12} {:>12}",
            t.round,
            t.sender.to_string(),
            bits(t.value),
            cell(c.as_ref().map(|c| c.terms.as_slice())),
            cell(r.as_ref().map(|r| r.terms.as_slice())),
        ));
    }
    o.measure("qic", q.total());
    o.measure("qic_a_to_b", q.a_to_b);
    o.measure("qic_b_to_a", q.b_to_a);
    for t in &q.terms {
        o.measure(&format!("qic_round_{}", t.round), t.value);
    }
    if let (Some(c), Some(r)) = (c, r) {
        let h = hic(&trace)?;
        o.measure("cic", c.total());
        o.measure("cic_a_to_b", c.a_to_b);
        o.measure("cic_b_to_a", c.b_to_a);
        o.measure("cric", r.total());
        o.measure("cric_a_from_b", r.a_from_b);
        o.measure("cric_b_from_a", r.b_from_a);
        o.measure("hic", h.total());
        o.measure("hic_a_to_b", h.a_to_b);
        o.measure("hic_b_to_a", h.b_to_a);
        let res_a = (h.a_to_b - (c.a_to_b - r.a_from_b))
            .abs()
            .max((h.b_to_a - (c.b_to_a - r.b_from_a)).abs());
        let res_b = (q.a_to_b - (c.a_to_b + r.b_from_a))
            .abs()
            .max((q.b_to_a - (c.b_to_a + r.a_from_b)).abs());
        let sandwich = (c.total() - q.total()).max(q.total() - 2.0 * c.total()).max(0.0);
        o.measure("residual_hic_identity", res_a);
        o.measure("residual_qic_identity", res_b);
        o.measure("residual_sandwich", sandwich);
        o.check("hic_identity", res_a <= tol);
        o.check("qic_identity", res_b <= tol);
        o.check("sandwich", sandwich <= tol);
        if mu.is_product(1e-12) {
            let s = superposed_costs(&trace)?;
            o.measure("scic", s.scic());
            o.measure("scric", s.scric());
            let res = (q.total() - (s.scic() + s.scric())).abs();
            o.measure("residual_superposed_identity", res);
            o.check("superposed_identity", res <= tol);
        }
    } else {
        o.text("note: the protocol is not safe; CIC, CRIC and HIC need --safe");
    }
    if let Some(f) = f {
        let e = error_of(p, f, mu, worst_case)?;
        o.measure(if worst_case { "error_worst_case" } else { "error" }, e);
    }
    Ok(o)
}

fn quantize(path: &Path, dist: Option<&Path>, out: Option<&Path>, tol: f64) -> Result<Output, CliError> {
    let pi = read_classical(path)?;
    let padded = pad_messages(&pi)?;
    let canonical = canonical_randomness_form(&padded)?;
    let q = quantize_classical(&canonical)?;
    let mu = distribution(dist, &q)?;
    let mut o = Output::new();
    let info = ic(&pi, &mu)?.total();
    let trace = run_trace(&q, &mu)?;
    let quantum = qic(&trace)?.total();
    let (qa, qb) = q.communication_qubits();
    let (cc, qcc) = (padded.communication_bits(), qa + qb);
    o.text(format!(
        "classical rounds {} -> padded {}; quantum rounds {}",
        pi.rounds.len(),
        padded.rounds.len(),
        q.rounds.len()
    ));
    o.measure("ic", info);
    o.measure("qic", quantum);
    o.measure("cric", cric(&trace)?.total());
    o.measure("cc_original", pi.communication_bits());
    o.measure("cc", cc);
    o.measure("qcc", qcc);
    o.check("qic_equals_ic", (info - quantum).abs() <= tol);
    o.check("qcc_equals_cc", (cc - qcc).abs() <= 1e-12);
    save(out, &q)?;
    Ok(o)
}

fn safe(t: &Transform, tol: f64) -> Result<Output, CliError> {
    let p = read_protocol(&t.protocol)?;
    let mu = distribution(t.dist.as_deref(), &p)?;
    let s = safe_version(&p)?;
    let (before, after) = (qic(&run_trace(&p, &mu)?)?.total(), qic(&run_trace(&s, &mu)?)?.total());
    let mut o = Output::new();
    o.measure("qic", before);
    o.measure("qic_safe", after);
    o.check("monotone", after <= before + tol);
    if p.is_safe() {
        o.check("unchanged_when_safe", (after - before).abs() <= tol);
    }
    save(t.out.as_deref(), &s)?;
    Ok(o)
}

fn uncompute(t: &Transform, function: &str, phase: bool, tol: f64) -> Result<Output, CliError> {
    let p = read_protocol(&t.protocol)?;
    let mu = distribution(t.dist.as_deref(), &p)?;
    let f = parse_table(function)?;
    let built = if phase {
        phase_protocol(&p, &f)?
    } else {
        clean_protocol(&p, &f)?
    };
    let base = qic(&run_trace(&p, &mu)?)?.total();
    let forward = qic(&run_trace(&built, &mu)?)?;
    let mut o = Output::new();
    o.measure("qic", base);
    o.measure(if phase { "phase_qic_a_to_b" } else { "clean_qic_a_to_b" }, forward.a_to_b);
    o.measure(if phase { "phase_qic" } else { "clean_qic" }, forward.total());
    o.check("forward_cost_equals_qic", (forward.a_to_b - base).abs() <= tol);
    save(t.out.as_deref(), &built)?;
    Ok(o)
}

fn reverse(t: &Transform, tol: f64) -> Result<Output, CliError> {
    let p = read_protocol(&t.protocol)?;
    let mu = distribution(t.dist.as_deref(), &p)?;
    let r = reverse_composition(&p)?;
    let base = qic(&run_trace(&p, &mu)?)?.total();
    let trace = run_trace(&r, &mu)?;
    let (q, c) = (qic(&trace)?.total(), cic(&trace)?.total());
    let mut o = Output::new();
    o.measure("qic", base);
    o.measure("reverse_qic", q);
    o.measure("reverse_cic", c);
    o.check("qic_doubles", (q - 2.0 * base).abs() <= tol);
    o.check("cic_equals_qic", (c - base).abs() <= tol);
    save(t.out.as_deref(), &r)?;
    Ok(o)
}

fn ip(n: usize, tol: f64) -> Result<Output, CliError> {
    let r = inner_product_report(n, tol)?;
    let mut o = Output::new();
    o.text(format!(
        "phase_entropy={} qic={} tight={}",
        bits(r.bound),
        bits(r.qic),
        r.tight
    ));
    o.passed = r.holds && r.tight;
    Ok(o)
}

fn randomfn(n: usize, samples: usize, seed: u64) -> Result<Output, CliError> {
    let r = random_function_experiment(n, samples, seed)?;
    let mut o = Output::new();
    for (i, (h2, h)) in r.h2.iter().zip(&r.h).enumerate() {
        o.text(format!("sample={i} h2={} h={}", bits(*h2), bits(*h)));
    }
    for (q, v) in r.h2_quantiles() {
        o.text(format!("quantile={q} h2={}", bits(v)));
    }
    o.text(format!("n={} samples={} seed={}", r.n, r.samples, r.seed));
    o.text(format!(
        "delta={:.9} threshold={:.9} violation_fraction={:.9} tail_bound={:.9}",
        r.delta, r.threshold, r.violation_fraction, r.tail_bound
    ));
    o.text(format!("ordered={} elapsed_ms={}", r.ordered, r.elapsed.as_millis()));
    o.passed = r.ordered;
    Ok(o)
}

fn flowcheck(trials: usize, seed: u64, tol: f64) -> Result<Output, CliError> {
    let e = ["E".to_string()];
    let f = ["F".to_string()];
    let mut worst: f64 = 0.0;
    for k in 0..trials {
        let mut rng = sample_rng(seed, k as u64);
        let process = random_process(k % 4, &mut rng)?;
        worst = worst.max(flow_lemma_residual(&process, &e, &f)?.residual());
    }
    let mut o = Output::new();
    o.text(format!("trials={trials} seed={seed} max_residual={worst:.3e}"));
    o.measure("max_residual", worst);
    o.check("flow_identity", worst <= tol);
    Ok(o)
}

fn ricsim(path: &Path, dist: Option<&Path>, make_safe: bool, out: Option<&Path>, tol: f64) -> Result<Output, CliError> {
    let mut rp = read_reversible(path)?;
    let mu = match dist {
        Some(d) => read_distribution(d)?,
        None => InputDistribution::uniform(rp.x_dim, rp.y_dim),
    };
    let mut o = Output::new();
    if make_safe {
        o.measure("ric_original", ric(&rp, &mu, &Extension::trivial(&mu))?.total);
        rp = safe_reversible(&rp)?;
    }
    let pi = unforget_simulation(&rp)?;
    let r = ric(&rp, &mu, &Extension::trivial(&mu))?.total;
    let info = ic(&pi, &mu)?.total();
    let distance = transcript_distance(&run_reversible(&rp, &mu)?, &run_classical(&pi, &mu)?, pi.rounds.len())?;
    o.measure("ric", r);
    o.measure("ic_simulation", info);
    o.measure("transcript_distance", distance);
    o.measure("cc", rp.communication_bits());
    o.measure("cc_simulation", pi.communication_bits());
    o.check("ic_at_most_ric", info <= r + tol);
    o.check("same_transcripts", distance <= tol);
    o.check(
        "same_communication",
        (rp.communication_bits() - pi.communication_bits()).abs() <= 1e-12,
    );
    if let Some(path) = out {
        write_json(path, &pi)?;
    }
    Ok(o)
}
