use qicost::costs::{cic, cost_report, cric, hic, qic, qic_of};
use qicost::library::{bounce_family, bounce_uncopied, send_copy, send_input};
use qicost::protocol::run_trace;
use qicost::state::InputDistribution;
use qicost::transforms::safe_version;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

#[test]
fn sending_the_input() {
    let corr = InputDistribution::correlated(2);
    let ind = InputDistribution::uniform(2, 2);
    let p = send_input(2).unwrap();
    assert!(close(qic_of(&p, &corr).unwrap(), 1.0));
    assert!(close(qic_of(&p, &ind).unwrap(), 2.0));
    let s = safe_version(&p).unwrap();
    assert!(s.is_safe());
    assert!(close(qic_of(&s, &corr).unwrap(), 0.0));
    assert!(close(qic_of(&s, &ind).unwrap(), 1.0));
}

#[test]
fn bounce_examples() {
    let ind = InputDistribution::uniform(2, 2);
    let p = bounce_uncopied(2).unwrap();
    assert!(close(qic_of(&p, &ind).unwrap(), 4.0));
    let s = safe_version(&p).unwrap();
    assert!(close(qic_of(&s, &ind).unwrap(), 2.0));
    let t = run_trace(&s, &ind).unwrap();
    let cr = cric(&t).unwrap();
    assert!(close(cr.a_from_b, 1.0));
    for r in 1..=3 {
        let p = bounce_family(2, r).unwrap();
        let q = qic_of(&p, &ind).unwrap();
        assert!(close(q, (2 * r + 1) as f64), "r={r} q={q}");
        let q = qic_of(&safe_version(&p).unwrap(), &ind).unwrap();
        assert!(close(q, 1.0), "r={r} safe q={q}");
    }
}

#[test]
fn safe_copy_costs() {
    let ind = InputDistribution::uniform(2, 2);
    let rep = cost_report(&send_copy(2).unwrap(), &ind).unwrap();
    assert!(close(rep.cic.a_to_b, 1.0));
    assert!(close(rep.cric.total(), 0.0));
    assert!(close(rep.hic.a_to_b, 1.0));
    let t = run_trace(&send_copy(2).unwrap(), &ind).unwrap();
    assert!(close(qic(&t).unwrap().total(), 1.0));
    assert!(close(cic(&t).unwrap().total(), 1.0));
    assert!(close(hic(&t).unwrap().b_to_a, 0.0));
}
