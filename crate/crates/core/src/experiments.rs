//! Drivers for the phase-state entropy bounds, Inner Product, random Boolean functions and the
//! convexity inequalities for protocols that never forget.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classical::{ClassicalProtocol, ClassicalRound, OutputRule, Rule};
use crate::costs::{cost_report, no_forget_certify};
use crate::entropy::{binary_entropy, renyi2_entropy, von_neumann_entropy};
use crate::error::{arg, contract, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::protocol::{error_of, Party, QuantumProtocol};
use crate::random::{random_classical_protocol, ClassicalShape};
use crate::state::InputDistribution;
use crate::transforms::quantize_classical;

/// Largest bit count accepted by the random-function experiment.
pub const MAX_RANDOM_FUNCTION_BITS: usize = 6;
const ZERO_ERROR_TOL: f64 = 1e-10;

/// Truth table of f: {0,1}^n_x × {0,1}^n_y → {0,1}, indexed `x · 2^n_y + y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BooleanFunctionTable {
    pub n_x: usize,
    pub n_y: usize,
    values: Vec<u8>,
}

impl BooleanFunctionTable {
    pub fn new(n_x: usize, n_y: usize, values: Vec<u8>) -> Result<Self> {
        if n_x + n_y >= usize::BITS as usize - 1 || values.len() != 1usize << (n_x + n_y) {
            return arg("truth table must list every input pair");
        }
        if values.iter().any(|&v| v > 1) {
            return arg("truth table values must be 0 or 1");
        }
        Ok(Self { n_x, n_y, values })
    }

    pub fn from_fn<F: Fn(usize, usize) -> bool>(n_x: usize, n_y: usize, f: F) -> Self {
        let dy = 1usize << n_y;
        let values = (0..(1usize << n_x) * dy).map(|i| u8::from(f(i / dy, i % dy))).collect();
        Self { n_x, n_y, values }
    }

    pub fn inner_product(n: usize) -> Self {
        Self::from_fn(n, n, |x, y| (x & y).count_ones() % 2 == 1)
    }

    pub fn and() -> Self {
        Self::from_fn(1, 1, |x, y| x == 1 && y == 1)
    }

    pub fn constant(n: usize, value: bool) -> Self {
        Self::from_fn(n, n, |_, _| value)
    }

    /// Uniformly random table.
    pub fn random<R: Rng + ?Sized>(n_x: usize, n_y: usize, rng: &mut R) -> Self {
        let values = (0..1usize << (n_x + n_y)).map(|_| u8::from(rng.gen::<bool>())).collect();
        Self { n_x, n_y, values }
    }

    pub fn x_dim(&self) -> usize {
        1 << self.n_x
    }

    pub fn y_dim(&self) -> usize {
        1 << self.n_y
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.values[x * self.y_dim() + y]
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    /// Table as used by protocol error checks.
    pub fn table(&self) -> Vec<usize> {
        self.values.iter().map(|&v| v as usize).collect()
    }
}

fn check_marginals(f: &BooleanFunctionTable, mu_x: &[f64], mu_y: &[f64]) -> Result<()> {
    if mu_x.len() != f.x_dim() || mu_y.len() != f.y_dim() {
        return arg("marginals do not match the function's input sizes");
    }
    for m in [mu_x, mu_y] {
        if m.iter().any(|p| !(*p >= 0.0)) || (m.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return arg("marginal is not a probability distribution");
        }
    }
    Ok(())
}

/// Weighted overlaps √(µ_X(x)µ_X(x′)) Σ_y µ_Y(y) (−1)^{f(x,y)+f(x′,y)}.
pub fn phase_gram(f: &BooleanFunctionTable, mu_x: &[f64], mu_y: &[f64]) -> Result<ComplexMatrix> {
    check_marginals(f, mu_x, mu_y)?;
    let n = f.x_dim();
    let mut g = ComplexMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let overlap: f64 = mu_y
                .iter()
                .enumerate()
                .map(|(y, &p)| if f.get(a, y) == f.get(b, y) { p } else { -p })
                .sum();
            let v = C64::new((mu_x[a] * mu_x[b]).sqrt() * overlap, 0.0);
            g.set(a, b, v);
            g.set(b, a, v);
        }
    }
    Ok(g)
}

/// H(Y R_Y) of the phase ensemble, from its Gram matrix.
pub fn phase_entropy(f: &BooleanFunctionTable, mu_x: &[f64], mu_y: &[f64]) -> Result<f64> {
    von_neumann_entropy(&phase_gram(f, mu_x, mu_y)?)
}

/// H₂(Y R_Y) = −lg Tr ρ², with Tr ρ² = Σ |G_{xx′}|².
pub fn renyi2_phase_entropy(f: &BooleanFunctionTable, mu_x: &[f64], mu_y: &[f64]) -> Result<f64> {
    let g = phase_gram(f, mu_x, mu_y)?;
    let purity: f64 = g.data().iter().map(|z| z.norm_sqr()).sum();
    Ok(-purity.log2())
}

/// The ensemble state on Y R_Y as a |Y|² × |Y|² matrix.
pub fn phase_state_full(f: &BooleanFunctionTable, mu_x: &[f64], mu_y: &[f64]) -> Result<ComplexMatrix> {
    check_marginals(f, mu_x, mu_y)?;
    let dy = f.y_dim();
    let d = dy * dy;
    let mut rho = ComplexMatrix::zeros(d, d);
    for (x, &px) in mu_x.iter().enumerate().filter(|(_, &p)| p > 0.0) {
        let amp = |y: usize| {
            let s = mu_y[y].sqrt();
            if f.get(x, y) == 1 {
                -s
            } else {
                s
            }
        };
        for a in 0..dy {
            for b in 0..dy {
                let (i, j) = (a * dy + a, b * dy + b);
                rho.set(i, j, rho.get(i, j) + C64::new(px * amp(a) * amp(b), 0.0));
            }
        }
    }
    Ok(rho)
}

/// Entropy of the full ensemble state by diagonalisation.
pub fn phase_entropy_full(f: &BooleanFunctionTable, mu_x: &[f64], mu_y: &[f64]) -> Result<f64> {
    von_neumann_entropy(&phase_state_full(f, mu_x, mu_y)?)
}

pub fn renyi2_phase_entropy_full(f: &BooleanFunctionTable, mu_x: &[f64], mu_y: &[f64]) -> Result<f64> {
    renyi2_entropy(&phase_state_full(f, mu_x, mu_y)?)
}

/// Comparison of a protocol's QIC with the phase-entropy lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport {
    pub qic: f64,
    pub bound: f64,
    pub holds: bool,
    /// The bound is met with equality (within the tolerance).
    pub tight: bool,
}

/// Checks QIC(p, µ_X ⊗ µ_Y) ≥ H(Y R_Y) for a protocol that computes `f` with zero error.
pub fn qic_lower_bound_check(
    p: &QuantumProtocol,
    f: &BooleanFunctionTable,
    mu_x: &[f64],
    mu_y: &[f64],
    tol: f64,
) -> Result<LowerBoundReport> {
    check_marginals(f, mu_x, mu_y)?;
    let mu = InputDistribution::product(mu_x, mu_y)?;
    let err = error_of(p, &f.table(), &mu, true)?;
    if err > ZERO_ERROR_TOL {
        return contract(format!("protocol is not zero-error on f (worst-case error {err:.3e})"));
    }
    let qic = cost_report(p, &mu)?.qic.total();
    let bound = phase_entropy(f, mu_x, mu_y)?;
    Ok(LowerBoundReport {
        qic,
        bound,
        holds: qic >= bound - tol,
        tight: (qic - bound).abs() <= tol,
    })
}

/// Alice sends x; Bob outputs f(x, y).
pub fn send_x_classical(f: &BooleanFunctionTable) -> Result<ClassicalProtocol> {
    let (dx, dy) = (f.x_dim(), f.y_dim());
    let mut pi = ClassicalProtocol::new(dx, dy);
    let send = Rule::from_fn(vec![], dx, &[], 1, &[], |x, _, _, _| x)?;
    pi.rounds.push(ClassicalRound::fixed(Party::Alice, dx, send));
    let out = Rule::from_fn(vec![], dy, &[], 1, &[dx], |y, _, _, h| f.get(h[0], y) as usize)?;
    pi.bob_output = Some(OutputRule { alphabet: 2, rule: out });
    Ok(pi)
}

/// Quantized send-x protocol for IP_n against the phase-entropy bound under the uniform law.
pub fn inner_product_report(n: usize, tol: f64) -> Result<LowerBoundReport> {
    let f = BooleanFunctionTable::inner_product(n);
    let p = quantize_classical(&send_x_classical(&f)?)?;
    let u = vec![1.0 / f.x_dim() as f64; f.x_dim()];
    qic_lower_bound_check(&p, &f, &u, &u, tol)
}

/// Deterministic generator for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomFunctionReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub h2: Vec<f64>,
    pub h: Vec<f64>,
    pub delta: f64,
    /// (1 − δ)·n.
    pub threshold: f64,
    /// Fraction of samples with H₂ below the threshold.
    pub violation_fraction: f64,
    /// exp(−(2^{δn} − 1)²/2).
    pub tail_bound: f64,
    /// Every sample satisfied H₂ ≤ H ≤ n.
    pub ordered: bool,
    pub elapsed: Duration,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let k = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[k]
}

impl RandomFunctionReport {
    /// (q, H₂ quantile) at the quartiles and extremes.
    pub fn h2_quantiles(&self) -> Vec<(f64, f64)> {
        let mut s = self.h2.clone();
        s.sort_by(f64::total_cmp);
        [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|&q| (q, quantile(&s, q))).collect()
    }
}

/// H₂ and H of the phase ensemble of uniformly random f on n + n bits, uniform inputs.
pub fn random_function_experiment(n: usize, samples: usize, seed: u64) -> Result<RandomFunctionReport> {
    if n == 0 || n > MAX_RANDOM_FUNCTION_BITS {
        return arg(format!("n must be between 1 and {MAX_RANDOM_FUNCTION_BITS}"));
    }
    let start = Instant::now();
    let u = vec![1.0 / (1usize << n) as f64; 1 << n];
    let mut h2 = Vec::with_capacity(samples);
    let mut h = Vec::with_capacity(samples);
    for i in 0..samples {
        let f = BooleanFunctionTable::random(n, n, &mut sample_rng(seed, i as u64));
        h2.push(renyi2_phase_entropy(&f, &u, &u)?);
        h.push(phase_entropy(&f, &u, &u)?);
    }
    let nf = n as f64;
    let delta = 1.0 / nf.sqrt();
    let threshold = (1.0 - delta) * nf;
    let ordered = h2.iter().zip(&h).all(|(&a, &b)| a <= b + 1e-9 && b <= nf + 1e-9);
    let below = h2.iter().filter(|&&v| v < threshold).count();
    Ok(RandomFunctionReport {
        n,
        samples,
        seed,
        violation_fraction: if samples == 0 { 0.0 } else { below as f64 / samples as f64 },
        tail_bound: (-(2f64.powf(delta * nf) - 1.0).powi(2) / 2.0).exp(),
        h2,
        h,
        delta,
        threshold,
        ordered,
        elapsed: start.elapsed(),
    })
}

/// Both sides of the convexity sandwich for µ = s·µ1 + (1 − s)·µ2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiConvexityReport {
    pub split: f64,
    /// (µ, µ1, µ2) costs, Alice-to-Bob then Bob-to-Alice.
    pub a_to_b: (f64, f64, f64),
    pub b_to_a: (f64, f64, f64),
    pub h_split: f64,
    /// QIC(µ) ≥ s·QIC(µ1) + (1 − s)·QIC(µ2).
    pub lower_holds: bool,
    /// In each direction, QIC(µ) ≤ s·QIC(µ1) + (1 − s)·QIC(µ2) + H(s).
    pub upper_holds: bool,
    /// The same upper bound on the two-way total.
    pub upper_total_holds: bool,
}

impl QuasiConvexityReport {
    pub fn totals(&self) -> (f64, f64, f64) {
        (
            self.a_to_b.0 + self.b_to_a.0,
            self.a_to_b.1 + self.b_to_a.1,
            self.a_to_b.2 + self.b_to_a.2,
        )
    }
}

fn require_no_forget(p: &QuantumProtocol) -> Result<()> {
    if !p.is_safe() || !no_forget_certify(p, &[])?.certified {
        return contract("the inequalities need a protocol certified not to forget");
    }
    Ok(())
}

pub fn quasi_convexity_check(
    p: &QuantumProtocol,
    mu1: &InputDistribution,
    mu2: &InputDistribution,
    split: f64,
    tol: f64,
) -> Result<QuasiConvexityReport> {
    require_no_forget(p)?;
    let mu = InputDistribution::mix(split, mu1, mu2)?;
    let cost = |m: &InputDistribution| -> Result<(f64, f64)> {
        let q = cost_report(p, m)?.qic;
        Ok((q.a_to_b, q.b_to_a))
    };
    let (m, c1, c2) = (cost(&mu)?, cost(mu1)?, cost(mu2)?);
    let h_split = binary_entropy(split)?;
    let mix = |a: f64, b: f64| split * a + (1.0 - split) * b;
    let a_to_b = (m.0, c1.0, c2.0);
    let b_to_a = (m.1, c1.1, c2.1);
    let tot = (m.0 + m.1, c1.0 + c1.1, c2.0 + c2.1);
    Ok(QuasiConvexityReport {
        split,
        a_to_b,
        b_to_a,
        h_split,
        lower_holds: tot.0 >= mix(tot.1, tot.2) - tol,
        upper_holds: [a_to_b, b_to_a].iter().all(|d| d.0 <= mix(d.1, d.2) + h_split + tol),
        upper_total_holds: tot.0 <= mix(tot.1, tot.2) + h_split + tol,
    })
}

/// The mass-shift bound for a two-bit protocol at µ with w = µ(1,1) ≤ 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct MassShiftReport {
    pub w: f64,
    pub qic_mu: f64,
    pub qic_mu0: f64,
    pub h_w: f64,
    /// QIC(µ) ≤ QIC(µ0) + H(w).
    pub holds: bool,
    /// Convexity sandwich for the split µ = (1 − w)·µ0 + w·δ_(1,1).
    pub split: QuasiConvexityReport,
}

/// µ0: µ conditioned off (1,1).
pub fn remove_corner(mu: &InputDistribution) -> Result<(InputDistribution, f64)> {
    if mu.x_dim() != 2 || mu.y_dim() != 2 {
        return arg("the corner construction needs one-bit inputs");
    }
    let w = mu.get(1, 1);
    if w > 0.5 + 1e-12 {
        return arg(format!("µ(1,1) = {w} exceeds 1/2"));
    }
    let probs = (0..4)
        .map(|i| if i == 3 { 0.0 } else { mu.probabilities()[i] / (1.0 - w) })
        .collect();
    Ok((InputDistribution::new(2, 2, probs)?, w))
}

pub fn appendix_inequality_suite(p: &QuantumProtocol, mu: &InputDistribution, tol: f64) -> Result<MassShiftReport> {
    require_no_forget(p)?;
    let (mu0, w) = remove_corner(mu)?;
    let qic_mu = cost_report(p, mu)?.qic.total();
    let qic_mu0 = cost_report(p, &mu0)?.qic.total();
    let h_w = binary_entropy(w)?;
    let corner = InputDistribution::point_mass(2, 2, 1, 1)?;
    let split = quasi_convexity_check(p, &mu0, &corner, 1.0 - w, tol)?;
    Ok(MassShiftReport {
        w,
        qic_mu,
        qic_mu0,
        h_w,
        holds: qic_mu <= qic_mu0 + h_w + tol,
        split,
    })
}

/// Zero-error protocol for AND on one bit each: up to two random alternating rounds (which may use
/// private and public coins), then the inputs are exchanged until Bob can output x AND y.
pub fn random_and_protocol<R: Rng + ?Sized>(rng: &mut R) -> Result<ClassicalProtocol> {
    let shape = ClassicalShape {
        x_dim: 2,
        y_dim: 2,
        max_rounds: 2,
        public_coin: true,
        alternating: true,
    };
    let mut pi = random_classical_protocol(&shape, rng)?;
    pi.rounds.truncate(rng.gen_range(0..=pi.rounds.len()));
    pi.alice_output = None;
    let n = pi.rounds.len();
    let hd = |pi: &ClassicalProtocol| pi.history_dims(pi.rounds.len());
    let r = pi.public_coin.len();
    if n % 2 == 1 {
        let rule = Rule::from_fn(vec![], 2, &[], r, &hd(&pi), |y, _, _, _| y)?;
        pi.rounds.push(ClassicalRound::fixed(Party::Bob, 2, rule));
    }
    let m = pi.rounds.len();
    let rule = Rule::from_fn(
        vec![],
        2,
        &[],
        r,
        &hd(&pi),
        move |x, _, _, h| if m > n { x & h[m - 1] } else { x },
    )?;
    pi.rounds.push(ClassicalRound::fixed(Party::Alice, 2, rule));
    let last = pi.rounds.len() - 1;
    let out = Rule::from_fn(vec![], 2, &[], r, &hd(&pi), |y, _, _, h| h[last] & y)?;
    pi.bob_output = Some(OutputRule { alphabet: 2, rule: out });
    pi.validate()?;
    Ok(pi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_product_gram_is_scaled_identity() {
        for n in 1..=3 {
            let f = BooleanFunctionTable::inner_product(n);
            let u = vec![1.0 / (1 << n) as f64; 1 << n];
            let g = phase_gram(&f, &u, &u).unwrap();
            let id = ComplexMatrix::identity(1 << n).scale(C64::new(1.0 / (1 << n) as f64, 0.0));
            assert!(g.max_abs_diff(&id) < 1e-12);
        }
    }

    #[test]
    fn constant_functions_have_no_phase_entropy() {
        let f = BooleanFunctionTable::constant(2, true);
        let u = vec![0.25; 4];
        assert!(phase_entropy(&f, &u, &u).unwrap().abs() < 1e-9);
        assert!(renyi2_phase_entropy(&f, &u, &u).unwrap().abs() < 1e-9);
    }
}
