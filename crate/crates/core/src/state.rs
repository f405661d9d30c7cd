//! Global pure states, density operators and input distributions over labelled registers.
//!
//! Pure states keep only their nonzero amplitudes. Reduced states and entropies are built
//! from that support directly, and block-diagonal structure in a reduced state is split
//! off before diagonalisation, so classical registers cost almost nothing.

use std::collections::HashMap;

use crate::entropy::{density_spectrum, entropy_of, POSITIVITY_TOL};
use crate::error::{arg, QicError, Result};
use crate::limits;
use crate::linalg::{eigenvalues_unchecked, ComplexMatrix, C64, ZERO};
use crate::registers::{RegisterLabel, RegisterSystem, SubIndexer};

/// Amplitudes below this modulus are dropped after each operation.
pub const PRUNE_TOL: f64 = 1e-14;
const NORM_TOL: f64 = 1e-8;

pub const REG_X: &str = "X";
pub const REG_Y: &str = "Y";
pub const REG_RX: &str = "RX";
pub const REG_RY: &str = "RY";

// ---------------------------------------------------------------------------
// Input distributions

/// Distribution µ over input pairs, stored x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    x_dim: usize,
    y_dim: usize,
    probs: Vec<f64>,
}

impl InputDistribution {
    pub fn new(x_dim: usize, y_dim: usize, probs: Vec<f64>) -> Result<Self> {
        if x_dim == 0 || y_dim == 0 {
            return arg("input alphabets must be nonempty");
        }
        if probs.len() != x_dim * y_dim {
            return arg(format!("expected {} probabilities, got {}", x_dim * y_dim, probs.len()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return arg(format!("probability {p} is negative or not finite"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return arg(format!("probabilities sum to {total}"));
        }
        Ok(Self { x_dim, y_dim, probs })
    }

    pub fn uniform(x_dim: usize, y_dim: usize) -> Self {
        let n = x_dim * y_dim;
        Self::new(x_dim, y_dim, vec![1.0 / n as f64; n]).expect("uniform is valid")
    }

    pub fn point_mass(x_dim: usize, y_dim: usize, x: usize, y: usize) -> Result<Self> {
        if x >= x_dim || y >= y_dim {
            return arg("point outside the input alphabets");
        }
        let mut probs = vec![0.0; x_dim * y_dim];
        probs[x * y_dim + y] = 1.0;
        Self::new(x_dim, y_dim, probs)
    }

    /// Uniform on the diagonal `x = y`.
    pub fn correlated(dim: usize) -> Self {
        let mut probs = vec![0.0; dim * dim];
        for x in 0..dim {
            probs[x * dim + x] = 1.0 / dim as f64;
        }
        Self::new(dim, dim, probs).expect("diagonal is valid")
    }

    pub fn product(mu_x: &[f64], mu_y: &[f64]) -> Result<Self> {
        let probs = mu_x.iter().flat_map(|a| mu_y.iter().map(move |b| a * b)).collect();
        Self::new(mu_x.len(), mu_y.len(), probs)
    }

    /// Convex combination `p·a + (1−p)·b`.
    pub fn mix(p: f64, a: &Self, b: &Self) -> Result<Self> {
        if a.x_dim != b.x_dim || a.y_dim != b.y_dim {
            return arg("cannot mix distributions over different alphabets");
        }
        if !(0.0..=1.0).contains(&p) {
            return arg(format!("{p} is not a probability"));
        }
        let probs = a.probs.iter().zip(&b.probs).map(|(u, v)| p * u + (1.0 - p) * v).collect();
        Self::new(a.x_dim, a.y_dim, probs)
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    pub fn y_dim(&self) -> usize {
        self.y_dim
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.y_dim + y]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.x_dim)
            .map(|x| (0..self.y_dim).map(|y| self.get(x, y)).sum())
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.y_dim)
            .map(|y| (0..self.x_dim).map(|x| self.get(x, y)).sum())
            .collect()
    }

    pub fn is_product(&self, tol: f64) -> bool {
        let (mx, my) = (self.marginal_x(), self.marginal_y());
        (0..self.x_dim).all(|x| (0..self.y_dim).all(|y| (self.get(x, y) - mx[x] * my[y]).abs() <= tol))
    }
}

/// The purification Σ √µ(x,y) |x⟩_X |x⟩_RX |y⟩_Y |y⟩_RY.
pub fn canonical_purification(mu: &InputDistribution) -> PureState {
    let (dx, dy) = (mu.x_dim, mu.y_dim);
    let system = RegisterSystem::new(vec![
        RegisterLabel::new(REG_X, dx),
        RegisterLabel::new(REG_RX, dx),
        RegisterLabel::new(REG_Y, dy),
        RegisterLabel::new(REG_RY, dy),
    ])
    .expect("fixed labels are distinct");
    let mut entries = Vec::new();
    for x in 0..dx {
        for y in 0..dy {
            let p = mu.get(x, y);
            if p > 0.0 {
                let idx = system.index_of(&[x, x, y, y]);
                entries.push((idx, C64::new(p.sqrt(), 0.0)));
            }
        }
    }
    PureState::from_sorted(system, entries)
}

// ---------------------------------------------------------------------------
// Shared interface

/// Anything whose subsystem entropies can be evaluated.
pub trait QuantumState {
    fn system(&self) -> &RegisterSystem;
    /// Von Neumann entropy of the listed registers, in bits.
    fn subsystem_entropy(&self, names: &[&str]) -> Result<f64>;
}

/// Conditional quantum mutual information I(A;B|C) = H(AC) + H(BC) − H(C) − H(ABC).
pub fn cqmi<S: QuantumState + ?Sized>(state: &S, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    for (i, n) in a.iter().chain(b).chain(c).enumerate() {
        if !state.system().contains(n) {
            return arg(format!("unknown register {n}"));
        }
        if a.iter().chain(b).chain(c).take(i).any(|m| m == n) {
            return arg(format!("register {n} appears in more than one argument"));
        }
    }
    let ac: Vec<&str> = a.iter().chain(c).copied().collect();
    let bc: Vec<&str> = b.iter().chain(c).copied().collect();
    let abc: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
    let hac = state.subsystem_entropy(&ac)?;
    let hbc = state.subsystem_entropy(&bc)?;
    let hc = state.subsystem_entropy(c)?;
    let habc = state.subsystem_entropy(&abc)?;
    Ok(hac + hbc - hc - habc)
}

/// Convenience wrapper over owned names.
pub fn cqmi_named<S: QuantumState + ?Sized>(state: &S, a: &[String], b: &[String], c: &[String]) -> Result<f64> {
    cqmi(state, &strs(a), &strs(b), &strs(c))
}

/// Σ_{i≠j} |ρ_ij|: zero exactly when ρ is diagonal in the computational basis.
pub fn offdiagonal_mass(rho: &ComplexMatrix) -> f64 {
    let n = rho.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += rho.get(i, j).norm();
            }
        }
    }
    s
}

pub(crate) fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

// ---------------------------------------------------------------------------
// Pure states

/// Pure state over a register system, storing nonzero amplitudes sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    system: RegisterSystem,
    entries: Vec<(u64, C64)>,
}

impl PureState {
    fn from_sorted(system: RegisterSystem, entries: Vec<(u64, C64)>) -> Self {
        Self { system, entries }
    }

    /// Builds a state from `(index, amplitude)` pairs; repeated indices are summed.
    pub fn from_entries(system: RegisterSystem, mut entries: Vec<(u64, C64)>) -> Result<Self> {
        let total = system.total_dim();
        if let Some((i, _)) = entries.iter().find(|(i, _)| *i >= total) {
            return arg(format!("index {i} outside dimension {total}"));
        }
        entries.sort_unstable_by_key(|e| e.0);
        let s = Self::from_sorted(system, merge_sorted(entries));
        s.check_norm()?;
        s.check_support()?;
        Ok(s)
    }

    pub fn from_dense(system: RegisterSystem, amplitudes: &[C64]) -> Result<Self> {
        if amplitudes.len() as u128 != system.total_dim_u128() {
            return arg(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                system.total_dim()
            ));
        }
        let entries = amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(i, a)| (i as u64, *a))
            .collect();
        let s = Self::from_sorted(system, entries);
        s.check_norm()?;
        Ok(s)
    }

    /// Computational basis state with the given digits.
    pub fn basis(system: RegisterSystem, digits: &[usize]) -> Result<Self> {
        if digits.len() != system.len() || digits.iter().zip(system.dims()).any(|(d, n)| *d >= n) {
            return arg("digits do not fit the register system");
        }
        let idx = system.index_of(digits);
        Ok(Self::from_sorted(system, vec![(idx, C64::new(1.0, 0.0))]))
    }

    /// The state on no registers (scalar 1).
    pub fn empty() -> Self {
        Self::from_sorted(RegisterSystem::default(), vec![(0, C64::new(1.0, 0.0))])
    }

    fn check_norm(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(QicError::Normalization { trace: n });
        }
        Ok(())
    }

    fn check_support(&self) -> Result<()> {
        if self.entries.len() as u128 > limits::support_cap() {
            return Err(QicError::DimensionCap {
                requested: self.entries.len() as u128,
                cap: limits::support_cap(),
            });
        }
        Ok(())
    }

    pub fn system(&self) -> &RegisterSystem {
        &self.system
    }

    pub fn entries(&self) -> &[(u64, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, index: u64) -> C64 {
        match self.entries.binary_search_by_key(&index, |e| e.0) {
            Ok(p) => self.entries[p].1,
            Err(_) => ZERO,
        }
    }

    pub fn amplitude_at(&self, digits: &[usize]) -> C64 {
        self.amplitude(self.system.index_of(digits))
    }

    /// Dense amplitude vector (bounded by the support cap).
    pub fn amplitudes(&self) -> Result<Vec<C64>> {
        let d = self.system.total_dim_u128();
        if d > limits::support_cap() {
            return Err(QicError::DimensionCap {
                requested: d,
                cap: limits::support_cap(),
            });
        }
        let mut out = vec![ZERO; d as usize];
        for &(i, a) in &self.entries {
            out[i as usize] = a;
        }
        Ok(out)
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let system = self.system.concat(&other.system)?;
        let od = other.system.total_dim();
        let mut entries = Vec::with_capacity(self.entries.len() * other.entries.len());
        for &(i, a) in &self.entries {
            for &(j, b) in &other.entries {
                entries.push((i * od + j, a * b));
            }
        }
        let s = Self::from_sorted(system, entries);
        s.check_support()?;
        Ok(s)
    }

    /// Reorders the registers; `new_order` lists every register name once.
    pub fn permute(&self, new_order: &[&str]) -> Result<PureState> {
        if new_order.len() != self.system.len() {
            return arg("new order must list every register exactly once");
        }
        let pos = self.system.positions(new_order)?;
        let labels: Vec<_> = pos.iter().map(|&p| self.system.labels()[p].clone()).collect();
        let system = RegisterSystem::new(labels)?;
        let idx = SubIndexer::new(&self.system, &pos);
        let mut entries: Vec<_> = self.entries.iter().map(|&(i, a)| (idx.extract(i), a)).collect();
        entries.sort_unstable_by_key(|e| e.0);
        Ok(Self::from_sorted(system, entries))
    }

    /// Renames one register in place.
    pub fn rename(&self, from: &str, to: &str) -> Result<PureState> {
        let p = match self.system.position(from) {
            Some(p) => p,
            None => return arg(format!("unknown register {from}")),
        };
        let mut labels = self.system.labels().to_vec();
        labels[p].name = to.to_string();
        Ok(Self::from_sorted(RegisterSystem::new(labels)?, self.entries.clone()))
    }

    /// Reinterprets one register as a big-endian product of `parts`.
    pub fn split_register(&self, name: &str, parts: &[RegisterLabel]) -> Result<PureState> {
        let p = match self.system.position(name) {
            Some(p) => p,
            None => return arg(format!("unknown register {name}")),
        };
        let prod: usize = parts.iter().map(|l| l.dim).product();
        if prod != self.system.labels()[p].dim {
            return arg(format!("parts of {name} multiply to {prod}"));
        }
        let mut labels = self.system.labels().to_vec();
        labels.splice(p..=p, parts.iter().cloned());
        Ok(Self::from_sorted(RegisterSystem::new(labels)?, self.entries.clone()))
    }

    /// Applies a linear map from `inputs` to `outputs`. The input registers are removed and
    /// the outputs appended at the end of the register order.
    pub fn apply_map(&self, inputs: &[RegisterLabel], outputs: &[RegisterLabel], matrix: &ComplexMatrix) -> Result<PureState> {
        let names: Vec<&str> = inputs.iter().map(|l| l.name.as_str()).collect();
        let in_pos = self.system.positions(&names)?;
        for (l, &p) in inputs.iter().zip(&in_pos) {
            if self.system.labels()[p].dim != l.dim {
                return arg(format!(
                    "register {} has dimension {}, not {}",
                    l.name,
                    self.system.labels()[p].dim,
                    l.dim
                ));
            }
        }
        let din: usize = inputs.iter().map(|l| l.dim).product();
        let dout: usize = outputs.iter().map(|l| l.dim).product();
        if matrix.rows() != dout || matrix.cols() != din {
            return arg(format!(
                "map is {}x{} but registers need {dout}x{din}",
                matrix.rows(),
                matrix.cols()
            ));
        }
        let rest_pos: Vec<usize> = (0..self.system.len()).filter(|p| !in_pos.contains(p)).collect();
        let mut labels: Vec<_> = rest_pos.iter().map(|&p| self.system.labels()[p].clone()).collect();
        labels.extend(outputs.iter().cloned());
        let system = RegisterSystem::new(labels)?;
        let in_idx = SubIndexer::new(&self.system, &in_pos);
        let rest_idx = SubIndexer::new(&self.system, &rest_pos);
        let cols = matrix.sparse_columns();
        let dout = dout as u64;
        let mut entries = Vec::with_capacity(self.entries.len() * 2);
        for &(i, a) in &self.entries {
            let base = rest_idx.extract(i) * dout;
            for &(row, v) in &cols[in_idx.extract(i) as usize] {
                entries.push((base + row as u64, a * v));
            }
        }
        entries.sort_unstable_by_key(|e| e.0);
        let s = Self::from_sorted(system, merge_sorted(entries));
        s.check_support()?;
        Ok(s)
    }

    /// ⟨self|other⟩ after aligning `other` to this register order.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        let order: Vec<String> = self.system.names();
        let refs: Vec<&str> = order.iter().map(String::as_str).collect();
        let o = other.permute(&refs)?;
        if o.system != self.system {
            return arg("states live on different register systems");
        }
        let mut acc = ZERO;
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < o.entries.len() {
            match self.entries[i].0.cmp(&o.entries[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.entries[i].1.conj() * o.entries[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(acc)
    }

    /// Reduced density operator on `keep`, in the listed order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityOperator> {
        let keep_pos = self.system.positions(keep)?;
        let labels: Vec<_> = keep_pos.iter().map(|&p| self.system.labels()[p].clone()).collect();
        let ksys = RegisterSystem::new(labels)?;
        let kd = ksys.total_dim_u128();
        if kd > limits::dim_cap() as u128 {
            return Err(QicError::DimensionCap {
                requested: kd,
                cap: limits::dim_cap() as u128,
            });
        }
        let kd = kd as usize;
        let rest_pos: Vec<usize> = (0..self.system.len()).filter(|p| !keep_pos.contains(p)).collect();
        let groups = self.grouped(&keep_pos, &rest_pos);
        let mut m = ComplexMatrix::zeros(kd, kd);
        for g in groups.chunk_by(|a, b| a.0 == b.0) {
            for &(_, k1, a1) in g {
                for &(_, k2, a2) in g {
                    let v = m.get(k1 as usize, k2 as usize) + a1 * a2.conj();
                    m.set(k1 as usize, k2 as usize, v);
                }
            }
        }
        Ok(DensityOperator { system: ksys, matrix: m })
    }

    /// `(rest index, keep index, amplitude)` triples sorted by rest index.
    fn grouped(&self, keep_pos: &[usize], rest_pos: &[usize]) -> Vec<(u64, u64, C64)> {
        let k = SubIndexer::new(&self.system, keep_pos);
        let r = SubIndexer::new(&self.system, rest_pos);
        let mut v: Vec<_> = self.entries.iter().map(|&(i, a)| (r.extract(i), k.extract(i), a)).collect();
        v.sort_unstable_by_key(|e| (e.0, e.1));
        v
    }

    /// Nonzero eigenvalues of the reduced state on `names`.
    pub fn subsystem_spectrum(&self, names: &[&str]) -> Result<Vec<f64>> {
        let pos = self.system.positions(names)?;
        let comp: Vec<usize> = (0..self.system.len()).filter(|p| !pos.contains(p)).collect();
        let norm = self.norm_sqr();
        if pos.is_empty() || comp.is_empty() {
            return Ok(vec![norm]);
        }
        // A pure state's two marginals share their nonzero spectrum; use the smaller support.
        let support = |p: &[usize]| {
            let idx = SubIndexer::new(&self.system, p);
            let mut v: Vec<u64> = self.entries.iter().map(|&(i, _)| idx.extract(i)).collect();
            v.sort_unstable();
            v.dedup();
            v.len()
        };
        let (keep, rest) = if support(&pos) <= support(&comp) {
            (pos, comp)
        } else {
            (comp, pos)
        };
        let groups = self.grouped(&keep, &rest);
        block_spectrum(&groups)
    }
}

impl QuantumState for PureState {
    fn system(&self) -> &RegisterSystem {
        &self.system
    }

    fn subsystem_entropy(&self, names: &[&str]) -> Result<f64> {
        let eigs = self.subsystem_spectrum(names)?;
        let mut clipped = Vec::with_capacity(eigs.len());
        for v in eigs {
            if v < -POSITIVITY_TOL {
                return Err(QicError::Positivity { value: v });
            }
            clipped.push(v.clamp(0.0, 1.0));
        }
        Ok(entropy_of(&clipped))
    }
}

fn merge_sorted(entries: Vec<(u64, C64)>) -> Vec<(u64, C64)> {
    let mut out: Vec<(u64, C64)> = Vec::with_capacity(entries.len());
    for (i, a) in entries {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 += a,
            _ => out.push((i, a)),
        }
    }
    out.retain(|(_, a)| a.norm() > PRUNE_TOL);
    out
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

/// Eigenvalues of Σ_r |ψ_r⟩⟨ψ_r| where each rest-group r contributes one vector over keep indices.
/// Keep indices that never share a group lie in different diagonal blocks.
fn block_spectrum(groups: &[(u64, u64, C64)]) -> Result<Vec<f64>> {
    let mut ids: HashMap<u64, usize> = HashMap::new();
    for &(_, k, _) in groups {
        let n = ids.len();
        ids.entry(k).or_insert(n);
    }
    let n = ids.len();
    let mut uf = UnionFind((0..n).collect());
    for g in groups.chunk_by(|a, b| a.0 == b.0) {
        let first = ids[&g[0].1];
        for e in &g[1..] {
            uf.union(first, ids[&e.1]);
        }
    }
    // Local numbering inside each block.
    let mut block_of = vec![0usize; n];
    let mut local = vec![0usize; n];
    let mut sizes: Vec<usize> = Vec::new();
    let mut root_block: HashMap<usize, usize> = HashMap::new();
    for id in 0..n {
        let r = uf.find(id);
        let b = *root_block.entry(r).or_insert_with(|| {
            sizes.push(0);
            sizes.len() - 1
        });
        block_of[id] = b;
        local[id] = sizes[b];
        sizes[b] += 1;
    }
    if let Some(&big) = sizes.iter().max() {
        if big > limits::dim_cap() {
            return Err(QicError::DimensionCap {
                requested: big as u128,
                cap: limits::dim_cap() as u128,
            });
        }
    }
    let mut blocks: Vec<Vec<C64>> = sizes.iter().map(|&s| vec![ZERO; s * s]).collect();
    for g in groups.chunk_by(|a, b| a.0 == b.0) {
        let b = block_of[ids[&g[0].1]];
        let s = sizes[b];
        let blk = &mut blocks[b];
        for &(_, k1, a1) in g {
            let l1 = local[ids[&k1]];
            for &(_, k2, a2) in g {
                blk[l1 * s + local[ids[&k2]]] += a1 * a2.conj();
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for (blk, &s) in blocks.into_iter().zip(&sizes) {
        out.extend(eigenvalues_unchecked(s, blk));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Density operators

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    system: RegisterSystem,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(system: RegisterSystem, matrix: ComplexMatrix) -> Result<Self> {
        let d = system.total_dim_u128();
        if matrix.rows() as u128 != d || matrix.cols() as u128 != d {
            return arg("matrix does not match the register system");
        }
        if d > limits::dim_cap() as u128 {
            return Err(QicError::DimensionCap {
                requested: d,
                cap: limits::dim_cap() as u128,
            });
        }
        let dev = matrix.hermitian_deviation();
        if dev > 1e-10 {
            return Err(QicError::NotHermitian { deviation: dev });
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > 1e-8 {
            return Err(QicError::Normalization { trace: tr });
        }
        density_spectrum(&matrix)?;
        Ok(Self { system, matrix })
    }

    pub fn from_pure(state: &PureState) -> Result<Self> {
        let names = state.system.names();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        state.partial_trace(&refs)
    }

    pub fn system(&self) -> &RegisterSystem {
        &self.system
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityOperator> {
        let keep_pos = self.system.positions(keep)?;
        let rest_pos: Vec<usize> = (0..self.system.len()).filter(|p| !keep_pos.contains(p)).collect();
        let k = SubIndexer::new(&self.system, &keep_pos);
        let r = SubIndexer::new(&self.system, &rest_pos);
        let kd = k.total as usize;
        let d = self.matrix.rows();
        let ki: Vec<usize> = (0..d as u64).map(|i| k.extract(i) as usize).collect();
        let ri: Vec<u64> = (0..d as u64).map(|i| r.extract(i)).collect();
        let mut m = ComplexMatrix::zeros(kd, kd);
        for i in 0..d {
            for j in 0..d {
                if ri[i] == ri[j] {
                    let v = m.get(ki[i], ki[j]) + self.matrix.get(i, j);
                    m.set(ki[i], ki[j], v);
                }
            }
        }
        let labels = keep_pos.iter().map(|&p| self.system.labels()[p].clone()).collect();
        Ok(Self {
            system: RegisterSystem::new(labels)?,
            matrix: m,
        })
    }

    pub fn permute(&self, new_order: &[&str]) -> Result<DensityOperator> {
        if new_order.len() != self.system.len() {
            return arg("new order must list every register exactly once");
        }
        self.partial_trace(new_order)
    }

    /// `self ⊗ other` on concatenated registers.
    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        Ok(Self {
            system: self.system.concat(&other.system)?,
            matrix: crate::linalg::kron(&self.matrix, &other.matrix)?,
        })
    }
}

impl QuantumState for DensityOperator {
    fn system(&self) -> &RegisterSystem {
        &self.system
    }

    fn subsystem_entropy(&self, names: &[&str]) -> Result<f64> {
        if names.is_empty() {
            return Ok(0.0);
        }
        let rho = self.partial_trace(names)?;
        Ok(entropy_of(&density_spectrum(&rho.matrix)?.eigenvalues))
    }
}
