//! Qudit states stored sparsely over product-basis labels, record projectors
//! on site subsets, and the record conditions on branching states.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Tolerance for projector algebra.
pub const PROJECTOR_TOL: f64 = 1e-12;
/// Tolerance for branch equality and trace orthogonality.
pub const RECORD_TOL: f64 = 1e-10;

type Label = Vec<u8>;

/// A normalized state of `n_sites` qudits of dimension `local_dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchState {
    pub n_sites: usize,
    pub local_dim: usize,
    pub amplitudes: BTreeMap<Label, Complex64>,
}

impl BranchState {
    /// Builds and normalizes a state; zero amplitudes are dropped.
    pub fn new(
        n_sites: usize,
        local_dim: usize,
        terms: impl IntoIterator<Item = (Label, Complex64)>,
    ) -> Result<Self> {
        if n_sites == 0 || !(2..=255).contains(&local_dim) {
            return Err(domain("need at least one site and 2 <= local_dim <= 255"));
        }
        let mut amplitudes = BTreeMap::new();
        for (label, a) in terms {
            if label.len() != n_sites || label.iter().any(|&v| v as usize >= local_dim) {
                return Err(domain(format!(
                    "label {label:?} does not fit {n_sites} sites of dimension {local_dim}"
                )));
            }
            *amplitudes.entry(label).or_insert(Complex64::default()) += a;
        }
        let mut s = Self {
            n_sites,
            local_dim,
            amplitudes,
        };
        s.prune();
        let n = s.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(domain("state is not normalizable"));
        }
        for a in s.amplitudes.values_mut() {
            *a /= n;
        }
        Ok(s)
    }

    /// `Σ_i |i⟩^{⊗N}` over `d` alternatives.
    pub fn ghz(n_sites: usize, local_dim: usize) -> Result<Self> {
        Self::new(
            n_sites,
            local_dim,
            (0..local_dim).map(|i| (vec![i as u8; n_sites], Complex64::new(1.0, 0.0))),
        )
    }

    /// Product over neighbouring pairs of `(|00⟩ + s|11⟩)` summed over `s = ±1`.
    pub fn paired(n_pairs: usize) -> Result<Self> {
        let mut terms: BTreeMap<Label, Complex64> = BTreeMap::new();
        for sign in [1.0, -1.0] {
            for bits in 0..(1u32 << n_pairs) {
                let mut label = Vec::with_capacity(2 * n_pairs);
                let mut amp = 1.0;
                for p in 0..n_pairs {
                    let b = ((bits >> p) & 1) as u8;
                    label.extend([b, b]);
                    if b == 1 {
                        amp *= sign;
                    }
                }
                *terms.entry(label).or_default() += Complex64::new(amp, 0.0);
            }
        }
        Self::new(2 * n_pairs, 2, terms)
    }

    /// Pairs entangled within each branch: `Π(|00⟩+|11⟩) + Π(|22⟩+|33⟩)`.
    pub fn entangled_blocks(n_pairs: usize) -> Result<Self> {
        let mut terms = Vec::new();
        for offset in [0u8, 2] {
            for bits in 0..(1u32 << n_pairs) {
                let label = (0..n_pairs)
                    .flat_map(|p| {
                        let b = ((bits >> p) & 1) as u8 + offset;
                        [b, b]
                    })
                    .collect();
                terms.push((label, Complex64::new(1.0, 0.0)));
            }
        }
        Self::new(2 * n_pairs, 4, terms)
    }

    fn prune(&mut self) {
        self.amplitudes.retain(|_, a| a.norm() > 1e-300);
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .values()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn distance(a: &BTreeMap<Label, Complex64>, b: &BTreeMap<Label, Complex64>) -> f64 {
        let keys: BTreeSet<&Label> = a.keys().chain(b.keys()).collect();
        keys.into_iter()
            .map(|k| {
                let x = a.get(k).copied().unwrap_or_default();
                let y = b.get(k).copied().unwrap_or_default();
                (x - y).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Maps every basis configuration through a linear transform of its
    /// label vector; transformed labels must be integers in `[0, d)`.
    pub fn relabel(&self, transform: &[Vec<Complex64>]) -> Result<Self> {
        let n = self.n_sites;
        if transform.len() != n || transform.iter().any(|r| r.len() != n) {
            return Err(domain("transform must be n_sites × n_sites"));
        }
        let mut terms = Vec::with_capacity(self.amplitudes.len());
        for (label, a) in &self.amplitudes {
            let mut out = Vec::with_capacity(n);
            for row in transform {
                let v: Complex64 = row.iter().zip(label).map(|(t, &l)| t * l as f64).sum();
                let r = v.re.round();
                if (v - Complex64::new(r, 0.0)).norm() > PROJECTOR_TOL
                    || r < 0.0
                    || r >= self.local_dim as f64
                {
                    return Err(domain(format!("label {label:?} maps outside the basis")));
                }
                out.push(r as u8);
            }
            terms.push((out, *a));
        }
        Self::new(n, self.local_dim, terms)
    }
}

/// Orthogonal projectors on a subset of sites, as dense matrices over the
/// region's product basis (first listed site most significant).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordProjectorSet {
    pub region: Vec<usize>,
    pub projectors: Vec<Vec<Vec<Complex64>>>,
}

impl RecordProjectorSet {
    /// Validates `Π² = Π = Π†` and `ΣΠ = 1` on the region.
    pub fn new(
        region: Vec<usize>,
        projectors: Vec<Vec<Vec<Complex64>>>,
        local_dim: usize,
    ) -> Result<Self> {
        let dim = local_dim
            .checked_pow(region.len() as u32)
            .ok_or_else(|| domain("region too large"))?;
        if region.is_empty() || region.iter().collect::<BTreeSet<_>>().len() != region.len() {
            return Err(domain("region must list distinct sites"));
        }
        let mut sum = vec![vec![Complex64::default(); dim]; dim];
        for p in &projectors {
            if p.len() != dim || p.iter().any(|r| r.len() != dim) {
                return Err(domain(format!("projector must be {dim} × {dim}")));
            }
            for i in 0..dim {
                for j in 0..dim {
                    if (p[i][j] - p[j][i].conj()).norm() > PROJECTOR_TOL {
                        return Err(domain("projector is not Hermitian"));
                    }
                    let sq: Complex64 = (0..dim).map(|l| p[i][l] * p[l][j]).sum();
                    if (sq - p[i][j]).norm() > PROJECTOR_TOL {
                        return Err(domain("projector is not idempotent"));
                    }
                    sum[i][j] += p[i][j];
                }
            }
        }
        for (i, row) in sum.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (v - want).norm() > PROJECTOR_TOL {
                    return Err(domain("projectors do not sum to the identity"));
                }
            }
        }
        Ok(Self { region, projectors })
    }

    /// Projectors onto spans of computational basis states of one site.
    pub fn single_site(site: usize, local_dim: usize, blocks: &[&[usize]]) -> Result<Self> {
        let projectors = blocks
            .iter()
            .map(|b| {
                let mut p = vec![vec![Complex64::default(); local_dim]; local_dim];
                for &v in *b {
                    if v < local_dim {
                        p[v][v] = Complex64::new(1.0, 0.0);
                    }
                }
                p
            })
            .collect();
        Self::new(vec![site], projectors, local_dim)
    }

    /// Computational projectors `|v⟩⟨v|` on one site.
    pub fn computational(site: usize, local_dim: usize) -> Result<Self> {
        let blocks: Vec<Vec<usize>> = (0..local_dim).map(|v| vec![v]).collect();
        let refs: Vec<&[usize]> = blocks.iter().map(|b| b.as_slice()).collect();
        Self::single_site(site, local_dim, &refs)
    }

    /// Rank-one projectors on vectors given over the region's basis, completed
    /// by the projector on their orthogonal complement.
    pub fn rank_one(
        region: Vec<usize>,
        vectors: &[Vec<Complex64>],
        local_dim: usize,
    ) -> Result<Self> {
        let dim = local_dim.pow(region.len() as u32);
        let mut projectors = Vec::new();
        let mut rest = vec![vec![Complex64::default(); dim]; dim];
        for (i, row) in rest.iter_mut().enumerate() {
            row[i] = Complex64::new(1.0, 0.0);
        }
        for v in vectors {
            let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let p: Vec<Vec<Complex64>> = (0..dim)
                .map(|i| (0..dim).map(|j| v[i] * v[j].conj() / (n * n)).collect())
                .collect();
            for i in 0..dim {
                for j in 0..dim {
                    rest[i][j] -= p[i][j];
                }
            }
            projectors.push(p);
        }
        projectors.push(rest);
        Self::new(region, projectors, local_dim)
    }

    fn region_index(&self, label: &[u8], d: usize) -> usize {
        self.region
            .iter()
            .fold(0, |acc, &s| acc * d + label[s] as usize)
    }

    fn write_region(&self, label: &mut [u8], mut idx: usize, d: usize) {
        for &s in self.region.iter().rev() {
            label[s] = (idx % d) as u8;
            idx /= d;
        }
    }

    /// `Π_i|Ψ⟩`, unnormalized.
    pub fn apply(&self, i: usize, state: &BranchState) -> BTreeMap<Label, Complex64> {
        let d = state.local_dim;
        let p = &self.projectors[i];
        let mut out: BTreeMap<Label, Complex64> = BTreeMap::new();
        for (label, a) in &state.amplitudes {
            let r = self.region_index(label, d);
            for (r2, row) in p.iter().enumerate() {
                let c = row[r];
                if c.norm() == 0.0 {
                    continue;
                }
                let mut l2 = label.clone();
                self.write_region(&mut l2, r2, d);
                *out.entry(l2).or_default() += c * a;
            }
        }
        out.retain(|_, a| a.norm() > 1e-15);
        out
    }
}

/// `Tr(ρ_i ρ_j)` of the reductions of two (unnormalized) vectors onto `region`.
fn reduced_overlap(
    region: &[usize],
    a: &BTreeMap<Label, Complex64>,
    b: &BTreeMap<Label, Complex64>,
) -> f64 {
    // ρ_a(r, r') = Σ_e a(r, e) a*(r', e); Tr ρ_a ρ_b = Σ |Σ_r a(r,e) b*(r,e')|² over (e, e')
    let split = |m: &BTreeMap<Label, Complex64>| {
        let mut by_env: BTreeMap<Label, BTreeMap<Label, Complex64>> = BTreeMap::new();
        for (label, v) in m {
            let r: Label = region.iter().map(|&s| label[s]).collect();
            let e: Label = label
                .iter()
                .enumerate()
                .filter(|(i, _)| !region.contains(i))
                .map(|(_, &x)| x)
                .collect();
            by_env.entry(e).or_default().insert(r, *v);
        }
        by_env
    };
    let sa = split(a);
    let sb = split(b);
    let mut total = 0.0;
    for ea in sa.values() {
        for eb in sb.values() {
            let s: Complex64 = ea
                .iter()
                .filter_map(|(r, x)| eb.get(r).map(|y| x * y.conj()))
                .sum();
            total += s.norm_sqr();
        }
    }
    total
}

/// Whether every region's projectors select the same branches `|Ψ_i⟩` and
/// the branch reductions on each region are trace-orthogonal.
pub fn verify_records(state: &BranchState, regions: &[RecordProjectorSet]) -> Result<bool> {
    let mut used = BTreeSet::new();
    for r in regions {
        if r.region.iter().any(|&s| s >= state.n_sites) {
            return Err(domain("region refers to a site outside the state"));
        }
        for &s in &r.region {
            if !used.insert(s) {
                return Err(domain(format!("regions overlap at site {s}")));
            }
        }
        let dim = state.local_dim.pow(r.region.len() as u32);
        if r.projectors.iter().any(|p| p.len() != dim) {
            return Err(domain("projector dimension does not match the state"));
        }
    }
    let Some(first) = regions.first() else {
        return Ok(false);
    };
    let n_branches = first.projectors.len();
    if regions.iter().any(|r| r.projectors.len() != n_branches) {
        return Ok(false);
    }
    let branches: Vec<_> = (0..n_branches).map(|i| first.apply(i, state)).collect();
    for r in &regions[1..] {
        for (i, b) in branches.iter().enumerate() {
            if BranchState::distance(&r.apply(i, state), b) > RECORD_TOL {
                return Ok(false);
            }
        }
    }
    for r in regions {
        for i in 0..n_branches {
            for j in (i + 1)..n_branches {
                if reduced_overlap(&r.region, &branches[i], &branches[j]) > RECORD_TOL {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Largest number of single sites whose computational-basis projectors
/// record the same nontrivial (at least two nonzero branches) decomposition.
pub fn single_site_redundancy(state: &BranchState) -> Result<usize> {
    let d = state.local_dim;
    let mut decomps: Vec<(usize, Vec<BTreeMap<Label, Complex64>>)> = Vec::new();
    for site in 0..state.n_sites {
        let set = RecordProjectorSet::computational(site, d)?;
        let nonzero: Vec<_> = (0..d)
            .map(|v| set.apply(v, state))
            .filter(|b| b.values().map(|a| a.norm_sqr()).sum::<f64>() > RECORD_TOL)
            .collect();
        if nonzero.len() >= 2 {
            decomps.push((site, nonzero));
        }
    }
    let same = |a: &[BTreeMap<Label, Complex64>], b: &[BTreeMap<Label, Complex64>]| {
        a.len() == b.len()
            && a.iter()
                .all(|x| b.iter().any(|y| BranchState::distance(x, y) <= RECORD_TOL))
    };
    let mut best = 0;
    for (_, a) in &decomps {
        let count = decomps.iter().filter(|(_, b)| same(a, b)).count();
        best = best.max(count);
    }
    Ok(best)
}

/// `(|0⟩+|1⟩)⊗|0⟩^{⊗(N−1)}` in configuration labels; returns the single-site
/// record redundancy before and after the discrete Fourier relabeling
/// `ψ̃_m = Σ_n ψ_n e^{2πinm/N}`.
pub fn momentum_records_demo(n: usize) -> Result<(usize, usize)> {
    let dft: Vec<Vec<Complex64>> = (0..n)
        .map(|m| {
            (0..n)
                .map(|j| {
                    Complex64::from_polar(
                        1.0,
                        2.0 * std::f64::consts::PI * (j * m) as f64 / n as f64,
                    )
                })
                .collect()
        })
        .collect();
    momentum_records_demo_with(n, &dft)
}

/// As [`momentum_records_demo`] with an arbitrary relabeling transform.
pub fn momentum_records_demo_with(
    n: usize,
    transform: &[Vec<Complex64>],
) -> Result<(usize, usize)> {
    if n < 3 {
        return Err(domain("need at least 3 sites"));
    }
    let mut excited = vec![0u8; n];
    excited[0] = 1;
    let state = BranchState::new(
        n,
        2,
        [
            (vec![0u8; n], Complex64::new(1.0, 0.0)),
            (excited, Complex64::new(1.0, 0.0)),
        ],
    )?;
    let moved = state.relabel(transform)?;
    Ok((
        single_site_redundancy(&state)?,
        single_site_redundancy(&moved)?,
    ))
}
