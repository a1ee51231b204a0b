//! Single-state reconstruction through an adaptive POVM and the Fourier basis.
//!
//! The position distribution gives the moduli and the support. A diagonal
//! POVM is then built so that each of its first `j - 1` outcomes collapses the
//! state onto two supported sites `(l1, l2)`. The Fourier probabilities `P0`
//! and `P1` of that two-site state determine `θ_{l2} - θ_{l1}` whenever
//! `sin(2π(l2 - l1)/d) ≠ 0`, which fails only for site pairs `d/2` apart.
//! Orderings avoid such pairs. For even `d`, the two-site supports
//! `{k, k + d/2}` have no valid ordering. For those, the phase comes from
//! σx and σy on the qubit factor of `ℂ^d = ℂ^2 ⊗ ℂ^{d/2}`.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::bases::OrthonormalBasis;
use crate::c2::amplitudes_from_position;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{unit_phase, wrap_phase, CMatrix};
use crate::measurement::{born_distribution, povm_collapse, sample_counts, PovmElement, ProbabilityDistribution};
use crate::state::{normalize, PureState, Support};
use crate::DEFAULT_SUPPORT_TOL;

/// `|sin β|` below this makes the two-projection system singular.
pub const SINGULAR_TOL: f64 = 1e-10;
/// Default bound on `|‖(cos Δ, sin Δ)‖ - 1|`.
pub const CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OrderingMode {
    /// Consecutive pairs `(k_l, k_{l+1})`.
    #[default]
    Chain,
    /// Hub pairs `(k_0, k_l)`.
    Star,
}

impl OrderingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderingMode::Chain => "chain",
            OrderingMode::Star => "star",
        }
    }
}

impl fmt::Display for OrderingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for OrderingMode {
    type Err = &'static str;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "chain" => Ok(OrderingMode::Chain),
            "star" => Ok(OrderingMode::Star),
            _ => Err("expected chain or star"),
        }
    }
}

/// A sequence of the support sites in which phases are resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ordering {
    pub dim: usize,
    pub seq: Vec<usize>,
    pub mode: OrderingMode,
    /// Number of times the head/tail insertion had to fall back to a search.
    pub backtracks: usize,
}

impl Ordering {
    /// Site pairs whose phase differences are measured, in resolution order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        match self.mode {
            OrderingMode::Chain => self.seq.windows(2).map(|w| (w[0], w[1])).collect(),
            OrderingMode::Star => self.seq[1..].iter().map(|&k| (self.seq[0], k)).collect(),
        }
    }

    /// No measured pair is `d/2` apart.
    pub fn is_valid(&self) -> bool {
        self.pairs().iter().all(|&(a, b)| compatible(self.dim, a, b))
    }
}

fn compatible(d: usize, a: usize, b: usize) -> bool {
    d % 2 == 1 || a.abs_diff(b) != d / 2
}

fn failing_set(d: usize, sites: &[usize]) -> Option<(usize, usize)> {
    (sites.len() == 2 && !compatible(d, sites[0], sites[1])).then(|| (sites[0], sites[1]))
}

/// Picks an order of the support sites valid for `mode`.
///
/// Star mode falls back to chain when every site has a partner `d/2` away.
pub fn find_ordering(support: &Support, mode: OrderingMode) -> Result<Ordering> {
    let d = support.dim();
    let sites = support.sites();
    if let Some(sites) = failing_set(d, sites) {
        return Err(Error::FailingSet { sites, dim: d });
    }
    if d % 2 == 1 || sites.len() == 1 {
        return Ok(Ordering {
            dim: d,
            seq: sites.to_vec(),
            mode,
            backtracks: 0,
        });
    }
    if mode == OrderingMode::Star {
        if let Some(&hub) = sites.iter().find(|&&k| sites.iter().all(|&m| compatible(d, k, m))) {
            let mut seq = Vec::with_capacity(sites.len());
            seq.push(hub);
            seq.extend(sites.iter().copied().filter(|&k| k != hub));
            return Ok(Ordering {
                dim: d,
                seq,
                mode: OrderingMode::Star,
                backtracks: 0,
            });
        }
    }
    chain_ordering(d, sites)
}

fn chain_ordering(d: usize, sites: &[usize]) -> Result<Ordering> {
    // Seed with a valid pair or triple, then insert each remaining site at
    // the tail, else the head. Every site has at most one partner d/2 away,
    // so one of the two ends always accepts it.
    let mut seq = VecDeque::with_capacity(sites.len());
    let rest = if compatible(d, sites[0], sites[1]) {
        seq.extend([sites[0], sites[1]]);
        &sites[2..]
    } else {
        seq.extend([sites[0], sites[2], sites[1]]);
        &sites[3..]
    };
    let mut backtracks = 0;
    let mut ok = seq.iter().zip(seq.iter().skip(1)).all(|(&a, &b)| compatible(d, a, b));
    if ok {
        for &k in rest {
            if compatible(d, *seq.back().unwrap_or(&k), k) {
                seq.push_back(k);
            } else if compatible(d, *seq.front().unwrap_or(&k), k) {
                seq.push_front(k);
            } else {
                ok = false;
                break;
            }
        }
    }
    let seq: Vec<usize> = if ok {
        seq.into()
    } else {
        backtracks += 1;
        search_path(d, sites).ok_or(Error::InvalidOrdering)?
    };
    Ok(Ordering {
        dim: d,
        seq,
        mode: OrderingMode::Chain,
        backtracks,
    })
}

/// Depth-first search for a Hamiltonian path in the compatibility graph.
fn search_path(d: usize, sites: &[usize]) -> Option<Vec<usize>> {
    fn go(d: usize, sites: &[usize], used: &mut [bool], path: &mut Vec<usize>) -> bool {
        if path.len() == sites.len() {
            return true;
        }
        for i in 0..sites.len() {
            if used[i] || path.last().is_some_and(|&p| !compatible(d, p, sites[i])) {
                continue;
            }
            used[i] = true;
            path.push(sites[i]);
            if go(d, sites, used, path) {
                return true;
            }
            path.pop();
            used[i] = false;
        }
        false
    }
    let mut used = alloc::vec![false; sites.len()];
    let mut path = Vec::with_capacity(sites.len());
    go(d, sites, &mut used, &mut path).then_some(path)
}

/// A diagonal POVM whose first `j - 1` outcomes isolate site pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmSpec {
    pub elements: Vec<PovmElement>,
    pub ordering: Ordering,
    /// Outcome `l` ↦ the pair `(l1, l2)` it isolates, for `l ≤ j - 2`.
    pub pair_map: Vec<(usize, usize)>,
}

impl PovmSpec {
    pub fn dim(&self) -> usize {
        self.ordering.dim
    }
}

fn build_pairwise(ord: &Ordering, weight: f64) -> Result<PovmSpec> {
    let d = ord.dim;
    if ord.seq.len() < 2 || !ord.is_valid() {
        return Err(Error::InvalidOrdering);
    }
    let pair_map = ord.pairs();
    let mut remainder = alloc::vec![1.0f64; d];
    let mut elements = Vec::with_capacity(pair_map.len() + 1);
    for &(a, b) in &pair_map {
        let mut diag = alloc::vec![0.0f64; d];
        diag[a] = weight;
        diag[b] = weight;
        remainder[a] -= weight;
        remainder[b] -= weight;
        elements.push(PovmElement::diagonal(&diag)?);
    }
    elements.push(PovmElement::diagonal(&remainder)?);
    Ok(PovmSpec {
        elements,
        ordering: ord.clone(),
        pair_map,
    })
}

/// `G_l = (|k_l⟩⟨k_l| + |k_{l+1}⟩⟨k_{l+1}|)/2`, plus the remainder `I - Σ G_l`.
pub fn build_chain_povm(ord: &Ordering) -> Result<PovmSpec> {
    if ord.mode != OrderingMode::Chain {
        return Err(Error::InvalidOrdering);
    }
    build_pairwise(ord, 0.5)
}

/// `G'_l = (|k_0⟩⟨k_0| + |k_{l+1}⟩⟨k_{l+1}|)/j`, plus the remainder.
pub fn build_star_povm(ord: &Ordering) -> Result<PovmSpec> {
    if ord.mode != OrderingMode::Star {
        return Err(Error::InvalidOrdering);
    }
    build_pairwise(ord, 1.0 / ord.seq.len() as f64)
}

pub fn build_povm(ord: &Ordering) -> Result<PovmSpec> {
    match ord.mode {
        OrderingMode::Chain => build_chain_povm(ord),
        OrderingMode::Star => build_star_povm(ord),
    }
}

/// `Δ = θ_{l2} - θ_{l1}` from the Fourier probabilities `P0`, `P1` of the
/// normalized state `a1|l1⟩ + a2 e^{iΔ}|l2⟩`.
///
/// `d·P_k - 1 = 2·a1·a2·cos(Δ - k·β)` with `β = 2π(l2 - l1)/d`; the `k = 0, 1`
/// equations are linear in `(cos Δ, sin Δ)` with determinant `sin β`.
pub fn phase_difference_from_fourier(
    a1: f64,
    a2: f64,
    l1: usize,
    l2: usize,
    p0: f64,
    p1: f64,
    d: usize,
) -> Result<f64> {
    phase_difference_with_tol(a1, a2, l1, l2, p0, p1, d, CONSISTENCY_TOL)
}

#[allow(clippy::too_many_arguments)]
pub fn phase_difference_with_tol(
    a1: f64,
    a2: f64,
    l1: usize,
    l2: usize,
    p0: f64,
    p1: f64,
    d: usize,
    consistency_tol: f64,
) -> Result<f64> {
    // β = 2π(l2 - l1)/d
    let (sin_b, cos_b) = exact_sin_cos(l2 as i64 - l1 as i64, d);
    if sin_b.abs() < SINGULAR_TOL {
        return Err(Error::SingularSystem { sine: sin_b });
    }
    let scale = 2.0 * a1 * a2;
    let r0 = (d as f64 * p0 - 1.0) / scale;
    let r1 = (d as f64 * p1 - 1.0) / scale;
    let cos_delta = r0;
    let sin_delta = (r1 - cos_b * r0) / sin_b;
    let norm = libm::hypot(cos_delta, sin_delta);
    if !norm.is_finite() || (norm - 1.0).abs() > consistency_tol {
        return Err(Error::InconsistentProbabilities { norm });
    }
    Ok(wrap_phase(libm::atan2(sin_delta, cos_delta)))
}

/// `(sin, cos)` of `2π m/d`, exact on quarter turns.
fn exact_sin_cos(m: i64, d: usize) -> (f64, f64) {
    let w = crate::linalg::root_of_unity(m.rem_euclid(d as i64) as usize, d);
    (w.im, w.re)
}

/// Phase recovered by the σx/σy fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliPhase {
    pub phase: f64,
    /// False when `a1·a2 ≈ 0` and the phase is meaningless.
    pub defined: bool,
}

/// `⟨σx⟩ = 2·a1·a2·cos Δ`, `⟨σy⟩ = 2·a1·a2·sin Δ`.
pub fn pauli_fallback(sigma_x: f64, sigma_y: f64, a1: f64, a2: f64) -> PauliPhase {
    if a1 * a2 <= 1e-12 {
        return PauliPhase {
            phase: 0.0,
            defined: false,
        };
    }
    PauliPhase {
        phase: wrap_phase(libm::atan2(sigma_y, sigma_x)),
        defined: true,
    }
}

/// Site `m` ↦ `(m div d/2, m mod d/2)` in `ℂ^2 ⊗ ℂ^{d/2}`.
pub fn qubit_encoding(m: usize, d: usize) -> (usize, usize) {
    (m / (d / 2), m % (d / 2))
}

/// The measurements [`reconstruct_via_povm`] needs from the unknown state.
pub trait MeasurementDevice {
    /// Fourier distribution of the state after POVM outcome `outcome`.
    fn fourier_after_outcome(&mut self, povm: &PovmSpec, outcome: usize) -> Result<ProbabilityDistribution>;

    /// `(⟨σx ⊗ I⟩, ⟨σy ⊗ I⟩)` on the qubit factor (even `d` only).
    fn pauli_expectations(&mut self) -> Result<(f64, f64)>;
}

/// Exact simulation of [`MeasurementDevice`] on a known state.
#[derive(Debug, Clone)]
pub struct SimulatedDevice {
    state: PureState,
}

impl SimulatedDevice {
    pub fn new(state: PureState) -> Self {
        SimulatedDevice { state }
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }
}

impl MeasurementDevice for SimulatedDevice {
    fn fourier_after_outcome(&mut self, povm: &PovmSpec, outcome: usize) -> Result<ProbabilityDistribution> {
        fourier_after(&self.state, povm, outcome)
    }

    fn pauli_expectations(&mut self) -> Result<(f64, f64)> {
        pauli_expectations_of(&self.state)
    }
}

/// Finite-shot simulation: every query is answered from `shots` samples.
#[derive(Debug)]
pub struct SampledDevice<'r, R: Rng + ?Sized> {
    state: PureState,
    shots: u64,
    rng: &'r mut R,
}

impl<'r, R: Rng + ?Sized> SampledDevice<'r, R> {
    pub fn new(state: PureState, shots: u64, rng: &'r mut R) -> Self {
        SampledDevice { state, shots, rng }
    }
}

impl<R: Rng + ?Sized> MeasurementDevice for SampledDevice<'_, R> {
    fn fourier_after_outcome(&mut self, povm: &PovmSpec, outcome: usize) -> Result<ProbabilityDistribution> {
        let exact = fourier_after(&self.state, povm, outcome)?;
        sample_counts(&exact, self.shots, self.rng)
    }

    fn pauli_expectations(&mut self) -> Result<(f64, f64)> {
        let (x, y) = pauli_expectations_of(&self.state)?;
        let mut estimate = |e: f64| -> Result<f64> {
            let plus = ((1.0 + e) / 2.0).clamp(0.0, 1.0);
            let dist = ProbabilityDistribution::new(
                alloc::vec![plus, 1.0 - plus],
                crate::measurement::DistributionSource::PovmOutcomes,
            )?;
            let f = sample_counts(&dist, self.shots, self.rng)?;
            Ok(f.probs()[0] - f.probs()[1])
        };
        Ok((estimate(x)?, estimate(y)?))
    }
}

fn fourier_after(state: &PureState, povm: &PovmSpec, outcome: usize) -> Result<ProbabilityDistribution> {
    let g = povm.elements.get(outcome).ok_or(Error::ImpossibleOutcome)?;
    let collapsed = povm_collapse(state, g)?;
    born_distribution(&collapsed, &OrthonormalBasis::fourier(state.dim())?)
}

fn pauli_expectations_of(state: &PureState) -> Result<(f64, f64)> {
    let d = state.dim();
    if d % 2 == 1 {
        return Err(Error::InvalidDimension(d));
    }
    let half = d / 2;
    let amps = state.amps();
    // ⟨σx⟩ + i⟨σy⟩ = 2 Σ_m conj(c_{0m}) c_{1m}
    let z: Complex64 = (0..half).map(|m| amps[m].conj() * amps[m + half]).sum::<Complex64>() * 2.0;
    Ok((z.re, z.im))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructionPath {
    /// POVM + Fourier (including the trivial single-site case).
    Normal,
    /// σx/σy on the qubit factor.
    Fallback,
}

impl ReconstructionPath {
    pub fn as_str(self) -> &'static str {
        match self {
            ReconstructionPath::Normal => "normal",
            ReconstructionPath::Fallback => "fallback",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PovmConfig {
    pub mode: OrderingMode,
    pub support_tol: f64,
    pub consistency_tol: f64,
}

impl Default for PovmConfig {
    fn default() -> Self {
        PovmConfig {
            mode: OrderingMode::Chain,
            support_tol: DEFAULT_SUPPORT_TOL,
            consistency_tol: CONSISTENCY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PovmReconstruction {
    pub state: PureState,
    pub path: ReconstructionPath,
    pub support: Support,
    /// `None` for single-site supports and the fallback path.
    pub povm: Option<PovmSpec>,
    /// Phase differences per measured pair, in resolution order.
    pub differences: Vec<((usize, usize), f64)>,
}

/// Reconstructs the unknown state behind `device` from its position distribution `p`.
pub fn reconstruct_via_povm<D: MeasurementDevice + ?Sized>(
    p: &ProbabilityDistribution,
    device: &mut D,
    d: usize,
    cfg: &PovmConfig,
) -> Result<PovmReconstruction> {
    check_dim(d, p.len())?;
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let amps = amplitudes_from_position(p);
    let support = Support::from_magnitudes(&amps, cfg.support_tol)?;
    let mut phases = alloc::vec![0.0f64; d];

    if support.len() == 1 {
        let state = assemble(&amps, &phases, &support)?;
        return Ok(PovmReconstruction {
            state,
            path: ReconstructionPath::Normal,
            support,
            povm: None,
            differences: Vec::new(),
        });
    }

    let ordering = match find_ordering(&support, cfg.mode) {
        Ok(ordering) => ordering,
        Err(Error::FailingSet { sites: (l1, l2), .. }) => {
            let (sx, sy) = device.pauli_expectations()?;
            let found = pauli_fallback(sx, sy, amps[l1], amps[l2]);
            phases[l2] = found.phase;
            let state = assemble(&amps, &phases, &support)?;
            return Ok(PovmReconstruction {
                state,
                path: ReconstructionPath::Fallback,
                support,
                povm: None,
                differences: alloc::vec![((l1, l2), found.phase)],
            });
        }
        Err(e) => return Err(e),
    };

    let povm = build_povm(&ordering)?;
    let mut differences = Vec::with_capacity(povm.pair_map.len());
    for (outcome, &(l1, l2)) in povm.pair_map.iter().enumerate() {
        let fourier = device.fourier_after_outcome(&povm, outcome)?;
        let norm = libm::hypot(amps[l1], amps[l2]);
        let delta = phase_difference_with_tol(
            amps[l1] / norm,
            amps[l2] / norm,
            l1,
            l2,
            fourier.probs()[0],
            fourier.probs()[1],
            d,
            cfg.consistency_tol,
        )?;
        // l1 is always already resolved: the previous site in chain mode, the hub in star mode
        phases[l2] = wrap_phase(phases[l1] + delta);
        differences.push(((l1, l2), delta));
    }

    let state = assemble(&amps, &phases, &support)?;
    Ok(PovmReconstruction {
        state,
        path: ReconstructionPath::Normal,
        support,
        povm: Some(povm),
        differences,
    })
}

/// Builds the state and re-fixes the phase at the smallest support site to zero.
fn assemble(amps: &[f64], phases: &[f64], support: &Support) -> Result<PureState> {
    let offset = phases[support.first()];
    let v: Vec<Complex64> = amps
        .iter()
        .zip(phases)
        .enumerate()
        .map(|(k, (&a, &t))| {
            if support.contains(k) {
                unit_phase(wrap_phase(t - offset)) * a
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    normalize(&v)
}

/// `Σ elements - I`, for validity checks.
pub fn identity_deviation(spec: &PovmSpec) -> f64 {
    let mut total = CMatrix::zeros(spec.dim());
    for g in &spec.elements {
        total.add_assign(g.matrix());
    }
    total.sub(&CMatrix::identity(spec.dim())).max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::DistributionSource;
    use crate::state::haar_random;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, PI, TAU};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn support(d: usize, sites: &[usize]) -> Support {
        Support::from_sites(d, sites.to_vec()).unwrap()
    }

    /// Fourier probabilities of `a1|l1⟩ + a2 e^{iΔ}|l2⟩` straight from the DFT sum.
    fn forward_p(a1: f64, a2: f64, l1: usize, l2: usize, delta: f64, d: usize, k: usize) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (site, amp) in [(l1, Complex64::new(a1, 0.0)), (l2, unit_phase(delta) * a2)] {
            let angle = -TAU * (k * site) as f64 / d as f64;
            acc += unit_phase(angle) * amp;
        }
        acc.norm_sqr() / d as f64
    }

    #[test]
    fn ordering_examples() {
        assert_eq!(
            find_ordering(&support(4, &[0, 2]), OrderingMode::Chain),
            Err(Error::FailingSet { sites: (0, 2), dim: 4 })
        );
        assert_eq!(
            find_ordering(&support(4, &[0, 2]), OrderingMode::Star),
            Err(Error::FailingSet { sites: (0, 2), dim: 4 })
        );
        let o = find_ordering(&support(4, &[0, 1, 2]), OrderingMode::Chain).unwrap();
        assert_eq!(o.seq, vec![0, 1, 2]);
        let o = find_ordering(&support(4, &[0, 2, 3]), OrderingMode::Chain).unwrap();
        assert_eq!(o.seq, vec![0, 3, 2]);
        assert_eq!(o.backtracks, 0);
    }

    #[test]
    fn odd_dimension_keeps_sorted_order() {
        for mode in [OrderingMode::Chain, OrderingMode::Star] {
            let o = find_ordering(&support(5, &[0, 2, 3, 4]), mode).unwrap();
            assert_eq!(o.seq, vec![0, 2, 3, 4]);
            assert!(o.is_valid());
        }
    }

    #[test]
    fn star_picks_unpaired_hub() {
        // d = 6: 0–3 paired, 1 unpaired
        let o = find_ordering(&support(6, &[0, 1, 3]), OrderingMode::Star).unwrap();
        assert_eq!(o.mode, OrderingMode::Star);
        assert_eq!(o.seq[0], 1);
        assert!(o.is_valid());
        // every site paired: falls back to chain
        let o = find_ordering(&support(4, &[0, 1, 2, 3]), OrderingMode::Star).unwrap();
        assert_eq!(o.mode, OrderingMode::Chain);
        assert!(o.is_valid());
    }

    #[test]
    fn insertion_never_backtracks() {
        for d in [4usize, 6, 8, 10] {
            for mask in 1u64..(1 << d) {
                let s = Support::from_mask(d, mask).unwrap();
                match find_ordering(&s, OrderingMode::Chain) {
                    Ok(o) => {
                        assert!(o.is_valid());
                        assert_eq!(o.backtracks, 0, "d={d} mask={mask:b}");
                        let mut sorted = o.seq.clone();
                        sorted.sort_unstable();
                        assert_eq!(sorted, s.sites());
                    }
                    Err(Error::FailingSet { sites, .. }) => {
                        assert_eq!(sites.1 - sites.0, d / 2);
                        assert_eq!(s.len(), 2);
                    }
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn search_path_agrees_with_insertion() {
        let p = search_path(4, &[0, 1, 2, 3]).unwrap();
        assert!(p.windows(2).all(|w| compatible(4, w[0], w[1])));
        assert!(search_path(4, &[0, 2]).is_none());
    }

    #[test]
    fn chain_povm_d3() {
        let o = find_ordering(&support(3, &[0, 1, 2]), OrderingMode::Chain).unwrap();
        let spec = build_chain_povm(&o).unwrap();
        let diag = |i: usize| -> Vec<f64> { spec.elements[i].matrix().diagonal().iter().map(|c| c.re).collect() };
        assert_eq!(diag(0), vec![0.5, 0.5, 0.0]);
        assert_eq!(diag(1), vec![0.0, 0.5, 0.5]);
        assert_eq!(diag(2), vec![0.5, 0.0, 0.5]);
        assert_eq!(spec.pair_map, vec![(0, 1), (1, 2)]);
        assert_eq!(identity_deviation(&spec), 0.0);
    }

    #[test]
    fn chain_remainder_values() {
        let o = find_ordering(&support(7, &[1, 2, 4, 6]), OrderingMode::Chain).unwrap();
        let spec = build_chain_povm(&o).unwrap();
        let last = spec.elements.last().unwrap().matrix().diagonal();
        for c in last {
            assert!([0.0, 0.5, 1.0].contains(&c.re));
        }
        assert_eq!(identity_deviation(&spec), 0.0);
    }

    #[test]
    fn star_povm_d3() {
        let o = find_ordering(&support(3, &[0, 1, 2]), OrderingMode::Star).unwrap();
        let spec = build_star_povm(&o).unwrap();
        let diag = |i: usize| -> Vec<f64> { spec.elements[i].matrix().diagonal().iter().map(|c| c.re).collect() };
        let third = 1.0 / 3.0;
        assert_eq!(diag(0), vec![third, third, 0.0]);
        assert_eq!(diag(1), vec![third, 0.0, third]);
        let rem = diag(2);
        assert_abs_diff_eq!(rem[0], third, epsilon = 1e-15);
        assert_abs_diff_eq!(rem[1], 2.0 * third, epsilon = 1e-15);
        assert_abs_diff_eq!(rem[2], 2.0 * third, epsilon = 1e-15);
        assert!(identity_deviation(&spec) < 1e-12);
        assert_eq!(spec.pair_map, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn star_remainder_closed_form() {
        for j in 2..8usize {
            let sites: Vec<usize> = (0..j).collect();
            let o = find_ordering(&support(9, &sites), OrderingMode::Star).unwrap();
            let spec = build_star_povm(&o).unwrap();
            let rem = spec.elements.last().unwrap().matrix().diagonal();
            let jf = j as f64;
            assert_abs_diff_eq!(rem[0].re, 1.0 / jf, epsilon = 1e-14);
            for r in &rem[1..j] {
                assert_abs_diff_eq!(r.re, (jf - 1.0) / jf, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn builders_reject_wrong_mode() {
        let o = find_ordering(&support(3, &[0, 1, 2]), OrderingMode::Chain).unwrap();
        assert_eq!(build_star_povm(&o), Err(Error::InvalidOrdering));
        let single = find_ordering(&support(3, &[1]), OrderingMode::Chain).unwrap();
        assert_eq!(build_chain_povm(&single), Err(Error::InvalidOrdering));
    }

    #[test]
    fn lemma_examples() {
        let (a, d) = (FRAC_1_SQRT_2, 4);
        let p0 = forward_p(a, a, 0, 1, FRAC_PI_2, d, 0);
        let p1 = forward_p(a, a, 0, 1, FRAC_PI_2, d, 1);
        assert_abs_diff_eq!(p0, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(p1, 0.5, epsilon = 1e-15);
        let delta = phase_difference_from_fourier(a, a, 0, 1, p0, p1, d).unwrap();
        assert_abs_diff_eq!(delta, FRAC_PI_2, epsilon = 1e-12);

        assert!(matches!(
            phase_difference_from_fourier(a, a, 0, 2, 0.5, 0.0, 4),
            Err(Error::SingularSystem { .. })
        ));

        // Δ = 0 puts all weight into P0 = 1/d · (a1 + a2)²
        let (a1, a2) = (0.6, 0.8);
        let p0 = (a1 + a2) * (a1 + a2) / 5.0;
        let p1 = forward_p(a1, a2, 1, 3, 0.0, 5, 1);
        let delta = phase_difference_from_fourier(a1, a2, 1, 3, p0, p1, 5).unwrap();
        assert!(crate::linalg::circular_distance(delta, 0.0) < 1e-12);
    }

    #[test]
    fn lemma_detects_inconsistent_probabilities() {
        assert!(matches!(
            phase_difference_from_fourier(0.6, 0.8, 0, 1, 0.9, 0.1, 3),
            Err(Error::InconsistentProbabilities { .. })
        ));
    }

    #[test]
    fn collapse_then_fourier_matches_two_site_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in 3..9 {
            let s = haar_random(d, &mut rng).unwrap();
            let sup = s.support(1e-9).unwrap();
            let o = find_ordering(&sup, OrderingMode::Chain).unwrap();
            let spec = build_chain_povm(&o).unwrap();
            let mut dev = SimulatedDevice::new(s.clone());
            for (l, &(l1, l2)) in spec.pair_map.iter().enumerate() {
                let f = dev.fourier_after_outcome(&spec, l).unwrap();
                let (x, y) = (s.amps()[l1], s.amps()[l2]);
                let n = libm::hypot(x.norm(), y.norm());
                let delta = y.arg() - x.arg();
                for k in 0..d {
                    let expect = forward_p(x.norm() / n, y.norm() / n, l1, l2, delta, d, k);
                    assert_abs_diff_eq!(f.probs()[k], expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn pauli_examples() {
        let a = FRAC_1_SQRT_2;
        assert_abs_diff_eq!(pauli_fallback(-1.0, 0.0, a, a).phase, PI, epsilon = 1e-15);
        assert_abs_diff_eq!(pauli_fallback(0.0, 1.0, a, a).phase, FRAC_PI_2, epsilon = 1e-15);
        let r = pauli_fallback(0.96, 0.0, 0.8, 0.6);
        assert_eq!(r.phase, 0.0);
        assert!(r.defined);
        assert!(!pauli_fallback(0.0, 0.0, 1.0, 0.0).defined);
    }

    #[test]
    fn simulated_pauli_expectations() {
        let s = PureState::from_polar(&[0.8, 0.0, 0.6, 0.0], &[0.0, 0.0, 0.0, 0.0]).unwrap();
        let (x, y) = SimulatedDevice::new(s).pauli_expectations().unwrap();
        assert_abs_diff_eq!(x, 0.96, epsilon = 1e-15);
        assert_abs_diff_eq!(y, 0.0, epsilon = 1e-15);
        assert_eq!(qubit_encoding(3, 4), (1, 1));
        assert_eq!(qubit_encoding(2, 6), (0, 2));
    }

    fn reconstruct(s: &PureState, mode: OrderingMode) -> PovmReconstruction {
        let p = born_distribution(s, &OrthonormalBasis::position(s.dim()).unwrap()).unwrap();
        let mut dev = SimulatedDevice::new(s.clone());
        let cfg = PovmConfig {
            mode,
            ..PovmConfig::default()
        };
        reconstruct_via_povm(&p, &mut dev, s.dim(), &cfg).unwrap()
    }

    #[test]
    fn reconstruct_odd_haar() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = haar_random(5, &mut rng).unwrap();
            for mode in [OrderingMode::Chain, OrderingMode::Star] {
                let r = reconstruct(&s, mode);
                assert_eq!(r.path, ReconstructionPath::Normal);
                assert!(r.state.fidelity(&s).unwrap() >= 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn reconstruct_failing_set_uses_fallback() {
        let s = PureState::from_polar(&[1.0, 0.0, 1.0, 0.0], &[0.0, 0.0, FRAC_PI_3, 0.0]).unwrap();
        let r = reconstruct(&s, OrderingMode::Chain);
        assert_eq!(r.path, ReconstructionPath::Fallback);
        assert!(r.povm.is_none());
        assert!(r.state.fidelity(&s).unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn reconstruct_basis_state() {
        let s = PureState::basis_state(3, 1).unwrap();
        let r = reconstruct(&s, OrderingMode::Chain);
        assert_eq!(r.state, s);
        assert!(r.povm.is_none());
    }

    #[test]
    fn reconstruct_even_reordered_support() {
        // d = 4, support {0, 2, 3}: ordering (0, 3, 2)
        let s = PureState::from_polar(&[0.5, 0.0, 0.5, libm::sqrt(0.5)], &[0.0, 0.0, 2.0, 4.0]).unwrap();
        let r = reconstruct(&s, OrderingMode::Chain);
        assert_eq!(r.povm.as_ref().unwrap().ordering.seq, vec![0, 3, 2]);
        assert!(r.state.fidelity(&s).unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn sampled_device_approximates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = haar_random(3, &mut rng).unwrap();
        let p = born_distribution(&s, &OrthonormalBasis::position(3).unwrap()).unwrap();
        let mut shot_rng = ChaCha8Rng::seed_from_u64(2);
        let mut dev = SampledDevice::new(s.clone(), 200_000, &mut shot_rng);
        let cfg = PovmConfig {
            consistency_tol: f64::INFINITY,
            ..PovmConfig::default()
        };
        let r = reconstruct_via_povm(&p, &mut dev, 3, &cfg).unwrap();
        assert!(r.state.fidelity(&s).unwrap() > 0.99);
    }

    #[test]
    fn reconstruct_dimension_mismatch() {
        let p = ProbabilityDistribution::new(vec![0.5, 0.5], DistributionSource::Position).unwrap();
        let mut dev = SimulatedDevice::new(PureState::basis_state(3, 0).unwrap());
        assert!(reconstruct_via_povm(&p, &mut dev, 3, &PovmConfig::default()).is_err());
    }
}
