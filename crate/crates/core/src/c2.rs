//! Candidate enumeration from the position distribution and the `C2`
//! distribution.
//!
//! The position distribution fixes the moduli `a_k = √p_k`. With the first
//! supported phase set to zero, each further supported site `k_l` is solved
//! from the unnormalized `C2` probability
//!
//! ```text
//! q_{k_l-1} = S² + A²a² - 2·S·A·a·cos(θ - α)
//! ```
//!
//! where `S·e^{iα}` is the running sum `Σ A_k a_k e^{iθ_k}` over the sites
//! already fixed. Each step yields at most two roots placed symmetrically
//! about `α`, so a support of size `j` leaves at most `2^(j-1)` candidates.
//! The recursion breaks when some consulted `S` vanishes, which happens only
//! on a measure-zero set of states.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::bases::{CoeffSequence, OrthonormalBasis};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{circular_distance, unit_phase, wrap_phase};
use crate::measurement::{reproduces, ProbabilityDistribution};
use crate::state::{canonical_order, normalize, PureState, Support};
use crate::{DEFAULT_SUPPORT_TOL, DEFAULT_TOL};

/// Largest dimension [`enumerate_candidates`] accepts unless `force` is set.
pub const MAX_ENUMERATE_DIM: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C2Config {
    /// A partial sum `S` at or below this breaks the chain.
    pub chain_tol: f64,
    /// `|cos| ≤ 1 + clamp_tol` is clamped to `±1`; beyond that is inconsistent.
    pub clamp_tol: f64,
    /// Roots closer than this (radians) are merged.
    pub root_merge: f64,
    /// Amplitude cutoff for the support.
    pub support_tol: f64,
    /// Lift the [`MAX_ENUMERATE_DIM`] cap.
    pub force: bool,
}

impl Default for C2Config {
    fn default() -> Self {
        C2Config {
            chain_tol: DEFAULT_TOL,
            clamp_tol: 1e-9,
            root_merge: 1e-9,
            support_tol: DEFAULT_SUPPORT_TOL,
            force: false,
        }
    }
}

impl C2Config {
    pub fn with_chain_tol(tol: f64) -> Self {
        C2Config {
            chain_tol: tol,
            ..Self::default()
        }
    }
}

/// Running sum `S·e^{iα} = Σ A_k a_k e^{iθ_k}` over the sites fixed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseChain {
    sum: Complex64,
    resolved: Vec<(usize, f64)>,
}

impl PhaseChain {
    /// Fixes the first site at phase zero.
    pub fn start(site: usize, coeff: f64, amp: f64) -> Self {
        PhaseChain {
            sum: Complex64::new(coeff * amp, 0.0),
            resolved: alloc::vec![(site, 0.0)],
        }
    }

    /// `S`.
    pub fn magnitude(&self) -> f64 {
        self.sum.norm()
    }

    /// `α` in `[0, 2π)`.
    pub fn alpha(&self) -> f64 {
        wrap_phase(self.sum.arg())
    }

    pub fn sum(&self) -> Complex64 {
        self.sum
    }

    pub fn resolved(&self) -> &[(usize, f64)] {
        &self.resolved
    }

    pub fn extend(&self, site: usize, coeff: f64, amp: f64, theta: f64) -> PhaseChain {
        let mut resolved = self.resolved.clone();
        resolved.push((site, theta));
        PhaseChain {
            sum: self.sum + unit_phase(theta) * (coeff * amp),
            resolved,
        }
    }

    /// The running sum rebuilt from the resolved phases.
    pub fn recompute(&self, coeffs: &CoeffSequence, amps: &[f64]) -> Complex64 {
        self.resolved
            .iter()
            .map(|&(k, theta)| unit_phase(theta) * (coeffs.get(k) * amps[k]))
            .sum()
    }
}

/// Where the recursion stopped: `S_index` vanished while solving for `site`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainFailure {
    pub index: usize,
    pub site: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub dim: usize,
    pub support: Support,
    /// Canonical candidates, sorted by phase vector.
    pub candidates: Vec<PureState>,
    pub branch_count: usize,
    /// Steps at which the two roots coincided.
    pub degenerate_steps: usize,
    pub failed: Option<ChainFailure>,
    pub pruned: bool,
}

impl CandidateSet {
    /// `2^(j-1)`, saturating.
    pub fn bound(&self) -> usize {
        let j = self.support.len();
        1usize.checked_shl((j - 1) as u32).unwrap_or(usize::MAX)
    }

    /// Best fidelity of any candidate with `s`.
    pub fn best_fidelity(&self, s: &PureState) -> f64 {
        self.candidates
            .iter()
            .filter_map(|c| c.fidelity(s).ok())
            .fold(0.0, f64::max)
    }
}

/// Result of the `S_k = 0` predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureZeroReport {
    pub in_set: bool,
    pub failing_index: Option<usize>,
    /// Minimum consulted `S_k` with `k ≥ 1`; `None` when no such sum is consulted.
    pub margin: Option<f64>,
    pub consulted: Vec<ConsultedSum>,
}

/// One partial sum consulted by the recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsultedSum {
    /// `k` in `S_k`; the step solves for site `k + 1`.
    pub index: usize,
    pub magnitude: f64,
}

/// `a_k = √p_k`.
pub fn amplitudes_from_position(p: &ProbabilityDistribution) -> Vec<f64> {
    p.probs().iter().map(|&x| libm::sqrt(x.max(0.0))).collect()
}

/// Undo the row normalization: `q_k = q̃_k · ‖ψ_k‖²`.
pub fn rescale_c2_probs(qtilde: &ProbabilityDistribution, coeffs: &CoeffSequence) -> Result<Vec<f64>> {
    check_dim(coeffs.dim(), qtilde.len())?;
    Ok(qtilde
        .probs()
        .iter()
        .enumerate()
        .map(|(k, &q)| q * coeffs.row_norm_sqr(k))
        .collect())
}

/// Solves `q = S² + A²a² - 2·S·A·a·cos(θ - α)` for `θ`.
///
/// Returns one root when the two coincide (within `cfg.root_merge`), else
/// `[α + φ, α - φ]` wrapped into `[0, 2π)`.
pub fn solve_phase_step(s: f64, alpha: f64, coeff: f64, amp: f64, q: f64, cfg: &C2Config) -> Result<Vec<f64>> {
    if s.is_nan() || s <= cfg.chain_tol {
        // callers fill in the site indices
        return Err(Error::ChainBroken { index: 0, site: 0 });
    }
    let b = coeff * amp;
    let cosine = (s * s + b * b - q) / (2.0 * s * b);
    if !cosine.is_finite() || cosine.abs() > 1.0 + cfg.clamp_tol {
        return Err(Error::InconsistentDistributions { cosine });
    }
    let phi = libm::acos(cosine.clamp(-1.0, 1.0));
    if 2.0 * phi <= cfg.root_merge {
        return Ok(alloc::vec![wrap_phase(alpha)]);
    }
    if 2.0 * (PI - phi) <= cfg.root_merge {
        return Ok(alloc::vec![wrap_phase(alpha + PI)]);
    }
    Ok(alloc::vec![wrap_phase(alpha + phi), wrap_phase(alpha - phi)])
}

/// Runs the recursion over every live branch and returns all completed ones.
pub fn enumerate_candidates(
    p: &ProbabilityDistribution,
    qtilde: &ProbabilityDistribution,
    coeffs: &CoeffSequence,
    cfg: &C2Config,
) -> Result<CandidateSet> {
    let d = coeffs.dim();
    check_dim(d, p.len())?;
    check_dim(d, qtilde.len())?;
    if d > MAX_ENUMERATE_DIM && !cfg.force {
        return Err(Error::DimensionTooLarge {
            dim: d,
            cap: MAX_ENUMERATE_DIM,
        });
    }
    let amps = amplitudes_from_position(p);
    let q = rescale_c2_probs(qtilde, coeffs)?;
    let support = Support::from_magnitudes(&amps, cfg.support_tol)?;
    let sites = support.sites();

    let k0 = sites[0];
    let mut branches = alloc::vec![PhaseChain::start(k0, coeffs.get(k0), amps[k0])];
    let mut degenerate_steps = 0;

    for &site in &sites[1..] {
        let (coeff, amp, q_k) = (coeffs.get(site), amps[site], q[site - 1]);
        let mut next = Vec::with_capacity(branches.len() * 2);
        let mut merged = false;
        for chain in &branches {
            let roots = match solve_phase_step(chain.magnitude(), chain.alpha(), coeff, amp, q_k, cfg) {
                Ok(roots) => roots,
                Err(Error::ChainBroken { .. }) => {
                    return Ok(CandidateSet {
                        dim: d,
                        support,
                        candidates: Vec::new(),
                        branch_count: 0,
                        degenerate_steps,
                        failed: Some(ChainFailure { index: site - 1, site }),
                        pruned: false,
                    });
                }
                Err(e) => return Err(e),
            };
            merged |= roots.len() == 1;
            next.extend(roots.into_iter().map(|theta| chain.extend(site, coeff, amp, theta)));
        }
        if merged {
            degenerate_steps += 1;
        }
        branches = next;
    }

    let mut candidates = branches
        .iter()
        .map(|chain| build_candidate(d, &amps, chain.resolved()))
        .collect::<Result<Vec<_>>>()?;
    candidates.sort_by(canonical_order);

    Ok(CandidateSet {
        dim: d,
        support,
        branch_count: candidates.len(),
        candidates,
        degenerate_steps,
        failed: None,
        pruned: false,
    })
}

fn build_candidate(d: usize, amps: &[f64], resolved: &[(usize, f64)]) -> Result<PureState> {
    let mut v = alloc::vec![Complex64::new(0.0, 0.0); d];
    for &(k, theta) in resolved {
        v[k] = unit_phase(theta) * amps[k];
    }
    let first = resolved[0].0;
    // θ_{k0} = 0 exactly; keep the leading amplitude real after normalization
    v[first] = Complex64::new(amps[first], 0.0);
    normalize(&v)
}

/// The partial sums the recursion consults for `s`, in order.
pub fn consulted_sums(s: &PureState, coeffs: &CoeffSequence, support_tol: f64) -> Result<Vec<ConsultedSum>> {
    check_dim(coeffs.dim(), s.dim())?;
    let support = s.support(support_tol)?;
    let amps = s.amps();
    let mut running = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(support.len().saturating_sub(1));
    for (l, &site) in support.sites().iter().enumerate() {
        if l > 0 {
            out.push(ConsultedSum {
                index: site - 1,
                magnitude: running.norm(),
            });
        }
        running += amps[site] * coeffs.get(site);
    }
    Ok(out)
}

/// Whether the recursion breaks on `s`: some consulted `S_k ≤ tol`.
pub fn in_measure_zero_set(s: &PureState, coeffs: &CoeffSequence, tol: f64) -> Result<MeasureZeroReport> {
    let consulted = consulted_sums(s, coeffs, DEFAULT_SUPPORT_TOL)?;
    let failing_index = consulted.iter().find(|c| c.magnitude <= tol).map(|c| c.index);
    let margin = consulted
        .iter()
        .filter(|c| c.index >= 1)
        .map(|c| c.magnitude)
        .reduce(f64::min);
    Ok(MeasureZeroReport {
        in_set: failing_index.is_some(),
        failing_index,
        margin,
        consulted,
    })
}

/// Keeps the candidates whose forward distributions match `p` and `qtilde` within `tol`.
pub fn prune_candidates(
    cs: &CandidateSet,
    p: &ProbabilityDistribution,
    qtilde: &ProbabilityDistribution,
    coeffs: &CoeffSequence,
    tol: f64,
) -> CandidateSet {
    let basis = OrthonormalBasis::c2_from_coeffs(coeffs);
    let candidates: Vec<PureState> = cs
        .candidates
        .iter()
        .filter(|c| reproduces(c, p, qtilde, &basis, tol))
        .cloned()
        .collect();
    CandidateSet {
        candidates,
        pruned: true,
        ..cs.clone()
    }
}

/// Whether two roots are within the merge radius (helper for tests and callers).
pub fn roots_coincide(a: f64, b: f64, cfg: &C2Config) -> bool {
    circular_distance(a, b) <= cfg.root_merge
}
