//! Independent checks for the reconstruction strategies: an exhaustive phase
//! grid search, a forward-simulation candidate check, and seeded Monte Carlo
//! campaigns over Haar-random states.

use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bases::{CoeffSequence, OrthonormalBasis};
use crate::c2::{amplitudes_from_position, enumerate_candidates, in_measure_zero_set, C2Config};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{circular_distance, unit_phase, wrap_phase};
use crate::measurement::{born_distribution, reproduces, ProbabilityDistribution};
use crate::povm::{reconstruct_via_povm, OrderingMode, PovmConfig, SimulatedDevice};
use crate::state::{canonical_order, haar_random, normalize, PureState, Support};
use crate::DEFAULT_SUPPORT_TOL;

/// Largest number of grid points [`brute_force_phase_search`] will scan.
pub const MAX_GRID_POINTS: u128 = 10_000_000;

/// Fidelity a reconstruction must reach to count as a success.
pub const SUCCESS_FIDELITY: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceConfig {
    pub grid_steps: usize,
    /// Largest entrywise mismatch accepted for a solution.
    pub tol: f64,
    pub support_tol: f64,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        BruteForceConfig {
            grid_steps: 360,
            tol: 1e-5,
            support_tol: DEFAULT_SUPPORT_TOL,
        }
    }
}

struct Residual<'a> {
    d: usize,
    amps: Vec<f64>,
    sites: &'a [usize],
    basis: OrthonormalBasis,
    p: &'a [f64],
    qtilde: &'a [f64],
}

impl Residual<'_> {
    fn state(&self, free: &[f64]) -> Vec<Complex64> {
        let mut v = alloc::vec![Complex64::new(0.0, 0.0); self.d];
        v[self.sites[0]] = Complex64::new(self.amps[self.sites[0]], 0.0);
        for (&k, &t) in self.sites[1..].iter().zip(free) {
            v[k] = unit_phase(t) * self.amps[k];
        }
        let norm = libm::sqrt(v.iter().map(|c| c.norm_sqr()).sum::<f64>());
        v.iter_mut().for_each(|c| *c /= norm);
        v
    }

    /// `(Σ squared mismatch, max mismatch)` over both distributions.
    fn eval(&self, free: &[f64]) -> (f64, f64) {
        let v = self.state(free);
        let mut sum = 0.0;
        let mut worst = 0.0f64;
        for (k, amp) in v.iter().enumerate() {
            let e = amp.norm_sqr() - self.p[k];
            sum += e * e;
            worst = worst.max(e.abs());
        }
        for (k, row) in self.basis.rows().enumerate() {
            let z: Complex64 = row.iter().zip(&v).map(|(r, x)| r.conj() * x).sum();
            let e = z.norm_sqr() - self.qtilde[k];
            sum += e * e;
            worst = worst.max(e.abs());
        }
        (sum, worst)
    }

    /// C2 mismatches and their phase derivatives (row-major, one row per outcome).
    fn linearize(&self, free: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let v = self.state(free);
        let n = free.len();
        let mut res = Vec::with_capacity(self.d);
        let mut jac = Vec::with_capacity(self.d * n);
        for (m, row) in self.basis.rows().enumerate() {
            let z: Complex64 = row.iter().zip(&v).map(|(r, x)| r.conj() * x).sum();
            res.push(z.norm_sqr() - self.qtilde[m]);
            for &k in &self.sites[1..] {
                jac.push(-2.0 * (z.conj() * row[k].conj() * v[k]).im);
            }
        }
        (res, jac)
    }

    /// Levenberg-Marquardt on the C2 mismatches.
    fn refine(&self, start: &[f64]) -> Vec<f64> {
        let n = start.len();
        let mut x = start.to_vec();
        let (mut res, mut jac) = self.linearize(&x);
        let mut cost: f64 = res.iter().map(|r| r * r).sum();
        let mut damping = 1e-3;
        for _ in 0..200 {
            if cost < 1e-30 {
                break;
            }
            let mut normal = alloc::vec![0.0; n * n];
            let mut grad = alloc::vec![0.0; n];
            for (m, r) in res.iter().enumerate() {
                let jm = &jac[m * n..(m + 1) * n];
                for i in 0..n {
                    grad[i] += jm[i] * r;
                    for j in 0..n {
                        normal[i * n + j] += jm[i] * jm[j];
                    }
                }
            }
            for i in 0..n {
                normal[i * n + i] += damping * (1.0 + normal[i * n + i]);
            }
            let Some(step) = solve_dense(normal, grad) else { break };
            let trial: Vec<f64> = x.iter().zip(&step).map(|(t, s)| wrap_phase(t - s)).collect();
            let (r2, j2) = self.linearize(&trial);
            let c2: f64 = r2.iter().map(|r| r * r).sum();
            if c2 < cost {
                x = trial;
                res = r2;
                jac = j2;
                cost = c2;
                damping = (damping * 0.3).max(1e-12);
                if step.iter().all(|s| s.abs() < 1e-15) {
                    break;
                }
            } else {
                damping *= 10.0;
                if damping > 1e12 {
                    break;
                }
            }
        }
        x
    }
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in (col + 1)..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = alloc::vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = ((i + 1)..n).map(|k| a[i * n + k] * x[k]).sum();
        x[i] = (b[i] - tail) / a[i * n + i];
    }
    Some(x)
}

/// Scans phase tuples on a uniform grid, with the first supported phase fixed
/// at zero, and returns one state per cluster of solutions.
///
/// Every grid point close enough to possibly neighbour a root is polished by
/// a damped Gauss-Newton search before the `tol` test; clusters merge solutions closer
/// than one grid cell in every phase.
pub fn brute_force_phase_search(
    p: &ProbabilityDistribution,
    qtilde: &ProbabilityDistribution,
    coeffs: &CoeffSequence,
    cfg: &BruteForceConfig,
) -> Result<Vec<PureState>> {
    let d = coeffs.dim();
    check_dim(d, p.len())?;
    check_dim(d, qtilde.len())?;
    if cfg.grid_steps < 8 {
        return Err(Error::InvalidGrid { steps: cfg.grid_steps });
    }
    let amps = amplitudes_from_position(p);
    let support = Support::from_magnitudes(&amps, cfg.support_tol)?;
    let free = support.len() - 1;
    let points = (cfg.grid_steps as u128).checked_pow(free as u32).unwrap_or(u128::MAX);
    if points > MAX_GRID_POINTS {
        return Err(Error::SearchSpaceTooLarge { points });
    }

    let residual = Residual {
        d,
        amps,
        sites: support.sites(),
        basis: OrthonormalBasis::c2_from_coeffs(coeffs),
        p: p.probs(),
        qtilde: qtilde.probs(),
    };
    if free == 0 {
        let v = residual.state(&[]);
        return Ok(if residual.eval(&[]).1 <= cfg.tol {
            alloc::vec![normalize(&v)?]
        } else {
            Vec::new()
        });
    }

    let n = cfg.grid_steps;
    let cell = TAU / n as f64;
    let total = points as usize;
    let to_phases = |mut idx: usize| -> Vec<f64> {
        let mut out = Vec::with_capacity(free);
        for _ in 0..free {
            out.push((idx % n) as f64 * cell);
            idx /= n;
        }
        out
    };

    // |∂P/∂θ_k| ≤ 2·a_k for every outcome, so a grid point within half a cell
    // of a root deviates by at most `reach`.
    let reach = cell * residual.sites[1..].iter().map(|&k| residual.amps[k]).sum::<f64>() + cfg.tol;
    let mut solutions: Vec<Vec<f64>> = Vec::new();
    for idx in 0..total {
        let seed = to_phases(idx);
        if residual.eval(&seed).1 > reach {
            continue;
        }
        let refined = residual.refine(&seed);
        if residual.eval(&refined).1 <= cfg.tol && !solutions.iter().any(|s| phase_distance(s, &refined) <= 1e-7) {
            solutions.push(refined);
        }
    }

    let centers = cluster_phase_points(&solutions, cell);
    let mut states = centers
        .iter()
        .map(|c| normalize(&residual.state(c)))
        .collect::<Result<Vec<_>>>()?;
    states.sort_by(canonical_order);
    Ok(states)
}

/// Single-linkage clusters of phase tuples under the per-phase circular
/// distance; returns the circular mean of each cluster.
pub fn cluster_phase_points(points: &[Vec<f64>], radius: f64) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if phase_distance(&points[i], &points[j]) <= radius {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut centers = Vec::new();
    for root in 0..n {
        if find(&mut label, root) != root {
            continue;
        }
        let members: Vec<&Vec<f64>> = (0..n)
            .filter(|&i| find(&mut label, i) == root)
            .map(|i| &points[i])
            .collect();
        let dims = members[0].len();
        let center = (0..dims)
            .map(|k| {
                let z: Complex64 = members.iter().map(|m| unit_phase(m[k])).sum();
                if z.norm() < 1e-12 {
                    members[0][k]
                } else {
                    wrap_phase(z.arg())
                }
            })
            .collect();
        centers.push(center);
    }
    centers
}

/// Largest per-phase circular distance between two tuples.
pub fn phase_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| circular_distance(*x, *y))
        .fold(0.0, f64::max)
}

/// Phases at the supported sites after the first, of the canonical form of `s`.
pub fn free_phases(s: &PureState, support: &Support) -> Vec<f64> {
    let phases = s.canonical(DEFAULT_SUPPORT_TOL).phases();
    support.sites()[1..].iter().map(|&k| phases[k]).collect()
}

/// One-to-one matching of two lists of phase tuples within `radius`.
pub fn phase_sets_match(a: &[Vec<f64>], b: &[Vec<f64>], radius: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = alloc::vec![false; b.len()];
    fn assign(i: usize, a: &[Vec<f64>], b: &[Vec<f64>], used: &mut [bool], radius: f64) -> bool {
        if i == a.len() {
            return true;
        }
        for j in 0..b.len() {
            if !used[j] && phase_distance(&a[i], &b[j]) <= radius {
                used[j] = true;
                if assign(i + 1, a, b, used, radius) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    assign(0, a, b, &mut used, radius)
}

/// True iff `c` reproduces both distributions entrywise within `tol`.
pub fn verify_candidate(
    c: &PureState,
    p: &ProbabilityDistribution,
    qtilde: &ProbabilityDistribution,
    basis_c2: &OrthonormalBasis,
    tol: f64,
) -> bool {
    reproduces(c, p, qtilde, basis_c2, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    C2,
    Povm,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::C2 => "c2",
            Strategy::Povm => "povm",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Strategy {
    type Err = &'static str;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "c2" => Ok(Strategy::C2),
            "povm" => Ok(Strategy::Povm),
            _ => Err("expected c2 or povm"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignConfig {
    pub dim: usize,
    pub trials: u64,
    pub strategy: Strategy,
    pub seed: u64,
    pub tol: f64,
    pub mode: OrderingMode,
}

impl CampaignConfig {
    pub fn new(dim: usize, trials: u64, strategy: Strategy, seed: u64, tol: f64) -> Self {
        CampaignConfig {
            dim,
            trials,
            strategy,
            seed,
            tol,
            mode: OrderingMode::Chain,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    pub candidates: usize,
    pub measure_zero_hit: bool,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub d: usize,
    pub trials: u64,
    pub strategy: Strategy,
    pub success_count: u64,
    pub mean_candidates: f64,
    pub max_candidates: usize,
    pub measure_zero_hits: u64,
    pub mean_fidelity: f64,
    /// Filled in by callers that time the run.
    pub wall_time: Option<f64>,
}

/// Random stream for trial `index`, independent of scheduling.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Precomputed bases for one campaign.
#[derive(Debug, Clone)]
pub struct Campaign {
    cfg: CampaignConfig,
    coeffs: CoeffSequence,
    position: OrthonormalBasis,
    c2: OrthonormalBasis,
}

impl Campaign {
    pub fn new(cfg: CampaignConfig) -> Result<Self> {
        let coeffs = CoeffSequence::new(cfg.dim)?;
        Ok(Campaign {
            c2: OrthonormalBasis::c2_from_coeffs(&coeffs),
            position: OrthonormalBasis::position(cfg.dim)?,
            coeffs,
            cfg,
        })
    }

    pub fn config(&self) -> &CampaignConfig {
        &self.cfg
    }

    pub fn trial(&self, index: u64) -> Result<TrialOutcome> {
        let mut rng = trial_rng(self.cfg.seed, index);
        let s = haar_random(self.cfg.dim, &mut rng)?;
        let p = born_distribution(&s, &self.position)?;
        match self.cfg.strategy {
            Strategy::C2 => {
                let report = in_measure_zero_set(&s, &self.coeffs, self.cfg.tol)?;
                let q = born_distribution(&s, &self.c2)?;
                let cs = enumerate_candidates(&p, &q, &self.coeffs, &C2Config::with_chain_tol(self.cfg.tol));
                let (candidates, fidelity, within_bound) = match cs {
                    Ok(cs) if cs.failed.is_none() => (
                        cs.candidates.len(),
                        cs.best_fidelity(&s),
                        cs.candidates.len() <= cs.bound(),
                    ),
                    _ => (0, 0.0, false),
                };
                Ok(TrialOutcome {
                    success: within_bound && fidelity >= SUCCESS_FIDELITY,
                    candidates,
                    measure_zero_hit: report.in_set,
                    fidelity,
                })
            }
            Strategy::Povm => {
                let mut device = SimulatedDevice::new(s.clone());
                let cfg = PovmConfig {
                    mode: self.cfg.mode,
                    ..PovmConfig::default()
                };
                let fidelity = reconstruct_via_povm(&p, &mut device, self.cfg.dim, &cfg)
                    .and_then(|r| r.state.fidelity(&s))
                    .unwrap_or(0.0);
                Ok(TrialOutcome {
                    success: fidelity >= SUCCESS_FIDELITY,
                    candidates: 1,
                    measure_zero_hit: false,
                    fidelity,
                })
            }
        }
    }

    /// Aggregates outcomes given in trial order.
    pub fn report(&self, outcomes: &[TrialOutcome]) -> CampaignReport {
        let trials = outcomes.len() as u64;
        let denom = trials.max(1) as f64;
        CampaignReport {
            d: self.cfg.dim,
            trials,
            strategy: self.cfg.strategy,
            success_count: outcomes.iter().filter(|o| o.success).count() as u64,
            mean_candidates: outcomes.iter().map(|o| o.candidates as f64).sum::<f64>() / denom,
            max_candidates: outcomes.iter().map(|o| o.candidates).max().unwrap_or(0),
            measure_zero_hits: outcomes.iter().filter(|o| o.measure_zero_hit).count() as u64,
            mean_fidelity: outcomes.iter().map(|o| o.fidelity).sum::<f64>() / denom,
            wall_time: None,
        }
    }

    pub fn run(&self) -> Result<CampaignReport> {
        let outcomes = (0..self.cfg.trials)
            .map(|i| self.trial(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.report(&outcomes))
    }
}

/// Sequential campaign; see [`Campaign`] for per-trial access.
pub fn run_campaign(cfg: CampaignConfig) -> Result<CampaignReport> {
    Campaign::new(cfg)?.run()
}
