//! Pure states, supports, fidelity and Haar-random sampling.

use alloc::vec::Vec;
use core::cmp::Ordering;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, wrap_phase};

/// Tolerance on `Σ|amp|² = 1` for a valid [`PureState`].
pub const NORM_TOL: f64 = 1e-12;

/// A unit vector in `ℂ^d`, `d ≥ 2`. Amplitude `k` is `a_k e^{iθ_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<Complex64>,
}

impl PureState {
    /// Wraps an already-normalized amplitude vector.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidDimension(amps.len()));
        }
        let norm_sqr = linalg::norm_sqr(&amps);
        if norm_sqr.is_nan() || (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(PureState { amps })
    }

    /// `|k⟩` in dimension `d`.
    pub fn basis_state(d: usize, k: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if k >= d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: k + 1,
            });
        }
        let mut amps = alloc::vec![Complex64::new(0.0, 0.0); d];
        amps[k] = Complex64::new(1.0, 0.0);
        Ok(PureState { amps })
    }

    /// Builds `Σ a_k e^{iθ_k} |k⟩` and normalizes it.
    pub fn from_polar(magnitudes: &[f64], phases: &[f64]) -> Result<Self> {
        check_dim(magnitudes.len(), phases.len())?;
        let v: Vec<Complex64> = magnitudes
            .iter()
            .zip(phases)
            .map(|(&a, &t)| linalg::unit_phase(t) * a)
            .collect();
        normalize(&v)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    /// The moduli `a_k`.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.amps.iter().map(|c| c.norm()).collect()
    }

    /// The phases `θ_k` in `[0, 2π)`; zero where the amplitude vanishes.
    pub fn phases(&self) -> Vec<f64> {
        self.amps
            .iter()
            .map(|c| {
                if *c == Complex64::new(0.0, 0.0) {
                    0.0
                } else {
                    wrap_phase(c.arg())
                }
            })
            .collect()
    }

    pub fn support(&self, tol: f64) -> Result<Support> {
        support_of(self, tol)
    }

    /// Multiplies by a global phase so that the first amplitude above `tol`
    /// is real and positive.
    pub fn canonical(&self, tol: f64) -> PureState {
        let Some(first) = self.amps.iter().find(|c| c.norm() > tol) else {
            return self.clone();
        };
        let rot = first.conj() / first.norm();
        let mut amps: Vec<Complex64> = self.amps.iter().map(|c| c * rot).collect();
        // the leading amplitude is real by construction; drop the rounding residue
        if let Some(lead) = amps.iter_mut().find(|c| c.norm() > tol) {
            *lead = Complex64::new(lead.norm(), 0.0);
        }
        PureState { amps }
    }

    /// Multiplies every amplitude by `e^{iγ}`.
    pub fn with_global_phase(&self, gamma: f64) -> PureState {
        let rot = linalg::unit_phase(gamma);
        PureState {
            amps: self.amps.iter().map(|c| c * rot).collect(),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(linalg::inner(&self.amps, &other.amps))
    }

    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        fidelity(self, other)
    }
}

/// Strictly increasing list of sites whose amplitude is nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Support {
    dim: usize,
    sites: Vec<usize>,
}

impl Support {
    /// Sites `k` with `magnitudes[k] > tol`.
    pub fn from_magnitudes(magnitudes: &[f64], tol: f64) -> Result<Self> {
        let sites: Vec<usize> = magnitudes
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > tol)
            .map(|(k, _)| k)
            .collect();
        if sites.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(Support {
            dim: magnitudes.len(),
            sites,
        })
    }

    /// Support from an explicit list of sites (sorted and deduplicated here).
    pub fn from_sites(dim: usize, mut sites: Vec<usize>) -> Result<Self> {
        sites.sort_unstable();
        sites.dedup();
        if sites.is_empty() {
            return Err(Error::EmptySupport);
        }
        if let Some(&last) = sites.last() {
            if last >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: last + 1,
                });
            }
        }
        Ok(Support { dim, sites })
    }

    /// Support given by the set bits of `mask` (bit `k` ↔ site `k`).
    pub fn from_mask(dim: usize, mask: u64) -> Result<Self> {
        let sites = (0..dim).filter(|k| mask >> k & 1 == 1).collect();
        Self::from_sites(dim, sites)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    /// Number of nonzero amplitudes, `j`.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn first(&self) -> usize {
        self.sites[0]
    }

    pub fn contains(&self, k: usize) -> bool {
        self.sites.binary_search(&k).is_ok()
    }
}

/// `v / ‖v‖`.
pub fn normalize(v: &[Complex64]) -> Result<PureState> {
    if v.len() < 2 {
        return Err(Error::InvalidDimension(v.len()));
    }
    let norm = libm::sqrt(linalg::norm_sqr(v));
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(PureState {
        amps: v.iter().map(|c| c / norm).collect(),
    })
}

pub fn support_of(s: &PureState, tol: f64) -> Result<Support> {
    Support::from_magnitudes(&s.magnitudes(), tol)
}

/// `|⟨a|b⟩|`, clamped into `[0, 1]`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm().min(1.0))
}

/// Haar-uniform pure state: `2d` standard normals as real and imaginary
/// parts, then normalized.
pub fn haar_random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PureState> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    loop {
        let v: Vec<Complex64> = (0..d)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im)
            })
            .collect();
        // the all-zero draw has probability zero but is not impossible in floating point
        if let Ok(s) = normalize(&v) {
            return Ok(s);
        }
    }
}

/// Orders states by their phase vector, then by magnitudes.
pub(crate) fn canonical_order(a: &PureState, b: &PureState) -> Ordering {
    let (pa, pb) = (a.phases(), b.phases());
    for (x, y) in pa.iter().zip(&pb) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    for (x, y) in a.amps.iter().zip(&b.amps) {
        match x.norm().total_cmp(&y.norm()) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}
