//! Born-rule distributions, finite-shot sampling and POVM outcomes.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::bases::{BasisKind, OrthonormalBasis};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, CMatrix};
use crate::state::{normalize, PureState};

/// Entries down to this value are clamped to zero; below it is an error.
pub const NEGATIVE_CLAMP: f64 = 1e-12;
/// Tolerance on the total probability.
pub const SUM_TOL: f64 = 1e-10;
/// Tolerance on `Σ G_l = I`.
pub const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistributionSource {
    Position,
    Fourier,
    C2,
    PovmOutcomes,
}

impl DistributionSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DistributionSource::Position => "position",
            DistributionSource::Fourier => "fourier",
            DistributionSource::C2 => "c2",
            DistributionSource::PovmOutcomes => "povm-outcomes",
        }
    }
}

impl From<BasisKind> for DistributionSource {
    fn from(kind: BasisKind) -> Self {
        match kind {
            BasisKind::Position => DistributionSource::Position,
            BasisKind::Fourier => DistributionSource::Fourier,
            BasisKind::C2 => DistributionSource::C2,
        }
    }
}

impl fmt::Display for DistributionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for DistributionSource {
    type Err = &'static str;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "position" => Ok(DistributionSource::Position),
            "fourier" => Ok(DistributionSource::Fourier),
            "c2" => Ok(DistributionSource::C2),
            "povm-outcomes" => Ok(DistributionSource::PovmOutcomes),
            _ => Err("expected one of position, fourier, c2, povm-outcomes"),
        }
    }
}

/// Nonnegative vector summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDistribution {
    probs: Vec<f64>,
    source: DistributionSource,
}

impl ProbabilityDistribution {
    pub fn new(mut probs: Vec<f64>, source: DistributionSource) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution { reason: "empty" });
        }
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(Error::InvalidDistribution {
                    reason: "non-finite entry",
                });
            }
            if *p < 0.0 {
                if *p < -NEGATIVE_CLAMP {
                    return Err(Error::InvalidDistribution {
                        reason: "negative entry",
                    });
                }
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution {
                reason: "entries do not sum to one",
            });
        }
        Ok(ProbabilityDistribution { probs, source })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn source(&self) -> DistributionSource {
        self.source
    }

    /// Largest entrywise difference; `None` on length mismatch.
    pub fn max_deviation(&self, other: &[f64]) -> Option<f64> {
        (self.probs.len() == other.len()).then(|| {
            self.probs
                .iter()
                .zip(other)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }
}

/// `probs_k = |⟨b_k|s⟩|²`.
pub fn born_distribution(s: &PureState, b: &OrthonormalBasis) -> Result<ProbabilityDistribution> {
    check_dim(b.dim(), s.dim())?;
    let probs = b.rows().map(|row| linalg::inner(row, s.amps()).norm_sqr()).collect();
    ProbabilityDistribution::new(probs, b.kind().into())
}

/// Multinomial draw of `shots` outcomes, returned as frequencies.
pub fn sample_counts<R: Rng + ?Sized>(
    dist: &ProbabilityDistribution,
    shots: u64,
    rng: &mut R,
) -> Result<ProbabilityDistribution> {
    if shots == 0 {
        return Err(Error::InvalidDistribution {
            reason: "shots must be at least 1",
        });
    }
    let counts = multinomial(dist.probs(), shots, rng);
    let freqs = counts.iter().map(|&c| c as f64 / shots as f64).collect();
    ProbabilityDistribution::new(freqs, dist.source())
}

/// Sequential conditional binomials.
fn multinomial<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = alloc::vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass_left = 1.0f64;
    let last = probs.len() - 1;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k == last {
            counts[k] = remaining;
            break;
        }
        let cond = if mass_left <= 0.0 {
            1.0
        } else {
            (p / mass_left).clamp(0.0, 1.0)
        };
        let n = if cond >= 1.0 {
            remaining
        } else if cond <= 0.0 {
            0
        } else {
            Binomial::new(remaining, cond).map(|b| b.sample(rng)).unwrap_or(0)
        };
        counts[k] = n;
        remaining -= n;
        mass_left -= p;
    }
    counts
}

/// A Hermitian positive semidefinite POVM element.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    matrix: CMatrix,
}

impl PovmElement {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const EIGEN_TOL: f64 = 1e-10;

    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.hermitian_deviation() > Self::HERMITIAN_TOL {
            return Err(Error::NotPositive);
        }
        let min_eig = if matrix.is_diagonal() {
            matrix.diagonal().iter().map(|c| c.re).fold(f64::INFINITY, f64::min)
        } else {
            linalg::hermitian_eigen(&matrix).min_value()
        };
        if min_eig < -Self::EIGEN_TOL {
            return Err(Error::NotPositive);
        }
        Ok(PovmElement { matrix })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(CMatrix::from_diagonal(values))
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigen(&self.matrix).min_value()
    }
}

/// Largest entrywise deviation of `Σ G_l` from the identity.
pub fn completeness_deviation(povm: &[PovmElement]) -> Result<f64> {
    let Some(first) = povm.first() else {
        return Err(Error::IncompletePovm { deviation: 1.0 });
    };
    let n = first.dim();
    let mut total = CMatrix::zeros(n);
    for g in povm {
        check_dim(n, g.dim())?;
        total.add_assign(g.matrix());
    }
    Ok(total.sub(&CMatrix::identity(n)).max_abs())
}

/// `probs_l = ⟨s|G_l|s⟩`.
pub fn povm_outcome_probs(s: &PureState, povm: &[PovmElement]) -> Result<ProbabilityDistribution> {
    let deviation = completeness_deviation(povm)?;
    if deviation > COMPLETENESS_TOL {
        return Err(Error::IncompletePovm { deviation });
    }
    check_dim(povm[0].dim(), s.dim())?;
    let probs = povm.iter().map(|g| g.matrix().expectation(s.amps()).re).collect();
    ProbabilityDistribution::new(probs, DistributionSource::PovmOutcomes)
}

/// Post-measurement state `√G|s⟩/‖√G|s⟩‖`.
pub fn povm_collapse(s: &PureState, g: &PovmElement) -> Result<PureState> {
    povm_collapse_with_tol(s, g, NEGATIVE_CLAMP)
}

pub fn povm_collapse_with_tol(s: &PureState, g: &PovmElement, tol: f64) -> Result<PureState> {
    check_dim(g.dim(), s.dim())?;
    let prob = g.matrix().expectation(s.amps()).re;
    if prob <= tol {
        return Err(Error::ImpossibleOutcome);
    }
    let root = linalg::psd_sqrt(g.matrix());
    let out: Vec<Complex64> = root.mul_vec(s.amps());
    normalize(&out)
}

/// True when both forward distributions of `c` match `p` and `qtilde` entrywise within `tol`.
pub fn reproduces(
    c: &PureState,
    p: &ProbabilityDistribution,
    qtilde: &ProbabilityDistribution,
    c2: &OrthonormalBasis,
    tol: f64,
) -> bool {
    let Ok(position) = OrthonormalBasis::position(c.dim()) else {
        return false;
    };
    let (Ok(fp), Ok(fq)) = (born_distribution(c, &position), born_distribution(c, c2)) else {
        return false;
    };
    matches!(fp.max_deviation(p.probs()), Some(dev) if dev <= tol)
        && matches!(fq.max_deviation(qtilde.probs()), Some(dev) if dev <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::haar_random;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::FRAC_1_SQRT_2;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plus() -> PureState {
        PureState::new(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap()
    }

    #[test]
    fn distribution_validation() {
        assert!(ProbabilityDistribution::new(vec![0.5, 0.5], DistributionSource::Position).is_ok());
        let clamped = ProbabilityDistribution::new(vec![1.0, -1e-13], DistributionSource::Position).unwrap();
        assert_eq!(clamped.probs()[1], 0.0);
        assert!(ProbabilityDistribution::new(vec![1.1, -0.1], DistributionSource::Position).is_err());
        assert!(ProbabilityDistribution::new(vec![0.4, 0.4], DistributionSource::Position).is_err());
        assert!(ProbabilityDistribution::new(vec![], DistributionSource::Position).is_err());
    }

    #[test]
    fn born_examples() {
        let pos = OrthonormalBasis::position(2).unwrap();
        let p = born_distribution(&plus(), &pos).unwrap();
        assert_abs_diff_eq!(p.probs()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.probs()[1], 0.5, epsilon = 1e-15);
        assert_eq!(p.source(), DistributionSource::Position);

        // ψ0 = (1,-1)/√2 is orthogonal to |+>
        let c2 = OrthonormalBasis::c2(2).unwrap();
        let q = born_distribution(&plus(), &c2).unwrap();
        assert_abs_diff_eq!(q.probs()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.probs()[1], 1.0, epsilon = 1e-15);

        for d in 2..9 {
            let f = OrthonormalBasis::fourier(d).unwrap();
            let delta = PureState::basis_state(d, 0).unwrap();
            let dist = born_distribution(&delta, &f).unwrap();
            for &x in dist.probs() {
                assert_abs_diff_eq!(x, 1.0 / d as f64, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn born_dimension_mismatch() {
        let f = OrthonormalBasis::fourier(3).unwrap();
        assert!(matches!(
            born_distribution(&plus(), &f),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sampling_deterministic_outcome() {
        let dist = ProbabilityDistribution::new(vec![1.0, 0.0], DistributionSource::Position).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for shots in [1, 7, 1000] {
            let e = sample_counts(&dist, shots, &mut rng).unwrap();
            assert_eq!(e.probs(), &[1.0, 0.0]);
        }
    }

    #[test]
    fn sampling_converges() {
        let dist = ProbabilityDistribution::new(vec![0.1, 0.25, 0.05, 0.6], DistributionSource::C2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let e = sample_counts(&dist, 1_000_000, &mut rng).unwrap();
        assert!(e.max_deviation(dist.probs()).unwrap() < 0.005);
        assert_eq!(e.source(), DistributionSource::C2);
    }

    #[test]
    fn sampling_reproducible() {
        let dist = ProbabilityDistribution::new(vec![0.3, 0.3, 0.4], DistributionSource::Fourier).unwrap();
        let a = sample_counts(&dist, 500, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_counts(&dist, 500, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(sample_counts(&dist, 0, &mut ChaCha8Rng::seed_from_u64(3)).is_err());
    }

    fn chain3() -> Vec<PovmElement> {
        vec![
            PovmElement::diagonal(&[0.5, 0.5, 0.0]).unwrap(),
            PovmElement::diagonal(&[0.0, 0.5, 0.5]).unwrap(),
            PovmElement::diagonal(&[0.5, 0.0, 0.5]).unwrap(),
        ]
    }

    #[test]
    fn povm_probs_examples() {
        let s = normalize(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let probs = povm_outcome_probs(&s, &chain3()).unwrap();
        for &x in probs.probs() {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
        let id = vec![PovmElement::new(CMatrix::identity(3)).unwrap()];
        assert_eq!(povm_outcome_probs(&s, &id).unwrap().probs().len(), 1);
        assert_abs_diff_eq!(povm_outcome_probs(&s, &id).unwrap().probs()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn incomplete_povm_rejected() {
        let s = PureState::basis_state(3, 0).unwrap();
        let povm = vec![PovmElement::diagonal(&[0.5, 0.5, 0.0]).unwrap()];
        assert!(matches!(
            povm_outcome_probs(&s, &povm),
            Err(Error::IncompletePovm { .. })
        ));
    }

    #[test]
    fn non_positive_element_rejected() {
        assert_eq!(PovmElement::diagonal(&[1.0, -0.1]), Err(Error::NotPositive));
        let m = CMatrix::from_row_major(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(PovmElement::new(m), Err(Error::NotPositive));
    }

    #[test]
    fn collapse_examples() {
        let (a0, a1, a2) = (0.5f64, 0.6f64, libm::sqrt(1.0 - 0.25 - 0.36));
        let (theta, mu) = (1.1, 2.5);
        let s = PureState::from_polar(&[a0, a1, a2], &[0.0, theta, mu]).unwrap();
        let g = PovmElement::diagonal(&[0.5, 0.5, 0.0]).unwrap();
        let out = povm_collapse(&s, &g).unwrap();
        let expected = PureState::from_polar(&[a0, a1, 0.0], &[0.0, theta, 0.0]).unwrap();
        for (x, y) in out.amps().iter().zip(expected.amps()) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-15);
            assert_abs_diff_eq!(x.im, y.im, epsilon = 1e-15);
        }
        let diff = out.amps()[1].arg() - out.amps()[0].arg();
        assert_abs_diff_eq!(diff, theta, epsilon = 1e-15);

        let s = PureState::basis_state(3, 2).unwrap();
        assert_eq!(povm_collapse(&s, &g), Err(Error::ImpossibleOutcome));
    }

    #[test]
    fn collapse_non_diagonal_uses_square_root() {
        // G = |+><+| / 2 ; √G|s> ∝ |+>
        let m = CMatrix::from_row_major(2, vec![c(0.25, 0.0); 4]).unwrap();
        let g = PovmElement::new(m).unwrap();
        let s = normalize(&[c(0.3, 0.0), c(0.1, 0.4)]).unwrap();
        let out = povm_collapse(&s, &g).unwrap();
        assert_abs_diff_eq!(out.fidelity(&plus()).unwrap(), 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn born_global_phase_invariant(seed in any::<u64>(), gamma in 0.0f64..6.3, d in 2usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = haar_random(d, &mut rng).unwrap();
            let r = s.with_global_phase(gamma);
            for kind in [BasisKind::Position, BasisKind::Fourier, BasisKind::C2] {
                let b = OrthonormalBasis::new(kind, d).unwrap();
                let x = born_distribution(&s, &b).unwrap();
                let y = born_distribution(&r, &b).unwrap();
                prop_assert!(x.max_deviation(y.probs()).unwrap() < 1e-14);
            }
        }

        #[test]
        fn povm_probs_sum_to_one(seed in any::<u64>(), w in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = haar_random(3, &mut rng).unwrap();
            let povm = vec![
                PovmElement::diagonal(&[w, 0.5, 0.0]).unwrap(),
                PovmElement::diagonal(&[1.0 - w, 0.5, 1.0]).unwrap(),
            ];
            let probs = povm_outcome_probs(&s, &povm).unwrap();
            let total: f64 = probs.probs().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }
}
