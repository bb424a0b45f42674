//! Density matrices, non-selective projective measurements and evolution
//! chains of unitary and measurement steps.

use std::fmt;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::{Cx, Scalar};
use crate::su2rep::{from_matrix, CMat, Matrix3C, DECOMPOSE_INPUT_TOL};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-12;
/// Looser positivity bound applied to outputs of multi-step chains.
pub const CHAIN_POSITIVITY_TOL: f64 = 1e-10;
pub const PROJECTOR_TOL: f64 = 1e-12;

/// One of the three basis levels, `|1>`, `|2>` or `|3>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    One,
    Two,
    Three,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::One, Level::Two, Level::Three];

    /// Zero-based matrix index.
    pub fn index(self) -> usize {
        match self {
            Level::One => 0,
            Level::Two => 1,
            Level::Three => 2,
        }
    }

    /// One-based level number as written in state labels.
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Level::One),
            2 => Ok(Level::Two),
            3 => Ok(Level::Three),
            _ => Err(Error::InvalidArgument(format!("level must be 1, 2 or 3, got {n}"))),
        }
    }

    /// The two levels other than `self`, in increasing order.
    pub fn others(self) -> (Level, Level) {
        match self {
            Level::One => (Level::Two, Level::Three),
            Level::Two => (Level::One, Level::Three),
            Level::Three => (Level::One, Level::Two),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Hermitian, unit-trace, positive semidefinite 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Matrix3C);

impl DensityMatrix {
    pub fn new(m: Matrix3C) -> Result<Self> {
        Self::with_positivity_tol(m, POSITIVITY_TOL)
    }

    fn with_positivity_tol(m: Matrix3C, pos_tol: f64) -> Result<Self> {
        let herm = m.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("hermiticity defect {herm:.3e}")));
        }
        let tr = m.trace();
        if (tr - Complex64::from(1.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let rho = Self(m);
        let min = rho.min_eigenvalue();
        if min < -pos_tol {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    /// `|k><k|`
    pub fn pure(level: Level) -> Self {
        let mut d = [Complex64::from(0.0); 3];
        d[level.index()] = Complex64::from(1.0);
        Self(Matrix3C::diag(d))
    }

    /// `|psi><psi|` for a normalized state vector.
    pub fn from_state(psi: [Complex64; 3]) -> Result<Self> {
        let m = Matrix3::from_fn(|i, j| psi[i] * psi[j].conj());
        Self::new(Matrix3C::new(m)?)
    }

    pub fn matrix(&self) -> &Matrix3C {
        &self.0
    }

    pub fn population(&self, level: Level) -> f64 {
        self.0.get(level.index(), level.index()).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.0.as_matrix();
        let herm = (m + m.adjoint()) * Complex64::from(0.5);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `U rho U^dagger`
    pub fn conjugate(&self, u: &Matrix3C) -> Matrix3C {
        (u * &self.0) * u.adjoint()
    }
}

/// Complete set of orthogonal projectors defining a non-selective measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSpec {
    projectors: Vec<Matrix3C>,
}

impl MeasurementSpec {
    pub fn new(projectors: Vec<Matrix3C>) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::InvalidSpec("no projectors".into()));
        }
        let mut sum = Matrix3::<Complex64>::zeros();
        for (i, p) in projectors.iter().enumerate() {
            if p.hermiticity_defect() > PROJECTOR_TOL {
                return Err(Error::InvalidSpec(format!("projector {i} is not Hermitian")));
            }
            if (p * p).frobenius_distance(p) > PROJECTOR_TOL {
                return Err(Error::InvalidSpec(format!("projector {i} is not idempotent")));
            }
            for (j, q) in projectors.iter().enumerate().skip(i + 1) {
                if (p * q).frobenius_norm() > PROJECTOR_TOL {
                    return Err(Error::InvalidSpec(format!("projectors {i} and {j} are not orthogonal")));
                }
            }
            sum += p.as_matrix();
        }
        if (sum - Matrix3::identity()).norm() > PROJECTOR_TOL {
            return Err(Error::InvalidSpec("projectors do not sum to identity".into()));
        }
        Ok(Self { projectors })
    }

    /// Population measurement of `|k>`: `{P_k, I - P_k}`.
    pub fn population(level: Level) -> Self {
        let p = DensityMatrix::pure(level).0;
        let q = Matrix3C::new(Matrix3::identity() - p.as_matrix()).expect("finite");
        Self { projectors: vec![p, q] }
    }

    /// The identity channel `{I}`.
    pub fn trivial() -> Self {
        Self { projectors: vec![Matrix3C::identity()] }
    }

    pub fn projectors(&self) -> &[Matrix3C] {
        &self.projectors
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvolutionStep {
    Unitary(Matrix3C),
    Measurement(MeasurementSpec),
}

/// `rho -> sum_i P_i rho P_i`
pub fn measure_nonselective(rho: &DensityMatrix, spec: &MeasurementSpec) -> Result<DensityMatrix> {
    let mut out = Matrix3::<Complex64>::zeros();
    for p in &spec.projectors {
        out += (&(p * &rho.0) * p).into_matrix();
    }
    DensityMatrix::with_positivity_tol(Matrix3C::new(out)?, CHAIN_POSITIVITY_TOL)
}

/// Non-selective measurement of the population of `|k>`.
pub fn measure_population(rho: &DensityMatrix, level: Level) -> DensityMatrix {
    measure_nonselective(rho, &MeasurementSpec::population(level))
        .expect("population measurement preserves density-matrix invariants")
}

/// Applies the steps left to right; unitary steps act as `U rho U^dagger`.
pub fn evolve_chain(rho0: &DensityMatrix, steps: &[EvolutionStep]) -> Result<DensityMatrix> {
    let mut rho = *rho0;
    for step in steps {
        rho = match step {
            EvolutionStep::Unitary(u) => {
                u.ensure_unitary(DECOMPOSE_INPUT_TOL)?;
                DensityMatrix::with_positivity_tol(rho.conjugate(u), CHAIN_POSITIVITY_TOL)?
            }
            EvolutionStep::Measurement(spec) => measure_nonselective(&rho, spec)?,
        };
    }
    Ok(rho)
}

/// Probability of finding `target` after `u1`, a population measurement of
/// `measured`, and `u2`, starting from `|1><1|`.
pub fn transition_probability(u1: &Matrix3C, measured: Level, u2: &Matrix3C, target: Level) -> Result<f64> {
    u1.ensure_unitary(DECOMPOSE_INPUT_TOL)?;
    u2.ensure_unitary(DECOMPOSE_INPUT_TOL)?;
    Ok(transition_closed_form(&from_matrix(u1), Some(measured), &from_matrix(u2), target))
}

/// `|<target| U |1>|^2` with no measurement.
pub fn coherent_probability(u: &Matrix3C, target: Level) -> f64 {
    u.get(target.index(), 0).norm_sqr()
}

/// Closed form of the measured transition probability.
///
/// After the population measurement of `|j>` only the coherence between the
/// two unmeasured levels `a < b` survives, so
/// `P = sum_i |U1_{i1}|^2 |U2_{ki}|^2 + 2 Re[U1_{a1} conj(U1_{b1}) U2_{ka} conj(U2_{kb})]`.
/// With `measured = None` the full coherent amplitude is used.
pub(crate) fn transition_closed_form<T: Scalar>(
    u1: &CMat<T>,
    measured: Option<Level>,
    u2: &CMat<T>,
    target: Level,
) -> T {
    let k = target.index();
    match measured {
        Some(j) => {
            let mut p = T::constant(0.0);
            for i in 0..3 {
                p = p + u1[i][0].norm_sqr() * u2[k][i].norm_sqr();
            }
            let (a, b) = j.others();
            let (a, b) = (a.index(), b.index());
            let coherence = u1[a][0] * u1[b][0].conj() * u2[k][a] * u2[k][b].conj();
            p + coherence.re.scale(2.0)
        }
        None => {
            let mut amp = Cx::zero();
            for i in 0..3 {
                amp = amp + u2[k][i] * u1[i][0];
            }
            amp.norm_sqr()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2rep::{d_matrix, EulerAngles};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn uniform_rho() -> DensityMatrix {
        DensityMatrix::new(Matrix3C::from_real_rows([[1. / 3.; 3]; 3]).unwrap()).unwrap()
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3C {
        d_matrix(&EulerAngles::zyz(rng.gen_range(-PI..PI), rng.gen_range(0.0..PI), rng.gen_range(-PI..PI)))
    }

    #[test]
    fn eigenstate_is_unchanged() {
        let rho = DensityMatrix::pure(Level::One);
        let out = measure_population(&rho, Level::One);
        assert_eq!(out, rho);
    }

    #[test]
    fn uniform_state_loses_coherence_with_measured_level() {
        let out = measure_population(&uniform_rho(), Level::One);
        let m = out.matrix();
        let third = 1.0 / 3.0;
        for (i, j, want) in [
            (0, 0, third),
            (1, 1, third),
            (2, 2, third),
            (1, 2, third),
            (2, 1, third),
            (0, 1, 0.0),
            (0, 2, 0.0),
            (1, 0, 0.0),
            (2, 0, 0.0),
        ] {
            assert!((m.get(i, j) - Complex64::from(want)).norm() < 1e-15, "entry ({i},{j})");
        }
    }

    #[test]
    fn trivial_measurement_is_identity() {
        let rho = uniform_rho();
        assert_eq!(measure_nonselective(&rho, &MeasurementSpec::trivial()).unwrap(), rho);
    }

    #[test]
    fn diagonal_states_commute_with_population_measurements() {
        let d = Matrix3C::diag([0.2.into(), 0.5.into(), 0.3.into()]);
        let rho = DensityMatrix::new(d).unwrap();
        for level in Level::ALL {
            assert_eq!(measure_population(&rho, level), rho);
        }
    }

    #[test]
    fn post_measurement_blocks_follow_the_measured_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u1 = random_rotation(&mut rng);
        let rho_minus = DensityMatrix::new(DensityMatrix::pure(Level::One).conjugate(&u1)).unwrap();
        let u = |i: usize| u1.get(i, 0);
        // measuring |1> keeps the |2><3| coherence
        let p1 = measure_population(&rho_minus, Level::One);
        let m = p1.matrix();
        assert!((m.get(1, 2) - u(1) * u(2).conj()).norm() < 1e-15);
        assert!(m.get(0, 1).norm() == 0.0 && m.get(0, 2).norm() == 0.0);
        for i in 0..3 {
            assert!((m.get(i, i).re - u(i).norm_sqr()).abs() < 1e-15);
        }
        // measuring |2> keeps the |1><3| coherence
        let p2 = measure_population(&rho_minus, Level::Two);
        let m = p2.matrix();
        assert!((m.get(0, 2) - u(0) * u(2).conj()).norm() < 1e-15);
        assert!(m.get(0, 1).norm() == 0.0 && m.get(1, 2).norm() == 0.0);
    }

    #[test]
    fn measurement_is_idempotent_and_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let u = random_rotation(&mut rng);
            let rho = DensityMatrix::new(uniform_rho().conjugate(&u)).unwrap();
            for level in Level::ALL {
                let once = measure_population(&rho, level);
                let twice = measure_population(&once, level);
                assert!(once.matrix().frobenius_distance(twice.matrix()) < 1e-12);
                assert!((once.matrix().trace().re - 1.0).abs() < 1e-12);
                assert!(once.min_eigenvalue() > -1e-10);
            }
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let half = Matrix3C::from_real_rows([[0.5, 0., 0.], [0., 0., 0.], [0., 0., 0.]]).unwrap();
        assert!(matches!(MeasurementSpec::new(vec![half]), Err(Error::InvalidSpec(_))));
        let p1 = DensityMatrix::pure(Level::One).0;
        assert!(matches!(MeasurementSpec::new(vec![p1]), Err(Error::InvalidSpec(_))));
        assert!(matches!(MeasurementSpec::new(vec![p1, p1]), Err(Error::InvalidSpec(_))));
        assert!(matches!(MeasurementSpec::new(vec![]), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn invalid_density_matrices_are_rejected() {
        let neg = Matrix3C::from_real_rows([[1.5, 0., 0.], [0., -0.5, 0.], [0., 0., 0.]]).unwrap();
        assert!(matches!(DensityMatrix::new(neg), Err(Error::InvalidDensity(_))));
        let trace2 = Matrix3C::from_real_rows([[1., 0., 0.], [0., 1., 0.], [0., 0., 0.]]).unwrap();
        assert!(matches!(DensityMatrix::new(trace2), Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn empty_chain_and_unitary_only_chain() {
        let rho = uniform_rho();
        assert_eq!(evolve_chain(&rho, &[]).unwrap(), rho);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let us: Vec<Matrix3C> = (0..4).map(|_| random_rotation(&mut rng)).collect();
        let steps: Vec<EvolutionStep> = us.iter().map(|u| EvolutionStep::Unitary(*u)).collect();
        let total = us.iter().fold(Matrix3C::identity(), |acc, u| u * &acc);
        let out = evolve_chain(&rho, &steps).unwrap();
        assert!(out.matrix().frobenius_distance(&rho.conjugate(&total)) < 1e-13);
    }

    #[test]
    fn identity_evolutions_never_reach_level_two() {
        let id = Matrix3C::identity();
        for level in Level::ALL {
            assert_eq!(transition_probability(&id, level, &id, Level::Two).unwrap(), 0.0);
        }
    }

    #[test]
    fn closed_form_matches_channel_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let (u1, u2) = (random_rotation(&mut rng), random_rotation(&mut rng));
            for measured in Level::ALL {
                let steps = [
                    EvolutionStep::Unitary(u1),
                    EvolutionStep::Measurement(MeasurementSpec::population(measured)),
                    EvolutionStep::Unitary(u2),
                ];
                let rho = evolve_chain(&DensityMatrix::pure(Level::One), &steps).unwrap();
                for target in [Level::Two, Level::Three] {
                    let closed = transition_probability(&u1, measured, &u2, target).unwrap();
                    assert!((closed - rho.population(target)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn non_unitary_step_is_rejected() {
        let m = Matrix3C::from_real_rows([[2., 0., 0.], [0., 1., 0.], [0., 0., 1.]]).unwrap();
        let err = evolve_chain(&uniform_rho(), &[EvolutionStep::Unitary(m)]).unwrap_err();
        assert!(matches!(err, Error::NotUnitary { .. }));
    }
}
