//! Schrödinger propagation under a piecewise-constant control field, the
//! dynamical symmetry it preserves, and searches over control fields.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::landscape::{chart_eval, Chart};
use crate::quantum::{coherent_probability, transition_probability, Level};
use crate::su2rep::{euler_from_unitary, expm_hermitian, Convention, Matrix3C};

/// Tolerance on `|c1|^2 + |c2|^2 + |c3|^2 = 1`.
pub const NORM_TOL: f64 = 1e-12;

/// Drift `H0 = diag(0, 1, 2)` and coupling `V = mu * tridiagonal(1)`, with
/// `hbar = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemHamiltonians {
    mu: f64,
}

impl Default for SystemHamiltonians {
    fn default() -> Self {
        Self { mu: 1.0 }
    }
}

impl SystemHamiltonians {
    pub fn new(mu: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidArgument(format!("coupling must be finite, got {mu}")));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn h0(&self) -> Matrix3C {
        Matrix3C::diag([0.0.into(), 1.0.into(), 2.0.into()])
    }

    pub fn v(&self) -> Matrix3C {
        let m = self.mu;
        Matrix3C::from_real_rows([[0.0, m, 0.0], [m, 0.0, m], [0.0, m, 0.0]]).expect("finite entries")
    }

    /// `H0 + f V`.
    pub fn hamiltonian(&self, f: f64) -> Matrix3C {
        let m = self.mu * f;
        Matrix3C::from_real_rows([[0.0, m, 0.0], [m, 1.0, m], [0.0, m, 2.0]]).expect("finite entries")
    }
}

/// Field amplitudes held constant over consecutive intervals of length `dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseControl {
    amplitudes: Vec<f64>,
    dt: f64,
}

impl PiecewiseControl {
    pub fn new(amplitudes: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if let Some(a) = amplitudes.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite amplitude {a}")));
        }
        Ok(Self { amplitudes, dt })
    }

    /// Zero field for `duration`, as a single interval.
    pub fn free(duration: f64) -> Result<Self> {
        Self::new(vec![0.0], duration)
    }

    /// Samples `f(t) = c0 + sum_h a_h cos(2 pi h t / T) + b_h sin(2 pi h t / T)`
    /// at interval midpoints; `coeffs = [c0, a_1, b_1, a_2, b_2, ...]`.
    pub fn fourier(coeffs: &[f64], duration: f64, steps: usize) -> Result<Self> {
        if steps == 0 || coeffs.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument("need at least one step and an odd coefficient count".into()));
        }
        let dt = duration / steps as f64;
        let amplitudes = (0..steps)
            .map(|n| {
                let w = 2.0 * PI * (n as f64 + 0.5) * dt / duration;
                coeffs[0]
                    + coeffs[1..]
                        .chunks(2)
                        .enumerate()
                        .map(|(h, ab)| {
                            let (s, c) = ((h + 1) as f64 * w).sin_cos();
                            ab[0] * c + ab[1] * s
                        })
                        .sum::<f64>()
            })
            .collect();
        Self::new(amplitudes, dt)
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.amplitudes.len() as f64 * self.dt
    }
}

/// Normalized amplitudes on levels 1, 2, 3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector([Complex64; 3]);

impl StateVector {
    pub fn new(c: [Complex64; 3]) -> Result<Self> {
        let n: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if !n.is_finite() || (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!("state norm^2 is {n}, expected 1")));
        }
        Ok(Self(c))
    }

    pub fn basis(level: Level) -> Self {
        let mut c = [Complex64::from(0.0); 3];
        c[level.index()] = 1.0.into();
        Self(c)
    }

    pub fn amplitudes(&self) -> [Complex64; 3] {
        self.0
    }

    pub fn apply(&self, u: &Matrix3C) -> Self {
        let mut c = [Complex64::from(0.0); 3];
        for (i, ci) in c.iter_mut().enumerate() {
            *ci = (0..3).map(|k| u.get(i, k) * self.0[k]).sum();
        }
        Self(c)
    }
}

fn step_propagator(sys: &SystemHamiltonians, f: f64, dt: f64) -> Matrix3C {
    expm_hermitian(&sys.hamiltonian(f), dt)
}

/// Time-ordered product of `exp(-i (H0 + f_n V) dt)`, later intervals on the left.
pub fn propagate(ctrl: &PiecewiseControl, sys: &SystemHamiltonians) -> Matrix3C {
    ctrl.amplitudes
        .iter()
        .fold(Matrix3C::identity(), |u, &f| step_propagator(sys, f, ctrl.dt) * u)
}

/// States at the start and after every interval.
pub fn trajectory(ctrl: &PiecewiseControl, sys: &SystemHamiltonians, psi0: StateVector) -> Vec<StateVector> {
    let mut out = Vec::with_capacity(ctrl.amplitudes.len() + 1);
    out.push(psi0);
    let mut psi = psi0;
    for &f in &ctrl.amplitudes {
        psi = psi.apply(&step_propagator(sys, f, ctrl.dt));
        out.push(psi);
    }
    out
}

/// `c1 c3 - c2^2 / 2`, invariant under the spin-1 rotations up to the global
/// phase: it picks up `e^{-2i t}` from the trace of `H0` over time `t`.
pub fn conserved_complex(psi: &StateVector) -> Complex64 {
    let [c1, c2, c3] = psi.0;
    c1 * c3 - c2 * c2 * 0.5
}

/// `|c1 c3 - c2^2 / 2|`, constant along every controlled trajectory.
pub fn conserved_quantity(psi: &StateVector) -> f64 {
    conserved_complex(psi).norm()
}

/// `P_{1 -> target}` of `U(f2) M U(f1)` with a non-selective population
/// measurement of `measured`, or the coherent `|<target| U(f2) U(f1) |1>|^2`
/// when `measured` is `None`.
pub fn dynamic_transition_probability(
    f1: &PiecewiseControl,
    measured: Option<Level>,
    f2: &PiecewiseControl,
    target: Level,
    sys: &SystemHamiltonians,
) -> Result<f64> {
    let u1 = propagate(f1, sys);
    let u2 = propagate(f2, sys);
    match measured {
        Some(m) => transition_probability(&u1, m, &u2, target),
        None => Ok(coherent_probability(&(u2 * u1), target)),
    }
}

/// The same probability evaluated kinematically: both propagators are
/// decomposed into Euler angles and evaluated on a rotation-pair chart.
pub fn kinematic_transition_probability(
    u1: &Matrix3C,
    measured: Option<Level>,
    u2: &Matrix3C,
    target: Level,
) -> Result<f64> {
    let angles = |u: &Matrix3C| -> Result<[f64; 3]> {
        let r = euler_from_unitary(u, Convention::Zyz)?;
        Ok(r.angles.expect("member of R").as_array())
    };
    match measured {
        Some(m) => {
            let (a, b) = (angles(u1)?, angles(u2)?);
            let chart = Chart::new(Convention::Zyz, Convention::Zyz, m, target)?;
            chart_eval(&chart, &[a[0], a[1], a[2], b[0], b[1], b[2]])
        }
        None => {
            // measuring the target after the full evolution leaves its population unchanged
            let a = angles(&(u2 * u1))?;
            let chart = Chart::new(Convention::Zyz, Convention::Zyz, target, target)?.identity_factor(1)?;
            chart_eval(&chart, &a)
        }
    }
}

/// Settings for a search over Fourier-parameterized control fields.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundSearchConfig {
    /// Total objective evaluations.
    pub budget: usize,
    pub seed: u64,
    /// Harmonics per field, at most 8.
    pub harmonics: usize,
    /// Duration of each field.
    pub duration: f64,
    /// Piecewise-constant intervals per field.
    pub steps: usize,
    /// Level measured between the two fields; `None` searches a single
    /// coherent field.
    pub measured: Option<Level>,
    pub target: Level,
    /// Independent local refinements sharing the budget.
    pub restarts: usize,
}

impl Default for BoundSearchConfig {
    fn default() -> Self {
        Self {
            budget: 100_000,
            seed: 0,
            harmonics: 4,
            duration: 20.0,
            steps: 100,
            measured: None,
            target: Level::Two,
            restarts: 32,
        }
    }
}

impl BoundSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 || self.steps == 0 || self.restarts == 0 {
            return Err(Error::InvalidArgument("budget, steps and restarts must be positive".into()));
        }
        if self.harmonics > 8 {
            return Err(Error::InvalidArgument(format!("at most 8 harmonics, got {}", self.harmonics)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidArgument(format!("duration must be positive, got {}", self.duration)));
        }
        if self.target == Level::One {
            return Err(Error::InvalidArgument("target must be level 2 or 3".into()));
        }
        Ok(())
    }

    fn fields(&self) -> usize {
        if self.measured.is_some() {
            2
        } else {
            1
        }
    }

    fn params_per_field(&self) -> usize {
        2 * self.harmonics + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundSearchResult {
    pub best: f64,
    pub evaluations: usize,
    /// Fourier coefficients of each field at the best point.
    pub coefficients: Vec<Vec<f64>>,
}

fn search_objective(cfg: &BoundSearchConfig, sys: &SystemHamiltonians, p: &[f64]) -> f64 {
    let k = cfg.params_per_field();
    let field = |i: usize| PiecewiseControl::fourier(&p[i * k..(i + 1) * k], cfg.duration, cfg.steps).expect("valid field");
    match cfg.measured {
        None => coherent_probability(&propagate(&field(0), sys), cfg.target),
        Some(m) => {
            let (u1, u2) = (propagate(&field(0), sys), propagate(&field(1), sys));
            transition_probability(&u1, m, &u2, cfg.target).expect("propagators are unitary")
        }
    }
}

/// Nelder-Mead maximization of `f` from `x0` within `budget` evaluations.
/// Restarts the simplex around the incumbent whenever it collapses.
fn nelder_mead_max(f: impl Fn(&[f64]) -> f64, x0: Vec<f64>, scale: f64, budget: usize) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let mut evals = 0;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        -f(x)
    };
    let mut best = (x0.clone(), f64::INFINITY);
    let mut center = x0;
    let mut step = scale;
    'restart: while evals + n < budget {
        let mut simplex: Vec<(Vec<f64>, f64)> = (0..=n)
            .map(|i| {
                let mut x = center.clone();
                if i > 0 {
                    x[i - 1] += step;
                }
                let v = eval(&x, &mut evals);
                (x, v)
            })
            .collect();
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if simplex[0].1 < best.1 {
                best = simplex[0].clone();
            }
            let spread = simplex[n].1 - simplex[0].1;
            if spread < 1e-13 || evals + 2 > budget {
                center = best.0.clone();
                step = (step * 0.5).max(1e-4);
                continue 'restart;
            }
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (w - c)).collect()
            };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let xc = if fr < simplex[n].1 { along(-0.5) } else { along(0.5) };
                let fc = eval(&xc, &mut evals);
                if fc < fr.min(simplex[n].1) {
                    simplex[n] = (xc, fc);
                } else {
                    if evals + n > budget {
                        center = best.0.clone();
                        continue 'restart;
                    }
                    let x0 = simplex[0].0.clone();
                    for (x, v) in simplex.iter_mut().skip(1) {
                        for (xi, bi) in x.iter_mut().zip(&x0) {
                            *xi = bi + 0.5 * (*xi - bi);
                        }
                        *v = eval(x, &mut evals);
                    }
                }
            }
        }
    }
    (best.0, -best.1, evals)
}

/// Random starts refined by Nelder-Mead over Fourier coefficients of the
/// control fields. Runs in parallel; the result depends only on `cfg`.
pub fn bound_search(cfg: &BoundSearchConfig, sys: &SystemHamiltonians) -> Result<BoundSearchResult> {
    cfg.validate()?;
    let dim = cfg.fields() * cfg.params_per_field();
    let runs = cfg.restarts.min(cfg.budget);
    let runs: Vec<(Vec<f64>, f64, usize)> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let share = cfg.budget / runs + usize::from(r < cfg.budget % runs);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let x0: Vec<f64> = if r == 0 { vec![0.0; dim] } else { (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect() };
            if share < dim + 1 {
                let v = search_objective(cfg, sys, &x0);
                return (x0, v, 1);
            }
            nelder_mead_max(|p| search_objective(cfg, sys, p), x0, 0.2, share)
        })
        .collect();
    let evaluations = runs.iter().map(|r| r.2).sum();
    let (x, best, _) = runs.into_iter().fold((Vec::new(), f64::NEG_INFINITY, 0), |acc, r| if r.1 > acc.1 { r } else { acc });
    let k = cfg.params_per_field();
    Ok(BoundSearchResult { best, evaluations, coefficients: x.chunks(k).map(<[f64]>::to_vec).collect() })
}

/// Best coherent-only `P_{1 -> 2}` found within `budget` evaluations.
pub fn coherent_bound_search(budget: usize, seed: u64, sys: &SystemHamiltonians) -> Result<f64> {
    let cfg = BoundSearchConfig { budget, seed, ..BoundSearchConfig::default() };
    Ok(bound_search(&cfg, sys)?.best)
}

fn random_control(rng: &mut ChaCha8Rng) -> PiecewiseControl {
    let steps = rng.gen_range(10..=100);
    let amplitudes = (0..steps).map(|_| rng.gen_range(-2.0..2.0)).collect();
    PiecewiseControl::new(amplitudes, rng.gen_range(0.01..0.2)).expect("valid control")
}

fn random_state(rng: &mut ChaCha8Rng) -> StateVector {
    let mut c = [Complex64::from(0.0); 3];
    for z in &mut c {
        *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let n = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    StateVector(c.map(|z| z / n))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConservationReport {
    pub samples: usize,
    /// Largest change of the modulus along any trajectory.
    pub max_drift: f64,
    /// Largest change of the complex quantity once its `e^{-2it}` rotation
    /// is removed.
    pub max_phase_drift: f64,
}

/// Propagates `samples` random controls from `|1>` (even samples) and from
/// random states (odd samples), tracking the conserved quantity.
pub fn conservation_suite(samples: usize, seed: u64, sys: &SystemHamiltonians) -> ConservationReport {
    let per: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let ctrl = random_control(&mut rng);
            let psi0 = if i % 2 == 0 { StateVector::basis(Level::One) } else { random_state(&mut rng) };
            let q0 = conserved_complex(&psi0);
            trajectory(&ctrl, sys, psi0).iter().enumerate().fold((0.0, 0.0), |(d, p), (n, psi)| {
                let q = conserved_complex(psi);
                let t = n as f64 * ctrl.dt;
                let unrotated = q * Complex64::from_polar(1.0, 2.0 * t);
                (f64::max(d, (q.norm() - q0.norm()).abs()), f64::max(p, (unrotated - q0).norm()))
            })
        })
        .collect();
    ConservationReport {
        samples,
        max_drift: per.iter().map(|p| p.0).fold(0.0, f64::max),
        max_phase_drift: per.iter().map(|p| p.1).fold(0.0, f64::max),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrosscheckReport {
    pub samples: usize,
    pub max_discrepancy: f64,
}

/// Compares dynamic and kinematic probabilities on random control pairs,
/// cycling through every measured level and the coherent case, and both
/// targets.
pub fn crosscheck_suite(samples: usize, seed: u64, sys: &SystemHamiltonians) -> Result<CrosscheckReport> {
    let measured = [Some(Level::One), Some(Level::Two), Some(Level::Three), None];
    let errs = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (f1, f2) = (random_control(&mut rng), random_control(&mut rng));
            let m = measured[i % 4];
            let target = if (i / 4) % 2 == 0 { Level::Two } else { Level::Three };
            let dynamic = dynamic_transition_probability(&f1, m, &f2, target, sys)?;
            let kinematic = kinematic_transition_probability(&propagate(&f1, sys), m, &propagate(&f2, sys), target)?;
            Ok((dynamic - kinematic).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CrosscheckReport { samples, max_discrepancy: errs.into_iter().fold(0.0, f64::max) })
}

/// Largest probability of reaching a state at Bloch angle `delta_phi` from
/// the initial state using `n` intermediate non-selective measurements:
/// `(1 + cos(delta_phi / (n + 1))^(n + 1)) / 2`.
pub fn anti_zeno_pmax(n: u64, delta_phi: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one measurement is required".into()));
    }
    if !(0.0..=PI).contains(&delta_phi) {
        return Err(Error::InvalidArgument(format!("delta_phi must lie in [0, pi], got {delta_phi}")));
    }
    let k = (n + 1) as f64;
    Ok(0.5 * (1.0 + (delta_phi / k).cos().powf(k)))
}

/// Brute-force optimum of the two-level transfer with one intermediate
/// measurement: the measurement basis is scanned over the Bloch sphere on a
/// grid, and the best cell is refined by repeated local grids.
pub fn single_measurement_optimum(delta_phi: f64) -> f64 {
    let target = [Complex64::from((delta_phi / 2.0).cos()), Complex64::from((delta_phi / 2.0).sin())];
    // initial state |0>, measure {|m>, |m_perp>}, then overlap with the target
    let prob = |theta: f64, phi: f64| -> f64 {
        let m = [Complex64::from((theta / 2.0).cos()), Complex64::from_polar((theta / 2.0).sin(), phi)];
        let m_perp = [-m[1].conj(), m[0].conj()];
        [m, m_perp]
            .iter()
            .map(|b| {
                let pop = b[0].norm_sqr();
                let overlap = b[0].conj() * target[0] + b[1].conj() * target[1];
                pop * overlap.norm_sqr()
            })
            .sum()
    };
    let (mut theta, mut phi) = (0.0, 0.0);
    let mut best = prob(theta, phi);
    let (mut dt, mut dp) = (PI, PI);
    let cells = 40;
    for _ in 0..30 {
        let (t0, p0) = (theta, phi);
        for i in -cells..=cells {
            for j in -cells..=cells {
                let t = (t0 + dt * i as f64 / cells as f64).clamp(0.0, PI);
                let p = p0 + dp * j as f64 / cells as f64;
                let v = prob(t, p);
                if v > best {
                    (best, theta, phi) = (v, t, p);
                }
            }
        }
        dt *= 4.0 / cells as f64;
        dp *= 4.0 / cells as f64;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2rep::membership;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn sys() -> SystemHamiltonians {
        SystemHamiltonians::default()
    }

    #[test]
    fn hamiltonians_are_hermitian_with_expected_entries() {
        let s = SystemHamiltonians::new(0.7).unwrap();
        assert_eq!(s.h0().hermiticity_defect(), 0.0);
        assert_eq!(s.v().hermiticity_defect(), 0.0);
        assert_eq!(s.v().get(1, 2).re, 0.7);
        assert!(SystemHamiltonians::new(f64::NAN).is_err());
        let h = s.hamiltonian(0.3);
        let want = s.h0().as_matrix() + s.v().as_matrix() * Complex64::from(0.3);
        assert!((h.as_matrix() - want).norm() < 1e-15);
    }

    #[test]
    fn control_validation() {
        assert!(PiecewiseControl::new(vec![1.0], 0.0).is_err());
        assert!(PiecewiseControl::new(vec![f64::INFINITY], 0.1).is_err());
        assert!(PiecewiseControl::fourier(&[0.0, 1.0], 1.0, 10).is_err());
        let c = PiecewiseControl::fourier(&[0.5, 0.0, 0.0], 2.0, 4).unwrap();
        assert_eq!(c.amplitudes(), &[0.5; 4]);
        assert_eq!(c.duration(), 2.0);
    }

    #[test]
    fn free_evolution_is_diagonal_phases() {
        let t = 1.3;
        let u = propagate(&PiecewiseControl::free(t).unwrap(), &sys());
        let want = Matrix3C::diag([1.0.into(), Complex64::from_polar(1.0, -t), Complex64::from_polar(1.0, -2.0 * t)]);
        assert!(u.frobenius_distance(&want) < 1e-14);
    }

    #[test]
    fn long_propagation_stays_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let amps = (0..10_000).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let u = propagate(&PiecewiseControl::new(amps, 0.01).unwrap(), &sys());
        assert!(u.unitarity_defect() <= 1e-11, "{}", u.unitarity_defect());
    }

    #[test]
    fn propagators_lie_in_rotation_set() {
        for i in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(i);
            let u = propagate(&random_control(&mut rng), &SystemHamiltonians::new(rng.gen_range(0.2..2.0)).unwrap());
            assert!(membership(&u, Convention::Zyz).unwrap().in_r);
        }
    }

    #[test]
    fn refining_a_smooth_control_converges() {
        let f = |t: f64| 0.8 * (0.7 * t).sin() + 0.3;
        let sampled = |steps: usize| {
            let dt = 5.0 / steps as f64;
            PiecewiseControl::new((0..steps).map(|n| f((n as f64 + 0.5) * dt)).collect(), dt).unwrap()
        };
        let errs: Vec<f64> = [100, 200, 400, 800]
            .windows(2)
            .map(|w| propagate(&sampled(w[0]), &sys()).frobenius_distance(&propagate(&sampled(w[1]), &sys())))
            .collect();
        assert!(errs[0] < 1e-2);
        assert!(errs[1] < errs[0] / 3.0 && errs[2] < errs[1] / 3.0, "{errs:?}");
    }

    #[test]
    fn conserved_quantity_examples() {
        assert_eq!(conserved_quantity(&StateVector::basis(Level::One)), 0.0);
        let h = Complex64::from(FRAC_1_SQRT_2);
        let psi = StateVector::new([h, h, 0.0.into()]).unwrap();
        assert!((conserved_quantity(&psi) - 0.25).abs() < 1e-15);
        assert!(StateVector::new([1.0.into(), 1.0.into(), 0.0.into()]).is_err());
    }

    #[test]
    fn conserved_quantity_does_not_drift() {
        let r = conservation_suite(1000, 7, &sys());
        assert!(r.max_drift <= 1e-10, "{r:?}");
        assert!(r.max_phase_drift <= 1e-10, "{r:?}");
    }

    #[test]
    fn zero_fields_never_reach_level_two() {
        let z = PiecewiseControl::free(3.0).unwrap();
        for m in [Some(Level::One), Some(Level::Two), Some(Level::Three), None] {
            assert_eq!(dynamic_transition_probability(&z, m, &z, Level::Two, &sys()).unwrap(), 0.0);
        }
    }

    #[test]
    fn dynamic_and_kinematic_pictures_agree() {
        let r = crosscheck_suite(200, 11, &sys()).unwrap();
        assert!(r.max_discrepancy <= 1e-10, "{r:?}");
    }

    #[test]
    fn random_coherent_controls_respect_the_half_bound() {
        let best = (0..10_000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(i);
                let (f1, f2) = (random_control(&mut rng), random_control(&mut rng));
                dynamic_transition_probability(&f1, None, &f2, Level::Two, &sys()).unwrap()
            })
            .reduce(|| 0.0, f64::max);
        assert!(best <= 0.5 + 1e-9, "{best}");
    }

    #[test]
    fn tiny_budget_returns_zero_field_value() {
        assert_eq!(coherent_bound_search(1, 0, &sys()).unwrap(), 0.0);
        let bad = BoundSearchConfig { harmonics: 9, ..BoundSearchConfig::default() };
        assert!(bound_search(&bad, &sys()).is_err());
    }

    #[test]
    fn anti_zeno_formula() {
        assert!((anti_zeno_pmax(1, PI / 2.0).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(anti_zeno_pmax(4, 0.0).unwrap(), 1.0);
        assert!((anti_zeno_pmax(1, PI).unwrap() - 0.5).abs() < 1e-15);
        assert!(anti_zeno_pmax(0, 1.0).is_err());
        assert!(anti_zeno_pmax(1, -0.1).is_err());
        assert!(anti_zeno_pmax(1, 3.2).is_err());
    }

    #[test]
    fn single_measurement_brute_force_matches_formula() {
        for dphi in [0.3, PI / 2.0, 2.5, PI] {
            let brute = single_measurement_optimum(dphi);
            assert!((brute - anti_zeno_pmax(1, dphi).unwrap()).abs() < 1e-6, "{dphi}: {brute}");
        }
    }
}
