use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{analyze_point, sorted_eigen, CriticalPointRecord, ExtremeValues, ProbeConfig, SearchConfig};
use crate::error::{Error, Result};
use crate::landscape::Landscape;
use crate::su2rep::wrap_angle;

/// Interior samples per segment when testing whether two critical points
/// lie on one connected critical set.
const SEGMENT_SAMPLES: usize = 5;
const FAMILY_GRAD_TOL: f64 = 1e-8;
const FAMILY_VALUE_TOL: f64 = 1e-9;

/// A connected set of critical points sharing value and type.
#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    /// Numerical dimension of the span of member offsets.
    pub dim: usize,
    /// Coordinates that vary across members.
    pub along: Vec<String>,
    pub members: usize,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dim {} along {} ({} members)", self.dim, self.along.join(","), self.members)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchOutcome {
    /// Sorted by value, descending.
    pub records: Vec<CriticalPointRecord>,
    /// One entry per start that failed to converge.
    pub failures: Vec<Error>,
    pub converged: usize,
    /// Converged starts dropped for lying within the margin of a polar bound
    /// or drifting towards one while polishing.
    pub boundary: usize,
}

enum StartResult {
    Converged(Vec<f64>),
    Boundary,
    Failed(Error),
}

/// Wraps periodic coordinates and clamps polar ones into their range.
fn project(l: &dyn Landscape, x: &mut [f64]) {
    for (i, v) in x.iter_mut().enumerate() {
        let kind = l.kind(i);
        if kind.is_periodic() {
            *v = wrap_angle(*v);
        } else {
            let (lo, hi) = kind.bounds();
            *v = v.clamp(lo, hi);
        }
    }
}

/// Componentwise difference `b - a`, taking the short way round for
/// periodic coordinates.
fn periodic_delta(l: &dyn Landscape, a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.len())
        .map(|i| {
            let d = b[i] - a[i];
            if l.kind(i).is_periodic() {
                wrap_angle(d)
            } else {
                d
            }
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn random_start(l: &dyn Landscape, rng: &mut ChaCha8Rng, margin: f64) -> Vec<f64> {
    (0..l.dim())
        .map(|i| {
            if l.kind(i).is_periodic() {
                rng.gen_range(-PI..PI)
            } else {
                let (lo, hi) = l.kind(i).bounds();
                rng.gen_range(lo + margin..hi - margin)
            }
        })
        .collect()
}

fn start_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Floor below which further polishing cannot reduce the gradient.
const POLISH_GRAD_FLOOR: f64 = 1e-14;

/// Levenberg-Marquardt iterations on the residual `grad f`, whose Jacobian
/// is the Hessian, until the gradient norm drops to `target` or stalls.
/// Only the `free` coordinates move; the residual keeps every component.
fn levenberg_marquardt(
    l: &dyn Landscape,
    x: &mut Vec<f64>,
    free: &[usize],
    target: f64,
    iterations: usize,
    lambda: &mut f64,
) -> Result<f64> {
    let k = free.len();
    let mut d = l.derivatives(x)?;
    let mut gn = d.grad.norm();
    for _ in 0..iterations {
        if gn <= target || k == 0 {
            break;
        }
        let jac = d.hessian.select_columns(free);
        let jtj = jac.transpose() * &jac;
        let rhs = -(jac.transpose() * &d.grad);
        let mut accepted = false;
        while *lambda < 1e12 {
            let a = &jtj + DMatrix::identity(k, k) * *lambda;
            let Some(chol) = a.cholesky() else {
                *lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&rhs);
            let mut y = x.clone();
            for (s, &i) in step.iter().zip(free) {
                y[i] += s;
            }
            project(l, &mut y);
            let dy = l.derivatives(&y)?;
            let gy = dy.grad.norm();
            if gy < gn {
                *x = y;
                d = dy;
                gn = gy;
                *lambda = (*lambda * 0.1).max(1e-15);
                accepted = true;
                break;
            }
            *lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    Ok(gn)
}

/// Converges one start with pinned coordinates held fixed, then keeps
/// polishing. A genuine critical point stays put while polishing; a point
/// that only looks critical because the landscape flattens towards a polar
/// bound keeps drifting and is dropped with the boundary points.
fn run_start(l: &dyn Landscape, cfg: &SearchConfig, pins: &[(usize, f64)], index: usize) -> StartResult {
    let mut rng = start_rng(cfg.seed, index);
    let mut x = random_start(l, &mut rng, cfg.margin);
    for &(i, v) in pins {
        x[i] = v;
    }
    let free: Vec<usize> = (0..x.len()).filter(|i| !pins.iter().any(|p| p.0 == *i)).collect();
    let mut lambda = 1e-3;
    let gn = match levenberg_marquardt(l, &mut x, &free, cfg.grad_tol, cfg.max_iterations, &mut lambda) {
        Ok(g) => g,
        Err(e) => return StartResult::Failed(e),
    };
    if gn > cfg.grad_tol {
        return StartResult::Failed(Error::NoConvergence { start: index, grad_norm: gn });
    }
    let anchor = x.clone();
    if let Err(e) = levenberg_marquardt(l, &mut x, &free, POLISH_GRAD_FLOOR, cfg.max_iterations, &mut lambda) {
        return StartResult::Failed(e);
    }
    let drifted = norm(&periodic_delta(l, &anchor, &x)) > cfg.dedup_radius;
    let near_bound = free.iter().any(|&i| {
        let kind = l.kind(i);
        if kind.is_periodic() {
            return false;
        }
        let (lo, hi) = kind.bounds();
        x[i] < lo + cfg.margin || x[i] > hi - cfg.margin
    });
    if drifted || near_bound {
        StartResult::Boundary
    } else {
        StartResult::Converged(x)
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Whether the straight segment from `a` to `b` consists of critical points
/// with the value at `a`.
fn segment_is_critical(l: &dyn Landscape, a: &[f64], b: &[f64], value: f64) -> bool {
    let delta = periodic_delta(l, a, b);
    (1..=SEGMENT_SAMPLES).all(|k| {
        let t = k as f64 / (SEGMENT_SAMPLES + 1) as f64;
        let mut y: Vec<f64> = a.iter().zip(&delta).map(|(p, d)| p + t * d).collect();
        project(l, &mut y);
        match l.derivatives(&y) {
            Ok(d) => d.grad.norm() <= FAMILY_GRAD_TOL && (d.value - value).abs() <= FAMILY_VALUE_TOL,
            Err(_) => false,
        }
    })
}

fn describe_family(l: &dyn Landscape, members: &[&CriticalPointRecord], radius: f64) -> Family {
    let rep = &members[0].coords;
    let n = rep.len();
    let offsets: Vec<Vec<f64>> = members.iter().map(|m| periodic_delta(l, rep, &m.coords)).collect();
    let names = l.names();
    let along = (0..n)
        .filter(|&i| offsets.iter().any(|o| o[i].abs() > radius))
        .map(|i| names[i].clone())
        .collect();
    let m = DMatrix::from_fn(offsets.len(), n, |r, c| offsets[r][c]);
    let sv = m.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    let dim = sv.iter().filter(|&&s| s > radius.max(1e-6 * top)).count();
    Family { dim, along, members: members.len() }
}

/// Multi-start search for points where the gradient of `l` vanishes.
///
/// Start `i` draws from the ChaCha stream `(cfg.seed, i)`, so the result is
/// independent of how starts are scheduled across threads.
pub fn find_critical_points(l: &dyn Landscape, cfg: &SearchConfig, context: &ExtremeValues) -> Result<SearchOutcome> {
    find_critical_points_on(l, &[], cfg, context)
}

/// Like [`find_critical_points`], restricted to the surface where each
/// coordinate index in `pins` takes the paired value. The whole gradient
/// must vanish, including its components normal to the surface.
pub fn find_critical_points_on(
    l: &dyn Landscape,
    pins: &[(usize, f64)],
    cfg: &SearchConfig,
    context: &ExtremeValues,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let names = l.names();
    for &(i, v) in pins {
        if i >= l.dim() {
            return Err(Error::InvalidArgument(format!("pinned coordinate index {i} out of range")));
        }
        if !l.kind(i).contains(v) {
            return Err(Error::OutOfRange { name: names[i].clone(), value: v });
        }
    }
    let results: Vec<StartResult> = (0..cfg.starts).into_par_iter().map(|i| run_start(l, cfg, pins, i)).collect();

    let mut outcome = SearchOutcome::default();
    let mut points = Vec::new();
    for r in results {
        match r {
            StartResult::Converged(x) => {
                outcome.converged += 1;
                points.push(x);
            }
            StartResult::Boundary => {
                outcome.converged += 1;
                outcome.boundary += 1;
            }
            StartResult::Failed(e) => outcome.failures.push(e),
        }
    }
    points.sort_by(|a, b| lexicographic(a, b));
    let mut reps: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !reps.iter().any(|r| norm(&periodic_delta(l, r, &p)) <= cfg.dedup_radius) {
            reps.push(p);
        }
    }

    let probe = ProbeConfig { seed: cfg.seed, ..ProbeConfig::default() };
    let analyzed: Vec<CriticalPointRecord> = reps
        .par_iter()
        .map(|x| analyze_point(l, x, cfg.zero_eig_tol, context, &probe))
        .collect::<Result<_>>()?;

    // components are represented by their first member
    let mut components: Vec<Vec<usize>> = Vec::new();
    for (j, rec) in analyzed.iter().enumerate() {
        let home = components.iter().position(|c| {
            let root = &analyzed[c[0]];
            root.classification == rec.classification
                && (root.value - rec.value).abs() <= FAMILY_VALUE_TOL
                && segment_is_critical(l, &root.coords, &rec.coords, root.value)
        });
        match home {
            Some(c) => components[c].push(j),
            None => components.push(vec![j]),
        }
    }

    let mut records: Vec<CriticalPointRecord> = components
        .iter()
        .map(|c| {
            let mut rec = analyzed[c[0]].clone();
            if c.len() > 1 {
                let members: Vec<&CriticalPointRecord> = c.iter().map(|&i| &analyzed[i]).collect();
                rec.family = Some(describe_family(l, &members, cfg.dedup_radius));
            }
            rec
        })
        .collect();
    records.sort_by(|a, b| b.value.total_cmp(&a.value).then_with(|| lexicographic(&a.coords, &b.coords)));
    outcome.records = records;
    Ok(outcome)
}

/// Best point found by bounded local optimization.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub coords: Vec<f64>,
    pub value: f64,
}

/// Ascent of `sign * f` from one start: Newton along directions of negative
/// curvature, gradient steps along the rest, backtracking on the value.
fn ascend(l: &dyn Landscape, sign: f64, mut x: Vec<f64>) -> Result<Optimum> {
    let n = x.len();
    let mut fx = sign * l.value(&x)?;
    for _ in 0..500 {
        let d = l.derivatives(&x)?;
        let g = &d.grad * sign;
        let h = &d.hessian * sign;
        let (vals, vecs) = sorted_eigen(&h);
        let mut step = DVector::zeros(n);
        for (k, &lam) in vals.iter().enumerate() {
            let v = vecs.column(k);
            let c = v.dot(&g);
            step += v * if lam < -1e-8 { c / -lam } else { c };
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let mut y: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            project(l, &mut y);
            let fy = sign * l.value(&y)?;
            if fy > fx {
                let dist = norm(&periodic_delta(l, &x, &y));
                let gain = fy - fx;
                x = y;
                fx = fy;
                moved = gain > 1e-17 || dist > 1e-13;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(Optimum { value: sign * fx, coords: x })
}

fn optimize(l: &dyn Landscape, starts: usize, seed: u64, sign: f64) -> Result<Optimum> {
    if starts == 0 {
        return Err(Error::InvalidArgument("at least one start is required".into()));
    }
    let results: Vec<Optimum> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = start_rng(seed, i);
            ascend(l, sign, random_start(l, &mut rng, 0.0))
        })
        .collect::<Result<_>>()?;
    let best = results
        .into_iter()
        .reduce(|best, o| if sign * o.value > sign * best.value { o } else { best })
        .expect("at least one start");
    Ok(best)
}

/// Multi-start bounded maximization; polar coordinates may reach their bounds.
pub fn maximize(l: &dyn Landscape, starts: usize, seed: u64) -> Result<Optimum> {
    optimize(l, starts, seed, 1.0)
}

/// Multi-start bounded minimization.
pub fn minimize(l: &dyn Landscape, starts: usize, seed: u64) -> Result<Optimum> {
    optimize(l, starts, seed, -1.0)
}
