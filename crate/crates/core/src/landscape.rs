//! Objective functions on pairs of spin-1 rotations and on slices of that
//! space.
//!
//! Every objective implements [`Landscape`]: a function of named angle
//! coordinates that reports its value and exact gradient and Hessian.
//! [`Chart`] evaluates the measured transition probability through the
//! rotation matrices themselves; the reduced objectives are closed forms in
//! the relative phase `omega = a1 + g2` and the two polar angles.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar, MAX_VARS};
use crate::quantum::{transition_closed_form, Level};
use crate::su2rep::{d_entries, Convention};

/// Names of the six chart coordinates, first rotation then second.
pub const COORD_NAMES: [&str; 6] = ["a1", "b1", "g1", "a2", "b2", "g2"];

/// Slack allowed when checking that a coordinate lies in its closed range.
const RANGE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordKind {
    /// Periodic angle with range `[-pi, pi]`.
    Azimuth,
    /// Polar angle with range `[0, pi]`.
    Polar,
}

impl CoordKind {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            CoordKind::Azimuth => (-PI, PI),
            CoordKind::Polar => (0.0, PI),
        }
    }

    pub fn contains(self, x: f64) -> bool {
        let (lo, hi) = self.bounds();
        x.is_finite() && x >= lo - RANGE_SLACK && x <= hi + RANGE_SLACK
    }

    pub fn is_periodic(self) -> bool {
        self == CoordKind::Azimuth
    }
}

fn kind_of_chart_coord(index: usize) -> CoordKind {
    if index % 3 == 1 {
        CoordKind::Polar
    } else {
        CoordKind::Azimuth
    }
}

/// Value, gradient and Hessian at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// A smooth objective on a box of angle coordinates.
pub trait Landscape: Sync {
    fn dim(&self) -> usize;
    fn names(&self) -> Vec<String>;
    fn kind(&self, index: usize) -> CoordKind;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn derivatives(&self, x: &[f64]) -> Result<Derivatives>;
    /// Compact text form used in reports.
    fn describe(&self) -> String;

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                x.len()
            )));
        }
        let names = self.names();
        for (i, &v) in x.iter().enumerate() {
            if !self.kind(i).contains(v) {
                return Err(Error::OutOfRange { name: names[i].clone(), value: v });
            }
        }
        Ok(())
    }
}

/// Evaluates a generic objective on jets seeded at every coordinate.
fn jet_derivatives(x: &[f64], f: impl Fn(&[Jet]) -> Jet) -> Derivatives {
    let n = x.len();
    assert!(n <= MAX_VARS);
    let seeds: Vec<Jet> = x.iter().enumerate().map(|(i, &v)| Jet::variable(v, i)).collect();
    let out = f(&seeds);
    Derivatives {
        value: out.v,
        grad: DVector::from_fn(n, |i, _| out.g[i]),
        hessian: DMatrix::from_fn(n, n, |i, k| 0.5 * (out.h[i][k] + out.h[k][i])),
    }
}

/// A slice of the space of rotation pairs: conventions for both factors,
/// some coordinates frozen, the measured level and the target level.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    conventions: [Convention; 2],
    frozen: [Option<f64>; 6],
    measured: Level,
    target: Level,
}

impl Chart {
    /// All six coordinates free.
    pub fn new(first: Convention, second: Convention, measured: Level, target: Level) -> Result<Self> {
        if target == Level::One {
            return Err(Error::InvalidChart("target must be level 2 or 3".into()));
        }
        Ok(Self { conventions: [first, second], frozen: [None; 6], measured, target })
    }

    /// Freezes coordinate `name` (one of [`COORD_NAMES`]) at `value`.
    pub fn freeze(mut self, name: &str, value: f64) -> Result<Self> {
        let idx = coord_index(name)?;
        if !kind_of_chart_coord(idx).contains(value) {
            return Err(Error::InvalidChart(format!("frozen {name} = {value} outside its range")));
        }
        self.frozen[idx] = Some(value);
        Ok(self)
    }

    /// Freezes all three coordinates of factor `factor` (0 or 1) at zero,
    /// making that factor the identity.
    pub fn identity_factor(mut self, factor: usize) -> Result<Self> {
        if factor > 1 {
            return Err(Error::InvalidChart(format!("factor index {factor}")));
        }
        for i in 0..3 {
            self.frozen[3 * factor + i] = Some(0.0);
        }
        Ok(self)
    }

    pub fn conventions(&self) -> [Convention; 2] {
        self.conventions
    }

    pub fn measured(&self) -> Level {
        self.measured
    }

    pub fn target(&self) -> Level {
        self.target
    }

    pub fn frozen(&self) -> &[Option<f64>; 6] {
        &self.frozen
    }

    /// Indices into [`COORD_NAMES`] of the free coordinates, in order.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..6).filter(|&i| self.frozen[i].is_none()).collect()
    }

    /// Full six-coordinate vector with frozen values substituted.
    pub fn full_coords(&self, free: &[f64]) -> Result<[f64; 6]> {
        self.check_point(free)?;
        let mut out = [0.0; 6];
        let mut it = free.iter();
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = match self.frozen[i] {
                Some(v) => v,
                None => *it.next().expect("length checked"),
            };
        }
        Ok(out)
    }

    /// Projects a full six-coordinate vector onto the free coordinates.
    pub fn free_part(&self, full: &[f64; 6]) -> Vec<f64> {
        self.free_indices().into_iter().map(|i| full[i]).collect()
    }

    fn eval_generic<T: Scalar>(&self, free: &[T]) -> T {
        let mut it = free.iter();
        let c: Vec<T> = (0..6)
            .map(|i| match self.frozen[i] {
                Some(v) => T::constant(v),
                None => *it.next().expect("length checked"),
            })
            .collect();
        let u1 = d_entries(self.conventions[0], c[0], c[1], c[2]);
        let u2 = d_entries(self.conventions[1], c[3], c[4], c[5]);
        transition_closed_form(&u1, Some(self.measured), &u2, self.target)
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conv={},{}", self.conventions[0].name(), self.conventions[1].name())?;
        let frozen: Vec<String> = (0..6)
            .filter_map(|i| self.frozen[i].map(|v| format!("{}:{}", COORD_NAMES[i], v)))
            .collect();
        if !frozen.is_empty() {
            write!(f, " freeze={}", frozen.join(","))?;
        }
        write!(f, " measured={} target={}", self.measured, self.target)
    }
}

fn coord_index(name: &str) -> Result<usize> {
    COORD_NAMES
        .iter()
        .position(|&n| n == name)
        .ok_or_else(|| Error::InvalidChart(format!("unknown coordinate {name:?}")))
}

impl Landscape for Chart {
    fn dim(&self) -> usize {
        self.frozen.iter().filter(|f| f.is_none()).count()
    }

    fn names(&self) -> Vec<String> {
        self.free_indices().into_iter().map(|i| COORD_NAMES[i].to_string()).collect()
    }

    fn kind(&self, index: usize) -> CoordKind {
        kind_of_chart_coord(self.free_indices()[index])
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_generic(x))
    }

    fn derivatives(&self, x: &[f64]) -> Result<Derivatives> {
        self.check_point(x)?;
        Ok(jet_derivatives(x, |v| self.eval_generic(v)))
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

/// `chart_eval`: the chart objective at the free coordinates `point`.
pub fn chart_eval(chart: &Chart, point: &[f64]) -> Result<f64> {
    chart.value(point)
}

/// Point of the reduced three-coordinate landscape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedPoint {
    omega: f64,
    beta1: f64,
    beta2: f64,
}

impl ReducedPoint {
    /// `omega` is wrapped into `(-pi, pi]`; both polar angles must lie in `(0, pi)`.
    pub fn new(omega: f64, beta1: f64, beta2: f64) -> Result<Self> {
        for (name, v) in [("omega", omega), ("b1", beta1), ("b2", beta2)] {
            if !v.is_finite() {
                return Err(Error::OutOfRange { name: name.into(), value: v });
            }
        }
        for (name, v) in [("b1", beta1), ("b2", beta2)] {
            if v <= 0.0 || v >= PI {
                return Err(Error::OutOfRange { name: name.into(), value: v });
            }
        }
        Ok(Self { omega: crate::su2rep::wrap_angle(omega), beta1, beta2 })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn beta1(&self) -> f64 {
        self.beta1
    }
    pub fn beta2(&self) -> f64 {
        self.beta2
    }
}

fn l1_generic<T: Scalar>(omega: T, b1: T, b2: T) -> T {
    let (s1, c1) = (b1.sin(), b1.cos());
    let (s2, c2) = (b2.sin(), b2.cos());
    let cos2b1 = (b1 + b1).cos();
    let sin2b2 = (b2 + b2).sin();
    let half_sin_sq = (T::constant(1.0) - c1).scale(0.5);
    let t1 = (s2 * s2 * (cos2b1 + T::constant(3.0))).scale(0.125);
    let t2 = (s1 * s1 * c2 * c2).scale(0.5);
    let t3 = (omega.cos() * s1 * half_sin_sq * sin2b2).scale(0.5);
    t1 + t2 - t3
}

/// Transition probability `1 -> 2` after measuring level 1, as a function of
/// the relative phase and the two polar angles.
pub fn l1(p: &ReducedPoint) -> f64 {
    l1_generic(p.omega, p.beta1, p.beta2)
}

/// Analytic gradient of [`l1`] in the order `(omega, b1, b2)`.
pub fn l1_grad(p: &ReducedPoint) -> Vector3<f64> {
    let (o, b1, b2) = (p.omega, p.beta1, p.beta2);
    let s = (b1 / 2.0).sin().powi(2);
    let d_omega = 0.5 * o.sin() * b1.sin() * s * (2.0 * b2).sin();
    let d_b1 = 0.125 * (1.0 + 3.0 * (2.0 * b2).cos()) * (2.0 * b1).sin()
        - 0.25 * o.cos() * (b1.cos() - (2.0 * b1).cos()) * (2.0 * b2).sin();
    let d_b2 = 0.125 * (1.0 + 3.0 * (2.0 * b1).cos()) * (2.0 * b2).sin()
        - 0.5 * o.cos() * b1.sin() * (2.0 * b2).cos() * (1.0 - b1.cos());
    Vector3::new(d_omega, d_b1, d_b2)
}

/// Analytic Hessian of [`l1`] in the order `(omega, b1, b2)`.
pub fn l1_hessian(p: &ReducedPoint) -> Matrix3<f64> {
    let (o, b1, b2) = (p.omega, p.beta1, p.beta2);
    let (so, co) = o.sin_cos();
    let s = (b1 / 2.0).sin().powi(2);
    let h_oo = 0.5 * co * s * b1.sin() * (2.0 * b2).sin();
    let h_o1 = so * s * b2.sin() * (2.0 * b1.cos() + 1.0) * b2.cos();
    let h_o2 = so * s * b1.sin() * (2.0 * b2).cos();
    let h_11 = 0.25
        * (co * (b1.sin() - 2.0 * (2.0 * b1).sin()) * (2.0 * b2).sin()
            + (2.0 * b1).cos() * (3.0 * (2.0 * b2).cos() + 1.0));
    let h_12 = -co * s * (2.0 * b1.cos() + 1.0) * (2.0 * b2).cos()
        - 0.75 * (2.0 * b1).sin() * (2.0 * b2).sin();
    let h_22 = 2.0 * co * b1.sin() * (2.0 * b2).sin() * s
        + 0.25 * (3.0 * (2.0 * b1).cos() + 1.0) * (2.0 * b2).cos();
    Matrix3::new(h_oo, h_o1, h_o2, h_o1, h_11, h_12, h_o2, h_12, h_22)
}

fn m_func_generic<T: Scalar>(b1: T, b2: T) -> T {
    let (s1, c2, s2) = (b1.sin(), b2.cos(), b2.sin());
    (s1 * s1 * c2 * c2 + s2 * s2).scale(0.5)
}

/// Upper envelope over the relative phase of the `1 -> 2` probability after
/// measuring level 2: `(sin^2 b1 cos^2 b2 + sin^2 b2) / 2`.
pub fn m_func(beta1: f64, beta2: f64) -> f64 {
    m_func_generic(beta1, beta2)
}

fn m_full_generic<T: Scalar>(omega: T, b1: T, b2: T) -> T {
    let (s1, s2) = (b1.sin(), b2.sin());
    let s = s1 * s1;
    let t = s2 * s2;
    let st = s * t;
    (s + t).scale(0.5) - st.scale(0.75) - (st * (omega + omega).cos()).scale(0.25)
}

/// The `1 -> 2` probability after measuring level 2, as a function of the
/// relative phase `omega = a1 + g2` and the polar angles. Equals
/// [`m_func`] at `omega = +-pi/2` and never exceeds it.
pub fn m_full(omega: f64, beta1: f64, beta2: f64) -> f64 {
    m_full_generic(omega, beta1, beta2)
}

/// `|<3|U|1>|^2 = sin^4(b1/2)`, the `1 -> 3` probability when the second
/// rotation is the identity.
pub fn p13_objective(beta1: f64) -> f64 {
    (beta1 / 2.0).sin().powi(4)
}

/// Reduced closed-form objectives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduced {
    /// [`l1`] on `(omega, b1, b2)` with the analytic derivatives.
    L1,
    /// [`m_func`] on `(b1, b2)`.
    M,
    /// [`m_full`] on `(omega, b1, b2)`.
    MFull,
}

impl Landscape for Reduced {
    fn dim(&self) -> usize {
        match self {
            Reduced::M => 2,
            _ => 3,
        }
    }

    fn names(&self) -> Vec<String> {
        let names: &[&str] = match self {
            Reduced::M => &["b1", "b2"],
            _ => &["omega", "b1", "b2"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    fn kind(&self, index: usize) -> CoordKind {
        if self.dim() == 3 && index == 0 {
            CoordKind::Azimuth
        } else {
            CoordKind::Polar
        }
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(match self {
            Reduced::L1 => l1_generic(x[0], x[1], x[2]),
            Reduced::M => m_func(x[0], x[1]),
            Reduced::MFull => m_full(x[0], x[1], x[2]),
        })
    }

    fn derivatives(&self, x: &[f64]) -> Result<Derivatives> {
        self.check_point(x)?;
        Ok(match self {
            Reduced::L1 => {
                // the closed forms hold on the closed box; bypass the open-interval check
                let p = ReducedPoint { omega: x[0], beta1: x[1], beta2: x[2] };
                let g = l1_grad(&p);
                let h = l1_hessian(&p);
                Derivatives {
                    value: l1(&p),
                    grad: DVector::from_column_slice(g.as_slice()),
                    hessian: DMatrix::from_fn(3, 3, |i, k| h[(i, k)]),
                }
            }
            Reduced::M => jet_derivatives(x, |v| m_func_generic(v[0], v[1])),
            Reduced::MFull => jet_derivatives(x, |v| m_full_generic(v[0], v[1], v[2])),
        })
    }

    fn describe(&self) -> String {
        match self {
            Reduced::L1 => "l1".into(),
            Reduced::M => "m".into(),
            Reduced::MFull => "mfull".into(),
        }
    }
}

/// Default step for finite-difference gradients.
pub const FD_GRAD_STEP: f64 = 1e-5;
/// Default step for finite-difference Hessians.
pub const FD_HESSIAN_STEP: f64 = 1e-4;

/// Central-difference gradient of an unbounded function.
pub fn numeric_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DVector<f64> {
    numeric_grad_in(f, x, h, &[])
}

/// Central-difference Hessian of an unbounded function.
pub fn numeric_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    numeric_hessian_in(f, x, h, &[])
}

/// Finite-difference gradient on a box. Coordinates within `2h` of a bound
/// use a second-order one-sided stencil pointing into the box. An empty
/// `bounds` means unbounded.
pub fn numeric_grad_in(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64, bounds: &[(f64, f64)]) -> DVector<f64> {
    let n = x.len();
    let mut y = x.to_vec();
    let mut at = |i: usize, d: f64| {
        y[i] = x[i] + d;
        let v = f(&y);
        y[i] = x[i];
        v
    };
    DVector::from_fn(n, |i, _| {
        let (lo, hi) = bounds.get(i).copied().unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
        if x[i] - 2.0 * h < lo {
            (-3.0 * at(i, 0.0) + 4.0 * at(i, h) - at(i, 2.0 * h)) / (2.0 * h)
        } else if x[i] + 2.0 * h > hi {
            (3.0 * at(i, 0.0) - 4.0 * at(i, -h) + at(i, -2.0 * h)) / (2.0 * h)
        } else {
            (at(i, h) - at(i, -h)) / (2.0 * h)
        }
    })
}

/// Finite-difference Hessian on a box. Near a bound the central stencil is
/// evaluated at a point shifted inward by at most `2h`, so the error there is
/// first order in `h`.
pub fn numeric_hessian_in(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64, bounds: &[(f64, f64)]) -> DMatrix<f64> {
    let n = x.len();
    let c: Vec<f64> = (0..n)
        .map(|i| {
            let (lo, hi) = bounds.get(i).copied().unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
            x[i].max(lo + 2.0 * h).min(hi - 2.0 * h)
        })
        .collect();
    let eval = |di: usize, si: f64, dk: usize, sk: f64| {
        let mut y = c.clone();
        y[di] += si;
        y[dk] += sk;
        f(&y)
    };
    let f0 = f(&c);
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let fp = eval(i, h, i, 0.0);
        let fm = eval(i, -h, i, 0.0);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for k in (i + 1)..n {
            let v = (eval(i, h, k, h) - eval(i, h, k, -h) - eval(i, -h, k, h) + eval(i, -h, k, -h))
                / (4.0 * h * h);
            hess[(i, k)] = v;
            hess[(k, i)] = v;
        }
    }
    hess
}

/// Bounds of every coordinate of a landscape, for the `_in` difference rules.
pub fn landscape_bounds(l: &dyn Landscape) -> Vec<(f64, f64)> {
    (0..l.dim()).map(|i| l.kind(i).bounds()).collect()
}

/// One axis of a lattice: `steps` equally spaced values from `min` to `max`
/// inclusive; a single step samples `min` alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidArgument("grid axis needs finite bounds and at least one step".into()));
        }
        if steps == 1 && min != max {
            return Err(Error::InvalidArgument("a single-step axis needs min == max".into()));
        }
        if steps >= 2 && min >= max {
            return Err(Error::InvalidArgument(format!("grid axis min {min} must be below max {max}")));
        }
        Ok(Self { min, max, steps })
    }

    pub fn at(&self, i: usize) -> f64 {
        if self.steps == 1 {
            self.min
        } else if i + 1 == self.steps {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }
}

/// Evaluates `l` on the lattice spanned by `axes`, in row-major order (the
/// last axis varies fastest). Each cell is computed independently.
pub fn evaluate_grid(l: &dyn Landscape, axes: &[GridAxis]) -> Result<Vec<(Vec<f64>, f64)>> {
    if axes.len() != l.dim() {
        return Err(Error::InvalidArgument(format!("expected {} grid axes, got {}", l.dim(), axes.len())));
    }
    let names = l.names();
    for (i, a) in axes.iter().enumerate() {
        for v in [a.min, a.max] {
            if !l.kind(i).contains(v) {
                return Err(Error::OutOfRange { name: names[i].clone(), value: v });
            }
        }
    }
    let total: usize = axes.iter().map(|a| a.steps).product();
    (0..total)
        .into_par_iter()
        .map(|mut flat| {
            let mut x = vec![0.0; axes.len()];
            for (d, a) in axes.iter().enumerate().rev() {
                x[d] = a.at(flat % a.steps);
                flat /= a.steps;
            }
            let v = l.value(&x)?;
            Ok((x, v))
        })
        .collect()
}
