//! Critical points of landscapes: location, classification and
//! verification against known tables.

mod probe;
mod search;
mod tables;

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::landscape::{Landscape, Reduced};
use crate::quantum::Level;

pub use probe::{null_direction_probe, ProbeConfig, ProbeReport};
pub use search::{find_critical_points, find_critical_points_on, maximize, minimize, Family, Optimum, SearchOutcome};
pub use tables::{verify_tables, RowReport, RowSelector, TableId, VerifyConfig, VerifyReport};

/// Tolerance for matching a value against a known global extremum.
pub const EXTREMUM_VALUE_TOL: f64 = 1e-9;

/// Largest value of the `1 -> 2` probability after measuring level 1.
pub fn global_max_level1() -> f64 {
    0.06 * (9.0 + 6f64.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub starts: usize,
    pub seed: u64,
    pub grad_tol: f64,
    pub zero_eig_tol: f64,
    pub dedup_radius: f64,
    pub max_iterations: usize,
    /// Starts are drawn with polar angles in `[margin, pi - margin]`, and
    /// converged points closer than `margin` to a polar bound are dropped.
    pub margin: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            starts: 2000,
            seed: 0,
            grad_tol: 1e-10,
            zero_eig_tol: 1e-8,
            dedup_radius: 1e-4,
            max_iterations: 200,
            margin: 1e-3,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidArgument("starts and max_iterations must be positive".into()));
        }
        for (name, v) in [
            ("grad_tol", self.grad_tol),
            ("zero_eig_tol", self.zero_eig_tol),
            ("dedup_radius", self.dedup_radius),
            ("margin", self.margin),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    GlobalMax,
    GlobalMin,
    LocalMax,
    LocalMin,
    Saddle,
    SecondOrderTrap,
    Degenerate,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::GlobalMax => "GlobalMax",
            Classification::GlobalMin => "GlobalMin",
            Classification::LocalMax => "LocalMax",
            Classification::LocalMin => "LocalMin",
            Classification::Saddle => "Saddle",
            Classification::SecondOrderTrap => "SecondOrderTrap",
            Classification::Degenerate => "Degenerate",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Known extreme values of the full objective a landscape is a slice of.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtremeValues {
    pub max: f64,
    pub min: f64,
}

impl ExtremeValues {
    /// Exact extremes of the transition probability over all rotation
    /// pairs, when known in closed form.
    pub fn known(measured: Level, target: Level) -> Option<Self> {
        match (measured, target) {
            (Level::One, Level::Two) => Some(Self { max: global_max_level1(), min: 0.0 }),
            (Level::Two, Level::Two) => Some(Self { max: 0.5, min: 0.0 }),
            (_, Level::Three) => Some(Self { max: 1.0, min: 0.0 }),
            _ => None,
        }
    }

    pub fn for_reduced(r: Reduced) -> Self {
        match r {
            Reduced::L1 => Self { max: global_max_level1(), min: 0.0 },
            Reduced::M | Reduced::MFull => Self { max: 0.5, min: 0.0 },
        }
    }

    /// Estimates the extremes by bounded multi-start optimization.
    pub fn scan(l: &dyn Landscape, starts: usize, seed: u64) -> Result<Self> {
        Ok(Self { max: maximize(l, starts, seed)?.value, min: minimize(l, starts, seed)?.value })
    }
}

/// Classification from the Hessian spectrum alone.
///
/// With `tau = zero_eig_tol`: strictly negative spectra are maxima, strictly
/// positive spectra minima, spectra with both signs beyond `tau` saddles.
/// Semidefinite spectra with a zero eigenvalue are global extrema when the
/// value matches the known extreme, trap candidates when negative
/// semidefinite and below the maximum, and degenerate otherwise.
pub fn classify(value: f64, eigs: &[f64], zero_eig_tol: f64, context: &ExtremeValues) -> Classification {
    let tau = zero_eig_tol;
    let is_max = (value - context.max).abs() <= EXTREMUM_VALUE_TOL;
    let is_min = (value - context.min).abs() <= EXTREMUM_VALUE_TOL;
    let neg = eigs.iter().filter(|&&e| e < -tau).count();
    let pos = eigs.iter().filter(|&&e| e > tau).count();
    let zero = eigs.len() - neg - pos;
    if neg > 0 && pos > 0 {
        return Classification::Saddle;
    }
    if zero == 0 {
        return match (neg > 0, is_max, is_min) {
            (true, true, _) => Classification::GlobalMax,
            (true, false, _) => Classification::LocalMax,
            (false, _, true) => Classification::GlobalMin,
            (false, _, false) => Classification::LocalMin,
        };
    }
    if pos == 0 && is_max {
        return Classification::GlobalMax;
    }
    if neg == 0 && is_min {
        return Classification::GlobalMin;
    }
    if pos == 0 && neg > 0 && value < context.max {
        return Classification::SecondOrderTrap;
    }
    Classification::Degenerate
}

/// A located and classified critical point.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPointRecord {
    pub chart: String,
    pub names: Vec<String>,
    pub coords: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    /// Ascending.
    pub hessian_eigs: Vec<f64>,
    pub classification: Classification,
    pub probe_growth_order: Option<u32>,
    pub family: Option<Family>,
}

/// Sorted spectrum and matching eigenvectors (as columns).
pub(crate) fn sorted_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Evaluates, classifies and, for trap candidates, probes the point `x`.
pub fn analyze_point(
    l: &dyn Landscape,
    x: &[f64],
    zero_eig_tol: f64,
    context: &ExtremeValues,
    probe: &ProbeConfig,
) -> Result<CriticalPointRecord> {
    let d = l.derivatives(x)?;
    let (eigs, vecs) = sorted_eigen(&d.hessian);
    let mut class = classify(d.value, &eigs, zero_eig_tol, context);
    let mut order = None;
    if class == Classification::SecondOrderTrap {
        let null: Vec<DVector<f64>> = eigs
            .iter()
            .enumerate()
            .filter(|(_, e)| e.abs() <= zero_eig_tol)
            .map(|(i, _)| vecs.column(i).into_owned())
            .collect();
        let report = probe::probe_details(l, x, &null, probe)?;
        order = report.growth_order();
        if !report.confirms_trap() {
            class = Classification::Degenerate;
        }
    }
    Ok(CriticalPointRecord {
        chart: l.describe(),
        names: l.names(),
        coords: x.to_vec(),
        value: d.value,
        grad_norm: d.grad.norm(),
        hessian_eigs: eigs,
        classification: class,
        probe_growth_order: order,
        family: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> ExtremeValues {
        ExtremeValues { max: global_max_level1(), min: 0.0 }
    }

    #[test]
    fn printed_saddle_hessian_spectrum_is_mixed() {
        let h = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5]);
        let (eigs, _) = sorted_eigen(&h);
        let s5 = 5f64.sqrt();
        for (got, want) in eigs.iter().zip([(1.0 - s5) / 4.0, 0.5, (1.0 + s5) / 4.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(classify(0.25, &eigs, 1e-8, &ctx()), Classification::Saddle);
    }

    #[test]
    fn semidefinite_spectrum_below_max_is_a_trap_candidate() {
        let b: f64 = 0.7;
        let eigs = [-1.0, -0.5 * (1.0 + b.cos()), -0.5 * (1.0 - b.cos()), 0.0, 0.0];
        assert_eq!(classify(0.5, &eigs, 1e-8, &ctx()), Classification::SecondOrderTrap);
    }

    #[test]
    fn sign_rules() {
        assert_eq!(classify(0.0, &[1.0, 2.0, 3.0], 1e-8, &ctx()), Classification::GlobalMin);
        assert_eq!(classify(0.1, &[1.0, 2.0, 3.0], 1e-8, &ctx()), Classification::LocalMin);
        assert_eq!(classify(0.3, &[-1.0, -2.0], 1e-8, &ctx()), Classification::LocalMax);
        assert_eq!(classify(global_max_level1(), &[-1.0, -2.0], 1e-8, &ctx()), Classification::GlobalMax);
        assert_eq!(classify(global_max_level1(), &[-1.0, 0.0], 1e-8, &ctx()), Classification::GlobalMax);
        assert_eq!(classify(0.0, &[1.0, 0.0, 0.0], 1e-8, &ctx()), Classification::GlobalMin);
        assert_eq!(classify(0.2, &[1.0, 0.0], 1e-8, &ctx()), Classification::Degenerate);
        assert_eq!(classify(0.2, &[0.0, 0.0], 1e-8, &ctx()), Classification::Degenerate);
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let bad = SearchConfig { grad_tol: 0.0, ..SearchConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SearchConfig { starts: 0, ..SearchConfig::default() };
        assert!(bad.validate().is_err());
    }
}
