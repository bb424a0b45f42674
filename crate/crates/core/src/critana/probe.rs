use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::landscape::Landscape;
use crate::su2rep::wrap_angle;

/// Largest tolerated log-log fit residual (in decades).
const MAX_FIT_RESIDUAL: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    /// Decreasing step lengths.
    pub eps_ladder: Vec<f64>,
    /// Random unit combinations of the null directions probed in addition to
    /// the directions themselves.
    pub random_combinations: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { eps_ladder: vec![1e-1, 1e-2, 1e-3], random_combinations: 8, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    /// Directions probed, counting both signs.
    pub directions: usize,
    /// Smallest fitted order of `|f(x + eps v) - f(x)|` over all varying directions.
    pub min_order: Option<f64>,
    /// Smallest fitted order over directions along which `f` increases.
    pub increase_order: Option<f64>,
    pub max_increase: f64,
    /// Whether some increase does not fall off faster than `eps^2`.
    pub quadratic_increase: bool,
    pub max_residual: f64,
}

impl ProbeReport {
    pub fn growth_order(&self) -> Option<u32> {
        self.min_order.map(|p| p.round().max(1.0) as u32)
    }

    pub fn inconclusive(&self) -> bool {
        self.max_residual > MAX_FIT_RESIDUAL
    }

    /// No increase at second order along any probed direction.
    pub fn confirms_trap(&self) -> bool {
        if self.quadratic_increase {
            return false;
        }
        self.inconclusive() || self.increase_order.is_none_or(|p| p >= 2.5)
    }
}

/// Fits `log10 |d| = a + p log10 eps` and returns `(p, max residual)`.
fn fit_order(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let resid = points
        .iter()
        .map(|p| (p.1 - (my + slope * (p.0 - mx))).abs())
        .fold(0.0, f64::max);
    (slope, resid)
}

pub(crate) fn probe_details(
    l: &dyn Landscape,
    x: &[f64],
    null_dirs: &[DVector<f64>],
    cfg: &ProbeConfig,
) -> Result<ProbeReport> {
    let f0 = l.value(x)?;
    let noise = 10.0 * f64::EPSILON * f0.abs().max(f64::MIN_POSITIVE);
    let n = x.len();

    let mut dirs: Vec<DVector<f64>> = null_dirs.iter().filter(|v| v.norm() > 0.0).map(|v| v.normalize()).collect();
    if !null_dirs.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.random_combinations {
            let mut v = DVector::zeros(n);
            for d in null_dirs {
                v += d * rng.gen_range(-1.0..1.0);
            }
            if v.norm() > 1e-8 {
                dirs.push(v.normalize());
            }
        }
    }

    let mut report = ProbeReport {
        directions: 0,
        min_order: None,
        increase_order: None,
        max_increase: 0.0,
        quadratic_increase: false,
        max_residual: 0.0,
    };
    let min_opt = |a: Option<f64>, b: f64| Some(a.map_or(b, |a: f64| a.min(b)));

    for v in &dirs {
        for sign in [1.0, -1.0] {
            let mut devs = Vec::with_capacity(cfg.eps_ladder.len());
            for &eps in &cfg.eps_ladder {
                let y: Option<Vec<f64>> = (0..n)
                    .map(|i| {
                        let yi = x[i] + sign * eps * v[i];
                        let kind = l.kind(i);
                        if kind.is_periodic() {
                            Some(wrap_angle(yi))
                        } else if kind.contains(yi) {
                            Some(yi)
                        } else {
                            None
                        }
                    })
                    .collect();
                if let Some(y) = y {
                    devs.push((eps, l.value(&y)? - f0));
                }
            }
            if devs.is_empty() {
                continue;
            }
            report.directions += 1;
            let increasing = devs.iter().any(|&(_, d)| d > noise);
            for &(_, d) in &devs {
                report.max_increase = report.max_increase.max(d);
            }
            let varying: Vec<(f64, f64)> = devs
                .iter()
                .filter(|(_, d)| d.abs() > noise)
                .map(|&(e, d)| (e.log10(), d.abs().log10()))
                .collect();
            if increasing && devs.len() >= 2 {
                let (e1, d1) = devs[devs.len() - 2];
                let (e2, d2) = devs[devs.len() - 1];
                if d2 > noise && d2 / (e2 * e2) >= 0.5 * d1 / (e1 * e1) {
                    report.quadratic_increase = true;
                }
            }
            if varying.len() >= 2 {
                let (p, resid) = fit_order(&varying);
                report.max_residual = report.max_residual.max(resid);
                report.min_order = min_opt(report.min_order, p);
                if increasing {
                    report.increase_order = min_opt(report.increase_order, p);
                }
            }
        }
    }
    Ok(report)
}

/// Leading order of the change of `l` along the null directions of its
/// Hessian at `x`, from a log-log fit over `cfg.eps_ladder`.
pub fn null_direction_probe(
    l: &dyn Landscape,
    x: &[f64],
    null_dirs: &[DVector<f64>],
    cfg: &ProbeConfig,
) -> Result<ProbeReport> {
    let report = probe_details(l, x, null_dirs, cfg)?;
    if report.inconclusive() {
        return Err(Error::InconclusiveProbe { residual: report.max_residual });
    }
    Ok(report)
}
