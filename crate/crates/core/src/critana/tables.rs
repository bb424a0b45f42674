//! Reference tables of critical points of the `1 -> 2` probability after
//! measuring level 1, and their verification.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{analyze_point, global_max_level1, Classification, ExtremeValues, ProbeConfig};
use crate::error::{Error, Result};
use crate::landscape::{Chart, Landscape, Reduced};
use crate::quantum::Level;
use crate::su2rep::{wrap_angle, Convention};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TableId {
    /// Reduced landscape in `(omega, b1, b2)`.
    T1,
    /// First factor on the `y`-axis stratum.
    T2,
    /// Both factors on the `y`-axis stratum.
    T4,
    /// Identity first factor, generic second factor.
    T5,
    /// Identity first factor, second factor on the `y`-axis stratum.
    T6,
    /// Classification over all strata.
    Theorem,
}

impl TableId {
    pub const ALL: [TableId; 6] = [TableId::T1, TableId::T2, TableId::T4, TableId::T5, TableId::T6, TableId::Theorem];

    pub fn name(self) -> &'static str {
        match self {
            TableId::T1 => "T1",
            TableId::T2 => "T2",
            TableId::T4 => "T4",
            TableId::T5 => "T5",
            TableId::T6 => "T6",
            TableId::Theorem => "TT",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        TableId::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown table {s:?}; expected one of T1 T2 T4 T5 T6 TT")))
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A whole table, or one 1-based row of it (`T1`, `T1.7`, `TT.3`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowSelector {
    pub table: TableId,
    pub row: Option<usize>,
}

impl RowSelector {
    pub fn parse(s: &str) -> Result<Self> {
        let (t, row) = match s.split_once('.') {
            Some((t, r)) => {
                let row: usize = r
                    .parse()
                    .ok()
                    .filter(|&r| r >= 1)
                    .ok_or_else(|| Error::InvalidArgument(format!("bad row number in {s:?}")))?;
                (t, Some(row))
            }
            None => (s, None),
        };
        Ok(Self { table: TableId::parse(t)?, row })
    }

    fn matches(&self, table: TableId, row: usize) -> bool {
        self.table == table && self.row.is_none_or(|r| r == row)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub grad_tol: f64,
    pub value_tol: f64,
    /// Entrywise tolerance against printed Hessian matrices.
    pub hessian_tol: f64,
    /// Tolerance against printed Hessian spectra.
    pub spectrum_tol: f64,
    pub zero_eig_tol: f64,
    /// Samples per free (starred) coordinate family.
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            value_tol: 1e-10,
            hessian_tol: 1e-12,
            spectrum_tol: 1e-10,
            zero_eig_tol: 1e-8,
            samples: 10,
            seed: 2024,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowReport {
    pub table: TableId,
    /// 1-based.
    pub row: usize,
    pub label: String,
    pub chart: String,
    pub expected_value: f64,
    pub expected_class: Classification,
    pub samples: usize,
    pub max_value_error: f64,
    pub max_grad_norm: f64,
    pub max_hessian_error: Option<f64>,
    pub max_spectrum_error: Option<f64>,
    /// Distinct classifications seen across samples, in first-seen order.
    pub classes: Vec<Classification>,
    pub passed: bool,
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<RowReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RowReport> {
        self.rows.iter().filter(|r| !r.passed)
    }
}

struct Sample {
    x: Vec<f64>,
    hessian: Option<DMatrix<f64>>,
    spectrum: Option<Vec<f64>>,
}

impl Sample {
    fn at(x: Vec<f64>) -> Self {
        Self { x, hessian: None, spectrum: None }
    }
}

struct Row {
    table: TableId,
    label: String,
    landscape: Box<dyn Landscape + Send>,
    value: f64,
    class: Classification,
    samples: Vec<Sample>,
}

/// Special angles of the reduced landscape.
struct Angles {
    b1_i: f64,
    b2_i: f64,
    b1_ii: f64,
    b2_ii: f64,
    b1_iii: f64,
    /// Polar angle of the second factor at the quarter-valued points with
    /// zero relative phase; the relative phase `pi` uses its supplement.
    b2_iii: f64,
}

impl Angles {
    fn new() -> Self {
        let s6 = 6f64.sqrt();
        let s5 = 5f64.sqrt();
        Self {
            b1_i: ((1.0 + s6) / 5.0).acos(),
            b2_i: 0.5 * (1.0 / (1.0 - s6)).acos(),
            b1_ii: ((1.0 - s6) / 5.0).acos(),
            b2_ii: 0.5 * (1.0 / (1.0 + s6)).acos(),
            b1_iii: ((s5 - 1.0) / 2.0).acos(),
            b2_iii: 0.5 * (2.0 * (2.0 + s5).sqrt()).atan(),
        }
    }
}

fn mat3(rows: [[f64; 3]; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |r, c| rows[r][c])
}

/// Printed block form `[[d, 0, 0], [0, p, q], [0, q, r]]`.
fn block(d: f64, p: f64, q: f64, r: f64) -> DMatrix<f64> {
    mat3([[d, 0.0, 0.0], [0.0, p, q], [0.0, q, r]])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn chart(c1: Convention, c2: Convention) -> Chart {
    Chart::new(c1, c2, Level::One, Level::Two).expect("valid chart")
}

fn identity_first(c2: Convention) -> Chart {
    chart(Convention::Zyz, c2).identity_factor(0).expect("valid factor")
}

fn identity_second(c1: Convention) -> Chart {
    chart(c1, Convention::Zyz).identity_factor(1).expect("valid factor")
}

/// Deterministic sample values for starred coordinates.
struct Sampler {
    rng: ChaCha8Rng,
    n: usize,
}

impl Sampler {
    fn new(seed: u64, stream: u64, n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, n }
    }

    /// Evenly spaced azimuths avoiding the branch point.
    fn grid_azimuths(&self) -> Vec<f64> {
        (0..self.n).map(|k| -PI + (k as f64 + 0.5) * 2.0 * PI / self.n as f64).collect()
    }

    fn azimuth(&mut self) -> f64 {
        self.rng.gen_range(-PI..PI)
    }

    fn polar(&mut self) -> f64 {
        self.rng.gen_range(0.1..PI - 0.1)
    }
}

/// Label, point, value, type and printed Hessian of a reduced-landscape row.
type ReducedRow = (&'static str, [f64; 3], f64, Classification, DMatrix<f64>);

/// Label, both polar angles, relative phases `a1 + g2`, value and type of a
/// row whose second azimuth is tied to the first.
type PhaseTiedRow = (&'static str, f64, f64, Vec<f64>, f64, Classification);

fn table1(a: &Angles) -> Vec<Row> {
    let s5 = 5f64.sqrt();
    let s6 = 6f64.sqrt();
    let max = global_max_level1();
    let low = 0.06 * (9.0 - s6);
    let h_i = |q: f64| block((13.0 * s6 - 42.0) / 250.0, (23.0 * s6 - 32.0) / 100.0, q, (s6 - 4.0) / 5.0);
    let h_ii = |q: f64| block((-42.0 - 13.0 * s6) / 250.0, (-32.0 - 23.0 * s6) / 100.0, q, (-4.0 - s6) / 5.0);
    let h_iii = |q: f64| block((7.0 - 3.0 * s5) / 4.0, (s5 - 3.0) / 2.0, q, (s5 - 1.0) / 4.0);
    let rows: Vec<ReducedRow> = vec![
        (
            "(-pi/2, pi/2, pi/2)",
            [-FRAC_PI_2, FRAC_PI_2, FRAC_PI_2],
            0.25,
            Classification::Saddle,
            mat3([[0.0, 0.0, 0.5], [0.0, 0.5, 0.0], [0.5, 0.0, 0.5]]),
        ),
        (
            "(pi/2, pi/2, pi/2)",
            [FRAC_PI_2, FRAC_PI_2, FRAC_PI_2],
            0.25,
            Classification::Saddle,
            mat3([[0.0, 0.0, -0.5], [0.0, 0.5, 0.0], [-0.5, 0.0, 0.5]]),
        ),
        ("(pi, b1_III, pi - b2_III)", [PI, a.b1_iii, PI - a.b2_iii], 0.25, Classification::Saddle, h_iii((1.0 + s5) / 4.0)),
        ("(0, b1_III, b2_III)", [0.0, a.b1_iii, a.b2_iii], 0.25, Classification::Saddle, h_iii((-1.0 - s5) / 4.0)),
        ("(pi, b1_I, b2_I)", [PI, a.b1_i, a.b2_i], low, Classification::Saddle, h_i((-8.0 - 13.0 * s6) / 50.0)),
        ("(0, b1_I, pi - b2_I)", [0.0, a.b1_i, PI - a.b2_i], low, Classification::Saddle, h_i((8.0 + 13.0 * s6) / 50.0)),
        ("(pi, b1_II, b2_II)", [PI, a.b1_ii, a.b2_ii], max, Classification::GlobalMax, h_ii((13.0 * s6 - 8.0) / 50.0)),
        ("(0, b1_II, pi - b2_II)", [0.0, a.b1_ii, PI - a.b2_ii], max, Classification::GlobalMax, h_ii((8.0 - 13.0 * s6) / 50.0)),
    ];
    rows.into_iter()
        .map(|(label, x, value, class, h)| Row {
            table: TableId::T1,
            label: label.to_string(),
            landscape: Box::new(Reduced::L1),
            value,
            class,
            samples: vec![Sample { x: x.to_vec(), hessian: Some(h), spectrum: None }],
        })
        .collect()
}

fn table2(cfg: &VerifyConfig) -> Vec<Row> {
    let mut s = Sampler::new(cfg.seed, 2, cfg.samples);
    let samples = (0..cfg.samples)
        .map(|_| {
            let (b1, g2) = (s.polar(), s.azimuth());
            let c = b1.cos();
            let mut h = DMatrix::zeros(5, 5);
            h[(0, 0)] = -0.5;
            h[(2, 2)] = -0.5;
            h[(0, 2)] = -0.5 * c;
            h[(2, 0)] = -0.5 * c;
            h[(3, 3)] = -1.0;
            Sample {
                x: vec![0.0, b1, 0.0, FRAC_PI_2, g2],
                hessian: Some(h),
                spectrum: Some(sorted(vec![0.0, 0.0, -1.0, -0.5 * (1.0 + c), -0.5 * (1.0 - c)])),
            }
        })
        .collect();
    let landscape = chart(Convention::Yzy, Convention::Zyz).freeze("a2", 0.0).expect("in range");
    vec![Row {
        table: TableId::T2,
        label: "(0, b1*, 0, pi/2, g2*)".into(),
        landscape: Box::new(landscape),
        value: 0.5,
        class: Classification::SecondOrderTrap,
        samples,
    }]
}

fn table4(cfg: &VerifyConfig) -> Vec<Row> {
    let mut s = Sampler::new(cfg.seed, 4, cfg.samples);
    let samples = (0..cfg.samples)
        .map(|_| {
            let (b1, b2) = (s.polar(), s.polar());
            let (c1, c2) = (b1.cos(), b2.cos());
            let mut h = DMatrix::zeros(6, 6);
            for (i, k, v) in [(0, 0, 1.0), (2, 2, 1.0), (3, 3, 1.0), (5, 5, 1.0), (0, 2, c1), (2, 0, c1), (3, 5, c2), (5, 3, c2)] {
                h[(i, k)] = v;
            }
            Sample {
                x: vec![0.0, b1, 0.0, 0.0, b2, 0.0],
                hessian: Some(h),
                spectrum: Some(sorted(vec![0.0, 0.0, 1.0 + c1, 1.0 - c1, 1.0 + c2, 1.0 - c2])),
            }
        })
        .collect();
    vec![Row {
        table: TableId::T4,
        label: "(0, b1*, 0, 0, b2*, 0)".into(),
        landscape: Box::new(chart(Convention::Yzy, Convention::Yzy)),
        value: 0.0,
        class: Classification::GlobalMin,
        samples,
    }]
}

fn table5() -> Vec<Row> {
    vec![Row {
        table: TableId::T5,
        label: "b = pi/2".into(),
        landscape: Box::new(identity_first(Convention::Zyz)),
        value: 0.5,
        class: Classification::SecondOrderTrap,
        samples: vec![Sample::at(vec![0.0, FRAC_PI_2, 0.0])],
    }]
}

fn table6(cfg: &VerifyConfig) -> Vec<Row> {
    let mut s = Sampler::new(cfg.seed, 6, cfg.samples);
    let samples = (0..cfg.samples)
        .map(|_| {
            let b = s.polar();
            let c = b.cos();
            Sample {
                x: vec![0.0, b, 0.0],
                hessian: Some(mat3([[1.0, 0.0, c], [0.0, 0.0, 0.0], [c, 0.0, 1.0]])),
                spectrum: None,
            }
        })
        .collect();
    vec![Row {
        table: TableId::T6,
        label: "(0, b*, 0)".into(),
        landscape: Box::new(identity_first(Convention::Yzy)),
        value: 0.5,
        class: Classification::SecondOrderTrap,
        samples,
    }]
}

fn theorem_table(a: &Angles, cfg: &VerifyConfig) -> Vec<Row> {
    let max = global_max_level1();
    let low = 0.06 * (9.0 - 6f64.sqrt());
    let zz = || Box::new(chart(Convention::Zyz, Convention::Zyz)) as Box<dyn Landscape + Send>;
    let mut rows = Vec::new();
    let mut stream = 100;
    let mut sampler = |cfg: &VerifyConfig| {
        stream += 1;
        Sampler::new(cfg.seed, stream, cfg.samples)
    };

    let mut s = sampler(cfg);
    rows.push(Row {
        table: TableId::Theorem,
        label: "(YZY, YZY): (0, b1*, 0, 0, b2*, 0)".into(),
        landscape: Box::new(chart(Convention::Yzy, Convention::Yzy)),
        value: 0.0,
        class: Classification::GlobalMin,
        samples: (0..cfg.samples).map(|_| Sample::at(vec![0.0, s.polar(), 0.0, 0.0, s.polar(), 0.0])).collect(),
    });
    rows.push(Row {
        table: TableId::Theorem,
        label: "(I, I): (0, 0, 0, 0, 0, 0)".into(),
        landscape: Box::new(chart(Convention::Yzy, Convention::Yzy)),
        value: 0.0,
        class: Classification::GlobalMin,
        samples: vec![Sample::at(vec![0.0; 6])],
    });

    // (ZYZ, ZYZ) rows: fixed polar angles, the second azimuth tied to the first
    let zyz_rows: Vec<PhaseTiedRow> = vec![
        ("(ZYZ, ZYZ): (a1*, pi/2, g1*, a2*, pi/2, +-pi/2 - a1*)", FRAC_PI_2, FRAC_PI_2, vec![FRAC_PI_2, -FRAC_PI_2], 0.25, Classification::Saddle),
        ("(ZYZ, ZYZ): (a1*, b1_III, g1*, a2*, pi - b2_III, pi - a1*)", a.b1_iii, PI - a.b2_iii, vec![PI], 0.25, Classification::Saddle),
        ("(ZYZ, ZYZ): (a1*, b1_III, g1*, a2*, b2_III, -a1*)", a.b1_iii, a.b2_iii, vec![0.0], 0.25, Classification::Saddle),
        ("(ZYZ, ZYZ): (a1*, b1_I, g1*, a2*, b2_I, pi - a1*)", a.b1_i, a.b2_i, vec![PI], low, Classification::Saddle),
        ("(ZYZ, ZYZ): (a1*, b1_I, g1*, a2*, pi - b2_I, -a1*)", a.b1_i, PI - a.b2_i, vec![0.0], low, Classification::Saddle),
    ];
    let zyz_max_rows: Vec<PhaseTiedRow> = vec![
        ("(ZYZ, ZYZ): (a1*, b1_II, g1*, a2*, b2_II, pi - a1*)", a.b1_ii, a.b2_ii, vec![PI], max, Classification::GlobalMax),
        ("(ZYZ, ZYZ): (a1*, b1_II, g1*, a2*, pi - b2_II, -a1*)", a.b1_ii, PI - a.b2_ii, vec![0.0], max, Classification::GlobalMax),
    ];
    let zyz_row = |spec: PhaseTiedRow, s: &mut Sampler| {
        let (label, b1, b2, omegas, value, class) = spec;
        let mut samples = Vec::new();
        for omega in omegas {
            for a1 in s.grid_azimuths() {
                let (g1, a2) = (s.azimuth(), s.azimuth());
                samples.push(Sample::at(vec![a1, b1, g1, a2, b2, wrap_angle(omega - a1)]));
            }
        }
        Row { table: TableId::Theorem, label: label.into(), landscape: zz(), value, class, samples }
    };
    for spec in zyz_rows {
        let mut s = sampler(cfg);
        rows.push(zyz_row(spec, &mut s));
    }

    let mut s = sampler(cfg);
    rows.push(Row {
        table: TableId::Theorem,
        label: "(YZY, ZYZ): (0, b1*, 0, a2*, pi/2, g2*)".into(),
        landscape: Box::new(chart(Convention::Yzy, Convention::Zyz)),
        value: 0.5,
        class: Classification::SecondOrderTrap,
        samples: (0..cfg.samples)
            .map(|_| Sample::at(vec![0.0, s.polar(), 0.0, s.azimuth(), FRAC_PI_2, s.azimuth()]))
            .collect(),
    });
    rows.push(Row {
        table: TableId::Theorem,
        label: "(I, ZYZ): (0, 0, 0, 0, pi/2, 0)".into(),
        landscape: Box::new(identity_first(Convention::Zyz)),
        value: 0.5,
        class: Classification::SecondOrderTrap,
        samples: vec![Sample::at(vec![0.0, FRAC_PI_2, 0.0])],
    });
    let mut s = sampler(cfg);
    rows.push(Row {
        table: TableId::Theorem,
        label: "(I, YZY): (0, 0, 0, 0, b2*, 0)".into(),
        landscape: Box::new(identity_first(Convention::Yzy)),
        value: 0.5,
        class: Classification::SecondOrderTrap,
        samples: (0..cfg.samples).map(|_| Sample::at(vec![0.0, s.polar(), 0.0])).collect(),
    });
    rows.push(Row {
        table: TableId::Theorem,
        label: "(ZYZ, I): (0, pi/2, 0, 0, 0, 0)".into(),
        landscape: Box::new(identity_second(Convention::Zyz)),
        value: 0.5,
        class: Classification::SecondOrderTrap,
        samples: vec![Sample::at(vec![0.0, FRAC_PI_2, 0.0])],
    });
    let mut s = sampler(cfg);
    rows.push(Row {
        table: TableId::Theorem,
        label: "(YZY, I): (0, b1*, 0, 0, 0, 0)".into(),
        landscape: Box::new(identity_second(Convention::Yzy)),
        value: 0.5,
        class: Classification::SecondOrderTrap,
        samples: (0..cfg.samples).map(|_| Sample::at(vec![0.0, s.polar(), 0.0])).collect(),
    });
    for spec in zyz_max_rows {
        let mut s = sampler(cfg);
        rows.push(zyz_row(spec, &mut s));
    }
    rows
}

fn all_rows(cfg: &VerifyConfig) -> Vec<Row> {
    let a = Angles::new();
    let mut rows = table1(&a);
    rows.extend(table2(cfg));
    rows.extend(table4(cfg));
    rows.extend(table5());
    rows.extend(table6(cfg));
    rows.extend(theorem_table(&a, cfg));
    rows
}

fn check_row(row: &Row, index: usize, cfg: &VerifyConfig) -> Result<RowReport> {
    let context = ExtremeValues { max: global_max_level1(), min: 0.0 };
    let probe = ProbeConfig { seed: cfg.seed, ..ProbeConfig::default() };
    let mut report = RowReport {
        table: row.table,
        row: index,
        label: row.label.clone(),
        chart: row.landscape.describe(),
        expected_value: row.value,
        expected_class: row.class,
        samples: row.samples.len(),
        max_value_error: 0.0,
        max_grad_norm: 0.0,
        max_hessian_error: None,
        max_spectrum_error: None,
        classes: Vec::new(),
        passed: true,
        diagnostics: Vec::new(),
    };
    for (k, sample) in row.samples.iter().enumerate() {
        let rec = analyze_point(row.landscape.as_ref(), &sample.x, cfg.zero_eig_tol, &context, &probe)?;
        let mut fail = |msg: String| {
            report.passed = false;
            if report.diagnostics.len() < 8 {
                report.diagnostics.push(format!("sample {} at {:?}: {msg}", k + 1, sample.x));
            }
        };
        let verr = (rec.value - row.value).abs();
        report.max_value_error = report.max_value_error.max(verr);
        if verr > cfg.value_tol {
            fail(format!("value {:.17e}, expected {:.17e}", rec.value, row.value));
        }
        report.max_grad_norm = report.max_grad_norm.max(rec.grad_norm);
        if rec.grad_norm > cfg.grad_tol {
            fail(format!("gradient norm {:.3e} exceeds {:.1e}", rec.grad_norm, cfg.grad_tol));
        }
        if !report.classes.contains(&rec.classification) {
            report.classes.push(rec.classification);
        }
        if rec.classification != row.class {
            fail(format!("classified {} (eigenvalues {:?}), expected {}", rec.classification, rec.hessian_eigs, row.class));
        }
        if let Some(printed) = &sample.hessian {
            let d = row.landscape.derivatives(&sample.x)?;
            let err = (&d.hessian - printed).amax();
            report.max_hessian_error = Some(report.max_hessian_error.unwrap_or(0.0).max(err));
            if err > cfg.hessian_tol {
                fail(format!("Hessian differs from the printed matrix by {err:.3e}"));
            }
        }
        if let Some(spec) = &sample.spectrum {
            let err = rec.hessian_eigs.iter().zip(spec).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            report.max_spectrum_error = Some(report.max_spectrum_error.unwrap_or(0.0).max(err));
            if err > cfg.spectrum_tol {
                fail(format!("spectrum {:?} differs from printed {:?} by {err:.3e}", rec.hessian_eigs, spec));
            }
        }
    }
    Ok(report)
}

/// Checks every selected row: value, gradient norm, classification, and
/// printed Hessians and spectra where available. An empty selection means
/// every table. Rows run in parallel; the report keeps table order.
pub fn verify_tables(selection: &[RowSelector], cfg: &VerifyConfig) -> Result<VerifyReport> {
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument("at least one sample per row is required".into()));
    }
    let rows = all_rows(cfg);
    let mut numbered = Vec::new();
    let mut counters = std::collections::HashMap::new();
    for row in &rows {
        let n = counters.entry(row.table).or_insert(0usize);
        *n += 1;
        if selection.is_empty() || selection.iter().any(|s| s.matches(row.table, *n)) {
            numbered.push((row, *n));
        }
    }
    for sel in selection {
        if let Some(r) = sel.row {
            let count = counters.get(&sel.table).copied().unwrap_or(0);
            if r > count {
                return Err(Error::InvalidArgument(format!("table {} has {count} rows, asked for row {r}", sel.table)));
            }
        }
    }
    let reports = numbered.par_iter().map(|(row, n)| check_row(row, *n, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport { rows: reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(sel: &str) -> VerifyReport {
        verify_tables(&[RowSelector::parse(sel).unwrap()], &VerifyConfig::default()).unwrap()
    }

    #[test]
    fn selectors_parse() {
        assert_eq!(RowSelector::parse("T1.7").unwrap(), RowSelector { table: TableId::T1, row: Some(7) });
        assert_eq!(RowSelector::parse("tt").unwrap(), RowSelector { table: TableId::Theorem, row: None });
        assert!(RowSelector::parse("T3").is_err());
        assert!(RowSelector::parse("T1.0").is_err());
        assert!(verify_tables(&[RowSelector::parse("T1.9").unwrap()], &VerifyConfig::default()).is_err());
    }

    #[test]
    fn table_one_passes_with_printed_hessians() {
        let report = run("T1");
        assert_eq!(report.rows.len(), 8);
        for r in &report.rows {
            assert!(r.passed, "{r:#?}");
            assert!(r.max_hessian_error.unwrap() <= 1e-12);
        }
    }

    #[test]
    fn table_two_reproduces_printed_spectrum() {
        let report = run("T2");
        assert!(report.passed(), "{report:#?}");
        assert!(report.rows[0].max_spectrum_error.unwrap() <= 1e-10);
    }

    #[test]
    fn tables_four_and_five_pass() {
        assert!(run("T4").passed());
        assert!(run("T5").passed());
    }

    #[test]
    fn table_six_value_disagrees_with_printed_row() {
        let report = run("T6");
        let row = &report.rows[0];
        assert!(!row.passed);
        assert!(row.max_hessian_error.unwrap() <= 1e-12);
        assert_eq!(row.classes, vec![Classification::GlobalMin]);
    }

    #[test]
    fn theorem_rows_with_identity_y_strata_fail_and_the_rest_pass() {
        let report = run("TT");
        assert_eq!(report.rows.len(), 14);
        let failed: Vec<usize> = report.failures().map(|r| r.row).collect();
        assert_eq!(failed, vec![10, 12], "{report:#?}");
    }

    #[test]
    fn corrupted_gradient_tolerance_fails_with_diagnostics() {
        let cfg = VerifyConfig { grad_tol: 1e-30, ..VerifyConfig::default() };
        let report = verify_tables(&[RowSelector::parse("T1.7").unwrap()], &cfg).unwrap();
        assert!(!report.passed());
        assert!(!report.rows[0].diagnostics.is_empty());
    }
}
