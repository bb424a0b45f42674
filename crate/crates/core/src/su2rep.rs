//! Spin-1 representation of SU(2): generators, closed-form exponentials,
//! Euler-angle rotation matrices and decomposition back into Euler angles.
//!
//! Basis ordering is `|1> = |1,-1>`, `|2> = |1,0>`, `|3> = |1,1>`, so
//! `J_z = diag(1, 0, -1)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::ops::Mul;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::{Cx, Scalar};

/// Frobenius tolerance for matrices produced by closed forms.
pub const UNITARY_TOL: f64 = 1e-12;
/// Frobenius tolerance accepted on decomposition inputs.
pub const DECOMPOSE_INPUT_TOL: f64 = 1e-10;
/// Reconstruction tolerance for membership in the rotation set.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// A 3x3 complex matrix with finite entries.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix3C(Matrix3<Complex64>);

impl Matrix3C {
    pub fn new(m: Matrix3<Complex64>) -> Result<Self> {
        if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(Self(m))
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn from_rows(rows: [[Complex64; 3]; 3]) -> Result<Self> {
        Self::new(Matrix3::from_fn(|i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(Matrix3::from_fn(|i, j| Complex64::new(rows[i][j], 0.0)))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn zeros() -> Self {
        Self(Matrix3::zeros())
    }

    pub fn diag(d: [Complex64; 3]) -> Self {
        let mut m = Matrix3::zeros();
        for (i, z) in d.into_iter().enumerate() {
            m[(i, i)] = z;
        }
        Self(m)
    }

    /// Zero-based entry access.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn as_matrix(&self) -> &Matrix3<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix3<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self(self.0 * z)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn frobenius_distance(&self, other: &Matrix3C) -> f64 {
        (self.0 - other.0).norm()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// `||U^dagger U - I||_F`
    pub fn unitarity_defect(&self) -> f64 {
        (self.0.adjoint() * self.0 - Matrix3::identity()).norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.0 - self.0.adjoint()).norm()
    }

    /// Checks the construction-time unitarity invariant.
    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let defect = self.unitarity_defect();
        if defect <= tol {
            Ok(())
        } else {
            Err(Error::NotUnitary { defect, tol })
        }
    }
}

impl Mul for Matrix3C {
    type Output = Matrix3C;
    fn mul(self, rhs: Matrix3C) -> Matrix3C {
        Matrix3C(self.0 * rhs.0)
    }
}

impl Mul for &Matrix3C {
    type Output = Matrix3C;
    fn mul(self, rhs: &Matrix3C) -> Matrix3C {
        Matrix3C(self.0 * rhs.0)
    }
}

impl fmt::Debug for Matrix3C {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix3C[")?;
        for i in 0..3 {
            write!(f, "  ")?;
            for j in 0..3 {
                let z = self.0[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Spin-1 generator `J_x`, `J_y` or `J_z`.
pub fn generator(axis: Axis) -> Matrix3C {
    let s = FRAC_1_SQRT_2;
    let m = match axis {
        Axis::X => Matrix3::new(C0, s.into(), C0, s.into(), C0, s.into(), C0, s.into(), C0),
        Axis::Y => {
            let p = Complex64::new(0.0, s);
            Matrix3::new(C0, -p, C0, p, C0, -p, C0, p, C0)
        }
        Axis::Z => Matrix3::new(C1, C0, C0, C0, C0, C0, C0, C0, -C1),
    };
    Matrix3C(m)
}

/// `e^{-i phi J_y}` in closed form.
pub fn exp_jy(phi: f64) -> Matrix3C {
    to_matrix(&exp_jy_entries(phi))
}

/// `e^{-i phi J_z} = diag(e^{-i phi}, 1, e^{i phi})`.
pub fn exp_jz(phi: f64) -> Matrix3C {
    to_matrix(&exp_jz_entries(phi))
}

/// `e^{-i theta n.J}` for a unit vector `n`.
///
/// Uses `(n.J)^3 = n.J`, valid for spin 1.
pub fn exp_spin1(n: [f64; 3], theta: f64) -> Matrix3C {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let nj = generator(Axis::X).0 * Complex64::from(n[0] / norm)
        + generator(Axis::Y).0 * Complex64::from(n[1] / norm)
        + generator(Axis::Z).0 * Complex64::from(n[2] / norm);
    let (s, c) = theta.sin_cos();
    Matrix3C(Matrix3::identity() - nj * Complex64::new(0.0, s) + nj * nj * Complex64::from(c - 1.0))
}

/// `e^{-i t H}` for Hermitian `H`, via eigendecomposition.
pub fn expm_hermitian(h: &Matrix3C, t: f64) -> Matrix3C {
    // symmetrize so that rounding in the input cannot leak into the eigen-solver
    let herm = (h.0 + h.0.adjoint()) * Complex64::from(0.5);
    let eig = herm.symmetric_eigen();
    let v = eig.eigenvectors;
    let mut d = Matrix3::zeros();
    for k in 0..3 {
        d[(k, k)] = Complex64::from_polar(1.0, -t * eig.eigenvalues[k]);
    }
    Matrix3C(v * d * v.adjoint())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Convention {
    /// `e^{-i a J_z} e^{-i b J_y} e^{-i g J_z}`
    Zyz,
    /// `e^{-i a J_y} e^{-i b J_z} e^{-i g J_y}`
    Yzy,
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Convention::Zyz => "zyz",
            Convention::Yzy => "yzy",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Euler angles with a convention tag, normalized to
/// `(-pi, pi] x [0, pi] x (-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerAngles {
    alpha: f64,
    beta: f64,
    gamma: f64,
    convention: Convention,
}

impl EulerAngles {
    /// Normalizes arbitrary reals. A negative middle angle is folded with
    /// `D(a, -b, g) = D(a + pi, b, g - pi)`.
    pub fn new(alpha: f64, beta: f64, gamma: f64, convention: Convention) -> Self {
        let (mut a, mut b, mut g) = (wrap_angle(alpha), wrap_angle(beta), wrap_angle(gamma));
        if b < 0.0 {
            b = -b;
            a = wrap_angle(a + PI);
            g = wrap_angle(g - PI);
        }
        Self { alpha: a, beta: b, gamma: g, convention }
    }

    pub fn zyz(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self::new(alpha, beta, gamma, Convention::Zyz)
    }

    pub fn yzy(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self::new(alpha, beta, gamma, Convention::Yzy)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn convention(&self) -> Convention {
        self.convention
    }
    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }
}

/// Rotation matrix for the given Euler angles.
pub fn d_matrix(angles: &EulerAngles) -> Matrix3C {
    to_matrix(&d_entries(angles.convention, angles.alpha, angles.beta, angles.gamma))
}

pub(crate) type CMat<T> = [[Cx<T>; 3]; 3];

pub(crate) fn exp_jy_entries<T: Scalar>(phi: T) -> CMat<T> {
    let c = phi.cos();
    let s = phi.sin().scale(FRAC_1_SQRT_2);
    let one = T::constant(1.0);
    let half = |x: T| Cx::real(x.scale(0.5));
    [
        [half(one + c), Cx::real(-s), half(one - c)],
        [Cx::real(s), Cx::real(c), Cx::real(-s)],
        [half(one - c), Cx::real(s), half(one + c)],
    ]
}

pub(crate) fn exp_jz_entries<T: Scalar>(phi: T) -> CMat<T> {
    let z = Cx::zero();
    [
        [Cx::cis(-phi), z, z],
        [z, Cx::real(T::constant(1.0)), z],
        [z, z, Cx::cis(phi)],
    ]
}

pub(crate) fn cmat_mul<T: Scalar>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    let mut out = [[Cx::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = a[i][0] * b[0][j];
            acc = acc + a[i][1] * b[1][j];
            acc = acc + a[i][2] * b[2][j];
            out[i][j] = acc;
        }
    }
    out
}

/// Rotation matrix entries, generic over the scalar type.
pub(crate) fn d_entries<T: Scalar>(conv: Convention, a: T, b: T, g: T) -> CMat<T> {
    match conv {
        Convention::Zyz => {
            let one = T::constant(1.0);
            let cb = b.cos();
            let c2 = (one + cb).scale(0.5);
            let s2 = (one - cb).scale(0.5);
            let sb = b.sin().scale(FRAC_1_SQRT_2);
            [
                [Cx::cis(-(a + g)).mul_real(c2), Cx::cis(-a).mul_real(-sb), Cx::cis(g - a).mul_real(s2)],
                [Cx::cis(-g).mul_real(sb), Cx::real(cb), Cx::cis(g).mul_real(-sb)],
                [Cx::cis(a - g).mul_real(s2), Cx::cis(a).mul_real(sb), Cx::cis(a + g).mul_real(c2)],
            ]
        }
        Convention::Yzy => {
            let left = cmat_mul(&exp_jy_entries(a), &exp_jz_entries(b));
            cmat_mul(&left, &exp_jy_entries(g))
        }
    }
}

pub(crate) fn to_matrix(m: &CMat<f64>) -> Matrix3C {
    Matrix3C(Matrix3::from_fn(|i, j| Complex64::new(m[i][j].re, m[i][j].im)))
}

pub(crate) fn from_matrix(m: &Matrix3C) -> CMat<f64> {
    let mut out = [[Cx::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, z) in row.iter_mut().enumerate() {
            let w = m.get(i, j);
            *z = Cx::new(w.re, w.im);
        }
    }
    out
}

/// Result of testing a unitary for membership in the rotation set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RMembership {
    pub in_r: bool,
    pub in_b: bool,
    /// `phi` in `U = e^{i phi} D(angles)`.
    pub global_phase: f64,
    pub angles: Option<EulerAngles>,
    /// Frobenius reconstruction error of the best decomposition.
    pub residual: f64,
}

/// Decomposes `U = e^{i phi} D(angles)`.
pub fn euler_from_unitary(u: &Matrix3C, convention: Convention) -> Result<RMembership> {
    u.ensure_unitary(DECOMPOSE_INPUT_TOL)?;
    let (angles, phase) = match convention {
        Convention::Zyz => decompose_zyz(u),
        Convention::Yzy => {
            // M J_y M^dagger = J_z and M J_z M^dagger = -J_y for M = e^{-i pi/2 J_x},
            // so M YZY(a, b, g) M^dagger = ZYZ(a + pi, b, g - pi).
            let m = exp_spin1([1.0, 0.0, 0.0], PI / 2.0);
            let v = (&m * u) * m.adjoint();
            let (z, phase) = decompose_zyz(&v);
            (EulerAngles::yzy(z.alpha - PI, z.beta, z.gamma + PI), phase)
        }
    };
    let residual = reconstruction_residual(u, &angles, phase);
    if residual > MEMBERSHIP_TOL {
        return Err(Error::NotInR { residual });
    }
    let w = u.scale(Complex64::from_polar(1.0, -phase));
    let off_diag = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| w.get(i, j).norm())
        .fold(0.0, f64::max);
    Ok(RMembership {
        in_r: true,
        in_b: off_diag <= MEMBERSHIP_TOL,
        global_phase: phase,
        angles: Some(angles),
        residual,
    })
}

/// Like [`euler_from_unitary`] but reports non-membership as data.
pub fn membership(u: &Matrix3C, convention: Convention) -> Result<RMembership> {
    match euler_from_unitary(u, convention) {
        Err(Error::NotInR { residual }) => Ok(RMembership {
            in_r: false,
            in_b: false,
            global_phase: 0.0,
            angles: None,
            residual,
        }),
        other => other,
    }
}

fn reconstruction_residual(u: &Matrix3C, angles: &EulerAngles, phase: f64) -> f64 {
    u.frobenius_distance(&d_matrix(angles).scale(Complex64::from_polar(1.0, phase)))
}

fn decompose_zyz(u: &Matrix3C) -> (EulerAngles, f64) {
    let det_arg = u.as_matrix().determinant().arg();
    let mut best: Option<(f64, EulerAngles, f64)> = None;
    for k in 0..3 {
        let phase = wrap_angle(det_arg / 3.0 + TAU * k as f64 / 3.0);
        let w = u.scale(Complex64::from_polar(1.0, -phase));
        let beta = w.get(1, 1).re.clamp(-1.0, 1.0).acos();
        let candidates = [
            // generic: U_32 = e^{ia} sin(b)/sqrt2, U_21 = e^{-ig} sin(b)/sqrt2
            EulerAngles::zyz(w.get(2, 1).arg(), beta, -w.get(1, 0).arg()),
            // b ~ 0: only a + g is determined, U_11 = e^{-i(a+g)}
            EulerAngles::zyz(-w.get(0, 0).arg(), 0.0, 0.0),
            // b ~ pi: only a - g is determined, U_13 = e^{-i(a-g)}
            EulerAngles::zyz(-w.get(0, 2).arg(), PI, 0.0),
        ];
        for angles in candidates {
            let r = reconstruction_residual(u, &angles, phase);
            let better = match &best {
                None => true,
                Some((br, _, _)) => r < *br - 1e-15,
            };
            if better {
                best = Some((r, angles, phase));
            }
        }
    }
    let (_, angles, phase) = best.expect("three phase candidates are always tried");
    (angles, phase)
}
