//! Algebra of traceless symmetric 3x3 tensors (Q-tensors) and the pointwise
//! contractions used by the stresses and energies.
//!
//! Q-tensors are stored as the 6 entries of the upper triangle; symmetry is
//! structural and tracelessness is re-enforced after constructing operations.
//! A fixed orthonormal basis of the 5-dimensional traceless symmetric space
//! is provided for grid fields and for tangent-space derivatives.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("non-finite entry in input")]
    NonFinite,
    #[error("matrix is not antisymmetric (defect {defect:.3e})")]
    NotAntisymmetric { defect: f64 },
    #[error("director is not a unit vector (|d| = {norm})")]
    NotUnit { norm: f64 },
}

const SQRT2: f64 = std::f64::consts::SQRT_2;
const SQRT6: f64 = 2.449_489_742_783_178;

/// General real 3x3 matrix, row-major. Used for velocity gradients,
/// vorticity and intermediate products.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3(pub [f64; 9]);

impl Mat3 {
    pub fn zero() -> Self {
        Mat3([0.0; 9])
    }

    pub fn identity() -> Self {
        Mat3([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[3 * i + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[3 * i + j] = v;
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[4] + self.0[8]
    }

    pub fn matmul(&self, other: &Mat3) -> Mat3 {
        let mut out = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += self.get(i, k) * other.get(k, j);
                }
                out[3 * i + j] = s;
            }
        }
        Mat3(out)
    }

    /// Frobenius pairing A:B = sum A_ab B_ab.
    pub fn ddot(&self, other: &Mat3) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut out = self.0;
        for v in &mut out {
            *v *= s;
        }
        Mat3(out)
    }

    pub fn add(&self, other: &Mat3) -> Mat3 {
        let mut out = self.0;
        for (v, w) in out.iter_mut().zip(other.0.iter()) {
            *v += w;
        }
        Mat3(out)
    }

    pub fn sub(&self, other: &Mat3) -> Mat3 {
        let mut out = self.0;
        for (v, w) in out.iter_mut().zip(other.0.iter()) {
            *v -= w;
        }
        Mat3(out)
    }

    /// Antisymmetric part (M - M^T)/2.
    pub fn antisym(&self) -> Mat3 {
        self.sub(&self.transpose()).scale(0.5)
    }

    /// Symmetric part (M + M^T)/2.
    pub fn sym(&self) -> Mat3 {
        self.add(&self.transpose()).scale(0.5)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn antisymmetry_defect(&self) -> f64 {
        self.add(&self.transpose()).norm()
    }
}

/// Traceless symmetric 3x3 order tensor. Storage order of the upper
/// triangle: `[xx, xy, xz, yy, yz, zz]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QTensor {
    m: [f64; 6],
}

/// Sorted eigenvalues of a Q-tensor; they sum to zero.
#[derive(Debug, Clone, Copy)]
pub struct EigenTriple {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl EigenTriple {
    pub fn min(&self) -> f64 {
        self.l1
    }

    pub fn max(&self) -> f64 {
        self.l3
    }
}

impl QTensor {
    pub fn zero() -> Self {
        QTensor { m: [0.0; 6] }
    }

    /// Build from upper-triangle entries `[xx, xy, xz, yy, yz, zz]`,
    /// re-projecting the trace away.
    pub fn from_upper(m: [f64; 6]) -> Self {
        QTensor { m }.retraced()
    }

    #[inline]
    pub fn xx(&self) -> f64 {
        self.m[0]
    }
    #[inline]
    pub fn xy(&self) -> f64 {
        self.m[1]
    }
    #[inline]
    pub fn xz(&self) -> f64 {
        self.m[2]
    }
    #[inline]
    pub fn yy(&self) -> f64 {
        self.m[3]
    }
    #[inline]
    pub fn yz(&self) -> f64 {
        self.m[4]
    }
    #[inline]
    pub fn zz(&self) -> f64 {
        self.m[5]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        const IDX: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
        self.m[IDX[i][j]]
    }

    pub fn trace(&self) -> f64 {
        self.m[0] + self.m[3] + self.m[5]
    }

    /// Subtract tr/3 from the diagonal. Called after any chain of more than
    /// a few arithmetic ops so drift cannot accumulate over long runs.
    pub fn retraced(mut self) -> Self {
        let t = self.trace() / 3.0;
        self.m[0] -= t;
        self.m[3] -= t;
        self.m[5] -= t;
        self
    }

    pub fn to_mat3(&self) -> Mat3 {
        Mat3([
            self.m[0], self.m[1], self.m[2], self.m[1], self.m[3], self.m[4], self.m[2], self.m[4],
            self.m[5],
        ])
    }

    /// Frobenius pairing Q:R.
    pub fn ddot(&self, other: &QTensor) -> f64 {
        self.m[0] * other.m[0]
            + self.m[3] * other.m[3]
            + self.m[5] * other.m[5]
            + 2.0 * (self.m[1] * other.m[1] + self.m[2] * other.m[2] + self.m[4] * other.m[4])
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> QTensor {
        let mut m = self.m;
        for v in &mut m {
            *v *= s;
        }
        QTensor { m }
    }

    pub fn add(&self, other: &QTensor) -> QTensor {
        let mut m = self.m;
        for (v, w) in m.iter_mut().zip(other.m.iter()) {
            *v += w;
        }
        QTensor { m }
    }

    pub fn sub(&self, other: &QTensor) -> QTensor {
        let mut m = self.m;
        for (v, w) in m.iter_mut().zip(other.m.iter()) {
            *v -= w;
        }
        QTensor { m }
    }

    /// Matrix square Q*Q (symmetric but not traceless).
    pub fn squared(&self) -> Mat3 {
        let q = self.to_mat3();
        q.matmul(&q)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|v| v.is_finite())
    }

    /// Coordinates in the fixed orthonormal basis of the traceless symmetric
    /// space (see [`BASIS`]).
    pub fn to_coeffs(&self) -> [f64; 5] {
        [
            SQRT2 * self.m[1],
            SQRT2 * self.m[2],
            SQRT2 * self.m[4],
            (self.m[0] - self.m[3]) / SQRT2,
            (self.m[0] + self.m[3] - 2.0 * self.m[5]) / SQRT6,
        ]
    }

    pub fn from_coeffs(c: [f64; 5]) -> QTensor {
        let xy = c[0] / SQRT2;
        let xz = c[1] / SQRT2;
        let yz = c[2] / SQRT2;
        let xx = c[3] / SQRT2 + c[4] / SQRT6;
        let yy = -c[3] / SQRT2 + c[4] / SQRT6;
        let zz = -2.0 * c[4] / SQRT6;
        QTensor {
            m: [xx, xy, xz, yy, yz, zz],
        }
    }
}

/// Orthonormal basis E_0..E_4 of the traceless symmetric space, so that
/// `Q = sum_i c_i E_i` with `c = Q.to_coeffs()` and E_i : E_j = delta_ij.
pub fn basis() -> [QTensor; 5] {
    let mut out = [QTensor::zero(); 5];
    for (i, e) in out.iter_mut().enumerate() {
        let mut c = [0.0; 5];
        c[i] = 1.0;
        *e = QTensor::from_coeffs(c);
    }
    out
}

/// Symmetrize and remove the trace: `<M> = (M + M^T)/2 - tr(M)/3 I`.
/// Idempotent on Q-tensor inputs.
pub fn project_traceless(m: &Mat3) -> Result<QTensor, TensorError> {
    if !m.is_finite() {
        return Err(TensorError::NonFinite);
    }
    let t = m.trace() / 3.0;
    Ok(QTensor {
        m: [
            m.get(0, 0) - t,
            0.5 * (m.get(0, 1) + m.get(1, 0)),
            0.5 * (m.get(0, 2) + m.get(2, 0)),
            m.get(1, 1) - t,
            0.5 * (m.get(1, 2) + m.get(2, 1)),
            m.get(2, 2) - t,
        ],
    })
}

/// Corotation commutator W*Q - Q*W for antisymmetric W. The result is
/// symmetric and traceless by the algebraic identity; it is re-projected
/// anyway to guard against rounding drift.
pub fn commutator_with_antisym(q: &QTensor, w: &Mat3) -> Result<QTensor, TensorError> {
    if !q.is_finite() || !w.is_finite() {
        return Err(TensorError::NonFinite);
    }
    let defect = w.antisymmetry_defect();
    if defect > 1e-13 * w.norm().max(1.0) {
        return Err(TensorError::NotAntisymmetric { defect });
    }
    let qm = q.to_mat3();
    let c = w.matmul(&qm).sub(&qm.matmul(w));
    project_traceless(&c)
}

/// The scalar invariants `(tr Q^2, tr Q^3, |Q|)`.
pub fn invariants(q: &QTensor) -> (f64, f64, f64) {
    let t2 = q.norm_sq();
    let q2 = q.squared();
    // tr(Q^3) = Q^2 : Q since both are symmetric.
    let t3 = q2.ddot(&q.to_mat3());
    (t2, t3, t2.sqrt())
}

/// Sorted eigenvalues of a Q-tensor by the closed-form trigonometric solution
/// of the characteristic cubic, followed by a Newton polish. For a traceless
/// input the cubic is `l^3 + p l + q = 0` with `p = -tr(Q^2)/2`,
/// `q = -det(Q)`.
pub fn eigenvalues(q: &QTensor) -> EigenTriple {
    let t2 = q.norm_sq();
    if t2 == 0.0 {
        return EigenTriple {
            l1: 0.0,
            l2: 0.0,
            l3: 0.0,
        };
    }
    let p = -0.5 * t2;
    let det = {
        let m = q.to_mat3();
        m.get(0, 0) * (m.get(1, 1) * m.get(2, 2) - m.get(1, 2) * m.get(2, 1))
            - m.get(0, 1) * (m.get(1, 0) * m.get(2, 2) - m.get(1, 2) * m.get(2, 0))
            + m.get(0, 2) * (m.get(1, 0) * m.get(2, 1) - m.get(1, 1) * m.get(2, 0))
    };
    let qc = -det;

    // l = 2 sqrt(-p/3) cos(phi/3 - 2 pi k / 3), cos(3 phi') = 3q/(2p) sqrt(-3/p)
    let s = (-p / 3.0).sqrt();
    let mut arg = 1.5 * qc / (p * s);
    arg = arg.clamp(-1.0, 1.0);

    // Near a degenerate discriminant the arccos amplifies rounding in the
    // cubic coefficients beyond the target accuracy; fall back on Jacobi
    // rotations of the matrix itself, where clustered eigenvalues are
    // perfectly conditioned.
    if 1.0 - arg.abs() < 1e-6 {
        return jacobi_eigenvalues(q);
    }

    let phi = arg.acos() / 3.0;
    let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
    let mut ls = [
        2.0 * s * phi.cos(),
        2.0 * s * (phi - two_pi_3).cos(),
        2.0 * s * (phi + two_pi_3).cos(),
    ];

    // Newton polish on the characteristic cubic; kept only when it reduces
    // the residual.
    let cubic = |l: f64| l * l * l + p * l + qc;
    for l in &mut ls {
        for _ in 0..2 {
            let f = cubic(*l);
            let df = 3.0 * *l * *l + p;
            if df.abs() > 1e-30 {
                let trial = *l - f / df;
                if cubic(trial).abs() < f.abs() {
                    *l = trial;
                }
            }
        }
    }

    // Enforce the zero-sum constraint exactly up to rounding.
    let mean = (ls[0] + ls[1] + ls[2]) / 3.0;
    for l in &mut ls {
        *l -= mean;
    }
    ls.sort_by(|a, b| a.partial_cmp(b).unwrap());
    EigenTriple {
        l1: ls[0],
        l2: ls[1],
        l3: ls[2],
    }
}

/// Cyclic Jacobi sweeps on the symmetric 3x3 matrix; quadratically
/// convergent and robust at clustered eigenvalues.
fn jacobi_eigenvalues(q: &QTensor) -> EigenTriple {
    let mut a = q.to_mat3().0;
    let scale = q.norm().max(1e-300);
    for _ in 0..12 {
        let off = (a[1] * a[1] + a[2] * a[2] + a[5] * a[5]).sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for &(p, r) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apr = a[3 * p + r];
            if apr == 0.0 {
                continue;
            }
            let app = a[3 * p + p];
            let arr = a[3 * r + r];
            let tau = (arr - app) / (2.0 * apr);
            let t = if tau >= 0.0 {
                1.0 / (tau + (1.0 + tau * tau).sqrt())
            } else {
                -1.0 / (-tau + (1.0 + tau * tau).sqrt())
            };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            // Apply the rotation on both sides.
            let mut rot = [0.0f64; 9];
            rot[0] = 1.0;
            rot[4] = 1.0;
            rot[8] = 1.0;
            rot[3 * p + p] = c;
            rot[3 * r + r] = c;
            rot[3 * p + r] = s;
            rot[3 * r + p] = -s;
            let rm = Mat3(rot);
            a = rm.transpose().matmul(&Mat3(a)).matmul(&rm).0;
            // Re-symmetrize to suppress rounding skew.
            for (i, j, k) in [(1usize, 3usize, 0usize), (2, 6, 0), (5, 7, 0)] {
                let _ = k;
                let v = 0.5 * (a[i] + a[j]);
                a[i] = v;
                a[j] = v;
            }
        }
    }
    let mut ls = [a[0], a[4], a[8]];
    let mean = (ls[0] + ls[1] + ls[2]) / 3.0;
    for l in &mut ls {
        *l -= mean;
    }
    ls.sort_by(|x, y| x.partial_cmp(y).unwrap());
    EigenTriple {
        l1: ls[0],
        l2: ls[1],
        l3: ls[2],
    }
}

/// Uniaxial tensor `s (d x d - I/3)` for a unit director d.
pub fn uniaxial(s: f64, d: [f64; 3]) -> Result<QTensor, TensorError> {
    if !s.is_finite() || d.iter().any(|v| !v.is_finite()) {
        return Err(TensorError::NonFinite);
    }
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(TensorError::NotUnit { norm });
    }
    let third = s / 3.0;
    Ok(QTensor {
        m: [
            s * d[0] * d[0] - third,
            s * d[0] * d[1],
            s * d[0] * d[2],
            s * d[1] * d[1] - third,
            s * d[1] * d[2],
            s * d[2] * d[2] - third,
        ],
    }
    .retraced())
}

/// Rotate a Q-tensor: R Q R^T.
pub fn rotate(q: &QTensor, r: &Mat3) -> QTensor {
    let m = r.matmul(&q.to_mat3()).matmul(&r.transpose());
    project_traceless(&m).expect("rotation of finite tensor is finite")
}

/// Rotation matrix from an axis-angle pair (axis need not be normalized).
pub fn rotation_from_axis_angle(axis: [f64; 3], angle: f64) -> Mat3 {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let (x, y, z) = (axis[0] / n, axis[1] / n, axis[2] / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    Mat3([
        t * x * x + c,
        t * x * y - s * z,
        t * x * z + s * y,
        t * x * y + s * z,
        t * y * y + c,
        t * y * z - s * x,
        t * x * z - s * y,
        t * y * z + s * x,
        t * z * z + c,
    ])
}
