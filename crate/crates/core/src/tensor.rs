//! Constant anisotropic elasticity tensors: validation, generation, and the
//! small dense algebra (acoustic tensor, frame contractions, rotations) that
//! the rest of the toolkit is built on.
//!
//! Stiffness is stored as a 6×6 symmetric Voigt matrix of *tensor* components
//! (no engineering-strain factors). The rank-4 view `c(i,j,k,l)` applies the
//! index pairing (11, 22, 33, 23, 13, 12) explicitly, and the convexity check
//! rescales shear rows/columns by √2 (Mandel form) so that the quadratic form
//! is evaluated with the metric that makes ε:ε the Frobenius norm.

use nalgebra::{Matrix3, Matrix6, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Voigt pair for each contracted index: (11, 22, 33, 23, 13, 12).
pub const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// Contracted index of an (i, j) pair under the Voigt convention.
#[inline]
pub fn voigt_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) | (2, 1) => 3,
        (0, 2) | (2, 0) => 4,
        (0, 1) | (1, 0) => 5,
        _ => panic!("tensor index out of range: ({i}, {j})"),
    }
}

/// Absolute tolerance for symmetry of user-provided Voigt matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Absolute tolerance on the Euclidean norm of a unit vector.
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("input Voigt matrix is not symmetric (off-symmetry {defect:.3e} > {SYMMETRY_TOL:.0e})")]
    AsymmetricInput { defect: f64 },
    #[error("stiffness is not strongly convex (smallest eigenvalue {lambda_min:.6e} <= 0)")]
    NotStronglyConvex { lambda_min: f64 },
    #[error("matrix is not a proper rotation (orthogonality defect {defect:.3e})")]
    NotARotation { defect: f64 },
    #[error("direction vector must be nonzero")]
    ZeroDirection,
    #[error("vector norm {norm} is not 1 within {UNIT_TOL:.0e}")]
    NotUnit { norm: f64 },
}

/// A unit vector in R^3, checked to norm 1 within [`UNIT_TOL`] on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector(Vector3<f64>);

impl UnitVector {
    pub fn new(v: Vector3<f64>) -> Result<Self, TensorError> {
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(TensorError::NotUnit { norm });
        }
        Ok(Self(v))
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(v: Vector3<f64>) -> Result<Self, TensorError> {
        let norm = v.norm();
        if norm == 0.0 {
            return Err(TensorError::ZeroDirection);
        }
        Ok(Self(v / norm))
    }

    pub fn from_components(x: f64, y: f64, z: f64) -> Result<Self, TensorError> {
        Self::new(Vector3::new(x, y, z))
    }

    #[inline]
    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn e1() -> Self {
        Self(Vector3::x())
    }

    pub fn e2() -> Self {
        Self(Vector3::y())
    }

    pub fn e3() -> Self {
        Self(Vector3::z())
    }
}

impl std::ops::Deref for UnitVector {
    type Target = Vector3<f64>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

/// Rank-4 stiffness tensor with minor and major symmetries, stored as a
/// symmetric 6×6 Voigt matrix of tensor components. Validated to be strongly
/// convex; immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityTensor {
    voigt: Matrix6<f64>,
    lambda_min: f64,
}

impl ElasticityTensor {
    /// Validates and symmetrizes an input Voigt matrix.
    ///
    /// Rejects inputs whose off-symmetry exceeds [`SYMMETRY_TOL`] and
    /// stiffnesses whose convexity constant is not strictly positive.
    pub fn from_voigt(voigt: Matrix6<f64>) -> Result<Self, TensorError> {
        let mut defect = 0.0f64;
        for i in 0..6 {
            for j in (i + 1)..6 {
                defect = defect.max((voigt[(i, j)] - voigt[(j, i)]).abs());
            }
        }
        if defect > SYMMETRY_TOL {
            return Err(TensorError::AsymmetricInput { defect });
        }
        let voigt = (voigt + voigt.transpose()) * 0.5;
        let lambda_min = convexity_constant_of(&voigt);
        if lambda_min <= 0.0 {
            return Err(TensorError::NotStronglyConvex { lambda_min });
        }
        Ok(Self { voigt, lambda_min })
    }

    pub fn voigt(&self) -> &Matrix6<f64> {
        &self.voigt
    }

    /// Rank-4 component C_ijkl via the Voigt pairing.
    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.voigt[(voigt_index(i, j), voigt_index(k, l))]
    }

    /// The largest λ with ε:(C::ε) ≥ λ ε:ε over symmetric matrices ε.
    pub fn strong_convexity_constant(&self) -> f64 {
        self.lambda_min
    }

    /// C::ε, the stress response to a (not necessarily symmetric) strain.
    pub fn apply(&self, eps: &Matrix3<f64>) -> Matrix3<f64> {
        let mut out = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        s += self.c(i, j, k, l) * eps[(k, l)];
                    }
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    /// The quadratic form ε:(C::ε).
    pub fn energy_density(&self, eps: &Matrix3<f64>) -> f64 {
        let sigma = self.apply(eps);
        eps.component_mul(&sigma).sum()
    }

    /// Frame contractions R_ik = Σ C_ijkl m_j n_l and T_ik = Σ C_ijkl n_j n_l.
    ///
    /// T is symmetric positive definite for any strongly convex stiffness.
    pub fn rt_matrices(&self, m: &UnitVector, n: &UnitVector) -> (Matrix3<f64>, Matrix3<f64>) {
        let r = self.pair_contraction(m.as_vector(), n.as_vector());
        let t = self.pair_contraction(n.as_vector(), n.as_vector());
        (r, t)
    }

    /// Acoustic tensor Q(ξ)_ik = Σ C_ijkl ξ_j ξ_l; equals T(n) on unit vectors
    /// and is quadratically homogeneous in ξ.
    pub fn acoustic_tensor(&self, xi: &Vector3<f64>) -> Result<Matrix3<f64>, TensorError> {
        if xi.norm() == 0.0 {
            return Err(TensorError::ZeroDirection);
        }
        Ok(self.pair_contraction(xi, xi))
    }

    fn pair_contraction(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
        let mut out = Matrix3::zeros();
        for i in 0..3 {
            for k in 0..3 {
                let mut s = 0.0;
                for j in 0..3 {
                    for l in 0..3 {
                        s += self.c(i, j, k, l) * a[j] * b[l];
                    }
                }
                out[(i, k)] = s;
            }
        }
        out
    }

    /// Pushes the stiffness through a proper rotation: C'_ijkl = Q_ia Q_jb Q_kc Q_ld C_abcd.
    pub fn rotate(&self, q: &Matrix3<f64>) -> Result<Self, TensorError> {
        let ortho_defect = (q.transpose() * q - Matrix3::identity()).norm();
        let det_defect = (q.determinant() - 1.0).abs();
        if ortho_defect > 1e-12 || det_defect > 1e-12 {
            return Err(TensorError::NotARotation {
                defect: ortho_defect.max(det_defect),
            });
        }
        let mut full = [[[[0.0f64; 3]; 3]; 3]; 3];
        for (ai, a) in full.iter_mut().enumerate() {
            for (bi, b) in a.iter_mut().enumerate() {
                for (ci, c) in b.iter_mut().enumerate() {
                    for (di, v) in c.iter_mut().enumerate() {
                        *v = self.c(ai, bi, ci, di);
                    }
                }
            }
        }
        let mut voigt = Matrix6::zeros();
        for (row, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
            for (col, &(k, l)) in VOIGT_PAIRS.iter().enumerate() {
                let mut s = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        let qia_qjb = q[(i, a)] * q[(j, b)];
                        if qia_qjb == 0.0 {
                            continue;
                        }
                        for c in 0..3 {
                            for d in 0..3 {
                                s += qia_qjb * q[(k, c)] * q[(l, d)] * full[a][b][c][d];
                            }
                        }
                    }
                }
                voigt[(row, col)] = s;
            }
        }
        // The rotated matrix is symmetric up to roundoff; symmetrize before validation.
        let voigt = (voigt + voigt.transpose()) * 0.5;
        Self::from_voigt(voigt)
    }

    /// Isotropic stiffness from the Lamé constants.
    pub fn isotropic(lambda: f64, mu: f64) -> Result<Self, TensorError> {
        let mut v = Matrix6::zeros();
        for i in 0..3 {
            for j in 0..3 {
                v[(i, j)] = lambda;
            }
            v[(i, i)] = lambda + 2.0 * mu;
            v[(i + 3, i + 3)] = mu;
        }
        Self::from_voigt(v)
    }

    /// Cubic-symmetry stiffness (three constants, axes along the coordinates).
    pub fn cubic(c11: f64, c12: f64, c44: f64) -> Result<Self, TensorError> {
        let mut v = Matrix6::zeros();
        for i in 0..3 {
            for j in 0..3 {
                v[(i, j)] = c12;
            }
            v[(i, i)] = c11;
            v[(i + 3, i + 3)] = c44;
        }
        Self::from_voigt(v)
    }

    /// Transversely isotropic stiffness with the given symmetry axis.
    ///
    /// The five constants follow the usual ordering for an e3 axis:
    /// c11, c12, c13, c33, c44 (and c66 = (c11 - c12)/2); the result is then
    /// rotated so that e3 maps onto `axis`.
    pub fn transversely_isotropic(
        c11: f64,
        c12: f64,
        c13: f64,
        c33: f64,
        c44: f64,
        axis: &UnitVector,
    ) -> Result<Self, TensorError> {
        let mut v = Matrix6::zeros();
        v[(0, 0)] = c11;
        v[(1, 1)] = c11;
        v[(2, 2)] = c33;
        v[(0, 1)] = c12;
        v[(1, 0)] = c12;
        v[(0, 2)] = c13;
        v[(2, 0)] = c13;
        v[(1, 2)] = c13;
        v[(2, 1)] = c13;
        v[(3, 3)] = c44;
        v[(4, 4)] = c44;
        v[(5, 5)] = 0.5 * (c11 - c12);
        let c = Self::from_voigt(v)?;
        c.rotate(&rotation_taking_e3_to(axis))
    }

    /// Random fully anisotropic stiffness: a symmetric Gaussian draw projected
    /// onto the strongly convex cone by clamping the eigenvalues of its Mandel
    /// form into `[eig_floor, eig_ceil]`.
    pub fn random_convex<R: Rng>(rng: &mut R, eig_floor: f64, eig_ceil: f64) -> Self {
        assert!(0.0 < eig_floor && eig_floor < eig_ceil);
        let mut m = Matrix6::zeros();
        for i in 0..6 {
            for j in i..6 {
                let g: f64 = StandardNormal.sample(rng);
                m[(i, j)] = g;
                m[(j, i)] = g;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(m);
        let clamped = Matrix6::from_diagonal(&eig.eigenvalues.map(|e| e.clamp(eig_floor, eig_ceil)));
        let mandel = eig.eigenvectors * clamped * eig.eigenvectors.transpose();
        // Undo the Mandel scaling to get back tensor components.
        let mut voigt = mandel;
        for i in 0..6 {
            for j in 0..6 {
                voigt[(i, j)] /= mandel_weight(i) * mandel_weight(j);
            }
        }
        let voigt = (voigt + voigt.transpose()) * 0.5;
        Self::from_voigt(voigt).expect("eigenvalue clamping yields a convex tensor")
    }

    /// Relative Frobenius distance between two stiffnesses.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        (self.voigt - other.voigt).norm() / other.voigt.norm()
    }
}

#[inline]
fn mandel_weight(i: usize) -> f64 {
    if i < 3 {
        1.0
    } else {
        std::f64::consts::SQRT_2
    }
}

/// Mandel form of a Voigt matrix: shear rows/columns scaled by √2 so that the
/// 6×6 eigenvalues are exactly the eigenvalues of ε ↦ C::ε on symmetric ε.
pub fn mandel_matrix(voigt: &Matrix6<f64>) -> Matrix6<f64> {
    let mut m = *voigt;
    for i in 0..6 {
        for j in 0..6 {
            m[(i, j)] *= mandel_weight(i) * mandel_weight(j);
        }
    }
    m
}

fn convexity_constant_of(voigt: &Matrix6<f64>) -> f64 {
    let eig = nalgebra::SymmetricEigen::new(mandel_matrix(voigt));
    eig.eigenvalues.min()
}

/// A proper rotation mapping e3 onto `axis`.
pub fn rotation_taking_e3_to(axis: &UnitVector) -> Matrix3<f64> {
    let e3 = Vector3::z();
    let target = *axis.as_vector();
    let c = e3.dot(&target);
    if c > 1.0 - 1e-14 {
        return Matrix3::identity();
    }
    if c < -1.0 + 1e-14 {
        // 180° turn about e1.
        return Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
    }
    let v = e3.cross(&target);
    let vx = Matrix3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0);
    Matrix3::identity() + vx + vx * vx * (1.0 / (1.0 + c))
}

/// Random uniformly distributed unit vector.
pub fn random_unit_vector<R: Rng>(rng: &mut R) -> UnitVector {
    loop {
        let v = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if v.norm() > 1e-6 {
            return UnitVector::normalized(v).unwrap();
        }
    }
}

/// Random rotation, uniform over SO(3) (via a normalized quaternion).
pub fn random_rotation<R: Rng>(rng: &mut R) -> Matrix3<f64> {
    let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}
