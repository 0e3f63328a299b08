//! Surface impedance tensors and the fundamental solution for constant
//! anisotropic stiffnesses, via the angular-average route: the two matrices
//!
//!   S1(l) = -(1/2π) ∮ T(n_φ)⁻¹ R(m_φ, n_φ)ᵀ dφ,
//!   S2(l) =  (1/2π) ∮ T(n_φ)⁻¹ dφ,
//!
//! integrated over a frame rotating about the reference direction l, combine
//! into Z(l) = S2⁻¹ + i·S2⁻¹S1. No sextic eigenvalue problem is solved; the
//! integrands are real-analytic and 2π-periodic, so the composite trapezoid
//! rule converges spectrally.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex;
use thiserror::Error;

use crate::tensor::{ElasticityTensor, TensorError, UnitVector};

/// Condition-number ceiling on S2 before impedance inversion is refused.
pub const S2_CONDITION_LIMIT: f64 = 1e12;

/// Hermiticity ceiling for a freshly computed impedance tensor (relative).
pub const HERMITICITY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum StrohError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("S2 is numerically singular (condition number {cond:.3e} > {S2_CONDITION_LIMIT:.0e})")]
    SingularS2 { cond: f64 },
    #[error("impedance tensor violates Hermiticity (relative defect {defect:.3e})")]
    HermiticityViolated { defect: f64 },
    #[error("real part of the impedance tensor is not positive definite (min eig {min_eig:.3e})")]
    RealPartNotPositive { min_eig: f64 },
    #[error("fundamental solution is undefined at x = 0")]
    ZeroPoint,
}

/// Orthonormal frame (m0, n0) completing a reference direction l.
#[derive(Debug, Clone, Copy)]
pub struct RotatingFrame {
    pub m0: UnitVector,
    pub n0: UnitVector,
    pub l: UnitVector,
}

/// Deterministic orthonormal frame perpendicular to `l`.
///
/// When l3 > 1e-6 the explicit formulas
/// m0 = (1-l1², -l1l2, -l1l3)/√(1-l1²), n0 = (0, l3, -l2)/√(1-l1²)
/// are used directly. Otherwise the largest-magnitude component of l is
/// cycled into slot 3 (negating the vector if needed), the frame is built
/// there, and the permutation is undone.
pub fn rotating_frame(l: &UnitVector) -> RotatingFrame {
    let v = *l.as_vector();
    if v[2] > 1e-6 {
        let (m0, n0) = frame_formulas(&v);
        return RotatingFrame {
            m0: UnitVector::normalized(m0).expect("frame vector is unit"),
            n0: UnitVector::normalized(n0).expect("frame vector is unit"),
            l: *l,
        };
    }
    // Cyclic permutation sending the largest-magnitude slot to slot 3.
    let k = (0..3).max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap()).unwrap();
    let perm: [usize; 3] = match k {
        0 => [1, 2, 0],
        1 => [2, 0, 1],
        _ => [0, 1, 2],
    };
    let mut w = Vector3::zeros();
    for slot in 0..3 {
        w[slot] = v[perm[slot]];
    }
    let sign = if w[2] < 0.0 { -1.0 } else { 1.0 };
    let (m0p, n0p) = frame_formulas(&(sign * w));
    let mut m0 = Vector3::zeros();
    let mut n0 = Vector3::zeros();
    for slot in 0..3 {
        m0[perm[slot]] = m0p[slot];
        n0[perm[slot]] = n0p[slot];
    }
    RotatingFrame {
        m0: UnitVector::normalized(m0).expect("frame vector is unit"),
        n0: UnitVector::normalized(n0).expect("frame vector is unit"),
        l: *l,
    }
}

fn frame_formulas(l: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let denom = (1.0 - l[0] * l[0]).sqrt();
    let m0 = Vector3::new(1.0 - l[0] * l[0], -l[0] * l[1], -l[0] * l[2]) / denom;
    let n0 = Vector3::new(0.0, l[2], -l[1]) / denom;
    (m0, n0)
}

/// Barnett–Lothe angular averages S1, S2 at direction `l`.
///
/// `order` is the number of equispaced trapezoid nodes on [0, 2π); it must be
/// even and at least 8. S2 is symmetric positive definite for convex C.
pub fn barnett_lothe(
    c: &ElasticityTensor,
    l: &UnitVector,
    order: usize,
) -> (Matrix3<f64>, Matrix3<f64>) {
    barnett_lothe_with_frame(c, &rotating_frame(l), order)
}

/// As [`barnett_lothe`], with an explicit frame (the full-period averages are
/// frame independent; exposing the frame lets tests verify that).
pub fn barnett_lothe_with_frame(
    c: &ElasticityTensor,
    frame: &RotatingFrame,
    order: usize,
) -> (Matrix3<f64>, Matrix3<f64>) {
    assert!(order >= 8 && order % 2 == 0, "quadrature order must be even and >= 8");
    let m0 = frame.m0.as_vector();
    let n0 = frame.n0.as_vector();
    let mut s1 = Matrix3::zeros();
    let mut s2 = Matrix3::zeros();
    for node in 0..order {
        let phi = 2.0 * std::f64::consts::PI * node as f64 / order as f64;
        let (sin, cos) = phi.sin_cos();
        let m_phi = UnitVector::normalized(m0 * cos + n0 * sin).expect("rotated frame is unit");
        let n_phi = UnitVector::normalized(-m0 * sin + n0 * cos).expect("rotated frame is unit");
        let (r, t) = c.rt_matrices(&m_phi, &n_phi);
        let t_inv = t.try_inverse().expect("T(n) is invertible for convex C");
        s1 -= t_inv * r.transpose();
        s2 += t_inv;
    }
    (s1 / order as f64, s2 / order as f64)
}

/// Surface impedance tensor Z(l) = S2⁻¹ + i S2⁻¹ S1: a 3×3 complex Hermitian
/// matrix with positive definite real part.
#[derive(Debug, Clone)]
pub struct ImpedanceTensor {
    pub z: Matrix3<Complex<f64>>,
    pub l: UnitVector,
    pub quadrature_order: usize,
}

impl ImpedanceTensor {
    /// Relative Hermiticity defect ‖z - z*‖/‖z‖.
    pub fn hermiticity_defect(&self) -> f64 {
        (self.z - self.z.adjoint()).norm() / self.z.norm()
    }

    pub fn real_part(&self) -> Matrix3<f64> {
        self.z.map(|e| e.re)
    }

    pub fn imag_part(&self) -> Matrix3<f64> {
        self.z.map(|e| e.im)
    }
}

/// Computes the surface impedance tensor at direction `l`.
pub fn impedance(
    c: &ElasticityTensor,
    l: &UnitVector,
    order: usize,
) -> Result<ImpedanceTensor, StrohError> {
    let (s1, s2) = barnett_lothe(c, l, order);
    impedance_from_averages(&s1, &s2, l, order)
}

fn impedance_from_averages(
    s1: &Matrix3<f64>,
    s2: &Matrix3<f64>,
    l: &UnitVector,
    order: usize,
) -> Result<ImpedanceTensor, StrohError> {
    let svd = s2.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > S2_CONDITION_LIMIT {
        return Err(StrohError::SingularS2 { cond });
    }
    let s2_inv = s2.try_inverse().expect("condition number already checked");
    let re = (s2_inv + s2_inv.transpose()) * 0.5;
    let im = s2_inv * s1;
    let z = Matrix3::from_fn(|i, j| Complex::new(re[(i, j)], im[(i, j)]));
    let out = ImpedanceTensor { z, l: *l, quadrature_order: order };
    let defect = out.hermiticity_defect();
    if defect > HERMITICITY_TOL {
        return Err(StrohError::HermiticityViolated { defect });
    }
    let min_eig = nalgebra::SymmetricEigen::new(out.real_part()).eigenvalues.min();
    if min_eig <= 0.0 {
        return Err(StrohError::RealPartNotPositive { min_eig });
    }
    Ok(out)
}

/// One sample of the elastostatic fundamental solution
/// Γ(x) = (4π|x|)⁻¹ (Re Z(x/|x|))⁻¹.
#[derive(Debug, Clone)]
pub struct FundamentalSolutionSample {
    pub x: Vector3<f64>,
    pub gamma: Matrix3<f64>,
}

/// Evaluates the fundamental solution at a nonzero point.
pub fn fundamental_solution(
    c: &ElasticityTensor,
    x: &Vector3<f64>,
    order: usize,
) -> Result<FundamentalSolutionSample, StrohError> {
    let r = x.norm();
    if r == 0.0 {
        return Err(StrohError::ZeroPoint);
    }
    let l = UnitVector::normalized(*x).expect("nonzero point");
    let z = impedance(c, &l, order)?;
    let re_inv = z
        .real_part()
        .try_inverse()
        .expect("Re Z positive definite was already checked");
    let gamma = re_inv / (4.0 * std::f64::consts::PI * r);
    Ok(FundamentalSolutionSample { x: *x, gamma: (gamma + gamma.transpose()) * 0.5 })
}

/// CSV header for impedance tables: direction, the six independent entries of
/// Re z in Voigt order, and the three independent entries of Im z.
pub const IMPEDANCE_CSV_HEADER: &str =
    "l1,l2,l3,re11,re22,re33,re23,re13,re12,im23,im13,im12";

/// One CSV row for an impedance sample (no trailing newline).
pub fn impedance_csv_row(l: &UnitVector, z: &Matrix3<Complex<f64>>) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        l[0],
        l[1],
        l[2],
        z[(0, 0)].re,
        z[(1, 1)].re,
        z[(2, 2)].re,
        z[(1, 2)].re,
        z[(0, 2)].re,
        z[(0, 1)].re,
        z[(1, 2)].im,
        z[(0, 2)].im,
        z[(0, 1)].im,
    )
}

/// Writes an impedance table as CSV.
pub fn write_impedance_csv<W: std::io::Write>(
    out: &mut W,
    rows: &[ImpedanceTensor],
) -> std::io::Result<()> {
    writeln!(out, "{IMPEDANCE_CSV_HEADER}")?;
    for t in rows {
        writeln!(out, "{}", impedance_csv_row(&t.l, &t.z))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{random_rotation, random_unit_vector};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Kelvin closed form for the isotropic fundamental solution, implemented
    /// independently of the impedance route.
    pub(crate) fn kelvin_gamma(lambda: f64, mu: f64, x: &Vector3<f64>) -> Matrix3<f64> {
        let nu = lambda / (2.0 * (lambda + mu));
        let r = x.norm();
        let xhat = x / r;
        let scale = 1.0 / (16.0 * std::f64::consts::PI * mu * (1.0 - nu) * r);
        let mut g = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                g[(i, j)] = scale * ((3.0 - 4.0 * nu) * delta + xhat[i] * xhat[j]);
            }
        }
        g
    }

    #[test]
    fn frame_at_e3_matches_explicit_formulas() {
        let f = rotating_frame(&UnitVector::e3());
        assert_relative_eq!(*f.m0.as_vector(), Vector3::x(), epsilon = 1e-15);
        assert_relative_eq!(*f.n0.as_vector(), Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn frame_at_e1_uses_permutation_branch() {
        let f = rotating_frame(&UnitVector::e1());
        check_frame(&f);
    }

    #[test]
    fn frame_near_l1_squared_one_does_not_blow_up() {
        let l1 = (1.0 - 1e-16f64).sqrt();
        let rest = (1.0 - l1 * l1).max(0.0).sqrt();
        let l = UnitVector::normalized(Vector3::new(l1, rest, 0.0)).unwrap();
        let f = rotating_frame(&l);
        check_frame(&f);
    }

    #[test]
    fn frame_is_orthonormal_for_random_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let l = random_unit_vector(&mut rng);
            check_frame(&rotating_frame(&l));
        }
    }

    fn check_frame(f: &RotatingFrame) {
        let (m0, n0, l) = (f.m0.as_vector(), f.n0.as_vector(), f.l.as_vector());
        assert!(m0.dot(n0).abs() < 1e-12);
        assert!(m0.dot(l).abs() < 1e-12);
        assert!(n0.dot(l).abs() < 1e-12);
        assert!((m0.norm() - 1.0).abs() < 1e-12);
        assert!((n0.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_rule_is_spectrally_converged_at_low_order() {
        let c = ElasticityTensor::isotropic(1.0, 1.0).unwrap();
        let l = UnitVector::normalized(Vector3::new(0.3, -0.4, 0.87)).unwrap();
        let (_, s2_16) = barnett_lothe(&c, &l, 16);
        let (_, s2_512) = barnett_lothe(&c, &l, 512);
        assert!((s2_16 - s2_512).norm() < 1e-12);
    }

    #[test]
    fn quadrature_refinement_residual_decreases_monotonically() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let tensors = [
            ElasticityTensor::isotropic(1.3, 0.6).unwrap(),
            ElasticityTensor::cubic(3.0, 1.2, 0.9).unwrap(),
            ElasticityTensor::random_convex(&mut rng, 0.5, 2.0),
        ];
        for c in &tensors {
            let l = random_unit_vector(&mut rng);
            let mut prev = f64::INFINITY;
            for k in [8usize, 16, 32] {
                let (_, a) = barnett_lothe(c, &l, 2 * k);
                let (_, b) = barnett_lothe(c, &l, 4 * k);
                let resid = (a - b).norm();
                assert!(resid <= prev + 1e-15, "residual not decreasing at k={k}");
                prev = resid;
            }
            // k = 32: order 64 vs 128.
            assert!(prev < 1e-13, "saturated residual {prev} too large");
        }
    }

    #[test]
    fn averages_are_frame_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let c = ElasticityTensor::random_convex(&mut rng, 0.5, 2.0);
        let l = random_unit_vector(&mut rng);
        let frame = rotating_frame(&l);
        let angle = 17f64.to_radians();
        let (sin, cos) = angle.sin_cos();
        let m_rot = frame.m0.as_vector() * cos + frame.n0.as_vector() * sin;
        let n_rot = -frame.m0.as_vector() * sin + frame.n0.as_vector() * cos;
        let rotated = RotatingFrame {
            m0: UnitVector::normalized(m_rot).unwrap(),
            n0: UnitVector::normalized(n_rot).unwrap(),
            l,
        };
        let (s1a, s2a) = barnett_lothe_with_frame(&c, &frame, 64);
        let (s1b, s2b) = barnett_lothe_with_frame(&c, &rotated, 64);
        assert!((s1a - s1b).norm() < 1e-12);
        assert!((s2a - s2b).norm() < 1e-12);
    }

    #[test]
    fn s2_is_positive_definite_for_random_tensors() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..50 {
            let c = ElasticityTensor::random_convex(&mut rng, 0.4, 3.0);
            let l = random_unit_vector(&mut rng);
            let (_, s2) = barnett_lothe(&c, &l, 64);
            let min_eig = nalgebra::SymmetricEigen::new(s2).eigenvalues.min();
            assert!(min_eig > 0.0, "S2 min eig {min_eig}");
        }
    }

    #[test]
    fn impedance_is_hermitian_for_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let c = ElasticityTensor::random_convex(&mut rng, 0.4, 3.0);
            let l = random_unit_vector(&mut rng);
            let z = impedance(&c, &l, 64).unwrap();
            assert!(z.hermiticity_defect() <= HERMITICITY_TOL);
        }
    }

    #[test]
    fn impedance_is_rotation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10 {
            let c = ElasticityTensor::random_convex(&mut rng, 0.5, 2.0);
            let l = random_unit_vector(&mut rng);
            let q = random_rotation(&mut rng);
            let cq = c.rotate(&q).unwrap();
            let lq = UnitVector::normalized(q * l.as_vector()).unwrap();
            let z = impedance(&c, &l, 64).unwrap().z;
            let zq = impedance(&cq, &lq, 64).unwrap().z;
            let qc = q.map(|e| Complex::new(e, 0.0));
            let pushed = qc * z * qc.transpose();
            let defect = (zq - pushed).norm() / z.norm();
            assert!(defect < 1e-10, "equivariance defect {defect}");
        }
    }

    #[test]
    fn isotropic_impedance_is_direction_independent() {
        let c = ElasticityTensor::isotropic(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let z0 = impedance(&c, &UnitVector::e3(), 64).unwrap();
        // Compare rotated into a common frame: for isotropic media the
        // eigenvalues of Re z and the norm of Im z are direction independent.
        let ref_eigs = nalgebra::SymmetricEigen::new(z0.real_part()).eigenvalues;
        let mut ref_sorted: Vec<f64> = ref_eigs.iter().copied().collect();
        ref_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for _ in 0..10 {
            let l = random_unit_vector(&mut rng);
            let z = impedance(&c, &l, 64).unwrap();
            let eigs = nalgebra::SymmetricEigen::new(z.real_part()).eigenvalues;
            let mut sorted: Vec<f64> = eigs.iter().copied().collect();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in sorted.iter().zip(&ref_sorted) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
            assert_relative_eq!(z.imag_part().norm(), z0.imag_part().norm(), epsilon = 1e-12);
        }
    }

    #[test]
    fn fundamental_solution_matches_kelvin_closed_form() {
        let (lambda, mu) = (1.0, 1.0);
        let c = ElasticityTensor::isotropic(lambda, mu).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..50 {
            let x = random_unit_vector(&mut rng).as_vector() * (0.2 + 3.0 * rand::Rng::random::<f64>(&mut rng));
            let sample = fundamental_solution(&c, &x, 64).unwrap();
            let oracle = kelvin_gamma(lambda, mu, &x);
            let err = (sample.gamma - oracle).norm() / oracle.norm();
            assert!(err <= 1e-8, "Kelvin mismatch {err}");
        }
    }

    #[test]
    fn fundamental_solution_homogeneity_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let c = ElasticityTensor::random_convex(&mut rng, 0.5, 2.0);
        let x = Vector3::new(0.4, -0.7, 1.1);
        let g1 = fundamental_solution(&c, &x, 64).unwrap().gamma;
        let g2 = fundamental_solution(&c, &(2.0 * x), 64).unwrap().gamma;
        assert!((g2 - g1 / 2.0).norm() <= 1e-12 * g1.norm());
        assert_relative_eq!(g1, g1.transpose(), epsilon = 1e-13);
        let min_eig = nalgebra::SymmetricEigen::new(g1).eigenvalues.min();
        assert!(min_eig > 0.0);

        assert!(matches!(
            fundamental_solution(&c, &Vector3::zeros(), 64),
            Err(StrohError::ZeroPoint)
        ));
    }

    #[test]
    fn impedance_is_smooth_along_sphere_curves() {
        // Central differences of Z along a great circle converge at second
        // order, which is the numerical footprint of real-analyticity.
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let c = ElasticityTensor::random_convex(&mut rng, 0.5, 2.0);
        let l0 = random_unit_vector(&mut rng);
        let frame = rotating_frame(&l0);
        let curve = |t: f64| {
            UnitVector::normalized(
                l0.as_vector() * t.cos() + frame.m0.as_vector() * t.sin(),
            )
            .unwrap()
        };
        let z_at = |t: f64| impedance(&c, &curve(t), 128).unwrap().z;
        let diff = |h: f64| (z_at(h) - z_at(-h)).map(|e| e / Complex::new(2.0 * h, 0.0));
        let reference = diff(1e-6);
        let e1 = (diff(2e-2) - reference).norm();
        let e2 = (diff(1e-2) - reference).norm();
        let rate = (e1 / e2).log2();
        assert!(
            (rate - 2.0).abs() < 0.35,
            "finite-difference convergence rate {rate}, errors {e1:.3e}, {e2:.3e}"
        );
    }

    #[test]
    fn csv_roundtrip_of_one_row() {
        let c = ElasticityTensor::isotropic(1.0, 1.0).unwrap();
        let z = impedance(&c, &UnitVector::e3(), 64).unwrap();
        let mut buf = Vec::new();
        write_impedance_csv(&mut buf, std::slice::from_ref(&z)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), IMPEDANCE_CSV_HEADER);
        let fields: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(fields.len(), 12);
        assert_relative_eq!(fields[3], z.z[(0, 0)].re);
    }
}
