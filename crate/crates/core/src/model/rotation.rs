//! Rotation parameterizations: the 6D Gram-Schmidt construction used for the
//! global pose and axis-angle (Rodrigues) for local joints, each with its
//! analytic partial derivatives for the loss gradient.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Degeneracy threshold for the Gram-Schmidt construction.
pub const ROT6D_EPS: f64 = 1e-9;

/// A proper rotation (orthonormal, det +1), guaranteed by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix3<f64> {
        self.0
    }

    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    /// Row `i` of the matrix.
    pub fn row(&self, i: usize) -> Vector3<f64> {
        self.0.row(i).transpose()
    }
}

/// The 6-vector that maps to the identity rotation.
pub const ROT6D_IDENTITY: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];

/// Builds a rotation from the 6-vector b = (b_x, b_y):
/// R_x = N(b_x), R_z = N(R_x x b_y), R_y = R_z x R_x, stacked as rows.
pub fn rot6d_to_matrix(b: &[f64; 6]) -> Result<RotationMatrix> {
    let bx = Vector3::new(b[0], b[1], b[2]);
    let by = Vector3::new(b[3], b[4], b[5]);
    let nx = bx.norm();
    if nx <= ROT6D_EPS {
        return Err(Error::DegenerateRotation(format!(
            "|b_x| = {nx:.3e} <= {ROT6D_EPS:.0e}"
        )));
    }
    let rx = bx / nx;
    let z_raw = rx.cross(&by);
    let nz = z_raw.norm();
    if nz <= ROT6D_EPS {
        return Err(Error::DegenerateRotation(format!(
            "b_y is parallel to b_x within {ROT6D_EPS:.0e} (|N(b_x) x b_y| = {nz:.3e})"
        )));
    }
    let rz = z_raw / nz;
    let ry = rz.cross(&rx);
    Ok(RotationMatrix(Matrix3::from_rows(&[
        rx.transpose(),
        ry.transpose(),
        rz.transpose(),
    ])))
}

/// Extracts a 6-vector representing `r` exactly: the first two rows.
pub fn matrix_to_rot6d(r: &RotationMatrix) -> [f64; 6] {
    let m = r.matrix();
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
    ]
}

/// Rotation matrix together with its six partial derivatives dR/db_i.
pub(crate) fn rot6d_partials(b: &[f64; 6]) -> Result<(Matrix3<f64>, [Matrix3<f64>; 6])> {
    let bx = Vector3::new(b[0], b[1], b[2]);
    let by = Vector3::new(b[3], b[4], b[5]);
    let nx = bx.norm();
    if nx <= ROT6D_EPS {
        return Err(Error::DegenerateRotation(format!(
            "|b_x| = {nx:.3e} <= {ROT6D_EPS:.0e}"
        )));
    }
    let rx = bx / nx;
    let z_raw = rx.cross(&by);
    let nz = z_raw.norm();
    if nz <= ROT6D_EPS {
        return Err(Error::DegenerateRotation(format!(
            "b_y is parallel to b_x within {ROT6D_EPS:.0e} (|N(b_x) x b_y| = {nz:.3e})"
        )));
    }
    let rz = z_raw / nz;
    let ry = rz.cross(&rx);
    let r = Matrix3::from_rows(&[rx.transpose(), ry.transpose(), rz.transpose()]);

    let mut partials = [Matrix3::zeros(); 6];
    for (i, out) in partials.iter_mut().enumerate() {
        // Directional derivative along e_i of (b_x, b_y).
        let (dbx, dby) = if i < 3 {
            (Vector3::ith(i, 1.0), Vector3::zeros())
        } else {
            (Vector3::zeros(), Vector3::ith(i - 3, 1.0))
        };
        // d N(v) = (dv - N(v) (N(v).dv)) / |v|
        let drx = (dbx - rx * rx.dot(&dbx)) / nx;
        let dz_raw = drx.cross(&by) + rx.cross(&dby);
        let drz = (dz_raw - rz * rz.dot(&dz_raw)) / nz;
        let dry = drz.cross(&rx) + rz.cross(&drx);
        *out = Matrix3::from_rows(&[drx.transpose(), dry.transpose(), drz.transpose()]);
    }
    Ok((r, partials))
}

/// Skew-symmetric cross-product matrix [v]x.
fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Series coefficients of the Rodrigues map, Taylor-expanded near zero so
/// the formula and its derivatives stay smooth through the origin.
/// f1 = sin a / a, f2 = (1 - cos a) / a^2,
/// g1 = (a cos a - sin a) / a^3, g2 = (a sin a - 2 (1 - cos a)) / a^4.
fn rodrigues_coeffs(a: f64) -> (f64, f64, f64, f64) {
    if a < 1e-4 {
        let a2 = a * a;
        let f1 = 1.0 - a2 / 6.0 + a2 * a2 / 120.0;
        let f2 = 0.5 - a2 / 24.0 + a2 * a2 / 720.0;
        let g1 = -1.0 / 3.0 + a2 / 30.0 - a2 * a2 / 840.0;
        let g2 = -1.0 / 12.0 + a2 / 180.0 - a2 * a2 / 6720.0;
        (f1, f2, g1, g2)
    } else {
        let (s, c) = a.sin_cos();
        let a2 = a * a;
        let f1 = s / a;
        let f2 = (1.0 - c) / a2;
        let g1 = (a * c - s) / (a2 * a);
        let g2 = (a * s - 2.0 * (1.0 - c)) / (a2 * a2);
        (f1, f2, g1, g2)
    }
}

/// Axis-angle to rotation matrix: R = I + f1 [t]x + f2 [t]x^2.
pub fn rodrigues(theta: &Vector3<f64>) -> Matrix3<f64> {
    let a = theta.norm();
    let (f1, f2, _, _) = rodrigues_coeffs(a);
    let k = skew(theta);
    Matrix3::identity() + k * f1 + k * k * f2
}

/// Rotation matrix together with its three partials dR/dtheta_i.
pub(crate) fn rodrigues_partials(theta: &Vector3<f64>) -> (Matrix3<f64>, [Matrix3<f64>; 3]) {
    let a = theta.norm();
    let (f1, f2, g1, g2) = rodrigues_coeffs(a);
    let k = skew(theta);
    let k2 = k * k;
    let r = Matrix3::identity() + k * f1 + k2 * f2;
    let mut partials = [Matrix3::zeros(); 3];
    for (i, out) in partials.iter_mut().enumerate() {
        let e = Vector3::ith(i, 1.0);
        let de = skew(&e);
        let ta = theta[i]; // d a^2 / (2 d theta_i); df = g * (theta . e)
        *out = (k * g1 + k2 * g2) * ta + de * f1 + (de * k + k * de) * f2;
    }
    (r, partials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent orthonormality oracle: checks R R^T = I, det R = +1.
    fn assert_proper_rotation(m: &Matrix3<f64>, tol: f64) {
        let gram = m * m.transpose();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (gram[(i, j)] - expect).abs() < tol,
                    "gram[{i}{j}] = {}",
                    gram[(i, j)]
                );
            }
        }
        assert!((m.determinant() - 1.0).abs() < tol, "det = {}", m.determinant());
    }

    #[test]
    fn identity_six_vector() {
        let r = rot6d_to_matrix(&ROT6D_IDENTITY).unwrap();
        assert_eq!(*r.matrix(), Matrix3::identity());
    }

    #[test]
    fn scaling_removed_by_normalization() {
        let r = rot6d_to_matrix(&[2.0, 0.0, 0.0, 0.0, 3.0, 0.0]).unwrap();
        assert_eq!(*r.matrix(), Matrix3::identity());
    }

    #[test]
    fn hand_evaluated_cross_products() {
        // b = (0,1,0, -1,0,0): R_x = (0,1,0); R_x x b_y = (0,0,1) = R_z;
        // R_y = R_z x R_x = (-1,0,0). Verified against the cross-product
        // definition and the orthonormality oracle below.
        let r = rot6d_to_matrix(&[0.0, 1.0, 0.0, -1.0, 0.0, 0.0]).unwrap();
        let expect = Matrix3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_abs_diff_eq!(*r.matrix(), expect, epsilon = 1e-15);
        assert_proper_rotation(r.matrix(), 1e-12);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(matches!(
            rot6d_to_matrix(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
            Err(Error::DegenerateRotation(_))
        ));
        // b_y parallel to b_x
        assert!(matches!(
            rot6d_to_matrix(&[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]),
            Err(Error::DegenerateRotation(_))
        ));
    }

    #[test]
    fn random_six_vectors_give_proper_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10_000 {
            let b: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            match rot6d_to_matrix(&b) {
                Ok(r) => assert_proper_rotation(r.matrix(), 1e-9),
                Err(_) => {} // degenerate draws are legitimately rejected
            }
        }
    }

    #[test]
    fn scale_invariance_in_bx() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1_000 {
            let b: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let s: f64 = rng.random_range(0.1..10.0);
            let scaled = [b[0] * s, b[1] * s, b[2] * s, b[3], b[4], b[5]];
            match (rot6d_to_matrix(&b), rot6d_to_matrix(&scaled)) {
                (Ok(a), Ok(c)) => {
                    assert_abs_diff_eq!(*a.matrix(), *c.matrix(), epsilon = 1e-12)
                }
                _ => {}
            }
        }
    }

    #[test]
    fn rot6d_round_trip_via_first_two_rows() {
        let b = [0.3, -0.4, 0.5, 0.1, 0.9, -0.2];
        let r = rot6d_to_matrix(&b).unwrap();
        let b2 = matrix_to_rot6d(&r);
        let r2 = rot6d_to_matrix(&b2).unwrap();
        assert_abs_diff_eq!(*r.matrix(), *r2.matrix(), epsilon = 1e-12);
    }

    #[test]
    fn rodrigues_matches_known_rotations() {
        let r = rodrigues(&Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2));
        let expect = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_abs_diff_eq!(r, expect, epsilon = 1e-12);
        assert_eq!(rodrigues(&Vector3::zeros()), Matrix3::identity());
    }

    #[test]
    fn rodrigues_is_proper_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1_000 {
            let t = Vector3::from_fn(|_, _| rng.random_range(-3.0..3.0));
            assert_proper_rotation(&rodrigues(&t), 1e-12);
        }
    }

    fn finite_diff_partials<F: Fn(&[f64]) -> Matrix3<f64>>(
        f: F,
        x: &[f64],
        h: f64,
    ) -> Vec<Matrix3<f64>> {
        (0..x.len())
            .map(|i| {
                let mut plus = x.to_vec();
                plus[i] += h;
                let mut minus = x.to_vec();
                minus[i] -= h;
                (f(&plus) - f(&minus)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn rot6d_partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let b: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let Ok((_, partials)) = rot6d_partials(&b) else {
                continue;
            };
            let fd = finite_diff_partials(
                |x| {
                    let arr: [f64; 6] = x.try_into().unwrap();
                    rot6d_to_matrix(&arr).unwrap().into_matrix()
                },
                &b,
                1e-6,
            );
            for i in 0..6 {
                assert_abs_diff_eq!(partials[i], fd[i], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn rodrigues_partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for case in 0..200 {
            let t = if case == 0 {
                Vector3::zeros() // exercise the Taylor branch
            } else if case == 1 {
                Vector3::new(1e-6, -2e-6, 5e-7)
            } else {
                Vector3::from_fn(|_, _| rng.random_range(-2.5..2.5))
            };
            let (_, partials) = rodrigues_partials(&t);
            let fd = finite_diff_partials(
                |x| rodrigues(&Vector3::new(x[0], x[1], x[2])),
                t.as_slice(),
                1e-6,
            );
            for i in 0..3 {
                assert_abs_diff_eq!(partials[i], fd[i], epsilon = 1e-6);
            }
        }
    }
}
