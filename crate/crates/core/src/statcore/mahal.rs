//! Regularized 3×3 covariance inverse and squared Mahalanobis distance.

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

const SYMMETRY_TOL: f64 = 1e-9;

fn check_symmetric(m: &Mat3) -> Result<()> {
    let scale = m
        .iter()
        .flatten()
        .fold(0.0_f64, |a, v| a.max(v.abs()))
        .max(1.0);
    for i in 0..3 {
        for j in (i + 1)..3 {
            if (m[i][j] - m[j][i]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::Domain(format!(
                    "matrix is not symmetric at ({i},{j}): {} vs {}",
                    m[i][j], m[j][i]
                )));
            }
        }
    }
    Ok(())
}

/// Cholesky factor `L` with `A = L Lᵀ`; fails when a pivot is not positive.
fn cholesky(a: &Mat3) -> Result<Mat3> {
    let scale = (0..3).map(|i| a[i][i].abs()).fold(0.0_f64, f64::max);
    let tiny = f64::EPSILON * 16.0 * scale.max(f64::MIN_POSITIVE);
    let mut l = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > tiny) {
            return Err(Error::Conditioning(format!(
                "regularized covariance is not positive definite (pivot {j} = {d:e})"
            )));
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in (j + 1)..3 {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / djj;
        }
    }
    Ok(l)
}

/// `(Γ + λI)⁻¹` through a Cholesky factorization.
pub fn regularized_inverse(gamma: &Mat3, lambda: f64) -> Result<Mat3> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    check_symmetric(gamma)?;
    let mut a = *gamma;
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += lambda;
    }
    let l = cholesky(&a)?;

    // Solve L Y = I, then Lᵀ X = Y, column by column.
    let mut inv = [[0.0; 3]; 3];
    for col in 0..3 {
        let mut y = [0.0; 3];
        for i in 0..3 {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[i][k] * y[k];
            }
            y[i] = s / l[i][i];
        }
        let mut x = [0.0; 3];
        for i in (0..3).rev() {
            let mut s = y[i];
            for k in (i + 1)..3 {
                s -= l[k][i] * x[k];
            }
            x[i] = s / l[i][i];
        }
        for i in 0..3 {
            inv[i][col] = x[i];
        }
    }
    // symmetrize away rounding asymmetry
    for i in 0..3 {
        for j in (i + 1)..3 {
            let v = 0.5 * (inv[i][j] + inv[j][i]);
            inv[i][j] = v;
            inv[j][i] = v;
        }
    }
    Ok(inv)
}

/// Healthy-state mean and covariance with the cached regularized inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    mu: Vec3,
    gamma: Mat3,
    lambda: f64,
    inv: Mat3,
}

impl CovarianceModel {
    pub fn new(mu: Vec3, gamma: Mat3, lambda: f64) -> Result<Self> {
        let inv = regularized_inverse(&gamma, lambda)?;
        Ok(Self {
            mu,
            gamma,
            lambda,
            inv,
        })
    }

    pub fn mu(&self) -> &Vec3 {
        &self.mu
    }

    pub fn gamma(&self) -> &Mat3 {
        &self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma_lambda_inv(&self) -> &Mat3 {
        &self.inv
    }
}

/// `D² = (g − μ)ᵀ Γ_λ⁻¹ (g − μ)`, clamped at zero against rounding.
pub fn mahalanobis_sq(g: &Vec3, model: &CovarianceModel) -> f64 {
    let d = [g[0] - model.mu[0], g[1] - model.mu[1], g[2] - model.mu[2]];
    let inv = &model.inv;
    let mut acc = 0.0;
    for i in 0..3 {
        let row = inv[i][0] * d[0] + inv[i][1] * d[1] + inv[i][2] * d[2];
        acc += d[i] * row;
    }
    acc.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const I3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
        let mut c = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    }

    fn transpose(a: &Mat3) -> Mat3 {
        let mut t = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] = a[j][i];
            }
        }
        t
    }

    fn max_abs_diff(a: &Mat3, b: &Mat3) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((a[i][j] - b[i][j]).abs());
            }
        }
        m
    }

    #[test]
    fn diagonal_cases() {
        let inv = regularized_inverse(&I3, 0.1).unwrap();
        for i in 0..3 {
            assert!((inv[i][i] - 1.0 / 1.1).abs() < 1e-15);
        }
        let inv = regularized_inverse(&[[0.0; 3]; 3], 1.0).unwrap();
        assert!(max_abs_diff(&inv, &I3) < 1e-15);
        let d = [[2.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 4.0]];
        let inv = regularized_inverse(&d, 0.0).unwrap();
        assert!((inv[0][0] - 0.5).abs() < 1e-15);
        assert!((inv[1][1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((inv[2][2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn singular_without_regularization() {
        let rank1 = [[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]];
        assert!(matches!(
            regularized_inverse(&rank1, 0.0),
            Err(Error::Conditioning(_))
        ));
        assert!(regularized_inverse(&rank1, 1e-3).is_ok());
    }

    #[test]
    fn mahalanobis_examples() {
        let m = CovarianceModel::new([1.0, 2.0, 3.0], I3, 0.0).unwrap();
        assert_eq!(mahalanobis_sq(&[1.0, 2.0, 3.0], &m), 0.0);
        let m = CovarianceModel::new([0.0; 3], I3, 0.0).unwrap();
        assert!((mahalanobis_sq(&[1.0, 2.0, 2.0], &m) - 9.0).abs() < 1e-12);
        let m = CovarianceModel::new([0.0; 3], I3, 0.1).unwrap();
        assert!((mahalanobis_sq(&[1.0, 1.0, 1.0], &m) - 3.0 / 1.1).abs() < 1e-9);
    }

    fn rotation(axis: [f64; 3], angle: f64) -> Mat3 {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    }

    fn spd_from(raw: [f64; 9], ridge: f64) -> Mat3 {
        let a = [
            [raw[0], raw[1], raw[2]],
            [raw[3], raw[4], raw[5]],
            [raw[6], raw[7], raw[8]],
        ];
        let mut g = matmul(&a, &transpose(&a));
        for (i, row) in g.iter_mut().enumerate() {
            row[i] += ridge;
        }
        g
    }

    proptest! {
        #[test]
        fn inverse_residual_small(raw in prop::array::uniform9(-3.0f64..3.0), lambda in 0.0f64..2.0) {
            let g = spd_from(raw, 0.5);
            let inv = regularized_inverse(&g, lambda).unwrap();
            let mut reg = g;
            for (i, row) in reg.iter_mut().enumerate() { row[i] += lambda; }
            let prod = matmul(&reg, &inv);
            prop_assert!(max_abs_diff(&prod, &I3) <= 1e-9);
        }

        #[test]
        fn rotation_invariance(
            raw in prop::array::uniform9(-2.0f64..2.0),
            axis in prop::array::uniform3(0.1f64..1.0),
            angle in -3.0f64..3.0,
            g in prop::array::uniform3(-5.0f64..5.0),
            mu in prop::array::uniform3(-5.0f64..5.0),
        ) {
            let gamma = spd_from(raw, 0.3);
            let base = mahalanobis_sq(&g, &CovarianceModel::new(mu, gamma, 0.0).unwrap());
            let r = rotation(axis, angle);
            let rv = |v: &Vec3| -> Vec3 {
                [0, 1, 2].map(|i| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2])
            };
            let rg = matmul(&matmul(&r, &gamma), &transpose(&r));
            let rotated = mahalanobis_sq(&rv(&g), &CovarianceModel::new(rv(&mu), rg, 0.0).unwrap());
            prop_assert!((base - rotated).abs() <= 1e-8 * base.max(1.0));
        }
    }
}
