//! Directional statistics: angular variance and the spherical scatter
//! matrix of incident directions.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// One minus the length of the mean unit vector of `angles` (degrees).
pub fn angular_variance(angles: &[f64]) -> Option<f64> {
    if angles.is_empty() {
        return None;
    }
    let n = angles.len() as f64;
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| {
        let r = a.to_radians();
        (s + r.sin(), c + r.cos())
    });
    let resultant = (c / n).hypot(s / n);
    Some((1.0 - resultant).clamp(0.0, 1.0))
}

/// Unit incident direction for impact angle `alpha` and orientation `beta`
/// (radians).
pub fn incident_vector(alpha: f64, beta: f64) -> [f64; 3] {
    [
        -alpha.cos() * beta.cos(),
        -alpha.cos() * beta.sin(),
        alpha.sin(),
    ]
}

/// Eigen-summary of `T = Σ m mᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterSummary {
    /// Descending, clamped to be non-negative.
    pub eigenvalues: [f64; 3],
    /// `t2 / t3`; `None` when `t3` vanishes.
    pub spheri_ratio: Option<f64>,
    /// `t1 / t2`; `None` when `t2` vanishes.
    pub axial_ratio: Option<f64>,
    pub spheri_det: f64,
}

pub fn scatter_matrix(vectors: &[[f64; 3]]) -> Matrix3<f64> {
    vectors.iter().fold(Matrix3::zeros(), |acc, m| {
        let v = Vector3::from(*m);
        acc + v * v.transpose()
    })
}

/// Relative size below which an eigenvalue counts as zero.
const RANK_TOL: f64 = 1e-12;

pub fn scatter_summary(vectors: &[[f64; 3]]) -> Option<ScatterSummary> {
    if vectors.is_empty() {
        return None;
    }
    let t = scatter_matrix(vectors);
    let eig = t.symmetric_eigen();
    let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    ev.sort_by(|a, b| b.total_cmp(a));
    let trace = t.trace();
    for e in ev.iter_mut() {
        if *e < RANK_TOL * trace {
            *e = 0.0;
        }
    }
    let ratio = |num: f64, den: f64| (den > 0.0).then(|| num / den);
    Some(ScatterSummary {
        eigenvalues: ev,
        spheri_ratio: ratio(ev[1], ev[2]),
        axial_ratio: ratio(ev[0], ev[1]),
        spheri_det: t.determinant(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_variance_examples() {
        assert_eq!(angular_variance(&[37.0, 37.0, 37.0]).unwrap(), 0.0);
        assert!((angular_variance(&[0.0, 180.0]).unwrap() - 1.0).abs() < 1e-15);
        let v = angular_variance(&[10.0, 350.0]).unwrap();
        assert!((v - (1.0 - 10f64.to_radians().cos())).abs() < 1e-12);
        assert!((v - 0.015192246987791869).abs() < 1e-12);
        assert_eq!(angular_variance(&[]), None);
    }

    #[test]
    fn angular_variance_shift_invariant() {
        let a = [12.0, 80.0, 200.0, 310.0];
        let shifted: Vec<f64> = a.iter().map(|x| x + 73.0).collect();
        assert!(
            (angular_variance(&a).unwrap() - angular_variance(&shifted).unwrap()).abs() < 1e-12
        );
    }

    #[test]
    fn incident_vector_examples() {
        let up = incident_vector(std::f64::consts::FRAC_PI_2, 0.7);
        assert!(up[0].abs() < 1e-16 && up[1].abs() < 1e-16 && up[2] == 1.0);
        assert_eq!(incident_vector(0.0, 0.0), [-1.0, -0.0, 0.0]);
        let m = incident_vector(0.3, -1.1);
        assert!((m.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scatter_examples() {
        let s = scatter_summary(&[[0.0, 0.0, 1.0]; 4]).unwrap();
        assert!((s.eigenvalues[0] - 4.0).abs() < 1e-12);
        assert_eq!(s.eigenvalues[1], 0.0);
        assert_eq!(s.eigenvalues[2], 0.0);
        assert_eq!(s.spheri_det, 0.0);
        assert_eq!(s.spheri_ratio, None);

        let s = scatter_summary(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(s.eigenvalues, [1.0, 1.0, 1.0]);
        assert_eq!(s.spheri_ratio, Some(1.0));
        assert_eq!(s.spheri_det, 1.0);

        assert!(scatter_summary(&[]).is_none());
    }
}
