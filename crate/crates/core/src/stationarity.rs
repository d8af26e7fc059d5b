//! Goldstein stationarity certificates.
//!
//! `‖∇F(x)‖_δ` is the smallest norm in the convex hull of gradients over the
//! ball `B(x, δ)`. Any finite set of points inside the ball therefore gives
//! an upper bound: the norm of their averaged gradient. Population gradients
//! are replaced by Monte-Carlo averages of the a.e. gradient over fresh data.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::StochasticObjective;
use crate::smoothing::{sample_unit_ball, VectorMoments};
use crate::vector::{dist, mean, norm, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    InnerAverage,
    BallSample,
}

/// Stochastic upper bound on a Goldstein gradient norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub value: f64,
    pub kind: CertificateKind,
    /// Number of points in the averaged set.
    pub n_points: usize,
    /// Data draws per point.
    pub n_mc: usize,
    /// Norm of the per-component standard errors of the averaged gradient.
    pub stderr: f64,
}

/// Averages `grad_ae` over `n_mc` fresh data draws at every point.
fn averaged_gradient<O, V>(f: &O, points: &[V], n_mc: usize, rng: &mut dyn RngCore) -> (ParamVector, f64)
where
    O: StochasticObjective,
    V: AsRef<[f64]>,
{
    let mut moments = VectorMoments::new(f.dim());
    for p in points {
        for _ in 0..n_mc {
            let z = f.sample_datum(rng);
            moments.push(&f.grad_ae(p.as_ref(), &z));
        }
    }
    let est = moments.finish();
    let se = if est.n_samples > 1 { norm(&est.stderr) } else { 0.0 };
    (est.mean, se)
}

/// Monte-Carlo population gradient `E_z[∇f(x, z)]` from `n_mc` draws.
pub fn population_gradient<O: StochasticObjective>(
    f: &O,
    x: &[f64],
    n_mc: usize,
    rng: &mut dyn RngCore,
) -> Result<ParamVector> {
    if n_mc == 0 {
        return Err(Error::invalid("n_mc must be >= 1"));
    }
    Ok(averaged_gradient(f, &[x], n_mc, rng).0)
}

/// `‖(1/T) Σ_t ĝ(w_t)‖` for the iterates of one epoch. Valid as a bound on
/// `‖∇F(w̄)‖_δ` only if every point lies within `δ` of their mean, which is
/// checked.
pub fn inner_average_certificate<O, V>(
    f: &O,
    points: &[V],
    delta: f64,
    n_mc: usize,
    rng: &mut dyn RngCore,
) -> Result<Certificate>
where
    O: StochasticObjective,
    V: AsRef<[f64]>,
{
    if points.is_empty() || n_mc == 0 {
        return Err(Error::invalid("need at least one point and n_mc >= 1"));
    }
    let centre = mean(points);
    let spread = points
        .iter()
        .map(|p| dist(p.as_ref(), &centre))
        .fold(0.0, f64::max);
    if spread > delta * (1.0 + 1e-9) {
        return Err(Error::invalid(format!(
            "points spread {spread} beyond radius {delta}; certificate would not bound the Goldstein norm"
        )));
    }
    let (g, stderr) = averaged_gradient(f, points, n_mc, rng);
    Ok(Certificate {
        value: norm(&g),
        kind: CertificateKind::InnerAverage,
        n_points: points.len(),
        n_mc,
        stderr,
    })
}

/// Averages gradients at `n_points` uniform samples of `B(x, δ)`: one member
/// of the family whose infimum defines `‖∇F(x)‖_δ`, hence an upper bound.
pub fn ball_sample_certificate<O: StochasticObjective>(
    f: &O,
    x: &[f64],
    delta: f64,
    n_points: usize,
    n_mc: usize,
    rng: &mut dyn RngCore,
) -> Result<Certificate> {
    if n_points == 0 || n_mc == 0 {
        return Err(Error::invalid("n_points and n_mc must be >= 1"));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("radius must be positive"));
    }
    let points = (0..n_points)
        .map(|_| {
            sample_unit_ball(x.len(), rng)
                .map(|v| x.iter().zip(&v).map(|(a, b)| a + delta * b).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let (g, stderr) = averaged_gradient(f, &points, n_mc, rng);
    Ok(Certificate { value: norm(&g), kind: CertificateKind::BallSample, n_points, n_mc, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_abs_sum, make_linear, make_quadratic, Regression, RegressionSpec};
    use crate::rng::seeded;

    #[test]
    fn linear_certificates_equal_coefficient_norm() {
        let f = make_linear(vec![3.0, 4.0]).unwrap();
        let pts = vec![vec![0.1, 0.1]; 5];
        let c = inner_average_certificate(&f, &pts, 0.1, 3, &mut seeded(0)).unwrap();
        assert!((c.value - 5.0).abs() < 1e-12);
        let c = ball_sample_certificate(&f, &[1.0, 2.0], 0.5, 7, 2, &mut seeded(1)).unwrap();
        assert!((c.value - 5.0).abs() < 1e-12);
        assert_eq!(c.kind, CertificateKind::BallSample);
    }

    #[test]
    fn alternating_gradients_cancel() {
        let f = make_abs_sum(1).unwrap();
        let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![if i % 2 == 0 { 0.01 } else { -0.01 }]).collect();
        let c = inner_average_certificate(&f, &pts, 0.05, 1, &mut seeded(0)).unwrap();
        assert!(c.value < 1e-15);
    }

    #[test]
    fn spread_beyond_radius_rejected() {
        let f = make_abs_sum(1).unwrap();
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            inner_average_certificate(&f, &pts, 0.1, 1, &mut seeded(0)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_point_ball_sample_is_point_gradient_norm() {
        let f = make_quadratic(3, 10.0).unwrap();
        let mut rng = seeded(4);
        let c = ball_sample_certificate(&f, &[1.0, 0.0, 0.0], 0.2, 1, 1, &mut rng).unwrap();
        // replay the single ball draw
        let mut replay = seeded(4);
        let v = sample_unit_ball(3, &mut replay).unwrap();
        let y: Vec<f64> = [1.0, 0.0, 0.0].iter().zip(&v).map(|(a, b)| a + 0.2 * b).collect();
        assert!((c.value - norm(&y)).abs() < 1e-15);
    }

    #[test]
    fn symmetric_kink_ball_certificate_vanishes() {
        // 1-d brute-force oracle: in B(0, δ) half the mass has gradient +1 and
        // half −1, so the average over n points has |mean| ~ 1/√n.
        let f = make_abs_sum(1).unwrap();
        let mut rng = seeded(6);
        let small = ball_sample_certificate(&f, &[0.0], 0.5, 40_000, 1, &mut rng).unwrap();
        assert!(small.value < 4.0 / 200.0, "{}", small.value);
        let coarse = ball_sample_certificate(&f, &[0.0], 0.5, 100, 1, &mut rng).unwrap();
        assert!(coarse.value <= 0.4);
    }

    #[test]
    fn capped_flat_region_certificate_vanishes() {
        // all data sit far inside the flat region at this point
        let spec = RegressionSpec { noise_std: 0.0, ..RegressionSpec::capped(3, 0.1) };
        let f = Regression::new(spec, vec![0.0; 3]).unwrap();
        // |⟨a, x⟩| > 0.1 for most a when ‖x‖ = 50; residual is exactly ⟨a, x⟩
        let pts = vec![vec![50.0, 0.0, 0.0]; 4];
        let mut rng = seeded(8);
        let coarse = inner_average_certificate(&f, &pts, 0.1, 100, &mut rng).unwrap();
        let fine = inner_average_certificate(&f, &pts, 0.1, 20_000, &mut rng).unwrap();
        assert!(coarse.value < 0.1);
        assert!(fine.value < 0.01);
    }

    #[test]
    fn quadratic_inner_average_tracks_mean_point() {
        let f = make_quadratic(2, 10.0).unwrap();
        let pts = vec![vec![0.01, 0.02], vec![0.03, -0.01], vec![0.02, 0.0]];
        let c = inner_average_certificate(&f, &pts, 0.1, 5, &mut seeded(0)).unwrap();
        assert!((c.value - norm(&mean(&pts))).abs() < 1e-12);
    }
}
