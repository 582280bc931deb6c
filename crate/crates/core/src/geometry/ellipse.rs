//! Direct least-squares ellipse fitting.
//!
//! Fits the conic `a x^2 + b xy + c y^2 + d x + e y + f = 0` under the
//! ellipse constraint `4ac - b^2 = 1`, which turns the problem into a small
//! generalized eigenproblem whose admissible solution is always an ellipse.
//! The solve uses the numerically stable partitioned form: the 6x6 scatter
//! matrix is split into quadratic/linear blocks and reduced to a 3x3
//! eigenproblem, and input points are first shifted to their centroid and
//! rescaled so the mean radius is sqrt(2). Without that normalization the
//! scatter matrix of millimetre-scale coordinates is hopelessly
//! ill-conditioned.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::angle::normalize_degrees;
use crate::error::{Error, Result};

const MIN_POINTS: usize = 6;

/// A fitted ellipse in both parametric and conic form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseFit {
    pub cx: f64,
    pub cy: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Long-axis direction in degrees, reduced modulo 180 into `[-90, 90)`.
    pub orientation_deg: f64,
    /// Conic coefficients `[a, b, c, d, e, f]`, scaled so that the
    /// quadratic form equals 1 on the ellipse (constant term relative to
    /// the center is -1).
    pub conic: [f64; 6],
}

impl EllipseFit {
    /// Unit vector along the long axis.
    pub fn axis_dir(&self) -> (f64, f64) {
        let r = self.orientation_deg.to_radians();
        (r.cos(), r.sin())
    }

    /// Evaluate the normalized conic; zero on the ellipse, negative inside.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let [a, b, c, d, e, f] = self.conic;
        a * x * x + b * x * y + c * y * y + d * x + e * y + f
    }
}

/// Fit an ellipse to 2D points (millimetres). Needs at least 6 points in
/// general position; collinear or otherwise degenerate input is rejected
/// rather than returning a garbage conic.
pub fn fit_ellipse_direct(points: &[(f64, f64)]) -> Result<EllipseFit> {
    if points.len() < MIN_POINTS {
        return Err(Error::TooFewEllipsePoints {
            got: points.len(),
            need: MIN_POINTS,
        });
    }

    // Shift to the centroid and scale mean radius to sqrt(2).
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.0, sy + p.1));
    let (mx, my) = (mx / n, my / n);
    let mean_r = points
        .iter()
        .map(|p| (p.0 - mx).hypot(p.1 - my))
        .sum::<f64>()
        / n;
    if mean_r <= f64::EPSILON {
        return Err(Error::DegenerateEllipse("all points coincide"));
    }
    let s = std::f64::consts::SQRT_2 / mean_r;

    // Scatter blocks: S1 over [x^2, xy, y^2], S3 over [x, y, 1].
    let mut s1 = Matrix3::zeros();
    let mut s2 = Matrix3::zeros();
    let mut s3 = Matrix3::zeros();
    for p in points {
        let x = (p.0 - mx) * s;
        let y = (p.1 - my) * s;
        let q = Vector3::new(x * x, x * y, y * y);
        let l = Vector3::new(x, y, 1.0);
        s1 += q * q.transpose();
        s2 += q * l.transpose();
        s3 += l * l.transpose();
    }

    let s3_inv = s3
        .try_inverse()
        .ok_or(Error::DegenerateEllipse("linear scatter block is singular"))?;
    // a2 = t * a1 recovers the linear coefficients from the quadratic ones.
    let t = -s3_inv * s2.transpose();
    let reduced = s1 + s2 * t;
    // Premultiply by the inverse of the constraint matrix
    // C = [[0,0,2],[0,-1,0],[2,0,0]].
    let m = Matrix3::from_rows(&[
        (reduced.row(2) / 2.0).into_owned(),
        (-reduced.row(1)).into_owned(),
        (reduced.row(0) / 2.0).into_owned(),
    ]);

    let eigvals = m.complex_eigenvalues();
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for ev in eigvals.iter() {
        if ev.im.abs() > 1e-6 * (1.0 + ev.re.abs()) {
            continue;
        }
        let Some(a1) = null_vector(&(m - Matrix3::identity() * ev.re)) else {
            continue;
        };
        // The admissible solution satisfies 4ac - b^2 > 0.
        let disc = 4.0 * a1.x * a1.z - a1.y * a1.y;
        if disc <= 0.0 {
            continue;
        }
        let a2 = t * a1;
        let residual = (a1.transpose() * s1 * a1
            + 2.0 * a1.transpose() * s2 * a2
            + a2.transpose() * s3 * a2)[(0, 0)]
            / disc;
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, a1));
        }
    }
    let (_, a1) = best.ok_or(Error::DegenerateEllipse("no elliptical solution"))?;
    let a2 = t * a1;

    // Undo the normalization: substitute x -> s(x - mx), y -> s(y - my).
    let (pa, pb, pc) = (a1.x * s * s, a1.y * s * s, a1.z * s * s);
    let (pd0, pe0, pf0) = (a2.x * s, a2.y * s, a2.z);
    let a = pa;
    let b = pb;
    let c = pc;
    let d = -2.0 * pa * mx - pb * my + pd0;
    let e = -pb * mx - 2.0 * pc * my + pe0;
    let f = pa * mx * mx + pb * mx * my + pc * my * my - pd0 * mx - pe0 * my + pf0;

    conic_to_ellipse([a, b, c, d, e, f])
}

/// Null vector of a (near) rank-2 matrix via the largest row cross product.
fn null_vector(m: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let r0 = Vector3::new(m[(0, 0)], m[(0, 1)], m[(0, 2)]);
    let r1 = Vector3::new(m[(1, 0)], m[(1, 1)], m[(1, 2)]);
    let r2 = Vector3::new(m[(2, 0)], m[(2, 1)], m[(2, 2)]);
    let candidates = [r0.cross(&r1), r0.cross(&r2), r1.cross(&r2)];
    let best = candidates
        .iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
    let scale = [r0.norm(), r1.norm(), r2.norm()]
        .into_iter()
        .fold(0.0f64, f64::max)
        .max(f64::EPSILON);
    if best.norm() <= 1e-12 * scale * scale {
        return None;
    }
    Some(best / best.norm())
}

fn conic_to_ellipse(conic: [f64; 6]) -> Result<EllipseFit> {
    let [a, b, c, d, e, f] = conic;
    let det = 4.0 * a * c - b * b;
    if det <= 0.0 {
        return Err(Error::DegenerateEllipse("conic is not an ellipse"));
    }
    let center = Matrix2::new(2.0 * a, b, b, 2.0 * c)
        .try_inverse()
        .ok_or(Error::DegenerateEllipse("conic center is undefined"))?
        * Vector2::new(-d, -e);
    let (cx, cy) = (center.x, center.y);
    let f0 = a * cx * cx + b * cx * cy + c * cy * cy + d * cx + e * cy + f;
    if f0.abs() <= f64::EPSILON || -f0 / a <= 0.0 {
        return Err(Error::DegenerateEllipse("degenerate (point or imaginary) ellipse"));
    }

    let eig = SymmetricEigen::new(Matrix2::new(a, b / 2.0, b / 2.0, c));
    // Semi-axis along each principal direction is sqrt(-f0 / lambda); the
    // long axis belongs to the smaller eigenvalue.
    let (li, si) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let major_sq = -f0 / eig.eigenvalues[li];
    let minor_sq = -f0 / eig.eigenvalues[si];
    if !(major_sq > 0.0 && minor_sq > 0.0) {
        return Err(Error::DegenerateEllipse("degenerate (point or imaginary) ellipse"));
    }
    let axis = eig.eigenvectors.column(li);
    let mut orientation = normalize_degrees(axis.y.atan2(axis.x).to_degrees());
    if orientation >= 90.0 {
        orientation -= 180.0;
    } else if orientation < -90.0 {
        orientation += 180.0;
    }

    // Rescale the conic so the centered quadratic form equals 1 on the
    // ellipse; eval() is then comparable across fits.
    let k = -1.0 / f0;
    Ok(EllipseFit {
        cx,
        cy,
        semi_major: major_sq.sqrt(),
        semi_minor: minor_sq.sqrt(),
        orientation_deg: orientation,
        conic: [a * k, b * k, c * k, d * k, e * k, f * k],
    })
}

#[cfg(test)]
pub(crate) fn sample_ellipse(
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    orientation_deg: f64,
    n: usize,
) -> Vec<(f64, f64)> {
    let th = orientation_deg.to_radians();
    (0..n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let (u, v) = (a * t.cos(), b * t.sin());
            (
                cx + u * th.cos() - v * th.sin(),
                cy + u * th.sin() + v * th.cos(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orientation_err(fit: f64, truth: f64) -> f64 {
        let d = (fit - truth).rem_euclid(180.0);
        d.min(180.0 - d)
    }

    #[test]
    fn recovers_exact_ellipses() {
        for &(cx, cy, a, b, th) in &[
            (0.0, 0.0, 200.0, 120.0, 0.0),
            (50.0, -30.0, 220.0, 110.0, 30.0),
            (-400.0, 900.0, 180.0, 90.0, -60.0),
            (3.0, 4.0, 300.0, 299.0, 85.0),
            (1e6, -1e6, 250.0, 100.0, 45.0),
        ] {
            let pts = sample_ellipse(cx, cy, a, b, th, 64);
            let fit = fit_ellipse_direct(&pts).unwrap();
            assert_relative_eq!(fit.cx, cx, epsilon = 1e-6, max_relative = 1e-9);
            assert_relative_eq!(fit.cy, cy, epsilon = 1e-6, max_relative = 1e-9);
            assert_relative_eq!(fit.semi_major, a, max_relative = 1e-7);
            assert_relative_eq!(fit.semi_minor, b, max_relative = 1e-7);
            assert!(
                orientation_err(fit.orientation_deg, th) < 1e-6,
                "orientation {} vs {}",
                fit.orientation_deg,
                th
            );
        }
    }

    #[test]
    fn conic_residual_vanishes_on_the_ellipse() {
        let pts = sample_ellipse(120.0, -80.0, 210.0, 140.0, 25.0, 48);
        let fit = fit_ellipse_direct(&pts).unwrap();
        for (x, y) in &pts {
            assert!(fit.eval(*x, *y).abs() < 1e-6, "residual {}", fit.eval(*x, *y));
        }
        // Center is inside, far away is outside.
        assert!(fit.eval(fit.cx, fit.cy) < 0.0);
        assert!(fit.eval(fit.cx + 10_000.0, fit.cy) > 0.0);
    }

    #[test]
    fn tolerates_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pts = sample_ellipse(0.0, 0.0, 200.0, 120.0, 40.0, 200);
        for p in &mut pts {
            p.0 += rng.random_range(-5.0..5.0);
            p.1 += rng.random_range(-5.0..5.0);
        }
        let fit = fit_ellipse_direct(&pts).unwrap();
        assert!(orientation_err(fit.orientation_deg, 40.0) < 2.0);
        assert!((fit.semi_major - 200.0).abs() / 200.0 < 0.05);
        assert!((fit.semi_minor - 120.0).abs() / 120.0 < 0.05);
    }

    #[test]
    fn fits_a_circle_without_failing() {
        let pts = sample_ellipse(10.0, 20.0, 150.0, 150.0, 0.0, 40);
        let fit = fit_ellipse_direct(&pts).unwrap();
        assert_relative_eq!(fit.semi_major, 150.0, max_relative = 1e-6);
        assert_relative_eq!(fit.semi_minor, 150.0, max_relative = 1e-6);
        assert_relative_eq!(fit.cx, 10.0, epsilon = 1e-6);
    }

    #[test]
    fn partial_arc_still_fits() {
        // Quarter arc only.
        let pts: Vec<(f64, f64)> = (0..32)
            .map(|i| {
                let t = 0.5 * std::f64::consts::PI * i as f64 / 31.0;
                (200.0 * t.cos(), 120.0 * t.sin())
            })
            .collect();
        let fit = fit_ellipse_direct(&pts).unwrap();
        assert!(orientation_err(fit.orientation_deg, 0.0) < 1.0);
        assert!((fit.semi_major - 200.0).abs() < 2.0);
    }

    #[test]
    fn rejects_too_few_points() {
        let pts = sample_ellipse(0.0, 0.0, 100.0, 60.0, 0.0, 5);
        assert!(matches!(
            fit_ellipse_direct(&pts),
            Err(Error::TooFewEllipsePoints { got: 5, need: 6 })
        ));
    }

    #[test]
    fn rejects_collinear_points() {
        let pts: Vec<(f64, f64)> = (0..20).map(|i| (i as f64 * 10.0, 5.0 + i as f64 * 3.0)).collect();
        assert!(fit_ellipse_direct(&pts).is_err());
    }

    #[test]
    fn rejects_coincident_points() {
        let pts = vec![(3.0, 4.0); 12];
        assert!(matches!(
            fit_ellipse_direct(&pts),
            Err(Error::DegenerateEllipse(_))
        ));
    }

    #[test]
    fn random_ellipses_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for _ in 0..50 {
            let cx = rng.random_range(-2000.0..2000.0);
            let cy = rng.random_range(-2000.0..2000.0);
            let a = rng.random_range(120.0..400.0);
            let b = rng.random_range(60.0..a - 20.0);
            let th = rng.random_range(-90.0..90.0);
            let pts = sample_ellipse(cx, cy, a, b, th, 100);
            let fit = fit_ellipse_direct(&pts).unwrap();
            assert!(orientation_err(fit.orientation_deg, th) < 1e-5);
            assert_relative_eq!(fit.semi_major, a, max_relative = 1e-6);
            assert_relative_eq!(fit.semi_minor, b, max_relative = 1e-6);
        }
    }
}
