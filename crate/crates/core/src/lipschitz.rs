//! Global and box-local Lipschitz constants of the score function.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{sinusoid, KernelKind, KernelSpec, LineParams, Point, PointCloud, ScoreConfig};

/// Axis-aligned box `[r_lo, r_hi] x [theta_lo, theta_hi]` in line space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub r_lo: f64,
    pub r_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl ParamBox {
    pub fn new(r_lo: f64, r_hi: f64, theta_lo: f64, theta_hi: f64) -> Result<Self> {
        let finite = [r_lo, r_hi, theta_lo, theta_hi].iter().all(|v| v.is_finite());
        if !finite || r_lo >= r_hi || theta_lo >= theta_hi || theta_lo < 0.0 || theta_hi > PI {
            return invalid(format!("degenerate parameter box [{r_lo}, {r_hi}] x [{theta_lo}, {theta_hi}]"));
        }
        Ok(Self { r_lo, r_hi, theta_lo, theta_hi })
    }

    /// The full strip `[-r0, r0] x [0, pi]`.
    pub fn strip(r0: f64) -> Result<Self> {
        Self::new(-r0, r0, 0.0, PI)
    }

    pub fn width(&self) -> f64 {
        self.r_hi - self.r_lo
    }

    pub fn height(&self) -> f64 {
        self.theta_hi - self.theta_lo
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn midpoint(&self) -> LineParams {
        LineParams::new(0.5 * (self.r_lo + self.r_hi), 0.5 * (self.theta_lo + self.theta_hi))
    }

    pub fn contains(&self, q: LineParams) -> bool {
        (self.r_lo..=self.r_hi).contains(&q.r) && (self.theta_lo..=self.theta_hi).contains(&q.theta)
    }

    pub fn contains_box(&self, other: &ParamBox) -> bool {
        self.r_lo <= other.r_lo
            && other.r_hi <= self.r_hi
            && self.theta_lo <= other.theta_lo
            && other.theta_hi <= self.theta_hi
    }

    /// Four congruent children, ordered `(lo r, lo theta)`, `(hi r, lo theta)`,
    /// `(lo r, hi theta)`, `(hi r, hi theta)`.
    pub fn split(&self) -> [ParamBox; 4] {
        let rm = 0.5 * (self.r_lo + self.r_hi);
        let tm = 0.5 * (self.theta_lo + self.theta_hi);
        [
            ParamBox { r_lo: self.r_lo, r_hi: rm, theta_lo: self.theta_lo, theta_hi: tm },
            ParamBox { r_lo: rm, r_hi: self.r_hi, theta_lo: self.theta_lo, theta_hi: tm },
            ParamBox { r_lo: self.r_lo, r_hi: rm, theta_lo: tm, theta_hi: self.theta_hi },
            ParamBox { r_lo: rm, r_hi: self.r_hi, theta_lo: tm, theta_hi: self.theta_hi },
        ]
    }
}

/// Lipschitz constant of the mean-normalized score for points within
/// distance `radius` of the origin: `lambda_kappa * sqrt(1 + radius^2)`.
pub fn global_lipschitz(k: KernelSpec, radius: f64) -> f64 {
    k.lipschitz() * (1.0 + radius * radius).sqrt()
}

/// Lipschitz constant of the kernel restricted to `[delta, inf)`.
pub fn kernel_tail_lipschitz(k: KernelSpec, delta: f64) -> f64 {
    let sigma = k.sigma;
    match k.kind {
        KernelKind::Hat => {
            if delta <= sigma {
                1.0 / sigma
            } else {
                0.0
            }
        }
        KernelKind::Rbf => {
            if delta <= sigma {
                k.lipschitz()
            } else {
                delta / (sigma * sigma) * (-(delta * delta) / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

/// Range `[min, max]` of the dual curve `theta -> x cos(theta) + y sin(theta)`
/// over `[theta_lo, theta_hi]`.
///
/// The curve is `|p| cos(theta - phi)`; its extrema sit at `phi + k pi`, so
/// it is monotone between the endpoints and at most two interior critical
/// angles.
pub fn curve_range(p: Point, theta_lo: f64, theta_hi: f64) -> (f64, f64) {
    let a = sinusoid(p, theta_lo);
    let b = sinusoid(p, theta_hi);
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    if p.x == 0.0 && p.y == 0.0 {
        return (lo, hi);
    }
    let phi = p.y.atan2(p.x);
    let rho = p.norm();
    for k in -1..=2 {
        let t = phi + k as f64 * PI;
        if t > theta_lo && t < theta_hi {
            // cos(k pi) = +-1
            let v = if k % 2 == 0 { rho } else { -rho };
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// Smallest `|r - f_p(theta)|` over the box, i.e. the smallest distance
/// between `p` and any line in the box. Zero iff the dual curve of `p`
/// enters the closed box.
pub fn vertical_distance(b: &ParamBox, p: Point) -> f64 {
    let (lo, hi) = curve_range(p, b.theta_lo, b.theta_hi);
    (b.r_lo - hi).max(lo - b.r_hi).max(0.0)
}

/// Box-local Lipschitz constant `c * sqrt(2) * sum_p tail(vertical_distance(B, p))`
/// with `c = 1/|P|` in mean mode and `c = 1` in sum mode.
pub fn local_lipschitz(b: &ParamBox, cloud: &PointCloud, cfg: &ScoreConfig) -> f64 {
    local_lipschitz_points(b, cloud.points(), cfg)
}

pub(crate) fn local_lipschitz_points(b: &ParamBox, points: &[Point], cfg: &ScoreConfig) -> f64 {
    let k = cfg.kernel;
    let total: f64 = match k.kind {
        // hat tails are a step function, so count curves within reach
        KernelKind::Hat => {
            let near = points.iter().filter(|&&p| vertical_distance(b, p) <= k.sigma).count();
            near as f64 / k.sigma
        }
        KernelKind::Rbf => points.iter().map(|&p| kernel_tail_lipschitz(k, vertical_distance(b, p))).sum(),
    };
    std::f64::consts::SQRT_2 * total * cfg.weight(points.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{score, NormalizationMode};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bx(r_lo: f64, r_hi: f64, t_lo: f64, t_hi: f64) -> ParamBox {
        ParamBox::new(r_lo, r_hi, t_lo, t_hi).unwrap()
    }

    /// Dense sampling of the dual curve against the box.
    fn sampled_vertical_distance(b: &ParamBox, p: Point, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| {
                let t = b.theta_lo + (b.theta_hi - b.theta_lo) * i as f64 / samples as f64;
                let v = sinusoid(p, t);
                (b.r_lo - v).max(v - b.r_hi).max(0.0)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn box_validation() {
        assert!(ParamBox::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(ParamBox::new(0.0, 1.0, 0.5, 0.5).is_err());
        assert!(ParamBox::new(0.0, 1.0, -0.1, 1.0).is_err());
        assert!(ParamBox::new(0.0, 1.0, 0.0, 3.5).is_err());
        let b = bx(0.0, 3.0, 0.0, 4.0f64.min(PI));
        assert!(b.diameter() > 0.0);
        let kids = b.split();
        let area: f64 = kids.iter().map(|k| k.area()).sum();
        assert_abs_diff_eq!(area, b.area(), epsilon = 1e-12);
    }

    #[test]
    fn global_examples() {
        let hat = KernelSpec::hat(1.0).unwrap();
        let rbf = KernelSpec::rbf(1.0).unwrap();
        assert_abs_diff_eq!(global_lipschitz(hat, 1.0), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(global_lipschitz(hat, 0.0), 1.0);
        assert_abs_diff_eq!(global_lipschitz(rbf, 1.0), 0.8577638849607068, epsilon = 1e-12);
    }

    #[test]
    fn tail_examples() {
        let hat = KernelSpec::hat(1.0).unwrap();
        let rbf = KernelSpec::rbf(1.0).unwrap();
        assert_eq!(kernel_tail_lipschitz(hat, 0.5), 1.0);
        assert_eq!(kernel_tail_lipschitz(hat, 1.5), 0.0);
        assert_abs_diff_eq!(kernel_tail_lipschitz(rbf, 2.0), 2.0 * (-2.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(kernel_tail_lipschitz(rbf, 0.2), rbf.lipschitz(), epsilon = 1e-15);
    }

    #[test]
    fn tail_matches_numeric_slope_bound() {
        // max |kappa'| on [delta, inf) by dense sampling of the derivative
        let rbf = KernelSpec::rbf(0.7).unwrap();
        for delta in [0.0, 0.3, 0.7, 1.0, 2.0, 3.5] {
            let h = 1e-6;
            let numeric = (0..20000)
                .map(|i| delta + i as f64 * 5e-4)
                .map(|x| ((rbf.eval(x + h).unwrap() - rbf.eval(x).unwrap()) / h).abs())
                .fold(0.0, f64::max);
            let bound = kernel_tail_lipschitz(rbf, delta);
            assert!(numeric <= bound * (1.0 + 1e-4), "delta {delta}: {numeric} > {bound}");
            assert!(numeric >= bound * (1.0 - 1e-2), "delta {delta}: bound not tight");
        }
    }

    #[test]
    fn vertical_distance_examples() {
        let b = bx(0.5, 1.0, 0.0, PI / 2.0);
        assert_eq!(vertical_distance(&b, Point::new(0.0, 0.0)), 0.5);
        assert_eq!(vertical_distance(&b, Point::new(1.0, 0.0)), 0.0);
        let far = bx(2.0, 3.0, 0.0, PI);
        let d = vertical_distance(&far, Point::new(1.0, 0.0));
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d, sampled_vertical_distance(&far, Point::new(1.0, 0.0), 100_000), epsilon = 1e-9);
    }

    #[test]
    fn local_examples() {
        let hat = KernelSpec::hat(0.1).unwrap();
        let cfg = ScoreConfig::mean(hat);
        let cloud = PointCloud::from_normalized(vec![
            Point::new(0.0, 0.0),
            Point::new(0.1, 0.0),
            Point::new(0.0, -0.1),
            Point::new(0.05, 0.05),
        ])
        .unwrap();
        // every curve stays within |r| <= 0.15, far from r in [0.8, 0.9]
        assert_eq!(local_lipschitz(&bx(0.8, 0.9, 0.0, PI), &cloud, &cfg), 0.0);
        // a box around r = 0 sees all of them
        let all = local_lipschitz(&bx(-0.01, 0.01, 0.0, PI), &cloud, &cfg);
        assert_abs_diff_eq!(all, 2f64.sqrt() / 0.1, epsilon = 1e-12);

        let one_near = PointCloud::from_normalized(vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 0.0),
            Point::new(0.0, 0.0),
            Point::new(0.9, 0.0),
        ])
        .unwrap();
        let hat1 = ScoreConfig::mean(KernelSpec::hat(1.0).unwrap());
        // curve of (0.9, 0) is 0.9 cos(theta), reaching r = 2.3 within distance 1.4 > sigma
        let b = bx(1.5, 2.0, 0.0, 0.2);
        assert_abs_diff_eq!(local_lipschitz(&b, &one_near, &hat1), 2f64.sqrt() / 4.0, epsilon = 1e-12);

        let sum = ScoreConfig::new(KernelSpec::hat(1.0).unwrap(), NormalizationMode::Sum);
        assert_abs_diff_eq!(local_lipschitz(&b, &one_near, &sum), 2f64.sqrt(), epsilon = 1e-12);
    }

    fn cloud_strategy() -> impl Strategy<Value = PointCloud> {
        proptest::collection::vec((0.0..1.0f64, 0.0..(2.0 * PI)), 1..15).prop_map(|v| {
            PointCloud::from_normalized(
                v.into_iter().map(|(m, a)| Point::new(m * a.cos(), m * a.sin())).collect(),
            )
            .unwrap()
        })
    }

    fn box_strategy() -> impl Strategy<Value = ParamBox> {
        (-1.5..1.5f64, 0.001..0.8f64, 0.0..(PI - 0.01), 0.001..1.0f64)
            .prop_map(|(r, w, t, h)| ParamBox::new(r, r + w, t, (t + h).min(PI)).unwrap())
    }

    proptest! {
        #[test]
        fn vertical_distance_matches_dense_sampling(b in box_strategy(), m in 0.0..1.0f64, a in 0.0..(2.0 * PI)) {
            let p = Point::new(m * a.cos(), m * a.sin());
            let exact = vertical_distance(&b, p);
            let sampled = sampled_vertical_distance(&b, p, 20_000);
            // sampling can only overestimate; its error is bounded by the curve slope times the step
            prop_assert!(exact <= sampled + 1e-12);
            let step_err = m * b.height() / 20_000.0 + 1e-12;
            prop_assert!(sampled - exact <= step_err);
            // zero iff the sampled curve enters the box (up to one sampling step)
            prop_assert!(exact > 0.0 || sampled <= step_err);
            prop_assert!(sampled > 0.0 || exact == 0.0);
        }

        #[test]
        fn local_bound_is_sound(cloud in cloud_strategy(), b in box_strategy(), sigma in 0.05..0.8f64,
                                samples in proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64), 10)) {
            for k in [KernelSpec::hat(sigma).unwrap(), KernelSpec::rbf(sigma).unwrap()] {
                let cfg = ScoreConfig::mean(k);
                let lam = local_lipschitz(&b, &cloud, &cfg);
                prop_assert!(lam <= global_lipschitz(k, 1.0) * (1.0 + 1e-12));
                for &(a, c, d, e) in &samples {
                    let u = LineParams::new(b.r_lo + a * b.width(), b.theta_lo + c * b.height());
                    let v = LineParams::new(b.r_lo + d * b.width(), b.theta_lo + e * b.height());
                    let diff = (score(&cloud, u, &cfg).unwrap() - score(&cloud, v, &cfg).unwrap()).abs();
                    let dist = (u.r - v.r).hypot(u.theta - v.theta);
                    prop_assert!(diff <= lam * dist + 1e-12, "{} > {} * {}", diff, lam, dist);
                }
            }
        }

        #[test]
        fn local_bound_is_monotone_under_inclusion(cloud in cloud_strategy(), b in box_strategy(), sigma in 0.05..0.8f64, q in 0usize..4) {
            let child = b.split()[q];
            for k in [KernelSpec::hat(sigma).unwrap(), KernelSpec::rbf(sigma).unwrap()] {
                let cfg = ScoreConfig::mean(k);
                prop_assert!(local_lipschitz(&child, &cloud, &cfg) <= local_lipschitz(&b, &cloud, &cfg) + 1e-15);
            }
        }
    }
}
