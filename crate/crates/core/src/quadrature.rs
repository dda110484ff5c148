//! Spherical quadrature for the orientation-space integrals of the entropy
//! potential.
//!
//! Two rule families are provided: Lebedev-Laikov rules (the default engine)
//! and a product Gauss-Legendre(cos theta) x trapezoid(phi) grid. The product
//! rule extends to arbitrary degree and serves as the independent refined
//! oracle for moment residuals.

/// Available Lebedev precision orders and their node counts.
const LEBEDEV_ORDERS: [(usize, usize); 32] = [
    (3, 6),
    (5, 14),
    (7, 26),
    (9, 38),
    (11, 50),
    (13, 74),
    (15, 86),
    (17, 110),
    (19, 146),
    (21, 170),
    (23, 194),
    (25, 230),
    (27, 266),
    (29, 302),
    (31, 350),
    (35, 434),
    (41, 590),
    (47, 770),
    (53, 974),
    (59, 1202),
    (65, 1454),
    (71, 1730),
    (77, 2030),
    (83, 2354),
    (89, 2702),
    (95, 3074),
    (101, 3470),
    (107, 3890),
    (113, 4334),
    (119, 4802),
    (125, 5294),
    (131, 5810),
];

/// A quadrature rule on the unit sphere. Weights sum to 4 pi, so
/// `sum_j w_j f(p_j)` approximates the surface integral of f.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Per node, the five projections `(p x p) : E_i` onto the orthonormal
    /// traceless basis; precomputed because the dual solves contract against
    /// them in every Newton iteration.
    pub basis_moments: Vec<[f64; 5]>,
}

const SQRT2: f64 = std::f64::consts::SQRT_2;
const SQRT6: f64 = 2.449_489_742_783_178;

fn basis_moment(p: [f64; 3]) -> [f64; 5] {
    let [x, y, z] = p;
    [
        SQRT2 * x * y,
        SQRT2 * x * z,
        SQRT2 * y * z,
        (x * x - y * y) / SQRT2,
        (x * x + y * y - 2.0 * z * z) / SQRT6,
    ]
}

impl SphereRule {
    /// Smallest Lebedev rule of precision at least `degree`, or `None` when
    /// the requested degree exceeds the largest tabulated rule.
    pub fn lebedev(degree: usize) -> Option<SphereRule> {
        let (order, npts) = *LEBEDEV_ORDERS.iter().find(|(o, _)| *o >= degree)?;
        let (xs, ys, zs, ws) = lebedev_laikov::ld_vecs(npts);
        let four_pi = 4.0 * std::f64::consts::PI;
        let points: Vec<[f64; 3]> = xs
            .iter()
            .zip(&ys)
            .zip(&zs)
            .map(|((&x, &y), &z)| [x, y, z])
            .collect();
        let weights = ws.iter().map(|w| w * four_pi).collect();
        let basis_moments = points.iter().map(|&p| basis_moment(p)).collect();
        Some(SphereRule {
            degree: order,
            points,
            weights,
            basis_moments,
        })
    }

    /// Product rule: Gauss-Legendre in cos(theta), uniform trapezoid in phi.
    /// Exact for spherical polynomials up to `degree`.
    pub fn gauss_product(degree: usize) -> SphereRule {
        let n_theta = degree / 2 + 1; // 2 n - 1 >= degree
        let n_phi = (degree + 1).max(4);
        let (mu, wmu) = gauss_legendre(n_theta);
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        for (m, wm) in mu.iter().zip(&wmu) {
            let s = (1.0 - m * m).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = dphi * j as f64;
                points.push([s * phi.cos(), s * phi.sin(), *m]);
                weights.push(wm * dphi);
            }
        }
        let basis_moments = points.iter().map(|&p| basis_moment(p)).collect();
        SphereRule {
            degree,
            points,
            weights,
            basis_moments,
        }
    }

    /// Default engine for a requested degree: Lebedev when tabulated, the
    /// product rule beyond that.
    pub fn for_degree(degree: usize) -> SphereRule {
        SphereRule::lebedev(degree).unwrap_or_else(|| SphereRule::gauss_product(degree))
    }

    /// Refined rule from the independent product family, used to
    /// cross-check converged moments.
    pub fn refined_oracle(&self) -> SphereRule {
        SphereRule::gauss_product(2 * self.degree)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrate a scalar function over the sphere.
    pub fn integrate<F: FnMut([f64; 3]) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' at x by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

    /// Series value of the axisymmetric Gaussian integral
    /// `int exp(b((p.e)^2 - 1/3)) dsigma = 2 pi exp(-b/3) int_-1^1 exp(b mu^2) dmu`.
    fn axisymmetric_series(b: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = 1.0; // b^k / k!
        for k in 0..200 {
            sum += term * 2.0 / (2.0 * k as f64 + 1.0);
            term *= b / (k as f64 + 1.0);
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        2.0 * std::f64::consts::PI * (-b / 3.0).exp() * sum
    }

    #[test]
    fn weights_sum_to_sphere_area() {
        for rule in [
            SphereRule::lebedev(35).unwrap(),
            SphereRule::gauss_product(35),
            SphereRule::gauss_product(71),
        ] {
            let total: f64 = rule.weights.iter().sum();
            assert!((total - FOUR_PI).abs() < 1e-10 * FOUR_PI, "{total}");
        }
    }

    #[test]
    fn lebedev_order_selection() {
        assert_eq!(SphereRule::lebedev(35).unwrap().len(), 434);
        assert_eq!(SphereRule::lebedev(33).unwrap().len(), 434);
        assert_eq!(SphereRule::lebedev(3).unwrap().len(), 6);
        assert!(SphereRule::lebedev(133).is_none());
        assert!(!SphereRule::for_degree(140).is_empty());
    }

    #[test]
    fn polynomial_exactness() {
        let a = [0.3, -0.5, 0.81];
        let a2 = a.iter().map(|v| v * v).sum::<f64>();
        for rule in [
            SphereRule::lebedev(11).unwrap(),
            SphereRule::gauss_product(11),
        ] {
            let i2 = rule.integrate(|p| {
                let d = p[0] * a[0] + p[1] * a[1] + p[2] * a[2];
                d * d
            });
            assert!((i2 - FOUR_PI / 3.0 * a2).abs() < 1e-12 * FOUR_PI);
            let i4 = rule.integrate(|p| {
                let d = p[0] * a[0] + p[1] * a[1] + p[2] * a[2];
                d.powi(4)
            });
            assert!((i4 - FOUR_PI / 5.0 * a2 * a2).abs() < 1e-12 * FOUR_PI);
        }
    }

    #[test]
    fn axisymmetric_gaussian_oracle() {
        // Degree 35 resolves the exponential up to moderate concentration;
        // the doubled-degree product rule goes much further.
        let e = [0.0, 0.0, 1.0];
        for &b in &[0.5, 2.0, 5.0, 10.0] {
            let expect = axisymmetric_series(b);
            for rule in [
                SphereRule::lebedev(35).unwrap(),
                SphereRule::gauss_product(35),
            ] {
                let got = rule.integrate(|p| {
                    let mu = p[0] * e[0] + p[1] * e[1] + p[2] * e[2];
                    (b * (mu * mu - 1.0 / 3.0)).exp()
                });
                assert!(
                    (got - expect).abs() < 1e-9 * expect,
                    "b={b} got={got} expect={expect}"
                );
            }
        }
        for &b in &[15.0, 25.0] {
            let expect = axisymmetric_series(b);
            let rule = SphereRule::gauss_product(90);
            let got = rule.integrate(|p| (b * (p[2] * p[2] - 1.0 / 3.0)).exp());
            assert!(
                (got - expect).abs() < 1e-11 * expect,
                "b={b} got={got} expect={expect}"
            );
        }
    }

    #[test]
    fn basis_moments_match_definition() {
        let rule = SphereRule::lebedev(5).unwrap();
        let basis = crate::tensor::basis();
        for (p, bm) in rule.points.iter().zip(&rule.basis_moments) {
            let pp = crate::tensor::Mat3([
                p[0] * p[0],
                p[0] * p[1],
                p[0] * p[2],
                p[1] * p[0],
                p[1] * p[1],
                p[1] * p[2],
                p[2] * p[0],
                p[2] * p[1],
                p[2] * p[2],
            ]);
            for i in 0..5 {
                let expect = pp.ddot(&basis[i].to_mat3());
                assert!((bm[i] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        // degree 15 monomial moments
        for k in [0usize, 2, 8, 14] {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            let expect = 2.0 / (k as f64 + 1.0);
            assert!((got - expect).abs() < 1e-13, "k={k}");
        }
        let odd: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(7)).sum();
        assert!(odd.abs() < 1e-14);
    }
}
