//! Numerical integration primitives: Gauss-Hermite rules and adaptive Simpson.

/// A Gauss-Hermite rule for the weight function `exp(-x^2)` on the real line.
///
/// `sum_i w_i g(x_i)` approximates `int exp(-x^2) g(x) dx`. For a standard
/// normal expectation use `E[g(N)] = sum_i (w_i / sqrt(pi)) g(sqrt(2) x_i)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Evaluates the orthonormal Hermite functions `h_0..=h_n` at `x` (with
/// respect to `exp(-x^2) dx`), returning `(h_n(x), h_{n-1}(x))`.
fn hermite_pair(n: usize, x: f64) -> (f64, f64) {
    let mut hm = 0.0f64; // h_{k-1}
    let mut h = std::f64::consts::PI.powf(-0.25); // h_0
    for k in 0..n {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * h - (kf / (kf + 1.0)).sqrt() * hm;
        hm = h;
        h = next;
    }
    (h, hm)
}

/// Christoffel weight 1 / sum_{k<n} h_k(x)^2.
fn christoffel(n: usize, x: f64) -> f64 {
    let mut hm = 0.0f64;
    let mut h = std::f64::consts::PI.powf(-0.25);
    let mut acc = h * h;
    for k in 0..n - 1 {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * h - (kf / (kf + 1.0)).sqrt() * hm;
        hm = h;
        h = next;
        acc += h * h;
    }
    1.0 / acc
}

impl GaussHermite {
    /// Builds the `n`-point rule. Roots are bracketed by a sign scan of the
    /// orthonormal Hermite polynomial and polished with Newton iterations
    /// (`h_n'(x) = sqrt(2n) h_{n-1}(x)`).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule order must be >= 1");
        let bound = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
        let steps = 200 * n;
        let dx = bound / steps as f64;
        let mut pos_roots = Vec::new();
        let mut x_prev = if n % 2 == 1 { dx * 0.5 } else { 0.0 };
        let mut f_prev = hermite_pair(n, x_prev).0;
        if n % 2 == 1 {
            pos_roots.push(0.0);
        }
        let mut x = x_prev + dx;
        while x <= bound {
            let f = hermite_pair(n, x).0;
            if f_prev * f < 0.0 {
                // Newton from the midpoint of the bracket.
                let mut r = 0.5 * (x_prev + x);
                for _ in 0..60 {
                    let (hn, hnm1) = hermite_pair(n, r);
                    let deriv = (2.0 * n as f64).sqrt() * hnm1;
                    let step = hn / deriv;
                    r -= step;
                    if step.abs() < 1e-15 * (1.0 + r.abs()) {
                        break;
                    }
                }
                pos_roots.push(r);
            }
            x_prev = x;
            f_prev = f;
            x += dx;
        }
        debug_assert_eq!(pos_roots.len(), (n + 1) / 2);
        let mut nodes = Vec::with_capacity(n);
        for &r in pos_roots.iter().rev() {
            if r > 0.0 {
                nodes.push(-r);
            }
        }
        for &r in &pos_roots {
            nodes.push(r);
        }
        let weights = nodes.iter().map(|&r| christoffel(n, r)).collect();
        GaussHermite { nodes, weights }
    }

    /// Nodes and weights rescaled for a standard-normal expectation:
    /// `E[g(N)] ~= sum_i w_i g(x_i)` with `N ~ N(0, 1)`.
    pub fn for_standard_normal(&self) -> (Vec<f64>, Vec<f64>) {
        let s = std::f64::consts::PI.sqrt();
        let nodes = self.nodes.iter().map(|&x| std::f64::consts::SQRT_2 * x).collect();
        let weights = self.weights.iter().map(|&w| w / s).collect();
        (nodes, weights)
    }
}

fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, m, fm, flm);
    let right = simpson(m, fm, b, fb, frm);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_step(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
            + adaptive_step(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` with the given relative
/// tolerance (an absolute floor of 1e-300 guards all-zero integrands).
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // Coarse |f| scan to set the absolute tolerance; a 3-point estimate can
    // miss the bulk of a concentrated integrand entirely.
    let scan = 128usize;
    let h = (b - a) / scan as f64;
    let mut scale = 0.0;
    for i in 0..=scan {
        scale += f(a + i as f64 * h).abs();
    }
    scale = (scale * h.abs()).max(1e-300);
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    adaptive_step(&f, a, fa, b, fb, fm, whole, rel_tol * scale, 40)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    #[test]
    fn hermite_weights_sum_to_sqrt_pi() {
        for n in [1, 2, 3, 8, 20, 40] {
            let gh = GaussHermite::new(n);
            let sum: f64 = gh.weights.iter().sum();
            assert!((sum - SQRT_PI).abs() < 1e-12, "n={n}: sum={sum}");
        }
    }

    #[test]
    fn hermite_two_point_rule_is_exact() {
        let gh = GaussHermite::new(2);
        // Known closed form: nodes +-1/sqrt(2), weights sqrt(pi)/2.
        assert!((gh.nodes[0] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((gh.nodes[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((gh.weights[0] - SQRT_PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_integrates_moments() {
        // int exp(-x^2) x^2 dx = sqrt(pi)/2; x^4 -> 3 sqrt(pi)/4.
        let gh = GaussHermite::new(20);
        let m2: f64 = gh.nodes.iter().zip(&gh.weights).map(|(x, w)| w * x * x).sum();
        let m4: f64 = gh
            .nodes
            .iter()
            .zip(&gh.weights)
            .map(|(x, w)| w * x.powi(4))
            .sum();
        assert!((m2 - SQRT_PI / 2.0).abs() < 1e-12);
        assert!((m4 - 0.75 * SQRT_PI).abs() < 1e-11);
    }

    #[test]
    fn normal_expectation_rescaling() {
        let gh = GaussHermite::new(20);
        let (nodes, weights) = gh.for_standard_normal();
        let mean: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x * x).sum();
        assert!((mean - 1.0).abs() < 1e-12); // E[N^2] = 1
    }

    #[test]
    fn adaptive_simpson_matches_known_integrals() {
        let v = integrate(|x| x.exp(), 0.0, 1.0, 1e-10);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-9);
        let g = integrate(|x| (-x * x).exp(), -8.0, 8.0, 1e-10);
        assert!((g - SQRT_PI).abs() < 1e-9);
    }
}
