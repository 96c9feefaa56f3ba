//! Small numerical kernels shared by the pricing and HJM modules: trapezoid
//! sums, Gauss–Legendre rules and three-point log-derivative stencils.

/// Trapezoid rule over equally spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (0.5 * (values[0] + values[n - 1]) + inner)
        }
    }
}

/// Trapezoid rule over arbitrary (strictly increasing) abscissae.
pub fn trapezoid_nonuniform(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Roots of P_n are found by Newton iteration from the Chebyshev-like
/// initial guess; weights follow from P_n'.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate `f` over `[a, b]` with an `n`-point Gauss–Legendre rule.
pub fn gauss_legendre_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Derivative of `ln y` with respect to `x`.
///
/// Interior points use the three-point central stencil (second order on
/// non-uniform spacing), the two boundary points the matching one-sided
/// three-point stencils. Requires at least three points and `y > 0`; callers
/// validate both.
pub fn log_derivative(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    debug_assert!(n >= 3 && ys.len() == n);
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    (0..n)
        .map(|i| {
            // Stencil centre and the index of the derivative point inside it.
            let (c, pos) = match i {
                0 => (1, 0),
                i if i == n - 1 => (n - 2, 2),
                i => (i, 1),
            };
            let (x0, x1, x2) = (xs[c - 1], xs[c], xs[c + 1]);
            let (l0, l1, l2) = (logs[c - 1], logs[c], logs[c + 1]);
            let x = [x0, x1, x2][pos];
            // Derivative of the Lagrange interpolant through the three nodes.
            let d0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
            let d1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
            let d2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
            l0 * d0 + l1 * d1 + l2 * d2
        })
        .collect()
}
