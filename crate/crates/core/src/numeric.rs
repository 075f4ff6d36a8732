//! Small numerical kernels shared by the width engines.
//!
//! Everything here is deterministic: summation order is fixed by the input
//! order, never by thread scheduling.

/// Pairwise summation with a fixed split, so results do not depend on how the
/// caller produced the slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `(sum x_i^rho)^(1/rho)` for non-negative terms, pairwise in the given order.
pub fn rho_sum(xs: &[f64], rho: f64) -> f64 {
    if rho == 1.0 {
        return pairwise_sum(xs);
    }
    let pw: Vec<f64> = xs.iter().map(|x| x.powf(rho)).collect();
    pairwise_sum(&pw).powf(1.0 / rho)
}

// B_{2j} / (2j)! for j = 1..=10.
const BERNOULLI_OVER_FACT: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
];

/// Hurwitz zeta `sum_{n>=0} (a+n)^{-s}` for `s > 1`, `a > 0`, by
/// Euler-Maclaurin after shifting the base above 20.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1, a > 0");
    const SHIFT: f64 = 20.0;
    let mut head = Neumaier::default();
    let mut x = a;
    while x < SHIFT {
        head.add(x.powf(-s));
        x += 1.0;
    }
    let mut tail = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s(s+1)...(s+2j-2) times x^{-s-2j+1}
    let mut rising = s;
    let mut xpow = x.powf(-s - 1.0);
    let inv_x2 = 1.0 / (x * x);
    for (j, &b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let term = b * rising * xpow;
        tail += term;
        if term.abs() < 1e-18 * tail.abs() {
            break;
        }
        let m = 2.0 * (j as f64 + 1.0);
        rising *= (s + m - 1.0) * (s + m);
        xpow *= inv_x2;
    }
    head.add(tail);
    head.value()
}

/// Result of an adaptive Simpson integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub converged: bool,
}

/// Adaptive Simpson on `[a, b]` with relative tolerance `rel_tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Quadrature {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut converged = true;
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    let value = simpson_step(f, a, b, fa, fm, fb, whole, rel_tol * scale, 48, &mut converged);
    Quadrature { value, converged }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
    converged: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * abs_tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *converged = false;
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * abs_tol, depth - 1, converged)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * abs_tol, depth - 1, converged)
}

/// Ordinary least-squares line through `(x, y)`; returns `(slope, intercept, rms residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let sxy: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let slope = pairwise_sum(&sxy) / pairwise_sum(&sxx);
    let intercept = my - slope * mx;
    let res: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .collect();
    (slope, intercept, (pairwise_sum(&res) / n).sqrt())
}

/// `[a]` in the allocation formulas: the largest integer strictly below `a`.
pub fn strict_floor(a: f64) -> i64 {
    a.ceil() as i64 - 1
}

/// `x` compared to `y` with a relative tolerance suited to parameter boundaries.
pub fn approx_eq(x: f64, y: f64) -> bool {
    if x.is_infinite() || y.is_infinite() {
        return x == y;
    }
    (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_two_is_pi_squared_over_six() {
        let z = hurwitz_zeta(2.0, 1.0);
        assert!((z - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
    }

    #[test]
    fn zeta_shift_relation() {
        // zeta(s, a) = a^{-s} + zeta(s, a + 1)
        for &(s, a) in &[(1.2, 0.3), (3.0, 7.5), (1.05, 40.0)] {
            let lhs = hurwitz_zeta(s, a);
            let rhs = a.powf(-s) + hurwitz_zeta(s, a + 1.0);
            assert!((lhs - rhs).abs() <= 1e-13 * lhs);
        }
    }

    #[test]
    fn simpson_polynomial_exact() {
        let q = adaptive_simpson(&|x: f64| x * x * x, 0.0, 2.0, 1e-12);
        assert!(q.converged);
        assert!((q.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn strict_floor_on_integers() {
        assert_eq!(strict_floor(3.0), 2);
        assert_eq!(strict_floor(3.2), 3);
        assert_eq!(strict_floor(-0.5), -1);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let (s, b, r) = linear_fit(&xs, &ys);
        assert!((s + 0.5).abs() < 1e-14 && (b - 2.0).abs() < 1e-13 && r < 1e-13);
    }
}
