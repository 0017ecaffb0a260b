//! Poisson tail sums used for radial Q-function masses.

/// `P(N <= n)` for `N ~ Poisson(x)`.
pub fn poisson_cdf(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let mut term = (-x).exp();
    let mut sum = term;
    for k in 1..=n {
        term *= x / k as f64;
        sum += term;
    }
    sum.min(1.0)
}

/// `P(N > n)` for `N ~ Poisson(x)`, summed directly so small tails keep full
/// relative precision.
pub fn poisson_sf(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x > n as f64 + 1.0 {
        return (1.0 - poisson_cdf(n, x)).max(0.0);
    }
    // log of the first tail term e^-x x^(n+1) / (n+1)!
    let k0 = n + 1;
    let ln_first = -x + k0 as f64 * x.ln() - ln_factorial(k0);
    let mut term = ln_first.exp();
    let mut sum = 0.0;
    let mut k = k0;
    while term > 1e-300 && term > sum * 1e-17 {
        sum += term;
        k += 1;
        term *= x / k as f64;
    }
    sum
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cdf_and_sf_are_complementary() {
        for &(n, x) in &[(0, 1.0), (5, 2.5), (15, 36.0), (3, 0.01), (40, 10.0)] {
            assert_relative_eq!(poisson_cdf(n, x) + poisson_sf(n, x), 1.0, epsilon = 1e-14);
        }
        // P(N > 1) at x = 1 is 1 - 2/e.
        assert_relative_eq!(poisson_sf(1, 1.0), 1.0 - 2.0 / std::f64::consts::E, epsilon = 1e-14);
        assert_relative_eq!(poisson_sf(3, 0.01), 0.01f64.powi(4) / 24.0, max_relative = 1e-2);
    }
}
