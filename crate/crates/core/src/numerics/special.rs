//! Associated Laguerre polynomials.

/// `L_n^k(x)` by the three-term recurrence
/// `(j+1) L_{j+1} = (2j+1+k-x) L_j - (j+k) L_{j-1}`.
pub fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    let k = k as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + k - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * cur - (jf + k) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Values `sqrt(j!/(j+k)!) x^{k/2} e^{-x/2} L_j^k(x)` for `j = 0..len`.
///
/// These stay bounded for large `j` and `k`, unlike the bare polynomials, so
/// they are what the Fock-basis Wigner kernel consumes.
pub fn laguerre_functions(len: usize, k: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    let kf = k as f64;
    // sqrt(1/k!) x^{k/2} e^{-x/2}, in log space
    let head = if x > 0.0 {
        (0.5 * kf * x.ln() - 0.5 * x - 0.5 * ln_factorial(k)).exp()
    } else if k == 0 {
        1.0
    } else {
        0.0
    };
    let mut prev = head;
    out.push(prev);
    if len == 1 {
        return out;
    }
    let mut cur = head * (1.0 + kf - x) / (kf + 1.0).sqrt();
    out.push(cur);
    for j in 1..len - 1 {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - x) * cur - (jf * (jf + kf)).sqrt() * prev)
            / ((jf + 1.0) * (jf + 1.0 + kf)).sqrt();
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// `ln(n!)`, exact summation (arguments here stay in the hundreds).
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> f64 {
        (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k))
            .exp()
            .round()
    }

    /// Direct sum `L_n^k(x) = Σ_i (-1)^i C(n+k, n-i) x^i / i!`.
    fn laguerre_direct(n: usize, k: usize, x: f64) -> f64 {
        (0..=n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(n + k, n - i) * x.powi(i as i32) / ln_factorial(i).exp()
            })
            .sum()
    }

    #[test]
    fn low_orders() {
        for &x in &[0.0, 0.7, 3.0] {
            for k in 0..4 {
                assert_eq!(laguerre(0, k, x), 1.0);
            }
            assert!((laguerre(1, 0, x) - (1.0 - x)).abs() < 1e-15);
        }
    }

    #[test]
    fn l32_at_one_and_a_half() {
        // C(5,3) - C(5,2) x + C(5,1) x²/2 - x³/6 at x = 1.5
        let expected = 10.0 - 10.0 * 1.5 + 5.0 * 1.5 * 1.5 / 2.0 - 1.5f64.powi(3) / 6.0;
        assert!((laguerre(3, 2, 1.5) - expected).abs() < 1e-13);
        assert!((laguerre_direct(3, 2, 1.5) - expected).abs() < 1e-13);
    }

    #[test]
    fn recurrence_matches_direct_sum() {
        for n in 0..=10 {
            for k in 0..=5 {
                for &x in &[0.0, 0.5, 1.0, 2.0] {
                    let a = laguerre(n, k, x);
                    let b = laguerre_direct(n, k, x);
                    assert!(
                        (a - b).abs() <= 1e-10 * b.abs().max(1e-300) || (a - b).abs() < 1e-12,
                        "n={n} k={k} x={x}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn normalized_functions_match_polynomials() {
        for k in 0..6 {
            for &x in &[0.0, 0.3, 2.5, 7.0] {
                let f = laguerre_functions(12, k, x);
                for (j, v) in f.iter().enumerate() {
                    let pref = (0.5 * (ln_factorial(j) - ln_factorial(j + k))).exp()
                        * x.powf(k as f64 / 2.0)
                        * (-x / 2.0).exp();
                    let want = pref * laguerre(j, k, x);
                    assert!((v - want).abs() < 1e-12, "j={j} k={k} x={x}");
                }
            }
        }
    }

    #[test]
    fn normalized_functions_stay_bounded() {
        let f = laguerre_functions(400, 150, 300.0);
        assert!(f.iter().all(|v| v.is_finite() && v.abs() <= 1.0));
    }
}
