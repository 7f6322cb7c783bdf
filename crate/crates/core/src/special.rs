//! Modified Bessel functions of the first kind, exponentially scaled.

/// `I_0(x) e^{-|x|}`.
pub fn bessel_i0e(x: f64) -> f64 {
    bessel_ine(0, x)
}

/// `I_n(x) e^{-|x|}` for integer order `n >= 0` and `x >= 0`.
///
/// Power series for moderate arguments, Hankel asymptotic series above 40.
pub fn bessel_ine(n: u32, x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= 40.0 {
        // sum_k (x/2)^{2k+n} / (k! (k+n)!), accumulated in log space for the prefactor
        let q = 0.25 * x * x;
        let mut term = 1.0;
        for j in 1..=n {
            term *= 0.5 * x / j as f64;
        }
        let mut sum = term;
        let mut k = 1u32;
        loop {
            term *= q / (k as f64 * (k + n) as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1;
        }
        sum * (-x).exp()
    } else {
        let mu = 4.0 * (n as f64) * (n as f64);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            let next = -term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}
