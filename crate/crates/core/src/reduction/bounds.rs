//! Diagnostic constants from the analytic estimates of `Q`.

#[allow(unused_imports)]
use num_traits::Float;

/// `max_{x>0} x^γ e^{-x} = γ^γ e^{-γ}`.
pub fn c3(gamma: f64) -> f64 {
    gamma.powf(gamma) * (-gamma).exp()
}

/// `(e^r - 1)/r` with `r = √(β²+1)`.
pub fn c4(beta: f64) -> f64 {
    let r = (beta * beta + 1.0).sqrt();
    r.exp_m1() / r
}

/// Constant of the estimate of the beginning of the lower entry; infinite at `γ = 1`.
pub fn c2(beta: f64, epsilon: f64, gamma: f64) -> f64 {
    let e = core::f64::consts::E;
    let s = (beta * beta + 1.0).sqrt();
    let k3 = c3(gamma);
    let head = 2.0 * e * k3 * s / (epsilon * epsilon) + 2.0 / epsilon;
    if gamma >= 1.0 {
        return f64::INFINITY;
    }
    let inner = 2f64.powf(1.0 - gamma) * e * k3 * c4(beta) * s / (1.0 - gamma)
        + 2f64.powf(gamma + 1.0) * e * k3 / gamma
        + 2f64.powf(gamma + 1.0) / gamma;
    head + gamma / epsilon * inner
}

/// `(|c|/|W|)(x+1)^{-γ}√(4(Σ|b|)²/ε² + (2/ε + c₂)²(Σ|b̂|)²)`.
#[allow(clippy::too_many_arguments)]
pub fn q_norm_bound(c: f64, w_abs: f64, epsilon: f64, beta: f64, gamma: f64, b_l1: f64, b_hat_l1: f64, x: f64) -> f64 {
    let upper = 2.0 * b_l1 / epsilon;
    let lower = (2.0 / epsilon + c2(beta, epsilon, gamma)) * b_hat_l1;
    c.abs() / w_abs * (x + 1.0).powf(-gamma) * (upper * upper + lower * lower).sqrt()
}
