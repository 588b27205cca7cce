//! Rational rogue-wave profiles of the canonical focusing equation
//!
//! ```text
//! i u_T + ½ u_XX + |u|² u = 0
//! ```
//!
//! # Mapping onto the model equation
//!
//! Write `ψ(s, t) = B · u(X, T) · e^{i(ks - σk²t/2)}` with
//! `X = a (s - σkt)`, `T = b t`. The Galilean factor removes `k`, and
//! substituting into `iψ_t + (σ/2)ψ_ss + β|ψ|²ψ = 0` gives
//!
//! ```text
//! i u_T + (σa² / 2b) u_XX + (βB² / b) |u|² u = 0,
//! ```
//!
//! so the canonical form needs `σa² = b` and `βB² = b`. Matching the
//! first-order solution term by term (its carrier `e^{iT}` must equal
//! `e^{iσα²t/2}`) fixes
//!
//! ```text
//! b = σα²/2,   a = α/√2,   B = α √(σ / 2β),
//! ```
//!
//! i.e. `X = α(s - σkt)/√2` and `T = σα²t/2`. Then `4X² = 2α²(s-σkt)²`,
//! `4T² = σ²α⁴t²` and `2iT = iσα²t`, which reproduces the scaled Peregrine
//! breather. The same map carries the second-order solution across, so the
//! two-rogon polynomials are `P₂ = G(X,T)`, `Q₂ = T·H(X,T)`, `R₂ = D(X,T)`
//! below. Both profiles are checked against the model equation by the
//! residual oracle in `pde_verify`.

use num_complex::Complex64;

/// First-order rational solution
/// `1 - 4(1 + 2iT) / (1 + 4X² + 4T²)` (without the `e^{iT}` carrier).
pub fn peregrine(x: f64, t: f64) -> Complex64 {
    let den = 1.0 + 4.0 * x * x + 4.0 * t * t;
    Complex64::new(1.0 - 4.0 / den, -8.0 * t / den)
}

/// Second-order polynomials `(G, T·H, D)` with `u = 1 + (G + iTH)/D`.
pub fn second_order_polynomials(x: f64, t: f64) -> (f64, f64, f64) {
    let x2 = x * x;
    let t2 = t * t;
    let x4 = x2 * x2;
    let t4 = t2 * t2;
    let g = 0.375 - 3.0 * x2 - 2.0 * x4 - 9.0 * t2 - 10.0 * t4 - 12.0 * x2 * t2;
    let h = 3.75 + 6.0 * x2 - 4.0 * x4 - 2.0 * t2 - 4.0 * t4 - 8.0 * x2 * t2;
    let d = (0.75 + 9.0 * x2 + 4.0 * x4 + 16.0 / 3.0 * x4 * x2 + 33.0 * t2 + 36.0 * t4
        + 16.0 / 3.0 * t4 * t2
        - 24.0 * x2 * t2
        + 16.0 * x4 * t2
        + 16.0 * x2 * t4)
        / 8.0;
    (g, t * h, d)
}

/// `1 + (P₂ + iQ₂)/R₂` in canonical coordinates.
pub fn second_order(x: f64, t: f64) -> Complex64 {
    let (p, q, r) = second_order_polynomials(x, t);
    assert!(r > 0.0, "second-order rogue-wave denominator must stay positive (X={x}, T={t})");
    Complex64::new(1.0 + p / r, q / r)
}
