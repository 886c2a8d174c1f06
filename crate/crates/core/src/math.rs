//! Thin wrappers over `libm` so the rest of the crate reads like std code.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}
#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}
#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Largest integer `t` with `t^d <= v`.
pub fn int_root(v: u64, d: u32) -> u64 {
    if d == 1 {
        return v;
    }
    let mut t = 0u64;
    while (t + 1).checked_pow(d).is_some_and(|p| p <= v) {
        t += 1;
    }
    t
}

/// `n!` as a float.
pub fn factorial(n: u64) -> f64 {
    (2..=n).map(|i| i as f64).product()
}

/// Binomial coefficient as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    round(acc)
}
