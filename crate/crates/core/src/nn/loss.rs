/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` inside [`bce_loss`].
pub const BCE_CLAMP: f64 = 1e-7;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Binary cross-entropy of a probability against a 0/1 label.
pub fn bce_loss(q: f64, y: f64) -> f64 {
    let q = q.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    -y * q.ln() - (1.0 - y) * (1.0 - q).ln()
}

/// BCE evaluated from a logit, returning `(loss, d loss / d logit)`.
///
/// Uses `softplus(z) - y z`, exact for every logit; the gradient is `q - y`.
#[inline]
pub fn bce_with_logit(logit: f64, y: f64) -> (f64, f64) {
    (softplus(logit) - y * logit, sigmoid(logit) - y)
}
