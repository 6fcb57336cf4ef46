//! Numeric output formatting shared by the CLI and report rendering.

/// Rounds to 12 significant digits; all printed and serialized numbers pass
/// through here so text and JSON views of the same value agree.
pub(crate) fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest decimal form of the rounded value.
pub(crate) fn fmt_g(x: f64) -> String {
    let r = round_sig(x);
    if r.is_finite() && r != 0.0 && (r.abs() >= 1e16 || r.abs() < 1e-5) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}
