/// Formats a real for the text artifacts: 17 significant digits, so every
/// value read back is bit-identical to the one written.
pub(crate) fn real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{:.16e}", x)
}

/// Short human-facing rendering used in summaries.
pub(crate) fn short(x: f64) -> String {
    format!("{:.6}", x)
}
