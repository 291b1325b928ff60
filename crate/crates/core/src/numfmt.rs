/// Round-trippable scientific notation used in every CSV.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
