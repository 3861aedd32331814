use gateslab::dataset::format_float;

/// Median; `+inf` entries (misses) sort last.
pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format_float(x)
    } else {
        "NA".into()
    }
}

pub fn fmt_all(v: &[f64]) -> String {
    v.iter().map(|&x| fmt(x)).collect::<Vec<_>>().join(",")
}
