/// Twelve significant digits, fixed-point where that stays readable.
pub fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..12).contains(&mag) {
        format!("{:.*}", (11 - mag) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

pub fn pair(p: (usize, usize)) -> String {
    format!("{} {}", p.0, p.1)
}

/// A tab-separated output row. Write errors such as a closed pipe are
/// ignored rather than turned into a panic.
#[macro_export]
macro_rules! row {
    ($($cell:expr),+ $(,)?) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), "{}", [$($cell.to_string()),+].join("\t"));
    }};
}
