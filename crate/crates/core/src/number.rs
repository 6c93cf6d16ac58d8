//! Canonical number formatting.

const MAX_SIGNIFICANT: usize = 12;

fn significant_digits(s: &str) -> usize {
    let digits: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
    digits.trim_start_matches('0').trim_end_matches('0').len()
}

/// Shortest decimal form with at most 12 significant digits, never in
/// exponent notation.
pub fn format_probability(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let shortest = format!("{x}");
    if significant_digits(&shortest) <= MAX_SIGNIFICANT {
        return shortest;
    }
    let rounded: f64 = format!("{:.*e}", MAX_SIGNIFICANT - 1, x).parse().expect("formatted float parses");
    format!("{rounded}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_values_are_unchanged() {
        assert_eq!(format_probability(0.3), "0.3");
        assert_eq!(format_probability(1.0), "1");
        assert_eq!(format_probability(0.0), "0");
        assert_eq!(format_probability(-0.0), "0");
        assert_eq!(format_probability(1e-9), "0.000000001");
        assert_eq!(format_probability(0.99), "0.99");
    }

    #[test]
    fn long_values_round_to_twelve_digits() {
        assert_eq!(format_probability(0.1 + 0.2), "0.3");
        assert_eq!(format_probability(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_probability(0.7 * 0.3), "0.21");
    }
}
