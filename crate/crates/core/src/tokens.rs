//! Cheap token estimator shared by table sizing and the gateway budget check.
//!
//! A token is either a maximal run of alphanumeric characters or a single
//! non-space, non-alphanumeric character. Whitespace separates runs and is
//! never counted.

/// Estimate the token count of a piece of text.
///
/// `estimate("a b|")` is 3: two alphanumeric runs plus one symbol.
pub fn estimate(text: &str) -> usize {
    let mut count = 0;
    let mut in_run = false;
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if !in_run {
                count += 1;
                in_run = true;
            }
        } else {
            in_run = false;
            if !ch.is_whitespace() {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_runs_and_symbols() {
        assert_eq!(estimate("a b|"), 3);
        assert_eq!(estimate(""), 0);
        assert_eq!(estimate("   "), 0);
        assert_eq!(estimate("abc123"), 1);
        assert_eq!(estimate("a,b"), 3);
        assert_eq!(estimate("| a | b |"), 5);
    }
}
