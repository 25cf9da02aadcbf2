//! Deterministic cell rewriters behind the normalize pool functions:
//! datetime reformatting and dictionary-based string cleanup.

/// Output directives supported by `format_datetime`.
const FORMAT_DIRECTIVES: &[char] = &['Y', 'y', 'm', 'd', 'b', 'B', 'H', 'M'];

const MONTHS: &[(&str, &str)] = &[
    ("Jan", "January"),
    ("Feb", "February"),
    ("Mar", "March"),
    ("Apr", "April"),
    ("May", "May"),
    ("Jun", "June"),
    ("Jul", "July"),
    ("Aug", "August"),
    ("Sep", "September"),
    ("Oct", "October"),
    ("Nov", "November"),
    ("Dec", "December"),
];

/// Check a format string uses only supported `%` directives.
pub fn validate_format(fmt: &str) -> Result<(), String> {
    let chars: Vec<char> = fmt.chars().collect();
    let mut i = 0;
    let mut any = false;
    while i < chars.len() {
        if chars[i] == '%' {
            match chars.get(i + 1) {
                Some(c) if FORMAT_DIRECTIVES.contains(c) => {
                    any = true;
                    i += 2;
                }
                Some(c) => {
                    return Err(format!(
                        "unsupported format directive %{c}; supported: %Y %y %m %d %b %B %H %M"
                    ));
                }
                None => return Err("dangling '%' at end of format".to_string()),
            }
        } else {
            i += 1;
        }
    }
    if !any {
        return Err("format contains no % directives".to_string());
    }
    Ok(())
}

/// Partial date/time; absent components stay `None` and formatting with a
/// directive for a missing component fails that cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DateParts {
    pub year: Option<i64>,
    pub month: Option<u32>,
    pub day: Option<u32>,
    pub hour: Option<u32>,
    pub minute: Option<u32>,
}

struct Matcher<'a> {
    chars: Vec<char>,
    pos: usize,
    pattern: &'a str,
}

impl Matcher<'_> {
    fn digits(&mut self, min: usize, max: usize) -> Option<u32> {
        let start = self.pos;
        let mut end = start;
        while end < self.chars.len() && self.chars[end].is_ascii_digit() && end - start < max {
            end += 1;
        }
        if end - start < min {
            return None;
        }
        let text: String = self.chars[start..end].iter().collect();
        self.pos = end;
        text.parse().ok()
    }

    fn word(&mut self) -> Option<String> {
        let start = self.pos;
        let mut end = start;
        while end < self.chars.len() && self.chars[end].is_ascii_alphabetic() {
            end += 1;
        }
        if end == start {
            return None;
        }
        self.pos = end;
        Some(self.chars[start..end].iter().collect())
    }

    fn try_match(&mut self) -> Option<DateParts> {
        let mut parts = DateParts::default();
        let pat: Vec<char> = self.pattern.chars().collect();
        let mut i = 0;
        while i < pat.len() {
            if pat[i] == '%' {
                let directive = pat.get(i + 1)?;
                match directive {
                    'Y' => {
                        let start = self.pos;
                        let y = self.digits(4, 4)?;
                        if self.pos - start != 4 {
                            return None;
                        }
                        parts.year = Some(y as i64);
                    }
                    'm' => {
                        let m = self.digits(1, 2)?;
                        if !(1..=12).contains(&m) {
                            return None;
                        }
                        parts.month = Some(m);
                    }
                    'd' => {
                        let d = self.digits(1, 2)?;
                        if !(1..=31).contains(&d) {
                            return None;
                        }
                        parts.day = Some(d);
                    }
                    'b' => {
                        let w = self.word()?;
                        let idx = MONTHS
                            .iter()
                            .position(|(abbr, _)| abbr.eq_ignore_ascii_case(&w))?;
                        parts.month = Some(idx as u32 + 1);
                    }
                    'B' => {
                        let w = self.word()?;
                        let idx = MONTHS
                            .iter()
                            .position(|(_, full)| full.eq_ignore_ascii_case(&w))?;
                        parts.month = Some(idx as u32 + 1);
                    }
                    'H' => {
                        let h = self.digits(1, 2)?;
                        if h > 23 {
                            return None;
                        }
                        parts.hour = Some(h);
                    }
                    'M' => {
                        let m = self.digits(1, 2)?;
                        if m > 59 {
                            return None;
                        }
                        parts.minute = Some(m);
                    }
                    _ => return None,
                }
                i += 2;
            } else {
                if self.chars.get(self.pos) != Some(&pat[i]) {
                    return None;
                }
                self.pos += 1;
                i += 1;
            }
        }
        if self.pos == self.chars.len() {
            Some(parts)
        } else {
            None
        }
    }
}

fn match_pattern(text: &str, pattern: &str) -> Option<DateParts> {
    let mut m = Matcher {
        chars: text.chars().collect(),
        pos: 0,
        pattern,
    };
    m.try_match()
}

/// Parse a date cell by trying a fixed pattern list in order. `%d/%m` is
/// only accepted when the day exceeds 12, otherwise `%m/%d` already took
/// the ambiguous case.
pub fn parse_datetime(text: &str) -> Option<DateParts> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    const PATTERNS: &[&str] = &[
        "%Y-%m-%d", "%d-%b", "%b-%d", "%m/%d", "%d/%m", "%d %B %Y", "%B %d %Y", "%m-%d",
    ];
    for pattern in PATTERNS {
        if let Some(parts) = match_pattern(text, pattern) {
            if *pattern == "%d/%m" && parts.day.map_or(true, |d| d <= 12) {
                continue;
            }
            return Some(parts);
        }
    }
    None
}

/// Render parts with the output format; fails when a directive needs a
/// component the input did not carry.
pub fn format_datetime(parts: &DateParts, fmt: &str) -> Result<String, String> {
    let chars: Vec<char> = fmt.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    let missing = |what: &str| format!("input has no {what} component for the requested format");
    while i < chars.len() {
        if chars[i] == '%' {
            let directive = chars.get(i + 1).ok_or_else(|| missing("directive"))?;
            match directive {
                'Y' => out.push_str(&format!("{:04}", parts.year.ok_or_else(|| missing("year"))?)),
                'y' => out.push_str(&format!(
                    "{:02}",
                    parts.year.ok_or_else(|| missing("year"))?.rem_euclid(100)
                )),
                'm' => out.push_str(&format!(
                    "{:02}",
                    parts.month.ok_or_else(|| missing("month"))?
                )),
                'd' => out.push_str(&format!("{:02}", parts.day.ok_or_else(|| missing("day"))?)),
                'b' => {
                    let m = parts.month.ok_or_else(|| missing("month"))? as usize;
                    out.push_str(MONTHS[m - 1].0);
                }
                'B' => {
                    let m = parts.month.ok_or_else(|| missing("month"))? as usize;
                    out.push_str(MONTHS[m - 1].1);
                }
                'H' => out.push_str(&format!("{:02}", parts.hour.ok_or_else(|| missing("hour"))?)),
                'M' => out.push_str(&format!(
                    "{:02}",
                    parts.minute.ok_or_else(|| missing("minute"))?
                )),
                other => return Err(format!("unsupported format directive %{other}")),
            }
            i += 2;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    Ok(out)
}

/// Reformat one date cell: parse by the pattern list, render with `fmt`.
pub fn reformat_datetime(text: &str, fmt: &str) -> Result<String, String> {
    let parts =
        parse_datetime(text).ok_or_else(|| format!("unrecognized date format: {text:?}"))?;
    format_datetime(&parts, fmt)
}

/// Apply a replacement dictionary: longest key first, non-overlapping,
/// left to right; replaced text is not rescanned.
pub fn clean_string_apply(text: &str, dict: &std::collections::BTreeMap<String, String>) -> String {
    let mut keys: Vec<&String> = dict.keys().filter(|k| !k.is_empty()).collect();
    keys.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    'outer: while i < chars.len() {
        let rest: String = chars[i..].iter().collect();
        for key in &keys {
            if rest.starts_with(key.as_str()) {
                out.push_str(&dict[*key]);
                i += key.chars().count();
                continue 'outer;
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}
