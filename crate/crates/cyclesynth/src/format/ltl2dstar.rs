//! Reader for the ltl2dstar "DRA v2 explicit" text format.
//!
//! ```text
//! DRA v2 explicit
//! Comment: "GF pi"
//! States: 2
//! Acceptance-Pairs: 1
//! Start: 0
//! AP: 1 "pi"
//! ---
//! State: 0
//! Acc-Sig:
//! 0
//! 1
//! State: 1
//! Acc-Sig: +0
//! 0
//! 1
//! ```
//!
//! Each state block lists `2^|AP|` successors in symbol-index order, where bit
//! `b` of the index is the truth value of the `b`-th AP. In `Acc-Sig`, `+k`
//! puts the state in `K` of pair `k` and `-k` in `L`.

use cyclesynth_core::dra::{Dra, RabinPair, MAX_PROPOSITIONS};

use super::FormatError;

/// Non-empty lines with their 1-based numbers and leading-whitespace offsets.
struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, usize, &'a str)> + 'a>>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let total = text.lines().count();
        let iter: Box<dyn Iterator<Item = (usize, usize, &'a str)>> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, raw)| {
                    let trimmed = raw.trim_start();
                    (i + 1, raw.len() - trimmed.len() + 1, trimmed.trim_end())
                })
                .filter(|(_, _, l)| !l.is_empty()),
        );
        Lines { inner: iter.peekable(), last_line: total }
    }

    fn next(&mut self) -> Option<(usize, usize, &'a str)> {
        self.inner.next()
    }

    fn peek(&mut self) -> Option<&(usize, usize, &'a str)> {
        self.inner.peek()
    }

    /// Position just past the end of input.
    fn eof(&self) -> (usize, usize) {
        (self.last_line + 1, 1)
    }
}

fn parse_number(line: usize, column: usize, token: &str, what: &str) -> Result<usize, FormatError> {
    token.parse::<usize>().map_err(|_| FormatError::parse(line, column, format!("expected {what}, found {token:?}")))
}

/// Splits `Key: rest`, returning the column at which `rest` starts.
fn field<'a>(line: usize, column: usize, text: &'a str, key: &str) -> Result<(usize, &'a str), FormatError> {
    let rest = text
        .strip_prefix(key)
        .ok_or_else(|| FormatError::parse(line, column, format!("expected \"{key}\", found {text:?}")))?;
    let value = rest.trim_start();
    Ok((column + key.len() + rest.len() - value.len(), value))
}

/// Parses `"a" "b" ...`, returning the strings.
fn quoted_list(line: usize, mut column: usize, mut text: &str) -> Result<Vec<String>, FormatError> {
    let mut out = Vec::new();
    loop {
        let trimmed = text.trim_start();
        column += text.len() - trimmed.len();
        text = trimmed;
        if text.is_empty() {
            return Ok(out);
        }
        let Some(body) = text.strip_prefix('"') else {
            return Err(FormatError::parse(line, column, "expected a quoted proposition name"));
        };
        let mut value = String::new();
        let mut chars = body.char_indices();
        let end = loop {
            match chars.next() {
                Some((i, '"')) => break i,
                Some((_, '\\')) => match chars.next() {
                    Some((_, c)) => value.push(c),
                    None => return Err(FormatError::parse(line, column, "unterminated string")),
                },
                Some((_, c)) => value.push(c),
                None => return Err(FormatError::parse(line, column, "unterminated string")),
            }
        };
        out.push(value);
        column += end + 2;
        text = &body[end + 1..];
    }
}

pub fn parse_ltl2dstar(text: &str) -> Result<Dra, FormatError> {
    let mut lines = Lines::new(text);
    let (line, column, header) = lines.next().ok_or_else(|| FormatError::parse(1, 1, "empty input"))?;
    let mut words = header.split_whitespace();
    if words.next() != Some("DRA") {
        return Err(FormatError::parse(line, column, "expected \"DRA v2 explicit\" header"));
    }
    match words.next() {
        Some("v2") => {}
        Some(v) => return Err(FormatError::parse(line, column + 4, format!("unsupported version {v:?}"))),
        None => return Err(FormatError::parse(line, column, "missing version in header")),
    }
    if words.next() != Some("explicit") || words.next().is_some() {
        return Err(FormatError::parse(line, column, "unsupported variant: only \"explicit\" is read"));
    }

    let mut states = None;
    let mut pair_count = None;
    let mut start = None;
    let mut aps: Option<Vec<String>> = None;
    let separator = loop {
        let (line, column, text) = lines.next().ok_or_else(|| {
            let (l, c) = lines.eof();
            FormatError::parse(l, c, "missing \"---\" before the state blocks")
        })?;
        if text == "---" {
            break (line, column);
        }
        let (key, _) = text.split_once(':').unwrap_or((text, ""));
        match key {
            "Comment" => {}
            "States" => {
                let (c, v) = field(line, column, text, "States:")?;
                states = Some(parse_number(line, c, v, "a state count")?);
            }
            "Acceptance-Pairs" => {
                let (c, v) = field(line, column, text, "Acceptance-Pairs:")?;
                pair_count = Some(parse_number(line, c, v, "a pair count")?);
            }
            "Start" => {
                let (c, v) = field(line, column, text, "Start:")?;
                start = Some(parse_number(line, c, v, "a start state")?);
            }
            "AP" => {
                let (c, v) = field(line, column, text, "AP:")?;
                let (count, rest) = v.split_once(char::is_whitespace).unwrap_or((v, ""));
                let count = parse_number(line, c, count, "an AP count")?;
                let rest_column = c + v.len() - rest.len();
                let names = quoted_list(line, rest_column, rest)?;
                if names.len() != count {
                    return Err(FormatError::parse(
                        line,
                        c,
                        format!("AP count {count} does not match {} listed names", names.len()),
                    ));
                }
                if count > MAX_PROPOSITIONS {
                    return Err(FormatError::parse(
                        line,
                        c,
                        format!("{count} propositions exceed the supported maximum"),
                    ));
                }
                aps = Some(names);
            }
            _ => return Err(FormatError::parse(line, column, format!("unknown header field {key:?}"))),
        }
    };
    let missing = |name: &str| FormatError::parse(separator.0, separator.1, format!("header lacks the {name} field"));
    let n = states.ok_or_else(|| missing("States"))?;
    let pair_count = pair_count.ok_or_else(|| missing("Acceptance-Pairs"))?;
    let start = start.ok_or_else(|| missing("Start"))?;
    let aps = aps.ok_or_else(|| missing("AP"))?;
    let symbols = 1usize << aps.len();

    let mut delta = Vec::with_capacity(n);
    let mut finite = vec![Vec::new(); pair_count];
    let mut infinite = vec![Vec::new(); pair_count];
    for q in 0..n {
        let (line, column, text) = lines.next().ok_or_else(|| {
            let (l, c) = lines.eof();
            FormatError::parse(l, c, format!("truncated input: expected \"State: {q}\""))
        })?;
        let (c, rest) = field(line, column, text, "State:")?;
        let id = rest.split_whitespace().next().unwrap_or("");
        if parse_number(line, c, id, "a state number")? != q {
            return Err(FormatError::parse(line, c, format!("expected state {q}, found {id}")));
        }

        let (line, column, text) = lines.next().ok_or_else(|| {
            let (l, c) = lines.eof();
            FormatError::parse(l, c, format!("truncated state block {q}: missing \"Acc-Sig:\""))
        })?;
        let (mut c, mut rest) = field(line, column, text, "Acc-Sig:")?;
        while !rest.is_empty() {
            let token = rest.split_whitespace().next().expect("non-empty");
            let (sign, index) = token.split_at(1);
            let k = parse_number(line, c + 1, index, "a pair index")?;
            if k >= pair_count {
                return Err(FormatError::parse(line, c, format!("pair {k} out of range ({pair_count} pairs)")));
            }
            match sign {
                "+" => infinite[k].push(q),
                "-" => finite[k].push(q),
                _ => return Err(FormatError::parse(line, c, format!("expected +k or -k, found {token:?}"))),
            }
            let after = &rest[token.len()..];
            let trimmed = after.trim_start();
            c += token.len() + after.len() - trimmed.len();
            rest = trimmed;
        }

        let mut row = Vec::with_capacity(symbols);
        while row.len() < symbols {
            match lines.peek() {
                None => {
                    let (l, c) = lines.eof();
                    return Err(FormatError::parse(
                        l,
                        c,
                        format!("truncated state block {q}: {} of {symbols} successors", row.len()),
                    ));
                }
                Some(&(line, column, text)) if text.starts_with("State:") => {
                    return Err(FormatError::parse(
                        line,
                        column,
                        format!("state {q} has {} successors, expected {symbols}", row.len()),
                    ));
                }
                Some(&(line, column, text)) => {
                    lines.next();
                    let target = parse_number(line, column, text, "a successor state")?;
                    if target >= n {
                        return Err(FormatError::parse(line, column, format!("successor {target} out of range")));
                    }
                    row.push(target);
                }
            }
        }
        delta.push(row);
    }
    if let Some(&(line, column, text)) = lines.peek() {
        let message = if text.parse::<usize>().is_ok() {
            format!("state {} has more than {symbols} successors", n.saturating_sub(1))
        } else {
            format!("unexpected content after the last state: {text:?}")
        };
        return Err(FormatError::parse(line, column, message));
    }
    let pairs = finite.into_iter().zip(infinite).map(|(l, k)| RabinPair::new(l, k)).collect();
    Ok(Dra::new(aps, start, delta, pairs)?)
}
