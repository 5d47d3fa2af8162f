//! Line-oriented `.car` carrier files:
//!
//! ```text
//! version 1
//! carrier zmod2
//! declares add_comm_monoid
//! elems 0 1
//! table add 2
//!   0 1
//!   1 0
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use super::lexer::{ParseError, SourceSpan};
use crate::eval::{FiniteCarrier, OpTable};

struct Line<'a> {
    no: usize,
    words: Vec<(usize, &'a str)>,
}

fn words(line: &str) -> Vec<(usize, &str)> {
    let code = match line.find("--") {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in code.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, &code[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &code[s..]));
    }
    out
}

pub fn parse_carrier(file: &str, text: &str) -> Result<FiniteCarrier, ParseError> {
    let file: Arc<str> = Arc::from(file);
    let err = |line: usize, col: usize, len: usize, message: String| ParseError {
        span: SourceSpan { file: file.clone(), line, column: col + 1, length: len.max(1) },
        message,
    };
    let lines: Vec<Line<'_>> = text
        .lines()
        .enumerate()
        .map(|(i, l)| Line { no: i + 1, words: words(l) })
        .filter(|l| !l.words.is_empty())
        .collect();
    let end_line = text.lines().count().max(1);
    let mut it = lines.iter().peekable();

    let header = |it: &mut std::iter::Peekable<std::slice::Iter<'_, Line<'_>>>,
                  kw: &str|
     -> Result<Vec<(usize, String)>, ParseError> {
        match it.next() {
            Some(l) if l.words[0].1 == kw => Ok(l.words[1..].iter().map(|(c, w)| (*c, w.to_string())).collect()),
            Some(l) => {
                Err(err(l.no, l.words[0].0, l.words[0].1.len(), format!("expected `{kw}`, found `{}`", l.words[0].1)))
            }
            None => Err(err(end_line, 0, 1, format!("expected `{kw}` before end of input"))),
        }
    };

    let version_line = it.peek().map(|l| l.no).unwrap_or(end_line);
    let version = header(&mut it, "version")?;
    if version.len() != 1 || version[0].1 != "1" {
        return Err(err(version_line, 0, 7, "expected `version 1`".into()));
    }
    let name_line = it.peek().map(|l| l.no).unwrap_or(end_line);
    let name = header(&mut it, "carrier")?;
    if name.len() != 1 {
        return Err(err(name_line, 0, 7, "expected `carrier <name>`".into()));
    }
    let name = name[0].1.clone();

    let mut declares = Vec::new();
    if it.peek().is_some_and(|l| l.words[0].1 == "declares") {
        declares = header(&mut it, "declares")?.into_iter().map(|(_, w)| w).collect();
    }
    let elems_line = it.peek().map(|l| l.no).unwrap_or(end_line);
    let elems: Vec<String> = header(&mut it, "elems")?.into_iter().map(|(_, w)| w).collect();
    for (i, e) in elems.iter().enumerate() {
        if elems[..i].contains(e) {
            return Err(err(elems_line, 0, 5, format!("duplicate element `{e}`")));
        }
    }
    let index: BTreeMap<&str, usize> = elems.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
    let n = elems.len();

    let mut tables = BTreeMap::new();
    while let Some(l) = it.next() {
        if l.words[0].1 != "table" || l.words.len() != 3 {
            return Err(err(l.no, l.words[0].0, l.words[0].1.len(), "expected `table <op> <arity>`".into()));
        }
        let op = l.words[1].1.to_string();
        let arity: usize = l.words[2]
            .1
            .parse()
            .ok()
            .filter(|a| *a <= 2)
            .ok_or_else(|| err(l.no, l.words[2].0, l.words[2].1.len(), "arity must be 0, 1 or 2".into()))?;
        if tables.contains_key(&op) {
            return Err(err(l.no, l.words[1].0, op.len(), format!("duplicate table `{op}`")));
        }
        let (rows, cols) = match arity {
            0 => (1, 1),
            1 => (1, n),
            _ => (n, n),
        };
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let row = match it.peek() {
                Some(row) if row.words[0].1 != "table" => it.next().expect("peeked"),
                _ => {
                    return Err(err(l.no, 0, 5, format!("PartialTable: table `{op}` has {r} of {rows} rows")));
                }
            };
            if row.words.len() != cols {
                return Err(err(
                    row.no,
                    row.words[0].0,
                    1,
                    format!("PartialTable: row {} of `{op}` has {} entries, expected {cols}", r + 1, row.words.len()),
                ));
            }
            for (col, w) in &row.words {
                match index.get(w) {
                    Some(&e) => entries.push(e),
                    None => {
                        return Err(err(
                            row.no,
                            *col,
                            w.len(),
                            format!("UnknownElement: `{w}` is not an element of `{name}`"),
                        ))
                    }
                }
            }
        }
        tables.insert(op, OpTable::new(arity, n, entries));
    }

    FiniteCarrier::from_tables(name, elems, tables, declares).map_err(|e| err(elems_line, 0, 5, e.to_string()))
}
