//! Line-oriented WCIR text format.
//!
//! ```text
//! # comment
//! program wifi_hw_deinit
//! entry_states Standby,Transmitting
//! block b0 cycles=10
//! block b1 cycles=31 ops=wifi_power_down label="&= 0xff00efff"
//! edge b0 b1
//! entry b0
//! exit b1
//! loopbound b2 128 origin=hardware
//! ```
//!
//! Directives may also be separated by `;` on one line.

use super::{is_identifier, BasicBlock, BlockId, BoundOrigin, Edge, EdgeKind, LoopBound, WcirProgram};
use crate::device::{DeviceOp, StateId};
use std::collections::HashSet;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("semantic error at line {line}: {message}")]
    Semantic { line: usize, message: String },
    #[error("input is not valid UTF-8")]
    Encoding,
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    column: usize,
}

/// Splits one line into directives (on `;`) and tokens (on whitespace),
/// keeping quoted strings intact. Comments start at an unquoted `#`.
fn tokenize_line(line: &str, line_no: usize) -> Result<Vec<Vec<Token>>, ParseError> {
    let mut directives = Vec::new();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0usize;
    let mut in_quotes = false;
    let mut chars = line.char_indices().peekable();
    let flush = |current: &mut String, tokens: &mut Vec<Token>, start: usize| {
        if !current.is_empty() {
            tokens.push(Token {
                text: std::mem::take(current),
                column: start + 1,
            });
        }
    };
    while let Some((i, c)) = chars.next() {
        if in_quotes {
            match c {
                '\\' => match chars.next() {
                    Some((_, e @ ('"' | '\\'))) => {
                        current.push('\\');
                        current.push(e);
                    }
                    Some((j, other)) => {
                        return Err(ParseError::Syntax {
                            line: line_no,
                            column: j + 1,
                            message: format!("unknown escape `\\{other}`"),
                        })
                    }
                    None => {
                        return Err(ParseError::Syntax {
                            line: line_no,
                            column: i + 1,
                            message: "dangling escape".into(),
                        })
                    }
                },
                '"' => {
                    current.push('"');
                    in_quotes = false;
                }
                _ => current.push(c),
            }
            continue;
        }
        match c {
            '#' => break,
            '"' => {
                if current.is_empty() {
                    start = i;
                }
                current.push('"');
                in_quotes = true;
            }
            ';' => {
                flush(&mut current, &mut tokens, start);
                if !tokens.is_empty() {
                    directives.push(std::mem::take(&mut tokens));
                }
            }
            c if c.is_whitespace() => flush(&mut current, &mut tokens, start),
            _ => {
                if current.is_empty() {
                    start = i;
                }
                current.push(c);
            }
        }
    }
    if in_quotes {
        return Err(ParseError::Syntax {
            line: line_no,
            column: line.len() + 1,
            message: "unterminated string".into(),
        });
    }
    flush(&mut current, &mut tokens, start);
    if !tokens.is_empty() {
        directives.push(tokens);
    }
    Ok(directives)
}

fn unquote(raw: &str, line: usize, column: usize) -> Result<String, ParseError> {
    let inner = raw
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .ok_or_else(|| ParseError::Syntax {
            line,
            column,
            message: "expected a quoted string".into(),
        })?;
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(e) = chars.next() {
                out.push(e);
            }
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

fn escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn syntax(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn end_column(&self) -> usize {
        self.tokens.last().map(|t| t.column + t.text.len()).unwrap_or(1)
    }

    fn ident(&mut self, what: &str) -> Result<&'a Token, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) if is_identifier(&t.text) => {
                self.pos += 1;
                Ok(t)
            }
            Some(t) => Err(self.syntax(t.column, format!("expected {what}, found `{}`", t.text))),
            None => Err(self.syntax(self.end_column(), format!("expected {what}"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<u64, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                let v = t
                    .text
                    .parse::<u64>()
                    .map_err(|_| self.syntax(t.column, format!("expected {what}, found `{}`", t.text)))?;
                self.pos += 1;
                Ok(v)
            }
            None => Err(self.syntax(self.end_column(), format!("expected {what}"))),
        }
    }

    fn rest(&self) -> &'a [Token] {
        &self.tokens[self.pos..]
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => Err(self.syntax(t.column, format!("unexpected `{}`", t.text))),
            None => Ok(()),
        }
    }
}

fn ident_list(text: &str, line: usize, column: usize) -> Result<Vec<String>, ParseError> {
    text.split(',')
        .map(|part| {
            if is_identifier(part) {
                Ok(part.to_string())
            } else {
                Err(ParseError::Syntax {
                    line,
                    column,
                    message: format!("`{part}` is not an identifier"),
                })
            }
        })
        .collect()
}

/// Parses WCIR text. Dangling references and duplicate ids are rejected
/// here; structural properties (reachability, loop bounds, reducibility)
/// are left to [`super::validate`].
pub fn parse_wcir(bytes: &[u8]) -> Result<WcirProgram, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ParseError::Encoding)?;
    let mut name: Option<String> = None;
    let mut blocks: Vec<(usize, BasicBlock)> = Vec::new();
    let mut edges: Vec<(usize, BlockId, BlockId)> = Vec::new();
    let mut entry: Option<(usize, BlockId)> = None;
    let mut exits: Vec<(usize, BlockId)> = Vec::new();
    let mut loop_bounds: Vec<(usize, LoopBound)> = Vec::new();
    let mut entry_states: Vec<StateId> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        for tokens in tokenize_line(raw_line, line)? {
            let mut cur = Cursor {
                tokens: &tokens,
                pos: 1,
                line,
            };
            let keyword = &tokens[0];
            match keyword.text.as_str() {
                "program" => {
                    let id = cur.ident("program name")?;
                    cur.finish()?;
                    if name.replace(id.text.clone()).is_some() {
                        return Err(ParseError::Semantic {
                            line,
                            message: "duplicate `program` directive".into(),
                        });
                    }
                }
                "block" => {
                    let id = cur.ident("block id")?.text.clone();
                    let mut cycles = None;
                    let mut ops = Vec::new();
                    let mut label = None;
                    for t in cur.rest() {
                        let (key, value) = t
                            .text
                            .split_once('=')
                            .ok_or_else(|| cur.syntax(t.column, format!("expected key=value, found `{}`", t.text)))?;
                        let value_col = t.column + key.len() + 1;
                        match key {
                            "cycles" if cycles.is_none() => {
                                cycles =
                                    Some(value.parse::<u64>().map_err(|_| {
                                        cur.syntax(value_col, format!("invalid cycle count `{value}`"))
                                    })?);
                            }
                            "ops" if ops.is_empty() => {
                                ops = ident_list(value, line, value_col)?
                                    .into_iter()
                                    .map(DeviceOp::new)
                                    .collect();
                            }
                            "label" if label.is_none() => {
                                label = Some(unquote(value, line, value_col)?);
                            }
                            _ => return Err(cur.syntax(t.column, format!("unexpected or repeated attribute `{key}`"))),
                        }
                    }
                    let cycles = cycles.ok_or_else(|| cur.syntax(cur.end_column(), "block requires cycles=<u64>"))?;
                    blocks.push((
                        line,
                        BasicBlock {
                            id: BlockId(id),
                            cycles,
                            device_ops: ops,
                            label,
                        },
                    ));
                }
                "edge" => {
                    let from = cur.ident("source block")?.text.clone();
                    let to = cur.ident("target block")?.text.clone();
                    cur.finish()?;
                    edges.push((line, BlockId(from), BlockId(to)));
                }
                "entry" => {
                    let id = cur.ident("entry block")?.text.clone();
                    cur.finish()?;
                    if entry.replace((line, BlockId(id))).is_some() {
                        return Err(ParseError::Semantic {
                            line,
                            message: "duplicate `entry` directive".into(),
                        });
                    }
                }
                "exit" => {
                    let id = cur.ident("exit block")?.text.clone();
                    cur.finish()?;
                    exits.push((line, BlockId(id)));
                }
                "loopbound" => {
                    let header = cur.ident("loop header")?.text.clone();
                    let bound = cur.number("loop bound")?;
                    let origin = match cur.rest() {
                        [t] => {
                            let value = t
                                .text
                                .strip_prefix("origin=")
                                .ok_or_else(|| cur.syntax(t.column, "expected origin=<driver|hardware|protocol>"))?;
                            BoundOrigin::parse(value)
                                .ok_or_else(|| cur.syntax(t.column + 7, format!("unknown origin `{value}`")))?
                        }
                        [] => return Err(cur.syntax(cur.end_column(), "expected origin=<driver|hardware|protocol>")),
                        [_, extra, ..] => return Err(cur.syntax(extra.column, format!("unexpected `{}`", extra.text))),
                    };
                    loop_bounds.push((
                        line,
                        LoopBound {
                            header: BlockId(header),
                            bound,
                            origin,
                        },
                    ));
                }
                "entry_states" => {
                    let t = cur
                        .tokens
                        .get(1)
                        .ok_or_else(|| cur.syntax(cur.end_column(), "expected state list"))?;
                    for s in ident_list(&t.text, line, t.column)? {
                        entry_states.push(StateId::new(s));
                    }
                    cur.pos = 2;
                    cur.finish()?;
                }
                other => {
                    return Err(ParseError::Syntax {
                        line,
                        column: keyword.column,
                        message: format!("unknown directive `{other}`"),
                    })
                }
            }
        }
    }

    let mut seen = HashSet::new();
    for (line, b) in &blocks {
        if !seen.insert(b.id.clone()) {
            return Err(ParseError::Semantic {
                line: *line,
                message: format!("duplicate block id `{}`", b.id),
            });
        }
    }
    let known = |line: usize, id: &BlockId, role: &str| {
        if seen.contains(id) {
            Ok(())
        } else {
            Err(ParseError::Semantic {
                line,
                message: format!("{role} names undefined block `{id}`"),
            })
        }
    };
    for (line, from, to) in &edges {
        known(*line, from, "edge")?;
        known(*line, to, "edge")?;
    }
    let (entry_line, entry) = entry.ok_or(ParseError::Semantic {
        line: text.lines().count().max(1),
        message: "missing `entry` directive".into(),
    })?;
    known(entry_line, &entry, "entry")?;
    for (line, id) in &exits {
        known(*line, id, "exit")?;
    }
    for (line, lb) in &loop_bounds {
        known(*line, &lb.header, "loopbound")?;
    }

    let mut program = WcirProgram {
        name: name.unwrap_or_else(|| "main".to_string()),
        blocks: blocks.into_iter().map(|(_, b)| b).collect(),
        edges: edges
            .into_iter()
            .map(|(_, from, to)| Edge {
                from,
                to,
                kind: EdgeKind::Forward,
            })
            .collect(),
        entry,
        exits: exits.into_iter().map(|(_, e)| e).collect(),
        loop_bounds: loop_bounds.into_iter().map(|(_, l)| l).collect(),
        entry_states,
    };
    program.classify_edges();
    Ok(program)
}

/// Renders a program in canonical WCIR text. `parse_wcir` of the result
/// reproduces the program exactly.
pub fn serialize_wcir(program: &WcirProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "program {}", program.name);
    if !program.entry_states.is_empty() {
        let states: Vec<&str> = program.entry_states.iter().map(|s| s.as_str()).collect();
        let _ = writeln!(out, "entry_states {}", states.join(","));
    }
    for b in &program.blocks {
        let _ = write!(out, "block {} cycles={}", b.id, b.cycles);
        if !b.device_ops.is_empty() {
            let ops: Vec<&str> = b.device_ops.iter().map(|o| o.as_str()).collect();
            let _ = write!(out, " ops={}", ops.join(","));
        }
        if let Some(label) = &b.label {
            let _ = write!(out, " label=\"{}\"", escape(label));
        }
        out.push('\n');
    }
    for e in &program.edges {
        let _ = writeln!(out, "edge {} {}", e.from, e.to);
    }
    let _ = writeln!(out, "entry {}", program.entry);
    for x in &program.exits {
        let _ = writeln!(out, "exit {x}");
    }
    for lb in &program.loop_bounds {
        let _ = writeln!(
            out,
            "loopbound {} {} origin={}",
            lb.header,
            lb.bound,
            lb.origin.as_str()
        );
    }
    out
}
