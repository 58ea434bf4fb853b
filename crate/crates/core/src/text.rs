//! Restricted structured-text parser for configuration and scenario files.
//!
//! The accepted language is a YAML-compatible subset: indentation-scoped
//! maps and lists of scalars. No anchors, aliases, flow syntax, multi-line
//! scalars, or type tags. `#` starts a comment. Scalars may be double-quoted
//! when they contain `#` or `:`.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct TextError {
    pub line: usize,
    pub message: String,
}

impl TextError {
    fn new(line: usize, message: impl Into<String>) -> TextError {
        TextError {
            line,
            message: message.into(),
        }
    }
}

/// A parsed node, tagged with its source line for error reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub line: usize,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Kind {
    Scalar(String),
    Map(Vec<(String, Node)>),
    List(Vec<Node>),
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Scalar(_) => f.write_str("scalar"),
            Kind::Map(_) => f.write_str("map"),
            Kind::List(_) => f.write_str("list"),
        }
    }
}

impl Node {
    pub fn as_str(&self) -> Result<&str, TextError> {
        match &self.kind {
            Kind::Scalar(s) => Ok(s),
            other => Err(TextError::new(
                self.line,
                format!("expected scalar, found {other}"),
            )),
        }
    }

    pub fn as_map(&self) -> Result<&[(String, Node)], TextError> {
        match &self.kind {
            Kind::Map(m) => Ok(m),
            other => Err(TextError::new(
                self.line,
                format!("expected map, found {other}"),
            )),
        }
    }

    pub fn as_list(&self) -> Result<&[Node], TextError> {
        match &self.kind {
            Kind::List(l) => Ok(l),
            other => Err(TextError::new(
                self.line,
                format!("expected list, found {other}"),
            )),
        }
    }

    pub fn get(&self, key: &str) -> Option<&Node> {
        match &self.kind {
            Kind::Map(m) => m.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    /// Required map lookup.
    pub fn req(&self, key: &str) -> Result<&Node, TextError> {
        self.as_map()?;
        self.get(key)
            .ok_or_else(|| TextError::new(self.line, format!("missing required key `{key}`")))
    }

    pub fn str_of(&self, key: &str) -> Result<String, TextError> {
        Ok(self.req(key)?.as_str()?.to_string())
    }

    pub fn u64_of(&self, key: &str) -> Result<u64, TextError> {
        let node = self.req(key)?;
        let s = node.as_str()?;
        s.parse()
            .map_err(|_| TextError::new(node.line, format!("`{key}` is not an integer: {s}")))
    }

    /// Comma-separated scalar convenience: `roles: endorser,committer`.
    pub fn csv_of(&self, key: &str) -> Result<Vec<String>, TextError> {
        let s = self.str_of(key)?;
        Ok(s.split(',')
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty())
            .collect())
    }
}

/// Parses a duration scalar (`250us`, `150ms`, `2s`) into microseconds.
pub fn parse_duration_us(s: &str, line: usize) -> Result<u64, TextError> {
    let s = s.trim();
    let (num, mult) = if let Some(v) = s.strip_suffix("us") {
        (v, 1)
    } else if let Some(v) = s.strip_suffix("ms") {
        (v, 1_000)
    } else if let Some(v) = s.strip_suffix('s') {
        (v, 1_000_000)
    } else {
        (s, 1_000_000)
    };
    let n: u64 = num
        .trim()
        .parse()
        .map_err(|_| TextError::new(line, format!("bad duration: {s}")))?;
    Ok(n * mult)
}

struct Line {
    no: usize,
    indent: usize,
    text: String,
}

pub fn parse(input: &str) -> Result<Node, TextError> {
    let mut lines = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let no = idx + 1;
        let stripped = strip_comment(raw);
        if stripped.trim().is_empty() {
            continue;
        }
        if stripped.contains('\t') {
            return Err(TextError::new(no, "tabs are not allowed in indentation"));
        }
        let indent = stripped.len() - stripped.trim_start().len();
        lines.push(Line {
            no,
            indent,
            text: stripped.trim().to_string(),
        });
    }
    if lines.is_empty() {
        return Ok(Node {
            line: 0,
            kind: Kind::Map(Vec::new()),
        });
    }
    let mut pos = 0;
    let root = parse_block(&lines, &mut pos, lines[0].indent)?;
    if pos != lines.len() {
        return Err(TextError::new(
            lines[pos].no,
            "unexpected de-indentation or mixed structure",
        ));
    }
    Ok(root)
}

fn strip_comment(raw: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in raw.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &raw[..i],
            _ => {}
        }
    }
    raw
}

fn parse_block(lines: &[Line], pos: &mut usize, indent: usize) -> Result<Node, TextError> {
    let start = lines[*pos].no;
    if lines[*pos].text.starts_with('-') {
        parse_list(lines, pos, indent).map(|items| Node {
            line: start,
            kind: Kind::List(items),
        })
    } else {
        parse_map(lines, pos, indent).map(|entries| Node {
            line: start,
            kind: Kind::Map(entries),
        })
    }
}

fn parse_map(
    lines: &[Line],
    pos: &mut usize,
    indent: usize,
) -> Result<Vec<(String, Node)>, TextError> {
    let mut entries: Vec<(String, Node)> = Vec::new();
    while *pos < lines.len() && lines[*pos].indent == indent {
        let line = &lines[*pos];
        if line.text.starts_with('-') {
            return Err(TextError::new(line.no, "list item inside a map"));
        }
        let (key, rest) = split_key(&line.text, line.no)?;
        if entries.iter().any(|(k, _)| *k == key) {
            return Err(TextError::new(line.no, format!("duplicate key `{key}`")));
        }
        *pos += 1;
        let value = if rest.is_empty() {
            if *pos < lines.len() && lines[*pos].indent > indent {
                let child_indent = lines[*pos].indent;
                parse_block(lines, pos, child_indent)?
            } else {
                Node {
                    line: line.no,
                    kind: Kind::Scalar(String::new()),
                }
            }
        } else {
            Node {
                line: line.no,
                kind: Kind::Scalar(unquote(rest, line.no)?),
            }
        };
        entries.push((key, value));
        if *pos < lines.len() && lines[*pos].indent > indent {
            return Err(TextError::new(
                lines[*pos].no,
                "unexpected indentation after scalar value",
            ));
        }
    }
    Ok(entries)
}

fn parse_list(lines: &[Line], pos: &mut usize, indent: usize) -> Result<Vec<Node>, TextError> {
    let mut items = Vec::new();
    while *pos < lines.len() && lines[*pos].indent == indent {
        let line = &lines[*pos];
        let Some(rest) = line.text.strip_prefix('-') else {
            return Err(TextError::new(line.no, "map key inside a list"));
        };
        let rest = rest.trim_start();
        if rest.is_empty() {
            // item body on the following deeper lines
            *pos += 1;
            if *pos < lines.len() && lines[*pos].indent > indent {
                let child_indent = lines[*pos].indent;
                items.push(parse_block(lines, pos, child_indent)?);
            } else {
                items.push(Node {
                    line: line.no,
                    kind: Kind::Scalar(String::new()),
                });
            }
        } else if is_map_entry(rest) {
            // inline first entry; continuation lines are indented past the dash
            let dash_col = line.indent;
            let first = Line {
                no: line.no,
                indent: dash_col + 2,
                text: rest.to_string(),
            };
            *pos += 1;
            let mut sub = vec![first];
            while *pos < lines.len() && lines[*pos].indent > dash_col {
                sub.push(Line {
                    no: lines[*pos].no,
                    indent: lines[*pos].indent,
                    text: lines[*pos].text.clone(),
                });
                *pos += 1;
            }
            // normalize continuation indent to the synthetic first entry
            let cont_indent = sub.get(1).map(|l| l.indent);
            if let Some(ci) = cont_indent {
                for l in sub.iter_mut().skip(1) {
                    if l.indent == ci {
                        l.indent = dash_col + 2;
                    }
                }
            }
            let mut sub_pos = 0;
            let entries = parse_map(&sub, &mut sub_pos, dash_col + 2)?;
            if sub_pos != sub.len() {
                return Err(TextError::new(sub[sub_pos].no, "bad indentation in list item"));
            }
            items.push(Node {
                line: line.no,
                kind: Kind::Map(entries),
            });
        } else {
            items.push(Node {
                line: line.no,
                kind: Kind::Scalar(unquote(rest, line.no)?),
            });
            *pos += 1;
        }
    }
    Ok(items)
}

fn is_map_entry(s: &str) -> bool {
    split_key(s, 0).is_ok()
}

fn split_key<'a>(text: &'a str, line: usize) -> Result<(String, &'a str), TextError> {
    // key is an unquoted identifier up to the first ':'
    let colon = text
        .find(':')
        .ok_or_else(|| TextError::new(line, format!("expected `key: value`, found `{text}`")))?;
    let key = text[..colon].trim();
    if key.is_empty() || key.contains('"') || key.contains(' ') {
        return Err(TextError::new(line, format!("bad key `{key}`")));
    }
    Ok((key.to_string(), text[colon + 1..].trim()))
}

fn unquote(s: &str, line: usize) -> Result<String, TextError> {
    if let Some(inner) = s.strip_prefix('"') {
        let inner = inner
            .strip_suffix('"')
            .ok_or_else(|| TextError::new(line, "unterminated quoted scalar"))?;
        let mut out = String::new();
        let mut chars = inner.chars();
        while let Some(c) = chars.next() {
            if c == '\\' {
                match chars.next() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    _ => return Err(TextError::new(line, "bad escape in quoted scalar")),
                }
            } else {
                out.push(c);
            }
        }
        Ok(out)
    } else {
        Ok(s.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_maps_and_lists() {
        let doc = "\
consortium: X
organizations:
  - org: R1
    peers:
      - peer: P1
        roles: endorser,committer
  - org: R2
    peers:
      - peer: P2
        roles: endorser # trailing comment
channels:
  - channel: C
    members: R1,R2
";
        let root = parse(doc).unwrap();
        assert_eq!(root.str_of("consortium").unwrap(), "X");
        let orgs = root.req("organizations").unwrap().as_list().unwrap();
        assert_eq!(orgs.len(), 2);
        assert_eq!(orgs[0].str_of("org").unwrap(), "R1");
        let peers = orgs[0].req("peers").unwrap().as_list().unwrap();
        assert_eq!(
            peers[0].csv_of("roles").unwrap(),
            vec!["endorser", "committer"]
        );
        let channels = root.req("channels").unwrap().as_list().unwrap();
        assert_eq!(channels[0].csv_of("members").unwrap(), vec!["R1", "R2"]);
    }

    #[test]
    fn quoted_scalars_preserve_specials() {
        let doc = "policy: \"AND(R1.peer, R2.peer) # not a comment\"\n";
        let root = parse(doc).unwrap();
        assert_eq!(
            root.str_of("policy").unwrap(),
            "AND(R1.peer, R2.peer) # not a comment"
        );
    }

    #[test]
    fn reports_line_numbers() {
        let doc = "a: 1\nb\n";
        let err = parse(doc).unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn duplicate_keys_rejected() {
        let err = parse("a: 1\na: 2\n").unwrap_err();
        assert!(err.message.contains("duplicate"));
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration_us("250us", 1).unwrap(), 250);
        assert_eq!(parse_duration_us("150ms", 1).unwrap(), 150_000);
        assert_eq!(parse_duration_us("2s", 1).unwrap(), 2_000_000);
        assert!(parse_duration_us("abc", 1).is_err());
    }

    #[test]
    fn scalar_list_items() {
        let doc = "groups:\n  - O1,O2\n  - O3\n";
        let root = parse(doc).unwrap();
        let groups = root.req("groups").unwrap().as_list().unwrap();
        assert_eq!(groups[0].as_str().unwrap(), "O1,O2");
        assert_eq!(groups[1].as_str().unwrap(), "O3");
    }
}
