use std::fmt;

/// A parsed S-expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    Str(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items) => Some(items),
            _ => None,
        }
    }

    /// `(head …)` with the given head symbol.
    pub fn is_call(&self, head: &str) -> bool {
        matches!(self.list(), Some([SExpr::Atom(h), ..]) if h == head)
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(a) => f.write_str(a),
            SExpr::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            SExpr::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("s-expression syntax error at byte {pos}: {msg}")]
pub struct SExprError {
    pub pos: usize,
    pub msg: String,
}

/// Parses every top-level expression in `text`. Comments (`;` to end of
/// line), string literals and `|quoted|` symbols are understood.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>, SExprError> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let mut stack: Vec<Vec<SExpr>> = vec![Vec::new()];
    while pos < bytes.len() {
        let c = bytes[pos];
        match c {
            b'(' => {
                stack.push(Vec::new());
                pos += 1;
            }
            b')' => {
                if stack.len() == 1 {
                    return Err(SExprError {
                        pos,
                        msg: "unbalanced `)`".into(),
                    });
                }
                let done = stack.pop().unwrap();
                stack.last_mut().unwrap().push(SExpr::List(done));
                pos += 1;
            }
            b';' => {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            }
            b'"' => {
                let mut s = String::new();
                pos += 1;
                loop {
                    match bytes.get(pos) {
                        None => {
                            return Err(SExprError {
                                pos,
                                msg: "unterminated string".into(),
                            })
                        }
                        Some(b'"') if bytes.get(pos + 1) == Some(&b'"') => {
                            s.push('"');
                            pos += 2;
                        }
                        Some(b'"') => {
                            pos += 1;
                            break;
                        }
                        Some(_) => {
                            let ch = text[pos..].chars().next().unwrap();
                            s.push(ch);
                            pos += ch.len_utf8();
                        }
                    }
                }
                stack.last_mut().unwrap().push(SExpr::Str(s));
            }
            b'|' => {
                let end = text[pos + 1..].find('|').ok_or(SExprError {
                    pos,
                    msg: "unterminated quoted symbol".into(),
                })?;
                stack
                    .last_mut()
                    .unwrap()
                    .push(SExpr::Atom(text[pos + 1..pos + 1 + end].to_string()));
                pos += end + 2;
            }
            c if c.is_ascii_whitespace() => pos += 1,
            _ => {
                let start = pos;
                while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && !b"()\";".contains(&bytes[pos]) {
                    pos += 1;
                }
                stack
                    .last_mut()
                    .unwrap()
                    .push(SExpr::Atom(text[start..pos].to_string()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(SExprError {
            pos,
            msg: "unbalanced `(`".into(),
        });
    }
    Ok(stack.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_and_strings() {
        let e = parse_all("sat\n((x (/ 1.0 2.0)))\n(error \"line 1: \"\"oops\"\"\") ; tail").unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e[0], SExpr::Atom("sat".into()));
        assert_eq!(e[1].to_string(), "((x (/ 1.0 2.0)))");
        assert!(e[2].is_call("error"));
        assert_eq!(e[2].list().unwrap()[1], SExpr::Str("line 1: \"oops\"".into()));
    }

    #[test]
    fn unbalanced() {
        assert!(parse_all("(a (b)").is_err());
        assert!(parse_all("a)").is_err());
        assert_eq!(parse_all("|a b|").unwrap(), vec![SExpr::Atom("a b".into())]);
    }
}
