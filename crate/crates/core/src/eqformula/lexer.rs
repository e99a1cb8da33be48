use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Num(u64),
    Eq,
    Neq,
    And,
    Or,
    Not,
    Arrow,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    Slash,
    DotDot,
    Assign,
    End,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub offset: usize,
}

/// Splits `text` into tokens; `#` and `//` start line comments.
pub(crate) fn lex(text: &str) -> Result<Vec<Token>> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' || (c == b'/' && b.get(i + 1) == Some(&b'/')) {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let two = |s: &[u8]| b[i..].starts_with(s);
        let tok = if two(b"!=") {
            i += 2;
            Tok::Neq
        } else if two(b"->") {
            i += 2;
            Tok::Arrow
        } else if two(b":=") {
            i += 2;
            Tok::Assign
        } else if two(b"..") {
            i += 2;
            Tok::DotDot
        } else if two(b"&&") || two(b"||") {
            i += 2;
            if c == b'&' { Tok::And } else { Tok::Or }
        } else if c.is_ascii_digit() {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let n = text[start..i]
                .parse()
                .map_err(|_| Error::syntax(start, "number out of range"))?;
            Tok::Num(n)
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'\'') {
                i += 1;
            }
            Tok::Ident(text[start..i].to_string())
        } else {
            i += 1;
            match c {
                b'=' => Tok::Eq,
                b'&' => Tok::And,
                b'|' => Tok::Or,
                b'!' | b'~' => Tok::Not,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'{' => Tok::LBrace,
                b'}' => Tok::RBrace,
                b'[' => Tok::LBracket,
                b']' => Tok::RBracket,
                b',' => Tok::Comma,
                b':' => Tok::Colon,
                b';' => Tok::Semi,
                b'/' => Tok::Slash,
                _ => {
                    let ch = text[start..].chars().next().unwrap_or('?');
                    return Err(Error::syntax(start, format!("unexpected character '{ch}'")));
                }
            }
        };
        out.push(Token { tok, offset: start });
    }
    out.push(Token { tok: Tok::End, offset: b.len() });
    Ok(out)
}

/// Cursor over a token list.
pub(crate) struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(text: &str) -> Result<Self> {
        Ok(Cursor { toks: lex(text)?, pos: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub fn offset(&self) -> usize {
        self.toks[self.pos].offset
    }

    pub fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: &Tok, what: &str) -> Result<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    pub fn number(&mut self, what: &str) -> Result<u64> {
        match *self.peek() {
            Tok::Num(n) => {
                self.next();
                Ok(n)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    pub fn at_end(&self) -> bool {
        *self.peek() == Tok::End
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            t => format!("{t:?}"),
        };
        Error::syntax(self.offset(), format!("{}, found {found}", message.into()))
    }

    /// Parses `a, b, c` or the range `x1..x6`.
    pub fn var_list(&mut self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        loop {
            let off = self.offset();
            let first = self.ident("variable name")?;
            if self.eat(&Tok::DotDot) {
                let last = self.ident("range end")?;
                out.extend(expand_range(&first, &last).ok_or_else(|| {
                    Error::syntax(off, format!("invalid variable range {first}..{last}"))
                })?);
            } else {
                out.push(first);
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }
}

fn split_num(s: &str) -> Option<(&str, u64)> {
    let idx = s.find(|c: char| c.is_ascii_digit())?;
    let (p, n) = s.split_at(idx);
    Some((p, n.parse().ok()?))
}

fn expand_range(first: &str, last: &str) -> Option<Vec<String>> {
    let (p1, a) = split_num(first)?;
    let (p2, b) = split_num(last)?;
    if p1 != p2 || a > b || b - a > 1024 {
        return None;
    }
    Some((a..=b).map(|i| format!("{p1}{i}")).collect())
}
