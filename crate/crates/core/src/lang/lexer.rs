use super::term::Pos;
use super::SyntaxError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    /// Unquoted or quoted atom / functor name, including symbolic names.
    Name(String),
    Var(String),
    Int(i64),
    Open,
    Close,
    OpenList,
    CloseList,
    Comma,
    Bar,
    /// Clause terminator.
    End,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub start: Pos,
    pub end: Pos,
    /// Whitespace or a comment precedes this token.
    pub spaced: bool,
    /// The token was a quoted atom and must not be read as an operator.
    pub quoted: bool,
}

const SYMBOL_CHARS: &str = "+-*/\\^<>=~:.?@#&$";

fn is_symbol_char(c: char) -> bool {
    SYMBOL_CHARS.contains(c)
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        pos: Pos::new(1, 1),
    };
    let mut out = Vec::new();
    loop {
        let mut spaced = out.is_empty();
        // whitespace and comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                    spaced = true;
                }
                Some('%') => {
                    while let Some(c) = cur.peek() {
                        if c == '\n' {
                            break;
                        }
                        cur.bump();
                    }
                    spaced = true;
                }
                Some('/') if cur.peek2() == Some('*') => {
                    let at = cur.pos;
                    cur.bump();
                    cur.bump();
                    loop {
                        match cur.bump() {
                            Some('*') if cur.peek() == Some('/') => {
                                cur.bump();
                                break;
                            }
                            Some(_) => {}
                            None => return Err(SyntaxError::new(at, "unterminated block comment")),
                        }
                    }
                    spaced = true;
                }
                _ => break,
            }
        }
        let start = cur.pos;
        let Some(c) = cur.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                start,
                end: start,
                spaced: true,
                quoted: false,
            });
            return Ok(out);
        };
        let mut quoted = false;
        let tok = if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(d) = cur.peek().filter(|d| d.is_ascii_digit() || *d == '_') {
                cur.bump();
                if d != '_' {
                    s.push(d);
                }
            }
            let v = s
                .parse::<i64>()
                .map_err(|_| SyntaxError::new(start, format!("integer literal `{}` out of range", s)))?;
            Tok::Int(v)
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(d) = cur.peek().filter(|d| d.is_alphanumeric() || *d == '_') {
                cur.bump();
                s.push(d);
            }
            if c.is_uppercase() || c == '_' {
                Tok::Var(s)
            } else {
                Tok::Name(s)
            }
        } else if c == '\'' || c == '"' {
            cur.bump();
            quoted = true;
            let mut s = String::new();
            loop {
                match cur.bump() {
                    None => return Err(SyntaxError::new(start, "unterminated quoted name")),
                    Some('\\') => match cur.bump() {
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some(other) => s.push(other),
                        None => return Err(SyntaxError::new(start, "unterminated quoted name")),
                    },
                    Some(q) if q == c => {
                        if cur.peek() == Some(c) {
                            cur.bump();
                            s.push(c);
                        } else {
                            break;
                        }
                    }
                    Some(other) => s.push(other),
                }
            }
            Tok::Name(s)
        } else {
            match c {
                '(' => {
                    cur.bump();
                    Tok::Open
                }
                ')' => {
                    cur.bump();
                    Tok::Close
                }
                '[' => {
                    cur.bump();
                    Tok::OpenList
                }
                ']' => {
                    cur.bump();
                    Tok::CloseList
                }
                ',' => {
                    cur.bump();
                    Tok::Comma
                }
                '|' => {
                    cur.bump();
                    Tok::Bar
                }
                ';' | '!' => {
                    cur.bump();
                    Tok::Name(c.to_string())
                }
                '.' if cur.peek2().is_none_or(|n| n.is_whitespace() || n == '%') => {
                    cur.bump();
                    Tok::End
                }
                c if is_symbol_char(c) => {
                    let mut s = String::new();
                    while let Some(d) = cur.peek().filter(|d| is_symbol_char(*d)) {
                        // a '.' that ends a clause is not part of the operator
                        if d == '.' && !s.is_empty() && cur.peek2().is_none_or(|n| n.is_whitespace() || n == '%') {
                            break;
                        }
                        cur.bump();
                        s.push(d);
                    }
                    Tok::Name(s)
                }
                other => return Err(SyntaxError::new(start, format!("unexpected character `{}`", other))),
            }
        };
        out.push(Token {
            tok,
            start,
            end: cur.pos,
            spaced,
            quoted,
        });
    }
}
