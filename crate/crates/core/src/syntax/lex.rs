//! Character cursor shared by the text-format parsers.

use super::ParseError;

pub(crate) struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

pub(crate) fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn closer(c: char) -> Option<char> {
    match c {
        '{' => Some('}'),
        '[' => Some(']'),
        '<' => Some('>'),
        _ => None,
    }
}

impl<'a> Cursor<'a> {
    pub fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0, line: 1, col: 1 }
    }

    pub fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    pub fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    pub fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    pub fn loc(&self) -> (usize, usize) {
        (self.line, self.col)
    }

    /// Skips whitespace and `#` line comments.
    pub fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    pub fn at_eof(&mut self) -> bool {
        self.skip_trivia();
        self.peek().is_none()
    }

    pub fn eat(&mut self, c: char) -> bool {
        self.skip_trivia();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{c}'")))
        }
    }

    /// Builds an error describing what was found at the current position.
    pub fn unexpected(&mut self, expected: &str) -> ParseError {
        self.skip_trivia();
        let (line, col) = self.loc();
        match self.peek() {
            None => ParseError::Eof { line, col, expected: expected.to_string() },
            Some(c) if is_name_char(c) || "()[]{}<>,.;=|-!&".contains(c) => ParseError::Unexpected {
                line,
                col,
                expected: expected.to_string(),
                found: c.to_string(),
            },
            Some(c) => ParseError::BadChar { line, col, ch: c },
        }
    }

    /// Plain identifier `[A-Za-z0-9_]+`.
    pub fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        self.skip_trivia();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if is_name_char(c)) {
            self.bump();
        }
        if self.pos == start {
            return Err(self.unexpected(what));
        }
        Ok(self.src[start..self.pos].to_string())
    }

    pub fn peek_is_name(&mut self) -> bool {
        self.skip_trivia();
        matches!(self.peek(), Some(c) if is_name_char(c))
    }

    pub fn peek_is_letter_start(&mut self) -> bool {
        self.skip_trivia();
        matches!(self.peek(), Some(c) if is_name_char(c) || closer(c).is_some())
    }

    /// Letter token: name characters, `|` separators and balanced
    /// bracket groups (`{}`, `[]`, `<>`) whose contents are arbitrary.
    pub fn letter_token(&mut self) -> Result<String, ParseError> {
        self.skip_trivia();
        let start = self.pos;
        loop {
            match self.peek() {
                Some(c) if is_name_char(c) || c == '|' => {
                    self.bump();
                }
                Some(c) if closer(c).is_some() => {
                    let (line, col) = self.loc();
                    let mut stack = vec![closer(c).unwrap()];
                    self.bump();
                    while let Some(&want) = stack.last() {
                        match self.bump() {
                            None | Some('\n') => {
                                return Err(ParseError::Unbalanced { line, col });
                            }
                            Some(d) if d == want => {
                                stack.pop();
                            }
                            Some(d) => {
                                if let Some(cl) = closer(d) {
                                    stack.push(cl);
                                } else if matches!(d, '}' | ']') {
                                    return Err(ParseError::Unbalanced { line, col });
                                }
                            }
                        }
                    }
                }
                _ => break,
            }
        }
        if self.pos == start {
            return Err(self.unexpected("letter"));
        }
        Ok(self.src[start..self.pos].to_string())
    }
}
