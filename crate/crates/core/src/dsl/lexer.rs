use super::{Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// Identifier or keyword.
    Word(String),
    /// Integer digits, without sign.
    Int(String),
    /// Decimal with a fraction and/or exponent, without sign.
    Dec(String),
    Str(String),
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Int(s) | Tok::Dec(s) => format!("number `{s}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
    /// Source text of the token.
    pub lexeme: String,
    /// First token on its line.
    pub line_start: bool,
}

const PUNCT: [&str; 21] = [
    "->", "!=", "<=", ">=", "(", ")", "{", "}", "[", "]", ",", ":", "=", "<", ">", ".", "?", "|", "$", "+", "-",
];

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }
}

/// Splits `text` into tokens. Stops at the first lexical error.
pub fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out: Vec<Token> = Vec::new();
    let mut last_line = 0;
    loop {
        while let Some(c) = cur.peek() {
            if c == '#' {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else if c.is_whitespace() {
                cur.bump();
            } else {
                break;
            }
        }
        let span = cur.span();
        let line_start = span.line != last_line;
        last_line = span.line;
        let Some(c) = cur.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                span,
                lexeme: String::new(),
                line_start,
            });
            return Ok(out);
        };
        let mut lexeme = String::new();
        let tok = if is_ident_start(c) {
            while let Some(c) = cur.peek().filter(|c| is_ident_char(*c)) {
                lexeme.push(c);
                cur.bump();
            }
            Tok::Word(lexeme.clone())
        } else if c.is_ascii_digit() {
            lex_number(&mut cur, &mut lexeme, span)?
        } else if c == '"' {
            cur.bump();
            lexeme.push('"');
            let mut value = String::new();
            loop {
                match cur.bump() {
                    None | Some('\n') => {
                        return Err(Diagnostic::error(span, "unterminated string literal", lexeme));
                    }
                    Some('"') => {
                        lexeme.push('"');
                        break;
                    }
                    Some('\\') => {
                        let esc_span = Span::new(cur.line, cur.col - 1);
                        let e = cur.bump();
                        let ch = match e {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('r') => '\r',
                            Some('"') => '"',
                            Some('\\') => '\\',
                            other => {
                                let shown = other.map(|c| format!("\\{c}")).unwrap_or_else(|| "\\".into());
                                return Err(Diagnostic::error(esc_span, "invalid escape sequence", shown));
                            }
                        };
                        lexeme.push('\\');
                        lexeme.push(e.expect("matched above"));
                        value.push(ch);
                    }
                    Some(ch) => {
                        lexeme.push(ch);
                        value.push(ch);
                    }
                }
            }
            Tok::Str(value)
        } else {
            let rest: String = cur.chars.clone().take(2).collect();
            match PUNCT.iter().find(|p| rest.starts_with(**p)) {
                Some(p) => {
                    for _ in 0..p.chars().count() {
                        cur.bump();
                    }
                    lexeme.push_str(p);
                    Tok::Punct(p)
                }
                None => {
                    return Err(Diagnostic::error(
                        span,
                        format!("unexpected character {c:?}"),
                        c.to_string(),
                    ));
                }
            }
        };
        out.push(Token {
            tok,
            span,
            lexeme,
            line_start,
        });
    }
}

fn lex_number(cur: &mut Cursor<'_>, lexeme: &mut String, span: Span) -> Result<Tok, Diagnostic> {
    let digits = |cur: &mut Cursor<'_>, lexeme: &mut String| {
        let mut n = 0;
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            lexeme.push(c);
            cur.bump();
            n += 1;
        }
        n
    };
    digits(cur, lexeme);
    let mut decimal = false;
    let mut probe = cur.chars.clone();
    if probe.next() == Some('.') && probe.next().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
        lexeme.push('.');
        digits(cur, lexeme);
        decimal = true;
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let mut probe = cur.chars.clone();
        probe.next();
        let mut next = probe.next();
        if matches!(next, Some('+' | '-')) {
            next = probe.next();
        }
        if next.is_some_and(|c| c.is_ascii_digit()) {
            lexeme.push(cur.bump().expect("peeked"));
            if matches!(cur.peek(), Some('+' | '-')) {
                lexeme.push(cur.bump().expect("peeked"));
            }
            digits(cur, lexeme);
            decimal = true;
        }
    }
    if cur.peek().is_some_and(is_ident_start) {
        return Err(Diagnostic::error(span, "malformed number", lexeme.clone()));
    }
    Ok(if decimal {
        Tok::Dec(lexeme.clone())
    } else {
        Tok::Int(lexeme.clone())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("a_1 -> 12 3.5 1e3 \"x\\n\" != ?"),
            [
                Tok::Word("a_1".into()),
                Tok::Punct("->"),
                Tok::Int("12".into()),
                Tok::Dec("3.5".into()),
                Tok::Dec("1e3".into()),
                Tok::Str("x\n".into()),
                Tok::Punct("!="),
                Tok::Punct("?"),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn member_access_is_not_a_decimal() {
        assert_eq!(
            toks("1.x"),
            [Tok::Int("1".into()), Tok::Punct("."), Tok::Word("x".into()), Tok::Eof]
        );
    }

    #[test]
    fn comments_and_positions() {
        let t = lex("# hi\n  concept # c\n\tx").unwrap();
        assert_eq!(t[0].span, Span::new(2, 3));
        assert!(t[0].line_start);
        assert_eq!((t[1].span.line, t[1].span.col), (3, 2));
    }

    #[test]
    fn columns_count_code_points() {
        let t = lex("\"é\" x").unwrap();
        assert_eq!(t[1].span.col, 5);
    }

    #[test]
    fn errors() {
        let e = lex("x \"abc").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
        let e = lex("\"a\\q\"").unwrap_err();
        assert_eq!((e.line, e.column, e.lexeme.as_str()), (1, 3, "\\q"));
        assert!(lex("@").is_err());
        assert!(lex("12abc").is_err());
        assert!(lex("ж").is_err());
    }
}
