//! Best-effort lexer for Puppet manifests.
//!
//! Only the regions the property counts depend on are distinguished:
//! comments (`#` to end of line and `/* ... */`), single- and double-quoted
//! string literals, words (`[A-Za-z0-9_:]+`), and the `=>` / `=` operators.
//! Everything else that is not whitespace becomes a one-character `Other`
//! token. Lexing never fails; unterminated regions are closed at end of input
//! and reported through [`TokenStream::warnings`].

use std::fmt;

/// One script: an identifier plus its text with line endings normalized to LF.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceScript {
    pub path: String,
    pub body: String,
}

impl SourceScript {
    pub fn new(path: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            body: body.into(),
        }
    }

    /// Decode raw file bytes: invalid UTF-8 becomes U+FFFD and every CR is dropped.
    pub fn from_bytes(path: impl Into<String>, bytes: &[u8]) -> Self {
        let text = String::from_utf8_lossy(bytes);
        let body = if text.contains('\r') {
            text.replace('\r', "")
        } else {
            text.into_owned()
        };
        Self::new(path, body)
    }

    /// Number of physical lines. A trailing newline does not start a new line.
    pub fn line_count(&self) -> usize {
        physical_lines(&self.body).count()
    }
}

pub(crate) fn physical_lines(body: &str) -> impl Iterator<Item = &str> {
    let trimmed = body.strip_suffix('\n').unwrap_or(body);
    let empty = body.is_empty();
    trimmed.split('\n').filter(move |_| !empty)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Comment,
    StringLiteral,
    Word,
    Operator,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    /// Byte offset of `text` within the script body.
    pub offset: usize,
    /// 1-based line of the first byte.
    pub line: usize,
}

impl Token<'_> {
    pub fn end(&self) -> usize {
        self.offset + self.text.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexWarning {
    UnterminatedString { line: usize },
    UnterminatedBlockComment { line: usize },
}

impl fmt::Display for LexWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexWarning::UnterminatedString { line } => {
                write!(f, "unterminated string literal starting on line {line}")
            }
            LexWarning::UnterminatedBlockComment { line } => {
                write!(f, "unterminated block comment starting on line {line}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TokenStream<'a> {
    pub script: &'a SourceScript,
    pub tokens: Vec<Token<'a>>,
    pub warnings: Vec<LexWarning>,
}

impl<'a> TokenStream<'a> {
    pub fn of_kind(&self, kind: TokenKind) -> impl Iterator<Item = &Token<'a>> + '_ {
        self.tokens.iter().filter(move |t| t.kind == kind)
    }

    /// Rebuild the body from tokens and the whitespace between them.
    pub fn reassemble(&self) -> String {
        let body = self.script.body.as_str();
        let mut out = String::with_capacity(body.len());
        let mut pos = 0;
        for tok in &self.tokens {
            out.push_str(&body[pos..tok.offset]);
            out.push_str(tok.text);
            pos = tok.end();
        }
        out.push_str(&body[pos..]);
        out
    }
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b':'
}

pub fn tokenize(script: &SourceScript) -> TokenStream<'_> {
    let body = script.body.as_str();
    let bytes = body.as_bytes();
    let mut tokens = Vec::new();
    let mut warnings = Vec::new();
    let mut pos = 0;
    let mut line = 1;

    while pos < bytes.len() {
        let b = bytes[pos];
        let start = pos;
        let start_line = line;

        let kind = match b {
            b'\n' => {
                line += 1;
                pos += 1;
                continue;
            }
            b'#' => {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                TokenKind::Comment
            }
            b'/' if bytes.get(pos + 1) == Some(&b'*') => {
                pos += 2;
                loop {
                    if pos >= bytes.len() {
                        warnings.push(LexWarning::UnterminatedBlockComment { line: start_line });
                        break;
                    }
                    if bytes[pos] == b'*' && bytes.get(pos + 1) == Some(&b'/') {
                        pos += 2;
                        break;
                    }
                    if bytes[pos] == b'\n' {
                        line += 1;
                    }
                    pos += 1;
                }
                TokenKind::Comment
            }
            b'\'' | b'"' => {
                let quote = b;
                pos += 1;
                loop {
                    if pos >= bytes.len() {
                        warnings.push(LexWarning::UnterminatedString { line: start_line });
                        break;
                    }
                    match bytes[pos] {
                        b'\\' if matches!(bytes.get(pos + 1), Some(b'\'' | b'"' | b'\\')) => {
                            pos += 2;
                        }
                        c if c == quote => {
                            pos += 1;
                            break;
                        }
                        c => {
                            if c == b'\n' {
                                line += 1;
                            }
                            pos += 1;
                        }
                    }
                }
                TokenKind::StringLiteral
            }
            b'=' => {
                pos += if bytes.get(pos + 1) == Some(&b'>') { 2 } else { 1 };
                TokenKind::Operator
            }
            b if is_word_byte(b) => {
                while pos < bytes.len() && is_word_byte(bytes[pos]) {
                    pos += 1;
                }
                TokenKind::Word
            }
            _ => {
                let ch = body[pos..].chars().next().expect("pos is on a char boundary");
                pos += ch.len_utf8();
                if ch.is_whitespace() {
                    continue;
                }
                TokenKind::Other
            }
        };

        tokens.push(Token {
            kind,
            text: &body[start..pos],
            offset: start,
            line: start_line,
        });
    }

    TokenStream {
        script,
        tokens,
        warnings,
    }
}

/// Replace every comment with a single space, leaving everything else intact.
pub fn strip_comments(script: &SourceScript) -> String {
    let stream = tokenize(script);
    let body = script.body.as_str();
    let mut out = String::with_capacity(body.len());
    let mut pos = 0;
    for tok in stream.of_kind(TokenKind::Comment) {
        out.push_str(&body[pos..tok.offset]);
        out.push(' ');
        pos = tok.end();
    }
    out.push_str(&body[pos..]);
    out
}
