//! Lexer for MiniImp plus the reshaping transform that puts every lexical
//! token on its own line, so that token indices and program lines coincide.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TokenKind {
    Ident,
    Number,
    Punct,
    Keyword,
}

/// One lexical token; `index` is its 1-based position in the token stream,
/// equal to its line in the reshaped program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub index: u32,
    pub text: String,
    pub kind: TokenKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexError {
    pub position: usize,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "illegal character at byte {}", self.position)
    }
}

impl std::error::Error for LexError {}

pub const KEYWORDS: &[&str] = &[
    "int", "void", "if", "else", "while", "goto", "return", "assume", "error", "malloc", "free",
    "input",
];

const TWO_CHAR_PUNCT: &[&str] = &["&&", "||", "==", "!=", "<=", ">="];
const ONE_CHAR_PUNCT: &[char] = &[
    '(', ')', '{', '}', ';', ',', '=', '<', '>', '+', '-', '*', '&', '!', ':',
];

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let bytes = source.as_bytes();
    let mut pos = 0usize;
    let mut out = Vec::new();
    while pos < bytes.len() {
        let c = bytes[pos] as char;
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        if c == '/' && pos + 1 < bytes.len() && bytes[pos + 1] == b'/' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        if c.is_ascii_alphabetic() || c == '_' {
            while pos < bytes.len()
                && ((bytes[pos] as char).is_ascii_alphanumeric() || bytes[pos] == b'_')
            {
                pos += 1;
            }
            let text = &source[start..pos];
            let kind = if KEYWORDS.contains(&text) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            };
            push(&mut out, text, kind);
            continue;
        }
        if c.is_ascii_digit() {
            while pos < bytes.len() && (bytes[pos] as char).is_ascii_digit() {
                pos += 1;
            }
            push(&mut out, &source[start..pos], TokenKind::Number);
            continue;
        }
        if pos + 1 < bytes.len() {
            let two = &source[pos..pos + 2];
            if TWO_CHAR_PUNCT.contains(&two) {
                push(&mut out, two, TokenKind::Punct);
                pos += 2;
                continue;
            }
        }
        if ONE_CHAR_PUNCT.contains(&c) {
            push(&mut out, &source[pos..pos + 1], TokenKind::Punct);
            pos += 1;
            continue;
        }
        return Err(LexError { position: pos });
    }
    Ok(out)
}

fn push(out: &mut Vec<Token>, text: &str, kind: TokenKind) {
    out.push(Token {
        index: out.len() as u32 + 1,
        text: text.to_string(),
        kind,
    });
}

/// Reshapes a token stream so that line `k` holds exactly token `k`.
pub fn reshape(tokens: &[Token]) -> String {
    let mut s = String::new();
    for t in tokens {
        s.push_str(&t.text);
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_one_based_indices() {
        let ts = tokenize("a=0;").unwrap();
        let texts: Vec<&str> = ts.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["a", "=", "0", ";"]);
        let idxs: Vec<u32> = ts.iter().map(|t| t.index).collect();
        assert_eq!(idxs, [1, 2, 3, 4]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").unwrap().is_empty());
        assert_eq!(reshape(&[]), "");
    }

    #[test]
    fn if_else_sample_token_positions() {
        let ts = tokenize("if(a>0)b=1;else b=2;").unwrap();
        assert_eq!(ts.len(), 15);
        assert_eq!(ts[10].text, "else");
        assert_eq!(ts[10].index, 11);
        assert_eq!(ts[10].kind, TokenKind::Keyword);
    }

    #[test]
    fn two_char_operators_are_single_tokens() {
        let ts = tokenize("if(a>0||a<10)b=1;").unwrap();
        assert_eq!(ts[5].text, "||");
        assert_eq!(ts[5].index, 6);
        let ts = tokenize("a==b; c&&d; e<=f; g!=h;").unwrap();
        let ops: Vec<&str> = ts
            .iter()
            .filter(|t| t.kind == TokenKind::Punct && t.text.len() == 2)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(ops, ["==", "&&", "<=", "!="]);
    }

    #[test]
    fn reshape_puts_token_k_on_line_k() {
        let ts = tokenize("a=0;").unwrap();
        assert_eq!(reshape(&ts), "a\n=\n0\n;\n");
        let eight = tokenize("a=0;b=1;").unwrap();
        assert_eq!(eight.len(), 8);
        assert_eq!(reshape(&eight).lines().count(), 8);
    }

    #[test]
    fn reshape_then_tokenize_is_stable() {
        let src = "void main() { int a = 3; if (a > 0) { a = a - 1; } }";
        let t1 = tokenize(src).unwrap();
        let t2 = tokenize(&reshape(&t1)).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn concatenation_reproduces_source_modulo_whitespace() {
        let src = "int x = 1 + 2 * y;";
        let ts = tokenize(src).unwrap();
        let glued: String = ts.iter().map(|t| t.text.as_str()).collect();
        let stripped: String = src.chars().filter(|c| !c.is_whitespace()).collect();
        assert_eq!(glued, stripped);
    }

    #[test]
    fn illegal_character_reported_with_position() {
        let e = tokenize("a = $;").unwrap_err();
        assert_eq!(e.position, 4);
    }
}
