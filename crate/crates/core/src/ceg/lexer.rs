//! Language-agnostic lexer tuned for Python-like source.
//!
//! Tokens are identifiers (keywords included), numbers, string literals,
//! operators and punctuation. Whitespace, line breaks and `#` comments are
//! skipped. Numbers take an optional fraction, exponent and `j` suffix;
//! strings take an optional alphabetic prefix (`r`, `b`, `f`, ...) and may be
//! triple quoted. Operators are matched longest first, so `**=` is one token.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Identifier,
    Number,
    Str,
    Operator,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based line of the first character.
    pub line: usize,
    /// 0-based column, in characters.
    pub col: usize,
}

const OPERATORS: [&str; 47] = [
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "==", "!=", "<=", ">=", "<<", ">>",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "&&", "||", "++", "--", "::", "+", "-",
    "*", "/", "%", "@", "&", "|", "^", "~", "<", ">", "=", "!", "?", ".", ":", ";",
];

const PUNCT: [char; 7] = ['(', ')', '[', ']', '{', '}', ','];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct LexError {
    pub line: usize,
    pub msg: String,
}

pub fn tokenize(code: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = code.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 0usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize, chars: &[char]| {
        for c in &chars[*i..*i + n] {
            if *c == '\n' {
                *line += 1;
                *col = 0;
            } else {
                *col += 1;
            }
        }
        *i += n;
    };
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let len;
        let kind;
        if c.is_whitespace() || (c == '\\' && chars.get(i + 1) == Some(&'\n')) {
            advance(&mut i, &mut line, &mut col, 1, &chars);
            continue;
        } else if c == '#' {
            let n = chars[i..]
                .iter()
                .position(|c| *c == '\n')
                .unwrap_or(chars.len() - i);
            advance(&mut i, &mut line, &mut col, n, &chars);
            continue;
        } else if let Some(n) = string_len(&chars[i..]) {
            let n = n.map_err(|msg| LexError { line, msg })?;
            len = n;
            kind = TokenKind::Str;
        } else if c.is_alphabetic() || c == '_' {
            len = chars[i..]
                .iter()
                .take_while(|c| c.is_alphanumeric() || **c == '_')
                .count();
            kind = TokenKind::Identifier;
        } else if c.is_ascii_digit()
            || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            len = number_len(&chars[i..]);
            kind = TokenKind::Number;
        } else if PUNCT.contains(&c) {
            len = 1;
            kind = TokenKind::Punct;
        } else if let Some(op) = OPERATORS.iter().find(|op| starts_with(&chars[i..], op)) {
            len = op.chars().count();
            kind = TokenKind::Operator;
        } else {
            return Err(LexError {
                line,
                msg: format!("unexpected character {c:?}"),
            });
        }
        let text: String = chars[i..i + len].iter().collect();
        advance(&mut i, &mut line, &mut col, len, &chars);
        out.push(Token {
            kind,
            text,
            line: start_line,
            col: start_col,
        });
    }
    Ok(out)
}

fn starts_with(chars: &[char], s: &str) -> bool {
    let mut it = chars.iter();
    s.chars().all(|c| it.next() == Some(&c))
}

/// Length of a string literal starting at `chars[0]`, or `None` if there is
/// none there.
fn string_len(chars: &[char]) -> Option<Result<usize, String>> {
    let prefix = chars.iter().take_while(|c| c.is_ascii_alphabetic()).count();
    if prefix > 2 || !chars[..prefix].iter().all(|c| "rRbBuUfF".contains(*c)) {
        return None;
    }
    let q = *chars.get(prefix)?;
    if q != '"' && q != '\'' {
        return None;
    }
    let triple = chars.get(prefix + 1) == Some(&q) && chars.get(prefix + 2) == Some(&q);
    let open = if triple { 3 } else { 1 };
    let mut j = prefix + open;
    while j < chars.len() {
        let c = chars[j];
        // a backslash never lets the next character close the literal, raw
        // strings included
        if c == '\\' {
            j += 2;
            continue;
        }
        if !triple && c == '\n' {
            return Some(Err("unterminated string literal".into()));
        }
        if c == q && (!triple || (chars.get(j + 1) == Some(&q) && chars.get(j + 2) == Some(&q))) {
            return Some(Ok(j + open));
        }
        j += 1;
    }
    Some(Err("unterminated string literal".into()))
}

fn number_len(chars: &[char]) -> usize {
    let digits = |from: usize| {
        chars[from..]
            .iter()
            .take_while(|c| c.is_ascii_alphanumeric() || **c == '_')
            .count()
    };
    if chars[0] == '0' && chars.get(1).is_some_and(|c| "xXoObB".contains(*c)) {
        return 2 + digits(2);
    }
    let int = |from: usize| {
        chars[from..]
            .iter()
            .take_while(|c| c.is_ascii_digit() || **c == '_')
            .count()
    };
    let mut j = int(0);
    if chars.get(j) == Some(&'.') {
        j += 1 + int(j + 1);
    }
    if chars.get(j).is_some_and(|c| *c == 'e' || *c == 'E') {
        let sign = usize::from(chars.get(j + 1).is_some_and(|c| *c == '+' || *c == '-'));
        if chars.get(j + 1 + sign).is_some_and(|c| c.is_ascii_digit()) {
            j += 1 + sign + int(j + 1 + sign);
        }
    }
    if chars.get(j).is_some_and(|c| *c == 'j' || *c == 'J') {
        j += 1;
    }
    j
}
