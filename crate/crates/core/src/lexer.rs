//! Java lexer producing the token stream shared by every token-based metric.
//!
//! Whitespace never produces tokens. Comments are either dropped or split
//! into lowercase word tokens (`TokenKind::CommentWord`) depending on
//! [`LexConfig`]. String and character literals are kept whole, quotes
//! included, and numeric literals are kept verbatim.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// The 50 reserved words plus the `true`, `false` and `null` literals.
pub const KEYWORDS: [&str; 53] = [
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
    "true",
    "false",
    "null",
];

pub fn is_keyword(text: &str) -> bool {
    KEYWORDS.contains(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Literal,
    Operator,
    Punctuation,
    CommentWord,
}

impl TokenKind {
    pub fn is_code(self) -> bool {
        self != TokenKind::CommentWord
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based.
    pub line: u32,
    /// 1-based, counted in characters.
    pub column: u32,
}

impl Token {
    pub fn new(kind: TokenKind, text: impl Into<String>, line: u32, column: u32) -> Self {
        Self {
            kind,
            text: text.into(),
            line,
            column,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{} {:?} {}",
            self.line, self.column, self.kind, self.text
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexConfig {
    pub include_comments: bool,
    /// Replace each identifier by its camelCase / snake_case / digit subtokens.
    pub split_identifiers: bool,
    pub lowercase_comment_words: bool,
}

impl Default for LexConfig {
    fn default() -> Self {
        Self {
            include_comments: true,
            split_identifiers: false,
            lowercase_comment_words: true,
        }
    }
}

impl LexConfig {
    /// Stable short hash of the configuration, recorded alongside scores.
    pub fn fingerprint(&self) -> String {
        let canonical = format!(
            "lex/v1;include_comments={};split_identifiers={};lowercase_comment_words={}",
            self.include_comments, self.split_identifiers, self.lowercase_comment_words
        );
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub source_id: String,
    pub config_fingerprint: String,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    pub fn code_tokens(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.kind.is_code())
    }

    /// Build a stream from whitespace-separated words, all tagged as
    /// identifiers (keywords keep their kind). Handy for metric tests that
    /// operate on plain word sequences.
    pub fn from_words(words: &str) -> Self {
        let tokens = words
            .split_whitespace()
            .enumerate()
            .map(|(i, w)| {
                let kind = if is_keyword(w) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                Token::new(kind, w, 1, i as u32 + 1)
            })
            .collect();
        Self {
            tokens,
            source_id: String::from("<words>"),
            config_fingerprint: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated string literal starting at {line}:{column}")]
    UnterminatedString { line: u32, column: u32 },
    #[error("unterminated comment starting at {line}:{column}")]
    UnterminatedComment { line: u32, column: u32 },
    #[error("unexpected character {ch:?} at {line}:{column}")]
    UnexpectedChar { ch: char, line: u32, column: u32 },
}

impl LexError {
    pub fn position(&self) -> (u32, u32) {
        match *self {
            LexError::UnterminatedString { line, column }
            | LexError::UnterminatedComment { line, column }
            | LexError::UnexpectedChar { line, column, .. } => (line, column),
        }
    }
}

// Longest first so maximal munch works with a simple prefix scan.
const OPERATORS: [&str; 37] = [
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "=", "<", ">", "!", "~", "?", ":",
    "+", "-", "*", "/", "%",
];

const SINGLE_OPERATORS: [char; 3] = ['&', '|', '^'];
const PUNCTUATION: [char; 9] = ['(', ')', '{', '}', '[', ']', ';', ',', '@'];

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    column: u32,
}

impl Cursor {
    fn new(src: &str) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn bump_n(&mut self, n: usize) -> String {
        (0..n).filter_map(|_| self.bump()).collect()
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

/// Tokenize Java source text.
pub fn lex(source: &str, config: &LexConfig) -> Result<TokenStream, LexError> {
    lex_with_id(source, "<input>", config)
}

pub fn lex_with_id(
    source: &str,
    source_id: &str,
    config: &LexConfig,
) -> Result<TokenStream, LexError> {
    let mut cur = Cursor::new(source);
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        let (line, column) = (cur.line, cur.column);

        if c.is_whitespace() {
            cur.bump();
            continue;
        }

        if cur.starts_with("//") {
            cur.bump_n(2);
            let mut body = Vec::new();
            while let Some(ch) = cur.peek() {
                if ch == '\n' {
                    break;
                }
                body.push((ch, cur.line, cur.column));
                cur.bump();
            }
            if config.include_comments {
                push_comment_words(&body, config, &mut tokens);
            }
            continue;
        }

        if cur.starts_with("/*") {
            cur.bump_n(2);
            let mut body = Vec::new();
            let mut closed = false;
            while let Some(ch) = cur.peek() {
                if cur.starts_with("*/") {
                    cur.bump_n(2);
                    closed = true;
                    break;
                }
                body.push((ch, cur.line, cur.column));
                cur.bump();
            }
            if !closed {
                return Err(LexError::UnterminatedComment { line, column });
            }
            if config.include_comments {
                push_comment_words(&body, config, &mut tokens);
            }
            continue;
        }

        if cur.starts_with("\"\"\"") {
            let text =
                lex_text_block(&mut cur).ok_or(LexError::UnterminatedString { line, column })?;
            tokens.push(Token::new(TokenKind::Literal, text, line, column));
            continue;
        }

        if c == '"' || c == '\'' {
            let text =
                lex_quoted(&mut cur, c).ok_or(LexError::UnterminatedString { line, column })?;
            tokens.push(Token::new(TokenKind::Literal, text, line, column));
            continue;
        }

        if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            let text = lex_number(&mut cur);
            tokens.push(Token::new(TokenKind::Literal, text, line, column));
            continue;
        }

        if is_ident_start(c) {
            let mut text = String::new();
            while let Some(ch) = cur.peek() {
                if !is_ident_part(ch) {
                    break;
                }
                text.push(ch);
                cur.bump();
            }
            if is_keyword(&text) {
                tokens.push(Token::new(TokenKind::Keyword, text, line, column));
            } else if config.split_identifiers {
                for part in split_subtokens(&text) {
                    tokens.push(Token::new(TokenKind::Identifier, part, line, column));
                }
            } else {
                tokens.push(Token::new(TokenKind::Identifier, text, line, column));
            }
            continue;
        }

        if PUNCTUATION.contains(&c) {
            cur.bump();
            tokens.push(Token::new(
                TokenKind::Punctuation,
                c.to_string(),
                line,
                column,
            ));
            continue;
        }

        if let Some(op) = OPERATORS.iter().find(|op| cur.starts_with(op)) {
            let text = cur.bump_n(op.chars().count());
            let kind = if text == "..." {
                TokenKind::Punctuation
            } else {
                TokenKind::Operator
            };
            tokens.push(Token::new(kind, text, line, column));
            continue;
        }

        if SINGLE_OPERATORS.contains(&c) {
            cur.bump();
            tokens.push(Token::new(TokenKind::Operator, c.to_string(), line, column));
            continue;
        }

        if c == '.' {
            cur.bump();
            tokens.push(Token::new(TokenKind::Punctuation, ".", line, column));
            continue;
        }

        return Err(LexError::UnexpectedChar {
            ch: c,
            line,
            column,
        });
    }

    Ok(TokenStream {
        tokens,
        source_id: source_id.to_string(),
        config_fingerprint: config.fingerprint(),
    })
}

fn push_comment_words(body: &[(char, u32, u32)], config: &LexConfig, out: &mut Vec<Token>) {
    let mut word = String::new();
    let mut start = (0, 0);
    for &(ch, line, column) in body.iter().chain(std::iter::once(&(' ', 0, 0))) {
        if ch.is_alphanumeric() {
            if word.is_empty() {
                start = (line, column);
            }
            word.push(ch);
        } else if !word.is_empty() {
            let text = if config.lowercase_comment_words {
                word.to_lowercase()
            } else {
                std::mem::take(&mut word)
            };
            word.clear();
            out.push(Token::new(TokenKind::CommentWord, text, start.0, start.1));
        }
    }
}

fn lex_quoted(cur: &mut Cursor, quote: char) -> Option<String> {
    let mut text = String::new();
    text.push(cur.bump()?);
    loop {
        let ch = cur.peek()?;
        if ch == '\n' {
            return None;
        }
        cur.bump();
        text.push(ch);
        if ch == '\\' {
            let escaped = cur.peek()?;
            if escaped == '\n' {
                return None;
            }
            cur.bump();
            text.push(escaped);
        } else if ch == quote {
            return Some(text);
        }
    }
}

fn lex_text_block(cur: &mut Cursor) -> Option<String> {
    let mut text = cur.bump_n(3);
    loop {
        if cur.starts_with("\"\"\"") {
            text.push_str(&cur.bump_n(3));
            return Some(text);
        }
        let ch = cur.bump()?;
        text.push(ch);
        if ch == '\\' {
            text.push(cur.bump()?);
        }
    }
}

fn lex_number(cur: &mut Cursor) -> String {
    let mut text = String::new();
    let hex = cur.starts_with("0x") || cur.starts_with("0X");
    let bin = cur.starts_with("0b") || cur.starts_with("0B");
    if hex || bin {
        text.push_str(&cur.bump_n(2));
        while let Some(ch) = cur.peek() {
            let ok = if hex {
                ch.is_ascii_hexdigit() || ch == '_' || ch == '.'
            } else {
                ch == '0' || ch == '1' || ch == '_'
            };
            if !ok {
                break;
            }
            text.push(ch);
            cur.bump();
        }
        if hex && matches!(cur.peek(), Some('p' | 'P')) {
            text.push(cur.bump().unwrap_or('p'));
            if matches!(cur.peek(), Some('+' | '-')) {
                text.push(cur.bump().unwrap_or('+'));
            }
            while let Some(ch) = cur.peek().filter(|c| c.is_ascii_digit()) {
                text.push(ch);
                cur.bump();
            }
        }
    } else {
        let mut seen_dot = false;
        while let Some(ch) = cur.peek() {
            if ch.is_ascii_digit() || ch == '_' {
                text.push(ch);
                cur.bump();
            } else if ch == '.'
                && !seen_dot
                && cur
                    .peek_at(1)
                    .is_none_or(|n| !is_ident_start(n) && n != '.')
            {
                seen_dot = true;
                text.push(ch);
                cur.bump();
            } else {
                break;
            }
        }
        if matches!(cur.peek(), Some('e' | 'E')) {
            let sign = matches!(cur.peek_at(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if cur.peek_at(digit_at).is_some_and(|d| d.is_ascii_digit()) {
                text.push_str(&cur.bump_n(digit_at));
                while let Some(ch) = cur.peek().filter(|c| c.is_ascii_digit() || *c == '_') {
                    text.push(ch);
                    cur.bump();
                }
            }
        }
    }
    if let Some(suffix) = cur
        .peek()
        .filter(|c| matches!(c, 'l' | 'L' | 'f' | 'F' | 'd' | 'D'))
    {
        text.push(suffix);
        cur.bump();
    }
    text
}

/// Split an identifier on camelCase humps, underscores and letter/digit
/// boundaries. `HTTPServer` splits as `HTTP`, `Server`.
pub fn split_subtokens(identifier: &str) -> Vec<String> {
    let chars: Vec<char> = identifier.chars().collect();
    let mut parts = Vec::new();
    let mut current = String::new();

    for (i, &c) in chars.iter().enumerate() {
        if c == '_' || c == '$' {
            if !current.is_empty() {
                parts.push(std::mem::take(&mut current));
            }
            continue;
        }
        if let Some(&prev) = current.chars().last().as_ref() {
            let next = chars.get(i + 1).copied();
            let boundary = (prev.is_lowercase() && c.is_uppercase())
                || (prev.is_alphabetic() && c.is_ascii_digit())
                || (prev.is_ascii_digit() && c.is_alphabetic())
                || (prev.is_uppercase()
                    && c.is_uppercase()
                    && next.is_some_and(|n| n.is_lowercase()));
            if boundary {
                parts.push(std::mem::take(&mut current));
            }
        }
        current.push(c);
    }
    if !current.is_empty() {
        parts.push(current);
    }
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_texts(src: &str, config: &LexConfig) -> Vec<(TokenKind, String)> {
        lex(src, config)
            .unwrap()
            .tokens
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    fn kt(kind: TokenKind, text: &str) -> (TokenKind, String) {
        (kind, text.to_string())
    }

    #[test]
    fn keyword_set_has_fifty_reserved_words_plus_literals() {
        let mut sorted = KEYWORDS.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 53);
    }

    #[test]
    fn simple_declaration() {
        use TokenKind::*;
        assert_eq!(
            kinds_texts("int x = 0;", &LexConfig::default()),
            vec![
                kt(Keyword, "int"),
                kt(Identifier, "x"),
                kt(Operator, "="),
                kt(Literal, "0"),
                kt(Punctuation, ";"),
            ]
        );
    }

    #[test]
    fn line_comment_words() {
        use TokenKind::*;
        assert_eq!(
            kinds_texts("// Given: args\nfail();", &LexConfig::default()),
            vec![
                kt(CommentWord, "given"),
                kt(CommentWord, "args"),
                kt(Identifier, "fail"),
                kt(Punctuation, "("),
                kt(Punctuation, ")"),
                kt(Punctuation, ";"),
            ]
        );
    }

    #[test]
    fn comments_excluded() {
        let cfg = LexConfig {
            include_comments: false,
            ..LexConfig::default()
        };
        let ts = lex("/* Block\n comment */ a // tail", &cfg).unwrap();
        assert_eq!(ts.texts(), vec!["a"]);
    }

    #[test]
    fn comment_case_kept_when_configured() {
        let cfg = LexConfig {
            lowercase_comment_words: false,
            ..LexConfig::default()
        };
        let ts = lex("// Verify The", &cfg).unwrap();
        assert_eq!(ts.texts(), vec!["Verify", "The"]);
    }

    #[test]
    fn string_and_char_literals_are_single_tokens() {
        let ts = lex(
            r#"fail("Expecting \"x\": y"); char c = '\'';"#,
            &LexConfig::default(),
        )
        .unwrap();
        assert_eq!(ts.tokens[2].text, r#""Expecting \"x\": y""#);
        assert_eq!(ts.tokens[2].kind, TokenKind::Literal);
        assert!(ts.tokens.iter().any(|t| t.text == r"'\''"));
    }

    #[test]
    fn annotation_is_at_then_identifier() {
        use TokenKind::*;
        assert_eq!(
            kinds_texts("@Test(timeout = 4000)", &LexConfig::default())[..2],
            [kt(Punctuation, "@"), kt(Identifier, "Test")]
        );
    }

    #[test]
    fn numeric_literals_verbatim() {
        let ts = lex("0x1F 1_000L 3.14f 1e-3 .5 07 0b101", &LexConfig::default()).unwrap();
        assert_eq!(
            ts.texts(),
            vec!["0x1F", "1_000L", "3.14f", "1e-3", ".5", "07", "0b101"]
        );
        assert!(ts.tokens.iter().all(|t| t.kind == TokenKind::Literal));
    }

    #[test]
    fn member_access_on_literal_is_not_a_fraction() {
        let ts = lex("a[0].length 1.toString", &LexConfig::default()).unwrap();
        assert_eq!(
            ts.texts(),
            vec!["a", "[", "0", "]", ".", "length", "1", ".", "toString"]
        );
    }

    #[test]
    fn maximal_munch_operators() {
        let ts = lex("a >>>= b >> c -> d :: e ... f != g", &LexConfig::default()).unwrap();
        let ops: Vec<_> = ts
            .tokens
            .iter()
            .filter(|t| t.kind != TokenKind::Identifier)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(ops, vec![">>>=", ">>", "->", "::", "...", "!="]);
    }

    #[test]
    fn positions_are_one_based() {
        let ts = lex("a\n  bb", &LexConfig::default()).unwrap();
        assert_eq!((ts.tokens[0].line, ts.tokens[0].column), (1, 1));
        assert_eq!((ts.tokens[1].line, ts.tokens[1].column), (2, 3));
    }

    #[test]
    fn unterminated_string_reports_position() {
        let err = lex("x = \"abc\n", &LexConfig::default()).unwrap_err();
        assert_eq!(err, LexError::UnterminatedString { line: 1, column: 5 });
    }

    #[test]
    fn unterminated_comment_reports_position() {
        let err = lex("a\n /* never", &LexConfig::default()).unwrap_err();
        assert_eq!(err, LexError::UnterminatedComment { line: 2, column: 2 });
    }

    #[test]
    fn unexpected_character() {
        let err = lex("a # b", &LexConfig::default()).unwrap_err();
        assert!(matches!(err, LexError::UnexpectedChar { ch: '#', .. }));
    }

    #[test]
    fn text_block_literal() {
        let ts = lex("s = \"\"\"\n  hi \"there\"\n\"\"\";", &LexConfig::default()).unwrap();
        assert_eq!(ts.tokens[2].kind, TokenKind::Literal);
        assert!(ts.tokens[2].text.starts_with("\"\"\"") && ts.tokens[2].text.ends_with("\"\"\""));
    }

    #[test]
    fn split_identifiers_config() {
        let cfg = LexConfig {
            split_identifiers: true,
            ..LexConfig::default()
        };
        let ts = lex("stringArray0 = null;", &cfg).unwrap();
        assert_eq!(ts.texts(), vec!["string", "Array", "0", "=", "null", ";"]);
    }

    #[test]
    fn subtokens() {
        assert_eq!(
            split_subtokens("testMainMethodThrowsNoClassDefFoundError"),
            vec!["test", "Main", "Method", "Throws", "No", "Class", "Def", "Found", "Error"]
        );
        assert_eq!(split_subtokens("x"), vec!["x"]);
        assert_eq!(
            split_subtokens("stringArray0"),
            vec!["string", "Array", "0"]
        );
        assert_eq!(
            split_subtokens("TEST_STRING_ARRAY"),
            vec!["TEST", "STRING", "ARRAY"]
        );
        assert_eq!(
            split_subtokens("HTTPServer2go"),
            vec!["HTTP", "Server", "2", "go"]
        );
        assert!(split_subtokens("__").is_empty());
    }

    #[test]
    fn fingerprint_depends_on_config() {
        let a = LexConfig::default().fingerprint();
        let b = LexConfig {
            include_comments: false,
            ..LexConfig::default()
        }
        .fingerprint();
        assert_eq!(a.len(), 16);
        assert_ne!(a, b);
        assert_eq!(a, LexConfig::default().fingerprint());
    }
}
