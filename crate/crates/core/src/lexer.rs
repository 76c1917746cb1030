//! Tokenizer for the specification language. `$` starts a line comment.

use crate::ast::Pos;
use crate::diag::{Diagnostic, Phase};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Keyword,
    Ident,
    Int,
    Op,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    pub pos: Pos,
}

pub const KEYWORDS: &[&str] = &[
    "given", "letting", "be", "domain", "find", "such", "that", "maximising", "minimising",
    "int", "bool", "set", "mset", "function", "relation", "tuple", "matrix", "indexed", "by",
    "of", "size", "maxsize", "total", "partial", "injective", "surjective", "forall", "exists",
    "sum", "elem", "union", "intersect", "subset", "subseteq", "supset", "supseteq", "not",
    "true", "false", "alldiff", "min", "max", "card", "defined", "range", "_",
];

/// Multi-character operators, longest first.
const OPS: &[&str] = &[
    "-->", "->", "<=>", "=>", "/\\", "\\/", "<=", ">=", "!=", "..", "+", "-", "*", "/", "%",
    "=", "<", ">", "@",
];

const PUNCT: &[char] = &['(', ')', '[', ']', '{', '}', ',', ':', '.'];

pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut toks = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '$' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            toks.push(Token { kind: TokKind::Int, text, pos });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let kind = if KEYWORDS.contains(&text.as_str()) { TokKind::Keyword } else { TokKind::Ident };
            toks.push(Token { kind, text, pos });
            continue;
        }
        // `.` may start `..`; handled by OPS first, then punct
        if let Some(op) = OPS.iter().find(|op| chars[i..].starts_with(&op.chars().collect::<Vec<_>>()[..])) {
            i += op.len();
            col += op.len() as u32;
            toks.push(Token { kind: TokKind::Op, text: op.to_string(), pos });
            continue;
        }
        if PUNCT.contains(&c) {
            i += 1;
            col += 1;
            toks.push(Token { kind: TokKind::Punct, text: c.to_string(), pos });
            continue;
        }
        return Err(Diagnostic::error(Phase::Parse, pos, format!("unrecognized character `{c}`")));
    }
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_find_decl() {
        let toks = tokenize("find x : set of item").unwrap();
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["find", "x", ":", "set", "of", "item"]);
        assert_eq!(toks[0].kind, TokKind::Keyword);
        assert_eq!(toks[1].kind, TokKind::Ident);
    }

    #[test]
    fn empty_input_gives_no_tokens() {
        assert!(tokenize("").unwrap().is_empty());
    }

    #[test]
    fn rejects_unknown_character() {
        let err = tokenize("x #= y").unwrap_err();
        assert_eq!(err.pos.col, 3);
        assert!(err.message.contains('#'));
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("a $ comment\nb").unwrap();
        assert_eq!(toks.len(), 2);
        assert_eq!(toks[1].pos, Pos { line: 2, col: 1 });
    }

    #[test]
    fn range_and_arrows() {
        let toks = tokenize("int(1..3) -> 1 --> 2 /\\ x").unwrap();
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["int", "(", "1", "..", "3", ")", "->", "1", "-->", "2", "/\\", "x"]);
    }
}
