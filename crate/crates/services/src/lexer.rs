//! A small state-machine lexer for the sTeX subset the services understand.

use std::ops::Range;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Command,
    BeginGroup,
    EndGroup,
    MathDelim,
    Comment,
    Word,
    Whitespace,
}

impl TokenKind {
    pub fn name(self) -> &'static str {
        match self {
            TokenKind::Command => "Command",
            TokenKind::BeginGroup => "BeginGroup",
            TokenKind::EndGroup => "EndGroup",
            TokenKind::MathDelim => "MathDelim",
            TokenKind::Comment => "Comment",
            TokenKind::Word => "Word",
            TokenKind::Whitespace => "Whitespace",
        }
    }
}

/// One token plus the lexer context it was found in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StexToken {
    pub kind: TokenKind,
    pub span: Range<usize>,
    /// Inside `$...$` or a math environment.
    pub math: bool,
    /// Inside a command argument, mandatory `{...}` or optional `[...]`.
    pub in_arg: bool,
    /// For `BeginGroup`/`EndGroup`: index of the partner token, if balanced.
    pub partner: Option<usize>,
}

const MATH_ENVS: &[&str] = &[
    "equation", "equation*", "align", "align*", "displaymath", "math", "gather", "gather*",
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Env {
    Begin,
    End,
}

struct Group {
    token: usize,
    arg: bool,
    /// `\begin{..}` or `\end{..}` argument.
    env: Option<Env>,
}

/// Tokenizes `text`. The lexer is total: tokens tile the input, and
/// unterminated groups or math simply run to the end.
pub fn tokenize(text: &[char]) -> Vec<StexToken> {
    let mut out: Vec<StexToken> = Vec::new();
    let mut groups: Vec<Group> = Vec::new();
    let mut dollar_math = false;
    let mut env_math = 0usize;
    // After a command or a finished argument, `{` and `[` open arguments.
    let mut expect_arg = false;
    let mut in_opt = false;
    let mut last_command = String::new();
    let mut i = 0;
    while i < text.len() {
        let c = text[i];
        let start = i;
        let in_arg = in_opt || groups.iter().any(|g| g.arg);
        let math = dollar_math || env_math > 0;
        let kind = match c {
            '%' => {
                while i < text.len() && text[i] != '\n' {
                    i += 1;
                }
                TokenKind::Comment
            }
            '\\' => {
                i += 1;
                if i < text.len() && text[i].is_alphabetic() {
                    while i < text.len() && text[i].is_alphabetic() {
                        i += 1;
                    }
                } else if i < text.len() {
                    i += 1;
                }
                TokenKind::Command
            }
            '{' => {
                i += 1;
                TokenKind::BeginGroup
            }
            '}' => {
                i += 1;
                TokenKind::EndGroup
            }
            '$' => {
                i += 1;
                if i < text.len() && text[i] == '$' {
                    i += 1;
                }
                TokenKind::MathDelim
            }
            c if c.is_whitespace() => {
                while i < text.len() && text[i].is_whitespace() {
                    i += 1;
                }
                TokenKind::Whitespace
            }
            c if c.is_alphanumeric() => {
                while i < text.len() && text[i].is_alphanumeric() {
                    i += 1;
                }
                TokenKind::Word
            }
            _ => {
                i += 1;
                TokenKind::Word
            }
        };
        let index = out.len();
        let mut token = StexToken {
            kind,
            span: start..i,
            math,
            in_arg,
            partner: None,
        };
        let mut next_expect = false;
        match kind {
            TokenKind::Command => {
                last_command = text[start..i].iter().collect();
                next_expect = true;
            }
            TokenKind::BeginGroup => {
                let env = match last_command.as_str() {
                    "\\begin" if expect_arg => Some(Env::Begin),
                    "\\end" if expect_arg => Some(Env::End),
                    _ => None,
                };
                groups.push(Group {
                    token: index,
                    arg: expect_arg,
                    env,
                });
                token.in_arg = token.in_arg || expect_arg;
            }
            TokenKind::EndGroup => {
                if let Some(g) = groups.pop() {
                    token.partner = Some(g.token);
                    out[g.token].partner = Some(index);
                    token.in_arg = g.arg || groups.iter().any(|g| g.arg);
                    if let Some(env) = g.env {
                        let name: String = text[out[g.token].span.end..start].iter().collect();
                        if MATH_ENVS.contains(&name.as_str()) {
                            match env {
                                Env::Begin => env_math += 1,
                                Env::End => {
                                    env_math = env_math.saturating_sub(1);
                                    let still = env_math > 0 || dollar_math;
                                    token.math = still;
                                    for t in &mut out[g.token.saturating_sub(1)..] {
                                        t.math = still;
                                    }
                                }
                            }
                        }
                    }
                    next_expect = g.arg;
                }
            }
            TokenKind::MathDelim => {
                dollar_math = !dollar_math;
                token.math = true;
            }
            TokenKind::Word if expect_arg && !in_opt && text[start] == '[' => {
                in_opt = true;
                token.in_arg = true;
            }
            TokenKind::Word if in_opt && text[start] == ']' => {
                in_opt = false;
                next_expect = true;
            }
            _ => {
                next_expect = in_opt;
            }
        }
        expect_arg = next_expect;
        out.push(token);
    }
    out
}

/// Text of a span.
pub fn slice(text: &[char], span: &Range<usize>) -> String {
    text[span.clone()].iter().collect()
}
