use super::{Diagnostic, Pos};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Measured, // =~
    Covaries, // ~~
    Regress,  // ~ (unsupported, reported by the parser)
    Star,
    Plus,
    Minus,
    LParen,
    RParen,
    Colon,
    Newline,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

/// Splits model text into tokens. Comments run from `#` to end of line.
/// Malformed numbers and stray characters become diagnostics; lexing
/// continues past them.
pub(crate) fn tokenize(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut toks = Vec::new();
    let mut diags = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        let at = |c: usize| Pos {
            line: li + 1,
            column: c + 1,
        };
        while i < chars.len() {
            let c = chars[i];
            let start = i;
            match c {
                '#' => break,
                c if c.is_whitespace() => i += 1,
                '=' if chars.get(i + 1) == Some(&'~') => {
                    toks.push(Token {
                        tok: Tok::Measured,
                        pos: at(start),
                    });
                    i += 2;
                }
                '~' if chars.get(i + 1) == Some(&'~') => {
                    toks.push(Token {
                        tok: Tok::Covaries,
                        pos: at(start),
                    });
                    i += 2;
                }
                '~' => {
                    toks.push(Token {
                        tok: Tok::Regress,
                        pos: at(start),
                    });
                    i += 1;
                }
                '*' | '+' | '-' | '(' | ')' | ':' => {
                    let tok = match c {
                        '*' => Tok::Star,
                        '+' => Tok::Plus,
                        '-' => Tok::Minus,
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        _ => Tok::Colon,
                    };
                    toks.push(Token { tok, pos: at(start) });
                    i += 1;
                }
                c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                    i = scan_number(&chars, i);
                    // a number must not run straight into identifier characters
                    let mut end = i;
                    while end < chars.len() && is_ident_char(chars[end]) {
                        end += 1;
                    }
                    let lexeme: String = chars[start..end].iter().collect();
                    match (end == i).then(|| lexeme.parse::<f64>().ok()).flatten() {
                        Some(v) if v.is_finite() => toks.push(Token {
                            tok: Tok::Number(v),
                            pos: at(start),
                        }),
                        _ => {
                            diags.push(Diagnostic::error(
                                at(start),
                                format!("malformed numeric literal `{lexeme}`"),
                            ));
                            // keep the parser in sync with a placeholder
                            toks.push(Token {
                                tok: Tok::Number(f64::NAN),
                                pos: at(start),
                            });
                        }
                    }
                    i = end;
                }
                c if c.is_alphabetic() || c == '_' => {
                    while i < chars.len() && is_ident_char(chars[i]) {
                        i += 1;
                    }
                    toks.push(Token {
                        tok: Tok::Ident(chars[start..i].iter().collect()),
                        pos: at(start),
                    });
                }
                other => {
                    diags.push(Diagnostic::error(at(start), format!("unexpected character `{other}`")));
                    i += 1;
                }
            }
        }
        toks.push(Token {
            tok: Tok::Newline,
            pos: Pos {
                line: li + 1,
                column: chars.len().max(1),
            },
        });
    }
    (toks, diags)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.'
}

fn scan_number(chars: &[char], mut i: usize) -> usize {
    let digits = |i: &mut usize| {
        while *i < chars.len() && chars[*i].is_ascii_digit() {
            *i += 1;
        }
    };
    digits(&mut i);
    if i < chars.len() && chars[i] == '.' {
        i += 1;
        digits(&mut i);
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            j += 1;
        }
        if j < chars.len() && chars[j].is_ascii_digit() {
            i = j;
            digits(&mut i);
        }
    }
    i
}
