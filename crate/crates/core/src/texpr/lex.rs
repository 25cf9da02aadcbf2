//! Tokenizer for the transform expression language.

use super::TexprError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    // keywords
    Lambda,
    If,
    Else,
    And,
    Or,
    Not,
    In,
    True,
    False,
    None,
    // punctuation / operators
    Plus,
    Minus,
    Star,
    Slash,
    SlashSlash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, TexprError> {
    let bytes: Vec<char> = src.chars().collect();
    // Track byte positions for error reporting.
    let mut byte_pos: Vec<usize> = Vec::with_capacity(bytes.len() + 1);
    {
        let mut p = 0;
        for ch in &bytes {
            byte_pos.push(p);
            p += ch.len_utf8();
        }
        byte_pos.push(p);
    }
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        let pos = byte_pos[i];
        if ch.is_whitespace() {
            i += 1;
            continue;
        }
        // raw string literal
        if ch == 'r' && i + 1 < bytes.len() && (bytes[i + 1] == '\'' || bytes[i + 1] == '"') {
            let quote = bytes[i + 1];
            let mut j = i + 2;
            let mut content = String::new();
            while j < bytes.len() && bytes[j] != quote {
                content.push(bytes[j]);
                j += 1;
            }
            if j >= bytes.len() {
                return Err(TexprError::Parse {
                    position: pos,
                    expected: "closing quote for raw string".to_string(),
                });
            }
            toks.push(Token {
                tok: Tok::Str(content),
                pos,
            });
            i = j + 1;
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            let mut j = i;
            let mut ident = String::new();
            while j < bytes.len() && (bytes[j].is_alphanumeric() || bytes[j] == '_') {
                ident.push(bytes[j]);
                j += 1;
            }
            let tok = match ident.as_str() {
                "lambda" => Tok::Lambda,
                "if" => Tok::If,
                "else" => Tok::Else,
                "and" => Tok::And,
                "or" => Tok::Or,
                "not" => Tok::Not,
                "in" => Tok::In,
                "True" => Tok::True,
                "False" => Tok::False,
                "None" => Tok::None,
                _ => Tok::Ident(ident),
            };
            toks.push(Token { tok, pos });
            i = j;
            continue;
        }
        if ch.is_ascii_digit() {
            let mut j = i;
            let mut text = String::new();
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                text.push(bytes[j]);
                j += 1;
            }
            let mut is_float = false;
            if j < bytes.len() && bytes[j] == '.' {
                // Attribute calls on numbers are not in the grammar, so a dot
                // after digits always starts a fraction.
                is_float = true;
                text.push('.');
                j += 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    text.push(bytes[j]);
                    j += 1;
                }
            }
            if j < bytes.len() && (bytes[j] == 'e' || bytes[j] == 'E') {
                let mut k = j + 1;
                if k < bytes.len() && (bytes[k] == '+' || bytes[k] == '-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    is_float = true;
                    text.push('e');
                    if bytes[j + 1] == '+' || bytes[j + 1] == '-' {
                        text.push(bytes[j + 1]);
                    }
                    j = k;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        text.push(bytes[j]);
                        j += 1;
                    }
                }
            }
            let tok = if is_float {
                Tok::Float(text.parse::<f64>().map_err(|_| TexprError::Parse {
                    position: pos,
                    expected: "valid float literal".to_string(),
                })?)
            } else {
                Tok::Int(text.parse::<i64>().map_err(|_| TexprError::Parse {
                    position: pos,
                    expected: "integer within range".to_string(),
                })?)
            };
            toks.push(Token { tok, pos });
            i = j;
            continue;
        }
        if ch == '\'' || ch == '"' {
            let quote = ch;
            let mut j = i + 1;
            let mut content = String::new();
            loop {
                if j >= bytes.len() {
                    return Err(TexprError::Parse {
                        position: pos,
                        expected: "closing quote for string".to_string(),
                    });
                }
                let c = bytes[j];
                if c == quote {
                    break;
                }
                if c == '\\' {
                    if j + 1 >= bytes.len() {
                        return Err(TexprError::Parse {
                            position: byte_pos[j],
                            expected: "escape character".to_string(),
                        });
                    }
                    let esc = bytes[j + 1];
                    match esc {
                        '\\' => content.push('\\'),
                        '\'' => content.push('\''),
                        '"' => content.push('"'),
                        'n' => content.push('\n'),
                        't' => content.push('\t'),
                        'r' => content.push('\r'),
                        // unknown escapes keep the backslash, as Python does
                        other => {
                            content.push('\\');
                            content.push(other);
                        }
                    }
                    j += 2;
                    continue;
                }
                content.push(c);
                j += 1;
            }
            toks.push(Token {
                tok: Tok::Str(content),
                pos,
            });
            i = j + 1;
            continue;
        }
        let two = if i + 1 < bytes.len() {
            Some((bytes[i], bytes[i + 1]))
        } else {
            Option::None
        };
        let (tok, width) = match two {
            Some(('/', '/')) => (Tok::SlashSlash, 2),
            Some(('=', '=')) => (Tok::EqEq, 2),
            Some(('!', '=')) => (Tok::NotEq, 2),
            Some(('<', '=')) => (Tok::Le, 2),
            Some(('>', '=')) => (Tok::Ge, 2),
            _ => {
                let tok = match ch {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '%' => Tok::Percent,
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '.' => Tok::Dot,
                    other => {
                        return Err(TexprError::Parse {
                            position: pos,
                            expected: format!("valid token, found {other:?}"),
                        });
                    }
                };
                (tok, 1)
            }
        };
        toks.push(Token { tok, pos });
        i += width;
    }
    Ok(toks)
}
