//! Parser for the SQL subset. One grammar serves two uses: executable
//! queries and Analysis Sketches (the sketch additionally accepts UDF
//! select items of the form `f(C1, ...) AS Alias`).

use super::ast::*;
use super::SqlError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    /// Bare word: keyword or identifier, resolved in context.
    Word(String),
    /// Quoted identifier (double quotes or backticks).
    QuotedIdent(String),
    Str(String),
    Int(i64),
    Float(f64),
    Star,
    LParen,
    RParen,
    Comma,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Minus,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, SqlError> {
    let chars: Vec<char> = src.chars().collect();
    let mut byte_pos: Vec<usize> = Vec::with_capacity(chars.len() + 1);
    let mut p = 0;
    for ch in &chars {
        byte_pos.push(p);
        p += ch.len_utf8();
    }
    byte_pos.push(p);

    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let pos = byte_pos[i];
        if ch.is_whitespace() {
            i += 1;
            continue;
        }
        if ch.is_alphanumeric() || ch == '_' {
            let mut j = i;
            let mut word = String::new();
            let mut all_digits = true;
            let mut has_dot = false;
            while j < chars.len()
                && (chars[j].is_alphanumeric()
                    || chars[j] == '_'
                    || (chars[j] == '.' && all_digits && !has_dot))
            {
                if chars[j] == '.' {
                    // Only a digits-then-dot sequence continues as a float.
                    if j + 1 >= chars.len() || !chars[j + 1].is_ascii_digit() {
                        break;
                    }
                    has_dot = true;
                } else if !chars[j].is_ascii_digit() {
                    all_digits = false;
                }
                word.push(chars[j]);
                j += 1;
            }
            let tok = if all_digits && has_dot {
                Tok::Float(word.parse().map_err(|_| SqlError::Parse {
                    position: pos,
                    expected: "valid number".to_string(),
                })?)
            } else if all_digits {
                Tok::Int(word.parse().map_err(|_| SqlError::Parse {
                    position: pos,
                    expected: "integer within range".to_string(),
                })?)
            } else {
                Tok::Word(word)
            };
            toks.push(Token { tok, pos });
            i = j;
            continue;
        }
        if ch == '\'' {
            let mut j = i + 1;
            let mut content = String::new();
            loop {
                if j >= chars.len() {
                    return Err(SqlError::Parse {
                        position: pos,
                        expected: "closing quote for string".to_string(),
                    });
                }
                if chars[j] == '\'' {
                    // doubled quote escapes a literal quote
                    if j + 1 < chars.len() && chars[j + 1] == '\'' {
                        content.push('\'');
                        j += 2;
                        continue;
                    }
                    break;
                }
                content.push(chars[j]);
                j += 1;
            }
            toks.push(Token {
                tok: Tok::Str(content),
                pos,
            });
            i = j + 1;
            continue;
        }
        if ch == '"' || ch == '`' {
            let quote = ch;
            let mut j = i + 1;
            let mut content = String::new();
            loop {
                if j >= chars.len() {
                    return Err(SqlError::Parse {
                        position: pos,
                        expected: "closing quote for identifier".to_string(),
                    });
                }
                if chars[j] == quote {
                    if quote == '"' && j + 1 < chars.len() && chars[j + 1] == '"' {
                        content.push('"');
                        j += 2;
                        continue;
                    }
                    break;
                }
                content.push(chars[j]);
                j += 1;
            }
            toks.push(Token {
                tok: Tok::QuotedIdent(content),
                pos,
            });
            i = j + 1;
            continue;
        }
        let two = if i + 1 < chars.len() {
            Some((chars[i], chars[i + 1]))
        } else {
            None
        };
        let (tok, width) = match two {
            Some(('!', '=')) => (Tok::Ne, 2),
            Some(('<', '>')) => (Tok::Ne, 2),
            Some(('<', '=')) => (Tok::Le, 2),
            Some(('>', '=')) => (Tok::Ge, 2),
            _ => {
                let tok = match ch {
                    '*' => Tok::Star,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '=' => Tok::Eq,
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    '-' => Tok::Minus,
                    ';' if i + 1 == chars.len() => {
                        i += 1;
                        continue;
                    }
                    other => {
                        return Err(SqlError::Parse {
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

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    src_len: usize,
    allow_udf: bool,
}

impl Parser {
    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|t| t.pos)
            .unwrap_or(self.src_len)
    }

    fn err(&self, expected: &str) -> SqlError {
        SqlError::Parse {
            position: self.here(),
            expected: expected.to_string(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.err(&format!("keyword {kw}")))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SqlError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    /// Identifier: bare word (non-keyword), quoted identifier, or a bare
    /// integer (column names are sometimes years).
    fn ident(&mut self) -> Result<String, SqlError> {
        match self.peek().cloned() {
            Some(Tok::Word(w)) if !is_keyword(&w) => {
                self.pos += 1;
                Ok(w)
            }
            Some(Tok::QuotedIdent(name)) => {
                self.pos += 1;
                Ok(name)
            }
            Some(Tok::Int(i)) => {
                self.pos += 1;
                Ok(i.to_string())
            }
            _ => Err(self.err("identifier")),
        }
    }

    fn literal(&mut self) -> Result<Literal, SqlError> {
        let negative = self.eat(&Tok::Minus);
        match self.peek().cloned() {
            Some(Tok::Int(i)) => {
                self.pos += 1;
                Ok(Literal::Int(if negative { -i } else { i }))
            }
            Some(Tok::Float(f)) => {
                self.pos += 1;
                Ok(Literal::Float(if negative { -f } else { f }))
            }
            Some(Tok::Str(s)) if !negative => {
                self.pos += 1;
                Ok(Literal::Str(s))
            }
            _ => Err(self.err("literal value")),
        }
    }

    fn agg_body(&mut self, kind: AggKind) -> Result<Agg, SqlError> {
        self.expect(Tok::LParen, "'(' after aggregate")?;
        let target = if self.eat(&Tok::Star) {
            AggTarget::Star
        } else {
            AggTarget::Column(self.ident()?)
        };
        self.expect(Tok::RParen, "')' after aggregate target")?;
        Ok(Agg { kind, target })
    }

    fn select_item(&mut self) -> Result<SelectItem, SqlError> {
        // Aggregate: known keyword immediately followed by '('.
        if let Some(Tok::Word(w)) = self.peek() {
            if let Some(kind) = AggKind::from_word(w) {
                if matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::LParen)) {
                    self.pos += 1;
                    return Ok(SelectItem::Agg(self.agg_body(kind)?));
                }
            }
        }
        let start = self.here();
        let name = self.ident()?;
        if self.eat(&Tok::LParen) {
            // UDF select item, sketch-only.
            if !self.allow_udf {
                return Err(SqlError::Parse {
                    position: start,
                    expected: "aggregate function (UDF items are sketch-only)".to_string(),
                });
            }
            let mut inputs = vec![self.ident()?];
            while self.eat(&Tok::Comma) {
                inputs.push(self.ident()?);
            }
            self.expect(Tok::RParen, "')' after UDF inputs")?;
            self.expect_keyword("AS")?;
            let alias = self.ident()?;
            return Ok(SelectItem::Udf(Udf {
                description: name,
                inputs,
                alias,
            }));
        }
        Ok(SelectItem::Column(name))
    }

    fn predicate(&mut self) -> Result<Predicate, SqlError> {
        let column = self.ident()?;
        if self.eat_keyword("LIKE") {
            let pattern = match self.peek().cloned() {
                Some(Tok::Str(s)) => {
                    self.pos += 1;
                    s
                }
                _ => return Err(self.err("string pattern after LIKE")),
            };
            return Ok(Predicate::Like { column, pattern });
        }
        if self.eat_keyword("IN") {
            self.expect(Tok::LParen, "'(' after IN")?;
            let mut literals = vec![self.literal()?];
            while self.eat(&Tok::Comma) {
                literals.push(self.literal()?);
            }
            self.expect(Tok::RParen, "')' after IN list")?;
            return Ok(Predicate::In { column, literals });
        }
        let op = match self.peek() {
            Some(Tok::Eq) => SqlCmpOp::Eq,
            Some(Tok::Ne) => SqlCmpOp::Ne,
            Some(Tok::Lt) => SqlCmpOp::Lt,
            Some(Tok::Le) => SqlCmpOp::Le,
            Some(Tok::Gt) => SqlCmpOp::Gt,
            Some(Tok::Ge) => SqlCmpOp::Ge,
            _ => return Err(self.err("comparison operator, LIKE, or IN")),
        };
        self.pos += 1;
        let literal = self.literal()?;
        Ok(Predicate::Compare {
            column,
            op,
            literal,
        })
    }

    fn order_key(&mut self) -> Result<OrderKey, SqlError> {
        if let Some(Tok::Word(w)) = self.peek() {
            if let Some(kind) = AggKind::from_word(w) {
                if matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::LParen)) {
                    self.pos += 1;
                    return Ok(OrderKey::Agg(self.agg_body(kind)?));
                }
            }
        }
        Ok(OrderKey::Column(self.ident()?))
    }

    fn query(&mut self) -> Result<SqlQuery, SqlError> {
        self.expect_keyword("SELECT")?;
        let mut select_items = vec![self.select_item()?];
        while self.eat(&Tok::Comma) {
            select_items.push(self.select_item()?);
        }
        self.expect_keyword("FROM")?;
        let table = self.ident()?;
        let mut predicates = Vec::new();
        if self.eat_keyword("WHERE") {
            predicates.push(self.predicate()?);
            while self.eat_keyword("AND") {
                predicates.push(self.predicate()?);
            }
        }
        let mut group_by = None;
        if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            group_by = Some(self.ident()?);
        }
        let mut order_by = None;
        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            let key = self.order_key()?;
            let dir = if self.eat_keyword("DESC") {
                Direction::Desc
            } else {
                self.eat_keyword("ASC");
                Direction::Asc
            };
            order_by = Some((key, dir));
        }
        let mut limit = None;
        if self.eat_keyword("LIMIT") {
            match self.peek().cloned() {
                Some(Tok::Int(n)) if n >= 0 => {
                    self.pos += 1;
                    limit = Some(n as usize);
                }
                _ => return Err(self.err("non-negative integer after LIMIT")),
            }
        }
        if self.pos != self.toks.len() {
            return Err(self.err("end of query"));
        }
        Ok(SqlQuery {
            select_items,
            table,
            predicates,
            group_by,
            order_by,
            limit,
            sketch: self.allow_udf,
        })
    }
}

pub fn parse(src: &str, allow_udf: bool) -> Result<SqlQuery, SqlError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        src_len: src.len(),
        allow_udf,
    };
    p.query()
}
