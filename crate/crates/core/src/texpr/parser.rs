//! Recursive-descent parser for the transform expression grammar:
//!
//! ```text
//! transform := "lambda" IDENT ":" expr
//! expr    := cond
//! cond    := or ("if" or "else" expr)?
//! or      := and ("or" and)*
//! and     := not ("and" not)*
//! not     := "not" not | cmp
//! cmp     := arith (CMPOP arith | ("in" | "not" "in") arith)?
//! arith   := term (("+" | "-") term)*
//! term    := unary (("*" | "/" | "//" | "%") unary)*
//! unary   := "-" unary | postfix
//! postfix := primary (("." IDENT "(" args? ")") | ("[" expr (":" expr?)? "]")
//!            | ("(" args? ")"))*
//! primary := INT | FLOAT | STRING | RAWSTRING | "True" | "False" | "None"
//!            | IDENT | "(" expr ")"
//! ```

use super::ast::{BinOp, CmpOp, Expr, Lit, Pos};
use super::lex::{tokenize, Tok, Token};
use super::TexprError;

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    src_len: usize,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, TexprError> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            src_len: src.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|t| t.pos)
            .unwrap_or(self.src_len)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), TexprError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    fn err(&self, expected: &str) -> TexprError {
        TexprError::Parse {
            position: self.here(),
            expected: expected.to_string(),
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

    /// Parse a full `lambda p: body` transform; returns (param, body).
    pub fn parse_lambda(&mut self) -> Result<(String, Expr), TexprError> {
        self.expect(Tok::Lambda, "'lambda'")?;
        let param = match self.bump() {
            Some(Token {
                tok: Tok::Ident(name),
                ..
            }) => name,
            _ => return Err(self.err("lambda parameter name")),
        };
        self.expect(Tok::Colon, "':' after lambda parameter")?;
        let body = self.expr()?;
        if self.pos != self.toks.len() {
            return Err(self.err("end of expression"));
        }
        Ok((param, body))
    }

    pub fn expr(&mut self) -> Result<Expr, TexprError> {
        self.cond()
    }

    fn cond(&mut self) -> Result<Expr, TexprError> {
        let then = self.or()?;
        if self.eat(&Tok::If) {
            let cond = self.or()?;
            self.expect(Tok::Else, "'else' in conditional expression")?;
            let otherwise = self.expr()?;
            return Ok(Expr::Cond {
                then: Box::new(then),
                cond: Box::new(cond),
                otherwise: Box::new(otherwise),
            });
        }
        Ok(then)
    }

    fn or(&mut self) -> Result<Expr, TexprError> {
        let mut left = self.and()?;
        while self.eat(&Tok::Or) {
            let right = self.and()?;
            left = Expr::Or {
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Expr, TexprError> {
        let mut left = self.not()?;
        while self.eat(&Tok::And) {
            let right = self.not()?;
            left = Expr::And {
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn not(&mut self) -> Result<Expr, TexprError> {
        if self.eat(&Tok::Not) {
            let inner = self.not()?;
            return Ok(Expr::Not(Box::new(inner)));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr, TexprError> {
        let left = self.arith()?;
        let op = match self.peek() {
            Some(Tok::EqEq) => Some(CmpOp::Eq),
            Some(Tok::NotEq) => Some(CmpOp::Ne),
            Some(Tok::Lt) => Some(CmpOp::Lt),
            Some(Tok::Le) => Some(CmpOp::Le),
            Some(Tok::Gt) => Some(CmpOp::Gt),
            Some(Tok::Ge) => Some(CmpOp::Ge),
            Some(Tok::In) => Some(CmpOp::In),
            Some(Tok::Not) => {
                // possibly "not in"
                if matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::In)) {
                    self.pos += 1; // consume 'not'; 'in' consumed below
                    Some(CmpOp::NotIn)
                } else {
                    None
                }
            }
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1; // consume the (remaining) operator token
            let right = self.arith()?;
            return Ok(Expr::Compare {
                op,
                left: Box::new(left),
                right: Box::new(right),
            });
        }
        Ok(left)
    }

    fn arith(&mut self) -> Result<Expr, TexprError> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let right = self.term()?;
            left = Expr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Expr, TexprError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                Some(Tok::SlashSlash) => BinOp::FloorDiv,
                Some(Tok::Percent) => BinOp::Mod,
                _ => break,
            };
            self.pos += 1;
            let right = self.unary()?;
            left = Expr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, TexprError> {
        if self.eat(&Tok::Minus) {
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, TexprError> {
        let mut expr = self.primary()?;
        loop {
            match self.peek() {
                Some(Tok::Dot) => {
                    let pos = Pos(self.here());
                    self.pos += 1;
                    let name = match self.bump() {
                        Some(Token {
                            tok: Tok::Ident(name),
                            ..
                        }) => name,
                        _ => return Err(self.err("method name after '.'")),
                    };
                    self.expect(Tok::LParen, "'(' after method name")?;
                    let args = self.args()?;
                    expr = Expr::MethodCall {
                        target: Box::new(expr),
                        name,
                        args,
                        pos,
                    };
                }
                Some(Tok::LBracket) => {
                    self.pos += 1;
                    let first = self.expr()?;
                    if self.eat(&Tok::Colon) {
                        let end = if self.peek() == Some(&Tok::RBracket) {
                            None
                        } else {
                            Some(Box::new(self.expr()?))
                        };
                        self.expect(Tok::RBracket, "']' to close slice")?;
                        expr = Expr::Slice {
                            target: Box::new(expr),
                            start: Box::new(first),
                            end,
                        };
                    } else {
                        self.expect(Tok::RBracket, "']' to close subscription")?;
                        expr = Expr::Index {
                            target: Box::new(expr),
                            index: Box::new(first),
                        };
                    }
                }
                Some(Tok::LParen) => {
                    let pos = Pos(self.here());
                    self.pos += 1;
                    let args = self.args()?;
                    expr = Expr::Call {
                        callee: Box::new(expr),
                        args,
                        pos,
                    };
                }
                _ => break,
            }
        }
        Ok(expr)
    }

    /// Arguments up to and including the closing paren.
    fn args(&mut self) -> Result<Vec<Expr>, TexprError> {
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(&Tok::Comma) {
                continue;
            }
            self.expect(Tok::RParen, "')' to close argument list")?;
            break;
        }
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr, TexprError> {
        let pos = self.here();
        match self.bump() {
            Some(Token {
                tok: Tok::Int(i), ..
            }) => Ok(Expr::Literal(Lit::Int(i))),
            Some(Token {
                tok: Tok::Float(f), ..
            }) => Ok(Expr::Literal(Lit::Float(f))),
            Some(Token {
                tok: Tok::Str(s), ..
            }) => Ok(Expr::Literal(Lit::Str(s))),
            Some(Token { tok: Tok::True, .. }) => Ok(Expr::Literal(Lit::True)),
            Some(Token {
                tok: Tok::False, ..
            }) => Ok(Expr::Literal(Lit::False)),
            Some(Token { tok: Tok::None, .. }) => Ok(Expr::Literal(Lit::None)),
            Some(Token {
                tok: Tok::Ident(name),
                ..
            }) => Ok(Expr::Ident {
                name,
                pos: Pos(pos),
            }),
            Some(Token {
                tok: Tok::LParen, ..
            }) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')' to close group")?;
                Ok(inner)
            }
            _ => Err(TexprError::Parse {
                position: pos,
                expected: "literal, identifier, or '('".to_string(),
            }),
        }
    }
}
