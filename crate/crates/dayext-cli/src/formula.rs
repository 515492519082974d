//! The formula surface syntax. Precedence from loosest to tightest:
//! separating implication `-*`, implication `->`, disjunction `|`,
//! conjunction `&`, separating conjunction `*`; the implications associate
//! to the right, the rest to the left. Tightest are the prefix operators
//! `@world` and `nom(world)`, the constants `top`, `bot`, and `emp`, atoms,
//! and parentheses.

use dayext::finbase::El;
use dayext::kripke::Formula;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    At,
    Star,
    Amp,
    Pipe,
    Arrow,
    Wand,
    LParen,
    RParen,
    Eof,
}

fn lex(src: &str) -> CliResult<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let col = i + 1;
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        match c {
            '@' => {
                out.push((Tok::At, col));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, col));
                i += 1;
            }
            '&' => {
                out.push((Tok::Amp, col));
                i += 1;
            }
            '|' => {
                out.push((Tok::Pipe, col));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            '-' => {
                match chars.get(i + 1) {
                    Some('>') => {
                        out.push((Tok::Arrow, col));
                        i += 2;
                    }
                    Some('*') => {
                        out.push((Tok::Wand, col));
                        i += 2;
                    }
                    _ => {
                        return Err(CliError::Syntax {
                            line: 1,
                            col,
                            message: "expected `->` or `-*` after `-`".into(),
                        })
                    }
                }
            }
            other => {
                return Err(CliError::Syntax {
                    line: 1,
                    col,
                    message: format!("unexpected character `{other}` in formula"),
                })
            }
        }
    }
    out.push((Tok::Eof, chars.len() + 1));
    Ok(out)
}

struct P {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl P {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn col(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> CliError {
        CliError::Syntax {
            line: 1,
            col: self.col(),
            message: message.into(),
        }
    }

    // wand := impl ( '-*' wand )?
    fn wand(&mut self) -> CliResult<Formula> {
        let lhs = self.implication()?;
        if *self.peek() == Tok::Wand {
            self.advance();
            let rhs = self.wand()?;
            Ok(lhs.wand(rhs))
        } else {
            Ok(lhs)
        }
    }

    // impl := or ( '->' impl )?
    fn implication(&mut self) -> CliResult<Formula> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.advance();
            let rhs = self.implication()?;
            Ok(lhs.implies(rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> CliResult<Formula> {
        let mut f = self.conjunction()?;
        while *self.peek() == Tok::Pipe {
            self.advance();
            f = f.or(self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> CliResult<Formula> {
        let mut f = self.separation()?;
        while *self.peek() == Tok::Amp {
            self.advance();
            f = f.and(self.separation()?);
        }
        Ok(f)
    }

    fn separation(&mut self) -> CliResult<Formula> {
        let mut f = self.unary()?;
        while *self.peek() == Tok::Star {
            self.advance();
            f = f.star(self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> CliResult<Formula> {
        match self.peek().clone() {
            Tok::At => {
                self.advance();
                let Tok::Ident(world) = self.advance() else {
                    return Err(self.err("expected a world name after `@`"));
                };
                let body = self.unary()?;
                Ok(Formula::at(El::name(&world), body))
            }
            Tok::LParen => {
                self.advance();
                let f = self.wand()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.err("expected `)`"));
                }
                self.advance();
                Ok(f)
            }
            Tok::Ident(word) => {
                self.advance();
                match word.as_str() {
                    "top" => Ok(Formula::Top),
                    "bot" => Ok(Formula::Bot),
                    "emp" => Ok(Formula::Emp),
                    "nom" => {
                        if *self.peek() != Tok::LParen {
                            return Err(self.err("expected `(` after `nom`"));
                        }
                        self.advance();
                        let Tok::Ident(world) = self.advance() else {
                            return Err(self.err("expected a world name in `nom(...)`"));
                        };
                        if *self.peek() != Tok::RParen {
                            return Err(self.err("expected `)` after the world name"));
                        }
                        self.advance();
                        Ok(Formula::nominal(El::name(&world)))
                    }
                    _ => Ok(Formula::atom(&word)),
                }
            }
            Tok::Eof => Err(self.err("expected a formula, found end of input")),
            other => Err(self.err(format!("unexpected token {other:?} in formula"))),
        }
    }
}

/// Parse a formula string.
pub fn parse_formula(src: &str) -> CliResult<Formula> {
    let tokens = lex(src)?;
    let mut p = P { tokens, pos: 0 };
    let f = p.wand()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err("trailing input after the formula"));
    }
    Ok(f)
}
