//! Recursive-descent parser for the infix expression language.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number | '(' expr ')' | ident '(' expr ')'
//!          | ident '[' 'n' (('+'|'-') int)? ']' | ident "'"*
//! ```
//!
//! `n`, `t`, `pi` and `sgn_n` are reserved. Exponents must reduce to integer
//! constants. Decimal literals are read exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Pow;

use super::{canonicalize, Expr, ExprError, FnRegistry, Node};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Sym(char),
}

fn syntax(offset: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax {
        offset,
        message: message.into(),
    }
}

/// Parses an exact decimal or fraction literal such as `-3`, `0.25`, `1e-3`
/// or `2/7`.
pub fn parse_rational(text: &str) -> Result<BigRational, ExprError> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p = parse_rational(p)?;
        let q = parse_rational(q)?;
        if q == BigRational::from_integer(0.into()) {
            return Err(syntax(0, "zero denominator in literal"));
        }
        return Ok(p / q);
    }
    let (neg, body) = match text.strip_prefix('-').or_else(|| text.strip_prefix('\u{2212}')) {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let value = decimal(body).ok_or_else(|| syntax(0, format!("invalid number `{text}`")))?;
    Ok(if neg { -value } else { value })
}

fn decimal(body: &str) -> Option<BigRational> {
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let ten = BigRational::from_integer(BigInt::from(10));
    let scale = exp - frac_part.len() as i32;
    let factor = if scale >= 0 {
        Pow::pow(ten, scale as u32)
    } else {
        Pow::pow(ten, (-scale) as u32).recip()
    };
    Some(BigRational::from_integer(numer) * factor)
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.1.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            // Scientific suffix, only when followed by digits.
            if i < chars.len() && matches!(chars[i].1, 'e' | 'E') {
                let mut j = i + 1;
                if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let end = chars.get(i).map_or(text.len(), |c| c.0);
            let lit = &text[chars[start].0..end];
            let value = decimal(lit).ok_or_else(|| syntax(pos, format!("invalid number `{lit}`")))?;
            out.push((pos, Tok::Num(value)));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end = chars.get(i).map_or(text.len(), |c| c.0);
            out.push((pos, Tok::Ident(text[chars[start].0..end].to_string())));
        } else {
            let sym = match c {
                '\u{2212}' => '-',
                '\u{2032}' => '\'',
                '\u{00b7}' | '\u{00d7}' => '*',
                '+' | '-' | '*' | '/' | '^' | '(' | ')' | '[' | ']' | '\'' => c,
                _ => return Err(syntax(pos, format!("unexpected character `{c}`"))),
            };
            out.push((pos, Tok::Sym(sym)));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    fns: &'a FnRegistry,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                let t = self.term()?;
                terms.push(Expr::from_node(Node::Product(vec![Expr::int(-1), t])));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::from_node(Node::Sum(terms))
        })
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat('*') {
                factors.push(self.unary()?);
            } else if self.eat('/') {
                let d = self.unary()?;
                factors.push(Expr::from_node(Node::Pow(d, -1)));
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::from_node(Node::Product(factors))
        })
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            let e = self.unary()?;
            return Ok(Expr::from_node(Node::Product(vec![Expr::int(-1), e])));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let at = self.offset();
        let exp = canonicalize(&self.unary()?);
        let k = exp
            .as_const()
            .filter(|c| c.is_integer())
            .and_then(|c| i64::try_from(c.to_integer()).ok())
            .ok_or_else(|| syntax(at, "exponent must be an integer constant"))?;
        Ok(Expr::from_node(Node::Pow(base, k)))
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::rational(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                self.identifier(name, at)
            }
            Some(Tok::Sym(c)) => Err(syntax(at, format!("unexpected `{c}`"))),
            None => Err(syntax(at, "unexpected end of input")),
        }
    }

    fn identifier(&mut self, name: String, at: usize) -> Result<Expr, ExprError> {
        if self.eat('(') {
            if !self.fns.is_known(&name) {
                return Err(ExprError::UnknownSymbol { name, offset: at });
            }
            let arg = self.expr()?;
            self.expect(')')?;
            return Ok(Expr::from_node(Node::Fn(name, arg)));
        }
        match name.as_str() {
            "n" => return Ok(Expr::n()),
            "t" => return Ok(Expr::t()),
            "pi" => return Ok(Expr::pi()),
            "sgn_n" => return Ok(Expr::alt_sign()),
            _ => {}
        }
        if self.eat('[') {
            return self.shift_index(name);
        }
        let mut order = 0;
        while self.eat('\'') {
            order += 1;
        }
        Ok(Expr::deriv(&name, order))
    }

    fn shift_index(&mut self, name: String) -> Result<Expr, ExprError> {
        let at = self.offset();
        if self.peek() != Some(&Tok::Ident("n".to_string())) {
            return Err(syntax(at, "sequence index must be of the form n, n+k or n-k"));
        }
        self.pos += 1;
        let mut offset = 0i64;
        let sign = if self.eat('+') {
            1
        } else if self.eat('-') {
            -1
        } else {
            0
        };
        if sign != 0 {
            let at = self.offset();
            match self.peek().cloned() {
                Some(Tok::Num(v)) if v.is_integer() => {
                    self.pos += 1;
                    offset = sign
                        * i64::try_from(v.to_integer())
                            .map_err(|_| syntax(at, "index offset out of range"))?;
                }
                _ => return Err(syntax(at, "expected integer index offset")),
            }
        }
        self.expect(']')?;
        Ok(Expr::shift(&name, offset))
    }
}

fn parse_raw(text: &str, fns: &FnRegistry) -> Result<Expr, ExprError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        fns,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(syntax(p.offset(), "unexpected trailing input"));
    }
    Ok(e)
}

/// Parses with only the built-in functions available.
pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    parse_expr_with(text, &FnRegistry::new())
}

/// Parses and canonicalizes; function applications must be built in or
/// declared in `fns`.
pub fn parse_expr_with(text: &str, fns: &FnRegistry) -> Result<Expr, ExprError> {
    Ok(canonicalize(&parse_raw(text, fns)?))
}
