//! Recursive-descent parser for the expression grammar.

use super::{Ast, Func, ParseError};

pub(super) fn parse(source: &str, coords: &[String]) -> Result<Ast, ParseError> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
        coords,
    };
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(ParseError::Syntax {
            offset: p.pos,
            message: "unexpected trailing input".into(),
        });
    }
    Ok(ast)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    coords: &'a [String],
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && matches!(self.src[self.pos], b' ' | b'\t') {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Ast::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Ast::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Ast::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Ast::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Ast, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.factor()?;
            return Ok(Ast::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let exp_offset = self.pos;
            let exponent = self.factor()?;
            let folded = fold(&exponent)
                .filter(|v| v.is_finite())
                .ok_or(ParseError::NonConstantExponent { offset: exp_offset })?;
            return Ok(Ast::Pow(Box::new(base), folded));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ParseError::Syntax {
                        offset: self.pos,
                        message: "expected `)`".into(),
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(c) => Err(ParseError::Syntax {
                offset: self.pos,
                message: format!("unexpected character `{}`", c as char),
            }),
            None => Err(ParseError::Syntax {
                offset: self.pos,
                message: "expected an operand".into(),
            }),
        }
    }

    fn number(&mut self) -> Result<Ast, ParseError> {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == b'.')
        {
            self.pos += 1;
        }
        // Exponent part, e.g. 1e-5. Only consumed when well-formed so that
        // `2e` can still fail with a clear offset.
        if self.src.get(self.pos).is_some_and(|c| matches!(c, b'e' | b'E')) {
            let mut ahead = self.pos + 1;
            if self.src.get(ahead).is_some_and(|c| matches!(c, b'+' | b'-')) {
                ahead += 1;
            }
            if self.src.get(ahead).is_some_and(u8::is_ascii_digit) {
                ahead += 1;
                while self.src.get(ahead).is_some_and(u8::is_ascii_digit) {
                    ahead += 1;
                }
                self.pos = ahead;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        text.parse::<f64>()
            .map(Ast::Lit)
            .map_err(|_| ParseError::Number { offset: start })
    }

    fn identifier(&mut self) -> Result<Ast, ParseError> {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii identifier")
            .to_owned();
        if self.peek() == Some(b'(') {
            let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownFunction {
                name: name.clone(),
                offset: start,
            })?;
            self.pos += 1;
            let mut args = vec![self.expr()?];
            while self.peek() == Some(b',') {
                self.pos += 1;
                args.push(self.expr()?);
            }
            if self.peek() != Some(b')') {
                return Err(ParseError::Syntax {
                    offset: self.pos,
                    message: "expected `)` or `,` in argument list".into(),
                });
            }
            self.pos += 1;
            if args.len() != func.arity() {
                return Err(ParseError::Arity {
                    name,
                    expected: func.arity(),
                    got: args.len(),
                    offset: start,
                });
            }
            return Ok(Ast::Call(func, args));
        }
        match self.coords.iter().position(|c| c == &name) {
            Some(i) => Ok(Ast::Coord(i)),
            None => Err(ParseError::UnknownIdentifier { name, offset: start }),
        }
    }
}

/// Evaluate a coordinate-free subtree to a number, if possible.
fn fold(ast: &Ast) -> Option<f64> {
    Some(match ast {
        Ast::Lit(v) => *v,
        Ast::Coord(_) => return None,
        Ast::Neg(x) => -fold(x)?,
        Ast::Add(l, r) => fold(l)? + fold(r)?,
        Ast::Sub(l, r) => fold(l)? - fold(r)?,
        Ast::Mul(l, r) => fold(l)? * fold(r)?,
        Ast::Div(l, r) => fold(l)? / fold(r)?,
        Ast::Pow(b, e) => fold(b)?.powf(*e),
        Ast::Call(f, args) => {
            let a: Option<Vec<f64>> = args.iter().map(fold).collect();
            let a = a?;
            match f {
                Func::Sin => a[0].sin(),
                Func::Cos => a[0].cos(),
                Func::Tan => a[0].tan(),
                Func::Exp => a[0].exp(),
                Func::Log => a[0].ln(),
                Func::Sqrt => a[0].sqrt(),
                Func::Atan2 => a[0].atan2(a[1]),
            }
        }
    })
}
