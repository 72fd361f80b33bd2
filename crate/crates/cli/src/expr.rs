//! A small expression language for field elements.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/')? unary)*      juxtaposition multiplies
//! unary  := '-' unary | power
//! power  := atom ('^' '-'? integer)?
//! atom   := integer | 'p' | 'w' | 'ϖ' | 'z' | 'ζ' | '(' expr ')'
//! ```
//!
//! `w`/`ϖ` is the tower uniformiser, `z`/`ζ` the generator of the unramified
//! step and `p` the residue characteristic. Negative exponents and division
//! require an invertible base.

use ltforge::{Error, FieldElement, LocalField, Result};
use num_bigint::BigInt;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    P,
    W,
    Z,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let mut it = s.chars().peekable();
    while let Some(&c) = it.peek() {
        if c.is_whitespace() {
            it.next();
            continue;
        }
        if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(&d) = it.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                digits.push(d);
                it.next();
            }
            out.push(Tok::Int(digits.parse().unwrap()));
            continue;
        }
        it.next();
        out.push(match c {
            'p' => Tok::P,
            'w' | 'ϖ' => Tok::W,
            'z' | 'ζ' => Tok::Z,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
        });
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    field: &'a LocalField,
    prec: i64,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<FieldElement> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<FieldElement> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = &acc * &self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.bump();
                    acc = acc.div(&self.unary()?)?;
                }
                Some(Tok::Int(_) | Tok::P | Tok::W | Tok::Z | Tok::LParen) => {
                    acc = &acc * &self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<FieldElement> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<FieldElement> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        let n = match self.bump() {
            Some(Tok::Int(n)) => i64::try_from(n).map_err(|_| Error::Parse("exponent too large".into()))?,
            _ => return Err(Error::Parse("expected an integer exponent".into())),
        };
        base.powi(if neg { -n } else { n })
    }

    fn atom(&mut self) -> Result<FieldElement> {
        match self.bump() {
            Some(Tok::Int(n)) => Ok(FieldElement::from_int(self.field, &n, self.prec)),
            Some(Tok::P) => Ok(FieldElement::from_i64(self.field, self.field.p() as i64, self.prec)),
            Some(Tok::W) => Ok(FieldElement::uniformizer(self.field, self.prec)),
            Some(Tok::Z) => Ok(FieldElement::zeta(self.field, self.prec)),
            Some(Tok::LParen) => {
                let v = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(v),
                    _ => Err(Error::Parse("expected ')'".into())),
                }
            }
            Some(t) => Err(Error::Parse(format!("unexpected token {t:?}"))),
            None => Err(Error::Parse("unexpected end of expression".into())),
        }
    }
}

/// Evaluates `src` in `field`, known modulo `varpi^prec` where the input
/// permits.
pub fn parse_element(field: &LocalField, src: &str, prec: i64) -> Result<FieldElement> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    // headroom for divisions and negative powers
    let mut parser = Parser {
        toks,
        pos: 0,
        field,
        prec: prec + 2 * field.e() as i64 + 16,
    };
    let v = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return Err(Error::Parse(format!("trailing input at token {}", parser.pos)));
    }
    Ok(v.with_precision(v.precision().min(prec)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q3() -> LocalField {
        LocalField::pure(3, 1, 4, 40).unwrap()
    }

    #[test]
    fn uniformiser_powers() {
        let l = q3();
        let w = FieldElement::uniformizer(&l, 40);
        assert_eq!(parse_element(&l, "w^4", 40).unwrap(), FieldElement::from_i64(&l, 3, 40));
        assert_eq!(parse_element(&l, "ϖ", 40).unwrap(), w);
        assert_eq!(parse_element(&l, "w^-1", 40).unwrap().valuation().unwrap(), -1);
    }

    #[test]
    fn arithmetic() {
        let l = q3();
        let a = parse_element(&l, "1/w - w", 40).unwrap();
        let b = parse_element(&l, "(1 - w^2) / w", 40).unwrap();
        assert_eq!(a, b);
        let c = parse_element(&l, "2w^2 + p", 40).unwrap();
        let d = parse_element(&l, "2*w*w + w^4", 40).unwrap();
        assert_eq!(c, d);
        assert_eq!(parse_element(&l, "-(-3)", 40).unwrap(), FieldElement::from_i64(&l, 3, 40));
    }

    #[test]
    fn unramified_generator() {
        let l = LocalField::pure(3, 2, 1, 20).unwrap();
        let z = parse_element(&l, "z", 20).unwrap();
        assert_eq!(z.valuation().unwrap(), 0);
        assert_eq!(parse_element(&l, "ζ*(z+1)", 20).unwrap(), &z * &(&z + &FieldElement::one(&l, 20)));
    }

    #[test]
    fn rejects_garbage() {
        let l = q3();
        for bad in ["", "w^", "(w", "w)", "x", "w^w", "1/0"] {
            assert!(parse_element(&l, bad, 40).is_err(), "{bad}");
        }
    }

    #[test]
    fn round_trips_through_json() {
        let l = q3();
        let x = parse_element(&l, "w + 2w^3 - 5", 40).unwrap();
        let back = FieldElement::from_json(&x.to_json()).unwrap();
        assert_eq!(x, back);
    }
}
