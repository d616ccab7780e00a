//! Recursive-descent parser.

use super::{BinOp, Expr, Func, Var};
use std::fmt;

/// Parse failure with the byte offset and the tokens that would have been accepted.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub offset: usize,
    pub expected: Vec<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at byte {}: expected {}", self.offset, self.expected.join(" | "))
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn err<T>(offset: usize, expected: &[&str]) -> Result<T, SyntaxError> {
    Err(SyntaxError { offset, expected: expected.iter().map(|s| s.to_string()).collect() })
}

const OPERAND: &[&str] = &["number", "x<k>", "s<k>", "function", "E[", "(", "-"];

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), SyntaxError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            let s = (c as char).to_string();
            err(self.pos, &[s.as_str()])
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            let at = self.pos;
            self.pos += 1;
            let rhs = self.unary()?;
            if op == BinOp::Div {
                match rhs.constant() {
                    Some(c) if c != 0.0 && c.is_finite() => {}
                    _ => return err(at + 1, &["nonzero constant divisor"]),
                }
            }
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.primary()
    }

    fn number(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        if i < s.len() && s[i] == b'.' {
            i += 1;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = i;
                Ok(Expr::Num(v))
            }
            Err(_) => err(start, &["number"]),
        }
    }

    fn ident(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let c = match self.peek() {
            None => return err(self.pos, OPERAND),
            Some(c) => c,
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if !c.is_ascii_alphabetic() {
            return err(self.pos, OPERAND);
        }
        let start = self.pos;
        let name = self.ident();
        if name == "E" {
            self.expect(b'[')?;
            let e = self.expr()?;
            self.expect(b']')?;
            return Ok(Expr::Expect(Box::new(e)));
        }
        let func = match name {
            "max" => Some(Func::Max),
            "min" => Some(Func::Min),
            "abs" => Some(Func::Abs),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            "pow" => Some(Func::Pow),
            _ => None,
        };
        if let Some(func) = func {
            self.expect(b'(')?;
            let mut args = vec![self.expr()?];
            while args.len() < func.arity() {
                self.expect(b',')?;
                let at = self.pos;
                let a = self.expr()?;
                if func == Func::Pow && a.constant().is_none() {
                    return err(at, &["constant exponent"]);
                }
                args.push(a);
            }
            self.expect(b')')?;
            return Ok(Expr::Call(func, args));
        }
        let (head, digits) = name.split_at(1);
        let index = digits.parse::<usize>().ok().filter(|&k| k >= 1 && !digits.starts_with('0'));
        match (head, index) {
            ("x", Some(k)) => Ok(Expr::Var(Var::X(k - 1))),
            ("s", Some(k)) => Ok(Expr::Var(Var::S(k - 1))),
            _ => err(start, &["x<k>", "s<k>", "max", "min", "abs", "exp", "sqrt", "pow", "E"]),
        }
    }
}

/// Parses an expression with the usual precedence
/// (unary minus over `* /` over `+ -`).
pub fn parse(text: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(_) => err(p.pos, &["operator", "end of input"]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_max_root() {
        let e = parse("max(2*x1+x2, x1+2*x2)").unwrap();
        assert!(matches!(e, Expr::Call(Func::Max, _)));
    }

    #[test]
    fn zero_literal() {
        assert_eq!(parse("0").unwrap(), Expr::Num(0.0));
    }

    #[test]
    fn exp_minus_one() {
        let e = parse("exp(x1)-1").unwrap();
        assert!(matches!(e, Expr::Bin(BinOp::Sub, _, _)));
    }

    #[test]
    fn unary_minus_binds_tighter_than_product() {
        let e = parse("-x1*x2").unwrap();
        match e {
            Expr::Bin(BinOp::Mul, l, _) => assert!(matches!(*l, Expr::Neg(_))),
            _ => panic!("unexpected tree {e:?}"),
        }
    }

    #[test]
    fn reports_offset_and_expected_tokens() {
        let e = parse("x1 + * 2").unwrap_err();
        assert_eq!(e.offset, 5);
        assert!(e.expected.iter().any(|t| t == "("));
        let e = parse("max(x1 x2)").unwrap_err();
        assert_eq!(e.offset, 7);
        assert_eq!(e.expected, vec![",".to_string()]);
    }

    #[test]
    fn rejects_division_by_variable_or_zero() {
        assert!(parse("x1/x2").is_err());
        assert!(parse("x1/0").is_err());
        assert!(parse("x1/(2-2)").is_err());
        assert!(parse("x1/2").is_ok());
    }

    #[test]
    fn rejects_bad_identifiers() {
        assert!(parse("y1").is_err());
        assert!(parse("x0").is_err());
        assert!(parse("pow(x1, x2)").is_err());
        assert!(parse("x1)").is_err());
    }
}
