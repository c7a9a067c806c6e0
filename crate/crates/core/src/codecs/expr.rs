//! Arithmetic over numeric literals. Only numbers, `+ - * /`, parentheses,
//! a few named constants and unit-conversion helpers are understood;
//! identifiers resolve through a caller-supplied lookup and nothing else.

use thiserror::Error;

// counted per grammar level, so roughly a quarter of this in nested parentheses
const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unexpected token at byte {0}")]
    Unexpected(usize),
    #[error("unexpected end of expression")]
    Eof,
    #[error("unknown identifier `{0}`")]
    Unknown(String),
    #[error("expression nested too deeply")]
    TooDeep,
    #[error("non-finite result")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(s: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && b.get(i + 1).is_some_and(u8::is_ascii_digit))
        {
            let start = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    while j < b.len() && b[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let v: f64 = s[start..i]
                .parse()
                .map_err(|_| ExprError::Unexpected(start))?;
            // C# float/double suffixes
            if i < b.len() && matches!(b[i], b'f' | b'F' | b'd' | b'D') {
                i += 1;
            }
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'.') {
                i += 1;
            }
            out.push((Tok::Ident(s[start..i].to_string()), start));
        } else {
            let t = match c {
                b'+' | b'-' | b'*' | b'/' => Tok::Op(c as char),
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b',' => Tok::Comma,
                _ => return Err(ExprError::Unexpected(i)),
            };
            out.push((t, i));
            i += 1;
        }
    }
    Ok(out)
}

fn constant(name: &str) -> Option<f64> {
    use std::f64::consts::PI;
    Some(match name {
        "Math.PI" | "math.pi" | "np.pi" | "numpy.pi" | "Mathf.PI" | "pi" | "PI" => PI,
        "Mathf.Deg2Rad" => PI / 180.0,
        "Mathf.Rad2Deg" => 180.0 / PI,
        _ => return None,
    })
}

fn function(name: &str, arg: f64) -> Option<f64> {
    let short = name.rsplit('.').next().unwrap_or(name);
    Some(match short {
        "radians" | "degToRad" | "deg2rad" | "DEG2RAD" => arg.to_radians(),
        "degrees" | "radToDeg" | "rad2deg" => arg.to_degrees(),
        "sqrt" | "Sqrt" => arg.sqrt(),
        "float" | "double" => arg,
        _ => return None,
    })
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    lookup: &'a dyn Fn(&str) -> Option<f64>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        let t = self.toks.get(self.pos).cloned().ok_or(ExprError::Eof)?;
        self.pos += 1;
        Ok(t)
    }

    fn expr(&mut self, depth: usize) -> Result<f64, ExprError> {
        if depth > MAX_DEPTH {
            return Err(ExprError::TooDeep);
        }
        let mut v = self.term(depth + 1)?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let r = self.term(depth + 1)?;
            v = if op == '+' { v + r } else { v - r };
        }
        Ok(v)
    }

    fn term(&mut self, depth: usize) -> Result<f64, ExprError> {
        let mut v = self.unary(depth + 1)?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let r = self.unary(depth + 1)?;
            v = if op == '*' { v * r } else { v / r };
        }
        Ok(v)
    }

    fn unary(&mut self, depth: usize) -> Result<f64, ExprError> {
        if depth > MAX_DEPTH {
            return Err(ExprError::TooDeep);
        }
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(-self.unary(depth + 1)?)
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary(depth + 1)
            }
            _ => self.atom(depth + 1),
        }
    }

    fn atom(&mut self, depth: usize) -> Result<f64, ExprError> {
        let (t, at) = self.next()?;
        match t {
            Tok::Num(v) => Ok(v),
            Tok::LParen => {
                let v = self.expr(depth + 1)?;
                match self.next()? {
                    (Tok::RParen, _) => Ok(v),
                    (_, p) => Err(ExprError::Unexpected(p)),
                }
            }
            Tok::Ident(name) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let arg = self.expr(depth + 1)?;
                    match self.next()? {
                        (Tok::RParen, _) => {}
                        (_, p) => return Err(ExprError::Unexpected(p)),
                    }
                    return function(&name, arg).ok_or(ExprError::Unknown(name));
                }
                constant(&name)
                    .or_else(|| (self.lookup)(&name))
                    .ok_or(ExprError::Unknown(name))
            }
            _ => Err(ExprError::Unexpected(at)),
        }
    }
}

/// Evaluates a scalar expression, resolving bare identifiers through `lookup`.
pub fn eval_with(s: &str, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, ExprError> {
    let toks = tokenize(s)?;
    let mut p = Parser {
        toks,
        pos: 0,
        lookup,
    };
    let v = p.expr(0)?;
    if let Some((_, at)) = p.toks.get(p.pos) {
        return Err(ExprError::Unexpected(*at));
    }
    if !v.is_finite() {
        return Err(ExprError::NonFinite);
    }
    Ok(v)
}

pub fn eval(s: &str) -> Result<f64, ExprError> {
    eval_with(s, &|_| None)
}

/// Evaluates a comma-separated list, unwrapping one level of common vector
/// wrappers: `(..)`, `[..]`, `new Vector3(..)`, `Vector((..))`, `np.array([..])`.
pub fn eval_list(s: &str, lookup: &dyn Fn(&str) -> Option<f64>) -> Option<Vec<f64>> {
    let inner = unwrap_vector(s.trim());
    super::lex::split_args(inner)
        .iter()
        .map(|a| eval_with(a, lookup).ok())
        .collect()
}

fn unwrap_vector(mut s: &str) -> &str {
    for _ in 0..4 {
        let t = s.trim();
        let t = t.strip_prefix("new ").map(str::trim_start).unwrap_or(t);
        let open = match t.find(['(', '[']) {
            Some(i) => i,
            None => return t,
        };
        let head = &t[..open];
        let wrapper = head.is_empty()
            || matches!(
                head.rsplit('.').next().unwrap_or(head),
                "Vector3" | "Vector" | "array" | "Color" | "Euler" | "Vector3d" | "tuple" | "list"
            );
        if !wrapper {
            return t;
        }
        match super::lex::balanced(&t[open + 1..]) {
            Some((inner, rest)) if rest.trim().is_empty() => s = inner,
            _ => return t,
        }
    }
    s
}

/// Evaluates exactly three components.
pub fn eval_vec3(s: &str, lookup: &dyn Fn(&str) -> Option<f64>) -> Option<[f64; 3]> {
    match eval_list(s, lookup)?.as_slice() {
        [x, y, z] => Some([*x, *y, *z]),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(eval("1 + 2 * 3").unwrap(), 7.0);
        assert_eq!(eval("-(1 - 4) / 2").unwrap(), 1.5);
        assert_eq!(eval("2.5f").unwrap(), 2.5);
        assert_eq!(eval("1e-3").unwrap(), 0.001);
        assert!((eval("Math.PI / 2").unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((eval("math.radians(90)").unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((eval("45 * Mathf.Deg2Rad").unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn rejects_junk() {
        assert!(eval("1 +").is_err());
        assert!(eval("os.system(1)").is_err());
        assert!(eval("1 / 0").is_err());
        assert!(eval("1 2").is_err());
        assert!(eval("").is_err());
    }

    #[test]
    fn depth_limit() {
        let deep = format!("{}1{}", "(".repeat(500), ")".repeat(500));
        assert_eq!(eval(&deep), Err(ExprError::TooDeep));
        let neg = format!("{}1", "-".repeat(500));
        assert_eq!(eval(&neg), Err(ExprError::TooDeep));
    }

    #[test]
    fn identifiers_via_lookup() {
        let env = |n: &str| (n == "r").then_some(0.25);
        assert_eq!(eval_with("r * 2", &env).unwrap(), 0.5);
        assert!(eval_with("q", &env).is_err());
    }

    #[test]
    fn vectors() {
        let none = |_: &str| None;
        assert_eq!(eval_vec3("(1, 2, 3)", &none), Some([1.0, 2.0, 3.0]));
        assert_eq!(
            eval_vec3("new Vector3(1f, -2f, 0.5f)", &none),
            Some([1.0, -2.0, 0.5])
        );
        assert_eq!(
            eval_vec3("np.array([1, 2, 3])", &none),
            Some([1.0, 2.0, 3.0])
        );
        assert_eq!(eval_vec3("[1, 2]", &none), None);
        assert_eq!(eval_list("0.5", &none), Some(vec![0.5]));
    }
}
