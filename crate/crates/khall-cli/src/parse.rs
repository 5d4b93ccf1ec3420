//! Expression grammar for the command line: infix arithmetic with integer
//! exponents, `delta(...)` distributions, `wedge(...)`/`sym(...)` generating
//! series, and `K[...]` class literals.
//!
//! Precedence: `^` > `*` `/` > `+` `-`, all binary operators left-associative.
//! The printer emits a canonical form and `parse(print(e)) == e` holds for
//! every expression the parser produces.

use std::fmt;

/// Parse failure with a 1-based source position.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for SyntaxError {}

/// Optional multiplicative argument of a `wedge`/`sym` call: the class is
/// evaluated at `scale` (`*e`) or at its inverse (`/e`).
#[derive(Clone, Debug, PartialEq)]
pub enum Scale {
    None,
    Times(Box<Expr>),
    Over(Box<Expr>),
}

/// Class literal `K[+u,+v,-1]`: signed unit entries.
#[derive(Clone, Debug, PartialEq)]
pub struct KClassLit {
    pub plus: Vec<Expr>,
    pub minus: Vec<Expr>,
    /// Literal order of the signs, so printing preserves the source layout.
    pub order: Vec<bool>, // true = plus
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Int(i64),
    Ident(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Delta(Box<Expr>),
    Wedge(KClassLit, Scale),
    Sym(KClassLit, Scale),
    Class(KClassLit),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let bump = |c: char, line: &mut usize, col: &mut usize| {
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        if c.is_whitespace() {
            chars.next();
            bump(c, &mut line, &mut col);
            continue;
        }
        let tok = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = tok {
            chars.next();
            bump(c, &mut line, &mut col);
            out.push(Spanned { tok, line: tline, col: tcol });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                s.push(d);
                chars.next();
                bump(d, &mut line, &mut col);
            }
            let n: i64 = s.parse().map_err(|_| SyntaxError {
                line: tline,
                col: tcol,
                message: format!("integer literal {s} out of range"),
            })?;
            out.push(Spanned { tok: Tok::Int(n), line: tline, col: tcol });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if !(d.is_ascii_alphanumeric() || d == '_') {
                    break;
                }
                s.push(d);
                chars.next();
                bump(d, &mut line, &mut col);
            }
            out.push(Spanned { tok: Tok::Ident(s), line: tline, col: tcol });
            continue;
        }
        return Err(SyntaxError {
            line: tline,
            col: tcol,
            message: format!("unexpected character {c:?}"),
        });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        let (line, col) = self.here();
        Err(SyntaxError { line, col, message: message.into() })
    }

    fn eat(&mut self, want: &Tok, what: &str) -> Result<(), SyntaxError> {
        if self.peek() == Some(want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.power()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn power(&mut self) -> Result<Expr, SyntaxError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.power()?)));
        }
        let mut base = self.atom()?;
        while self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let sign = if self.peek() == Some(&Tok::Minus) {
                self.pos += 1;
                -1
            } else {
                1
            };
            let k = match self.peek() {
                Some(Tok::Int(n)) => {
                    let k = i32::try_from(*n)
                        .map_err(|_| self.err::<()>("exponent out of range").unwrap_err())?;
                    self.pos += 1;
                    k
                }
                _ => return self.err("expected integer exponent after ^"),
            };
            base = Expr::Pow(Box::new(base), sign * k);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Expr::Int(n))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.eat(&Tok::RParen, "closing parenthesis")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "delta" => {
                        self.eat(&Tok::LParen, "( after delta")?;
                        let arg = self.expr()?;
                        self.eat(&Tok::RParen, "closing parenthesis of delta")?;
                        Ok(Expr::Delta(Box::new(arg)))
                    }
                    "wedge" | "sym" => {
                        self.eat(&Tok::LParen, &format!("( after {name}"))?;
                        self.eat(&Tok::Ident("K".into()), &format!("class literal in {name}"))?;
                        let lit = self.class_literal()?;
                        let scale = match self.peek() {
                            Some(Tok::Star) => {
                                self.pos += 1;
                                Scale::Times(Box::new(self.term()?))
                            }
                            Some(Tok::Slash) => {
                                self.pos += 1;
                                Scale::Over(Box::new(self.power()?))
                            }
                            _ => Scale::None,
                        };
                        self.eat(&Tok::RParen, &format!("closing parenthesis of {name}"))?;
                        Ok(if name == "wedge" {
                            Expr::Wedge(lit, scale)
                        } else {
                            Expr::Sym(lit, scale)
                        })
                    }
                    "K" => Ok(Expr::Class(self.class_literal()?)),
                    _ => Ok(Expr::Ident(name)),
                }
            }
            _ => self.err("expected an expression"),
        }
    }

    fn class_literal(&mut self) -> Result<KClassLit, SyntaxError> {
        self.eat(&Tok::LBracket, "[ of class literal")?;
        let mut lit = KClassLit { plus: Vec::new(), minus: Vec::new(), order: Vec::new() };
        loop {
            let positive = match self.peek() {
                Some(Tok::Plus) => true,
                Some(Tok::Minus) => false,
                _ => return self.err("expected signed entry (+... or -...)"),
            };
            self.pos += 1;
            let entry = self.term()?;
            lit.order.push(positive);
            if positive {
                lit.plus.push(entry);
            } else {
                lit.minus.push(entry);
            }
            match self.peek() {
                Some(Tok::Comma) => {
                    self.pos += 1;
                }
                Some(Tok::RBracket) => {
                    self.pos += 1;
                    return Ok(lit);
                }
                _ => return self.err("expected , or ] in class literal"),
            }
        }
    }
}

/// Parses a complete expression; trailing input is an error.
pub fn parse(text: &str) -> Result<Expr, SyntaxError> {
    let toks = lex(text)?;
    let end = text
        .lines()
        .enumerate()
        .last()
        .map(|(i, l)| (i + 1, l.chars().count() + 1))
        .unwrap_or((1, 1));
    let mut p = Parser { toks, pos: 0, end };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

// Precedence levels for printing: + - at 1, * / at 2 (unary minus too),
// ^ at 3, atoms at 4. A child is parenthesized when its level is below the
// level its position requires.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) | Expr::Neg(..) => 2,
        Expr::Pow(..) => 3,
        _ => 4,
    }
}

fn fmt_prec(e: &Expr, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
    let wrap = prec(e) < min;
    if wrap {
        write!(f, "(")?;
    }
    match e {
        Expr::Int(n) => write!(f, "{n}")?,
        Expr::Ident(s) => write!(f, "{s}")?,
        Expr::Neg(a) => {
            write!(f, "-")?;
            fmt_prec(a, f, 3)?;
        }
        Expr::Add(a, b) => {
            fmt_prec(a, f, 1)?;
            write!(f, "+")?;
            fmt_prec(b, f, 2)?;
        }
        Expr::Sub(a, b) => {
            fmt_prec(a, f, 1)?;
            write!(f, "-")?;
            fmt_prec(b, f, 2)?;
        }
        Expr::Mul(a, b) => {
            fmt_prec(a, f, 2)?;
            write!(f, "*")?;
            fmt_prec(b, f, 3)?;
        }
        Expr::Div(a, b) => {
            fmt_prec(a, f, 2)?;
            write!(f, "/")?;
            fmt_prec(b, f, 3)?;
        }
        Expr::Pow(a, k) => {
            fmt_prec(a, f, 4)?;
            write!(f, "^{k}")?;
        }
        Expr::Delta(a) => {
            write!(f, "delta(")?;
            fmt_prec(a, f, 0)?;
            write!(f, ")")?;
        }
        Expr::Wedge(lit, scale) => fmt_call(f, "wedge", lit, scale)?,
        Expr::Sym(lit, scale) => fmt_call(f, "sym", lit, scale)?,
        Expr::Class(lit) => fmt_class(f, lit)?,
    }
    if wrap {
        write!(f, ")")?;
    }
    Ok(())
}

fn fmt_class(f: &mut fmt::Formatter<'_>, lit: &KClassLit) -> fmt::Result {
    write!(f, "K[")?;
    let (mut pi, mut mi) = (0usize, 0usize);
    for (i, positive) in lit.order.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        if *positive {
            write!(f, "+")?;
            fmt_prec(&lit.plus[pi], f, 2)?;
            pi += 1;
        } else {
            write!(f, "-")?;
            fmt_prec(&lit.minus[mi], f, 3)?;
            mi += 1;
        }
    }
    write!(f, "]")
}

fn fmt_call(f: &mut fmt::Formatter<'_>, name: &str, lit: &KClassLit, scale: &Scale) -> fmt::Result {
    write!(f, "{name}(")?;
    fmt_class(f, lit)?;
    match scale {
        Scale::None => {}
        Scale::Times(e) => {
            write!(f, "*")?;
            fmt_prec(e, f, 3)?;
        }
        Scale::Over(e) => {
            write!(f, "/")?;
            fmt_prec(e, f, 3)?;
        }
    }
    write!(f, ")")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn roundtrip(src: &str) -> Expr {
        let e = parse(src).unwrap();
        let printed = e.to_string();
        let again = parse(&printed).unwrap_or_else(|err| panic!("reparse of {printed:?}: {err}"));
        assert_eq!(e, again, "round trip through {printed:?}");
        e
    }

    #[test]
    fn literals_and_precedence() {
        assert_eq!(roundtrip("1+2*3"), parse("1+(2*3)").unwrap());
        assert_eq!(roundtrip("2*x^3"), parse("2*(x^3)").unwrap());
        assert_eq!(roundtrip("a-b-c"), parse("(a-b)-c").unwrap());
        assert_eq!(roundtrip("a/b/c"), parse("(a/b)/c").unwrap());
        assert_eq!(roundtrip("x^-2"), Expr::Pow(Box::new(Expr::Ident("x".into())), -2));
        // unary minus binds below ^
        assert_eq!(
            roundtrip("-x^2"),
            Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::Ident("x".into())), 2)))
        );
    }

    #[test]
    fn delta_and_class_literals() {
        let e = roundtrip("delta(w/z)");
        assert_eq!(
            e,
            Expr::Delta(Box::new(Expr::Div(
                Box::new(Expr::Ident("w".into())),
                Box::new(Expr::Ident("z".into()))
            )))
        );
        let e = roundtrip("K[+u1,+u2,-1]");
        match e {
            Expr::Class(lit) => {
                assert_eq!(lit.plus.len(), 2);
                assert_eq!(lit.minus, vec![Expr::Int(1)]);
            }
            other => panic!("expected class literal, got {other:?}"),
        }
        roundtrip("wedge(K[+u,-1]/z)");
        roundtrip("sym(K[+u]*q*z)");
        roundtrip("wedge(K[+u,-1])");
    }

    #[test]
    fn rational_example() {
        let e = roundtrip("1/(1-u*x)");
        assert_eq!(
            e,
            Expr::Div(
                Box::new(Expr::Int(1)),
                Box::new(Expr::Sub(
                    Box::new(Expr::Int(1)),
                    Box::new(Expr::Mul(
                        Box::new(Expr::Ident("u".into())),
                        Box::new(Expr::Ident("x".into()))
                    ))
                ))
            )
        );
    }

    #[test]
    fn syntax_errors_have_positions() {
        let err = parse("wedge(K[+u,-1]").unwrap_err();
        assert_eq!((err.line, err.col), (1, 15));
        let err = parse("1+\n*2").unwrap_err();
        assert_eq!((err.line, err.col), (2, 1));
        let err = parse("x$").unwrap_err();
        assert_eq!((err.line, err.col), (1, 2));
        assert!(parse("").is_err());
        assert!(parse("x^y").is_err(), "exponents must be integers");
    }

    fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
        if depth == 0 {
            return match rng.gen_range(0..3) {
                0 => Expr::Int(rng.gen_range(0..20)),
                1 => Expr::Ident(["x", "z", "u", "q"][rng.gen_range(0..4)].into()),
                _ => Expr::Ident(format!("u{}", rng.gen_range(1..4))),
            };
        }
        let sub = |rng: &mut ChaCha8Rng| Box::new(random_expr(rng, depth - 1));
        match rng.gen_range(0..9) {
            0 => Expr::Add(sub(rng), sub(rng)),
            1 => Expr::Sub(sub(rng), sub(rng)),
            2 => Expr::Mul(sub(rng), sub(rng)),
            3 => Expr::Div(sub(rng), sub(rng)),
            4 => Expr::Neg(sub(rng)),
            5 => {
                let k = rng.gen_range(-4..=4);
                Expr::Pow(sub(rng), k)
            }
            6 => Expr::Delta(sub(rng)),
            7 => {
                let n = rng.gen_range(1..=3);
                let mut lit =
                    KClassLit { plus: Vec::new(), minus: Vec::new(), order: Vec::new() };
                for _ in 0..n {
                    let positive = rng.gen_bool(0.5);
                    lit.order.push(positive);
                    let entry = random_expr(rng, 0);
                    if positive {
                        lit.plus.push(entry);
                    } else {
                        lit.minus.push(entry);
                    }
                }
                let scale = match rng.gen_range(0..3) {
                    0 => Scale::None,
                    1 => Scale::Times(sub(rng)),
                    _ => Scale::Over(sub(rng)),
                };
                if rng.gen_bool(0.5) {
                    Expr::Wedge(lit, scale)
                } else {
                    Expr::Sym(lit, scale)
                }
            }
            _ => random_expr(rng, 0),
        }
    }

    #[test]
    fn print_parse_roundtrip_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..500 {
            let e = random_expr(&mut rng, 3);
            let printed = e.to_string();
            let again =
                parse(&printed).unwrap_or_else(|err| panic!("reparse of {printed:?}: {err}"));
            assert_eq!(e, again, "round trip through {printed:?}");
        }
    }
}
