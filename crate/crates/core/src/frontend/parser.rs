//! Recursive-descent parser for the rule language.
//!
//! Surface syntax, one rule per statement:
//!
//! ```text
//! Triangle(x,y,z) :- R(x,y),S(y,z),T(x,z).
//! CountTriangle(;w:long) :- R(x,y),S(y,z),T(x,z); w=<<COUNT(*)>>.
//! PageRank(x;y:float)*[i=5] :- Edge(x,z),PageRank(z),InvDeg(z); y=0.15+0.85*<<SUM(z)>>.
//! SSSP(x;y:int)* :- Edge(w,x),SSSP(w); y=<<MIN(w)>>+1.
//! ```
//!
//! `#` starts a comment line. String constants take double quotes or
//! backquotes; identifiers may begin with digits and may carry trailing
//! primes, as in `R'(x',y')`.

use super::ast::*;
use crate::storage::AnnotType;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    macro_rules! err {
        ($l:expr, $c:expr, $($arg:tt)*) => {
            return Err(SyntaxError { line: $l, column: $c, message: format!($($arg)*) })
        };
    }
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump(&mut chars);
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    bump(&mut chars);
                    if c == '\n' {
                        break;
                    }
                }
            }
            '"' | '`' => {
                let opener = bump(&mut chars);
                let mut s = String::new();
                loop {
                    match chars.peek() {
                        None => err!(tline, tcol, "unterminated string constant"),
                        Some(&c) => {
                            bump(&mut chars);
                            let closes = if opener == '"' {
                                c == '"'
                            } else {
                                c == '`' || c == '\''
                            };
                            if closes {
                                break;
                            }
                            s.push(c);
                        }
                    }
                }
                out.push(Spanned { tok: Tok::Str(s), line: tline, column: tcol });
            }
            c if is_ident_char(c) => {
                let mut s = String::new();
                while chars.peek().is_some_and(|&c| is_ident_char(c)) {
                    s.push(bump(&mut chars));
                }
                while chars.peek() == Some(&'\'') {
                    s.push(bump(&mut chars));
                }
                // Pure digit runs (with optional fraction) are numbers.
                if s.chars().all(|c| c.is_ascii_digit()) {
                    if chars.peek() == Some(&'.') {
                        // Lookahead: a digit after '.' makes it a fraction;
                        // otherwise the dot ends the rule.
                        let mut ahead = chars.clone();
                        ahead.next();
                        if ahead.peek().is_some_and(|c| c.is_ascii_digit()) {
                            s.push(bump(&mut chars));
                            while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                                s.push(bump(&mut chars));
                            }
                        }
                    }
                    out.push(Spanned { tok: Tok::Number(s), line: tline, column: tcol });
                } else {
                    out.push(Spanned { tok: Tok::Ident(s), line: tline, column: tcol });
                }
            }
            _ => {
                let c = bump(&mut chars);
                let punct = match c {
                    '(' => "(",
                    ')' => ")",
                    ',' => ",",
                    ';' => ";",
                    '.' => ".",
                    '*' => "*",
                    '[' => "[",
                    ']' => "]",
                    '=' => "=",
                    '+' => "+",
                    '-' => "-",
                    '/' => "/",
                    ':' => {
                        if chars.peek() == Some(&'-') {
                            bump(&mut chars);
                            ":-"
                        } else {
                            ":"
                        }
                    }
                    '<' => {
                        if chars.peek() == Some(&'<') {
                            bump(&mut chars);
                            "<<"
                        } else {
                            err!(tline, tcol, "expected `<<`")
                        }
                    }
                    '>' => {
                        if chars.peek() == Some(&'>') {
                            bump(&mut chars);
                            ">>"
                        } else {
                            err!(tline, tcol, "expected `>>`")
                        }
                    }
                    other => err!(tline, tcol, "unexpected character `{other}`"),
                };
                out.push(Spanned { tok: Tok::Punct(punct), line: tline, column: tcol });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        let (line, column) = if self.pos < self.toks.len() {
            (self.toks[self.pos].line, self.toks[self.pos].column)
        } else {
            self.toks
                .last()
                .map(|s| (s.line, s.column))
                .unwrap_or((1, 1))
        };
        Err(SyntaxError {
            line,
            column,
            message: message.into(),
        })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_punct(&mut self, p: &'static str) -> bool {
        if self.peek() == Some(&Tok::Punct(p)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &'static str) -> Result<(), SyntaxError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.error(format!("expected `{p}`"))
        }
    }

    fn expect_ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(_)) => match self.next() {
                Some(Tok::Ident(s)) => Ok(s),
                _ => unreachable!(),
            },
            _ => self.error("expected identifier"),
        }
    }

    fn rule(&mut self) -> Result<Rule, SyntaxError> {
        let head_name = self.expect_ident()?;
        self.expect_punct("(")?;
        let mut head_keys = Vec::new();
        if !matches!(self.peek(), Some(Tok::Punct(";")) | Some(Tok::Punct(")"))) {
            loop {
                head_keys.push(self.expect_ident()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let head_annotation = if self.eat_punct(";") {
            let alias = self.expect_ident()?;
            self.expect_punct(":")?;
            let ty_name = self.expect_ident()?;
            let ty = AnnotType::parse(&ty_name)
                .ok_or_else(|| self.error::<()>(format!("unknown annotation type `{ty_name}`")).unwrap_err())?;
            Some(AnnotationDecl { alias, ty })
        } else {
            None
        };
        self.expect_punct(")")?;
        let recursion = if self.eat_punct("*") {
            if self.eat_punct("[") {
                let marker = self.expect_ident()?;
                if marker != "i" {
                    return self.error("expected `i=<count>` in recursion bound");
                }
                self.expect_punct("=")?;
                let n = match self.next() {
                    Some(Tok::Number(n)) => n
                        .parse::<u32>()
                        .map_err(|_| self.error::<()>("invalid iteration count").unwrap_err())?,
                    _ => return self.error("expected iteration count"),
                };
                if n == 0 {
                    return self.error("iteration count must be positive");
                }
                self.expect_punct("]")?;
                Recursion::Naive { iterations: n }
            } else {
                Recursion::Fixpoint
            }
        } else {
            Recursion::None
        };
        self.expect_punct(":-")?;
        let mut body_atoms = vec![self.atom()?];
        while self.eat_punct(",") {
            body_atoms.push(self.atom()?);
        }
        let annotation_expr = if self.eat_punct(";") {
            let alias = self.expect_ident()?;
            self.expect_punct("=")?;
            let expr = self.expr()?;
            if head_annotation.as_ref().map(|d| d.alias.as_str()) != Some(alias.as_str()) {
                return self.error(format!(
                    "annotation alias `{alias}` does not match the head declaration"
                ));
            }
            Some(expr)
        } else {
            None
        };
        self.expect_punct(".")?;
        Ok(Rule {
            head_name,
            head_keys,
            head_annotation,
            body_atoms,
            annotation_expr,
            recursion,
        })
    }

    fn atom(&mut self) -> Result<Atom, SyntaxError> {
        let relation = self.expect_ident()?;
        self.expect_punct("(")?;
        let mut terms = Vec::new();
        if !self.eat_punct(")") {
            loop {
                let term = match self.next() {
                    Some(Tok::Ident(v)) => Term::Variable(v),
                    Some(Tok::Str(s)) => Term::Constant(s),
                    Some(Tok::Number(n)) => Term::Constant(n),
                    _ => {
                        self.pos = self.pos.saturating_sub(1);
                        return self.error("expected variable or constant");
                    }
                };
                terms.push(term);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(")")?;
        }
        Ok(Atom { relation, terms })
    }

    fn expr(&mut self) -> Result<ArithExpr, SyntaxError> {
        let mut lhs = self.expr_term()?;
        loop {
            let op = if self.eat_punct("+") {
                BinOp::Add
            } else if self.eat_punct("-") {
                BinOp::Sub
            } else {
                break;
            };
            let rhs = self.expr_term()?;
            lhs = ArithExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn expr_term(&mut self) -> Result<ArithExpr, SyntaxError> {
        let mut lhs = self.expr_factor()?;
        loop {
            let op = if self.eat_punct("*") {
                BinOp::Mul
            } else if self.eat_punct("/") {
                BinOp::Div
            } else {
                break;
            };
            let rhs = self.expr_factor()?;
            lhs = ArithExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn expr_factor(&mut self) -> Result<ArithExpr, SyntaxError> {
        match self.peek().cloned() {
            Some(Tok::Number(n)) => {
                self.pos += 1;
                let value = n
                    .parse::<f64>()
                    .map_err(|_| self.error::<()>("invalid number").unwrap_err())?;
                Ok(ArithExpr::Number(value))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(ArithExpr::ScalarRef(name))
            }
            Some(Tok::Punct("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Some(Tok::Punct("<<")) => {
                self.pos += 1;
                let op_name = self.expect_ident()?;
                let op = match op_name.as_str() {
                    "SUM" => AggOp::Sum,
                    "MIN" => AggOp::Min,
                    "MAX" => AggOp::Max,
                    "COUNT" => AggOp::Count,
                    other => return self.error(format!("unknown aggregate `{other}`")),
                };
                self.expect_punct("(")?;
                let var = if self.eat_punct("*") {
                    AggVar::Star
                } else {
                    AggVar::Var(self.expect_ident()?)
                };
                self.expect_punct(")")?;
                self.expect_punct(">>")?;
                Ok(ArithExpr::Aggregate { op, var })
            }
            _ => self.error("expected expression"),
        }
    }
}

/// Parses a program: zero or more rules in source order.
pub fn parse_program(text: &str) -> Result<Program, SyntaxError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0 };
    let mut rules = Vec::new();
    while parser.peek().is_some() {
        rules.push(parser.rule()?);
    }
    Ok(Program { rules })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_rule() {
        let p = parse_program("Triangle(x,y,z) :- R(x,y),S(y,z),T(x,z).").unwrap();
        assert_eq!(p.rules.len(), 1);
        let r = &p.rules[0];
        assert_eq!(r.head_name, "Triangle");
        assert_eq!(r.head_keys, vec!["x", "y", "z"]);
        assert_eq!(r.body_atoms.len(), 3);
        assert!(r.head_annotation.is_none());
        assert_eq!(r.recursion, Recursion::None);
    }

    #[test]
    fn count_triangle_rule() {
        let p = parse_program("CountTriangle(;w:long) :- R(x,y),S(x,z),T(x,z); w=<<COUNT(*)>>.")
            .unwrap();
        let r = &p.rules[0];
        assert!(r.head_keys.is_empty());
        let decl = r.head_annotation.as_ref().unwrap();
        assert_eq!(decl.alias, "w");
        assert_eq!(decl.ty, crate::storage::AnnotType::Long);
        assert_eq!(
            r.annotation_expr,
            Some(ArithExpr::Aggregate {
                op: AggOp::Count,
                var: AggVar::Star
            })
        );
    }

    #[test]
    fn empty_body_is_syntax_error() {
        let err = parse_program("Q(x) :-").unwrap_err();
        assert!(err.line >= 1);
    }

    #[test]
    fn pagerank_program() {
        let text = "\
N(;w:int) :- Edge(x,y); w=<<COUNT(x)>>.
PageRank(x;y:float) :- Edge(x,z); y=1/N.
PageRank(x;y:float)*[i=5] :- Edge(x,z),PageRank(z),InvDeg(z); y=0.15+0.85*<<SUM(z)>>.
";
        let p = parse_program(text).unwrap();
        assert_eq!(p.rules.len(), 3);
        assert_eq!(p.rules[2].recursion, Recursion::Naive { iterations: 5 });
        // precedence: 0.15 + (0.85 * <<SUM(z)>>)
        match p.rules[2].annotation_expr.as_ref().unwrap() {
            ArithExpr::Binary { op: BinOp::Add, rhs, .. } => {
                assert!(matches!(**rhs, ArithExpr::Binary { op: BinOp::Mul, .. }));
            }
            other => panic!("unexpected expr {other:?}"),
        }
    }

    #[test]
    fn sssp_program() {
        let text = "\
SSSP(x;y:int) :- Edge(\"start\",x); y=1.
SSSP(x;y:int)* :- Edge(w,x),SSSP(w); y=<<MIN(w)>>+1.
";
        let p = parse_program(text).unwrap();
        assert_eq!(p.rules[0].body_atoms[0].terms[0], Term::Constant("start".into()));
        assert_eq!(p.rules[1].recursion, Recursion::Fixpoint);
    }

    #[test]
    fn primed_and_digit_leading_idents() {
        let p = parse_program(
            "4Clique(x,y,z,w) :- R(x,y),S(y,z),T(x,z),U(x,w),V(y,w),Q(z,w).\n\
             Barbell(x,y,z,x',y',z') :- R(x,y),S(y,z),T(x,z),U(x,x'),R'(x',y'),S'(y',z'),T'(x',z').",
        )
        .unwrap();
        assert_eq!(p.rules[0].head_name, "4Clique");
        assert_eq!(p.rules[1].body_atoms[4].relation, "R'");
        assert_eq!(p.rules[1].head_keys[3], "x'");
    }

    #[test]
    fn backquote_constants() {
        let p = parse_program("S4(x) :- P(x,`node'),Q(x,`other`),W(x,\"quoted\").").unwrap();
        let atoms = &p.rules[0].body_atoms;
        assert_eq!(atoms[0].terms[1], Term::Constant("node".into()));
        assert_eq!(atoms[1].terms[1], Term::Constant("other".into()));
        assert_eq!(atoms[2].terms[1], Term::Constant("quoted".into()));
    }

    #[test]
    fn comment_lines_skipped() {
        let p = parse_program("# a comment\nTriangle(x,y,z) :- R(x,y),S(y,z),T(x,z).\n# end\n")
            .unwrap();
        assert_eq!(p.rules.len(), 1);
    }

    #[test]
    fn error_carries_position() {
        let err = parse_program("Q(x) :- R(x,.\n").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.column > 1);
    }
}
