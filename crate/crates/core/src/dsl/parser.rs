use std::collections::BTreeMap;
use std::str::FromStr;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{is_keyword, Diagnostic, DECL_KEYWORDS};
use crate::events::{Action, Expr};
use crate::frames::{AtomicFrame, FramePattern, Term};
use crate::portal::ItemExpr;
use crate::predicate::{CmpOp, Operand, Predicate};
use crate::profile::{Dim, Rank};
use crate::value::{Kind, Value};
use crate::warehouse::RepoKind;

/// Deepest allowed nesting of parenthesized formulas and expressions.
pub const MAX_NESTING: usize = 64;

type PResult<T> = Result<T, Diagnostic>;

/// Parses raw bytes; input that is not UTF-8 yields one encoding error.
pub fn parse_bytes(bytes: &[u8]) -> Result<Schema, Vec<Diagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse(text),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).expect("valid prefix");
            let line = valid.matches('\n').count() + 1;
            let col = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            let bad = &bytes[e.valid_up_to()..e.valid_up_to() + e.error_len().unwrap_or(bytes.len() - e.valid_up_to())];
            Err(vec![Diagnostic::error(
                Span::new(line, col),
                "EncodingError: input is not valid UTF-8",
                bad.iter().map(|b| format!("\\x{b:02x}")).collect::<String>(),
            )])
        }
    }
}

/// Parses a schema. On failure every diagnostic found after error
/// recovery is returned, never an AST.
pub fn parse(text: &str) -> Result<Schema, Vec<Diagnostic>> {
    let toks = lex(text).map_err(|d| vec![d])?;
    let mut p = Parser {
        toks,
        pos: 0,
        open: Vec::new(),
        depth: 0,
    };
    let mut decls = Vec::new();
    let mut diags = Vec::new();
    while p.peek() != &Tok::Eof {
        let start = p.pos;
        match p.decl() {
            Ok(d) => decls.push(d),
            Err(d) => {
                diags.push(d);
                p.recover(start);
            }
        }
    }
    if diags.is_empty() {
        Ok(Schema { decls })
    } else {
        Err(diags)
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Open delimiters, innermost last.
    open: Vec<(Span, &'static str)>,
    depth: usize,
}

fn closer(open: &str) -> &'static str {
    match open {
        "(" => ")",
        "{" => "}",
        _ => "]",
    }
}

impl Parser {
    fn tok(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek(&self) -> &Tok {
        &self.tok().tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.tok().span
    }

    fn advance(&mut self) -> Token {
        let t = self.tok().clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    /// Skips to the next declaration keyword that starts a line.
    fn recover(&mut self, decl_start: usize) {
        self.open.clear();
        self.depth = 0;
        if self.pos == decl_start {
            self.advance();
        }
        while !matches!(self.peek(), Tok::Eof) {
            let t = self.tok();
            if t.line_start && matches!(&t.tok, Tok::Word(w) if DECL_KEYWORDS.contains(&w.as_str())) {
                break;
            }
            self.advance();
        }
    }

    fn error_here(&self, expected: &str) -> Diagnostic {
        let t = self.tok();
        if t.tok == Tok::Eof {
            if let Some((span, d)) = self.open.last() {
                return Diagnostic::error(*span, format!("unclosed `{d}`: expected {expected}"), *d);
            }
        }
        Diagnostic::error(t.span, format!("expected {expected}, found {}", t.tok.describe()), t.lexeme.clone())
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        let hit = self.is_punct(p);
        if hit {
            self.advance();
        }
        hit
    }

    fn eat_word(&mut self, w: &str) -> bool {
        let hit = self.is_word(w);
        if hit {
            self.advance();
        }
        hit
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.is_punct(p) {
            Ok(self.advance().span)
        } else {
            Err(self.error_here(&format!("`{p}`")))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(self.error_here(&format!("`{w}`")))
        }
    }

    fn open_group(&mut self, p: &'static str) -> PResult<()> {
        let span = self.expect_punct(p)?;
        self.open.push((span, p));
        Ok(())
    }

    fn close_group(&mut self) -> PResult<()> {
        let (_, p) = *self.open.last().expect("group is open");
        self.expect_punct(closer(p))?;
        self.open.pop();
        Ok(())
    }

    /// `open item (, item)* close`, allowing an empty list and a trailing
    /// comma.
    fn list<T>(&mut self, open: &'static str, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        self.open_group(open)?;
        let close = closer(open);
        let mut out = Vec::new();
        while !self.is_punct(close) {
            out.push(item(self)?);
            if !self.eat_punct(",") {
                break;
            }
        }
        self.close_group()?;
        Ok(out)
    }

    fn nonempty<T>(&self, items: Vec<T>, span: Span, what: &str) -> PResult<Vec<T>> {
        if items.is_empty() {
            return Err(Diagnostic::error(span, format!("{what} must not be empty"), ""));
        }
        Ok(items)
    }

    fn ident(&mut self, what: &str) -> PResult<Ident> {
        match self.peek() {
            Tok::Word(w) if !is_keyword(w) => {
                let t = self.advance();
                Ok(Ident {
                    name: t.lexeme,
                    span: t.span,
                })
            }
            _ => Err(self.error_here(what)),
        }
    }

    fn word_as<T: FromStr>(&mut self, what: &str) -> PResult<T> {
        let span = self.span();
        let t = self.tok().clone();
        match &t.tok {
            Tok::Word(w) => match w.parse::<T>() {
                Ok(v) => {
                    self.advance();
                    Ok(v)
                }
                Err(_) => Err(Diagnostic::error(span, format!("unknown {what} `{w}`"), t.lexeme)),
            },
            _ => Err(self.error_here(what)),
        }
    }

    fn dim(&mut self) -> PResult<Dim> {
        self.word_as("dimension")
    }

    fn rank(&mut self) -> PResult<Rank> {
        self.word_as("rank")
    }

    fn count(&mut self) -> PResult<usize> {
        let t = self.tok().clone();
        match &t.tok {
            Tok::Int(s) => {
                self.advance();
                s.parse()
                    .map_err(|_| Diagnostic::error(t.span, "number out of range", t.lexeme))
            }
            _ => Err(self.error_here("a natural number")),
        }
    }

    fn nest(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(Diagnostic::error(
                self.span(),
                format!("nesting deeper than {MAX_NESTING} levels"),
                self.tok().lexeme.clone(),
            ));
        }
        Ok(())
    }

    fn unnest(&mut self) {
        self.depth -= 1;
    }

    fn literal(&mut self) -> PResult<Value> {
        let neg_span = self.span();
        let negative = self.eat_punct("-");
        let t = self.tok().clone();
        let sign = if negative { "-" } else { "" };
        let out_of_range = || Diagnostic::error(t.span, "number out of range", t.lexeme.clone());
        let v = match &t.tok {
            Tok::Int(s) => Value::Integer(format!("{sign}{s}").parse().map_err(|_| out_of_range())?),
            Tok::Dec(s) => {
                let r: f64 = format!("{sign}{s}").parse().map_err(|_| out_of_range())?;
                if !r.is_finite() {
                    return Err(out_of_range());
                }
                Value::Real(r)
            }
            Tok::Str(s) if !negative => Value::Text(s.clone()),
            Tok::Word(w) if !negative && (w == "true" || w == "false") => Value::Boolean(w == "true"),
            _ if negative => {
                return Err(Diagnostic::error(
                    neg_span,
                    format!("expected a number after `-`, found {}", t.tok.describe()),
                    "-",
                ))
            }
            _ => return Err(self.error_here("a literal")),
        };
        self.advance();
        Ok(v)
    }

    fn is_literal_start(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::Dec(_) | Tok::Str(_) => true,
            Tok::Punct("-") => true,
            Tok::Word(w) => w == "true" || w == "false",
            _ => false,
        }
    }

    fn assignments<T>(&mut self, mut rhs: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<(Ident, T)>> {
        self.list("{", |p| {
            let field = p.ident("a field name")?;
            p.expect_punct("=")?;
            Ok((field, rhs(p)?))
        })
    }

    fn frame(&mut self) -> PResult<AtomicFrame> {
        let rel = self.ident("a relation name")?;
        self.open_group("(")?;
        let a = self.ident("a constant")?;
        self.expect_punct(",")?;
        let b = self.ident("a constant")?;
        self.close_group()?;
        Ok(AtomicFrame::new(rel.name, a.name, b.name))
    }

    fn decl(&mut self) -> PResult<Decl> {
        let span = self.span();
        let Tok::Word(kw) = self.peek().clone() else {
            return Err(self.error_here("a declaration"));
        };
        if !DECL_KEYWORDS.contains(&kw.as_str()) {
            return Err(self.error_here("a declaration"));
        }
        self.advance();
        let kind = match kw.as_str() {
            "concept" => self.concept()?,
            "individual" => {
                let name = self.ident("an individual name")?;
                self.expect_punct(":")?;
                let concept = self.ident("a concept name")?;
                let values = self.assignments(Self::literal)?;
                DeclKind::Individual { name, concept, values }
            }
            "relation" => DeclKind::Relation {
                name: self.ident("a relation name")?,
            },
            "frame" => DeclKind::Frame { frame: self.frame()? },
            "dimension" => {
                let dim = self.dim()?;
                let group = self.span();
                let values = self.list("{", |p| p.ident("a dimension value"))?;
                DeclKind::Dimension {
                    dim,
                    values: self.nonempty(values, group, "dimension alphabet")?,
                }
            }
            "profile" => self.profile()?,
            "metric" => self.metric()?,
            "script" => self.script()?,
            "source" => {
                let name = self.ident("a source name")?;
                self.expect_word("kind")?;
                let kind = self.word_as::<RepoKind>("repository kind")?;
                let items = self.list("{", |p| {
                    let id = p.ident("an item id")?;
                    let values = p.assignments(Self::literal)?;
                    Ok(SeedItem { id, values })
                })?;
                DeclKind::Source { name, kind, items }
            }
            _ => self.page()?,
        };
        Ok(Decl { span, kind })
    }

    fn concept(&mut self) -> PResult<DeclKind> {
        let name = self.ident("a concept name")?;
        let group = self.span();
        let fields = self.list("(", |p| {
            let field = p.ident("a field name")?;
            p.expect_punct(":")?;
            Ok((field, p.kind()?))
        })?;
        Ok(DeclKind::Concept {
            name,
            fields: self.nonempty(fields, group, "field list")?,
        })
    }

    fn kind(&mut self) -> PResult<Kind> {
        let Tok::Word(w) = self.peek().clone() else {
            return Err(self.error_here("a field kind"));
        };
        let k = match w.as_str() {
            "integer" => Kind::Integer,
            "real" => Kind::Real,
            "text" => Kind::Text,
            "boolean" => Kind::Boolean,
            "media" => Kind::Media,
            "ref" => {
                self.advance();
                return Ok(Kind::Ref(self.ident("a concept name")?.name));
            }
            _ => return Err(self.error_here("a field kind")),
        };
        self.advance();
        Ok(k)
    }

    fn profile(&mut self) -> PResult<DeclKind> {
        let name = self.ident("a profile name")?;
        let group = self.span();
        let mut rank = None;
        let mut dims: Vec<(Dim, Ident)> = Vec::new();
        self.list("{", |p| {
            let key_span = p.span();
            if p.eat_word("rank") {
                p.expect_punct("=")?;
                if rank.replace(p.rank()?).is_some() {
                    return Err(Diagnostic::error(key_span, "duplicate rank entry", "rank"));
                }
            } else {
                let d = p.dim()?;
                p.expect_punct("=")?;
                if dims.iter().any(|(x, _)| *x == d) {
                    return Err(Diagnostic::error(key_span, format!("duplicate entry for dimension `{d}`"), d.symbol()));
                }
                dims.push((d, p.ident("a dimension value")?));
            }
            Ok(())
        })?;
        let rank = rank.ok_or_else(|| Diagnostic::error(group, format!("profile `{name}` needs a rank entry"), "{"))?;
        Ok(DeclKind::Profile { name, rank, dims })
    }

    fn metric(&mut self) -> PResult<DeclKind> {
        let name = self.ident("a metric name")?;
        self.expect_word("order")?;
        let order = self.list("(", Self::dim)?;
        let saturates = if self.eat_word("saturates") {
            Some(self.count()?)
        } else {
            None
        };
        let group = self.span();
        let rows = self.list("{", |p| {
            let chain = p.list("[", |p| {
                let d = p.dim()?;
                p.expect_punct("=")?;
                Ok((d, p.ident("a dimension value")?))
            })?;
            p.expect_punct("->")?;
            let values = p.list("{", |p| p.ident("a symbol"))?;
            Ok(MetricRow { chain, values })
        })?;
        Ok(DeclKind::Metric {
            name,
            order,
            saturates,
            rows: self.nonempty(rows, group, "metric table")?,
        })
    }

    fn script(&mut self) -> PResult<DeclKind> {
        let name = self.ident("a script name")?;
        let hook = self.eat_word("hook");
        self.expect_word("on")?;
        let trigger = self.ident("an event name")?;
        let mut scenario = Vec::new();
        if self.eat_word("scenario") {
            scenario.push(self.frame()?);
            while self.eat_punct(",") {
                scenario.push(self.frame()?);
            }
        }
        let actions = self.list("{", Self::action)?;
        Ok(DeclKind::Script {
            name,
            hook,
            trigger,
            scenario,
            actions,
        })
    }

    fn action(&mut self) -> PResult<Action> {
        if self.eat_word("set") {
            let page = self.ident("a page name")?;
            self.expect_punct(".")?;
            let field = self.ident("a field name")?;
            self.expect_punct("=")?;
            Ok(Action::Set {
                page: page.name,
                field: field.name,
                expr: self.expr()?,
            })
        } else if self.eat_word("refresh") {
            Ok(Action::Refresh {
                page: self.ident("a page name")?.name,
            })
        } else if self.eat_word("transition") {
            let individual = self.ident("an individual name")?.name;
            let mut values = BTreeMap::new();
            for (field, e) in self.assignments(Self::expr)? {
                if values.insert(field.name.clone(), e).is_some() {
                    return Err(Diagnostic::error(
                        field.span,
                        format!("field `{field}` assigned twice"),
                        field.name,
                    ));
                }
            }
            Ok(Action::Transition { individual, values })
        } else {
            Err(self.error_here("`set`, `refresh` or `transition`"))
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut left = self.term()?;
        loop {
            if self.eat_punct("+") {
                left = Expr::Add(Box::new(left), Box::new(self.term()?));
            } else if self.eat_punct("-") {
                left = Expr::Sub(Box::new(left), Box::new(self.term()?));
            } else {
                return Ok(left);
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        if self.is_punct("(") {
            self.nest()?;
            self.open_group("(")?;
            let e = self.expr()?;
            self.close_group()?;
            self.unnest();
            Ok(e)
        } else if self.eat_punct("$") {
            Ok(Expr::Arg(self.ident("an argument name")?.name))
        } else if self.is_literal_start() {
            Ok(Expr::Literal(self.literal()?))
        } else {
            Ok(Expr::Field(self.ident("an expression")?.name))
        }
    }

    fn page(&mut self) -> PResult<DeclKind> {
        let name = self.ident("a page name")?;
        self.expect_word("requires")?;
        let required = self.rank()?;
        let mut conditions: Vec<(Dim, Ident)> = Vec::new();
        if self.eat_word("when") {
            loop {
                let span = self.span();
                let d = self.dim()?;
                self.expect_punct("=")?;
                if conditions.iter().any(|(x, _)| *x == d) {
                    return Err(Diagnostic::error(span, format!("duplicate condition on `{d}`"), d.symbol()));
                }
                conditions.push((d, self.ident("a dimension value")?));
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let items = self.list("{", |p| {
            p.expect_word("item")?;
            p.item_expr()
        })?;
        Ok(DeclKind::Page {
            name,
            required,
            conditions,
            items,
        })
    }

    fn item_expr(&mut self) -> PResult<ItemExpr> {
        if self.eat_word("query") {
            let relation = self.ident("a relation name")?.name;
            self.open_group("(")?;
            let subject = self.frame_term()?;
            self.expect_punct(",")?;
            let object = self.frame_term()?;
            self.close_group()?;
            Ok(ItemExpr::Query {
                pattern: FramePattern {
                    relation,
                    subject,
                    object,
                },
            })
        } else if self.eat_word("count") {
            self.expect_punct("?")?;
            self.open_group("{")?;
            let concept = self.ident("a concept name")?.name;
            self.expect_punct("|")?;
            let predicate = self.predicate()?;
            self.close_group()?;
            Ok(ItemExpr::Count { concept, predicate })
        } else {
            Ok(ItemExpr::Key {
                key: self.ident("an item expression")?.name,
            })
        }
    }

    fn frame_term(&mut self) -> PResult<Term> {
        if self.eat_punct("?") {
            Ok(Term::Var(self.ident("a variable name")?.name))
        } else {
            Ok(Term::Const(self.ident("a constant or `?variable`")?.name))
        }
    }

    pub(super) fn predicate(&mut self) -> PResult<Predicate> {
        let mut left = self.conjunction()?;
        while self.eat_word("or") {
            left = left.or(self.conjunction()?);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> PResult<Predicate> {
        let mut left = self.unary()?;
        while self.eat_word("and") {
            left = left.and(self.unary()?);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Predicate> {
        if self.is_word("not") {
            self.nest()?;
            self.advance();
            let inner = self.unary()?;
            self.unnest();
            return Ok(inner.not());
        }
        if self.is_punct("(") {
            self.nest()?;
            self.open_group("(")?;
            let inner = self.predicate()?;
            self.close_group()?;
            self.unnest();
            return Ok(inner);
        }
        if (self.is_word("true") || self.is_word("false")) && !self.follows_operand() {
            let b = self.is_word("true");
            self.advance();
            return Ok(Predicate::Const(b));
        }
        let span = self.span();
        let lexeme = self.tok().lexeme.clone();
        let left = self.operand()?;
        if let Some(op) = self.cmp_op() {
            self.advance();
            let right = self.operand()?;
            return Ok(Predicate::Compare { op, left, right });
        }
        if self.eat_word("in") {
            let set = self.list("{", Self::literal)?;
            return Ok(Predicate::Member { operand: left, set });
        }
        match left {
            Operand::Field(f) => Ok(Predicate::Flag(f)),
            Operand::Literal(_) => Err(Diagnostic::error(
                span,
                "a literal alone is not a formula; expected a comparison",
                lexeme,
            )),
        }
    }

    /// Whether the token after the current one continues an atom.
    fn follows_operand(&self) -> bool {
        matches!(self.peek_at(1), Tok::Punct("=" | "!=" | "<" | "<=" | ">" | ">="))
            || matches!(self.peek_at(1), Tok::Word(w) if w == "in")
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        let Tok::Punct(p) = self.peek() else { return None };
        CmpOp::ALL.into_iter().find(|op| op.symbol() == *p)
    }

    fn operand(&mut self) -> PResult<Operand> {
        if self.is_literal_start() {
            return Ok(Operand::Literal(self.literal()?));
        }
        if self.is_word("concept") {
            self.advance();
            return Ok(Operand::Field("concept".into()));
        }
        Ok(Operand::Field(self.ident("a field or literal")?.name))
    }
}

/// Parses a standalone formula, as accepted on the command line.
pub fn parse_predicate(text: &str) -> Result<Predicate, Diagnostic> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        open: Vec::new(),
        depth: 0,
    };
    let phi = p.predicate()?;
    if p.peek() != &Tok::Eof {
        return Err(p.error_here("end of formula"));
    }
    Ok(phi)
}
