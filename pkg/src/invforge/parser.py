"""Concrete syntax: parsing and rendering of programs.

Files consist of declarations (var, fun, axiom) followed by statements.
Expressions are parsed with one unified precedence grammar and then sort
checked, so parenthesized terms and parenthesized formulas need no lookahead
tricks.  The nondeterministic condition `*` is desugared at parse time:

    while (*) { B }   becomes   havoc b; while (b) { B; havoc b; }
    if (*) ...        becomes   havoc b; if (b) ...

with b a generated boolean.  Rendering is deterministic, and for trees built
through the usual constructors parse(render(p)) is structurally equal to p.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .lang import (
    BOOL,
    INT,
    And,
    App,
    Assert,
    Assign,
    Assume,
    BinArith,
    Block,
    BoolLit,
    Cmp,
    Expr,
    FALSE,
    Formula,
    Havoc,
    If,
    Implies,
    Instruction,
    IntLit,
    InvforgeError,
    Neg,
    Not,
    Or,
    Program,
    Sort,
    SourceSpan,
    SymbolTable,
    TRUE,
    Var,
    While,
    conj,
    disj,
    implies,
    neg,
    sort_of,
)


class ParseError(InvforgeError):
    def __init__(self, message: str, span: SourceSpan | None = None):
        self.span = span
        if span is not None:
            message = f"line {span.line}, column {span.column}: {message}"
        super().__init__(message)


class SortError(ParseError):
    pass


class UndeclaredSymbolError(ParseError):
    pass


KEYWORDS = {
    "var", "fun", "axiom", "assume", "assert", "havoc",
    "if", "else", "while", "invariant", "true", "false", "int", "bool",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|=>|->|&&|\|\||!=|<=|>=|[-+*=<>!;:,(){}])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "kw", or the operator text itself
    text: str
    span: SourceSpan


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            span = SourceSpan(pos, pos + 1, line, pos - line_start + 1)
            raise ParseError(f"unexpected character {source[pos]!r}", span)
        text = m.group(0)
        span = SourceSpan(pos, m.end(), line, pos - line_start + 1)
        if m.lastgroup == "num":
            tokens.append(Token("num", text, span))
        elif m.lastgroup == "ident":
            kind = "kw" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, span))
        elif m.lastgroup == "op":
            tokens.append(Token(text, text, span))
        line += text.count("\n")
        if "\n" in text:
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(pos, pos, line, pos - line_start + 1)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token], symbols: SymbolTable):
        self.tokens = tokens
        self.i = 0
        self.symbols = symbols

    # -- token plumbing

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            return self.next()
        return None

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.accept(kind, text)
        if tok is None:
            want = text or kind
            got = self.peek()
            raise ParseError(f"expected {want!r}, found {got.text or 'end of input'!r}", got.span)
        return tok

    # -- declarations

    def parse_sort(self) -> Sort:
        tok = self.expect("kw")
        if tok.text == "int":
            return INT
        if tok.text == "bool":
            return BOOL
        raise ParseError(f"expected a sort, found {tok.text!r}", tok.span)

    def parse_decls(self) -> list[Formula]:
        axioms = []
        while True:
            tok = self.peek()
            if tok.kind != "kw" or tok.text not in ("var", "fun", "axiom"):
                return axioms
            self.next()
            if tok.text == "var":
                name = self.expect("ident")
                self.expect(":")
                sort = self.parse_sort()
                self._declare(name, lambda n: self.symbols.declare_var(n, sort))
            elif tok.text == "fun":
                name = self.expect("ident")
                self.expect(":")
                arg_sorts = [self.parse_sort()]
                while self.accept(","):
                    arg_sorts.append(self.parse_sort())
                self.expect("->")
                ret = self.parse_sort()
                self._declare(
                    name, lambda n: self.symbols.declare_fun(n, tuple(arg_sorts), ret)
                )
            else:
                axioms.append(self.parse_formula())
            self.expect(";")

    def _declare(self, name_tok: Token, declare) -> None:
        try:
            declare(name_tok.text)
        except InvforgeError as err:
            raise ParseError(str(err), name_tok.span) from None

    # -- expressions (unified grammar, sort checked at each operator)

    def parse_formula(self) -> Formula:
        start = self.peek()
        e = self.parse_expr()
        self._check_sort(e, BOOL, start)
        return e

    def parse_term(self) -> Expr:
        start = self.peek()
        e = self.parse_expr()
        self._check_sort(e, INT, start)
        return e

    def _check_sort(self, e: Expr, want: Sort, tok: Token) -> None:
        if sort_of(e) != want:
            raise SortError(f"expected a {want} expression", tok.span)

    def parse_expr(self) -> Expr:
        return self._parse_implies()

    def _parse_implies(self) -> Expr:
        lhs = self._parse_or()
        tok = self.peek()
        if self.accept("=>"):
            self._check_sort(lhs, BOOL, tok)
            rhs = self._parse_implies()  # right associative
            self._check_sort(rhs, BOOL, tok)
            return implies(lhs, rhs)
        return lhs

    def _parse_or(self) -> Expr:
        args = [self._parse_and()]
        tok = self.peek()
        while self.accept("||"):
            args.append(self._parse_and())
        if len(args) == 1:
            return args[0]
        for a in args:
            self._check_sort(a, BOOL, tok)
        return disj(*args)

    def _parse_and(self) -> Expr:
        args = [self._parse_not()]
        tok = self.peek()
        while self.accept("&&"):
            args.append(self._parse_not())
        if len(args) == 1:
            return args[0]
        for a in args:
            self._check_sort(a, BOOL, tok)
        return conj(*args)

    def _parse_not(self) -> Expr:
        tok = self.peek()
        if self.accept("!"):
            arg = self._parse_not()
            self._check_sort(arg, BOOL, tok)
            return neg(arg)
        return self._parse_cmp()

    def _parse_cmp(self) -> Expr:
        lhs = self._parse_additive()
        tok = self.peek()
        for op in ("=", "!=", "<", "<=", ">", ">="):
            if self.accept(op):
                self._check_sort(lhs, INT, tok)
                rhs = self._parse_additive()
                self._check_sort(rhs, INT, tok)
                if op == "!=":
                    return neg(Cmp("=", lhs, rhs))
                return Cmp(op, lhs, rhs)
        return lhs

    def _parse_additive(self) -> Expr:
        lhs = self._parse_mult()
        while True:
            tok = self.peek()
            if self.accept("+"):
                op = "+"
            elif self.accept("-"):
                op = "-"
            else:
                return lhs
            self._check_sort(lhs, INT, tok)
            rhs = self._parse_mult()
            self._check_sort(rhs, INT, tok)
            lhs = BinArith(op, lhs, rhs)

    def _parse_mult(self) -> Expr:
        lhs = self._parse_unary()
        while True:
            tok = self.peek()
            if not self.accept("*"):
                return lhs
            self._check_sort(lhs, INT, tok)
            rhs = self._parse_unary()
            self._check_sort(rhs, INT, tok)
            lhs = BinArith("*", lhs, rhs)

    def _parse_unary(self) -> Expr:
        tok = self.peek()
        if self.accept("-"):
            arg = self._parse_unary()
            self._check_sort(arg, INT, tok)
            if isinstance(arg, IntLit):
                return IntLit(-arg.value)
            return Neg(arg)
        return self._parse_atom()

    def _parse_atom(self) -> Expr:
        tok = self.next()
        if tok.kind == "num":
            return IntLit(int(tok.text))
        if tok.kind == "kw" and tok.text == "true":
            return TRUE
        if tok.kind == "kw" and tok.text == "false":
            return FALSE
        if tok.kind == "(":
            e = self.parse_expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            if self.peek().kind == "(":
                return self._parse_app(tok)
            sort = self.symbols.sort(tok.text)
            if sort is None:
                if tok.text in self.symbols.functions:
                    raise SortError(f"{tok.text} is a function, not a variable", tok.span)
                raise UndeclaredSymbolError(f"undeclared variable {tok.text}", tok.span)
            return Var(tok.text, sort)
        raise ParseError(f"expected an expression, found {tok.text or 'end of input'!r}", tok.span)

    def _parse_app(self, name_tok: Token) -> Expr:
        sig = self.symbols.functions.get(name_tok.text)
        if sig is None:
            raise UndeclaredSymbolError(f"undeclared function {name_tok.text}", name_tok.span)
        arg_sorts, ret = sig
        self.expect("(")
        args = [self.parse_expr()]
        while self.accept(","):
            args.append(self.parse_expr())
        self.expect(")")
        if len(args) != len(arg_sorts):
            raise SortError(
                f"{name_tok.text} expects {len(arg_sorts)} arguments, got {len(args)}",
                name_tok.span,
            )
        for a, want in zip(args, arg_sorts):
            if sort_of(a) != want:
                raise SortError(f"ill-sorted argument to {name_tok.text}", name_tok.span)
        return App(name_tok.text, tuple(args), ret)

    # -- statements

    def parse_cond(self) -> Formula | None:
        """Condition inside parens; None means the nondeterministic `*`."""
        self.expect("(")
        if self.peek().kind == "*" and self.peek(1).kind == ")":
            self.next()
            self.expect(")")
            return None
        f = self.parse_formula()
        self.expect(")")
        return f

    def parse_block(self) -> Block:
        self.expect("{")
        instrs: list[Instruction] = []
        while not self.accept("}"):
            instrs.extend(self.parse_stmt())
        return tuple(instrs)

    def parse_stmt(self) -> list[Instruction]:
        tok = self.peek()
        if tok.kind == "kw" and tok.text in ("assume", "assert"):
            self.next()
            f = self.parse_formula()
            end = self.expect(";")
            span = _join(tok.span, end.span)
            return [Assume(f, span) if tok.text == "assume" else Assert(f, span)]
        if tok.kind == "kw" and tok.text == "havoc":
            self.next()
            name = self.expect("ident")
            if self.symbols.sort(name.text) is None:
                raise UndeclaredSymbolError(f"undeclared variable {name.text}", name.span)
            end = self.expect(";")
            return [Havoc(name.text, _join(tok.span, end.span))]
        if tok.kind == "kw" and tok.text == "if":
            self.next()
            cond = self.parse_cond()
            then = self.parse_block()
            self.expect("kw", "else")
            orelse = self.parse_block()
            pre, cond = self._desugar_cond(cond, tok)
            return pre + [If(cond, then, orelse, tok.span)]
        if tok.kind == "kw" and tok.text == "while":
            self.next()
            cond = self.parse_cond()
            inv = TRUE
            if self.accept("kw", "invariant"):
                inv = self.parse_formula()
            body = self.parse_block()
            pre, cond = self._desugar_cond(cond, tok)
            if pre:
                # keep the generated flag nondeterministic on every iteration
                body = body + (Havoc(cond.name, tok.span),)
            return pre + [While(cond, body, inv, tok.span)]
        if tok.kind == "ident" and self.peek(1).kind == ":=":
            self.next()
            self.next()
            sort = self.symbols.sort(tok.text)
            if sort is None:
                raise UndeclaredSymbolError(f"undeclared variable {tok.text}", tok.span)
            value = self.parse_expr()
            if sort_of(value) != sort:
                raise SortError(f"cannot assign this expression to {tok.text}: {sort} expected", tok.span)
            end = self.expect(";")
            return [Assign(tok.text, value, _join(tok.span, end.span))]
        raise ParseError(f"expected a statement, found {tok.text or 'end of input'!r}", tok.span)

    def _desugar_cond(self, cond: Formula | None, tok: Token):
        if cond is not None:
            return [], cond
        name = self.symbols.fresh("b", BOOL)
        return [Havoc(name, tok.span)], Var(name, BOOL)


def _join(a: SourceSpan, b: SourceSpan) -> SourceSpan:
    return SourceSpan(a.start, b.end, a.line, a.column)


def parse_program(source: str) -> Program:
    symbols = SymbolTable()
    p = _Parser(tokenize(source), symbols)
    axioms = p.parse_decls()
    instrs: list[Instruction] = []
    while p.peek().kind != "eof":
        instrs.extend(p.parse_stmt())
    return Program(tuple(instrs), symbols, tuple(axioms))


def parse_formula(source: str, symbols: SymbolTable) -> Formula:
    p = _Parser(tokenize(source), symbols)
    f = p.parse_formula()
    p.expect("eof")
    return f


# ---------------------------------------------------------------------------
# Rendering

_PREC = {
    Implies: 1,
    Or: 2,
    And: 3,
    Not: 4,
    Cmp: 5,
    BinArith: None,  # 6 for + and -, 7 for *
    Neg: 8,
}


def _prec(e: Expr) -> int:
    if isinstance(e, BinArith):
        return 7 if e.op == "*" else 6
    return _PREC.get(type(e), 9)


def render_expr(e: Expr, ctx: int = 0) -> str:
    p = _prec(e)
    match e:
        case IntLit(value=v):
            text = str(v)
        case BoolLit(value=v):
            text = "true" if v else "false"
        case Var(name=n):
            text = n
        case App(name=n, args=args):
            text = f"{n}({', '.join(render_expr(a) for a in args)})"
        case Neg(arg=a):
            text = f"-{render_expr(a, 9)}"
        case BinArith(op=op, lhs=a, rhs=b):
            text = f"{render_expr(a, p)} {op} {render_expr(b, p + 1)}"
        case Not(arg=Cmp(op=op, lhs=a, rhs=b)):
            # ints are totally ordered, so negation flips the comparison
            flip = {"=": "!=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
            text = f"{render_expr(a, 6)} {flip[op]} {render_expr(b, 6)}"
            p = 5
        case Not(arg=a):
            text = f"!{render_expr(a, 5)}"
        case Cmp(op=op, lhs=a, rhs=b):
            text = f"{render_expr(a, 6)} {op} {render_expr(b, 6)}"
        case And(args=args):
            text = " && ".join(render_expr(a, p + 1) for a in args)
        case Or(args=args):
            text = " || ".join(render_expr(a, p + 1) for a in args)
        case Implies(lhs=a, rhs=b):
            text = f"{render_expr(a, p + 1)} => {render_expr(b, p)}"
        case _:
            raise TypeError(f"not an expression: {e!r}")
    if p < ctx:
        return f"({text})"
    return text


render_formula = render_expr


def _render_block(block: Block, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    for instr in block:
        match instr:
            case Assume(formula=f):
                out.append(f"{pad}assume {render_expr(f)};")
            case Assert(formula=f):
                out.append(f"{pad}assert {render_expr(f)};")
            case Assign(target=t, value=v):
                out.append(f"{pad}{t} := {render_expr(v)};")
            case Havoc(target=t):
                out.append(f"{pad}havoc {t};")
            case If(cond=c, then=t, orelse=e):
                out.append(f"{pad}if ({render_expr(c)}) {{")
                _render_block(t, indent + 1, out)
                out.append(f"{pad}}} else {{")
                _render_block(e, indent + 1, out)
                out.append(f"{pad}}}")
            case While(cond=c, body=b, invariant=inv):
                inv = conj(inv) if isinstance(inv, And) else inv
                head = f"{pad}while ({render_expr(c)})"
                if inv != TRUE:
                    head += f" invariant {render_expr(inv)}"
                out.append(head + " {")
                _render_block(b, indent + 1, out)
                out.append(f"{pad}}}")
            case _:
                raise TypeError(f"not an instruction: {instr!r}")


def render_program(p: Program) -> str:
    out: list[str] = []
    for name, sort in p.symbols.variables.items():
        out.append(f"var {name}: {sort};")
    for name, (arg_sorts, ret) in p.symbols.functions.items():
        sorts = ", ".join(str(s) for s in arg_sorts)
        out.append(f"fun {name}: {sorts} -> {ret};")
    for ax in p.axioms:
        out.append(f"axiom {render_expr(ax)};")
    if out and p.body:
        out.append("")
    _render_block(p.body, 0, out)
    return "\n".join(out) + "\n"
