"""Core syntax: formulas, instructions, programs, and locations.

Formulas and integer terms share one immutable expression type; sorts are
checked at the parser boundary and preserved by construction helpers.
Programs are immutable trees, so every transformation (strengthening an
invariant, desugaring) builds a new tree.

Locations address the points between instructions.  A location is a sequence
of naturals: position i in a block is (i,), the body of a while at position i
opens a nested space (i, 1, j), and the two branches of an if use (i, 1, j)
and (i, 2, j).  The strict order on locations is plain lexicographic order on
tuples, with a prefix counting as smaller.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class InvforgeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidLocationError(InvforgeError):
    pass


class Sort(enum.Enum):
    INT = "int"
    BOOL = "bool"

    def __str__(self):
        return self.value


INT = Sort.INT
BOOL = Sort.BOOL


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class Var(Expr):
    name: str
    sort: Sort


@dataclass(frozen=True)
class BinArith(Expr):
    # op in {"+", "-", "*"}
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class App(Expr):
    """Application of a declared uninterpreted function."""

    name: str
    args: tuple[Expr, ...]
    sort: Sort


@dataclass(frozen=True)
class Cmp(Expr):
    # op in {"=", "<", "<=", ">", ">="}; disequality is Not(Cmp("=", ...))
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr


@dataclass(frozen=True)
class And(Expr):
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Or(Expr):
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Implies(Expr):
    lhs: Expr
    rhs: Expr


Formula = Expr
Term = Expr

TRUE = BoolLit(True)
FALSE = BoolLit(False)


def conj(*formulas: Formula) -> Formula:
    """Conjunction with flattening; true units are dropped."""
    flat: list[Formula] = []
    queue = list(formulas)
    while queue:
        f = queue.pop(0)
        if isinstance(f, And):
            queue[:0] = f.args
        elif f == FALSE:
            return FALSE
        elif f != TRUE:
            flat.append(f)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*formulas: Formula) -> Formula:
    flat: list[Formula] = []
    queue = list(formulas)
    while queue:
        f = queue.pop(0)
        if isinstance(f, Or):
            queue[:0] = f.args
        elif f == TRUE:
            return TRUE
        elif f != FALSE:
            flat.append(f)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def implies(lhs: Formula, rhs: Formula) -> Formula:
    if lhs == TRUE:
        return rhs
    if rhs == TRUE:
        return TRUE
    return Implies(lhs, rhs)


_FLIP = {"<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def neg(f: Formula) -> Formula:
    if f == TRUE:
        return FALSE
    if f == FALSE:
        return TRUE
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, Cmp) and f.op in _FLIP:
        # ints are totally ordered; flipping keeps Not nodes off comparisons
        return Cmp(_FLIP[f.op], f.lhs, f.rhs)
    return Not(f)


complement = neg


def sort_of(e: Expr) -> Sort:
    match e:
        case IntLit() | BinArith() | Neg():
            return INT
        case BoolLit() | Cmp() | Not() | And() | Or() | Implies():
            return BOOL
        case Var(sort=s) | App(sort=s):
            return s
    raise TypeError(f"not an expression: {e!r}")


def substitute(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Capture-free substitution of variables (quantifier-free trees)."""
    if not mapping:
        return e
    match e:
        case IntLit() | BoolLit():
            return e
        case Var(name=n):
            repl = mapping.get(n)
            if repl is None:
                return e
            if sort_of(repl) != e.sort:
                raise InvforgeError(f"ill-sorted substitution for {n}")
            return repl
        case BinArith(op=op, lhs=a, rhs=b):
            return BinArith(op, substitute(a, mapping), substitute(b, mapping))
        case Neg(arg=a):
            return Neg(substitute(a, mapping))
        case App(name=n, args=args, sort=s):
            return App(n, tuple(substitute(a, mapping) for a in args), s)
        case Cmp(op=op, lhs=a, rhs=b):
            return Cmp(op, substitute(a, mapping), substitute(b, mapping))
        case Not(arg=a):
            return neg(substitute(a, mapping))
        case And(args=args):
            return conj(*(substitute(a, mapping) for a in args))
        case Or(args=args):
            return disj(*(substitute(a, mapping) for a in args))
        case Implies(lhs=a, rhs=b):
            return implies(substitute(a, mapping), substitute(b, mapping))
    raise TypeError(f"not an expression: {e!r}")


def free_variables(e: Expr, acc: dict[str, Sort] | None = None) -> dict[str, Sort]:
    if acc is None:
        acc = {}
    match e:
        case Var(name=n, sort=s):
            acc[n] = s
        case BinArith(lhs=a, rhs=b) | Cmp(lhs=a, rhs=b) | Implies(lhs=a, rhs=b):
            free_variables(a, acc)
            free_variables(b, acc)
        case Neg(arg=a) | Not(arg=a):
            free_variables(a, acc)
        case App(args=args):
            for a in args:
                free_variables(a, acc)
        case And(args=args) | Or(args=args):
            for a in args:
                free_variables(a, acc)
    return acc


def functions_used(e: Expr, acc=None) -> dict[str, tuple[tuple[Sort, ...], Sort]]:
    if acc is None:
        acc = {}
    match e:
        case App(name=n, args=args, sort=s):
            acc[n] = (tuple(sort_of(a) for a in args), s)
            for a in args:
                functions_used(a, acc)
        case BinArith(lhs=a, rhs=b) | Cmp(lhs=a, rhs=b) | Implies(lhs=a, rhs=b):
            functions_used(a, acc)
            functions_used(b, acc)
        case Neg(arg=a) | Not(arg=a):
            functions_used(a, acc)
        case And(args=args) | Or(args=args):
            for a in args:
                functions_used(a, acc)
    return acc


def int_literals(e: Expr, acc: set[int] | None = None) -> set[int]:
    if acc is None:
        acc = set()
    match e:
        case IntLit(value=v):
            acc.add(v)
        case BinArith(lhs=a, rhs=b) | Cmp(lhs=a, rhs=b) | Implies(lhs=a, rhs=b):
            int_literals(a, acc)
            int_literals(b, acc)
        case Neg(arg=a) | Not(arg=a):
            int_literals(a, acc)
        case App(args=args) | And(args=args) | Or(args=args):
            for a in args:
                int_literals(a, acc)
    return acc


# ---------------------------------------------------------------------------
# Symbol table


@dataclass
class SymbolTable:
    """Declared variables and uninterpreted functions, in declaration order.

    The fresh counter is bookkeeping only: it does not take part in equality,
    and generated names always skip names already present.
    """

    variables: dict[str, Sort] = field(default_factory=dict)
    functions: dict[str, tuple[tuple[Sort, ...], Sort]] = field(default_factory=dict)
    fresh_counter: int = field(default=0, compare=False)

    def declare_var(self, name: str, sort: Sort) -> None:
        if name in self.variables or name in self.functions:
            raise InvforgeError(f"duplicate declaration of {name}")
        self.variables[name] = sort

    def declare_fun(self, name: str, arg_sorts: tuple[Sort, ...], ret: Sort) -> None:
        if name in self.variables or name in self.functions:
            raise InvforgeError(f"duplicate declaration of {name}")
        self.functions[name] = (tuple(arg_sorts), ret)

    def sort(self, name: str) -> Sort | None:
        return self.variables.get(name)

    def fresh(self, base: str, sort: Sort) -> str:
        """Mint and declare a new variable name derived from base."""
        while True:
            self.fresh_counter += 1
            name = f"_{base}_{self.fresh_counter}"
            if name not in self.variables and name not in self.functions:
                self.variables[name] = sort
                return name

    def copy(self) -> "SymbolTable":
        return SymbolTable(
            dict(self.variables), dict(self.functions), self.fresh_counter
        )


# ---------------------------------------------------------------------------
# Instructions and programs


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int


@dataclass(frozen=True)
class Instruction:
    pass


@dataclass(frozen=True)
class Assign(Instruction):
    target: str
    value: Expr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Havoc(Instruction):
    target: str
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Assume(Instruction):
    formula: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Assert(Instruction):
    formula: Formula
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


Block = tuple[Instruction, ...]


@dataclass(frozen=True)
class If(Instruction):
    cond: Formula
    then: Block
    orelse: Block
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class While(Instruction):
    cond: Formula
    body: Block
    invariant: Formula = TRUE
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass
class Program:
    body: Block
    symbols: SymbolTable
    axioms: tuple[Formula, ...] = ()


class Location(tuple):
    """A sequence of naturals; compares lexicographically, prefix first."""

    def __new__(cls, digits=()):
        digits = tuple(digits)
        if not all(isinstance(d, int) and d >= 0 for d in digits):
            raise InvalidLocationError(f"bad location digits: {digits!r}")
        return super().__new__(cls, digits)

    @classmethod
    def parse(cls, text: str) -> "Location":
        text = text.strip()
        if not text:
            return cls()
        try:
            return cls(int(part) for part in text.split("."))
        except ValueError:
            raise InvalidLocationError(f"bad location: {text!r}") from None

    def __str__(self):
        return ".".join(str(d) for d in self)

    def __repr__(self):
        return f"Location({str(self)!r})"

    def __add__(self, other):
        return Location(tuple(self) + tuple(other))

    def is_prefix_of(self, other) -> bool:
        return len(self) <= len(other) and tuple(other[: len(self)]) == tuple(self)


class Order(enum.Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"


def location_order(a: Location, b: Location) -> Order:
    """Total order: shared-prefix digit comparison, a prefix counts as smaller."""
    ta, tb = tuple(a), tuple(b)
    if ta == tb:
        return Order.EQUAL
    return Order.LESS if ta < tb else Order.GREATER


def _block_locations(block: Block, prefix: tuple) -> list[Location]:
    locs = [Location(prefix + (i,)) for i in range(len(block) + 1)]
    for i, instr in enumerate(block):
        match instr:
            case If(then=t, orelse=e):
                locs.extend(_block_locations(t, prefix + (i, 1)))
                locs.extend(_block_locations(e, prefix + (i, 2)))
            case While(body=b):
                locs.extend(_block_locations(b, prefix + (i, 1)))
    return locs


def locations(p: Program) -> list[Location]:
    """All locations of p, in increasing order."""
    return sorted(_block_locations(p.body, ()))


def _resolve(block: Block, loc: tuple) -> Instruction | None:
    """Instruction at loc within block, None at end-of-block positions.

    Raises InvalidLocationError when loc does not address this block shape.
    """
    if not loc:
        raise InvalidLocationError("empty location")
    i = loc[0]
    if len(loc) == 1:
        if i == len(block):
            return None
        if 0 <= i < len(block):
            return block[i]
        raise InvalidLocationError(f"index {i} out of range")
    if not 0 <= i < len(block):
        raise InvalidLocationError(f"index {i} out of range")
    instr = block[i]
    branch = loc[1]
    match instr:
        case While(body=b):
            if branch != 1:
                raise InvalidLocationError(f"no branch {branch} in a loop")
            return _resolve(b, loc[2:])
        case If(then=t, orelse=e):
            if branch == 1:
                return _resolve(t, loc[2:])
            if branch == 2:
                return _resolve(e, loc[2:])
            raise InvalidLocationError(f"no branch {branch} in a conditional")
    raise InvalidLocationError(f"location descends into a base instruction")


def instruction_at(p: Program, loc: Location) -> Instruction | None:
    try:
        return _resolve(p.body, tuple(loc))
    except InvalidLocationError as err:
        raise InvalidLocationError(f"{loc}: {err}") from None


def loop_locations(p: Program) -> list[Location]:
    """Locations of all while instructions, in increasing order."""
    return [l for l in locations(p) if isinstance(_safe_at(p, l), While)]


def _safe_at(p: Program, loc: Location):
    return _resolve(p.body, tuple(loc))


def enclosing_block(p: Program, loc: Location) -> Block:
    """The block a valid location points into."""
    block = p.body
    rest = tuple(loc)
    while len(rest) > 1:
        instr = block[rest[0]]
        match instr:
            case While(body=b):
                block = b
            case If(then=t, orelse=e):
                block = t if rest[1] == 1 else e
            case _:
                raise InvalidLocationError(f"{loc}: not a block location")
        rest = rest[2:]
    return block


def _with_invariant(block: Block, loc: tuple, inv: Formula) -> Block:
    i = loc[0]
    instr = block[i]
    if len(loc) == 1:
        if not isinstance(instr, While):
            raise InvalidLocationError(f"no loop at {loc}")
        new = While(instr.cond, instr.body, inv, instr.span)
    else:
        match instr:
            case While(cond=c, body=b, invariant=old, span=s):
                new = While(c, _with_invariant(b, loc[2:], inv), old, s)
            case If(cond=c, then=t, orelse=e, span=s):
                if loc[1] == 1:
                    new = If(c, _with_invariant(t, loc[2:], inv), e, s)
                else:
                    new = If(c, t, _with_invariant(e, loc[2:], inv), s)
            case _:
                raise InvalidLocationError(f"no loop at {loc}")
    return block[:i] + (new,) + block[i + 1 :]


def set_invariant(p: Program, loc: Location, inv: Formula) -> Program:
    """A copy of p with the loop at loc carrying invariant inv.

    Symbols appearing in inv but not yet declared are added to the table, so
    generated renaming variables survive a render/parse round trip.
    """
    instr = instruction_at(p, loc)
    if not isinstance(instr, While):
        raise InvalidLocationError(f"no loop at {loc}")
    symbols = p.symbols.copy()
    for name, sort in free_variables(inv).items():
        if name not in symbols.variables:
            symbols.declare_var(name, sort)
    body = _with_invariant(p.body, tuple(loc), inv)
    return Program(body, symbols, p.axioms)


def _block_equiv(a: Block, b: Block) -> bool:
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if type(x) is not type(y):
            return False
        match x:
            case While(cond=c, body=bd):
                if c != y.cond or not _block_equiv(bd, y.body):
                    return False
            case If(cond=c, then=t, orelse=e):
                if c != y.cond or not _block_equiv(t, y.then) or not _block_equiv(e, y.orelse):
                    return False
            case _:
                if x != y:
                    return False
    return True


def equiv_mod_invariants(p: Program, q: Program) -> bool:
    """True when p and q are identical up to loop invariant annotations."""
    return p.axioms == q.axioms and _block_equiv(p.body, q.body)


def prune_symbols(p: Program) -> Program:
    """Drop declarations nothing references.

    Building verification conditions mints helper variables into the shared
    table; a program rendered for output should not declare them.
    """
    used: dict[str, Sort] = {}
    funs: dict[str, tuple[tuple[Sort, ...], Sort]] = {}

    def expr(e: Expr):
        free_variables(e, used)
        functions_used(e, funs)

    def block(instrs: Block):
        for ins in instrs:
            match ins:
                case Assign(target=t, value=v):
                    used[t] = p.symbols.sort(t)
                    expr(v)
                case Havoc(target=t):
                    used[t] = p.symbols.sort(t)
                case Assume(formula=f) | Assert(formula=f):
                    expr(f)
                case If(cond=c, then=th, orelse=el):
                    expr(c)
                    block(th)
                    block(el)
                case While(cond=c, invariant=inv, body=b):
                    expr(c)
                    expr(inv)
                    block(b)

    block(p.body)
    for ax in p.axioms:
        expr(ax)
    table = SymbolTable()
    for name, sort in p.symbols.variables.items():
        if name in used:
            table.declare_var(name, sort)
    for name, (arg_sorts, ret) in p.symbols.functions.items():
        if name in funs:
            table.declare_fun(name, arg_sorts, ret)
    return Program(p.body, table, p.axioms)


def assigned_variables(block: Block, acc: set[str] | None = None) -> set[str]:
    """Names assigned or havoc'ed anywhere in block, nested bodies included."""
    if acc is None:
        acc = set()
    for instr in block:
        match instr:
            case Assign(target=t) | Havoc(target=t):
                acc.add(t)
            case If(then=t, orelse=e):
                assigned_variables(t, acc)
                assigned_variables(e, acc)
            case While(body=b):
                assigned_variables(b, acc)
    return acc


def program_int_literals(p: Program) -> set[int]:
    """Integer constants in instructions, conditions and axioms.

    Invariant annotations are deliberately excluded so the constant pool stays
    stable while invariants are being strengthened.
    """
    acc: set[int] = set()

    def walk(block: Block):
        for instr in block:
            match instr:
                case Assign(value=v):
                    int_literals(v, acc)
                case Assume(formula=f) | Assert(formula=f):
                    int_literals(f, acc)
                case If(cond=c, then=t, orelse=e):
                    int_literals(c, acc)
                    walk(t)
                    walk(e)
                case While(cond=c, body=b):
                    int_literals(c, acc)
                    walk(b)

    walk(p.body)
    for ax in p.axioms:
        int_literals(ax, acc)
    return acc
