"""Reader for the supported Prolog subset.

The subset covers facts, rules built from ``,`` ``;`` ``=``, predicate
calls, the five arithmetic built-ins (``=<`` ``<`` ``>=`` ``>`` ``is``),
integers, floats, double-quoted strings, atoms, variables and lists.
``:- type`` directives declare algebraic data types and may appear
anywhere in a file; they are collected in a first pass by the driver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

ARITH_OPS = ("=<", "<", ">=", ">", "is")


class ParseError(Exception):
    """Syntax error with source position."""

    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


# ---------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class AtomC(Term):
    name: str


@dataclass(frozen=True)
class IntC(Term):
    value: int


@dataclass(frozen=True)
class FloatC(Term):
    value: float


@dataclass(frozen=True)
class StrC(Term):
    value: str


@dataclass(frozen=True)
class NilT(Term):
    pass


NIL = NilT()


@dataclass(frozen=True)
class Cons(Term):
    head: Term
    tail: Term


@dataclass(frozen=True)
class Compound(Term):
    functor: str
    args: tuple[Term, ...]

    def __post_init__(self):
        assert len(self.args) >= 1, "arity 0 is AtomC"


def is_constant(t: Term) -> bool:
    return isinstance(t, (AtomC, IntC, FloatC, StrC, NilT))


def term_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Cons):
        return term_vars(t.head) | term_vars(t.tail)
    if isinstance(t, Compound):
        out: set[str] = set()
        for a in t.args:
            out |= term_vars(a)
        return out
    return set()


# ---------------------------------------------------------------------------
# Goals


class Goal:
    __slots__ = ()


@dataclass(frozen=True)
class Unif(Goal):
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Call(Goal):
    pred: str
    arity: int
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Arith(Goal):
    op: str
    lhs: Term
    rhs: Term

    def __post_init__(self):
        assert self.op in ARITH_OPS


@dataclass(frozen=True)
class Conj(Goal):
    items: tuple[Goal, ...]


@dataclass(frozen=True)
class Disj(Goal):
    items: tuple[Goal, ...]


def goal_vars(g: Goal) -> set[str]:
    if isinstance(g, Unif):
        return term_vars(g.lhs) | term_vars(g.rhs)
    if isinstance(g, Call):
        out: set[str] = set()
        for a in g.args:
            out |= term_vars(a)
        return out
    if isinstance(g, Arith):
        return term_vars(g.lhs) | term_vars(g.rhs)
    out = set()
    for item in g.items:
        out |= goal_vars(item)
    return out


# ---------------------------------------------------------------------------
# Declarations and programs


@dataclass(frozen=True)
class Declaration:
    """A ``:- type sym(Params) = s1 + ... + sn`` directive.

    Summands are kept as raw terms here; resolution into the type
    language happens in :mod:`plinfer.types` once all declarations are
    known.
    """

    symbol: str
    params: tuple[str, ...]
    summands: tuple[Term, ...]
    line: int = 0


@dataclass(frozen=True)
class Clause:
    head: Term
    body: Goal | None
    line: int = 0


@dataclass(frozen=True)
class SourceProgram:
    clauses: tuple[Clause, ...]
    declarations: tuple[Declaration, ...]


def summand_head(t: Term) -> tuple[str, int] | None:
    """Constant or functor heading a declaration summand, with arity.

    Variables head nothing (they are type parameters, not constructors).
    """
    if isinstance(t, AtomC):
        return (t.name, 0)
    if isinstance(t, IntC):
        return (f"int:{t.value}", 0)
    if isinstance(t, FloatC):
        return (f"float:{t.value}", 0)
    if isinstance(t, StrC):
        return (f"str:{t.value}", 0)
    if isinstance(t, NilT):
        return ("[]", 0)
    if isinstance(t, Cons):
        return (".", 2)
    if isinstance(t, Compound):
        return (t.functor, len(t.args))
    return None


# ---------------------------------------------------------------------------
# Tokenizer


@dataclass(frozen=True)
class Token:
    kind: str  # atom var int float string punct eof
    text: str
    value: object
    line: int
    col: int


_PUNCT = (":-", "=<", ">=", "(", ")", "[", "]", ",", "|", ";", "+", "=", "<", ">", ".")


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def err(msg: str):
        raise ParseError(line, col, msg)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                err("unterminated comment")
            skipped = text[i : end + 2]
            line += skipped.count("\n")
            col = len(skipped) - skipped.rfind("\n") if "\n" in skipped else col + len(skipped)
            i = end + 2
            continue
        start_line, start_col = line, col
        if c.isdigit() or (c == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            is_float = False
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                is_float = True
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            lit = text[i:j]
            if is_float:
                toks.append(Token("float", lit, float(lit), start_line, start_col))
            else:
                toks.append(Token("int", lit, int(lit), start_line, start_col))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] != '"':
                err("unterminated string")
            toks.append(Token("string", text[i : j + 1], text[i + 1 : j], start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if c == "'":
            j = i + 1
            while j < n and text[j] not in "'\n":
                j += 1
            if j >= n or text[j] != "'":
                err("unterminated quoted atom")
            toks.append(Token("atom", text[i : j + 1], text[i + 1 : j], start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if c.isalpha() or c == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            name = text[i:j]
            kind = "var" if (c == "_" or c.isupper()) else "atom"
            toks.append(Token(kind, name, name, start_line, start_col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                # A clause-ending dot must not swallow "." inside floats;
                # floats were consumed above, so any "." here is a terminator.
                toks.append(Token("punct", p, p, start_line, start_col))
                i += len(p)
                col += len(p)
                break
        else:
            err(f"unexpected character {c!r}")
    toks.append(Token("eof", "", None, line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def err(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(tok.line, tok.col, msg)

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.kind == "punct" and t.text == text:
            return self.next()
        self.err(f"expected {text!r}, found {t.text!r}")

    def at_punct(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.text == text

    # -- terms

    def parse_term(self) -> Term:
        t = self.peek()
        if t.kind == "var":
            self.next()
            return Var(t.text)
        if t.kind == "int":
            self.next()
            return IntC(t.value)  # type: ignore[arg-type]
        if t.kind == "float":
            self.next()
            return FloatC(t.value)  # type: ignore[arg-type]
        if t.kind == "string":
            self.next()
            return StrC(t.value)  # type: ignore[arg-type]
        if self.at_punct("["):
            return self.parse_list()
        if t.kind == "atom":
            self.next()
            if self.at_punct("("):
                self.next()
                args = [self.parse_term()]
                while self.at_punct(","):
                    self.next()
                    args.append(self.parse_term())
                self.expect(")")
                return Compound(t.value, tuple(args))  # type: ignore[arg-type]
            return AtomC(t.value)  # type: ignore[arg-type]
        self.err(f"expected a term, found {t.text!r}")

    def parse_list(self) -> Term:
        self.expect("[")
        if self.at_punct("]"):
            self.next()
            return NIL
        items = [self.parse_term()]
        while self.at_punct(","):
            self.next()
            items.append(self.parse_term())
        tail: Term = NIL
        if self.at_punct("|"):
            self.next()
            tail = self.parse_term()
        self.expect("]")
        for item in reversed(items):
            tail = Cons(item, tail)
        return tail

    # -- goals

    def parse_body(self) -> Goal:
        items = [self.parse_conj()]
        while self.at_punct(";"):
            self.next()
            items.append(self.parse_conj())
        if len(items) == 1:
            return items[0]
        flat: list[Goal] = []
        for g in items:
            flat.extend(g.items if isinstance(g, Disj) else [g])
        return Disj(tuple(flat))

    def parse_conj(self) -> Goal:
        items = [self.parse_goal()]
        while self.at_punct(","):
            self.next()
            items.append(self.parse_goal())
        if len(items) == 1:
            return items[0]
        flat: list[Goal] = []
        for g in items:
            flat.extend(g.items if isinstance(g, Conj) else [g])
        return Conj(tuple(flat))

    def parse_goal(self) -> Goal:
        if self.at_punct("("):
            self.next()
            inner = self.parse_body()
            self.expect(")")
            return inner
        tok = self.peek()
        lhs = self.parse_term()
        nxt = self.peek()
        if nxt.kind == "punct" and nxt.text == "=":
            self.next()
            return Unif(lhs, self.parse_term())
        if nxt.kind == "punct" and nxt.text in ("=<", "<", ">=", ">"):
            self.next()
            return Arith(nxt.text, lhs, self.parse_term())
        if nxt.kind == "atom" and nxt.text == "is":
            self.next()
            return Arith("is", lhs, self.parse_term())
        if isinstance(lhs, AtomC):
            return Call(lhs.name, 0, ())
        if isinstance(lhs, Compound):
            return Call(lhs.functor, len(lhs.args), lhs.args)
        self.err("expected a goal", tok)

    # -- clauses and directives

    def parse_declaration(self, line: int) -> Declaration:
        head = self.parse_term()
        if isinstance(head, AtomC):
            symbol, raw_params = head.name, ()
        elif isinstance(head, Compound):
            symbol, raw_params = head.functor, head.args
        else:
            self.err("type declaration head must be an atom or compound")
        params = []
        for p in raw_params:
            if not isinstance(p, Var):
                self.err(f"type parameters must be variables in {symbol!r}")
            if p.name in params:
                self.err(f"duplicate type parameter {p.name!r} in {symbol!r}")
            params.append(p.name)
        self.expect("=")
        summands = [self.parse_term()]
        while self.at_punct("+"):
            self.next()
            summands.append(self.parse_term())
        self.expect(".")
        for s in summands:
            extra = term_vars(s) - set(params)
            if extra:
                self.err(f"type variable {sorted(extra)[0]!r} not a parameter of {symbol!r}")
        return Declaration(symbol, tuple(params), tuple(summands), line)

    def parse_program(self) -> SourceProgram:
        clauses: list[Clause] = []
        decls: list[Declaration] = []
        while self.peek().kind != "eof":
            tok = self.peek()
            if self.at_punct(":-"):
                self.next()
                kw = self.peek()
                if kw.kind == "atom" and kw.text == "type":
                    self.next()
                    decls.append(self.parse_declaration(tok.line))
                    continue
                self.err("only ':- type' directives are supported")
            head = self.parse_term()
            if not isinstance(head, (AtomC, Compound)):
                self.err("clause head must be an atom or compound term", tok)
            body: Goal | None = None
            if self.at_punct(":-"):
                self.next()
                body = self.parse_body()
            self.expect(".")
            clauses.append(Clause(head, body, tok.line))
        self._check_overloading(decls)
        return SourceProgram(tuple(clauses), tuple(decls))

    def _check_overloading(self, decls: list[Declaration]):
        seen: dict[str, str] = {}
        for d in decls:
            for s in d.summands:
                head = summand_head(s)
                if head is None:
                    continue
                owner = seen.get(head[0])
                if owner is not None and owner != d.symbol:
                    raise ParseError(
                        d.line, 1,
                        f"constructor {head[0]!r} overloaded across types {owner!r} and {d.symbol!r}",
                    )
                seen[head[0]] = d.symbol


def parse_program(text: str) -> SourceProgram:
    return _Parser(tokenize(text)).parse_program()


def parse_term_text(text: str) -> Term:
    """Parse a single term, for tests and expected-value notation."""
    p = _Parser(tokenize(text))
    t = p.parse_term()
    if p.peek().kind != "eof":
        p.err("trailing input after term")
    return t


# ---------------------------------------------------------------------------
# Rendering (round-trip support and diagnostics)


def render_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, AtomC):
        if t.name and t.name[0].islower() and all(ch.isalnum() or ch == "_" for ch in t.name):
            return t.name
        return f"'{t.name}'"
    if isinstance(t, IntC):
        return str(t.value)
    if isinstance(t, FloatC):
        return repr(t.value)
    if isinstance(t, StrC):
        return f'"{t.value}"'
    if isinstance(t, NilT):
        return "[]"
    if isinstance(t, Cons):
        items = [t.head]
        tail = t.tail
        while isinstance(tail, Cons):
            items.append(tail.head)
            tail = tail.tail
        inner = ",".join(render_term(x) for x in items)
        if isinstance(tail, NilT):
            return f"[{inner}]"
        return f"[{inner}|{render_term(tail)}]"
    assert isinstance(t, Compound)
    return f"{t.functor}({','.join(render_term(a) for a in t.args)})"


def render_goal(g: Goal) -> str:
    if isinstance(g, Unif):
        return f"{render_term(g.lhs)} = {render_term(g.rhs)}"
    if isinstance(g, Arith):
        return f"{render_term(g.lhs)} {g.op} {render_term(g.rhs)}"
    if isinstance(g, Call):
        if g.arity == 0:
            return g.pred
        return f"{g.pred}({','.join(render_term(a) for a in g.args)})"
    if isinstance(g, Conj):
        return ", ".join(
            f"({render_goal(x)})" if isinstance(x, Disj) else render_goal(x) for x in g.items
        )
    assert isinstance(g, Disj)
    return " ; ".join(render_goal(x) for x in g.items)


def render_program(p: SourceProgram) -> str:
    lines = []
    for d in p.declarations:
        head = d.symbol if not d.params else f"{d.symbol}({','.join(d.params)})"
        rhs = " + ".join(render_term(s) for s in d.summands)
        lines.append(f":- type {head} = {rhs}.")
    for c in p.clauses:
        if c.body is None:
            lines.append(f"{render_term(c.head)}.")
        else:
            lines.append(f"{render_term(c.head)} :- {render_goal(c.body)}.")
    return "\n".join(lines) + "\n"
