"""Parser for the guarded-command modeling language and for queries.

The accepted language is a small PRISM-like subset: an ``ipta`` model kind,
integer/rational constants, modules with bounded integer variables and
clocks, an invariant block, interval-weighted guarded commands (``L~U``
wherever a scalar probability is accepted), and global label definitions.
Scalar weights are point intervals, so any plain probabilistic-timed model
is accepted unchanged.

Queries are reachability or until formulas wrapped in a probability
quantifier: ``Pmin=? [ F pred ]``, ``Pmax=? [ ... ]`` or a threshold form
``P>=0.95 [ left U right ]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

from .errors import DuplicateDeclaration, ParseError, QueryError, UnknownIdentifier

KEYWORDS = {
    "ipta", "const", "int", "double", "module", "endmodule",
    "invariant", "endinvariant", "clock", "init", "label", "true", "false",
}

_SYMBOLS = [
    "..", "->", "<=", ">=", "!=", "=>",
    "[", "]", "(", ")", ";", ":", ",", "+", "-", "*", "/",
    "=", "<", ">", "&", "|", "!", "~", "'", ".", "?",
]


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'int', 'rational', 'string', 'sym', 'eof'
    text: str
    value: object
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(Token("ident", word, word, line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            # a '..' after digits is the range operator, not a decimal point
            if j < n and text[j] == "." and not text.startswith("..", j):
                j += 1
                if j >= n or not text[j].isdigit():
                    raise ParseError("malformed number", line, start_col)
                while j < n and text[j].isdigit():
                    j += 1
                value = Fraction(text[i:j])
                tokens.append(Token("rational", text[i:j], value, line, start_col))
            else:
                tokens.append(Token("int", text[i:j], int(text[i:j]), line, start_col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                if text[j] == "\n":
                    raise ParseError("unterminated string", line, start_col)
                j += 1
            if j >= n:
                raise ParseError("unterminated string", line, start_col)
            tokens.append(Token("string", text[i : j + 1], text[i + 1 : j], line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("sym", sym, sym, line, start_col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, start_col)
    tokens.append(Token("eof", "", None, line, col))
    return tokens


# ---------------------------------------------------------------------------
# Expression AST


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class LabelRef:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


def expr_str(e) -> str:
    if isinstance(e, Num):
        return format_number(e.value)
    if isinstance(e, Name):
        return e.name
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, LabelRef):
        return f'"{e.name}"'
    if isinstance(e, Unary):
        return f"{e.op}{_paren(e.operand)}"
    if isinstance(e, Binary):
        return f"{_paren(e.left)}{e.op}{_paren(e.right)}"
    raise TypeError(f"not an expression: {e!r}")


def _paren(e) -> str:
    if isinstance(e, (Num, Name, BoolLit, LabelRef)):
        return expr_str(e)
    return f"({expr_str(e)})"


def format_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    # prefer the familiar decimal form when it is exact
    den = value.denominator
    while den % 2 == 0:
        den //= 2
    while den % 5 == 0:
        den //= 5
    if den == 1:
        text = f"{float(value):.12f}".rstrip("0")
        if Fraction(text) == value:
            return text
    return f"{value.numerator}/{value.denominator}"


def walk(e):
    yield e
    if isinstance(e, Unary):
        yield from walk(e.operand)
    elif isinstance(e, Binary):
        yield from walk(e.left)
        yield from walk(e.right)


# ---------------------------------------------------------------------------
# Model AST


@dataclass(frozen=True)
class ConstDecl:
    name: str
    type: str  # 'int' or 'double'
    value: Optional[object]  # expression or None when left open


@dataclass(frozen=True)
class VarDecl:
    name: str
    low: object
    high: object
    init: object


@dataclass(frozen=True)
class WeightedUpdate:
    low: object  # weight expression (lower bound)
    high: Optional[object]  # upper bound expression, None for scalar weights
    assignments: Tuple[Tuple[str, object], ...]  # (target name, expression)


@dataclass(frozen=True)
class Command:
    action: Optional[str]
    guard: object
    updates: Tuple[WeightedUpdate, ...]


@dataclass(frozen=True)
class ModuleDecl:
    name: str
    variables: Tuple[VarDecl, ...]
    clocks: Tuple[str, ...]
    invariant: Optional[object]
    commands: Tuple[Command, ...]


@dataclass(frozen=True)
class LabelDef:
    name: str
    predicate: object


@dataclass(frozen=True)
class ModelSource:
    constants: Tuple[ConstDecl, ...]
    modules: Tuple[ModuleDecl, ...]
    labels: Tuple[LabelDef, ...]


# ---------------------------------------------------------------------------
# Query AST


@dataclass(frozen=True)
class Query:
    mode: str  # 'min', 'max' or 'threshold'
    comparison: Optional[str] = None  # for thresholds: one of <=, <, >, >=
    threshold: Optional[Fraction] = None
    left: Optional[object] = None  # until left predicate, None for plain reachability
    target: object = None

    def __str__(self):
        if self.mode == "min":
            head = "Pmin=?"
        elif self.mode == "max":
            head = "Pmax=?"
        else:
            head = f"P{self.comparison}{format_number(self.threshold)}"
        if self.left is None:
            body = f"F {_paren(self.target)}"
        else:
            body = f"{_paren(self.left)} U {_paren(self.target)}"
        return f"{head} [ {body} ]"


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead=0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.column)

    def accept_sym(self, sym) -> bool:
        if self.peek().kind == "sym" and self.peek().text == sym:
            self.next()
            return True
        return False

    def expect_sym(self, sym) -> Token:
        tok = self.peek()
        if tok.kind == "sym" and tok.text == sym:
            return self.next()
        self.error(f"expected {sym!r} but found {tok.text!r}")

    def accept_word(self, word) -> bool:
        if self.peek().kind == "ident" and self.peek().text == word:
            self.next()
            return True
        return False

    def expect_word(self, word) -> Token:
        tok = self.peek()
        if tok.kind == "ident" and tok.text == word:
            return self.next()
        self.error(f"expected {word!r} but found {tok.text!r}")

    def expect_name(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            self.error(f"expected an identifier but found {tok.text!r}")
        return self.next()

    # -- expressions --------------------------------------------------

    def parse_expr(self):
        return self._implication()

    def _implication(self):
        left = self._disjunction()
        if self.accept_sym("=>"):
            return Binary("=>", left, self._implication())
        return left

    def _disjunction(self):
        left = self._conjunction()
        while self.accept_sym("|"):
            left = Binary("|", left, self._conjunction())
        return left

    def _conjunction(self):
        left = self._negation()
        while self.accept_sym("&"):
            left = Binary("&", left, self._negation())
        return left

    def _negation(self):
        if self.accept_sym("!"):
            return Unary("!", self._negation())
        return self._comparison()

    def _comparison(self):
        left = self._additive()
        tok = self.peek()
        if tok.kind == "sym" and tok.text in ("=", "!=", "<", "<=", ">", ">="):
            op = self.next().text
            return Binary(op, left, self._additive())
        return left

    def _additive(self):
        left = self._multiplicative()
        while True:
            tok = self.peek()
            if tok.kind == "sym" and tok.text in ("+", "-"):
                op = self.next().text
                left = Binary(op, left, self._multiplicative())
            else:
                return left

    def _multiplicative(self):
        left = self._unary()
        while True:
            tok = self.peek()
            if tok.kind == "sym" and tok.text in ("*", "/"):
                op = self.next().text
                left = Binary(op, left, self._unary())
            else:
                return left

    def _unary(self):
        if self.accept_sym("-"):
            return Unary("-", self._unary())
        return self._primary()

    def _primary(self):
        tok = self.peek()
        if tok.kind in ("int", "rational"):
            self.next()
            return Num(Fraction(tok.value))
        if tok.kind == "string":
            self.next()
            return LabelRef(tok.value)
        if tok.kind == "ident":
            if tok.text == "true":
                self.next()
                return BoolLit(True)
            if tok.text == "false":
                self.next()
                return BoolLit(False)
            if tok.text in KEYWORDS:
                self.error(f"keyword {tok.text!r} is not a value")
            self.next()
            return Name(tok.text)
        if self.accept_sym("("):
            inner = self.parse_expr()
            self.expect_sym(")")
            return inner
        self.error(f"expected an expression but found {tok.text!r}")

    # -- model ---------------------------------------------------------

    def parse_model(self) -> ModelSource:
        self.expect_word("ipta")
        constants: List[ConstDecl] = []
        modules: List[ModuleDecl] = []
        labels: List[LabelDef] = []
        const_names = set()
        module_names = set()
        label_names = set()
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                break
            if self.accept_word("const"):
                decl = self._const_decl()
                if decl.name in const_names:
                    raise DuplicateDeclaration(
                        f"constant {decl.name!r} declared twice", tok.line, tok.column
                    )
                const_names.add(decl.name)
                constants.append(decl)
            elif self.accept_word("module"):
                mod = self._module_decl()
                if mod.name in module_names:
                    raise DuplicateDeclaration(
                        f"module {mod.name!r} declared twice", tok.line, tok.column
                    )
                module_names.add(mod.name)
                modules.append(mod)
            elif self.accept_word("label"):
                lab = self._label_def()
                if lab.name in label_names:
                    raise DuplicateDeclaration(
                        f"label {lab.name!r} declared twice", tok.line, tok.column
                    )
                label_names.add(lab.name)
                labels.append(lab)
            else:
                self.error(f"expected const, module or label but found {tok.text!r}")
        src = ModelSource(tuple(constants), tuple(modules), tuple(labels))
        _check_scopes(src)
        return src

    def _const_decl(self) -> ConstDecl:
        if self.accept_word("int"):
            ctype = "int"
        elif self.accept_word("double"):
            ctype = "double"
        else:
            self.error("expected 'int' or 'double' after 'const'")
        name = self.expect_name().text
        value = None
        if self.accept_sym("="):
            value = self.parse_expr()
        self.expect_sym(";")
        return ConstDecl(name, ctype, value)

    def _module_decl(self) -> ModuleDecl:
        name = self.expect_name().text
        variables: List[VarDecl] = []
        clocks: List[str] = []
        invariant = None
        commands: List[Command] = []
        declared = set()
        while True:
            tok = self.peek()
            if self.accept_word("endmodule"):
                break
            if tok.kind == "eof":
                self.error("unterminated module (missing 'endmodule')")
            if self.accept_word("invariant"):
                invariant = self.parse_expr()
                self.expect_word("endinvariant")
                continue
            if tok.kind == "sym" and tok.text == "[":
                commands.append(self._command())
                continue
            # variable or clock declaration
            vname = self.expect_name().text
            if vname in declared:
                raise DuplicateDeclaration(
                    f"{vname!r} declared twice in module {name}", tok.line, tok.column
                )
            declared.add(vname)
            self.expect_sym(":")
            if self.accept_word("clock"):
                clocks.append(vname)
                self.expect_sym(";")
                continue
            self.expect_sym("[")
            low = self.parse_expr()
            self.expect_sym("..")
            high = self.parse_expr()
            self.expect_sym("]")
            self.expect_word("init")
            init = self.parse_expr()
            self.expect_sym(";")
            variables.append(VarDecl(vname, low, high, init))
        return ModuleDecl(name, tuple(variables), tuple(clocks), invariant, tuple(commands))

    def _command(self) -> Command:
        self.expect_sym("[")
        action = None
        if self.peek().kind == "ident":
            action = self.expect_name().text
        self.expect_sym("]")
        guard = self.parse_expr()
        self.expect_sym("->")
        updates = [self._weighted_update()]
        while self.accept_sym("+"):
            updates.append(self._weighted_update())
        self.expect_sym(";")
        return Command(action, guard, tuple(updates))

    def _starts_update(self) -> bool:
        # an update alternative begins with '(' NAME '\'' or the word 'true'
        tok = self.peek()
        if tok.kind == "ident" and tok.text == "true":
            return True
        return (
            tok.kind == "sym"
            and tok.text == "("
            and self.peek(1).kind == "ident"
            and self.peek(2).kind == "sym"
            and self.peek(2).text == "'"
        )

    def _weighted_update(self) -> WeightedUpdate:
        low = high = None
        if not self._starts_update():
            tok = self.peek()
            low = self.parse_expr()
            if self.accept_sym("~"):
                high = self.parse_expr()
                if isinstance(low, Num) and isinstance(high, Num) and low.value > high.value:
                    self.error(
                        f"interval lower bound {format_number(low.value)} exceeds "
                        f"upper bound {format_number(high.value)}",
                        tok,
                    )
            self.expect_sym(":")
        assignments = self._update()
        return WeightedUpdate(low, high, assignments)

    def _update(self) -> Tuple[Tuple[str, object], ...]:
        if self.accept_word("true"):
            return ()
        assignments = []
        while True:
            self.expect_sym("(")
            target = self.expect_name().text
            self.expect_sym("'")
            self.expect_sym("=")
            value = self.parse_expr()
            self.expect_sym(")")
            assignments.append((target, value))
            if not self.accept_sym("&"):
                break
        return tuple(assignments)

    def _label_def(self) -> LabelDef:
        tok = self.peek()
        if tok.kind != "string":
            self.error("expected a quoted label name")
        name = self.next().value
        self.expect_sym("=")
        predicate = self.parse_expr()
        self.expect_sym(";")
        return LabelDef(name, predicate)

    # -- queries ---------------------------------------------------------

    def parse_query(self) -> Query:
        # optional formula-clock reset prefix "z."
        if (
            self.peek().kind == "ident"
            and self.peek(1).kind == "sym"
            and self.peek(1).text == "."
        ):
            self.next()
            self.next()
        head = self.peek()
        if head.kind != "ident":
            self.error("expected a probability quantifier (Pmin, Pmax or P)")
        if self.accept_word("Pmin") or self.accept_word("Pmax"):
            mode = "min" if head.text == "Pmin" else "max"
            self.expect_sym("=")
            self.expect_sym("?")
            comparison = threshold = None
        elif self.accept_word("P"):
            mode = "threshold"
            tok = self.peek()
            if tok.kind != "sym" or tok.text not in ("<=", "<", ">", ">="):
                self.error("expected a comparison after 'P'")
            comparison = self.next().text
            num = self.peek()
            if num.kind not in ("int", "rational"):
                self.error("expected a probability threshold")
            threshold = Fraction(self.next().value)
            if not (0 <= threshold <= 1):
                self.error(f"threshold {threshold} outside [0,1]", num)
        else:
            self.error(f"unknown quantifier {head.text!r}")
        self.expect_sym("[")
        if self.accept_word("F"):
            left = None
            target = self.parse_expr()
        else:
            left = self.parse_expr()
            self.expect_word("U")
            target = self.parse_expr()
        self.expect_sym("]")
        if self.peek().kind != "eof":
            self.error(f"trailing input after query: {self.peek().text!r}")
        return Query(mode, comparison, threshold, left, target)


def _check_scopes(src: ModelSource):
    """Reject references to undeclared identifiers."""
    consts = {c.name for c in src.constants}
    all_vars = set()
    for mod in src.modules:
        all_vars.update(v.name for v in mod.variables)
    for c in src.constants:
        if c.value is not None:
            _check_names(c.value, consts, f"constant {c.name}")
    for mod in src.modules:
        local = consts | {v.name for v in mod.variables} | set(mod.clocks)
        for v in mod.variables:
            for part in (v.low, v.high, v.init):
                _check_names(part, consts, f"variable {v.name} of module {mod.name}")
        if mod.invariant is not None:
            _check_names(mod.invariant, local, f"invariant of module {mod.name}")
        for i, cmd in enumerate(mod.commands):
            where = f"command {i + 1} of module {mod.name}"
            _check_names(cmd.guard, local, where)
            for upd in cmd.updates:
                if upd.low is not None:
                    _check_names(upd.low, consts, f"weight in {where}")
                if upd.high is not None:
                    _check_names(upd.high, consts, f"weight in {where}")
                for tgt, value in upd.assignments:
                    if tgt not in local - consts:
                        raise UnknownIdentifier(f"assignment to undeclared {tgt!r} in {where}")
                    _check_names(value, local, where)
    for lab in src.labels:
        _check_names(lab.predicate, consts | all_vars, f'label "{lab.name}"')


def _check_names(expr, allowed, where):
    for node in walk(expr):
        if isinstance(node, Name) and node.name not in allowed:
            raise UnknownIdentifier(f"unknown identifier {node.name!r} in {where}")
        if isinstance(node, LabelRef):
            raise UnknownIdentifier(f"label reference not allowed in {where}")


def parse_model(text: str) -> ModelSource:
    return _Parser(tokenize(text)).parse_model()


def parse_query(text: str) -> Query:
    try:
        return _Parser(tokenize(text)).parse_query()
    except ParseError as exc:
        raise QueryError(str(exc)) from exc


def parse_queries_file(text: str) -> List[Query]:
    queries = []
    for line in text.splitlines():
        stripped = line.split("//", 1)[0].strip()
        if stripped:
            queries.append(parse_query(stripped))
    return queries


# ---------------------------------------------------------------------------
# Pretty printer


def pretty(src: ModelSource) -> str:
    out = ["ipta", ""]
    for c in src.constants:
        if c.value is None:
            out.append(f"const {c.type} {c.name};")
        else:
            out.append(f"const {c.type} {c.name} = {expr_str(c.value)};")
    if src.constants:
        out.append("")
    for mod in src.modules:
        out.append(f"module {mod.name}")
        for v in mod.variables:
            out.append(
                f"  {v.name} : [{expr_str(v.low)}..{expr_str(v.high)}]"
                f" init {expr_str(v.init)};"
            )
        for clk in mod.clocks:
            out.append(f"  {clk} : clock;")
        if mod.invariant is not None:
            out.append("  invariant")
            out.append(f"    {expr_str(mod.invariant)}")
            out.append("  endinvariant")
        for cmd in mod.commands:
            action = cmd.action or ""
            alts = []
            for upd in cmd.updates:
                if upd.assignments:
                    body = "&".join(f"({t}'={expr_str(e)})" for t, e in upd.assignments)
                else:
                    body = "true"
                if upd.low is None:
                    alts.append(body)
                elif upd.high is None:
                    alts.append(f"{expr_str(upd.low)}:{body}")
                else:
                    alts.append(f"{expr_str(upd.low)}~{expr_str(upd.high)}:{body}")
            out.append(f"  [{action}] {expr_str(cmd.guard)} -> {' + '.join(alts)};")
        out.append("endmodule")
        out.append("")
    for lab in src.labels:
        out.append(f'label "{lab.name}" = {expr_str(lab.predicate)};')
    return "\n".join(out).rstrip() + "\n"
