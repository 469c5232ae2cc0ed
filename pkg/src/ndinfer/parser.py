"""Lexer and recursive-descent parser for .nd source files.

Keywords: fun let in if then else observe flip nflip uniform choose
true false fst snd.  Comments are C-style ``//`` to end of line.
Operator precedence, loosest first:

    let/if  <  <-> ^  <  ||  <  &&  <  == != < <=  <  + -  <  prefix

Prefix forms (``!``, ``fst``, ``snd``, ``observe``) bind their argument
tightly, so ``observe a || b`` is ``(observe a) || b``.
"""

from fractions import Fraction

from .errors import NdSyntaxError
from .syntax import (
    EBinary, EBool, ECall, EChoose, EFlip, EFst, EIf, EInt, ELet, ENFlip,
    EObserve, ESnd, ETuple, EUnary, EUniform, EVar, Expr, FunDef, SBool,
    SInt, SProd, SurfaceProgram,
)

KEYWORDS = {
    "fun", "let", "in", "if", "then", "else", "observe", "flip", "nflip",
    "uniform", "choose", "true", "false", "fst", "snd", "Bool", "int",
}

_SYMBOLS = [
    "<->", "&&", "||", "==", "!=", "<=", "(", ")", "{", "}", ",", ":",
    "<", ">", "+", "-", "!", "^", "=",
]


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind  # 'ident' | 'kw' | 'num' | 'sym' | 'eof'
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return "Token(%s, %r)" % (self.kind, self.text)


def tokenize(source: str):
    tokens = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            tokens.append(Token("num", source[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            tokens.append(Token("kw" if text in KEYWORDS else "ident", text, line, col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            if c == "/":
                tokens.append(Token("sym", "/", line, col))
                i += 1
                col += 1
            else:
                raise NdSyntaxError("unexpected character %r" % c, line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0

    # -- token plumbing ---------------------------------------------------- #

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message):
        raise NdSyntaxError(message, self.cur.line, self.cur.col)

    def advance(self) -> Token:
        tok = self.cur
        self.pos += 1
        return tok

    def at(self, text) -> bool:
        return self.cur.text == text and self.cur.kind in ("sym", "kw")

    def eat(self, text) -> Token:
        if not self.at(text):
            self.error("expected %r, found %r" % (text, self.cur.text or "<eof>"))
        return self.advance()

    def eat_ident(self) -> Token:
        if self.cur.kind != "ident":
            self.error("expected identifier, found %r" % (self.cur.text or "<eof>"))
        return self.advance()

    def eat_int(self) -> int:
        if self.cur.kind != "num" or "." in self.cur.text:
            self.error("expected integer literal")
        return int(self.advance().text)

    # -- grammar ----------------------------------------------------------- #

    def parse_program(self) -> SurfaceProgram:
        functions = []
        while self.at("fun"):
            functions.append(self.parse_fundef())
        main = self.parse_expr()
        if self.cur.kind != "eof":
            self.error("trailing input after main expression")
        return SurfaceProgram(functions, main)

    def parse_fundef(self) -> FunDef:
        pos = (self.cur.line, self.cur.col)
        self.eat("fun")
        name = self.eat_ident().text
        self.eat("(")
        params = [self.parse_param()]
        while self.at(","):
            self.advance()
            params.append(self.parse_param())
        self.eat(")")
        self.eat(":")
        ret_ty = self.parse_type()
        self.eat("{")
        body = self.parse_expr()
        self.eat("}")
        return FunDef(name, params, ret_ty, body, pos)

    def parse_param(self):
        name = self.eat_ident().text
        self.eat(":")
        return (name, self.parse_type())

    def parse_type(self):
        if self.at("Bool"):
            self.advance()
            return SBool()
        if self.at("int"):
            self.advance()
            width = None
            if self.at("<"):
                self.advance()
                width = self.eat_int()
                if width < 1:
                    self.error("int width must be positive")
                self.eat(">")
            return SInt(width)
        if self.at("("):
            self.advance()
            parts = [self.parse_type()]
            while self.at(","):
                self.advance()
                parts.append(self.parse_type())
            self.eat(")")
            ty = parts[-1]
            for p in reversed(parts[:-1]):
                ty = SProd(p, ty)
            return ty
        self.error("expected a type")

    def parse_expr(self) -> Expr:
        if self.at("let"):
            pos = (self.cur.line, self.cur.col)
            self.advance()
            name = self.eat_ident().text
            self.eat("=")
            rhs = self.parse_expr()
            self.eat("in")
            body = self.parse_expr()
            return ELet(pos=pos, name=name, rhs=rhs, body=body)
        if self.at("if"):
            pos = (self.cur.line, self.cur.col)
            self.advance()
            guard = self.parse_expr()
            self.eat("then")
            then = self.parse_expr()
            self.eat("else")
            orelse = self.parse_expr()
            return EIf(pos=pos, guard=guard, then=then, orelse=orelse)
        return self.parse_binary(1)

    _LEVELS = [
        ("<->", "^"),
        ("||",),
        ("&&",),
        ("==", "!=", "<", "<="),
        ("+", "-"),
    ]

    def parse_binary(self, level: int) -> Expr:
        if level > len(self._LEVELS):
            return self.parse_prefix()
        ops = self._LEVELS[level - 1]
        left = self.parse_binary(level + 1)
        while self.cur.kind == "sym" and self.cur.text in ops:
            pos = (self.cur.line, self.cur.col)
            op = self.advance().text
            right = self.parse_binary(level + 1)
            left = EBinary(pos=pos, op=op, left=left, right=right)
        return left

    def parse_prefix(self) -> Expr:
        pos = (self.cur.line, self.cur.col)
        if self.at("!"):
            self.advance()
            return EUnary(pos=pos, op="!", arg=self.parse_prefix())
        if self.at("fst"):
            self.advance()
            return EFst(pos=pos, arg=self.parse_prefix())
        if self.at("snd"):
            self.advance()
            return ESnd(pos=pos, arg=self.parse_prefix())
        if self.at("observe"):
            self.advance()
            return EObserve(pos=pos, arg=self.parse_prefix())
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        tok = self.cur
        pos = (tok.line, tok.col)
        if self.at("true"):
            self.advance()
            return EBool(pos=pos, value=True)
        if self.at("false"):
            self.advance()
            return EBool(pos=pos, value=False)
        if tok.kind == "num":
            if "." in tok.text:
                self.error("decimal literals are only allowed inside flip(...)")
            self.advance()
            return EInt(pos=pos, value=int(tok.text))
        if self.at("flip"):
            self.advance()
            self.eat("(")
            theta = self.parse_rational()
            self.eat(")")
            return EFlip(pos=pos, theta=theta)
        if self.at("nflip"):
            self.advance()
            self.eat("(")
            self.eat(")")
            return ENFlip(pos=pos)
        if self.at("uniform") or self.at("choose"):
            kind = self.advance().text
            self.eat("(")
            lo = self.eat_int()
            self.eat(",")
            hi = self.eat_int()
            self.eat(")")
            cls = EUniform if kind == "uniform" else EChoose
            return cls(pos=pos, lo=lo, hi=hi)
        if tok.kind == "ident":
            name = self.advance().text
            if self.at("("):
                self.advance()
                args = [self.parse_expr()]
                while self.at(","):
                    self.advance()
                    args.append(self.parse_expr())
                self.eat(")")
                return ECall(pos=pos, func=name, args=args)
            return EVar(pos=pos, name=name)
        if self.at("("):
            self.advance()
            parts = [self.parse_expr()]
            while self.at(","):
                self.advance()
                parts.append(self.parse_expr())
            self.eat(")")
            expr = parts[-1]
            for p in reversed(parts[:-1]):
                expr = ETuple(pos=pos, left=p, right=expr)
            return expr
        self.error("expected an expression, found %r" % (tok.text or "<eof>"))

    def parse_rational(self) -> Fraction:
        line, col = self.cur.line, self.cur.col
        if self.cur.kind != "num":
            self.error("expected a probability literal")
        text = self.advance().text
        if self.at("/"):
            self.advance()
            if self.cur.kind != "num" or "." in self.cur.text:
                self.error("expected denominator")
            denom = int(self.advance().text)
            if denom == 0:
                raise NdSyntaxError("zero denominator", line, col)
            theta = Fraction(int(text), denom)
        else:
            theta = Fraction(text)  # exact, also for decimals like 0.3
        if not 0 <= theta <= 1:
            raise NdSyntaxError(
                "probability %s outside [0, 1]" % text, line, col
            )
        return theta


def parse(source: str) -> SurfaceProgram:
    return Parser(source).parse_program()
