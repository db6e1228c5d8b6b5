"""Minimal S-expression reading for the SMT-LIB wire format.

Forms are Python lists, symbols are str, numerals are int, and string
literals keep their surrounding quotes so they stay distinguishable from
symbols.  The incremental Reader accepts arbitrary chunk boundaries, which is
what both ends of a pipe need.
"""

from __future__ import annotations


class SexprError(ValueError):
    pass


def _parse_atom(text: str):
    if text and (text[0].isdigit() or (text[0] == "-" and text[1:].isdigit())):
        try:
            return int(text)
        except ValueError:
            pass
    return text


class Reader:
    """Feed text in, get complete toplevel forms out."""

    def __init__(self):
        self._stack: list[list] = []
        self._atom: list[str] = []
        self._string: list[str] | None = None
        self._comment = False
        self._quoted = None  # delimiter for |...| symbols

    def feed(self, chunk: str) -> list:
        out = []
        for ch in chunk:
            if self._comment:
                if ch == "\n":
                    self._comment = False
                continue
            if self._string is not None:
                self._string.append(ch)
                if ch == '"':
                    # "" inside a string is an escaped quote; peeking is not
                    # possible here, so close and reopen on the next quote
                    self._emit_token("".join(self._string), out)
                    self._string = None
                continue
            if self._quoted is not None:
                if ch == "|":
                    self._emit_token("".join(self._quoted), out)
                    self._quoted = None
                else:
                    self._quoted.append(ch)
                continue
            if ch == ";":
                self._flush_atom(out)
                self._comment = True
            elif ch == '"':
                self._flush_atom(out)
                self._string = ['"']
            elif ch == "|":
                self._flush_atom(out)
                self._quoted = []
            elif ch == "(":
                self._flush_atom(out)
                self._stack.append([])
            elif ch == ")":
                self._flush_atom(out)
                if not self._stack:
                    raise SexprError("unbalanced ')'")
                done = self._stack.pop()
                self._emit_form(done, out)
            elif ch.isspace():
                self._flush_atom(out)
            else:
                self._atom.append(ch)
        if not self._stack:
            self._flush_atom(out)
        return out

    def _flush_atom(self, out: list) -> None:
        if self._atom:
            self._emit_token(_parse_atom("".join(self._atom)), out)
            self._atom = []

    def _emit_token(self, token, out: list) -> None:
        if self._stack:
            self._stack[-1].append(token)
        else:
            out.append(token)

    def _emit_form(self, form: list, out: list) -> None:
        if self._stack:
            self._stack[-1].append(form)
        else:
            out.append(form)


def parse(text: str) -> list:
    """All toplevel forms in text."""
    reader = Reader()
    forms = reader.feed(text)
    forms.extend(reader.feed(" "))
    if reader._stack:
        raise SexprError("unbalanced '('")
    return forms


def parse_one(text: str):
    forms = parse(text)
    if len(forms) != 1:
        raise SexprError(f"expected one form, got {len(forms)}")
    return forms[0]


def render(form) -> str:
    if isinstance(form, list):
        return "(" + " ".join(render(f) for f in form) + ")"
    return str(form)
