"""Lexical scanner for the toy sTeX subset the services understand.

A state machine, not regexes: ``%`` comments run to end of line, ``\\name``
commands are a backslash plus letters (or one other character), braces and
``$`` delimiters are tracked so math mode is known for every token.  Token
spans tile the text with no gaps or overlaps; unterminated constructs
extend to end of input.
"""

from __future__ import annotations

from dataclasses import dataclass

COMMAND = "Command"
BEGIN_GROUP = "BeginGroup"
END_GROUP = "EndGroup"
MATH_DELIM = "MathDelim"
COMMENT = "Comment"
WORD = "Word"
WHITESPACE = "Whitespace"

_SPECIAL = set("%\\{}$")


@dataclass(frozen=True)
class StexToken:
    kind: str
    start: int
    end: int  # exclusive
    in_math: bool = False


def tokenize(text: str) -> list[StexToken]:
    tokens: list[StexToken] = []
    i = 0
    n = len(text)
    math = False
    while i < n:
        c = text[i]
        start = i
        if c == "%":
            while i < n and text[i] != "\n":
                i += 1
            tokens.append(StexToken(COMMENT, start, i, math))
        elif c == "\\":
            i += 1
            if i < n and text[i].isalpha():
                while i < n and text[i].isalpha():
                    i += 1
            elif i < n:
                i += 1  # escaped single character, e.g. \% or \$
            tokens.append(StexToken(COMMAND, start, i, math))
        elif c == "{":
            i += 1
            tokens.append(StexToken(BEGIN_GROUP, start, i, math))
        elif c == "}":
            i += 1
            tokens.append(StexToken(END_GROUP, start, i, math))
        elif c == "$":
            while i < n and text[i] == "$":
                i += 1
            tokens.append(StexToken(MATH_DELIM, start, i, True))
            math = not math
        elif c.isspace():
            while i < n and text[i].isspace() and text[i] not in _SPECIAL:
                i += 1
            tokens.append(StexToken(WHITESPACE, start, i, math))
        else:
            while i < n and not text[i].isspace() and text[i] not in _SPECIAL:
                i += 1
            tokens.append(StexToken(WORD, start, i, math))
    return tokens


def masked_spans(tokens: list[StexToken]) -> list[tuple[int, int]]:
    """Spans where term spotting must not match: comments, commands, math."""
    out: list[tuple[int, int]] = []
    for tok in tokens:
        if tok.kind in (COMMENT, COMMAND, MATH_DELIM) or tok.in_math:
            if out and out[-1][1] == tok.start:
                out[-1] = (out[-1][0], tok.end)
            else:
                out.append((tok.start, tok.end))
    return out
