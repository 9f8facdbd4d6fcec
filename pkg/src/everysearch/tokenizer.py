"""Identifier and query tokenization.

Code search reduces to natural-language search once identifiers are broken
into lowercase words: ``getUserName``, ``get_user_name`` and the query
"get user name" all become ``["get", "user", "name"]``.  Indexed item
names and incoming queries pass through the same splitter so both sides
of the bi-encoder see identical text.

Word boundaries:

* any non-alphanumeric character (underscore, hyphen, dot, whitespace, ...)
* camel humps, i.e. a lowercase letter followed by an uppercase one
* the end of an uppercase run when the next letter is lowercase, so an
  acronym keeps all but its last capital: ``HTTPServer`` gives
  ``["http", "server"]``
* letter/digit transitions in either direction

Tokens are lowercased character by character; when lowercasing expands a
character (Turkish dotted I grows a combining mark), only the resulting
alphanumeric characters are kept, so token sequences are stable under
re-splitting.  The concatenation of all tokens therefore contains exactly
the alphanumeric characters of the input, in order, lowercased.  Unicode
letters count as word characters.
"""

from __future__ import annotations

__all__ = ["split_identifier", "normalize_query"]


def _char_class(ch: str) -> str:
    """digit, upper, or lower; caseless letters count as lower.

    "upper" means lowercasing actually changes the character, so tokens
    (which are already lowercased) re-split to themselves.
    """
    if not ch.isalpha():
        return "digit"  # decimal digits plus numeric chars like superscripts
    if ch.isupper() and ch.lower() != ch:
        return "upper"
    return "lower"


def split_identifier(name: str) -> list[str]:
    """Split an identifier into lowercase word tokens.

    Total function: any string is accepted and the empty string yields an
    empty list.
    """
    tokens: list[str] = []
    buf: list[str] = []
    prev = ""
    n = len(name)
    for i, ch in enumerate(name):
        if not ch.isalnum():
            if buf:
                tokens.append("".join(buf))
                buf.clear()
            prev = ""
            continue
        if prev:
            lhs, rhs = _char_class(prev), _char_class(ch)
            boundary = False
            if (lhs == "digit") != (rhs == "digit"):
                boundary = True
            elif lhs == "lower" and rhs == "upper":
                boundary = True
            elif lhs == "upper" and rhs == "upper":
                nxt = name[i + 1] if i + 1 < n else ""
                if nxt.isalpha() and _char_class(nxt) == "lower":
                    boundary = True
            if boundary and buf:
                tokens.append("".join(buf))
                buf.clear()
        buf.extend(c for c in ch.lower() if c.isalnum())
        prev = ch
    if buf:
        tokens.append("".join(buf))
    return tokens


def normalize_query(query: str) -> list[str]:
    """Normalize a free-text query into the identifier token space.

    Runs of whitespace collapse because whitespace is a separator like any
    other; the rules are exactly those of :func:`split_identifier`.
    """
    return split_identifier(query)
