"""Exact-number helpers: parsing rational/radical literals and formatting."""
import re

import sympy as sp

_ALLOWED = re.compile(r"^[0-9+\-*/().\s a-z]*$")
_SQRT_BARE = re.compile(r"sqrt\s*(\d+)")


class LiteralError(ValueError):
    pass


def parse_number(text):
    """Parse a numeric literal into an exact sympy expression.

    Accepts integers, decimals ("0.25"), rationals ("2/3") and radicals
    written either as "sqrt2/16" or "sqrt(2)/16". Anything else is rejected.

    Args:
        text: the literal, or an int / sympy number which is returned as is.
    """
    if isinstance(text, sp.Basic):
        return text
    if isinstance(text, int):
        return sp.Integer(text)
    s = str(text).strip().lower()
    if not s or not _ALLOWED.match(s):
        raise LiteralError(f"unsupported numeric literal {text!r}")
    words = set(re.findall(r"[a-z]+", s))
    if words - {"sqrt"}:
        raise LiteralError(f"unsupported numeric literal {text!r}")
    s = _SQRT_BARE.sub(r"sqrt(\1)", s)
    try:
        value = sp.sympify(s, rational=True, locals={"sqrt": sp.sqrt})
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise LiteralError(f"cannot parse numeric literal {text!r}") from exc
    if not value.is_number or not value.is_real:
        raise LiteralError(f"literal {text!r} is not a real number")
    return sp.nsimplify(value) if value.is_Float else sp.simplify(value)


def to_float(value):
    return float(sp.N(value, 30)) if isinstance(value, sp.Basic) else float(value)


def fmt_exact(value):
    """Canonical exact string, e.g. "1/3", "sqrt(2)/2", "3"."""
    return str(sp.nsimplify(sp.simplify(value)))


def fmt_float(value):
    """Floats are written with 12 significant digits in every artifact."""
    return format(float(value), ".12g")
