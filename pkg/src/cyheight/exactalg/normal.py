"""Division by a single polynomial (its own Groebner basis)."""
from __future__ import annotations

import heapq

from .mpoly import MPoly, grlex_key


def normal_form(g: MPoly, f: MPoly) -> MPoly:
    """Remainder of ``g`` on division by ``f`` in grlex order (``x0 > x1 > ...``).

    No term of the result is divisible by the leading monomial of ``f``; the
    remainder is unique because a principal ideal is generated by a Groebner
    basis of one element.
    """
    if not f.terms:
        raise ValueError("division by the zero polynomial")
    if f.modulus is None:
        raise ValueError("normal_form needs F_p coefficients")
    p = f.modulus
    lead, lc = f.leading_term()
    inv_lc = pow(lc, -1, p)
    tail = [(e, c) for e, c in f.terms.items() if e != lead]
    terms = dict(g.terms)
    # max-heap on grlex of candidate monomials divisible by the lead
    heap = [(_neg(grlex_key(e)), e) for e in terms if _divides(lead, e)]
    heapq.heapify(heap)
    while heap:
        _, e = heapq.heappop(heap)
        c = terms.pop(e, 0)
        if not c:
            continue
        q = tuple(a - b for a, b in zip(e, lead))
        factor = (c * inv_lc) % p
        for te, tc in tail:
            ne = tuple(a + b for a, b in zip(q, te))
            v = (terms.get(ne, 0) - factor * tc) % p
            if v:
                if ne not in terms and _divides(lead, ne):
                    heapq.heappush(heap, (_neg(grlex_key(ne)), ne))
                terms[ne] = v
            else:
                terms.pop(ne, None)
    return MPoly(terms, g.nvars, p, g.invertible, _clean=True)


def _divides(a: tuple, b: tuple) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _neg(key):
    d, e = key
    return (-d, tuple(-a for a in e))
