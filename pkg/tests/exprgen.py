"""Random expression sources for the parser and derivative properties."""

import random

from qriccati.coeffexpr.expr import FUNCTIONS

LEAVES = ("t", "pi", "e", "NUM")


def random_source(rng: random.Random, depth: int) -> str:
    """Source text for a random tree of at most ``depth`` levels."""
    if depth <= 1 or rng.random() < 0.2:
        leaf = rng.choice(LEAVES + ("t", "t"))
        if leaf == "NUM":
            return repr(round(rng.uniform(0.1, 3.0), 3))
        return leaf
    kind = rng.random()
    sub = lambda: random_source(rng, depth - 1)  # noqa: E731
    if kind < 0.35:
        return f"{rng.choice(FUNCTIONS)}({sub()})"
    if kind < 0.45:
        return f"-({sub()})"
    if kind < 0.55:
        return f"({sub()})^{rng.choice(('2', '3', '0.5', '-1'))}"
    op = rng.choice("+-*/")
    return f"({sub()}) {op} ({sub()})"
