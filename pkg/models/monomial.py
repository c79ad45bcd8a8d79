"""Products of perturbation variables, keyed by node id.

A monomial is a tuple of (node_id, exponent) pairs sorted by node id, so
it hashes canonically and can key the coefficient buffer directly.
"""

Monomial = tuple[tuple[int, int], ...]

ONE: Monomial = ()


def eps(node_id: int, power: int = 1) -> Monomial:
    return ((node_id, power),)


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    merged = dict(a)
    for node_id, power in b:
        merged[node_id] = merged.get(node_id, 0) + power
    return tuple(sorted(merged.items()))


def degree(m: Monomial) -> int:
    return sum(power for _, power in m)


def split(m: Monomial, node_id: int) -> tuple[int, Monomial]:
    """(power of node_id in m, remaining factors)."""
    power = 0
    rest = []
    for factor, exponent in m:
        if factor == node_id:
            power = exponent
        else:
            rest.append((factor, exponent))
    return power, tuple(rest)


def render(m: Monomial, names: dict[int, str] | None = None) -> str:
    if not m:
        return "1"
    parts = []
    for node_id, power in m:
        label = names.get(node_id, f"#{node_id}") if names else f"#{node_id}"
        parts.append(f"e[{label}]" if power == 1 else f"e[{label}]^{power}")
    return "*".join(parts)
