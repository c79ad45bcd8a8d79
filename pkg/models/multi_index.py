from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import factorial, prod
from typing import Iterable, Mapping

from errors import RequestError
from services.settings import get_order_cap
from services.validators import validate_identifier

INT64_MAX = 2 ** 63 - 1


@dataclass(frozen=True)
class MultiIndex:
    """Derivative selector: variable name -> positive order, kept sorted by name.

    `d(S, 2) * d(V)` is the mixed derivative d^3 f / dS^2 dV; the function
    being differentiated is implied by the seeds.
    """
    orders: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if not self.orders:
            raise RequestError("A derivative request needs at least one variable")
        names = [name for name, _ in self.orders]
        if names != sorted(set(names)):
            raise RequestError(f"MultiIndex entries must be unique and sorted: {names}")
        for name, order in self.orders:
            if order < 1:
                raise RequestError(f"Order of {name} must be positive, got {order}")
        cap = get_order_cap()
        if self.total > cap:
            raise RequestError(f"Total order {self.total} exceeds the order cap {cap}")

    @classmethod
    def from_mapping(cls, orders: Mapping[str, int]) -> "MultiIndex":
        return cls(tuple(sorted((name, order) for name, order in orders.items() if order)))

    @property
    def total(self) -> int:
        return sum(order for _, order in self.orders)

    @property
    def support(self) -> frozenset[str]:
        return frozenset(name for name, _ in self.orders)

    def as_dict(self) -> dict[str, int]:
        return dict(self.orders)

    def get(self, name: str) -> int:
        return dict(self.orders).get(name, 0)

    @property
    def factorial_weight(self) -> int:
        """prod of M(x)!, the rescaling from Taylor coefficient to derivative."""
        return prod(factorial(order) for _, order in self.orders)

    def __mul__(self, other: "MultiIndex") -> "MultiIndex":
        return product(self, other)

    def __str__(self):
        return "*".join(f"d({name})" if order == 1 else f"d<{order}>({name})"
                        for name, order in self.orders)


def d(variable: str, k: int = 1) -> MultiIndex:
    validation = validate_identifier(variable)
    if not validation['is_valid']:
        raise RequestError(validation['error'])
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise RequestError(f"Derivative order must be a positive integer, got {k!r}")
    return MultiIndex(((variable, k),))


def product(m1: MultiIndex, m2: MultiIndex) -> MultiIndex:
    merged = m1.as_dict()
    for name, order in m2.orders:
        merged[name] = merged.get(name, 0) + order
    return MultiIndex.from_mapping(merged)


@dataclass(frozen=True)
class RequestSet:
    """Deduplicated derivative requests; variables outside every request are passive."""
    requests: tuple[MultiIndex, ...]

    def __post_init__(self):
        if not self.requests:
            raise RequestError("At least one derivative request is needed")

    @classmethod
    def of(cls, requests: Iterable[MultiIndex]) -> "RequestSet":
        return cls(tuple(dict.fromkeys(requests)))

    def __iter__(self):
        return iter(self.requests)

    def __len__(self):
        return len(self.requests)

    def __contains__(self, item):
        return item in self.requests

    @property
    def active_variables(self) -> frozenset[str]:
        return frozenset().union(*(m.support for m in self.requests))

    @property
    def max_order(self) -> int:
        return max(m.total for m in self.requests)

    def is_full_tensor(self) -> bool:
        """True when the requests are every multi-index of order 1..max over the active variables."""
        n = len(self.active_variables)
        return len(self.requests) == full_tensor_size(n, self.max_order) - 1


def _binomial(m: int, j: int, what: str) -> int:
    """C(m, j), raising as soon as the running product passes INT64_MAX."""
    j = min(j, m - j)
    value = 1
    for i in range(1, j + 1):
        # value is C(m - j + i, i) here, which only grows with i
        value = value * (m - j + i) // i
        if value > INT64_MAX:
            raise RequestError(f"{what} overflows a 64-bit integer")
    return value


def multiset_count(n: int, k: int) -> int:
    """Number of distinct derivatives of order k in n variables, C(n+k-1, k)."""
    if n < 1 or k < 0:
        raise RequestError(f"multiset_count needs n >= 1 and k >= 0, got n={n}, k={k}")
    return _binomial(n + k - 1, k, f"Derivative count for n={n}, k={k}")


def full_tensor_size(n: int, d: int) -> int:
    """All derivatives of total order <= d in n variables, primal included: C(n+d, d)."""
    if n < 1 or d < 0:
        raise RequestError(f"full_tensor_size needs n >= 1 and d >= 0, got n={n}, d={d}")
    return _binomial(n + d, d, f"Full tensor size for n={n}, d={d}")


def enumerate_full_tensor(variables: list[str], d: int) -> list[MultiIndex]:
    """Every multi-index with 1 <= |M| <= d, graded, then lexicographic in `variables` order."""
    if not variables or len(set(variables)) != len(variables):
        raise RequestError(f"Variables must be nonempty and distinct, got {variables}")
    result = []
    for degree in range(1, d + 1):
        for picks in combinations_with_replacement(range(len(variables)), degree):
            orders: dict[str, int] = {}
            for index in picks:
                orders[variables[index]] = orders.get(variables[index], 0) + 1
            result.append(MultiIndex.from_mapping(orders))
    return result
