"""Sparse multivariate polynomials and univariate branch polynomials.

A :class:`CoupledPolynomial` stores monomials as integer exponent vectors in
graded lexicographic order (total degree ascending, then exponent vectors in
descending lexicographic order, so ``z1`` precedes ``z2``). Every evaluation
sums the terms sequentially in that order, which keeps results reproducible
bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations_with_replacement
from math import comb
from typing import Iterable, NamedTuple

import numpy as np

__all__ = [
    "MonomialTerm",
    "CoupledPolynomial",
    "UnivariatePoly",
    "monomial_exponents",
    "n_monomials",
    "eval_coupled",
    "gradient_coupled",
    "hessian_coupled",
    "eval_uni",
]


class MonomialTerm(NamedTuple):
    exponents: tuple[int, ...]
    coefficient: float


def _order_key(exp) -> tuple:
    return (int(sum(exp)), tuple(-int(e) for e in exp))


def monomial_exponents(m: int, degree: int) -> np.ndarray:
    """All exponent vectors of ``m`` variables up to ``degree``, canonical order.

    >>> monomial_exponents(2, 2).tolist()
    [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
    """
    if m < 1 or degree < 0:
        raise ValueError("need m >= 1 and degree >= 0")
    rows = []
    for d in range(degree + 1):
        for combo in combinations_with_replacement(range(m), d):
            e = [0] * m
            for k in combo:
                e[k] += 1
            rows.append(e)
    return np.array(rows, dtype=np.int64).reshape(-1, m)


def n_monomials(m: int, degree: int) -> int:
    """Number of monomials in ``m`` variables of total degree <= ``degree``."""
    return comb(m + degree, degree)


def _power_table(Z: np.ndarray, max_exp: int) -> list[list[np.ndarray]]:
    table = []
    for k in range(Z.shape[1]):
        col = Z[:, k]
        powers = [np.ones_like(col), col]
        for _ in range(2, max_exp + 1):
            powers.append(powers[-1] * col)
        table.append(powers[: max_exp + 1])
    return table


def _monomial_columns(Z: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """Columns ``prod_k Z[:, k]**e_k`` for every exponent row."""
    n = Z.shape[0]
    out = np.empty((n, exponents.shape[0]))
    if exponents.size == 0:
        return out
    table = _power_table(Z, int(exponents.max(initial=0)))
    for t, e in enumerate(exponents):
        col = None
        for k in np.flatnonzero(e):
            factor = table[k][e[k]]
            col = factor.copy() if col is None else col * factor
        out[:, t] = 1.0 if col is None else col
    return out


@dataclass(frozen=True, eq=False)
class CoupledPolynomial:
    """Multivariate polynomial ``F(z) = sum_t coef_t * prod_k z_k**exp_tk``.

    Parameters
    ----------
    input_dim : int
        Number of variables ``m``.
    max_degree : int
        Upper bound on the total degree of any term.
    exponents : ndarray of shape (n_terms, input_dim)
        Exponent vectors, in canonical order without duplicates.
    coefs : ndarray of shape (n_terms,)
        Term coefficients.

    Use :meth:`from_terms` to build one from unordered terms.
    """

    input_dim: int
    max_degree: int
    exponents: np.ndarray
    coefs: np.ndarray

    def __post_init__(self):
        exps = np.array(self.exponents, dtype=np.int64).reshape(-1, self.input_dim)
        coefs = np.array(self.coefs, dtype=float).reshape(-1)
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if exps.shape[0] != coefs.shape[0]:
            raise ValueError("exponents and coefs disagree on the number of terms")
        if (exps < 0).any():
            raise ValueError("exponents must be non-negative")
        if exps.shape[0] and exps.sum(axis=1).max() > self.max_degree:
            raise ValueError("term degree exceeds max_degree")
        keys = [_order_key(e) for e in exps]
        if any(a >= b for a, b in zip(keys, keys[1:])):
            raise ValueError("terms must be in canonical order without duplicates")
        exps.setflags(write=False)
        coefs.setflags(write=False)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coefs", coefs)

    @classmethod
    def from_terms(
        cls, input_dim: int, max_degree: int, terms: Iterable
    ) -> CoupledPolynomial:
        """Build from ``(exponents, coefficient)`` pairs in any order."""
        items = [(tuple(int(v) for v in e), float(c)) for e, c in terms]
        for e, _ in items:
            if len(e) != input_dim:
                raise ValueError("exponent vector length differs from input_dim")
        if len({e for e, _ in items}) != len(items):
            raise ValueError("duplicate exponent vectors")
        items.sort(key=lambda it: _order_key(it[0]))
        exps = np.array([e for e, _ in items], dtype=np.int64).reshape(-1, input_dim)
        return cls(input_dim, max_degree, exps, np.array([c for _, c in items]))

    @classmethod
    def full(cls, input_dim: int, max_degree: int, coefs) -> CoupledPolynomial:
        """Dense polynomial with one coefficient per canonical monomial."""
        return cls(input_dim, max_degree, monomial_exponents(input_dim, max_degree), coefs)

    @property
    def terms(self) -> list[MonomialTerm]:
        return [
            MonomialTerm(tuple(int(v) for v in e), float(c))
            for e, c in zip(self.exponents, self.coefs)
        ]

    @property
    def n_terms(self) -> int:
        return int(self.coefs.shape[0])

    def _as_matrix(self, z) -> tuple[np.ndarray, bool]:
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        Z = z[None, :] if single else z
        if Z.ndim != 2 or Z.shape[1] != self.input_dim:
            raise ValueError(
                f"expected {self.input_dim} variables, got shape {z.shape}"
            )
        return Z, single

    def evaluate(self, z) -> np.ndarray | float:
        """Evaluate at one point (1-D input) or at each row of a matrix."""
        Z, single = self._as_matrix(z)
        cols = _monomial_columns(Z, self.exponents)
        acc = np.zeros(Z.shape[0])
        for t in range(self.n_terms):
            acc = acc + self.coefs[t] * cols[:, t]
        return float(acc[0]) if single else acc

    __call__ = evaluate

    def design_matrix(self, Z) -> np.ndarray:
        """Monomial values of this polynomial's terms at each row of ``Z``."""
        Z, _ = self._as_matrix(Z)
        return _monomial_columns(Z, self.exponents)

    def derivative(self, k: int) -> CoupledPolynomial:
        """Partial derivative with respect to variable ``k`` (0-based)."""
        keep = self.exponents[:, k] > 0
        exps = self.exponents[keep].copy()
        coefs = self.coefs[keep] * exps[:, k]
        exps[:, k] -= 1
        # differentiation maps distinct terms to distinct terms; re-sort only
        order = sorted(range(len(exps)), key=lambda t: _order_key(exps[t]))
        return CoupledPolynomial(
            self.input_dim, max(self.max_degree - 1, 0), exps[order], coefs[order]
        )

    @cached_property
    def _first_derivatives(self) -> list[CoupledPolynomial]:
        return [self.derivative(k) for k in range(self.input_dim)]

    @cached_property
    def _second_derivatives(self) -> dict[tuple[int, int], CoupledPolynomial]:
        d1 = self._first_derivatives
        return {
            (i, j): d1[i].derivative(j)
            for i in range(self.input_dim)
            for j in range(i, self.input_dim)
        }

    def gradient(self, z) -> np.ndarray:
        """Analytic gradient; shape ``(m,)`` for one point, ``(N, m)`` for rows."""
        Z, single = self._as_matrix(z)
        G = np.column_stack([d.evaluate(Z) for d in self._first_derivatives])
        return G[0] if single else G

    def hessian(self, z) -> np.ndarray:
        """Analytic Hessian; ``(m, m)`` for one point, ``(N, m, m)`` for rows.

        Only the upper triangle is computed; the lower one is a copy, so the
        result is exactly symmetric.
        """
        Z, single = self._as_matrix(z)
        m = self.input_dim
        H = np.empty((Z.shape[0], m, m))
        for (i, j), p in self._second_derivatives.items():
            H[:, i, j] = p.evaluate(Z)
            H[:, j, i] = H[:, i, j]
        return H[0] if single else H

    def constant_term(self) -> float:
        zero = ~self.exponents.any(axis=1)
        return float(self.coefs[zero].sum()) if zero.any() else 0.0

    def scaled(self, var_scale, out_scale: float = 1.0) -> CoupledPolynomial:
        """Polynomial ``G(s) = F(s / var_scale) / out_scale``.

        Used to move between physical and standardized regressor coordinates.
        """
        var_scale = np.asarray(var_scale, dtype=float)
        factor = np.prod(var_scale[None, :] ** (-self.exponents), axis=1)
        return CoupledPolynomial(
            self.input_dim, self.max_degree, self.exponents, self.coefs * factor / out_scale
        )

    def to_dict(self) -> dict:
        return {
            "input_dim": int(self.input_dim),
            "max_degree": int(self.max_degree),
            "terms": [
                {"exp": [int(v) for v in e], "coef": float(c)}
                for e, c in zip(self.exponents, self.coefs)
            ],
        }

    def to_json(self) -> str:
        """Serialize with 17 significant digits per coefficient."""
        if not np.isfinite(self.coefs).all():
            raise ValueError("cannot serialize non-finite coefficients")
        terms = ", ".join(
            '{"exp": %s, "coef": %s}' % (json.dumps([int(v) for v in e]), format(c, ".17g"))
            for e, c in zip(self.exponents, self.coefs)
        )
        return '{"input_dim": %d, "max_degree": %d, "terms": [%s]}' % (
            self.input_dim,
            self.max_degree,
            terms,
        )

    @classmethod
    def from_dict(cls, data: dict) -> CoupledPolynomial:
        m = int(data["input_dim"])
        terms = [(t["exp"], t["coef"]) for t in data["terms"]]
        return cls.from_terms(m, int(data["max_degree"]), terms)

    @classmethod
    def from_json(cls, text: str) -> CoupledPolynomial:
        return cls.from_dict(json.loads(text))

    def __repr__(self) -> str:
        return (
            f"CoupledPolynomial(input_dim={self.input_dim}, "
            f"max_degree={self.max_degree}, n_terms={self.n_terms})"
        )


def eval_coupled(p: CoupledPolynomial, z) -> float:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError("z must be a vector")
    return p.evaluate(z)


def gradient_coupled(p: CoupledPolynomial, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError("z must be a vector")
    return p.gradient(z)


def hessian_coupled(p: CoupledPolynomial, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError("z must be a vector")
    return p.hessian(z)


def _falling(j: int, q: int) -> int:
    out = 1
    for s in range(q):
        out *= j - s
    return out


@dataclass(frozen=True, eq=False)
class UnivariatePoly:
    """Branch nonlinearity ``g(x) = sum_{j=1..M} c_j x**j``.

    There is no constant term; a decoupled model carries one shared offset.
    Any other branch basis only needs to provide :meth:`basis`, ``degree`` and
    ``__call__`` with the same meaning.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size < 1:
            raise ValueError("a branch polynomial needs degree >= 1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return int(self.coeffs.size)

    def derivative_coeffs(self, order: int) -> np.ndarray:
        """Ascending-power coefficients (power 0 first) of the ``order``-th derivative."""
        M = self.degree
        out = np.zeros(max(M + 1 - order, 0))
        for j in range(max(order, 1), M + 1):
            out[j - order] = _falling(j, order) * self.coeffs[j - 1]
        return out

    def __call__(self, x, order: int = 0):
        """Horner evaluation of ``g``, ``g'`` or ``g''``."""
        if order not in (0, 1, 2):
            raise ValueError("derivative order must be 0, 1 or 2")
        x = np.asarray(x, dtype=float)
        a = self.derivative_coeffs(order)
        acc = np.zeros_like(x)
        for c in a[::-1]:
            acc = acc * x + c
        return float(acc) if acc.ndim == 0 else acc

    def basis(self, x, order: int = 0) -> np.ndarray:
        """Matrix whose column ``j-1`` is the ``order``-th derivative of ``x**j``."""
        x = np.asarray(x, dtype=float).reshape(-1)
        M = self.degree
        out = np.zeros((x.size, M))
        for j in range(1, M + 1):
            if j >= order:
                out[:, j - 1] = _falling(j, order) * x ** (j - order)
        return out

    def with_coeffs(self, coeffs) -> UnivariatePoly:
        return UnivariatePoly(coeffs)

    def rescaled_input(self, a: float) -> UnivariatePoly:
        """Polynomial ``x -> g(a * x)``."""
        powers = a ** np.arange(1, self.degree + 1)
        return UnivariatePoly(self.coeffs * powers)

    def to_dict(self) -> dict:
        return {"degree": self.degree, "coeffs": [float(c) for c in self.coeffs]}

    @classmethod
    def from_dict(cls, data: dict) -> UnivariatePoly:
        coeffs = data["coeffs"]
        if "degree" in data and int(data["degree"]) != len(coeffs):
            raise ValueError("branch degree does not match coefficient count")
        return cls(coeffs)


def eval_uni(g: UnivariatePoly, x, derivative_order: int = 0):
    return g(x, derivative_order)
