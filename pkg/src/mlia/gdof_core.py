"""Exact sum-GDoF arithmetic for the K-user asymmetric interference channel.

The channel is described by sorted link-strength exponents
0 < a_1 <= a_2 <= ... <= a_K <= 1 (receiver k sees all its links scaled by
sqrt(P^a_k)).  The optimal sum GDoF has the closed form

    d_sum = (a_1 + ... + a_K + a_K - a_{K-1}) / 2.

This module certifies that closed form from the outer-bound side and
evaluates the matching inner bound:

* ``make_weighted_bound`` instantiates the weighted inequality

      sum_j 2^{J-j+1} d_{l_j} + d_{l_{J+1}} + d_{l_{J+2}}
          <= sum_j 2^{J-j} a_{l_j} + a_{l_{J+2}}

  for any strictly increasing user subset l_1 < ... < l_{J+2}.

* ``converse_family`` generates the family of 2^ceil(log2(K/2)) such
  inequalities whose per-user weight columns sum to fixed totals, so the
  family average collapses to the closed form above.  ``certify_family``
  checks that identity exactly.

* ``achievable_gdof`` evaluates the rate of the layered alignment scheme at
  a finite monomial-exponent range ``n``; its n -> infinity limit equals the
  optimal sum GDoF.

Everything here is exact: inputs are ``fractions.Fraction``, weights are
ints, and no floating point is used.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


class CertificationError(Exception):
    """A bound family failed its exact structural / identity checks."""


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"``, decimal or integer strings into an exact rational."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {text!r}") from exc


def format_rational(value: Fraction) -> str:
    """Canonical string form, ``"5/4"`` or ``"2"`` for whole numbers."""
    return str(value)


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    if isinstance(value, float):
        # Floats are accepted for convenience but converted through their
        # shortest decimal repr so 0.8 means 4/5, not its binary neighbour.
        return Fraction(repr(value))
    raise ValueError(f"cannot interpret {value!r} as an exact rational")


@dataclass(frozen=True)
class AlphaProfile:
    """Sorted link-strength exponents, one per receiver (1-based users)."""

    alphas: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.alphas) < 2:
            raise ValueError("need at least 2 users")
        if any(not isinstance(a, Fraction) for a in self.alphas):
            object.__setattr__(
                self, "alphas", tuple(_as_fraction(a) for a in self.alphas)
            )
        if self.alphas[0] <= 0:
            raise ValueError("link strengths must be positive")
        if self.alphas[-1] > 1:
            raise ValueError("link strengths must be at most 1")
        if any(a > b for a, b in zip(self.alphas, self.alphas[1:])):
            raise ValueError("link strengths must be sorted ascending")

    @classmethod
    def parse(cls, items: Iterable) -> "AlphaProfile":
        return cls(tuple(_as_fraction(a) for a in items))

    @property
    def k_users(self) -> int:
        return len(self.alphas)

    def alpha(self, k: int) -> Fraction:
        """1-based accessor with the virtual entry a_0 = 0."""
        if k == 0:
            return Fraction(0)
        if not 1 <= k <= self.k_users:
            raise ValueError(f"user index {k} out of range [1, {self.k_users}]")
        return self.alphas[k - 1]


@dataclass(frozen=True)
class WeightedBound:
    """One inequality sum_k lhs[k] d_k <= sum_k rhs[k] a_k (= rhs_value)."""

    lhs_weights: tuple[int, ...]
    rhs_weights: tuple[int, ...]
    rhs_value: Fraction

    def to_json_dict(self) -> dict:
        return {
            "lhs": list(self.lhs_weights),
            "rhs": list(self.rhs_weights),
            "rhs_value": format_rational(self.rhs_value),
        }

    def pretty(self) -> str:
        def side(weights, sym):
            terms = [
                (f"{w}*" if w != 1 else "") + f"{sym}{k}"
                for k, w in enumerate(weights, start=1)
                if w
            ]
            return " + ".join(terms) if terms else "0"

        return f"{side(self.lhs_weights, 'd')} <= {side(self.rhs_weights, 'a')}"


@dataclass(frozen=True)
class BoundFamily:
    """The full set of 2^jl inequalities whose average is the optimum."""

    bounds: tuple[WeightedBound, ...]
    jl: int

    def __len__(self) -> int:
        return len(self.bounds)


def family_size_exponent(k_users: int) -> int:
    """ceil(log2(K/2)): the number of geometric weight levels for K users."""
    if k_users < 3:
        raise ValueError("the bound family is defined for K >= 3")
    return (k_users - 1).bit_length() - 1


def optimal_sum_gdof(alpha: AlphaProfile) -> Fraction:
    """(sum_k a_k + a_K - a_{K-1}) / 2, exactly."""
    k = alpha.k_users
    return (sum(alpha.alphas) + alpha.alpha(k) - alpha.alpha(k - 1)) / 2


def make_weighted_bound(
    alpha: AlphaProfile, subset: Sequence[int], j_depth: int
) -> WeightedBound:
    """Weighted inequality on the users ``subset`` = (l_1, ..., l_{J+2}).

    The first ``j_depth`` users carry the geometric left weights
    2^J, 2^{J-1}, ..., 2 and right weights 2^{J-1}, ..., 1; the last two
    users carry left weight 1 each, and only the last contributes its
    exponent on the right.
    """
    k = alpha.k_users
    j = j_depth
    if j < 1:
        raise ValueError("geometric depth J must be >= 1")
    if j > family_size_exponent(k):
        raise ValueError(f"geometric depth J={j} exceeds ceil(log2(K/2)) for K={k}")
    subset = tuple(subset)
    if len(subset) != j + 2:
        raise ValueError(f"subset must list J+2 = {j + 2} users, got {len(subset)}")
    if any(not 1 <= u <= k for u in subset):
        raise ValueError(f"subset {subset} has users outside [1, {k}]")
    if any(a >= b for a, b in zip(subset, subset[1:])):
        raise ValueError(f"subset {subset} must be strictly increasing")

    lhs = [0] * k
    rhs = [0] * k
    for pos, user in enumerate(subset[:j], start=1):
        lhs[user - 1] += 2 ** (j - pos + 1)
        rhs[user - 1] += 2 ** (j - pos)
    lhs[subset[j] - 1] += 1
    lhs[subset[j + 1] - 1] += 1
    rhs[subset[j + 1] - 1] += 1
    value = sum(w * a for w, a in zip(rhs, alpha.alphas))
    return WeightedBound(tuple(lhs), tuple(rhs), value)


def make_pair_bound(alpha: AlphaProfile, i: int, j: int) -> WeightedBound:
    """The two-user inequality d_i + d_j <= a_j for i < j."""
    k = alpha.k_users
    if not 1 <= i < j <= k:
        raise ValueError(f"need 1 <= i < j <= {k}, got ({i}, {j})")
    lhs = [0] * k
    rhs = [0] * k
    lhs[i - 1] = 1
    lhs[j - 1] = 1
    rhs[j - 1] = 1
    return WeightedBound(tuple(lhs), tuple(rhs), alpha.alpha(j))


def _geometric_indices(k_users: int, jl: int, ell: int) -> list[int]:
    """Surviving users of the weight-2^{jl-j} terms of the ell-th bound.

    For ell in the first half the index at level j is
    ceil(ell / 2^j) + (2^jl - 2^{jl-j}); in the second half the same
    expression is shifted by K - 1 - 2^jl and erased whenever it falls
    below 2^jl.  Erased levels are dropped entirely (their weight moves to
    no user).
    """
    half = 1 << (jl - 1)
    indices: list[int] = []
    for j in range(jl):
        prefix = (1 << jl) - (1 << (jl - j))
        if ell <= half:
            idx = ((ell + (1 << j) - 1) >> j) + prefix
        else:
            m = ell - half
            idx = k_users - 1 - (1 << jl) + ((m + (1 << j) - 1) >> j) + prefix
            if idx < (1 << jl):
                # erased level: legal only while no lighter level survived yet,
                # so that surviving weights stay a geometric run 2^J, ..., 2
                if indices:
                    raise CertificationError(
                        f"non-contiguous erasure pattern in bound {ell} "
                        f"for K={k_users}"
                    )
                continue
        indices.append(idx)
    if any(a >= b for a, b in zip(indices, indices[1:])):
        raise CertificationError(
            f"duplicate or unsorted users {indices} in bound {ell} for K={k_users}"
        )
    if indices and indices[-1] >= k_users - 1:
        raise CertificationError(
            f"geometric user {indices[-1]} collides with the fixed pair for K={k_users}"
        )
    return indices


def converse_family(alpha: AlphaProfile) -> BoundFamily:
    """All 2^jl weighted bounds whose exact average is the optimal sum GDoF.

    Every bound carries d_{K-1} + d_K on the left and a_K on the right; the
    geometric part of the ell-th bound follows the index schedule of
    ``_geometric_indices``.  Bounds whose geometric part is fully erased
    degenerate to the pair bound d_{K-1} + d_K <= a_K.
    """
    k = alpha.k_users
    jl = family_size_exponent(k)
    bounds = []
    for ell in range(1, (1 << jl) + 1):
        users = _geometric_indices(k, jl, ell)
        if users:
            bounds.append(make_weighted_bound(alpha, users + [k - 1, k], len(users)))
        else:
            bounds.append(make_pair_bound(alpha, k - 1, k))
    return BoundFamily(tuple(bounds), jl)


def certify_family(alpha: AlphaProfile, family: BoundFamily) -> Fraction:
    """Exact check that the family averages to the optimal sum GDoF.

    Verifies the fixed column sums (left weight 2^jl on every user; right
    weight 2^{jl-1} on users 1..K-2, zero on user K-1 and 2^jl on user K),
    re-derives every right-hand value from the profile, and returns the
    family average, which must equal ``optimal_sum_gdof`` exactly.
    """
    k = alpha.k_users
    jl = family.jl
    if jl < 1 or jl != family_size_exponent(k):
        raise CertificationError(f"family exponent {jl} does not fit K={k}")
    if len(family.bounds) != 1 << jl:
        raise CertificationError(
            f"family has {len(family.bounds)} bounds, expected {1 << jl}"
        )
    lhs_cols = [0] * k
    rhs_cols = [0] * k
    total = Fraction(0)
    for bound in family.bounds:
        value = sum(w * a for w, a in zip(bound.rhs_weights, alpha.alphas))
        if value != bound.rhs_value:
            raise CertificationError(
                f"stored rhs value {bound.rhs_value} != recomputed {value}"
            )
        for idx in range(k):
            lhs_cols[idx] += bound.lhs_weights[idx]
            rhs_cols[idx] += bound.rhs_weights[idx]
        total += value
    if lhs_cols != [1 << jl] * k:
        raise CertificationError(f"left column sums {lhs_cols} != {1 << jl}")
    expected_rhs = [1 << (jl - 1)] * (k - 2) + [0, 1 << jl]
    if rhs_cols != expected_rhs:
        raise CertificationError(f"right column sums {rhs_cols} != {expected_rhs}")
    average = total / (1 << jl)
    if average != optimal_sum_gdof(alpha):
        raise CertificationError(
            f"family average {average} != optimum {optimal_sum_gdof(alpha)}"
        )
    return average


def alignment_dims(k_layer: int, n: int) -> tuple[int, int]:
    """(N, M) monomial counts for an alignment layer serving k_layer users.

    N = n^{k(k-1)} cross-link monomials carry data; the aligned receive
    space adds (k-1) n^{k(k-1)-1} - 1 interference-only monomials, so
    M = 2N + (k-1) n^{k(k-1)-1} - 1.
    """
    if k_layer < 3:
        raise ValueError("alignment layers serve at least 3 users")
    if n < 1:
        raise ValueError("monomial exponent range n must be >= 1")
    g = k_layer * (k_layer - 1)
    n_dims = n**g
    m_dims = 2 * n_dims + (k_layer - 1) * n ** (g - 1) - 1
    return n_dims, m_dims


def achievable_gdof(alpha: AlphaProfile, n: int) -> Fraction:
    """Sum GDoF of the layered scheme at finite exponent range n, exactly.

    Layer ell <= K-2 contributes (K-ell+1)(a_ell - a_{ell-1}) N/M; the last
    two layers contribute their exponent increments outright.  Layers with
    a_ell = a_{ell-1} contribute zero.
    """
    if n < 1:
        raise ValueError("monomial exponent range n must be >= 1")
    k = alpha.k_users
    total = Fraction(0)
    for ell in range(1, k - 1):
        n_dims, m_dims = alignment_dims(k - ell + 1, n)
        total += (k - ell + 1) * (alpha.alpha(ell) - alpha.alpha(ell - 1)) * Fraction(
            n_dims, m_dims
        )
    total += alpha.alpha(k - 1) - alpha.alpha(k - 2)
    total += alpha.alpha(k) - alpha.alpha(k - 1)
    return total


def achievable_gdof_limit(alpha: AlphaProfile) -> Fraction:
    """n -> infinity limit of ``achievable_gdof`` (each N/M ratio -> 1/2)."""
    k = alpha.k_users
    total = Fraction(0)
    for ell in range(1, k - 1):
        total += Fraction(k - ell + 1, 2) * (alpha.alpha(ell) - alpha.alpha(ell - 1))
    total += alpha.alpha(k - 1) - alpha.alpha(k - 2)
    total += alpha.alpha(k) - alpha.alpha(k - 1)
    return total
