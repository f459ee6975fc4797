"""Prime-field arithmetic, dense polynomials, and Lagrange interpolation.

Field elements are plain integers canonicalized into ``[0, p)``; the modulus
lives on a :class:`FieldContext` instead of on each element.  The low-level
helpers (:func:`horner`, :func:`lagrange_coefficients`) restrict themselves to
``+``, ``*`` and ``%`` on the ordinate side, so batched values (for example
numpy arrays) flow through them unchanged.  This is what the exhaustive
privacy checker relies on.
"""

from dataclasses import dataclass

from .errors import DuplicateAbscissa, InverseOfZero, NoPrimeInInterval

# A field element is just an int in [0, p); the context carries p.
FieldElement = int

#: Degree of the identically-zero polynomial.
NEG_INFINITY = float("-inf")


def is_prime(n: int) -> bool:
    """Deterministic trial-division primality test; fine for the small
    moduli this library selects (tens of thousands at most)."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class FieldContext:
    """A prime field GF(p) together with the sizing inputs that chose it.

    ``entry_bound`` is the exclusive upper bound on raw model entries and
    ``n_users`` the number of aggregating users; both are retained so a
    context can report whether its modulus conforms to the sizing rule
    (see :meth:`conforming`).  Contexts built by hand with an arbitrary
    prime are allowed, since tiny fields are needed for exhaustive privacy
    enumeration, but load assertions refuse them.
    """

    p: int
    entry_bound: int
    n_users: int

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise ValueError(f"modulus {self.p} is not prime")
        if self.entry_bound < 2:
            raise ValueError(f"entry_bound must be >= 2, got {self.entry_bound}")
        if self.n_users < 1:
            raise ValueError(f"n_users must be >= 1, got {self.n_users}")

    @property
    def conforming(self) -> bool:
        """True when p lies in (N*(entry_bound-1), 2*N*(entry_bound-1)],
        the interval that guarantees overflow-free aggregation at minimal
        per-symbol cost."""
        low = self.n_users * (self.entry_bound - 1)
        return low < self.p <= 2 * low

    @property
    def bits_per_symbol(self) -> int:
        """ceil(log2 p): bits needed to transmit one field element."""
        return (self.p - 1).bit_length()

    # -- element arithmetic ---------------------------------------------

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def neg(self, a: int) -> int:
        return (-a) % self.p

    def inv(self, a: int) -> int:
        if a % self.p == 0:
            raise InverseOfZero("zero has no multiplicative inverse")
        return pow(a, -1, self.p)

    def rand(self, rng) -> int:
        """One uniform field element from a seeded ``random.Random``."""
        return rng.randrange(self.p)


def select_prime(n_users: int, entry_bound: int) -> FieldContext:
    """Pick the canonical modulus for ``n_users`` summands below
    ``entry_bound``: the smallest prime in (N*(l-1), 2*N*(l-1)].

    The lower end keeps the integer sum of all models below p, so recovery
    never wraps; the upper end caps the interval so a prime always exists
    (Bertrand) and the choice is deterministic.
    """
    if n_users < 1:
        raise ValueError(f"n_users must be >= 1, got {n_users}")
    if entry_bound < 2:
        raise ValueError(f"entry_bound must be >= 2, got {entry_bound}")
    low = n_users * (entry_bound - 1)
    for candidate in range(low + 1, 2 * low + 1):
        if is_prime(candidate):
            return FieldContext(candidate, entry_bound, n_users)
    raise NoPrimeInInterval(f"no prime in ({low}, {2 * low}]")  # pragma: no cover


@dataclass(frozen=True)
class Polynomial:
    """Dense polynomial over GF(p), low-order coefficient first.

    The coefficient tuple is canonical: the trailing coefficient is non-zero
    unless the polynomial is identically zero, in which case ``coeffs`` is
    empty and the degree is -inf (a sentinel, never an integer that could
    slip into arithmetic).
    """

    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.coeffs and self.coeffs[-1] == 0:
            raise ValueError("trailing coefficient must be non-zero; use from_coeffs")

    @classmethod
    def from_coeffs(cls, coeffs) -> "Polynomial":
        """Build a polynomial, trimming trailing zero coefficients."""
        trimmed = list(coeffs)
        while trimmed and trimmed[-1] == 0:
            trimmed.pop()
        return cls(tuple(trimmed))

    @property
    def degree(self):
        """Integer degree, or -inf for the zero polynomial."""
        return len(self.coeffs) - 1 if self.coeffs else NEG_INFINITY

    def is_zero(self) -> bool:
        return not self.coeffs


def horner(coeffs, x: int, p: int):
    """Evaluate a coefficient sequence (low order first) at ``x`` mod p.

    Coefficients may be ints or any value supporting +, * and % (numpy
    arrays included); ``x`` must be an int.
    """
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def eval_poly(ctx: FieldContext, poly: Polynomial, x: int) -> int:
    """Evaluate ``poly`` at ``x`` in the context's field."""
    return horner(poly.coeffs, x % ctx.p, ctx.p)


def lagrange_coefficients(xs, ys, p: int) -> list:
    """Coefficients (low order first) of the unique polynomial of degree
    < len(xs) through the points ``zip(xs, ys)`` over GF(p).

    The abscissas must be ints, pairwise distinct mod p.  Ordinates may be
    ints or batched values.  The returned list always has len(xs) entries;
    trailing entries are zero when the data lies on a lower-degree curve.

    Uses the master-numerator formulation: build Z(x) = prod (x - x_i) once,
    then each basis numerator is Z(x) / (x - x_i) by synthetic division.
    """
    n = len(xs)
    if n == 0:
        raise ValueError("at least one interpolation point is required")
    canon = [x % p for x in xs]
    if len(set(canon)) != n:
        raise DuplicateAbscissa(f"duplicate evaluation points in {list(xs)}")
    if len(ys) != n:
        raise ValueError("xs and ys must have equal length")

    # Z(x) = prod (x - x_i), degree n, built root by root.
    root = [1]
    for x in canon:
        root.insert(0, 0)
        for j in range(len(root) - 1):
            root[j] = (root[j] - root[j + 1] * x) % p

    out = [0] * n
    for i, x in enumerate(canon):
        # numerator_i = Z(x) / (x - x_i), degree n-1
        num = [0] * (n - 1) + [1]
        for j in range(n - 1, 0, -1):
            num[j - 1] = (root[j] + num[j] * x) % p
        denom = horner(num, x, p)
        weight = pow(denom, -1, p)  # denom != 0 since abscissas are distinct
        scaled = (ys[i] * weight) % p
        for j in range(n):
            out[j] = (out[j] + num[j] * scaled) % p
    return out


def lagrange_interpolate(ctx: FieldContext, points) -> Polynomial:
    """Interpolate integer points [(x, y), ...] into a canonical
    :class:`Polynomial` over the context's field."""
    xs = [x for x, _ in points]
    ys = [y % ctx.p for _, y in points]
    return Polynomial.from_coeffs(lagrange_coefficients(xs, ys, ctx.p))
