"""Ramp secret sharing of model vectors, and recovery of their sum.

A model of length L is cut into K equal segments (zero-padded when K does
not divide L).  Per segment coordinate, the K segment values become the
low-order coefficients of a polynomial and T fresh uniform noise values the
high-order ones, so every coordinate carries a degree K+T-1 polynomial.  A
share is the vector of those polynomials evaluated at one non-zero point.

Shares are additively homomorphic: summing many users' shares at a common
evaluation point yields a share of the summed coefficient vectors.  Any
K+T evaluations of the summed polynomial at distinct non-zero points
recover all K summed segments at once; that 1/K amortization is the whole
point of ramp (rather than plain Shamir) sharing.  Fewer than T+1
evaluations of a single user's polynomial are statistically independent of
that user's model.
"""

from dataclasses import dataclass
from random import Random

from .errors import (
    DimensionMismatch,
    DuplicateAbscissa,
    InsufficientEvaluations,
    ZeroEvaluationPoint,
)
from .field import FieldContext, Polynomial, horner, lagrange_coefficients


@dataclass(frozen=True)
class Model:
    """A user's raw input vector.  Entries are kept as supplied; range
    validation against the field's entry bound happens at the harness
    boundary so batched values can pass through the core unchanged."""

    entries: tuple

    @property
    def length(self) -> int:
        return len(self.entries)


def validate_entries(model: Model, entry_bound: int) -> None:
    """Raise ValueError naming the first entry outside [0, entry_bound)."""
    for i, e in enumerate(model.entries):
        if not 0 <= e < entry_bound:
            raise ValueError(f"model entry {i} = {e} outside [0, {entry_bound})")


@dataclass(frozen=True)
class ModelPartition:
    """K equal-length segments of one model plus how many zeros padded the
    tail segment."""

    segments: tuple
    pad_count: int

    @property
    def k_parts(self) -> int:
        return len(self.segments)

    @property
    def seg_len(self) -> int:
        return len(self.segments[0])


def partition_model(model: Model, k_parts: int) -> ModelPartition:
    """Split ``model`` into ``k_parts`` segments of ceil(L/K) entries,
    zero-padding the end so every segment has equal length."""
    if k_parts < 1:
        raise ValueError(f"k_parts must be >= 1, got {k_parts}")
    length = model.length
    if length < 1:
        raise ValueError("cannot partition an empty model")
    seg_len = -(-length // k_parts)
    pad_count = seg_len * k_parts - length
    padded = tuple(model.entries) + (0,) * pad_count
    segments = tuple(
        padded[i * seg_len : (i + 1) * seg_len] for i in range(k_parts)
    )
    return ModelPartition(segments=segments, pad_count=pad_count)


def unpartition(partition: ModelPartition, original_length: int) -> tuple:
    """Inverse of :func:`partition_model`: concatenate and drop padding."""
    flat: list = []
    for seg in partition.segments:
        flat.extend(seg)
    return tuple(flat[:original_length])


@dataclass(frozen=True)
class NoiseBlock:
    """T noise vectors, one per masking coefficient, each seg_len long.
    ``seed_tag`` records where the randomness came from so runs can be
    reproduced and audited."""

    vectors: tuple
    seed_tag: str = ""

    @property
    def count(self) -> int:
        return len(self.vectors)

    @property
    def seg_len(self) -> int:
        return len(self.vectors[0]) if self.vectors else 0


def sample_noise(
    ctx: FieldContext, count: int, seg_len: int, rng: Random, seed_tag: str = ""
) -> NoiseBlock:
    """Draw ``count`` uniform noise vectors of length ``seg_len`` from a
    seeded generator.  Same seed, same noise."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    if seg_len < 1:
        raise ValueError(f"seg_len must be >= 1, got {seg_len}")
    vectors = tuple(
        tuple(ctx.rand(rng) for _ in range(seg_len)) for _ in range(count)
    )
    return NoiseBlock(vectors=vectors, seed_tag=seed_tag)


@dataclass(frozen=True)
class SharePolynomial:
    """The vector-coefficient polynomial a user shares from.

    ``coeff_vectors`` lists K segment vectors then T noise vectors; entry j
    of the list is the (vector) coefficient of x**j.  Coordinate i therefore
    carries the scalar polynomial whose coefficients are
    ``[v[i] for v in coeff_vectors]``, of degree at most K+T-1.
    """

    coeff_vectors: tuple
    k_parts: int

    @property
    def noise_count(self) -> int:
        return len(self.coeff_vectors) - self.k_parts

    @property
    def seg_len(self) -> int:
        return len(self.coeff_vectors[0])

    def coordinate_poly(self, i: int) -> Polynomial:
        """Scalar polynomial at coordinate ``i`` (int-valued inputs only)."""
        return Polynomial.from_coeffs([v[i] for v in self.coeff_vectors])


def make_share_poly(partition: ModelPartition, noise: NoiseBlock) -> SharePolynomial:
    """Stack segments then noise into one vector-coefficient polynomial."""
    for j, vec in enumerate(noise.vectors):
        if len(vec) != partition.seg_len:
            raise DimensionMismatch(
                f"noise vector {j} has length {len(vec)}, segments have "
                f"length {partition.seg_len}"
            )
    return SharePolynomial(
        coeff_vectors=tuple(partition.segments) + tuple(noise.vectors),
        k_parts=partition.k_parts,
    )


@dataclass(frozen=True)
class Share:
    """Evaluation of a share polynomial at one point: ``values[i]`` is
    coordinate i's polynomial evaluated at ``eval_point``."""

    eval_point: int
    values: tuple


def share_at(ctx: FieldContext, poly: SharePolynomial, eval_point: int) -> Share:
    """Evaluate every coordinate of ``poly`` at ``eval_point``.

    Point zero is rejected: the constant coefficients are the first model
    segment, so a share at zero would hand it out in the clear.
    """
    point = eval_point % ctx.p
    if point == 0:
        raise ZeroEvaluationPoint("shares at point 0 would expose the first segment")
    values = tuple(
        horner([vec[i] for vec in poly.coeff_vectors], point, ctx.p)
        for i in range(poly.seg_len)
    )
    return Share(eval_point=point, values=values)


def sum_vectors(vectors, seg_len: int, p: int) -> tuple:
    """Coordinate-wise modular sum of equal-length vectors (possibly none)."""
    acc = [0] * seg_len
    for vec in vectors:
        if len(vec) != seg_len:
            raise DimensionMismatch(
                f"vector of length {len(vec)} in a sum of length-{seg_len} vectors"
            )
        for i, v in enumerate(vec):
            acc[i] = (acc[i] + v) % p
    return tuple(acc)


def recover_aggregate(
    ctx: FieldContext,
    evals,
    k_parts: int,
    noise_count: int,
    original_length: int,
) -> list:
    """Recover the summed model from evaluations of the summed polynomial.

    ``evals`` is a sequence of (eval_point, values) pairs with pairwise
    distinct points; at least K+T are required.  Interpolation runs through
    all supplied points, so inconsistent extras corrupt the result rather
    than being silently discarded.  The K segment coefficients are extracted
    per coordinate, concatenated, and truncated to ``original_length``.
    """
    need = k_parts + noise_count
    if len(evals) < need:
        raise InsufficientEvaluations(
            f"got {len(evals)} evaluations, need at least {need}"
        )
    xs = [x for x, _ in evals]
    if len(set(x % ctx.p for x in xs)) != len(xs):
        raise DuplicateAbscissa(f"duplicate evaluation points in {xs}")
    seg_len = len(evals[0][1])
    for x, values in evals:
        if len(values) != seg_len:
            raise DimensionMismatch(
                f"evaluation at {x} has {len(values)} coordinates, expected {seg_len}"
            )

    ys_per_coord = [[values[i] for _, values in evals] for i in range(seg_len)]
    coeffs_per_coord = [
        lagrange_coefficients(xs, ys_per_coord[i], ctx.p) for i in range(seg_len)
    ]
    result: list = []
    for k in range(k_parts):
        for i in range(seg_len):
            result.append(coeffs_per_coord[i][k])
    return result[:original_length]
