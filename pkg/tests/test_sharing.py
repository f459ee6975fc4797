"""Partitioning, noise, share evaluation, and sum recovery."""

import itertools
from collections import Counter
from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rampagg.errors import (
    DimensionMismatch,
    DuplicateAbscissa,
    InsufficientEvaluations,
    ZeroEvaluationPoint,
)
from rampagg.field import FieldContext
from rampagg.sharing import (
    Model,
    NoiseBlock,
    make_share_poly,
    partition_model,
    recover_aggregate,
    sample_noise,
    share_at,
    sum_vectors,
    unpartition,
    validate_entries,
)


def _ctx(p: int) -> FieldContext:
    return FieldContext(p, 2, 2)


# ---- partitioning ----


def test_partition_exact_split():
    part = partition_model(Model(tuple(range(9))), 3)
    assert part.segments == ((0, 1, 2), (3, 4, 5), (6, 7, 8))
    assert part.pad_count == 0
    assert part.seg_len == 3


def test_partition_pads_tail():
    part = partition_model(Model((1, 2, 3, 4, 5)), 3)
    assert part.seg_len == 2
    assert part.pad_count == 1
    assert part.segments == ((1, 2), (3, 4), (5, 0))


def test_partition_more_parts_than_entries():
    part = partition_model(Model((7, 8)), 4)
    assert part.seg_len == 1
    assert part.segments == ((7,), (8,), (0,), (0,))
    assert part.pad_count == 2


def test_unpartition_inverts():
    model = Model((3, 1, 4, 1, 5, 9, 2))
    part = partition_model(model, 3)
    assert unpartition(part, model.length) == model.entries


@given(
    st.lists(st.integers(min_value=0, max_value=100), min_size=1, max_size=40),
    st.integers(min_value=1, max_value=12),
)
def test_partition_round_trip(entries, k):
    model = Model(tuple(entries))
    part = partition_model(model, k)
    assert part.k_parts == k
    assert all(len(seg) == part.seg_len for seg in part.segments)
    assert part.seg_len * k == model.length + part.pad_count
    # minimal seg_len: one less would not fit, hence padding stays below k
    assert part.pad_count < k
    assert unpartition(part, model.length) == model.entries


def test_validate_entries():
    validate_entries(Model((0, 1, 7)), 8)
    with pytest.raises(ValueError, match="entry 2 = 8"):
        validate_entries(Model((0, 1, 8)), 8)
    with pytest.raises(ValueError, match="entry 0 = -1"):
        validate_entries(Model((-1,)), 8)


# ---- noise ----


def test_noise_is_deterministic_per_seed():
    ctx = _ctx(101)
    a = sample_noise(ctx, 3, 4, Random(9), "tag")
    b = sample_noise(ctx, 3, 4, Random(9), "tag")
    c = sample_noise(ctx, 3, 4, Random(10), "tag")
    assert a == b
    assert a.vectors != c.vectors
    assert a.count == 3 and a.seg_len == 4


def test_noise_is_roughly_uniform():
    # 10000 draws from GF(5): expect 2000 per residue; allow 5 sigma
    # (sigma = sqrt(10000 * 0.2 * 0.8) = 40).
    ctx = _ctx(5)
    counts = Counter()
    rng = Random(123)
    for _ in range(2500):
        block = sample_noise(ctx, 1, 4, rng)
        counts.update(block.vectors[0])
    assert sum(counts.values()) == 10000
    for residue in range(5):
        assert abs(counts[residue] - 2000) <= 200, counts


# ---- share polynomial layout ----


def test_coefficient_layout_segments_low_noise_high():
    part = partition_model(Model(tuple(range(1, 7))), 3)  # segments of 2
    noise = NoiseBlock(((10, 11), (12, 13)))
    poly = make_share_poly(part, noise)
    assert poly.k_parts == 3
    assert poly.noise_count == 2
    assert poly.coeff_vectors == ((1, 2), (3, 4), (5, 6), (10, 11), (12, 13))
    # coordinate 0 polynomial: 1 + 3x + 5x^2 + 10x^3 + 12x^4
    assert poly.coordinate_poly(0).coeffs == (1, 3, 5, 10, 12)
    assert poly.coordinate_poly(1).degree == 4


def test_degree_bound_is_k_plus_t_minus_1():
    part = partition_model(Model(tuple(range(9))), 9)
    noise = NoiseBlock(((1,), (1,)))
    poly = make_share_poly(part, noise)
    assert poly.coordinate_poly(0).degree == 10  # K + T - 1 = 9 + 2 - 1


def test_make_share_poly_rejects_wrong_noise_length():
    part = partition_model(Model((1, 2, 3, 4)), 2)
    with pytest.raises(DimensionMismatch):
        make_share_poly(part, NoiseBlock(((5, 6, 7),)))


# ---- share evaluation ----


def test_share_at_hand_example():
    # f(x) = 3 + 5x over GF(13): f(2) = 13 = 0
    ctx = _ctx(13)
    poly = make_share_poly(
        partition_model(Model((3,)), 1), NoiseBlock(((5,),))
    )
    assert share_at(ctx, poly, 2).values == (0,)
    assert share_at(ctx, poly, 1).values == (8,)


def test_share_at_vector_example():
    # coordinates evaluated independently
    ctx = _ctx(7)
    part = partition_model(Model((1, 2, 3, 4)), 2)  # (1,2), (3,4)
    poly = make_share_poly(part, NoiseBlock(((5, 0),)))
    # coord 0: 1 + 3x + 5x^2 at x=2 -> 27 % 7 = 6
    # coord 1: 2 + 4x + 0x^2 at x=2 -> 10 % 7 = 3
    assert share_at(ctx, poly, 2).values == (6, 3)


def test_share_at_zero_rejected():
    ctx = _ctx(13)
    poly = make_share_poly(partition_model(Model((3,)), 1), NoiseBlock(((5,),)))
    with pytest.raises(ZeroEvaluationPoint):
        share_at(ctx, poly, 0)
    with pytest.raises(ZeroEvaluationPoint):
        share_at(ctx, poly, 13)  # 13 = 0 mod 13


def test_shares_are_additive():
    ctx = _ctx(101)
    rng = Random(4)
    polys = []
    for _ in range(5):
        part = partition_model(Model(tuple(rng.randrange(10) for _ in range(6))), 3)
        polys.append(make_share_poly(part, sample_noise(ctx, 2, 2, rng)))
    for point in (1, 2, 7):
        summed = sum_vectors(
            [share_at(ctx, poly, point).values for poly in polys], 2, ctx.p
        )
        coeff_sums = [
            sum_vectors([poly.coeff_vectors[j] for poly in polys], 2, ctx.p)
            for j in range(5)
        ]
        expected = tuple(
            sum(vec[i] * pow(point, j, ctx.p) for j, vec in enumerate(coeff_sums))
            % ctx.p
            for i in range(2)
        )
        assert summed == expected


# ---- recovery ----


def _share_and_recover(ctx, models, k_parts, noise_count, points, rng):
    seg_len = -(-len(models[0].entries) // k_parts)
    all_shares = []
    for model in models:
        part = partition_model(model, k_parts)
        noise = sample_noise(ctx, noise_count, seg_len, rng)
        poly = make_share_poly(part, noise)
        all_shares.append({pt: share_at(ctx, poly, pt) for pt in points})
    evals = [
        (pt, sum_vectors([s[pt].values for s in all_shares], seg_len, ctx.p))
        for pt in points
    ]
    return recover_aggregate(
        ctx, evals, k_parts, noise_count, len(models[0].entries)
    )


def test_recover_round_trip_exact_sum():
    ctx = FieldContext(101, 11, 4)
    rng = Random(77)
    models = [Model(tuple(rng.randrange(11) for _ in range(7))) for _ in range(4)]
    got = _share_and_recover(ctx, models, 3, 2, [1, 2, 3, 4, 5], rng)
    expected = [sum(m.entries[i] for m in models) for i in range(7)]
    assert got == expected  # sums < p, so mod never wraps


def test_recover_with_extra_consistent_points():
    ctx = FieldContext(53, 5, 6)
    rng = Random(3)
    models = [Model(tuple(rng.randrange(5) for _ in range(4))) for _ in range(6)]
    got = _share_and_recover(ctx, models, 2, 1, [1, 2, 3, 4, 5, 6], rng)
    expected = [sum(m.entries[i] for m in models) for i in range(4)]
    assert got == expected


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_recover_round_trip_property(data):
    k = data.draw(st.integers(min_value=1, max_value=4))
    t = data.draw(st.integers(min_value=0, max_value=3))
    n_models = data.draw(st.integers(min_value=1, max_value=5))
    length = data.draw(st.integers(min_value=1, max_value=9))
    ctx = FieldContext(101, 3, 10)
    rng = Random(data.draw(st.integers(min_value=0, max_value=9999)))
    models = [
        Model(tuple(rng.randrange(3) for _ in range(length)))
        for _ in range(n_models)
    ]
    points = list(range(1, k + t + 1))
    got = _share_and_recover(ctx, models, k, t, points, rng)
    expected = [sum(m.entries[i] for m in models) for i in range(length)]
    assert got == expected


def test_recover_requires_k_plus_t_points():
    ctx = _ctx(13)
    with pytest.raises(InsufficientEvaluations):
        recover_aggregate(ctx, [(1, (0,)), (2, (1,))], 2, 1, 2)


def test_recover_rejects_duplicate_points():
    ctx = _ctx(13)
    evals = [(1, (0,)), (2, (1,)), (14, (5,))]  # 14 = 1 mod 13
    with pytest.raises(DuplicateAbscissa):
        recover_aggregate(ctx, evals, 2, 1, 2)


def test_recover_rejects_ragged_evaluations():
    ctx = _ctx(13)
    evals = [(1, (0, 1)), (2, (1,)), (3, (5, 2))]
    with pytest.raises(DimensionMismatch):
        recover_aggregate(ctx, evals, 2, 1, 4)


def test_sum_vectors_rejects_ragged_input():
    with pytest.raises(DimensionMismatch):
        sum_vectors([(1, 2), (1,)], 2, 7)


# ---- the ramp privacy invariant, exhaustively ----


@pytest.mark.parametrize("p", [3, 5])
@pytest.mark.parametrize("k", [1, 2])
def test_single_evaluation_is_uniform_over_noise(p, k):
    """With T=1, one share value is exactly uniform whatever the model."""
    ctx = _ctx(p)
    for entries in itertools.product(range(p), repeat=k):
        part = partition_model(Model(entries), k)
        for point in range(1, p):
            seen = Counter(
                share_at(
                    ctx, make_share_poly(part, NoiseBlock(((z,),))), point
                ).values[0]
                for z in range(p)
            )
            assert all(seen[v] == 1 for v in range(p)), (entries, point, seen)


def test_two_evaluations_uniform_with_two_noise_terms():
    """T=2 makes any pair of share values jointly uniform on GF(p)^2."""
    p = 5
    ctx = _ctx(p)
    for w in range(p):
        part = partition_model(Model((w,)), 1)
        pairs = Counter()
        for z1 in range(p):
            for z2 in range(p):
                poly = make_share_poly(part, NoiseBlock(((z1,), (z2,))))
                pairs[
                    (share_at(ctx, poly, 1).values[0], share_at(ctx, poly, 2).values[0])
                ] += 1
        assert len(pairs) == p * p
        assert set(pairs.values()) == {1}


def test_k_plus_t_evaluations_do_determine_the_model():
    """Sanity check of the ramp boundary: with T=1 and K+T=2 points the
    model is fully determined (so the uniformity above is tight)."""
    p = 5
    ctx = _ctx(p)
    seen = {}
    for w in range(p):
        for z in range(p):
            poly = make_share_poly(
                partition_model(Model((w,)), 1), NoiseBlock(((z,),))
            )
            key = (share_at(ctx, poly, 1).values[0], share_at(ctx, poly, 2).values[0])
            assert key not in seen, "two (model, noise) pairs collided"
            seen[key] = (w, z)
    assert len(seen) == p * p
