"""Exhaustive privacy enumeration: exact zeros, leak detection, encoding."""

import math
from functools import reduce

import numpy as np
import pytest

from rampagg.errors import SearchSpaceTooLarge
from rampagg.harness import AdversaryView
from rampagg.privacy import (
    COUPLING_ALL_EQUAL,
    NOISE_CONSTANT,
    PrivacyCase,
    _encode_view,
    privacy_bruteforce,
)
from rampagg.protocol import InterGroupMessage
from rampagg.sharing import Share


def case_4_users(adversary=0, **overrides) -> PrivacyCase:
    kwargs = dict(
        n_users=4, t_max=1, d_max=0, k_parts=1, prime=5, adversaries=(adversary,),
    )
    kwargs.update(overrides)
    return PrivacyCase(**kwargs)


# ---- exact zero on honest runs ----


def test_full_field_case_is_exactly_private():
    result = privacy_bruteforce(case_4_users())
    assert result.exact_zero
    assert result.mi_bits == 0.0
    assert result.n_model_assignments == 125  # 3 honest users, full GF(5)
    assert result.n_noise_assignments == 125  # 3 honest noise symbols
    assert result.n_points == 125 * 125
    assert result.n_cells == 5  # one per possible honest sum


@pytest.mark.parametrize("adversary", [1, 2, 3])
def test_every_collusion_position_is_private(adversary):
    assert privacy_bruteforce(case_4_users(adversary)).exact_zero


def test_privacy_holds_with_nonzero_adversary_data():
    case = case_4_users(1, adversary_model_value=4, adversary_noise_value=3)
    assert privacy_bruteforce(case).exact_zero


def test_privacy_holds_under_correlated_models():
    # all five honest users share one model draw; over GF(5) the revealed
    # sum 5w is identically zero, so this is a genuine single-cell check
    case = PrivacyCase(
        n_users=6, t_max=1, d_max=0, k_parts=1, prime=5, adversaries=(2,),
        model_coupling=COUPLING_ALL_EQUAL,
    )
    result = privacy_bruteforce(case)
    assert result.n_cells == 1
    assert result.n_model_assignments == 5  # one generator
    assert result.exact_zero


def test_privacy_holds_with_a_dropped_user():
    # dropping user 3 makes that server stream a constant null in the view
    case = PrivacyCase(
        n_users=6, t_max=1, d_max=1, k_parts=1, prime=7, adversaries=(0,),
        dropped=(3,), model_bound=3,
    )
    result = privacy_bruteforce(case)
    assert result.exact_zero
    assert result.n_model_assignments == 3**4  # 4 honest model symbols


def test_server_only_view_with_no_colluders():
    case = PrivacyCase(
        n_users=4, t_max=0, d_max=0, k_parts=2, prime=5, adversaries=(),
        model_bound=2,
    )
    result = privacy_bruteforce(case)
    assert result.exact_zero
    assert result.n_noise_assignments == 1  # T=0: nothing to enumerate


def test_two_segment_case_is_private():
    case = PrivacyCase(
        n_users=6, t_max=1, d_max=0, k_parts=2, prime=7, adversaries=(4,),
        model_bound=2, budget=20_000_000,
    )
    result = privacy_bruteforce(case)
    assert result.exact_zero
    assert result.n_model_assignments == 2 ** 10
    assert result.n_noise_assignments == 7 ** 5


# ---- the checker must detect actual leaks ----


def test_constant_noise_leaks_and_mi_is_the_analytic_value():
    result = privacy_bruteforce(case_4_users(0, noise_mode=NOISE_CONSTANT))
    assert not result.exact_zero
    # with dead noise the colluder reads its neighbor's model entry w_1
    # directly; given the revealed sum, the other two users' entries stay
    # hidden, so the leak is exactly one uniform GF(5) symbol
    assert result.mi_bits == pytest.approx(math.log2(5))


def test_constant_noise_leak_detected_in_two_segment_case():
    case = PrivacyCase(
        n_users=6, t_max=1, d_max=0, k_parts=2, prime=7, adversaries=(0,),
        model_bound=2, noise_mode=NOISE_CONSTANT,
    )
    result = privacy_bruteforce(case)
    assert not result.exact_zero
    assert result.mi_bits > 0


# ---- budget ----


def test_budget_overflow_raises():
    with pytest.raises(SearchSpaceTooLarge):
        privacy_bruteforce(case_4_users(budget=100))


def test_full_field_two_segment_case_exceeds_default_budget():
    case = PrivacyCase(
        n_users=6, t_max=1, d_max=0, k_parts=2, prime=7, adversaries=(0,),
        model_bound=None,  # 7^10 model assignments alone
    )
    with pytest.raises(SearchSpaceTooLarge):
        privacy_bruteforce(case)


# ---- case validation ----


def test_case_rejects_too_many_colluders():
    with pytest.raises(ValueError, match="colluders"):
        PrivacyCase(
            n_users=4, t_max=1, d_max=0, k_parts=1, prime=5, adversaries=(0, 1),
        )


def test_case_rejects_unknown_modes():
    with pytest.raises(ValueError, match="noise_mode"):
        case_4_users(noise_mode="lava_lamp")
    with pytest.raises(ValueError, match="model_coupling"):
        case_4_users(model_coupling="entangled")


# ---- determinism ----


def test_bruteforce_is_deterministic():
    a = privacy_bruteforce(case_4_users(1))
    b = privacy_bruteforce(case_4_users(1))
    assert a == b


# ---- view encoding ----


def _view(intra_values, server_values):
    share = Share(eval_point=1, values=intra_values)
    msgs = tuple(
        InterGroupMessage(sender=2, receiver="server", values=(v,))
        for v in server_values
    )
    return AdversaryView(
        intra_shares={0: {1: share}},
        child_messages={0: {}},
        server_messages=msgs,
        own_models={},
        own_noise={},
    )


def test_encode_view_packs_base_p_int64():
    view = _view(intra_values=(3, 1), server_values=(4,))
    keys = _encode_view(view, p=5, n_noise=1)
    assert keys.dtype == np.int64
    assert keys.tolist() == [(3 * 5 + 1) * 5 + 4]


def test_encode_view_broadcasts_enumeration_axis():
    view = _view(intra_values=(np.array([1, 2, 3]),), server_values=(4,))
    keys = _encode_view(view, p=5, n_noise=3)
    assert keys.tolist() == [1 * 5 + 4, 2 * 5 + 4, 3 * 5 + 4]


def test_encode_view_skips_null_messages():
    null = InterGroupMessage(sender=1, receiver="server", values=None, null_flag=True)
    base = _view(intra_values=(2,), server_values=(3,))
    with_null = AdversaryView(
        intra_shares=base.intra_shares,
        child_messages=base.child_messages,
        server_messages=base.server_messages + (null,),
        own_models={},
        own_noise={},
    )
    assert _encode_view(base, 5, 1).tolist() == _encode_view(with_null, 5, 1).tolist()


def test_encode_view_wide_path_matches_exact_arithmetic():
    # 25 components * 3 bits/symbol > 62: forces the object-dtype path
    values = tuple(i % 5 for i in range(25))
    view = _view(intra_values=values, server_values=())
    keys = _encode_view(view, p=5, n_noise=1)
    assert keys.dtype == object
    expected = reduce(lambda acc, c: acc * 5 + c, values, 0)
    assert keys.tolist() == [expected]
    # stability across calls: same input, same key
    again = _encode_view(view, p=5, n_noise=1)
    assert keys.tolist() == again.tolist()


def test_encode_view_narrow_and_wide_paths_agree():
    values = (4, 0, 3, 2, 1)
    narrow = _encode_view(_view(values, ()), p=5, n_noise=1)
    # same digits interpreted in a base wide enough to force objects
    wide_p = 2**31
    wide = _encode_view(_view(values, ()), p=wide_p, n_noise=1)
    assert narrow.dtype == np.int64 and wide.dtype == object
    assert narrow.tolist() == [reduce(lambda a, c: a * 5 + c, values, 0)]
    assert wide.tolist() == [reduce(lambda a, c: a * wide_p + c, values, 0)]
