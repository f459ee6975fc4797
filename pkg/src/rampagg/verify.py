"""Named verification suites with fixed matrices.

Each suite returns a list of :class:`CheckResult`; the CLI prints one line
per check and the test suite asserts on the same objects, so there is a
single source of truth for what "verified" means.
"""

import time
from dataclasses import dataclass
from fractions import Fraction
from random import Random

from .errors import TooManyDropouts
from .field import is_prime
from .harness import (
    RunConfig,
    correctness_oracle,
    generate_models,
    plain_sum,
    simulate,
)
from .privacy import (
    COUPLING_ALL_EQUAL,
    NOISE_CONSTANT,
    PrivacyCase,
    privacy_bruteforce,
)
from .protocol import DropoutPlan, derive_seed, run_protocol
from .sharing import Model
from .topology import DelayModel, build_tree, total_delay


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    elapsed: float


def _run_check(name: str, fn) -> CheckResult:
    start = time.perf_counter()
    try:
        detail = fn()
        passed = True
    except AssertionError as exc:
        detail = str(exc) or "assertion failed"
        passed = False
    except Exception as exc:  # noqa: BLE001 - a crashed check is a failed check
        detail = f"raised {exc!r}"
        passed = False
    return CheckResult(name, passed, detail, time.perf_counter() - start)


# ---- worked examples ---------------------------------------------------------


def example_single_group_config() -> RunConfig:
    """12 users, one group of 12 (K=9, T=2, D=1), user 2 dropped."""
    return RunConfig(
        n_users=12,
        t_max=2,
        d_max=1,
        k_parts=9,
        model_len=9,
        entry_bound=8,
        tree_shape="chain",
        dropped=(2,),
        master_seed=2024,
    )


def example_two_group_config() -> RunConfig:
    """Same population split into two chained groups of 6 (K=3)."""
    return example_single_group_config().replace(k_parts=3)


def _check_example(config: RunConfig, expect: dict) -> str:
    report, result = simulate(config)
    loads = report.loads
    assert loads.r_server == expect["r_server"], (
        f"r_server {loads.r_server} != {expect['r_server']}"
    )
    assert loads.r_user_max == expect["r_user_max"], (
        f"r_user_max {loads.r_user_max} != {expect['r_user_max']}"
    )
    assert report.total_edges == expect["edges"], (
        f"edges {report.total_edges} != {expect['edges']}"
    )
    assert report.silent_edges == expect["silent"], (
        f"silent edges {report.silent_edges} != {expect['silent']}"
    )
    models = generate_models(config)
    included = set(range(config.n_users)) - set(config.dropped)
    expected_sum = plain_sum(models, included)
    assert list(report.aggregate) == expected_sum, "aggregate != plain sum of survivors"
    return (
        f"r_server={loads.r_server} r_user_max={loads.r_user_max} "
        f"edges={report.total_edges} silent={report.silent_edges}"
    )


def verify_examples() -> list[CheckResult]:
    return [
        _run_check(
            "single-group-worked-example",
            lambda: _check_example(
                example_single_group_config(),
                {
                    "r_server": Fraction(11, 9),
                    "r_user_max": Fraction(4, 3),
                    "edges": 78,
                    "silent": 12,
                },
            ),
        ),
        _run_check(
            "two-group-worked-example",
            lambda: _check_example(
                example_two_group_config(),
                {
                    "r_server": Fraction(5, 3),
                    "r_user_max": Fraction(2, 1),
                    "edges": 42,
                    "silent": 7,
                },
            ),
        ),
    ]


# ---- closed-form formulas ----------------------------------------------------


def _check_load_formulas_24() -> str:
    n = 24
    runs = 0
    for t_max, d_max in ((1, 0), (1, 1), (2, 0), (2, 1)):
        for k in range(1, n - t_max - d_max + 1):
            if n % (k + t_max + d_max) != 0:
                continue
            dropped = tuple(range(n - 1, n - 1 - d_max, -1))
            config = RunConfig(
                n_users=n,
                t_max=t_max,
                d_max=d_max,
                k_parts=k,
                model_len=k,
                entry_bound=4,
                dropped=dropped,
                master_seed=7 * k + t_max,
            )
            report, _ = simulate(config)
            assert report.loads.r_server == Fraction(k + t_max, k), (
                f"T={t_max} D={d_max} K={k}: r_server {report.loads.r_server}"
            )
            expected_edges = n * (k + t_max + d_max + 1) // 2
            assert report.total_edges == expected_edges, (
                f"T={t_max} D={d_max} K={k}: edges {report.total_edges} "
                f"!= {expected_edges}"
            )
            runs += 1
    return f"{runs} (T, D, K) configurations matched both closed forms"


def _smallest_prime_in(low: int, high: int) -> int:
    for c in range(low + 1, high + 1):
        if is_prime(c):
            return c
    raise AssertionError(f"no prime in ({low}, {high}]")


def _check_max_partition_point() -> str:
    details = []
    for n in (12, 24, 60):
        k = n - 3
        config = RunConfig(
            n_users=n,
            t_max=2,
            d_max=1,
            k_parts=k,
            model_len=k,
            entry_bound=256,
            dropped=(n - 1,),
            master_seed=n,
        )
        report, _ = simulate(config)
        assert report.loads.r_server == Fraction(k + 2, k), (
            f"N={n}: r_server {report.loads.r_server} != {Fraction(k + 2, k)}"
        )
        expected_prime = _smallest_prime_in(255 * n, 510 * n)
        assert report.prime == expected_prime, (
            f"N={n}: prime {report.prime} != {expected_prime}"
        )
        bits = (expected_prime - 1).bit_length()
        assert report.bits_per_symbol == bits, (
            f"N={n}: bits {report.bits_per_symbol} != {bits}"
        )
        details.append(f"N={n}: p={report.prime}, r_server={report.loads.r_server}")
    return "; ".join(details)


def _check_delay_formulas() -> str:
    delays = DelayModel(inter=1, intra=3)
    star = total_delay(build_tree(7, "star"), delays)
    chain = total_delay(build_tree(7, "chain"), delays)
    single = total_delay(build_tree(1, "chain"), delays)
    assert star == 2 * 1 + 3, f"star: {star}"
    assert chain == 7 * 1 + 3, f"chain: {chain}"
    assert single == 1 + 3, f"single group: {single}"
    delays2 = DelayModel(inter=5, intra=2)
    assert total_delay(build_tree(7, "star"), delays2) == 12
    assert total_delay(build_tree(7, "chain"), delays2) == 37
    return f"star(7)={star}, chain(7)={chain}, single={single} with inter=1 intra=3"


def verify_formulas() -> list[CheckResult]:
    return [
        _run_check("load-and-edge-formulas-24-users", _check_load_formulas_24),
        _run_check("max-partition-operating-point", _check_max_partition_point),
        _run_check("delay-closed-forms", _check_delay_formulas),
    ]


# ---- randomized correctness ---------------------------------------------------


def _check_randomized_recovery() -> str:
    combos = [
        (12, 2, 1, 3, 10),
        (12, 2, 1, 9, 9),
        (24, 3, 1, 4, 10),
    ]
    total = 0
    for n, t_max, d_max, k, length in combos:
        for shape in ("chain", "star"):
            config = RunConfig(
                n_users=n,
                t_max=t_max,
                d_max=d_max,
                k_parts=k,
                model_len=length,
                entry_bound=16,
                tree_shape=shape,
                master_seed=n * 1000 + k,
            )
            summary = correctness_oracle(config, trials=168)
            assert summary.passed, (
                f"N={n} K={k} {shape}: {len(summary.failures)} mismatches, "
                f"first: {summary.failures[:1]}"
            )
            total += summary.trials
    return f"{total} randomized runs matched the plain-integer sum"


def _check_tree_invariance() -> str:
    irregular = {0: 4, 1: 4, 2: 5, 3: 5, 4: 5, 5: "server"}
    shapes = ["chain", "star", irregular]
    base = RunConfig(
        n_users=24,
        t_max=2,
        d_max=1,
        k_parts=1,
        model_len=6,
        entry_bound=16,
        master_seed=0,
    )
    for trial in range(100):
        dropped = (trial % 24,) if trial % 2 else ()
        aggregates = []
        for shape in shapes:
            config = base.replace(
                tree_shape=shape, master_seed=5000 + trial, dropped=dropped
            )
            report, _ = simulate(config)
            aggregates.append(list(report.aggregate))
        assert aggregates[0] == aggregates[1] == aggregates[2], (
            f"trial {trial}: aggregates differ across tree shapes: {aggregates}"
        )
    return "100 model sets identical across chain, star, and irregular trees"


def _check_dropout_boundary() -> str:
    config = RunConfig(
        n_users=12,
        t_max=2,
        d_max=1,
        k_parts=9,
        model_len=9,
        entry_bound=8,
    )
    params, tree, ctx = config.resolve()
    rng = Random(derive_seed(31, "boundary"))
    for trial in range(50):
        models = [
            Model(tuple(rng.randrange(8) for _ in range(9))) for _ in range(12)
        ]
        over = frozenset(rng.sample(range(12), config.d_max + 1))
        try:
            run_protocol(ctx, params, tree, models, DropoutPlan(over))
            raise AssertionError(
                f"trial {trial}: {sorted(over)} dropped but recovery succeeded"
            )
        except TooManyDropouts:
            pass
        exact = frozenset(rng.sample(range(12), config.d_max))
        run_protocol(ctx, params, tree, models, DropoutPlan(exact))  # must not raise
    return "50 over-budget runs all raised, 50 at-budget runs all recovered"


def verify_correctness() -> list[CheckResult]:
    return [
        _run_check("randomized-recovery-vs-plain-sum", _check_randomized_recovery),
        _run_check("tree-shape-invariance", _check_tree_invariance),
        _run_check("dropout-budget-boundary", _check_dropout_boundary),
    ]


# ---- exhaustive privacy --------------------------------------------------------


def _tiny_case_4_users(adversary: int, **overrides) -> PrivacyCase:
    kwargs = dict(
        n_users=4,
        t_max=1,
        d_max=0,
        k_parts=1,
        prime=5,
        adversaries=(adversary,),
        tree_shape="chain",
    )
    kwargs.update(overrides)
    return PrivacyCase(**kwargs)


def _tiny_case_6_users(adversary: int, **overrides) -> PrivacyCase:
    kwargs = dict(
        n_users=6,
        t_max=1,
        d_max=0,
        k_parts=2,
        prime=7,
        adversaries=(adversary,),
        tree_shape="chain",
        model_bound=2,
    )
    kwargs.update(overrides)
    return PrivacyCase(**kwargs)


def _check_privacy_4_users() -> str:
    points = 0
    for adversary in range(4):
        result = privacy_bruteforce(_tiny_case_4_users(adversary))
        assert result.exact_zero, (
            f"adversary at user {adversary}: MI = {result.mi_bits} bits over "
            f"{result.n_points} points"
        )
        points += result.n_points
    return f"MI exactly 0 for all 4 collusion positions ({points} points enumerated)"


def _check_privacy_6_users() -> str:
    points = 0
    for adversary in (0, 4):
        result = privacy_bruteforce(_tiny_case_6_users(adversary))
        assert result.exact_zero, (
            f"adversary at user {adversary}: MI = {result.mi_bits} bits over "
            f"{result.n_points} points"
        )
        points += result.n_points
    return f"MI exactly 0 for leaf and last-group colluders ({points} points)"


def _check_privacy_fixed_data() -> str:
    result = privacy_bruteforce(
        _tiny_case_4_users(1, adversary_model_value=3, adversary_noise_value=2)
    )
    assert result.exact_zero, f"MI = {result.mi_bits} bits with non-zero colluder data"
    return "MI exactly 0 with non-zero colluder model and noise"


def _check_privacy_correlated_models() -> str:
    # 5 honest copies of one model over GF(5): the revealed sum is 5w = 0,
    # so every assignment lands in a single conditioning cell and the view
    # histograms must still collapse to one distribution.
    case = PrivacyCase(
        n_users=6,
        t_max=1,
        d_max=0,
        k_parts=1,
        prime=5,
        adversaries=(2,),
        tree_shape="chain",
        model_coupling=COUPLING_ALL_EQUAL,
    )
    result = privacy_bruteforce(case)
    assert result.n_cells == 1, f"expected one cell, got {result.n_cells}"
    assert result.exact_zero, f"MI = {result.mi_bits} bits with duplicated models"
    return "MI exactly 0 when every honest model is one duplicated draw"


def _check_privacy_no_noise_no_colluders() -> str:
    case = PrivacyCase(
        n_users=4,
        t_max=0,
        d_max=0,
        k_parts=2,
        prime=5,
        adversaries=(),
        model_bound=2,
    )
    result = privacy_bruteforce(case)
    assert result.exact_zero, f"MI = {result.mi_bits} bits for the server-only view"
    return "server-only view reveals nothing beyond the sum even with T=0"


def _check_broken_rng_leaks() -> str:
    details = []
    for case in (
        _tiny_case_4_users(0, noise_mode=NOISE_CONSTANT),
        _tiny_case_6_users(0, noise_mode=NOISE_CONSTANT),
    ):
        result = privacy_bruteforce(case)
        assert not result.exact_zero, "constant noise went undetected"
        assert result.mi_bits > 0, f"MI = {result.mi_bits} should be positive"
        details.append(f"{case.n_users} users: MI = {result.mi_bits:.3f} bits")
    return "degenerate noise correctly detected: " + "; ".join(details)


def verify_privacy() -> list[CheckResult]:
    return [
        _run_check("collusion-view-independence-4-users", _check_privacy_4_users),
        _run_check("collusion-view-independence-6-users", _check_privacy_6_users),
        _run_check("nonzero-colluder-data", _check_privacy_fixed_data),
        _run_check("correlated-honest-models", _check_privacy_correlated_models),
        _run_check("server-only-view", _check_privacy_no_noise_no_colluders),
        _run_check("broken-rng-negative-control", _check_broken_rng_leaks),
    ]


SUITES = {
    "examples": verify_examples,
    "formulas": verify_formulas,
    "correctness": verify_correctness,
    "privacy": verify_privacy,
}


def run_suite(name: str) -> list[CheckResult]:
    try:
        suite = SUITES[name]
    except KeyError:
        raise ValueError(
            f"unknown suite {name!r}; choose from {sorted(SUITES)}"
        ) from None
    return suite()
