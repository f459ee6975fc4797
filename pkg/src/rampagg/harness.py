"""Configuration, measurement, and reporting around the protocol core.

:func:`simulate` turns a :class:`RunConfig` into a :class:`RunReport` whose
load figures are exact rationals computed purely by counting transcript
symbols, never by evaluating the closed-form expressions they are later
compared against.  :func:`correctness_oracle` replays randomized runs against
a plain-integer summation oracle, and :func:`collect_adversary_view` gathers
exactly what a colluding set plus the server get to see.
"""

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import Mapping, Optional, Sequence

from .errors import ConfigInvalid, InvalidParams, NonConformingField
from .field import FieldContext, select_prime
from .protocol import (
    BETWEEN_ROUNDS,
    PRE_INTRA,
    DropoutPlan,
    RunResult,
    Transcript,
    derive_seed,
    run_protocol,
)
from .sharing import Model, validate_entries
from .topology import (
    AggregationTree,
    DelayModel,
    ProtocolParams,
    TreeShape,
    build_tree,
    count_edges,
    make_params,
    potential_links,
    total_delay,
)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines one run, and nothing that does not.

    A config plus its ``master_seed`` fixes models, noise, and therefore
    every byte of the report.  ``prime_override`` swaps in a hand-picked
    modulus (tagged non-conforming unless it happens to satisfy the sizing
    rule); ``assert_formula_loads`` additionally compares measured loads to
    the closed forms and refuses to run on a non-conforming field, where
    the comparison would be meaningless.
    """

    n_users: int
    t_max: int
    d_max: int
    k_parts: int
    model_len: int
    entry_bound: int
    tree_shape: TreeShape = "chain"
    dropped: tuple[int, ...] = ()
    dropout_timing: str = PRE_INTRA
    adversaries: tuple[int, ...] = ()
    master_seed: int = 0
    prime_override: Optional[int] = None
    assert_formula_loads: bool = False
    delta_inter: float = 1
    delta_intra: float = 1

    # -- (de)serialization -------------------------------------------------

    @classmethod
    def from_dict(cls, raw: Mapping) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}  # type: ignore[attr-defined]
        unknown = set(raw) - known
        if unknown:
            raise ConfigInvalid(f"unknown config field(s): {sorted(unknown)}")
        data = dict(raw)
        for key in ("dropped", "adversaries"):
            if key in data:
                data[key] = tuple(data[key])
        if "tree_shape" in data and isinstance(data["tree_shape"], Mapping):
            data["tree_shape"] = {
                int(g): (p if p == "server" else int(p))
                for g, p in data["tree_shape"].items()
            }
        return cls(**data)

    def to_dict(self) -> dict:
        out = {
            "n_users": self.n_users,
            "t_max": self.t_max,
            "d_max": self.d_max,
            "k_parts": self.k_parts,
            "model_len": self.model_len,
            "entry_bound": self.entry_bound,
            "tree_shape": (
                {str(g): p for g, p in self.tree_shape.items()}
                if isinstance(self.tree_shape, Mapping)
                else self.tree_shape
            ),
            "dropped": list(self.dropped),
            "dropout_timing": self.dropout_timing,
            "adversaries": list(self.adversaries),
            "master_seed": self.master_seed,
            "prime_override": self.prime_override,
            "assert_formula_loads": self.assert_formula_loads,
            "delta_inter": self.delta_inter,
            "delta_intra": self.delta_intra,
        }
        return out

    def replace(self, **changes) -> "RunConfig":
        data = self.to_dict()
        data["dropped"] = tuple(data["dropped"])
        data["adversaries"] = tuple(data["adversaries"])
        data["tree_shape"] = self.tree_shape
        data.update(changes)
        return RunConfig(**data)

    # -- validation ---------------------------------------------------------

    def resolve(self) -> tuple[ProtocolParams, AggregationTree, FieldContext]:
        """Validate and materialize params, tree, and field context.

        Raises ConfigInvalid with a message naming the offending field.
        """
        try:
            params = make_params(
                self.n_users,
                self.t_max,
                self.d_max,
                self.k_parts,
                self.model_len,
                self.entry_bound,
            )
        except InvalidParams as exc:
            raise ConfigInvalid(f"params: {exc}") from exc
        try:
            tree = build_tree(params.num_groups, self.tree_shape)
        except Exception as exc:
            raise ConfigInvalid(f"tree_shape: {exc}") from exc
        seen = set()
        for u in self.dropped:
            if not 0 <= u < self.n_users:
                raise ConfigInvalid(f"dropped: user {u} outside [0, {self.n_users})")
            if u in seen:
                raise ConfigInvalid(f"dropped: user {u} listed twice")
            seen.add(u)
        if len(self.dropped) > self.d_max:
            raise ConfigInvalid(
                f"dropped: {len(self.dropped)} users exceed the dropout budget "
                f"d_max={self.d_max}"
            )
        if self.dropout_timing not in (PRE_INTRA, BETWEEN_ROUNDS):
            raise ConfigInvalid(f"dropout_timing: unknown value {self.dropout_timing!r}")
        seen = set()
        for u in self.adversaries:
            if not 0 <= u < self.n_users:
                raise ConfigInvalid(
                    f"adversaries: user {u} outside [0, {self.n_users})"
                )
            if u in seen:
                raise ConfigInvalid(f"adversaries: user {u} listed twice")
            seen.add(u)
        if len(self.adversaries) > self.t_max:
            raise ConfigInvalid(
                f"adversaries: {len(self.adversaries)} users exceed the collusion "
                f"tolerance t_max={self.t_max}"
            )
        if not isinstance(self.master_seed, int):
            raise ConfigInvalid("master_seed: must be an integer")
        if self.delta_inter < 0 or self.delta_intra < 0:
            raise ConfigInvalid("delta_inter/delta_intra: must be >= 0")
        if self.prime_override is not None:
            try:
                ctx = FieldContext(
                    self.prime_override, self.entry_bound, self.n_users
                )
            except ValueError as exc:
                raise ConfigInvalid(f"prime_override: {exc}") from exc
        else:
            ctx = select_prime(self.n_users, self.entry_bound)
        if ctx.p <= params.group_size:
            raise ConfigInvalid(
                f"prime_override: {ctx.p} too small for group size "
                f"{params.group_size}"
            )
        if self.assert_formula_loads and not ctx.conforming:
            raise NonConformingField(
                "assert_formula_loads: load formulas assume the canonical "
                f"modulus; prime {ctx.p} is non-conforming"
            )
        return params, tree, ctx


@dataclass(frozen=True)
class LoadSummary:
    """Exact normalized communication loads of one transcript."""

    r_server: Fraction
    r_user_max: Fraction
    r_user_avg: Fraction
    per_user: dict


def measure_loads(
    transcript: Transcript, params: ProtocolParams, dropped: frozenset
) -> LoadSummary:
    """Count transcript symbols into normalized loads.

    Server load counts non-null server-bound symbols.  Per-user load counts
    every symbol a user transmitted, deliverable or not: a sender cannot
    know the peer dropped.  The max is taken over surviving users.
    """
    length = params.model_len
    sent = transcript.sent_symbols_by_user()
    per_user = {
        u: Fraction(sent.get(u, 0), length) for u in range(params.n_users)
    }
    survivors = [u for u in range(params.n_users) if u not in dropped]
    return LoadSummary(
        r_server=Fraction(transcript.server_bound_symbols(), length),
        r_user_max=max(per_user[u] for u in survivors),
        r_user_avg=Fraction(sum(sent.values()), params.n_users * length),
        per_user=per_user,
    )


@dataclass
class RunReport:
    """Everything :func:`simulate` measured, JSON-ready and deterministic."""

    config: RunConfig
    prime: int
    conforming_field: bool
    bits_per_symbol: int
    aggregate: list
    included_users: list
    loads: LoadSummary
    total_edges: int
    silent_edges: int
    edges_formula: int
    delay: float
    phase_counts: dict
    formula_check: Optional[dict] = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config.to_dict(),
            "prime": self.prime,
            "conforming_field": self.conforming_field,
            "bits_per_symbol": self.bits_per_symbol,
            "aggregate": list(self.aggregate),
            "included_users": list(self.included_users),
            "r_server": str(self.loads.r_server),
            "r_user_max": str(self.loads.r_user_max),
            "r_user_avg": str(self.loads.r_user_avg),
            "r_server_bits": float(self.loads.r_server * self.bits_per_symbol),
            "r_user_max_bits": float(self.loads.r_user_max * self.bits_per_symbol),
            "cutset_server_bits": math.log2(
                (self.config.entry_bound - 1) * self.config.n_users + 1
            ),
            "cutset_user_bits": math.log2(self.config.entry_bound),
            "total_edges": self.total_edges,
            "silent_edges": self.silent_edges,
            "edges_formula": self.edges_formula,
            "delay": self.delay,
            "phase_counts": self.phase_counts,
            "formula_check": self.formula_check,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def generate_models(config: RunConfig) -> list[Model]:
    """Deterministic per-config models: entries uniform in [0, entry_bound)."""
    rng = Random(derive_seed(config.master_seed, "models"))
    return [
        Model(tuple(rng.randrange(config.entry_bound) for _ in range(config.model_len)))
        for _ in range(config.n_users)
    ]


def simulate(config: RunConfig, models: Optional[Sequence[Model]] = None):
    """Run one configured round and measure it.  Returns (RunReport, RunResult)."""
    params, tree, ctx = config.resolve()
    if models is None:
        models = generate_models(config)
    else:
        models = [m if isinstance(m, Model) else Model(tuple(m)) for m in models]
        for m in models:
            validate_entries(m, config.entry_bound)
    plan = DropoutPlan(frozenset(config.dropped), config.dropout_timing)
    result = run_protocol(
        ctx, params, tree, models, plan, master_seed=config.master_seed
    )
    loads = measure_loads(result.transcript, params, plan.dropped)
    total = len(potential_links(params, tree))
    active = len(result.transcript.active_links())
    delay = total_delay(tree, DelayModel(config.delta_inter, config.delta_intra))

    formula_check = None
    if config.assert_formula_loads:
        formula_check = check_formulas(config, params, loads, total)

    report = RunReport(
        config=config,
        prime=ctx.p,
        conforming_field=ctx.conforming,
        bits_per_symbol=ctx.bits_per_symbol,
        aggregate=list(result.aggregate),
        included_users=sorted(result.included_users),
        loads=loads,
        total_edges=total,
        silent_edges=total - active,
        edges_formula=count_edges(params),
        delay=delay,
        phase_counts=result.transcript.phase_counts(),
        formula_check=formula_check,
    )
    return report, result


def check_formulas(
    config: RunConfig, params: ProtocolParams, loads: LoadSummary, total_edges: int
) -> dict:
    """Compare measured loads to the closed forms.

    The load identities hold when the run realizes exactly the designed
    number of dropouts in distinct slots and K divides L; outside that
    operating point the comparison is reported as None rather than failed.
    """
    k, t, d = params.k_parts, params.t_max, params.d_max
    slots = {u % params.group_size for u in config.dropped}
    at_design_point = (
        len(config.dropped) == d
        and len(slots) == len(config.dropped)
        and params.model_len % k == 0
        and config.dropout_timing == PRE_INTRA
    )
    out = {
        "edges_expected": count_edges(params),
        "edges_match": total_edges == count_edges(params),
        "r_server_expected": str(Fraction(k + t, k)),
        "r_user_max_expected": str(Fraction(k + t + d, k)),
        "at_design_point": at_design_point,
        "r_server_match": None,
        "r_user_max_match": None,
    }
    if at_design_point:
        out["r_server_match"] = loads.r_server == Fraction(k + t, k)
        out["r_user_max_match"] = loads.r_user_max == Fraction(k + t + d, k)
    return out


# ---- adversary view ---------------------------------------------------------


@dataclass(frozen=True)
class AdversaryView:
    """Exactly what a colluding set of users plus the server observe.

    Per adversary: the intra shares it received (self excluded; its own
    data is listed separately), the child messages it received, and its own
    model and noise.  Plus every message that reached the server, nulls
    included.  Nothing addressed to anyone else appears.
    """

    intra_shares: dict  # adversary -> {sender slot -> Share}
    child_messages: dict  # adversary -> {child group -> InterGroupMessage}
    server_messages: tuple
    own_models: dict
    own_noise: dict


def collect_adversary_view(
    result: RunResult, adversaries: Sequence[int]
) -> AdversaryView:
    """Assemble the view of ``adversaries`` from a finished run."""
    intra: dict = {}
    child: dict = {}
    own_models: dict = {}
    own_noise: dict = {}
    for a in sorted(set(adversaries)):
        state = result.states[a]
        intra[a] = {
            slot: share
            for slot, share in sorted(state.received_shares.items())
            if slot != state.uid.slot
        }
        child[a] = dict(sorted(state.received_child_msgs.items()))
        own_models[a] = state.model
        own_noise[a] = state.noise
    return AdversaryView(
        intra_shares=intra,
        child_messages=child,
        server_messages=tuple(result.server_messages),
        own_models=own_models,
        own_noise=own_noise,
    )


# ---- plain-integer correctness oracle ---------------------------------------


def plain_sum(models: Sequence[Model], included) -> list[int]:
    """Entry-wise integer sum of the included models; no field arithmetic."""
    included = sorted(included)
    length = models[included[0]].length if included else 0
    return [sum(models[u].entries[i] for u in included) for i in range(length)]


@dataclass
class OracleSummary:
    trials: int
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures


def correctness_oracle(
    config: RunConfig, trials: int, master_seed: Optional[int] = None
) -> OracleSummary:
    """Replay ``trials`` randomized runs of ``config``'s shape against the
    plain-integer summation oracle.

    Each trial draws fresh models and a fresh dropout set of size 0..d_max
    (uniformly, dropout slots unrestricted).  A conforming field guarantees
    the true integer sum stays below the modulus, so recovered must equal
    the oracle's plain sum entry for entry.
    """
    params, tree, ctx = config.resolve()
    if not ctx.conforming:
        raise NonConformingField(
            "correctness_oracle: comparison against plain integer sums "
            f"requires a conforming modulus, got {ctx.p}"
        )
    seed = config.master_seed if master_seed is None else master_seed
    failures = []
    for trial in range(trials):
        rng = Random(derive_seed(seed, f"oracle:{trial}"))
        models = [
            Model(
                tuple(
                    rng.randrange(config.entry_bound)
                    for _ in range(config.model_len)
                )
            )
            for _ in range(config.n_users)
        ]
        n_drop = rng.randint(0, config.d_max)
        dropped = frozenset(rng.sample(range(config.n_users), n_drop))
        plan = DropoutPlan(dropped, config.dropout_timing)
        result = run_protocol(
            ctx, params, tree, models, plan, master_seed=derive_seed(seed, f"run:{trial}")
        )
        expected = plain_sum(models, result.included_users)
        if list(result.aggregate) != expected:
            failures.append(
                {"trial": trial, "dropped": sorted(dropped), "got": list(result.aggregate), "expected": expected}
            )
    return OracleSummary(trials=trials, failures=failures)
