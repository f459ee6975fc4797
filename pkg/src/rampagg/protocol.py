"""Single-round aggregation protocol: share, sum in-group, relay up, recover.

The round has three phases.

intra   Every active user evaluates its share polynomial at each slot's
        evaluation point and sends the result to the user in that slot of
        its own group (its own slot is computed locally at zero cost).
        Each user then sums everything it received into one in-group
        aggregate.  Users that dropped before the round never share; their
        polynomials are simply absent from the sums, which is equivalent to
        presuming them zero.

inter   Groups feed their aggregates up the tree, slot to slot: a user adds
        the partial sums received from the matching slot of each child
        group to its own in-group aggregate and forwards the total to the
        matching slot of its parent.  A user missing any child's message
        (the child dropped, or itself sent null) is silenced: it emits an
        explicit null and stays silent for the rest of the round.

server  The last group's users do the same send toward the server.  The
        server interpolates the K+T-degree-bounded summed polynomial from
        the non-null arrivals and reads the summed model segments off its
        low-order coefficients.

Senders never know who dropped, so a message addressed to a dropped user is
still transmitted (it costs the sender symbols) but it is never delivered
and the link it would have used stays silent.  Null messages are explicit
zero-symbol transcript entries; a user that dropped before sending leaves no
entry at all.
"""

import csv
import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from random import Random
from typing import Optional, Sequence, Union

from .errors import TooManyDropouts
from .field import FieldContext
from .sharing import (
    Model,
    ModelPartition,
    NoiseBlock,
    SharePolynomial,
    make_share_poly,
    partition_model,
    recover_aggregate,
    sample_noise,
    share_at,
    sum_vectors,
)
from .topology import (
    SERVER,
    AggregationTree,
    ProtocolParams,
    UserId,
    index_of,
)

PHASE_INTRA = "intra"
PHASE_INTER = "inter"
PHASE_SERVER = "server"

PRE_INTRA = "pre_intra"
BETWEEN_ROUNDS = "between_rounds"


def eval_point_for_slot(slot: int) -> int:
    """Slot t evaluates at point t+1: distinct, non-zero, deterministic."""
    return slot + 1


class UserStatus(Enum):
    ACTIVE = "active"
    DROPPED = "dropped"
    SILENCED = "silenced"


@dataclass
class UserState:
    """Everything one user holds during a run."""

    uid: UserId
    model: Model
    partition: ModelPartition
    noise: NoiseBlock
    share_poly: SharePolynomial
    status: UserStatus = UserStatus.ACTIVE
    received_shares: dict = field(default_factory=dict)  # sender slot -> Share
    received_child_msgs: dict = field(default_factory=dict)  # child group -> msg


@dataclass(frozen=True)
class IntraAggregate:
    """One user's sum of the in-group shares it received (own included)."""

    owner: int
    values: tuple


@dataclass(frozen=True)
class InterGroupMessage:
    """A partial aggregate moving up the tree, or an explicit null."""

    sender: int
    receiver: Union[int, str]
    values: Optional[tuple]
    null_flag: bool = False

    def __post_init__(self) -> None:
        if self.null_flag and self.values is not None:
            raise ValueError("null messages carry no values")
        if not self.null_flag and self.values is None:
            raise ValueError("non-null messages must carry values")


@dataclass(frozen=True)
class MessageRecord:
    """One transcript line.  ``delivered`` is accounting metadata: a send to
    an already-dropped user costs the sender its symbols but never activates
    the link."""

    phase: str
    sender: int
    receiver: Union[int, str]
    symbols: int
    null_flag: bool
    delivered: bool = True


class Transcript:
    """Ordered log of every message of one run, with exporters and the
    counting helpers the load reports are built from."""

    def __init__(self) -> None:
        self.records: list[MessageRecord] = []

    def append(self, record: MessageRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    # -- accounting ------------------------------------------------------

    def sent_symbols_by_user(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for r in self.records:
            out[r.sender] = out.get(r.sender, 0) + r.symbols
        return out

    def server_bound_symbols(self) -> int:
        return sum(
            r.symbols
            for r in self.records
            if r.phase == PHASE_SERVER and not r.null_flag
        )

    def phase_counts(self) -> dict[str, dict[str, int]]:
        out = {
            phase: {"messages": 0, "null": 0, "symbols": 0}
            for phase in (PHASE_INTRA, PHASE_INTER, PHASE_SERVER)
        }
        for r in self.records:
            bucket = out[r.phase]
            bucket["messages"] += 1
            bucket["symbols"] += r.symbols
            if r.null_flag:
                bucket["null"] += 1
        return out

    def active_links(self) -> set[frozenset]:
        """Links that carried at least one delivered, non-null message.
        Self-addressed local computations are not links."""
        links: set[frozenset] = set()
        for r in self.records:
            if r.null_flag or not r.delivered or r.sender == r.receiver:
                continue
            links.add(frozenset((r.sender, r.receiver)))
        return links

    # -- exports -----------------------------------------------------------

    ROW_FIELDS = ("phase", "sender", "receiver", "symbols", "null")

    def rows(self) -> list[dict]:
        return [
            {
                "phase": r.phase,
                "sender": r.sender,
                "receiver": r.receiver,
                "symbols": r.symbols,
                "null": r.null_flag,
            }
            for r in self.records
        ]

    def to_csv(self, fp) -> None:
        writer = csv.DictWriter(fp, fieldnames=self.ROW_FIELDS)
        writer.writeheader()
        writer.writerows(self.rows())

    def to_jsonl(self, fp) -> None:
        for row in self.rows():
            fp.write(json.dumps(row, sort_keys=True) + "\n")


@dataclass(frozen=True)
class DropoutPlan:
    """Who drops and when.  ``pre_intra`` users never participate at all;
    ``between_rounds`` users share in the intra phase and vanish before the
    relay, so their model is already inside the group sums."""

    dropped: frozenset
    timing: str = PRE_INTRA

    def __post_init__(self) -> None:
        if self.timing not in (PRE_INTRA, BETWEEN_ROUNDS):
            raise ValueError(f"unknown dropout timing {self.timing!r}")

    @classmethod
    def none(cls) -> "DropoutPlan":
        return cls(dropped=frozenset())


@dataclass
class RunResult:
    """Outcome of one protocol run."""

    aggregate: list
    transcript: Transcript
    states: dict[int, UserState]
    server_messages: list[InterGroupMessage]
    intra_aggregates: dict[int, IntraAggregate]
    included_users: frozenset


def derive_seed(master_seed: int, label: str) -> int:
    """Stable per-stream seed derivation; independent of hash randomization."""
    digest = hashlib.sha256(f"{master_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def intra_round(
    ctx: FieldContext,
    params: ProtocolParams,
    group_states: dict[int, UserState],
    transcript: Transcript,
) -> dict[int, IntraAggregate]:
    """Run the in-group exchange for one group.

    ``group_states`` maps slot -> state.  Active users send a share to every
    slot; the self-addressed share is logged at zero symbols.  Returns the
    per-slot aggregates of every user that was active to receive them.
    """
    size = params.group_size
    seg_len = params.seg_len
    active = {t: st for t, st in group_states.items() if st.status == UserStatus.ACTIVE}
    for t_sender, st in sorted(active.items()):
        for t_recv in range(size):
            share = share_at(ctx, st.share_poly, eval_point_for_slot(t_recv))
            recv_state = group_states[t_recv]
            if t_recv == t_sender:
                st.received_shares[t_sender] = share
                transcript.append(
                    MessageRecord(
                        phase=PHASE_INTRA,
                        sender=st.uid.index,
                        receiver=st.uid.index,
                        symbols=0,
                        null_flag=False,
                    )
                )
                continue
            delivered = recv_state.status == UserStatus.ACTIVE
            transcript.append(
                MessageRecord(
                    phase=PHASE_INTRA,
                    sender=st.uid.index,
                    receiver=recv_state.uid.index,
                    symbols=seg_len,
                    null_flag=False,
                    delivered=delivered,
                )
            )
            if delivered:
                recv_state.received_shares[t_sender] = share
    out: dict[int, IntraAggregate] = {}
    for t, st in sorted(active.items()):
        shares = [st.received_shares[s].values for s in sorted(st.received_shares)]
        values = sum_vectors(shares, seg_len, ctx.p)
        out[t] = IntraAggregate(owner=st.uid.index, values=values)
    return out


def build_inter_message(
    state: UserState,
    own_aggregate: Optional[IntraAggregate],
    child_msgs: dict[int, Optional[InterGroupMessage]],
    receiver: Union[int, str],
    p: int,
) -> InterGroupMessage:
    """Combine a user's in-group aggregate with its children's partial sums.

    Any absent or null child message silences the user: the returned message
    is an explicit null and the state flips to SILENCED.
    """
    broken = any(m is None or m.null_flag for m in child_msgs.values())
    if broken or own_aggregate is None:
        state.status = UserStatus.SILENCED
        return InterGroupMessage(
            sender=state.uid.index, receiver=receiver, values=None, null_flag=True
        )
    total = own_aggregate.values
    for child_group in sorted(child_msgs):
        msg = child_msgs[child_group]
        assert msg is not None and msg.values is not None
        total = sum_vectors([total, msg.values], len(total), p)
    return InterGroupMessage(sender=state.uid.index, receiver=receiver, values=tuple(total))


def run_protocol(
    ctx: FieldContext,
    params: ProtocolParams,
    tree: AggregationTree,
    models: Sequence,
    dropout_plan: Optional[DropoutPlan] = None,
    master_seed: int = 0,
    noise_blocks: Optional[Sequence[NoiseBlock]] = None,
) -> RunResult:
    """Execute one full aggregation round deterministically.

    ``models`` holds one Model (or raw sequence) per user.  Noise is drawn
    per user from seeds derived off ``master_seed`` unless explicit
    ``noise_blocks`` are supplied.  Raises TooManyDropouts when fewer than
    K+T non-null messages reach the server.
    """
    plan = dropout_plan or DropoutPlan.none()
    n = params.n_users
    size = params.group_size
    if tree.num_groups != params.num_groups:
        raise ValueError(
            f"tree has {tree.num_groups} groups, params imply {params.num_groups}"
        )
    if len(models) != n:
        raise ValueError(f"got {len(models)} models for {n} users")
    if ctx.p <= size:
        raise ValueError(
            f"modulus {ctx.p} too small for {size} distinct non-zero evaluation points"
        )
    for u in plan.dropped:
        if not 0 <= u < n:
            raise ValueError(f"dropout index {u} outside [0, {n})")
    if noise_blocks is not None and len(noise_blocks) != n:
        raise ValueError(f"got {len(noise_blocks)} noise blocks for {n} users")

    pre_dropped = plan.dropped if plan.timing == PRE_INTRA else frozenset()

    # -- setup: partition, noise, share polynomials ------------------------
    states: dict[int, UserState] = {}
    for u in range(n):
        model = models[u] if isinstance(models[u], Model) else Model(tuple(models[u]))
        if model.length != params.model_len:
            raise ValueError(
                f"model {u} has length {model.length}, expected {params.model_len}"
            )
        partition = partition_model(model, params.k_parts)
        if noise_blocks is not None:
            noise = noise_blocks[u]
        else:
            tag = f"user{u}@{master_seed}"
            rng = Random(derive_seed(master_seed, f"noise:{u}"))
            noise = sample_noise(ctx, params.t_max, params.seg_len, rng, seed_tag=tag)
        states[u] = UserState(
            uid=UserId.from_index(u, size),
            model=model,
            partition=partition,
            noise=noise,
            share_poly=make_share_poly(partition, noise),
            status=(
                UserStatus.DROPPED if u in pre_dropped else UserStatus.ACTIVE
            ),
        )

    transcript = Transcript()

    # -- intra phase --------------------------------------------------------
    intra_aggregates: dict[int, IntraAggregate] = {}
    per_group_aggregates: dict[int, dict[int, IntraAggregate]] = {}
    for g in range(params.num_groups):
        group_states = {
            t: states[index_of(g, t, size)] for t in range(size)
        }
        agg = intra_round(ctx, params, group_states, transcript)
        per_group_aggregates[g] = agg
        for t, a in agg.items():
            intra_aggregates[a.owner] = a

    if plan.timing == BETWEEN_ROUNDS:
        for u in plan.dropped:
            states[u].status = UserStatus.DROPPED

    # -- inter + server phases, leaves first --------------------------------
    server_messages: list[InterGroupMessage] = []
    for g in tree.upward_order():
        parent = tree.parent_of(g)
        for t in range(size):
            sender_state = states[index_of(g, t, size)]
            if sender_state.status == UserStatus.DROPPED:
                continue  # a dropped user leaves no transcript entry
            child_msgs = {
                c: sender_state.received_child_msgs.get(c)
                for c in tree.children_of(g)
            }
            if parent == SERVER:
                receiver: Union[int, str] = SERVER
                phase = PHASE_SERVER
                receiver_dropped = False
            else:
                recv_index = index_of(parent, t, size)
                receiver = recv_index
                phase = PHASE_INTER
                receiver_dropped = states[recv_index].status == UserStatus.DROPPED
            msg = build_inter_message(
                sender_state,
                per_group_aggregates[g].get(t),
                child_msgs,
                receiver,
                ctx.p,
            )
            delivered = not receiver_dropped
            transcript.append(
                MessageRecord(
                    phase=phase,
                    sender=msg.sender,
                    receiver=receiver,
                    symbols=0 if msg.null_flag else params.seg_len,
                    null_flag=msg.null_flag,
                    delivered=delivered,
                )
            )
            if parent == SERVER:
                server_messages.append(msg)
            elif delivered:
                states[receiver].received_child_msgs[g] = msg  # type: ignore[index]

    # -- recovery ------------------------------------------------------------
    aggregate = server_recover(ctx, params, server_messages)
    included = frozenset(u for u in range(n) if u not in pre_dropped)
    return RunResult(
        aggregate=aggregate,
        transcript=transcript,
        states=states,
        server_messages=server_messages,
        intra_aggregates=intra_aggregates,
        included_users=included,
    )


def server_recover(
    ctx: FieldContext, params: ProtocolParams, messages: Sequence[InterGroupMessage]
) -> list:
    """Interpolate the summed polynomial from the non-null arrivals and
    return the summed model, truncated to the original length."""
    evals = []
    for msg in messages:
        if msg.null_flag:
            continue
        slot = msg.sender % params.group_size
        evals.append((eval_point_for_slot(slot), msg.values))
    need = params.k_parts + params.t_max
    if len(evals) < need:
        raise TooManyDropouts(
            f"only {len(evals)} non-null messages reached the server, "
            f"recovery needs {need}"
        )
    return recover_aggregate(
        ctx, evals, params.k_parts, params.t_max, params.model_len
    )


def server_messages_consistent(
    ctx: FieldContext, params: ProtocolParams, messages: Sequence[InterGroupMessage]
) -> bool:
    """Degree check: fit the first K+T non-null messages and verify every
    remaining one lies on the same per-coordinate polynomial."""
    from .field import horner, lagrange_coefficients

    non_null = [m for m in messages if not m.null_flag]
    need = params.k_parts + params.t_max
    if len(non_null) < need:
        return False
    points = [
        (eval_point_for_slot(m.sender % params.group_size), m.values)
        for m in non_null
    ]
    fit, rest = points[:need], points[need:]
    xs = [x for x, _ in fit]
    seg_len = len(fit[0][1])
    for i in range(seg_len):
        coeffs = lagrange_coefficients(xs, [v[i] for _, v in fit], ctx.p)
        for x, values in rest:
            if horner(coeffs, x, ctx.p) != values[i] % ctx.p:
                return False
    return True
