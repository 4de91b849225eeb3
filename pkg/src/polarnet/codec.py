"""End-to-end compound successive-cancellation codec.

The exact pipeline runs on the parity-linked erasure MAC family: every
receiver sees the cross parities of its decode set cleanly plus an
anchor stream through a per-position erasure pattern, so each block
reduces to a single anchor polar tree shared by all of that receiver's
users, and the decoder is an exact three-valued (0/1/unknown) message
passer driven along the alignment schedule's dependency order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .alignment import (
    AlignmentSchedule,
    build_schedule,
    combined_eps,
    decoding_dag,
)
from .chains import (
    MonotonePath,
    NotFoundError,
    PreconditionError,
    find_two_user_split,
    find_k_user_split,
    two_user_path,
)
from .erasure import (
    ParityLinkedErasureMAC,
    UNKNOWN,
    polar_transform_bits,
    sc_tree_generator,
    sym_xor,
)
from .polar import IndexClassification, classify


@dataclass(frozen=True)
class ReceiverSpec:
    """One receiver: which users it decodes and through which channel."""

    mac: ParityLinkedErasureMAC
    decode_set: tuple[int, ...]  # global user ids, sorted

    def __post_init__(self):
        if len(self.decode_set) != self.mac.num_users:
            raise ValueError("decode set size must match the MAC user count")


@dataclass
class CompoundCodeSpec:
    num_users: int
    N: int
    k: int
    receivers: list[ReceiverSpec]
    paths: list[MonotonePath]            # per receiver, over its decode set
    schedule: AlignmentSchedule
    info_sets: dict[int, list]           # user -> sorted (block, index) vars
    frozen_sets: dict[int, list]
    thresholds: tuple[float, float]
    target: tuple[float, ...]
    receiver_rates: list[dict[int, float]]   # per receiver: user -> R_j
    jointly_good: dict[int, int]         # user -> |G inter G|
    var_eps: list[dict]                  # per receiver: (user,(block,index)) -> eps
    shortfall: dict[int, float] = field(default_factory=dict)

    @property
    def M(self) -> int:
        return (1 << self.k) * self.N

    @property
    def achieved_rates(self) -> dict[int, float]:
        return {u: len(self.info_sets[u]) / self.M for u in self.info_sets}

    def to_json(self) -> str:
        obj = {
            "num_users": self.num_users,
            "N": self.N,
            "k": self.k,
            "M": self.M,
            "thresholds": list(self.thresholds),
            "target": list(self.target),
            "receivers": [
                {
                    "decode_set": list(r.decode_set),
                    "eps_tile": list(r.mac.eps_tile),
                    "path": p.serialize(),
                }
                for r, p in zip(self.receivers, self.paths)
            ],
            "info_sets": {
                str(u): [list(v) for v in vs] for u, vs in self.info_sets.items()
            },
            "achieved_rates": {str(u): r for u, r in self.achieved_rates.items()},
            "jointly_good": {str(u): c for u, c in self.jointly_good.items()},
            "schedule": json.loads(self.schedule.to_json()),
        }
        return json.dumps(obj, indent=2, sort_keys=True)


def _per_user_stats(mac: ParityLinkedErasureMAC, path: MonotonePath):
    """Per-user per-index MI vectors under one receiver's path."""
    prof = mac.path_mi_profile(np.asarray(path.user_sequence))
    N = path.blocklength
    out = {u: np.empty(N) for u in range(1, path.num_users + 1)}
    counts = {u: 0 for u in out}
    for s, u in enumerate(path.user_sequence):
        out[u][counts[u]] = prof[s]
        counts[u] += 1
    return out


def _receiver_target(target, rec: ReceiverSpec, strategy: str):
    """Per-receiver dominant-face rates coordinatewise above the target."""
    sub = [target[u - 1] for u in rec.decode_set]
    slack = rec.mac.sum_capacity() - sum(sub)
    if slack < -1e-9:
        raise PreconditionError(
            f"target sum {sum(sub):.6f} exceeds receiver sum capacity "
            f"{rec.mac.sum_capacity():.6f}"
        )
    if strategy == "equal-sum":
        bump = [slack / len(sub)] * len(sub)
    elif strategy == "unequal-sum":
        # put the extra rate on the first decoded user, spilling over
        bump = [0.0] * len(sub)
        left = slack
        for j in range(len(sub)):
            room = rec.mac.subset_bound(1) - sub[j]
            take = min(left, room)
            bump[j] = take
            left -= take
        if left > 1e-9:
            bump[0] += left
    else:
        raise PreconditionError(f"unknown strategy {strategy!r}")
    return tuple(s + b for s, b in zip(sub, bump))


def _find_receiver_path(rec: ReceiverSpec, rates, N: int, eps: float):
    k = len(rec.decode_set)
    if k == 1:
        return MonotonePath((1,) * N, 1)
    if k == 2:
        return find_two_user_split(rec.mac, rates, eps, N, N_min=N)
    res = find_k_user_split(rec.mac, rates, eps, N, N_min=N)
    return res.path


def build_code(receivers, target, N: int, k: int,
               delta_good: float = 0.99, delta_bad: float = 0.01,
               strategy: str = "equal-sum",
               split_eps: float = 0.05) -> CompoundCodeSpec:
    """Construct the aligned compound code for a rate target.

    ``receivers`` is a list of ReceiverSpec (L <= 2 for end-to-end
    decoding); ``target`` gives one rate per global user.  Per receiver
    a monotone split path approximating the (coordinatewise dominated)
    per-receiver rates is found, indices are classified across the two
    receivers, combined over k alignment levels, and the jointly good
    variables become the information sets.
    """
    if N & (N - 1):
        raise PreconditionError("N must be a power of two")
    if not receivers:
        raise PreconditionError("at least one receiver required")
    num_users = max(max(r.decode_set) for r in receivers)
    covered = set()
    for r in receivers:
        covered |= set(r.decode_set)
    if covered != set(range(1, num_users + 1)):
        raise PreconditionError("every user must be decoded somewhere")
    target = tuple(float(t) for t in target)
    if len(target) != num_users:
        raise PreconditionError("one target rate per user required")

    paths = []
    stats = []   # per receiver: user(global) -> mi vector
    for rec in receivers:
        rates = _receiver_target(target, rec, strategy)
        path = _find_receiver_path(rec, rates, N, split_eps)
        paths.append(path)
        local = _per_user_stats(rec.mac, path)
        stats.append({
            rec.decode_set[j]: local[j + 1] for j in range(len(rec.decode_set))
        })

    # classification per user across the (up to two) receivers that
    # decode it; users seen by one receiver only have no incompatibility
    cls = {}
    for u in range(1, num_users + 1):
        seen = [s[u] for s in stats if u in s]
        my = seen[0]
        other = seen[1] if len(seen) > 1 else seen[0]
        cls[u] = classify(my, other, delta_good, delta_bad)

    mode = "compound-two-user" if (num_users == 2 and len(receivers) == 2
                                   and all(len(r.decode_set) == 2 for r in receivers)) \
        else "k-user-sequential"
    val_paths = []
    for rec, p in zip(receivers, paths):
        val_paths.append((p, rec.decode_set))
    schedule = build_schedule(cls, k, mode=mode, blocklength=N,
                              receiver_paths=None)
    for p, ds in val_paths:
        _validate_receiver(schedule, p, ds)

    M = (1 << k) * N
    var_eps = []
    for rec, s in zip(receivers, stats):
        per = {}
        for u in range(1, num_users + 1):
            if u in s:
                base = {i: 1.0 - s[u][i - 1] for i in range(1, N + 1)}
            else:
                base = {i: 1.0 for i in range(1, N + 1)}  # not decoded here
            eps_map = combined_eps(schedule, u, base)
            for key, v in eps_map.items():
                per[(u, key)] = v
        var_eps.append(per)

    info_sets = {u: [] for u in range(1, num_users + 1)}
    frozen_sets = {u: [] for u in range(1, num_users + 1)}
    jointly_good = {}
    nb = 1 << k
    for u in range(1, num_users + 1):
        xor_slots = schedule.frozen_by_combining(u)
        good = 0
        for b in range(nb):
            for i in range(1, N + 1):
                var = (b, i)
                rels = [
                    ve[(u, var)] for rec, ve in zip(receivers, var_eps)
                    if u in rec.decode_set
                ]
                ok = all(1.0 - e > delta_good for e in rels)
                if ok and var not in xor_slots:
                    good += 1
                    info_sets[u].append(var)
                else:
                    frozen_sets[u].append(var)
        jointly_good[u] = good

    receiver_rates = []
    for rec, ve in zip(receivers, var_eps):
        rr = {}
        for u in rec.decode_set:
            tot = sum(1.0 - ve[(u, (b, i))] for b in range(nb)
                      for i in range(1, N + 1))
            rr[u] = tot / M
        receiver_rates.append(rr)

    spec = CompoundCodeSpec(
        num_users=num_users, N=N, k=k, receivers=list(receivers),
        paths=paths, schedule=schedule, info_sets=info_sets,
        frozen_sets=frozen_sets, thresholds=(delta_good, delta_bad),
        target=target, receiver_rates=receiver_rates,
        jointly_good=jointly_good, var_eps=var_eps,
    )
    for u in range(1, num_users + 1):
        want = min(rr[u] for rr in receiver_rates if u in rr)
        have = jointly_good[u] / M
        if have < want - split_eps:
            spec.shortfall[u] = want - have
    return spec


def _validate_receiver(schedule: AlignmentSchedule, path: MonotonePath,
                       decode_set) -> None:
    """Successive-decodability check for a decode-set receiver."""
    from .alignment import ScheduleError
    import networkx as nx

    N = schedule.blocklength
    slots = list(path.user_sequence)
    pos = {}
    counts = {}
    for s, lu in enumerate(slots):
        u = decode_set[lu - 1]
        counts[u] = counts.get(u, 0) + 1
        pos[(u, counts[u])] = s
    g = nx.DiGraph()
    for b in range(schedule.total_blocks):
        for s in range(len(slots) - 1):
            g.add_edge(("v", b, s), ("v", b, s + 1))
    for u in decode_set:
        for p in schedule.pairs_for_user(u):
            sa = pos[(u, p.index_a)]
            sb = pos[(u, p.index_b)]
            xnode = ("x", p.block_a, sa, p.block_b, sb)
            if sa > 0:
                g.add_edge(("v", p.block_a, sa - 1), xnode)
            if sb > 0:
                g.add_edge(("v", p.block_b, sb - 1), xnode)
            g.add_edge(xnode, ("v", p.block_b, sb))
            g.add_edge(("v", p.block_b, sb), ("v", p.block_a, sa))
    if not nx.is_directed_acyclic_graph(g):
        cycle = nx.find_cycle(g)
        raise ScheduleError("receiver decoding order is cyclic", cycle=cycle)


# -- encoding ------------------------------------------------------------


def encode(spec: CompoundCodeSpec, messages, frozen_value: int = 0):
    """Map per-user message bit arrays to per-user codewords.

    ``messages[u]`` has batch shape (..., |info_u|).  Returns
    ``codewords[u]`` of shape (..., total_blocks, N) and the underlying
    transform-domain blocks (needed by the channel simulator).
    """
    nb = spec.schedule.total_blocks
    N = spec.N
    u_blocks = {}
    for u in range(1, spec.num_users + 1):
        msg = np.asarray(messages[u], dtype=np.int8)
        if msg.shape[-1] != len(spec.info_sets[u]):
            raise ValueError(f"user {u}: message length mismatch")
        batch = msg.shape[:-1]
        vals = np.full(batch + (nb, N), frozen_value, dtype=np.int8)
        for j, (b, i) in enumerate(spec.info_sets[u]):
            vals[..., b, i - 1] = msg[..., j]
        # xor slots carry the frozen XOR variable; the actual raw bit is
        # reconstructed from the promoted partner
        for p in spec.schedule.pairs_for_user(u):
            x = vals[..., p.block_a, p.index_a - 1].copy()
            vals[..., p.block_a, p.index_a - 1] = (
                x ^ vals[..., p.block_b, p.index_b - 1]
            )
        u_blocks[u] = vals
    codewords = {u: polar_transform_bits(v) for u, v in u_blocks.items()}
    return codewords, u_blocks


# -- decoding ------------------------------------------------------------


class _TreeCursor:
    """Sequential interface to one block's batched erasure SC tree."""

    def __init__(self, leaf_msgs):
        self.gen = sc_tree_generator(np.asarray(leaf_msgs, dtype=np.int8))
        self.values = {}
        try:
            idx, post = next(self.gen)
        except StopIteration:
            idx, post = None, None
        self.pending = idx
        self.posterior = post

    def peek(self, index: int):
        # index is 1-based; generator offsets are 0-based
        if self.pending != index - 1:
            raise RuntimeError("decoder advanced out of order")
        return self.posterior

    def push(self, index: int, value):
        post = self.peek(index)
        self.values[index] = np.asarray(value, dtype=np.int8)
        try:
            idx, p = self.gen.send(self.values[index])
            self.pending, self.posterior = idx, p
        except StopIteration:
            self.pending, self.posterior = None, None


def sc_decode(spec: CompoundCodeSpec, receiver: int, outputs):
    """Decode one receiver's observations.

    ``outputs`` is the dict produced by :func:`transmit` for this
    receiver: anchor leaf symbols per block (batch, nb, N) with 2 for
    erased, plus exact parity streams per decoded user.  Returns
    (messages, failure) where messages[u] has shape (batch, |info_u|)
    and failure flags trials in which some requested info bit stayed
    unresolved.
    """
    rec = spec.receivers[receiver]
    path = spec.paths[receiver]
    ds = rec.decode_set
    N = spec.N
    nb = spec.schedule.total_blocks
    anchor = np.asarray(outputs["anchor"], dtype=np.int8)
    batch = anchor.shape[:-2]
    # transform-domain offsets u_j = t xor offset_j per block
    offsets = {ds[0]: np.zeros(batch + (nb, N), dtype=np.int8)}
    for u in ds[1:]:
        offsets[u] = polar_transform_bits(
            np.asarray(outputs["parity"][u], dtype=np.int8)
        )
    xor_slots = {u: spec.schedule.frozen_by_combining(u) for u in ds}
    promoted = {}
    for u in ds:
        for p in spec.schedule.pairs_for_user(u):
            promoted[(u, p.block_b, p.index_b)] = p
    info = {u: set(spec.info_sets[u]) for u in ds}
    cursors = [_TreeCursor(anchor[..., b, :]) for b in range(nb)]
    failure = np.zeros(batch, dtype=bool)
    var_values = {}

    def record(u, b, i, val):
        var_values[(u, b, i)] = val

    slots = list(path.user_sequence)
    order = _linear_extension(spec, receiver)
    occ = {}
    for (b, s) in order:
        lu = slots[s]
        u = ds[lu - 1]
        occ[(b, u)] = occ.get((b, u), 0) + 1
        i = occ[(b, u)]
        cur = cursors[b]
        if i in cur.values:
            val = sym_xor(cur.values[i], offsets[u][..., b, i - 1])
            record(u, b, i, val)
            continue
        off = offsets[u][..., b, i - 1]
        if (b, i) in xor_slots[u]:
            # frozen XOR variable; raw bit follows from the partner
            pair = next(
                p for p in spec.schedule.pairs_for_user(u)
                if (p.block_a, p.index_a) == (b, i)
            )
            val = var_values[(u, pair.block_b, pair.index_b)]  # xor var is 0
            cur.push(i, sym_xor(val, off))
            record(u, b, i, val)
            continue
        post = cur.peek(i)
        own = sym_xor(post, off)
        if (u, b, i) in promoted:
            pair = promoted[(u, b, i)]
            pcur = cursors[pair.block_a]
            if pair.index_a in pcur.values:
                alt_tree = pcur.values[pair.index_a]
            else:
                alt_tree = pcur.peek(pair.index_a)
            alt_var_a = sym_xor(alt_tree, offsets[u][..., pair.block_a,
                                                     pair.index_a - 1])
            alt = alt_var_a  # xor variable frozen to 0: u_b = 0 ^ u_a
            est = np.where(own <= 1, own, alt).astype(np.int8)
        else:
            est = own
        if (b, i) in info[u]:
            failure |= est > 1
            val = np.where(est <= 1, est, 0).astype(np.int8)
        else:
            val = np.zeros_like(est)  # frozen to zero
        cur.push(i, sym_xor(val, off))
        record(u, b, i, val)

    messages = {}
    for u in ds:
        cols = [var_values[(u, b, i)] for (b, i) in spec.info_sets[u]]
        messages[u] = (
            np.stack(cols, axis=-1) if cols
            else np.zeros(batch + (0,), dtype=np.int8)
        )
    return messages, failure


def _linear_extension(spec: CompoundCodeSpec, receiver: int):
    """Dependency-respecting (block, slot) order for one receiver."""
    rec = spec.receivers[receiver]
    path = spec.paths[receiver]
    ds = rec.decode_set
    N = spec.N
    nb = spec.schedule.total_blocks
    slots = list(path.user_sequence)
    pos = {}
    counts = {}
    for s, lu in enumerate(slots):
        u = ds[lu - 1]
        counts[u] = counts.get(u, 0) + 1
        pos[(u, counts[u])] = s
    import networkx as nx

    g = nx.DiGraph()
    nodes = [(b, s) for b in range(nb) for s in range(len(slots))]
    g.add_nodes_from(nodes)
    for b in range(nb):
        for s in range(len(slots) - 1):
            g.add_edge((b, s), (b, s + 1))
    for u in ds:
        for p in spec.schedule.pairs_for_user(u):
            sa = pos[(u, p.index_a)]
            sb = pos[(u, p.index_b)]
            if sa > 0:
                g.add_edge((p.block_a, sa - 1), (p.block_b, sb))
            g.add_edge((p.block_b, sb), (p.block_a, sa))
    return list(nx.lexicographical_topological_sort(g))


# -- channel simulation --------------------------------------------------


def transmit(spec: CompoundCodeSpec, receiver: int, codewords, rng):
    """Sample one receiver's observations of the transmitted codewords."""
    rec = spec.receivers[receiver]
    ds = rec.decode_set
    nb = spec.schedule.total_blocks
    N = spec.N
    anchor_x = np.asarray(codewords[ds[0]], dtype=np.int8)
    leaf_eps = rec.mac.leaf_eps(N)
    erased = rng.random(anchor_x.shape) < leaf_eps
    anchor = np.where(erased, UNKNOWN, anchor_x).astype(np.int8)
    parity = {
        u: (np.asarray(codewords[u], dtype=np.int8) ^ anchor_x)
        for u in ds[1:]
    }
    return {"anchor": anchor, "parity": parity}


@dataclass
class TransmissionRecord:
    codewords: dict
    outputs: list
    decoded: list
    errors: list


def _simulate_chunk(spec: CompoundCodeSpec, t: int, seed: int, ci: int):
    rng = np.random.Generator(np.random.Philox(key=[seed, ci]))
    msgs = {
        u: rng.integers(0, 2, size=(t, len(spec.info_sets[u])),
                        dtype=np.int8)
        for u in range(1, spec.num_users + 1)
    }
    codewords, _ = encode(spec, msgs)
    errors = [{u: 0 for u in rec.decode_set} for rec in spec.receivers]
    for r in range(len(spec.receivers)):
        outputs = transmit(spec, r, codewords, rng)
        est, fail = sc_decode(spec, r, outputs)
        for u in spec.receivers[r].decode_set:
            bad = (est[u] != msgs[u]).any(axis=-1) | fail
            errors[r][u] += int(bad.sum())
    return errors


def simulate(spec: CompoundCodeSpec, trials: int, seed: int = 0,
             chunk: int = 2048, threads: int = 1):
    """Monte-Carlo block-error simulation, deterministic given the seed.

    Trials are split into fixed-size chunks whose RNG streams are keyed
    by (seed, chunk index), so the result is byte-identical under any
    parallel schedule.  Returns per-receiver per-user block error
    counts.
    """
    sizes = []
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        sizes.append(t)
        done += t
    errors = [{u: 0 for u in rec.decode_set} for rec in spec.receivers]
    if threads > 1 and len(sizes) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda a: _simulate_chunk(spec, a[1], seed, a[0]),
                enumerate(sizes),
            ))
    else:
        parts = [_simulate_chunk(spec, t, seed, ci)
                 for ci, t in enumerate(sizes)]
    for part in parts:
        for r, per in enumerate(part):
            for u, c in per.items():
                errors[r][u] += c
    return errors, trials


# -- theorem quantities --------------------------------------------------


@dataclass
class Theorem1Report:
    per_user: dict
    passed_i: bool
    passed_ii: bool


def theorem1_check(spec: CompoundCodeSpec, eps: float) -> Theorem1Report:
    """Gap report for the two achievability conditions.

    Condition (i): per user, min over receivers of the path rate is
    within eps of the target.  Condition (ii): the jointly good fraction
    exceeds that minimum minus eps.
    """
    per_user = {}
    ok_i = ok_ii = True
    for u in range(1, spec.num_users + 1):
        rmins = [rr[u] for rr in spec.receiver_rates if u in rr]
        rmin = min(rmins)
        frac = spec.jointly_good[u] / spec.M
        gap_i = abs(rmin - spec.target[u - 1])
        gap_ii = rmin - frac
        per_user[u] = {
            "min_rate": rmin,
            "target": spec.target[u - 1],
            "jointly_good_fraction": frac,
            "gap_i": gap_i,
            "gap_ii": gap_ii,
            "pass_i": gap_i < eps,
            "pass_ii": gap_ii < eps,
        }
        ok_i &= gap_i < eps
        ok_ii &= gap_ii < eps
    return Theorem1Report(per_user, ok_i, ok_ii)
