"""Recursive alignment of incompatible polarized indices.

A type-II index (good for the first receiver, bad for the second) of
one block is XOR-combined with a type-III index of an independent copy:
the XOR variable is bad for both receivers (frozen) while the second
variable becomes good for both.  Repeating over doubled structures
shrinks the incompatible fraction geometrically.

Blocks are numbered 0..2^k-1; indices are the 1-based per-block bit
positions.  A schedule also carries, per receiver, the decoding
dependency DAG whose acyclicity certifies successive decodability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx

from .chains import MonotonePath
from .erasure import minus_eps, plus_eps


class ScheduleError(ValueError):
    def __init__(self, msg, cycle=None):
        super().__init__(msg)
        self.cycle = cycle


@dataclass(frozen=True)
class CombinePair:
    """XOR-combine index_a of block_a (type II) with index_b of block_b."""

    block_a: int
    index_a: int
    block_b: int
    index_b: int


@dataclass
class AlignmentLevel:
    user: int
    pairs: list[CombinePair]
    leftover_II: list[tuple[int, int]]   # (block, index) unpaired
    leftover_III: list[tuple[int, int]]
    incompatible_after: dict[int, int]   # user -> remaining count, all blocks


@dataclass
class AlignmentSchedule:
    num_users: int
    blocklength: int
    levels: list[AlignmentLevel]
    base_incompatible: dict[int, int]    # user -> |II| + |III| in one block
    layouts: dict[int, list] | None = None  # user -> combined-sequence layout

    @property
    def total_blocks(self) -> int:
        return 1 << len(self.levels)

    def pairs_for_user(self, user: int) -> list[CombinePair]:
        """All combined pairs of a user, including the copies made when
        later levels duplicate already-combined structure."""
        if self.layouts is not None and user in self.layouts:
            return [
                CombinePair(ba, ia, bb, ib)
                for kind, (ba, ia), (bb, ib) in (
                    e for e in self.layouts[user] if e[0] != "raw"
                )
            ]
        return [p for lvl in self.levels if lvl.user == user for p in lvl.pairs]

    def frozen_by_combining(self, user: int) -> set[tuple[int, int]]:
        """(block, index) slots whose variable is a jointly-bad XOR."""
        return {(p.block_a, p.index_a) for p in self.pairs_for_user(user)}

    def promoted_by_combining(self, user: int) -> set[tuple[int, int]]:
        """(block, index) slots promoted to jointly good."""
        return {(p.block_b, p.index_b) for p in self.pairs_for_user(user)}

    def to_json(self) -> str:
        obj = {
            "num_users": self.num_users,
            "blocklength": self.blocklength,
            "total_blocks": self.total_blocks,
            "levels": [
                {
                    "user": lvl.user,
                    "pairs": [
                        [p.block_a, p.index_a, p.block_b, p.index_b]
                        for p in lvl.pairs
                    ],
                    "leftover_II": [list(t) for t in lvl.leftover_II],
                    "leftover_III": [list(t) for t in lvl.leftover_III],
                }
                for lvl in self.levels
            ],
        }
        return json.dumps(obj, indent=2, sort_keys=True)


def pair_indices(type_II, type_III):
    """Pair the j-th type-II index with the j-th type-III index.

    Returns (pairs, leftover_II, leftover_III); exactly min(m, n) pairs.
    """
    return pair_indices_ordered(sorted(type_II), sorted(type_III))


def pair_indices_ordered(type_II, type_III):
    """As pair_indices, but the inputs are already in decoding order."""
    a = list(type_II)
    b = list(type_III)
    q = min(len(a), len(b))
    return list(zip(a[:q], b[:q])), a[q:], b[q:]


def _shift_layout(layout, shift: int):
    out = []
    for e in layout:
        if e[0] == RAW:
            out.append((RAW, e[1] + shift, e[2]))
        else:
            _, (ba, ia), (bb, ib) = e
            out.append((XOR, (ba + shift, ia), (bb + shift, ib)))
    return out


def _raw_entries(layout):
    return [e for e in layout if e[0] == RAW]


def build_schedule(classifications, k: int, mode: str = "compound-two-user",
                   first_user: int = 1, blocklength: int | None = None,
                   receiver_paths=None) -> AlignmentSchedule:
    """Build the k-level recursive combining plan.

    ``classifications`` maps user id to an object with ``type_II`` and
    ``type_III`` index sets (1-based, common blocklength).  In
    compound-two-user mode levels alternate between the two users
    starting at ``first_user``; in k-user-sequential mode they cycle
    through users 1..K.  Every emitted schedule is validated for
    successive decodability under ``receiver_paths`` (defaults to plain
    user-concatenation orders).
    """
    if k < 0:
        raise ScheduleError("level count must be nonnegative")
    users = sorted(classifications)
    K = len(users)
    if users != list(range(1, K + 1)):
        raise ScheduleError("classifications must cover users 1..K")
    N = blocklength
    if N is None:
        N = max(
            [0]
            + [max(c.type_II | c.type_III, default=0) for c in classifications.values()]
        )
        N = 1 << max(0, (N - 1).bit_length())
        N = max(N, 1)
    # per-user evolving combined-sequence layout plus surviving II/III sets
    layout = {
        u: [(RAW, 0, i) for i in range(1, N + 1)] for u in users
    }
    surv_II = {u: {(0, i) for i in classifications[u].type_II} for u in users}
    surv_III = {u: {(0, i) for i in classifications[u].type_III} for u in users}
    base = {
        u: len(classifications[u].type_II) + len(classifications[u].type_III)
        for u in users
    }
    levels = []
    for lvl in range(1, k + 1):
        if mode == "compound-two-user":
            if K != 2:
                raise ScheduleError("compound-two-user mode needs exactly 2 users")
            user = first_user if lvl % 2 == 1 else 3 - first_user
        elif mode == "k-user-sequential":
            user = users[(lvl - 1) % K]
        else:
            raise ScheduleError(f"unknown mode {mode!r}")
        half = 1 << (lvl - 1)
        # duplicate the structure: blocks half..2*half-1 copy 0..half-1
        copies = {u: _shift_layout(layout[u], half) for u in users}
        for u in users:
            surv_II[u] |= {(b + half, i) for b, i in surv_II[u]}
            surv_III[u] |= {(b + half, i) for b, i in surv_III[u]}
        # pairing lists in combined-sequence order: the j-th surviving
        # type-II entry of the original group against the j-th surviving
        # type-III entry of the copy
        a_II = [
            (b, i) for (kind, b, i) in _raw_entries(layout[user])
            if (b, i) in surv_II[user]
        ]
        b_III = [
            (b, i) for (kind, b, i) in _raw_entries(copies[user])
            if (b, i) in surv_III[user]
        ]
        paired, left_II, left_III = pair_indices_ordered(a_II, b_III)
        pairs = [
            CombinePair(ba, ia, bb, ib) for (ba, ia), (bb, ib) in paired
        ]
        for (ba, ia), (bb, ib) in paired:
            surv_II[user].discard((ba, ia))
            surv_III[user].discard((bb, ib))
        for u in users:
            if u == user:
                layout[u] = _interleave(layout[u], copies[u], pairs)
            else:
                layout[u] = layout[u] + copies[u]
        after = {
            u: len(surv_II[u]) + len(surv_III[u]) for u in users
        }
        levels.append(AlignmentLevel(user, pairs, left_II, left_III, after))
    schedule = AlignmentSchedule(K, N, levels, base, layouts=layout)
    paths = receiver_paths or [_concatenation_path(K, N)]
    for path in paths:
        validate_successive_decodability(schedule, path)
    return schedule


def _concatenation_path(K: int, N: int) -> MonotonePath:
    seq = tuple(u for u in range(1, K + 1) for _ in range(N))
    return MonotonePath(seq, K)


def decoding_dag(schedule: AlignmentSchedule, path: MonotonePath) -> nx.DiGraph:
    """Dependency DAG of one receiver: nodes are per-block slot variables.

    Within a block, slots chain in the receiver's monotone-path order.
    For each combined pair, the XOR variable needs both block prefixes,
    the promoted variable needs the XOR variable, and the replaced slot
    needs the promoted variable.
    """
    K, N = schedule.num_users, schedule.blocklength
    if path.num_users != K or path.blocklength != N:
        raise ScheduleError("receiver path does not match schedule shape")
    g = nx.DiGraph()
    nblocks = schedule.total_blocks
    slots = list(path.user_sequence)
    # slot position of user u's j-th occurrence
    pos = {}
    counts = {}
    for s, u in enumerate(slots):
        counts[u] = counts.get(u, 0) + 1
        pos[(u, counts[u])] = s
    for b in range(nblocks):
        for s in range(len(slots) - 1):
            g.add_edge(("v", b, s), ("v", b, s + 1))
    for u in range(1, K + 1):
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
    return g


def validate_successive_decodability(schedule: AlignmentSchedule,
                                     path: MonotonePath) -> None:
    g = decoding_dag(schedule, path)
    if nx.is_directed_acyclic_graph(g):
        return
    cycle = nx.find_cycle(g)
    raise ScheduleError(
        "combining induces a circular decoding dependency: "
        + " -> ".join(str(e[0]) for e in cycle),
        cycle=cycle,
    )


def decoding_order(schedule: AlignmentSchedule, path: MonotonePath):
    """A linear extension of the dependency DAG, with parallel groups.

    Returns (order, depth) where order is the node list and depth maps
    each node to its longest-path depth; nodes of equal depth can be
    decoded in parallel.
    """
    g = decoding_dag(schedule, path)
    order = list(nx.lexicographical_topological_sort(g, key=str))
    depth = {}
    for node in order:
        preds = list(g.predecessors(node))
        depth[node] = 1 + max((depth[p] for p in preds), default=-1)
    return order, depth


def incompatible_fraction(schedule: AlignmentSchedule, user: int):
    """Exact incompatible fractions for a user, before and after each
    of that user's alignment levels (rational arithmetic)."""
    N = schedule.blocklength
    out = [Fraction(schedule.base_incompatible[user], N)]
    for lvl_idx, lvl in enumerate(schedule.levels, start=1):
        if lvl.user != user:
            continue
        blocks = 1 << lvl_idx
        out.append(Fraction(lvl.incompatible_after[user], blocks * N))
    return out


# -- combined-sequence encoding -----------------------------------------

RAW = "raw"
XOR = "xor"


def combined_layout(schedule: AlignmentSchedule, user: int):
    """Descriptor list of one user's combined sequence over all blocks.

    Entries are ("raw", block, index) or ("xor", (block_a, index_a),
    (block_b, index_b)); an xor entry is immediately followed by the raw
    entry of its promoted variable.
    """
    if schedule.layouts is None or user not in schedule.layouts:
        raise ScheduleError("schedule carries no layout for this user")
    return schedule.layouts[user]


def _interleave(a_lay, b_lay, pairs):
    out = []
    ai = bi = 0
    for p in pairs:
        ta = (RAW, p.block_a, p.index_a)
        tb = (RAW, p.block_b, p.index_b)
        while a_lay[ai] != ta:
            out.append(a_lay[ai])
            ai += 1
        while b_lay[bi] != tb:
            out.append(b_lay[bi])
            bi += 1
        out.append((XOR, (p.block_a, p.index_a), (p.block_b, p.index_b)))
        out.append(tb)
        ai += 1
        bi += 1
    out.extend(a_lay[ai:])
    out.extend(b_lay[bi:])
    return out


def align_encode(u_blocks, schedule: AlignmentSchedule, user: int = 1):
    """Map per-block bit sequences to the combined sequence of one user."""
    N = schedule.blocklength
    if len(u_blocks) != schedule.total_blocks or any(
        len(blk) != N for blk in u_blocks
    ):
        raise ValueError("block shape does not match schedule")
    out = []
    for e in combined_layout(schedule, user):
        if e[0] == RAW:
            out.append(int(u_blocks[e[1]][e[2] - 1]))
        else:
            _, (ba, ia), (bb, ib) = e
            out.append(int(u_blocks[ba][ia - 1]) ^ int(u_blocks[bb][ib - 1]))
    return out


def align_decode(combined, schedule: AlignmentSchedule, user: int = 1):
    """Inverse of align_encode."""
    N = schedule.blocklength
    layout = combined_layout(schedule, user)
    if len(combined) != len(layout):
        raise ValueError("combined sequence length mismatch")
    blocks = [[None] * N for _ in range(schedule.total_blocks)]
    xors = []
    for val, e in zip(combined, layout):
        if e[0] == RAW:
            blocks[e[1]][e[2] - 1] = int(val)
        else:
            xors.append((int(val), e[1], e[2]))
    for val, (ba, ia), (bb, ib) in xors:
        blocks[ba][ia - 1] = val ^ blocks[bb][ib - 1]
    return blocks


def combined_eps(schedule: AlignmentSchedule, user: int, base_eps):
    """Per-(block, index) erasure probabilities after combining.

    ``base_eps`` maps index (1-based) to the erasure probability of that
    bit-channel for one receiver; identical across blocks before
    combining.  XOR slots get the minus value, promoted slots the plus
    value.
    """
    nb = schedule.total_blocks
    eps = {
        (b, i): float(base_eps[i]) for b in range(nb)
        for i in range(1, schedule.blocklength + 1)
    }
    for p in schedule.pairs_for_user(user):
        ea = eps[(p.block_a, p.index_a)]
        eb = eps[(p.block_b, p.index_b)]
        eps[(p.block_a, p.index_a)] = float(minus_eps(ea, eb))
        eps[(p.block_b, p.index_b)] = float(plus_eps(ea, eb))
    return eps


def dag_to_dot(g: nx.DiGraph) -> str:
    lines = ["digraph decoding {"]
    for a, b in g.edges:
        lines.append(f'  "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines)


def raw_schedule(num_users: int, blocklength: int, level_specs,
                 base_incompatible=None) -> AlignmentSchedule:
    """Assemble a schedule from explicit per-level pair lists, without
    validation.  Intended for tests and diagnostics of improper plans."""
    levels = [
        AlignmentLevel(user, [CombinePair(*p) for p in pairs], [], [], {})
        for user, pairs in level_specs
    ]
    return AlignmentSchedule(num_users, blocklength, levels,
                             base_incompatible or {})
