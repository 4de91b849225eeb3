"""Monotone chain rules for K-user MACs.

A monotone path is a sequence over user ids in which the j-th
occurrence of user u stands for that user's j-th transformed bit.  Rate
evaluation, the two-user sweep construction, and the K-user recursive
split all run on exact entropy evaluators from :mod:`polarnet.exact`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .channels import DiscreteChannel, UnsupportedChannelError
from .erasure import ParityLinkedErasureMAC, two_user_adder_equivalent
from .exact import Adder3Evaluator, BruteForceEvaluator, ParityLinkedEvaluator


class PreconditionError(ValueError):
    pass


class NotFoundError(RuntimeError):
    def __init__(self, msg, best_gap=None):
        super().__init__(msg)
        self.best_gap = best_gap


@dataclass(frozen=True)
class MonotonePath:
    """User-id sequence b^{KN}; each user appears exactly N times."""

    user_sequence: tuple[int, ...]
    num_users: int

    def __post_init__(self):
        seq = tuple(int(u) for u in self.user_sequence)
        object.__setattr__(self, "user_sequence", seq)
        counts = {}
        for u in seq:
            counts[u] = counts.get(u, 0) + 1
        if set(counts) != set(range(1, self.num_users + 1)):
            raise ValueError("user ids must be exactly 1..K")
        if len(set(counts.values())) != 1:
            raise ValueError("every user must appear equally often")

    @property
    def blocklength(self) -> int:
        return len(self.user_sequence) // self.num_users

    def runs(self) -> list[tuple[int, int]]:
        out = []
        for u in self.user_sequence:
            if out and out[-1][0] == u:
                out[-1] = (u, out[-1][1] + 1)
            else:
                out.append((u, 1))
        return out

    def serialize(self) -> str:
        return " ".join(f"{u}^{r}" for u, r in self.runs())

    @classmethod
    def parse(cls, text: str, num_users: int | None = None) -> "MonotonePath":
        seq = []
        for token in text.split():
            m = re.fullmatch(r"(\d+)\^(\d+)", token)
            if not m:
                raise ValueError(f"bad run token {token!r}")
            seq.extend([int(m.group(1))] * int(m.group(2)))
        return cls(tuple(seq), num_users or max(seq))

    def scaled(self, factor: int) -> "MonotonePath":
        if factor < 1 or factor & (factor - 1):
            raise ValueError("scale factor must be a power of two")
        seq = []
        for u, r in self.runs():
            seq.extend([u] * (r * factor))
        return MonotonePath(tuple(seq), self.num_users)

    def user_positions(self, user: int) -> list[int]:
        return [i for i, u in enumerate(self.user_sequence) if u == user]


def scale_path(path: MonotonePath, factor: int) -> MonotonePath:
    """Multiply every run length by a power-of-two factor."""
    return path.scaled(factor)


def two_user_path(i: int, N: int) -> MonotonePath:
    """The split form: i symbols of user 1, all of user 2, the rest of 1."""
    seq = (1,) * i + (2,) * N + (1,) * (N - i)
    return MonotonePath(seq, 2)


def make_evaluator(mac, N: int):
    """Pick an exact entropy evaluator for the MAC at blocklength N."""
    if isinstance(mac, ParityLinkedErasureMAC):
        return ParityLinkedEvaluator(mac, N)
    if isinstance(mac, DiscreteChannel):
        K = mac.num_senders
        if K == 2 and _is_adder(mac, 2):
            return ParityLinkedEvaluator(two_user_adder_equivalent(), N)
        if K == 3 and _is_adder(mac, 3) and 2 * N <= 20:
            return Adder3Evaluator(N)
        return BruteForceEvaluator(mac, N)
    raise UnsupportedChannelError(f"no evaluator for {type(mac).__name__}")


def _is_adder(mac: DiscreteChannel, K: int) -> bool:
    ref = DiscreteChannel.binary_adder(K)
    return (
        mac.input_arities == ref.input_arities
        and mac.output_arity == ref.output_arity
        and np.allclose(mac.kernel, ref.kernel)
    )


@dataclass(frozen=True)
class PathRateProfile:
    per_index_mi: tuple[float, ...]
    rate_tuple: tuple[float, ...]
    mode: str = "exact-erasure"

    @property
    def sum_rate(self) -> float:
        return float(sum(self.rate_tuple))


def path_rates(mac, path: MonotonePath, evaluator=None) -> PathRateProfile:
    """Per-index conditional MIs and per-user rates of a monotone path."""
    N = path.blocklength
    K = path.num_users
    ev = evaluator or make_evaluator(mac, N)
    if isinstance(mac, ParityLinkedErasureMAC):
        mi = mac.path_mi_profile(np.asarray(path.user_sequence))
        mode = "exact-erasure"
    elif isinstance(ev, ParityLinkedEvaluator):
        mi = ev.mac.path_mi_profile(np.asarray(path.user_sequence))
        mode = "exact-erasure"
    else:
        lens = [0] * K
        prev = ev.cond_entropy(lens)
        mi = np.empty(K * N)
        for i, u in enumerate(path.user_sequence):
            lens[u - 1] += 1
            cur = ev.cond_entropy(lens)
            mi[i] = 1.0 - (cur - prev)
            prev = cur
        mode = "exact-enumeration"
    rates = np.zeros(K)
    for i, u in enumerate(path.user_sequence):
        rates[u - 1] += mi[i]
    rates /= N
    return PathRateProfile(tuple(float(v) for v in mi), tuple(float(r) for r in rates), mode)


def sum_capacity(mac, N: int = 4, evaluator=None) -> float:
    """(1/N) I(all inputs; Y^N) per channel use."""
    if isinstance(mac, ParityLinkedErasureMAC):
        return mac.sum_capacity()
    ev = evaluator or make_evaluator(mac, N)
    full = (ev.N,) * ev.K
    return ev.K - ev.cond_entropy(full) / ev.N


def _two_user_rate_curves(ev, N: int):
    """R_1(i), R_2(i) for the split path, all i at once."""
    # R_2(i) = (1/N) I(V^N; Y, U^i); R_1 = sum rate - R_2
    h_u = ev.sweep_entropies((0, 0), 1)          # H(U^i | Y)
    h_uv = ev.sweep_entropies((0, N), 1)         # H(U^i, V^N | Y)
    r2 = (N - (h_uv - h_u)) / N
    srate = ev.K - ev.cond_entropy((N, N)) / N
    r1 = srate - r2
    return r1, r2, srate


def find_two_user_split(mac, target, eps: float, N_max: int,
                        N_min: int = 4) -> MonotonePath:
    """Find (1^i, 2^N, 1^{N-i}) approximating a dominant-face rate pair.

    Sweeps i upward; the first rate moves by at most 1/N per step, so a
    fine enough blocklength always lands within eps of the target.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    target = tuple(float(t) for t in target)
    best_gap = None
    N = N_min
    while N <= N_max:
        ev = make_evaluator(mac, N)
        r1, r2, srate = _two_user_rate_curves(ev, N)
        if abs(sum(target) - srate) > eps / 2:
            raise PreconditionError(
                f"target sum {sum(target):.6f} differs from sum capacity "
                f"{srate:.6f} by more than eps/2"
            )
        gaps = np.maximum(np.abs(r1 - target[0]), np.abs(r2 - target[1]))
        i = int(np.argmin(gaps))
        gap = float(gaps[i])
        best_gap = gap if best_gap is None else min(best_gap, gap)
        if gap < eps:
            return two_user_path(i, N)
        N *= 2
    raise NotFoundError(
        f"no split within eps={eps} up to N_max={N_max}", best_gap=best_gap
    )


@dataclass
class SplitDecision:
    """One tightness decision of the recursive K-user construction."""

    lead: int
    i0: int
    subset: tuple[int, ...]
    lhs: float
    rhs: float
    context: tuple[int, ...]  # per-user consumed prefix before this sweep


@dataclass
class KUserSplit:
    path: MonotonePath
    rates: tuple[float, ...]
    targets: tuple[float, ...]
    decisions: list[SplitDecision]
    projected: bool = False

    @property
    def max_gap(self) -> float:
        return max(abs(r - t) for r, t in zip(self.rates, self.targets))


def _subset_mi(ev, ctx, subset) -> float:
    """(1/N) I(U_subset^N; Y, current context prefixes)."""
    N = ev.N
    with_j = list(ctx)
    for u in subset:
        with_j[u - 1] = N
    h1 = ev.cond_entropy(with_j)
    h0 = ev.cond_entropy(ctx)
    return (len(subset) * N - (h1 - h0)) / N


def find_k_user_split(mac, target, eps: float, N_max: int,
                      N_min: int = 4) -> KUserSplit:
    """Recursive construction of a K-user monotone path for a face target.

    Sweeps the lead user's prefix until some subset constraint over the
    remaining users becomes tight (loose equality within 1/N), recurses
    on the tight subset with the lead prefix added to the output, then
    on the complement with the subset's full blocks added, and cascades
    the pieces.  Ties among simultaneously tight subsets are broken by
    smallest cardinality, then lexicographically.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    target = tuple(float(t) for t in target)
    K = len(target)
    best = None
    N = N_min
    while N <= N_max:
        try:
            ev = make_evaluator(mac, N)
        except Exception:
            break
        srate = ev.K - ev.cond_entropy((N,) * K) / N
        slack = srate - sum(target)
        if abs(slack) > eps / 2:
            raise PreconditionError(
                f"target sum {sum(target):.6f} differs from sum capacity "
                f"{srate:.6f} by more than eps/2"
            )
        # project small dominance slack onto the face via user 1
        work_target = list(target)
        projected = slack > 1e-12
        work_target[0] += max(slack, 0.0)
        result = _solve_split(ev, work_target)
        result.targets = target
        result.projected = projected
        if best is None or result.max_gap < best.max_gap:
            best = result
        if result.max_gap < eps:
            return result
        N *= 2
    if best is None:
        raise NotFoundError("no evaluator available for any blocklength")
    raise NotFoundError(
        f"no split within eps={eps} up to N_max={N_max}", best_gap=best.max_gap
    )


def _solve_split(ev, targets_in) -> KUserSplit:
    N = ev.N
    K = ev.K
    ctx = [0] * K
    remaining = {u: float(t) for u, t in enumerate(targets_in, start=1)}
    decisions: list[SplitDecision] = []
    seq: list[int] = []

    def emit(user, count):
        seq.extend([user] * count)
        ctx[user - 1] += count

    def lead_gain(user, new_len):
        old = ctx[user - 1]
        h_old = ev.cond_entropy(ctx)
        probe = list(ctx)
        probe[user - 1] = new_len
        h_new = ev.cond_entropy(probe)
        return ((new_len - old) - (h_new - h_old)) / N

    def solve(active):
        if not active:
            return
        if len(active) == 1:
            emit(active[0], N - ctx[active[0] - 1])
            return
        lead = active[0]
        others = active[1:]
        subsets = []
        for mask in range(1, 1 << len(others)):
            subsets.append(tuple(others[b] for b in range(len(others)) if mask >> b & 1))
        subsets.sort(key=lambda s: (len(s), s))
        start = ctx[lead - 1]
        sweep = {}
        base = list(ctx)
        h_lead = ev.sweep_entropies(base, lead)
        for s in subsets:
            with_s = list(ctx)
            for u in s:
                with_s[u - 1] = N
            h_both = ev.sweep_entropies(with_s, lead)
            sweep[s] = (len(s) * N - (h_both - h_lead)) / N
        i0, j0 = None, None
        for a in range(start, N + 1):
            for s in subsets:
                if sweep[s][a] >= sum(remaining[u] for u in s) - 1e-9:
                    i0, j0 = a, s
                    break
            if i0 is not None:
                break
        if i0 is None:
            # numerically the full-set constraint is tight at a = N
            i0, j0 = N, tuple(others)
        rhs = sum(remaining[u] for u in j0)
        # both the crossing step and its predecessor satisfy the loose
        # equality (increments are at most 1/N); take the closer one
        if i0 > start and abs(sweep[j0][i0 - 1] - rhs) < abs(sweep[j0][i0] - rhs):
            i0 -= 1
        lhs = float(sweep[j0][i0])
        decisions.append(SplitDecision(lead, i0, j0, lhs, rhs, tuple(ctx)))
        gain = lead_gain(lead, i0)
        emit(lead, i0 - ctx[lead - 1])
        remaining[lead] -= gain
        solve(list(j0))
        rest = [u for u in others if u not in j0]
        if ctx[lead - 1] < N:
            solve([lead] + rest)
        else:
            solve(rest)

    solve(sorted(remaining))
    path = MonotonePath(tuple(seq), K)
    mi_prev = ev.cond_entropy([0] * K)
    lens = [0] * K
    rates = np.zeros(K)
    for u in path.user_sequence:
        lens[u - 1] += 1
        cur = ev.cond_entropy(lens)
        rates[u - 1] += 1.0 - (cur - mi_prev)
        mi_prev = cur
    rates /= N
    return KUserSplit(path, tuple(float(r) for r in rates),
                      tuple(targets_in), decisions)
