"""Exact multi-user conditional entropy evaluators.

All monotone chain-rule quantities reduce to conditional entropies of
per-user transformed-prefix collections given the channel output block,

    H(U_1^{a_1}, ..., U_K^{a_K} | Y^N),

so every evaluator exposes ``cond_entropy(prefix_lens)`` plus a
single-sort ``sweep_entropies`` that returns the whole curve in one
user's prefix length.  Three backends:

- ``BruteForceEvaluator``: enumerates all input vectors of a K-user
  binary-input MAC with a deterministic output map (the validation
  reference; feasible up to K*N around 24).
- ``Adder3Evaluator``: the three-user binary adder reduced to a
  two-coordinate enumeration, exact and fast at N = 8.
- ``ParityLinkedEvaluator``: closed form for the parity-linked erasure
  family at any blocklength.
"""

from __future__ import annotations

import numpy as np

from .channels import DiscreteChannel, UnsupportedChannelError, KernelSizeError
from .erasure import ParityLinkedErasureMAC, polar_transform_bits


def _entropy_from_sorted_keys(keys: np.ndarray) -> float:
    """H of the empirical (uniform-weight) distribution of sorted keys, bits."""
    M = len(keys)
    change = np.nonzero(np.diff(keys))[0]
    bounds = np.concatenate([[0], change + 1, [M]])
    counts = np.diff(bounds).astype(float)
    return float(np.log2(M) - counts @ np.log2(counts) / M)


def _transform_table(N: int) -> np.ndarray:
    """tab[v] = integer whose bits are the polar transform of v's bits.

    Bit k of v (LSB first) holds coordinate k+1 of the length-N vector;
    same layout for the output.
    """
    vals = np.arange(1 << N, dtype=np.uint32)
    bits = ((vals[:, None] >> np.arange(N, dtype=np.uint32)) & 1).astype(np.int8)
    tbits = polar_transform_bits(bits)
    return (tbits.astype(np.uint64) << np.arange(N, dtype=np.uint64)).sum(axis=1)


def _prefix_field(transformed: np.ndarray, N: int, a: int) -> np.ndarray:
    """First a coordinates of each transformed vector, packed MSB-first.

    Packing coordinate 1 into the high bit makes every prefix a prefix
    of the packed integer, so one sort serves all prefix lengths.
    """
    if a == 0:
        return np.zeros_like(transformed)
    rev = np.zeros_like(transformed)
    for k in range(N):
        rev |= ((transformed >> np.uint64(k)) & np.uint64(1)) << np.uint64(N - 1 - k)
    return rev >> np.uint64(N - a)


class BruteForceEvaluator:
    """Exact entropies for a K-user binary-input deterministic-output MAC."""

    def __init__(self, mac: DiscreteChannel, N: int, max_bits: int = 24):
        K = mac.num_senders
        if mac.input_arities != (2,) * K:
            raise UnsupportedChannelError("binary sender inputs required")
        if N & (N - 1):
            raise KernelSizeError("blocklength must be a power of two")
        if K * N > max_bits:
            raise KernelSizeError(f"{K}*{N} input bits exceed the enumeration cap")
        onehot = np.isclose(mac.kernel.max(axis=1), 1.0)
        if not onehot.all():
            raise UnsupportedChannelError("deterministic output map required")
        self.K, self.N = K, N
        self.mac = mac
        ymap = mac.kernel.argmax(axis=1)  # joint input index -> output symbol
        tab = _transform_table(N)
        M = 1 << (K * N)
        idx = np.arange(M, dtype=np.uint64)
        mask = np.uint64((1 << N) - 1)
        # user j occupies bits [ (j-1)N, jN ), coordinate k+1 of u at bit k
        u_fields = [(idx >> np.uint64((j) * N)) & mask for j in range(K)]
        x_fields = [tab[f.astype(np.uint32)].astype(np.uint64) for f in u_fields]
        y_idx = np.zeros(M, dtype=np.uint64)
        ny = np.uint64(mac.output_arity)
        for t in range(N):
            joint = np.zeros(M, dtype=np.uint64)
            for j in range(K):
                joint |= ((x_fields[j] >> np.uint64(t)) & np.uint64(1)) << np.uint64(j)
            y_idx = y_idx * ny + ymap[joint.astype(np.int64)].astype(np.uint64)
        self._y = y_idx
        # prefix fields packed MSB-first per user
        self._pref = [
            _prefix_field(f, N, N).astype(np.uint32) for f in u_fields
        ]
        del u_fields, x_fields
        self._h_y = _entropy_from_sorted_keys(np.sort(y_idx))

    def _key(self, prefix_lens) -> np.ndarray:
        key = self._y.astype(np.uint64)
        for j, a in enumerate(prefix_lens):
            if a:
                key = (key << np.uint64(a)) | (
                    self._pref[j].astype(np.uint64) >> np.uint64(self.N - a)
                )
        return key

    def cond_entropy(self, prefix_lens) -> float:
        """H(U_1^{a_1}, ..., U_K^{a_K} | Y^N) in bits."""
        key = self._key(prefix_lens)
        return _entropy_from_sorted_keys(np.sort(key)) - self._h_y

    def sweep_entropies(self, base_prefix_lens, sweep_user: int) -> np.ndarray:
        """cond_entropy with user ``sweep_user`` (1-based) at every length 0..N.

        The sweep user's prefix must extend its base value; others fixed.
        """
        base = list(base_prefix_lens)
        j = sweep_user - 1
        base[j] = 0
        key = self._key(base)
        key = (key << np.uint64(self.N)) | self._pref[j].astype(np.uint64)
        order = np.argsort(key, kind="stable")
        skey = key[order]
        out = np.empty(self.N + 1)
        for a in range(self.N + 1):
            out[a] = _entropy_from_sorted_keys(skey >> np.uint64(self.N - a)) - self._h_y
        return out


class Adder3Evaluator:
    """The three-user binary adder MAC, reduced to an exact enumeration.

    With A = X1^X2^X3, B = X1^X2, C = X2^X3 (a uniform linear bijection),
    the output given A is exactly the indicator of B_t = C_t = 0 per
    position, and the users' transforms differ from the transforms of
    C, B^C, B only by known offsets.  Enumerating (B, C) therefore gives
    all entropies over a space of size 4^N.
    """

    K = 3

    def __init__(self, N: int, max_bits: int = 20):
        if N & (N - 1):
            raise KernelSizeError("blocklength must be a power of two")
        if 2 * N > max_bits:
            raise KernelSizeError("blocklength too large for enumeration")
        self.N = N
        tab = _transform_table(N)
        b = np.repeat(np.arange(1 << N, dtype=np.uint32), 1 << N)
        c = np.tile(np.arange(1 << N, dtype=np.uint32), 1 << N)
        full = np.uint32((1 << N) - 1)
        pattern = (~(b | c)) & full  # positions where all senders agree
        self._y = pattern
        t1 = tab[c]
        t2 = tab[b ^ c]
        t3 = tab[b]
        self._pref = [
            _prefix_field(t, N, N).astype(np.uint32) for t in (t1, t2, t3)
        ]
        self._h_y = _entropy_from_sorted_keys(np.sort(self._y))

    _key = BruteForceEvaluator._key
    cond_entropy = BruteForceEvaluator.cond_entropy
    sweep_entropies = BruteForceEvaluator.sweep_entropies


class ParityLinkedEvaluator:
    """Closed-form entropies for the parity-linked erasure family."""

    def __init__(self, mac: ParityLinkedErasureMAC, N: int):
        self.mac = mac
        self.K = mac.num_users
        self.N = N
        self._cum = np.concatenate([[0.0], np.cumsum(mac.tree_eps(N))])

    def cond_entropy(self, prefix_lens) -> float:
        top = max(prefix_lens) if len(prefix_lens) else 0
        return float(self._cum[top])

    def sweep_entropies(self, base_prefix_lens, sweep_user: int) -> np.ndarray:
        base = list(base_prefix_lens)
        base[sweep_user - 1] = 0
        rest = max(base) if base else 0
        tops = np.maximum(np.arange(self.N + 1), rest)
        return self._cum[tops]
