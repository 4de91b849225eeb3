import numpy as np
import pytest

from polarnet.chains import (
    MonotonePath,
    NotFoundError,
    PreconditionError,
    find_k_user_split,
    find_two_user_split,
    make_evaluator,
    path_rates,
    scale_path,
    sum_capacity,
    two_user_path,
)
from polarnet.channels import DiscreteChannel
from polarnet.erasure import ParityLinkedErasureMAC
from polarnet.exact import Adder3Evaluator, BruteForceEvaluator


ADDER2 = DiscreteChannel.binary_adder(2)


class TestMonotonePath:
    def test_serialize_round_trip(self):
        p = MonotonePath((1, 1, 2, 2, 2, 2, 1, 1), 2)
        assert p.serialize() == "1^2 2^4 1^2"
        assert MonotonePath.parse(p.serialize()) == p

    def test_invalid_counts_rejected(self):
        with pytest.raises(ValueError):
            MonotonePath((1, 1, 2), 2)

    def test_scaling(self):
        p = two_user_path(1, 4)
        q = scale_path(p, 2)
        assert q.blocklength == 8
        assert q.serialize() == "1^2 2^8 1^6"


class TestPathRates:
    def test_corner_point(self):
        # path (V^N, U^N): user 1 decoded last -> (I(U;Y,V), I(V;Y))
        prof = path_rates(ADDER2, two_user_path(0, 8))
        assert prof.rate_tuple[0] == pytest.approx(1.0, abs=1e-9)
        assert prof.rate_tuple[1] == pytest.approx(0.5, abs=1e-9)

    def test_telescoping_all_paths_same_total(self):
        for i in (0, 2, 5, 8):
            prof = path_rates(ADDER2, two_user_path(i, 8))
            assert prof.sum_rate == pytest.approx(1.5, abs=1e-9)

    def test_parity_linked_closed_form_matches_brute_force(self):
        mac = ParityLinkedErasureMAC(2, (0.5,))
        path = two_user_path(3, 8)
        fast = path_rates(mac, path)
        ev = BruteForceEvaluator(ADDER2, 8)
        slow = path_rates(ADDER2, path, evaluator=ev)
        np.testing.assert_allclose(fast.per_index_mi, slow.per_index_mi,
                                   atol=1e-9)

    def test_sum_capacity(self):
        assert sum_capacity(ADDER2) == pytest.approx(1.5, abs=1e-12)
        assert sum_capacity(DiscreteChannel.binary_adder(3), N=4) == \
            pytest.approx(np.log2(8) - 1.5 * np.log2(3) + np.log2(3) * 3 / 4
                          if False else 1.811278124459133, abs=1e-9)


class TestTwoUserSplit:
    def test_finds_target_on_face(self):
        path = find_two_user_split(ADDER2, (0.75, 0.75), 0.05, 256)
        prof = path_rates(ADDER2, path)
        assert abs(prof.rate_tuple[0] - 0.75) < 0.05
        assert abs(prof.rate_tuple[1] - 0.75) < 0.05

    def test_off_face_target_rejected(self):
        with pytest.raises(PreconditionError):
            find_two_user_split(ADDER2, (0.4, 0.4), 0.05, 64)

    def test_unreachable_eps_raises_with_gap(self):
        with pytest.raises(NotFoundError) as ei:
            find_two_user_split(ADDER2, (0.75, 0.75), 1e-9, 8)
        assert ei.value.best_gap is not None


class TestKUserSplit:
    def test_adder3_vertex_target(self):
        from polarnet.channels import InputDistribution
        from polarnet.regions import dominant_face, mac_region

        _, corners = dominant_face(mac_region(
            DiscreteChannel.binary_adder(3),
            InputDistribution.uniform((2, 2, 2))))
        target = corners[0]
        res = find_k_user_split(DiscreteChannel.binary_adder(3), target,
                                0.1, 8, N_min=8)
        assert res.max_gap < 0.1

    def test_decisions_recorded(self):
        target = (0.55, 0.65, 0.611278124459133)
        res = find_k_user_split(DiscreteChannel.binary_adder(3), target,
                                0.1, 8, N_min=8)
        assert res.path.blocklength == 8
        assert res.decisions, "expected at least one tightness decision"
        for d in res.decisions:
            assert abs(d.lhs - d.rhs) <= 1.0 / 8 + 1e-9
