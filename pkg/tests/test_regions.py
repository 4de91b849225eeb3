import numpy as np
import pytest

from polarnet.channels import (
    DiscreteChannel,
    InputDistribution,
    UnsupportedChannelError,
)
from polarnet.regions import (
    Inequality,
    RatePolytope,
    Region2D,
    RegionError,
    _derived_network,
    _receiver_marginal,
    _vertex_enumeration,
    corner_points,
    dominant_face,
    fourier_motzkin,
    hk_region,
    intersect,
    mac_region,
    strong_interference_check,
    superposition_case_constraints,
    superposition_regions,
)

ADDER2 = DiscreteChannel.binary_adder(2)
UNIF2 = InputDistribution.uniform((2, 2))


class TestMacRegion:
    def test_adder_pentagon(self):
        r = mac_region(ADDER2, UNIF2)
        bounds = {tuple(q.coeffs): q.bound for q in r.inequalities}
        assert bounds[(1.0, 0.0)] == pytest.approx(1.0)
        assert bounds[(0.0, 1.0)] == pytest.approx(1.0)
        assert bounds[(1.0, 1.0)] == pytest.approx(1.5)

    def test_single_decode_set_interval(self):
        r = mac_region(ADDER2, UNIF2, decode_set=[0])
        assert len(r.inequalities) == 1
        assert r.inequalities[0].bound == pytest.approx(0.5)

    def test_dominant_face_segment(self):
        sr, verts = dominant_face(mac_region(ADDER2, UNIF2))
        assert sr == pytest.approx(1.5)
        assert verts == [(0.5, 1.0), (1.0, 0.5)]

    def test_three_user_greedy_corners(self):
        r = mac_region(DiscreteChannel.binary_adder(3),
                       InputDistribution.uniform((2, 2, 2)))
        assert len(corner_points(r)) == 6

    def test_non_polymatroid_rejected(self):
        bad = RatePolytope(2, [Inequality((1.0, 2.0), 1.0)])
        with pytest.raises(UnsupportedChannelError):
            dominant_face(bad)


class TestIntersect:
    def test_idempotent(self):
        r = mac_region(ADDER2, UNIF2)
        assert intersect([r, r]).vertices() == r.vertices()

    def test_pentagon_intersection_vs_halfplane_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            b1 = sorted(rng.uniform(0.2, 1.0, size=2))
            b2 = sorted(rng.uniform(0.2, 1.0, size=2))
            s1 = min(rng.uniform(0.5, 1.5), b1[0] + b1[1])
            s2 = min(rng.uniform(0.5, 1.5), b2[0] + b2[1])
            p1 = RatePolytope.from_subset_bounds(2, {
                frozenset({0}): b1[0], frozenset({1}): b1[1],
                frozenset({0, 1}): s1})
            p2 = RatePolytope.from_subset_bounds(2, {
                frozenset({0}): b2[0], frozenset({1}): b2[1],
                frozenset({0, 1}): s2})
            both = intersect([p1, p2])
            rows = p1._full_system() + p2._full_system()
            oracle = _vertex_enumeration(rows, 2)
            assert both.vertices() == pytest.approx(oracle, abs=1e-9)

    def test_dimension_mismatch(self):
        from polarnet.channels import DimensionError

        with pytest.raises(DimensionError):
            intersect([RatePolytope(2), RatePolytope(3)])


class TestFourierMotzkin:
    def test_cube_projection(self):
        cube = [((1, 0, 0), 1.0), ((0, 1, 0), 1.0), ((0, 0, 1), 1.0),
                ((-1, 0, 0), 0.0), ((0, -1, 0), 0.0), ((0, 0, -1), 0.0)]
        rows = fourier_motzkin(cube, [2])
        keys = sorted((tuple(r[0]), r[1]) for r in rows)
        assert keys == [((-1, 0, 0), 0.0), ((0, -1, 0), 0.0),
                        ((0, 1, 0), 1.0), ((1, 0, 0), 1.0)]

    def test_eliminate_nothing(self):
        rows = [((1.0, 1.0), 1.0), ((1.0, 1.0), 2.0)]
        out = fourier_motzkin(rows, [])
        assert len(out) == 1 and out[0][1] == 1.0

    def test_exact_mode_fractions(self):
        from fractions import Fraction

        rows = [((Fraction(1), Fraction(1)), Fraction(1)),
                ((Fraction(-1), Fraction(0)), Fraction(0)),
                ((Fraction(0), Fraction(-1)), Fraction(0))]
        out = fourier_motzkin(rows, [0], exact=True, prune=False)
        assert any(isinstance(b, Fraction) for _, b in out)


class TestStrongInterference:
    def test_identical_outputs_strong(self):
        holds, witness, label = strong_interference_check(ADDER2, ADDER2, 5)
        assert holds and witness is None and label == "grid-verified"

    def test_erased_cross_link_not_strong(self):
        # receiver z sees only its own input; x's signal is erased there
        ch_y = DiscreteChannel.from_function((2, 2), lambda x, w: x + 2 * w)
        ch_z = DiscreteChannel.from_function((2, 2), lambda x, w: w)
        holds, witness, _ = strong_interference_check(ch_y, ch_z, 5)
        assert not holds and witness is not None


def bsc_kernel(eps):
    return np.array([[1 - eps, eps], [eps, 1 - eps]])


def derived_bc(eps1, eps2):
    k1 = np.array([bsc_kernel(eps1)[v1 ^ v2]
                   for v1 in range(2) for v2 in range(2)])
    k2 = np.array([bsc_kernel(eps2)[v1 ^ v2]
                   for v1 in range(2) for v2 in range(2)])
    return (DiscreteChannel((2, 2), 2, k1), DiscreteChannel((2, 2), 2, k2))


class TestSuperposition:
    def test_case3_symbolic_inequalities(self):
        ch1, ch2 = derived_bc(0.0, 0.1)
        p = InputDistribution.product([[0.5, 0.5], [0.7, 0.3]])
        labels = [s for s, _ in superposition_case_constraints(ch1, ch2, p, 3)]
        assert labels == [
            "R1 <= I(V1;Y1)",
            "R1 <= I(V1;Y2,V2)",
            "R2 <= I(V2;Y2,V1)",
            "R1+R2 <= I(V1,V2;Y2)",
        ]

    def test_identical_receivers_same_region(self):
        ch1, ch2 = derived_bc(0.1, 0.1)
        p = InputDistribution.product([[0.5, 0.5], [0.5, 0.5]])
        regs = superposition_regions(ch1, ch2, p)
        v4 = regs[4].vertices
        # case 4 (both decode everything) equals the MAC region of either
        mac = mac_region(ch1, p)
        assert sorted(v4) == pytest.approx(
            sorted(Region2D.from_inequalities(
                [Inequality(tuple(float(c) for c in q.coeffs),
                            float(q.bound)) for q in mac.inequalities]
            ).vertices), abs=1e-9)

    def test_constant_v2_degenerate(self):
        ch1, ch2 = derived_bc(0.0, 0.1)
        p = InputDistribution.product([[0.5, 0.5], [1.0, 0.0]])
        regs = superposition_regions(ch1, ch2, p)
        assert all(abs(v[1]) < 1e-9 for v in regs[1].vertices)


class TestHanKobayashi:
    def make_ic(self):
        def joint(x1, x2):
            return (x1 + x2) * 2 + x2

        ker = np.zeros((4, 6))
        for x1 in range(2):
            for x2 in range(2):
                ker[x1 * 2 + x2, joint(x1, x2)] = 1.0
        return DiscreteChannel((2, 2), 6, ker)

    def test_matches_vertex_oracle(self):
        from scipy.spatial import ConvexHull

        ic = self.make_ic()
        maps = ([[0, 1], [1, 0]], [[0, 1], [1, 0]])
        p4 = InputDistribution.product([[0.5, 0.5]] * 4)
        reg = hk_region(ic, p4, maps, (3, 2))
        net = _derived_network(ic, maps)
        y1 = _receiver_marginal(net, (3, 2), 0)
        y2 = _receiver_marginal(net, (3, 2), 1)
        both = intersect([mac_region(y1, p4, (0, 1, 2)),
                          mac_region(y2, p4, (1, 2, 3))])
        pts = np.array(sorted({(round(v[0] + v[1], 9), round(v[2] + v[3], 9))
                               for v in both.vertices()}))
        hull = ConvexHull(pts)
        oracle = sorted(map(tuple, pts[hull.vertices]))
        got = sorted(tuple(map(float, v)) for v in reg.vertices)
        assert got == pytest.approx(oracle, abs=1e-9)

    def test_non_product_distribution_rejected(self):
        ic = self.make_ic()
        p = InputDistribution.uniform((2, 2))  # wrong sender count
        with pytest.raises(RegionError):
            hk_region(ic, p, ([[0, 1], [1, 0]], [[0, 1], [1, 0]]), (3, 2))
