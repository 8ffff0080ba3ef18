import numpy as np
import pytest

from conftest import circle
from variety_test.config import Config
from variety_test.covering import build_net
from variety_test.data import SynthSpec, generate_dataset
from variety_test.errors import CrossedDiscriminant, InsufficientSamples, NetUnavailable, PreconditionError
from variety_test.poly import make_poly, univariate
from variety_test.tester import ACCEPT, REJECT, erm_refine, lipschitz_probe, screen_risks, exact_risk, test_hypothesis

shift = make_poly(2, 1, 2, [(1, [0, 0], -1.0)])


@pytest.fixture(scope="module")
def line_net():
    return build_net(1, 0, 1, 0.1 / 16, budget=64, seed=0, probes=0)


def test_empty_cloud_insufficient():
    with pytest.raises(InsufficientSamples) as err:
        test_hypothesis(np.zeros((0, 2)), 2, 1, 2, 0.05, 0.1)
    assert err.value.required > 0


def test_small_cloud_reports_required_m():
    X = generate_dataset(SynthSpec("circle", 100, 0.0, 0)).points
    with pytest.raises(InsufficientSamples) as err:
        test_hypothesis(X, 2, 1, 2, 0.05, 0.1)
    assert err.value.have == 100 and err.value.required > 10**6


def test_net_shape_mismatch(line_net):
    with pytest.raises(NetUnavailable):
        test_hypothesis(np.zeros((10, 2)), 2, 1, 2, 0.1, 0.1, net=line_net, check_samples=False)


def test_screened_bounds_bracket_exact_risk(line_net):
    X = np.random.default_rng(0).uniform(-1, 1, (2000, 1))
    cfg = Config()
    lower, upper = screen_risks(line_net, X, cfg)
    for i in range(0, len(line_net), 8):
        r = exact_risk(line_net.centers[i], X, cfg)
        assert lower[i] - 1e-12 <= r <= upper[i] + 1e-12


def test_point_mass_accepts(line_net):
    X = np.full((3000, 1), 0.3)
    dec = test_hypothesis(X, 1, 0, 1, 0.1, 0.1, net=line_net, check_samples=False)
    assert dec.verdict == ACCEPT and dec.certificate_risk <= 0.1
    assert dec.certificate.d <= 2 and dec.m_used == 3000


def test_uniform_segment_rejects(line_net):
    # the best two-point set {-1/2, 1/2} has risk 1/12 > 0.04
    X = np.random.default_rng(1).uniform(-1, 1, (5000, 1))
    dec = test_hypothesis(X, 1, 0, 1, 0.04, 0.1, net=line_net, check_samples=False)
    assert dec.verdict == REJECT and dec.certificate is None
    assert dec.min_risk_bounds[0] > 0.04


def test_decision_deterministic(line_net):
    X = np.random.default_rng(2).uniform(-1, 1, (2000, 1))
    a = test_hypothesis(X, 1, 0, 1, 0.1, 0.1, net=line_net, check_samples=False, seed=5)
    b = test_hypothesis(X, 1, 0, 1, 0.1, 0.1, net=line_net, check_samples=False, seed=5)
    assert a.to_json_dict() == b.to_json_dict()


def test_reject_only_from_net_mode(line_net):
    X = np.random.default_rng(1).uniform(-1, 1, (5000, 1))
    dec = test_hypothesis(X, 1, 0, 1, 0.04, 0.1, net=line_net, mode="erm", check_samples=False)
    assert dec.verdict == REJECT and dec.mode == "net"


@pytest.fixture(scope="module")
def circle_cloud():
    return generate_dataset(SynthSpec("circle", 3000, 0.0, 4)).points


def test_erm_refine_reaches_circle(circle_cloud):
    res = erm_refine(circle_cloud, 2, 1, 2, circle(0.4), iters=30, seed=0)
    assert res.risk < 1e-4
    assert all(a >= b for a, b in zip(res.history, res.history[1:]))


def test_erm_refine_monotone_from_support(circle_cloud):
    init_risk = exact_risk(circle(), circle_cloud, Config())
    res = erm_refine(circle_cloud, 2, 1, 2, circle(), iters=5, seed=0)
    assert res.risk <= init_risk + 1e-15


def test_erm_refine_zero_iterations(circle_cloud):
    res = erm_refine(circle_cloud, 2, 1, 2, circle(0.4), iters=0)
    assert res.poly == circle(0.4)


def test_lipschitz_probe_constant_shift():
    rows = lipschitz_probe(circle(), shift, [1e-1, 1e-2, 1e-3, 1e-4])
    # exact: radius sqrt(1/4 + s) so motion / s -> 1 / (2 r) = 1
    for row in rows:
        assert row.hausdorff == pytest.approx(np.sqrt(0.25 + row.step) - 0.5, abs=1e-6)
    assert rows[-1].ratio == pytest.approx(1.0, abs=0.05)
    assert abs(rows[-1].ratio - rows[-2].ratio) / rows[-1].ratio < 0.1


def test_lipschitz_probe_edge_cases():
    assert lipschitz_probe(circle(), shift, [0.0])[0].hausdorff == 0.0
    with pytest.raises(PreconditionError):
        lipschitz_probe(make_poly(1, 1, 2, [(1, [2], 1.0)]), univariate([1.0, 0.0], 2), [1e-3])
    with pytest.raises(CrossedDiscriminant):
        # shrinking the circle to a point crosses the discriminant at s = 1/4
        lipschitz_probe(circle(), -1.0 * shift, [0.25])
