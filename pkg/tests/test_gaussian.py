"""Relay chain: slot identities, gate statistics, codebook error estimates."""

import math
import os

import numpy as np
import pytest
from scipy import stats

from zdmn import backend
from zdmn.errors import DomainError, ResourceCapError
from zdmn.gaussian import (
    RELAY_POWER_MARGIN,
    CodebookResult,
    GaussianRelayConfig,
    codebook_experiment,
    neutralization_rate,
    separation_report,
    simulate_relay,
)


def _config(**kw):
    base = dict(P=5.0, n=64, seed=0, delta=0.5)
    base.update(kw)
    return GaussianRelayConfig(**base)


# ---------------------------------------------------------------------------
# configuration and trace algebra


def test_config_validation():
    cfg = _config()
    assert cfg.relay_power == 5.0 + RELAY_POWER_MARGIN
    assert cfg.relay_budget == 64 * 15.0
    with pytest.raises(DomainError):
        GaussianRelayConfig(P=5.0, n=0)
    with pytest.raises(DomainError):
        GaussianRelayConfig(P=5.0, n=1.5)
    with pytest.raises(DomainError):
        GaussianRelayConfig(P=5.0, n=True)
    with pytest.raises(DomainError):
        GaussianRelayConfig(P=0.0, n=4)
    with pytest.raises(DomainError):
        GaussianRelayConfig(P=math.inf, n=4)
    with pytest.raises(DomainError):
        GaussianRelayConfig(P=5.0, n=4, delta=-0.1)
    with pytest.raises(DomainError):
        GaussianRelayConfig(P=5.0, n=4, delta=5.0)


def test_trace_identities_and_budget_invariant():
    cfg = _config(n=256)
    rng = np.random.Generator(np.random.Philox(123))
    x1 = math.sqrt(cfg.P - cfg.delta) * rng.standard_normal(cfg.n)
    tr = simulate_relay(cfg, x1)
    assert np.max(np.abs(tr.y2 - (tr.x1 + 3.0 * tr.z2))) < 1e-12
    assert np.max(np.abs(tr.y3 - (2.0 * tr.x1 + tr.x2 - tr.y2 + tr.z3))) < 1e-12
    want_gate = np.cumsum(tr.y2 ** 2) <= tr.budget
    assert np.array_equal(tr.gate, want_gate)
    assert np.array_equal(tr.x2, np.where(tr.gate, tr.y2, 0.0))
    assert tr.relay_power <= tr.budget + 1e-9
    assert tr.n == 256
    # reproducible per (seed, block); fresh noise across blocks
    again = simulate_relay(cfg, x1)
    assert np.array_equal(tr.z2, again.z2) and np.array_equal(tr.z3, again.z3)
    other = simulate_relay(cfg, x1, block=1)
    assert not np.array_equal(tr.z2, other.z2)


def test_open_gate_cancels_relay_noise():
    cfg = _config(n=128)
    tr = simulate_relay(cfg, np.zeros(128), budget=1e18)
    assert tr.all_open
    assert np.max(np.abs(tr.y3 - tr.z3)) < 1e-12  # zero source, clean slot


def test_shut_gate_leaves_amplified_noise():
    cfg = _config(n=128)
    rng = np.random.Generator(np.random.Philox(7))
    x1 = rng.standard_normal(128)
    tr = simulate_relay(cfg, x1, budget=0.0)
    assert not tr.gate.any()
    assert np.max(np.abs(tr.y3 - (tr.x1 - 3.0 * tr.z2 + tr.z3))) < 1e-12
    assert tr.relay_power == 0.0


def test_simulate_relay_rejects_wrong_shape():
    cfg = _config(n=8)
    with pytest.raises(DomainError):
        simulate_relay(cfg, np.zeros(9))
    with pytest.raises(DomainError):
        simulate_relay(cfg, np.zeros((2, 8)))


def test_trace_csv_roundtrip():
    cfg = _config(n=5)
    tr = simulate_relay(cfg, np.full(5, math.sqrt(cfg.P)))
    lines = tr.to_csv().strip().split("\n")
    assert lines[0] == "slot,x1,z2,y2,x2,z3,y3"
    assert len(lines) == 6
    k, x1v, z2v, y2v, x2v, z3v, y3v = lines[3].split(",")
    assert int(k) == 3
    assert float(x1v) == tr.x1[2] and float(y3v) == tr.y3[2]


# ---------------------------------------------------------------------------
# gate-open frequency against closed forms


def test_neutralization_single_slot_gaussian_source():
    cfg = _config(n=1)
    got = neutralization_rate(cfg, blocks=20000, source="gaussian")
    # single-slot open probability: y2 ~ N(0, P - delta + 9) against P + 10
    want = 2.0 * stats.norm.cdf(math.sqrt(15.0 / 13.5)) - 1.0
    assert abs(got - want) < 0.011  # 3.5 binomial standard errors


def test_neutralization_single_slot_deterministic_source():
    cfg = _config(n=1)
    got = neutralization_rate(cfg, blocks=20000, source="deterministic")
    # y2 ~ N(sqrt(P), 9): (y2/3)^2 is noncentral chi-square, 1 dof, nc P/9
    want = stats.ncx2.cdf(15.0 / 9.0, df=1, nc=5.0 / 9.0)
    assert abs(got - want) < 0.011


def test_neutralization_without_backoff_needs_length():
    got = neutralization_rate(_config(n=4000, delta=0.0), blocks=200)
    assert got >= 0.95


def test_neutralization_validation():
    with pytest.raises(DomainError):
        neutralization_rate(_config(), blocks=0)
    with pytest.raises(DomainError):
        neutralization_rate(_config(), source="adversarial")


def test_open_gate_conditional_law_moments():
    cfg = _config(n=20000)
    rng = np.random.Generator(np.random.Philox(99))
    x1 = math.sqrt(cfg.P - cfg.delta) * rng.standard_normal(cfg.n)
    tr = simulate_relay(cfg, x1)
    assert tr.all_open
    resid = tr.y3 - 2.0 * tr.x1  # should be exactly the terminal's own noise
    assert abs(float(resid.mean())) < 3.0 / math.sqrt(cfg.n)
    assert abs(float(resid.var()) - 1.0) < 0.1


# ---------------------------------------------------------------------------
# codebook experiment


def test_codebook_rate_zero_never_errs():
    cfg = _config(n=8)
    an = codebook_experiment(cfg, 0.0, trials=50, method="analytic")
    ex = codebook_experiment(cfg, 0.0, trials=50, method="exhaustive")
    assert an.error_rate == 0.0 and an.errors is None
    assert ex.error_rate == 0.0 and ex.errors == 0
    assert an.codebook_size == ex.codebook_size == 1


def test_codebook_far_above_capacity_fails():
    res = codebook_experiment(_config(n=16), 3.0, trials=200, method="auto")
    assert res.method == "analytic"  # 2**48 codewords never materialize
    assert res.codebook_size == 1 << 48
    assert res.error_rate >= 0.9


def test_codebook_analytic_matches_redraw_ensemble():
    cfg = _config(n=12)
    an = codebook_experiment(cfg, 1.0, trials=400, method="analytic")
    rd = codebook_experiment(cfg, 1.0, trials=400, method="redraw")
    assert an.codebook_size == rd.codebook_size == 4096
    se = math.sqrt(max(rd.error_rate * (1 - rd.error_rate), 1e-6) / 400)
    assert abs(an.error_rate - rd.error_rate) <= 3.5 * se
    ex = codebook_experiment(cfg, 1.0, trials=400, method="exhaustive")
    # one fixed codebook may sit off the ensemble mean, but not far
    assert abs(ex.error_rate - an.error_rate) <= 0.08


def test_codebook_rate_effective_rounding():
    res = codebook_experiment(_config(n=10), 0.55, trials=1, method="analytic")
    assert res.codebook_size == 1 << 6  # ceil(5.5) information bits
    assert res.rate_effective == 0.6
    assert res.rate_requested == 0.55
    exact = codebook_experiment(_config(n=10), 0.5, trials=1, method="analytic")
    assert exact.codebook_size == 1 << 5  # exact products stay exact


@pytest.mark.skipif(not backend.HAS_NUMBA, reason="numba not installed")
def test_codebook_backends_agree_on_error_counts():
    cfg = _config(n=12)
    counts = {}
    for flag in ("1", "0"):
        os.environ["ZDMN_NO_NUMBA"] = flag
        try:
            res = codebook_experiment(cfg, 0.9, trials=300, method="exhaustive")
            counts[flag] = res.errors
        finally:
            os.environ.pop("ZDMN_NO_NUMBA", None)
    assert counts["1"] == counts["0"]


def test_codebook_validation_and_caps():
    cfg = _config(n=8)
    with pytest.raises(DomainError):
        codebook_experiment(cfg, -0.5, trials=10)
    with pytest.raises(DomainError):
        codebook_experiment(cfg, math.nan, trials=10)
    with pytest.raises(DomainError):
        codebook_experiment(cfg, 1.0, trials=0)
    with pytest.raises(DomainError):
        codebook_experiment(cfg, 1.0, trials=10, cap=0)
    with pytest.raises(DomainError):
        codebook_experiment(cfg, 1.0, trials=10, method="montecarlo")
    with pytest.raises(ResourceCapError):
        codebook_experiment(cfg, 2.0, trials=10, cap=4, method="exhaustive")
    with pytest.raises(ResourceCapError):
        codebook_experiment(cfg, 2.0, trials=10, cap=4, method="redraw")
    with pytest.raises(ResourceCapError):
        codebook_experiment(_config(n=512), 1.5, trials=1)  # 2**768 codewords
    capped = codebook_experiment(cfg, 2.0, trials=10, cap=4, method="auto")
    assert capped.method == "analytic"


def test_codebook_result_string():
    res = CodebookResult(method="exhaustive", n=8, codebook_size=16, trials=10,
                         rate_requested=0.5, rate_effective=0.5,
                         error_rate=0.1, errors=1)
    s = str(res)
    assert "M=16" in s and "errors=1" in s and "error_rate=0.100000" in s
    res2 = CodebookResult(method="analytic", n=8, codebook_size=16, trials=10,
                          rate_requested=0.5, rate_effective=0.5,
                          error_rate=0.1, errors=None)
    assert "errors=-" in str(res2)


# ---------------------------------------------------------------------------
# separation report


def test_separation_report_fields():
    r5 = separation_report(5.0)
    assert abs(r5.positive_delay_cap - 1.160964047443681) < 1e-12
    assert abs(r5.achievable_rate - 1.7297158093186487) < 1e-12
    assert r5.separated and r5.exceeds_cap and r5.operating_rate == 1.2
    r125 = separation_report(1.25)
    assert not r125.separated
    assert abs(r125.positive_delay_cap - r125.achievable_rate) < 1e-15
    r1 = separation_report(1.0, operating_rate=0.5)
    assert not r1.separated and not r1.exceeds_cap
    text = str(r5)
    assert "separated:            yes" in text
    assert "positive-delay cap:   1.160964 bits/slot" in text
    with pytest.raises(DomainError):
        separation_report(5.0, operating_rate=0.0)
    with pytest.raises(DomainError):
        separation_report(-1.0)
