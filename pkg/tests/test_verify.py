import math

import numpy as np
import pytest

from surfelast import verify


@pytest.fixture
def scratch_check(monkeypatch):
    reg = dict(verify._REGISTRY)
    monkeypatch.setattr(verify, "_REGISTRY", reg)
    return verify.register


def test_every_module_has_checks():
    prefixes = {n.split(".")[0] for n in verify.check_names()}
    assert prefixes == {"kinematics", "bulk", "surface", "fem", "solver", "oracles"}


def test_duplicate_registration_rejected(scratch_check):
    with pytest.raises(ValueError):
        scratch_check("bulk.stress_fd")(lambda rng: (0.0, 1.0))


def test_crashing_check_reported_as_failure(scratch_check):
    @scratch_check("scratch.crash")
    def _(rng):
        raise RuntimeError("boom")

    (r,) = verify.run_checks(0, ["scratch.crash"])
    assert not r.passed and math.isnan(r.error) and "RuntimeError: boom" in r.message
    assert "FAIL  RuntimeError: boom" in verify.format_report([r])


def test_nan_error_never_passes():
    assert not verify.CheckResult("x", float("nan"), 1.0).passed
    assert verify.CheckResult("x", 0.0, 0.0).passed


def test_seeds_are_per_check(scratch_check):
    @scratch_check("scratch.draw")
    def _(rng):
        return float(rng.uniform()), 1.0

    a = verify.run_checks(3, ["scratch.draw"])[0].error
    b = verify.run_checks(3, ["scratch.draw"])[0].error
    c = verify.run_checks(4, ["scratch.draw"])[0].error
    assert a == b != c


def test_report_footer_counts():
    rs = [verify.CheckResult("a", 0.0, 1.0), verify.CheckResult("b", 2.0, 1.0)]
    text = verify.format_report(rs)
    assert text.splitlines()[-1] == "1/2 properties passed"
    assert np.sum(["FAIL" in line for line in text.splitlines()]) == 1
