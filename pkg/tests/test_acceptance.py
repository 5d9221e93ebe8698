"""One test per acceptance criterion; each prints its pass/fail line."""

import pytest

from vortexlab.acceptance import CRITERIA

LINES = []


@pytest.mark.slow
@pytest.mark.parametrize("cid", sorted(CRITERIA), ids=lambda k: f"criterion_{k}")
def test_criterion(cid):
    res = CRITERIA[cid]()
    line = res.line()
    LINES.append(line)
    print(line)
    assert res.passed, line
