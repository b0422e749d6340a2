"""The twelve acceptance criteria at their stated tolerances.

Each criterion is its own test, so a failure is reported against its id.
One PASS/FAIL line per criterion is printed as it runs and again in the
"acceptance criteria" section of the terminal summary.
"""

from __future__ import annotations

import pytest

from conftest import ACCEPTANCE_LINES
from fbscope.acceptance import CRITERIA, criterion_ids, run_one


def test_suite_has_twelve_criteria():
    assert criterion_ids() == list(range(1, 13))


@pytest.mark.parametrize("cid", criterion_ids(),
                         ids=[f"{c:02d}-{CRITERIA[c].name.replace(' ', '-')}" for c in criterion_ids()])
def test_criterion(cid, request):
    r = run_one(cid, 1.0)
    line = r.line()
    print(line, flush=True)
    request.config.stash[ACCEPTANCE_LINES].append(line)
    assert r.passed, line
