"""Each acceptance criterion at its stated tolerance; one PASS/FAIL line per criterion."""

from __future__ import annotations

import pytest

from liquidlab.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number: int, capsys) -> None:
    result = run_criterion(number)
    with capsys.disabled():
        print()
        print(result.line())
        for d in result.details:
            print("    " + d)
    assert result.passed, "\n".join(result.details)
