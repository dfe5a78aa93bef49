"""End-to-end acceptance criteria, one test per criterion.

Each test runs one numbered criterion from the acceptance module at its
stated tolerance and time budget and prints the one-line verdict; the
assertion carries the measured detail so a regression shows the numbers
directly in the failure message.
"""

import pytest

from bandgap import acceptance


@pytest.mark.parametrize("index", range(1, 10))
def test_criterion(index):
    result = acceptance.run_criterion(index)
    print(result.line)
    assert result.passed, result.line
