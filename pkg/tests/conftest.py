import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nomiclaw.ledger import export_csv, write_run_log  # noqa: E402
from nomiclaw.synthetic import outcome_fixture_logs  # noqa: E402


@pytest.fixture(scope="session")
def win_logs():
    return outcome_fixture_logs()


@pytest.fixture(scope="session")
def win_table(win_logs):
    return export_csv(win_logs)


@pytest.fixture(scope="session")
def win_csv(win_logs, tmp_path_factory):
    root = tmp_path_factory.mktemp("fixture")
    for log in win_logs:
        write_run_log(log, root / "logs")
    export_csv(win_logs, root / "table.csv")
    return root / "table.csv"
