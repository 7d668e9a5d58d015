import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ageincome.ingest import LogIncomePanel


def build_panel(rows, base_year=None):
    """Panel from (id, year, age, log_income, weight) tuples."""
    rows = list(rows)
    return LogIncomePanel(
        ids=np.array([str(r[0]) for r in rows]),
        years=np.array([r[1] for r in rows], dtype=np.int64),
        ages=np.array([r[2] for r in rows], dtype=np.int64),
        log_income=np.array([r[3] for r in rows], dtype=float),
        weights=np.array([r[4] if len(r) > 4 else 1.0 for r in rows], dtype=float),
        base_year=base_year,
    )


@pytest.fixture
def tiny_panel():
    return build_panel(
        [
            ("a", 1991, 30, 9.0),
            ("a", 1992, 31, 9.2),
            ("b", 1991, 30, 8.5),
            ("b", 1992, 31, 8.9),
            ("c", 1991, 40, 10.0),
        ]
    )
