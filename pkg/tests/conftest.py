import itertools

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")


def brute_force_designs(n_parties: int, m: int) -> np.ndarray:
    """Design vectors of every deterministic profile, built party by party."""
    rows = []
    for prof in itertools.product((1, -1), repeat=n_parties * m):
        a = np.array(prof).reshape(n_parties, m)
        S = a.sum(axis=0)
        d = list(S)
        for k in range(m):
            for l in range(k, m):
                if k == l:
                    d.append(sum(a[i, k] * a[j, k] for i in range(n_parties)
                                 for j in range(i + 1, n_parties)))
                else:
                    d.append(sum(a[i, k] * a[j, l] for i in range(n_parties)
                                 for j in range(n_parties) if i != j))
        rows.append(d)
    return np.unique(np.array(rows, dtype=np.int64), axis=0)


@pytest.fixture(scope="session")
def brute():
    cache = {}

    def get(n_parties, m):
        if (n_parties, m) not in cache:
            cache[n_parties, m] = brute_force_designs(n_parties, m)
        return cache[n_parties, m]

    return get


CHSH = np.array([0, 0, 1, 1, -1])


# criterion id -> list of (ok, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


def record(criterion: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: (int("".join(ch for ch in c if ch.isdigit())), c)):
        parts = ACCEPTANCE[cid]
        ok = all(p[0] for p in parts)
        tr.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  " + "; ".join(p[1] for p in parts))
