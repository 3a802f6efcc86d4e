"""Shared test utilities (importable because pytest puts tests/ on sys.path)."""

import functools


from hrvis.synthgen import GeneratorConfig, generate_week
from hrvis.timeseries import RrSeries


@functools.lru_cache(maxsize=None)
def week(seed: int = 42, **overrides) -> RrSeries:
    """Synthetic series for a config, cached across tests."""
    return generate_week(GeneratorConfig(seed=seed, **overrides))


def random_series(rng, n: int, start: float = 0.0) -> RrSeries:
    return RrSeries(start, rng.uniform(600.0, 1100.0, n))


def brute_sd(x) -> float:
    x = [float(v) for v in x]
    m = sum(x) / len(x)
    return (sum((v - m) ** 2 for v in x) / len(x)) ** 0.5


# one "CRITERION n: PASS|FAIL ..." line per acceptance check, echoed at session end
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
