"""
Flagforge — Engine configuration.

Every knob is a Django setting (see flagforge/settings.py, which reads them from
the environment / .env). Service code reads them through these accessors so that
tests can override with django.test.override_settings.
"""

from django.conf import settings

DEFAULT_BRUTEFORCE_CAP = 10**8
DEFAULT_GENERIC_RANGE = 10**6
DEFAULT_GENERIC_RETRIES = 20
DEFAULT_EXPERIMENT_CAP = 2_000_000


def default_seed() -> int:
    """Seed used when a command is given no --seed (FLAGFORGE_SEED)."""
    return int(getattr(settings, "FLAGFORGE_SEED", 0))


def bruteforce_cap() -> int:
    """Largest Cartesian product the brute-force oracle will enumerate."""
    return int(getattr(settings, "FLAGFORGE_BRUTEFORCE_CAP", DEFAULT_BRUTEFORCE_CAP))


def generic_range() -> int:
    """Half-width of the integer range generic flats are sampled from."""
    return int(getattr(settings, "FLAGFORGE_GENERIC_RANGE", DEFAULT_GENERIC_RANGE))


def genericity_retries() -> int:
    return int(getattr(settings, "FLAGFORGE_GENERIC_RETRIES", DEFAULT_GENERIC_RETRIES))


def experiment_cap() -> int:
    """Maximum total number of flats in one experiment instance before the row is skipped."""
    return int(getattr(settings, "FLAGFORGE_EXPERIMENT_CAP", DEFAULT_EXPERIMENT_CAP))


def worker_count() -> int:
    return max(1, int(getattr(settings, "FLAGFORGE_WORKERS", 1)))
