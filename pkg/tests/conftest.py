"""Shared fixtures"""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

SAMPLES = ROOT / 'samples'


@pytest.fixture
def samples():
    return SAMPLES


@pytest.fixture
def client():
    import app as web

    web.app.config['TESTING'] = True
    limit = web.app.config['RATE_LIMIT_REQUESTS']
    web.app.config['RATE_LIMIT_REQUESTS'] = 10_000
    web._rate_limit_store.clear()
    with web.app.test_client() as test_client:
        yield test_client
    web.app.config['RATE_LIMIT_REQUESTS'] = limit
    web._rate_limit_store.clear()
