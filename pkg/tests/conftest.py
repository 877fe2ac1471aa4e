import logging

import pytest

from stochmatch import config, logging_config
from stochmatch.model import build_instance, gen_gnb


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Keep user settings and log files out of every test."""
    monkeypatch.setenv(config.CONFIG_ENV_VAR, str(tmp_path / "settings.json"))
    monkeypatch.setattr(logging_config, "get_log_dir", lambda: tmp_path / "logs")
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    config.use_settings(None)
    yield
    config.use_settings(None)
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def two_round_gnb():
    """gen_gnb(2, 1, 0.5): 2 unit servers, 4 requests."""
    return gen_gnb(2, 1, 0.5)


@pytest.fixture
def single_server_pair():
    """One unit server, two requests with p = 0.5."""
    return build_instance([1], [[(0, 0.5)], [(0, 0.5)]])


@pytest.fixture
def empty_instance():
    return build_instance([1, 2], [[], []])
