"""Shared fixtures: deterministic worlds, credentials, seed schedules."""

import hashlib

import pytest

from akap import netsim
from akap.blocks import Biometric, h
from akap.protocol import UserCredentials

SEED0 = bytes(32)
SID0 = "ward-7"
UID0 = "alice"
PW0 = "demo-password"


def seed_at(label: str, index: int) -> bytes:
    """Stable per-test seed schedule, independent of everything else."""
    return hashlib.sha256(label.encode() + index.to_bytes(4, "big")).digest()


def stretch_bio(seed: bytes, user_id: str, alg: str = "sha256") -> Biometric:
    # mirrors the CLI's derivation so library and CLI runs line up
    base = bytes(h("BIO", seed, user_id, alg=alg))
    parts = [bytes(h("BIO-STRETCH", base, i, alg=alg)) for i in range(3)]
    return Biometric(b"".join(parts)[: Biometric.SIZE])


def make_cred(seed: bytes = SEED0, uid: str = UID0, pw: str = PW0, alg: str = "sha256"):
    return UserCredentials(id=uid, pw=pw, bio=stretch_bio(seed, uid, alg))


def make_world(
    seed: bytes = SEED0,
    delta: int = 2,
    alg: str = "sha256",
    quirk: bool = False,
    register: bool = True,
    uid: str = UID0,
    sid: str = SID0,
    pw: str = PW0,
) -> netsim.World:
    cfg = netsim.WorldConfig(seed=seed, delta=delta, hash_alg=alg, quirk_double_rg=quirk)
    world = netsim.world_new(cfg)
    if register:
        netsim.run_registration(world, make_cred(seed, uid, pw, alg), sid)
    return world


@pytest.fixture
def world():
    return make_world()


@pytest.fixture
def session_world():
    w = make_world()
    netsim.run_auth_session(w)
    return w


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from test_acceptance import CRITERION_LINES
    except ImportError:
        return
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
