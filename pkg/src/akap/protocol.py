"""Three-party authentication and key agreement over XOR/hash algebra.

Parties: a user with a smart card, a trusted gateway, and a sensor node.
Registration runs over a secure channel (Figs. of the scheme: user gets a
card, sensor gets a masked shared secret). Login runs over the public
channel as a four-message exchange M1..M4, after which all three parties
hold the session key derived from the three per-session nonces.

Operations are pure transitions: they take explicit state plus inputs and
return new values; the only mutation is the gateway inserting a row into
its tables on successful registration. Any verification failure raises
before state is touched, so a failed call leaves every party unchanged.

All hashing goes through ProtoConfig.hash_alg. Quantities that appear in
XOR expressions but are not naturally 32 bytes wide (the password, the
sensor id) are lifted into the Block group via canon_block under the tags
"PWB" and "SID".
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .blocks import (
    Biometric,
    Block,
    DEFAULT_HASH,
    HelperData,
    Sigma,
    canon_block,
    hash_names,
    hasher,
)
from .errors import (
    AuthenticatorMismatch,
    ConfigError,
    LocalAuthFailed,
    RegistrationRejected,
    StaleTimestamp,
    UnknownIdentity,
)
from .fuzzy import gen_fuzzy, rep_fuzzy
from .messages import (
    M1,
    M2,
    M3,
    M4,
    SensorRegResponse,
    UserRegRequest,
    UserRegResponse,
)
from .pke import PkeKeyPair, pke_decrypt, pke_encrypt
from .rng import SeededRng

PW_TAG = "PWB"
SID_TAG = "SID"


@dataclass(frozen=True)
class ProtoConfig:
    """Knobs shared by every operation in one deployment."""

    hash_alg: str = DEFAULT_HASH
    delta: int = 2                  # freshness window, in clock ticks
    quirk_double_rg: bool = False   # reproduce the inconsistent X_GS form

    def __post_init__(self):
        if self.hash_alg not in hash_names():
            raise ConfigError(
                f"unknown hash {self.hash_alg!r}; choose one of {', '.join(hash_names())}"
            )
        if self.delta < 1:
            raise ConfigError(f"freshness window must be >= 1 tick, got {self.delta}")


DEFAULT_CONFIG = ProtoConfig()


@dataclass(frozen=True)
class UserCredentials:
    id: str
    pw: str
    bio: Biometric

    def __post_init__(self):
        if not self.id:
            raise ConfigError("user id must be nonempty")
        if not self.pw:
            raise ConfigError("password must be nonempty")


@dataclass
class GatewayState:
    """Long-term gateway state. The per-user d2 is never stored anywhere."""

    gj: Block
    user_table: dict[Block, Block] = field(default_factory=dict)    # hid -> d1
    sensor_table: dict[str, Block] = field(default_factory=dict)    # sid -> pid
    routing: dict[Block, str] = field(default_factory=dict)         # hid -> sid


@dataclass(frozen=True)
class PendingRegistration:
    """User-side scratch kept between the request and the card hand-back."""

    hid: Block
    r1: Block
    n: Block
    sigma: Sigma
    tau: HelperData


@dataclass(frozen=True)
class SmartCardStore:
    """Everything written to the user's card at enrollment."""

    d1: Block
    d3: Block
    d4: Block
    omega: Block
    m: Block
    tau: HelperData


@dataclass(frozen=True)
class SensorState:
    sid: str
    sg: Block
    l: bytes
    pid: Block
    keys: PkeKeyPair


@dataclass(frozen=True)
class UserSessionState:
    r_u: Block
    b1: Block
    d1: Block
    hid: Block
    n: Block
    t1: int


@dataclass(frozen=True)
class GatewaySessionState:
    r_u: Block
    r_g: Block
    d1: Block
    hid: Block
    sid: str
    b1: Block
    t2: int


@dataclass
class SessionOutcome:
    """What one party walks away with after its part of a session."""

    sk: Block
    peer_confirmed: bool
    transcript_ids: list[int] = field(default_factory=list)


def derive_sk(r_u: Block, r_g: Block, r_s: Block, alg: str = DEFAULT_HASH) -> Block:
    """Session key: hash of the user, gateway, and sensor nonces in order."""
    return hasher(alg)(r_u, r_g, r_s)


def _check_fresh(sent: int, now: int, cfg: ProtoConfig, label: str, party: str) -> None:
    # Closed window: a timestamp exactly delta ticks old is still accepted.
    if abs(now - sent) > cfg.delta:
        raise StaleTimestamp(label, party, sent, now, cfg.delta)


def gateway_new(rng: SeededRng) -> GatewayState:
    """Provision a gateway with a fresh long-term secret."""
    return GatewayState(gj=rng.next_block())


# --- registration, user side and gateway side ------------------------------

def user_register_request(
    cred: UserCredentials, rng: SeededRng, cfg: ProtoConfig = DEFAULT_CONFIG
) -> tuple[UserRegRequest, PendingRegistration]:
    H = hasher(cfg.hash_alg)
    r1 = rng.next_block()
    sigma, tau = gen_fuzzy(cred.bio, rng)
    hid = H(cred.id, r1)                                   # masked identity
    hpw = H(cred.pw, sigma)                                # biometric-bound password digest
    n = canon_block(PW_TAG, cred.pw, cfg.hash_alg) ^ H(cred.id, sigma)
    request = UserRegRequest(hid=hid, hpw=hpw, n=n)
    pending = PendingRegistration(hid=hid, r1=r1, n=n, sigma=sigma, tau=tau)
    return request, pending


def gateway_register_user(
    gw: GatewayState, req: UserRegRequest, cfg: ProtoConfig = DEFAULT_CONFIG
) -> UserRegResponse:
    if req.hid in gw.user_table:
        raise RegistrationRejected("duplicate masked identity at gateway")
    H = hasher(cfg.hash_alg)
    d1 = H(req.hid, req.n)
    d2 = H(d1, gw.gj) ^ req.hpw        # operation-local; leaves scope below
    d3 = d2 ^ req.n
    d4 = H(req.hid, gw.gj) ^ d1
    gw.user_table[req.hid] = d1
    return UserRegResponse(d1=d1, d3=d3, d4=d4)


def user_finalize_registration(
    pending: PendingRegistration,
    resp: UserRegResponse,
    cfg: ProtoConfig = DEFAULT_CONFIG,
) -> SmartCardStore:
    H = hasher(cfg.hash_alg)
    omega = pending.n ^ pending.r1
    m = H(pending.n, pending.r1) ^ pending.hid
    return SmartCardStore(
        d1=resp.d1, d3=resp.d3, d4=resp.d4, omega=omega, m=m, tau=pending.tau
    )


# --- registration, sensor side ---------------------------------------------

def gateway_register_sensor(
    gw: GatewayState,
    sid: str,
    public_key: bytes,
    rng: SeededRng,
    cfg: ProtoConfig = DEFAULT_CONFIG,
) -> SensorRegResponse:
    if not sid:
        raise RegistrationRejected("sensor id must be nonempty")
    if sid in gw.sensor_table:
        raise RegistrationRejected(f"duplicate sensor id {sid!r} at gateway")
    H = hasher(cfg.hash_alg)
    b = rng.next_block()
    pid = H(sid, b)                                # pseudo identity
    hsid = H(sid, gw.gj)
    sg = H(hsid, gw.gj) ^ pid
    l = pke_encrypt(public_key, pid)               # pid travels wrapped
    gw.sensor_table[sid] = pid
    return SensorRegResponse(sg=sg, l=l)


def sensor_finalize_registration(
    sid: str,
    keys: PkeKeyPair,
    resp: SensorRegResponse,
    cfg: ProtoConfig = DEFAULT_CONFIG,
) -> SensorState:
    pid = Block(pke_decrypt(keys.private_key, resp.l))
    return SensorState(sid=sid, sg=resp.sg, l=resp.l, pid=pid, keys=keys)


# --- login and authentication, M1 .. M4 ------------------------------------

def user_login(
    cred: UserCredentials,
    card: SmartCardStore,
    rng: SeededRng,
    now: int,
    cfg: ProtoConfig = DEFAULT_CONFIG,
) -> tuple[M1, UserSessionState]:
    H = hasher(cfg.hash_alg)
    # Rebuild the registration-time quantities from the fresh biometric read.
    sigma = rep_fuzzy(cred.bio, card.tau)
    n = canon_block(PW_TAG, cred.pw, cfg.hash_alg) ^ H(cred.id, sigma)
    r1 = card.omega ^ n
    hid = H(cred.id, r1)
    if H(n, r1) ^ hid != card.m:
        raise LocalAuthFailed("smart card check failed: wrong password or biometric")
    hpw = H(cred.pw, sigma)
    r_u = rng.next_block()
    b1 = card.d3 ^ n ^ hpw             # equals h(d1 || gj) when inputs are honest
    b2 = b1 ^ r_u
    x_ug = H(now, r_u, hid, b2)
    m1 = M1(hid=hid, b2=b2, x_ug=x_ug, t1=now)
    session = UserSessionState(r_u=r_u, b1=b1, d1=card.d1, hid=hid, n=n, t1=now)
    return m1, session


def gateway_process_m1(
    gw: GatewayState,
    m1: M1,
    rng: SeededRng,
    now: int,
    cfg: ProtoConfig = DEFAULT_CONFIG,
) -> tuple[M2, GatewaySessionState]:
    _check_fresh(m1.t1, now, cfg, "T1", "gateway")
    d1 = gw.user_table.get(m1.hid)
    if d1 is None:
        raise UnknownIdentity("unknown masked identity at gateway")
    H = hasher(cfg.hash_alg)
    b1 = H(d1, gw.gj)
    r_u = b1 ^ m1.b2
    if H(m1.t1, r_u, m1.hid, m1.b2) != m1.x_ug:
        raise AuthenticatorMismatch("X_UG", "gateway")
    sid = gw.routing.get(m1.hid)
    if sid is None:
        raise UnknownIdentity("no sensor route configured for this user")
    pid = gw.sensor_table.get(sid)
    if pid is None:
        raise UnknownIdentity(f"routed sensor {sid!r} is not registered")
    r_g = rng.next_block()
    hsid_key = H(H(sid, gw.gj), gw.gj)             # h(hsid || gj), shared with sensor
    b3 = r_u ^ hsid_key
    b4 = d1 ^ H(b3, sid, r_u)
    b5 = r_g ^ H(d1, r_u)
    b6 = b3 ^ pid
    if cfg.quirk_double_rg:
        # Historical inconsistency switch: the sender doubles the gateway
        # nonce in the authenticator while receivers never do, so sessions
        # run this way fail at the sensor. Kept for study.
        x_gs = H(now, r_u, r_g, r_g, sid, b5)
    else:
        x_gs = H(now, r_u, r_g, sid, b5)
    m2 = M2(b4=b4, b5=b5, b6=b6, x_gs=x_gs, t2=now)
    session = GatewaySessionState(
        r_u=r_u, r_g=r_g, d1=d1, hid=m1.hid, sid=sid, b1=b1, t2=now
    )
    return m2, session


def sensor_process_m2(
    sn: SensorState,
    m2: M2,
    rng: SeededRng,
    now: int,
    cfg: ProtoConfig = DEFAULT_CONFIG,
) -> tuple[M3, SessionOutcome]:
    _check_fresh(m2.t2, now, cfg, "T2", "sensor")
    H = hasher(cfg.hash_alg)
    b3 = m2.b6 ^ sn.pid
    r_u = b3 ^ (sn.sg ^ sn.pid)        # sg ^ pid restores h(hsid || gj)
    d1 = m2.b4 ^ H(b3, sn.sid, r_u)
    r_g = m2.b5 ^ H(d1, r_u)
    if H(m2.t2, r_u, r_g, sn.sid, m2.b5) != m2.x_gs:
        raise AuthenticatorMismatch("X_GS", "sensor")
    r_s = rng.next_block()
    b7 = r_s ^ H(sn.sg, d1, r_g)
    b8 = sn.pid ^ b7
    sk = derive_sk(r_u, r_g, r_s, cfg.hash_alg)
    x_sg = H(now, r_g, r_s, b7, sn.sg)
    # The user can only ever reconstruct the canonical block form of the
    # sensor id (from b11), so this one authenticator binds that form.
    x_su = H(r_u, r_s, canon_block(SID_TAG, sn.sid, cfg.hash_alg), d1)
    m3 = M3(b8=b8, x_sg=x_sg, x_su=x_su, t3=now)
    return m3, SessionOutcome(sk=sk, peer_confirmed=True)


def gateway_process_m3(
    gw: GatewayState,
    session: GatewaySessionState,
    m3: M3,
    now: int,
    cfg: ProtoConfig = DEFAULT_CONFIG,
) -> tuple[M4, SessionOutcome]:
    _check_fresh(m3.t3, now, cfg, "T3", "gateway")
    pid = gw.sensor_table.get(session.sid)
    if pid is None:
        raise UnknownIdentity(f"routed sensor {session.sid!r} is not registered")
    H = hasher(cfg.hash_alg)
    sg = H(H(session.sid, gw.gj), gw.gj) ^ pid
    b7 = m3.b8 ^ pid
    r_s = b7 ^ H(sg, session.d1, session.r_g)
    if H(m3.t3, session.r_g, r_s, b7, sg) != m3.x_sg:
        raise AuthenticatorMismatch("X_SG", "gateway")
    sk = derive_sk(session.r_u, session.r_g, r_s, cfg.hash_alg)
    b9 = session.d1 ^ session.b1
    b10 = b9 ^ H(session.hid, gw.gj) ^ r_s
    b5 = session.r_g ^ H(session.d1, session.r_u)   # reissued from session state
    b11 = canon_block(SID_TAG, session.sid, cfg.hash_alg) ^ H(session.b1, r_s)
    x_gu = H(now, session.r_u, session.r_g, b10)
    m4 = M4(b5=b5, b10=b10, b11=b11, x_gu=x_gu, x_su=m3.x_su, t4=now)
    return m4, SessionOutcome(sk=sk, peer_confirmed=True)


def user_process_m4(
    session: UserSessionState,
    card: SmartCardStore,
    m4: M4,
    now: int,
    cfg: ProtoConfig = DEFAULT_CONFIG,
) -> SessionOutcome:
    _check_fresh(m4.t4, now, cfg, "T4", "user")
    H = hasher(cfg.hash_alg)
    r_s = session.b1 ^ m4.b10 ^ card.d4
    r_g = m4.b5 ^ H(session.d1, session.r_u)
    sk = derive_sk(session.r_u, r_g, r_s, cfg.hash_alg)
    if H(m4.t4, session.r_u, r_g, m4.b10) != m4.x_gu:
        raise AuthenticatorMismatch("X_GU", "user")
    sid_block = m4.b11 ^ H(session.b1, r_s)
    if H(session.r_u, r_s, sid_block, session.d1) != m4.x_su:
        raise AuthenticatorMismatch("X_SU", "user")
    return SessionOutcome(sk=sk, peer_confirmed=True)
