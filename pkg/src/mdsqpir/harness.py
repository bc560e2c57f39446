"""In-process simulation: one user actor and n server actors on a message bus.

Servers only ever see their own two storage columns and their own query
slice, and only ever emit one pair of response symbols per round.  The bus
logs every message; the log plus the seed is the transcript.

With ``threaded=True`` each server runs in its own thread and drains a queue.
Responses are re-ordered by server id before the user touches them, so the
transcript bytes do not depend on scheduling.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import asdict, dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import linalg, protocol
from .gf import FieldSpec, field_for_length, gf
from .protocol import SchemeParams, StorageMatrix


class ConfigError(ValueError):
    pass


class IsolationError(RuntimeError):
    """A server saw, or tried to send, something outside its allowance."""


@dataclass
class SimulationConfig:
    n: int
    k: int
    t: int
    m: int = 1
    r: int | None = None
    seed: int = 0
    backend: str = "fast"
    files: str = "random"
    iota: int = 1
    threaded: bool = False

    def __post_init__(self):
        if self.backend not in protocol.BACKENDS:
            raise ConfigError(f"backend must be one of {protocol.BACKENDS}, got {self.backend!r}")
        if not 1 <= self.iota <= self.m:
            raise ConfigError(f"iota={self.iota} outside [1, {self.m}]")

    @property
    def field(self) -> FieldSpec:
        if self.r is None:
            return field_for_length(self.n)
        return gf(self.r)

    def params(self) -> SchemeParams:
        try:
            return protocol.derive_params(self.n, self.k, self.t, self.m, self.field)
        except protocol.ParameterError as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self) -> dict:
        d = asdict(self)
        d["field"] = {"r": self.field.r}
        del d["r"]
        return d

    @classmethod
    def from_json(cls, data: dict) -> "SimulationConfig":
        data = dict(data)
        missing = {"n", "k", "t"} - set(data)
        if missing:
            raise ConfigError(f"config is missing {sorted(missing)}")
        fld = data.pop("field", None)
        if fld is not None:
            data["r"] = int(fld["r"])
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "SimulationConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


def streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for file contents and for query randomness."""
    files_ss, query_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(files_ss), np.random.default_rng(query_ss)


def load_matrix(path, field: FieldSpec) -> np.ndarray:
    return linalg.matrix_from_hex(json.loads(Path(path).read_text()), field)


def save_matrix(path, a) -> None:
    Path(path).write_text(json.dumps(linalg.matrix_to_hex(a)))


def make_storage(config: SimulationConfig, params: SchemeParams, rng: np.random.Generator) -> StorageMatrix:
    if config.files == "random":
        x = protocol.random_files(params, rng)
    else:
        x = load_matrix(config.files, params.field)
    return protocol.encode_storage(x, params)


@dataclass(frozen=True)
class Message:
    sender: str
    recipient: str
    kind: str
    round: int
    payload: tuple


class MessageBus:
    def __init__(self):
        self.log: list[Message] = []
        self._lock = threading.Lock()

    def send(self, msg: Message) -> None:
        with self._lock:
            self.log.append(msg)


class ServerActor:
    """Server ``s``: holds ``(Y_{1,s}, Y_{2,s})`` and answers queries."""

    def __init__(self, s: int, field: FieldSpec, bus: MessageBus):
        self.s = s
        self.name = f"server{s}"
        self.field = field
        self.bus = bus
        self._columns: tuple[np.ndarray, np.ndarray] | None = None
        self.inbox: queue.Queue = queue.Queue()
        self.received: list[str] = []

    def store(self, msg: Message) -> None:
        self._check(msg, "store")
        y1, y2 = msg.payload
        self._columns = (np.array(y1, dtype=np.uint8), np.array(y2, dtype=np.uint8))

    def handle_query(self, msg: Message) -> Message:
        self._check(msg, "query")
        if self._columns is None:
            raise IsolationError(f"{self.name} queried before storage was distributed")
        q1, q2 = msg.payload
        b = protocol.server_respond(self.field, self._columns, (q1, q2))
        out = Message(self.name, "user", "response", msg.round, (int(b[0]), int(b[1])))
        self.bus.send(out)
        return out

    def _check(self, msg: Message, kind: str) -> None:
        if msg.recipient != self.name or msg.kind != kind or len(msg.payload) != 2:
            raise IsolationError(f"{self.name} received {msg.kind} addressed to {msg.recipient}")
        self.received.append(kind)

    def run(self, replies: queue.Queue) -> None:
        while True:
            msg = self.inbox.get()
            if msg is None:
                return
            replies.put(self.handle_query(msg))


@dataclass
class Transcript:
    config: dict
    params: dict
    seed: int
    iota: int
    rounds: list[dict] = dc_field(default_factory=list)
    decoded: list[list[str]] = dc_field(default_factory=list)
    messages: list[dict] = dc_field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "params": self.params,
            "seed": self.seed,
            "iota": self.iota,
            "rounds": self.rounds,
            "decoded": self.decoded,
            "messages": self.messages,
        }

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_json(cls, data: dict) -> "Transcript":
        return cls(**data)

    @classmethod
    def load(cls, path) -> "Transcript":
        return cls.from_json(json.loads(Path(path).read_text()))

    @property
    def downloaded_systems(self) -> int:
        return sum(len(r["responses"]) for r in self.rounds)

    @property
    def retrieved_symbols(self) -> int:
        return sum(len(row) for row in self.decoded)

    def measured_rate(self) -> Fraction:
        return Fraction(self.retrieved_symbols, self.downloaded_systems)


class UserActor:
    def __init__(self, params: SchemeParams, iota: int, rng: np.random.Generator, backend: str, bus: MessageBus):
        self.params = params
        self.iota = iota
        self.rng = rng
        self.backend = backend
        self.bus = bus

    def queries(self, r: int) -> tuple[protocol.RoundGeometry, protocol.QueryBundle, list[Message]]:
        geo = self.params.geometry(r)
        bundle = protocol.build_queries(self.params, geo, self.iota, self.rng)
        msgs = []
        for s in range(1, self.params.n + 1):
            q1, q2 = bundle.server_slice(s)
            msg = Message("user", f"server{s}", "query", r, (q1.copy(), q2.copy()))
            self.bus.send(msg)
            msgs.append(msg)
        return geo, bundle, msgs

    def decode_round(self, geo: protocol.RoundGeometry, replies: list[Message]) -> tuple[np.ndarray, np.ndarray]:
        n = self.params.n
        replies = sorted(replies, key=lambda m: int(m.sender.removeprefix("server")))
        if [m.sender for m in replies] != [f"server{s}" for s in range(1, n + 1)]:
            raise IsolationError("missing or duplicate server responses")
        b = np.zeros(2 * n, dtype=np.uint8)
        for s, m in enumerate(replies):
            b[s], b[n + s] = m.payload
        if self.backend == "fast":
            o = protocol.decode_fast(geo, b)
        else:
            o, prob = protocol.decode_oracle(self.params, geo, b)
            if abs(prob - 1) > 1e-9:
                raise protocol.CertificationError(f"round {geo.r}: outcome probability {prob}")
            if self.backend == "both":
                fast = protocol.decode_fast(geo, b)
                if not np.array_equal(fast, o):
                    raise protocol.CertificationError(f"round {geo.r}: fast {fast} != oracle {o}")
        return b, o


def run_simulation(config: SimulationConfig, out: str | Path | None = None) -> Transcript:
    params = config.params()
    files_rng, query_rng = streams(config.seed)
    storage = make_storage(config, params, files_rng)
    bus = MessageBus()
    servers = [ServerActor(s, params.field, bus) for s in range(1, params.n + 1)]
    for srv in servers:
        msg = Message("dealer", srv.name, "store", 0, storage.server_columns(srv.s))
        bus.send(msg)
        srv.store(msg)
    user = UserActor(params, config.iota, query_rng, config.backend, bus)
    tr = Transcript(config.to_json(), params.to_json(), config.seed, config.iota)

    replies_q: queue.Queue = queue.Queue()
    threads = []
    if config.threaded:
        threads = [threading.Thread(target=srv.run, args=(replies_q,), daemon=True) for srv in servers]
        for th in threads:
            th.start()
    outcomes = []
    try:
        for r in range(1, params.rho + 1):
            geo, bundle, msgs = user.queries(r)
            if config.threaded:
                for srv, msg in zip(servers, msgs):
                    srv.inbox.put(msg)
                replies = [replies_q.get(timeout=60) for _ in servers]
            else:
                replies = [srv.handle_query(msg) for srv, msg in zip(servers, msgs)]
            b, o = user.decode_round(geo, replies)
            outcomes.append(o)
            tr.rounds.append(
                {
                    "r": r,
                    "queries": {str(s): [linalg.vector_to_hex(q) for q in bundle.server_slice(s)] for s in range(1, params.n + 1)},
                    "responses": {str(s): linalg.vector_to_hex([b[s - 1], b[params.n + s - 1]]) for s in range(1, params.n + 1)},
                    "outcome": linalg.vector_to_hex(o),
                }
            )
    finally:
        for srv in servers if config.threaded else []:
            srv.inbox.put(None)
        for th in threads:
            th.join(timeout=5)
    for srv in servers:
        if srv.received != ["store"] + ["query"] * params.rho:
            raise IsolationError(f"{srv.name} received {srv.received}")
    decoded = protocol.assemble(params, outcomes)
    tr.decoded = linalg.matrix_to_hex(decoded)
    # bus order can interleave under threads; the canonical log is sorted
    order = {"store": 0, "query": 1, "response": 2}
    tr.messages = sorted(
        ({"from": m.sender, "to": m.recipient, "kind": m.kind, "round": m.round} for m in bus.log),
        key=lambda d: (d["round"], order[d["kind"]], d["from"], d["to"]),
    )
    if out is not None:
        tr.save(out)
    return tr


def expected_file(config: SimulationConfig) -> np.ndarray:
    """The stored file ``X^iota`` a transcript should decode to."""
    params = config.params()
    files_rng, _ = streams(config.seed)
    return make_storage(config, params, files_rng).file(params, config.iota)


def verify_transcript(tr: Transcript) -> list[tuple[str, bool]]:
    """Checks that need nothing but the transcript itself."""
    cfg = SimulationConfig.from_json(tr.config)
    params = cfg.params()
    n = params.n
    checks = []
    outcomes = []
    ok_outcomes = True
    for rec in tr.rounds:
        geo = params.geometry(rec["r"])
        b = np.zeros(2 * n, dtype=np.uint8)
        for s in range(1, n + 1):
            b[s - 1], b[n + s - 1] = (int(v, 16) for v in rec["responses"][str(s)])
        o = protocol.decode_fast(geo, b)
        ok_outcomes &= linalg.vector_to_hex(o) == rec["outcome"]
        outcomes.append(o)
    checks.append(("recorded outcomes equal the coset labels of the recorded responses", bool(ok_outcomes)))
    checks.append(("decoded file follows from the recorded outcomes", linalg.matrix_to_hex(protocol.assemble(params, outcomes)) == tr.decoded))
    checks.append(("replaying the seed reproduces the transcript bytes", run_simulation(cfg).to_bytes() == tr.to_bytes()))
    checks.append(("measured rate equals 2(n-k-t+1)/n", tr.measured_rate() == protocol.scheme_rate(params)))
    return checks


def two_server_example(files, iota: int, seed: int = 0) -> dict:
    """Two servers, one replicated bit pair per file, one shared Bell-type pair.

    ``files`` is an ``m x 2`` array of bits ``(m_X, m_Z)``.  Queries are
    ``q_1 = Z + e_iota`` and ``q_2 = Z`` in both halves; the pair ends in the
    coset of ``(m_X, 0 | m_Z, 0)``.
    """
    files = np.asarray(files, dtype=np.uint8)
    params = protocol.derive_params(2, 1, 1, files.shape[0], gf(1))
    storage = protocol.encode_storage(files, params)
    geo = params.geometry(1)
    _, query_rng = streams(seed)
    res = protocol.run_round(params, geo, storage, iota, query_rng, backend="both")
    z = res.queries.z
    e = np.zeros(params.m, dtype=np.uint8)
    e[iota - 1] = 1
    q1, q2 = res.queries.server_slice(1), res.queries.server_slice(2)
    decoded = protocol.assemble(params, [res.outcome])
    return {
        "params": params,
        "storage": storage,
        "round": res,
        "queries_match": all(np.array_equal(q1[p], z[:, p] ^ e) and np.array_equal(q2[p], z[:, p]) for p in (0, 1)),
        "representative": geo.space.representative(protocol.label_of(res.outcome)),
        "decoded": decoded,
        "rate": protocol.scheme_rate(params),
    }
