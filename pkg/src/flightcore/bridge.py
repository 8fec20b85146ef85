"""TCP message bridge decoupling the simulation from external clients.

A renderer, logger, or language binding connects over TCP and receives
vehicle pose streams while issuing configuration, point-cloud, and
environment-session requests. The simulation loop never blocks on a slow
client: each connection has a bounded publish queue (drop-oldest).

Wire format (version 1)
-----------------------
Every frame is::

    u32 LE payload length | u8 tag | payload bytes

Payloads are little-endian and begin with a u64 message id; replies carry
the request's id in a ref_id field. Tags:

    0  VERSION             u64 id, u16 protocol version
    1  STATE_UPDATE        u64 id, f64 sim_time, u32 count,
                           count * (u32 env_id, f64 p[3], f64 q[4])
    2  CONFIGURE           u64 id, utf-8 "key = value" lines
    3  POINTCLOUD_REQUEST  u64 id, f64 bounds[6] (min, max), f64 resolution
    4  POINTCLOUD_CHUNK    u64 id, u64 ref_id, u32 index, u32 total, bytes
    5  ACK                 u64 id, u64 ref_id, utf-8 info lines
    6  ERROR               u64 id, u64 ref_id, utf-8 reason

Environment-session extension (same framing, gym-style out-of-process use):

    16 ENV_MAKE            u64 id, utf-8 config lines (task, n_envs, ...)
    17 ENV_RESET           u64 id
    18 ENV_STEP            u64 id, u32 n, u32 act_dim, f64 actions[n*act_dim]
    19 ENV_RESULT          u64 id, u64 ref_id, u32 n, u32 obs_dim,
                           f64 obs[n*obs_dim], f64 rewards[n],
                           u8 dones[n], u8 reason_codes[n]
    20 ENV_CLOSE           u64 id

Point-cloud replies chunk the exact bytes of export_ply; chunks may be
reassembled in any order by index. A request whose payload length does not
match its tag's structure gets an ERROR reply with reason "frame length
mismatch" and the connection stays usable.
"""

from __future__ import annotations

import hashlib
import socket
import struct
import threading
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import config as _config
from .tasks import TerminationReason, action_bounds, code_from_reason
from .vecenv import BatchResult, VecSim, VecSimConfig
from .world import OccupancyCloud, export_ply_bytes

PROTOCOL_VERSION = 1
ENV_BRIDGE = "FLIGHTCORE_BRIDGE"

MAX_PAYLOAD = 64 * 1024 * 1024
DEFAULT_QUEUE_DEPTH = 8
DEFAULT_CHUNK_SIZE = 64 * 1024

TAG_VERSION = 0
TAG_STATE_UPDATE = 1
TAG_CONFIGURE = 2
TAG_POINTCLOUD_REQUEST = 3
TAG_POINTCLOUD_CHUNK = 4
TAG_ACK = 5
TAG_ERROR = 6
TAG_ENV_MAKE = 16
TAG_ENV_RESET = 17
TAG_ENV_STEP = 18
TAG_ENV_RESULT = 19
TAG_ENV_CLOSE = 20

_HEAD = struct.Struct("<IB")
_U64 = struct.Struct("<Q")
_POSE_DTYPE = np.dtype([("env_id", "<u4"), ("p", "<f8", 3), ("q", "<f8", 4)])


class ProtocolError(ValueError):
    """Frame payload does not match its tag's structure."""


class BridgeError(RuntimeError):
    """Server-side error reply received by a client."""


def parse_endpoint(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep or not host:
        raise ValueError(f"endpoint must be host:port, got {address!r}")
    return host, int(port)


def params_digest(params) -> str:
    text = (f"mass={params.mass!r};arm={params.arm_length!r};"
            f"J={params.inertia.tolist()!r};D={params.drag.tolist()!r};"
            f"kappa={params.kappa!r};tau={params.motor_tau!r};"
            f"f=[{params.thrust_min!r},{params.thrust_max!r}];g={params.gravity!r}")
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# -- frame encoding ---------------------------------------------------------

def encode_frame(tag: int, payload: bytes) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {len(payload)} bytes exceeds limit")
    return _HEAD.pack(len(payload), tag) + payload


def encode_version(msg_id: int, version: int = PROTOCOL_VERSION) -> bytes:
    return encode_frame(TAG_VERSION, _U64.pack(msg_id) + struct.pack("<H", version))


def encode_state_update(msg_id: int, sim_time: float, positions: np.ndarray,
                        quats: np.ndarray) -> bytes:
    n = len(positions)
    poses = np.empty(n, dtype=_POSE_DTYPE)
    poses["env_id"] = np.arange(n, dtype=np.uint32)
    poses["p"] = positions
    poses["q"] = quats
    payload = _U64.pack(msg_id) + struct.pack("<dI", sim_time, n) + poses.tobytes()
    return encode_frame(TAG_STATE_UPDATE, payload)


def encode_kv(tag: int, msg_id: int, items: dict) -> bytes:
    text = "".join(f"{k} = {v}\n" for k, v in items.items())
    return encode_frame(tag, _U64.pack(msg_id) + text.encode("utf-8"))


def encode_pointcloud_request(msg_id: int, lo, hi, resolution: float) -> bytes:
    payload = _U64.pack(msg_id) + struct.pack(
        "<7d", lo[0], lo[1], lo[2], hi[0], hi[1], hi[2], resolution)
    return encode_frame(TAG_POINTCLOUD_REQUEST, payload)


def encode_pointcloud_chunk(msg_id: int, ref_id: int, index: int, total: int,
                            data: bytes) -> bytes:
    payload = struct.pack("<QQII", msg_id, ref_id, index, total) + data
    return encode_frame(TAG_POINTCLOUD_CHUNK, payload)


def encode_ack(msg_id: int, ref_id: int, info: str = "") -> bytes:
    return encode_frame(TAG_ACK, struct.pack("<QQ", msg_id, ref_id) + info.encode("utf-8"))


def encode_error(msg_id: int, ref_id: int, reason: str) -> bytes:
    return encode_frame(TAG_ERROR, struct.pack("<QQ", msg_id, ref_id) + reason.encode("utf-8"))


def encode_env_reset(msg_id: int) -> bytes:
    return encode_frame(TAG_ENV_RESET, _U64.pack(msg_id))


def encode_env_close(msg_id: int) -> bytes:
    return encode_frame(TAG_ENV_CLOSE, _U64.pack(msg_id))


def encode_env_step(msg_id: int, actions: np.ndarray) -> bytes:
    actions = np.ascontiguousarray(actions, dtype="<f8")
    n, act_dim = actions.shape
    payload = _U64.pack(msg_id) + struct.pack("<II", n, act_dim) + actions.tobytes()
    return encode_frame(TAG_ENV_STEP, payload)


def encode_env_result(msg_id: int, ref_id: int, observations: np.ndarray,
                      rewards: np.ndarray, dones: np.ndarray,
                      reason_codes: np.ndarray) -> bytes:
    obs = np.ascontiguousarray(observations, dtype="<f8")
    n, obs_dim = obs.shape
    payload = (struct.pack("<QQII", msg_id, ref_id, n, obs_dim)
               + obs.tobytes()
               + np.ascontiguousarray(rewards, dtype="<f8").tobytes()
               + np.ascontiguousarray(dones, dtype=np.uint8).tobytes()
               + np.ascontiguousarray(reason_codes, dtype=np.uint8).tobytes())
    return encode_frame(TAG_ENV_RESULT, payload)


# -- frame decoding ---------------------------------------------------------

@dataclass
class Message:
    tag: int
    msg_id: int
    ref_id: int = 0
    text: str = ""
    sim_time: float = 0.0
    poses: Optional[np.ndarray] = None          # (n, 8): env_id, p, q
    bounds: Optional[np.ndarray] = None         # (7,): lo, hi, resolution
    chunk_index: int = 0
    chunk_total: int = 0
    data: bytes = b""
    actions: Optional[np.ndarray] = None
    observations: Optional[np.ndarray] = None
    rewards: Optional[np.ndarray] = None
    dones: Optional[np.ndarray] = None
    reason_codes: Optional[np.ndarray] = None
    version: int = 0


def _need(payload: bytes, n: int):
    if len(payload) < n:
        raise ProtocolError("frame length mismatch")


def decode_message(tag: int, payload: bytes) -> Message:
    """Decode one payload; raises ProtocolError on any structural mismatch."""
    _need(payload, 8)
    msg_id = _U64.unpack_from(payload)[0]
    body = payload[8:]

    if tag == TAG_VERSION:
        if len(body) != 2:
            raise ProtocolError("frame length mismatch")
        return Message(tag, msg_id, version=struct.unpack("<H", body)[0])

    if tag == TAG_STATE_UPDATE:
        if len(body) < 12:
            raise ProtocolError("frame length mismatch")
        sim_time, n = struct.unpack_from("<dI", body)
        rest = body[12:]
        if len(rest) != n * _POSE_DTYPE.itemsize:
            raise ProtocolError("frame length mismatch")
        rec = np.frombuffer(rest, dtype=_POSE_DTYPE)
        poses = np.empty((n, 8))
        poses[:, 0] = rec["env_id"]
        poses[:, 1:4] = rec["p"]
        poses[:, 4:8] = rec["q"]
        return Message(tag, msg_id, sim_time=sim_time, poses=poses)

    if tag in (TAG_CONFIGURE, TAG_ENV_MAKE):
        try:
            text = body.decode("utf-8")
        except UnicodeDecodeError:
            raise ProtocolError("malformed text payload") from None
        return Message(tag, msg_id, text=text)

    if tag == TAG_POINTCLOUD_REQUEST:
        if len(body) != 7 * 8:
            raise ProtocolError("frame length mismatch")
        return Message(tag, msg_id, bounds=np.frombuffer(body, dtype="<f8").copy())

    if tag == TAG_POINTCLOUD_CHUNK:
        if len(body) < 16:
            raise ProtocolError("frame length mismatch")
        ref_id, index, total = struct.unpack_from("<QII", body)
        return Message(tag, msg_id, ref_id=ref_id, chunk_index=index,
                       chunk_total=total, data=body[16:])

    if tag in (TAG_ACK, TAG_ERROR):
        if len(body) < 8:
            raise ProtocolError("frame length mismatch")
        ref_id = _U64.unpack_from(body)[0]
        try:
            text = body[8:].decode("utf-8")
        except UnicodeDecodeError:
            raise ProtocolError("malformed text payload") from None
        return Message(tag, msg_id, ref_id=ref_id, text=text)

    if tag in (TAG_ENV_RESET, TAG_ENV_CLOSE):
        if body:
            raise ProtocolError("frame length mismatch")
        return Message(tag, msg_id)

    if tag == TAG_ENV_STEP:
        if len(body) < 8:
            raise ProtocolError("frame length mismatch")
        n, act_dim = struct.unpack_from("<II", body)
        rest = body[8:]
        if len(rest) != n * act_dim * 8:
            raise ProtocolError("frame length mismatch")
        actions = np.frombuffer(rest, dtype="<f8").reshape(n, act_dim).copy()
        return Message(tag, msg_id, actions=actions)

    if tag == TAG_ENV_RESULT:
        if len(body) < 16:
            raise ProtocolError("frame length mismatch")
        ref_id, n, obs_dim = struct.unpack_from("<QII", body)
        rest = body[16:]
        expected = n * obs_dim * 8 + n * 8 + n + n
        if len(rest) != expected:
            raise ProtocolError("frame length mismatch")
        obs_bytes = n * obs_dim * 8
        obs = np.frombuffer(rest[:obs_bytes], dtype="<f8").reshape(n, obs_dim).copy()
        rewards = np.frombuffer(rest[obs_bytes:obs_bytes + n * 8], dtype="<f8").copy()
        dones = np.frombuffer(rest[obs_bytes + n * 8: obs_bytes + n * 9],
                              dtype=np.uint8).astype(bool)
        codes = np.frombuffer(rest[obs_bytes + n * 9:], dtype=np.uint8).copy()
        return Message(tag, msg_id, ref_id=ref_id, observations=obs, rewards=rewards,
                       dones=dones, reason_codes=codes)

    raise ProtocolError(f"unknown tag {tag}")


def read_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("connection closed")
        buf.extend(chunk)
    return bytes(buf)


def read_frame(sock: socket.socket) -> tuple[int, bytes]:
    head = read_exact(sock, _HEAD.size)
    length, tag = _HEAD.unpack(head)
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"declared payload of {length} bytes exceeds limit")
    return tag, read_exact(sock, length)


# -- server -----------------------------------------------------------------

class _Connection:
    def __init__(self, sock: socket.socket, server: "BridgeServer"):
        self.sock = sock
        self.server = server
        self.send_lock = threading.Lock()
        self.queue: deque = deque()
        self.queue_lock = threading.Lock()
        self.queue_ready = threading.Condition(self.queue_lock)
        self.dropped = 0
        self.closed = False
        self.env: Optional[VecSim] = None

    def send(self, frame: bytes):
        with self.send_lock:
            self.sock.sendall(frame)

    def enqueue_state(self, frame: bytes):
        with self.queue_lock:
            if len(self.queue) >= self.server.queue_depth:
                self.queue.popleft()
                self.dropped += 1
            self.queue.append(frame)
            self.queue_ready.notify()

    def close(self):
        if not self.closed:
            self.closed = True
            with self.queue_lock:
                self.queue_ready.notify_all()
            try:
                self.sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self.sock.close()


class BridgeServer:
    """Serves pose streams and answers configuration/point-cloud/env requests.

    One reader thread per connection handles requests serially; a separate
    publisher thread drains the connection's bounded state queue so the
    simulation loop never blocks on a slow consumer (old states are dropped,
    counted in `dropped_frames`).
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 world: Optional[OccupancyCloud] = None,
                 sim_config: Optional[VecSimConfig] = None,
                 queue_depth: int = DEFAULT_QUEUE_DEPTH,
                 chunk_size: int = DEFAULT_CHUNK_SIZE):
        self.world = world
        self.sim_config = sim_config or VecSimConfig(n_envs=1)
        self.sim: Optional[VecSim] = None
        self.queue_depth = queue_depth
        self.chunk_size = chunk_size
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._listener.bind((host, port))
        except OSError as exc:
            self._listener.close()
            raise OSError(f"cannot bind bridge endpoint {host}:{port}: {exc}") from exc
        self._listener.listen(8)
        self.host, self.port = self._listener.getsockname()[:2]
        self._conns: list[_Connection] = []
        self._conns_lock = threading.Lock()
        self._threads: list[threading.Thread] = []
        self._msg_id = 0
        self._msg_id_lock = threading.Lock()
        self._running = False
        self.published_frames = 0

    @property
    def address(self) -> str:
        return f"{self.host}:{self.port}"

    @property
    def dropped_frames(self) -> int:
        with self._conns_lock:
            return sum(c.dropped for c in self._conns)

    def _next_id(self) -> int:
        with self._msg_id_lock:
            self._msg_id += 1
            return self._msg_id

    def start(self):
        self._running = True
        t = threading.Thread(target=self._accept_loop, name="bridge-accept", daemon=True)
        t.start()
        self._threads.append(t)

    def stop(self):
        self._running = False
        try:
            self._listener.close()
        except OSError:
            pass
        with self._conns_lock:
            conns = list(self._conns)
        for c in conns:
            c.close()
        for t in self._threads:
            t.join(timeout=2.0)

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()
        return False

    # -- publishing --------------------------------------------------------

    def publish_state(self, sim_time: float, positions: np.ndarray, quats: np.ndarray):
        """Enqueue a StateUpdate for every connection; never blocks."""
        with self._conns_lock:
            conns = list(self._conns)
        if not conns:
            return
        frame = encode_state_update(self._next_id(), sim_time, positions, quats)
        self.published_frames += 1
        for c in conns:
            c.enqueue_state(frame)

    def publish_batch(self, result: BatchResult):
        self.publish_state(float(result.times.max(initial=0.0)),
                           result.positions, result.quats)

    # -- internals ----------------------------------------------------------

    def _accept_loop(self):
        while self._running:
            try:
                sock, _addr = self._listener.accept()
            except OSError:
                return
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn = _Connection(sock, self)
            with self._conns_lock:
                self._conns.append(conn)
            rt = threading.Thread(target=self._reader_loop, args=(conn,),
                                  name="bridge-reader", daemon=True)
            pt = threading.Thread(target=self._publisher_loop, args=(conn,),
                                  name="bridge-publisher", daemon=True)
            rt.start()
            pt.start()
            self._threads.extend([rt, pt])

    def _drop_connection(self, conn: _Connection):
        conn.close()
        with self._conns_lock:
            if conn in self._conns:
                self._conns.remove(conn)

    def _publisher_loop(self, conn: _Connection):
        while not conn.closed:
            with conn.queue_lock:
                while not conn.queue and not conn.closed:
                    conn.queue_ready.wait(timeout=0.5)
                frame = conn.queue.popleft() if conn.queue else None
            if frame is None:
                continue
            try:
                conn.send(frame)
            except OSError:
                self._drop_connection(conn)
                return

    def _reader_loop(self, conn: _Connection):
        try:
            while not conn.closed:
                try:
                    tag, payload = read_frame(conn.sock)
                except ProtocolError as exc:
                    # unrecoverable framing (bogus length): report and close
                    try:
                        conn.send(encode_error(self._next_id(), 0, str(exc)))
                    except OSError:
                        pass
                    return
                self._handle_frame(conn, tag, payload)
        except (ConnectionError, OSError):
            pass
        finally:
            self._drop_connection(conn)

    def _handle_frame(self, conn: _Connection, tag: int, payload: bytes):
        try:
            msg = decode_message(tag, payload)
        except ProtocolError as exc:
            ref = _U64.unpack_from(payload)[0] if len(payload) >= 8 else 0
            self._safe_send(conn, encode_error(self._next_id(), ref, str(exc)))
            return
        try:
            self._dispatch(conn, msg)
        except Exception as exc:  # reply instead of killing the connection
            self._safe_send(conn, encode_error(self._next_id(), msg.msg_id,
                                               f"{type(exc).__name__}: {exc}"))

    def _safe_send(self, conn: _Connection, frame: bytes):
        try:
            conn.send(frame)
        except OSError:
            self._drop_connection(conn)

    def _dispatch(self, conn: _Connection, msg: Message):
        if msg.tag == TAG_VERSION:
            conn.send(encode_version(self._next_id()))
        elif msg.tag == TAG_CONFIGURE:
            self._handle_configure(conn, msg)
        elif msg.tag == TAG_POINTCLOUD_REQUEST:
            self._handle_pointcloud(conn, msg)
        elif msg.tag == TAG_ENV_MAKE:
            self._handle_env_make(conn, msg)
        elif msg.tag == TAG_ENV_RESET:
            self._handle_env_reset(conn, msg)
        elif msg.tag == TAG_ENV_STEP:
            self._handle_env_step(conn, msg)
        elif msg.tag == TAG_ENV_CLOSE:
            conn.env = None
            conn.send(encode_ack(self._next_id(), msg.msg_id))
        else:
            conn.send(encode_error(self._next_id(), msg.msg_id,
                                   f"unexpected tag {msg.tag}"))

    def _handle_configure(self, conn: _Connection, msg: Message):
        cfg = _config.parse_config(msg.text, source="<configure>")
        overrides = {}
        if "n_envs" in cfg:
            overrides["n_envs"] = _config.get_int(cfg, "n_envs", 1)
        if "dt" in cfg:
            overrides["dt"] = _config.get_float(cfg, "dt", 0.02)
        base = self.sim_config
        self.sim_config = VecSimConfig(
            n_envs=overrides.get("n_envs", base.n_envs),
            dt=overrides.get("dt", base.dt),
            method=base.method, n_workers=base.n_workers,
            base_seed=base.base_seed, params=base.params, gains=base.gains,
            noise=base.noise)
        sim = VecSim(self.sim_config)
        sim.reset()
        self.sim = sim  # publish only once reset, the serve loop may be watching
        params = self.sim_config.params_list()[0]
        info = (f"n_envs = {self.sim_config.n_envs}\n"
                f"dt = {self.sim_config.dt!r}\n"
                f"params_digest = {params_digest(params)}\n")
        conn.send(encode_ack(self._next_id(), msg.msg_id, info))

    def _handle_pointcloud(self, conn: _Connection, msg: Message):
        if self.world is None:
            conn.send(encode_error(self._next_id(), msg.msg_id, "no world loaded"))
            return
        lo, hi = msg.bounds[0:3], msg.bounds[3:6]
        cloud = self.world
        if np.all(hi >= lo) and np.any(hi > lo):
            cloud = cloud.crop(lo, hi)
        data = export_ply_bytes(cloud)
        total = max(1, (len(data) + self.chunk_size - 1) // self.chunk_size)
        for index in range(total):
            piece = data[index * self.chunk_size:(index + 1) * self.chunk_size]
            conn.send(encode_pointcloud_chunk(self._next_id(), msg.msg_id,
                                              index, total, piece))

    def _env_config_from_text(self, text: str) -> VecSimConfig:
        cfg = _config.parse_config(text, source="<env_make>")
        if "task" not in cfg:
            raise ValueError("env_make requires a task key")
        return VecSimConfig.from_config(cfg)

    def _handle_env_make(self, conn: _Connection, msg: Message):
        env_cfg = self._env_config_from_text(msg.text)
        conn.env = VecSim(env_cfg)
        conn.env.reset()
        spec = env_cfg.task
        lo, hi = action_bounds(spec, env_cfg.params_list()[0])
        info = (f"n_envs = {env_cfg.n_envs}\n"
                f"obs_dim = {spec.obs_dim}\n"
                f"act_dim = {spec.act_dim}\n"
                f"act_low = {','.join(repr(float(x)) for x in lo)}\n"
                f"act_high = {','.join(repr(float(x)) for x in hi)}\n"
                f"max_steps = {spec.max_steps}\n")
        conn.send(encode_ack(self._next_id(), msg.msg_id, info))

    def _require_env(self, conn: _Connection) -> VecSim:
        if conn.env is None:
            raise ValueError("no environment session (send env_make first)")
        return conn.env

    def _send_env_result(self, conn: _Connection, ref_id: int, result: BatchResult):
        codes = np.zeros(result.n_envs, dtype=np.uint8)
        for i, info in enumerate(result.infos):
            if result.done[i] and "termination" in info:
                codes[i] = code_from_reason(TerminationReason(info["termination"]))
        conn.send(encode_env_result(self._next_id(), ref_id, result.observations,
                                    result.rewards if result.rewards is not None
                                    else np.zeros(result.n_envs),
                                    result.done.astype(np.uint8), codes))

    def _handle_env_reset(self, conn: _Connection, msg: Message):
        env = self._require_env(conn)
        result = env.reset()
        self.publish_batch(result)
        self._send_env_result(conn, msg.msg_id, result)

    def _handle_env_step(self, conn: _Connection, msg: Message):
        env = self._require_env(conn)
        result = env.step_actions(msg.actions)
        self.publish_batch(result)
        self._send_env_result(conn, msg.msg_id, result)


def serve(address: str, sim_config: Optional[VecSimConfig] = None,
          world: Optional[OccupancyCloud] = None, **kwargs) -> BridgeServer:
    """Bind and start a bridge server at "host:port"; returns the handle."""
    host, port = parse_endpoint(address)
    server = BridgeServer(host=host, port=port, world=world,
                          sim_config=sim_config, **kwargs)
    server.start()
    return server


# -- client -----------------------------------------------------------------

class BridgeClient:
    """Synchronous bridge client (also the test suite's mock renderer).

    StateUpdate frames arriving between request replies are buffered in
    `state_updates` (bounded). Requests raise BridgeError on ERROR replies.
    """

    def __init__(self, address: str, timeout: float = 10.0,
                 max_buffered_states: int = 1024):
        host, port = parse_endpoint(address)
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._msg_id = 0
        self.state_updates: deque = deque(maxlen=max_buffered_states)
        self.max_buffered_states = max_buffered_states

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    def _next_id(self) -> int:
        self._msg_id += 1
        return self._msg_id

    def send_raw(self, frame: bytes):
        self.sock.sendall(frame)

    def read_message(self) -> Message:
        tag, payload = read_frame(self.sock)
        return decode_message(tag, payload)

    def _read_reply(self) -> Message:
        while True:
            msg = self.read_message()
            if msg.tag == TAG_STATE_UPDATE:
                self.state_updates.append(msg)
                continue
            if msg.tag == TAG_ERROR:
                raise BridgeError(msg.text)
            return msg

    def handshake(self) -> int:
        self.send_raw(encode_version(self._next_id()))
        msg = self._read_reply()
        if msg.tag != TAG_VERSION:
            raise BridgeError(f"expected version reply, got tag {msg.tag}")
        return msg.version

    def configure(self, **items) -> dict:
        self.send_raw(encode_kv(TAG_CONFIGURE, self._next_id(), items))
        msg = self._read_reply()
        if msg.tag != TAG_ACK:
            raise BridgeError(f"expected ack, got tag {msg.tag}")
        return _parse_info(msg.text)

    def request_pointcloud(self, lo=(0, 0, 0), hi=(0, 0, 0),
                           resolution: float = 0.0) -> bytes:
        """Request the world cloud as PLY bytes; degenerate bounds mean 'all'."""
        self.send_raw(encode_pointcloud_request(self._next_id(), lo, hi, resolution))
        chunks: dict[int, bytes] = {}
        total = None
        while total is None or len(chunks) < total:
            msg = self._read_reply()
            if msg.tag != TAG_POINTCLOUD_CHUNK:
                raise BridgeError(f"expected chunk, got tag {msg.tag}")
            chunks[msg.chunk_index] = msg.data
            total = msg.chunk_total
        return b"".join(chunks[i] for i in range(total))

    def env_make(self, task: str, n_envs: int, seed: int = 0, **extra) -> dict:
        items = {"task": task, "n_envs": n_envs, "base_seed": seed, **extra}
        self.send_raw(encode_kv(TAG_ENV_MAKE, self._next_id(), items))
        msg = self._read_reply()
        if msg.tag != TAG_ACK:
            raise BridgeError(f"expected ack, got tag {msg.tag}")
        return _parse_info(msg.text)

    def env_reset(self) -> Message:
        self.send_raw(encode_env_reset(self._next_id()))
        return self._expect_env_result()

    def env_step(self, actions: np.ndarray) -> Message:
        self.send_raw(encode_env_step(self._next_id(), actions))
        return self._expect_env_result()

    def env_close(self):
        self.send_raw(encode_env_close(self._next_id()))
        msg = self._read_reply()
        if msg.tag != TAG_ACK:
            raise BridgeError(f"expected ack, got tag {msg.tag}")

    def _expect_env_result(self) -> Message:
        msg = self._read_reply()
        if msg.tag != TAG_ENV_RESULT:
            raise BridgeError(f"expected env result, got tag {msg.tag}")
        return msg


def _parse_info(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
