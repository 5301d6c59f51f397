"""Sharded detection: document-partitioned workers plus a coordinator.

Workers each hold a contiguous block of documents.  The protocol has a
fixed shape:

1. every worker reports its per-word half totals (RowSums);
2. the coordinator broadcasts Init carrying the summed, global totals
   (normalization must be global, or per-shard statistics would not add);
3. workers answer according to the mode:
   * faithful — the integer co-occurrence core of their fragment
     (PartialCooc).  Integer cores add exactly, and the coordinator
     normalizes once, so the distributed result is bit-identical to a
     single-machine run on the same seed.
   * light — the integer diagonal (PartialDiag) and their fragment's
     contribution to the projected matrix C @ U (PartialProj), which is
     additive by linearity.  The coordinator counts per-projection argmax
     wins, shortlists the top 4K words, fetches only those words' rows
     (RowRequest / PartialCooc), and runs neighborhood filtering and
     selection restricted to the shortlist.  This trades the O(W^2) per
     shard traffic of faithful mode for O(W·P + |shortlist|·W) and is an
     approximation: the win counts that build the shortlist are computed
     without neighborhood restriction.

Messages travel as length-prefixed little-endian binary frames so the same
protocol could run over sockets; here an in-memory network with byte
counters carries them.  Duplicate deliveries are ignored (replay safe);
conflicting duplicates, unknown tags, and truncated frames raise
ProtocolError; a frame from a different protocol version raises
VersionMismatch; finalizing without every shard's data raises ShardMissing.
"""

from __future__ import annotations

import enum
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from .cooc import cooc_core, cooc_from_core, split_corpus
from .detect import (
    DetectorConfig,
    DetectionResult,
    count_wins,
    detect_from_cooc,
    estimate_gap,
    neighborhoods,
    projection_directions,
    select_novel,
)
from .errors import (
    IncompleteRecovery,
    ProtocolError,
    ShardMissing,
    VersionMismatch,
)
from .model import Corpus

PROTOCOL_VERSION = 1
AGGREGATOR_ID = 0xFFFF
SHORTLIST_FACTOR = 4

_LENGTH = struct.Struct("<I")
_HEADER = struct.Struct("<HBH")  # version, tag, shard_id


class Tag(enum.IntEnum):
    INIT = 1
    PARTIAL_DIAG = 2
    PARTIAL_COOC = 3
    PARTIAL_PROJ = 4
    DONE = 5
    ROW_SUMS = 6
    ROW_REQUEST = 7


class Mode(enum.IntEnum):
    FAITHFUL = 0
    LIGHT = 1


@dataclass(frozen=True)
class Frame:
    version: int
    tag: Tag
    shard_id: int
    payload: bytes


def encode_frame(tag: Tag, shard_id: int, payload: bytes) -> bytes:
    body = _HEADER.pack(PROTOCOL_VERSION, int(tag), shard_id) + payload
    return _LENGTH.pack(len(body)) + body


def decode_frames(data: bytes) -> list[Frame]:
    """Parse a byte stream into frames; the stream must end on a boundary."""
    frames = []
    pos = 0
    while pos < len(data):
        if len(data) - pos < _LENGTH.size:
            raise ProtocolError("truncated frame: incomplete length prefix")
        (body_len,) = _LENGTH.unpack_from(data, pos)
        pos += _LENGTH.size
        if body_len < _HEADER.size or len(data) - pos < body_len:
            raise ProtocolError("truncated frame: body shorter than declared")
        version, tag_byte, shard_id = _HEADER.unpack_from(data, pos)
        if version != PROTOCOL_VERSION:
            raise VersionMismatch(
                f"frame version {version}, expected {PROTOCOL_VERSION}"
            )
        try:
            tag = Tag(tag_byte)
        except ValueError:
            raise ProtocolError(f"unknown message tag {tag_byte}") from None
        payload = data[pos + _HEADER.size : pos + body_len]
        frames.append(Frame(version, tag, shard_id, payload))
        pos += body_len
    return frames


def _i64(a) -> bytes:
    return np.ascontiguousarray(a, dtype="<i8").tobytes()


def _u32(a) -> bytes:
    return np.ascontiguousarray(a, dtype="<u4").tobytes()


def _f64(a) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def _take(payload: bytes, pos: int, count: int, dtype: str) -> tuple[np.ndarray, int]:
    width = np.dtype(dtype).itemsize
    end = pos + count * width
    if end > len(payload):
        raise ProtocolError("payload shorter than its declared array lengths")
    return np.frombuffer(payload[pos:end], dtype=dtype).copy(), end


_INIT = struct.Struct("<QIIQB")
_ROW_SUMS = struct.Struct("<IQ")
_DIMS = struct.Struct("<II")
_COUNT = struct.Struct("<I")


@dataclass(frozen=True)
class InitMessage:
    """Coordinator -> shards: run parameters plus global totals."""

    seed: int
    n_projections: int
    n_words: int
    n_docs: int
    mode: Mode
    t1: np.ndarray
    t2: np.ndarray

    tag = Tag.INIT

    def to_payload(self) -> bytes:
        head = _INIT.pack(
            self.seed, self.n_projections, self.n_words, self.n_docs, int(self.mode)
        )
        return head + _i64(self.t1) + _i64(self.t2)

    @classmethod
    def from_payload(cls, payload: bytes) -> "InitMessage":
        seed, n_projections, n_words, n_docs, mode = _INIT.unpack_from(payload)
        t1, pos = _take(payload, _INIT.size, n_words, "<i8")
        t2, _ = _take(payload, pos, n_words, "<i8")
        return cls(seed, n_projections, n_words, n_docs, Mode(mode), t1, t2)


@dataclass(frozen=True)
class RowSumsMessage:
    """Shard -> coordinator: per-word totals of each half plus document count."""

    n_docs: int
    t1: np.ndarray
    t2: np.ndarray

    tag = Tag.ROW_SUMS

    def to_payload(self) -> bytes:
        return _ROW_SUMS.pack(self.t1.size, self.n_docs) + _i64(self.t1) + _i64(self.t2)

    @classmethod
    def from_payload(cls, payload: bytes) -> "RowSumsMessage":
        n_words, n_docs = _ROW_SUMS.unpack_from(payload)
        t1, pos = _take(payload, _ROW_SUMS.size, n_words, "<i8")
        t2, _ = _take(payload, pos, n_words, "<i8")
        return cls(n_docs, t1, t2)


@dataclass(frozen=True)
class DiagMessage:
    """Shard -> coordinator: integer diagonal of the fragment's core."""

    diag: np.ndarray

    tag = Tag.PARTIAL_DIAG

    def to_payload(self) -> bytes:
        return _COUNT.pack(self.diag.size) + _i64(self.diag)

    @classmethod
    def from_payload(cls, payload: bytes) -> "DiagMessage":
        (n,) = _COUNT.unpack_from(payload)
        diag, _ = _take(payload, _COUNT.size, n, "<i8")
        return cls(diag)


@dataclass(frozen=True)
class CoocBlockMessage:
    """Shard -> coordinator: integer core rows (all of them in faithful mode)."""

    rows: np.ndarray
    block: np.ndarray

    tag = Tag.PARTIAL_COOC

    def to_payload(self) -> bytes:
        n, m = self.block.shape
        return _DIMS.pack(n, m) + _u32(self.rows) + _i64(self.block)

    @classmethod
    def from_payload(cls, payload: bytes) -> "CoocBlockMessage":
        n, m = _DIMS.unpack_from(payload)
        rows, pos = _take(payload, _DIMS.size, n, "<u4")
        flat, _ = _take(payload, pos, n * m, "<i8")
        return cls(rows.astype(np.int64), flat.reshape(n, m))


@dataclass(frozen=True)
class ProjMessage:
    """Shard -> coordinator: the fragment's contribution to C @ U, as P x W."""

    values: np.ndarray

    tag = Tag.PARTIAL_PROJ

    def to_payload(self) -> bytes:
        p, w = self.values.shape
        return _DIMS.pack(p, w) + _f64(self.values)

    @classmethod
    def from_payload(cls, payload: bytes) -> "ProjMessage":
        p, w = _DIMS.unpack_from(payload)
        flat, _ = _take(payload, _DIMS.size, p * w, "<f8")
        return cls(flat.reshape(p, w))


@dataclass(frozen=True)
class RowRequestMessage:
    """Coordinator -> shards: fetch these words' core rows."""

    rows: np.ndarray

    tag = Tag.ROW_REQUEST

    def to_payload(self) -> bytes:
        return _COUNT.pack(self.rows.size) + _u32(self.rows)

    @classmethod
    def from_payload(cls, payload: bytes) -> "RowRequestMessage":
        (n,) = _COUNT.unpack_from(payload)
        rows, _ = _take(payload, _COUNT.size, n, "<u4")
        return cls(rows.astype(np.int64))


@dataclass(frozen=True)
class DoneMessage:
    """Shard -> coordinator: no more messages from this shard this round."""

    tag = Tag.DONE

    def to_payload(self) -> bytes:
        return b""

    @classmethod
    def from_payload(cls, payload: bytes) -> "DoneMessage":
        return cls()


_MESSAGE_TYPES = {
    Tag.INIT: InitMessage,
    Tag.ROW_SUMS: RowSumsMessage,
    Tag.PARTIAL_DIAG: DiagMessage,
    Tag.PARTIAL_COOC: CoocBlockMessage,
    Tag.PARTIAL_PROJ: ProjMessage,
    Tag.ROW_REQUEST: RowRequestMessage,
    Tag.DONE: DoneMessage,
}


def parse_message(frame: Frame):
    return _MESSAGE_TYPES[frame.tag].from_payload(frame.payload)


@dataclass(frozen=True)
class CorpusFragment:
    """A contiguous block of documents with its global starting index."""

    corpus: Corpus
    doc_offset: int


def shard_partition(n_docs: int, n_shards: int) -> list[tuple[int, int]]:
    """Contiguous document ranges, larger blocks first (ceiling rule)."""
    if n_shards < 1:
        raise ValueError("n_shards must be positive")
    if n_shards > n_docs:
        raise ValueError(f"cannot split {n_docs} documents across {n_shards} shards")
    base, extra = divmod(n_docs, n_shards)
    bounds = []
    lo = 0
    for s in range(n_shards):
        hi = lo + base + (1 if s < extra else 0)
        bounds.append((lo, hi))
        lo = hi
    return bounds


def fragment_corpus(corpus: Corpus, n_shards: int) -> list[CorpusFragment]:
    return [
        CorpusFragment(
            Corpus(corpus.counts[:, lo:hi], doc_length=corpus.doc_length), lo
        )
        for lo, hi in shard_partition(corpus.n_docs, n_shards)
    ]


class ShardWorker:
    """One shard: splits its fragment once, then answers protocol messages."""

    def __init__(self, shard_id: int, fragment: CorpusFragment, seed: int):
        self.shard_id = shard_id
        split = split_corpus(fragment.corpus, seed, doc_offset=fragment.doc_offset)
        self._core, self._t1, self._t2 = cooc_core(split)
        self._n_docs = fragment.corpus.n_docs
        self._init: InitMessage | None = None

    def _frame(self, message) -> bytes:
        return encode_frame(message.tag, self.shard_id, message.to_payload())

    def row_sums_frame(self) -> bytes:
        return self._frame(RowSumsMessage(self._n_docs, self._t1, self._t2))

    def _scaled_projection(self, init: InitMessage) -> np.ndarray:
        # fragment's contribution to C @ U with global normalization:
        # C_frag = M * core / outer(t2, t1), zero totals guarded (their rows
        # and columns of the core are zero anyway)
        t1 = np.where(init.t1 == 0, 1, init.t1).astype(np.float64)
        t2 = np.where(init.t2 == 0, 1, init.t2).astype(np.float64)
        directions = projection_directions(
            init.n_words, init.n_projections, init.seed
        )
        scaled = (self._core / t1[None, :]) @ directions
        return (float(init.n_docs) * scaled / t2[:, None]).T

    def handle(self, frame: Frame) -> list[bytes]:
        message = parse_message(frame)
        if isinstance(message, InitMessage):
            self._init = message
            if message.mode == Mode.FAITHFUL:
                rows = np.arange(self._core.shape[0], dtype=np.int64)
                out = [self._frame(CoocBlockMessage(rows, self._core))]
            else:
                out = [
                    self._frame(DiagMessage(np.diagonal(self._core).copy())),
                    self._frame(ProjMessage(self._scaled_projection(message))),
                ]
            out.append(self._frame(DoneMessage()))
            return out
        if isinstance(message, RowRequestMessage):
            if self._init is None:
                raise ProtocolError("row request received before init")
            block = self._core[message.rows, :]
            return [self._frame(CoocBlockMessage(message.rows, block))]
        raise ProtocolError(f"shard cannot handle {frame.tag.name}")


class Aggregator:
    """Coordinator state machine: collects shard statistics, runs detection."""

    def __init__(self, n_shards: int, n_words: int, config: DetectorConfig, mode: Mode):
        if n_shards < 1:
            raise ValueError("n_shards must be positive")
        self.n_shards = n_shards
        self.n_words = n_words
        self.config = config
        self.mode = mode
        self.result: DetectionResult | None = None
        self._seen: dict[tuple[Tag, int], bytes] = {}
        self._row_sums: dict[int, RowSumsMessage] = {}
        self._blocks: dict[int, CoocBlockMessage] = {}
        self._diags: dict[int, DiagMessage] = {}
        self._projs: dict[int, ProjMessage] = {}
        self._done: set[int] = set()
        self._totals: tuple[np.ndarray, np.ndarray] | None = None
        self._n_docs = 0
        self._shortlist: np.ndarray | None = None

    # -- message intake ------------------------------------------------

    def _is_replay(self, frame: Frame) -> bool:
        key = (frame.tag, frame.shard_id)
        if key in self._seen:
            if self._seen[key] != frame.payload:
                raise ProtocolError(
                    f"shard {frame.shard_id} re-sent {frame.tag.name} "
                    "with different content"
                )
            return True
        self._seen[key] = frame.payload
        return False

    def handle(self, frame: Frame) -> list[bytes]:
        """Consume one shard frame; returns frames to broadcast to shards."""
        if not 0 <= frame.shard_id < self.n_shards:
            raise ProtocolError(f"unknown shard id {frame.shard_id}")
        if self._is_replay(frame):
            return []
        message = parse_message(frame)
        if isinstance(message, RowSumsMessage):
            self._row_sums[frame.shard_id] = message
            if len(self._row_sums) == self.n_shards:
                return [self._broadcast_init()]
            return []
        if isinstance(message, CoocBlockMessage):
            self._blocks[frame.shard_id] = message
        elif isinstance(message, DiagMessage):
            self._diags[frame.shard_id] = message
        elif isinstance(message, ProjMessage):
            self._projs[frame.shard_id] = message
        elif isinstance(message, DoneMessage):
            self._done.add(frame.shard_id)
        else:
            raise ProtocolError(f"coordinator cannot handle {frame.tag.name}")
        return self._advance()

    def _broadcast_init(self) -> bytes:
        t1 = np.zeros(self.n_words, dtype=np.int64)
        t2 = np.zeros(self.n_words, dtype=np.int64)
        for s in range(self.n_shards):
            msg = self._row_sums[s]
            t1 += msg.t1
            t2 += msg.t2
            self._n_docs += msg.n_docs
        self._totals = (t1, t2)
        init = InitMessage(
            seed=self.config.seed,
            n_projections=self.config.n_projections,
            n_words=self.n_words,
            n_docs=self._n_docs,
            mode=self.mode,
            t1=t1,
            t2=t2,
        )
        return encode_frame(Tag.INIT, AGGREGATOR_ID, init.to_payload())

    def _advance(self) -> list[bytes]:
        if len(self._done) < self.n_shards or self.result is not None:
            return []
        if self.mode == Mode.FAITHFUL:
            if len(self._blocks) == self.n_shards:
                self.result = self._finalize_faithful()
            return []
        if self._shortlist is None:
            if len(self._diags) == self.n_shards and len(self._projs) == self.n_shards:
                self._shortlist = self._build_shortlist()
                request = RowRequestMessage(self._shortlist)
                return [
                    encode_frame(Tag.ROW_REQUEST, AGGREGATOR_ID, request.to_payload())
                ]
            return []
        if len(self._blocks) == self.n_shards:
            self.result = self._finalize_light()
        return []

    def finalize(self) -> DetectionResult:
        """Return the result, or raise ShardMissing naming the gaps."""
        if self.result is not None:
            return self.result
        expected: dict[str, dict | set] = {"row_sums": self._row_sums, "done": self._done}
        if self.mode == Mode.FAITHFUL:
            expected["cooc_block"] = self._blocks
        else:
            expected["diag"] = self._diags
            expected["projection"] = self._projs
            if self._shortlist is not None:
                expected["cooc_block"] = self._blocks
        for kind, got in expected.items():
            missing = sorted(set(range(self.n_shards)) - set(got))
            if missing:
                raise ShardMissing(f"no {kind} message from shards {missing}")
        raise ShardMissing("protocol incomplete despite all shards reporting")

    # -- finishing -----------------------------------------------------

    def _finalize_faithful(self) -> DetectionResult:
        assert self._totals is not None
        core = np.zeros((self.n_words, self.n_words), dtype=np.int64)
        for s in range(self.n_shards):
            core += self._blocks[s].block
        cooc = cooc_from_core(core, self._totals[0], self._totals[1], self._n_docs)
        return detect_from_cooc(cooc, self.config)

    def _scaled_diag(self) -> np.ndarray:
        assert self._totals is not None
        t1, t2 = self._totals
        diag = np.zeros(self.n_words, dtype=np.int64)
        for s in range(self.n_shards):
            diag += self._diags[s].diag
        denom = np.where(t1 == 0, 1, t1) * np.where(t2 == 0, 1, t2)
        return float(self._n_docs) * diag / denom

    def _build_shortlist(self) -> np.ndarray:
        assert self._totals is not None
        t1, t2 = self._totals
        active = (t1 > 0) & (t2 > 0)
        values = np.zeros((self.config.n_projections, self.n_words))
        for s in range(self.n_shards):
            values += self._projs[s].values
        wins = np.zeros(self.n_words, dtype=np.int64)
        masked = np.where(active[None, :], values, -np.inf)
        best = masked.max(axis=1)
        for r in range(self.config.n_projections):
            wins += masked[r] >= best[r]
        size = min(SHORTLIST_FACTOR * self.config.n_topics, int(active.sum()))
        order = np.lexsort((np.arange(self.n_words), -wins))
        shortlist = [i for i in order if active[i]][:size]
        return np.sort(np.asarray(shortlist, dtype=np.int64))

    def _finalize_light(self) -> DetectionResult:
        assert self._totals is not None and self._shortlist is not None
        t1, t2 = self._totals
        short = self._shortlist
        rows = np.zeros((short.size, self.n_words), dtype=np.int64)
        for s in range(self.n_shards):
            block = self._blocks[s]
            if not np.array_equal(block.rows, short):
                raise ProtocolError("cooc block rows do not match the request")
            rows += block.block
        denom = np.outer(
            np.where(t2[short] == 0, 1, t2[short]), np.where(t1 == 0, 1, t1)
        ).astype(np.float64)
        c_rows = float(self._n_docs) * rows / denom
        c_sub = c_rows[:, short]
        values = np.zeros((self.config.n_projections, self.n_words))
        for s in range(self.n_shards):
            values += self._projs[s].values
        sub_values = values[:, short].T
        gap = (
            self.config.gram_gap
            if self.config.gram_gap is not None
            else estimate_gap(c_sub)
        )
        t_proj = time.perf_counter()
        nbd = neighborhoods(c_sub, gap)
        phat_sub = count_wins(sub_values, nbd)
        t_select = time.perf_counter()
        try:
            selected_sub, scanned = select_novel(nbd, phat_sub, self.config.n_topics)
        except IncompleteRecovery as err:
            raise IncompleteRecovery(
                str(err), selected=[int(short[i]) for i in err.selected]
            ) from None
        t_done = time.perf_counter()
        phat = np.zeros(self.n_words)
        phat[short] = phat_sub
        nbd_sizes = np.zeros(self.n_words, dtype=np.int64)
        nbd_sizes[short] = nbd.sum(axis=1)
        return DetectionResult(
            selected=[int(short[i]) for i in selected_sub],
            phat=phat,
            nbd_sizes=nbd_sizes,
            diagnostics={
                "gram_gap": gap,
                "gap_estimated": self.config.gram_gap is None,
                "scan_depth": scanned,
                "shortlist": [int(i) for i in short],
                "mode": "light",
                "timing_ms": {
                    "project": (t_select - t_proj) * 1e3,
                    "select": (t_done - t_select) * 1e3,
                },
            },
        )


class SimulatedNetwork:
    """In-memory transport: FIFO queue per recipient with byte accounting."""

    def __init__(self):
        self._inboxes: dict[int, list[bytes]] = {}
        self.bytes_by_tag: dict[str, int] = {}
        self.messages_sent = 0

    def send(self, recipient: int, data: bytes) -> None:
        tag = Tag(data[6]).name  # length (4) + version (2), then the tag byte
        self.bytes_by_tag[tag] = self.bytes_by_tag.get(tag, 0) + len(data)
        self.messages_sent += 1
        self._inboxes.setdefault(recipient, []).append(data)

    def receive(self, recipient: int) -> list[bytes]:
        return self._inboxes.pop(recipient, [])

    @property
    def total_bytes(self) -> int:
        return sum(self.bytes_by_tag.values())


@dataclass(frozen=True)
class DistributedRun:
    """Result of a simulated sharded detection with transport accounting."""

    result: DetectionResult
    n_shards: int
    mode: str
    bytes_by_tag: dict
    total_bytes: int
    messages_sent: int


def run_distributed_detection(
    corpus: Corpus,
    config: DetectorConfig,
    n_shards: int,
    mode: str = "faithful",
) -> DistributedRun:
    """Execute the full sharded protocol over an in-memory network."""
    mode_value = Mode[mode.upper()] if isinstance(mode, str) else Mode(mode)
    t0 = time.perf_counter()
    fragments = fragment_corpus(corpus, n_shards)
    workers = [
        ShardWorker(s, fragment, config.seed) for s, fragment in enumerate(fragments)
    ]
    t_split = time.perf_counter()
    network = SimulatedNetwork()
    aggregator = Aggregator(n_shards, corpus.n_words, config, mode_value)
    for worker in workers:
        network.send(AGGREGATOR_ID, worker.row_sums_frame())
    while aggregator.result is None:
        moved = False
        for data in network.receive(AGGREGATOR_ID):
            for frame in decode_frames(data):
                moved = True
                for reply in aggregator.handle(frame):
                    for worker in workers:
                        network.send(worker.shard_id, reply)
        for worker in workers:
            for data in network.receive(worker.shard_id):
                for frame in decode_frames(data):
                    moved = True
                    for reply in worker.handle(frame):
                        network.send(AGGREGATOR_ID, reply)
        if not moved and aggregator.result is None:
            aggregator.finalize()  # raises ShardMissing with specifics
    # Fold transport + aggregation into the cooc stage so distributed runs
    # report the same four stage timings as single-node ones.
    timing = aggregator.result.diagnostics.setdefault("timing_ms", {})
    loop_ms = (time.perf_counter() - t_split) * 1e3
    timing["split"] = (t_split - t0) * 1e3
    timing["cooc"] = max(
        loop_ms - timing.get("project", 0.0) - timing.get("select", 0.0), 0.0
    )
    return DistributedRun(
        result=aggregator.result,
        n_shards=n_shards,
        mode=Mode(mode_value).name.lower(),
        bytes_by_tag=dict(network.bytes_by_tag),
        total_bytes=network.total_bytes,
        messages_sent=network.messages_sent,
    )
