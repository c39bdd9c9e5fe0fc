"""Bus word traces: hex-line files and seeded synthetic generators."""

from __future__ import annotations

import array
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import TraceError

KINDS = ("uniform-random", "per-bit-toggle", "adversarial", "quiet", "two-phase", "markov")
PHASE_KINDS = ("uniform-random", "per-bit-toggle", "adversarial", "quiet")

_CHUNK = 1 << 18


@dataclass
class Trace:
    words: np.ndarray
    name: str = "trace"
    source: str = "memory"
    n_wires: int = 32

    def __post_init__(self):
        if len(self.words) == 0:
            raise TraceError("trace is empty")
        dtype = np.uint32 if self.n_wires <= 32 else np.uint64
        self.words = np.ascontiguousarray(self.words, dtype=dtype)

    def __len__(self):
        return len(self.words)

    def window(self, start: int, stop: int) -> "Trace":
        return Trace(self.words[start:stop], f"{self.name}[{start}:{stop}]", self.source, self.n_wires)


def load_trace(path, n_wires: int = 32, name: str | None = None) -> Trace:
    """Read one hex word per line; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    limit = 1 << n_wires
    buf = array.array("I" if n_wires <= 32 else "Q")
    with path.open() as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                value = int(text, 16)
            except ValueError:
                raise TraceError(f"not a hexadecimal word: {text!r}", lineno) from None
            if value < 0 or value >= limit:
                raise TraceError(f"word {text} exceeds the {n_wires}-bit bus", lineno)
            buf.append(value)
    if not buf:
        raise TraceError(f"{path}: no words")
    return Trace(np.frombuffer(buf, dtype=np.uint32 if n_wires <= 32 else np.uint64).copy(),
                 name or path.stem, f"file:{path}", n_wires)


def save_trace(trace: Trace, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    digits = (trace.n_wires + 3) // 4
    fmt = f"{{:0{digits}x}}\n"
    with path.open("w") as fh:
        fh.write(f"# {trace.name} ({trace.source})\n")
        for start in range(0, len(trace), _CHUNK):
            fh.write("".join(fmt.format(w) for w in trace.words[start:start + _CHUNK].tolist()))
    return path


# ---------------------------------------------------------------------------
# generators

def _toggle_masks(rng, m: int, n_wires: int, p: float) -> np.ndarray:
    bits = rng.random((m, n_wires), dtype=np.float32) < p
    packed = np.packbits(bits, axis=1, bitorder="little")
    padded = np.zeros((m, 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view("<u8").reshape(m)


def alternating_pattern(n_wires: int) -> int:
    return int("01" * 32, 2) & ((1 << n_wires) - 1)


def _phase(kind: str, m: int, rng, n_wires: int, start: int, p: float = 0.5) -> np.ndarray:
    full = (1 << n_wires) - 1
    if kind == "quiet":
        return np.full(m, start, dtype=np.uint64)
    if kind == "uniform-random":
        return rng.integers(0, full, size=m, dtype=np.uint64, endpoint=True)
    if kind == "adversarial":
        pat = alternating_pattern(n_wires)
        out = np.empty(m, dtype=np.uint64)
        first, second = (pat ^ full, pat) if start == pat else (pat, pat ^ full)
        out[0::2] = first
        out[1::2] = second
        return out
    if kind == "per-bit-toggle":
        if not 0.0 <= p <= 1.0:
            raise TraceError(f"toggle probability must be in [0, 1], got {p}")
        out = np.empty(m, dtype=np.uint64)
        word = np.uint64(start)
        for s in range(0, m, _CHUNK):
            masks = _toggle_masks(rng, min(_CHUNK, m - s), n_wires, p)
            block = np.bitwise_xor.accumulate(masks) ^ word
            out[s:s + len(block)] = block
            word = block[-1]
        return out
    raise TraceError(f"unknown trace kind {kind!r}; expected one of {KINDS}")


def _phased(n, rng, n_wires, start, lengths, a, b):
    out = np.empty(n, dtype=np.uint64)
    pos, which, word = 0, 0, start
    for length in lengths:
        if pos >= n:
            break
        kind, p = (a, b)[which]
        m = int(min(max(length, 1), n - pos))
        block = _phase(kind, m, rng, n_wires, word, p)
        out[pos:pos + m] = block
        word = int(block[-1])
        pos += m
        which ^= 1
    return out


def generate(kind: str, n: int, seed: int = 0, params: dict | None = None,
             n_wires: int = 32, name: str | None = None) -> Trace:
    """Synthetic trace of ``n`` words; a pure function of its arguments.

    ``per-bit-toggle`` flips each wire independently with probability ``p``.
    ``two-phase`` alternates phase ``a`` (``len_a`` words) and phase ``b``
    (``len_b`` words); ``markov`` switches between them with probability
    ``switch_prob`` per word. Phase kinds are quiet, per-bit-toggle,
    uniform-random and adversarial, with toggle rates ``a_p``/``b_p``.
    """
    params = dict(params or {})
    if n < 1:
        raise TraceError("trace length must be at least 1")
    if kind not in KINDS:
        raise TraceError(f"unknown trace kind {kind!r}; expected one of {KINDS}")
    rng = np.random.default_rng(seed)
    full = (1 << n_wires) - 1
    start = int(params.pop("start", rng.integers(0, full, endpoint=True, dtype=np.uint64)))
    if kind in PHASE_KINDS:
        if kind == "quiet":
            start = int(params.pop("value", 0))
        words = _phase(kind, n, rng, n_wires, start, float(params.pop("p", 0.5)))
    else:
        a = (params.pop("a", "quiet"), float(params.pop("a_p", 0.5)))
        b = (params.pop("b", "adversarial"), float(params.pop("b_p", 0.5)))
        for phase_kind, _ in (a, b):
            if phase_kind not in PHASE_KINDS:
                raise TraceError(f"phase kind must be one of {PHASE_KINDS}, got {phase_kind!r}")
        if kind == "two-phase":
            len_a = int(params.pop("len_a", max(n // 2, 1)))
            len_b = int(params.pop("len_b", len_a))
            lengths = [len_a, len_b] * (n // max(min(len_a, len_b), 1) + 2)
        else:
            q = float(params.pop("switch_prob", 1e-4))
            if not 0 < q <= 1:
                raise TraceError("switch_prob must be in (0, 1]")
            lengths = []
            total = 0
            while total < n:
                length = int(rng.geometric(q))
                lengths.append(length)
                total += length
        words = _phased(n, rng, n_wires, start, lengths, a, b)
    if params:
        raise TraceError(f"unknown parameters for {kind}: {sorted(params)}")
    label = name or f"{kind}-s{seed}"
    return Trace(words, label, f"gen:{kind}", n_wires)


# Stand-ins for a suite of ten programs with distinct bus activity.
PSEUDO_BENCHMARKS = {
    "pb01-sparse": ("per-bit-toggle", {"p": 0.06}),
    "pb02-light": ("per-bit-toggle", {"p": 0.12}),
    "pb03-moderate": ("per-bit-toggle", {"p": 0.20}),
    "pb04-busy": ("per-bit-toggle", {"p": 0.30}),
    "pb05-streaming": ("uniform-random", {}),
    "pb06-bursty": ("two-phase", {"a": "per-bit-toggle", "a_p": 0.05, "b": "per-bit-toggle",
                                  "b_p": 0.35, "len_a": 200_000, "len_b": 100_000}),
    "pb07-phased": ("markov", {"a": "per-bit-toggle", "a_p": 0.08, "b": "per-bit-toggle",
                               "b_p": 0.25, "switch_prob": 2e-5}),
    "pb08-mixed": ("two-phase", {"a": "per-bit-toggle", "a_p": 0.15, "b": "uniform-random",
                                 "len_a": 300_000, "len_b": 60_000}),
    "pb09-idle": ("two-phase", {"a": "quiet", "b": "per-bit-toggle", "b_p": 0.25,
                                "len_a": 150_000, "len_b": 150_000}),
    "pb10-dense": ("per-bit-toggle", {"p": 0.40}),
}


def pseudo_benchmark(name: str, n: int, seed: int = 0, n_wires: int = 32) -> Trace:
    try:
        kind, params = PSEUDO_BENCHMARKS[name]
    except KeyError:
        raise TraceError(f"unknown pseudo-benchmark {name!r}") from None
    return generate(kind, n, seed, params, n_wires, name=name)


def pseudo_benchmark_suite(n: int, seed: int = 0, n_wires: int = 32) -> list[Trace]:
    return [pseudo_benchmark(name, n, seed + i, n_wires) for i, name in enumerate(PSEUDO_BENCHMARKS)]


def _coerce(value: str):
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            pass
    return value


def parse_trace_spec(text: str, n: int = 1_000_000, seed: int = 0, n_wires: int = 32) -> Trace:
    """Resolve a trace argument.

    Forms: ``gen:<kind>[:key=value,...]`` (``n`` and ``seed`` may be given as
    keys), ``bench:<name>[:n=...,seed=...]``, ``file:<path>`` or a bare path.
    """
    if text.startswith("gen:") or text.startswith("bench:"):
        head, _, rest = text.partition(":")
        kind, _, arglist = rest.partition(":")
        params = {}
        for item in filter(None, arglist.split(",")):
            key, eq, value = item.partition("=")
            if not eq:
                raise TraceError(f"trace parameter {item!r} must be key=value")
            params[key.strip()] = _coerce(value.strip())
        n = int(params.pop("n", n))
        seed = int(params.pop("seed", seed))
        if head == "bench":
            if params:
                raise TraceError(f"bench traces take only n and seed, got {sorted(params)}")
            return pseudo_benchmark(kind, n, seed, n_wires)
        return generate(kind, n, seed, params, n_wires)
    path = text[5:] if text.startswith("file:") else text
    if not Path(path).exists():
        raise TraceError(f"trace file {path} not found")
    return load_trace(path, n_wires)
