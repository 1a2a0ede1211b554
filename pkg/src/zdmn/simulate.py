"""Execution engine for codes on a discrete memoryless network.

Runs the exact per-slot generation order (channels fire in index order
inside each slot; a zero-delay node sees its current-slot received symbol
because its receive channel fired earlier in the same slot), estimates
error probabilities by seeded Monte Carlo, computes exact induced joints
by enumeration at tiny scale, and implements the masked-feedback scheme
for the binary symmetric channel with correlated feedback.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceCapError, SpecIOError
from .model import (DelayProfile, NetworkSpec, is_feasible,
                    validate_spec, x_var, y_var)
from .polar import PolarCode
from .probability import (JointPmf, binary_entropy, compose_channels,
                          conditional_mutual_information)

JOINT_CAP = 2 ** 24
_WILSON_Z = 1.959963984540054  # two-sided 95% normal quantile


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based per-trial stream: parallel trials reproduce serial ones."""
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=seed, spawn_key=(trial,))))


def _fold_index(values, sizes) -> int:
    idx = 0
    for v, s in zip(values, sizes):
        idx = idx * s + v
    return idx


def _unfold_index(idx: int, sizes) -> list[int]:
    out = [0] * len(sizes)
    for pos in range(len(sizes) - 1, -1, -1):
        out[pos] = idx % sizes[pos]
        idx //= sizes[pos]
    return out


# ---------------------------------------------------------------------------
# codes


class Code:
    """A deterministic block code for a network.

    ``encode(i, k, w_row, y_prefix)`` maps node i's own messages and its
    permitted received prefix to the slot-k input symbol; ``decode(i, j,
    w_row, y_seq)`` estimates the message from i at node j.  ``w_row`` for
    node i lists the messages i originates, destinations in ascending
    order.  The engine passes exactly k - b_i received symbols, so a code
    cannot peek past its delay profile.
    """

    n: int
    message_sizes: tuple
    delay_profile: DelayProfile

    def encode(self, i: int, k: int, w_row: tuple, y_prefix: tuple) -> int:
        raise NotImplementedError

    def decode(self, i: int, j: int, w_row: tuple, y_seq: tuple) -> int:
        raise NotImplementedError

    # shared helpers -------------------------------------------------------
    def message_pairs(self):
        n_nodes = len(self.message_sizes)
        return [(i, j) for i in range(1, n_nodes + 1)
                for j in range(1, n_nodes + 1)
                if self.message_sizes[i - 1][j - 1] > 1]

    def w_row_of(self, i: int, messages: dict) -> tuple:
        n_nodes = len(self.message_sizes)
        return tuple(messages.get((i, j), 0)
                     for j in range(1, n_nodes + 1) if j != i)


def _check_message_sizes(message_sizes) -> tuple:
    sizes = tuple(tuple(int(v) for v in row) for row in message_sizes)
    n_nodes = len(sizes)
    for i, row in enumerate(sizes):
        if len(row) != n_nodes:
            raise DomainError("message_sizes must be square")
        for j, v in enumerate(row):
            if v < 1 or (i == j and v != 1):
                raise DomainError("message sizes must be >= 1 with unit diagonal")
    return sizes


@dataclass(frozen=True)
class FunctionCode(Code):
    """Code defined by per-node encoder and per-pair decoder callables."""

    n: int
    message_sizes: tuple
    delay_profile: DelayProfile
    encoders: dict
    decoders: dict

    def __post_init__(self):
        object.__setattr__(self, "message_sizes",
                           _check_message_sizes(self.message_sizes))

    def encode(self, i, k, w_row, y_prefix):
        return int(self.encoders[i](k, w_row, y_prefix))

    def decode(self, i, j, w_row, y_seq):
        return int(self.decoders[(i, j)](w_row, y_seq))


@dataclass(frozen=True)
class TableCode(Code):
    """Table-driven code: per node and slot, (message index, prefix index)
    -> input symbol; per pair, (message index, received-word index) -> estimate.

    Message and received-word indices fold symbol tuples most-significant
    first (ascending destination order; ascending slot order).
    """

    n: int
    message_sizes: tuple
    delay_profile: DelayProfile
    input_sizes: tuple      # |X_i| per node, ascending
    output_sizes: tuple     # |Y_i| per node, ascending
    encoder_tables: tuple   # [node-1][slot-1] -> 2-D int array
    decoder_tables: dict    # (i, j) -> 2-D int array

    def __post_init__(self):
        object.__setattr__(self, "message_sizes",
                           _check_message_sizes(self.message_sizes))

    def _w_radices(self, i: int) -> tuple:
        n_nodes = len(self.message_sizes)
        return tuple(self.message_sizes[i - 1][j - 1]
                     for j in range(1, n_nodes + 1) if j != i)

    def encode(self, i, k, w_row, y_prefix):
        w_idx = _fold_index(w_row, self._w_radices(i))
        y_idx = _fold_index(y_prefix, (self.output_sizes[i - 1],) * len(y_prefix))
        return int(self.encoder_tables[i - 1][k - 1][w_idx, y_idx])

    def decode(self, i, j, w_row, y_seq):
        w_idx = _fold_index(w_row, self._w_radices(j))
        y_idx = _fold_index(y_seq, (self.output_sizes[j - 1],) * len(y_seq))
        return int(self.decoder_tables[(i, j)][w_idx, y_idx])


def random_table_code(spec: NetworkSpec, n: int, profile: DelayProfile,
                      seed: int, message_size: int = 2) -> TableCode:
    """Uniformly random encoder/decoder tables for every ordered node pair."""
    if not is_feasible(spec, profile):
        raise DomainError(f"delay profile {profile.delays} infeasible for this network")
    if n < 1:
        raise DomainError("blocklength must be >= 1")
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=seed)))
    nn = spec.n_nodes
    sizes = tuple(tuple(1 if i == j else message_size for j in range(nn))
                  for i in range(nn))
    w_spaces = [int(np.prod([sizes[i][j] for j in range(nn) if j != i],
                            dtype=np.int64)) for i in range(nn)]
    enc = []
    for i in range(1, nn + 1):
        per_slot = []
        b = profile.delay_of(i)
        for k in range(1, n + 1):
            y_space = spec.output_alphabet_sizes[i - 1] ** (k - b)
            per_slot.append(rng.integers(
                0, spec.input_alphabet_sizes[i - 1],
                size=(w_spaces[i - 1], y_space), dtype=np.int64))
        enc.append(tuple(per_slot))
    dec = {}
    for i in range(1, nn + 1):
        for j in range(1, nn + 1):
            if i != j and sizes[i - 1][j - 1] > 1:
                y_space = spec.output_alphabet_sizes[j - 1] ** n
                dec[(i, j)] = rng.integers(0, sizes[i - 1][j - 1],
                                           size=(w_spaces[j - 1], y_space),
                                           dtype=np.int64)
    return TableCode(n=n, message_sizes=sizes, delay_profile=profile,
                     input_sizes=tuple(spec.input_alphabet_sizes),
                     output_sizes=tuple(spec.output_alphabet_sizes),
                     encoder_tables=tuple(enc), decoder_tables=dec)


def code_to_dict(code: TableCode) -> dict:
    return {
        "n": code.n,
        "message_sizes": [list(r) for r in code.message_sizes],
        "delay_profile": list(code.delay_profile.delays),
        "input_sizes": list(code.input_sizes),
        "output_sizes": list(code.output_sizes),
        "encoders": [{"node": i + 1,
                      "tables": [t.tolist() for t in code.encoder_tables[i]]}
                     for i in range(len(code.encoder_tables))],
        "decoders": [{"source": i, "sink": j, "table": t.tolist()}
                     for (i, j), t in sorted(code.decoder_tables.items())],
    }


def code_from_dict(data: dict) -> TableCode:
    try:
        enc = [None] * len(data["input_sizes"])
        for entry in data["encoders"]:
            enc[entry["node"] - 1] = tuple(
                np.asarray(t, dtype=np.int64) for t in entry["tables"])
        dec = {(e["source"], e["sink"]): np.asarray(e["table"], dtype=np.int64)
               for e in data["decoders"]}
        return TableCode(
            n=int(data["n"]),
            message_sizes=tuple(tuple(int(v) for v in row)
                                for row in data["message_sizes"]),
            delay_profile=DelayProfile.of(data["delay_profile"]),
            input_sizes=tuple(int(v) for v in data["input_sizes"]),
            output_sizes=tuple(int(v) for v in data["output_sizes"]),
            encoder_tables=tuple(enc), decoder_tables=dec)
    except (KeyError, TypeError, ValueError, IndexError, AttributeError) as exc:
        raise SpecIOError(f"malformed code description: {exc}") from exc


def load_code(path) -> TableCode:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecIOError(f"cannot read code file {path}: {exc}") from exc
    return code_from_dict(data)


def save_code(code: TableCode, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(code_to_dict(code), fh)
        fh.write("\n")


# ---------------------------------------------------------------------------
# trial execution


@dataclass(frozen=True)
class SimTrace:
    """One realized block: messages, all inputs/outputs, decoded estimates."""

    seed: int
    trial: int
    messages: dict
    x: np.ndarray  # (n, N) input symbols
    y: np.ndarray  # (n, N) output symbols
    estimates: dict

    def to_csv(self) -> str:
        lines = ["slot,node,X,Y"]
        n, nn = self.x.shape
        for k in range(n):
            for i in range(nn):
                lines.append(f"{k + 1},{i + 1},{self.x[k, i]},{self.y[k, i]}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PairStats:
    trials: int
    errors: int
    estimate: float
    half_width: float


@dataclass(frozen=True)
class ErrorReport:
    """Per-pair Monte Carlo error estimates with Wilson 95% half-widths."""

    pairs: dict

    def __str__(self):
        lines = []
        for (i, j), s in sorted(self.pairs.items()):
            lines.append(f"P_{i}->{j}: {s.errors}/{s.trials} = "
                         f"{s.estimate:.6f} (+/- {s.half_width:.6f})")
        return "\n".join(lines)


def wilson_half_width(errors: int, trials: int) -> float:
    """Half-width of the 95% Wilson score interval for errors/trials."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    z = _WILSON_Z
    p = errors / trials
    return (z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
            / (1.0 + z * z / trials))


def _pair_stats(errors: int, trials: int) -> PairStats:
    return PairStats(trials=trials, errors=errors, estimate=errors / trials,
                     half_width=wilson_half_width(errors, trials))


def _require_valid(spec: NetworkSpec) -> None:
    report = validate_spec(spec)
    if not report.ok:
        raise DomainError("invalid network: " + "; ".join(report.violations))


def _check_code(spec: NetworkSpec, code: Code) -> None:
    _require_valid(spec)
    if len(code.message_sizes) != spec.n_nodes:
        raise DomainError("code message matrix does not match node count")
    if not is_feasible(spec, code.delay_profile):
        raise DomainError(
            f"delay profile {code.delay_profile.delays} infeasible for this network")
    if code.n < 1:
        raise DomainError("blocklength must be >= 1")


def run_trial(spec: NetworkSpec, code: Code, seed: int, trial: int = 0) -> SimTrace:
    """Execute one block: draw messages, run every slot, decode."""
    _check_code(spec, code)
    rng = _trial_rng(seed, trial)
    nn, n, alpha = spec.n_nodes, code.n, spec.alpha
    messages = {}
    for i in range(1, nn + 1):
        for j in range(1, nn + 1):
            m = code.message_sizes[i - 1][j - 1]
            if m > 1:
                messages[(i, j)] = int(rng.integers(0, m))
    w_rows = {i: code.w_row_of(i, messages) for i in range(1, nn + 1)}
    x = np.zeros((n, nn), dtype=np.int64)
    y = np.zeros((n, nn), dtype=np.int64)
    cums = [np.cumsum(spec.channels[h - 1].table, axis=1)
            for h in range(1, alpha + 1)]
    for k in range(1, n + 1):
        for h in range(1, alpha + 1):
            for i in spec.input_partition.blocks[h - 1].members:
                plen = k - code.delay_profile.delay_of(i)
                prefix = tuple(int(v) for v in y[:plen, i - 1])
                sym = code.encode(i, k, w_rows[i], prefix)
                if not 0 <= sym < spec.input_alphabet_sizes[i - 1]:
                    raise DomainError(
                        f"encoder at node {i}, slot {k} produced symbol {sym} "
                        f"outside its alphabet")
                x[k - 1, i - 1] = sym
            in_vars = spec.channel_input_vars(h)
            row_idx = _fold_index(
                [x[k - 1, int(v[1:]) - 1] if v[0] == "X" else y[k - 1, int(v[1:]) - 1]
                 for v in in_vars],
                [spec.var_size(v) for v in in_vars])
            cum = cums[h - 1][row_idx]
            col = int(np.searchsorted(cum, rng.random(), side="right"))
            col = min(col, cum.shape[0] - 1)
            out_vars = spec.channel_output_vars(h)
            for v, sym in zip(out_vars,
                              _unfold_index(col, [spec.var_size(v) for v in out_vars])):
                y[k - 1, int(v[1:]) - 1] = sym
    estimates = {}
    for (i, j) in code.message_pairs():
        estimates[(i, j)] = code.decode(i, j, w_rows[j],
                                        tuple(int(v) for v in y[:, j - 1]))
    return SimTrace(seed=seed, trial=trial, messages=messages, x=x, y=y,
                    estimates=estimates)


def default_thread_count() -> int:
    env = os.environ.get("ZDMN_THREADS", "")
    if env.strip():
        try:
            v = int(env)
        except ValueError as exc:
            raise DomainError(f"ZDMN_THREADS must be an integer, got {env!r}") from exc
        if v < 1:
            raise DomainError("ZDMN_THREADS must be >= 1")
        return v
    return 1


def estimate_error(spec: NetworkSpec, code: Code, trials: int, seed: int,
                   threads: int | None = None) -> ErrorReport:
    """Monte Carlo error estimate per message pair; deterministic given seed."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    _check_code(spec, code)
    threads = threads if threads is not None else default_thread_count()
    pairs = code.message_pairs()

    def count_range(lo: int, hi: int) -> dict:
        counts = {p: 0 for p in pairs}
        for t in range(lo, hi):
            trace = run_trial(spec, code, seed, t)
            for p in pairs:
                if trace.estimates[p] != trace.messages[p]:
                    counts[p] += 1
        return counts

    totals = {p: 0 for p in pairs}
    if threads <= 1:
        totals = count_range(0, trials)
    else:
        step = -(-trials // threads)
        chunks = [(lo, min(lo + step, trials)) for lo in range(0, trials, step)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for counts in pool.map(lambda c: count_range(*c), chunks):
                for p in pairs:
                    totals[p] += counts[p]
    return ErrorReport(pairs={p: _pair_stats(totals[p], trials) for p in pairs})


# ---------------------------------------------------------------------------
# exact induced joints and the Markov / equivalence checks


def _joint_variables(spec: NetworkSpec, code: Code):
    variables = [(f"W{i}.{j}", code.message_sizes[i - 1][j - 1])
                 for (i, j) in code.message_pairs()]
    for k in range(1, code.n + 1):
        for i in range(1, spec.n_nodes + 1):
            variables.append((f"{x_var(i)}.{k}", spec.input_alphabet_sizes[i - 1]))
        for i in range(1, spec.n_nodes + 1):
            variables.append((f"{y_var(i)}.{k}", spec.output_alphabet_sizes[i - 1]))
    return variables


def induced_joint(spec: NetworkSpec, code: Code, cap: int = JOINT_CAP) -> JointPmf:
    """Exact joint of (W, X^n, Y^n) by enumerating outcome sequences."""
    _check_code(spec, code)
    variables = _joint_variables(spec, code)
    sizes = [s for _, s in variables]
    total = 1
    for s in sizes:
        total *= s
    if total > cap:
        raise ResourceCapError(
            f"induced joint needs {total} cells, above the cap of {cap}")
    strides = np.ones(len(sizes), dtype=np.int64)
    for pos in range(len(sizes) - 2, -1, -1):
        strides[pos] = strides[pos + 1] * sizes[pos + 1]
    axis_of = {name: pos for pos, (name, _) in enumerate(variables)}
    nn, n, alpha = spec.n_nodes, code.n, spec.alpha
    pairs = code.message_pairs()
    flat = np.zeros(total)
    p_w = 1.0
    for (i, j) in pairs:
        p_w /= code.message_sizes[i - 1][j - 1]
    x = [[0] * nn for _ in range(n)]
    y = [[0] * nn for _ in range(n)]
    in_meta = []
    for h in range(1, alpha + 1):
        in_vars = spec.channel_input_vars(h)
        out_vars = spec.channel_output_vars(h)
        in_meta.append((
            [(v[0] == "X", int(v[1:]) - 1) for v in in_vars],
            [spec.var_size(v) for v in in_vars],
            [int(v[1:]) - 1 for v in out_vars],
            [spec.var_size(v) for v in out_vars],
        ))

    def walk(step: int, idx: int, prob: float, w_rows: dict) -> None:
        if step == n * alpha:
            flat[idx] += prob
            return
        k, h = step // alpha + 1, step % alpha + 1
        x_add = 0
        for i in spec.input_partition.blocks[h - 1].members:
            plen = k - code.delay_profile.delay_of(i)
            prefix = tuple(y[kk][i - 1] for kk in range(plen))
            sym = code.encode(i, k, w_rows[i], prefix)
            if not 0 <= sym < spec.input_alphabet_sizes[i - 1]:
                raise DomainError(
                    f"encoder at node {i}, slot {k} produced symbol {sym} "
                    f"outside its alphabet")
            x[k - 1][i - 1] = sym
            x_add += sym * strides[axis_of[f"{x_var(i)}.{k}"]]
        kinds, in_sizes, out_nodes, out_sizes = in_meta[h - 1]
        row_idx = _fold_index(
            [x[k - 1][node] if is_x else y[k - 1][node] for is_x, node in kinds],
            in_sizes)
        row = spec.channels[h - 1].table[row_idx]
        for col in range(row.shape[0]):
            q = row[col]
            if q <= 0.0:
                continue
            y_add = 0
            for node, sym in zip(out_nodes, _unfold_index(col, out_sizes)):
                y[k - 1][node] = sym
                y_add += sym * strides[axis_of[f"{y_var(node + 1)}.{k}"]]
            walk(step + 1, idx + x_add + y_add, prob * q, w_rows)

    w_ranges = [range(code.message_sizes[i - 1][j - 1]) for (i, j) in pairs]
    for wcell in itertools.product(*w_ranges):
        messages = dict(zip(pairs, wcell))
        w_rows = {i: code.w_row_of(i, messages) for i in range(1, nn + 1)}
        base = 0
        for (pair, val) in zip(pairs, wcell):
            base += val * strides[axis_of[f"W{pair[0]}.{pair[1]}"]]
        walk(0, base, p_w, w_rows)
    return JointPmf(variables=tuple(variables), probs=flat)


def _past_vars(spec: NetworkSpec, code: Code, k: int):
    names = [f"W{i}.{j}" for (i, j) in code.message_pairs()]
    for kk in range(1, k):
        for i in range(1, spec.n_nodes + 1):
            names.append(f"{x_var(i)}.{kk}")
        for i in range(1, spec.n_nodes + 1):
            names.append(f"{y_var(i)}.{kk}")
    return names


def check_memoryless_markov(spec: NetworkSpec, code: Code,
                            cap: int = JOINT_CAP) -> list:
    """I(past; current channel output | current channel input) per (k, h).

    Every value must vanish: the output of channel h in slot k depends on
    the history only through the symbols the channel actually reads.
    """
    joint = induced_joint(spec, code, cap=cap)
    out = []
    for k in range(1, code.n + 1):
        past = _past_vars(spec, code, k)
        for h in range(1, spec.alpha + 1):
            b_vars = [f"{y_var(i)}.{k}"
                      for i in spec.output_partition.blocks[h - 1].members]
            c_vars = ([f"{x_var(i)}.{k}" for i in spec.input_partition.prefix(h)]
                      + [f"{y_var(i)}.{k}"
                         for i in spec.output_partition.prefix(h - 1)])
            out.append((k, h, conditional_mutual_information(
                joint, past, b_vars, c_vars)))
    return out


def check_positive_delay_markov(spec: NetworkSpec, code: Code,
                                cap: int = JOINT_CAP) -> list:
    """I(past, X_{S_h,k}; Y_{G^{h-1},k} | X_{S^{h-1},k}) per (k, h).

    Holds only for unit-delay codes, where no input of slot k can react to
    any output of slot k; the engine refuses other profiles.
    """
    if any(b != 1 for b in code.delay_profile.delays):
        raise DomainError("positive-delay factorization check requires the "
                          "all-one delay profile")
    joint = induced_joint(spec, code, cap=cap)
    out = []
    for k in range(1, code.n + 1):
        past = _past_vars(spec, code, k)
        for h in range(1, spec.alpha + 1):
            a_vars = past + [f"{x_var(i)}.{k}"
                             for i in spec.input_partition.blocks[h - 1].members]
            b_vars = [f"{y_var(i)}.{k}"
                      for i in spec.output_partition.prefix(h - 1)]
            c_vars = [f"{x_var(i)}.{k}"
                      for i in spec.input_partition.prefix(h - 1)]
            out.append((k, h, conditional_mutual_information(
                joint, a_vars, b_vars, c_vars)))
    return out


def equivalence_check(spec: NetworkSpec, code: Code, cap: int = JOINT_CAP) -> float:
    """L1 distance between the stepwise joint and the single composed-channel
    joint; zero (to rounding) for every unit-delay code."""
    if any(b != 1 for b in code.delay_profile.delays):
        raise DomainError("channel composition requires the all-one delay profile")
    stepwise = induced_joint(spec, code, cap=cap)
    from .model import NodeSet, Partition  # local import to avoid cycle at module load
    everyone = Partition(blocks=(NodeSet.of(range(1, spec.n_nodes + 1)),))
    composed = NetworkSpec(
        n_nodes=spec.n_nodes,
        input_alphabet_sizes=spec.input_alphabet_sizes,
        output_alphabet_sizes=spec.output_alphabet_sizes,
        alpha=1,
        input_partition=everyone,
        output_partition=everyone,
        channels=(compose_channels(spec),))
    merged = induced_joint(composed, code, cap=cap)
    return float(np.abs(stepwise.probs - merged.probs).sum())


# ---------------------------------------------------------------------------
# the masked-feedback scheme on the BSC with correlated feedback


@dataclass(frozen=True)
class BscFbSchemeResult:
    """Outcome of the zero-delay masked-feedback scheme."""

    report: ErrorReport
    achieved_rates: tuple  # (forward bits/slot, reverse bits/slot)
    forward_bits: int
    n: int

    def __str__(self):
        return (f"{self.report}\n"
                f"achieved rates: forward {self.achieved_rates[0]:.6f}, "
                f"reverse {self.achieved_rates[1]:.6f}")


def bscfb_scheme(eps: float, n: int, forward_rate: float, seed: int,
                 trials: int = 200, forward_code=None) -> BscFbSchemeResult:
    """Run the zero-delay scheme: node 1 sends coded forward bits; node 2
    masks a fresh uniform bit with its current received symbol, so node 1
    recovers the reverse stream exactly.

    The forward code is pluggable (.k/.encode_batch/.decode_batch); the
    bundled default is the CRC-aided list-decoded polar code.
    """
    if not 0.0 < eps < 0.5:
        raise DomainError(f"eps must be in (0, 0.5), got {eps}")
    cap = 1.0 - binary_entropy(eps)
    if forward_rate >= cap:
        raise DomainError(f"forward rate {forward_rate} is not below the "
                          f"forward capacity {cap:.6f}")
    if forward_rate <= 0.0:
        raise DomainError("forward rate must be positive")
    if n < 1 or trials < 1:
        raise DomainError("n and trials must be >= 1")
    k = max(1, int(math.floor(forward_rate * n + 1e-9)))
    if forward_code is None:
        forward_code = PolarCode(n, k, eps)
    else:
        k = forward_code.k
    msgs = np.empty((trials, k), dtype=np.uint8)
    xprime = np.empty((trials, n), dtype=np.uint8)
    flips = np.empty((trials, n), dtype=np.uint8)
    for t in range(trials):
        rng = _trial_rng(seed, t)
        msgs[t] = rng.integers(0, 2, size=k, dtype=np.uint8)
        xprime[t] = rng.integers(0, 2, size=n, dtype=np.uint8)
        flips[t] = (rng.random(n) < eps).astype(np.uint8)
    x1 = np.atleast_2d(forward_code.encode_batch(msgs))
    y2 = x1 ^ flips                       # forward channel output at node 2
    x2 = xprime ^ y2                      # node 2 masks with its received bit
    y1 = x2 ^ y2                          # feedback channel output at node 1
    rev_errors = int(np.count_nonzero(np.any(y1 != xprime, axis=1)))
    decoded = np.atleast_2d(forward_code.decode_batch(y2))
    fwd_errors = int(np.count_nonzero(np.any(decoded != msgs, axis=1)))
    report = ErrorReport(pairs={(1, 2): _pair_stats(fwd_errors, trials),
                                (2, 1): _pair_stats(rev_errors, trials)})
    return BscFbSchemeResult(report=report, achieved_rates=(k / n, 1.0),
                             forward_bits=k, n=n)


def bscfb_engine_code(n: int, forward_code) -> FunctionCode:
    """The masked-feedback scheme as a generic engine code (tiny n only):
    message sizes (2^k forward, 2^n reverse), delay profile (1, 0)."""
    k = forward_code.k
    if n > 24:
        raise DomainError("engine form of the scheme is for tiny blocklengths")
    codewords = {}

    def fwd_codeword(w):
        if w not in codewords:
            bits = np.array([(w >> (k - 1 - b)) & 1 for b in range(k)],
                            dtype=np.uint8)
            codewords[w] = forward_code.encode_batch(bits[None, :])[0]
        return codewords[w]

    def enc1(kk, w_row, y_prefix):
        return int(fwd_codeword(w_row[0])[kk - 1])

    def enc2(kk, w_row, y_prefix):
        # zero delay: the prefix ends with the current-slot received symbol
        return ((w_row[0] >> (kk - 1)) & 1) ^ y_prefix[-1]

    def dec_rev(w_row, y_seq):
        return sum(int(b) << kk for kk, b in enumerate(y_seq))

    def dec_fwd(w_row, y_seq):
        bits = forward_code.decode_batch(
            np.asarray(y_seq, dtype=np.uint8)[None, :])[0]
        return int(sum(int(b) << (k - 1 - pos) for pos, b in enumerate(bits)))

    return FunctionCode(
        n=n,
        message_sizes=((1, 2 ** k), (2 ** n, 1)),
        delay_profile=DelayProfile.of((1, 0)),
        encoders={1: enc1, 2: enc2},
        decoders={(1, 2): dec_fwd, (2, 1): dec_rev})
