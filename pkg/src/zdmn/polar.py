"""Forward error-correcting block code used on the binary forward link.

A natural-order polar transform (lower-triangular kernel, no bit reversal)
of size 2^ceil(log2 n), shortened down to n by freezing the tail inputs,
which pins the tail codeword bits to 0 so they need not be transmitted.
Decoding is CRC-aided successive-cancellation list decoding with an integer
min-sum update rule, so the jitted and vectorized backends agree bit for
bit.  The information set is picked by a seeded genie-aided Monte Carlo
construction: run the L=1 decoder on random blocks with every decision
corrected to the truth, count per-position decision errors, keep the most
reliable positions.
"""

from __future__ import annotations

import math

import numpy as np

from . import backend
from .backend import njit
from .errors import DomainError

BIG = np.int64(1) << np.int64(40)  # pseudo-infinite LLR of a shortened (known-zero) bit
_CONSTRUCTION_SEED = 0x5EED_C0DE
_CONSTRUCTION_BLOCKS = 25000
_CONSTRUCTION_CHUNK = 2048
_DECODE_CHUNK = 256
_CRC_POLYS = {0: 0, 8: 0x07, 16: 0x1021}

_construction_cache: dict = {}


# ---------------------------------------------------------------------------
# encoding


def _encode_np(u: np.ndarray) -> np.ndarray:
    """Butterfly transform of (B, n) bit blocks; xor pairs (i, i + step)."""
    x = u.copy()
    b, n = x.shape
    step = 1
    while step < n:
        v = x.reshape(b, n // (2 * step), 2, step)
        v[:, :, 0, :] ^= v[:, :, 1, :]
        step *= 2
    return x


@njit(cache=True, nogil=True)
def _encode_nb(u):  # pragma: no cover - jitted
    x = u.copy()
    n = x.shape[0]
    step = 1
    while step < n:
        for start in range(0, n, 2 * step):
            for i in range(step):
                x[start + i] ^= x[start + step + i]
        step *= 2
    return x


def _encode_batch(u: np.ndarray) -> np.ndarray:
    if backend.numba_enabled():
        out = np.empty_like(u)
        for t in range(u.shape[0]):
            out[t] = _encode_nb(u[t])
        return out
    return _encode_np(u)


def _crc_bits(bits: np.ndarray, nc: int) -> np.ndarray:
    """CRC of each row of a (B, k) bit array, MSB-first, zero init."""
    poly = _CRC_POLYS[nc]
    mask = (1 << nc) - 1
    reg = np.zeros(bits.shape[0], dtype=np.int64)
    for j in range(bits.shape[1]):
        reg ^= bits[:, j].astype(np.int64) << (nc - 1)
        msb = (reg >> (nc - 1)) & 1
        reg = ((reg << 1) & mask) ^ (msb * poly)
    out = (reg[:, None] >> np.arange(nc - 1, -1, -1)) & 1
    return out.astype(np.uint8)


# ---------------------------------------------------------------------------
# successive-cancellation list engine
#
# Iterative formulation over flat per-depth buffers.  P holds LLR sections
# (depth d at _offsets; width n >> d), BL holds the codeword of the most
# recent completed left child per depth, U the decided input bits, PM the
# path metrics (sum of magnitudes of violated LLRs).  The update schedule
# per leaf phi: one g-step at depth m - trailing_zeros(phi), f-steps below
# it, then a partial-sum ripple across the trailing ones of phi.


def _p_offsets(n: int, m: int) -> list[int]:
    off = [0]
    for d in range(m):
        off.append(off[-1] + (n >> d))
    return off


def _bl_offsets(n: int, m: int) -> list[int]:
    off = [0]
    for d in range(m - 1):
        off.append(off[-1] + (n >> (d + 1)))
    return off


def _scl_np(llr0, frozen, L, genie_u, errs):
    B, n = llr0.shape
    m = n.bit_length() - 1
    offP = _p_offsets(n, m)
    offBL = _bl_offsets(n, m)
    P = np.zeros((B, L, 2 * n), dtype=np.int64)
    P[:, :, :n] = llr0[:, None, :]
    BL = np.zeros((B, L, n), dtype=np.uint8)
    U = np.zeros((B, L, n), dtype=np.uint8)
    PM = np.zeros((B, L), dtype=np.int64)
    lane = np.arange(L)
    a = 1
    for phi in range(n):
        if phi == 0:
            lo = 1
        else:
            tz = (phi & -phi).bit_length() - 1
            l0 = m - tz
            w = n >> l0
            seg = P[:, :, offP[l0 - 1]:offP[l0 - 1] + 2 * w]
            av, cv = seg[..., :w], seg[..., w:]
            bl = BL[:, :, offBL[l0 - 1]:offBL[l0 - 1] + w]
            P[:, :, offP[l0]:offP[l0] + w] = np.where(bl == 1, cv - av, cv + av)
            lo = l0 + 1
        for d in range(lo, m + 1):
            w = n >> d
            seg = P[:, :, offP[d - 1]:offP[d - 1] + 2 * w]
            av, cv = seg[..., :w], seg[..., w:]
            P[:, :, offP[d]:offP[d] + w] = (
                np.sign(av) * np.sign(cv) * np.minimum(np.abs(av), np.abs(cv)))
        llr = P[:, :, offP[m]]
        if frozen[phi]:
            PM += np.maximum(-llr, 0)
            U[:, :, phi] = 0
            bit = np.zeros((B, L), dtype=np.uint8)
        elif genie_u is not None:  # construction mode, L == 1
            dec = (llr[:, 0] < 0).astype(np.uint8)
            tru = genie_u[:, phi]
            errs[phi] += int(np.count_nonzero(dec != tru))
            U[:, 0, phi] = tru
            bit = tru[:, None]
        else:
            pen0 = np.maximum(-llr, 0)
            pen1 = np.maximum(llr, 0)
            if 2 * a <= L:  # list still growing: keep every extension
                l2 = 2 * a
                pmg = np.empty((B, l2), dtype=np.int64)
                pmg[:, 0::2] = PM[:, :a] + pen0[:, :a]
                pmg[:, 1::2] = PM[:, :a] + pen1[:, :a]
                par = np.arange(l2) >> 1
                P[:, :l2] = P[:, par]
                BL[:, :l2] = BL[:, par]
                U[:, :l2] = U[:, par]
                PM[:, :l2] = pmg
                bitrow = (np.arange(l2) & 1).astype(np.uint8)
                U[:, :l2, phi] = bitrow
                bit = np.zeros((B, L), dtype=np.uint8)
                bit[:, :l2] = bitrow
                a = l2
            else:  # keep the L best of 2L extensions; ties keep lower index
                pmc = np.empty((B, 2 * L), dtype=np.int64)
                pmc[:, 0::2] = PM + pen0
                pmc[:, 1::2] = PM + pen1
                order = np.argsort(pmc, axis=1, kind="stable")[:, :L]
                parent = order >> 1
                bit = (order & 1).astype(np.uint8)
                PM = np.take_along_axis(pmc, order, axis=1)
                sub = np.nonzero(~np.all(parent == lane, axis=1))[0]
                if sub.size:  # reorder state only where paths actually moved
                    ps = parent[sub]
                    P[sub] = P[sub[:, None], ps]
                    BL[sub] = BL[sub[:, None], ps]
                    U[sub] = U[sub[:, None], ps]
                U[:, :, phi] = bit
        x = bit[..., None]
        d, ph = m, phi
        while d > 0 and (ph & 1) == 1:
            w = n >> d
            xl = BL[:, :, offBL[d - 1]:offBL[d - 1] + w]
            x = np.concatenate([xl ^ x, x], axis=2)
            ph >>= 1
            d -= 1
        if d > 0:
            BL[:, :, offBL[d - 1]:offBL[d - 1] + (n >> d)] = x
    return U, PM


@njit(cache=True, nogil=True)
def _scl_kernel(llr0, frozen, L, genie_u, genie_on, U_out, PM_out, errs):  # pragma: no cover
    B, n = llr0.shape
    m = 0
    while (1 << m) < n:
        m += 1
    offP = np.zeros(m + 1, dtype=np.int64)
    for d in range(m):
        offP[d + 1] = offP[d] + (n >> d)
    offBL = np.zeros(m, dtype=np.int64)
    for d in range(m - 1):
        offBL[d + 1] = offBL[d] + (n >> (d + 1))
    P = np.zeros((L, 2 * n), dtype=np.int64)
    BLa = np.zeros((L, n), dtype=np.uint8)
    xbuf = np.zeros((L, n), dtype=np.uint8)
    bitv = np.zeros(L, dtype=np.uint8)
    pmc = np.zeros(2 * L, dtype=np.int64)
    ordv = np.zeros(2 * L, dtype=np.int64)
    par = np.zeros(L, dtype=np.int64)
    tmp_pm = np.zeros(L, dtype=np.int64)
    tmp_p = np.zeros((L, 2 * n), dtype=np.int64)
    tmp_bl = np.zeros((L, n), dtype=np.uint8)
    tmp_u = np.zeros((L, n), dtype=np.uint8)
    for t in range(B):
        U = U_out[t]
        PM = PM_out[t]
        for l in range(L):
            PM[l] = 0
            for j in range(n):
                P[l, j] = llr0[t, j]
        a = 1
        for phi in range(n):
            if phi == 0:
                lo = 1
            else:
                v = phi
                tz = 0
                while v & 1 == 0:
                    v >>= 1
                    tz += 1
                l0 = m - tz
                w = n >> l0
                base = offP[l0 - 1]
                dst = offP[l0]
                bb = offBL[l0 - 1]
                for l in range(L):
                    for i in range(w):
                        av = P[l, base + i]
                        cv = P[l, base + w + i]
                        P[l, dst + i] = cv - av if BLa[l, bb + i] else cv + av
                lo = l0 + 1
            for d in range(lo, m + 1):
                w = n >> d
                base = offP[d - 1]
                dst = offP[d]
                for l in range(L):
                    for i in range(w):
                        av = P[l, base + i]
                        cv = P[l, base + w + i]
                        sa = -1 if av < 0 else 1
                        sc = -1 if cv < 0 else 1
                        mn = min(abs(av), abs(cv))
                        P[l, dst + i] = sa * sc * mn
            leaf = offP[m]
            if frozen[phi]:
                for l in range(L):
                    lv = P[l, leaf]
                    if lv < 0:
                        PM[l] += -lv
                    U[l, phi] = 0
                    bitv[l] = 0
            elif genie_on:
                lv = P[0, leaf]
                dec = 1 if lv < 0 else 0
                tru = genie_u[t, phi]
                if dec != tru:
                    errs[phi] += 1
                U[0, phi] = tru
                bitv[0] = tru
            else:
                if 2 * a <= L:
                    l2 = 2 * a
                    for c in range(l2 - 1, -1, -1):
                        src = c >> 1
                        lv = P[src, leaf]
                        if c & 1:
                            pen = lv if lv > 0 else 0
                        else:
                            pen = -lv if lv < 0 else 0
                        if src != c:
                            for j in range(2 * n):
                                P[c, j] = P[src, j]
                            for j in range(n):
                                BLa[c, j] = BLa[src, j]
                                U[c, j] = U[src, j]
                        PM[c] = PM[src] + pen
                        U[c, phi] = c & 1
                        bitv[c] = c & 1
                    a = l2
                else:
                    nc = 2 * L
                    for p in range(L):
                        lv = P[p, leaf]
                        pmc[2 * p] = PM[p] + (-lv if lv < 0 else 0)
                        pmc[2 * p + 1] = PM[p] + (lv if lv > 0 else 0)
                    for i in range(nc):
                        ordv[i] = i
                    for i in range(1, nc):
                        key = ordv[i]
                        kv = pmc[key]
                        j = i - 1
                        while j >= 0 and pmc[ordv[j]] > kv:
                            ordv[j + 1] = ordv[j]
                            j -= 1
                        ordv[j + 1] = key
                    identity = True
                    for l in range(L):
                        c = ordv[l]
                        par[l] = c >> 1
                        bitv[l] = c & 1
                        tmp_pm[l] = pmc[c]
                        if par[l] != l:
                            identity = False
                    if not identity:
                        for l in range(L):
                            s = par[l]
                            for j in range(2 * n):
                                tmp_p[l, j] = P[s, j]
                            for j in range(n):
                                tmp_bl[l, j] = BLa[s, j]
                                tmp_u[l, j] = U[s, j]
                        for l in range(L):
                            for j in range(2 * n):
                                P[l, j] = tmp_p[l, j]
                            for j in range(n):
                                BLa[l, j] = tmp_bl[l, j]
                                U[l, j] = tmp_u[l, j]
                    for l in range(L):
                        PM[l] = tmp_pm[l]
                        U[l, phi] = bitv[l]
            w = 1
            for l in range(L):
                xbuf[l, 0] = bitv[l]
            d = m
            ph = phi
            while d > 0 and (ph & 1) == 1:
                bb = offBL[d - 1]
                for l in range(L):
                    for i in range(w):
                        xbuf[l, w + i] = xbuf[l, i]
                    for i in range(w):
                        xbuf[l, i] = BLa[l, bb + i] ^ xbuf[l, w + i]
                w *= 2
                ph >>= 1
                d -= 1
            if d > 0:
                bb = offBL[d - 1]
                for l in range(L):
                    for i in range(w):
                        BLa[l, bb + i] = xbuf[l, i]


def _scl_run(llr0, frozen, L, genie_u=None, errs=None):
    """Run the list decoder on (B, n_code) LLR blocks; returns (U, PM)."""
    if errs is None:
        errs = np.zeros(1, dtype=np.int64)
    if backend.numba_enabled():
        b, n = llr0.shape
        u_out = np.zeros((b, L, n), dtype=np.uint8)
        pm_out = np.zeros((b, L), dtype=np.int64)
        gu = genie_u if genie_u is not None else np.zeros((1, 1), dtype=np.uint8)
        _scl_kernel(llr0, frozen, L, gu, genie_u is not None, u_out, pm_out, errs)
        return u_out, pm_out
    return _scl_np(llr0, frozen, L, genie_u, errs)


# ---------------------------------------------------------------------------
# code construction and the code classes


def _construct(n: int, k_total: int, eps: float, blocks: int):
    """Genie Monte Carlo construction: per-position error counts -> info set."""
    n_code = 1 << max(1, math.ceil(math.log2(n)))
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=_CONSTRUCTION_SEED,
                               spawn_key=(n_code, n, k_total))))
    frz = np.zeros(n_code, dtype=np.uint8)
    frz[n:] = 1  # shortened tail, transmitted as known zeros
    errs = np.zeros(n_code, dtype=np.int64)
    done = 0
    while done < blocks:
        b = min(_CONSTRUCTION_CHUNK, blocks - done)
        u = rng.integers(0, 2, size=(b, n_code), dtype=np.uint8)
        u[:, n:] = 0
        noise = (rng.random((b, n)) < eps).astype(np.uint8)
        x = _encode_batch(u)
        llr = np.empty((b, n_code), dtype=np.int64)
        llr[:, :n] = 1 - 2 * (x[:, :n] ^ noise).astype(np.int64)
        llr[:, n:] = BIG
        _scl_run(llr, frz, 1, genie_u=u, errs=errs)
        done += b
    order = np.argsort(errs[:n], kind="stable")
    info = np.sort(order[:k_total])
    union_bound = float(errs[info].sum()) / blocks
    return n_code, info, union_bound


class PolarCode:
    """Shortened polar code, CRC-aided list decoding over hard decisions.

    ``decode`` returns the payload of the best-metric path whose CRC checks
    (falling back to the best-metric path when none does), so the whole
    pipeline stays in integer arithmetic and is reproducible across
    backends.  ``list_size=1, crc_bits=0`` reduces to plain successive
    cancellation.
    """

    def __init__(self, n: int, k: int, eps: float, *, list_size: int = 16,
                 crc_bits: int = 16,
                 construction_blocks: int = _CONSTRUCTION_BLOCKS):
        if crc_bits not in _CRC_POLYS:
            raise DomainError(f"crc_bits must be one of {sorted(_CRC_POLYS)}")
        if not (1 <= k and k + crc_bits <= n):
            raise DomainError(f"need 1 <= k and k + crc_bits <= n, "
                              f"got k={k}, crc_bits={crc_bits}, n={n}")
        if not (0.0 <= eps < 0.5):
            raise DomainError(f"crossover eps must be in [0, 0.5), got {eps}")
        if list_size < 1:
            raise DomainError("list_size must be >= 1")
        self.n = int(n)
        self.k = int(k)
        self.eps = float(eps)
        self.list_size = int(list_size)
        self.crc_bits = int(crc_bits)
        self.k_total = self.k + self.crc_bits
        key = (self.n, self.k_total, round(self.eps, 12), construction_blocks)
        if key not in _construction_cache:
            _construction_cache[key] = _construct(self.n, self.k_total,
                                                  self.eps, construction_blocks)
        self.n_code, self.info_positions, self.sc_union_bound = \
            _construction_cache[key]
        self.frozen = np.ones(self.n_code, dtype=np.uint8)
        self.frozen[self.info_positions] = 0

    def encode_batch(self, msgs: np.ndarray) -> np.ndarray:
        msgs = np.atleast_2d(np.asarray(msgs, dtype=np.uint8))
        if msgs.shape[1] != self.k:
            raise DomainError(f"messages must have {self.k} bits")
        if self.crc_bits:
            info = np.hstack([msgs, _crc_bits(msgs, self.crc_bits)])
        else:
            info = msgs
        u = np.zeros((msgs.shape[0], self.n_code), dtype=np.uint8)
        u[:, self.info_positions] = info
        return _encode_batch(u)[:, :self.n]

    def decode_batch(self, ys: np.ndarray) -> np.ndarray:
        ys = np.atleast_2d(np.asarray(ys, dtype=np.uint8))
        if ys.shape[1] != self.n:
            raise DomainError(f"received blocks must have {self.n} bits")
        out = np.empty((ys.shape[0], self.k), dtype=np.uint8)
        for s in range(0, ys.shape[0], _DECODE_CHUNK):
            out[s:s + _DECODE_CHUNK] = self._decode_chunk(ys[s:s + _DECODE_CHUNK])
        return out

    def _decode_chunk(self, ys: np.ndarray) -> np.ndarray:
        b = ys.shape[0]
        llr = np.empty((b, self.n_code), dtype=np.int64)
        llr[:, :self.n] = 1 - 2 * ys.astype(np.int64)
        llr[:, self.n:] = BIG
        u_all, pm = _scl_run(llr, self.frozen, self.list_size)
        cand = u_all[:, :, self.info_positions]
        pay = cand[:, :, :self.k]
        order = np.argsort(pm, axis=1, kind="stable")
        if self.crc_bits:
            calc = _crc_bits(pay.reshape(-1, self.k), self.crc_bits)
            stored = cand[:, :, self.k:].reshape(-1, self.crc_bits)
            ok = np.all(calc == stored, axis=1).reshape(b, self.list_size)
            ok_ord = np.take_along_axis(ok, order, axis=1)
            first = np.argmax(ok_ord, axis=1)
            pick = np.where(ok_ord.any(axis=1), first, 0)
        else:
            pick = np.zeros(b, dtype=np.int64)
        chosen = order[np.arange(b), pick]
        return pay[np.arange(b), chosen]

    def encode(self, msg: np.ndarray) -> np.ndarray:
        return self.encode_batch(msg)[0]

    def decode(self, y: np.ndarray) -> np.ndarray:
        return self.decode_batch(y)[0]


class RandomCodebookCode:
    """Random binary codebook with minimum-Hamming-distance decoding.

    Only viable at tiny blocklengths (the codebook is materialized); kept as
    a pluggable alternative to the polar default.
    """

    MAX_K = 16

    def __init__(self, n: int, k: int, seed: int = 0):
        if not (1 <= k <= min(n, self.MAX_K)):
            raise DomainError(f"need 1 <= k <= min(n, {self.MAX_K}), got k={k}")
        self.n = int(n)
        self.k = int(k)
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(entropy=seed, spawn_key=(n, k))))
        self.codebook = rng.integers(0, 2, size=(1 << k, n), dtype=np.uint8)

    def _index(self, msg: np.ndarray) -> np.ndarray:
        weights = 1 << np.arange(self.k - 1, -1, -1, dtype=np.int64)
        return np.asarray(msg, dtype=np.int64) @ weights

    def encode_batch(self, msgs: np.ndarray) -> np.ndarray:
        msgs = np.atleast_2d(np.asarray(msgs, dtype=np.uint8))
        return self.codebook[self._index(msgs)]

    def decode_batch(self, ys: np.ndarray) -> np.ndarray:
        ys = np.atleast_2d(np.asarray(ys, dtype=np.uint8))
        # Hamming distance to every codeword; ties go to the lowest index.
        dist = (ys[:, None, :] ^ self.codebook[None, :, :]).sum(axis=2)
        idx = np.argmin(dist, axis=1)
        bits = (idx[:, None] >> np.arange(self.k - 1, -1, -1)) & 1
        return bits.astype(np.uint8)

    def encode(self, msg: np.ndarray) -> np.ndarray:
        return self.encode_batch(msg)[0]

    def decode(self, y: np.ndarray) -> np.ndarray:
        return self.decode_batch(y)[0]
