"""Stabilizer (tableau) backend.

Pauli operators are stored as ``i^p X^x Z^z`` with bit-packed ``x`` and
``z`` (uint64 words, qubit ``q`` at word ``q >> 6``, bit ``q & 63``) and a
phase exponent ``p`` mod 4.  Hermitian operators satisfy
``p == weight(x & z) (mod 2)``; their sign is ``i^(p - weight(x & z))``.

A :class:`StabilizerTableau` keeps ``n`` stabilizer generator rows and,
lazily, the matching destabilizer rows.  Cluster construction fills only
the stabilizer rows (one scatter pass over the directed edges), so very
large lattices stay cheap; destabilizers appear on the first measurement.
Measurement outcomes use the same convention as the dense backend
(outcome 0 is the +1 eigenvalue) and consume one uniform draw per random
measurement, compared against the outcome-1 probability, so seeded runs
agree with the dense backend wherever the branch probabilities do.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _gf2
from .errors import InputError, ResourceLimitError
from .lattice import Cluster
from .statevec import DEFAULT_MAX_QUBITS, PureState, as_rng

AXES = ("X", "Y", "Z")


def nwords(n: int) -> int:
    return (n + 63) >> 6


def popcount_rows(a: np.ndarray) -> np.ndarray:
    """Row-wise popcount of packed words (int64 result)."""
    return np.bitwise_count(a).astype(np.int64).sum(axis=-1)


def _word_bit(q: int) -> tuple[int, np.uint64]:
    return q >> 6, np.uint64(1) << np.uint64(q & 63)


class PauliOperator:
    """One n-qubit Pauli, ``i^phase X^x Z^z`` over packed words."""

    __slots__ = ("n", "x", "z", "phase")

    def __init__(self, n: int, x=None, z=None, phase: int = 0):
        self.n = int(n)
        w = nwords(self.n)
        self.x = np.zeros(w, dtype=np.uint64) if x is None else np.asarray(x, dtype=np.uint64).copy()
        self.z = np.zeros(w, dtype=np.uint64) if z is None else np.asarray(z, dtype=np.uint64).copy()
        if self.x.shape != (w,) or self.z.shape != (w,):
            raise InputError("pauli bit arrays have the wrong shape")
        self.phase = int(phase) % 4

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n)

    @classmethod
    def single(cls, n: int, q: int, axis: str, sign: int = 1) -> "PauliOperator":
        if not 0 <= q < n:
            raise InputError(f"qubit {q} out of range for n={n}")
        axis = axis.upper()
        if axis not in AXES:
            raise InputError(f"axis must be one of {AXES}, got {axis!r}")
        p = cls(n)
        w, bit = _word_bit(q)
        if axis in ("X", "Y"):
            p.x[w] |= bit
        if axis in ("Z", "Y"):
            p.z[w] |= bit
        p.phase = (1 if axis == "Y" else 0) + (0 if sign == 1 else 2)
        p.phase %= 4
        return p

    def copy(self) -> "PauliOperator":
        return PauliOperator(self.n, self.x, self.z, self.phase)

    def get(self, q: int) -> tuple[int, int]:
        w, bit = _word_bit(q)
        return int(bool(self.x[w] & bit)), int(bool(self.z[w] & bit))

    def weight(self) -> int:
        return int(popcount_rows(self.x | self.z))

    def support(self) -> list[int]:
        return [q for q in range(self.n) if any(self.get(q))]

    def commutes(self, other: "PauliOperator") -> bool:
        par = popcount_rows(self.x & other.z) + popcount_rows(self.z & other.x)
        return int(par) % 2 == 0

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        if self.n != other.n:
            raise InputError("pauli sizes differ")
        phase = (self.phase + other.phase + 2 * int(popcount_rows(self.z & other.x))) % 4
        return PauliOperator(self.n, self.x ^ other.x, self.z ^ other.z, phase)

    def is_hermitian(self) -> bool:
        return (self.phase - int(popcount_rows(self.x & self.z))) % 2 == 0

    def sign(self) -> int:
        """+1 or -1 for a Hermitian operator."""
        s = (self.phase - int(popcount_rows(self.x & self.z))) % 4
        if s == 0:
            return 1
        if s == 2:
            return -1
        raise InputError("operator is not Hermitian")

    def bits_equal(self, other: "PauliOperator") -> bool:
        return bool(np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z))

    def to_string(self) -> str:
        letters = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
        body = "".join(letters[self.get(q)] for q in range(self.n))
        return ("+" if self.sign() == 1 else "-") + body

    @classmethod
    def from_string(cls, s: str) -> "PauliOperator":
        s = s.strip()
        sign = 1
        if s and s[0] in "+-":
            sign = 1 if s[0] == "+" else -1
            s = s[1:]
        n = len(s)
        if n == 0:
            raise InputError("empty pauli string")
        p = cls(n)
        ycount = 0
        for q, ch in enumerate(s.upper()):
            w, bit = _word_bit(q)
            if ch == "I":
                continue
            if ch in ("X", "Y"):
                p.x[w] |= bit
            if ch in ("Z", "Y"):
                p.z[w] |= bit
            if ch == "Y":
                ycount += 1
            if ch not in "IXYZ":
                raise InputError(f"bad pauli letter {ch!r}")
        p.phase = (ycount + (0 if sign == 1 else 2)) % 4
        return p

    def __repr__(self) -> str:
        if self.n <= 64 and self.is_hermitian():
            return f"PauliOperator({self.to_string()!r})"
        return f"PauliOperator(n={self.n}, phase={self.phase})"

    def to_dense(self, amps: np.ndarray) -> np.ndarray:
        """Apply to a dense amplitude vector (qubit 0 = most significant bit)."""
        n = self.n
        dim = amps.size
        if dim != 2**n:
            raise InputError("dense vector size mismatch")
        xint = 0
        zint = 0
        for q in self.support():
            xb, zb = self.get(q)
            pos = n - 1 - q
            if xb:
                xint |= 1 << pos
            if zb:
                zint |= 1 << pos
        idx = np.arange(dim, dtype=np.int64)
        signs = 1 - 2 * (np.bitwise_count(idx & zint).astype(np.int64) & 1)
        out = np.empty_like(amps)
        out[idx ^ xint] = (1j**self.phase) * signs * amps
        return out


def _mul1(a: tuple[int, int, int], b: tuple[int, int, int]) -> tuple[int, int, int]:
    """Product of single-qubit reps ``(x, z, phase)``."""
    return (a[0] ^ b[0], a[1] ^ b[1], (a[2] + b[2] + 2 * (a[1] & b[0])) % 4)


def _hermitian_component(xb: int, zb: int) -> tuple[int, int, int]:
    return (xb, zb, xb & zb)


@dataclass(frozen=True)
class SingleQubitClifford:
    """A single-qubit Clifford given by the preimages of X and Z.

    ``pre_x`` is ``C^dag X C`` and ``pre_z`` is ``C^dag Z C``, each a
    single-qubit rep ``(x, z, phase)``; equivalently C maps the operator
    ``pre_x`` to X and ``pre_z`` to Z under conjugation.
    """

    pre_x: tuple[int, int, int]
    pre_z: tuple[int, int, int]

    def __post_init__(self):
        ax, az, ap = self.pre_x
        bx, bz, bp = self.pre_z
        if (ax * bz + az * bx) % 2 != 1:
            raise InputError("preimages of X and Z must anticommute")
        for x, z, p in (self.pre_x, self.pre_z):
            if (p - (x & z)) % 2 != 0:
                raise InputError("preimages must be Hermitian")

    @classmethod
    def identity(cls) -> "SingleQubitClifford":
        return cls((1, 0, 0), (0, 1, 0))

    def _image(self, target_x: int, target_z: int) -> tuple[int, int, int]:
        # Solve target = i^t pre_x^alpha pre_z^beta, then conjugate.
        ax, az = self.pre_x[0], self.pre_x[1]
        bx, bz = self.pre_z[0], self.pre_z[1]
        alpha = (target_x * bz + target_z * bx) % 2
        beta = (target_x * az + target_z * ax) % 2
        e = (0, 0, 0)
        if alpha:
            e = _mul1(e, self.pre_x)
        if beta:
            e = _mul1(e, self.pre_z)
        t = (-e[2]) % 4
        return (alpha, beta, t)

    @property
    def img_x(self) -> tuple[int, int, int]:
        """``C X C^dag`` as a single-qubit rep."""
        return self._image(1, 0)

    @property
    def img_z(self) -> tuple[int, int, int]:
        return self._image(0, 1)

    def component_table(self):
        """Images of I, Z, X, Y=iXZ indexed by ``2*x + z`` of a row component."""
        ix = self.img_x
        iz = self.img_z
        return [(0, 0, 0), iz, ix, _mul1(ix, iz)]

    def then_pauli(self, px: int, pz: int) -> "SingleQubitClifford":
        """The Clifford ``X^px Z^pz . C`` (Pauli applied after)."""
        ax, az, ap = self.pre_x
        bx, bz, bp = self.pre_z
        return SingleQubitClifford(
            (ax, az, (ap + 2 * (pz % 2)) % 4),
            (bx, bz, (bp + 2 * (px % 2)) % 4),
        )

    def matrix(self) -> np.ndarray:
        """Dense 2x2 unitary: maps pre_z's +1 eigenvector to |0>."""
        a = _dense_single(self.pre_x)
        b = _dense_single(self.pre_z)
        evals, evecs = np.linalg.eigh(b)
        bplus = evecs[:, int(np.argmax(evals))]
        return np.array([bplus.conj(), (a @ bplus).conj()])


def _dense_single(rep: tuple[int, int, int]) -> np.ndarray:
    x, z, p = rep
    mx = np.array([[0, 1], [1, 0]], dtype=complex)
    mz = np.array([[1, 0], [0, -1]], dtype=complex)
    m = np.eye(2, dtype=complex)
    if x:
        m = m @ mx
    if z:
        m = m @ mz
    return (1j**p) * m


@dataclass(frozen=True)
class MeasureRecord:
    outcome: int
    deterministic: bool
    probability: float


class StabilizerTableau:
    """Generators of a stabilizer state, with lazily built destabilizers."""

    def __init__(self, sx, sz, sphase, dx=None, dz=None, dphase=None,
                 cluster: Cluster | None = None, destab_recipe: str | None = None):
        self.sx = np.asarray(sx, dtype=np.uint64)
        self.sz = np.asarray(sz, dtype=np.uint64)
        self.sphase = np.asarray(sphase, dtype=np.int64)
        self.n = self.sx.shape[0]
        self.w = nwords(self.n)
        if self.sx.shape != (self.n, self.w) or self.sz.shape != self.sx.shape:
            raise InputError("tableau arrays have inconsistent shapes")
        self.dx = dx
        self.dz = dz
        self.dphase = dphase
        self.cluster = cluster
        self._recipe = destab_recipe

    # -- bookkeeping -----------------------------------------------------

    def copy(self) -> "StabilizerTableau":
        return StabilizerTableau(
            self.sx.copy(), self.sz.copy(), self.sphase.copy(),
            None if self.dx is None else self.dx.copy(),
            None if self.dz is None else self.dz.copy(),
            None if self.dphase is None else self.dphase.copy(),
            self.cluster, self._recipe,
        )

    def qubit_of(self, site) -> int:
        if isinstance(site, (int, np.integer)):
            q = int(site)
            if not 0 <= q < self.n:
                raise InputError(f"qubit index {q} out of range for n={self.n}")
            return q
        if self.cluster is None:
            raise InputError("tableau carries no cluster, address qubits by index")
        return self.cluster.index(site)

    def row(self, i: int) -> PauliOperator:
        return PauliOperator(self.n, self.sx[i], self.sz[i], int(self.sphase[i]))

    def rows(self):
        return [self.row(i) for i in range(self.n)]

    def _materialize_destabs(self) -> None:
        if self.dx is not None:
            return
        w = self.w
        self.dx = np.zeros((self.n, w), dtype=np.uint64)
        self.dz = np.zeros((self.n, w), dtype=np.uint64)
        self.dphase = np.zeros(self.n, dtype=np.int64)
        idx = np.arange(self.n)
        words = idx >> 6
        bits = np.uint64(1) << (idx & 63).astype(np.uint64)
        if self._recipe == "diag_z":
            self.dz[idx, words] |= bits
        elif self._recipe == "diag_x":
            self.dx[idx, words] |= bits
        else:
            self._synthesize_destabs()

    def _synthesize_destabs(self) -> None:
        """Build destabilizers for an arbitrary tableau by GF(2) solving.

        Each destabilizer must anticommute with its own stabilizer row and
        commute with every other row; candidates are then pairwise
        orthogonalized by multiplying in stabilizer rows.  Cubic in n, used
        only for tableaus loaded without construction history.
        """
        n = self.n
        xbits = _unpack_bits(self.sx, n)
        zbits = _unpack_bits(self.sz, n)
        a = np.hstack([zbits, xbits])  # sympl(row_j, d) = x_j.dz + z_j.dx
        aug, pivots = _gf2.rref(np.hstack([a, np.eye(n, dtype=np.uint8)]))
        sols = np.zeros((n, 2 * n), dtype=np.uint8)
        for r, c in enumerate(pivots):
            if c >= 2 * n:
                raise InputError("tableau rows are not independent")
            sols[:, c] = aug[r, 2 * n:]  # column i solves a @ d = e_i
        dxb = sols[:, :n]
        dzb = sols[:, n:]
        # orthogonalize: multiplying D_i by S_j flips sympl(D_i, D_j) only
        for i in range(n):
            for j in range(i):
                sp = int((dxb[i] & zbits[j]).sum() + (dzb[i] & xbits[j]).sum()) & 1
                if sp:
                    dxb[i] ^= xbits[j]
                    dzb[i] ^= zbits[j]
        self.dx = _pack_bits(dxb)
        self.dz = _pack_bits(dzb)
        self.dphase = np.zeros(n, dtype=np.int64)

    # -- measurement -------------------------------------------------------

    def _anti_mask(self, x: np.ndarray, z: np.ndarray, p: PauliOperator) -> np.ndarray:
        par = popcount_rows(x & p.z[None, :]) + popcount_rows(z & p.x[None, :])
        return (par & 1).astype(bool)

    def measure(self, p: PauliOperator, rng=None, forced: int | None = None) -> MeasureRecord:
        """Measure a Hermitian Pauli; collapses the tableau in place."""
        if not p.is_hermitian():
            raise InputError("measured operator must be Hermitian")
        if forced is not None and forced not in (0, 1):
            raise InputError(f"outcome must be 0 or 1, got {forced}")
        self._materialize_destabs()
        anti_s = self._anti_mask(self.sx, self.sz, p)
        hits = np.nonzero(anti_s)[0]
        if hits.size:
            pivot = int(hits[0])
            anti_d = self._anti_mask(self.dx, self.dz, p)
            outcome = int(forced) if forced is not None else int(as_rng(rng).random() < 0.5)
            px, pz, pp = self.sx[pivot].copy(), self.sz[pivot].copy(), int(self.sphase[pivot])
            anti_s[pivot] = False
            for X, Z, PH, mask in (
                (self.sx, self.sz, self.sphase, anti_s),
                (self.dx, self.dz, self.dphase, anti_d),
            ):
                if mask.any():
                    PH[mask] = (PH[mask] + pp + 2 * popcount_rows(Z[mask] & px[None, :])) % 4
                    X[mask] ^= px[None, :]
                    Z[mask] ^= pz[None, :]
            self.dx[pivot], self.dz[pivot], self.dphase[pivot] = px, pz, pp
            self.sx[pivot] = p.x
            self.sz[pivot] = p.z
            self.sphase[pivot] = (p.phase + 2 * outcome) % 4
            return MeasureRecord(outcome, False, 0.5)
        outcome = self._deterministic_outcome(p)
        if forced is not None and forced != outcome:
            raise InputError(
                f"forced outcome {forced} has probability zero (deterministic {outcome})"
            )
        return MeasureRecord(outcome, True, 1.0)

    def _deterministic_outcome(self, p: PauliOperator) -> int:
        anti_d = self._anti_mask(self.dx, self.dz, p)
        acc = PauliOperator.identity(self.n)
        for i in np.nonzero(anti_d)[0]:
            acc = acc * self.row(int(i))
        if not acc.bits_equal(p):
            raise InputError("operator is not in the stabilizer group up to sign")
        s = (acc.phase - p.phase) % 4
        return s // 2

    def measure_site(self, qubit, axis: str, rng=None, forced: int | None = None) -> MeasureRecord:
        q = self.qubit_of(qubit)
        return self.measure(PauliOperator.single(self.n, q, axis), rng=rng, forced=forced)

    def expectation(self, p: PauliOperator) -> int:
        """+1 / -1 when ``p`` is fixed by the state, 0 when indeterminate."""
        if self._anti_mask(self.sx, self.sz, p).any():
            return 0
        self._materialize_destabs()
        return 1 if self._deterministic_outcome(p) == 0 else -1

    # -- Clifford and Pauli conjugation -------------------------------------

    def apply_pauli(self, p: PauliOperator) -> None:
        """Conjugate the state by a Pauli (sign flips on anticommuting rows)."""
        flips = self._anti_mask(self.sx, self.sz, p)
        self.sphase[flips] = (self.sphase[flips] + 2) % 4
        if self.dx is not None:
            flips = self._anti_mask(self.dx, self.dz, p)
            self.dphase[flips] = (self.dphase[flips] + 2) % 4

    @staticmethod
    def _apply_cliff_rows(X, Z, PH, q: int, table) -> None:
        w, bit = _word_bit(q)
        shift = np.uint64(q & 63)
        xq = ((X[:, w] >> shift) & np.uint64(1)).astype(np.int64)
        zq = ((Z[:, w] >> shift) & np.uint64(1)).astype(np.int64)
        key = 2 * xq + zq
        tx = np.array([t[0] for t in table], dtype=np.uint64)
        tz = np.array([t[1] for t in table], dtype=np.uint64)
        tp = np.array([t[2] for t in table], dtype=np.int64)
        X[:, w] = (X[:, w] & ~bit) | (tx[key] << shift)
        Z[:, w] = (Z[:, w] & ~bit) | (tz[key] << shift)
        PH[:] = (PH + tp[key]) % 4

    def apply_single_clifford(self, qubit, cliff: SingleQubitClifford) -> None:
        q = self.qubit_of(qubit)
        table = cliff.component_table()
        self._apply_cliff_rows(self.sx, self.sz, self.sphase, q, table)
        if self.dx is not None:
            self._apply_cliff_rows(self.dx, self.dz, self.dphase, q, table)

    # -- canonicalization and structure --------------------------------------

    def canonical(self) -> "StabilizerTableau":
        """Unique generating set: reduced row echelon over (x-block, z-block).

        Two tableaus describe the same state exactly when their canonical
        forms agree bit for bit and sign for sign.
        """
        X, Z, PH = self.sx.copy(), self.sz.copy(), self.sphase.copy()
        r = 0
        for kind in (0, 1):
            src = X if kind == 0 else Z
            for q in range(self.n):
                if r == self.n:
                    break
                w, _ = _word_bit(q)
                shift = np.uint64(q & 63)
                col = ((src[:, w] >> shift) & np.uint64(1)).astype(bool)
                hits = np.nonzero(col[r:])[0]
                if hits.size == 0:
                    continue
                piv = r + int(hits[0])
                if piv != r:
                    for arr in (X, Z):
                        arr[[r, piv]] = arr[[piv, r]]
                    PH[[r, piv]] = PH[[piv, r]]
                col = ((src[:, w] >> shift) & np.uint64(1)).astype(bool)
                col[r] = False
                if col.any():
                    PH[col] = (PH[col] + PH[r] + 2 * popcount_rows(Z[col] & X[r][None, :])) % 4
                    X[col] ^= X[r][None, :]
                    Z[col] ^= Z[r][None, :]
                r += 1
        return StabilizerTableau(X, Z, PH, cluster=self.cluster)

    def same_state(self, other: "StabilizerTableau") -> bool:
        a, b = self.canonical(), other.canonical()
        return bool(
            np.array_equal(a.sx, b.sx)
            and np.array_equal(a.sz, b.sz)
            and np.array_equal(a.sphase, b.sphase)
        )

    def is_product(self) -> bool:
        """True when every canonical generator acts on a single qubit."""
        can = self.canonical()
        return bool((popcount_rows(can.sx | can.sz) == 1).all())

    def product_components(self) -> list[tuple[str, int]]:
        """Per-qubit (axis, sign) of a fully product state."""
        can = self.canonical()
        if not (popcount_rows(can.sx | can.sz) == 1).all():
            raise InputError("state is not a product of single-qubit states")
        comps: list[tuple[str, int] | None] = [None] * self.n
        for i in range(self.n):
            row = can.row(i)
            (q,) = row.support()
            xb, zb = row.get(q)
            axis = {(1, 0): "X", (0, 1): "Z", (1, 1): "Y"}[(xb, zb)]
            comps[q] = (axis, row.sign())
        return comps  # type: ignore[return-value]

    def restrict(self, keep) -> "StabilizerTableau":
        """Tableau of a subsystem that is unentangled with the rest.

        ``keep`` lists qubits (indices or sites); the result is reindexed
        in the given order.  Raises when the subsystem is still entangled
        with its complement.
        """
        keep_idx = [self.qubit_of(q) for q in keep]
        if len(set(keep_idx)) != len(keep_idx):
            raise InputError("duplicate qubits in keep list")
        can = self.canonical()
        mask = np.zeros(self.w, dtype=np.uint64)
        for q in keep_idx:
            w, bit = _word_bit(q)
            mask[w] |= bit
        outside = popcount_rows((can.sx | can.sz) & ~mask[None, :])
        rows = np.nonzero(outside == 0)[0]
        k = len(keep_idx)
        if rows.size != k:
            raise InputError(
                f"subsystem of {k} qubits is not separable "
                f"({rows.size} pure-subsystem generators found)"
            )
        wk = nwords(k)
        nx = np.zeros((k, wk), dtype=np.uint64)
        nz = np.zeros((k, wk), dtype=np.uint64)
        for j, q in enumerate(keep_idx):
            w, _ = _word_bit(q)
            shift = np.uint64(q & 63)
            jw, jbit = _word_bit(j)
            jshift = np.uint64(j & 63)
            nx[:, jw] |= ((can.sx[rows, w] >> shift) & np.uint64(1)) << jshift
            nz[:, jw] |= ((can.sz[rows, w] >> shift) & np.uint64(1)) << jshift
        return StabilizerTableau(nx, nz, can.sphase[rows].copy())

    # -- conversions ---------------------------------------------------------

    def to_dense(self, max_qubits: int = DEFAULT_MAX_QUBITS, seed: int = 0xC15) -> PureState:
        """Project a seeded random vector onto the stabilized subspace."""
        if self.n > max_qubits:
            raise ResourceLimitError(
                f"dense conversion limited to {max_qubits} qubits, tableau has {self.n}"
            )
        rng = np.random.default_rng(seed)
        for attempt in range(4):
            v = rng.normal(size=2**self.n) + 1j * rng.normal(size=2**self.n)
            for i in range(self.n):
                v = (v + self.row(i).to_dense(v)) / 2
            norm = np.linalg.norm(v)
            if norm > 1e-7:
                v /= norm
                return PureState(v, self.cluster if self.cluster and self.cluster.n == self.n else None)
        raise InputError("projection onto the stabilized space vanished")

    def to_text(self, limit: int = 4096) -> str:
        if self.n > limit:
            raise ResourceLimitError(
                f"text dump of {self.n} qubits exceeds the {limit}-qubit limit"
            )
        return "\n".join(self.row(i).to_string() for i in range(self.n)) + "\n"

    @classmethod
    def from_text(cls, text: str, cluster: Cluster | None = None) -> "StabilizerTableau":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise InputError("empty tableau text")
        ops = [PauliOperator.from_string(ln) for ln in lines]
        n = ops[0].n
        if len(ops) != n or any(p.n != n for p in ops):
            raise InputError("tableau text must hold n rows of n letters")
        sx = np.stack([p.x for p in ops])
        sz = np.stack([p.z for p in ops])
        ph = np.array([p.phase for p in ops], dtype=np.int64)
        tab = cls(sx, sz, ph, cluster=cluster)
        for i in range(n):
            for j in range(i):
                if not tab.row(i).commutes(tab.row(j)):
                    raise InputError(f"rows {j} and {i} anticommute")
        return tab


def _unpack_bits(packed: np.ndarray, n: int) -> np.ndarray:
    """(rows, W) packed words -> (rows, n) uint8 bits."""
    rows = packed.shape[0]
    out = np.zeros((rows, n), dtype=np.uint8)
    for q in range(n):
        w, _ = _word_bit(q)
        out[:, q] = ((packed[:, w] >> np.uint64(q & 63)) & np.uint64(1)).astype(np.uint8)
    return out


def _pack_bits(bits: np.ndarray) -> np.ndarray:
    rows, n = bits.shape
    out = np.zeros((rows, nwords(n)), dtype=np.uint64)
    for q in range(n):
        w, _ = _word_bit(q)
        out[:, w] |= bits[:, q].astype(np.uint64) << np.uint64(q & 63)
    return out


# -- construction ----------------------------------------------------------

def cluster_tableau(cluster: Cluster) -> StabilizerTableau:
    """Stabilizer tableau of the cluster state at full entangling phase.

    Row ``a`` is the image of ``X_a`` conjugated through every edge gate:
    an edge ``(s, t)`` maps ``X_s -> X_s Z_t`` and ``X_t -> -Z_s X_t``, so
    each directed edge scatters one Z bit into the partner row and each
    in-edge adds a sign to the target row.
    """
    n = cluster.n
    w = nwords(n)
    sx = np.zeros((n, w), dtype=np.uint64)
    sz = np.zeros((n, w), dtype=np.uint64)
    sphase = np.zeros(n, dtype=np.int64)
    idx = np.arange(n)
    sx[idx, idx >> 6] |= np.uint64(1) << (idx & 63).astype(np.uint64)
    src, dst = cluster.edge_index_arrays()
    if src.size:
        # X_s -> X_s Z_t: row s gains a Z bit at t
        np.bitwise_xor.at(sz, (src, dst >> 6), np.uint64(1) << (dst & 63).astype(np.uint64))
        # X_t -> -Z_s X_t: row t gains a Z bit at s and a sign
        np.bitwise_xor.at(sz, (dst, src >> 6), np.uint64(1) << (src & 63).astype(np.uint64))
        np.add.at(sphase, dst, 2)
        sphase %= 4
    return StabilizerTableau(sx, sz, sphase, cluster=cluster, destab_recipe="diag_z")


def plus_tableau(n: int) -> StabilizerTableau:
    w = nwords(n)
    sx = np.zeros((n, w), dtype=np.uint64)
    sz = np.zeros((n, w), dtype=np.uint64)
    idx = np.arange(n)
    sx[idx, idx >> 6] |= np.uint64(1) << (idx & 63).astype(np.uint64)
    return StabilizerTableau(sx, sz, np.zeros(n, dtype=np.int64), destab_recipe="diag_z")


def ghz_tableau(k: int) -> StabilizerTableau:
    """Target group ``<X..X, Z_i Z_i+1>`` with all plus signs."""
    if k < 1:
        raise InputError("ghz size must be positive")
    w = nwords(k)
    sx = np.zeros((k, w), dtype=np.uint64)
    sz = np.zeros((k, w), dtype=np.uint64)
    for q in range(k):
        ww, bit = _word_bit(q)
        sx[0, ww] |= bit
    for i in range(1, k):
        for q in (i - 1, i):
            ww, bit = _word_bit(q)
            sz[i, ww] |= bit
    return StabilizerTableau(sx, sz, np.zeros(k, dtype=np.int64))


def kappa_map(cluster: Cluster, tableau: StabilizerTableau | None = None) -> dict:
    """Eigenvalue of each correlation generator on its own cluster state."""
    tab = tableau if tableau is not None else cluster_tableau(cluster)
    return {site: tab.row(i).sign() for i, site in enumerate(cluster.sites)}


def k_operator(cluster: Cluster, site) -> PauliOperator:
    """Correlation operator of one site, built by conjugating ``X_a``
    through the edge gates one at a time (reference path)."""
    a = cluster.index(site)
    p = PauliOperator.single(cluster.n, a, "X")
    for s_site, t_site in cluster.forward_edges():
        p = conjugate_through_edge(p, cluster.index(s_site), cluster.index(t_site))
    return p


def conjugate_through_edge(p: PauliOperator, s: int, t: int) -> PauliOperator:
    """Exact conjugation of an arbitrary Pauli through one edge gate."""
    xs, _ = p.get(s)
    xt, _ = p.get(t)
    if not xs and not xt:
        return p.copy()
    n = p.n
    xrem = p.x.copy()
    for q, used in ((s, xs), (t, xt)):
        if used:
            w, bit = _word_bit(q)
            xrem[w] &= ~bit
    out = PauliOperator(n, xrem, None, 0)
    if xs:
        img = PauliOperator(n)
        for q, arr in ((s, img.x), (t, img.z)):
            w, bit = _word_bit(q)
            arr[w] |= bit
        out = out * img
    if xt:
        img = PauliOperator(n, phase=2)
        for q, arr in ((t, img.x), (s, img.z)):
            w, bit = _word_bit(q)
            arr[w] |= bit
        out = out * img
    out = out * PauliOperator(n, None, p.z, 0)
    out.phase = (out.phase + p.phase) % 4
    return out


# -- GHZ equivalence search --------------------------------------------------

def local_clifford_to_ghz(tab: StabilizerTableau) -> dict[int, SingleQubitClifford] | None:
    """Per-qubit Cliffords turning the state into the plus-sign GHZ form.

    The GHZ legs are the tableau's qubits in index order (restrict() with
    the desired order first).  Returns ``None`` when the state is not
    locally equivalent; the result is verified by conjugating a copy and
    comparing canonical forms before it is returned.
    """
    k = tab.n
    xbits = _unpack_bits(tab.sx, k)
    zbits = _unpack_bits(tab.sz, k)
    m = np.hstack([xbits, zbits])  # row i -> its 2k support bits

    b_comp: list[tuple[int, int] | None] = [None] * k
    if k == 1:
        b_comp[0] = (0, 1) if xbits[0, 0] else (1, 0)
    for j in range(k - 1):
        a, b = j, j + 1
        out_cols = [c for c in range(k) if c not in (a, b)]
        out_cols += [k + c for c in range(k) if c not in (a, b)]
        basis = _gf2.nullspace(m[:, out_cols].T) if out_cols else np.eye(k, dtype=np.uint8)
        elem = None
        if basis.shape[0] > 16:
            return None
        for mask in range(1, 1 << basis.shape[0]):
            v = np.zeros(k, dtype=np.uint8)
            for i in range(basis.shape[0]):
                if (mask >> i) & 1:
                    v ^= basis[i]
            bits = (v @ m) % 2
            ca = (int(bits[a]), int(bits[k + a]))
            cb = (int(bits[b]), int(bits[k + b]))
            if ca != (0, 0) and cb != (0, 0):
                elem = (ca, cb)
                break
        if elem is None:
            return None
        for q, comp in zip((a, b), elem):
            if b_comp[q] is None:
                b_comp[q] = comp
            elif b_comp[q] != comp:
                return None

    # full-support element whose every component anticommutes with b_comp
    amat = np.zeros((k, k), dtype=np.uint8)
    for j in range(k):
        bx, bz = b_comp[j]  # type: ignore[misc]
        amat[j] = (xbits[:, j] * bz + zbits[:, j] * bx) % 2
    v = _gf2.solve(amat, np.ones(k, dtype=np.uint8))
    if v is None:
        return None
    abits = (v @ m) % 2
    a_comp = [(int(abits[j]), int(abits[k + j])) for j in range(k)]

    cliffs = {
        j: SingleQubitClifford(
            _hermitian_component(*a_comp[j]), _hermitian_component(*b_comp[j])  # type: ignore[misc]
        )
        for j in range(k)
    }

    trial = tab.copy()
    trial.dx = trial.dz = trial.dphase = None
    for j, cl in cliffs.items():
        trial._apply_cliff_rows(trial.sx, trial.sz, trial.sphase, j, cl.component_table())

    # read off the signs of X..X and the ZZ pairs, fix with a Pauli layer
    eps_a = _group_sign(trial, _ghz_row_bits(k, 0))
    if eps_a is None:
        return None
    xlayer = np.zeros(k, dtype=np.int64)
    for j in range(k - 1):
        eps = _group_sign(trial, _ghz_row_bits(k, j + 1))
        if eps is None:
            return None
        xlayer[j + 1] = xlayer[j] ^ (eps < 0)
    zlayer = np.zeros(k, dtype=np.int64)
    zlayer[0] = int(eps_a < 0)
    for j in range(k):
        if xlayer[j] or zlayer[j]:
            cliffs[j] = cliffs[j].then_pauli(int(xlayer[j]), int(zlayer[j]))

    check = tab.copy()
    check.dx = check.dz = check.dphase = None
    for j, cl in cliffs.items():
        check._apply_cliff_rows(check.sx, check.sz, check.sphase, j, cl.component_table())
    if not check.same_state(ghz_tableau(k)):
        return None
    return cliffs


def single_clifford_from_matrix(u: np.ndarray) -> SingleQubitClifford:
    """Tableau form of a 2x2 Clifford unitary (InputError if not Clifford)."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not np.allclose(u @ u.conj().T, np.eye(2), atol=1e-9):
        raise InputError("expected a 2x2 unitary")
    return SingleQubitClifford(
        _match_single_pauli(u.conj().T @ _dense_single((1, 0, 0)) @ u),
        _match_single_pauli(u.conj().T @ _dense_single((0, 1, 0)) @ u),
    )


def _match_single_pauli(m: np.ndarray) -> tuple[int, int, int]:
    for x, z in ((1, 0), (0, 1), (1, 1)):
        base = (x, z, x & z)
        for extra in (0, 2):
            rep = (x, z, (base[2] + extra) % 4)
            if np.allclose(m, _dense_single(rep), atol=1e-9):
                return rep
    raise InputError("unitary does not map Paulis to Paulis")


def pauli_correction(tab: StabilizerTableau, target: StabilizerTableau) -> PauliOperator | None:
    """A Pauli whose conjugation maps ``tab``'s state onto ``target``'s.

    Exists exactly when the two canonical forms agree bit for bit (same
    group up to signs); the sign pattern is then solvable by a symplectic
    linear system.  Returns None otherwise.
    """
    if tab.n != target.n:
        return None
    a = tab.canonical()
    b = target.canonical()
    if not (np.array_equal(a.sx, b.sx) and np.array_equal(a.sz, b.sz)):
        return None
    n = tab.n
    diffs = ((np.asarray(b.sphase) - np.asarray(a.sphase)) // 2) % 2
    xbits = _unpack_bits(a.sx, n)
    zbits = _unpack_bits(a.sz, n)
    mat = np.hstack([zbits, xbits])  # sympl(P, row) = Px.row_z + Pz.row_x
    v = _gf2.solve(mat, diffs.astype(np.uint8))
    if v is None:
        return None
    p = PauliOperator(n, _pack_bits(v[:n][None, :])[0], _pack_bits(v[n:][None, :])[0])
    p.phase = int(popcount_rows(p.x & p.z)) % 4
    fixed = tab.copy()
    fixed.apply_pauli(p)
    if not fixed.same_state(target):
        return None
    return p


def _ghz_row_bits(k: int, i: int) -> np.ndarray:
    bits = np.zeros(2 * k, dtype=np.uint8)
    if i == 0:
        bits[:k] = 1
    else:
        bits[k + i - 1] = 1
        bits[k + i] = 1
    return bits


def _group_sign(tab: StabilizerTableau, target_bits: np.ndarray) -> int | None:
    """Sign of the group element with the given support bits, if present."""
    k = tab.n
    xbits = _unpack_bits(tab.sx, k)
    zbits = _unpack_bits(tab.sz, k)
    m = np.hstack([xbits, zbits])
    v = _gf2.solve(m.T, target_bits)
    if v is None:
        return None
    acc = PauliOperator.identity(k)
    for i in np.nonzero(v)[0]:
        acc = acc * tab.row(int(i))
    return acc.sign()
