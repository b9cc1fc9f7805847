"""CSS code definitions and ingestion.

A :class:`CssCode` holds the X/Z parity-check matrices and a paired basis
of logical operators, all over GF(2). Built-in rotated surface codes are
generated from the usual d x d grid; anything else is loaded from a JSON
code-spec file (sparse row-index form, suited to LDPC matrices).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gf2
from .gf2 import BitMatrix


@dataclass(frozen=True)
class CssCode:
    """A CSS stabilizer code: checks plus a paired logical basis.

    Stabilizers carry a single global id: X checks are ``0 .. mx-1`` (rows
    of ``hx``), Z checks are ``mx .. mx+mz-1`` (rows of ``hz``).
    """

    name: str
    n: int
    k: int
    hx: BitMatrix
    hz: BitMatrix
    lx: BitMatrix
    lz: BitMatrix

    @property
    def num_x_checks(self) -> int:
        return self.hx.rows

    @property
    def num_z_checks(self) -> int:
        return self.hz.rows

    @property
    def num_checks(self) -> int:
        return self.hx.rows + self.hz.rows

    def is_x_check(self, stab: int) -> bool:
        return stab < self.hx.rows

    def check_support(self, stab: int) -> list[int]:
        if stab < self.hx.rows:
            return self.hx.row_support(stab)
        return self.hz.row_support(stab - self.hx.rows)

    def validate(self) -> None:
        """Raise ValueError naming the first violated code invariant."""
        if self.hx.cols != self.n or self.hz.cols != self.n:
            raise ValueError("check matrix column count does not equal n")
        if self.lx.cols != self.n or self.lz.cols != self.n:
            raise ValueError("logical matrix column count does not equal n")
        if self.lx.rows != self.k or self.lz.rows != self.k:
            raise ValueError("logical matrix row count does not equal k")
        if _any_bit(self.hx.matmul(self.hz.transpose())):
            raise ValueError("CSS orthogonality violated: Hx @ Hz^T != 0")
        if _any_bit(self.lx.matmul(self.hz.transpose())):
            raise ValueError("Lx does not commute with Z checks")
        if _any_bit(self.lz.matmul(self.hx.transpose())):
            raise ValueError("Lz does not commute with X checks")
        pairing = self.lx.matmul(self.lz.transpose())
        if pairing != BitMatrix.identity(self.k):
            raise ValueError("logical pairing Lx @ Lz^T is not the identity")
        for i in range(self.k):
            if gf2.in_rowspace(self.hx, self.lx.to_dense()[i]):
                raise ValueError(f"Lx row {i} lies in the X-stabilizer rowspace")
            if gf2.in_rowspace(self.hz, self.lz.to_dense()[i]):
                raise ValueError(f"Lz row {i} lies in the Z-stabilizer rowspace")
        expected_k = self.n - gf2.rank(self.hx) - gf2.rank(self.hz)
        if self.k != expected_k:
            raise ValueError(f"k={self.k} but n - rank(Hx) - rank(Hz) = {expected_k}")


def _any_bit(m: BitMatrix) -> bool:
    return bool(m.words.any())


# ---------------------------------------------------------------------------
# rotated surface codes


def surface_plaquettes(d: int) -> list[tuple[bool, dict[str, int]]]:
    """Plaquettes of the distance-d rotated surface code, in check-id order.

    Each entry is ``(is_x, corners)`` where corners maps the geometric role
    ('nw', 'ne', 'sw', 'se') of each in-grid corner to its data-qubit index
    (row-major over the d x d grid). X plaquettes come first, matching the
    global stabilizer numbering of :func:`make_rotated_surface`.
    """
    if d < 3 or d % 2 == 0:
        raise ValueError(f"distance must be odd and >= 3, got {d}")

    def qubit(r: int, c: int) -> int:
        return r * d + c

    x_plaq: list[dict[str, int]] = []
    z_plaq: list[dict[str, int]] = []
    roles = (("nw", 0, 0), ("ne", 0, 1), ("sw", 1, 0), ("se", 1, 1))
    for r in range(-1, d):
        for c in range(-1, d):
            corners = {
                role: qubit(r + dr, c + dc)
                for role, dr, dc in roles
                if 0 <= r + dr < d and 0 <= c + dc < d
            }
            if len(corners) < 2:
                continue
            is_x = (r + c) % 2 == 0
            if len(corners) == 2:
                # boundary checks: X on left/right edges, Z on top/bottom
                on_side = c == -1 or c == d - 1
                if is_x != on_side:
                    continue
            (x_plaq if is_x else z_plaq).append(corners)
    return [(True, p) for p in x_plaq] + [(False, p) for p in z_plaq]


def make_rotated_surface(d: int) -> CssCode:
    """Rotated surface code of odd distance d.

    Data qubits sit on a d x d grid, indexed row-major. Plaquettes (bulk
    weight 4, boundary weight 2) alternate X/Z in a checkerboard; the
    logical X is the top row and the logical Z the left column.
    """
    plaquettes = surface_plaquettes(d)

    def qubit(r: int, c: int) -> int:
        return r * d + c

    x_rows = [sorted(p.values()) for is_x, p in plaquettes if is_x]
    z_rows = [sorted(p.values()) for is_x, p in plaquettes if not is_x]
    hx = BitMatrix.from_rows(x_rows, d * d)
    hz = BitMatrix.from_rows(z_rows, d * d)
    lx = BitMatrix.from_rows([[qubit(0, c) for c in range(d)]], d * d)
    lz = BitMatrix.from_rows([[qubit(r, 0) for r in range(d)]], d * d)
    code = CssCode(name=f"surface:{d}", n=d * d, k=1, hx=hx, hz=hz, lx=lx, lz=lz)
    code.validate()
    return code


# ---------------------------------------------------------------------------
# logical operator computation


def compute_logicals(hx: BitMatrix, hz: BitMatrix) -> tuple[BitMatrix, BitMatrix]:
    """Paired logical bases from the check matrices alone.

    Lx rows are coset representatives of ker(Hz) / rowspace(Hx), Lz rows of
    ker(Hx) / rowspace(Hz); the pair is normalized so Lx @ Lz^T = I_k.
    Representatives are weight-reduced within their stabilizer coset
    (exactly for small stabilizer groups, greedily otherwise).
    """
    if _any_bit(hx.matmul(hz.transpose())):
        raise ValueError("Hx @ Hz^T != 0: not a CSS pair")
    n = hx.cols
    k = n - gf2.rank(hx) - gf2.rank(hz)
    if k == 0:
        return BitMatrix.zeros(0, n), BitMatrix.zeros(0, n)

    lx_rows = _coset_representatives(gf2.kernel_basis(hz), hx, k)
    lz_rows = _coset_representatives(gf2.kernel_basis(hx), hz, k)
    lx_rows = [_reduce_weight(v, hx) for v in lx_rows]
    lz_rows = [_reduce_weight(v, hz) for v in lz_rows]

    lx = BitMatrix.from_dense(np.array(lx_rows))
    lz = BitMatrix.from_dense(np.array(lz_rows))
    pairing = lx.matmul(lz.transpose())
    # normalize: Lz <- (pairing^-1)^T @ Lz so that Lx @ Lz'^T = I_k
    lz = gf2.invert(pairing).transpose().matmul(lz)
    return lx, lz


def _coset_representatives(
    kernel: list[np.ndarray], stab: BitMatrix, k: int
) -> list[np.ndarray]:
    """k kernel vectors independent modulo the stabilizer rowspace."""
    elim = gf2.RowEliminator(stab.words.shape[1])
    for i in range(stab.rows):
        elim.add_row(stab.words[i])
    reps = []
    for v in kernel:
        if elim.add_row(gf2.pack_vector(v, stab.cols)):
            reps.append(v)
            if len(reps) == k:
                return reps
    raise ValueError("kernel does not contain k independent coset representatives")


def _reduce_weight(v: np.ndarray, stab: BitMatrix) -> np.ndarray:
    """Lower-weight representative of v modulo rowspace(stab).

    Exhaustive over the stabilizer group when it is small enough (the
    result is then a true coset minimum); greedy single-row descent
    otherwise. Ties keep the lexicographically packed-smallest vector so
    the outcome is deterministic.
    """
    rows = [stab.to_dense()[i] for i in range(stab.rows)]
    rows = [r for r in rows if r.any()]
    if len(rows) <= 12:
        best = v.copy()
        best_key = (int(best.sum()), best.tobytes())
        cur = v.copy()
        # Gray-code walk over all stabilizer combinations
        for g in range(1, 1 << len(rows)):
            cur ^= rows[(g & -g).bit_length() - 1]
            key = (int(cur.sum()), cur.tobytes())
            if key < best_key:
                best, best_key = cur.copy(), key
        return best
    cur = v.copy()
    improved = True
    while improved:
        improved = False
        for r in rows:
            cand = cur ^ r
            if cand.sum() < cur.sum():
                cur = cand
                improved = True
    return cur


# ---------------------------------------------------------------------------
# code-spec files


def code_to_dict(code: CssCode) -> dict:
    d: dict = {
        "name": code.name,
        "n": code.n,
        "hx": [code.hx.row_support(i) for i in range(code.hx.rows)],
        "hz": [code.hz.row_support(i) for i in range(code.hz.rows)],
        "lx": [code.lx.row_support(i) for i in range(code.lx.rows)],
        "lz": [code.lz.row_support(i) for i in range(code.lz.rows)],
    }
    return d


def code_from_dict(data: dict) -> CssCode:
    try:
        name = str(data["name"])
        n = int(data["n"])
        hx = BitMatrix.from_rows(data["hx"], n)
        hz = BitMatrix.from_rows(data["hz"], n)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed code spec: {exc}") from exc
    if "lx" in data and "lz" in data:
        lx = BitMatrix.from_rows(data["lx"], n)
        lz = BitMatrix.from_rows(data["lz"], n)
        k = lx.rows
    else:
        lx, lz = compute_logicals(hx, hz)
        k = lx.rows
    code = CssCode(name=name, n=n, k=k, hx=hx, hz=hz, lx=lx, lz=lz)
    code.validate()
    return code


def load_code(path: str | Path) -> CssCode:
    """Load and validate a code-spec JSON file.

    Logical operators are computed from the checks when the file omits
    them. Raises ValueError naming the failed check on invalid input.
    """
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"cannot parse code spec {path}: {exc}") from exc
    return code_from_dict(data)


def save_code(code: CssCode, path: str | Path) -> None:
    Path(path).write_text(json.dumps(code_to_dict(code), sort_keys=True, indent=1))


def resolve_code(spec: str) -> CssCode:
    """Resolve ``surface:<d>`` shorthand or a code-spec file path."""
    if spec.startswith("surface:"):
        return make_rotated_surface(int(spec.split(":", 1)[1]))
    return load_code(spec)
