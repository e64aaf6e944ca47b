"""Molecular integral tables, FCIDUMP I/O, and embedded fragment problems.

Conventions: spatial-orbital integrals in Hartree, two-electron table g in
chemist notation (uv|xy) with full 8-fold permutational symmetry stored
densely. Spin orbitals are expanded restricted (same spatial integrals for
both spins). A Partition fixes the fragment-major spin-orbital ordering:
for each fragment in order, for each of its spatial orbitals in order,
first the alpha then the beta spin orbital.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class FcidumpError(ValueError):
    """Malformed FCIDUMP content (carries a line number when known)."""


class ValidationError(ValueError):
    """Domain-invariant violation in integral or partition data."""


_CHEMIST_PERMS = (
    (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
    (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0),
)


@dataclass(frozen=True)
class IntegralSet:
    """Spatial-orbital one-/two-electron integrals plus the scalar core energy."""

    n_orb: int
    n_elec: int
    ms2: int
    core_energy: float
    h: np.ndarray
    g: np.ndarray
    orbsym: tuple[int, ...] | None = None

    def __post_init__(self):
        n = self.n_orb
        if self.h.shape != (n, n) or self.g.shape != (n, n, n, n):
            raise ValidationError("integral table shapes do not match n_orb")
        if not (np.all(np.isfinite(self.h)) and np.all(np.isfinite(self.g))
                and np.isfinite(self.core_energy)):
            raise ValidationError("non-finite integral value")
        if self.n_elec < 0 or self.n_elec > 2 * n:
            raise ValidationError("electron count outside [0, 2*n_orb]")
        if not np.allclose(self.h, self.h.T, atol=1e-10, rtol=0.0):
            raise ValidationError("one-electron table not symmetric")
        for perm in _CHEMIST_PERMS:
            if not np.allclose(self.g, np.transpose(self.g, perm), atol=1e-10, rtol=0.0):
                raise ValidationError("two-electron table violates 8-fold symmetry")
        if self.orbsym is not None and len(self.orbsym) != n:
            raise ValidationError("orbsym length mismatch")


@dataclass(frozen=True)
class Fragment:
    orbitals: tuple[int, ...]
    n_elec: int


@dataclass(frozen=True)
class Partition:
    """Assignment of spatial orbitals (and electrons) to ordered fragments."""

    fragments: tuple[Fragment, ...]

    def __post_init__(self):
        seen: set[int] = set()
        for frag in self.fragments:
            if len(frag.orbitals) == 0:
                raise ValidationError("fragment with zero orbitals")
            if frag.n_elec < 0 or frag.n_elec % 2 != 0:
                raise ValidationError("fragment electron count must be even and >= 0")
            overlap = seen.intersection(frag.orbitals)
            if overlap:
                raise ValidationError(f"orbital(s) {sorted(overlap)} assigned twice")
            seen.update(frag.orbitals)

    @classmethod
    def single(cls, n_orb: int, n_elec: int) -> "Partition":
        return cls((Fragment(tuple(range(n_orb)), n_elec),))

    @property
    def n_fragments(self) -> int:
        return len(self.fragments)

    @property
    def n_orb(self) -> int:
        return sum(len(f.orbitals) for f in self.fragments)

    @property
    def n_elec(self) -> int:
        return sum(f.n_elec for f in self.fragments)

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_orb

    def validate_against(self, ints: IntegralSet) -> None:
        orbs = sorted(o for f in self.fragments for o in f.orbitals)
        if orbs != list(range(ints.n_orb)):
            raise ValidationError("fragment orbitals do not cover {0..n_orb-1}")
        if self.n_elec != ints.n_elec:
            raise ValidationError("fragment electron counts do not sum to n_elec")

    def spin_orbital_order(self) -> tuple[tuple[int, int], ...]:
        """Qubit q holds (spatial, spin) pairs in fragment-major order; spin 0=alpha."""
        order = []
        for frag in self.fragments:
            for p in frag.orbitals:
                order.append((p, 0))
                order.append((p, 1))
        return tuple(order)

    def qubit_index(self, spatial: int, spin: int) -> int:
        try:
            return self.spin_orbital_order().index((spatial, spin))
        except ValueError:
            raise ValidationError(f"orbital {spatial} not in partition") from None

    def qubit_map(self) -> dict[tuple[int, int], int]:
        return {so: q for q, so in enumerate(self.spin_orbital_order())}

    def fragment_of_orbital(self, spatial: int) -> int:
        for k, frag in enumerate(self.fragments):
            if spatial in frag.orbitals:
                return k
        raise ValidationError(f"orbital {spatial} not in partition")

    def fragment_qubit_range(self, fragment_id: int) -> tuple[int, int]:
        start = 0
        for k, frag in enumerate(self.fragments):
            width = 2 * len(frag.orbitals)
            if k == fragment_id:
                return start, start + width
            start += width
        raise ValidationError(f"no fragment {fragment_id}")


@dataclass(frozen=True)
class FragmentProblem:
    """Embedded fragment: local tables with the environment mean field folded
    into the one-body part, plus a constant shift (diagnostic only)."""

    fragment_id: int
    ints: IntegralSet
    constant_shift: float

    @property
    def n_qubits(self) -> int:
        return 2 * self.ints.n_orb


_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eEdD][+-]?\d+)?$")


def _parse_float(token: str, lineno: int) -> float:
    if not _FLOAT_RE.match(token):
        raise FcidumpError(f"line {lineno}: non-numeric value {token!r}")
    return float(token.replace("d", "e").replace("D", "E"))


def parse_fcidump(text: str) -> IntegralSet:
    """Parse FCIDUMP text: namelist header then "value i j k l" lines.

    1-based indices; (i,j,k,l) all nonzero is the chemist integral (ij|kl),
    (i,j,0,0) is h_ij, (0,0,0,0) the core energy. The 8-fold symmetry is
    expanded from stored entries; on duplicates the last occurrence wins.
    """
    lines = text.splitlines()
    header_parts: list[str] = []
    body_start = None
    for ln, raw in enumerate(lines):
        stripped = raw.strip()
        ended = False
        if "&END" in stripped.upper():
            stripped = stripped[: stripped.upper().index("&END")]
            ended = True
        elif stripped.endswith("/") or stripped == "/":
            stripped = stripped[:-1]
            ended = True
        header_parts.append(stripped)
        if ended:
            body_start = ln + 1
            break
    if body_start is None:
        raise FcidumpError("missing namelist terminator (&END or /)")

    header = " ".join(header_parts)
    header = re.sub(r"^\s*&\w+", "", header)
    fields: dict[str, list[str]] = {}
    for m in re.finditer(r"([A-Za-z][A-Za-z0-9_]*)\s*=\s*([^=]*?)(?=[A-Za-z][A-Za-z0-9_]*\s*=|$)", header):
        key = m.group(1).upper()
        values = [v for v in re.split(r"[,\s]+", m.group(2).strip()) if v]
        fields[key] = values

    def scalar_int(key: str) -> int:
        values = fields.get(key)
        if not values:
            raise FcidumpError(f"missing {key} in FCIDUMP header")
        try:
            return int(values[0])
        except ValueError:
            raise FcidumpError(f"malformed {key} in FCIDUMP header") from None

    n_orb = scalar_int("NORB")
    n_elec = scalar_int("NELEC")
    ms2 = scalar_int("MS2") if "MS2" in fields else 0
    if n_orb <= 0:
        raise FcidumpError("NORB must be positive")
    orbsym = None
    if "ORBSYM" in fields and fields["ORBSYM"]:
        try:
            orbsym = tuple(int(v) for v in fields["ORBSYM"])
        except ValueError:
            raise FcidumpError("malformed ORBSYM in FCIDUMP header") from None

    h = np.zeros((n_orb, n_orb))
    g = np.zeros((n_orb, n_orb, n_orb, n_orb))
    core = 0.0
    for ln in range(body_start, len(lines)):
        line = lines[ln].strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FcidumpError(f"line {ln + 1}: expected 'value i j k l'")
        value = _parse_float(parts[0], ln + 1)
        try:
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError:
            raise FcidumpError(f"line {ln + 1}: non-integer index") from None
        for idx in (i, j, k, l):
            if idx < 0 or idx > n_orb:
                raise FcidumpError(f"line {ln + 1}: orbital index {idx} out of range")
        if i and j and k and l:
            a, b, c, d = i - 1, j - 1, k - 1, l - 1
            for p, q, r, s in {(a, b, c, d), (b, a, c, d), (a, b, d, c), (b, a, d, c),
                               (c, d, a, b), (d, c, a, b), (c, d, b, a), (d, c, b, a)}:
                g[p, q, r, s] = value
        elif i and j and not k and not l:
            h[i - 1, j - 1] = value
            h[j - 1, i - 1] = value
        elif not any((i, j, k, l)):
            core = value
        else:
            raise FcidumpError(f"line {ln + 1}: unsupported index pattern {(i, j, k, l)}")

    return IntegralSet(n_orb=n_orb, n_elec=n_elec, ms2=ms2, core_energy=core,
                       h=h, g=g, orbsym=orbsym)


def serialize_fcidump(ints: IntegralSet) -> str:
    """Emit FCIDUMP text that parses back bit-exactly (17 significant digits)."""
    out = [f"&FCI NORB={ints.n_orb},NELEC={ints.n_elec},MS2={ints.ms2},"]
    if ints.orbsym is not None:
        out.append(" ORBSYM=" + ",".join(str(s) for s in ints.orbsym) + ",")
    out.append(" ISYM=1,")
    out.append("&END")
    n = ints.n_orb
    for i in range(n):
        for j in range(i + 1):
            for k in range(i + 1):
                lmax = j if k == i else k
                for l in range(lmax + 1):
                    v = ints.g[i, j, k, l]
                    if v != 0.0:
                        out.append(f"{v:.17g} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(n):
        for j in range(i + 1):
            if ints.h[i, j] != 0.0:
                out.append(f"{ints.h[i, j]:.17g} {i + 1} {j + 1} 0 0")
    out.append(f"{ints.core_energy:.17g} 0 0 0 0")
    return "\n".join(out) + "\n"


def rotate_orbitals(ints: IntegralSet, U: np.ndarray) -> IntegralSet:
    """Four-index transform of all tables by an orthogonal matrix U.

    Column m of U expresses new orbital m in the old basis, so
    h' = U^T h U and g' carries one factor of U per index.
    """
    U = np.asarray(U, dtype=float)
    if U.shape != (ints.n_orb, ints.n_orb):
        raise ValidationError("rotation matrix shape mismatch")
    if not np.allclose(U.T @ U, np.eye(ints.n_orb), atol=1e-10, rtol=0.0):
        raise ValidationError("rotation matrix is not orthogonal")
    h = U.T @ ints.h @ U
    h = (h + h.T) / 2.0
    g = np.einsum("pqrs,pi,qj,rk,sl->ijkl", ints.g, U, U, U, U, optimize=True)
    g = exact_symmetrize(g)
    return IntegralSet(n_orb=ints.n_orb, n_elec=ints.n_elec, ms2=ints.ms2,
                       core_energy=ints.core_energy, h=h, g=g, orbsym=None)


def exact_symmetrize(g: np.ndarray) -> np.ndarray:
    """Broadcast each canonical entry to all 8 chemist permutations so the
    stored table is bitwise 8-fold symmetric (not just to rounding)."""
    n = g.shape[0]
    out = np.empty_like(g)
    for i in range(n):
        for j in range(i + 1):
            for k in range(i + 1):
                lmax = j if k == i else k
                for l in range(lmax + 1):
                    v = g[i, j, k, l]
                    for p, q, r, s in {(i, j, k, l), (j, i, k, l), (i, j, l, k),
                                       (j, i, l, k), (k, l, i, j), (l, k, i, j),
                                       (k, l, j, i), (l, k, j, i)}:
                        out[p, q, r, s] = v
    return out


def embedding_occupied(ints: IntegralSet, part: Partition, fragment_id: int,
                       occ_mode: str = "all_occ",
                       occupied: Sequence[int] | None = None) -> tuple[int, ...]:
    """Spatial orbitals whose mean field enters the embedded Fock operator.

    The doubly-occupied set of the aufbau reference determinant is the first
    n_elec/2 orbitals in source order (override via `occupied`); "env_occ"
    additionally excludes the target fragment's own orbitals.
    """
    if occupied is None:
        occupied = tuple(range(ints.n_elec // 2))
    occupied = tuple(int(i) for i in occupied)
    if occ_mode == "all_occ":
        return occupied
    if occ_mode == "env_occ":
        own = set(part.fragments[fragment_id].orbitals)
        return tuple(i for i in occupied if i not in own)
    raise ValidationError(f"unknown embed occupation mode {occ_mode!r}")


def embed_fragment(ints: IntegralSet, part: Partition, fragment_id: int,
                   occ_mode: str = "all_occ", half_prefactor: bool = True,
                   occupied: Sequence[int] | None = None) -> FragmentProblem:
    """Embedded fragment problem: Fock-dressed one-body part plus local g.

    F_uv = h_uv + fac * sum_i (2 (ii|uv) - (iv|ui)) over the embedding
    occupied set, fac = 1/2 by default (the printed convention) or 1 for the
    conventional inactive-Fock form.
    """
    part.validate_against(ints)
    if fragment_id < 0 or fragment_id >= part.n_fragments:
        raise ValidationError(f"no fragment {fragment_id}")
    frag = part.fragments[fragment_id]
    orbs = list(frag.orbitals)
    occ = embedding_occupied(ints, part, fragment_id, occ_mode, occupied)
    fac = 0.5 if half_prefactor else 1.0

    coulomb = np.zeros((ints.n_orb, ints.n_orb))
    exchange = np.zeros((ints.n_orb, ints.n_orb))
    for i in occ:
        coulomb += ints.g[i, i, :, :]
        exchange += ints.g[i, :, :, i]
    fock = ints.h + fac * (2.0 * coulomb - exchange)

    local_h = fock[np.ix_(orbs, orbs)]
    local_g = ints.g[np.ix_(orbs, orbs, orbs, orbs)]
    local = IntegralSet(n_orb=len(orbs), n_elec=frag.n_elec, ms2=0,
                        core_energy=ints.core_energy,
                        h=local_h, g=local_g, orbsym=None)
    return FragmentProblem(fragment_id=fragment_id, ints=local,
                           constant_shift=ints.core_energy)


def hf_reference(ints: IntegralSet, part: Partition) -> tuple[int, ...]:
    """Aufbau occupation bitstring, permuted to the partition's qubit order.

    Requires source ordering with occupied orbitals first; fills the first
    n_elec spin orbitals in (orbital, alpha-then-beta) source order.
    """
    if ints.n_elec % 2 != 0 and ints.ms2 == 0:
        raise ValidationError("odd electron count with MS2=0")
    part.validate_against(ints)
    occupied_source = set(range(ints.n_elec))
    bits = []
    for spatial, spin in part.spin_orbital_order():
        source_index = 2 * spatial + spin
        bits.append(1 if source_index in occupied_source else 0)
    return tuple(bits)
