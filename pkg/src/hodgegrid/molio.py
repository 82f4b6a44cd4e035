"""Molecular structure parsing and element-specific atom-pair clouds.

Supported formats: plain xyz lines, the ATOM/HETATM subset of PDB fixed
columns, and the @<TRIPOS>ATOM block of mol2.  Unknown elements are counted
and skipped; a file that yields no usable atom raises EmptyStructureError.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyStructureError, InvalidArgumentError, ParseError
from .levelset import VDW_RADII, AtomSite

PROTEIN_ELEMENTS = ("C", "N", "O", "S")
LIGAND_ELEMENTS = ("H", "C", "N", "O", "S", "P", "F", "Cl", "Br", "I")
DEFAULT_CUTOFF = 12.0


@dataclass
class MolecularStructure:
    atoms: list
    source_role: str
    id: str = ""
    skipped_elements: dict = field(default_factory=dict)
    skipped_altloc: int = 0

    def positions(self):
        return np.array([a.position for a in self.atoms], dtype=float).reshape(-1, 3)

    def element_counts(self):
        counts = {}
        for a in self.atoms:
            counts[a.element] = counts.get(a.element, 0) + 1
        return counts


@dataclass
class AtomPairCloud:
    pair_label: tuple
    atoms: list

    @property
    def empty(self):
        return len(self.atoms) == 0


def _normalize_element(raw):
    """Map a raw element token to a radii-table symbol, or None."""
    sym = raw.strip()
    if not sym:
        return None
    sym = sym[0].upper() + sym[1:].lower()
    return sym if sym in VDW_RADII else None


def _element_from_atom_name(name):
    """PDB fallback: strip digits, try two-letter then one-letter symbol."""
    letters = "".join(c for c in name if c.isalpha())
    if not letters:
        return None
    two = _normalize_element(letters[:2])
    if two is not None and len(letters) >= 2:
        return two
    return _normalize_element(letters[:1])


def _site(element, x, y, z):
    return AtomSite(position=(x, y, z), element=element, vdw_radius=VDW_RADII[element])


def _parse_xyz(lines):
    atoms, skipped = [], {}
    start = 0
    if lines and len(lines[0].split()) == 1:
        try:
            int(lines[0].split()[0])
            start = 2  # counted-xyz header: atom count then comment
        except ValueError:
            start = 0
    for ln, line in enumerate(lines[start:], start=start + 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) < 4:
            raise ParseError(f"xyz record needs 'element x y z', got {line.strip()!r}", ln)
        elem = _normalize_element(parts[0])
        try:
            x, y, z = (float(v) for v in parts[1:4])
        except ValueError as exc:
            raise ParseError(f"bad coordinate in {line.strip()!r}", ln) from exc
        if elem is None:
            skipped[parts[0]] = skipped.get(parts[0], 0) + 1
            continue
        atoms.append(_site(elem, x, y, z))
    return atoms, skipped, 0


def _parse_pdb(lines):
    atoms, skipped = [], {}
    seen = set()
    skipped_altloc = 0
    for ln, line in enumerate(lines, start=1):
        if not (line.startswith("ATOM") or line.startswith("HETATM")):
            continue
        if len(line) < 54:
            raise ParseError(f"short ATOM record ({len(line)} chars)", ln)
        name = line[12:16]
        # altLoc and insertion code ignored: first occurrence of an atom wins
        key = (name.strip(), line[17:20].strip(), line[21:22], line[22:27])
        if key in seen:
            skipped_altloc += 1
            continue
        seen.add(key)
        try:
            x = float(line[30:38])
            y = float(line[38:46])
            z = float(line[46:54])
        except ValueError as exc:
            raise ParseError(f"bad coordinates in {line.rstrip()!r}", ln) from exc
        elem = _normalize_element(line[76:78]) if len(line) >= 78 else None
        if elem is None:
            elem = _element_from_atom_name(name)
        if elem is None:
            token = (line[76:78].strip() or name.strip()) or "?"
            skipped[token] = skipped.get(token, 0) + 1
            continue
        atoms.append(_site(elem, x, y, z))
    return atoms, skipped, skipped_altloc


def _parse_mol2(lines):
    atoms, skipped = [], {}
    in_block = False
    for ln, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped.startswith("@<TRIPOS>"):
            in_block = stripped.upper() == "@<TRIPOS>ATOM"
            continue
        if not in_block or not stripped:
            continue
        parts = stripped.split()
        if len(parts) < 6:
            raise ParseError(f"mol2 atom record too short: {stripped!r}", ln)
        try:
            x, y, z = (float(v) for v in parts[2:5])
        except ValueError as exc:
            raise ParseError(f"bad coordinate in {stripped!r}", ln) from exc
        sybyl = parts[5].split(".")[0]
        elem = _normalize_element(sybyl)
        if elem is None:
            skipped[parts[5]] = skipped.get(parts[5], 0) + 1
            continue
        atoms.append(_site(elem, x, y, z))
    return atoms, skipped, 0


_PARSERS = {"xyz": _parse_xyz, "pdb-subset": _parse_pdb, "mol2-subset": _parse_mol2}
_FORMAT_ALIASES = {"pdb": "pdb-subset", "mol2": "mol2-subset", "xyz": "xyz"}


def parse_structure(content, format: str, role: str, id: str = "") -> MolecularStructure:
    """Parse file content (str or bytes) into a MolecularStructure."""
    fmt = _FORMAT_ALIASES.get(format, format)
    if fmt not in _PARSERS:
        raise InvalidArgumentError(f"unknown format {format!r}")
    if isinstance(content, bytes):
        content = content.decode("utf-8", errors="replace")
    if not content.strip():
        raise EmptyStructureError(f"empty {fmt} content")
    atoms, skipped, skipped_altloc = _PARSERS[fmt](content.splitlines())
    structure = MolecularStructure(
        atoms=atoms, source_role=role, id=id,
        skipped_elements=skipped, skipped_altloc=skipped_altloc,
    )
    if not atoms:
        raise EmptyStructureError(
            f"no usable atoms parsed (skipped: {skipped or 'none'})"
        )
    return structure


def load_structure(path, role: str, format: str | None = None) -> MolecularStructure:
    """Parse a structure file, inferring the format from the extension."""
    spath = str(path)
    if format is None:
        ext = spath.rsplit(".", 1)[-1].lower()
        if ext not in _FORMAT_ALIASES:
            raise InvalidArgumentError(f"cannot infer format of {spath!r}")
        format = ext
    with open(spath, "rb") as fh:
        content = fh.read()
    name = spath.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return parse_structure(content, format, role, id=name)


def pair_clouds(protein: MolecularStructure, ligand: MolecularStructure,
                cutoff: float = DEFAULT_CUTOFF):
    """The 40 element-specific clouds in fixed (protein, ligand) order.

    A cloud holds the protein atoms of its element within `cutoff` of any
    ligand atom, plus all ligand atoms of its element.  Protein hydrogens
    are ignored.  Empty clouds are kept so downstream feature blocks stay
    aligned.
    """
    if not cutoff > 0:
        raise InvalidArgumentError(f"cutoff must be positive, got {cutoff}")
    lig_pos = ligand.positions()
    near = {}
    for elem in PROTEIN_ELEMENTS:
        sel = [a for a in protein.atoms if a.element == elem]
        if sel and len(lig_pos):
            pos = np.array([a.position for a in sel])
            d2 = ((pos[:, None, :] - lig_pos[None, :, :]) ** 2).sum(axis=2)
            keep = d2.min(axis=1) <= cutoff * cutoff
            near[elem] = [a for a, k in zip(sel, keep) if k]
        else:
            near[elem] = []
    by_lig_elem = {}
    for elem in LIGAND_ELEMENTS:
        by_lig_elem[elem] = [a for a in ligand.atoms if a.element == elem]
    clouds = []
    for pe in PROTEIN_ELEMENTS:
        for le in LIGAND_ELEMENTS:
            atoms = list(near[pe]) + list(by_lig_elem[le])
            atoms.sort(key=lambda a: (a.element, a.position))
            clouds.append(AtomPairCloud(pair_label=(pe, le), atoms=atoms))
    return clouds


def parse_report(structure: MolecularStructure) -> str:
    """Structured-text parse report: per-element counts and skip counts."""
    lines = [f"id {structure.id or '-'}", f"role {structure.source_role}",
             f"atoms {len(structure.atoms)}"]
    for elem, count in sorted(structure.element_counts().items()):
        lines.append(f"element {elem} {count}")
    for token, count in sorted(structure.skipped_elements.items()):
        lines.append(f"skipped {token} {count}")
    if structure.skipped_altloc:
        lines.append(f"skipped_altloc {structure.skipped_altloc}")
    return "\n".join(lines) + "\n"
