"""Fragment extraction from raw files and the per-class archive format.

Archive layout (all integers little-endian)::

    b"FRAG" | version u16 | name length u16 | UTF-8 class name
    | record count u32 | records: file_id u32, length u32, payload
"""
from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError, ParameterError

log = logging.getLogger(__name__)

MAGIC = b"FRAG"
FORMAT_VERSION = 1
MAX_FRAGMENTS_PER_FILE = 1000


@dataclass(frozen=True)
class Fragment:
    data: bytes
    file_id: int = 0
    offset: int = 0

    def __post_init__(self):
        if len(self.data) < 1:
            raise InputError("fragment must hold at least one byte")

    def __len__(self):
        return len(self.data)

    def array(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype=np.uint8)


@dataclass(frozen=True)
class ExtractionParams:
    sizes: tuple = (1024,)
    head_discard: float = 0.0
    tail_discard: float = 0.0
    max_fragments: int = MAX_FRAGMENTS_PER_FILE
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if not self.sizes:
            raise ParameterError("at least one fragment size is required")
        if any(s < 1 for s in self.sizes):
            raise ParameterError(f"fragment sizes must be >= 1, got {self.sizes}")
        for name in ("head_discard", "tail_discard"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.25:
                raise ParameterError(f"{name} must lie in [0, 0.25], got {v}")
        if not 1 <= self.max_fragments <= MAX_FRAGMENTS_PER_FILE:
            raise ParameterError(
                f"max_fragments must lie in [1, {MAX_FRAGMENTS_PER_FILE}], got {self.max_fragments}"
            )


@dataclass
class FragmentArchive:
    class_name: str
    records: list = field(default_factory=list)  # list[Fragment]
    format_version: int = FORMAT_VERSION

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, FragmentArchive):
            return NotImplemented
        return (
            self.class_name == other.class_name
            and self.format_version == other.format_version
            and [(r.file_id, r.data) for r in self.records]
            == [(r.file_id, r.data) for r in other.records]
        )

    def check_contiguous(self):
        seen = set()
        last = None
        for r in self.records:
            if r.file_id != last:
                if r.file_id in seen:
                    raise InputError(f"records of file {r.file_id} are not contiguous")
                seen.add(r.file_id)
                last = r.file_id


def _file_rng(params: ExtractionParams, file_id: int) -> np.random.Generator:
    return np.random.default_rng([params.rng_seed, file_id])


def segment_file(file_bytes: bytes, params: ExtractionParams, file_id: int = 0, rng=None) -> list[Fragment]:
    """Cut a file into consecutive fragments and drop the head/tail shares.

    Lengths are drawn uniformly from ``params.sizes`` one segment at a time;
    a trailing piece shorter than its drawn length is dropped.
    """
    n = len(file_bytes)
    if n < min(params.sizes):
        return []
    if rng is None:
        rng = _file_rng(params, file_id)
    sizes = np.asarray(params.sizes)
    bounds = []
    pos = 0
    while True:
        s = int(sizes[rng.integers(len(sizes))]) if len(sizes) > 1 else int(sizes[0])
        if pos + s > n:
            break
        bounds.append((pos, s))
        pos += s
    total = len(bounds)
    head = int(np.floor(params.head_discard * total))
    tail = int(np.floor(params.tail_discard * total))
    kept = bounds[head:total - tail]
    return [Fragment(bytes(file_bytes[o:o + s]), file_id, o) for o, s in kept]


def extract_fragments(candidates: list[Fragment], params: ExtractionParams, rng=None) -> list[Fragment]:
    """Sample at most ``max_fragments`` candidates without replacement, keeping offset order."""
    if not candidates:
        return []
    k = min(params.max_fragments, len(candidates))
    if k == len(candidates):
        return sorted(candidates, key=lambda f: f.offset)
    if rng is None:
        rng = _file_rng(params, candidates[0].file_id)
    idx = np.sort(rng.choice(len(candidates), size=k, replace=False))
    return sorted((candidates[i] for i in idx), key=lambda f: f.offset)


def fragments_from_file(file_bytes: bytes, params: ExtractionParams, file_id: int = 0) -> list[Fragment]:
    rng = _file_rng(params, file_id)
    return extract_fragments(segment_file(file_bytes, params, file_id, rng), params, rng)


def _is_within(path: Path, root: Path) -> bool:
    try:
        path.resolve().relative_to(root.resolve())
        return True
    except ValueError:
        return False


def scan_corpus(root, params: ExtractionParams, out_dir=None) -> list[FragmentArchive]:
    """One archive per immediate subfolder of ``root``, named after it.

    Files and folders are visited in sorted order; file ids are global and
    assigned in that order, so repeated runs agree.  When ``out_dir`` is
    given it must lie outside ``root``.
    """
    root = Path(root)
    if out_dir is not None and _is_within(Path(out_dir), root):
        raise ParameterError(f"output directory {out_dir} must not be inside the corpus root {root}")
    if not root.is_dir():
        raise InputError(f"{root} is not a directory")
    folders = sorted(p for p in root.iterdir() if p.is_dir())
    if not folders:
        raise InputError(f"{root} has no class subfolders")
    archives = []
    file_id = 0
    for folder in folders:
        arch = FragmentArchive(folder.name)
        files = sorted(p for p in folder.iterdir() if p.is_file())
        for path in files:
            arch.records.extend(fragments_from_file(path.read_bytes(), params, file_id))
            file_id += 1
        if not arch.records:
            log.warning("class %s produced no fragments", folder.name)
        log.info("class %s: %d fragments from %d files", folder.name, len(arch), len(files))
        archives.append(arch)
    return archives


# ---------------------------------------------------------------- archive I/O


def encode_archive(archive: FragmentArchive) -> bytes:
    name = archive.class_name.encode("utf-8")
    if len(name) > 0xFFFF:
        raise ParameterError("class name too long")
    parts = [MAGIC, struct.pack("<HH", archive.format_version, len(name)), name,
             struct.pack("<I", len(archive.records))]
    for r in archive.records:
        parts.append(struct.pack("<II", r.file_id, len(r.data)))
        parts.append(r.data)
    return b"".join(parts)


def decode_archive(buf: bytes) -> FragmentArchive:
    if len(buf) < 8:
        raise FormatError("truncated archive header", 0)
    if buf[:4] != MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}", 0)
    version, name_len = struct.unpack_from("<HH", buf, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported archive version {version}", 4)
    pos = 8
    if pos + name_len + 4 > len(buf):
        raise FormatError("truncated class name or record count", pos)
    try:
        name = buf[pos:pos + name_len].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"class name is not UTF-8: {exc}", pos) from None
    pos += name_len
    (count,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    records = []
    for _ in range(count):
        if pos + 8 > len(buf):
            raise FormatError("truncated record header", pos)
        file_id, length = struct.unpack_from("<II", buf, pos)
        if length < 1:
            raise FormatError("record of length 0", pos + 4)
        if pos + 8 + length > len(buf):
            raise FormatError(f"record length {length} runs past end of file", pos + 4)
        records.append(Fragment(bytes(buf[pos + 8:pos + 8 + length]), file_id))
        pos += 8 + length
    if pos != len(buf):
        raise FormatError(f"{len(buf) - pos} trailing bytes after last record", pos)
    arch = FragmentArchive(name, records, version)
    arch.check_contiguous()
    return arch


def atomic_write(path, data: bytes):
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_archive(archive: FragmentArchive, path):
    atomic_write(path, encode_archive(archive))


def read_archive(path) -> FragmentArchive:
    return decode_archive(Path(path).read_bytes())


def import_raw(path, fragment_size: int, class_name=None, file_id=None) -> FragmentArchive:
    """Read a legacy headerless file holding back-to-back fixed-size fragments.

    The source files are unknown, so by default every fragment gets its own
    file id (its index); pass ``file_id`` to tag them all as one file.  A
    short trailing piece is a format error.
    """
    if fragment_size < 1:
        raise ParameterError("fragment size must be >= 1")
    path = Path(path)
    buf = path.read_bytes()
    if len(buf) % fragment_size:
        raise FormatError(
            f"{len(buf)} bytes is not a multiple of fragment size {fragment_size}",
            len(buf) - len(buf) % fragment_size,
        )
    name = class_name if class_name is not None else path.stem
    recs = [
        Fragment(buf[i:i + fragment_size], k if file_id is None else file_id, i)
        for k, i in enumerate(range(0, len(buf), fragment_size))
    ]
    return FragmentArchive(name, recs)
