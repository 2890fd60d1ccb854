"""Reading and writing experiment artifacts.

Binary field dumps are little-endian records: a packed header
``{magic "SGSQ", version u32, L f64, n_side u32, is_real u8}`` followed by the
row-major complex64 coefficients. Several records may follow each other in one
file (a wave checkpoint stores position then velocity).

Every output directory gets a ``manifest.json`` describing the run. The
manifest hashes the result payloads, never the wall-clock fields, so that two
runs of the same configuration produce the same ``payload_sha256``.
"""

import hashlib
import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from sine_gordon_lab.errors import ConfigError, ProvenanceError, ShapeError
from sine_gordon_lab.fourier import GridSpec, SpectralField

logger = logging.getLogger(__name__)

MAGIC = b"SGSQ"
FORMAT_VERSION = 1
HEADER_DTYPE = np.dtype(
    [("magic", "S4"), ("version", "<u4"), ("L", "<f8"), ("n_side", "<u4"), ("is_real", "u1")]
)
COEFF_DTYPE = np.dtype("<c8")

PathLike = Union[str, os.PathLike]


def encode_field(field: SpectralField) -> bytes:
    """Serialise one unbatched field as a dump record."""
    if field.batch_shape:
        raise ShapeError(f"dump records hold single fields, got batch shape {field.batch_shape}")
    header = np.zeros((), dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["version"] = FORMAT_VERSION
    header["L"] = field.grid.L
    header["n_side"] = field.grid.n_side
    header["is_real"] = int(field.is_real)
    return header.tobytes() + np.ascontiguousarray(field.coeffs, dtype=COEFF_DTYPE).tobytes()


def decode_fields(data: bytes) -> List[SpectralField]:
    """Parse consecutive dump records.

    Raises:
        ProvenanceError: On a wrong magic, unknown version or truncated record.
    """
    fields = []
    offset = 0
    while offset < len(data):
        if len(data) - offset < HEADER_DTYPE.itemsize:
            raise ProvenanceError(f"truncated header at byte {offset}")
        header = np.frombuffer(data, dtype=HEADER_DTYPE, count=1, offset=offset)[0]
        if header["magic"] != MAGIC:
            raise ProvenanceError(f"bad magic {header['magic']!r} at byte {offset}")
        if int(header["version"]) != FORMAT_VERSION:
            raise ProvenanceError(f"unsupported dump version {int(header['version'])}")
        grid = GridSpec(float(header["L"]), int(header["n_side"]))
        offset += HEADER_DTYPE.itemsize
        count = grid.n_side * grid.n_side
        if len(data) - offset < count * COEFF_DTYPE.itemsize:
            raise ProvenanceError("truncated coefficient block")
        coeffs = np.frombuffer(data, dtype=COEFF_DTYPE, count=count, offset=offset).reshape(grid.shape)
        offset += count * COEFF_DTYPE.itemsize
        fields.append(SpectralField(grid, coeffs.astype(np.complex128), bool(header["is_real"])))
    return fields


def write_field_dump(path: PathLike, *fields: SpectralField) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(encode_field(f) for f in fields))
    return path


def read_field_dump(path: PathLike) -> List[SpectralField]:
    return decode_fields(Path(path).read_bytes())


def coefficient_frame(field: SpectralField) -> pd.DataFrame:
    """One row per mode: wavenumber, |coefficient|, real and imaginary parts."""
    n1, n2 = field.grid.wavenumbers()
    coeffs = field.coeffs
    return pd.DataFrame(
        {
            "n1": n1.ravel(),
            "n2": n2.ravel(),
            "abs": np.abs(coeffs).ravel(),
            "real": coeffs.real.ravel(),
            "imag": coeffs.imag.ravel(),
        }
    )


def export_coefficient_csv(field: SpectralField, path: PathLike) -> Path:
    path = Path(path)
    coefficient_frame(field).to_csv(path, index=False)
    return path


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, Path):
        return str(value)
    return value


def dumps_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_checkpoint(
    stem: PathLike, fields: List[SpectralField], t: float, params: Dict[str, Any], stream: Optional[dict] = None
) -> Path:
    """Field dump ``<stem>.sgsq`` plus a JSON sidecar ``<stem>.json`` with t, stream and params."""
    stem = Path(stem)
    dump = write_field_dump(stem.with_suffix(".sgsq"), *fields)
    sidecar = {"t": t, "stream": stream, "params": params, "records": len(fields), "sha256": sha256_file(dump)}
    stem.with_suffix(".json").write_text(dumps_json(sidecar), encoding="utf-8")
    return dump


def read_checkpoint(stem: PathLike) -> tuple:
    """Return (fields, sidecar); the dump must match the hash recorded in the sidecar."""
    stem = Path(stem)
    sidecar = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
    dump = stem.with_suffix(".sgsq")
    if sha256_file(dump) != sidecar.get("sha256"):
        raise ProvenanceError(f"{dump} does not match its sidecar hash")
    return read_field_dump(dump), sidecar


def fresh_run_directory(root: PathLike, name: str) -> Path:
    """Create ``root/name/run-NNNN`` with the next unused index; never reuses a directory."""
    base = Path(root) / name
    base.mkdir(parents=True, exist_ok=True)
    index = 1
    while True:
        candidate = base / f"run-{index:04d}"
        try:
            candidate.mkdir()
            return candidate
        except FileExistsError:
            index += 1


class ArtifactWriter:
    """Single writer for one output directory.

    Payload files are registered as they are written; :meth:`finalize` writes
    the manifest with a hash over all payloads.
    """

    def __init__(self, directory: PathLike):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.payloads: Dict[str, str] = {}

    def _register(self, path: Path) -> Path:
        relative = path.relative_to(self.directory).as_posix()
        if relative in self.payloads:
            raise ConfigError(f"artifact {relative} written twice")
        self.payloads[relative] = sha256_file(path)
        logger.debug(f"wrote {path}")
        return path

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.directory / name
        frame.to_csv(path, index=False)
        return self._register(path)

    def write_json(self, name: str, obj: Any) -> Path:
        path = self.directory / name
        path.write_text(dumps_json(obj), encoding="utf-8")
        return self._register(path)

    def write_fields(self, name: str, *fields: SpectralField) -> Path:
        return self._register(write_field_dump(self.directory / name, *fields))

    def write_checkpoint(
        self, stem: str, fields: List[SpectralField], t: float, params: Dict[str, Any], stream: Optional[dict] = None
    ) -> Path:
        dump = write_checkpoint(self.directory / stem, fields, t, params, stream)
        self._register(dump)
        self._register(dump.with_suffix(".json"))
        return dump

    def payload_hash(self) -> str:
        digest = hashlib.sha256()
        for name in sorted(self.payloads):
            digest.update(name.encode("utf-8"))
            digest.update(self.payloads[name].encode("ascii"))
        return digest.hexdigest()

    def finalize(self, manifest: Dict[str, Any], wall_time: float) -> Path:
        """Write ``manifest.json``; ``wall_time`` is recorded but excluded from the hash."""
        body = dict(manifest)
        body["payloads"] = dict(sorted(self.payloads.items()))
        body["payload_sha256"] = self.payload_hash()
        body["wall_time_seconds"] = wall_time
        path = self.directory / "manifest.json"
        path.write_text(dumps_json(body), encoding="utf-8")
        logger.info(f"manifest written to {path}")
        return path
