"""Synthetic paired multimodal data with known latent structure.

Each concept owns a unit latent vector z; the two modalities see different
fixed orthonormal linear projections of it plus isotropic Gaussian noise:

    x_img = A_img @ z + sigma * n_img
    x_txt = A_txt @ z + sigma * n_txt

Two different linear images of one latent produce a genuine geometric
modality gap while keeping retrieval ground truth exact. A duplication
factor creates several pairs per concept (fresh noise each) for harder
retrieval pools and query/candidate splits.

Datasets are stored in the GCLD binary format (little-endian):

    magic "GCLD" | version u16 | d_in u32 | n_pairs u32 | k u32
    | sigma f32 | seed u64
    then n_pairs records of: concept_id u32 | x_img d_in*f32 | x_txt d_in*f32

with the manifest duplicated as a human-readable JSON sidecar at
``<path>.json`` (the sidecar also carries split and duplication, which the
binary header does not).
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, InvalidDimsError

MAGIC = b"GCLD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIIIfQ")

SPLITS = ("train", "eval")


@dataclass(frozen=True)
class LatentConcept:
    """One underlying semantic factor; all pairs of a concept share its z."""

    id: int
    z: np.ndarray


@dataclass(frozen=True)
class SyntheticPair:
    """A matched image/text feature pair (float32, length d_in each)."""

    concept_id: int
    x_img: np.ndarray
    x_txt: np.ndarray


@dataclass(frozen=True)
class DatasetManifest:
    """Parameters that exactly reproduce the dataset bytes for a given seed.

    projection_seed identifies the "world" — the fixed modality projections.
    Train/eval splits of one experiment share it while drawing different
    concepts and noise from their own sample seeds. It defaults to the
    sample seed, which reproduces the single-seed layout exactly.
    """

    n_pairs: int
    d_in: int
    k: int
    sigma: float
    seed: int
    split: str = "train"
    duplication: int = 1
    projection_seed: int | None = None

    @property
    def effective_projection_seed(self) -> int:
        return self.seed if self.projection_seed is None else self.projection_seed


def modality_projections(k: int, d_in: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """The fixed per-seed orthonormal-column projections (A_img, A_txt).

    Exposed so tests and diagnostics can recover latents via A.T @ x.
    Consumes the first draws of the generation PRNG stream.
    """
    rng = np.random.default_rng(seed)
    a_img = np.linalg.qr(rng.standard_normal((d_in, k)))[0]
    a_txt = np.linalg.qr(rng.standard_normal((d_in, k)))[0]
    return a_img, a_txt


def generate_dataset(
    n_pairs: int,
    k: int,
    d_in: int,
    sigma: float,
    seed: int,
    duplication: int = 1,
    split: str = "train",
    projection_seed: int | None = None,
) -> tuple[list[SyntheticPair], DatasetManifest]:
    """Generate a paired dataset; bit-identical for identical arguments.

    Draw order is fixed: A_img, A_txt, one latent per concept, then per-pair
    noise (image then text, in pair order). Arithmetic runs in float64 and
    features are cast to float32 at the end, so in-memory pairs match the
    on-disk representation exactly. Pair p belongs to concept
    p // duplication.

    projection_seed pins the modality projections independently of the
    sample draws, so several datasets (train/eval/extra splits with
    different sample seeds) can live in one shared world. When it is omitted
    or equals the sample seed, the projections consume the first draws of
    the sample stream, exactly as a single-seed dataset always has.
    """
    if n_pairs < 2:
        raise ConfigError(f"n_pairs must be >= 2, got {n_pairs}")
    if k < 1 or d_in < 1:
        raise InvalidDimsError(f"k and d_in must be >= 1, got k={k}, d_in={d_in}")
    if k > d_in:
        raise InvalidDimsError(f"latent dim k={k} cannot exceed feature dim d_in={d_in}")
    if sigma < 0:
        raise ConfigError(f"sigma must be >= 0, got {sigma}")
    if duplication < 1:
        raise ConfigError(f"duplication must be >= 1, got {duplication}")
    if n_pairs % duplication != 0:
        raise ConfigError(f"n_pairs={n_pairs} must be a multiple of duplication={duplication}")
    if split not in SPLITS:
        raise ConfigError(f"split must be one of {SPLITS}, got {split!r}")

    # float32-representable sigma so generation matches the stored header
    sigma32 = float(np.float32(sigma))
    effective_projection = seed if projection_seed is None else projection_seed
    rng = np.random.default_rng(seed)
    if effective_projection == seed:
        a_img = np.linalg.qr(rng.standard_normal((d_in, k)))[0]
        a_txt = np.linalg.qr(rng.standard_normal((d_in, k)))[0]
    else:
        a_img, a_txt = modality_projections(k, d_in, effective_projection)

    n_concepts = n_pairs // duplication
    concepts = []
    for cid in range(n_concepts):
        z = rng.standard_normal(k)
        z /= np.linalg.norm(z)
        concepts.append(LatentConcept(id=cid, z=z))

    pairs = []
    for p in range(n_pairs):
        z = concepts[p // duplication].z
        x_img = a_img @ z + sigma32 * rng.standard_normal(d_in)
        x_txt = a_txt @ z + sigma32 * rng.standard_normal(d_in)
        pairs.append(
            SyntheticPair(
                concept_id=p // duplication,
                x_img=x_img.astype(np.float32),
                x_txt=x_txt.astype(np.float32),
            )
        )
    manifest = DatasetManifest(
        n_pairs=n_pairs,
        d_in=d_in,
        k=k,
        sigma=sigma32,
        seed=seed,
        split=split,
        duplication=duplication,
        projection_seed=effective_projection,
    )
    return pairs, manifest


def dataset_to_arrays(pairs: list[SyntheticPair]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack pairs into (concept_ids, X_img, X_txt); features widened to float64."""
    ids = np.array([p.concept_id for p in pairs], dtype=np.int64)
    x_img = np.stack([p.x_img for p in pairs]).astype(np.float64)
    x_txt = np.stack([p.x_txt for p in pairs]).astype(np.float64)
    return ids, x_img, x_txt


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def write_dataset(pairs: list[SyntheticPair], manifest: DatasetManifest, path: str | Path) -> None:
    """Write the GCLD binary file plus its JSON manifest sidecar."""
    path = Path(path)
    if len(pairs) != manifest.n_pairs:
        raise ConfigError(f"manifest says {manifest.n_pairs} pairs, got {len(pairs)}")
    record = struct.Struct(f"<I{manifest.d_in}f{manifest.d_in}f")
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                MAGIC,
                FORMAT_VERSION,
                manifest.d_in,
                manifest.n_pairs,
                manifest.k,
                manifest.sigma,
                manifest.seed,
            )
        )
        for pair in pairs:
            if pair.x_img.shape != (manifest.d_in,) or pair.x_txt.shape != (manifest.d_in,):
                raise ConfigError(
                    f"pair features must have shape ({manifest.d_in},), got "
                    f"{pair.x_img.shape} / {pair.x_txt.shape}"
                )
            fh.write(record.pack(pair.concept_id, *pair.x_img.tolist(), *pair.x_txt.tolist()))
    sidecar = {"format": "gcld-manifest", "version": FORMAT_VERSION, **asdict(manifest)}
    _sidecar_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def read_dataset(path: str | Path) -> tuple[list[SyntheticPair], DatasetManifest]:
    """Read a GCLD file back; exact inverse of write_dataset.

    Raises FormatError (with the byte offset of the problem) on bad magic,
    unsupported version, inconsistent header dimensions, truncation, or
    trailing bytes. The sidecar, when present, supplies split/duplication
    and must agree with the binary header.
    """
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError(f"truncated header: need {_HEADER.size} bytes, file has {len(blob)}", offset=len(blob))
    magic, version, d_in, n_pairs, k, sigma, seed = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}", offset=4)
    if d_in < 1:
        raise FormatError(f"header d_in must be >= 1, got {d_in}", offset=6)
    if k < 1 or k > d_in:
        raise FormatError(f"header k={k} inconsistent with d_in={d_in}", offset=14)

    record = struct.Struct(f"<I{d_in}f{d_in}f")
    expected = _HEADER.size + n_pairs * record.size
    if len(blob) != expected:
        raise FormatError(
            f"payload size mismatch: header implies {expected} bytes, file has {len(blob)}",
            offset=min(len(blob), expected),
        )
    pairs = []
    offset = _HEADER.size
    for _ in range(n_pairs):
        fields = record.unpack_from(blob, offset)
        pairs.append(
            SyntheticPair(
                concept_id=fields[0],
                x_img=np.array(fields[1 : 1 + d_in], dtype=np.float32),
                x_txt=np.array(fields[1 + d_in :], dtype=np.float32),
            )
        )
        offset += record.size

    split, duplication, projection_seed = "train", 1, seed
    sidecar_path = _sidecar_path(path)
    if sidecar_path.exists():
        sidecar = json.loads(sidecar_path.read_text())
        for field_name, header_value in (("n_pairs", n_pairs), ("d_in", d_in), ("k", k), ("seed", seed)):
            if sidecar.get(field_name) != header_value:
                raise FormatError(
                    f"sidecar {field_name}={sidecar.get(field_name)} disagrees with header {header_value}"
                )
        split = sidecar.get("split", "train")
        duplication = sidecar.get("duplication", 1)
        projection_seed = sidecar.get("projection_seed", seed)
        if projection_seed is None:
            projection_seed = seed
    manifest = DatasetManifest(
        n_pairs=n_pairs,
        d_in=d_in,
        k=k,
        sigma=sigma,
        seed=seed,
        split=split,
        duplication=duplication,
        projection_seed=projection_seed,
    )
    return pairs, manifest
