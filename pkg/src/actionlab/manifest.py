"""Posed-clip dataset containers and the on-disk manifest format.

A dataset lives in a directory with a human-readable ``manifest.json``
sidecar plus lossless PNG images laid out as
``category_<ccc>/instance_<iiii>/frame_<fff>.png``.  Pixel values are
8-bit-quantized floats in [0, 1] (exact multiples of 1/255), which is what
makes the PNG round trip lossless.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ValidationError

MANIFEST_VERSION = 1
QUAT_NORM_TOL = 1e-6

DATASET_STYLES = ("yaw", "pose")


@dataclasses.dataclass
class CameraPose:
    """World-to-camera extrinsics: unit quaternion (w, x, y, z) plus translation."""

    quaternion: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        self.quaternion = np.asarray(self.quaternion, dtype=np.float64).reshape(4)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)


@dataclasses.dataclass
class ClipFrame:
    category_id: int
    instance_id: int
    clip_id: int
    frame_index: int
    yaw_deg: float
    pixels: np.ndarray  # (H, W, 3) float32 in [0, 1]
    extrinsics: CameraPose | None = None
    orientation_flag: int = 0


@dataclasses.dataclass
class Clip:
    clip_id: int
    category_id: int
    instance_id: int
    circular: bool
    frames: list[ClipFrame]

    def __len__(self):
        return len(self.frames)


@dataclasses.dataclass
class DatasetManifest:
    clips: list[Clip]
    dataset_style: str = "yaw"
    category_names: dict[int, str] = dataclasses.field(default_factory=dict)

    def frames(self):
        for clip in self.clips:
            yield from clip.frames

    @property
    def num_frames(self) -> int:
        return sum(len(c) for c in self.clips)

    @property
    def instance_ids(self) -> list[int]:
        return sorted({c.instance_id for c in self.clips})

    @property
    def category_ids(self) -> list[int]:
        return sorted({c.category_id for c in self.clips})

    def validate(self) -> None:
        """Check every invariant; raise ValidationError naming the offender."""
        if self.dataset_style not in DATASET_STYLES:
            raise ValidationError(f"unknown dataset_style {self.dataset_style!r}")
        for clip in self.clips:
            if not clip.frames:
                raise ValidationError(f"clip {clip.clip_id}: no frames")
            prev_index = None
            for frame in clip.frames:
                where = f"clip {clip.clip_id} frame {frame.frame_index}"
                if frame.instance_id != clip.instance_id or frame.category_id != clip.category_id:
                    raise ValidationError(f"{where}: instance/category differs from its clip")
                if prev_index is not None and frame.frame_index <= prev_index:
                    raise ValidationError(
                        f"clip {clip.clip_id}: frame_index not strictly increasing "
                        f"({prev_index} -> {frame.frame_index})"
                    )
                prev_index = frame.frame_index
                if not (0.0 <= frame.yaw_deg < 360.0):
                    raise ValidationError(f"{where}: yaw_deg {frame.yaw_deg} outside [0, 360)")
                if frame.orientation_flag not in (0, 1):
                    raise ValidationError(f"{where}: orientation_flag must be 0 or 1")
                if frame.extrinsics is not None:
                    norm = float(np.linalg.norm(frame.extrinsics.quaternion))
                    if abs(norm - 1.0) > QUAT_NORM_TOL:
                        raise ValidationError(f"{where}: quaternion norm {norm:.6f} not unit")
                elif self.dataset_style == "pose":
                    raise ValidationError(f"{where}: pose-style manifest requires extrinsics")
                px = frame.pixels
                if px.ndim != 3 or px.shape[2] != 3:
                    raise ValidationError(f"{where}: pixels must be (H, W, 3), got {px.shape}")
                if px.min() < 0.0 or px.max() > 1.0:
                    raise ValidationError(f"{where}: pixel values outside [0, 1]")


def _image_relpath(frame: ClipFrame) -> str:
    return (
        f"category_{frame.category_id:03d}/instance_{frame.instance_id:04d}/"
        f"frame_{frame.frame_index:04d}.png"
    )


def write_manifest(manifest: DatasetManifest, path: str | Path) -> Path:
    """Write manifest.json plus one PNG per frame under ``path``."""
    manifest.validate()
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    doc = {
        "format_version": MANIFEST_VERSION,
        "dataset_style": manifest.dataset_style,
        "categories": {str(k): v for k, v in sorted(manifest.category_names.items())},
        "clips": [],
    }
    for clip in manifest.clips:
        clip_doc = {
            "clip_id": clip.clip_id,
            "category_id": clip.category_id,
            "instance_id": clip.instance_id,
            "circular": clip.circular,
            "frames": [],
        }
        for frame in clip.frames:
            rel = _image_relpath(frame)
            img_path = root / rel
            img_path.parent.mkdir(parents=True, exist_ok=True)
            u8 = np.round(np.clip(frame.pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
            Image.fromarray(u8).save(img_path)
            frame_doc = {
                "frame_index": frame.frame_index,
                "yaw_deg": frame.yaw_deg,
                "orientation_flag": frame.orientation_flag,
                "image": rel,
            }
            if frame.extrinsics is not None:
                frame_doc["quaternion"] = [float(v) for v in frame.extrinsics.quaternion]
                frame_doc["translation"] = [float(v) for v in frame.extrinsics.translation]
            clip_doc["frames"].append(frame_doc)
        doc["clips"].append(clip_doc)
    with open(root / "manifest.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return root


def read_manifest(path: str | Path) -> DatasetManifest:
    """Load a manifest directory, validating every invariant on the way in."""
    root = Path(path)
    sidecar = root / "manifest.json"
    if not sidecar.exists():
        raise ValidationError(f"no manifest.json under {root}")
    try:
        with open(sidecar) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed sidecar {sidecar}: {exc}") from exc
    if doc.get("format_version") != MANIFEST_VERSION:
        raise ValidationError(f"unsupported manifest format_version {doc.get('format_version')!r}")

    clips = []
    for clip_doc in doc.get("clips", []):
        try:
            clip_id = int(clip_doc["clip_id"])
            category_id = int(clip_doc["category_id"])
            instance_id = int(clip_doc["instance_id"])
            circular = bool(clip_doc["circular"])
            frame_docs = clip_doc["frames"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed clip record: {exc!r}") from exc
        frames = []
        for frame_doc in frame_docs:
            try:
                frame_index = int(frame_doc["frame_index"])
                yaw_deg = float(frame_doc["yaw_deg"])
                orientation_flag = int(frame_doc.get("orientation_flag", 0))
                rel = frame_doc["image"]
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"clip {clip_id}: malformed frame record: {exc!r}") from exc
            img_path = root / rel
            if not img_path.exists():
                raise ValidationError(f"clip {clip_id} frame {frame_index}: missing image {rel}")
            u8 = np.asarray(Image.open(img_path).convert("RGB"), dtype=np.uint8)
            pixels = (u8.astype(np.float32) / 255.0).astype(np.float32)
            extr = None
            if "quaternion" in frame_doc or "translation" in frame_doc:
                try:
                    extr = CameraPose(
                        quaternion=np.array(frame_doc["quaternion"], dtype=np.float64),
                        translation=np.array(frame_doc["translation"], dtype=np.float64),
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise ValidationError(
                        f"clip {clip_id} frame {frame_index}: malformed extrinsics: {exc!r}"
                    ) from exc
            frames.append(
                ClipFrame(
                    category_id=category_id,
                    instance_id=instance_id,
                    clip_id=clip_id,
                    frame_index=frame_index,
                    yaw_deg=yaw_deg,
                    pixels=pixels,
                    extrinsics=extr,
                    orientation_flag=orientation_flag,
                )
            )
        clips.append(
            Clip(
                clip_id=clip_id,
                category_id=category_id,
                instance_id=instance_id,
                circular=circular,
                frames=frames,
            )
        )
    manifest = DatasetManifest(
        clips=clips,
        dataset_style=doc.get("dataset_style", "yaw"),
        category_names={int(k): str(v) for k, v in doc.get("categories", {}).items()},
    )
    manifest.validate()
    return manifest


def manifests_equal(a: DatasetManifest, b: DatasetManifest) -> bool:
    """Field-for-field structural equality, including pixel data."""
    if a.dataset_style != b.dataset_style or a.category_names != b.category_names:
        return False
    if len(a.clips) != len(b.clips):
        return False
    for ca, cb in zip(a.clips, b.clips):
        if (ca.clip_id, ca.category_id, ca.instance_id, ca.circular) != (
            cb.clip_id,
            cb.category_id,
            cb.instance_id,
            cb.circular,
        ):
            return False
        if len(ca.frames) != len(cb.frames):
            return False
        for fa, fb in zip(ca.frames, cb.frames):
            if (fa.frame_index, fa.orientation_flag) != (fb.frame_index, fb.orientation_flag):
                return False
            if fa.yaw_deg != fb.yaw_deg:
                return False
            if (fa.extrinsics is None) != (fb.extrinsics is None):
                return False
            if fa.extrinsics is not None:
                if not np.array_equal(fa.extrinsics.quaternion, fb.extrinsics.quaternion):
                    return False
                if not np.array_equal(fa.extrinsics.translation, fb.extrinsics.translation):
                    return False
            if not np.array_equal(fa.pixels, fb.pixels):
                return False
    return True


def manifest_content_hash(manifest: DatasetManifest) -> str:
    """Stable content hash over structure and pixel data (for run manifests)."""
    import hashlib

    h = hashlib.sha256()
    h.update(manifest.dataset_style.encode())
    for cid, name in sorted(manifest.category_names.items()):
        h.update(f"{cid}:{name};".encode())
    for clip in manifest.clips:
        h.update(
            f"clip {clip.clip_id} {clip.category_id} {clip.instance_id} {int(clip.circular)}".encode()
        )
        for frame in clip.frames:
            h.update(f"f{frame.frame_index} y{frame.yaw_deg!r} o{frame.orientation_flag}".encode())
            if frame.extrinsics is not None:
                h.update(frame.extrinsics.quaternion.tobytes())
                h.update(frame.extrinsics.translation.tobytes())
            h.update(np.round(frame.pixels * 255.0).astype(np.uint8).tobytes())
    return h.hexdigest()
