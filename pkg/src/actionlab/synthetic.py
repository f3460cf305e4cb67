"""Procedural rotating-object dataset: shape families, renderer, object split.

Each category is a parametric solid-of-revolution family; instances jitter
the family parameters but keep the coarse 3D structure, so the same yaw
rotation produces similar appearance changes within a category.  Most
families carry an azimuth-locked feature (a handle or spout lobe) that makes
the viewpoint recoverable from the image; the "ball" family is rotationally
symmetric on purpose.

Rendering is orthographic point splatting with a z-buffer, one directional
light, uniform background.  Pixels are quantized to the 8-bit grid so the
PNG manifest round trip is lossless.
"""

from __future__ import annotations

import colorsys
import dataclasses

import numpy as np

from .actions import canonicalize_quaternion, quat_from_matrix
from .errors import ConfigError, SplitError
from .manifest import CameraPose, Clip, ClipFrame, DatasetManifest

BACKGROUND = 0.86
LIGHT_DIR = np.array([0.5, 0.3, 0.85])
CAMERA_DISTANCE = 3.0
VIEW_EXTENT = 1.05  # world units covered by half the image


@dataclasses.dataclass(frozen=True)
class SynthConfig:
    num_categories: int = 8
    instances_per_category: int = 20
    views_per_object: int = 36
    image_size: int = 64
    color_nuisance: bool = True
    seed: int = 0
    elevation_deg: float = 20.0
    style: str = "yaw"  # "yaw" or "pose"; extrinsics are emitted either way

    def validate(self) -> None:
        if self.num_categories < 1 or self.instances_per_category < 1:
            raise ConfigError("num_categories and instances_per_category must be positive")
        if self.views_per_object < 2:
            raise ConfigError("views_per_object must be >= 2")
        if self.image_size < 16:
            raise ConfigError(f"image_size {self.image_size} too small to render (< 16 px)")
        if self.style not in ("yaw", "pose"):
            raise ConfigError(f"unknown dataset style {self.style!r}")


# ---------------------------------------------------------------------------
# shape families
#
# A family is a profile radius over u in [0, 1] (bottom to top) plus a list of
# azimuth-locked bumps (phi0, u0, amplitude, phi_width, u_width).  Instances
# jitter scale, proportions and bump strength.

_FAMILY_NAMES = (
    "mug",
    "teapot",
    "cone",
    "hourglass",
    "mushroom",
    "bottle",
    "bowl",
    "ball",
)


def _profile(family: int, u: np.ndarray, p: dict) -> np.ndarray:
    if family == 0:  # mug: straight cylinder
        return np.full_like(u, 0.5 * p["girth"])
    if family == 1:  # teapot: squat bulging body with a small lid
        body = 0.24 + 0.5 * p["girth"] * np.sin(np.pi * np.clip(u / 0.85, 0, 1)) ** p["bulge"]
        lid = np.where(u > 0.85, 0.22 * (1.0 - (u - 0.85) / 0.15), body)
        return np.where(u > 0.85, np.maximum(lid, 0.08), body)
    if family == 2:  # cone
        return (0.72 * (1.0 - u) ** p["taper"] + 0.06) * p["girth"]
    if family == 3:  # hourglass
        return (0.18 + 0.5 * np.abs(2.0 * u - 1.0) ** p["pinch"]) * p["girth"]
    if family == 4:  # mushroom: thin stem, wide cap
        stem = 0.16 * p["girth"]
        t = np.clip((u - 0.5) / 0.5, 0.0, 1.0)
        cap = 0.72 * p["girth"] * np.sqrt(np.clip(1.0 - (2.0 * t - 1.0) ** 2, 0.0, 1.0))
        return np.where(u < 0.5, stem, np.maximum(cap, 0.05))
    if family == 5:  # bottle: wide body, narrow neck
        body = 0.46 * p["girth"]
        neck = 0.15 * p["girth"]
        t = np.clip((u - 0.55) / 0.18, 0.0, 1.0)
        blend = body + (neck - body) * (3 * t**2 - 2 * t**3)
        return np.where(u < 0.55, body, blend)
    if family == 6:  # bowl: opens upward
        return (0.16 + 0.6 * u ** p["flare"]) * p["girth"]
    if family == 7:  # ball: rotationally symmetric
        return 0.74 * p["girth"] * np.sqrt(np.clip(1.0 - (2.0 * u - 1.0) ** 2, 0.0, 1.0))
    raise ConfigError(f"no shape family with index {family}")


def _family_bumps(family: int, p: dict) -> list[tuple[float, float, float, float, float]]:
    a = p["bump"]
    if family == 0:  # mug handle
        return [(0.0, 0.5, 0.85 * a, 0.45, 0.30)]
    if family == 1:  # teapot spout + handle
        return [(0.0, 0.55, 0.95 * a, 0.30, 0.18), (np.pi, 0.5, 0.6 * a, 0.45, 0.25)]
    if family == 2:  # cone side fin
        return [(0.0, 0.35, 0.8 * a, 0.35, 0.22)]
    if family == 3:  # hourglass knob near the top
        return [(0.0, 0.82, 0.7 * a, 0.4, 0.18)]
    if family == 4:  # mushroom cap blister
        return [(0.0, 0.8, 0.55 * a, 0.5, 0.2)]
    if family == 5:  # bottle handle
        return [(0.0, 0.4, 0.7 * a, 0.4, 0.2)]
    if family == 6:  # bowl lug
        return [(0.0, 0.85, 0.75 * a, 0.4, 0.18)]
    return []  # ball stays symmetric


_PALETTE = (
    (0.82, 0.30, 0.28),
    (0.28, 0.55, 0.80),
    (0.35, 0.70, 0.38),
    (0.85, 0.62, 0.25),
    (0.58, 0.40, 0.72),
    (0.80, 0.45, 0.62),
    (0.40, 0.68, 0.66),
    (0.62, 0.58, 0.32),
)


@dataclasses.dataclass
class _InstanceShape:
    points: np.ndarray  # (N, 3) surface points, object frame
    normals: np.ndarray  # (N, 3) outward unit normals
    color: np.ndarray  # (3,) base albedo


def _instance_rng(config: SynthConfig, category_id: int, instance_id: int) -> np.random.Generator:
    # Sub-seed scheme keeps generation worker-count independent.
    ss = np.random.SeedSequence(entropy=config.seed, spawn_key=(category_id, instance_id))
    return np.random.default_rng(ss)


def _build_instance(config: SynthConfig, category_id: int, instance_id: int) -> _InstanceShape:
    family = category_id % len(_FAMILY_NAMES)
    rng = _instance_rng(config, category_id, instance_id)

    p = {
        "girth": rng.uniform(0.85, 1.15),
        "bulge": rng.uniform(0.8, 1.3),
        "taper": rng.uniform(0.85, 1.25),
        "pinch": rng.uniform(0.9, 1.5),
        "flare": rng.uniform(0.6, 1.1),
        "bump": rng.uniform(0.75, 1.25),
    }
    height = 1.5 * rng.uniform(0.85, 1.12)
    scale = rng.uniform(0.88, 1.05)

    if config.color_nuisance:
        hue, sat, val = rng.uniform(0, 1), rng.uniform(0.45, 0.9), rng.uniform(0.5, 0.95)
        color = np.array(colorsys.hsv_to_rgb(hue, sat, val))
    else:
        color = np.array(_PALETTE[family])

    n_u = max(96, int(config.image_size * 1.5))
    n_phi = 2 * n_u
    u = np.linspace(0.0, 1.0, n_u)
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    uu, pp = np.meshgrid(u, phi, indexing="ij")

    base = _profile(family, u, p)[:, None] * np.ones_like(pp)
    radial = np.ones_like(pp)
    for phi0, u0, amp, s_phi, s_u in _family_bumps(family, p):
        dphi = np.angle(np.exp(1j * (pp - phi0)))
        radial += amp * np.exp(-(dphi**2) / (2 * s_phi**2) - ((uu - u0) ** 2) / (2 * s_u**2))
    r = np.maximum(base * radial, 1e-3)

    x = r * np.cos(pp)
    y = r * np.sin(pp)
    z = (uu - 0.5) * height
    pts = np.stack([x, y, z], axis=-1) * scale

    # Outward normals from the parametric tangents (wrap phi, clamp u edges).
    du = np.empty_like(pts)
    du[1:-1] = pts[2:] - pts[:-2]
    du[0] = pts[1] - pts[0]
    du[-1] = pts[-1] - pts[-2]
    dphi_t = np.roll(pts, -1, axis=1) - np.roll(pts, 1, axis=1)
    normals = np.cross(dphi_t, du)
    norm = np.linalg.norm(normals, axis=-1, keepdims=True)
    normals = normals / np.maximum(norm, 1e-9)

    return _InstanceShape(
        points=pts.reshape(-1, 3).astype(np.float64),
        normals=normals.reshape(-1, 3).astype(np.float64),
        color=color,
    )


# ---------------------------------------------------------------------------
# camera + renderer


def _camera_basis(elevation_deg: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    e = np.radians(elevation_deg)
    right = np.array([0.0, 1.0, 0.0])
    up = np.array([-np.sin(e), 0.0, np.cos(e)])
    forward = np.array([-np.cos(e), 0.0, -np.sin(e)])  # camera sits on +x, slightly above
    return right, up, forward


def _extrinsics_for_yaw(config: SynthConfig, yaw_deg: float) -> CameraPose:
    """World-to-camera pose of the equivalent orbiting camera for this view."""
    right, up, forward = _camera_basis(config.elevation_deg)
    R_base = np.stack([right, -up, forward])  # x right, y down, z forward
    th = np.radians(yaw_deg)
    Rz = np.array(
        [[np.cos(th), -np.sin(th), 0.0], [np.sin(th), np.cos(th), 0.0], [0.0, 0.0, 1.0]]
    )
    R = R_base @ Rz
    e = np.radians(config.elevation_deg)
    c_base = CAMERA_DISTANCE * np.array([np.cos(e), 0.0, np.sin(e)])
    center = Rz.T @ c_base
    t = -R @ center
    return CameraPose(quaternion=canonicalize_quaternion(quat_from_matrix(R)), translation=t)


def _render_view(shape: _InstanceShape, yaw_deg: float, config: SynthConfig) -> np.ndarray:
    size = config.image_size
    th = np.radians(yaw_deg)
    c, s = np.cos(th), np.sin(th)
    Rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    pts = shape.points @ Rz.T
    normals = shape.normals @ Rz.T

    right, up, forward = _camera_basis(config.elevation_deg)
    sx = pts @ right
    sy = pts @ up
    depth = -(pts @ forward)  # larger = closer to the camera

    px = ((sx + VIEW_EXTENT) / (2 * VIEW_EXTENT) * size).astype(np.int64)
    py = ((VIEW_EXTENT - sy) / (2 * VIEW_EXTENT) * size).astype(np.int64)
    ok = (px >= 0) & (px < size) & (py >= 0) & (py < size)
    px, py, depth = px[ok], py[ok], depth[ok]

    light = LIGHT_DIR / np.linalg.norm(LIGHT_DIR)
    lambert = np.clip(normals[ok] @ light, 0.0, 1.0)
    shade = 0.3 + 0.7 * lambert
    colors = shape.color[None, :] * shade[:, None]

    # Painter's order: sort far-to-near so the closest point wins each pixel.
    order = np.argsort(depth, kind="stable")
    flat = py * size + px
    img = np.full((size * size, 3), BACKGROUND, dtype=np.float64)
    img[flat[order]] = colors[order]
    img = img.reshape(size, size, 3)
    return (np.round(img * 255.0) / 255.0).astype(np.float32)


# ---------------------------------------------------------------------------
# public operations


def category_names(config: SynthConfig) -> dict[int, str]:
    names = {}
    for cid in range(config.num_categories):
        base = _FAMILY_NAMES[cid % len(_FAMILY_NAMES)]
        names[cid] = base if cid < len(_FAMILY_NAMES) else f"{base}_{cid // len(_FAMILY_NAMES)}"
    return names


def generate_synthetic(config: SynthConfig) -> DatasetManifest:
    """Render the full dataset: one circular clip per object instance."""
    config.validate()
    step = 360.0 / config.views_per_object
    clips = []
    for cid in range(config.num_categories):
        for k in range(config.instances_per_category):
            iid = cid * config.instances_per_category + k
            shape = _build_instance(config, cid, iid)
            frames = []
            for j in range(config.views_per_object):
                yaw = j * step
                frames.append(
                    ClipFrame(
                        category_id=cid,
                        instance_id=iid,
                        clip_id=iid,
                        frame_index=j,
                        yaw_deg=yaw,
                        pixels=_render_view(shape, yaw, config),
                        extrinsics=_extrinsics_for_yaw(config, yaw),
                        orientation_flag=0,
                    )
                )
            clips.append(
                Clip(clip_id=iid, category_id=cid, instance_id=iid, circular=True, frames=frames)
            )
    return DatasetManifest(
        clips=clips, dataset_style=config.style, category_names=category_names(config)
    )


def split_objects(
    manifest: DatasetManifest, train_fraction: float, seed: int
) -> tuple[DatasetManifest, DatasetManifest]:
    """Object-wise split, stratified by category; clips never straddle splits."""
    if not (0.0 < train_fraction < 1.0):
        raise SplitError(f"train_fraction {train_fraction} outside (0, 1)")
    by_category: dict[int, list[int]] = {}
    for clip in manifest.clips:
        by_category.setdefault(clip.category_id, [])
        if clip.instance_id not in by_category[clip.category_id]:
            by_category[clip.category_id].append(clip.instance_id)

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(101,)))
    train_ids: set[int] = set()
    for cid in sorted(by_category):
        instances = sorted(by_category[cid])
        if len(instances) < 2:
            raise SplitError(f"category {cid} has {len(instances)} instance(s); need >= 2")
        n_train = int(round(train_fraction * len(instances)))
        if n_train < 1 or n_train >= len(instances):
            raise SplitError(
                f"train_fraction {train_fraction} leaves category {cid} empty in one split"
            )
        perm = rng.permutation(len(instances))
        train_ids.update(instances[i] for i in perm[:n_train])

    def subset(keep_train: bool) -> DatasetManifest:
        clips = [
            c for c in manifest.clips if (c.instance_id in train_ids) == keep_train
        ]
        return DatasetManifest(
            clips=clips,
            dataset_style=manifest.dataset_style,
            category_names=dict(manifest.category_names),
        )

    return subset(True), subset(False)
