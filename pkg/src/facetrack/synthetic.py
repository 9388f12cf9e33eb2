"""Synthetic textured faces and ground-truth sequences.

Builds a canonical textured model whose triangle texture comes from a
procedurally generated atlas instead of a video frame, so demos and
closed-loop experiments can render ground-truth frames at arbitrary known
states and feed them back through the full pipeline (annotate, initialize,
learn, track) with exact pose ground truth.
"""

from dataclasses import dataclass, replace

import numpy as np

from .model import CameraIntrinsics, PoseAnimParams, load_bundled_model
from .render import TexturedModel, render_state


def make_texture(seed=0, height=288, width=256, octaves=(16, 48, 120)):
    """Integer-valued grayscale atlas with structure at several scales."""
    from PIL import Image
    rng = np.random.default_rng(seed)
    acc = np.zeros((height, width))
    amp = 1.0
    for cells in octaves:
        low = rng.uniform(0, 1, (max(2, height * cells // 288),
                                 max(2, width * cells // 256)))
        img = Image.fromarray((low * 255).astype(np.uint8))
        up = np.asarray(img.resize((width, height), Image.BILINEAR), float)
        acc += amp * up
        amp *= 0.55
    acc -= acc.min()
    acc *= 215.0 / max(acc.max(), 1e-9)
    return np.round(acc + 20).astype(np.uint8)


def canonical_textured_model(model, texture, base_state):
    """Textured model whose source is an atlas mapped orthographically.

    Every triangle gets texture from the frontal-plane footprint of the
    mean shape, so the model can be rendered at any state without first
    extracting texture from a frame.
    """
    tex = np.asarray(texture, dtype=float)
    h, w = tex.shape
    xy = model.mean_shape[:, :2]
    lo = xy.min(axis=0) - 0.05
    hi = xy.max(axis=0) + 0.05
    u = (xy[:, 0] - lo[0]) / (hi[0] - lo[0]) * (w - 1)
    v = (xy[:, 1] - lo[1]) / (hi[1] - lo[1]) * (h - 1)
    uv = np.column_stack([u, v])
    src_uv = uv[model.triangles].copy()
    src_uv.setflags(write=False)
    textured = np.ones(len(model.triangles), dtype=bool)
    textured.setflags(write=False)
    return TexturedModel(model=model, shape_coeffs=np.zeros(model.n_shape_units),
                         base_state=base_state, source=tex,
                         src_uv=src_uv, textured=textured)


@dataclass
class SyntheticScene:
    """Ground-truth world for closed-loop experiments."""

    model: object
    cam: CameraIntrinsics
    truth: TexturedModel       # canonical atlas-textured model
    base_state: PoseAnimParams

    def render(self, params):
        return render_state(self.truth, params, self.cam)

    def frame(self, params):
        return self.render(params).image


def make_scene(seed=0, width=320, height=240, focal_px=400.0, tz=4.2):
    base = PoseAnimParams(rx=0.0, ry=0.0, rz=0.0, tx=0.0, ty=0.0, tz=tz)
    cam = CameraIntrinsics(focal_px=focal_px, cx=(width - 1) / 2.0,
                           cy=(height - 1) / 2.0, width=width, height=height)
    model = load_bundled_model()
    texture = make_texture(seed=seed)
    truth = canonical_textured_model(model, texture, base)
    return SyntheticScene(model=model, cam=cam, truth=truth, base_state=base)


def sinusoid_states(base_state, n_frames, pan_deg=20.0, tilt_deg=15.0,
                    roll_deg=10.0, anim_amp=0.5, anim_slot=0,
                    tx_drift=0.0, ty_drift=0.0):
    """Smooth ground-truth state sequence: sinusoidal rotations, one
    oscillating animation unit, linear translation drift."""
    states = []
    for t in range(n_frames):
        anim = base_state.anim.copy()
        anim[anim_slot] += anim_amp * np.sin(2 * np.pi * t / 40.0)
        states.append(replace(
            base_state,
            rx=base_state.rx + np.radians(tilt_deg) * np.sin(2 * np.pi * t / 45.0 + 1.0),
            ry=base_state.ry + np.radians(pan_deg) * np.sin(2 * np.pi * t / 60.0),
            rz=base_state.rz + np.radians(roll_deg) * np.sin(2 * np.pi * t / 70.0 + 2.0),
            tx=base_state.tx + tx_drift * t / max(1, n_frames - 1),
            ty=base_state.ty + ty_drift * t / max(1, n_frames - 1),
            anim=anim))
    return states
