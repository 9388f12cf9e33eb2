"""Declarative run configuration shared by every CLI command.

One JSON file drives the whole pipeline; unknown keys are rejected so
typos fail loudly.  CLI flags override the corresponding entries.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .model import CameraIntrinsics
from .tracker import SimplexConfig, TrackerConfig

_SECTIONS = ("camera", "model", "init", "grid", "appearance", "descriptor",
             "prior", "simplex", "eval", "io")

DEFAULTS = {
    "camera": {"width": None, "height": None, "focal_px": None,
               "cx": None, "cy": None},
    "model": {"wireframe": None, "landmark_indices": None,
              "anim_selection": None},
    "init": {"refine_shape": False, "rmse_warn_px": 5.0},
    "grid": {"lo": -30.0, "hi": 30.0, "step": 10.0},
    "appearance": {"alpha": 0.1, "ridge": 1e-4},
    "descriptor": {"patch_factor": 0.4},
    "prior": {"rot_deg": [3.0, 3.0, 2.0], "xy_px": 5.0, "tz_frac": 0.02,
              "anim_sd": 0.1, "psi_diag": None},
    "simplex": {"max_iters": 250, "f_tol": 1e-4, "x_tol": 1e-8,
                "rng_seed": 0, "init_spread": None},
    "eval": {"lost_threshold": 400.0, "pts_subset_map": None},
    "io": {"frames": None, "annotations": None, "out": None,
           "init_result": None},
}


@dataclass
class RunConfig:
    sections: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = {}
        for name in _SECTIONS:
            merged[name] = dict(DEFAULTS[name])
            merged[name].update(self.sections.get(name, {}))
        self.sections = merged

    def __getitem__(self, section):
        return self.sections[section]

    @classmethod
    def from_file(cls, path):
        try:
            with open(path) as f:
                raw = json.load(f)
        except json.JSONDecodeError as err:
            raise ValidationError("config %s is not valid JSON: %s"
                                  % (path, err))
        return cls.from_dict(raw, origin=path)

    @classmethod
    def from_dict(cls, raw, origin="<config>"):
        if not isinstance(raw, dict):
            raise ValidationError("%s: config root must be an object" % origin)
        unknown = set(raw) - set(_SECTIONS)
        if unknown:
            raise ValidationError("%s: unknown config section(s): %s"
                                  % (origin, ", ".join(sorted(unknown))))
        for name, body in raw.items():
            if not isinstance(body, dict):
                raise ValidationError("%s: section %r must be an object"
                                      % (origin, name))
            bad = set(body) - set(DEFAULTS[name])
            if bad:
                raise ValidationError("%s: unknown key(s) in [%s]: %s"
                                      % (origin, name, ", ".join(sorted(bad))))
        return cls(sections=raw)

    def override(self, section, key, value):
        if value is not None:
            self.sections[section][key] = value

    def camera_for(self, frame_shape=None):
        cam = self["camera"]
        width, height = cam["width"], cam["height"]
        if width is None or height is None:
            if frame_shape is None:
                raise ValidationError("camera size missing from config and no "
                                      "frame available to infer it")
            height, width = frame_shape[:2]
        focal = cam["focal_px"] if cam["focal_px"] else float(width)
        cx = cam["cx"] if cam["cx"] is not None else (width - 1) / 2.0
        cy = cam["cy"] if cam["cy"] is not None else (height - 1) / 2.0
        return CameraIntrinsics(focal_px=float(focal), cx=float(cx),
                                cy=float(cy), width=int(width),
                                height=int(height)).validate()

    def load_wireframe(self):
        from .model import load_bundled_model, load_model
        cfg = self["model"]
        if cfg["wireframe"]:
            with open(cfg["wireframe"], "rb") as f:
                return load_model(f, cfg["landmark_indices"],
                                  cfg["anim_selection"])
        return load_bundled_model(cfg["landmark_indices"],
                                  cfg["anim_selection"])

    def tracker_config(self):
        simplex = self["simplex"]
        spread = simplex["init_spread"]
        return TrackerConfig(
            grid_lo=float(self["grid"]["lo"]),
            grid_hi=float(self["grid"]["hi"]),
            grid_step=float(self["grid"]["step"]),
            alpha=float(self["appearance"]["alpha"]),
            ridge=float(self["appearance"]["ridge"]),
            patch_factor=float(self["descriptor"]["patch_factor"]),
            prior_rot_deg=tuple(self["prior"]["rot_deg"]),
            prior_xy_px=float(self["prior"]["xy_px"]),
            prior_tz_frac=float(self["prior"]["tz_frac"]),
            prior_anim_sd=float(self["prior"]["anim_sd"]),
            psi_diag=None if self["prior"]["psi_diag"] is None
            else np.asarray(self["prior"]["psi_diag"], dtype=float),
            simplex=SimplexConfig(
                init_spread=None if spread is None
                else np.asarray(spread, dtype=float),
                max_iters=int(simplex["max_iters"]),
                f_tol=float(simplex["f_tol"]),
                x_tol=float(simplex["x_tol"]),
                rng_seed=int(simplex["rng_seed"])))
