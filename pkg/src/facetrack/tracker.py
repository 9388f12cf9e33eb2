"""Per-frame MAP tracking with a downhill simplex over the 12-dim state.

Each frame minimizes an energy combining how well descriptors extracted
at the projected landmarks match the per-landmark Gaussians (Mahalanobis
distances, renormalized over visible landmarks) with a diagonal Gaussian
motion prior around the previous estimate.  The minimizer is a seeded
Nelder-Mead simplex with 13 vertices: the previous state plus 12 random
perturbations.  After each frame the appearance model adapts to the new
observation.

The per-axis prior differences are plain subtractions (no angle wrap);
rotations stay far from +-pi for any trackable sequence.
"""

import csv
import io
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .appearance import descriptors_from_views, mahalanobis, train, update
from .descriptor import default_patch_scale, inter_ocular_distance, observe, to_gray
from .errors import TrackingLostError, ValidationError
from .model import (N_LANDMARKS, PoseAnimParams, predicted_landmark_visibility,
                    shape_instance)
from .render import extract_texture, generate_database, pose_grid

STATE_DIM = 12
MIN_VISIBLE = 6     # below this the data term is meaningless
INFEASIBLE = float("inf")

CSV_COLUMNS = (["frame_id", "rx_deg", "ry_deg", "rz_deg", "tx", "ty", "tz"]
               + ["anim%d" % (i + 1) for i in range(6)]
               + ["energy", "n_visible"]
               + [c for i in range(N_LANDMARKS) for c in ("u%d" % i, "v%d" % i)])


@dataclass
class EvolutionPrior:
    """Diagonal state-transition variances, ordered like the state vector."""

    psi_diag: np.ndarray    # (12,) positive

    def validate(self):
        psi = np.asarray(self.psi_diag, dtype=float)
        if psi.shape != (STATE_DIM,) or not (psi > 0).all():
            raise ValidationError("psi_diag must be 12 positive variances")
        return self


def default_prior(b0, cam, rot_deg=(3.0, 3.0, 2.0), xy_px=5.0, tz_frac=0.02,
                  anim_sd=0.1):
    """Variance defaults tied to the camera/depth scale.

    Rotations get (3, 3, 2) degrees (tilt, pan, roll); tx/ty get the model
    units equivalent of `xy_px` pixels at the starting depth; tz a
    fraction of itself; animation a plain standard deviation.
    """
    rot = np.radians(np.asarray(rot_deg, dtype=float)) ** 2
    xy = (xy_px * b0.tz / cam.focal_px) ** 2
    tz = (tz_frac * b0.tz) ** 2
    psi = np.concatenate([rot, [xy, xy, tz], np.full(6, anim_sd ** 2)])
    return EvolutionPrior(psi_diag=psi).validate()


@dataclass
class SimplexConfig:
    """Downhill simplex settings for the 12-dim search."""

    init_spread: np.ndarray = None   # (12,) per-axis perturbation scale
    max_iters: int = 250
    f_tol: float = 1e-4
    x_tol: float = 1e-8
    rng_seed: int = 0
    n_vertices: int = STATE_DIM + 1

    def validate(self):
        if self.n_vertices != STATE_DIM + 1:
            raise ValidationError("simplex over a %d-dim state needs %d vertices"
                                  % (STATE_DIM, STATE_DIM + 1))
        if self.init_spread is not None:
            spread = np.asarray(self.init_spread, dtype=float)
            if spread.shape != (STATE_DIM,) or not (spread > 0).all():
                raise ValidationError("init_spread must be 12 positive scales")
        return self


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    status: str          # "f_tol" | "x_tol" | "max_iters" | "infeasible"
    iterations: int
    n_evals: int


def nelder_mead(f, x0, cfg, rng=None):
    """Minimize f over R^12 from x0 with a randomized initial simplex.

    The simplex starts at x0 plus 12 points x0 + delta with delta drawn
    per-axis uniformly in +-init_spread from the seeded generator; moves
    use reflection 1, expansion 2, contraction 0.5, shrink 0.5.  Stops
    when the value spread falls below f_tol, the simplex diameter falls
    below x_tol, or after max_iters iterations; the returned point is
    never worse than the best initial vertex.
    """
    cfg.validate()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (STATE_DIM,):
        raise ValidationError("x0 must be a 12-vector")
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    spread = (np.ones(STATE_DIM) if cfg.init_spread is None
              else np.asarray(cfg.init_spread, dtype=float))

    X = np.empty((STATE_DIM + 1, STATE_DIM))
    X[0] = x0
    X[1:] = x0 + rng.uniform(-1.0, 1.0, (STATE_DIM, STATE_DIM)) * spread
    F = np.array([f(x) for x in X])
    n_evals = STATE_DIM + 1
    iterations = 0
    status = "max_iters"

    if not np.isfinite(F.min()):
        order = np.argsort(F)
        return SimplexResult(x=X[order[0]].copy(), fun=float(F[order[0]]),
                             status="infeasible", iterations=0,
                             n_evals=n_evals)

    while True:
        order = np.argsort(F)
        X, F = X[order], F[order]
        if iterations >= cfg.max_iters:
            status = "max_iters"
            break
        if np.isfinite(F[-1]) and F[-1] - F[0] < cfg.f_tol:
            status = "f_tol"
            break
        if np.abs(X[1:] - X[0]).max() < cfg.x_tol:
            status = "x_tol"
            break
        iterations += 1

        centroid = X[:-1].mean(axis=0)
        xr = centroid + (centroid - X[-1])
        fr = f(xr)
        n_evals += 1
        if fr < F[0]:
            xe = centroid + 2.0 * (centroid - X[-1])
            fe = f(xe)
            n_evals += 1
            if fe < fr:
                X[-1], F[-1] = xe, fe
            else:
                X[-1], F[-1] = xr, fr
        elif fr < F[-2]:
            X[-1], F[-1] = xr, fr
        else:
            if fr < F[-1]:
                xc = centroid + 0.5 * (xr - centroid)
                fc = f(xc)
                n_evals += 1
                if fc <= fr:
                    X[-1], F[-1] = xc, fc
                else:
                    X[1:] = X[0] + 0.5 * (X[1:] - X[0])
                    F[1:] = [f(x) for x in X[1:]]
                    n_evals += STATE_DIM
            else:
                xc = centroid + 0.5 * (X[-1] - centroid)
                fc = f(xc)
                n_evals += 1
                if fc < F[-1]:
                    X[-1], F[-1] = xc, fc
                else:
                    X[1:] = X[0] + 0.5 * (X[1:] - X[0])
                    F[1:] = [f(x) for x in X[1:]]
                    n_evals += STATE_DIM

    best = int(np.argmin(F))
    return SimplexResult(x=X[best].copy(), fun=float(F[best]), status=status,
                         iterations=iterations, n_evals=n_evals)


def energy(params, frame, model, shape_coeffs, appearance, prior_params,
           psi_diag, cam, patch_scale=None):
    """Tracking energy of a candidate state on one frame.

    Sum of Mahalanobis distances of the descriptors extracted at the
    projected landmarks, renormalized by n / n_visible so the data term
    stays comparable across visibility changes, plus the quadratic motion
    prior.  Returns +inf when fewer than 6 landmarks are usable.
    """
    x = params.to_vector()
    if not np.all(np.isfinite(x)) or params.tz <= 0:
        return INFEASIBLE
    pts3 = shape_instance(model, shape_coeffs, params)
    lm_uv, vis = predicted_landmark_visibility(model, pts3, cam)
    if vis.sum() < MIN_VISIBLE:
        return INFEASIBLE
    if patch_scale is None:
        patch_scale = default_patch_scale(lm_uv)
    if not np.isfinite(patch_scale) or patch_scale <= 0:
        return INFEASIBLE
    obs = observe(frame, lm_uv, vis, patch_scale)
    n_vis = obs.n_visible()
    if n_vis < MIN_VISIBLE:
        return INFEASIBLE
    data = sum(mahalanobis(appearance.gaussians[i], obs.descriptors[i])
               for i in range(N_LANDMARKS) if obs.visibility[i])
    data *= N_LANDMARKS / n_vis
    diff = x - prior_params.to_vector()
    prior = float(np.sum(diff * diff / np.asarray(psi_diag, dtype=float)))
    return float(data) + prior


@dataclass
class TrackerState:
    b_hat: PoseAnimParams
    appearance: object
    frame_index: int = 0
    last_energy: float = float("nan")


@dataclass
class FrameResult:
    frame_id: int
    params: PoseAnimParams
    landmarks2d: np.ndarray
    visibility: np.ndarray
    energy: float
    n_visible: int

    def pose_deg(self):
        """(pan, tilt, roll) degrees."""
        return (np.degrees(self.params.ry), np.degrees(self.params.rx),
                np.degrees(self.params.rz))


@dataclass
class Trajectory:
    results: list = field(default_factory=list)
    final_state: TrackerState = None   # set by track_sequence; not serialized

    def __len__(self):
        return len(self.results)

    def pan_tilt_roll_deg(self):
        return np.array([r.pose_deg() for r in self.results])

    def landmark_tracks(self):
        return np.stack([r.landmarks2d for r in self.results])

    def to_csv(self, path_or_file):
        if hasattr(path_or_file, "write"):
            self._write(path_or_file)
        else:
            with open(path_or_file, "w", newline="") as f:
                self._write(f)

    def _write(self, f):
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for r in self.results:
            p = r.params
            row = [r.frame_id,
                   "%.17g" % np.degrees(p.rx), "%.17g" % np.degrees(p.ry),
                   "%.17g" % np.degrees(p.rz),
                   "%.17g" % p.tx, "%.17g" % p.ty, "%.17g" % p.tz]
            row += ["%.17g" % a for a in p.anim]
            row += ["%.17g" % r.energy, int(r.n_visible)]
            for (u, v) in r.landmarks2d:
                row += ["%.17g" % u, "%.17g" % v]
            writer.writerow(row)

    @classmethod
    def from_csv(cls, path_or_file):
        if hasattr(path_or_file, "read"):
            return cls._read(path_or_file)
        with open(path_or_file, newline="") as f:
            return cls._read(f)

    @classmethod
    def _read(cls, f):
        reader = csv.reader(f)
        header = next(reader, None)
        if header != CSV_COLUMNS:
            raise ValidationError("unrecognized trajectory CSV header")
        results = []
        for row in reader:
            if len(row) != len(CSV_COLUMNS):
                raise ValidationError("trajectory row has %d fields, expected %d"
                                      % (len(row), len(CSV_COLUMNS)))
            vals = [float(x) for x in row[1:]]
            params = PoseAnimParams(rx=np.radians(vals[0]),
                                    ry=np.radians(vals[1]),
                                    rz=np.radians(vals[2]),
                                    tx=vals[3], ty=vals[4], tz=vals[5],
                                    anim=np.array(vals[6:12]))
            lm = np.array(vals[14:]).reshape(N_LANDMARKS, 2)
            results.append(FrameResult(frame_id=int(row[0]), params=params,
                                       landmarks2d=lm,
                                       visibility=np.isfinite(lm).all(axis=1),
                                       energy=vals[12],
                                       n_visible=int(vals[13])))
        return cls(results=results)


@dataclass
class TrackerConfig:
    """Everything the sequence pipeline needs beyond model/camera/init."""

    grid_lo: float = -30.0
    grid_hi: float = 30.0
    grid_step: float = 10.0
    alpha: float = 0.1
    ridge: float = 1e-4
    patch_factor: float = 0.4
    prior_rot_deg: tuple = (3.0, 3.0, 2.0)
    prior_xy_px: float = 5.0
    prior_tz_frac: float = 0.02
    prior_anim_sd: float = 0.1
    psi_diag: np.ndarray = None      # explicit override of the prior variances
    simplex: SimplexConfig = field(default_factory=SimplexConfig)

    def prior_for(self, b0, cam):
        if self.psi_diag is not None:
            return EvolutionPrior(np.asarray(self.psi_diag, float)).validate()
        return default_prior(b0, cam, rot_deg=self.prior_rot_deg,
                             xy_px=self.prior_xy_px,
                             tz_frac=self.prior_tz_frac,
                             anim_sd=self.prior_anim_sd)

    def simplex_for(self, prior):
        cfg = self.simplex
        if cfg.init_spread is None:
            cfg = replace(cfg, init_spread=np.sqrt(prior.psi_diag))
        return cfg.validate()


def track_frame(state, frame, model, shape_coeffs, cam, prior, cfg):
    """One MAP step: optimize the state on this frame, then adapt.

    Minimizes the energy from the previous estimate (which is both the
    simplex seed and the prior center), extracts the observation at the
    optimum, updates the appearance model, and returns the advanced
    tracker state plus this frame's result.
    """
    prior.validate()
    frame_index = state.frame_index + 1
    gray = to_gray(frame)
    prev = state.b_hat

    prior_pts = shape_instance(model, shape_coeffs, prev)
    prior_uv, _ = predicted_landmark_visibility(model, prior_pts, cam)
    patch_scale = default_patch_scale(prior_uv, factor=cfg.patch_factor) \
        if np.isfinite(prior_uv).all() else float("nan")
    if not np.isfinite(patch_scale) or patch_scale <= 0:
        raise TrackingLostError("previous state projects no usable face",
                                state=state, frame_index=frame_index)

    appearance = state.appearance

    def objective(x):
        return energy(PoseAnimParams.from_vector(x, scale=prev.scale), gray,
                      model, shape_coeffs, appearance, prev, prior.psi_diag,
                      cam, patch_scale=patch_scale)

    simplex_cfg = cfg.simplex_for(prior) if isinstance(cfg, TrackerConfig) \
        else cfg
    rng = np.random.default_rng((simplex_cfg.rng_seed, frame_index))
    res = nelder_mead(objective, prev.to_vector(), simplex_cfg, rng=rng)
    if not np.isfinite(res.fun):
        raise TrackingLostError("every candidate state was infeasible",
                                state=state, frame_index=frame_index)

    b_hat = PoseAnimParams.from_vector(res.x, scale=prev.scale).normalized()
    pts3 = shape_instance(model, shape_coeffs, b_hat)
    lm_uv, vis = predicted_landmark_visibility(model, pts3, cam)
    obs = observe(gray, lm_uv, vis, patch_scale, frame_id=frame_index)
    update(appearance, obs)

    new_state = TrackerState(b_hat=b_hat, appearance=appearance,
                             frame_index=frame_index, last_energy=res.fun)
    result = FrameResult(frame_id=frame_index, params=b_hat, landmarks2d=lm_uv,
                         visibility=obs.visibility, energy=res.fun,
                         n_visible=obs.n_visible())
    return new_state, result


def build_appearance(frame0, model, init, cam, cfg):
    """First-frame pipeline: texture, view database, descriptor Gaussians."""
    tm = extract_texture(frame0, model, init, cam)
    grid = pose_grid(cfg.grid_lo, cfg.grid_hi, cfg.grid_step)
    views = generate_database(tm, grid, init.b0, cam)
    samples = descriptors_from_views(views, cfg.patch_factor)
    return train(samples, alpha=cfg.alpha, ridge=cfg.ridge), tm, views


def track_sequence(frames, model, init, cam, cfg=None):
    """Track a whole sequence starting from a first-frame initialization.

    Builds the synthetic database and appearance model from frame 0, then
    folds track_frame over the remaining frames.  On tracking loss the
    raised error carries the partial trajectory.
    """
    cfg = cfg or TrackerConfig()
    if len(frames) == 0:
        raise ValidationError("empty frame sequence")
    init.b0.validate()

    pts0 = shape_instance(model, init.shape_coeffs, init.b0)
    uv0, vis0 = predicted_landmark_visibility(model, pts0, cam)
    trajectory = Trajectory([FrameResult(frame_id=0, params=init.b0,
                                         landmarks2d=uv0, visibility=vis0,
                                         energy=float("nan"),
                                         n_visible=int(vis0.sum()))])
    if len(frames) == 1:
        return trajectory

    appearance, _, _ = build_appearance(frames[0], model, init, cam, cfg)
    prior = cfg.prior_for(init.b0, cam)
    state = TrackerState(b_hat=init.b0, appearance=appearance, frame_index=0)
    for t in range(1, len(frames)):
        try:
            state, result = track_frame(state, frames[t], model,
                                        init.shape_coeffs, cam, prior, cfg)
        except TrackingLostError as err:
            err.trajectory = trajectory
            err.trajectory.final_state = state
            raise
        trajectory.results.append(result)
    trajectory.final_state = state
    return trajectory
