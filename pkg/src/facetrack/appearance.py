"""Per-landmark descriptor Gaussians with online eigen-decomposition updates.

Each landmark owns a 128-dim Gaussian (mu, Sigma) learned from the
synthetic view database.  Sigma is stored through its eigendecomposition
U diag(S) U^T, which the online update exploits: a new observation only
rescales the eigenvalues,

    S_new = (1 - alpha) * S + alpha * ||y - mu||^2
    mu_new = (1 - alpha) * mu + alpha * y

with the residual taken against the pre-update mean.  Because the update
touches eigenvalues only, the eigenvectors learned in training are
reused for every Mahalanobis evaluation and no decomposition ever runs
again after training; the matrix stays symmetric positive definite for
any number of updates with alpha in (0, 1).
"""

from dataclasses import dataclass

import numpy as np

from .errors import TrainingError, ValidationError
from .descriptor import DESCRIPTOR_SIZE, default_patch_scale, observe
from .model import N_LANDMARKS

DEFAULT_ALPHA = 0.1
DEFAULT_RIDGE = 1e-4


@dataclass
class LandmarkGaussian:
    """Gaussian in descriptor space, stored as mean + eigendecomposition."""

    mu: np.ndarray        # (d,)
    eigvecs: np.ndarray   # (d, d) orthonormal columns
    eigvals: np.ndarray   # (d,) positive

    def covariance(self):
        return (self.eigvecs * self.eigvals) @ self.eigvecs.T

    def copy(self):
        return LandmarkGaussian(self.mu.copy(), self.eigvecs.copy(),
                                self.eigvals.copy())


@dataclass
class AppearanceModel:
    gaussians: list            # one LandmarkGaussian per landmark
    alpha: float = DEFAULT_ALPHA
    ridge: float = DEFAULT_RIDGE

    def copy(self):
        return AppearanceModel([g.copy() for g in self.gaussians],
                               alpha=self.alpha, ridge=self.ridge)


def _check_alpha(alpha):
    if not (0.0 < alpha < 1.0):
        raise ValidationError("forgetting factor must lie strictly in (0, 1)")


def train(samples, alpha=DEFAULT_ALPHA, ridge=DEFAULT_RIDGE):
    """Fit one Gaussian per landmark from descriptor sample lists.

    mu is the sample mean, Sigma the (n-1)-denominator sample covariance
    plus ridge * I; the eigendecomposition is computed once here and
    cached for the lifetime of the model.
    """
    _check_alpha(alpha)
    if ridge < 0:
        raise ValidationError("ridge must be non-negative")
    gaussians = []
    for i, descs in enumerate(samples):
        arr = np.asarray(descs, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 2:
            raise TrainingError("landmark %d has %d descriptor samples, "
                                "need at least 2"
                                % (i, 0 if arr.ndim != 2 else arr.shape[0]))
        mu = arr.mean(axis=0)
        centered = arr - mu
        cov = centered.T @ centered / (arr.shape[0] - 1)
        cov[np.diag_indices_from(cov)] += ridge
        eigvals, eigvecs = np.linalg.eigh(cov)
        gaussians.append(LandmarkGaussian(mu=mu, eigvecs=eigvecs,
                                          eigvals=eigvals))
    return AppearanceModel(gaussians=gaussians, alpha=alpha, ridge=ridge)


def descriptors_from_views(views, patch_factor=None):
    """Per-landmark descriptor sample lists from rendered database views.

    Only landmarks visible in a view contribute a sample from it; the
    patch scale follows each view's projected inter-ocular distance.
    """
    kwargs = {} if patch_factor is None else {"factor": patch_factor}
    samples = [[] for _ in range(N_LANDMARKS)]
    for view in views:
        scale = default_patch_scale(view.landmarks2d, **kwargs)
        obs = observe(view.image, view.landmarks2d, view.visibility, scale)
        for i in range(N_LANDMARKS):
            if obs.visibility[i]:
                samples[i].append(obs.descriptors[i])
    return samples


def mahalanobis(gaussian, y):
    """(y - mu)^T Sigma^-1 (y - mu) through the cached eigendecomposition."""
    r = np.asarray(y, dtype=float) - gaussian.mu
    w = gaussian.eigvecs.T @ r
    return float(np.sum(w * w / gaussian.eigvals))


def update_mean(gaussian, y, alpha):
    """Blend the observation into the mean; returns the new mean."""
    _check_alpha(alpha)
    return (1.0 - alpha) * gaussian.mu + alpha * np.asarray(y, dtype=float)


def update_covariance(gaussian, y, alpha):
    """Rescale every eigenvalue toward the squared residual norm.

    The residual is measured against the current (pre-update) mean.
    Returns (new eigenvalues, new covariance matrix); the eigenvectors
    are unchanged by construction.
    """
    _check_alpha(alpha)
    r = np.asarray(y, dtype=float) - gaussian.mu
    shift = float(r @ r)
    eigvals = (1.0 - alpha) * gaussian.eigvals + alpha * shift
    cov = (gaussian.eigvecs * eigvals) @ gaussian.eigvecs.T
    return eigvals, cov


def update(model, obs):
    """Adapt every visible landmark's Gaussian to one frame's observation.

    Applies the covariance update (with the pre-update mean) and then the
    mean update; invisible landmarks are left untouched.  Mutates and
    returns the model.
    """
    alpha = model.alpha
    _check_alpha(alpha)
    for i, g in enumerate(model.gaussians):
        if not obs.visibility[i]:
            continue
        y = obs.descriptors[i]
        r = y - g.mu
        g.eigvals = (1.0 - alpha) * g.eigvals + alpha * float(r @ r)
        g.mu = (1.0 - alpha) * g.mu + alpha * y
    return model


def save_appearance(model, path):
    """Serialize to an .npz archive; the round trip is bit-exact."""
    np.savez(path,
             mu=np.stack([g.mu for g in model.gaussians]),
             eigvecs=np.stack([g.eigvecs for g in model.gaussians]),
             eigvals=np.stack([g.eigvals for g in model.gaussians]),
             alpha=np.float64(model.alpha),
             ridge=np.float64(model.ridge))


def load_appearance(path):
    with np.load(path) as data:
        gaussians = [LandmarkGaussian(mu=data["mu"][i],
                                      eigvecs=data["eigvecs"][i],
                                      eigvals=data["eigvals"][i])
                     for i in range(data["mu"].shape[0])]
        return AppearanceModel(gaussians=gaussians,
                               alpha=float(data["alpha"]),
                               ridge=float(data["ridge"]))
