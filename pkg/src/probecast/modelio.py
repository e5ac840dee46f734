"""Unified predictor handle plus versioned model-file serialization.

Model files are JSON holding kind, hyperparameters, the standardizer and
the coefficients/weights. Floats are written with Python's shortest
round-tripping representation, so save -> load preserves predictions
exactly. Wall-clock metadata is kept out of the file so that seeded
training runs produce byte-identical files.
"""

import json
import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import IoFailure, NonFiniteOutput, ParseFailure, VersionMismatch
from .features import Standardizer
from .linear import LinearHyperparameters, LinearModel
from .mlp import MlpModel, NNConfig
from .svr import SvrModel

FORMAT_NAME = "probecast-model"
FORMAT_VERSION = 1

LINEAR_KINDS = ("elasticnet", "lasso", "ridge", "sgd")
MODEL_KINDS = LINEAR_KINDS + ("svr", "mlp")


@dataclass(frozen=True)
class PredictiveModel:
    kind: str
    model: Union[LinearModel, SvrModel, MlpModel]
    n_samples: int
    trained_at: Optional[float] = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")


def wrap_model(model, n_samples: int) -> PredictiveModel:
    if isinstance(model, LinearModel):
        kind = model.trainer
    elif isinstance(model, SvrModel):
        kind = "svr"
    elif isinstance(model, MlpModel):
        kind = "mlp"
    else:
        raise TypeError(f"not a trained model: {type(model)!r}")
    return PredictiveModel(kind=kind, model=model, n_samples=n_samples,
                           trained_at=time.time())


def predict(pm: PredictiveModel, v) -> float:
    """Predicted execution seconds for a contention vector (or 3-sequence)."""
    x = v.as_tuple() if hasattr(v, "as_tuple") else tuple(v)
    out = pm.model.predict_one(x)
    if not np.isfinite(out):
        raise NonFiniteOutput(f"{pm.kind} model produced {out!r}")
    return float(out)


def predict_batch(pm: PredictiveModel, X) -> np.ndarray:
    out = pm.model.predict_batch(np.asarray(X, dtype=np.float64))
    if not np.isfinite(out).all():
        raise NonFiniteOutput(f"{pm.kind} model produced non-finite predictions")
    return out


def _standardizer_payload(s: Standardizer) -> dict:
    return {"means": list(s.means), "stds": list(s.stds),
            "degenerate_dims": list(s.degenerate_dims)}


def _standardizer_from(payload: dict) -> Standardizer:
    return Standardizer(
        means=tuple(payload["means"]), stds=tuple(payload["stds"]),
        degenerate_dims=tuple(payload.get("degenerate_dims", ())))


def model_payload(pm: PredictiveModel) -> dict:
    """The serializable dict form (also embedded in balancer scenarios)."""
    m = pm.model
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": pm.kind,
        "n_samples": pm.n_samples,
        "standardizer": _standardizer_payload(m.standardizer),
    }
    if isinstance(m, LinearModel):
        hp = m.hyperparameters
        doc["linear"] = {
            "trainer": m.trainer,
            "weights": list(m.weights),
            "intercept": m.intercept,
            "hyperparameters": {
                "alpha": hp.alpha, "l1_ratio": hp.l1_ratio,
                "tolerance": hp.tolerance, "max_iterations": hp.max_iterations,
                "eta": hp.eta, "epsilon": hp.epsilon,
            },
            "converged": m.converged,
        }
    elif isinstance(m, SvrModel):
        doc["svr"] = {
            "support_inputs": m.support_inputs.tolist(),
            "dual_coefficients": m.dual_coefficients.tolist(),
            "bias": m.bias, "gamma": m.gamma, "C": m.C, "epsilon": m.epsilon,
            "converged": m.converged, "passes": m.passes,
        }
    else:
        doc["mlp"] = {
            "config": {"hidden_layers": m.config.hidden_layers,
                       "neurons_per_layer": list(m.config.neurons_per_layer)},
            "weights": [w.tolist() for w in m.weights],
            "biases": [b.tolist() for b in m.biases],
            "y_mean": m.y_mean, "y_std": m.y_std, "seed": m.seed,
        }
    return doc


def model_from_payload(doc: dict) -> PredictiveModel:
    try:
        version = doc["version"]
    except (KeyError, TypeError) as exc:
        raise ParseFailure(f"not a {FORMAT_NAME} document: {exc}") from exc
    if doc.get("format") != FORMAT_NAME or version != FORMAT_VERSION:
        raise VersionMismatch(
            f"expected {FORMAT_NAME} v{FORMAT_VERSION}, "
            f"got {doc.get('format')!r} v{version!r}")
    try:
        kind = doc["kind"]
        standardizer = _standardizer_from(doc["standardizer"])
        if kind in LINEAR_KINDS:
            p = doc["linear"]
            model = LinearModel(
                trainer=p["trainer"], weights=tuple(p["weights"]),
                intercept=p["intercept"], standardizer=standardizer,
                hyperparameters=LinearHyperparameters(**p["hyperparameters"]),
                converged=p["converged"])
        elif kind == "svr":
            p = doc["svr"]
            model = SvrModel(
                support_inputs=np.array(p["support_inputs"], dtype=np.float64).reshape(-1, 3),
                dual_coefficients=np.array(p["dual_coefficients"], dtype=np.float64),
                bias=p["bias"], gamma=p["gamma"], C=p["C"], epsilon=p["epsilon"],
                standardizer=standardizer, converged=p["converged"],
                passes=p.get("passes", 0))
        elif kind == "mlp":
            p = doc["mlp"]
            config = NNConfig(hidden_layers=p["config"]["hidden_layers"],
                              neurons_per_layer=tuple(p["config"]["neurons_per_layer"]))
            model = MlpModel(
                config=config,
                weights=tuple(np.array(w, dtype=np.float64) for w in p["weights"]),
                biases=tuple(np.array(b, dtype=np.float64) for b in p["biases"]),
                standardizer=standardizer, y_mean=p["y_mean"], y_std=p["y_std"],
                seed=p.get("seed", 0))
        else:
            raise ParseFailure(f"unknown model kind {kind!r}")
        return PredictiveModel(kind=kind, model=model,
                               n_samples=int(doc["n_samples"]), trained_at=None)
    except (KeyError, TypeError, ValueError, AssertionError) as exc:
        raise ParseFailure(f"malformed model document: {exc}") from exc


def save_model(pm: PredictiveModel, path) -> None:
    doc = model_payload(pm)
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_model(path) -> PredictiveModel:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseFailure(f"invalid JSON in {path}: {exc}") from exc
    return model_from_payload(doc)
