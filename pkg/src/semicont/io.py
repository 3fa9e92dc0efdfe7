"""JSON exchange formats for matrices and spectra."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .gibbs import HamiltonianSpectrum


def matrix_to_json(m) -> dict:
    a = np.asarray(m, dtype=np.complex128)
    return {"dim": int(a.shape[0]),
            "re": [float(x) for x in a.real.ravel()],
            "im": [float(x) for x in a.imag.ravel()]}


def matrix_from_json(obj: dict) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`; nested row lists are accepted too."""
    dim = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float).ravel()
    im = np.asarray(obj.get("im", np.zeros(dim * dim)), dtype=float).ravel()
    if re.size != dim * dim or im.size != dim * dim:
        raise ValueError(f"matrix JSON needs {dim * dim} entries per part")
    return (re + 1j * im).reshape(dim, dim)


def read_json(path) -> dict:
    p = Path(path)
    try:
        return json.loads(p.read_text())
    except OSError as exc:
        raise OSError(f"{p}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{p}: invalid JSON ({exc})") from exc


def load_matrix(path) -> np.ndarray:
    return matrix_from_json(read_json(path))


def parse_spectrum(text: str) -> HamiltonianSpectrum:
    """Spectrum from a JSON file path or a shorthand.

    Shorthands: ``linear``, ``linear:OMEGA``, ``linear:OMEGA:N``, ``list:0,1,2``.
    """
    if text.startswith("list:"):
        return HamiltonianSpectrum.from_levels([float(x) for x in text[5:].split(",")])
    if text == "linear" or text.startswith("linear:"):
        parts = text.split(":")[1:]
        omega = float(parts[0]) if parts else 1.0
        if len(parts) > 1:
            return HamiltonianSpectrum.linear(omega, int(parts[1]))
        return HamiltonianSpectrum.linear(omega)
    return HamiltonianSpectrum.from_json(read_json(text))
