"""Column-stochastic confusion matrices P(output | H)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COLUMN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Hard-decision performance table.

    ``entries[i, h]`` is ``P(output = i | H = h)``. Each column is a
    probability distribution over outputs. Construction copies the input,
    clips rounding noise below ``COLUMN_TOL`` and freezes the array.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
            raise ValueError(f"confusion matrix must be square with m >= 2, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("confusion matrix entries must be finite")
        if a.min() < -COLUMN_TOL or a.max() > 1 + COLUMN_TOL:
            raise ValueError(f"confusion matrix entries must lie in [0, 1], got {a.tolist()}")
        a = np.clip(a, 0.0, 1.0)
        sums = a.sum(axis=0)
        if np.any(np.abs(sums - 1.0) > COLUMN_TOL):
            raise ValueError(f"confusion matrix columns must sum to 1, got {sums.tolist()}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def from_rates(cls, pf: float, pd: float) -> ConfusionMatrix:
        """Binary matrix with false-alarm rate ``pf`` and detection rate ``pd``."""
        return cls(np.array([[1.0 - pf, 1.0 - pd], [pf, pd]]))

    @classmethod
    def identity(cls, m: int = 2) -> ConfusionMatrix:
        return cls(np.eye(m))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def pf(self) -> float:
        """P(output = 1 | H = 0); binary matrices only."""
        self._require_binary()
        return float(self.entries[1, 0])

    @property
    def pd(self) -> float:
        """P(output = 1 | H = 1); binary matrices only."""
        self._require_binary()
        return float(self.entries[1, 1])

    def _require_binary(self) -> None:
        if self.m != 2:
            raise ValueError("pf/pd are defined for binary (m = 2) matrices only")

    def __getitem__(self, idx):
        return self.entries[idx]

    def allclose(self, other: ConfusionMatrix, atol: float = 1e-12) -> bool:
        return self.m == other.m and bool(np.allclose(self.entries, other.entries, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        if self.m == 2:
            return f"ConfusionMatrix(pf={float(self.entries[1, 0])!r}, pd={float(self.entries[1, 1])!r})"
        return f"ConfusionMatrix({self.entries.tolist()!r})"
