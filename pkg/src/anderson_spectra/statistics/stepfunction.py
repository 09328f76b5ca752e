from __future__ import annotations

import csv
from typing import Callable, Iterable, Optional, Tuple

import numpy as np

__all__ = ["StepFunction", "sup_distance"]


class StepFunction:
    """Empirical survival ``#{v >= x} / n`` (or CDF ``#{v <= x} / n``).

    ``n`` may exceed the number of stored values: the spacing laws divide by
    the number of eigenvalues in a window, which can include one eigenvalue
    without a successor.
    """

    def __init__(self, values, n: Optional[int] = None, kind: str = "survival"):
        if kind not in ("survival", "cdf"):
            raise ValueError("kind must be 'survival' or 'cdf'")
        self.values = np.sort(np.asarray(values, dtype=np.float64).ravel())
        self.n = len(self.values) if n is None else int(n)
        if self.n < len(self.values):
            raise ValueError("denominator smaller than the number of samples")
        if self.n == 0:
            raise ValueError("empty step function")
        self.kind = kind

    def __len__(self):
        return len(self.values)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "survival":
            cnt = len(self.values) - np.searchsorted(self.values, x, side="left")
        else:
            cnt = np.searchsorted(self.values, x, side="right")
        out = cnt / self.n
        return out if out.ndim else float(out)

    def right_limit(self, x):
        """Value just to the right of ``x`` (survival) / left of ``x`` (cdf)."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "survival":
            cnt = len(self.values) - np.searchsorted(self.values, x, side="right")
        else:
            cnt = np.searchsorted(self.values, x, side="left")
        return cnt / self.n

    @classmethod
    def pool(cls, parts: Iterable["StepFunction"]) -> "StepFunction":
        """Concatenate samples and denominators of several step functions."""
        parts = list(parts)
        if not parts:
            raise ValueError("nothing to pool")
        kinds = {p.kind for p in parts}
        if len(kinds) != 1:
            raise ValueError("cannot pool survival and cdf step functions")
        return cls(np.concatenate([p.values for p in parts]), sum(p.n for p in parts), kinds.pop())

    def table(self) -> np.ndarray:
        """``(x, value)`` at each distinct jump point."""
        xs = np.unique(self.values)
        return np.column_stack([xs, self(xs)])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for x, v in self.table():
                w.writerow([repr(float(x)), repr(float(v))])


def sup_distance(
    step: StepFunction,
    reference: Callable[[np.ndarray], np.ndarray],
    x_range: Tuple[float, float] = (0.0, np.inf),
) -> float:
    """``sup_{x in x_range} |step(x) - reference(x)|`` for a continuous monotone reference.

    Between jumps the step function is constant, so the supremum is attained
    at a jump (from either side) or at an end of the range.
    """
    lo, hi = x_range
    xs = np.unique(step.values)
    xs = xs[(xs >= lo) & (xs <= hi)]
    cand = [np.abs(step(xs) - reference(xs))]
    inner = xs[xs < hi]
    cand.append(np.abs(step.right_limit(inner) - reference(inner)))
    ends = np.array([lo] + ([hi] if np.isfinite(hi) else []))
    cand.append(np.abs(step(ends) - reference(ends)))
    if not np.isfinite(hi):
        # at +inf the survival function and any decaying reference both vanish
        top = step.values[-1] if len(step.values) else lo
        tail = np.array([max(top, lo)])
        cand.append(np.abs(step.right_limit(tail) - reference(tail)))
    return float(max(np.max(c) if np.size(c) else 0.0 for c in cand))
