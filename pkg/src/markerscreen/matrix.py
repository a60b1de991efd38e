"""Two-condition expression matrix container."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ExpressionMatrix:
    """Proteins-by-samples intensity table with a two-condition layout.

    values: (p, N) float array, one row per protein.
    layout: length-N int array of condition labels, each 1 or 2.
    protein_ids: optional names; generated as P0001.. when omitted.
    """

    values: np.ndarray
    layout: np.ndarray
    protein_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        layout = np.asarray(self.layout, dtype=int)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 2:
            raise ValueError("values must be a (p >= 1, N >= 2) matrix")
        if not np.all(np.isfinite(values)):
            raise ValueError("matrix contains non-finite intensities")
        if layout.shape != (values.shape[1],):
            raise ValueError("layout length must equal the sample count")
        if not np.all((layout == 1) | (layout == 2)):
            raise ValueError("layout labels must be 1 or 2")
        if not (np.any(layout == 1) and np.any(layout == 2)):
            raise ValueError("both conditions need at least one sample")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "layout", layout)
        if self.protein_ids:
            ids = tuple(str(i) for i in self.protein_ids)
            if len(ids) != values.shape[0]:
                raise ValueError("protein_ids length must equal protein count")
            if len(set(ids)) != len(ids):
                raise ValueError("protein_ids must be unique")
        else:
            width = max(4, len(str(values.shape[0])))
            ids = tuple(f"P{i + 1:0{width}d}" for i in range(values.shape[0]))
        object.__setattr__(self, "protein_ids", ids)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n1(self) -> int:
        return int(np.sum(self.layout == 1))

    @property
    def n2(self) -> int:
        return int(np.sum(self.layout == 2))

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def condition_masks(self) -> tuple[np.ndarray, np.ndarray]:
        return self.layout == 1, self.layout == 2

    def row_condition_first(self, j: int) -> np.ndarray:
        """Row j reordered so condition-1 samples come first."""
        m1, m2 = self.condition_masks()
        return np.concatenate([self.values[j, m1], self.values[j, m2]])
