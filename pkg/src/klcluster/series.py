from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from klcluster.errors import DomainError


@dataclass(frozen=True, eq=False)
class RegularSeries:
    """Uniformly sampled scalar series.

    ``origin_timestamp`` is the UNIX time of the first sample (0 for
    synthetic data); sample ``i`` sits at ``origin_timestamp + i * step_seconds``.
    """

    values: np.ndarray
    step_seconds: float = 1.0
    origin_timestamp: int = 0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("series values must be a nonempty 1-D sequence")
        if not self.step_seconds > 0:
            raise DomainError(f"step_seconds must be positive, got {self.step_seconds}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, RegularSeries):
            return NotImplemented
        return (
            self.step_seconds == other.step_seconds
            and self.origin_timestamp == other.origin_timestamp
            and np.array_equal(self.values, other.values)
        )

    def timestamps(self) -> np.ndarray:
        return self.origin_timestamp + self.step_seconds * np.arange(len(self))

    def with_values(self, values, offset=0) -> RegularSeries:
        """Series sharing this one's grid, starting ``offset`` samples later."""
        return RegularSeries(
            values,
            step_seconds=self.step_seconds,
            origin_timestamp=int(self.origin_timestamp + offset * self.step_seconds),
            label=self.label,
        )
