"""Digit-plane slicing of integer latents and the interval refinement state.

A latent value y with model interval [offset, offset + base**L) is rebased to
j = y - offset and expanded in base `base`, padded with leading zeros to the
tensor-wide plane count l_max (the largest exponent in the bank).  Plane 0
holds the most significant digits, plane l_max - 1 the least significant.

An element with exponent L < l_max is dormant through the first l_max - L
planes: its leading digits are identically zero, carry probability 1, and
are never entropy-coded.  Its own digits start at plane l_max - L, from
which point every non-dormant element at plane n has interval width exactly
base**(l_max - n), shrinking by one base factor per applied digit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CorruptionError
from .gaussian import ModelBank

__all__ = [
    "PlaneStack",
    "slice_latent",
    "unslice",
    "IntervalState",
    "refine",
]


@dataclass(frozen=True)
class PlaneStack:
    """Digit planes for a tensor: planes[n, i] is element i's digit at plane n."""

    base: int
    l_max: int
    planes: np.ndarray  # uint8, shape (l_max, size)

    @property
    def size(self) -> int:
        return self.planes.shape[1]


def slice_latent(values, bank: ModelBank) -> PlaneStack:
    """Expand integer latents into base-b digit planes, padded to l_max digits."""
    vals = np.asarray(values, dtype=np.int64).ravel()
    if vals.size != bank.size:
        raise ValueError(f"got {vals.size} values for {bank.size} models")
    rem = vals - bank.offsets
    if np.any(rem < 0) or np.any(rem >= bank.lengths):
        raise ValueError("latent value outside its model interval")
    planes = np.empty((bank.l_max, bank.size), dtype=np.uint8)
    for n in range(bank.l_max - 1, -1, -1):
        planes[n] = rem % bank.base
        rem //= bank.base
    return PlaneStack(base=bank.base, l_max=bank.l_max, planes=planes)


def unslice(stack: PlaneStack, bank: ModelBank) -> np.ndarray:
    """Invert slice_latent, verifying digit ranges and dormant-plane zeros."""
    if stack.base != bank.base or stack.l_max != bank.l_max:
        raise ValueError("plane stack does not match the model bank")
    if stack.planes.shape != (bank.l_max, bank.size):
        raise ValueError("plane array has the wrong shape")
    if np.any(stack.planes >= bank.base):
        raise CorruptionError("digit out of range for the base")
    j = np.zeros(bank.size, dtype=np.int64)
    for n in range(bank.l_max):
        j = j * bank.base + stack.planes[n]
    if np.any(j >= bank.lengths):
        raise CorruptionError("nonzero digit in a dormant plane")
    return bank.offsets + j


@dataclass
class IntervalState:
    """Per-element refinement intervals, tracked in rebased j-coordinates.

    Element i currently lies in [lo[i], lo[i] + width) of its own mass
    array, width = base**(exponents[i] - applied[i]).  Dormant elements
    simply keep applied == 0 until their first own plane.
    """

    base: int
    l_max: int
    exponents: np.ndarray
    lo: np.ndarray       # int64
    applied: np.ndarray  # int64

    @classmethod
    def initial(cls, bank: ModelBank) -> "IntervalState":
        return cls(
            base=bank.base,
            l_max=bank.l_max,
            exponents=bank.exponents,
            lo=np.zeros(bank.size, dtype=np.int64),
            applied=np.zeros(bank.size, dtype=np.int64),
        )

    @property
    def size(self) -> int:
        return self.lo.size

    def widths(self) -> np.ndarray:
        return np.asarray(self.base, dtype=np.int64) ** (self.exponents - self.applied)

    def active_ids(self, plane: int) -> np.ndarray:
        """Elements whose own digits include plane `plane`."""
        return np.flatnonzero(self.l_max - self.exponents <= plane)

    def apply_plane_digits(self, plane: int, ids: np.ndarray, digits: np.ndarray) -> None:
        """Shrink the listed elements' intervals by their digits at `plane`."""
        if np.any(self.applied[ids] != plane - (self.l_max - self.exponents[ids])):
            raise ValueError("elements are not positioned at this plane")
        if np.any(np.asarray(digits) >= self.base):
            raise ValueError("digit out of range for the base")
        sub = self.base ** (self.l_max - plane - 1)
        self.lo[ids] += np.asarray(digits, dtype=np.int64) * sub
        self.applied[ids] += 1

    def copy(self) -> "IntervalState":
        return IntervalState(
            base=self.base,
            l_max=self.l_max,
            exponents=self.exponents,
            lo=self.lo.copy(),
            applied=self.applied.copy(),
        )


def refine(state: IntervalState, element: int, digit: int) -> None:
    """Apply one more digit to a single element's interval."""
    if state.applied[element] >= state.exponents[element]:
        raise ValueError("interval already has width 1")
    if not 0 <= digit < state.base:
        raise ValueError(f"digit {digit} out of range for base {state.base}")
    plane = int(state.l_max - state.exponents[element] + state.applied[element])
    ids = np.asarray([element])
    state.apply_plane_digits(plane, ids, np.asarray([digit]))
