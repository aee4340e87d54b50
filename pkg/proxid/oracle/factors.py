"""
Dense labelled probability tables.
"""
from __future__ import annotations

import string

import numpy as np

from ..exceptions import EstimandError, PositivityError

__all__ = [
    "DiscreteDistribution",
    "Factor",
]

_LETTERS = string.ascii_letters


class Factor(object):
    """
    A numpy array whose axes are named by variables.

    Missing axes broadcast: combining two factors aligns them on the union
    of their variables.
    """

    __slots__ = ("variables", "values")

    def __init__(self, variables, values):
        variables = tuple(variables)
        values = np.asarray(values, dtype=float)
        if values.ndim != len(variables):
            raise EstimandError(f"table of rank {values.ndim} labelled by {variables}")
        if len(set(variables)) != len(variables):
            raise EstimandError(f"repeated axis in {variables}")
        self.variables = variables
        self.values = values

    @classmethod
    def scalar(cls, value):
        return cls((), np.asarray(value, dtype=float))

    @property
    def cards(self):
        return dict(zip(self.variables, self.values.shape))

    def __repr__(self):
        return f"Factor({', '.join(self.variables)}; shape={self.values.shape})"

    # alignment

    def aligned(self, variables):
        """
        The values with axes ordered as ``variables``; absent axes have length 1.
        """
        variables = tuple(variables)
        extra = set(self.variables) - set(variables)
        if extra:
            raise EstimandError(f"cannot align {self.variables} to {variables}")
        present = [v for v in variables if v in self.variables]
        arr = np.transpose(self.values, [self.variables.index(v) for v in present])
        shape = [arr.shape[present.index(v)] if v in present else 1 for v in variables]
        return arr.reshape(shape)

    def expand(self, variables, cards):
        variables = tuple(variables)
        arr = self.aligned(variables)
        shape = tuple(cards[v] if v not in self.variables else self.cards[v] for v in variables)
        return Factor(variables, np.broadcast_to(arr, shape).copy())

    def transpose(self, variables):
        if set(variables) != set(self.variables) or len(variables) != len(self.variables):
            raise EstimandError(f"{variables} is not a permutation of {self.variables}")
        return Factor(variables, self.aligned(variables))

    def rename(self, mapping):
        return Factor(tuple(mapping.get(v, v) for v in self.variables), self.values)

    # algebra

    def product(self, *others):
        factors = (self,) + others
        union = []
        for f in factors:
            union.extend(v for v in f.variables if v not in union)
        if len(union) > len(_LETTERS):
            raise EstimandError(f"too many axes for a dense product: {len(union)}")
        letter = {v: _LETTERS[i] for i, v in enumerate(union)}
        subscripts = ",".join("".join(letter[v] for v in f.variables) for f in factors)
        subscripts += "->" + "".join(letter[v] for v in union)
        return Factor(union, np.einsum(subscripts, *(f.values for f in factors)))

    def sum_out(self, variables, cards=None):
        """
        Sum over ``variables``; a variable without an axis contributes a factor
        of its cardinality.
        """
        values, kept = self.values, list(self.variables)
        scale = 1.0
        for v in dict.fromkeys(variables):
            if v in kept:
                values = values.sum(axis=kept.index(v))
                kept.remove(v)
            else:
                if cards is None or v not in cards:
                    raise EstimandError(f"cannot sum over {v!r}: no axis and no cardinality")
                scale *= cards[v]
        return Factor(kept, values * scale if scale != 1.0 else values)

    def marginal(self, keep):
        keep = set(keep)
        return self.sum_out([v for v in self.variables if v not in keep])

    def divide(self, other, where=""):
        union = list(self.variables) + [v for v in other.variables if v not in self.variables]
        num, den = self.aligned(union), other.aligned(union)
        shape = np.broadcast_shapes(num.shape, den.shape)
        den_full = np.broadcast_to(den, shape)
        zero = den_full == 0
        if zero.any():
            index = np.argwhere(zero)[0]
            stratum = {v: int(i) for v, i in zip(union, index) if v in other.variables}
            raise PositivityError(stratum, where)
        return Factor(union, np.broadcast_to(num, shape) / den_full)

    def select(self, variable, index):
        if variable not in self.variables:
            return self
        axis = self.variables.index(variable)
        if not 0 <= index < self.values.shape[axis]:
            raise EstimandError(f"category {index} out of range for {variable!r}")
        kept = self.variables[:axis] + self.variables[axis + 1 :]
        return Factor(kept, np.take(self.values, index, axis=axis))

    def max_abs_diff(self, other, cards=None):
        union = list(self.variables) + [v for v in other.variables if v not in self.variables]
        a, b = self.aligned(union), other.aligned(union)
        return float(np.max(np.abs(a - b))) if a.size or b.size else 0.0


class DiscreteDistribution(Factor):
    """
    A probability table, optionally annotated with the do-set it was
    computed under.
    """

    __slots__ = ("do",)

    def __init__(self, variables, values, do=(), tolerance=1e-10):
        super(DiscreteDistribution, self).__init__(variables, values)
        self.do = dict(do)
        if np.any(self.values < -tolerance):
            raise EstimandError("distribution has negative entries")
        total = float(self.values.sum())
        if abs(total - 1.0) > tolerance:
            raise EstimandError(f"distribution mass is {total!r}, not 1")

    @classmethod
    def from_factor(cls, factor, do=()):
        return cls(factor.variables, factor.values, do=do)

    @classmethod
    def from_frame(cls, frame, variables, cards):
        """
        The empirical joint of integer-coded columns ``variables``.
        """
        variables = tuple(variables)
        if len(frame) == 0:
            raise EstimandError("cannot tabulate an empty sample")
        shape = tuple(int(cards[v]) for v in variables)
        counts = np.zeros(shape)
        index = tuple(frame[v].to_numpy(dtype=int) for v in variables)
        np.add.at(counts, index, 1.0)
        return cls(variables, counts / counts.sum())

    def marginal(self, keep):
        factor = super(DiscreteDistribution, self).marginal(keep)
        return DiscreteDistribution(factor.variables, factor.values, do=self.do)
