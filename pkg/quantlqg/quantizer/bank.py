"""
Quantizer partitions, prices and delays.
"""

import dataclasses
import itertools
import logging
import math

import numpy as np

from ..errors import MalformedFieldError, NoCellFoundError, PartitionError

logger = logging.getLogger(__name__)

NULL_LABEL = 0


def _bound(value, where):
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ('inf', '+inf', 'infinity'):
            return math.inf
        if text in ('-inf', '-infinity'):
            return -math.inf
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise MalformedFieldError(
            where, f'Bound {value!r} in "{where}" is not a number;'
        ) from e


def _encode_bound(value):
    if value == math.inf:
        return 'inf'
    if value == -math.inf:
        return '-inf'
    return float(value)


@dataclasses.dataclass(frozen=True, eq=False)
class QuantizerSpec:
    """A partition of R^p into axis-aligned boxes.

    Every box is closed below and open above in each dimension.

    Args:
        cells (ndarray): The boxes as an (l, p, 2) array of [low, high).
        price (float): The price paid every time the quantizer is used.
        label (int): The name of the quantizer in files and reports.
        breakpoints (tuple): The per-dimension breakpoints when the cells
            form a product grid, otherwise None.
    """
    cells: np.ndarray
    price: float
    label: int
    breakpoints: tuple = None

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float)
        if cells.ndim != 3 or cells.shape[2] != 2 or cells.shape[0] < 1:
            raise PartitionError(
                f'Quantizer {self.label} cells must have shape (l, p, 2), '
                f'but got: {cells.shape};'
            )
        if np.any(cells[:, :, 0] >= cells[:, :, 1]):
            raise PartitionError(
                f'Quantizer {self.label} has an empty cell;'
            )
        if self.price < 0 or not math.isfinite(self.price):
            raise PartitionError(
                f'Quantizer {self.label} price must be finite and >= 0, '
                f'but got: {self.price};'
            )
        cells.flags.writeable = False
        object.__setattr__(self, 'cells', cells)
        object.__setattr__(self, 'price', float(self.price))

    @property
    def levels(self):
        """The number of cells."""
        return self.cells.shape[0]

    @property
    def dim(self):
        """The dimension p of the quantized space."""
        return self.cells.shape[1]

    @property
    def is_null(self):
        """True for the single-cell quantizer."""
        return self.levels == 1

    def with_label(self, label):
        """Returns the same quantizer under another label."""
        return dataclasses.replace(self, label=label)

    def to_dict(self):
        """Returns the file representation of this quantizer."""
        content = {'label': self.label, 'price': self.price}
        if self.breakpoints is not None:
            content['breakpoints'] = [list(b) for b in self.breakpoints]
        else:
            content['cells'] = [
                [[_encode_bound(lo), _encode_bound(hi)] for lo, hi in cell]
                for cell in self.cells.tolist()
            ]
        return content


def product_grid(breakpoints, price, label):
    """Builds a quantizer whose cells are a Cartesian product of intervals.

    Args:
        breakpoints (list): One strictly increasing list per dimension; an
            empty list leaves that dimension unsplit.
        price (float): The price of the quantizer.
        label (int): The quantizer label.

    Returns:
        spec (QuantizerSpec): The quantizer.

    Example:
        # Splits the first coordinate at 0: {x1 < 0} and {x1 >= 0}.
        spec = product_grid([[0.0], []], price=100, label=1)
    """
    axes = []
    normalized = []
    for d, points in enumerate(breakpoints):
        points = [_bound(b, f'breakpoints[{d}]') for b in points]
        if any(not math.isfinite(b) for b in points):
            raise PartitionError(
                f'Quantizer {label} breakpoints must be finite;'
            )
        if any(a >= b for a, b in zip(points, points[1:])):
            raise PartitionError(
                f'Quantizer {label} breakpoints in dimension {d} must be '
                f'strictly increasing, but got: {points};'
            )
        edges = [-math.inf] + points + [math.inf]
        axes.append(list(zip(edges[:-1], edges[1:])))
        normalized.append(tuple(points))
    if not axes:
        raise PartitionError(f'Quantizer {label} has no dimensions;')
    cells = [list(box) for box in itertools.product(*axes)]
    return QuantizerSpec(
        cells=cells, price=price, label=label, breakpoints=tuple(normalized)
    )


def null_quantizer(p, label=NULL_LABEL):
    """Returns the single-cell, zero-price quantizer on R^p."""
    return product_grid([[] for _ in range(p)], price=0.0, label=label)


def delays_for_levels(levels, bit_rate):
    """Returns d = ceil(ceil(log2(l)) / r_b) for every level count.

    >>> delays_for_levels([2, 4, 8], 1)
    >>> (1, 2, 3)
    """
    if bit_rate < 1:
        raise MalformedFieldError(
            'bit_rate', f'Bit rate must be at least 1, but got: {bit_rate};'
        )
    delays = []
    for level in levels:
        if level < 1:
            raise MalformedFieldError(
                'levels', f'Level count must be at least 1, got: {level};'
            )
        bits = (int(level) - 1).bit_length()
        delays.append(-(-bits // int(bit_rate)))
    return tuple(delays)


@dataclasses.dataclass(frozen=True, eq=False)
class QuantizerBank:
    """The quantizers available at every stage, sorted by delay.

    Args:
        quantizers (tuple): The quantizers in nondecreasing delay order.
        bit_rate (int): The channel bit-rate r_b.
        delays (tuple): The delay of every quantizer.
        order (tuple): The position of every quantizer in its source file.
    """
    quantizers: tuple
    bit_rate: int
    delays: tuple
    order: tuple

    @property
    def size(self):
        """The number of quantizers M."""
        return len(self.quantizers)

    @property
    def dim(self):
        """The dimension p every quantizer acts on."""
        return self.quantizers[0].dim

    @property
    def prices(self):
        """The prices as an array, in bank order."""
        return np.array([q.price for q in self.quantizers])

    @property
    def labels(self):
        """The labels, in bank order."""
        return tuple(q.label for q in self.quantizers)

    @property
    def levels(self):
        """The cell counts, in bank order."""
        return tuple(q.levels for q in self.quantizers)

    @property
    def has_null(self):
        """True when a zero-price single-cell quantizer is present."""
        return any(q.is_null and q.price == 0 for q in self.quantizers)

    def position(self, label):
        """Returns the bank position of the quantizer with this label."""
        for i, q in enumerate(self.quantizers):
            if q.label == label:
                return i
        raise KeyError(f'No quantizer labelled {label!r};')

    def with_null_quantizer(self):
        """Returns this bank extended by the null quantizer.

        The null quantizer has zero delay, so it lands in front.
        """
        if self.has_null:
            return self
        if NULL_LABEL in self.labels:
            raise PartitionError(
                f'Label {NULL_LABEL} is taken by a quantizer that is not '
                'the null quantizer;'
            )
        specs = [null_quantizer(self.dim)] + [
            self.quantizers[self.order.index(k)] for k in range(self.size)
        ]
        return compute_delays(specs, self.bit_rate)

    def with_prices(self, prices_by_label):
        """Returns the bank with some prices replaced (keyed by label)."""
        specs = []
        for k in range(self.size):
            q = self.quantizers[self.order.index(k)]
            if q.label in prices_by_label:
                q = dataclasses.replace(q, price=prices_by_label[q.label])
            specs.append(q)
        return compute_delays(specs, self.bit_rate)

    def to_dict(self):
        """Returns the file representation (source order)."""
        return {
            'bit_rate': self.bit_rate,
            'quantizers': [
                self.quantizers[self.order.index(k)].to_dict()
                for k in range(self.size)
            ],
        }


def compute_delays(quantizers, bit_rate):
    """Computes delays and sorts the quantizers by them.

    The sort is stable, so quantizers with equal delays keep their source
    order; `order` records where each one came from.

    Args:
        quantizers (list): The `QuantizerSpec` items in source order.
        bit_rate (int): The channel bit-rate r_b.

    Returns:
        bank (QuantizerBank): The sorted bank.
    """
    quantizers = list(quantizers)
    if not quantizers:
        raise PartitionError('Quantizer bank is empty;')
    dims = {q.dim for q in quantizers}
    if len(dims) != 1:
        raise PartitionError(
            f'Quantizers act on different dimensions: {sorted(dims)};'
        )
    labels = [q.label for q in quantizers]
    if len(set(labels)) != len(labels):
        raise PartitionError(f'Quantizer labels repeat: {labels};')

    delays = delays_for_levels([q.levels for q in quantizers], bit_rate)
    order = sorted(range(len(quantizers)), key=lambda k: delays[k])
    bank = QuantizerBank(
        quantizers=tuple(quantizers[k] for k in order),
        bit_rate=int(bit_rate),
        delays=tuple(delays[k] for k in order),
        order=tuple(order),
    )
    logger.debug(
        'Bank labels=%s levels=%s delays=%s',
        bank.labels, bank.levels, bank.delays
    )
    return bank


def parse_bank(raw):
    """Builds a bank from its file representation.

    Args:
        raw (dict): Holds "bit_rate" and a "quantizers" list; every entry has
            a "price", an optional "label" (default: position + 1) and
            either "breakpoints" or explicit "cells".

    Returns:
        bank (QuantizerBank): The sorted bank.
    """
    if not isinstance(raw, dict):
        raise MalformedFieldError(
            'bank', f'Bank must be a mapping, but got: {type(raw)};'
        )
    entries = raw.get('quantizers')
    if not isinstance(entries, list) or not entries:
        raise MalformedFieldError(
            'quantizers', 'Bank must list at least one quantizer;'
        )
    bit_rate = raw.get('bit_rate', 1)
    if isinstance(bit_rate, bool) or not isinstance(bit_rate, int):
        raise MalformedFieldError(
            'bit_rate', f'Bit rate must be an integer, but got: {bit_rate!r};'
        )

    specs = []
    for k, entry in enumerate(entries):
        where = f'quantizers[{k}]'
        if not isinstance(entry, dict) or 'price' not in entry:
            raise MalformedFieldError(
                where, f'Entry "{where}" must be a mapping with a price;'
            )
        label = entry.get('label', k + 1)
        price = _bound(entry['price'], f'{where}.price')
        if 'breakpoints' in entry:
            specs.append(product_grid(entry['breakpoints'], price, label))
        elif 'cells' in entry:
            cells = [
                [[_bound(b, f'{where}.cells') for b in interval]
                 for interval in cell]
                for cell in entry['cells']
            ]
            specs.append(QuantizerSpec(cells=cells, price=price, label=label))
        else:
            raise MalformedFieldError(
                where, f'Entry "{where}" needs "breakpoints" or "cells";'
            )
    return compute_delays(specs, bit_rate)


def quantize(spec, xi):
    """Returns the index of the cell holding xi.

    Args:
        spec (QuantizerSpec): The quantizer.
        xi (array_like): The point (p-vector).

    Returns:
        j (int): The 0-based cell index.

    Raises:
        NoCellFoundError: When the cells do not cover xi.
    """
    return int(quantize_many(spec, np.asarray(xi, dtype=float)[None, :])[0])


def quantize_many(spec, xi_batch):
    """Vectorized `quantize` over the rows of an (N, p) array."""
    xi_batch = np.asarray(xi_batch, dtype=float)
    lo = spec.cells[None, :, :, 0]
    hi = spec.cells[None, :, :, 1]
    x = xi_batch[:, None, :]
    inside = np.all((x >= lo) & (x < hi), axis=2)
    found = inside.any(axis=1)
    if not np.all(found):
        missing = xi_batch[np.argmin(found)]
        raise NoCellFoundError(
            f'No cell of quantizer {spec.label} contains {missing.tolist()};'
        )
    return np.argmax(inside, axis=1)
