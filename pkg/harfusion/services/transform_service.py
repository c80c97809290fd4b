import logging

import numpy as np
from PIL import Image, ImageDraw

from harfusion.core.exceptions import InvalidParameterError, NonFiniteInputError, ShapeMismatchError
from harfusion.schemas.features import FeatureImage, FeatureKind, RowExpansionPlan
from harfusion.schemas.imu import N_CHANNELS, QUAT, ImuWindow
from harfusion.services.kinematics import direction_vectors


logger = logging.getLogger(__name__)

# Plane projections of the direction vector, stacked as R, G, B.
OCH_PLANES = ((0, 1), (1, 2), (0, 2))


def stack_channels(window: ImuWindow) -> np.ndarray:
    """
    10×T image whose row r is channel r.
    """
    return np.array(window.channels, dtype=np.float64, copy=True)


def build_expansion_plan(n_channels: int = N_CHANNELS, seed: int = 0) -> RowExpansionPlan:
    """
    Build a circular row sequence in which every channel pair is adjacent.

    The sequence is an Eulerian circuit of the complete graph on the channels.
    For an even channel count, the perfect matching (0,1), (2,3), ... is
    duplicated first so every degree is even; that is the fewest extra edges
    possible. Hierholzer's walk starts at 0 and always takes the smallest
    neighbour. A nonzero seed relabels the channels with a seeded permutation,
    which preserves pair coverage.

    :param n_channels: int, optional
        Number of channels (>= 2).
    :param seed: int, optional
        Relabelling seed; 0 keeps the natural labels.
    :return: RowExpansionPlan
        n(n-1)/2 rows for odd n, n(n-1)/2 + n/2 rows for even n.
    """
    if n_channels < 2:
        raise InvalidParameterError("n_channels", "at least two channels are needed")

    adjacency = np.ones((n_channels, n_channels), dtype=np.int64) - np.eye(n_channels, dtype=np.int64)
    if n_channels % 2 == 0:
        for a in range(0, n_channels, 2):
            adjacency[a, a + 1] += 1
            adjacency[a + 1, a] += 1

    stack, circuit = [0], []
    while stack:
        v = stack[-1]
        neighbours = np.flatnonzero(adjacency[v])
        if neighbours.size:
            u = int(neighbours[0])
            adjacency[v, u] -= 1
            adjacency[u, v] -= 1
            stack.append(u)
        else:
            circuit.append(stack.pop())
    sequence = circuit[::-1][:-1]

    if seed:
        relabel = np.random.default_rng(seed).permutation(n_channels)
        sequence = [int(relabel[i]) for i in sequence]
    return RowExpansionPlan(sequence=tuple(int(i) for i in sequence), circular=True)


def expand_rows(stacked: np.ndarray, plan: RowExpansionPlan) -> np.ndarray:
    stacked = np.asarray(stacked, dtype=np.float64)
    if max(plan.sequence) >= stacked.shape[0]:
        raise ShapeMismatchError("expand_rows", stacked.shape, f"more than {max(plan.sequence)} rows")
    return stacked[list(plan.sequence)]


def dft_magnitude(expanded: np.ndarray) -> np.ndarray:
    """
    |F| of the 2D DFT with both axes centred (DC at row R//2, column T//2).
    """
    expanded = np.asarray(expanded, dtype=np.float64)
    if not np.all(np.isfinite(expanded)):
        raise NonFiniteInputError("frequency transform input")
    return np.abs(np.fft.fftshift(np.fft.fft2(expanded)))


def log_half_spectrum(expanded: np.ndarray) -> np.ndarray:
    """
    log(1 + |F|) of the centred spectrum, columns T/2 .. T-1 only (before normalization).
    """
    rows, width = np.shape(expanded)
    if rows < 2 or width < 2 or width % 2:
        raise InvalidParameterError("expanded", f"need R, T >= 2 and T even, got {rows}×{width}")
    return np.log1p(dft_magnitude(expanded))[:, width // 2 :]


def minmax_normalize(image: np.ndarray) -> np.ndarray:
    low, high = float(image.min()), float(image.max())
    if high - low <= 0:
        return np.zeros_like(image)
    return (image - low) / (high - low)


def freq_transform(expanded: np.ndarray, provenance: str = "") -> FeatureImage:
    """
    Frequency image: normalized log magnitude of the positive-frequency half.

    :param expanded: np.ndarray
        R×T row-expanded window.
    :param provenance: str, optional
        Source window id.
    :return: FeatureImage
        R × T/2 × 1 image with values in [0, 1].
    """
    half = minmax_normalize(log_half_spectrum(expanded))
    return FeatureImage(pixels=half[:, :, None], kind=FeatureKind.freq, provenance=provenance)


def _to_pixels(coords: np.ndarray, size: int) -> np.ndarray:
    """
    Map [-1, 1]² plane coordinates to (column, row) pixel positions.
    """
    u, v = coords[:, 0], coords[:, 1]
    cols = np.rint((u + 1.0) / 2.0 * (size - 1))
    rows = np.rint((1.0 - (v + 1.0) / 2.0) * (size - 1))
    return np.clip(np.stack([cols, rows], axis=1), 0, size - 1).astype(np.int64)


def _polyline(points: np.ndarray, size: int) -> np.ndarray:
    canvas = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(canvas)
    xy = [(int(c), int(r)) for c, r in points]
    draw.point(xy, fill=255)
    if len(xy) > 1:
        draw.line(xy, fill=255, width=1)
    return (np.asarray(canvas, dtype=np.float64) > 0).astype(np.float64)


def och_transform(window: ImuWindow, size: int = 64) -> FeatureImage:
    """
    Orientation-changing-history image.

    Each orientation rotates ẑ to a direction vector; the vector sequence is
    projected on the xy, yz and xz planes and drawn as a connected polyline
    into the R, G and B channels.

    :param window: ImuWindow
        Window whose quaternion channels are used.
    :param size: int, optional
        Image height and width (>= 8).
    :raises DegenerateQuaternionError:
        If an orientation sample has zero or far-from-unit norm.
    :return: FeatureImage
        size×size×3 image with values in {0, 1}.
    """
    if size < 8:
        raise InvalidParameterError("size", "OCH images need at least 8 pixels")
    quats = window.channels[QUAT].T
    if not np.all(np.isfinite(quats)):
        raise NonFiniteInputError(f"orientation channels of {window.window_id}")
    vectors = direction_vectors(quats)
    planes = [_polyline(_to_pixels(vectors[:, list(axes)], size), size) for axes in OCH_PLANES]
    return FeatureImage(pixels=np.stack(planes, axis=-1), kind=FeatureKind.och, provenance=window.window_id)


class TransformService:
    """
    Applies the configured feature transform to windows.
    """

    def __init__(self, plan: RowExpansionPlan, och_size: int = 64):
        """
        :param plan: RowExpansionPlan
            Row expansion used by the frequency transform.
        :param och_size: int, optional
            Side length of OCH images.
        """
        self.plan = plan
        self.och_size = och_size

    def transform(self, window: ImuWindow, kind: FeatureKind) -> FeatureImage:
        if kind is FeatureKind.freq:
            image = freq_transform(expand_rows(stack_channels(window), self.plan), provenance=window.window_id)
        else:
            image = och_transform(window, self.och_size)
        return image.model_copy(
            update={"label": window.label, "subject": window.subject, "origin": window.provenance}
        )

    def transform_all(self, windows: list[ImuWindow], kind: FeatureKind) -> list[FeatureImage]:
        return [self.transform(w, kind) for w in windows]

    def output_shape(self, window_length: int, kind: FeatureKind) -> tuple[int, int, int]:
        if kind is FeatureKind.freq:
            return (self.plan.rows, window_length // 2, 1)
        return (self.och_size, self.och_size, 3)


def plan_from_sequence(sequence: list[int] | None, circular: bool = False, seed: int = 0) -> RowExpansionPlan:
    """
    Explicit row sequence when given, otherwise the default pair-covering plan.
    """
    if sequence:
        plan = RowExpansionPlan(sequence=tuple(sequence), circular=circular)
        if not plan.covers_all_pairs(N_CHANNELS):
            logger.warning(f"Row sequence of {plan.rows} rows leaves some channel pairs non-adjacent.")
        return plan
    return build_expansion_plan(N_CHANNELS, seed)
