"""
Ternary (K = 3) rendering of credal regions as deterministic SVG.

Corner convention: label 0 at bottom-left (0, 0), label 1 at bottom-right
(1, 0), label 2 at the top (0.5, sqrt(3)/2). A point lambda maps to
x = lambda_1 + lambda_2 / 2, y = lambda_2 * sqrt(3) / 2.
"""

import io
import logging
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.credal.region import CredalRegion  # noqa: E402
from src.credal.simplex import ProbabilityVector  # noqa: E402
from src.utils.data_helpers import PathLike, atomic_write_bytes  # noqa: E402
from src.utils.exceptions import UnsupportedDimension  # noqa: E402

logger = logging.getLogger(__name__)

HEIGHT = float(np.sqrt(3.0) / 2.0)
CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, HEIGHT]])
CORNER_CONVENTION = "ternary corners: label 0 bottom-left (0,0), label 1 bottom-right (1,0), label 2 top (0.5,0.866)"
SVG_SALT = "credal-ternary"
# Element ids of the simplex outline and the region shape in the written SVG.
SIMPLEX_GID = "simplex"
REGION_GID = "credal-region"


def to_cartesian(points: np.ndarray) -> np.ndarray:
    """Barycentric rows (N, 3) to canvas coordinates (N, 2)."""
    return np.atleast_2d(points) @ CORNERS


def ternary_polygon(region: CredalRegion) -> np.ndarray:
    """Region vertices in canvas coordinates, ordered counter-clockwise."""
    if region.k != 3:
        raise UnsupportedDimension(f"ternary plots need K = 3, got K = {region.k}")
    points = to_cartesian(region.extreme_points().matrix)
    if points.shape[0] < 3:
        return points
    centre = points.mean(axis=0)
    angles = np.arctan2(points[:, 1] - centre[1], points[:, 0] - centre[0])
    return points[np.argsort(angles, kind='stable')]


def render_svg(figure) -> bytes:
    buffer = io.BytesIO()
    with plt.rc_context({'svg.hashsalt': SVG_SALT, 'svg.fonttype': 'none'}):
        figure.savefig(buffer, format='svg', metadata={'Date': None, 'Description': CORNER_CONVENTION})
    return buffer.getvalue()


def render_ternary(region: CredalRegion, out: PathLike, lam: Optional[ProbabilityVector] = None,
                   title: Optional[str] = None) -> str:
    """Draw the simplex, the shaded region and an optional marker at lambda; write SVG."""
    polygon = ternary_polygon(region)

    fig, ax = plt.subplots(figsize=(5, 4.6))
    try:
        ax.add_patch(plt.Polygon(CORNERS, closed=True, fill=False, edgecolor='black', linewidth=1.2,
                                 gid=SIMPLEX_GID))
        if polygon.shape[0] >= 3:
            ax.add_patch(plt.Polygon(polygon, closed=True, facecolor='tab:orange', edgecolor='tab:red',
                                     alpha=0.5, linewidth=1.0, gid=REGION_GID))
        elif polygon.shape[0] == 2:
            ax.plot(polygon[:, 0], polygon[:, 1], color='tab:red', linewidth=2.0, gid=REGION_GID)
        else:
            ax.plot(polygon[:, 0], polygon[:, 1], marker='o', color='tab:red', markersize=6, gid=REGION_GID)

        if lam is not None:
            point = to_cartesian(lam.array)[0]
            ax.plot([point[0]], [point[1]], marker='*', color='black', markersize=10)

        offsets = [(-0.04, -0.05), (0.04, -0.05), (0.0, 0.04)]
        for k, ((x, y), (dx, dy)) in enumerate(zip(CORNERS, offsets)):
            ax.text(x + dx, y + dy, region.label_space.display_name(k), ha='center', va='center', fontsize=11)

        ax.set_xlim(-0.1, 1.1)
        ax.set_ylim(-0.1, HEIGHT + 0.1)
        ax.set_aspect('equal')
        ax.axis('off')
        if title:
            ax.set_title(title)
        payload = render_svg(fig)
    finally:
        plt.close(fig)

    path = atomic_write_bytes(out, payload)
    logger.info(f"Wrote ternary plot to {path}")
    return path
