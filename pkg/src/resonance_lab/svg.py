"""Plain-text SVG figures: resonance trajectories in the r-plane and z-plane."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT, PAD = 640, 480, 48
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
          "#17becf", "#7f7f7f", "#bcbd22"]


class _Frame:
    def __init__(self, points):
        pts = np.asarray(points, dtype=complex)
        if pts.size == 0:
            pts = np.array([0j, 1 + 1j])
        x0, x1 = float(pts.real.min()), float(pts.real.max())
        y0, y1 = float(pts.imag.min()), float(pts.imag.max())
        dx = max(x1 - x0, 1e-9)
        dy = max(y1 - y0, 1e-9)
        self.x0, self.x1 = x0 - 0.05 * dx, x1 + 0.05 * dx
        self.y0, self.y1 = y0 - 0.05 * dy, y1 + 0.05 * dy

    def __call__(self, z):
        u = PAD + (z.real - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * PAD)
        v = HEIGHT - PAD - (z.imag - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2 * PAD)
        return f"{u:.2f},{v:.2f}"


def _document(title, frame, body):
    axes = (
        f'<rect x="{PAD}" y="{PAD}" width="{WIDTH - 2 * PAD}" height="{HEIGHT - 2 * PAD}" '
        f'fill="none" stroke="#444"/>'
        f'<text x="{PAD}" y="{HEIGHT - PAD / 3:.0f}" font-size="11">Re [{frame.x0:.3g}, {frame.x1:.3g}]</text>'
        f'<text x="{PAD / 4:.0f}" y="{PAD - 8}" font-size="11">Im [{frame.y0:.3g}, {frame.y1:.3g}]</text>'
    )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
        f'<title>{escape(title)}</title>\n{axes}\n' + "\n".join(body) + "\n</svg>\n"
    )


def _polylines(frame, tracks):
    body = []
    for n, (label, pts) in enumerate(tracks):
        color = COLORS[n % len(COLORS)]
        coords = " ".join(frame(z) for z in pts)
        body.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}">'
                    f'<title>{escape(str(label))}</title></polyline>')
        if pts:
            body.append(f'<circle cx="{frame(pts[-1]).split(",")[0]}" '
                        f'cy="{frame(pts[-1]).split(",")[1]}" r="3" fill="{color}"/>')
    return body


def r_plane_figure(tracks, title="resonance trajectories (r-plane)"):
    """``tracks`` is a list of ``(label, [r values])``."""
    frame = _Frame([z for _, pts in tracks for z in pts])
    return _document(title, frame, _polylines(frame, tracks))


def z_plane_figure(tracks, cone=None, title="paths in the z-plane"):
    """``tracks`` is a list of ``(label, [z points])``; ``cone`` an optional ConeRegion."""
    pts = [z for _, p in tracks for z in p]
    if cone is not None and cone.intervals:
        eps = cone.epsilon or 1.0
        pts += [complex(cone.intervals[0][0] - eps, eps), complex(cone.intervals[-1][1] + eps, 0)]
    frame = _Frame(pts)
    body = []
    if cone is not None:
        eps = cone.epsilon or 1.0
        for a, b in cone.intervals:
            poly = [complex(a, 0), complex(a - eps, eps), complex(b + eps, eps), complex(b, 0)]
            body.append(f'<polygon fill="#cfe8ff" fill-opacity="0.5" stroke="#5b9bd5" '
                        f'points="{" ".join(frame(z) for z in poly)}"/>')
            body.append(f'<line stroke="#000" stroke-width="3" x1="{frame(complex(a, 0)).split(",")[0]}" '
                        f'y1="{frame(complex(a, 0)).split(",")[1]}" '
                        f'x2="{frame(complex(b, 0)).split(",")[0]}" '
                        f'y2="{frame(complex(b, 0)).split(",")[1]}"/>')
    body += _polylines(frame, tracks)
    return _document(title, frame, body)
