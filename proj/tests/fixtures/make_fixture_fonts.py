#!/usr/bin/env python3
"""Builds the small TrueType fonts used by the glyph_data tests.

The glyphs are stroke skeletons turned into quadrilateral contours, so the
fonts carry no third-party outline data. Two fonts are emitted with different
stroke weights and a slant, standing in for a printed and a handwritten face.

    python3 make_fixture_fonts.py <out_dir>

Requires fontTools. With shapely installed it also prints an exact-coverage
ink fraction for U+AC00, used as a cross-check of the rasterizer.
"""

import math
import sys
from pathlib import Path

from fontTools.fontBuilder import FontBuilder
from fontTools.pens.ttGlyphPen import TTGlyphPen

UPM = 1000

# Strokes in a 0..1000 em box (x right, y up). Each entry is a polyline.
SKELETONS = {
    0x0041: [[(150, 0), (500, 720)], [(500, 720), (850, 0)], [(280, 260), (720, 260)]],  # A
    0x0042: [[(200, 0), (200, 720)], [(200, 720), (650, 640), (200, 380)], [(200, 380), (700, 200), (200, 0)]],  # B
    0x0043: [[(750, 650), (250, 600), (200, 120), (750, 80)]],  # C
    0x0044: [[(200, 0), (200, 720)], [(200, 720), (750, 360), (200, 0)]],  # D
    0x0045: [[(700, 720), (200, 720), (200, 0), (700, 0)], [(200, 360), (600, 360)]],  # E
    0x0046: [[(700, 720), (200, 720), (200, 0)], [(200, 360), (600, 360)]],  # F
    0x0048: [[(200, 0), (200, 720)], [(750, 0), (750, 720)], [(200, 360), (750, 360)]],  # H
    0x004B: [[(200, 0), (200, 720)], [(750, 720), (200, 300)], [(380, 440), (780, 0)]],  # K
    0x004C: [[(200, 720), (200, 0), (700, 0)]],  # L
    0x004E: [[(200, 0), (200, 720), (750, 0), (750, 720)]],  # N
    0x0054: [[(120, 720), (820, 720)], [(470, 720), (470, 0)]],  # T
    0x0056: [[(150, 720), (480, 0), (820, 720)]],  # V
    # 가: giyeok + a
    0xAC00: [[(100, 700), (450, 700), (300, 150)], [(650, 820), (650, -80)], [(650, 330), (880, 330)]],
    # 각: giyeok + a + final giyeok
    0xAC01: [[(100, 760), (420, 760), (300, 420)], [(620, 840), (620, 320)], [(620, 580), (860, 580)],
             [(200, 230), (760, 230), (700, -80)]],
    # 나: nieun + a
    0xB098: [[(150, 760), (150, 180), (520, 180)], [(680, 840), (680, -80)], [(680, 380), (900, 380)]],
}


def segment_quad(p, q, half_width, slant):
    (x0, y0), (x1, y1) = p, q
    dx, dy = x1 - x0, y1 - y0
    length = math.hypot(dx, dy)
    nx, ny = -dy / length * half_width, dx / length * half_width
    # Extend each end by half a width so joints overlap.
    ex, ey = dx / length * half_width, dy / length * half_width
    corners = [
        (x0 - ex + nx, y0 - ey + ny),
        (x1 + ex + nx, y1 + ey + ny),
        (x1 + ex - nx, y1 + ey - ny),
        (x0 - ex - nx, y0 - ey - ny),
    ]
    corners = [(x + slant * y, y) for x, y in corners]
    # TrueType outer contours are clockwise.
    area = sum(a[0] * b[1] - b[0] * a[1] for a, b in zip(corners, corners[1:] + corners[:1]))
    if area > 0:
        corners.reverse()
    return [(round(x), round(y)) for x, y in corners]


def draw_glyph(strokes, half_width, slant):
    pen = TTGlyphPen(None)
    for line in strokes:
        for p, q in zip(line, line[1:]):
            quad = segment_quad(p, q, half_width, slant)
            pen.moveTo(quad[0])
            for pt in quad[1:]:
                pen.lineTo(pt)
            pen.closePath()
    return pen.glyph()


def build(path, family, half_width, slant):
    order = [".notdef", "space"] + [f"uni{cp:04X}" for cp in SKELETONS]
    fb = FontBuilder(UPM, isTTF=True)
    fb.setupGlyphOrder(order)
    cmap = {0x20: "space"}
    cmap.update({cp: f"uni{cp:04X}" for cp in SKELETONS})
    fb.setupCharacterMap(cmap)

    glyphs = {".notdef": draw_glyph([[(100, 0), (100, 700)]], 40, 0.0), "space": TTGlyphPen(None).glyph()}
    for cp, strokes in SKELETONS.items():
        glyphs[f"uni{cp:04X}"] = draw_glyph(strokes, half_width, slant)
    fb.setupGlyf(glyphs)
    fb.setupHorizontalMetrics({name: (UPM, 0) for name in order})
    fb.setupHorizontalHeader(ascent=880, descent=-120)
    fb.setupNameTable({"familyName": family, "styleName": "Regular"})
    fb.setupOS2(sTypoAscender=880, sTypoDescender=-120, usWinAscent=880, usWinDescent=120)
    fb.setupPost()
    fb.save(str(path))


def coverage_ink_fraction(path, cp, size=128):
    """Share of pixels more than half covered by the outline, placed the way
    the library places glyphs: bounding box scaled to 90% of the canvas along
    its longer side and centred. Coverage is exact polygon area, so this is
    independent of any scanline rasterizer."""
    try:
        from fontTools.pens.recordingPen import RecordingPen
        from fontTools.ttLib import TTFont
        from shapely.geometry import Polygon, box
        from shapely.ops import unary_union
    except ImportError:
        return None
    font = TTFont(str(path))
    pen = RecordingPen()
    font.getGlyphSet()[font.getBestCmap()[cp]].draw(pen)
    polygons, points = [], []
    for op, args in pen.value:
        if op == "moveTo":
            points = [args[0]]
        elif op == "lineTo":
            points.append(args[0])
        elif op in ("closePath", "endPath"):
            polygons.append(Polygon(points).buffer(0))
    glyph = unary_union(polygons)
    x0, y0, x1, y1 = glyph.bounds
    scale = 0.9 * size / max(x1 - x0, y1 - y0)
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    inked = 0
    for row in range(size):
        for col in range(size):
            cell = box(cx + (col - size / 2) / scale, cy - (row + 1 - size / 2) / scale,
                       cx + (col + 1 - size / 2) / scale, cy - (row - size / 2) / scale)
            if glyph.intersection(cell).area * scale * scale * 255 >= 127.5:
                inked += 1
    return inked / (size * size)


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent)
    out.mkdir(parents=True, exist_ok=True)
    build(out / "fixture_printed.ttf", "FixturePrinted", 45, 0.0)
    build(out / "fixture_handwritten.ttf", "FixtureHandwritten", 25, 0.18)
    for name in ("fixture_printed.ttf", "fixture_handwritten.ttf"):
        frac = coverage_ink_fraction(out / name, 0xAC00)
        print(f"{name}: U+AC00 ink fraction (exact-coverage cross-check) = {frac}")


if __name__ == "__main__":
    main()
