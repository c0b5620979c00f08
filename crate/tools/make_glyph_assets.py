#!/usr/bin/env python3
"""Regenerate crates/scenemc/assets/glyphs.txt.

Renders A-Z and 0-9 from DejaVu Sans (bundled with matplotlib) with
anti-aliasing, softens edges with a small Gaussian so that bilinear
resampling stays accurate, tight-crops each glyph, adds a 4px zero margin so
no ink touches the bitmap border, and pads every master to at least 32x32.
Output records use the hex byte format documented in the asset header and
parsed by `scenemc::render2d::GlyphBank`.
"""

import os

import matplotlib
from PIL import Image, ImageDraw, ImageFilter, ImageFont

FONT = os.path.join(matplotlib.get_data_path(), "fonts", "ttf", "DejaVuSans.ttf")
CHARS = [chr(ord("A") + i) for i in range(26)] + [chr(ord("0") + i) for i in range(10)]
FONT_SIZE = 48
MIN_SIDE = 32
MARGIN = 4
SOFTEN = 0.8
OUT = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
    "crates",
    "scenemc",
    "assets",
    "glyphs.txt",
)


def render_char(font, ch):
    img = Image.new("L", (FONT_SIZE * 3, FONT_SIZE * 3), 0)
    draw = ImageDraw.Draw(img)
    draw.text((FONT_SIZE, FONT_SIZE), ch, fill=255, font=font)
    img = img.filter(ImageFilter.GaussianBlur(SOFTEN))
    bbox = img.getbbox()
    tight = img.crop(bbox)
    w = max(tight.width + 2 * MARGIN, MIN_SIDE)
    h = max(tight.height + 2 * MARGIN, MIN_SIDE)
    cell = Image.new("L", (w, h), 0)
    cell.paste(tight, ((w - tight.width) // 2, (h - tight.height) // 2))
    return cell


def hex_rows(cell):
    w, h = cell.size
    px = cell.load()
    return ["".join(f"{px[x, y]:02X}" for x in range(w)) for y in range(h)]


def main():
    font = ImageFont.truetype(FONT, FONT_SIZE)
    lines = [
        "# scenemc glyph bank: 36 grayscale master bitmaps, A-Z then 0-9.",
        "# Derived from DejaVu Sans (Bitstream Vera license) at 48px with",
        "# anti-aliasing and a 0.8px Gaussian soften, tight-cropped, given a 4px",
        "# zero margin and padded to at least 32x32.",
        "#",
        "# Record format:",
        "#   glyph <char> <width> <height>",
        "#   followed by <height> lines of row-major hex, two digits per pixel",
        "#   (00 = background, FF = full ink coverage).",
    ]
    for ch in CHARS:
        cell = render_char(font, ch)
        lines.append(f"glyph {ch} {cell.width} {cell.height}")
        lines.extend(hex_rows(cell))
    with open(OUT, "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"wrote {OUT} ({len(CHARS)} glyphs)")


if __name__ == "__main__":
    main()
