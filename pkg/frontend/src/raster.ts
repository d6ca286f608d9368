/** Minimal deterministic RGBA rasterizer: rectangles, polygons (even-odd
 * scanline), lines, circles, and bitmap text. Everything is plain float
 * arithmetic on a byte buffer, so output is identical for identical input. */

import { GLYPHS, GLYPH_HEIGHT, GLYPH_WIDTH } from "./font.js";

export type Color = [number, number, number, number];

export const BLACK: Color = [20, 20, 25, 255];
export const WHITE: Color = [255, 255, 255, 255];
export const GREY: Color = [140, 140, 150, 255];
export const LIGHT_GREY: Color = [225, 225, 230, 255];

export class Canvas {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8ClampedArray;

  constructor(width: number, height: number, background: Color = WHITE) {
    this.width = width;
    this.height = height;
    this.data = new Uint8ClampedArray(width * height * 4);
    this.fill(background);
  }

  fill(color: Color): void {
    for (let i = 0; i < this.width * this.height; i++) {
      this.data.set(color, i * 4);
    }
  }

  setPixel(x: number, y: number, color: Color): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 4;
    const a = color[3] / 255;
    if (a >= 1) {
      this.data.set(color, i);
      return;
    }
    for (let c = 0; c < 3; c++) {
      this.data[i + c] = Math.round(color[c] * a + this.data[i + c] * (1 - a));
    }
    this.data[i + 3] = 255;
  }

  fillRect(x: number, y: number, w: number, h: number, color: Color): void {
    const x0 = Math.max(0, Math.round(x));
    const y0 = Math.max(0, Math.round(y));
    const x1 = Math.min(this.width, Math.round(x + w));
    const y1 = Math.min(this.height, Math.round(y + h));
    for (let yy = y0; yy < y1; yy++) {
      for (let xx = x0; xx < x1; xx++) this.setPixel(xx, yy, color);
    }
  }

  /** Even-odd scanline polygon fill. */
  fillPolygon(points: Array<[number, number]>, color: Color): void {
    if (points.length < 3) return;
    const ys = points.map((p) => p[1]);
    const y0 = Math.max(0, Math.floor(Math.min(...ys)));
    const y1 = Math.min(this.height - 1, Math.ceil(Math.max(...ys)));
    for (let y = y0; y <= y1; y++) {
      const scan = y + 0.5;
      const xs: number[] = [];
      for (let i = 0; i < points.length; i++) {
        const [ax, ay] = points[i];
        const [bx, by] = points[(i + 1) % points.length];
        if (ay === by) continue;
        if ((scan >= ay && scan < by) || (scan >= by && scan < ay)) {
          xs.push(ax + ((scan - ay) * (bx - ax)) / (by - ay));
        }
      }
      xs.sort((a, b) => a - b);
      for (let k = 0; k + 1 < xs.length; k += 2) {
        const xa = Math.max(0, Math.round(xs[k]));
        const xb = Math.min(this.width - 1, Math.round(xs[k + 1]));
        for (let x = xa; x <= xb; x++) this.setPixel(x, y, color);
      }
    }
  }

  line(x0: number, y0: number, x1: number, y1: number, color: Color): void {
    let ix0 = Math.round(x0);
    let iy0 = Math.round(y0);
    const ix1 = Math.round(x1);
    const iy1 = Math.round(y1);
    const dx = Math.abs(ix1 - ix0);
    const dy = -Math.abs(iy1 - iy0);
    const sx = ix0 < ix1 ? 1 : -1;
    const sy = iy0 < iy1 ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      this.setPixel(ix0, iy0, color);
      if (ix0 === ix1 && iy0 === iy1) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        ix0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        iy0 += sy;
      }
    }
  }

  fillCircle(cx: number, cy: number, r: number, color: Color): void {
    for (let y = Math.floor(cy - r); y <= Math.ceil(cy + r); y++) {
      for (let x = Math.floor(cx - r); x <= Math.ceil(cx + r); x++) {
        const d = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        if (d <= r * r) this.setPixel(x, y, color);
      }
    }
  }

  strokeCircle(cx: number, cy: number, r: number, color: Color): void {
    for (let y = Math.floor(cy - r - 1); y <= Math.ceil(cy + r + 1); y++) {
      for (let x = Math.floor(cx - r - 1); x <= Math.ceil(cx + r + 1); x++) {
        const d = Math.sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy));
        if (Math.abs(d - r) <= 0.6) this.setPixel(x, y, color);
      }
    }
  }

  textWidth(text: string): number {
    return text.length * GLYPH_WIDTH;
  }

  /** Draw bitmap text with (x, y) the top-left corner. */
  text(x: number, y: number, s: string, color: Color): void {
    let cx = Math.round(x);
    const cy = Math.round(y);
    for (const ch of s) {
      const glyph = GLYPHS[ch] ?? GLYPHS["?"];
      for (let row = 0; row < GLYPH_HEIGHT; row++) {
        const mask = glyph[row] ?? 0;
        for (let col = 0; col < GLYPH_WIDTH; col++) {
          if (mask & (1 << col)) this.setPixel(cx + col, cy + row, color);
        }
      }
      cx += GLYPH_WIDTH;
    }
  }

  /** Draw text rotated 90 degrees counter-clockwise (for the y-axis label). */
  textVertical(x: number, y: number, s: string, color: Color): void {
    const cx = Math.round(x);
    let cy = Math.round(y);
    for (const ch of s) {
      const glyph = GLYPHS[ch] ?? GLYPHS["?"];
      for (let row = 0; row < GLYPH_HEIGHT; row++) {
        const mask = glyph[row] ?? 0;
        for (let col = 0; col < GLYPH_WIDTH; col++) {
          if (mask & (1 << col)) this.setPixel(cx + row, cy - col, color);
        }
      }
      cy -= GLYPH_WIDTH;
    }
  }
}
