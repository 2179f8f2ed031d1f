/** Figure model to PNG bytes: a small software rasterizer (lines via
 * stamped discs along Bresenham steps, text via the bundled bitmap
 * font) plus a minimal PNG encoder over node:zlib. */
import { deflateSync } from "node:zlib";

import { Figure, Shape } from "./chart.js";
import { FONT_HEIGHT, FONT_ROWS, FONT_START, FONT_WIDTH } from "./font.js";

const SCALE = 2; // supersample for crisp lines at figure coordinates

class Raster {
  readonly w: number;
  readonly h: number;
  readonly px: Uint8Array;

  constructor(w: number, h: number) {
    this.w = w;
    this.h = h;
    this.px = new Uint8Array(w * h * 3).fill(255);
  }

  set(x: number, y: number, rgb: [number, number, number]) {
    x = Math.round(x);
    y = Math.round(y);
    if (x < 0 || y < 0 || x >= this.w || y >= this.h) return;
    const i = (y * this.w + x) * 3;
    this.px[i] = rgb[0];
    this.px[i + 1] = rgb[1];
    this.px[i + 2] = rgb[2];
  }

  disc(cx: number, cy: number, r: number, rgb: [number, number, number]) {
    const ri = Math.max(0, Math.ceil(r));
    for (let dy = -ri; dy <= ri; dy++) {
      for (let dx = -ri; dx <= ri; dx++) {
        if (dx * dx + dy * dy <= r * r + 0.25) {
          this.set(cx + dx, cy + dy, rgb);
        }
      }
    }
  }

  line(x1: number, y1: number, x2: number, y2: number, width: number, rgb: [number, number, number]) {
    const steps = Math.max(Math.abs(x2 - x1), Math.abs(y2 - y1), 1);
    const r = Math.max(width / 2, 0.5);
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      this.disc(x1 + (x2 - x1) * t, y1 + (y2 - y1) * t, r, rgb);
    }
  }

  fillRect(x: number, y: number, w: number, h: number, rgb: [number, number, number]) {
    for (let yy = Math.max(0, Math.round(y)); yy < Math.min(this.h, Math.round(y + h)); yy++) {
      for (let xx = Math.max(0, Math.round(x)); xx < Math.min(this.w, Math.round(x + w)); xx++) {
        this.set(xx, yy, rgb);
      }
    }
  }

  text(x: number, y: number, s: string, size: number, rgb: [number, number, number], anchor: string) {
    const scale = Math.max(1, Math.round((size / 11) * (SCALE / 2) * 2));
    const textW = s.length * FONT_WIDTH * scale * 0.8;
    let originX = x;
    if (anchor === "middle") originX -= textW / 2;
    if (anchor === "end") originX -= textW;
    const originY = y - FONT_HEIGHT * scale * 0.75; // y is the baseline
    for (let ci = 0; ci < s.length; ci++) {
      const code = s.charCodeAt(ci);
      if (code < FONT_START || code >= FONT_START + FONT_ROWS.length / FONT_HEIGHT) continue;
      const base = (code - FONT_START) * FONT_HEIGHT;
      for (let row = 0; row < FONT_HEIGHT; row++) {
        const bits = FONT_ROWS[base + row];
        for (let col = 0; col < FONT_WIDTH; col++) {
          if (bits & (1 << col)) {
            this.fillRect(
              originX + (ci * FONT_WIDTH * 0.8 + col) * scale,
              originY + row * scale,
              scale,
              scale,
              rgb,
            );
          }
        }
      }
    }
  }
}

function parseColor(c: string): [number, number, number] {
  const hex = c.replace("#", "");
  const full = hex.length === 3 ? hex.split("").map((h) => h + h).join("") : hex;
  return [
    parseInt(full.slice(0, 2), 16),
    parseInt(full.slice(2, 4), 16),
    parseInt(full.slice(4, 6), 16),
  ];
}

function draw(raster: Raster, s: Shape) {
  switch (s.kind) {
    case "rect":
      raster.fillRect(s.x * SCALE, s.y * SCALE, s.w * SCALE, s.h * SCALE, parseColor(s.fill));
      return;
    case "line": {
      const rgb = parseColor(s.color);
      for (let i = 1; i < s.points.length; i++) {
        raster.line(
          s.points[i - 1][0] * SCALE,
          s.points[i - 1][1] * SCALE,
          s.points[i][0] * SCALE,
          s.points[i][1] * SCALE,
          s.width * SCALE,
          rgb,
        );
      }
      return;
    }
    case "text":
      raster.text(s.x * SCALE, s.y * SCALE, s.text, s.size, parseColor(s.color), s.anchor);
      return;
  }
}

// ----------------------------- PNG encoding ----------------------------- //

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Uint8Array): number {
  let c = 0xffffffff;
  for (const b of buf) {
    c = CRC_TABLE[(c ^ b) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Uint8Array): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(data.length, 0);
  head.write(type, 4, "ascii");
  const body = Buffer.concat([head.subarray(4), data]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(body), 0);
  return Buffer.concat([head, data, crc]);
}

export function toPng(fig: Figure): Buffer {
  const raster = new Raster(fig.width * SCALE, fig.height * SCALE);
  for (const s of fig.shapes) {
    draw(raster, s);
  }
  const { w, h, px } = raster;
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(w, 0);
  ihdr.writeUInt32BE(h, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // truecolor
  const scanlines = Buffer.alloc(h * (w * 3 + 1));
  for (let y = 0; y < h; y++) {
    scanlines[y * (w * 3 + 1)] = 0; // filter: none
    scanlines.set(px.subarray(y * w * 3, (y + 1) * w * 3), y * (w * 3 + 1) + 1);
  }
  const idat = deflateSync(scanlines, { level: 6 });
  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", idat),
    chunk("IEND", new Uint8Array(0)),
  ]);
}
