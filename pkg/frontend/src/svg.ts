/** Figure model to SVG text. */
import { Figure, Shape } from "./chart.js";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function round(v: number): string {
  return String(Math.round(v * 100) / 100);
}

function shapeSvg(s: Shape): string {
  switch (s.kind) {
    case "rect":
      return `<rect x="${round(s.x)}" y="${round(s.y)}" width="${round(s.w)}" height="${round(s.h)}" fill="${s.fill}"/>`;
    case "line": {
      const pts = s.points.map(([x, y]) => `${round(x)},${round(y)}`).join(" ");
      const dash = s.dash ? ` stroke-dasharray="${s.dash.join(",")}"` : "";
      return `<polyline points="${pts}" fill="none" stroke="${s.color}" stroke-width="${s.width}"${dash}/>`;
    }
    case "text": {
      const anchor = { start: "start", middle: "middle", end: "end" }[s.anchor];
      return (
        `<text x="${round(s.x)}" y="${round(s.y)}" font-family="Helvetica, Arial, sans-serif" ` +
        `font-size="${s.size}" fill="${s.color}" text-anchor="${anchor}">${esc(s.text)}</text>`
      );
    }
  }
}

export function toSvg(fig: Figure): string {
  const body = fig.shapes.map(shapeSvg).join("\n  ");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${fig.width}" height="${fig.height}" ` +
    `viewBox="0 0 ${fig.width} ${fig.height}">\n  ${body}\n</svg>\n`
  );
}
