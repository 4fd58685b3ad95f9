/** Display list -> standalone SVG document (no timestamps, fully stable). */

import { DisplayList, Primitive } from "./chart.js";

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function num(v: number): string {
  return Number(v.toFixed(2)).toString();
}

function render(p: Primitive): string {
  const opacity = "opacity" in p && p.opacity !== undefined ? ` opacity="${p.opacity}"` : "";
  switch (p.kind) {
    case "rect":
      return `<rect x="${num(p.x)}" y="${num(p.y)}" width="${num(p.w)}" height="${num(p.h)}" fill="${p.fill}"${opacity}/>`;
    case "line":
      return `<line x1="${num(p.x1)}" y1="${num(p.y1)}" x2="${num(p.x2)}" y2="${num(p.y2)}" stroke="${p.color}" stroke-width="${p.width}"${opacity}/>`;
    case "polyline": {
      const pts = p.points.map(([x, y]) => `${num(x)},${num(y)}`).join(" ");
      return `<polyline points="${pts}" fill="none" stroke="${p.color}" stroke-width="${p.width}"${opacity}/>`;
    }
    case "circle":
      return `<circle cx="${num(p.cx)}" cy="${num(p.cy)}" r="${num(p.r)}" fill="${p.fill}"${opacity}/>`;
    case "text":
      return `<text x="${num(p.x)}" y="${num(p.y)}" font-size="${p.size}" font-family="Helvetica, Arial, sans-serif" fill="${p.color}" text-anchor="${p.anchor}">${escapeXml(p.text)}</text>`;
  }
}

export function toSvg(list: DisplayList): string {
  const body = list.primitives.map(render).join("\n  ");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${list.width}" height="${list.height}" ` +
    `viewBox="0 0 ${list.width} ${list.height}">\n  ${body}\n</svg>\n`
  );
}
