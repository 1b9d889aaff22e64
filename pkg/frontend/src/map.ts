// Canvas painter for the render model. Optionally blits slippy tiles from a
// configurable provider underneath; with no provider (or offline) it paints
// a plain background with a scale bar, which is all the plan view needs.

import { mercator, scaleBar, Viewport } from "./geo.js";
import type { RenderModel } from "./render.js";

export interface TileConfig {
  urlTemplate: string; // e.g. https://tile.example.org/{z}/{x}/{y}.png
  zoom: number;
}

function drawTiles(ctx: CanvasRenderingContext2D, view: Viewport,
                   tiles: TileConfig): void {
  const n = 2 ** tiles.zoom;
  const topLeftX = Math.floor(view.offsetX * n);
  const topLeftY = Math.floor(view.offsetY * n);
  const tilesAcross = Math.ceil(view.width / (view.scale / n)) + 1;
  const tilesDown = Math.ceil(view.height / (view.scale / n)) + 1;
  for (let dx = 0; dx <= tilesAcross; dx++) {
    for (let dy = 0; dy <= tilesDown; dy++) {
      const tx = topLeftX + dx;
      const ty = topLeftY + dy;
      if (tx < 0 || ty < 0 || tx >= n || ty >= n) continue;
      const img = new Image();
      img.crossOrigin = "anonymous";
      const px = (tx / n - view.offsetX) * view.scale;
      const py = (ty / n - view.offsetY) * view.scale;
      const size = view.scale / n;
      img.onload = () => ctx.drawImage(img, px, py, size, size);
      img.onerror = () => undefined; // offline: keep the plain background
      img.src = tiles.urlTemplate
        .replace("{z}", String(tiles.zoom))
        .replace("{x}", String(tx))
        .replace("{y}", String(ty));
    }
  }
}

export function paint(canvas: HTMLCanvasElement, model: RenderModel,
                      refLat: number, tiles: TileConfig | null): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  canvas.width = model.viewport.width;
  canvas.height = model.viewport.height;
  ctx.fillStyle = "#f4f1ea";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (tiles) drawTiles(ctx, model.viewport, tiles);

  for (const line of model.polylines) {
    ctx.strokeStyle = line.color;
    ctx.lineWidth = 2.5;
    ctx.beginPath();
    line.px.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
  }
  for (const m of model.markers) {
    const [x, y] = m.px;
    ctx.beginPath();
    ctx.arc(x, y, m.alert ? 6 : 4, 0, 2 * Math.PI);
    ctx.fillStyle = m.color;
    ctx.fill();
    if (m.smallOnly) {
      ctx.strokeStyle = "#222";
      ctx.lineWidth = 1.5;
      ctx.stroke();
    }
  }

  const bar = scaleBar(model.viewport, refLat);
  ctx.strokeStyle = "#222";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(16, canvas.height - 16);
  ctx.lineTo(16 + bar.px, canvas.height - 16);
  ctx.stroke();
  ctx.fillStyle = "#222";
  ctx.font = "12px sans-serif";
  const label = bar.meters >= 1000 ? `${bar.meters / 1000} km` : `${bar.meters} m`;
  ctx.fillText(label, 16, canvas.height - 22);
}

export { mercator };
