// Web-Mercator projection and viewport fitting for the canvas map.

export interface Viewport {
  width: number;
  height: number;
  scale: number;   // canvas px per mercator unit
  offsetX: number; // mercator origin of the top-left corner
  offsetY: number;
}

const EARTH_RADIUS_M = 6_371_000;

/** Project lon/lat (degrees) to mercator x/y; y grows downward. */
export function mercator(lon: number, lat: number): [number, number] {
  const x = (lon + 180) / 360;
  const clamped = Math.max(-85.05, Math.min(85.05, lat));
  const rad = (clamped * Math.PI) / 180;
  const y = (1 - Math.log(Math.tan(rad) + 1 / Math.cos(rad)) / Math.PI) / 2;
  return [x, y];
}

export function fitViewport(
  points: Array<[number, number]>,
  width: number,
  height: number,
  paddingPx = 24,
): Viewport {
  if (points.length === 0) {
    return { width, height, scale: 1, offsetX: 0, offsetY: 0 };
  }
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  for (const [lon, lat] of points) {
    const [x, y] = mercator(lon, lat);
    minX = Math.min(minX, x); maxX = Math.max(maxX, x);
    minY = Math.min(minY, y); maxY = Math.max(maxY, y);
  }
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const scale = Math.min(
    (width - 2 * paddingPx) / spanX,
    (height - 2 * paddingPx) / spanY,
  );
  const cx = (minX + maxX) / 2;
  const cy = (minY + maxY) / 2;
  return {
    width,
    height,
    scale,
    offsetX: cx - width / 2 / scale,
    offsetY: cy - height / 2 / scale,
  };
}

export function toPixel(view: Viewport, lon: number, lat: number): [number, number] {
  const [x, y] = mercator(lon, lat);
  return [(x - view.offsetX) * view.scale, (y - view.offsetY) * view.scale];
}

/** Ground meters covered by one canvas pixel at the viewport's latitude. */
export function metersPerPixel(view: Viewport, lat: number): number {
  const circumference = 2 * Math.PI * EARTH_RADIUS_M * Math.cos((lat * Math.PI) / 180);
  return circumference / view.scale;
}

/** A round-number scale bar no wider than maxPx. */
export function scaleBar(view: Viewport, lat: number, maxPx = 120): { meters: number; px: number } {
  const mpp = metersPerPixel(view, lat);
  const targetMeters = mpp * maxPx;
  const steps = [10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000, 20000, 50000];
  let meters = steps[0];
  for (const s of steps) {
    if (s <= targetMeters) meters = s;
  }
  return { meters, px: meters / mpp };
}
