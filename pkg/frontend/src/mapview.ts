/** SVG marker map: red target, blue neighbors.
 *
 * Coordinates project linearly into the view box over the padded bounding
 * box of all markers. A tile provider can supply a background image URL;
 * without one (the offline fixture mode used in tests) the map renders on a
 * plain grid, which keeps the whole UI free of network dependencies.
 */

export interface MapMarker {
  id: string;
  location: [number, number];
  kind: "target" | "neighbor";
}

export type TileProvider = (
  bbox: { south: number; west: number; north: number; east: number },
) => string | null;

const WIDTH = 600;
const HEIGHT = 420;
const SVG_NS = "http://www.w3.org/2000/svg";

export function renderMap(
  container: HTMLElement,
  markers: MapMarker[],
  tileProvider?: TileProvider,
): void {
  container.replaceChildren();
  if (markers.length === 0) return;

  const lats = markers.map((m) => m.location[0]);
  const lons = markers.map((m) => m.location[1]);
  const pad = 0.02;
  const south = Math.min(...lats) - pad;
  const north = Math.max(...lats) + pad;
  const west = Math.min(...lons) - pad;
  const east = Math.max(...lons) + pad;

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "map-canvas");

  const tileUrl = tileProvider?.({ south, west, north, east }) ?? null;
  if (tileUrl) {
    const image = document.createElementNS(SVG_NS, "image");
    image.setAttribute("href", tileUrl);
    image.setAttribute("width", String(WIDTH));
    image.setAttribute("height", String(HEIGHT));
    svg.append(image);
  } else {
    const grid = document.createElementNS(SVG_NS, "rect");
    grid.setAttribute("width", String(WIDTH));
    grid.setAttribute("height", String(HEIGHT));
    grid.setAttribute("class", "map-background");
    svg.append(grid);
  }

  const project = ([lat, lon]: [number, number]): [number, number] => [
    ((lon - west) / (east - west)) * WIDTH,
    HEIGHT - ((lat - south) / (north - south)) * HEIGHT,
  ];

  // neighbors first so the target always draws on top
  const ordered = [...markers].sort((a) => (a.kind === "target" ? 1 : -1));
  for (const marker of ordered) {
    const [x, y] = project(marker.location);
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", x.toFixed(1));
    circle.setAttribute("cy", y.toFixed(1));
    circle.setAttribute("r", marker.kind === "target" ? "9" : "6");
    circle.setAttribute("fill", marker.kind === "target" ? "#d62828" : "#1d6fd1");
    circle.setAttribute("class", `marker marker-${marker.kind}`);
    circle.setAttribute("data-id", marker.id);
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = marker.id;
    circle.append(title);
    svg.append(circle);
  }

  container.append(svg);
}
