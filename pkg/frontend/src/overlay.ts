/** Force grid overlay geometry. Grid node (i, j) is the center of cell
 * (row i, column j): pixel ((j + 0.5) * side / g, (i + 0.5) * side / g),
 * the same cell-center convention the simulation samples the field with.
 * Arrow length scales with vector magnitude; field components lie in
 * (-1, 1), so a unit component spans ARROW_SPAN of a cell. */

export interface Arrow {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

const ARROW_SPAN = 0.45;

export function fieldArrows(vectors: number[][][], side: number): Arrow[] {
  const g = vectors.length;
  const cell = side / g;
  const arrows: Arrow[] = [];
  for (let i = 0; i < g; i++) {
    for (let j = 0; j < g; j++) {
      const [fx, fy] = vectors[i][j];
      const x0 = (j + 0.5) * cell;
      const y0 = (i + 0.5) * cell;
      arrows.push({
        x0,
        y0,
        x1: x0 + fx * cell * ARROW_SPAN,
        y1: y0 + fy * cell * ARROW_SPAN,
      });
    }
  }
  return arrows;
}

/** Map an arena position to canvas pixels (y down, like the arena). */
export function toCanvas(x: number, y: number, arena: number, side: number): [number, number] {
  const scale = side / arena;
  return [x * scale, y * scale];
}
