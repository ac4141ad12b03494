// Shared wire/model types for the review editor. Coordinates are integer
// image pixels, 0-based, inclusive on all edges — exactly what the API
// stores. Zoom and panning live purely in the view layer.

export interface Box {
  label: string
  xmin: number
  ymin: number
  xmax: number
  ymax: number
}

export interface ReviewRecord {
  image_id: string
  width: number
  height: number
  boxes: Box[]
  reviewed: boolean
  revision: number
}

export interface QueueItem {
  image_id: string
  reviewed: boolean
  box_count: number
}

export interface SpeciesInfo {
  code: string
  common_name: string
  weeks: number[]
}

export function cloneBoxes(boxes: Box[]): Box[] {
  return boxes.map((b) => ({ ...b }))
}

export function boxesEqual(a: Box[], b: Box[]): boolean {
  if (a.length !== b.length) return false
  return a.every(
    (box, i) =>
      box.label === b[i].label &&
      box.xmin === b[i].xmin &&
      box.ymin === b[i].ymin &&
      box.xmax === b[i].xmax &&
      box.ymax === b[i].ymax,
  )
}

function clampInt(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, Math.round(value)))
}

/** Shift a box by (dx, dy), clamped so it stays fully inside the image. */
export function moveBox(box: Box, dx: number, dy: number, width: number, height: number): Box {
  const w = box.xmax - box.xmin
  const h = box.ymax - box.ymin
  const xmin = clampInt(box.xmin + dx, 0, width - 1 - w)
  const ymin = clampInt(box.ymin + dy, 0, height - 1 - h)
  return { ...box, xmin, ymin, xmax: xmin + w, ymax: ymin + h }
}

export type Handle = 'n' | 's' | 'e' | 'w' | 'ne' | 'nw' | 'se' | 'sw'

/**
 * Drag one edge/corner. Coordinates clamp to the image and to the
 * opposite edge, so invalid drags degrade to a 1px-thin box instead of
 * being rejected.
 */
export function resizeBox(
  box: Box,
  handle: Handle,
  dx: number,
  dy: number,
  width: number,
  height: number,
): Box {
  let { xmin, ymin, xmax, ymax } = box
  if (handle.includes('w')) xmin = clampInt(xmin + dx, 0, xmax)
  if (handle.includes('e')) xmax = clampInt(xmax + dx, xmin, width - 1)
  if (handle.includes('n')) ymin = clampInt(ymin + dy, 0, ymax)
  if (handle.includes('s')) ymax = clampInt(ymax + dy, ymin, height - 1)
  return { ...box, xmin, ymin, xmax, ymax }
}

/** Normalize a dragged rectangle (any corner order) into a clamped box. */
export function rectToBox(
  label: string,
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  width: number,
  height: number,
): Box {
  const xmin = clampInt(Math.min(x0, x1), 0, width - 1)
  const xmax = clampInt(Math.max(x0, x1), 0, width - 1)
  const ymin = clampInt(Math.min(y0, y1), 0, height - 1)
  const ymax = clampInt(Math.max(y0, y1), 0, height - 1)
  return { label, xmin, ymin, xmax, ymax }
}

/** All canonical labels of a taxonomy, species-major, weeks ascending. */
export function allLabels(species: SpeciesInfo[]): string[] {
  const labels: string[] = []
  for (const s of species) {
    for (const w of s.weeks) labels.push(`${s.code}_week_${w}`)
  }
  return labels
}
