// Canvas rendering and pointer handling. The viewport owns a single
// scale/offset transform; all box math stays in integer image pixels and
// only gets projected at draw time, so zooming never perturbs the model.

import { EditorSession } from './editor.js'
import { Box, Handle } from './model.js'

const HANDLE_PX = 7
const COLORS = { box: '#27ae60', selected: '#f1c40f', label: '#ffffff' }

export interface ViewTransform {
  scale: number
  offsetX: number
  offsetY: number
}

export function fitTransform(imgW: number, imgH: number, viewW: number, viewH: number): ViewTransform {
  const scale = Math.min(viewW / imgW, viewH / imgH) || 1
  return {
    scale,
    offsetX: (viewW - imgW * scale) / 2,
    offsetY: (viewH - imgH * scale) / 2,
  }
}

export function toImage(t: ViewTransform, viewX: number, viewY: number): { x: number; y: number } {
  return { x: (viewX - t.offsetX) / t.scale, y: (viewY - t.offsetY) / t.scale }
}

export function zoomAt(t: ViewTransform, factor: number, viewX: number, viewY: number): ViewTransform {
  const scale = Math.min(32, Math.max(0.05, t.scale * factor))
  const pivot = toImage(t, viewX, viewY)
  return {
    scale,
    offsetX: viewX - pivot.x * scale,
    offsetY: viewY - pivot.y * scale,
  }
}

type DragMode =
  | { kind: 'none' }
  | { kind: 'move'; index: number; startX: number; startY: number; base: Box }
  | { kind: 'resize'; index: number; handle: Handle; startX: number; startY: number; base: Box }
  | { kind: 'create'; startX: number; startY: number }
  | { kind: 'pan'; startX: number; startY: number; base: ViewTransform }

export interface HitResult {
  index: number
  handle: Handle | null
}

/** Hit-test a point (image coordinates) against boxes; handles win. */
export function hitTest(boxes: Box[], x: number, y: number, tolerance: number): HitResult | null {
  for (let i = boxes.length - 1; i >= 0; i--) {
    const b = boxes[i]
    const nearW = Math.abs(x - b.xmin) <= tolerance
    const nearE = Math.abs(x - (b.xmax + 1)) <= tolerance
    const nearN = Math.abs(y - b.ymin) <= tolerance
    const nearS = Math.abs(y - (b.ymax + 1)) <= tolerance
    const insideX = x >= b.xmin - tolerance && x <= b.xmax + 1 + tolerance
    const insideY = y >= b.ymin - tolerance && y <= b.ymax + 1 + tolerance
    if (insideX && insideY) {
      let handle = ''
      if (nearN) handle += 'n'
      else if (nearS) handle += 's'
      if (nearW) handle += 'w'
      else if (nearE) handle += 'e'
      if (handle) return { index: i, handle: handle as Handle }
      if (x >= b.xmin && x <= b.xmax + 1 && y >= b.ymin && y <= b.ymax + 1) {
        return { index: i, handle: null }
      }
    }
  }
  return null
}

export class CanvasView {
  private ctx: CanvasRenderingContext2D
  private image: HTMLImageElement | null = null
  private transform: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 }
  private drag: DragMode = { kind: 'none' }
  newBoxMode = false
  onChange: () => void = () => {}
  onSelect: (index: number) => void = () => {}
  onCursor: (x: number, y: number) => void = () => {}

  constructor(
    private canvas: HTMLCanvasElement,
    private session: () => EditorSession | null,
    private currentLabel: () => string,
  ) {
    this.ctx = canvas.getContext('2d')!
    canvas.addEventListener('pointerdown', (e) => this.pointerDown(e))
    canvas.addEventListener('pointermove', (e) => this.pointerMove(e))
    canvas.addEventListener('pointerup', (e) => this.pointerUp(e))
    canvas.addEventListener('wheel', (e) => this.wheel(e), { passive: false })
  }

  setImage(image: HTMLImageElement | null): void {
    this.image = image
    this.fit()
  }

  fit(): void {
    const s = this.session()
    if (s) {
      this.transform = fitTransform(s.record.width, s.record.height, this.canvas.width, this.canvas.height)
    }
    this.draw()
  }

  zoom(factor: number): void {
    this.transform = zoomAt(this.transform, factor, this.canvas.width / 2, this.canvas.height / 2)
    this.draw()
  }

  private eventPoint(e: PointerEvent | WheelEvent): { vx: number; vy: number; x: number; y: number } {
    const rect = this.canvas.getBoundingClientRect()
    const vx = ((e.clientX - rect.left) / rect.width) * this.canvas.width
    const vy = ((e.clientY - rect.top) / rect.height) * this.canvas.height
    const p = toImage(this.transform, vx, vy)
    return { vx, vy, x: p.x, y: p.y }
  }

  private wheel(e: WheelEvent): void {
    e.preventDefault()
    const { vx, vy } = this.eventPoint(e)
    this.transform = zoomAt(this.transform, e.deltaY < 0 ? 1.15 : 1 / 1.15, vx, vy)
    this.draw()
  }

  private pointerDown(e: PointerEvent): void {
    const s = this.session()
    if (!s) return
    this.canvas.setPointerCapture(e.pointerId)
    const { vx, vy, x, y } = this.eventPoint(e)
    if (e.button === 1 || e.shiftKey) {
      this.drag = { kind: 'pan', startX: vx, startY: vy, base: { ...this.transform } }
      return
    }
    if (this.newBoxMode) {
      this.drag = { kind: 'create', startX: x, startY: y }
      return
    }
    const hit = hitTest(s.boxes, x, y, HANDLE_PX / this.transform.scale)
    if (!hit) {
      s.select(-1)
      this.onSelect(-1)
      this.draw()
      return
    }
    s.select(hit.index)
    this.onSelect(hit.index)
    s.beginEdit()
    const base = { ...s.boxes[hit.index] }
    this.drag = hit.handle
      ? { kind: 'resize', index: hit.index, handle: hit.handle, startX: x, startY: y, base }
      : { kind: 'move', index: hit.index, startX: x, startY: y, base }
    this.draw()
  }

  private pointerMove(e: PointerEvent): void {
    const s = this.session()
    if (!s) return
    const { vx, vy, x, y } = this.eventPoint(e)
    this.onCursor(Math.floor(x), Math.floor(y))
    const drag = this.drag
    if (drag.kind === 'none') return
    if (drag.kind === 'pan') {
      this.transform = {
        scale: drag.base.scale,
        offsetX: drag.base.offsetX + (vx - drag.startX),
        offsetY: drag.base.offsetY + (vy - drag.startY),
      }
    } else if (drag.kind === 'move') {
      s.boxes[drag.index] = drag.base
      s.move(drag.index, x - drag.startX, y - drag.startY)
    } else if (drag.kind === 'resize') {
      s.boxes[drag.index] = drag.base
      s.resize(drag.index, drag.handle, x - drag.startX, y - drag.startY)
    }
    this.draw(drag.kind === 'create' ? { x0: drag.startX, y0: drag.startY, x1: x, y1: y } : undefined)
  }

  private pointerUp(e: PointerEvent): void {
    const s = this.session()
    const drag = this.drag
    this.drag = { kind: 'none' }
    if (!s) return
    if (drag.kind === 'create') {
      const { x, y } = this.eventPoint(e)
      if (Math.abs(x - drag.startX) >= 1 && Math.abs(y - drag.startY) >= 1) {
        s.create(this.currentLabel(), drag.startX, drag.startY, x, y)
        this.onSelect(s.selected)
      }
      this.newBoxMode = false
    } else if (drag.kind === 'move' || drag.kind === 'resize') {
      s.commitEdit()
    }
    this.onChange()
    this.draw()
  }

  draw(rubber?: { x0: number; y0: number; x1: number; y1: number }): void {
    const { ctx, canvas } = this
    ctx.fillStyle = '#1b1f23'
    ctx.fillRect(0, 0, canvas.width, canvas.height)
    const s = this.session()
    if (!s) return
    const t = this.transform
    ctx.save()
    ctx.translate(t.offsetX, t.offsetY)
    ctx.scale(t.scale, t.scale)
    if (this.image) {
      ctx.imageSmoothingEnabled = t.scale < 3
      ctx.drawImage(this.image, 0, 0)
    } else {
      ctx.fillStyle = '#2c3338'
      ctx.fillRect(0, 0, s.record.width, s.record.height)
    }
    ctx.restore()

    s.boxes.forEach((b, i) => {
      const x = t.offsetX + b.xmin * t.scale
      const y = t.offsetY + b.ymin * t.scale
      const w = (b.xmax - b.xmin + 1) * t.scale
      const h = (b.ymax - b.ymin + 1) * t.scale
      ctx.lineWidth = i === s.selected ? 2.5 : 1.5
      ctx.strokeStyle = i === s.selected ? COLORS.selected : COLORS.box
      ctx.strokeRect(x, y, w, h)
      const text = ` ${b.label} `
      ctx.font = '12px system-ui, sans-serif'
      const tw = ctx.measureText(text).width
      ctx.fillStyle = ctx.strokeStyle
      ctx.fillRect(x, y - 16, tw, 16)
      ctx.fillStyle = '#10271a'
      ctx.fillText(text, x, y - 4)
      if (i === s.selected) {
        ctx.fillStyle = COLORS.selected
        for (const hx of [x, x + w]) {
          for (const hy of [y, y + h]) {
            ctx.fillRect(hx - 3, hy - 3, 6, 6)
          }
        }
      }
    })

    if (rubber) {
      const x = t.offsetX + Math.min(rubber.x0, rubber.x1) * t.scale
      const y = t.offsetY + Math.min(rubber.y0, rubber.y1) * t.scale
      ctx.setLineDash([6, 4])
      ctx.strokeStyle = COLORS.selected
      ctx.strokeRect(
        x,
        y,
        Math.abs(rubber.x1 - rubber.x0) * t.scale,
        Math.abs(rubber.y1 - rubber.y0) * t.scale,
      )
      ctx.setLineDash([])
    }
  }
}
