// Editing session for one image: a working copy of the boxes, a selection,
// and an undo/redo stack of box-list snapshots. The session is pure state —
// no DOM, no network — so the whole editing contract is unit-testable.
//
// Mutations happen between beginEdit() and commitEdit(): beginEdit captures
// the pre-state, commitEdit pushes it onto the undo stack only if the boxes
// actually changed. One pointer gesture (a whole drag) is one undo step.

import { Box, Handle, ReviewRecord, boxesEqual, cloneBoxes, moveBox, rectToBox, resizeBox } from './model.js'

export class EditorSession {
  readonly record: ReviewRecord
  boxes: Box[]
  selected = -1
  private savedBoxes: Box[]
  private undoStack: Box[][] = []
  private redoStack: Box[][] = []
  private pending: Box[] | null = null

  constructor(record: ReviewRecord) {
    this.record = { ...record, boxes: cloneBoxes(record.boxes) }
    this.boxes = cloneBoxes(record.boxes)
    this.savedBoxes = cloneBoxes(record.boxes)
  }

  get imageId(): string {
    return this.record.image_id
  }

  get revision(): number {
    return this.record.revision
  }

  /** True iff the working boxes differ from the last fetched/saved state. */
  get dirty(): boolean {
    return !boxesEqual(this.boxes, this.savedBoxes)
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0
  }

  select(index: number): void {
    this.selected = index >= 0 && index < this.boxes.length ? index : -1
  }

  /** Capture the pre-edit state; no-op if an edit is already open. */
  beginEdit(): void {
    if (this.pending === null) this.pending = cloneBoxes(this.boxes)
  }

  /** Close the open edit, recording one undo step if anything changed. */
  commitEdit(): void {
    if (this.pending === null) return
    if (!boxesEqual(this.pending, this.boxes)) {
      this.undoStack.push(this.pending)
      this.redoStack = []
    }
    this.pending = null
  }

  private edit(mutate: () => void): void {
    const oneShot = this.pending === null
    if (oneShot) this.beginEdit()
    mutate()
    if (oneShot) this.commitEdit()
  }

  move(index: number, dx: number, dy: number): void {
    const box = this.boxes[index]
    if (!box) return
    this.edit(() => {
      this.boxes[index] = moveBox(box, dx, dy, this.record.width, this.record.height)
    })
  }

  resize(index: number, handle: Handle, dx: number, dy: number): void {
    const box = this.boxes[index]
    if (!box) return
    this.edit(() => {
      this.boxes[index] = resizeBox(box, handle, dx, dy, this.record.width, this.record.height)
    })
  }

  relabel(index: number, label: string): void {
    if (!this.boxes[index]) return
    this.edit(() => {
      this.boxes[index] = { ...this.boxes[index], label }
    })
  }

  remove(index: number): void {
    if (!this.boxes[index]) return
    this.edit(() => {
      this.boxes.splice(index, 1)
    })
    if (this.selected === index) this.selected = -1
    else if (this.selected > index) this.selected -= 1
  }

  create(label: string, x0: number, y0: number, x1: number, y1: number): number {
    this.edit(() => {
      this.boxes.push(rectToBox(label, x0, y0, x1, y1, this.record.width, this.record.height))
    })
    this.selected = this.boxes.length - 1
    return this.selected
  }

  undo(): void {
    const snapshot = this.undoStack.pop()
    if (!snapshot) return
    this.redoStack.push(cloneBoxes(this.boxes))
    this.boxes = snapshot
    this.selected = -1
  }

  redo(): void {
    const snapshot = this.redoStack.pop()
    if (!snapshot) return
    this.undoStack.push(cloneBoxes(this.boxes))
    this.boxes = snapshot
    this.selected = -1
  }

  /** Adopt the record returned by a successful save: dirty clears. */
  applySaved(record: ReviewRecord): void {
    this.record.revision = record.revision
    this.record.reviewed = record.reviewed
    this.savedBoxes = cloneBoxes(record.boxes)
    this.boxes = cloneBoxes(record.boxes)
  }

  /** Working boxes as a payload for PUT. */
  payload(): Box[] {
    return cloneBoxes(this.boxes)
  }
}
