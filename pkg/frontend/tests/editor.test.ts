import { describe, expect, it } from 'vitest'

import { EditorSession } from '../src/editor.js'
import { Box, ReviewRecord, boxesEqual, cloneBoxes, moveBox, rectToBox, resizeBox } from '../src/model.js'

function record(boxes: Box[], width = 100, height = 80): ReviewRecord {
  return { image_id: 'img_0', width, height, boxes, reviewed: false, revision: 0 }
}

const BOX: Box = { label: 'AMBEL_week_8', xmin: 10, ymin: 10, xmax: 50, ymax: 40 }

describe('box geometry', () => {
  it('moves clamp to the image bounds', () => {
    const moved = moveBox(BOX, 1000, 0, 100, 80)
    expect(moved).toMatchObject({ xmin: 59, xmax: 99, ymin: 10, ymax: 40 })
    const up = moveBox(BOX, 0, -1000, 100, 80)
    expect(up).toMatchObject({ ymin: 0, ymax: 30 })
  })

  it('resizing the east edge past the border clamps to width-1', () => {
    const resized = resizeBox(BOX, 'e', 500, 0, 100, 80)
    expect(resized.xmax).toBe(99)
    expect(resized.xmin).toBe(10)
  })

  it('resizing an edge past its opposite edge degrades to a thin box', () => {
    const resized = resizeBox(BOX, 'w', 500, 0, 100, 80)
    expect(resized.xmin).toBe(resized.xmax)
  })

  it('corner handles move both axes', () => {
    const resized = resizeBox(BOX, 'se', 5, 7, 100, 80)
    expect(resized).toMatchObject({ xmax: 55, ymax: 47, xmin: 10, ymin: 10 })
  })

  it('created rectangles normalize inverted corners and clamp', () => {
    const box = rectToBox('X', 90, 70, -10, -5, 100, 80)
    expect(box).toMatchObject({ xmin: 0, ymin: 0, xmax: 90, ymax: 70 })
  })
})

describe('editor session', () => {
  it('starts clean and flags dirty only on real changes', () => {
    const session = new EditorSession(record([BOX]))
    expect(session.dirty).toBe(false)
    session.move(0, 0, 0)
    expect(session.dirty).toBe(false) // no-op move
    session.move(0, 5, 0)
    expect(session.dirty).toBe(true)
  })

  it('undo restores exactly the previous snapshot', () => {
    const session = new EditorSession(record([BOX]))
    const before = cloneBoxes(session.boxes)
    session.move(0, 5, 3)
    session.resize(0, 'e', 4, 0)
    session.undo()
    session.undo()
    expect(boxesEqual(session.boxes, before)).toBe(true)
    expect(session.dirty).toBe(false)
    expect(session.canUndo).toBe(false)
  })

  it('redo round-trips and a new edit clears the redo stack', () => {
    const session = new EditorSession(record([BOX]))
    session.move(0, 5, 0)
    const after = cloneBoxes(session.boxes)
    session.undo()
    session.redo()
    expect(boxesEqual(session.boxes, after)).toBe(true)
    session.undo()
    session.relabel(0, 'ABUTH_week_1')
    expect(session.canRedo).toBe(false)
  })

  it('one gesture equals one undo step', () => {
    const session = new EditorSession(record([BOX]))
    session.beginEdit()
    session.move(0, 2, 0)  // moves inside a gesture are incremental
    session.move(0, 4, 0)
    session.move(0, 6, 0)
    session.commitEdit()
    expect(session.boxes[0].xmin).toBe(22)
    session.undo()
    expect(session.boxes[0].xmin).toBe(10)
    expect(session.canUndo).toBe(false)
  })

  it('delete and create adjust the selection', () => {
    const other: Box = { ...BOX, xmin: 60, xmax: 80 }
    const session = new EditorSession(record([BOX, other]))
    session.select(1)
    session.remove(0)
    expect(session.selected).toBe(0)
    const index = session.create('CHEAL_week_2', 5, 5, 20, 25)
    expect(index).toBe(session.boxes.length - 1)
    expect(session.boxes[index]).toMatchObject({ xmin: 5, ymin: 5, xmax: 20, ymax: 25 })
  })

  it('applySaved clears dirty and adopts the new revision', () => {
    const session = new EditorSession(record([BOX]))
    session.move(0, 5, 0)
    const saved = {
      ...record(session.payload()),
      revision: 1,
    }
    session.applySaved(saved)
    expect(session.dirty).toBe(false)
    expect(session.revision).toBe(1)
  })

  it('random edit sequences survive undo-all / redo-all round trips', () => {
    // deterministic LCG so failures reproduce
    let state = 20240810
    const rand = () => {
      state = (state * 1103515245 + 12345) & 0x7fffffff
      return state / 0x7fffffff
    }
    const session = new EditorSession(record([BOX]))
    const snapshots: Box[][] = [cloneBoxes(session.boxes)]
    for (let step = 0; step < 60; step++) {
      const op = Math.floor(rand() * 4)
      const index = Math.floor(rand() * Math.max(1, session.boxes.length))
      if (op === 0 && session.boxes.length) {
        session.move(index, Math.floor(rand() * 21) - 10, Math.floor(rand() * 21) - 10)
      } else if (op === 1 && session.boxes.length) {
        const handles = ['n', 's', 'e', 'w', 'ne', 'nw', 'se', 'sw'] as const
        session.resize(index, handles[Math.floor(rand() * 8)], Math.floor(rand() * 11) - 5, Math.floor(rand() * 11) - 5)
      } else if (op === 2 && session.boxes.length > 1) {
        session.remove(index)
      } else {
        const x = Math.floor(rand() * 99)
        const y = Math.floor(rand() * 79)
        session.create('SETFA_week_3', x, y, x + Math.floor(rand() * 20), y + Math.floor(rand() * 20))
      }
      // fully-clamped edits are no-ops and create no undo step
      if (!boxesEqual(session.boxes, snapshots[snapshots.length - 1])) {
        snapshots.push(cloneBoxes(session.boxes))
      }
    }
    // every box always stayed inside the image
    for (const list of snapshots) {
      for (const b of list) {
        expect(b.xmin).toBeGreaterThanOrEqual(0)
        expect(b.ymin).toBeGreaterThanOrEqual(0)
        expect(b.xmax).toBeLessThanOrEqual(99)
        expect(b.ymax).toBeLessThanOrEqual(79)
        expect(b.xmin).toBeLessThanOrEqual(b.xmax)
        expect(b.ymin).toBeLessThanOrEqual(b.ymax)
      }
    }
    // undo all the way down, comparing against the recorded history
    for (let i = snapshots.length - 1; i > 0; i--) {
      expect(boxesEqual(session.boxes, snapshots[i])).toBe(true)
      session.undo()
    }
    expect(boxesEqual(session.boxes, snapshots[0])).toBe(true)
    // and redo back up
    for (let i = 1; i < snapshots.length; i++) {
      session.redo()
      expect(boxesEqual(session.boxes, snapshots[i])).toBe(true)
    }
    expect(session.dirty).toBe(true)
  })
})
