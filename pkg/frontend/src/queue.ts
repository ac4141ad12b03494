// Review queue: ordered image list, a cursor, and the unreviewed-only
// filter. Navigation works on the filtered view; the cursor sticks at the
// ends instead of wrapping so reviewers keep their bearings.

import { QueueItem } from './model.js'

export class ReviewQueue {
  items: QueueItem[]
  filterUnreviewed = false
  private cursor = 0

  constructor(items: QueueItem[]) {
    this.items = items.map((i) => ({ ...i }))
  }

  get current(): QueueItem | null {
    const view = this.visible()
    if (view.length === 0) return null
    if (this.cursor >= view.length) this.cursor = view.length - 1
    return view[this.cursor]
  }

  visible(): QueueItem[] {
    return this.filterUnreviewed ? this.items.filter((i) => !i.reviewed) : this.items
  }

  get position(): { index: number; total: number } {
    return { index: this.visible().length ? this.cursor + 1 : 0, total: this.visible().length }
  }

  get atFirst(): boolean {
    return this.cursor === 0
  }

  get atLast(): boolean {
    return this.cursor >= this.visible().length - 1
  }

  next(): QueueItem | null {
    if (!this.atLast) this.cursor += 1
    return this.current
  }

  prev(): QueueItem | null {
    if (!this.atFirst) this.cursor -= 1
    return this.current
  }

  jump(imageId: string): QueueItem | null {
    const view = this.visible()
    const index = view.findIndex((i) => i.image_id === imageId)
    if (index >= 0) this.cursor = index
    return this.current
  }

  setFilter(unreviewedOnly: boolean): QueueItem | null {
    const keep = this.current?.image_id
    this.filterUnreviewed = unreviewedOnly
    const view = this.visible()
    const index = keep ? view.findIndex((i) => i.image_id === keep) : -1
    this.cursor = index >= 0 ? index : 0
    return this.current
  }

  /**
   * Update an item's reviewed flag. With the unreviewed filter on, marking
   * the current image reviewed removes it from the view, which lands the
   * cursor on the next unreviewed image automatically.
   */
  markReviewed(imageId: string, reviewed: boolean): QueueItem | null {
    const wasCurrent = this.current?.image_id === imageId
    const item = this.items.find((i) => i.image_id === imageId)
    if (!item) return this.current
    if (this.filterUnreviewed && reviewed && !item.reviewed && !wasCurrent) {
      // removing an earlier item shifts the view; keep the same current
      const keep = this.current?.image_id
      item.reviewed = true
      if (keep) this.jump(keep)
      return this.current
    }
    item.reviewed = reviewed
    return this.current
  }

  updateBoxCount(imageId: string, count: number): void {
    const item = this.items.find((i) => i.image_id === imageId)
    if (item) item.box_count = count
  }
}
