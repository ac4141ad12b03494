// Typed client for the review API. The fetch function is injectable so
// tests can run against an in-memory server double; save() returns a
// discriminated union instead of throwing, because a stale revision is an
// expected outcome that the UI must surface, never paper over.

import { Box, QueueItem, ReviewRecord, SpeciesInfo } from './model.js'

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>

export type SaveResult =
  | { kind: 'saved'; record: ReviewRecord }
  | { kind: 'conflict'; currentRevision: number }
  | { kind: 'invalid'; problems: string[] }

export interface ImageListPage {
  total: number
  offset: number
  limit: number
  items: QueueItem[]
}

export class ApiClient {
  constructor(
    private baseUrl: string = '',
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async getJson(path: string): Promise<any> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`)
    if (!response.ok) throw new Error(`GET ${path}: ${response.status}`)
    return response.json()
  }

  async taxonomy(): Promise<SpeciesInfo[]> {
    return (await this.getJson('/api/taxonomy')).species
  }

  async listImages(): Promise<QueueItem[]> {
    // walk the pagination until the full list is in hand
    const items: QueueItem[] = []
    let offset = 0
    for (;;) {
      const page: ImageListPage = await this.getJson(`/api/images?offset=${offset}&limit=200`)
      items.push(...page.items)
      offset += page.items.length
      if (offset >= page.total || page.items.length === 0) return items
    }
  }

  async getAnnotation(imageId: string): Promise<ReviewRecord> {
    return this.getJson(`/api/annotations/${encodeURIComponent(imageId)}`)
  }

  async save(imageId: string, expectedRevision: number, boxes: Box[]): Promise<SaveResult> {
    const response = await this.fetchFn(`${this.baseUrl}/api/annotations/${encodeURIComponent(imageId)}`, {
      method: 'PUT',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ expected_revision: expectedRevision, boxes }),
    })
    if (response.ok) return { kind: 'saved', record: await response.json() }
    const body = await response.json().catch(() => ({ detail: {} }))
    const detail = body.detail ?? {}
    if (response.status === 409) {
      return { kind: 'conflict', currentRevision: detail.current_revision ?? -1 }
    }
    if (response.status === 400 && detail.error === 'validation_failed') {
      return { kind: 'invalid', problems: detail.problems ?? [] }
    }
    throw new Error(`PUT failed with status ${response.status}`)
  }

  async setReviewed(imageId: string, reviewed: boolean): Promise<ReviewRecord> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/annotations/${encodeURIComponent(imageId)}/reviewed`,
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ reviewed }),
      },
    )
    if (!response.ok) throw new Error(`POST reviewed: ${response.status}`)
    return response.json()
  }

  imageUrl(imageId: string): string {
    return `${this.baseUrl}/api/images/${encodeURIComponent(imageId)}`
  }
}
