// App bootstrap: wires the queue, editor session, canvas, label picker,
// dialogs and keyboard together over the review API. All state flows
// through EditorSession/ReviewQueue; this file is only glue and DOM.

import { ApiClient, SaveResult } from './api.js'
import { CanvasView } from './canvas.js'
import { EditorSession } from './editor.js'
import { actionFor } from './keyboard.js'
import { SpeciesInfo, allLabels } from './model.js'
import { ReviewQueue } from './queue.js'

const params = new URLSearchParams(location.search)
const api = new ApiClient(params.get('api') ?? '')

const el = {
  list: document.getElementById('image-list') as HTMLUListElement,
  filter: document.getElementById('filter-unreviewed') as HTMLInputElement,
  canvas: document.getElementById('editor-canvas') as HTMLCanvasElement,
  position: document.getElementById('position') as HTMLSpanElement,
  cursor: document.getElementById('cursor') as HTMLSpanElement,
  status: document.getElementById('status') as HTMLSpanElement,
  boxes: document.getElementById('box-list') as HTMLUListElement,
  picker: document.getElementById('label-picker') as HTMLSelectElement,
  save: document.getElementById('btn-save') as HTMLButtonElement,
  reviewed: document.getElementById('btn-reviewed') as HTMLButtonElement,
  prev: document.getElementById('btn-prev') as HTMLButtonElement,
  next: document.getElementById('btn-next') as HTMLButtonElement,
  newBox: document.getElementById('btn-new') as HTMLButtonElement,
  del: document.getElementById('btn-delete') as HTMLButtonElement,
  undo: document.getElementById('btn-undo') as HTMLButtonElement,
  redo: document.getElementById('btn-redo') as HTMLButtonElement,
  zoomIn: document.getElementById('btn-zoom-in') as HTMLButtonElement,
  zoomOut: document.getElementById('btn-zoom-out') as HTMLButtonElement,
  zoomFit: document.getElementById('btn-zoom-fit') as HTMLButtonElement,
  dialog: document.getElementById('dialog') as HTMLDivElement,
  dialogText: document.getElementById('dialog-text') as HTMLParagraphElement,
  dialogButtons: document.getElementById('dialog-buttons') as HTMLDivElement,
}

let species: SpeciesInfo[] = []
let queue = new ReviewQueue([])
let session: EditorSession | null = null
let lastLabel = ''

const view = new CanvasView(
  el.canvas,
  () => session,
  () => lastLabel || (species.length ? allLabels(species)[0] : ''),
)

function toast(text: string): void {
  el.status.textContent = text
  setTimeout(() => {
    if (el.status.textContent === text) el.status.textContent = ''
  }, 4000)
}

function ask(text: string, choices: string[]): Promise<string> {
  el.dialogText.textContent = text
  el.dialogButtons.innerHTML = ''
  el.dialog.classList.remove('hidden')
  return new Promise((resolve) => {
    for (const choice of choices) {
      const button = document.createElement('button')
      button.textContent = choice
      button.onclick = () => {
        el.dialog.classList.add('hidden')
        resolve(choice)
      }
      el.dialogButtons.appendChild(button)
    }
  })
}

function buildPicker(): void {
  el.picker.innerHTML = ''
  for (const s of species) {
    const group = document.createElement('optgroup')
    group.label = `${s.code} (${s.common_name})`
    for (const w of s.weeks) {
      const option = document.createElement('option')
      option.value = `${s.code}_week_${w}`
      option.textContent = `${s.code} week ${w}`
      group.appendChild(option)
    }
    el.picker.appendChild(group)
  }
}

function renderList(): void {
  el.list.innerHTML = ''
  const current = queue.current
  for (const item of queue.visible()) {
    const li = document.createElement('li')
    li.textContent = `${item.reviewed ? '✓ ' : ''}${item.image_id} (${item.box_count})`
    li.className = item.image_id === current?.image_id ? 'current' : ''
    li.onclick = () => {
      void navigate(() => queue.jump(item.image_id))
    }
    el.list.appendChild(li)
  }
  const pos = queue.position
  el.position.textContent = pos.total ? `${pos.index}/${pos.total}` : 'no images'
}

function renderBoxes(): void {
  el.boxes.innerHTML = ''
  if (!session) return
  session.boxes.forEach((b, i) => {
    const li = document.createElement('li')
    li.textContent = `${b.label}  [${b.xmin},${b.ymin} – ${b.xmax},${b.ymax}]`
    li.className = i === session!.selected ? 'current' : ''
    li.onclick = () => {
      session!.select(i)
      syncSelection()
    }
    el.boxes.appendChild(li)
  })
  el.save.disabled = !session.dirty
  el.undo.disabled = !session.canUndo
  el.redo.disabled = !session.canRedo
  el.reviewed.textContent = session.record.reviewed ? 'Unmark reviewed' : 'Mark reviewed'
  document.title = `${session.imageId}${session.dirty ? ' *' : ''} – weedlab review`
}

function syncSelection(): void {
  if (session && session.selected >= 0) {
    el.picker.value = session.boxes[session.selected].label
    lastLabel = el.picker.value
  }
  renderBoxes()
  view.draw()
}

async function loadCurrent(): Promise<void> {
  const item = queue.current
  if (!item) {
    session = null
    view.setImage(null)
    renderBoxes()
    renderList()
    return
  }
  const record = await api.getAnnotation(item.image_id)
  session = new EditorSession(record)
  const image = new Image()
  image.onload = () => view.setImage(image)
  image.onerror = () => view.setImage(null)
  image.src = api.imageUrl(item.image_id)
  renderList()
  renderBoxes()
  view.fit()
}

/** Navigation guard: prompt on unsaved changes (save / discard / stay). */
async function navigate(step: () => unknown): Promise<void> {
  if (session?.dirty) {
    const choice = await ask('Unsaved changes on this image.', ['Save', 'Discard', 'Stay'])
    if (choice === 'Stay') return
    if (choice === 'Save') {
      const saved = await doSave()
      if (!saved) return
    }
  }
  step()
  await loadCurrent()
}

async function doSave(): Promise<boolean> {
  if (!session) return false
  const s = session
  let result: SaveResult
  try {
    result = await api.save(s.imageId, s.revision, s.payload())
  } catch (err) {
    toast(`save failed: ${err}`)
    return false
  }
  if (result.kind === 'saved') {
    s.applySaved(result.record)
    queue.updateBoxCount(s.imageId, result.record.boxes.length)
    toast(`saved ${s.imageId} @ revision ${result.record.revision}`)
    renderBoxes()
    renderList()
    view.draw()
    return true
  }
  if (result.kind === 'conflict') {
    const choice = await ask(
      `Someone else saved revision ${result.currentRevision} of this image. ` +
        'Reload their version, or keep editing yours?',
      ['Reload', 'Keep editing'],
    )
    if (choice === 'Reload') {
      const record = await api.getAnnotation(s.imageId)
      session = new EditorSession(record)
      renderBoxes()
      view.draw()
    }
    return false
  }
  toast(`rejected: ${result.problems.join('; ')}`)
  return false
}

async function toggleReviewed(): Promise<void> {
  if (!session) return
  const target = !session.record.reviewed
  const record = await api.setReviewed(session.imageId, target)
  session.record.reviewed = record.reviewed
  const wasFiltering = queue.filterUnreviewed
  queue.markReviewed(session.imageId, record.reviewed)
  renderList()
  renderBoxes()
  if (wasFiltering && record.reviewed) {
    // item left the filtered view; the cursor already sits on the next one
    await loadCurrent()
  }
}

function deleteSelected(): void {
  if (session && session.selected >= 0) {
    session.remove(session.selected)
    renderBoxes()
    view.draw()
  }
}

el.filter.onchange = () => {
  void navigate(() => queue.setFilter(el.filter.checked))
}
el.prev.onclick = () => void navigate(() => queue.prev())
el.next.onclick = () => void navigate(() => queue.next())
el.save.onclick = () => void doSave()
el.reviewed.onclick = () => void toggleReviewed()
el.newBox.onclick = () => {
  view.newBoxMode = true
  toast('drag on the image to draw a box')
}
el.del.onclick = () => deleteSelected()
el.undo.onclick = () => {
  session?.undo()
  syncSelection()
}
el.redo.onclick = () => {
  session?.redo()
  syncSelection()
}
el.zoomIn.onclick = () => view.zoom(1.25)
el.zoomOut.onclick = () => view.zoom(1 / 1.25)
el.zoomFit.onclick = () => view.fit()
el.picker.onchange = () => {
  lastLabel = el.picker.value
  if (session && session.selected >= 0) {
    session.relabel(session.selected, el.picker.value)
    renderBoxes()
    view.draw()
  }
}
view.onChange = () => renderBoxes()
view.onSelect = () => syncSelection()
view.onCursor = (x, y) => {
  el.cursor.textContent = session ? `${x}, ${y}px` : ''
}

document.addEventListener('keydown', (e) => {
  const target = e.target as HTMLElement
  const action = actionFor({
    key: e.key,
    ctrlKey: e.ctrlKey,
    metaKey: e.metaKey,
    shiftKey: e.shiftKey,
    targetIsInput:
      target.tagName === 'INPUT' || target.tagName === 'SELECT' || target.tagName === 'TEXTAREA',
  })
  if (!action) return
  e.preventDefault()
  switch (action) {
    case 'next':
      void navigate(() => queue.next())
      break
    case 'prev':
      void navigate(() => queue.prev())
      break
    case 'save':
      void doSave()
      break
    case 'toggle-reviewed':
      void toggleReviewed()
      break
    case 'delete-box':
      deleteSelected()
      break
    case 'undo':
      session?.undo()
      syncSelection()
      break
    case 'redo':
      session?.redo()
      syncSelection()
      break
    case 'toggle-filter':
      el.filter.checked = !el.filter.checked
      void navigate(() => queue.setFilter(el.filter.checked))
      break
    case 'new-box':
      view.newBoxMode = true
      toast('drag on the image to draw a box')
      break
    case 'deselect':
      session?.select(-1)
      syncSelection()
      break
  }
})

async function start(): Promise<void> {
  try {
    species = await api.taxonomy()
    buildPicker()
    lastLabel = species.length ? allLabels(species)[0] : ''
    queue = new ReviewQueue(await api.listImages())
    renderList()
    await loadCurrent()
  } catch (err) {
    toast(`cannot reach the review service: ${err}`)
  }
}

void start()
