// Keyboard mapping for the review loop. Pure: key event in, action name
// out, so the bindings are testable without a DOM.

export type Action =
  | 'next'
  | 'prev'
  | 'save'
  | 'toggle-reviewed'
  | 'delete-box'
  | 'undo'
  | 'redo'
  | 'toggle-filter'
  | 'new-box'
  | 'deselect'

export interface KeyStroke {
  key: string
  ctrlKey?: boolean
  metaKey?: boolean
  shiftKey?: boolean
  targetIsInput?: boolean
}

export function actionFor(stroke: KeyStroke): Action | null {
  if (stroke.targetIsInput) return null
  const mod = stroke.ctrlKey || stroke.metaKey
  switch (stroke.key) {
    case 'ArrowRight':
    case 'j':
      return 'next'
    case 'ArrowLeft':
    case 'k':
      return 'prev'
    case 's':
      return 'save'
    case 'r':
      return 'toggle-reviewed'
    case 'Delete':
    case 'Backspace':
      return 'delete-box'
    case 'z':
      return mod && stroke.shiftKey ? 'redo' : 'undo'
    case 'y':
      return 'redo'
    case 'u':
      return 'toggle-filter'
    case 'n':
      return 'new-box'
    case 'Escape':
      return 'deselect'
    default:
      return null
  }
}
