// Browser entry point: binds the DOM to a ProbeConsole. All displayed
// values come from service payloads; textContent is used throughout so
// prompts render byte-for-byte.

import { ProbeApi } from './api.js'
import { auditDetailLines, auditHeadline, missingLine, movementLine, poseLine, promptText } from './audit.js'
import { ProbeConsole } from './controller.js'
import { drawFrame } from './render.js'
import type { ConsoleState } from './state.js'

const api = new ProbeApi('')
const console_ = new ProbeConsole(api)

const el = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T

const zInput = el<HTMLInputElement>('pose-z')
const uInput = el<HTMLInputElement>('pose-u')
const sideInput = el<HTMLSelectElement>('pose-side')
const startBtn = el<HTMLButtonElement>('start-session')

const canvas = el<HTMLCanvasElement>('frame-canvas')
const poseEl = el<HTMLElement>('pose-line')
const movementEl = el<HTMLElement>('movement-line')
const missingEl = el<HTMLElement>('missing-line')
const errorEl = el<HTMLElement>('error-bar')

const taskInput = el<HTMLSelectElement>('query-task')
const queryInput = el<HTMLInputElement>('query-text')
const allowUnknown = el<HTMLInputElement>('allow-unknown')
const askBtn = el<HTMLButtonElement>('ask')
const auditPane = el<HTMLElement>('audit-pane')

startBtn.onclick = () => {
  void console_.createSession({
    z: Number(zInput.value),
    u: Number(uInput.value),
    side: sideInput.value,
  })
}

const moves: Array<[string, { dz?: number; du?: number; toggle_side?: boolean }]> = [
  ['move-z-up', { dz: 0.05 }],
  ['move-z-down', { dz: -0.05 }],
  ['move-u-up', { du: 0.05 }],
  ['move-u-down', { du: -0.05 }],
  ['toggle-side', { toggle_side: true }],
]
for (const [id, body] of moves) {
  el<HTMLButtonElement>(id).onclick = () => void console_.move(body)
}

askBtn.onclick = () => {
  const body = {
    task: taskInput.value,
    query: queryInput.value,
    allow_unknown_movement: allowUnknown.checked,
  }
  void console_.query(body)
}

function renderAudits(state: ConsoleState): void {
  auditPane.replaceChildren()
  for (const entry of [...state.audits].reverse()) {
    const card = document.createElement('article')
    card.className = 'audit-card'
    card.dataset.requestId = entry.requestId

    const head = document.createElement('h3')
    head.textContent = auditHeadline(entry)
    card.appendChild(head)

    const meta = document.createElement('p')
    meta.textContent = auditDetailLines(entry).join('  |  ')
    card.appendChild(meta)

    const response = document.createElement('pre')
    response.className = 'answer'
    response.textContent = entry.responseText
    card.appendChild(response)

    const promptLabel = document.createElement('details')
    const summary = document.createElement('summary')
    summary.textContent = 'prompt sent to the model'
    promptLabel.appendChild(summary)
    const prompt = document.createElement('pre')
    prompt.className = 'prompt'
    prompt.textContent = promptText(entry)
    promptLabel.appendChild(prompt)
    card.appendChild(promptLabel)

    auditPane.appendChild(card)
  }
}

console_.onChange((state) => {
  errorEl.textContent = state.error ?? ''
  errorEl.style.display = state.error ? 'block' : 'none'
  if (state.frame) {
    const ctx = canvas.getContext('2d')
    if (ctx) {
      drawFrame(ctx, state.frame, canvas.width, canvas.height)
    }
    poseEl.textContent = poseLine(state.frame)
    movementEl.textContent = movementLine(state.frame)
    missingEl.textContent = missingLine(state.frame)
  }
  renderAudits(state)
})
