// Text builders for the audit pane. promptText is the exact string shown
// for an entry; fidelity tests compare it against the service transcript.

import type { AuditEntry } from './state.js'
import type { FramePayload } from './types.js'

export function promptText(entry: AuditEntry): string {
  return `${entry.promptSystem}\n\n${entry.promptUser}`
}

export function auditHeadline(entry: AuditEntry): string {
  const parts = [`${entry.requestId}`, entry.task]
  const a = entry.audit
  if (a.oracle !== null) {
    parts.push(`oracle: ${a.oracle}`)
    parts.push(a.match ? 'answer matched' : 'answer MISSED')
  }
  return parts.join(' · ')
}

export function auditDetailLines(entry: AuditEntry): string[] {
  const a = entry.audit
  const lines = [
    `side: ${a.side}`,
    `movement: ${a.movement ?? 'none'}`,
    `missing: ${a.missing.length ? a.missing.join(', ') : 'none'}`,
  ]
  if (a.target !== null) {
    lines.push(`target: ${a.target}`)
  }
  if (a.oracle_steps !== undefined) {
    lines.push(`oracle steps: ${a.oracle_steps}`)
  }
  return lines
}

export function poseLine(frame: FramePayload): string {
  const p = frame.pose
  return `z=${p.z.toFixed(2)}  u=${p.u.toFixed(2)}  side=${p.side}  step=${frame.step}`
}

export function movementLine(frame: FramePayload): string {
  if (frame.movement === null) {
    return 'movement: (none yet; move the probe once)'
  }
  const m = frame.movement
  const ref = m.reference ? ` vs ${m.reference}` : ''
  return `movement: ${m.direction}${ref} (${m.magnitude_px.toFixed(1)} px)`
}

export function missingLine(frame: FramePayload): string {
  return frame.missing.length ? `missing: ${frame.missing.join(', ')}` : 'all structures visible'
}
