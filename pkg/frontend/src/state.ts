// Console state. The frame is always the last payload the service sent;
// the client never recomputes poses, sides, or missing lists.

import type { AuditPayload, FramePayload, QueryResponsePayload } from './types.js'

export interface AuditEntry {
  requestId: string
  task: string
  query: string
  promptSystem: string
  promptUser: string
  responseText: string
  backend: string
  latencyMs: number
  audit: AuditPayload
}

export interface ConsoleState {
  sessionId: string | null
  frame: FramePayload | null
  audits: AuditEntry[]
  error: string | null
  busy: boolean
}

export function initialState(): ConsoleState {
  return { sessionId: null, frame: null, audits: [], error: null, busy: false }
}

export function withSession(state: ConsoleState, sessionId: string): ConsoleState {
  return { ...initialState(), sessionId }
}

export function withFrame(state: ConsoleState, frame: FramePayload): ConsoleState {
  return { ...state, frame, error: null, busy: false }
}

export function withAnswer(
  state: ConsoleState,
  query: string,
  out: QueryResponsePayload,
): ConsoleState {
  const entry: AuditEntry = {
    requestId: out.audit.request_id,
    task: out.audit.task,
    query,
    promptSystem: out.prompt.system,
    promptUser: out.prompt.user,
    responseText: out.response.text,
    backend: out.response.backend,
    latencyMs: out.response.latency_ms,
    audit: out.audit,
  }
  return { ...state, audits: [...state.audits, entry], error: null, busy: false }
}

export function withError(state: ConsoleState, message: string): ConsoleState {
  return { ...state, error: message, busy: false }
}

export function withBusy(state: ConsoleState): ConsoleState {
  return { ...state, busy: true }
}

export function findAudit(state: ConsoleState, requestId: string): AuditEntry | undefined {
  return state.audits.find((e) => e.requestId === requestId)
}
