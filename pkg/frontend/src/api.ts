// Thin typed client over the scan-session HTTP API. All semantics (pose
// clamping, side mirroring, guidance) live server-side; this module only
// moves JSON.

import type {
  CreateSessionBody,
  ErrorBody,
  FramePayload,
  HistoryPayload,
  MoveBody,
  QueryBody,
  QueryResponsePayload,
} from './types.js'

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number | null = null,
    readonly path: string | null = null,
  ) {
    super(message)
    this.name = 'ApiError'
  }
}

async function errorFromResponse(resp: Response): Promise<ApiError> {
  let body: ErrorBody | null = null
  try {
    body = (await resp.json()) as ErrorBody
  } catch {
    body = null
  }
  if (body && body.error && typeof body.error.code === 'string') {
    return new ApiError(body.error.code, body.error.message, resp.status, body.error.path)
  }
  return new ApiError(`HTTP_${resp.status}`, `request failed with status ${resp.status}`, resp.status)
}

export class ProbeApi {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method }
    if (body !== undefined) {
      init.headers = { 'content-type': 'application/json' }
      init.body = JSON.stringify(body)
    }
    let resp: Response
    try {
      resp = await this.fetchFn(this.base + path, init)
    } catch (e) {
      throw new ApiError('NETWORK', `cannot reach service: ${String(e)}`)
    }
    if (!resp.ok) {
      throw await errorFromResponse(resp)
    }
    try {
      return (await resp.json()) as T
    } catch (e) {
      throw new ApiError('BAD_RESPONSE', `service sent malformed JSON: ${String(e)}`, resp.status)
    }
  }

  health(): Promise<{ status: string }> {
    return this.request('GET', '/healthz')
  }

  createSession(body: CreateSessionBody): Promise<{ id: string }> {
    return this.request('POST', '/sessions', body)
  }

  frame(sessionId: string): Promise<FramePayload> {
    return this.request('GET', `/sessions/${sessionId}/frame`)
  }

  move(sessionId: string, body: MoveBody): Promise<FramePayload> {
    return this.request('POST', `/sessions/${sessionId}/move`, body)
  }

  query(sessionId: string, body: QueryBody): Promise<QueryResponsePayload> {
    return this.request('POST', `/sessions/${sessionId}/query`, body)
  }

  history(sessionId: string): Promise<HistoryPayload> {
    return this.request('GET', `/sessions/${sessionId}/history`)
  }
}
