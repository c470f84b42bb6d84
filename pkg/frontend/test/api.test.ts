import { describe, expect, it } from 'vitest'

import { ApiError, ProbeApi } from '../src/api.js'

interface Call {
  url: string
  init?: RequestInit
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  })
}

function clientWith(responses: Response[], calls: Call[] = []): ProbeApi {
  return new ProbeApi('http://svc', async (url, init) => {
    calls.push({ url, init })
    const next = responses.shift()
    if (!next) {
      throw new Error('no scripted response left')
    }
    return next
  })
}

describe('ProbeApi', () => {
  it('posts session bodies as JSON and parses the id', async () => {
    const calls: Call[] = []
    const api = clientWith([jsonResponse(200, { id: 's1' })], calls)
    const out = await api.createSession({ z: 0.4, side: 'right' })
    expect(out).toEqual({ id: 's1' })
    expect(calls[0]?.url).toBe('http://svc/sessions')
    expect(calls[0]?.init?.method).toBe('POST')
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({ z: 0.4, side: 'right' })
    expect((calls[0]?.init?.headers as Record<string, string>)['content-type']).toBe(
      'application/json',
    )
  })

  it('sends move deltas verbatim without inventing fields', async () => {
    const calls: Call[] = []
    const api = clientWith([jsonResponse(200, {})], calls)
    await api.move('s1', { du: -0.05 })
    expect(calls[0]?.url).toBe('http://svc/sessions/s1/move')
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({ du: -0.05 })
  })

  it('fetches frames and history with GET and no body', async () => {
    const calls: Call[] = []
    const api = clientWith(
      [jsonResponse(200, { step: 0 }), jsonResponse(200, { frames: [], chats: [] })],
      calls,
    )
    await api.frame('abc')
    await api.history('abc')
    expect(calls.map((c) => c.url)).toEqual([
      'http://svc/sessions/abc/frame',
      'http://svc/sessions/abc/history',
    ])
    expect(calls[0]?.init?.method).toBe('GET')
    expect(calls[0]?.init?.body).toBeUndefined()
  })

  it('surfaces service error bodies as typed errors', async () => {
    const api = clientWith([
      jsonResponse(409, {
        error: { code: 'PRECONDITION', message: 'move the probe first', path: null },
      }),
    ])
    const err = await api.query('s1', { task: 'guidance', query: 'x' }).catch((e) => e)
    expect(err).toBeInstanceOf(ApiError)
    expect(err.code).toBe('PRECONDITION')
    expect(err.status).toBe(409)
    expect(err.message).toBe('move the probe first')
  })

  it('falls back to the HTTP status when the error body is not ours', async () => {
    const api = clientWith([new Response('<html>boom</html>', { status: 500 })])
    const err = await api.health().catch((e) => e)
    expect(err.code).toBe('HTTP_500')
    expect(err.status).toBe(500)
  })

  it('wraps transport failures as NETWORK errors', async () => {
    const api = new ProbeApi('http://svc', async () => {
      throw new TypeError('connection refused')
    })
    const err = await api.health().catch((e) => e)
    expect(err).toBeInstanceOf(ApiError)
    expect(err.code).toBe('NETWORK')
    expect(err.status).toBeNull()
  })

  it('rejects malformed success payloads', async () => {
    const api = clientWith([new Response('not json', { status: 200 })])
    const err = await api.health().catch((e) => e)
    expect(err.code).toBe('BAD_RESPONSE')
  })
})
