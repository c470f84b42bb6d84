// Session flow shared by the browser entry point and the tests: every
// user action funnels through here so the tested path is the shipped one.

import { ProbeApi } from './api.js'
import {
  ConsoleState,
  initialState,
  withAnswer,
  withBusy,
  withError,
  withFrame,
  withSession,
} from './state.js'
import type { CreateSessionBody, MoveBody, QueryBody } from './types.js'

export type Listener = (state: ConsoleState) => void

export class ProbeConsole {
  state: ConsoleState = initialState()
  private listeners: Listener[] = []

  constructor(private readonly api: ProbeApi) {}

  onChange(fn: Listener): void {
    this.listeners.push(fn)
  }

  private set(state: ConsoleState): void {
    this.state = state
    for (const fn of this.listeners) {
      fn(state)
    }
  }

  async createSession(body: CreateSessionBody): Promise<void> {
    this.set(withBusy(this.state))
    try {
      const { id } = await this.api.createSession(body)
      this.set(withSession(this.state, id))
      const frame = await this.api.frame(id)
      this.set(withFrame(this.state, frame))
    } catch (e) {
      this.set(withError(this.state, String(e)))
    }
  }

  async move(body: MoveBody): Promise<void> {
    const id = this.state.sessionId
    if (id === null) {
      this.set(withError(this.state, 'no session yet'))
      return
    }
    this.set(withBusy(this.state))
    try {
      const frame = await this.api.move(id, body)
      this.set(withFrame(this.state, frame))
    } catch (e) {
      this.set(withError(this.state, String(e)))
    }
  }

  async query(body: QueryBody): Promise<void> {
    const id = this.state.sessionId
    if (id === null) {
      this.set(withError(this.state, 'no session yet'))
      return
    }
    this.set(withBusy(this.state))
    try {
      const out = await this.api.query(id, body)
      this.set(withAnswer(this.state, body.query, out))
    } catch (e) {
      this.set(withError(this.state, String(e)))
    }
  }
}
