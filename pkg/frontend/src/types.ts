// Payload shapes mirroring the scan-session HTTP API. Field names are the
// wire names; do not rename.

export type Side = 'left' | 'right' | 'unknown'

export interface PosePayload {
  z: number
  u: number
  side: Side
}

export interface BoxPayload {
  x: number
  y: number
  w: number
  h: number
}

export interface DetectionPayload {
  cls: string
  box: BoxPayload
  score: number | null
}

export interface TripletPayload {
  sub: number
  pred: string
  obj: number
  score: number | null
}

export interface MovementPayload {
  direction: string
  magnitude_px: number
  reference: string | null
  anatomy_dx_px: number
}

export interface FramePayload {
  step: number
  pose: PosePayload
  image_id: string
  width: number
  height: number
  detections: DetectionPayload[]
  triplets: TripletPayload[]
  side: Side
  movement: MovementPayload | null
  missing: string[]
}

export interface AuditPayload {
  request_id: string
  task: string
  triplet_lines: string[]
  side: string
  movement: string | null
  missing: string[]
  target: string | null
  oracle: string | null
  match: boolean | null
  oracle_steps?: number
}

export interface QueryResponsePayload {
  prompt: { system: string; user: string }
  response: {
    text: string
    latency_ms: number
    backend: string
    request_id: string
  }
  audit: AuditPayload
}

export interface ChatEntryPayload {
  request_id: string
  task: string
  query: string
  system: string
  user: string
  response: string
  audit: AuditPayload
  reference: string | null
}

export interface HistoryPayload {
  frames: FramePayload[]
  chats: ChatEntryPayload[]
}

export interface CreateSessionBody {
  z?: number
  u?: number
  side?: string
}

export interface MoveBody {
  dz?: number
  du?: number
  toggle_side?: boolean
}

export interface QueryBody {
  task: string
  query: string
  backend?: string
  reference?: string
  allow_unknown_movement?: boolean
}

export interface ErrorBody {
  error: { code: string; message: string; path: string | null }
}
