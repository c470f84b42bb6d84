// Canvas rendering of a service frame. Boxes are drawn exactly as sent,
// scaled uniformly to fit the canvas; no reprojection.

import type { FramePayload } from './types.js'

export interface DrawSurface {
  strokeStyle: string | CanvasGradient | CanvasPattern
  fillStyle: string | CanvasGradient | CanvasPattern
  lineWidth: number
  font: string
  clearRect(x: number, y: number, w: number, h: number): void
  fillRect(x: number, y: number, w: number, h: number): void
  strokeRect(x: number, y: number, w: number, h: number): void
  fillText(text: string, x: number, y: number): void
}

export const CLASS_COLORS: Record<string, string> = {
  CCA: '#e4572e',
  IJV: '#4c86c6',
  CR: '#3fa34d',
  TH: '#e3b23c',
  VB: '#9a6fb0',
}

const BACKGROUND = '#10151c'
const FALLBACK = '#cccccc'

export function frameScale(frame: FramePayload, canvasW: number, canvasH: number): number {
  return Math.min(canvasW / frame.width, canvasH / frame.height)
}

export function drawFrame(
  ctx: DrawSurface,
  frame: FramePayload,
  canvasW: number,
  canvasH: number,
): void {
  ctx.clearRect(0, 0, canvasW, canvasH)
  ctx.fillStyle = BACKGROUND
  ctx.fillRect(0, 0, canvasW, canvasH)
  const s = frameScale(frame, canvasW, canvasH)
  ctx.lineWidth = 2
  ctx.font = '12px monospace'
  for (const det of frame.detections) {
    const color = CLASS_COLORS[det.cls] ?? FALLBACK
    ctx.strokeStyle = color
    ctx.strokeRect(det.box.x * s, det.box.y * s, det.box.w * s, det.box.h * s)
    ctx.fillStyle = color
    ctx.fillText(det.cls, det.box.x * s + 2, det.box.y * s - 3)
  }
}
