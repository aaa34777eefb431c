// Wire types mirrored from the session service JSON payloads.

export type SessionStatus = "running" | "paused" | "done";

export interface StateEvent {
  type: "state" | "snapshot";
  t: number;
  x: number;
  y: number;
  h?: number;
  reward_cumulative: number;
  contacts?: number[];
  embedding: number[];
  last_description: string | null;
  status?: SessionStatus;
}

export interface ContextEvent {
  type: "context";
  t: number;
  changed: boolean;
  embedding: number[];
  levels: Record<string, string>;
  last_description: string;
}

export interface ControlEvent {
  type: "control";
  verb: "pause" | "resume" | "delete";
  t: number;
}

export interface ResetEvent {
  type: "reset";
  t: number;
  seed: number;
}

export interface HeartbeatEvent {
  type: "heartbeat";
  t: number;
  status: SessionStatus;
}

export interface DoneEvent {
  type: "done";
  t: number;
  reward_cumulative: number;
  fell: boolean;
}

export type ConsoleEvent =
  | StateEvent
  | ContextEvent
  | ControlEvent
  | ResetEvent
  | HeartbeatEvent
  | DoneEvent;

export interface PolicyInfo {
  id: string;
  method: string;
  input_dim: number;
  embedding_dim: number;
  env_steps: number;
}

export interface TrailPoint {
  t: number;
  x: number;
  y: number;
  switch?: boolean;
}

export const PROPERTY_ORDER = ["restitution", "friction", "stiffness", "damping"] as const;
export const LEVEL_ORDER = ["VERY_LOW", "LOW", "MEDIUM", "HIGH", "VERY_HIGH"] as const;

// Physical slider ranges per property (the training terrain ranges).
export const TERRAIN_RANGES: Record<string, [number, number, number]> = {
  restitution: [0, 0.2, 0.005],
  lateral_friction: [0, 1, 0.01],
  rolling_friction: [2e4, 1.6e5, 1000],
  stiffness: [0, 1, 0.01],
  damping: [0, 0.5, 0.005],
};
